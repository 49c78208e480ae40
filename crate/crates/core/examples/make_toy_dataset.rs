//! Regenerates `data/toy_pca4.csv`.

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy_pca4.csv");
    let ds = orthonn::data::make_toy_pca4()?;
    ds.write_csv(std::fs::File::create(&path)?, "label")?;
    println!("wrote {} samples to {}", ds.len(), path.display());
    Ok(())
}
