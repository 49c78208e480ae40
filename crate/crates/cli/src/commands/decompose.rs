use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use nalgebra::DMatrix;
use orthonn::linalg::col_defect;
use orthonn::pyramid::{decompose, extract_matrix};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::write_json;
use crate::config::merge;
use crate::errors::Validation;
use crate::manifest;

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct DecomposeArgs {
    /// Square orthogonal matrix as CSV (an optional non-numeric header row is skipped).
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Largest accepted entry of |MᵀM − I| [default: 1e-6].
    #[arg(long, allow_hyphen_values = true)]
    pub tol: Option<f64>,
    /// Output directory [default: orthonn-out].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>, Validation> {
    let field = "matrix";
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Validation::field(field, format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Validation::field(field, e))?;
        let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Validation::field(field, format!("line {}: {e}", i + 1))),
        }
    }
    let n = rows.len();
    if n == 0 {
        return Err(Validation::field(field, "matrix is empty"));
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != n) {
        return Err(Validation::field(field, format!("matrix is not square: {n} rows but row {} has {} entries", bad + 1, rows[bad].len()))
            .with_kind("NotSquare"));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Validation::field(field, "entries must be finite"));
    }
    Ok(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
}

pub fn run(args: &DecomposeArgs, config: Option<&Path>) -> Result<()> {
    let merged = merge(args, config)?;
    let r = DecomposeArgs {
        matrix: Some(merged.matrix.clone().ok_or_else(|| Validation::field("matrix", "is required"))?),
        tol: Some(merged.tol.unwrap_or(1e-6)),
        out: Some(merged.out.clone().unwrap_or_else(|| PathBuf::from("orthonn-out"))),
    };
    let tol = r.tol.unwrap_or_default();
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Validation::field("tol", "must be positive").into());
    }
    let m = read_matrix(r.matrix.as_deref().unwrap_or(Path::new("")))?;
    let defect = col_defect(&m);
    let layer = decompose(&m, tol)?;
    let rebuilt = extract_matrix(&layer).into_inner();
    let round_trip = (&rebuilt - &m).abs().max();
    let out = r.out.clone().unwrap_or_default();
    manifest::prepare_out(&out)?;
    fs::write(out.join("layer.txt"), layer.to_text()).context("writing layer.txt")?;
    let report = json!({
        "n": m.nrows(),
        "angles": layer.thetas.len(),
        "determinant": if layer.z_flip { -1 } else { 1 },
        "z_flip": layer.z_flip,
        "orthogonality_defect": defect,
        "round_trip_error": round_trip,
    });
    write_json(&out.join("report.json"), &report)?;
    manifest::write(&out, "decompose", &r, 0, "deterministic; no randomness", &["layer.txt", "report.json"], json!({}))?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}
