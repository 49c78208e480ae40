use std::io::Write;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use orthonn::data::{normalize_rows, two_class, Dataset};
use orthonn::linalg::polyfit;
use orthonn::shots::{lane_rng, split_seed};
use orthonn::training::{train, Activation, Network, Regime, TrainConfig};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{create_file, write_json};
use crate::config::{check_seed, merge, parse_list};
use crate::errors::Validation;
use crate::manifest;

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct BenchArgs {
    /// Ascending comma-separated widths [default: 8,16,32,64,128].
    #[arg(long)]
    pub n_list: Option<String>,
    /// Timed epochs per width [default: 5].
    #[arg(long)]
    pub trials: Option<usize>,
    /// Synthetic samples per epoch [default: 200].
    #[arg(long)]
    pub samples: Option<usize>,
    /// Mini-batch size [default: 16].
    #[arg(long)]
    pub batch: Option<usize>,
    /// Run seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: orthonn-out].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &BenchArgs, config: Option<&std::path::Path>) -> Result<()> {
    let merged = merge(args, config)?;
    let r = BenchArgs {
        n_list: Some(merged.n_list.clone().unwrap_or_else(|| "8,16,32,64,128".into())),
        trials: Some(merged.trials.unwrap_or(5)),
        samples: Some(merged.samples.unwrap_or(200)),
        batch: Some(merged.batch.unwrap_or(16)),
        seed: Some(check_seed(merged.seed.unwrap_or(0))?),
        out: Some(merged.out.clone().unwrap_or_else(|| PathBuf::from("orthonn-out"))),
    };
    let ns = parse_list(r.n_list.as_deref().unwrap_or_default(), "n-list")?;
    if ns.is_empty() || ns.iter().any(|&n| n < 2) {
        return Err(Validation::field("n-list", "widths must be at least 2").into());
    }
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Validation::field("n-list", "must be strictly ascending").into());
    }
    let trials = r.trials.unwrap_or_default();
    if trials == 0 {
        return Err(Validation::field("trials", "must be at least 1").into());
    }
    let samples = r.samples.unwrap_or_default();
    if samples < 2 {
        return Err(Validation::field("samples", "must be at least 2").into());
    }
    let batch = r.batch.unwrap_or_default();
    if batch == 0 {
        return Err(Validation::field("batch", "must be at least 1").into());
    }
    let seed = r.seed.unwrap_or_default();

    let mut runs: Vec<(Dataset<f64>, Network<f64>)> = Vec::with_capacity(ns.len());
    for (k, &n) in ns.iter().enumerate() {
        let lane = split_seed(seed, k as u64);
        let data = normalize_rows(&two_class::<f64>(samples, n, 1.5, split_seed(lane, 0))?)?.0;
        let net = Network::pyramid(&[n, n, 2], Activation::Sigmoid, &mut lane_rng(lane, 1))?;
        runs.push((data, net));
    }
    // one warm-up epoch per width, then trials interleaved across widths so
    // that machine-level drift affects every width alike
    let mut seconds = vec![Vec::with_capacity(trials); ns.len()];
    for round in 0..=trials {
        for (k, (data, net)) in runs.iter_mut().enumerate() {
            let cfg = TrainConfig { epochs: 1, batch_size: batch, seed: split_seed(seed, (1 << 32) | round as u64), ..TrainConfig::default() };
            let h = train(net, data, &cfg, Regime::Pyramid)?;
            if round > 0 {
                seconds[k].push(h.records[0].seconds);
            }
        }
    }

    let out = r.out.clone().unwrap_or_default();
    manifest::prepare_out(&out)?;
    let mut csv = create_file(&out.join("scaling.csv"))?;
    writeln!(csv, "n,params,trial,seconds_per_epoch")?;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for ((&n, (_, net)), times) in ns.iter().zip(&runs).zip(&seconds) {
        for (t, s) in times.iter().enumerate() {
            writeln!(csv, "{n},{},{t},{s:e}", net.param_count())?;
            xs.push(n as f64);
            ys.push(*s);
        }
    }
    let fit = match polyfit(&xs, &ys, 2) {
        Ok((c, r2)) => json!({ "a": c[2], "b": c[1], "c": c[0], "r2": r2, "model": "a*n^2 + b*n + c" }),
        Err(e) => json!({ "skipped": e.to_string() }),
    };
    write_json(&out.join("fit.json"), &fit)?;
    manifest::write(
        &out,
        "bench-scaling",
        &r,
        seed,
        "width k uses lane split_seed(seed, k): data split_seed(lane, 0), weights lane 1; trial t shuffles with split_seed(seed, 2^32 + t)",
        &["scaling.csv", "fit.json"],
        json!({}),
    )?;
    println!("{}", serde_json::to_string(&fit)?);
    Ok(())
}
