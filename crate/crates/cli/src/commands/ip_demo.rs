use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::Args;
use orthonn::scalar::{dot, norm2};
use orthonn::shots::{signed_ip_estimate, split_seed, square_ip_estimate, Estimate, ShotPlan};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{create_file, write_json};
use crate::config::{check_seed, merge};
use crate::errors::Validation;
use crate::manifest;

/// Shot counts of the convergence sweep: half decades from 10² to 10⁵.
pub const SWEEP_SHOTS: [u64; 7] = [100, 316, 1_000, 3_162, 10_000, 31_623, 100_000];

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct IpDemoArgs {
    /// Vector x: a file of numbers (CSV or whitespace separated) or an inline list like `0.6,0.8`.
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<String>,
    /// Vector w, same forms as --x.
    #[arg(long, allow_hyphen_values = true)]
    pub w: Option<String>,
    /// Shots per estimate [default: 10000].
    #[arg(long)]
    pub shots: Option<u64>,
    /// Bit-flip probability per qubit and shot [default: 0].
    #[arg(long, allow_hyphen_values = true)]
    pub noise: Option<f64>,
    /// Discard shots outside the unary subspace.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub mitigate: Option<bool>,
    /// [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write sweep.csv (RMSE against shots, 10² to 10⁵).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub sweep: Option<bool>,
    /// Seeds per sweep point [default: 50].
    #[arg(long)]
    pub sweep_seeds: Option<u64>,
    /// Output directory [default: orthonn-out].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn read_vector(source: &str, field: &str) -> Result<Vec<f64>, Validation> {
    let text = if Path::new(source).is_file() {
        std::fs::read_to_string(source).map_err(|e| Validation::field(field, format!("{source}: {e}")))?
    } else {
        source.to_string()
    };
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let tokens: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).collect();
        let parsed: Result<Vec<f64>, _> = tokens.iter().map(|t| t.parse::<f64>()).collect();
        match parsed {
            Ok(v) => values.extend(v),
            // header row
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Validation::field(field, format!("line {}: {e}", i + 1))),
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Validation::field(field, "entries must be finite"));
    }
    Ok(values)
}

fn unit(v: &[f64], field: &str) -> Result<(Vec<f64>, f64), Validation> {
    let n = norm2(v);
    if n == 0.0 {
        return Err(Validation::field(field, orthonn::Error::ZeroVector).with_kind("ZeroVector"));
    }
    Ok((v.iter().map(|a| a / n).collect(), n))
}

fn estimate_json(e: &Estimate) -> serde_json::Value {
    json!({
        "value": e.value,
        "shots_used": e.n_used,
        "shots_total": e.n_total,
        "discard_fraction": 1.0 - e.n_used as f64 / e.n_total as f64,
    })
}

pub fn run(args: &IpDemoArgs, config: Option<&Path>) -> Result<()> {
    let merged = merge(args, config)?;
    let r = IpDemoArgs {
        x: Some(merged.x.clone().ok_or_else(|| Validation::field("x", "is required"))?),
        w: Some(merged.w.clone().ok_or_else(|| Validation::field("w", "is required"))?),
        shots: Some(merged.shots.unwrap_or(10_000)),
        noise: Some(merged.noise.unwrap_or(0.0)),
        mitigate: Some(merged.mitigate.unwrap_or(false)),
        seed: Some(check_seed(merged.seed.unwrap_or(0))?),
        sweep: Some(merged.sweep.unwrap_or(false)),
        sweep_seeds: Some(merged.sweep_seeds.unwrap_or(50)),
        out: Some(merged.out.clone().unwrap_or_else(|| PathBuf::from("orthonn-out"))),
    };
    let x = read_vector(r.x.as_deref().unwrap_or_default(), "x")?;
    let w = read_vector(r.w.as_deref().unwrap_or_default(), "w")?;
    if x.len() != w.len() {
        return Err(Validation::field("w", format!("length {} differs from x's {}", w.len(), x.len())).into());
    }
    if x.len() < 2 {
        return Err(Validation::field("x", "needs at least 2 entries").into());
    }
    let (xu, nx) = unit(&x, "x")?;
    let (wu, nw) = unit(&w, "w")?;
    let seed = r.seed.unwrap_or_default();
    let base = ShotPlan::new(r.shots.unwrap_or_default(), seed)
        .and_then(|p| p.with_noise(r.noise.unwrap_or_default()))
        .map_err(|e| Validation::field("shots", e))?
        .with_mitigation(r.mitigate.unwrap_or_default());
    let exact = dot(&xu, &wu);
    let squared = square_ip_estimate(&xu, &wu, &base.with_seed(split_seed(seed, 0)))?;
    let signed = signed_ip_estimate(&xu, &wu, &base.with_seed(split_seed(seed, 1)))?;
    let report = json!({
        "n": x.len(),
        "exact_dot_unit": exact,
        "exact_dot": exact * nx * nw,
        "norms": { "x": nx, "w": nw },
        "squared": estimate_json(&squared),
        "signed": estimate_json(&signed),
        "signed_scaled": signed.value * nx * nw,
        "abs_error_signed": (signed.value - exact).abs(),
        "abs_error_squared": (squared.value - exact * exact).abs(),
    });

    let out = r.out.clone().unwrap_or_default();
    manifest::prepare_out(&out)?;
    let mut outputs = vec!["report.json"];
    if r.sweep == Some(true) {
        let seeds = r.sweep_seeds.unwrap_or_default();
        if seeds == 0 {
            return Err(Validation::field("sweep-seeds", "must be at least 1").into());
        }
        let mut csv = create_file(&out.join("sweep.csv"))?;
        writeln!(csv, "shots,rmse_signed,rmse_squared,rmse_squared_mitigated")?;
        for (k, &shots) in SWEEP_SHOTS.iter().enumerate() {
            let (mut se_signed, mut se_sq, mut se_mit) = (0.0, 0.0, 0.0);
            for s in 0..seeds {
                let lane = split_seed(split_seed(seed, 2 + k as u64), s);
                let plan = ShotPlan::new(shots, lane)?.with_noise(r.noise.unwrap_or_default())?;
                let sq = square_ip_estimate(&xu, &wu, &plan)?.value;
                let mit = square_ip_estimate(&xu, &wu, &plan.with_mitigation(true))?.value;
                let sg = signed_ip_estimate(&xu, &wu, &plan.with_mitigation(r.mitigate.unwrap_or_default()).with_seed(split_seed(lane, 1)))?.value;
                se_signed += (sg - exact).powi(2);
                se_sq += (sq - exact * exact).powi(2);
                se_mit += (mit - exact * exact).powi(2);
            }
            let m = seeds as f64;
            writeln!(csv, "{shots},{:e},{:e},{:e}", (se_signed / m).sqrt(), (se_sq / m).sqrt(), (se_mit / m).sqrt())?;
        }
        outputs.push("sweep.csv");
    }
    write_json(&out.join("report.json"), &report)?;
    manifest::write(
        &out,
        "ip-demo",
        &r,
        seed,
        "squared estimate uses split_seed(seed, 0), signed split_seed(seed, 1); sweep point k, seed s uses split_seed(split_seed(seed, 2 + k), s)",
        &outputs,
        json!({}),
    )?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}
