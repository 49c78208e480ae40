use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use orthonn::data::{normalize_rows, split, undersample, Dataset, Metrics};
use orthonn::shots::{lane_rng, split_seed, ShotPlan};
use orthonn::training::{evaluate_network, train, Activation, Exec, Loss, Network, Regime, TrainConfig};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{create_file, load_dataset, write_json};
use crate::config::{check_seed, merge, parse_field, required, Arch, CliRegime};
use crate::errors::Validation;
use crate::manifest;

pub const SEED_LANES: &str =
    "lane k of the run seed is split_seed(seed, k): 0 initial weights, 1 train/test split, 2 training order, 3 shot sampling, 4 undersampling";

/// First shot stream of evaluation passes (training passes count up from 0).
const TRAIN_EVAL_STREAM: u64 = 1 << 40;
const TEST_EVAL_STREAM: u64 = 1 << 41;

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct TrainArgs {
    /// Dataset CSV with a header row, or `toy` for the bundled PCA-4 set.
    #[arg(long)]
    pub data: Option<String>,
    /// Name of the label column [default: label].
    #[arg(long)]
    pub label_column: Option<String>,
    /// Architecture, e.g. `pyramid:8,2` or `qnn:8,4,2`.
    #[arg(long)]
    pub arch: Option<String>,
    /// pyramid | svb | stiefel | dense | qnn-exact | qnn-shots [default: pyramid for pyramid
    /// architectures, qnn-exact for qnn ones].
    #[arg(long)]
    pub regime: Option<String>,
    /// Shots per inner product for qnn-shots [default: 10000].
    #[arg(long)]
    pub shots: Option<u64>,
    /// Bit-flip probability per qubit and shot [default: 0].
    #[arg(long, allow_hyphen_values = true)]
    pub noise: Option<f64>,
    /// Discard shots outside the unary subspace.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub mitigate: Option<bool>,
    /// [default: 50]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Learning rate [default: 0.05].
    #[arg(long, allow_hyphen_values = true)]
    pub lr: Option<f64>,
    /// Mini-batch size [default: 16].
    #[arg(long)]
    pub batch: Option<usize>,
    /// Run seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: orthonn-out].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Held-out fraction, stratified by class [default: 0.3].
    #[arg(long, allow_hyphen_values = true)]
    pub test_fraction: Option<f64>,
    /// Balance classes by undersampling before the split.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub undersample: Option<bool>,
    /// Hidden activation: sigmoid | relu | none [default: sigmoid].
    #[arg(long)]
    pub activation: Option<String>,
    /// bce | mse [default: bce].
    #[arg(long)]
    pub loss: Option<String>,
    /// Singular-value band of the svb regime [default: 0.01].
    #[arg(long, allow_hyphen_values = true)]
    pub svb_epsilon: Option<f64>,
}

struct Plan {
    arch: Arch,
    regime: CliRegime,
    activation: Activation,
    loss: Loss,
    seed: u64,
    train: TrainConfig,
}

fn resolve(args: &TrainArgs) -> Result<(TrainArgs, Plan), Validation> {
    let arch: Arch = required(&args.arch, "arch")?.parse()?;
    let r = TrainArgs {
        data: Some(required(&args.data, "data")?),
        label_column: Some(args.label_column.clone().unwrap_or_else(|| "label".into())),
        regime: Some(args.regime.clone().unwrap_or_else(|| CliRegime::default_for(arch.kind).into())),
        arch: args.arch.clone(),
        shots: Some(args.shots.unwrap_or(10_000)),
        noise: Some(args.noise.unwrap_or(0.0)),
        mitigate: Some(args.mitigate.unwrap_or(false)),
        epochs: Some(args.epochs.unwrap_or(50)),
        lr: Some(args.lr.unwrap_or(0.05)),
        batch: Some(args.batch.unwrap_or(16)),
        seed: Some(check_seed(args.seed.unwrap_or(0))?),
        out: Some(args.out.clone().unwrap_or_else(|| PathBuf::from("orthonn-out"))),
        test_fraction: Some(args.test_fraction.unwrap_or(0.3)),
        undersample: Some(args.undersample.unwrap_or(false)),
        activation: Some(args.activation.clone().unwrap_or_else(|| "sigmoid".into())),
        loss: Some(args.loss.clone().unwrap_or_else(|| "bce".into())),
        svb_epsilon: Some(args.svb_epsilon.unwrap_or(0.01)),
    };
    let regime: CliRegime = r.regime.as_deref().unwrap_or_default().parse()?;
    regime.check(&arch)?;
    let activation = parse_field(r.activation.as_deref().unwrap_or_default(), "activation")?;
    let loss = parse_field(r.loss.as_deref().unwrap_or_default(), "loss")?;
    let tf = r.test_fraction.unwrap_or_default();
    if !(tf > 0.0 && tf < 1.0) {
        return Err(Validation::field("test-fraction", format!("must be in (0, 1), got {tf}")));
    }
    if r.shots == Some(0) {
        return Err(Validation::field("shots", "must be positive"));
    }
    let noise = r.noise.unwrap_or_default();
    if !(0.0..=0.5).contains(&noise) {
        return Err(Validation::field("noise", format!("must be in [0, 0.5], got {noise}")));
    }
    if regime != CliRegime::QnnShots && (noise != 0.0 || r.mitigate == Some(true)) {
        return Err(Validation::field("noise", "noise and mitigation only apply to the qnn-shots regime"));
    }
    let seed = r.seed.unwrap_or_default();
    let train = TrainConfig {
        learning_rate: r.lr.unwrap_or_default(),
        epochs: r.epochs.unwrap_or_default(),
        batch_size: r.batch.unwrap_or_default(),
        seed: split_seed(seed, 2),
        svb_epsilon: r.svb_epsilon.unwrap_or_default(),
    };
    train.validate().map_err(|e| {
        let field = match &e {
            orthonn::Error::Invalid(m) if m.starts_with("learning_rate") => "lr",
            orthonn::Error::Invalid(m) if m.starts_with("batch_size") => "batch",
            _ => "svb-epsilon",
        };
        Validation::field(field, e)
    })?;
    Ok((r, Plan { arch, regime, activation, loss, seed, train }))
}

fn build_network(plan: &Plan, shots: u64, noise: f64, mitigate: bool) -> Result<Network<f64>> {
    let mut rng = lane_rng(plan.seed, 0);
    let widths = &plan.arch.widths;
    let mut net = match plan.regime {
        CliRegime::Pyramid => Network::pyramid(widths, plan.activation, &mut rng),
        CliRegime::Svb | CliRegime::Stiefel => Network::orthogonal_dense(widths, plan.activation, &mut rng),
        CliRegime::Dense | CliRegime::QnnExact | CliRegime::QnnShots => Network::dense(widths, plan.activation, &mut rng),
    }
    .map_err(|e| Validation::field("arch", e))?;
    net.loss = plan.loss;
    if plan.regime == CliRegime::QnnShots {
        let shot_plan = ShotPlan::new(shots, split_seed(plan.seed, 3))
            .and_then(|p| p.with_noise(noise))
            .map_err(|e| Validation::field("shots", e))?
            .with_mitigation(mitigate);
        net.set_exec(Exec::Shots(shot_plan));
    }
    Ok(net)
}

fn library_regime(r: CliRegime) -> Regime {
    match r {
        CliRegime::Pyramid => Regime::Pyramid,
        CliRegime::Svb => Regime::Svb,
        CliRegime::Stiefel => Regime::Stiefel,
        CliRegime::Dense | CliRegime::QnnExact => Regime::DenseExact,
        CliRegime::QnnShots => Regime::DenseShots,
    }
}

fn metrics_json(m: &Metrics, samples: usize) -> serde_json::Value {
    json!({ "acc": m.acc, "auc": m.auc, "confusion": m.confusion, "samples": samples })
}

pub fn run(args: &TrainArgs, config: Option<&std::path::Path>) -> Result<()> {
    let merged = merge(args, config)?;
    let (resolved, plan) = resolve(&merged)?;
    let out = resolved.out.clone().unwrap_or_default();
    let data_source = resolved.data.clone().unwrap_or_default();
    let mut data = load_dataset(&data_source, resolved.label_column.as_deref().unwrap_or("label"))?;
    if data.dim() != plan.arch.widths[0] {
        return Err(Validation::field("arch", format!("input width {} does not match the {} dataset features", plan.arch.widths[0], data.dim())).into());
    }
    if resolved.undersample == Some(true) {
        data = undersample(&data, split_seed(plan.seed, 4)).map_err(|e| Validation::field("undersample", e))?;
    }
    let (train_raw, test_raw) =
        split(&data, resolved.test_fraction.unwrap_or_default(), split_seed(plan.seed, 1)).map_err(|e| Validation::field("test-fraction", e))?;
    let normalize = |ds: &Dataset<f64>| normalize_rows(ds).map(|(d, _)| d).map_err(|e| Validation::field("data", e));
    let (train_set, test_set) = (normalize(&train_raw)?, normalize(&test_raw)?);

    let mut net = build_network(&plan, resolved.shots.unwrap_or_default(), resolved.noise.unwrap_or_default(), resolved.mitigate.unwrap_or_default())?;
    let params = net.param_count();
    let history = train(&mut net, &train_set, &plan.train, library_regime(plan.regime))?;
    let train_metrics = evaluate_network(&net, &train_set, TRAIN_EVAL_STREAM)?;
    let test_metrics = evaluate_network(&net, &test_set, TEST_EVAL_STREAM)?;

    manifest::prepare_out(&out)?;
    fs::write(out.join("model.txt"), net.to_text()).context("writing model.txt")?;
    history.write_metrics_csv(create_file(&out.join("history.csv"))?)?;
    history.write_timing_csv(create_file(&out.join("timing.csv"))?)?;
    let metrics = json!({
        "train": metrics_json(&train_metrics, train_set.len()),
        "test": metrics_json(&test_metrics, test_set.len()),
        "final_loss": history.last().map(|r| r.loss),
        "epochs": history.records.len(),
        "params": params,
    });
    write_json(&out.join("metrics.json"), &metrics)?;
    manifest::write(
        &out,
        "train",
        &resolved,
        plan.seed,
        SEED_LANES,
        &["model.txt", "history.csv", "timing.csv", "metrics.json"],
        json!({ "regime": resolved.regime, "library_regime": library_regime(plan.regime).to_string(), "params": params }),
    )?;
    println!("{}", serde_json::to_string(&metrics)?);
    Ok(())
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct EvaluateArgs {
    /// Model file written by `train`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Dataset CSV with a header row, or `toy` for the bundled PCA-4 set.
    #[arg(long)]
    pub data: Option<String>,
    /// Name of the label column [default: label].
    #[arg(long)]
    pub label_column: Option<String>,
    /// Evaluate dense layers with this many shots instead of the model's setting.
    #[arg(long)]
    pub shots: Option<u64>,
    /// Bit-flip probability (with --shots) [default: 0].
    #[arg(long, allow_hyphen_values = true)]
    pub noise: Option<f64>,
    /// Post-selection mitigation (with --shots).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub mitigate: Option<bool>,
    /// Seed of the shot sampling (with --shots) [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: orthonn-out].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn evaluate(args: &EvaluateArgs, config: Option<&std::path::Path>) -> Result<()> {
    let merged = merge(args, config)?;
    let model_path = required(&merged.model, "model")?;
    let resolved = EvaluateArgs {
        model: Some(model_path.clone()),
        data: Some(required(&merged.data, "data")?),
        label_column: Some(merged.label_column.clone().unwrap_or_else(|| "label".into())),
        shots: merged.shots,
        noise: merged.shots.map(|_| merged.noise.unwrap_or(0.0)),
        mitigate: merged.shots.map(|_| merged.mitigate.unwrap_or(false)),
        seed: Some(check_seed(merged.seed.unwrap_or(0))?),
        out: Some(merged.out.clone().unwrap_or_else(|| PathBuf::from("orthonn-out"))),
    };
    if merged.shots.is_none() && (merged.noise.is_some() || merged.mitigate.is_some()) {
        return Err(Validation::field("shots", "noise and mitigation need --shots").into());
    }
    let text = fs::read_to_string(&model_path).map_err(|e| Validation::field("model", format!("{}: {e}", model_path.display())))?;
    let mut net = Network::<f64>::from_text(&text).map_err(|e| Validation::field("model", e))?;
    let seed = resolved.seed.unwrap_or_default();
    if let Some(shots) = resolved.shots {
        let plan = ShotPlan::new(shots, split_seed(seed, 3))
            .and_then(|p| p.with_noise(resolved.noise.unwrap_or_default()))
            .map_err(|e| Validation::field("shots", e))?
            .with_mitigation(resolved.mitigate.unwrap_or_default());
        net.set_exec(Exec::Shots(plan));
    }
    let data = load_dataset(resolved.data.as_deref().unwrap_or_default(), resolved.label_column.as_deref().unwrap_or("label"))?;
    if data.dim() != net.n_in() {
        return Err(Validation::field("data", format!("dataset has {} features, model expects {}", data.dim(), net.n_in())).into());
    }
    let data = normalize_rows(&data).map_err(|e| Validation::field("data", e))?.0;
    let m = evaluate_network(&net, &data, TEST_EVAL_STREAM)?;
    let out = resolved.out.clone().unwrap_or_default();
    manifest::prepare_out(&out)?;
    let metrics = metrics_json(&m, data.len());
    write_json(&out.join("metrics.json"), &metrics)?;
    manifest::write(&out, "evaluate", &resolved, seed, "shot sampling uses split_seed(seed, 3) when --shots is given", &["metrics.json"], json!({}))?;
    println!("{}", serde_json::to_string(&metrics)?);
    Ok(())
}
