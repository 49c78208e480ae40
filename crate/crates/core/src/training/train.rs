use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;

use crate::data::{auc, evaluate, Confusion, Dataset, Metrics};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::shots::lane_rng;

use super::backprop::{
    backward_into, forward_prepared, predict, pyramid_batch_step, Gradients, LayerGrad, NetworkTrace, Prepared, PyramidBatch,
};
use super::network::{sigmoid, Exec, Layer, Network};
use super::optim::{stiefel_update, svb_update};

/// Training algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Gradient descent on pyramid angles.
    Pyramid,
    /// Unconstrained dense layers, exact inner products.
    DenseExact,
    /// Dense layers whose forward inner products are shot estimates;
    /// gradients are exact with respect to the estimated activations.
    DenseShots,
    /// Dense layers with singular value bounding after each step.
    Svb,
    /// Dense layers kept on the Stiefel manifold by QR retraction.
    Stiefel,
}

impl Regime {
    pub const ALL: [Regime; 5] = [Regime::Pyramid, Regime::DenseExact, Regime::DenseShots, Regime::Svb, Regime::Stiefel];
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Pyramid => "pyramid",
            Regime::DenseExact => "dense_exact",
            Regime::DenseShots => "dense_shots",
            Regime::Svb => "svb",
            Regime::Stiefel => "stiefel",
        })
    }
}

impl FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Regime::ALL
            .into_iter()
            .find(|r| r.to_string() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown regime '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Singular-value tolerance of the SVB regime.
    pub svb_epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { learning_rate: 0.05, epochs: 50, batch_size: 16, seed: 0, svb_epsilon: 0.01 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Invalid(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::Invalid("batch_size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.svb_epsilon) {
            return Err(Error::Invalid(format!("svb_epsilon must be in [0, 1), got {}", self.svb_epsilon)));
        }
        Ok(())
    }
}

/// One row of the training history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training loss over the epoch's forward passes.
    pub loss: f64,
    /// Training ACC and AUC of the scores produced during the epoch.
    pub acc: f64,
    pub auc: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    pub records: Vec<EpochRecord>,
}

impl History {
    /// CSV `epoch,loss,acc,auc,seconds`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        self.write_columns(w, true)
    }

    /// CSV `epoch,loss,acc,auc`: the history without wall-clock times, so
    /// identical for identical runs.
    pub fn write_metrics_csv<W: Write>(&self, w: W) -> Result<()> {
        self.write_columns(w, false)
    }

    /// CSV `epoch,seconds`.
    pub fn write_timing_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["epoch", "seconds"])?;
        for r in &self.records {
            wr.write_record([r.epoch.to_string(), r.seconds.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }

    fn write_columns<W: Write>(&self, w: W, timed: bool) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let header = ["epoch", "loss", "acc", "auc", "seconds"];
        wr.write_record(if timed { &header[..] } else { &header[..4] })?;
        for r in &self.records {
            let mut row = vec![r.epoch.to_string(), r.loss.to_string(), r.acc.to_string(), r.auc.to_string()];
            if timed {
                row.push(r.seconds.to_string());
            }
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }
}

/// Passed to the observer after every optimizer step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub epoch: usize,
    /// Step index counted over the whole run.
    pub step: usize,
    pub batch_loss: f64,
}

fn check_regime<T: Scalar>(net: &Network<T>, regime: Regime) -> Result<()> {
    let mut any_shots = false;
    for (k, spec) in net.layers().iter().enumerate() {
        let ok = match (&spec.layer, regime) {
            (Layer::Pyramid(_), Regime::Pyramid) => true,
            (Layer::Dense(d), Regime::DenseShots) => {
                any_shots |= matches!(d.exec, Exec::Shots(_));
                true
            }
            (Layer::Dense(d), _) if regime != Regime::Pyramid => matches!(d.exec, Exec::Exact),
            _ => false,
        };
        if !ok {
            return Err(Error::Invalid(format!("layer {k} is not compatible with the {regime} regime")));
        }
    }
    if regime == Regime::DenseShots && !any_shots {
        return Err(Error::Invalid("dense_shots regime needs at least one shot-based layer".into()));
    }
    Ok(())
}

fn apply_update<T: Scalar>(net: &mut Network<T>, grads: &Gradients<T>, regime: Regime, cfg: &TrainConfig) -> Result<()> {
    let lr = T::lit(cfg.learning_rate);
    for (k, g) in grads.layers.iter().enumerate() {
        match (net.layer_mut(k), g) {
            (Layer::Pyramid(p), LayerGrad::Pyramid(g)) => {
                for (th, &d) in p.thetas.iter_mut().zip(g) {
                    *th -= lr * d;
                }
            }
            (Layer::Dense(d), LayerGrad::Dense { weights, bias }) => {
                d.weights = match regime {
                    Regime::Svb => svb_update(&d.weights, weights, lr, T::lit(cfg.svb_epsilon))?,
                    Regime::Stiefel => stiefel_update(&d.weights, weights, lr)?,
                    _ => &d.weights - weights * lr,
                };
                d.bias -= bias * lr;
            }
            _ => return Err(Error::TraceMismatch(format!("gradient of layer {k} has the wrong kind"))),
        }
    }
    Ok(())
}

/// Mini-batch gradient descent; see [`train_with_observer`].
pub fn train<T: Scalar>(net: &mut Network<T>, data: &Dataset<T>, cfg: &TrainConfig, regime: Regime) -> Result<History> {
    train_with_observer(net, data, cfg, regime, |_, _| {})
}

/// Mini-batch gradient descent over shuffled epochs. Sample order in epoch
/// `e` comes from the run seed's lane `e`; the `i`-th forward pass of the run
/// uses shot stream `i`. `observer` sees the network after every step.
pub fn train_with_observer<T: Scalar>(
    net: &mut Network<T>,
    data: &Dataset<T>,
    cfg: &TrainConfig,
    regime: Regime,
    mut observer: impl FnMut(&StepInfo, &Network<T>),
) -> Result<History> {
    cfg.validate()?;
    check_regime(net, regime)?;
    if data.dim() != net.n_in() {
        return Err(Error::DimensionMismatch { expected: net.n_in(), actual: data.dim() });
    }
    let mut history = History::default();
    let mut grads = Gradients::zeros(net);
    let mut trace = NetworkTrace::default();
    let mut prep = Prepared::new(net);
    let mut batch_ws = PyramidBatch::default();
    let mut batch_rows: Vec<&[T]> = Vec::with_capacity(cfg.batch_size);
    let mut batch_labels: Vec<u8> = Vec::with_capacity(cfg.batch_size);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut scores = vec![0.0; data.len()];
    let mut stream = 0u64;
    let mut step = 0usize;
    for epoch in 0..cfg.epochs {
        let start = Instant::now();
        order.sort_unstable();
        order.shuffle(&mut lane_rng(cfg.seed, epoch as u64));
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            prep.refresh(net);
            grads.fill_zero();
            let mut batch_loss = T::zero();
            if regime == Regime::Pyramid {
                batch_rows.clear();
                batch_rows.extend(batch.iter().map(|&i| data.row(i)));
                batch_labels.clear();
                batch_labels.extend(batch.iter().map(|&i| data.label(i)));
                let logits = pyramid_batch_step(net, &prep, &batch_rows, &batch_labels, &mut batch_ws, &mut grads)?;
                stream += batch.len() as u64;
                for ((&i, &u), &label) in batch.iter().zip(&logits).zip(&batch_labels) {
                    batch_loss += net.loss.value(u, label);
                    scores[i] = sigmoid(u).as_f64();
                }
            }
            for &i in batch.iter().filter(|_| regime != Regime::Pyramid) {
                let label = data.label(i);
                let u = forward_prepared(net, &prep, data.row(i), stream, &mut trace)?;
                stream += 1;
                batch_loss += net.loss.value(u, label);
                scores[i] = sigmoid(u).as_f64();
                backward_into(net, &prep, &trace, net.loss.grad(u, label), &mut grads)?;
            }
            let batch_loss = batch_loss.as_f64() / batch.len() as f64;
            if !batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, step });
            }
            epoch_loss += batch_loss * batch.len() as f64;
            grads.scale(T::one() / T::from_count(batch.len()));
            apply_update(net, &grads, regime, cfg)?;
            observer(&StepInfo { epoch, step, batch_loss }, net);
            step += 1;
        }
        let seconds = start.elapsed().as_secs_f64();
        let acc = Confusion::from_scores(&scores, data.labels()).accuracy();
        history.records.push(EpochRecord {
            epoch,
            loss: epoch_loss / data.len() as f64,
            acc,
            auc: auc(&scores, data.labels()).unwrap_or(f64::NAN),
            seconds,
        });
    }
    Ok(history)
}

/// ACC / AUC / confusion of the network's scores on `data`; sample `i` uses
/// shot stream `base + i`.
pub fn evaluate_network<T: Scalar>(net: &Network<T>, data: &Dataset<T>, base: u64) -> Result<Metrics> {
    if data.dim() != net.n_in() {
        return Err(Error::DimensionMismatch { expected: net.n_in(), actual: data.dim() });
    }
    let rows: Vec<&[T]> = data.rows().collect();
    let scores: Vec<f64> = predict(net, &rows, base)?.into_iter().map(|s| s.as_f64()).collect();
    evaluate(&scores, data.labels())
}
