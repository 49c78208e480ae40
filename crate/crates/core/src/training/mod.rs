//! Multi-layer networks of pyramid and dense layers, angle-space
//! backpropagation, and the training regimes (pyramid, dense exact, dense
//! with shot-estimated inner products, SVB and Stiefel baselines).

mod backprop;
mod format;
mod network;
mod optim;
mod train;

pub use backprop::{
    forward_network, network_gradient, predict, pyramid_backprop, pyramid_forward, sample_loss, Forward, Gradients,
    LayerGrad, LayerTrace, NetworkTrace, TimestepTrace,
};
pub use network::{Activation, DenseLayer, Exec, Layer, LayerSpec, Loss, Network};
pub use optim::{clamp_singular_values, stiefel_direction, stiefel_update, svb_update};
pub use train::{evaluate_network, train, train_with_observer, EpochRecord, History, Regime, StepInfo, TrainConfig};
