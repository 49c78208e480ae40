use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::haar_orthogonal;
use crate::pyramid::PyramidLayer;
use crate::scalar::Scalar;
use crate::shots::ShotPlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Sigmoid,
    Relu,
    None,
}

pub(crate) fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// `ln(1 + eᶻ)` without overflow.
fn softplus<T: Scalar>(z: T) -> T {
    if z > T::zero() {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl Activation {
    pub fn apply<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Sigmoid => sigmoid(z),
            Activation::Relu => z.max(T::zero()),
            Activation::None => z,
        }
    }

    /// Derivative at pre-activation `z`, given `a = apply(z)`.
    pub fn derivative<T: Scalar>(self, z: T, a: T) -> T {
        match self {
            Activation::Sigmoid => a * (T::one() - a),
            Activation::Relu => {
                if z > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::None => T::one(),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Relu => "relu",
            Activation::None => "none",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(Activation::Sigmoid),
            "relu" => Ok(Activation::Relu),
            "none" => Ok(Activation::None),
            other => Err(Error::Invalid(format!("unknown activation '{other}'"))),
        }
    }
}

/// Loss on the binary score `σ(u)`, where `u` is the output logit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Loss {
    #[default]
    Bce,
    Mse,
}

impl Loss {
    pub fn value<T: Scalar>(self, u: T, label: u8) -> T {
        let y = T::from_count(label as usize);
        match self {
            Loss::Bce => softplus(u) - y * u,
            Loss::Mse => {
                let d = sigmoid(u) - y;
                d * d
            }
        }
    }

    /// `∂loss/∂u`.
    pub fn grad<T: Scalar>(self, u: T, label: u8) -> T {
        let y = T::from_count(label as usize);
        let s = sigmoid(u);
        match self {
            Loss::Bce => s - y,
            Loss::Mse => T::lit(2.0) * (s - y) * s * (T::one() - s),
        }
    }
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Loss::Bce => "bce",
            Loss::Mse => "mse",
        })
    }
}

impl FromStr for Loss {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bce" => Ok(Loss::Bce),
            "mse" => Ok(Loss::Mse),
            other => Err(Error::Invalid(format!("unknown loss '{other}'"))),
        }
    }
}

/// How a dense layer evaluates its inner products.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Exec {
    #[default]
    Exact,
    /// Every `w_i·x` estimated with the signed inner-product circuit.
    Shots(ShotPlan),
}

/// `z = W x + b` with `W` of shape `n_out × n_in`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<T: Scalar> {
    pub weights: DMatrix<T>,
    pub bias: DVector<T>,
    pub exec: Exec,
}

impl<T: Scalar> DenseLayer<T> {
    pub fn new(weights: DMatrix<T>, bias: DVector<T>, exec: Exec) -> Result<Self> {
        if bias.len() != weights.nrows() {
            return Err(Error::DimensionMismatch { expected: weights.nrows(), actual: bias.len() });
        }
        if weights.ncols() == 0 || weights.nrows() == 0 {
            return Err(Error::Invalid("dense layer needs non-zero dimensions".into()));
        }
        Ok(DenseLayer { weights, bias, exec })
    }

    /// Gaussian weights with variance `1/n_in`, zero bias.
    pub fn random<R: Rng + ?Sized>(n_in: usize, n_out: usize, rng: &mut R) -> Result<Self> {
        let scale = 1.0 / (n_in as f64).sqrt();
        let w = DMatrix::from_fn(n_out, n_in, |_, _| T::lit(scale * rng.sample::<f64, _>(StandardNormal)));
        Self::new(w, DVector::zeros(n_out), Exec::Exact)
    }

    /// Haar-random weights with orthonormal rows (or columns when
    /// `n_out > n_in`), zero bias.
    pub fn orthogonal<R: Rng + ?Sized>(n_in: usize, n_out: usize, rng: &mut R) -> Result<Self> {
        let big = n_in.max(n_out);
        let q = haar_orthogonal::<T, R>(big, rng);
        let w = q.view((big - n_out, 0), (n_out, n_in)).clone_owned();
        Self::new(w, DVector::zeros(n_out), Exec::Exact)
    }

    pub fn n_in(&self) -> usize {
        self.weights.ncols()
    }

    pub fn n_out(&self) -> usize {
        self.weights.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer<T: Scalar> {
    Pyramid(PyramidLayer<T>),
    Dense(DenseLayer<T>),
}

impl<T: Scalar> Layer<T> {
    pub fn n_in(&self) -> usize {
        match self {
            Layer::Pyramid(p) => p.n_in(),
            Layer::Dense(d) => d.n_in(),
        }
    }

    pub fn n_out(&self) -> usize {
        match self {
            Layer::Pyramid(p) => p.n_out(),
            Layer::Dense(d) => d.n_out(),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Layer::Pyramid(p) => p.thetas.len(),
            Layer::Dense(d) => d.weights.len() + d.bias.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerSpec<T: Scalar> {
    pub layer: Layer<T>,
    pub activation: Activation,
}

/// Feed-forward stack ending in one or two output nodes. The binary score is
/// `σ(o₁ − o₀)` for two nodes and `σ(o₀)` for one.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T: Scalar> {
    layers: Vec<LayerSpec<T>>,
    pub loss: Loss,
}

impl<T: Scalar> Network<T> {
    pub fn new(layers: Vec<LayerSpec<T>>, loss: Loss) -> Result<Self> {
        let last = layers.last().ok_or_else(|| Error::Invalid("network has no layers".into()))?;
        for pair in layers.windows(2) {
            let (a, b) = (pair[0].layer.n_out(), pair[1].layer.n_in());
            if a != b {
                return Err(Error::DimensionMismatch { expected: a, actual: b });
            }
        }
        if !(1..=2).contains(&last.layer.n_out()) {
            return Err(Error::Invalid(format!("output layer must have 1 or 2 nodes, has {}", last.layer.n_out())));
        }
        Ok(Network { layers, loss })
    }

    /// Pyramid layers of the given widths with Haar-random angles; `hidden`
    /// after every layer but the last, which is linear.
    pub fn pyramid<R: Rng + ?Sized>(widths: &[usize], hidden: Activation, rng: &mut R) -> Result<Self> {
        Self::build(widths, hidden, |a, b| Ok(Layer::Pyramid(PyramidLayer::random(a, b, &mut *rng)?)))
    }

    /// Dense layers with Gaussian initialization.
    pub fn dense<R: Rng + ?Sized>(widths: &[usize], hidden: Activation, rng: &mut R) -> Result<Self> {
        Self::build(widths, hidden, |a, b| Ok(Layer::Dense(DenseLayer::random(a, b, &mut *rng)?)))
    }

    /// Dense layers initialized with orthonormal rows.
    pub fn orthogonal_dense<R: Rng + ?Sized>(widths: &[usize], hidden: Activation, rng: &mut R) -> Result<Self> {
        Self::build(widths, hidden, |a, b| Ok(Layer::Dense(DenseLayer::orthogonal(a, b, &mut *rng)?)))
    }

    fn build(widths: &[usize], hidden: Activation, mut make: impl FnMut(usize, usize) -> Result<Layer<T>>) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::Invalid("architecture needs at least an input and an output width".into()));
        }
        let mut layers = Vec::with_capacity(widths.len() - 1);
        for (k, w) in widths.windows(2).enumerate() {
            let activation = if k + 2 == widths.len() { Activation::None } else { hidden };
            layers.push(LayerSpec { layer: make(w[0], w[1])?, activation });
        }
        Network::new(layers, Loss::Bce)
    }

    pub fn layers(&self) -> &[LayerSpec<T>] {
        &self.layers
    }

    /// Mutable access to parameters; layer shapes cannot change.
    pub fn layer_mut(&mut self, k: usize) -> &mut Layer<T> {
        &mut self.layers[k].layer
    }

    pub fn n_in(&self) -> usize {
        self.layers[0].layer.n_in()
    }

    pub fn n_out(&self) -> usize {
        self.layers[self.layers.len() - 1].layer.n_out()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.layer.param_count()).sum()
    }

    /// Sets the execution mode of every dense layer.
    pub fn set_exec(&mut self, exec: Exec) {
        for spec in &mut self.layers {
            if let Layer::Dense(d) = &mut spec.layer {
                d.exec = exec;
            }
        }
    }

    /// Output logit `u` from the final layer's outputs.
    pub(crate) fn logit(&self, out: &[T]) -> T {
        if out.len() == 2 {
            out[1] - out[0]
        } else {
            out[0]
        }
    }
}
