//! Two-layer GCN encoder with batch normalisation.
//!
//! Layer 1: `(Â X) W1 + b1` → batch norm → activation.
//! Layer 2: `(Â H1) W2 + b2` → batch norm, no activation.
//!
//! Gradients are derived by hand in [`encoder_backward`]; the forward pass
//! records exactly what the backward pass needs in a [`ForwardTrace`].

mod checkpoint;
mod layers;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_FORMAT};
pub use layers::{encoder_backward, encoder_forward, ForwardMode, ForwardTrace};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SgclError};
use crate::numerics::{glorot_init, DenseMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Prelu,
    Relu,
    Identity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub in_dim: usize,
    pub hidden_dim: usize,
    pub out_dim: usize,
    pub use_batch_norm: bool,
    pub activation: Activation,
    pub bn_eps: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            in_dim: 0,
            hidden_dim: 256,
            out_dim: 128,
            use_batch_norm: true,
            activation: Activation::Prelu,
            bn_eps: 1e-5,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.in_dim == 0 || self.hidden_dim == 0 || self.out_dim == 0 {
            return Err(SgclError::Config(format!(
                "encoder dimensions must be positive: {}→{}→{}",
                self.in_dim, self.hidden_dim, self.out_dim
            )));
        }
        if self.bn_eps.is_nan() || self.bn_eps <= 0.0 {
            return Err(SgclError::Config("bn_eps must be positive".into()));
        }
        Ok(())
    }
}

/// Learnable encoder state. The same struct carries parameter gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderParams {
    pub w1: DenseMatrix,
    pub b1: Vec<f64>,
    pub w2: DenseMatrix,
    pub b2: Vec<f64>,
    pub bn1_scale: Vec<f64>,
    pub bn1_shift: Vec<f64>,
    pub bn2_scale: Vec<f64>,
    pub bn2_shift: Vec<f64>,
    /// Negative-side slope of the layer-1 PReLU.
    pub prelu_slope: f64,
}

pub const PRELU_INIT_SLOPE: f64 = 0.25;

impl EncoderParams {
    /// Glorot weights, zero biases, unit BN scale, zero BN shift.
    pub fn init(config: &EncoderConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let (h, d) = (config.hidden_dim, config.out_dim);
        Ok(Self {
            w1: glorot_init(config.in_dim, h, rng)?,
            b1: vec![0.0; h],
            w2: glorot_init(h, d, rng)?,
            b2: vec![0.0; d],
            bn1_scale: vec![1.0; h],
            bn1_shift: vec![0.0; h],
            bn2_scale: vec![1.0; d],
            bn2_shift: vec![0.0; d],
            prelu_slope: PRELU_INIT_SLOPE,
        })
    }

    /// All-zero tensor set with the shapes of `self`.
    pub fn zeros_like(&self) -> Self {
        Self {
            w1: DenseMatrix::zeros(self.w1.rows(), self.w1.cols()),
            b1: vec![0.0; self.b1.len()],
            w2: DenseMatrix::zeros(self.w2.rows(), self.w2.cols()),
            b2: vec![0.0; self.b2.len()],
            bn1_scale: vec![0.0; self.bn1_scale.len()],
            bn1_shift: vec![0.0; self.bn1_shift.len()],
            bn2_scale: vec![0.0; self.bn2_scale.len()],
            bn2_shift: vec![0.0; self.bn2_shift.len()],
            prelu_slope: 0.0,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w1.rows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.w2.cols()
    }

    pub fn check_shapes(&self, config: &EncoderConfig) -> Result<()> {
        let (f, h, d) = (config.in_dim, config.hidden_dim, config.out_dim);
        let ok = self.w1.shape() == (f, h)
            && self.w2.shape() == (h, d)
            && self.b1.len() == h
            && self.bn1_scale.len() == h
            && self.bn1_shift.len() == h
            && self.b2.len() == d
            && self.bn2_scale.len() == d
            && self.bn2_shift.len() == d;
        if ok {
            Ok(())
        } else {
            Err(SgclError::shape("encoder params", format!("do not match {f}→{h}→{d}")))
        }
    }

    pub fn named_buffers(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("w1", self.w1.as_slice()),
            ("b1", &self.b1),
            ("w2", self.w2.as_slice()),
            ("b2", &self.b2),
            ("bn1.scale", &self.bn1_scale),
            ("bn1.shift", &self.bn1_shift),
            ("bn2.scale", &self.bn2_scale),
            ("bn2.shift", &self.bn2_shift),
            ("prelu.slope", std::slice::from_ref(&self.prelu_slope)),
        ]
    }

    pub fn named_buffers_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("w1", self.w1.as_mut_slice()),
            ("b1", &mut self.b1),
            ("w2", self.w2.as_mut_slice()),
            ("b2", &mut self.b2),
            ("bn1.scale", &mut self.bn1_scale),
            ("bn1.shift", &mut self.bn1_shift),
            ("bn2.scale", &mut self.bn2_scale),
            ("bn2.shift", &mut self.bn2_shift),
            ("prelu.slope", std::slice::from_mut(&mut self.prelu_slope)),
        ]
    }

    pub fn num_parameters(&self) -> usize {
        self.named_buffers().iter().map(|(_, b)| b.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.named_buffers()
            .iter()
            .all(|(_, b)| b.iter().all(|v| v.is_finite()))
    }
}

/// `τ · target + (1 − τ) · online`, entry-wise.
pub fn ema_update(online: &EncoderParams, target: &EncoderParams, tau: f64) -> Result<EncoderParams> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(SgclError::Config(format!("EMA decay must lie in [0, 1], got {tau}")));
    }
    let same_shape = online
        .named_buffers()
        .iter()
        .zip(target.named_buffers())
        .all(|((_, a), (_, b))| a.len() == b.len());
    if !same_shape || online.w1.shape() != target.w1.shape() {
        return Err(SgclError::shape("ema_update", "online and target shapes differ"));
    }
    let mut out = target.clone();
    for ((_, o), (_, t)) in online.named_buffers().into_iter().zip(out.named_buffers_mut()) {
        for (tv, &ov) in t.iter_mut().zip(o) {
            *tv = tau * *tv + (1.0 - tau) * ov;
        }
    }
    Ok(out)
}
