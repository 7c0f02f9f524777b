use super::{Activation, EncoderConfig, EncoderParams};
use crate::error::{Result, SgclError};
use crate::numerics::{CsrMatrix, DenseMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ForwardMode {
    /// Records a trace for [`encoder_backward`].
    Train,
    /// Inference. Batch statistics still come from the full-graph pass; no
    /// trace is kept.
    Eval,
}

#[derive(Clone, Debug)]
struct BatchNormCache {
    x_hat: DenseMatrix,
    inv_std: Vec<f64>,
}

#[derive(Clone, Debug)]
struct LayerCache {
    /// `Â · input`.
    propagated: DenseMatrix,
    bn: Option<BatchNormCache>,
    /// Layer output before the activation.
    pre_activation: DenseMatrix,
}

/// Intermediates of one training-mode forward pass.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    mode: ForwardMode,
    activation: Activation,
    adjacency: Option<CsrMatrix>,
    layers: Vec<LayerCache>,
}

impl ForwardTrace {
    pub fn mode(&self) -> ForwardMode {
        self.mode
    }
}

struct LayerSpec<'a> {
    weight: &'a DenseMatrix,
    bias: &'a [f64],
    bn: Option<(&'a [f64], &'a [f64])>,
    activation: Activation,
    slope: f64,
}

fn batch_norm(
    x: &DenseMatrix,
    scale: &[f64],
    shift: &[f64],
    eps: f64,
) -> (DenseMatrix, BatchNormCache) {
    let (n, d) = x.shape();
    let mean = x.column_means();
    let mut var = vec![0.0; d];
    for row in x.row_iter() {
        for j in 0..d {
            let c = row[j] - mean[j];
            var[j] += c * c;
        }
    }
    let inv_std: Vec<f64> = var
        .iter()
        .map(|v| 1.0 / (v / n as f64 + eps).sqrt())
        .collect();
    let x_hat = DenseMatrix::from_fn(n, d, |i, j| (x[(i, j)] - mean[j]) * inv_std[j]);
    let out = DenseMatrix::from_fn(n, d, |i, j| scale[j] * x_hat[(i, j)] + shift[j]);
    (out, BatchNormCache { x_hat, inv_std })
}

fn activate(x: &DenseMatrix, act: Activation, slope: f64) -> DenseMatrix {
    match act {
        Activation::Identity => x.clone(),
        Activation::Relu => x.map(|v| v.max(0.0)),
        Activation::Prelu => x.map(|v| if v > 0.0 { v } else { slope * v }),
    }
}

fn forward_layer(
    input: &DenseMatrix,
    spec: &LayerSpec,
    adj: &CsrMatrix,
    eps: f64,
) -> Result<(DenseMatrix, LayerCache)> {
    let propagated = adj.spmm(input)?;
    let mut affine = propagated.matmul(spec.weight)?;
    affine.add_row_vector(spec.bias)?;
    let (pre_activation, bn) = match spec.bn {
        Some((scale, shift)) => {
            let (out, cache) = batch_norm(&affine, scale, shift, eps);
            (out, Some(cache))
        }
        None => (affine, None),
    };
    let out = activate(&pre_activation, spec.activation, spec.slope);
    let cache = LayerCache {
        propagated,
        bn,
        pre_activation,
    };
    Ok((out, cache))
}

/// Runs the encoder on `(Â, X)` and returns the `N × d` representations.
pub fn encoder_forward(
    config: &EncoderConfig,
    params: &EncoderParams,
    norm_adj: &CsrMatrix,
    features: &DenseMatrix,
    mode: ForwardMode,
) -> Result<(DenseMatrix, ForwardTrace)> {
    params.check_shapes(config)?;
    if features.cols() != config.in_dim {
        return Err(SgclError::shape(
            "encoder_forward",
            format!("{} feature columns, encoder expects {}", features.cols(), config.in_dim),
        ));
    }
    if norm_adj.rows() != features.rows() || norm_adj.cols() != features.rows() {
        return Err(SgclError::shape(
            "encoder_forward",
            format!("{}x{} propagation for {} nodes", norm_adj.rows(), norm_adj.cols(), features.rows()),
        ));
    }
    let bn = config.use_batch_norm;
    let first = LayerSpec {
        weight: &params.w1,
        bias: &params.b1,
        bn: bn.then_some((params.bn1_scale.as_slice(), params.bn1_shift.as_slice())),
        activation: config.activation,
        slope: params.prelu_slope,
    };
    let second = LayerSpec {
        weight: &params.w2,
        bias: &params.b2,
        bn: bn.then_some((params.bn2_scale.as_slice(), params.bn2_shift.as_slice())),
        activation: Activation::Identity,
        slope: 0.0,
    };
    let (hidden, cache1) = forward_layer(features, &first, norm_adj, config.bn_eps)?;
    hidden.ensure_finite("encoder layer 1")?;
    let (out, cache2) = forward_layer(&hidden, &second, norm_adj, config.bn_eps)?;
    out.ensure_finite("encoder layer 2")?;

    let trace = match mode {
        ForwardMode::Train => ForwardTrace {
            mode,
            activation: config.activation,
            adjacency: Some(norm_adj.clone()),
            layers: vec![cache1, cache2],
        },
        ForwardMode::Eval => ForwardTrace {
            mode,
            activation: config.activation,
            adjacency: None,
            layers: Vec::new(),
        },
    };
    Ok((out, trace))
}

struct LayerGrads {
    weight: DenseMatrix,
    bias: Vec<f64>,
    scale: Vec<f64>,
    shift: Vec<f64>,
    slope: f64,
    input: Option<DenseMatrix>,
}

#[allow(clippy::too_many_arguments)]
fn backward_layer(
    cache: &LayerCache,
    d_out: &DenseMatrix,
    weight: &DenseMatrix,
    bn_scale: &[f64],
    activation: Activation,
    slope: f64,
    adj: &CsrMatrix,
    need_input_grad: bool,
) -> Result<LayerGrads> {
    let pre = &cache.pre_activation;
    let (n, d) = pre.shape();
    let mut d_slope = 0.0;
    let d_pre = match activation {
        Activation::Identity => d_out.clone(),
        Activation::Relu => DenseMatrix::from_fn(n, d, |i, j| {
            if pre[(i, j)] > 0.0 {
                d_out[(i, j)]
            } else {
                0.0
            }
        }),
        Activation::Prelu => {
            let mut g = DenseMatrix::zeros(n, d);
            for i in 0..n {
                for j in 0..d {
                    let (p, u) = (pre[(i, j)], d_out[(i, j)]);
                    if p > 0.0 {
                        g[(i, j)] = u;
                    } else {
                        g[(i, j)] = slope * u;
                        d_slope += u * p;
                    }
                }
            }
            g
        }
    };

    let (d_affine, d_scale, d_shift) = match &cache.bn {
        Some(bn) => {
            let x_hat = &bn.x_hat;
            let mut d_scale = vec![0.0; d];
            let mut d_shift = vec![0.0; d];
            for i in 0..n {
                for j in 0..d {
                    d_scale[j] += d_pre[(i, j)] * x_hat[(i, j)];
                    d_shift[j] += d_pre[(i, j)];
                }
            }
            // dx̂ = dy · γ;  dx = inv_std · (dx̂ − mean(dx̂) − x̂ · mean(dx̂ ⊙ x̂))
            let nf = n as f64;
            let mut mean_dxh = vec![0.0; d];
            let mut mean_dxh_xh = vec![0.0; d];
            for j in 0..d {
                mean_dxh[j] = d_shift[j] * bn_scale[j] / nf;
                mean_dxh_xh[j] = d_scale[j] * bn_scale[j] / nf;
            }
            let d_affine = DenseMatrix::from_fn(n, d, |i, j| {
                let dxh = d_pre[(i, j)] * bn_scale[j];
                bn.inv_std[j] * (dxh - mean_dxh[j] - x_hat[(i, j)] * mean_dxh_xh[j])
            });
            (d_affine, d_scale, d_shift)
        }
        None => (d_pre, vec![0.0; d], vec![0.0; d]),
    };

    let d_weight = cache.propagated.t_matmul(&d_affine)?;
    let d_bias = d_affine.column_sums();
    let d_input = if need_input_grad {
        Some(adj.spmm_transpose(&d_affine.matmul_t(weight)?)?)
    } else {
        None
    };
    Ok(LayerGrads {
        weight: d_weight,
        bias: d_bias,
        scale: d_scale,
        shift: d_shift,
        slope: d_slope,
        input: d_input,
    })
}

/// Exact parameter gradients of the traced forward pass, given `∂L/∂H`.
/// With batch norm disabled the BN gradients are zero.
pub fn encoder_backward(
    params: &EncoderParams,
    trace: &ForwardTrace,
    d_h: &DenseMatrix,
) -> Result<EncoderParams> {
    if trace.mode != ForwardMode::Train {
        return Err(SgclError::Usage(
            "encoder_backward needs a training-mode trace".into(),
        ));
    }
    let adj = trace.adjacency.as_ref().expect("train trace keeps adjacency");
    let (c1, c2) = (&trace.layers[0], &trace.layers[1]);
    if d_h.shape() != c2.pre_activation.shape() {
        return Err(SgclError::shape(
            "encoder_backward",
            format!("upstream {:?} vs output {:?}", d_h.shape(), c2.pre_activation.shape()),
        ));
    }
    let g2 = backward_layer(
        c2,
        d_h,
        &params.w2,
        &params.bn2_scale,
        Activation::Identity,
        0.0,
        adj,
        true,
    )?;
    let d_hidden = g2.input.expect("requested input gradient");
    let g1 = backward_layer(
        c1,
        &d_hidden,
        &params.w1,
        &params.bn1_scale,
        trace.activation,
        params.prelu_slope,
        adj,
        false,
    )?;
    Ok(EncoderParams {
        w1: g1.weight,
        b1: g1.bias,
        w2: g2.weight,
        b2: g2.bias,
        bn1_scale: g1.scale,
        bn1_shift: g1.shift,
        bn2_scale: g2.scale,
        bn2_shift: g2.shift,
        prelu_slope: g1.slope,
    })
}
