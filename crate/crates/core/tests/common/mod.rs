#![allow(dead_code)]

use rand::Rng as _;
use sgcl_core::encoder::{EncoderConfig, EncoderParams};
use sgcl_core::graph::{Graph, SbmConfig};
use sgcl_core::{seeded_rng, Activation, DatasetBundle, DenseMatrix, Rng};

pub fn random_matrix(rows: usize, cols: usize, rng: &mut Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_graph(n: usize, p: f64, rng: &mut Rng) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_undirected_edges(n, edges).unwrap()
}

/// The 12-node / 5-feature / hidden 7 / output 4 instance used by the gradient checks.
pub fn tiny_instance(seed: u64, batch_norm: bool) -> (EncoderConfig, EncoderParams, Graph, DenseMatrix, Rng) {
    let mut rng = seeded_rng(seed);
    let config = EncoderConfig {
        in_dim: 5,
        hidden_dim: 7,
        out_dim: 4,
        use_batch_norm: batch_norm,
        activation: Activation::Prelu,
        bn_eps: 1e-5,
    };
    let mut params = EncoderParams::init(&config, &mut rng).unwrap();
    // Move the BN affine terms and slope away from their trivial initial values.
    for (name, buf) in params.named_buffers_mut() {
        if name.starts_with("bn") || name == "prelu.slope" || name.starts_with('b') {
            buf.iter_mut().for_each(|v| *v += rng.random_range(-0.5..0.5));
        }
    }
    let graph = random_graph(12, 0.3, &mut rng);
    let x = random_matrix(12, 5, &mut rng);
    (config, params, graph, x, rng)
}

/// `|a − n| / max(|a|, |n|, floor)`.
pub fn rel_err(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Central differences of `f` with respect to every entry of every encoder buffer.
pub fn encoder_fd(params: &EncoderParams, h: f64, mut f: impl FnMut(&EncoderParams) -> f64) -> Vec<(String, Vec<f64>)> {
    let names: Vec<(String, usize)> = params
        .named_buffers()
        .iter()
        .map(|(n, b)| (n.to_string(), b.len()))
        .collect();
    let mut out = Vec::new();
    for (k, (name, len)) in names.into_iter().enumerate() {
        let mut grads = Vec::with_capacity(len);
        for j in 0..len {
            let mut plus = params.clone();
            plus.named_buffers_mut()[k].1[j] += h;
            let mut minus = params.clone();
            minus.named_buffers_mut()[k].1[j] -= h;
            grads.push((f(&plus) - f(&minus)) / (2.0 * h));
        }
        out.push((name, grads));
    }
    out
}

/// Largest relative error between analytic gradients and finite differences.
pub fn max_encoder_rel_err(analytic: &EncoderParams, numeric: &[(String, Vec<f64>)]) -> (f64, String) {
    max_encoder_rel_err_floor(analytic, numeric, 1e-6)
}

/// As [`max_encoder_rel_err`], with gradients below `floor` compared absolutely.
pub fn max_encoder_rel_err_floor(analytic: &EncoderParams, numeric: &[(String, Vec<f64>)], floor: f64) -> (f64, String) {
    let mut worst = (0.0, String::new());
    for ((name, a), (_, n)) in analytic.named_buffers().iter().zip(numeric) {
        for (j, (&a, &n)) in a.iter().zip(n).enumerate() {
            let e = rel_err(a, n, floor);
            if e > worst.0 {
                worst = (e, format!("{name}[{j}]: analytic {a:e}, numeric {n:e}"));
            }
        }
    }
    worst
}

/// The desk-scale benchmark used by the training-level checks.
pub fn benchmark_sbm() -> SbmConfig {
    SbmConfig::default()
}

pub fn labelled(graph: Graph, features: DenseMatrix, labels: Vec<usize>) -> DatasetBundle {
    let c = labels.iter().max().map_or(1, |m| m + 1);
    DatasetBundle::new(graph, features, labels, c).unwrap()
}
