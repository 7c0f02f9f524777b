//! Linear evaluation: frozen embeddings from the clean graph, scored with an
//! ℓ2-regularised multinomial logistic regression trained by full-batch Adam.

use serde::{Deserialize, Serialize};

use crate::encoder::{encoder_forward, EncoderConfig, EncoderParams, ForwardMode};
use crate::error::{Result, SgclError};
use crate::graph::{normalized_adjacency, random_split, DatasetBundle, SplitSpec};
use crate::numerics::{adamw_step, glorot_init, DenseMatrix, OptimHyper, OptimState};
use crate::seeded_rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub l2_lambda: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Train/validation/test fractions used when splits are drawn.
    pub split_fractions: (f64, f64, f64),
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            l2_lambda: 1e-4,
            epochs: 300,
            learning_rate: 1e-2,
            seed: 0,
            split_fractions: (0.1, 0.1, 0.8),
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.l2_lambda >= 0.0 && self.epochs > 0 && self.learning_rate > 0.0;
        if !ok {
            return Err(SgclError::Config(format!(
                "probe needs l2_lambda >= 0, epochs >= 1, learning_rate > 0; got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeResult {
    pub accuracy_train: f64,
    pub accuracy_val: f64,
    pub accuracy_test: f64,
    /// `d × C` weights.
    pub weights: DenseMatrix,
    pub bias: Vec<f64>,
}

impl ProbeResult {
    /// Class scores `H W + b`.
    pub fn logits(&self, h: &DenseMatrix) -> Result<DenseMatrix> {
        let mut z = h.matmul(&self.weights)?;
        z.add_row_vector(&self.bias)?;
        Ok(z)
    }

    pub fn predict(&self, h: &DenseMatrix) -> Result<Vec<usize>> {
        Ok(self.logits(h)?.row_iter().map(argmax).collect())
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best
}

/// Inference pass on the unaugmented graph.
pub fn final_embeddings(
    config: &EncoderConfig,
    params: &EncoderParams,
    bundle: &DatasetBundle,
) -> Result<DenseMatrix> {
    let adj = normalized_adjacency(&bundle.graph);
    let (h, _) = encoder_forward(config, params, &adj, &bundle.features, ForwardMode::Eval)?;
    Ok(h)
}

fn accuracy(pred: &[usize], labels: &[usize], idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 0.0;
    }
    let hits = idx.iter().filter(|&&i| pred[i] == labels[i]).count();
    hits as f64 / idx.len() as f64
}

/// Softmax regression on the training rows only; reports accuracy on every
/// split. The embeddings are read-only.
pub fn fit_linear_probe(
    h: &DenseMatrix,
    labels: &[usize],
    split: &SplitSpec,
    config: &ProbeConfig,
) -> Result<ProbeResult> {
    config.validate()?;
    if labels.len() != h.rows() {
        return Err(SgclError::shape(
            "fit_linear_probe",
            format!("{} labels for {} rows", labels.len(), h.rows()),
        ));
    }
    split.validate(h.rows())?;
    if split.train_idx.is_empty() {
        return Err(SgclError::Usage("empty training split".into()));
    }
    let first = labels[split.train_idx[0]];
    if split.train_idx.iter().all(|&i| labels[i] == first) {
        return Err(SgclError::DegenerateProbe(first));
    }
    let num_classes = labels.iter().max().map_or(0, |&m| m + 1);
    let d = h.cols();
    let x = h.select_rows(&split.train_idx);
    let y: Vec<usize> = split.train_idx.iter().map(|&i| labels[i]).collect();
    let n = x.rows() as f64;

    let mut rng = seeded_rng(config.seed);
    let mut weights = glorot_init(d.max(1), num_classes, &mut rng)?;
    if d == 0 {
        weights = DenseMatrix::zeros(0, num_classes);
    }
    let mut bias = vec![0.0; num_classes];
    let mut optim = OptimState::new(OptimHyper::adam(config.learning_rate));

    for _ in 0..config.epochs {
        let mut logits = x.matmul(&weights)?;
        logits.add_row_vector(&bias)?;
        // softmax − one-hot, averaged over the training rows
        let mut delta = DenseMatrix::zeros(x.rows(), num_classes);
        for (i, &yi) in y.iter().enumerate() {
            let row = logits.row(i);
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let denom: f64 = row.iter().map(|v| (v - m).exp()).sum();
            let out = delta.row_mut(i);
            for (c, o) in out.iter_mut().enumerate() {
                *o = (row[c] - m).exp() / denom / n;
            }
            out[yi] -= 1.0 / n;
        }
        let mut grad_w = x.t_matmul(&delta)?;
        for (g, w) in grad_w.as_mut_slice().iter_mut().zip(weights.as_slice()) {
            *g += 2.0 * config.l2_lambda * w;
        }
        let grad_b = delta.column_sums();
        adamw_step(
            &mut [("probe.w", weights.as_mut_slice()), ("probe.b", &mut bias)],
            &[grad_w.as_slice(), &grad_b],
            &mut optim,
        )?;
    }

    let mut result = ProbeResult {
        accuracy_train: 0.0,
        accuracy_val: 0.0,
        accuracy_test: 0.0,
        weights,
        bias,
    };
    let pred = result.predict(h)?;
    result.accuracy_train = accuracy(&pred, labels, &split.train_idx);
    result.accuracy_val = accuracy(&pred, labels, &split.val_idx);
    result.accuracy_test = accuracy(&pred, labels, &split.test_idx);
    Ok(result)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitOutcome {
    pub split_seed: u64,
    pub accuracy_train: f64,
    pub accuracy_val: f64,
    pub accuracy_test: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitSummary {
    pub outcomes: Vec<SplitOutcome>,
    pub mean_test: f64,
    /// Sample standard deviation of test accuracy (0 for a single split).
    pub std_test: f64,
}

impl SplitSummary {
    /// CSV with header `split_seed,acc_train,acc_val,acc_test`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("split_seed,acc_train,acc_val,acc_test\n");
        for o in &self.outcomes {
            s.push_str(&format!(
                "{},{},{},{}\n",
                o.split_seed, o.accuracy_train, o.accuracy_val, o.accuracy_test
            ));
        }
        s
    }
}

/// Split seed of the `i`-th repetition.
pub fn split_seed(base: u64, i: usize) -> u64 {
    base.wrapping_add(i as u64)
}

/// Repeats `random_split` + [`fit_linear_probe`] over `num_splits` derived seeds.
pub fn evaluate_over_splits(
    h: &DenseMatrix,
    labels: &[usize],
    num_splits: usize,
    config: &ProbeConfig,
) -> Result<SplitSummary> {
    if num_splits == 0 {
        return Err(SgclError::Config("num_splits must be at least 1".into()));
    }
    let mut outcomes = Vec::with_capacity(num_splits);
    for i in 0..num_splits {
        let seed = split_seed(config.seed, i);
        let split = random_split(h.rows(), config.split_fractions, seed)?;
        let probe = ProbeConfig {
            seed,
            ..config.clone()
        };
        let r = fit_linear_probe(h, labels, &split, &probe)?;
        outcomes.push(SplitOutcome {
            split_seed: seed,
            accuracy_train: r.accuracy_train,
            accuracy_val: r.accuracy_val,
            accuracy_test: r.accuracy_test,
        });
    }
    let k = outcomes.len() as f64;
    let mean_test = outcomes.iter().map(|o| o.accuracy_test).sum::<f64>() / k;
    let std_test = if outcomes.len() < 2 {
        0.0
    } else {
        (outcomes
            .iter()
            .map(|o| (o.accuracy_test - mean_test).powi(2))
            .sum::<f64>()
            / (k - 1.0))
            .sqrt()
    };
    Ok(SplitSummary {
        outcomes,
        mean_test,
        std_test,
    })
}
