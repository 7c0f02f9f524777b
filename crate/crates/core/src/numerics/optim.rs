use serde::{Deserialize, Serialize};

use crate::error::{Result, SgclError};

/// AdamW hyperparameters. Plain Adam is `weight_decay = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for OptimHyper {
    fn default() -> Self {
        Self {
            learning_rate: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-5,
        }
    }
}

impl OptimHyper {
    pub fn adam(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            weight_decay: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0
            && self.weight_decay >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(SgclError::Config(format!("invalid optimizer settings {self:?}")))
        }
    }
}

/// Per-parameter Adam moments. Moments are allocated on the first step.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimState {
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
    pub step_count: u64,
    pub hyper: OptimHyper,
}

impl OptimState {
    pub fn new(hyper: OptimHyper) -> Self {
        Self {
            first_moment: Vec::new(),
            second_moment: Vec::new(),
            step_count: 0,
            hyper,
        }
    }
}

/// One decoupled-weight-decay Adam step over a list of named parameter
/// buffers. `grads[i]` must have the length of `params[i].1`.
///
/// Nothing is modified when any gradient entry is non-finite.
pub fn adamw_step(
    params: &mut [(&str, &mut [f64])],
    grads: &[&[f64]],
    state: &mut OptimState,
) -> Result<()> {
    if params.len() != grads.len() {
        return Err(SgclError::shape(
            "adamw_step",
            format!("{} parameters but {} gradients", params.len(), grads.len()),
        ));
    }
    for ((name, p), g) in params.iter().zip(grads) {
        if p.len() != g.len() {
            return Err(SgclError::shape(
                "adamw_step",
                format!("{name}: {} values, {} gradients", p.len(), g.len()),
            ));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(SgclError::Numeric(format!("gradient of {name}")));
        }
    }
    if state.step_count == 0 && state.first_moment.is_empty() {
        state.first_moment = params.iter().map(|(_, p)| vec![0.0; p.len()]).collect();
        state.second_moment = state.first_moment.clone();
    }
    let shapes_match = state.first_moment.len() == params.len()
        && state
            .first_moment
            .iter()
            .zip(params.iter())
            .all(|(m, (_, p))| m.len() == p.len());
    if !shapes_match {
        return Err(SgclError::shape("adamw_step", "optimizer moments do not match parameters"));
    }

    let h = state.hyper;
    state.step_count += 1;
    let t = state.step_count as i32;
    let bias1 = 1.0 - h.beta1.powi(t);
    let bias2 = 1.0 - h.beta2.powi(t);
    let decay = 1.0 - h.learning_rate * h.weight_decay;

    for (i, ((_, p), g)) in params.iter_mut().zip(grads).enumerate() {
        let m = &mut state.first_moment[i];
        let v = &mut state.second_moment[i];
        for j in 0..p.len() {
            let gj = g[j];
            m[j] = h.beta1 * m[j] + (1.0 - h.beta1) * gj;
            v[j] = h.beta2 * v[j] + (1.0 - h.beta2) * gj * gj;
            let m_hat = m[j] / bias1;
            let v_hat = v[j] / bias2;
            p[j] = p[j] * decay - h.learning_rate * m_hat / (v_hat.sqrt() + h.eps);
        }
    }
    Ok(())
}
