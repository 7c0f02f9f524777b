//! Training loops.
//!
//! [`Mode::Sgcl`] runs one augmented view per iteration through one encoder.
//! The prediction target is the previous iteration's representation computed
//! with the *updated* parameters, and the predictor is rebuilt from it each
//! step, so nothing on the target side ever needs a gradient.
//!
//! [`Mode::Bgrl`] is the two-view baseline: online encoder plus predictor,
//! and an EMA target encoder.

mod loss;
mod metrics;

pub use loss::{cosine_loss, CosineLoss, LossSign};
pub use metrics::{MetricsLog, MetricsRecord, METRICS_HEADER};

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::augment::{augment, AugmentConfig, AugmentedView};
use crate::diagnostics::alignment_stats;
use crate::encoder::{
    ema_update, encoder_backward, encoder_forward, Activation, EncoderConfig, EncoderParams,
    ForwardMode,
};
use crate::error::{Result, SgclError};
use crate::evaluator::{final_embeddings, fit_linear_probe, ProbeConfig};
use crate::graph::{normalized_adjacency, random_split, DatasetBundle, SplitSpec};
use crate::numerics::{adamw_step, CsrMatrix, DenseMatrix, OptimHyper, OptimState};
use crate::predictor::{
    center_and_normalize, inferential_predictor, mlp_predict_backward, mlp_predict_forward,
    predict, predict_backward, MlpParams, PredictorKind, PredictorMatrix,
};
use crate::{seeded_rng, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorSource {
    /// Covariance of the cached target from the previous iteration.
    PreviousTarget,
    /// Covariance of the current online output, detached.
    CurrentOnline,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Sgcl,
    Bgrl,
}

fn default_predictor() -> PredictorKind {
    PredictorKind::Inferential
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub augment: AugmentConfig,
    /// `in_dim = 0` is filled in from the dataset.
    pub encoder: EncoderConfig,
    pub optimizer: OptimHyper,
    pub loss_sign: LossSign,
    #[serde(default = "default_predictor")]
    pub predictor: PredictorKind,
    pub predictor_source: PredictorSource,
    pub mode: Mode,
    pub bgrl_tau: f64,
    pub bgrl_symmetrize: bool,
    pub seed: u64,
    /// Probe the clean-graph embeddings every this many iterations and on the
    /// last one; 0 disables probing.
    pub probe_every: usize,
    /// Settings for the periodic probe; filled in by the caller.
    #[serde(skip)]
    pub probe: ProbeConfig,
    /// Timing breaks bit-for-bit reproducibility of the metrics, so it is opt-in.
    pub record_wall_time: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            augment: AugmentConfig::default(),
            encoder: EncoderConfig::default(),
            optimizer: OptimHyper::default(),
            loss_sign: LossSign::MaximizeSimilarity,
            predictor: default_predictor(),
            predictor_source: PredictorSource::PreviousTarget,
            mode: Mode::Sgcl,
            bgrl_tau: 0.99,
            bgrl_symmetrize: false,
            seed: 0,
            probe_every: 25,
            probe: ProbeConfig::default(),
            record_wall_time: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(SgclError::Config("epochs must be at least 1".into()));
        }
        self.augment.validate()?;
        self.optimizer.validate()?;
        if self.mode == Mode::Bgrl && !(0.0..=1.0).contains(&self.bgrl_tau) {
            return Err(SgclError::Config(format!(
                "bgrl_tau must lie in [0, 1], got {}",
                self.bgrl_tau
            )));
        }
        if let PredictorKind::Mlp { hidden_dim: 0 } = self.predictor {
            return Err(SgclError::Config("MLP predictor needs hidden_dim >= 1".into()));
        }
        if self.probe_every > 0 {
            self.probe.validate()?;
        }
        Ok(())
    }

    /// Encoder configuration with the input width taken from the data.
    pub fn resolved_encoder(&self, feature_dim: usize) -> Result<EncoderConfig> {
        let mut enc = self.encoder.clone();
        if enc.in_dim == 0 {
            enc.in_dim = feature_dim;
        } else if enc.in_dim != feature_dim {
            return Err(SgclError::Config(format!(
                "encoder.in_dim = {} but the dataset has {} features",
                enc.in_dim, feature_dim
            )));
        }
        enc.validate()?;
        Ok(enc)
    }
}

/// Everything carried from one iteration to the next.
#[derive(Clone, Debug)]
pub struct TrainState {
    pub encoder_config: EncoderConfig,
    pub online_params: EncoderParams,
    /// EMA target encoder, two-view mode only.
    pub target_params: Option<EncoderParams>,
    /// Learned predictor, only for [`PredictorKind::Mlp`].
    pub mlp_params: Option<MlpParams>,
    pub optimizer: OptimState,
    /// `H'_{t−1}`: target representation cached by the previous step.
    pub prev_target_repr: DenseMatrix,
    pub prev_view: AugmentedView,
    pub iteration: usize,
    pub metrics: MetricsLog,
    rng: Rng,
    probe_split: Option<SplitSpec>,
}

impl TrainState {
    /// Glorot-initialised parameters and the first target `H'_0`, computed by
    /// the untrained encoder on an augmented view.
    pub fn init(bundle: &DatasetBundle, config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        bundle.validate()?;
        let encoder_config = config.resolved_encoder(bundle.feature_dim())?;
        let mut rng = seeded_rng(config.seed);
        let online = EncoderParams::init(&encoder_config, &mut rng)?;
        let mlp_params = match config.predictor {
            PredictorKind::Mlp { hidden_dim } => {
                Some(MlpParams::init(encoder_config.out_dim, hidden_dim, &mut rng)?)
            }
            _ => None,
        };
        let target_params = (config.mode == Mode::Bgrl).then(|| online.clone());
        let view = augment(bundle, &config.augment, &mut rng)?;
        let adj = normalized_adjacency(&view.graph);
        let (h0, _) = encoder_forward(&encoder_config, &online, &adj, &view.features, ForwardMode::Eval)?;
        let probe_split = if config.probe_every > 0 {
            Some(random_split(
                bundle.num_nodes(),
                config.probe.split_fractions,
                config.probe.seed,
            )?)
        } else {
            None
        };
        Ok(Self {
            encoder_config,
            online_params: online,
            target_params,
            mlp_params,
            optimizer: OptimState::new(config.optimizer),
            prev_target_repr: h0,
            prev_view: view,
            iteration: 0,
            metrics: MetricsLog::default(),
            rng,
            probe_split,
        })
    }

    /// Encoder parameter sets held by the state: 1 single-view, 2 with EMA.
    pub fn num_encoder_sets(&self) -> usize {
        1 + usize::from(self.target_params.is_some())
    }

    pub fn num_predictor_parameters(&self) -> usize {
        self.mlp_params.as_ref().map_or(0, MlpParams::num_parameters)
    }
}

/// How the online branch turns `H` into a prediction `Z`.
#[derive(Clone, Copy, Debug)]
pub enum StepPredictor<'a> {
    /// Fixed matrix; receives no gradient.
    Matrix(&'a PredictorMatrix),
    /// Inferential predictor built from the branch's own output, detached.
    CurrentOnline,
    Mlp(&'a MlpParams),
}

/// Loss and gradients of one online branch.
#[derive(Clone, Debug)]
pub struct BranchOutput {
    pub loss: f64,
    pub encoder_grads: EncoderParams,
    pub mlp_grads: Option<MlpParams>,
    /// Online representation `H`.
    pub online: DenseMatrix,
    pub degenerate: usize,
}

/// `scale · cosine_loss(pred(f_θ(Â, X)), target)` and its gradients with
/// respect to the encoder (and MLP) parameters. `target` is a constant.
#[allow(clippy::too_many_arguments)]
pub fn online_branch(
    config: &EncoderConfig,
    params: &EncoderParams,
    adj: &CsrMatrix,
    features: &DenseMatrix,
    target: &DenseMatrix,
    predictor: StepPredictor<'_>,
    sign: LossSign,
    scale: f64,
) -> Result<BranchOutput> {
    let (h, trace) = encoder_forward(config, params, adj, features, ForwardMode::Train)?;
    let mut degenerate = 0;
    let built;
    let matrix = match predictor {
        StepPredictor::Matrix(p) => Some(p),
        StepPredictor::CurrentOnline => {
            let c = center_and_normalize(&h)?;
            degenerate += c.degenerate;
            built = inferential_predictor(&c.rows)?;
            Some(&built)
        }
        StepPredictor::Mlp(_) => None,
    };
    let (loss, d_h, mlp_grads) = match (matrix, predictor) {
        (Some(p), _) => {
            let z = predict(&h, p)?;
            let l = cosine_loss(&z, target, sign)?;
            degenerate += l.degenerate;
            (l.loss, predict_backward(&l.grad.scale(scale), p)?, None)
        }
        (None, StepPredictor::Mlp(mlp)) => {
            let (z, mtrace) = mlp_predict_forward(mlp, &h, Activation::Prelu)?;
            let l = cosine_loss(&z, target, sign)?;
            degenerate += l.degenerate;
            let (g, d_h) = mlp_predict_backward(mlp, &mtrace, &l.grad.scale(scale))?;
            (l.loss, d_h, Some(g))
        }
        (None, _) => unreachable!("only the MLP predictor has no matrix"),
    };
    let encoder_grads = encoder_backward(params, &trace, &d_h)?;
    Ok(BranchOutput {
        loss: scale * loss,
        encoder_grads,
        mlp_grads,
        online: h,
        degenerate,
    })
}

/// Predictor matrix for an inferential predictor built from `source`.
fn covariance_predictor(source: &DenseMatrix, degenerate: &mut usize) -> Result<PredictorMatrix> {
    let c = center_and_normalize(source)?;
    *degenerate += c.degenerate;
    inferential_predictor(&c.rows)
}

fn step_predictor<'a>(
    config: &TrainConfig,
    mlp: Option<&'a MlpParams>,
    from_target: &'a Option<PredictorMatrix>,
    identity: &'a Option<PredictorMatrix>,
) -> StepPredictor<'a> {
    match config.predictor {
        PredictorKind::Inferential => match config.predictor_source {
            PredictorSource::PreviousTarget => {
                StepPredictor::Matrix(from_target.as_ref().expect("built for previous_target"))
            }
            PredictorSource::CurrentOnline => StepPredictor::CurrentOnline,
        },
        PredictorKind::Identity => StepPredictor::Matrix(identity.as_ref().expect("built for identity")),
        PredictorKind::Mlp { .. } => StepPredictor::Mlp(mlp.expect("MLP predictor initialised")),
    }
}

fn apply_update(
    state: &mut TrainState,
    encoder_grads: &EncoderParams,
    mlp_grads: Option<&MlpParams>,
) -> Result<()> {
    let mut params = state.online_params.named_buffers_mut();
    let mut grads: Vec<&[f64]> = encoder_grads.named_buffers().into_iter().map(|(_, g)| g).collect();
    if let (Some(mlp), Some(g)) = (state.mlp_params.as_mut(), mlp_grads) {
        params.extend(mlp.named_buffers_mut());
        grads.extend(g.named_buffers().into_iter().map(|(_, g)| g));
    }
    adamw_step(&mut params, &grads, &mut state.optimizer)
}

fn add_mlp(a: Option<MlpParams>, b: Option<MlpParams>) -> Option<MlpParams> {
    match (a, b) {
        (Some(mut a), Some(b)) => {
            for ((_, x), (_, y)) in a.named_buffers_mut().into_iter().zip(b.named_buffers()) {
                x.iter_mut().zip(y).for_each(|(x, y)| *x += y);
            }
            Some(a)
        }
        (a, b) => a.or(b),
    }
}

fn add_encoder(mut a: EncoderParams, b: &EncoderParams) -> EncoderParams {
    for ((_, x), (_, y)) in a.named_buffers_mut().into_iter().zip(b.named_buffers()) {
        x.iter_mut().zip(y).for_each(|(x, y)| *x += y);
    }
    a
}

struct StepSummary {
    loss: f64,
    online: DenseMatrix,
    reference: DenseMatrix,
    degenerate: usize,
}

/// One single-view iteration: augment, predict `H'_{t−1}` from `H_t`, update,
/// then cache `H'_t` from the updated encoder on the same view.
pub fn sgcl_step(state: &mut TrainState, bundle: &DatasetBundle, config: &TrainConfig) -> Result<()> {
    if config.mode != Mode::Sgcl {
        return Err(SgclError::Usage("sgcl_step called in two-view mode".into()));
    }
    let summary = sgcl_inner(state, bundle, config)?;
    finish_iteration(state, bundle, config, summary)
}

fn sgcl_inner(state: &mut TrainState, bundle: &DatasetBundle, config: &TrainConfig) -> Result<StepSummary> {
    let iteration = state.iteration + 1;
    let view = augment(bundle, &config.augment, &mut state.rng)?;
    let adj = normalized_adjacency(&view.graph);
    let mut degenerate = 0;
    let d = state.encoder_config.out_dim;
    let from_target = match (config.predictor, config.predictor_source) {
        (PredictorKind::Inferential, PredictorSource::PreviousTarget) => {
            Some(covariance_predictor(&state.prev_target_repr, &mut degenerate)?)
        }
        _ => None,
    };
    let identity = (config.predictor == PredictorKind::Identity).then(|| PredictorMatrix::identity(d));
    let predictor = step_predictor(config, state.mlp_params.as_ref(), &from_target, &identity);
    let out = online_branch(
        &state.encoder_config,
        &state.online_params,
        &adj,
        &view.features,
        &state.prev_target_repr,
        predictor,
        config.loss_sign,
        1.0,
    )?;
    if !out.loss.is_finite() {
        return Err(SgclError::NonFiniteLoss { iteration });
    }
    apply_update(state, &out.encoder_grads, out.mlp_grads.as_ref())?;
    let (next_target, _) = encoder_forward(
        &state.encoder_config,
        &state.online_params,
        &adj,
        &view.features,
        ForwardMode::Eval,
    )?;
    let reference = std::mem::replace(&mut state.prev_target_repr, next_target);
    state.prev_view = view;
    Ok(StepSummary {
        loss: out.loss,
        online: out.online,
        reference,
        degenerate: degenerate + out.degenerate,
    })
}

/// One two-view iteration with an EMA target encoder. The loss is
/// `2 − 2·mean cos` (averaged over both directions when symmetrised).
pub fn bgrl_step(state: &mut TrainState, bundle: &DatasetBundle, config: &TrainConfig) -> Result<()> {
    if config.mode != Mode::Bgrl {
        return Err(SgclError::Usage("bgrl_step called in single-view mode".into()));
    }
    let summary = bgrl_inner(state, bundle, config)?;
    finish_iteration(state, bundle, config, summary)
}

fn bgrl_inner(state: &mut TrainState, bundle: &DatasetBundle, config: &TrainConfig) -> Result<StepSummary> {
    let iteration = state.iteration + 1;
    let v1 = augment(bundle, &config.augment, &mut state.rng)?;
    let v2 = augment(bundle, &config.augment, &mut state.rng)?;
    let (a1, a2) = (normalized_adjacency(&v1.graph), normalized_adjacency(&v2.graph));
    let enc = &state.encoder_config;
    let target = state.target_params.as_ref().expect("two-view state has a target encoder");
    let (t2, _) = encoder_forward(enc, target, &a2, &v2.features, ForwardMode::Eval)?;
    let t1 = if config.bgrl_symmetrize {
        Some(encoder_forward(enc, target, &a1, &v1.features, ForwardMode::Eval)?.0)
    } else {
        None
    };
    let scale = if config.bgrl_symmetrize { 1.0 } else { 2.0 };
    let identity = (config.predictor == PredictorKind::Identity)
        .then(|| PredictorMatrix::identity(enc.out_dim));
    let wants_target_cov = config.predictor == PredictorKind::Inferential
        && config.predictor_source == PredictorSource::PreviousTarget;
    let mut degenerate = 0;

    let p2 = if wants_target_cov { Some(covariance_predictor(&t2, &mut degenerate)?) } else { None };
    let pred = step_predictor(config, state.mlp_params.as_ref(), &p2, &identity);
    let first = online_branch(enc, &state.online_params, &a1, &v1.features, &t2, pred, config.loss_sign, scale)?;
    let (mut loss, mut enc_grads, mut mlp_grads) = (first.loss, first.encoder_grads, first.mlp_grads);
    degenerate += first.degenerate;
    if let Some(t1) = &t1 {
        let p1 = if wants_target_cov { Some(covariance_predictor(t1, &mut degenerate)?) } else { None };
        let pred = step_predictor(config, state.mlp_params.as_ref(), &p1, &identity);
        let second = online_branch(enc, &state.online_params, &a2, &v2.features, t1, pred, config.loss_sign, scale)?;
        loss += second.loss;
        enc_grads = add_encoder(enc_grads, &second.encoder_grads);
        mlp_grads = add_mlp(mlp_grads, second.mlp_grads);
        degenerate += second.degenerate;
    }
    if !loss.is_finite() {
        return Err(SgclError::NonFiniteLoss { iteration });
    }
    apply_update(state, &enc_grads, mlp_grads.as_ref())?;
    let target = state.target_params.as_ref().expect("two-view state has a target encoder");
    state.target_params = Some(ema_update(&state.online_params, target, config.bgrl_tau)?);
    state.prev_target_repr = t2.clone();
    state.prev_view = v2;
    Ok(StepSummary {
        loss,
        online: first.online,
        reference: t2,
        degenerate,
    })
}

fn finish_iteration(
    state: &mut TrainState,
    bundle: &DatasetBundle,
    config: &TrainConfig,
    summary: StepSummary,
) -> Result<()> {
    state.iteration += 1;
    let (s_bar, d_bar) = match alignment_stats(&summary.online, &summary.reference) {
        Ok(a) => (a.s_bar, a.d_bar),
        Err(SgclError::EmptyStatistics) => (f64::NAN, f64::NAN),
        Err(e) => return Err(e),
    };
    let due = config.probe_every > 0
        && (state.iteration.is_multiple_of(config.probe_every) || state.iteration == config.epochs);
    let probe_acc = match (&state.probe_split, due) {
        (Some(split), true) => {
            let h = final_embeddings(&state.encoder_config, &state.online_params, bundle)?;
            Some(fit_linear_probe(&h, &bundle.labels, split, &config.probe)?.accuracy_test)
        }
        _ => None,
    };
    state.metrics.degenerate_rows += summary.degenerate;
    state.metrics.push(MetricsRecord {
        iter: state.iteration,
        loss: summary.loss,
        s_bar,
        d_bar,
        probe_acc,
        wall_ms: None,
    });
    Ok(())
}

/// Dispatches one iteration of the configured mode.
pub fn step(state: &mut TrainState, bundle: &DatasetBundle, config: &TrainConfig) -> Result<()> {
    match config.mode {
        Mode::Sgcl => sgcl_step(state, bundle, config),
        Mode::Bgrl => bgrl_step(state, bundle, config),
    }
}

/// Initialises and runs `config.epochs` iterations. The returned state holds
/// the final parameters and the full metrics log.
pub fn train(bundle: &DatasetBundle, config: &TrainConfig) -> Result<TrainState> {
    let mut state = TrainState::init(bundle, config)?;
    run_epochs(&mut state, bundle, config)?;
    Ok(state)
}

/// Runs `config.epochs` further iterations on an existing state.
pub fn run_epochs(state: &mut TrainState, bundle: &DatasetBundle, config: &TrainConfig) -> Result<()> {
    let start = Instant::now();
    for _ in 0..config.epochs {
        step(state, bundle, config)?;
        if config.record_wall_time {
            let ms = start.elapsed().as_secs_f64() * 1e3;
            if let Some(r) = state.metrics.records.last_mut() {
                r.wall_ms = Some(ms);
            }
        }
    }
    Ok(())
}
