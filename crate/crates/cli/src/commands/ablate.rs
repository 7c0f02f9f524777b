use std::fmt::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sgcl_core::evaluator::{evaluate_over_splits, final_embeddings};
use sgcl_core::trainer::{train, Mode, PredictorSource, TrainConfig};
use sgcl_core::PredictorKind;

use crate::config::Manifest;
use crate::error::CliError;
use crate::output::{create_dir, write_text};

pub const ABLATION_HEADER: &str =
    "mode,tau,predictor,source,mean_test,std_test,final_loss,final_s_bar";

#[derive(Clone, Debug)]
pub struct Cell {
    pub mode: Mode,
    pub tau: f64,
    pub predictor: PredictorKind,
    pub source: PredictorSource,
}

impl Cell {
    pub fn name(&self) -> String {
        let mode = match self.mode {
            Mode::Sgcl => "sgcl".to_string(),
            Mode::Bgrl => format!("bgrl_tau{}", self.tau),
        };
        format!("{mode}__{}", predictor_label(self.predictor, self.source))
    }
}

fn predictor_label(p: PredictorKind, s: PredictorSource) -> &'static str {
    match (p, s) {
        (PredictorKind::Inferential, PredictorSource::PreviousTarget) => "inferential",
        (PredictorKind::Inferential, PredictorSource::CurrentOnline) => "inferential_current",
        (PredictorKind::Mlp { .. }, _) => "mlp",
        (PredictorKind::Identity, _) => "identity",
    }
}

/// {single-view; EMA with τ ∈ {0, 0.95, 0.99}} × {inferential from the
/// target, inferential from the current output, MLP, identity}.
pub fn grid(mlp_hidden: usize) -> Vec<Cell> {
    let modes = [(Mode::Sgcl, 0.0), (Mode::Bgrl, 0.0), (Mode::Bgrl, 0.95), (Mode::Bgrl, 0.99)];
    let predictors = [
        (PredictorKind::Inferential, PredictorSource::PreviousTarget),
        (PredictorKind::Inferential, PredictorSource::CurrentOnline),
        (PredictorKind::Mlp { hidden_dim: mlp_hidden }, PredictorSource::PreviousTarget),
        (PredictorKind::Identity, PredictorSource::PreviousTarget),
    ];
    modes
        .iter()
        .flat_map(|&(mode, tau)| {
            predictors.iter().map(move |&(predictor, source)| Cell {
                mode,
                tau,
                predictor,
                source,
            })
        })
        .collect()
}

pub fn run(config_path: &Path, output_dir: Option<PathBuf>) -> Result<(), CliError> {
    let mut config = super::load_run_config(config_path, &["ablate"], output_dir)?;
    let bundle = config.dataset.load()?;
    config.train = config.resolved_train(&bundle)?;
    let out = config.output_dir.clone();
    create_dir(&out)?;
    Manifest::new("ablate", &config, None)?.write(&out)?;

    let cells = grid(config.train.encoder.hidden_dim);
    let rows: Vec<Result<String, CliError>> = cells
        .par_iter()
        .map(|cell| {
            let cfg = TrainConfig {
                mode: cell.mode,
                bgrl_tau: cell.tau,
                predictor: cell.predictor,
                predictor_source: cell.source,
                ..config.train.clone()
            };
            let state = train(&bundle, &cfg)?;
            let dir = out.join("cells").join(cell.name());
            create_dir(&dir)?;
            write_text(&dir.join("metrics.csv"), &state.metrics.to_csv())?;
            let h = final_embeddings(&state.encoder_config, &state.online_params, &bundle)?;
            let summary = evaluate_over_splits(&h, &bundle.labels, config.eval_splits, &config.probe)?;
            let last = state.metrics.last().expect("at least one iteration");
            let mode = match cell.mode {
                Mode::Sgcl => "sgcl",
                Mode::Bgrl => "bgrl",
            };
            Ok(format!(
                "{mode},{},{},{},{},{},{},{}",
                cell.tau,
                predictor_label(cell.predictor, cell.source),
                match cell.source {
                    PredictorSource::PreviousTarget => "previous_target",
                    PredictorSource::CurrentOnline => "current_online",
                },
                summary.mean_test,
                summary.std_test,
                last.loss,
                last.s_bar
            ))
        })
        .collect();
    let mut csv = String::from(ABLATION_HEADER);
    csv.push('\n');
    for row in rows {
        let _ = writeln!(csv, "{}", row?);
    }
    write_text(&out.join("ablation.csv"), &csv)?;
    print!("{csv}");
    Ok(())
}
