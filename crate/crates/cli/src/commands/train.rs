use std::path::{Path, PathBuf};

use sgcl_core::encoder::save_checkpoint;
use sgcl_core::evaluator::{evaluate_over_splits, final_embeddings};
use sgcl_core::trainer::{run_epochs, MetricsLog, TrainState};

use crate::config::Manifest;
use crate::error::CliError;
use crate::output::{create_dir, write_text};
use crate::svg::{line_chart, Series};

pub fn run(config_path: &Path, output_dir: Option<PathBuf>) -> Result<(), CliError> {
    let mut config = super::load_run_config(config_path, &["train"], output_dir)?;
    let bundle = config.dataset.load()?;
    let train = config.resolved_train(&bundle)?;
    config.train = train.clone();
    let out = config.output_dir.clone();
    create_dir(&out)?;
    Manifest::new("train", &config, None)?.write(&out)?;

    let mut state = TrainState::init(&bundle, &train)?;
    save_checkpoint(out.join("checkpoint_init"), &state.encoder_config, &state.online_params)?;
    let result = run_epochs(&mut state, &bundle, &train);
    // keep whatever was logged before a failure
    write_text(&out.join("metrics.csv"), &state.metrics.to_csv())?;
    result?;
    save_checkpoint(out.join("checkpoint"), &state.encoder_config, &state.online_params)?;

    let h = final_embeddings(&state.encoder_config, &state.online_params, &bundle)?;
    let summary = evaluate_over_splits(&h, &bundle.labels, config.eval_splits, &config.probe)?;
    write_text(&out.join("probe_report.csv"), &summary.to_csv())?;
    if config.emit_plots {
        write_plots(&out, &state.metrics)?;
    }
    println!(
        "trained {} iterations; test accuracy {:.4} ± {:.4} over {} splits; outputs in {}",
        state.iteration,
        summary.mean_test,
        summary.std_test,
        config.eval_splits,
        out.display()
    );
    Ok(())
}

pub(crate) fn write_plots(out: &Path, metrics: &MetricsLog) -> Result<(), CliError> {
    let pick = |f: fn(&sgcl_core::trainer::MetricsRecord) -> Option<f64>| -> Vec<(f64, f64)> {
        metrics
            .records
            .iter()
            .filter_map(|r| f(r).map(|v| (r.iter as f64, v)))
            .collect()
    };
    let loss = line_chart("Training loss", "iteration", "loss", &[Series::new("loss", pick(|r| Some(r.loss)))], false);
    write_text(&out.join("loss.svg"), &loss)?;
    let acc = line_chart(
        "Linear-probe test accuracy",
        "iteration",
        "accuracy",
        &[Series::new("probe", pick(|r| r.probe_acc))],
        false,
    );
    write_text(&out.join("accuracy.svg"), &acc)?;
    let align = line_chart(
        "Online vs target agreement",
        "iteration",
        "value",
        &[
            Series::new("mean cosine", pick(|r| Some(r.s_bar))),
            Series::new("mean distance", pick(|r| Some(r.d_bar))).dashed(),
        ],
        false,
    );
    write_text(&out.join("alignment.svg"), &align)
}
