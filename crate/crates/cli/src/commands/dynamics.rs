use std::fmt::Write;
use std::path::{Path, PathBuf};

use rand_distr::{Distribution, StandardNormal};
use sgcl_core::diagnostics::{ts_closed_form, ts_logistic, ts_simulate};
use sgcl_core::predictor::center_and_normalize;
use sgcl_core::{seeded_rng, DenseMatrix};

use crate::config::{load_config, DynamicsInput, DynamicsRunConfig, Manifest};
use crate::error::CliError;
use crate::output::{create_dir, write_text};
use crate::svg::{line_chart, Series};

pub fn input_matrix(input: &DynamicsInput) -> Result<DenseMatrix, CliError> {
    match *input {
        DynamicsInput::Random { nodes, dim, seed } => {
            if nodes < 2 || dim == 0 {
                return Err(CliError::Config(format!("random input needs nodes >= 2 and dim >= 1, got {nodes}x{dim}")));
            }
            let mut rng = seeded_rng(seed);
            let raw = DenseMatrix::from_fn(nodes, dim, |_, _| StandardNormal.sample(&mut rng));
            Ok(center_and_normalize(&raw)?.rows)
        }
        DynamicsInput::Isotropic { dim } => {
            if dim == 0 {
                return Err(CliError::Config("isotropic input needs dim >= 1".into()));
            }
            Ok(DenseMatrix::from_fn(2 * dim, dim, |i, j| {
                let sign = if i < dim { 1.0 } else { -1.0 };
                if i % dim == j {
                    sign
                } else {
                    0.0
                }
            }))
        }
    }
}

pub fn run(config_path: &Path, output_dir: Option<PathBuf>) -> Result<(), CliError> {
    let mut config: DynamicsRunConfig = load_config(config_path, "dynamics")?;
    if let Some(dir) = output_dir {
        config.output_dir = dir;
    }
    let h = input_matrix(&config.input)?;
    let out = config.output_dir.clone();
    create_dir(&out)?;
    Manifest::new("dynamics", &config, None)?.write(&out)?;

    let sim = &config.simulation;
    let traj = ts_simulate(&h, sim)?;
    let d = traj.teacher_spectrum.len();

    let mut csv = String::from("step,rel_distance,vector_deviation");
    for k in 1..=d {
        let _ = write!(csv, ",s{k}");
    }
    csv.push('\n');
    for r in &traj.records {
        let _ = write!(csv, "{},{},{}", r.step, r.rel_distance, r.vector_deviation);
        for s in &r.singular_values {
            let _ = write!(csv, ",{s}");
        }
        csv.push('\n');
    }
    write_text(&out.join("trajectory.csv"), &csv)?;

    // `logistic` starts from ε; `printed` uses ω = 1 / learning rate in the
    // published expression and starts from ω instead.
    let omega = 1.0 / sim.learning_rate;
    let mut csv = String::from("step,mode,s_hat,simulated,logistic,printed\n");
    for r in &traj.records {
        for (k, &s_hat) in traj.teacher_spectrum.iter().enumerate() {
            let t = r.step as f64;
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{}",
                r.step,
                k + 1,
                s_hat,
                r.singular_values[k],
                ts_logistic(s_hat, sim.epsilon, sim.learning_rate, t),
                ts_closed_form(s_hat, omega, t)
            );
        }
    }
    write_text(&out.join("closed_form.csv"), &csv)?;

    if config.emit_plots {
        let mut series = Vec::new();
        for (k, &s_hat) in traj.teacher_spectrum.iter().enumerate() {
            let sim_pts = traj.records.iter().map(|r| (r.step as f64, r.singular_values[k])).collect();
            let cf_pts = traj
                .records
                .iter()
                .map(|r| (r.step as f64, ts_logistic(s_hat, sim.epsilon, sim.learning_rate, r.step as f64)))
                .collect();
            series.push(Series::new(format!("s{} simulated", k + 1), sim_pts));
            series.push(Series::new(format!("s{} closed form", k + 1), cf_pts).dashed());
        }
        let svg = line_chart("Student singular values", "step", "singular value", &series, true);
        write_text(&out.join("dynamics_overlay.svg"), &svg)?;
    }
    let last = traj.last();
    println!(
        "final relative distance {:.3e}, max vector deviation {:.3e} after {} steps",
        last.rel_distance,
        traj.max_vector_deviation(),
        last.step
    );
    Ok(())
}
