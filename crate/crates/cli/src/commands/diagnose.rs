use std::fmt::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sgcl_core::augment::augment;
use sgcl_core::diagnostics::{eigen_alignment_residual, pearson_offdiag, DEFAULT_MAX_NODES};
use sgcl_core::encoder::{encoder_forward, load_checkpoint};
use sgcl_core::evaluator::final_embeddings;
use sgcl_core::graph::normalized_adjacency;
use sgcl_core::predictor::{center_and_normalize, inferential_predictor};
use sgcl_core::{seeded_rng, ForwardMode};

use crate::config::Manifest;
use crate::error::CliError;
use crate::output::{create_dir, num, write_text};
use crate::svg::heatmap;

#[derive(Debug, Serialize)]
struct Summary {
    s_bar: f64,
    d_bar: f64,
    alignment_degenerate: usize,
    mean_abs_offdiag: f64,
    pearson_nodes: usize,
    pearson_constant_rows: usize,
    median_residual: Option<f64>,
    residual_degenerate: usize,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn run(checkpoint: &Path, config_path: &Path, output_dir: Option<PathBuf>) -> Result<(), CliError> {
    let config = super::load_run_config(config_path, &["diagnose", "train", "ablate"], output_dir)?;
    if !checkpoint.is_dir() {
        return Err(CliError::Io(format!("checkpoint directory {} not found", checkpoint.display())));
    }
    let (enc, params) = load_checkpoint(checkpoint)?;
    let bundle = config.dataset.load()?;
    if enc.in_dim != bundle.feature_dim() {
        return Err(CliError::Config(format!(
            "checkpoint expects {} features, dataset has {}",
            enc.in_dim,
            bundle.feature_dim()
        )));
    }
    let out = config.output_dir.clone();
    create_dir(&out)?;
    Manifest::new("diagnose", &config, Some(checkpoint))?.write(&out)?;

    // two augmented views of the same nodes, as seen during training
    let mut rng = seeded_rng(config.train.seed);
    let mut view_repr = || -> Result<_, CliError> {
        let view = augment(&bundle, &config.train.augment, &mut rng)?;
        let adj = normalized_adjacency(&view.graph);
        Ok(encoder_forward(&enc, &params, &adj, &view.features, ForwardMode::Eval)?.0)
    };
    let h1 = view_repr()?;
    let h2 = view_repr()?;

    let mut csv = String::from("node,cosine,distance,length_ratio\n");
    let (mut s_sum, mut d_sum, mut used) = (0.0, 0.0, 0usize);
    for (i, (a, b)) in h1.row_iter().zip(h2.row_iter()).enumerate() {
        let (na, nb) = (norm(a), norm(b));
        let dist = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        if na < 1e-12 || nb < 1e-12 {
            let _ = writeln!(csv, "{i},,{dist},");
            continue;
        }
        let cos = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb);
        s_sum += cos;
        d_sum += dist;
        used += 1;
        let _ = writeln!(csv, "{i},{cos},{dist},{}", na / nb);
    }
    write_text(&out.join("alignment.csv"), &csv)?;

    let h = final_embeddings(&enc, &params, &bundle)?;
    let pearson = pearson_offdiag(&h, DEFAULT_MAX_NODES, &mut seeded_rng(config.train.seed))?;
    let mut csv = String::from("node");
    for n in &pearson.nodes {
        let _ = write!(csv, ",{n}");
    }
    csv.push('\n');
    let mut cells = Vec::with_capacity(pearson.nodes.len());
    for (r, n) in pearson.nodes.iter().enumerate() {
        let row = pearson.matrix.row(r);
        let _ = write!(csv, "{n}");
        for v in row {
            let _ = write!(csv, ",{v}");
        }
        csv.push('\n');
        cells.push(row.to_vec());
    }
    write_text(&out.join("pearson.csv"), &csv)?;
    if config.emit_plots {
        let title = format!("Node correlation, mean |offdiag| = {:.3}", pearson.mean_abs_offdiag);
        write_text(&out.join("pearson_heatmap.svg"), &heatmap(&title, &cells))?;
    }

    // covariance predictor from an augmented view, tested on the clean embeddings
    let p = inferential_predictor(&center_and_normalize(&h2)?.rows)?;
    let resid = eigen_alignment_residual(&p, &h)?;
    let mut csv = String::from("node,lambda,residual\n");
    for (i, r) in resid.per_node.iter().enumerate() {
        let _ = writeln!(csv, "{i},{},{}", num(r.map(|x| x.0)), num(r.map(|x| x.1)));
    }
    write_text(&out.join("eigen_residuals.csv"), &csv)?;

    let summary = Summary {
        s_bar: if used > 0 { s_sum / used as f64 } else { f64::NAN },
        d_bar: if used > 0 { d_sum / used as f64 } else { f64::NAN },
        alignment_degenerate: h1.rows() - used,
        mean_abs_offdiag: pearson.mean_abs_offdiag,
        pearson_nodes: pearson.nodes.len(),
        pearson_constant_rows: pearson.constant_rows,
        median_residual: resid.median_residual(),
        residual_degenerate: resid.degenerate,
    };
    let text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Numeric(e.to_string()))?;
    write_text(&out.join("diagnostics.json"), &(text.clone() + "\n"))?;
    println!("{text}");
    Ok(())
}
