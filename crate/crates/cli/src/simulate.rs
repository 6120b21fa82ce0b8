//! `msavg simulate`: run the risk experiment and write table, figure data and manifest.

use std::fs;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::Context;
use msavg::simulation::{run_experiment, simulate_dataset, truncation_bounds, CellReport, RiskReport};

use crate::config::{ExperimentConfig, Scale};
use crate::data::write_dataset;
use crate::exit::{CliResult, Failure};
use crate::output::{csv_bytes, num, write_atomic};

pub struct SimulateArgs<'a> {
    pub config: &'a Path,
    pub scale: Option<Scale>,
    pub out: &'a Path,
    pub seed: Option<u64>,
    pub export_data: bool,
}

pub const RISK_TABLE: &str = "risk_table.csv";
pub const MANIFEST: &str = "manifest.txt";

pub fn figure_file(decay: f64) -> String {
    format!("fig_decay_{decay}.csv")
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub fn run(args: SimulateArgs<'_>) -> CliResult<()> {
    let text = fs::read_to_string(args.config)
        .with_context(|| format!("reading {}", args.config.display()))
        .map_err(Failure::usage)?;
    let mut cfg = ExperimentConfig::parse(&text)
        .with_context(|| format!("in {}", args.config.display()))
        .map_err(Failure::usage)?;
    cfg.apply_scale(args.scale);
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let cells = cfg.cells().map_err(Failure::usage)?;
    fs::create_dir_all(args.out)
        .with_context(|| format!("creating {}", args.out.display()))
        .map_err(Failure::data)?;

    let started = unix_now();
    let clock = Instant::now();
    let report = run_experiment(&cells)?;
    let elapsed = clock.elapsed();

    let cells_ref = &cells;
    let write_all = || -> anyhow::Result<()> {
        let mut files = vec![RISK_TABLE.to_string()];
        write_atomic(&args.out.join(RISK_TABLE), &risk_table(&report)?)?;
        for &d in &cfg.decay_list {
            let name = figure_file(d);
            write_atomic(&args.out.join(&name), &figure_data(&report, &cfg, d)?)?;
            files.push(name);
        }
        let mut exports = Vec::new();
        if args.export_data {
            fs::create_dir_all(args.out.join("data"))?;
            for c in cells_ref {
                let name = format!("data/n{}_decay{}_r2_{}.csv", c.n, c.decay, c.r2);
                let sim = simulate_dataset(c, 0)?;
                write_dataset(&args.out.join(&name), &sim.data)?;
                let k: Vec<String> = c.spec().dims().iter().map(|k| k.to_string()).collect();
                exports.push((name, k.join(",")));
            }
        }
        let text = manifest(&cfg, args.scale, &report, &files, &exports, started, elapsed.as_secs_f64());
        write_atomic(&args.out.join(MANIFEST), text.as_bytes())
    };
    write_all().map_err(Failure::data)?;

    let failed: usize = report.cells.iter().map(|c| c.nonconverged).sum();
    if failed > 0 {
        return Err(Failure::numerical(anyhow::anyhow!(
            "{failed} replicates hit the solver iteration cap and were left out of the means; see {}",
            args.out.join(MANIFEST).display()
        )));
    }
    Ok(())
}

fn risk_table(report: &RiskReport) -> anyhow::Result<Vec<u8>> {
    let header: Vec<String> = [
        "n",
        "decay",
        "r2",
        "models",
        "j_max",
        "iterations",
        "used",
        "nonconverged",
        "dominance_violations",
        "mean_loss_mma",
        "se_loss_mma",
        "mean_loss_msa",
        "se_loss_msa",
        "log_risk_mma",
        "log_risk_msa",
        "log_risk_diff",
        "se_log_diff",
        "se_log_diff_paired",
        "mean_alpha",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let rows: Vec<Vec<String>> = report
        .cells
        .iter()
        .map(|c: &CellReport| {
            let k = &c.config;
            vec![
                k.n.to_string(),
                k.decay.to_string(),
                k.r2.to_string(),
                k.models.to_string(),
                k.j_max.to_string(),
                k.iterations.to_string(),
                c.used.to_string(),
                c.nonconverged.to_string(),
                c.dominance_violations.to_string(),
                num(c.mean_loss_mma),
                num(c.se_loss_mma),
                num(c.mean_loss_msa),
                num(c.se_loss_msa),
                num(c.log_risk_mma),
                num(c.log_risk_msa),
                num(c.log_risk_diff),
                num(c.se_log_diff),
                num(c.se_log_diff_paired),
                num(c.mean_alpha),
            ]
        })
        .collect();
    csv_bytes(&header, &rows)
}

/// x = R^2, one difference column and one standard-error column per sample size.
fn figure_data(report: &RiskReport, cfg: &ExperimentConfig, decay: f64) -> anyhow::Result<Vec<u8>> {
    let mut header = vec!["r2".to_string()];
    for n in &cfg.n_list {
        header.push(format!("diff_n{n}"));
        header.push(format!("se_n{n}"));
    }
    let r2s = msavg::simulation::r2_sweep(cfg.r2_min, cfg.r2_max, cfg.r2_step)?;
    let mut rows = Vec::new();
    for r2 in r2s {
        let mut row = vec![r2.to_string()];
        for &n in &cfg.n_list {
            let c = report.find(n, decay, r2).context("missing cell")?;
            row.push(num(c.log_risk_diff));
            row.push(num(c.se_log_diff));
        }
        rows.push(row);
    }
    csv_bytes(&header, &rows)
}

fn manifest(
    cfg: &ExperimentConfig,
    scale: Option<Scale>,
    report: &RiskReport,
    files: &[String],
    exports: &[(String, String)],
    started: u64,
    elapsed: f64,
) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
    kv("tool", "msavg simulate".into());
    kv("version", env!("CARGO_PKG_VERSION").into());
    kv(
        "scale",
        match scale {
            Some(Scale::Desk) => "desk",
            Some(Scale::Paper) => "paper",
            None => "config",
        }
        .into(),
    );
    kv("started_unix", started.to_string());
    kv("finished_unix", unix_now().to_string());
    kv("elapsed_seconds", format!("{elapsed:.3}"));
    kv("threads", rayon::current_num_threads().to_string());
    for (k, v) in cfg.echo() {
        kv(&format!("config.{k}"), v);
    }
    kv("files", files.join(","));
    kv("cells", report.cells.len().to_string());
    kv("total_nonconverged", report.cells.iter().map(|c| c.nonconverged).sum::<usize>().to_string());
    kv(
        "total_dominance_violations",
        report.cells.iter().map(|c| c.dominance_violations).sum::<usize>().to_string(),
    );
    for (i, c) in report.cells.iter().enumerate() {
        let k = &c.config;
        let t = truncation_bounds(k.decay, k.c(), k.j_max, k.bias);
        kv(
            &format!("cell.{:04}", i + 1),
            format!(
                "n={} decay={} r2={} models={} j_max={} nonconverged={} dominance_violations={} tail_variance_bound={} tail_mean_bound={}",
                k.n,
                k.decay,
                k.r2,
                k.models,
                k.j_max,
                c.nonconverged,
                c.dominance_violations,
                num(t.variance_bound),
                num(t.mean_bound)
            ),
        );
    }
    for (name, k) in exports {
        kv(&format!("export.{name}"), format!("replicate=0 k={k}"));
    }
    out
}
