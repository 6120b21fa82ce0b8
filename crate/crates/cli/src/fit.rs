//! `msavg fit`: MMA and MSA weights for a dataset file.

use std::path::Path;

use msavg::optimizer::{solve_mma, solve_msa, AveragingSolution, DEFAULT_TOL};
use msavg::regression::{fit_nested_models, NestedModelSpec};

use crate::data::read_dataset;
use crate::exit::{CliResult, Failure};
use crate::output::{num, num_list, write_atomic};

pub struct FitArgs<'a> {
    pub data: &'a Path,
    pub k: Vec<usize>,
    pub sigma2: Option<f64>,
    pub out: &'a Path,
}

fn block(prefix: &str, s: &AveragingSolution) -> String {
    format!(
        "{prefix}.weights = {}\n{prefix}.alpha = {}\n{prefix}.criterion = {}\n{prefix}.kkt_residual = {}\n\
         {prefix}.iterations = {}\n{prefix}.converged = {}\n",
        num_list(&s.weights),
        num(s.alpha),
        num(s.criterion_value),
        num(s.kkt_residual),
        s.iterations,
        s.converged
    )
}

/// Writes the solution file; returns a numerical failure after writing if either solve hit its cap.
pub fn run(args: FitArgs<'_>) -> CliResult<()> {
    let data = read_dataset(args.data).map_err(Failure::data)?;
    let spec = NestedModelSpec::new(args.k)?;
    let fits = fit_nested_models(&data, &spec)?;
    let (sigma2, source) = match args.sigma2 {
        Some(s) => (s, "given"),
        None => (fits.sigma2_hat(), "estimate"),
    };
    let mma = solve_mma(&fits, sigma2, DEFAULT_TOL)?;
    let msa = solve_msa(&fits, sigma2, DEFAULT_TOL)?;

    let k_list = spec.dims().iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",");
    let mut text = format!(
        "version = {}\nn = {}\np = {}\nk = {k_list}\nsigma2 = {}\nsigma2_source = {source}\n",
        env!("CARGO_PKG_VERSION"),
        data.n(),
        data.p(),
        num(sigma2)
    );
    text.push_str(&block("mma", &mma));
    text.push_str(&block("msa", &msa));
    write_atomic(args.out, text.as_bytes()).map_err(Failure::data)?;

    for (name, s) in [("mma", &mma), ("msa", &msa)] {
        if !s.converged {
            return Err(Failure::numerical(anyhow::anyhow!(
                "{name} solve stopped after {} iterations with stationarity {:.3e}; best iterate written",
                s.iterations,
                s.kkt_residual
            )));
        }
    }
    Ok(())
}
