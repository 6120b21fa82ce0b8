//! Flat `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored. Every key is optional; missing
//! keys take the desk-scale defaults of the reference experiment.

use std::collections::BTreeMap;
use std::fmt;

use anyhow::{anyhow, bail, Context};
use msavg::simulation::{
    default_j_max, r2_sweep, BiasKind, Sigma2Mode, SimulationConfig, DESK_ITERATIONS, PAPER_DECAYS, PAPER_ITERATIONS,
    PAPER_SAMPLE_SIZES,
};
use msavg::DEFAULT_TOL;

/// How the tail of the data-generating sum is truncated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JMaxRule {
    /// `max(1000, 3 M)`.
    Default,
    /// `j_max = M`: no unobserved tail at all.
    Models,
    Fixed(usize),
}

impl JMaxRule {
    pub fn j_max(self, models: usize) -> usize {
        match self {
            JMaxRule::Default => default_j_max(models),
            JMaxRule::Models => models,
            JMaxRule::Fixed(j) => j,
        }
    }
}

impl fmt::Display for JMaxRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JMaxRule::Default => f.write_str("default"),
            JMaxRule::Models => f.write_str("models"),
            JMaxRule::Fixed(j) => write!(f, "{j}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Desk,
    Paper,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_list: Vec<usize>,
    pub decay_list: Vec<f64>,
    pub r2_min: f64,
    pub r2_max: f64,
    pub r2_step: f64,
    pub iterations: usize,
    pub seed: u64,
    pub sigma2_mode: Sigma2Mode,
    pub j_max_rule: JMaxRule,
    pub bias: BiasKind,
    pub tol: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_list: PAPER_SAMPLE_SIZES.to_vec(),
            decay_list: PAPER_DECAYS.to_vec(),
            r2_min: 0.1,
            r2_max: 0.9,
            r2_step: 0.1,
            iterations: DESK_ITERATIONS,
            seed: 1,
            sigma2_mode: Sigma2Mode::Estimate,
            j_max_rule: JMaxRule::Default,
            bias: BiasKind::Exponential,
            tol: DEFAULT_TOL,
        }
    }
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> anyhow::Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    let out = v
        .split(',')
        .map(|s| s.trim().parse::<T>().with_context(|| format!("{key}: bad entry {s:?}")))
        .collect::<anyhow::Result<Vec<T>>>()?;
    if out.is_empty() {
        bail!("{key}: empty list");
    }
    Ok(out)
}

fn scalar<T: std::str::FromStr>(key: &str, v: &str) -> anyhow::Result<T>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    v.parse::<T>().with_context(|| format!("{key}: cannot parse {v:?}"))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let mut seen = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value, got {raw:?}", lineno + 1))?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if seen.insert(k.clone(), v).is_some() {
                bail!("line {}: duplicate key {k}", lineno + 1);
            }
        }
        let mut cfg = Self::default();
        for (k, v) in &seen {
            let v = v.as_str();
            match k.as_str() {
                "n_list" => cfg.n_list = list(k, v)?,
                "decay_list" => cfg.decay_list = list(k, v)?,
                "r2_min" => cfg.r2_min = scalar(k, v)?,
                "r2_max" => cfg.r2_max = scalar(k, v)?,
                "r2_step" => cfg.r2_step = scalar(k, v)?,
                "iterations" => cfg.iterations = scalar(k, v)?,
                "seed" => cfg.seed = scalar(k, v)?,
                "tol" => cfg.tol = scalar(k, v)?,
                "sigma2_mode" => {
                    cfg.sigma2_mode = match v {
                        "estimate" => Sigma2Mode::Estimate,
                        "true_value" => Sigma2Mode::TrueValue,
                        _ => bail!("sigma2_mode: expected estimate or true_value, got {v:?}"),
                    }
                }
                "j_max_rule" => {
                    cfg.j_max_rule = match v {
                        "default" => JMaxRule::Default,
                        "models" => JMaxRule::Models,
                        _ => JMaxRule::Fixed(
                            v.parse().with_context(|| format!("j_max_rule: expected default, models or an integer, got {v:?}"))?,
                        ),
                    }
                }
                "bias" => {
                    cfg.bias = match v {
                        "exp" => BiasKind::Exponential,
                        "linear" => BiasKind::Linear,
                        _ => bail!("bias: expected exp or linear, got {v:?}"),
                    }
                }
                _ => bail!("unknown key {k}"),
            }
        }
        Ok(cfg)
    }

    pub fn apply_scale(&mut self, scale: Option<Scale>) {
        match scale {
            Some(Scale::Desk) => self.iterations = DESK_ITERATIONS,
            Some(Scale::Paper) => self.iterations = PAPER_ITERATIONS,
            None => {}
        }
    }

    /// One simulation cell per `(decay, n, R^2)`, decays outermost.
    pub fn cells(&self) -> anyhow::Result<Vec<SimulationConfig>> {
        let r2s = r2_sweep(self.r2_min, self.r2_max, self.r2_step)?;
        let mut out = Vec::with_capacity(self.decay_list.len() * self.n_list.len() * r2s.len());
        for &decay in &self.decay_list {
            for &n in &self.n_list {
                for &r2 in &r2s {
                    let cell = || -> msavg::Result<SimulationConfig> {
                        let mut c = SimulationConfig::new(n, decay, r2, self.iterations, self.seed)?;
                        c.sigma2_mode = self.sigma2_mode;
                        c.bias = self.bias;
                        c.tol = self.tol;
                        c.j_max = self.j_max_rule.j_max(c.models);
                        c.validate()?;
                        Ok(c)
                    };
                    out.push(cell().map_err(|e| anyhow!("cell n={n} decay={decay} r2={r2}: {e}"))?);
                }
            }
        }
        Ok(out)
    }

    /// `key = value` lines echoing every setting.
    pub fn echo(&self) -> Vec<(String, String)> {
        let join = |v: Vec<String>| v.join(",");
        vec![
            ("n_list".into(), join(self.n_list.iter().map(|n| n.to_string()).collect())),
            ("decay_list".into(), join(self.decay_list.iter().map(|d| d.to_string()).collect())),
            ("r2_min".into(), self.r2_min.to_string()),
            ("r2_max".into(), self.r2_max.to_string()),
            ("r2_step".into(), self.r2_step.to_string()),
            ("iterations".into(), self.iterations.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("sigma2_mode".into(), self.sigma2_mode.to_string()),
            ("j_max_rule".into(), self.j_max_rule.to_string()),
            ("bias".into(), self.bias.to_string()),
            ("tol".into(), format!("{:e}", self.tol)),
        ]
    }
}
