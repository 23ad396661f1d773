//! Random-ensemble experiment: draws matrices from the unit rectangle,
//! verifies the Green's-function identities, compares with the
//! eigendecomposition oracle and evaluates the norm bound of the differential.

use rand::RngCore;
use serde::Serialize;

use crate::ensemble::{random_rectangle_matrix, rng_from_seed};
use crate::error::{Error, Result};
use crate::greens::{GreensFunction, GreensReport};
use crate::quadrature::QuadratureSpec;
use crate::sensitivity::condition_bound;

/// Give up on a trial after this many consecutive draws without a dichotomy.
pub const MAX_RESAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    /// Nonzero times; oracle deviations are reported at each, identities
    /// are verified at each distinct `|t|`.
    pub t_grid: Vec<f64>,
    pub axis_tol: Option<f64>,
    pub quad: QuadratureSpec,
    /// Evaluate the differential norm bound at `t = ±1`.
    pub with_bound: bool,
}

impl ExperimentConfig {
    pub fn new(n: usize, trials: usize, seed: u64) -> Self {
        Self {
            n,
            trials,
            seed,
            t_grid: vec![-2.0, -1.0, -0.5, 0.5, 1.0, 2.0],
            axis_tol: None,
            quad: QuadratureSpec::default(),
            with_bound: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.trials == 0 {
            return Err(Error::InvalidInput("n and trials must be at least 1".into()));
        }
        if self.t_grid.is_empty() || self.t_grid.iter().any(|&t| t == 0.0 || !t.is_finite()) {
            return Err(Error::InvalidInput("t grid must be non-empty with finite nonzero entries".into()));
        }
        self.quad.validate()
    }

    fn verify_samples(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.t_grid.iter().map(|t| t.abs()).collect();
        s.sort_by(f64::total_cmp);
        s.dedup();
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub trial: usize,
    pub n: usize,
    /// Seed of the trial's own generator; rerunning one trial needs only this.
    pub seed: u64,
    /// Draws rejected for lack of a dichotomy before this one.
    pub resamples: usize,
    pub report: GreensReport,
    /// `max` of the relative oracle deviation at `t = ±1`; `NaN` when the
    /// oracle is unavailable.
    pub oracle_deviation: f64,
    /// Relative oracle deviation at each grid time.
    pub oracle_by_t: Vec<(f64, f64)>,
    pub bound_plus: Option<f64>,
    pub bound_minus: Option<f64>,
}

impl TrialRow {
    pub fn residual_max(&self) -> f64 {
        self.report.max()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub trials: usize,
    pub resampled: usize,
    pub median_bound: Option<f64>,
    pub median_oracle_deviation: f64,
    pub residual_q50: f64,
    pub residual_q90: f64,
    pub residual_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub rng: &'static str,
    pub rows: Vec<TrialRow>,
    pub summary: Summary,
}

/// Per-trial seeds, drawn from a generator seeded with the base seed.
pub fn trial_seeds(seed: u64, trials: usize) -> Vec<u64> {
    let mut rng = rng_from_seed(seed);
    (0..trials).map(|_| rng.next_u64()).collect()
}

/// Draws a matrix with a dichotomy, returning it with the rejection count.
pub fn draw_dichotomic(n: usize, seed: u64, axis_tol: Option<f64>) -> Result<(GreensFunction, usize)> {
    let mut rng = rng_from_seed(seed);
    for rejected in 0..=MAX_RESAMPLES {
        let a = random_rectangle_matrix(n, &mut rng);
        match GreensFunction::new(a, axis_tol) {
            Ok(g) => return Ok((g, rejected)),
            Err(Error::Dichotomy { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::InvalidInput(format!(
        "no matrix with a dichotomy after {MAX_RESAMPLES} draws (seed {seed})"
    )))
}

pub fn run_trial(config: &ExperimentConfig, trial: usize, seed: u64) -> Result<TrialRow> {
    let (g, resamples) = draw_dichotomic(config.n, seed, config.axis_tol)?;
    let report = g.verify(&config.verify_samples())?;
    let deviation = |t: f64| match g.oracle_deviation(t) {
        Ok(d) => Ok(d),
        Err(Error::OracleUnavailable { .. }) => Ok(f64::NAN),
        Err(e) => Err(e),
    };
    let oracle_by_t = config
        .t_grid
        .iter()
        .map(|&t| Ok((t, deviation(t)?)))
        .collect::<Result<Vec<_>>>()?;
    let at_unit = |t: f64| {
        oracle_by_t
            .iter()
            .find(|p| p.0 == t)
            .map_or_else(|| deviation(t), |p| Ok(p.1))
    };
    let (dp, dm) = (at_unit(1.0)?, at_unit(-1.0)?);
    let oracle_deviation = if dp.is_nan() || dm.is_nan() { f64::NAN } else { dp.max(dm) };
    let (bound_plus, bound_minus) = if config.with_bound {
        (
            Some(condition_bound(&g, 1.0, &config.quad)?.bound),
            Some(condition_bound(&g, -1.0, &config.quad)?.bound),
        )
    } else {
        (None, None)
    };
    Ok(TrialRow {
        trial,
        n: config.n,
        seed,
        resamples,
        report,
        oracle_deviation,
        oracle_by_t,
        bound_plus,
        bound_minus,
    })
}

/// Median of the finite entries; `NaN` when there are none.
pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Linear-interpolation quantile of the finite entries.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

pub fn summarize(rows: &[TrialRow]) -> Summary {
    let residuals: Vec<f64> = rows.iter().map(TrialRow::residual_max).collect();
    let bounds: Vec<f64> = rows
        .iter()
        .flat_map(|r| [r.bound_plus, r.bound_minus])
        .flatten()
        .collect();
    let devs: Vec<f64> = rows.iter().map(|r| r.oracle_deviation).collect();
    Summary {
        trials: rows.len(),
        resampled: rows.iter().map(|r| r.resamples).sum(),
        median_bound: (!bounds.is_empty()).then(|| median(&bounds)),
        median_oracle_deviation: median(&devs),
        residual_q50: quantile(&residuals, 0.5),
        residual_q90: quantile(&residuals, 0.9),
        residual_max: residuals.iter().copied().fold(0.0, f64::max),
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let rows = trial_seeds(config.seed, config.trials)
        .into_iter()
        .enumerate()
        .map(|(i, s)| run_trial(config, i, s))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&rows);
    Ok(ExperimentResult {
        config: config.clone(),
        rng: crate::ensemble::RNG_NAME,
        rows,
        summary,
    })
}
