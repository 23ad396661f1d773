//! Bounded solutions of `x′ = Ax + f` as the convolution `x(t) = ∫ 𝒢(t−s)·f(s) ds`.

use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::greens::GreensFunction;
use crate::quadrature::{integrate, QuadratureSpec};

/// Initial panels per side of the jump at `s = t`.
const INITIAL_SPLIT: usize = 16;

/// A bounded forcing term sampled at arbitrary times. Implementations must be
/// reentrant.
pub trait Forcing {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64) -> Vec<Complex64>;
    /// An upper bound for `sup ‖f(t)‖`, when known.
    fn bound_hint(&self) -> Option<f64> {
        None
    }
}

impl<F: Forcing + ?Sized> Forcing for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, t: f64) -> Vec<Complex64> {
        (**self).eval(t)
    }
    fn bound_hint(&self) -> Option<f64> {
        (**self).bound_hint()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantForcing(pub Vec<Complex64>);

impl ConstantForcing {
    pub fn from_real(values: &[f64]) -> Self {
        Self(values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }
}

impl Forcing for ConstantForcing {
    fn dim(&self) -> usize {
        self.0.len()
    }
    fn eval(&self, _t: f64) -> Vec<Complex64> {
        self.0.clone()
    }
    fn bound_hint(&self) -> Option<f64> {
        Some(self.0.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt())
    }
}

/// Wraps a closure.
pub struct FnForcing<F> {
    dim: usize,
    f: F,
    bound: Option<f64>,
}

impl<F: Fn(f64) -> Vec<Complex64>> FnForcing<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f, bound: None }
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self
    }
}

impl<F: Fn(f64) -> Vec<Complex64>> Forcing for FnForcing<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, t: f64) -> Vec<Complex64> {
        (self.f)(t)
    }
    fn bound_hint(&self) -> Option<f64> {
        self.bound
    }
}

/// `(cos ωt, sin ωt, cos ωt, …)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigForcing {
    pub dim: usize,
    pub omega: f64,
}

impl Forcing for TrigForcing {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, t: f64) -> Vec<Complex64> {
        let (s, c) = (self.omega * t).sin_cos();
        (0..self.dim)
            .map(|k| Complex64::new(if k % 2 == 0 { c } else { s }, 0.0))
            .collect()
    }
    fn bound_hint(&self) -> Option<f64> {
        Some((self.dim as f64 / 2.0).ceil().sqrt())
    }
}

/// Piecewise-linear interpolation of tabulated samples, held constant
/// outside the table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableForcing {
    times: Vec<f64>,
    values: Vec<Vec<Complex64>>,
}

impl TableForcing {
    pub fn new(times: Vec<f64>, values: Vec<Vec<Complex64>>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::Parse("forcing table needs one value row per time".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Parse("forcing table times must be strictly increasing".into()));
        }
        let dim = values[0].len();
        if dim == 0 || values.iter().any(|v| v.len() != dim) {
            return Err(Error::Parse("forcing table rows must have equal, nonzero width".into()));
        }
        if times.iter().any(|t| !t.is_finite()) || values.iter().flatten().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Parse("forcing table contains non-finite values".into()));
        }
        Ok(Self { times, values })
    }

    /// Parses `t, re f₁, im f₁, …` rows. Blank lines, `#` comments and a
    /// non-numeric header line are skipped.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|s| s.parse::<f64>()).collect();
            let nums = match parsed {
                Ok(v) => v,
                Err(_) if times.is_empty() && values.is_empty() && lineno == 0 => continue,
                Err(e) => return Err(Error::Parse(format!("line {}: {e}", lineno + 1))),
            };
            if nums.len() < 3 || nums.len() % 2 == 0 {
                return Err(Error::Parse(format!(
                    "line {}: expected t followed by re/im pairs, got {} fields",
                    lineno + 1,
                    nums.len()
                )));
            }
            times.push(nums[0]);
            values.push(nums[1..].chunks(2).map(|p| Complex64::new(p[0], p[1])).collect());
        }
        Self::new(times, values)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read forcing file {}: {e}", path.display())))?;
        Self::from_csv(&text)
    }

    pub fn window(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().expect("non-empty"))
    }

    /// Whether evaluating over `[lo, hi]` relies on the constant extension.
    pub fn extends_beyond(&self, lo: f64, hi: f64) -> bool {
        let (a, b) = self.window();
        lo < a || hi > b
    }
}

impl Forcing for TableForcing {
    fn dim(&self) -> usize {
        self.values[0].len()
    }
    fn eval(&self, t: f64) -> Vec<Complex64> {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.values[0].clone();
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1].clone();
        }
        let k = self.times.partition_point(|&x| x <= t);
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        self.values[k - 1]
            .iter()
            .zip(&self.values[k])
            .map(|(a, b)| a * (1.0 - w) + b * w)
            .collect()
    }
    fn bound_hint(&self) -> Option<f64> {
        // Linear interpolation never exceeds the largest tabulated norm.
        self.values
            .iter()
            .map(|v| v.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt())
            .reduce(f64::max)
    }
}

fn check_dims(g: &GreensFunction, f: &dyn Forcing) -> Result<()> {
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch(format!(
            "forcing has dimension {}, coefficient matrix is {}x{}",
            f.dim(),
            g.dim(),
            g.dim()
        )));
    }
    Ok(())
}

/// Truncation window `[t − T, t + T]` used for `x(t)`.
pub fn solution_window(g: &GreensFunction, t: f64, q: &QuadratureSpec) -> (f64, f64) {
    let horizon = q.horizon_for_gap(g.split().gap);
    (t - horizon, t + horizon)
}

/// The bounded solution at `t`.
pub fn bounded_solution(g: &GreensFunction, f: &dyn Forcing, t: f64, q: &QuadratureSpec) -> Result<Vec<Complex64>> {
    check_dims(g, f)?;
    if !t.is_finite() {
        return Err(Error::InvalidInput(format!("t must be finite, got {t}")));
    }
    let (lo, hi) = solution_window(g, t, q);
    let r = integrate(
        |s| {
            let v = f.eval(s);
            if v.len() != g.dim() {
                return Err(Error::DimensionMismatch("forcing returned a vector of the wrong length".into()));
            }
            g.at(t - s)?.mul_vec(&v)
        },
        &[lo, t, hi],
        q,
        INITIAL_SPLIT,
    )?;
    Ok(r.value)
}

/// `max_t ‖(x(t+h) − x(t−h))/2h − A·x(t) − f(t)‖` over the grid.
pub fn residual_check(g: &GreensFunction, f: &dyn Forcing, q: &QuadratureSpec, grid: &[f64], h: f64) -> Result<f64> {
    Ok(residuals(g, f, q, grid, h)?.into_iter().fold(0.0, f64::max))
}

/// Per-point residuals for [`residual_check`].
pub fn residuals(g: &GreensFunction, f: &dyn Forcing, q: &QuadratureSpec, grid: &[f64], h: f64) -> Result<Vec<f64>> {
    check_dims(g, f)?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidInput(format!("step must be positive, got {h}")));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[1] - w[0] < 2.0 * h) {
        return Err(Error::InvalidInput("grid spacing must be at least twice the step".into()));
    }
    grid.iter()
        .map(|&t| {
            let xp = bounded_solution(g, f, t + h, q)?;
            let xm = bounded_solution(g, f, t - h, q)?;
            let x = bounded_solution(g, f, t, q)?;
            let ax = g.matrix().mul_vec(&x)?;
            let ft = f.eval(t);
            let r = (0..x.len())
                .map(|i| ((xp[i] - xm[i]) / (2.0 * h) - ax[i] - ft[i]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            Ok(r)
        })
        .collect()
}
