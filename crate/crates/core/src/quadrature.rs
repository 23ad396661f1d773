//! Globally adaptive Gauss–Kronrod (7/15) quadrature for vector-valued
//! integrands over a union of finite segments.
//!
//! Segment endpoints are never sampled, so integrands may jump there.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Truncation horizon and accuracy controls for the infinite-interval
/// integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureSpec {
    /// Truncation length `T` beyond the jump points; `None` picks
    /// `HORIZON_DECAY_UNITS / gap`.
    pub horizon: Option<f64>,
    pub rel_tol: f64,
    pub max_panels: usize,
}

/// Default horizon in units of `1/gap`; tails are then below `e^{−40}`.
pub const HORIZON_DECAY_UNITS: f64 = 40.0;

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            horizon: None,
            rel_tol: 1e-10,
            max_panels: 20_000,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if let Some(h) = self.horizon {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidInput(format!("horizon must be positive, got {h}")));
            }
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::InvalidInput(format!("rel_tol must lie in (0, 1), got {}", self.rel_tol)));
        }
        if self.max_panels < 16 {
            return Err(Error::InvalidInput(format!("max_panels must be at least 16, got {}", self.max_panels)));
        }
        Ok(())
    }

    /// Horizon to use for a spectrum with the given gap.
    pub fn horizon_for_gap(&self, gap: f64) -> f64 {
        self.horizon.unwrap_or(HORIZON_DECAY_UNITS / gap)
    }
}

#[derive(Debug, Clone)]
pub struct QuadResult {
    pub value: Vec<Complex64>,
    pub error: f64,
    pub panels: usize,
    pub evaluations: usize,
}

// Kronrod 15-point abscissae (non-negative half) and weights; every other
// abscissa from index 1 is a Gauss 7-point node.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

struct Panel {
    a: f64,
    b: f64,
    value: Vec<Complex64>,
    error: f64,
    abs_mass: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
}

fn gk15<F>(f: &F, a: f64, b: f64) -> Result<Panel>
where
    F: Fn(f64) -> Result<Vec<Complex64>>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let dim = fc.len();
    let mut kronrod: Vec<Complex64> = fc.iter().map(|z| z * WGK[7]).collect();
    let mut gauss: Vec<Complex64> = fc.iter().map(|z| z * WG[3]).collect();
    let mut abs_mass = norm(&fc) * WGK[7];
    for (j, (&x, &wk)) in XGK.iter().zip(&WGK).take(7).enumerate() {
        let dx = half * x;
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        if f1.len() != dim || f2.len() != dim {
            return Err(Error::DimensionMismatch("integrand changed length".into()));
        }
        abs_mass += wk * (norm(&f1) + norm(&f2));
        let gauss_weight = if j % 2 == 1 { Some(WG[j / 2]) } else { None };
        for i in 0..dim {
            let s = f1[i] + f2[i];
            kronrod[i] += s * wk;
            if let Some(wg) = gauss_weight {
                gauss[i] += s * wg;
            }
        }
    }
    let value: Vec<Complex64> = kronrod.iter().map(|z| z * half).collect();
    let error = kronrod
        .iter()
        .zip(&gauss)
        .map(|(k, g)| ((k - g) * half).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(Panel {
        a,
        b,
        value,
        error,
        abs_mass: abs_mass * half.abs(),
    })
}

/// Integrates `f` over the union of `[breaks[i], breaks[i+1]]`.
///
/// Each segment starts as `initial_split` equal panels; afterwards the panel
/// with the largest error estimate is bisected until the summed estimate is
/// below `max(rel_tol·‖I‖, 50·ε·∫‖f‖)`.
pub fn integrate<F>(f: F, breaks: &[f64], spec: &QuadratureSpec, initial_split: usize) -> Result<QuadResult>
where
    F: Fn(f64) -> Result<Vec<Complex64>>,
{
    spec.validate()?;
    if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput(format!("breakpoints must be strictly increasing: {breaks:?}")));
    }
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0usize;
    let pieces = initial_split.max(1);
    for w in breaks.windows(2) {
        let step = (w[1] - w[0]) / pieces as f64;
        for p in 0..pieces {
            let a = w[0] + step * p as f64;
            let b = if p + 1 == pieces { w[1] } else { a + step };
            heap.push(gk15(&f, a, b)?);
            evaluations += 15;
        }
    }
    let dim = heap.peek().map_or(0, |p| p.value.len());
    let mut total = vec![Complex64::new(0.0, 0.0); dim];
    let (mut error, mut mass) = (0.0, 0.0);
    for p in heap.iter() {
        for (t, v) in total.iter_mut().zip(&p.value) {
            *t += v;
        }
        error += p.error;
        mass += p.abs_mass;
    }
    loop {
        let target = (spec.rel_tol * norm(&total)).max(50.0 * f64::EPSILON * mass);
        if error <= target {
            // Re-sum from the panels to shed the drift of the running totals.
            let mut value = vec![Complex64::new(0.0, 0.0); dim];
            for p in heap.iter() {
                for (t, v) in value.iter_mut().zip(&p.value) {
                    *t += v;
                }
            }
            return Ok(QuadResult {
                value,
                error,
                panels: heap.len(),
                evaluations,
            });
        }
        if heap.len() >= spec.max_panels {
            return Err(Error::QuadratureNonConvergence {
                panels: heap.len(),
                error,
                target,
            });
        }
        let worst = heap.pop().expect("non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            return Err(Error::QuadratureNonConvergence {
                panels: heap.len() + 1,
                error,
                target,
            });
        }
        let left = gk15(&f, worst.a, mid)?;
        let right = gk15(&f, mid, worst.b)?;
        evaluations += 30;
        for (i, t) in total.iter_mut().enumerate() {
            *t += left.value[i] + right.value[i] - worst.value[i];
        }
        error = (error - worst.error + left.error + right.error).max(0.0);
        mass += left.abs_mass + right.abs_mass - worst.abs_mass;
        heap.push(left);
        heap.push(right);
    }
}

/// Scalar convenience wrapper.
pub fn integrate_scalar<F>(f: F, breaks: &[f64], spec: &QuadratureSpec, initial_split: usize) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let r = integrate(|s| Ok(vec![Complex64::new(f(s)?, 0.0)]), breaks, spec, initial_split)?;
    Ok((r.value[0].re, r.error))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let spec = QuadratureSpec::default();
        let (v, _) = integrate_scalar(|x| Ok(x.powi(5) - 3.0 * x * x), &[-1.0, 2.0], &spec, 1).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn jump_at_breakpoint() {
        let spec = QuadratureSpec::default();
        let f = |x: f64| Ok(if x < 0.0 { 0.0 } else { (-x).exp() });
        let (v, _) = integrate_scalar(f, &[-5.0, 0.0, 60.0], &spec, 4).unwrap();
        assert!((v - (1.0 - (-60.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_decay() {
        let spec = QuadratureSpec::default();
        let r = integrate(
            |x| Ok(vec![Complex64::new(0.0, 3.0 * x).exp() * (-0.05 * x).exp()]),
            &[0.0, 1000.0],
            &spec,
            8,
        )
        .unwrap();
        let rate = Complex64::new(-0.05, 3.0);
        let exact = ((rate * 1000.0).exp() - 1.0) / rate;
        assert!((r.value[0] - exact).norm() < 1e-9);
    }

    #[test]
    fn zero_integrand_terminates() {
        let r = integrate(|_| Ok(vec![Complex64::new(0.0, 0.0); 3]), &[0.0, 1.0], &QuadratureSpec::default(), 1).unwrap();
        assert_eq!(r.panels, 1);
    }

    #[test]
    fn panel_budget_enforced() {
        let spec = QuadratureSpec {
            max_panels: 16,
            rel_tol: 1e-14,
            ..Default::default()
        };
        let err = integrate_scalar(|x| Ok((1.0 / x.abs().max(1e-300)).sqrt()), &[-1.0, 1.0], &spec, 1);
        assert!(matches!(err, Err(Error::QuadratureNonConvergence { .. })));
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec { rel_tol: 0.0, ..Default::default() }.validate().is_err());
        assert!(QuadratureSpec { max_panels: 8, ..Default::default() }.validate().is_err());
        assert!(QuadratureSpec { horizon: Some(-1.0), ..Default::default() }.validate().is_err());
        assert_eq!(QuadratureSpec::default().horizon_for_gap(0.5), 80.0);
    }
}
