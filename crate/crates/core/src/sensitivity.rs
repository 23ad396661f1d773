//! Sensitivity of `A ↦ g_t(A)`: the two-point divided differences
//! `g_t[λ, μ]` (which form the spectrum of the Fréchet differential), the
//! differential itself as the convolution `∫ g_s(A)·ΔA·g_{t−s}(A) ds`, its
//! Kronecker lift, and the norm bound `∫ ‖g_s(A)‖·‖g_{t−s}(A)‖ ds`.

use num_complex::Complex64;
use serde::Serialize;

use crate::eigen::eigenvalues;
use crate::error::{Error, Result};
use crate::greens::GreensFunction;
use crate::matrix::ComplexMatrix;
use crate::quadrature::{integrate, QuadratureSpec};
use crate::spectral_split::snap_clusters;

/// Largest dimension accepted by [`kronecker_differential_oracle`].
pub const KRONECKER_MAX_DIM: usize = 8;

/// Initial panels per smooth segment.
const INITIAL_SPLIT: usize = 8;

/// `(e^w − 1)/w`, accurate near `w = 0`.
fn phi1(w: Complex64) -> Complex64 {
    if w.norm() < 0.1 {
        // Σ w^k/(k+1)!; ten terms reach double precision for |w| < 0.1.
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for k in 1..12 {
            term = term * w / (k as f64 + 1.0);
            sum += term;
        }
        sum
    } else {
        (w.exp() - 1.0) / w
    }
}

/// `(e^{λt} − e^{μt})/(λ − μ)`, with the confluent value `t·e^{λt}`.
fn exp_dd_same_side(lam: Complex64, mu: Complex64, t: f64) -> Complex64 {
    (mu * t).exp() * t * phi1((lam - mu) * t)
}

/// `exp_t⁺[λ, μ]`.
pub fn exp_plus_dd(lam: Complex64, mu: Complex64, t: f64) -> Result<Complex64> {
    check_off_axis(lam)?;
    check_off_axis(mu)?;
    Ok(match (lam.re < 0.0, mu.re < 0.0) {
        (true, true) => exp_dd_same_side(lam, mu, t),
        (true, false) => (lam * t).exp() / (lam - mu),
        (false, true) => -(mu * t).exp() / (lam - mu),
        (false, false) => Complex64::new(0.0, 0.0),
    })
}

/// `exp_t⁻[λ, μ]`.
pub fn exp_minus_dd(lam: Complex64, mu: Complex64, t: f64) -> Result<Complex64> {
    check_off_axis(lam)?;
    check_off_axis(mu)?;
    Ok(match (lam.re < 0.0, mu.re < 0.0) {
        (true, true) => Complex64::new(0.0, 0.0),
        (true, false) => -(mu * t).exp() / (lam - mu),
        (false, true) => (lam * t).exp() / (lam - mu),
        (false, false) => exp_dd_same_side(lam, mu, t),
    })
}

fn check_off_axis(z: Complex64) -> Result<()> {
    if z.re == 0.0 || !z.re.is_finite() {
        Err(Error::Domain(z))
    } else {
        Ok(())
    }
}

/// `g_t[λ, μ]`: `exp_t⁺[λ, μ]` for `t > 0`, `−exp_t⁻[λ, μ]` for `t < 0`.
pub fn gt_divided_diff(lam: Complex64, mu: Complex64, t: f64) -> Result<Complex64> {
    if t > 0.0 {
        exp_plus_dd(lam, mu, t)
    } else if t < 0.0 {
        Ok(-exp_minus_dd(lam, mu, t)?)
    } else {
        Err(Error::InvalidInput("t must be nonzero".into()))
    }
}

/// `{g_t[λ, μ] : λ, μ ∈ σ(A)}` over all `N²` ordered pairs, row-major in
/// `(λ, μ)`.
pub fn differential_spectrum(a: &ComplexMatrix, t: f64) -> Result<Vec<Complex64>> {
    let eig = eigenvalues(a, false)?;
    let values = snap_clusters(&eig.values, 1e-10 * a.spectral_norm());
    differential_spectrum_of(&values, t)
}

pub fn differential_spectrum_of(values: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
    let mut out = Vec::with_capacity(values.len() * values.len());
    for &lam in values {
        for &mu in values {
            out.push(gt_divided_diff(lam, mu, t)?);
        }
    }
    Ok(out)
}

/// Smooth pieces of `(−∞, ∞)` for integrands with jumps at `s = 0` and `s = t`,
/// truncated `horizon` beyond the outer jump on each side.
pub fn convolution_breaks(t: f64, horizon: f64) -> Vec<f64> {
    let (lo, hi) = if t > 0.0 { (0.0, t) } else { (t, 0.0) };
    vec![lo - horizon, lo, hi, hi + horizon]
}

fn flatten(m: ComplexMatrix) -> Vec<Complex64> {
    m.into_vec()
}

fn check_t(t: f64) -> Result<()> {
    if t == 0.0 || !t.is_finite() {
        Err(Error::InvalidInput(format!("t must be finite and nonzero, got {t}")))
    } else {
        Ok(())
    }
}

/// `dg_t(ΔA, A) = ∫ g_s(A)·ΔA·g_{t−s}(A) ds`.
pub fn apply_differential(
    g: &GreensFunction,
    da: &ComplexMatrix,
    t: f64,
    q: &QuadratureSpec,
) -> Result<ComplexMatrix> {
    check_t(t)?;
    let n = g.dim();
    if (da.rows(), da.cols()) != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "perturbation is {}x{}, coefficient is {n}x{n}",
            da.rows(),
            da.cols()
        )));
    }
    let horizon = q.horizon_for_gap(g.split().gap);
    let breaks = convolution_breaks(t, horizon);
    let r = integrate(
        |s| Ok(flatten(&(&g.at(s)? * da) * &g.at(t - s)?)),
        &breaks,
        q,
        INITIAL_SPLIT,
    )?;
    ComplexMatrix::new(n, n, r.value)
}

/// The differential as an `N² × N²` matrix acting on column-stacked
/// perturbations: `∫ g_{t−s}(A)ᵀ ⊗ g_s(A) ds`.
pub fn kronecker_differential_oracle(g: &GreensFunction, t: f64, q: &QuadratureSpec) -> Result<ComplexMatrix> {
    check_t(t)?;
    let n = g.dim();
    if n > KRONECKER_MAX_DIM {
        return Err(Error::SizeGuard(format!(
            "Kronecker lift limited to N ≤ {KRONECKER_MAX_DIM}, got {n}"
        )));
    }
    let horizon = q.horizon_for_gap(g.split().gap);
    let breaks = convolution_breaks(t, horizon);
    let r = integrate(
        |s| Ok(flatten(g.at(t - s)?.transpose().kron(&g.at(s)?))),
        &breaks,
        q,
        INITIAL_SPLIT,
    )?;
    ComplexMatrix::new(n * n, n * n, r.value)
}

/// Spectral norm of the Kronecker lift, i.e. the operator norm of the
/// differential with respect to the Frobenius norm on perturbations.
pub fn frobenius_lift_norm(g: &GreensFunction, t: f64, q: &QuadratureSpec) -> Result<f64> {
    Ok(kronecker_differential_oracle(g, t, q)?.spectral_norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CondEstimate {
    pub t: f64,
    /// `∫ ‖g_s(A)‖·‖g_{t−s}(A)‖ ds`, an upper bound for `‖dg_t(·, A)‖`.
    pub bound: f64,
    /// `max |g_t[λ, μ]|`, the spectral radius of the differential.
    pub spectrum_extent: f64,
    /// Estimated contribution of the truncated tails.
    pub truncation_error_est: f64,
}

pub fn condition_bound(g: &GreensFunction, t: f64, q: &QuadratureSpec) -> Result<CondEstimate> {
    check_t(t)?;
    let gap = g.split().gap;
    let horizon = q.horizon_for_gap(gap);
    let breaks = convolution_breaks(t, horizon);
    let r = integrate(
        |s| {
            let v = g.at(s)?.spectral_norm() * g.at(t - s)?.spectral_norm();
            Ok(vec![Complex64::new(v, 0.0)])
        },
        &breaks,
        q,
        INITIAL_SPLIT,
    )?;
    let spectrum = differential_spectrum_of(&g.split().ordered(), t)?;
    let extent = spectrum.iter().map(|z| z.norm()).fold(0.0, f64::max);

    // ‖𝒢(s)‖ ≲ C·e^{−gap·|s|} with C fitted at |s| = 1; each tail of the
    // product integrand is then about C²·e^{−gap·(|t| + horizon)}·e^{−gap·horizon}/gap.
    let c = [1.0, -1.0]
        .iter()
        .map(|&s| g.at(s).map(|m| m.spectral_norm() * gap.exp()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let truncation = 2.0 * c * c * (-gap * (2.0 * horizon + t.abs())).exp() / gap;

    Ok(CondEstimate {
        t,
        bound: r.value[0].re,
        spectrum_extent: extent,
        truncation_error_est: truncation,
    })
}

/// `(t, ‖𝒢(t)‖)` samples.
pub fn norm_profile(g: &GreensFunction, t_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    t_grid.iter().map(|&t| Ok((t, g.at(t)?.spectral_norm()))).collect()
}
