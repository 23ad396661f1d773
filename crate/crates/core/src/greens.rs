//! Green's function `𝒢(t) = g_t(A)` of the bounded-solutions problem.
//!
//! With the spectrum ordered as `μ₁,…,μ_k; ν₁,…,ν_m`, the interpolating
//! polynomial of `exp_t⁺` factors as `Π(z − μ_i)·q_t⁺(z)`, where `q_t⁺` is the
//! Newton interpolant of `e^{zt}/Π(z − μ_i)` at the `ν`'s only (and
//! symmetrically for `t < 0`). The products `Π(A − μ_i𝟏)`, `Π(A − ν_j𝟏)` do
//! not depend on `t` and are formed once; `q_t^±(A)` is accumulated by a
//! matrix Horner recurrence.

use num_complex::Complex64;
use serde::Serialize;

use crate::divided_diff::{divided_differences, newton_horner};
use crate::eigen::eigenvalues;
use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::spectral_split::{
    default_axis_tol, exp_minus_kernel, exp_plus_kernel, pi_minus_kernel, pi_plus_kernel, split_matrix,
    SpectrumSplit, TildeKernel,
};

/// Eigenvector-condition cap above which [`greens_oracle`] declines.
pub const ORACLE_CONDITION_CAP: f64 = 1e8;

/// Step used for the `d𝒢/dt = A𝒢` check in [`verify_greens`].
pub const DERIVATIVE_STEP: f64 = 1e-4;

/// Which factorisation a Newton form feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Half {
    /// Nodes are the left-half-plane `ν`'s; multiplied by `Π(A − μ_i)`.
    Plus,
    /// Nodes are the right-half-plane `μ`'s; multiplied by `Π(A − ν_j)`.
    Minus,
}

#[derive(Debug, Clone)]
pub struct NewtonForm {
    pub nodes: Vec<Complex64>,
    pub coeffs: Vec<Complex64>,
    pub half: Half,
}

impl NewtonForm {
    fn build(kernel: &TildeKernel, nodes: &[Complex64], half: Half) -> Result<Self> {
        let table = divided_differences(kernel, nodes)?;
        Ok(Self {
            nodes: table.nodes,
            coeffs: table.coeffs,
            half,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval_scalar(&self, z: Complex64) -> Complex64 {
        newton_horner(&self.nodes, &self.coeffs, z)
    }

    /// Backward Horner recurrence
    /// `R_last = c_last·𝟏`, `R_{j−1} = (A − node_{j−1}𝟏)·R_j + c_{j−1}·𝟏`.
    /// Returns the zero matrix for an empty form.
    pub fn eval_matrix(&self, a: &ComplexMatrix) -> ComplexMatrix {
        let n = a.rows();
        let Some((&last, rest)) = self.coeffs.split_last() else {
            return ComplexMatrix::zeros(n, n);
        };
        let mut acc = ComplexMatrix::identity(n).scale(last);
        for (&c, &node) in rest.iter().zip(&self.nodes).rev() {
            let shifted = &(a * &acc) - &acc.scale(node);
            acc = shifted.add_scalar_identity(c);
        }
        acc
    }

    /// Largest coefficient modulus; a cheap diagnostic for cancellation.
    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// `t`-independent factors `Π(A − μ_i𝟏)` and `Π(A − ν_j𝟏)`.
#[derive(Debug, Clone)]
pub struct PrecomputedProducts {
    pub prod_mu: ComplexMatrix,
    pub prod_nu: ComplexMatrix,
    pub split: SpectrumSplit,
}

pub fn precompute_products(a: &ComplexMatrix, split: &SpectrumSplit) -> Result<PrecomputedProducts> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("coefficient matrix must be square".into()));
    }
    if split.dim() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "split holds {} eigenvalues for a {}x{} matrix",
            split.dim(),
            a.rows(),
            a.cols()
        )));
    }
    let product = |points: &[Complex64]| {
        points.iter().fold(ComplexMatrix::identity(a.rows()), |acc, &p| {
            &acc * &a.add_scalar_identity(-p)
        })
    };
    Ok(PrecomputedProducts {
        prod_mu: product(&split.mus),
        prod_nu: product(&split.nus),
        split: split.clone(),
    })
}

/// Newton form of `q_t⁺` (t > 0, nodes `ν`) or `q_t⁻` (t < 0, nodes `μ`).
/// Coefficients are divided differences of the tilde exponential; the minus
/// sign of the `t < 0` branch is applied in [`greens_function`].
pub fn newton_form(t: f64, split: &SpectrumSplit) -> Result<NewtonForm> {
    if t > 0.0 {
        NewtonForm::build(&exp_plus_kernel(t, split), &split.nus, Half::Plus)
    } else if t < 0.0 {
        NewtonForm::build(&exp_minus_kernel(t, split), &split.mus, Half::Minus)
    } else {
        Err(Error::InvalidInput("Green's function is undefined at t = 0".into()))
    }
}

pub fn greens_function(a: &ComplexMatrix, t: f64, pre: &PrecomputedProducts) -> Result<ComplexMatrix> {
    let form = newton_form(t, &pre.split)?;
    Ok(apply_form(a, &form, pre))
}

fn apply_form(a: &ComplexMatrix, form: &NewtonForm, pre: &PrecomputedProducts) -> ComplexMatrix {
    let q = form.eval_matrix(a);
    match form.half {
        Half::Plus => &q * &pre.prod_mu,
        Half::Minus => (&q * &pre.prod_nu).scale(Complex64::new(-1.0, 0.0)),
    }
}

/// Newton forms of the reciprocal tilde functions, which give the spectral
/// projectors `P⁺ = 𝒢(+0)` and `P⁻ = 𝒢(−0)`.
pub fn projector_forms(split: &SpectrumSplit) -> Result<(NewtonForm, NewtonForm)> {
    Ok((
        NewtonForm::build(&pi_plus_kernel(split), &split.nus, Half::Plus)?,
        NewtonForm::build(&pi_minus_kernel(split), &split.mus, Half::Minus)?,
    ))
}

/// `(P⁺, P⁻)` with `P⁺ − P⁻ = 𝟏`.
///
/// `P⁻ = π⁻(A)` where `π⁻` is `−1` on the right half-plane, so `−P⁻` is the
/// Riesz projection onto the unstable subspace and `P⁻² = −P⁻`.
pub fn spectral_projectors(a: &ComplexMatrix, pre: &PrecomputedProducts) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let (plus, minus) = projector_forms(&pre.split)?;
    Ok((apply_form(a, &plus, pre), apply_form(a, &minus, pre)))
}

/// `g_t(λ)`.
pub fn g_scalar(lambda: Complex64, t: f64) -> Complex64 {
    if t > 0.0 && lambda.re < 0.0 {
        (lambda * t).exp()
    } else if t < 0.0 && lambda.re > 0.0 {
        -(lambda * t).exp()
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// Independent reference `V·diag(g_t(λ_i))·V⁻¹` via the eigendecomposition.
pub fn greens_oracle(a: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    if t == 0.0 {
        return Err(Error::InvalidInput("Green's function is undefined at t = 0".into()));
    }
    let eig = eigenvalues(a, true)?;
    let condition = eig.condition_hint.unwrap_or(f64::INFINITY);
    if !(condition <= ORACLE_CONDITION_CAP) {
        return Err(Error::OracleUnavailable {
            condition,
            cap: ORACLE_CONDITION_CAP,
        });
    }
    let tol = default_axis_tol(a);
    let on_axis: Vec<Complex64> = eig.values.iter().copied().filter(|z| z.re.abs() <= tol).collect();
    if !on_axis.is_empty() {
        return Err(Error::Dichotomy {
            eigenvalues: on_axis,
            axis_tol: tol,
        });
    }
    let v = eig.vectors.expect("vectors requested");
    let v_inv = v.inverse()?;
    let d: Vec<Complex64> = eig.values.iter().map(|&l| g_scalar(l, t)).collect();
    Ok(&(&v * &ComplexMatrix::from_diag(&d)) * &v_inv)
}

/// Relative spectral-norm deviation `‖𝒢(t) − oracle(t)‖ / ‖oracle(t)‖`
/// (absolute when the oracle is zero).
pub fn oracle_deviation(a: &ComplexMatrix, t: f64, pre: &PrecomputedProducts) -> Result<f64> {
    let g = greens_function(a, t, pre)?;
    let o = greens_oracle(a, t)?;
    let diff = (&g - &o).spectral_norm();
    let scale = o.spectral_norm();
    Ok(if scale > 0.0 { diff / scale } else { diff })
}

/// Residuals of the Green's-function identities; all spectral norms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct GreensReport {
    /// `max(‖P⁺² − P⁺‖, ‖P⁻² + P⁻‖)`.
    pub residual_projector_idempotent: f64,
    /// `‖P⁺ − P⁻ − 𝟏‖`.
    pub residual_partition: f64,
    /// `max ‖𝒢(t₁)𝒢(t₂) ∓ 𝒢(t₁+t₂)‖` over same-sign pairs (`−` for
    /// positive, `+` for negative times).
    pub residual_semigroup: f64,
    /// `max ‖𝒢(t₁)𝒢(t₂)‖` over opposite-sign pairs.
    pub residual_annihilation: f64,
    /// `max ‖(𝒢(t+h) − 𝒢(t−h))/2h − A𝒢(t)‖`.
    pub residual_derivative: f64,
}

impl GreensReport {
    pub fn max(&self) -> f64 {
        self.fields().iter().map(|f| f.1).fold(0.0, f64::max)
    }

    pub fn fields(&self) -> [(&'static str, f64); 5] {
        [
            ("projector_idempotent", self.residual_projector_idempotent),
            ("partition", self.residual_partition),
            ("semigroup", self.residual_semigroup),
            ("annihilation", self.residual_annihilation),
            ("derivative", self.residual_derivative),
        ]
    }
}

/// Checks the identities at `±t` for every sample `t > 0`.
pub fn verify_greens(a: &ComplexMatrix, pre: &PrecomputedProducts, t_samples: &[f64]) -> Result<GreensReport> {
    verify_greens_with_step(a, pre, t_samples, DERIVATIVE_STEP)
}

/// [`verify_greens`] with an explicit central-difference step (capped at
/// half of each sample).
pub fn verify_greens_with_step(
    a: &ComplexMatrix,
    pre: &PrecomputedProducts,
    t_samples: &[f64],
    step: f64,
) -> Result<GreensReport> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidInput(format!("derivative step must be positive, got {step}")));
    }
    if t_samples.is_empty() {
        return Err(Error::InvalidInput("at least one t sample is required".into()));
    }
    if let Some(bad) = t_samples.iter().find(|&&t| !(t > 0.0) || !t.is_finite()) {
        return Err(Error::InvalidInput(format!("t samples must be positive, got {bad}")));
    }
    let n = a.rows();
    let eye = ComplexMatrix::identity(n);
    let g = |t: f64| greens_function(a, t, pre);

    let (p_plus, p_minus) = spectral_projectors(a, pre)?;
    let idem_plus = (&(&p_plus * &p_plus) - &p_plus).spectral_norm();
    let idem_minus = (&(&p_minus * &p_minus) + &p_minus).spectral_norm();
    let partition = (&(&p_plus - &p_minus) - &eye).spectral_norm();

    let mut report = GreensReport {
        residual_projector_idempotent: idem_plus.max(idem_minus),
        residual_partition: partition,
        ..GreensReport::default()
    };

    for sign in [1.0, -1.0] {
        let values: Vec<ComplexMatrix> = t_samples.iter().map(|&t| g(sign * t)).collect::<Result<_>>()?;
        let opposite: Vec<ComplexMatrix> = t_samples.iter().map(|&t| g(-sign * t)).collect::<Result<_>>()?;
        for (i, &t1) in t_samples.iter().enumerate() {
            for (j, &t2) in t_samples.iter().enumerate() {
                // On the negative half-line −𝒢 is the semigroup: 𝒢(t₁)𝒢(t₂) = −𝒢(t₁+t₂).
                let sum = g(sign * (t1 + t2))?.scale(Complex64::new(sign, 0.0));
                let semi = (&(&values[i] * &values[j]) - &sum).spectral_norm();
                report.residual_semigroup = report.residual_semigroup.max(semi);
                let ann = (&values[i] * &opposite[j]).spectral_norm();
                report.residual_annihilation = report.residual_annihilation.max(ann);
            }
            let t = sign * t1;
            let h = step.min(0.5 * t1);
            let fd = (&g(t + h)? - &g(t - h)?).scale(Complex64::new(0.5 / h, 0.0));
            let deriv = (&fd - &(a * &values[i])).spectral_norm();
            report.residual_derivative = report.residual_derivative.max(deriv);
        }
    }
    Ok(report)
}

/// A coefficient matrix together with its split spectrum and precomputed
/// products, ready for repeated evaluation of `𝒢(t)`.
#[derive(Debug, Clone)]
pub struct GreensFunction {
    a: ComplexMatrix,
    pre: PrecomputedProducts,
}

impl GreensFunction {
    /// Splits the spectrum of `a` (default axis tolerance when `None`).
    pub fn new(a: ComplexMatrix, axis_tol: Option<f64>) -> Result<Self> {
        let split = split_matrix(&a, axis_tol)?;
        let pre = precompute_products(&a, &split)?;
        Ok(Self { a, pre })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.a
    }

    pub fn products(&self) -> &PrecomputedProducts {
        &self.pre
    }

    pub fn split(&self) -> &SpectrumSplit {
        &self.pre.split
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    pub fn at(&self, t: f64) -> Result<ComplexMatrix> {
        greens_function(&self.a, t, &self.pre)
    }

    pub fn projectors(&self) -> Result<(ComplexMatrix, ComplexMatrix)> {
        spectral_projectors(&self.a, &self.pre)
    }

    pub fn verify(&self, t_samples: &[f64]) -> Result<GreensReport> {
        verify_greens(&self.a, &self.pre, t_samples)
    }

    pub fn oracle_deviation(&self, t: f64) -> Result<f64> {
        oracle_deviation(&self.a, t, &self.pre)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_split::split_spectrum;
    use std::f64::consts::E;

    fn r(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn diag_pm() -> (ComplexMatrix, PrecomputedProducts) {
        let a = ComplexMatrix::from_real_diag(&[-1.0, 1.0]);
        let split = split_matrix(&a, None).unwrap();
        let pre = precompute_products(&a, &split).unwrap();
        (a, pre)
    }

    #[test]
    fn products_for_diagonal() {
        let (_, pre) = diag_pm();
        assert_eq!(pre.prod_mu, ComplexMatrix::from_real_diag(&[-2.0, 0.0]));
        assert_eq!(pre.prod_nu, ComplexMatrix::from_real_diag(&[0.0, 2.0]));
        assert_eq!((&pre.prod_mu * &pre.prod_nu).max_abs(), 0.0);
        let stable = ComplexMatrix::from_real_diag(&[-1.0, -3.0]);
        let s = split_matrix(&stable, None).unwrap();
        assert_eq!(precompute_products(&stable, &s).unwrap().prod_mu, ComplexMatrix::identity(2));
    }

    #[test]
    fn split_size_must_match() {
        let a = ComplexMatrix::from_real_diag(&[-1.0, 1.0, 2.0]);
        let s = split_spectrum(&[r(-1.0), r(1.0)], 1e-8).unwrap();
        assert!(precompute_products(&a, &s).is_err());
    }

    #[test]
    fn newton_form_examples() {
        let s = split_spectrum(&[r(-1.0), r(1.0)], 1e-8).unwrap();
        let f = newton_form(1.0, &s).unwrap();
        assert_eq!(f.half, Half::Plus);
        assert!((f.coeffs[0] - r(-0.5 / E)).norm() < 1e-15);
        let f = newton_form(-1.0, &s).unwrap();
        assert_eq!(f.half, Half::Minus);
        assert!((f.coeffs[0] - r(0.5 / E)).norm() < 1e-15);
        let unstable = split_spectrum(&[r(1.0), r(2.0)], 1e-8).unwrap();
        assert!(newton_form(1.0, &unstable).unwrap().is_empty());
        assert!(newton_form(0.0, &s).is_err());
    }

    #[test]
    fn diagonal_green_values() {
        let (a, pre) = diag_pm();
        let g = greens_function(&a, 1.0, &pre).unwrap();
        assert!(g.max_abs_diff(&ComplexMatrix::from_real_diag(&[1.0 / E, 0.0])) < 1e-15);
        let g = greens_function(&a, -1.0, &pre).unwrap();
        assert!(g.max_abs_diff(&ComplexMatrix::from_real_diag(&[0.0, -1.0 / E])) < 1e-15);
    }

    #[test]
    fn scalar_green_value() {
        let a = ComplexMatrix::from_real_diag(&[-2.0]);
        let gf = GreensFunction::new(a, None).unwrap();
        assert!((gf.at(0.5).unwrap()[(0, 0)] - r(1.0 / E)).norm() < 1e-15);
        assert_eq!(gf.at(-0.5).unwrap()[(0, 0)], r(0.0));
    }

    #[test]
    fn unstable_spectrum_gives_zero_forward() {
        let a = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[0.0, 3.0]]).unwrap();
        let gf = GreensFunction::new(a, None).unwrap();
        assert_eq!(gf.at(0.7).unwrap().max_abs(), 0.0);
        let (pp, pm) = gf.projectors().unwrap();
        assert_eq!(pp.max_abs(), 0.0);
        assert!(pm.max_abs_diff(&ComplexMatrix::identity(2).scale(r(-1.0))) < 1e-14);
    }

    #[test]
    fn projectors_for_diagonal() {
        let (a, pre) = diag_pm();
        let (pp, pm) = spectral_projectors(&a, &pre).unwrap();
        assert!(pp.max_abs_diff(&ComplexMatrix::from_real_diag(&[1.0, 0.0])) < 1e-15);
        assert!(pm.max_abs_diff(&ComplexMatrix::from_real_diag(&[0.0, -1.0])) < 1e-15);
    }

    #[test]
    fn stable_matrix_projectors() {
        let a = ComplexMatrix::from_real_rows(&[&[-1.0, 4.0], &[0.0, -2.0]]).unwrap();
        let gf = GreensFunction::new(a, None).unwrap();
        let (pp, pm) = gf.projectors().unwrap();
        assert!(pp.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-14);
        assert_eq!(pm.max_abs(), 0.0);
    }

    #[test]
    fn oracle_examples() {
        let a = ComplexMatrix::from_real_diag(&[-1.0, 1.0]);
        let o = greens_oracle(&a, 1.0).unwrap();
        assert!(o.max_abs_diff(&ComplexMatrix::from_real_diag(&[1.0 / E, 0.0])) < 1e-15);

        let s = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap();
        let s_inv = s.inverse().unwrap();
        let b = &(&s * &a) * &s_inv;
        let expected = &(&s * &ComplexMatrix::from_real_diag(&[1.0 / E, 0.0])) * &s_inv;
        assert!(greens_oracle(&b, 1.0).unwrap().max_abs_diff(&expected) < 1e-14);
        let gf = GreensFunction::new(b, None).unwrap();
        assert!(gf.at(1.0).unwrap().max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn oracle_declines_defective_matrices() {
        let jordan = ComplexMatrix::from_real_rows(&[&[-1.0, 1.0], &[0.0, -1.0]]).unwrap();
        assert!(matches!(greens_oracle(&jordan, 1.0), Err(Error::OracleUnavailable { .. })));
    }

    #[test]
    fn jordan_block_uses_confluent_differences() {
        // exp(tJ) for J = [[−1, 1], [0, −1]] is e^{−t}·[[1, t], [0, 1]].
        let jordan = ComplexMatrix::from_real_rows(&[&[-1.0, 1.0], &[0.0, -1.0]]).unwrap();
        let gf = GreensFunction::new(jordan, None).unwrap();
        let t = 0.8;
        let expected = ComplexMatrix::from_real_rows(&[&[1.0, t], &[0.0, 1.0]])
            .unwrap()
            .scale(r((-t).exp()));
        assert!(gf.at(t).unwrap().max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn verify_on_diagonal() {
        let (a, pre) = diag_pm();
        let rep = verify_greens(&a, &pre, &[0.5, 1.0]).unwrap();
        assert!(rep.residual_projector_idempotent <= 1e-10);
        assert!(rep.residual_partition <= 1e-10);
        assert!(rep.residual_semigroup <= 1e-10);
        assert!(rep.residual_annihilation <= 1e-10);
        // Central differences carry an O(h²) truncation term, here ≈ e^{−t}·h²/6.
        assert!(rep.residual_derivative <= 1e-8, "{rep:?}");
        assert!(verify_greens(&a, &pre, &[]).is_err());
        assert!(verify_greens(&a, &pre, &[-1.0]).is_err());
    }

    #[test]
    fn interpolation_conditions_hold() {
        let eigs = [
            Complex64::new(-1.0, 0.3),
            Complex64::new(-0.2, -1.0),
            Complex64::new(0.7, 0.1),
            Complex64::new(1.5, -2.0),
            Complex64::new(-2.5, 0.0),
        ];
        let s = split_spectrum(&eigs, 1e-8).unwrap();
        let t = 0.9;
        let plus = newton_form(t, &s).unwrap();
        let prod_mu = |z: Complex64| s.mus.iter().map(|&m| z - m).product::<Complex64>();
        let prod_nu = |z: Complex64| s.nus.iter().map(|&m| z - m).product::<Complex64>();
        for &mu in &s.mus {
            assert!((prod_mu(mu) * plus.eval_scalar(mu)).norm() < 1e-12);
        }
        for &nu in &s.nus {
            let p = prod_mu(nu) * plus.eval_scalar(nu);
            let e = (nu * t).exp();
            assert!((p - e).norm() <= 1e-9 * e.norm());
        }
        let minus = newton_form(-t, &s).unwrap();
        for &mu in &s.mus {
            let p = prod_nu(mu) * minus.eval_scalar(mu);
            let e = (mu * -t).exp();
            assert!((p - e).norm() <= 1e-9 * e.norm());
        }
    }
}
