//! Splitting the spectrum across the imaginary axis, and the scalar
//! "tilde" functions `e^{zt}/Π(z − p)` whose divided differences feed the
//! reduced-degree Newton forms.

use std::cmp::Ordering;

use num_complex::Complex64;

use crate::divided_diff::AnalyticOracle;
use crate::eigen::eigenvalues;
use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;

/// Eigenvalues partitioned into right (`mus`) and left (`nus`) half-planes.
///
/// `mus` are sorted by decreasing real part, `nus` by increasing real part;
/// ties go by increasing imaginary part. Exactly equal values are therefore
/// adjacent, which the confluent divided differences rely on.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSplit {
    pub mus: Vec<Complex64>,
    pub nus: Vec<Complex64>,
    /// `min |Re λ|` over the whole spectrum.
    pub gap: f64,
}

impl SpectrumSplit {
    pub fn dim(&self) -> usize {
        self.mus.len() + self.nus.len()
    }

    /// All eigenvalues in the order `μ₁,…,μ_k; ν₁,…,ν_m`.
    pub fn ordered(&self) -> Vec<Complex64> {
        self.mus.iter().chain(&self.nus).copied().collect()
    }
}

fn by_real_then_imag(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

pub fn split_spectrum(eigs: &[Complex64], axis_tol: f64) -> Result<SpectrumSplit> {
    if !(axis_tol > 0.0) {
        return Err(Error::InvalidInput(format!("axis tolerance must be positive, got {axis_tol}")));
    }
    let offending: Vec<Complex64> = eigs.iter().copied().filter(|z| z.re.abs() <= axis_tol).collect();
    if !offending.is_empty() {
        return Err(Error::Dichotomy {
            eigenvalues: offending,
            axis_tol,
        });
    }
    let mut mus: Vec<Complex64> = eigs.iter().copied().filter(|z| z.re > 0.0).collect();
    let mut nus: Vec<Complex64> = eigs.iter().copied().filter(|z| z.re < 0.0).collect();
    mus.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
    nus.sort_by(by_real_then_imag);
    let gap = eigs.iter().map(|z| z.re.abs()).fold(f64::INFINITY, f64::min);
    Ok(SpectrumSplit { mus, nus, gap })
}

/// Default axis tolerance `1e−8·max(1, ‖A‖)`.
pub fn default_axis_tol(a: &ComplexMatrix) -> f64 {
    1e-8 * a.spectral_norm().max(1.0)
}

/// Replaces each cluster of eigenvalues (single linkage within `radius`) by
/// its mean, so numerically repeated eigenvalues become exactly equal.
pub fn snap_clusters(values: &[Complex64], radius: f64) -> Vec<Complex64> {
    let n = values.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        label[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (values[i] - values[j]).norm() <= radius {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                if a != b {
                    label[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut label, i)).collect();
    (0..n)
        .map(|i| {
            let members: Vec<Complex64> = (0..n).filter(|&j| roots[j] == roots[i]).map(|j| values[j]).collect();
            if members.len() == 1 {
                values[i]
            } else {
                members.iter().sum::<Complex64>() / members.len() as f64
            }
        })
        .collect()
}

/// Eigenvalues of `a`, cluster-snapped at `1e−10·‖A‖`, then split.
pub fn split_matrix(a: &ComplexMatrix, axis_tol: Option<f64>) -> Result<SpectrumSplit> {
    let norm = a.spectral_norm();
    let tol = axis_tol.unwrap_or(1e-8 * norm.max(1.0));
    let eig = eigenvalues(a, false)?;
    let snapped = snap_clusters(&eig.values, 1e-10 * norm);
    split_spectrum(&snapped, tol)
}

/// `z ↦ e^{rate·z} / Π_p (z − p)`; rate 0 gives the bare reciprocal product.
#[derive(Debug, Clone)]
pub struct TildeKernel {
    pub rate: f64,
    pub poles: Vec<Complex64>,
}

impl TildeKernel {
    pub fn new(rate: f64, poles: Vec<Complex64>) -> Self {
        Self { rate, poles }
    }

    /// Taylor coefficients `h_0..=h_order` at `z`.
    pub fn taylor_series(&self, z: Complex64, order: usize) -> Result<Vec<Complex64>> {
        if self.poles.contains(&z) {
            return Err(Error::Pole { point: z });
        }
        // Ω(z + δ) as a truncated series in δ.
        let mut omega = vec![Complex64::new(0.0, 0.0); order + 1];
        omega[0] = Complex64::new(1.0, 0.0);
        for &p in &self.poles {
            let shift = z - p;
            for i in (0..=order).rev() {
                let lower = if i > 0 { omega[i - 1] } else { Complex64::new(0.0, 0.0) };
                omega[i] = omega[i] * shift + lower;
            }
        }
        // 1/Ω from Σ_i ω_i w_{n−i} = δ_{n0}.
        let mut recip = Vec::with_capacity(order + 1);
        recip.push(omega[0].inv());
        for n in 1..=order {
            let s: Complex64 = (1..=n).map(|i| omega[i] * recip[n - i]).sum();
            recip.push(-s / omega[0]);
        }
        let mut exp = Vec::with_capacity(order + 1);
        exp.push((z * self.rate).exp());
        for i in 1..=order {
            let prev = exp[i - 1];
            exp.push(prev * (self.rate / i as f64));
        }
        Ok((0..=order)
            .map(|n| (0..=n).map(|i| exp[i] * recip[n - i]).sum())
            .collect())
    }
}

impl AnalyticOracle for TildeKernel {
    fn deriv(&self, z: Complex64, order: usize) -> Result<Complex64> {
        let h = self.taylor_series(z, order)?;
        Ok(h[order] * crate::divided_diff::factorial(order))
    }

    fn taylor(&self, z: Complex64, m: usize) -> Result<Complex64> {
        Ok(self.taylor_series(z, m)?[m])
    }
}

/// `e^{zt}/Π(z − μ_i)` for `t > 0`.
pub fn exp_plus_kernel(t: f64, split: &SpectrumSplit) -> TildeKernel {
    TildeKernel::new(t, split.mus.clone())
}

/// `e^{zt}/Π(z − ν_j)` for `t < 0`.
pub fn exp_minus_kernel(t: f64, split: &SpectrumSplit) -> TildeKernel {
    TildeKernel::new(t, split.nus.clone())
}

/// `1/Π(z − μ_i)`.
pub fn pi_plus_kernel(split: &SpectrumSplit) -> TildeKernel {
    TildeKernel::new(0.0, split.mus.clone())
}

/// `1/Π(z − ν_j)`.
pub fn pi_minus_kernel(split: &SpectrumSplit) -> TildeKernel {
    TildeKernel::new(0.0, split.nus.clone())
}

pub fn tilde_exp_plus(z: Complex64, t: f64, split: &SpectrumSplit, order: usize) -> Result<Complex64> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("tilde_exp_plus needs t > 0, got {t}")));
    }
    exp_plus_kernel(t, split).deriv(z, order)
}

pub fn tilde_exp_minus(z: Complex64, t: f64, split: &SpectrumSplit, order: usize) -> Result<Complex64> {
    if !(t < 0.0) {
        return Err(Error::InvalidInput(format!("tilde_exp_minus needs t < 0, got {t}")));
    }
    exp_minus_kernel(t, split).deriv(z, order)
}

pub fn tilde_pi_plus(z: Complex64, split: &SpectrumSplit, order: usize) -> Result<Complex64> {
    pi_plus_kernel(split).deriv(z, order)
}

pub fn tilde_pi_minus(z: Complex64, split: &SpectrumSplit, order: usize) -> Result<Complex64> {
    pi_minus_kernel(split).deriv(z, order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn r(x: f64) -> Complex64 {
        c(x, 0.0)
    }

    fn split(mus: &[f64], nus: &[f64]) -> SpectrumSplit {
        let all: Vec<Complex64> = mus.iter().chain(nus).map(|&x| r(x)).collect();
        split_spectrum(&all, 1e-8).unwrap()
    }

    #[test]
    fn split_examples() {
        let s = split_spectrum(&[r(-1.0), r(1.0)], 1e-8).unwrap();
        assert_eq!((s.mus.clone(), s.nus.clone(), s.gap), (vec![r(1.0)], vec![r(-1.0)], 1.0));
        let s = split_spectrum(&[r(-2.0), r(3.0), r(-0.5), r(1.0)], 1e-8).unwrap();
        assert_eq!(s.mus, vec![r(3.0), r(1.0)]);
        assert_eq!(s.nus, vec![r(-2.0), r(-0.5)]);
        assert_eq!(s.gap, 0.5);
    }

    #[test]
    fn imaginary_eigenvalue_is_rejected() {
        match split_spectrum(&[c(0.0, 1.0), r(-1.0)], 1e-8) {
            Err(Error::Dichotomy { eigenvalues, .. }) => assert_eq!(eigenvalues, vec![c(0.0, 1.0)]),
            other => panic!("unexpected {other:?}"),
        }
        let msg = split_spectrum(&[c(1e-9, 2.0)], 1e-8).unwrap_err().to_string();
        assert!(msg.contains("imaginary axis"), "{msg}");
    }

    #[test]
    fn ties_broken_by_imaginary_part() {
        let s = split_spectrum(&[c(-1.0, 2.0), c(-1.0, -2.0), c(2.0, 1.0), c(2.0, -1.0)], 1e-8).unwrap();
        assert_eq!(s.nus, vec![c(-1.0, -2.0), c(-1.0, 2.0)]);
        assert_eq!(s.mus, vec![c(2.0, -1.0), c(2.0, 1.0)]);
    }

    #[test]
    fn snapping_merges_close_values() {
        let v = snap_clusters(&[r(-1.0), r(-1.0 + 1e-12), r(2.0)], 1e-10);
        assert_eq!(v[0], v[1]);
        assert_eq!(v[2], r(2.0));
    }

    #[test]
    fn split_of_jordan_block_groups_repeats() {
        let a = ComplexMatrix::from_real_rows(&[&[-1.0, 1.0], &[0.0, -1.0]]).unwrap();
        let s = split_matrix(&a, None).unwrap();
        assert_eq!(s.nus[0], s.nus[1]);
    }

    #[test]
    fn tilde_exp_plus_examples() {
        let empty = split(&[], &[-1.0]);
        assert!((tilde_exp_plus(r(-1.0), 1.0, &empty, 0).unwrap() - r(1.0 / E)).norm() < 1e-15);
        let s = split(&[1.0], &[-1.0]);
        assert!((tilde_exp_plus(r(-1.0), 1.0, &s, 0).unwrap() - r(-0.5 / E)).norm() < 1e-15);
        let h = 1e-5;
        let fd = (tilde_exp_plus(r(-1.0 + h), 1.0, &s, 0).unwrap() - tilde_exp_plus(r(-1.0 - h), 1.0, &s, 0).unwrap())
            / (2.0 * h);
        assert!((tilde_exp_plus(r(-1.0), 1.0, &s, 1).unwrap() - fd).norm() <= 1e-8);
        assert!(tilde_exp_plus(r(-1.0), -1.0, &s, 0).is_err());
        assert!(matches!(tilde_exp_plus(r(1.0), 1.0, &s, 0), Err(Error::Pole { .. })));
    }

    #[test]
    fn tilde_exp_minus_examples() {
        let empty = split(&[1.0], &[]);
        assert!((tilde_exp_minus(r(1.0), -1.0, &empty, 0).unwrap() - r(1.0 / E)).norm() < 1e-15);
        let s = split(&[1.0], &[-1.0]);
        assert!((tilde_exp_minus(r(1.0), -1.0, &s, 0).unwrap() - r(0.5 / E)).norm() < 1e-15);
        let s = split(&[2.0], &[-1.0, -2.0]);
        assert!((tilde_exp_minus(r(2.0), -0.5, &s, 0).unwrap() - r(1.0 / (12.0 * E))).norm() < 1e-15);
    }

    #[test]
    fn tilde_pi_examples() {
        let no_mu = split(&[], &[-1.0]);
        assert_eq!(tilde_pi_plus(c(0.3, 4.0), &no_mu, 0).unwrap(), r(1.0));
        assert_eq!(tilde_pi_plus(c(0.3, 4.0), &no_mu, 2).unwrap(), r(0.0));
        let s = split(&[1.0], &[-1.0]);
        assert_eq!(tilde_pi_plus(r(-1.0), &s, 0).unwrap(), r(-0.5));
        assert!((tilde_pi_plus(r(-1.0), &s, 1).unwrap() - r(-0.25)).norm() < 1e-15);
        let no_nu = split(&[1.0], &[]);
        assert_eq!(tilde_pi_minus(r(7.0), &no_nu, 0).unwrap(), r(1.0));
        assert!((tilde_pi_minus(r(1.0), &s, 0).unwrap() - r(0.5)).norm() < 1e-15);
        let s = split(&[1.0], &[-1.0, -2.0]);
        assert!((tilde_pi_minus(r(1.0), &s, 0).unwrap() - r(1.0 / 6.0)).norm() < 1e-15);
    }

    #[test]
    fn higher_derivatives_of_reciprocal() {
        // d²/dz² (z−1)^{−1} = 2(z−1)^{−3}
        let s = split(&[1.0], &[]);
        let z = c(-0.5, 0.25);
        let expected = 2.0 / ((z - 1.0) * (z - 1.0) * (z - 1.0));
        assert!((tilde_pi_plus(z, &s, 2).unwrap() - expected).norm() < 1e-14);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn eig() -> impl Strategy<Value = Complex64> {
            (prop_oneof![-3.0f64..-0.05, 0.05f64..3.0], -3.0f64..3.0).prop_map(|(a, b)| c(a, b))
        }

        proptest! {
            #[test]
            fn resplitting_is_idempotent(eigs in prop::collection::vec(eig(), 1..10)) {
                let s = split_spectrum(&eigs, 1e-8).unwrap();
                let again = split_spectrum(&s.ordered(), 1e-8).unwrap();
                prop_assert_eq!(&again, &s);
                prop_assert_eq!(s.dim(), eigs.len());
            }

            #[test]
            fn gap_and_orders(eigs in prop::collection::vec(eig(), 1..10)) {
                let s = split_spectrum(&eigs, 1e-8).unwrap();
                let from_mu = s.mus.last().map_or(f64::INFINITY, |z| z.re);
                let from_nu = s.nus.last().map_or(f64::INFINITY, |z| -z.re);
                prop_assert_eq!(s.gap, from_mu.min(from_nu));
                prop_assert!(s.mus.windows(2).all(|w| w[0].re >= w[1].re));
                prop_assert!(s.nus.windows(2).all(|w| w[0].re <= w[1].re));
            }

            #[test]
            fn kernel_derivative_matches_finite_differences(
                eigs in prop::collection::vec(eig(), 1..6),
                probe in (-2.0f64..2.0, -2.0f64..2.0),
                t in 0.1f64..2.0,
            ) {
                let s = split_spectrum(&eigs, 1e-8).unwrap();
                let z = c(probe.0, probe.1);
                let far = eigs.iter().all(|e| (e - z).norm() > 0.3);
                prop_assume!(far);
                let h = 1e-5;
                for k in [
                    exp_plus_kernel(t, &s),
                    exp_minus_kernel(-t, &s),
                    pi_plus_kernel(&s),
                    pi_minus_kernel(&s),
                ] {
                    let fd = (k.eval(z + h).unwrap() - k.eval(z - h).unwrap()) / (2.0 * h);
                    let d = k.deriv(z, 1).unwrap();
                    prop_assert!((fd - d).norm() <= 1e-7 * d.norm().max(1e-3));
                }
            }
        }
    }
}
