//! Eigenvalues of dense complex matrices.
//!
//! Householder reduction to upper Hessenberg form followed by the implicit
//! single-shift complex QR iteration (Wilkinson shifts, exceptional shifts
//! every ten stalled sweeps). The full Schur factor is kept so eigenvectors
//! can be recovered by back substitution on the triangular factor.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

/// Iteration budget per deflated eigenvalue.
const ITERATIONS_PER_EIGENVALUE: usize = 60;

#[derive(Debug, Clone)]
pub struct EigenData {
    /// Eigenvalues counted with algebraic multiplicity, in Schur diagonal order.
    pub values: Vec<Complex64>,
    /// Unit right eigenvectors as columns, when requested.
    pub vectors: Option<ComplexMatrix>,
    /// `‖V‖·‖V⁻¹‖` for the eigenvector matrix; `None` when vectors were not
    /// requested, infinite when `V` is numerically singular.
    pub condition_hint: Option<f64>,
}

/// Complex Schur form `A = Q·T·Q*`.
#[derive(Debug, Clone)]
pub struct Schur {
    pub t: ComplexMatrix,
    pub q: ComplexMatrix,
}

pub fn eigenvalues(m: &ComplexMatrix, want_vectors: bool) -> Result<EigenData> {
    let schur = schur(m)?;
    let values = schur.t.diagonal();
    if !want_vectors {
        return Ok(EigenData {
            values,
            vectors: None,
            condition_hint: None,
        });
    }
    let vectors = schur_eigenvectors(&schur);
    let condition = match vectors.inverse() {
        Ok(inv) => vectors.spectral_norm() * inv.spectral_norm(),
        Err(_) => f64::INFINITY,
    };
    Ok(EigenData {
        values,
        vectors: Some(vectors),
        condition_hint: Some(condition),
    })
}

pub fn schur(m: &ComplexMatrix) -> Result<Schur> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigenvalues need a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    let (mut h, mut q) = hessenberg(m);
    if n == 1 {
        return Ok(Schur { t: h, q });
    }

    let norm = h.frobenius_norm().max(f64::MIN_POSITIVE);
    let eps = f64::EPSILON;
    let mut hi = n - 1;
    let mut iter = 0usize;

    while hi > 0 {
        // Locate the start of the active unreduced block.
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let mut diag = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if diag == 0.0 {
                diag = norm;
            }
            if sub <= eps * diag {
                h[(lo, lo - 1)] = C0;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            iter = 0;
            continue;
        }

        iter += 1;
        if iter > ITERATIONS_PER_EIGENVALUE {
            return Err(Error::EigenNonConvergence {
                index: hi,
                iterations: iter - 1,
            });
        }

        let shift = if iter % 10 == 0 {
            h[(hi, hi)] + 0.75 * h[(hi, hi - 1)].re.abs()
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };

        // Bulge chase over rows/columns lo..=hi.
        let mut x = h[(lo, lo)] - shift;
        let mut y = h[(lo + 1, lo)];
        for k in lo..hi {
            if k > lo {
                x = h[(k, k - 1)];
                y = h[(k + 1, k - 1)];
            }
            let (c, s) = givens(x, y);
            let col_start = if k > lo { k - 1 } else { k };
            for j in col_start..n {
                let (a, b) = (h[(k, j)], h[(k + 1, j)]);
                h[(k, j)] = a * c + s * b;
                h[(k + 1, j)] = -s.conj() * a + b * c;
            }
            let row_end = (k + 2).min(hi);
            for i in 0..=row_end {
                let (a, b) = (h[(i, k)], h[(i, k + 1)]);
                h[(i, k)] = a * c + b * s.conj();
                h[(i, k + 1)] = -a * s + b * c;
            }
            for i in 0..n {
                let (a, b) = (q[(i, k)], q[(i, k + 1)]);
                q[(i, k)] = a * c + b * s.conj();
                q[(i, k + 1)] = -a * s + b * c;
            }
            if k > lo {
                h[(k + 1, k - 1)] = C0;
            }
        }
    }

    // Clean the strictly lower part left by rounding.
    for i in 1..n {
        for j in 0..i {
            h[(i, j)] = C0;
        }
    }
    Ok(Schur { t: h, q })
}

/// Householder reduction; returns `(H, Q)` with `A = Q·H·Q*`.
fn hessenberg(m: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let n = m.rows();
    let mut h = m.clone();
    let mut q = ComplexMatrix::identity(n);
    for j in 0..n.saturating_sub(2) {
        let x: Vec<Complex64> = (j + 1..n).map(|i| h[(i, j)]).collect();
        let xnorm = x.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() == 0.0 { C1 } else { x[0] / x[0].norm() };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] -= alpha;
        let vnorm = v.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // H ← (I − 2vv*)·H on rows j+1..n.
        for col in 0..n {
            let dot: Complex64 = v
                .iter()
                .enumerate()
                .map(|(r, vr)| vr.conj() * h[(j + 1 + r, col)])
                .sum();
            for (r, vr) in v.iter().enumerate() {
                h[(j + 1 + r, col)] -= 2.0 * vr * dot;
            }
        }
        // H ← H·(I − 2vv*) and Q ← Q·(I − 2vv*) on columns j+1..n.
        for target in [&mut h, &mut q] {
            for row in 0..n {
                let dot: Complex64 = v
                    .iter()
                    .enumerate()
                    .map(|(c, vc)| target[(row, j + 1 + c)] * vc)
                    .sum();
                for (c, vc) in v.iter().enumerate() {
                    target[(row, j + 1 + c)] -= 2.0 * dot * vc.conj();
                }
            }
        }
        for i in j + 2..n {
            h[(i, j)] = C0;
        }
    }
    (h, q)
}

/// Eigenvalue of the trailing 2×2 block closer to its last diagonal entry.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mean = (a + d) * 0.5;
    let (r1, r2) = (mean + disc, mean - disc);
    if (r1 - d).norm() <= (r2 - d).norm() {
        r1
    } else {
        r2
    }
}

/// Returns `(c, s)` with real `c` so that `[c s; −s̄ c]·[x; y] = [r; 0]`.
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    let (ax, ay) = (x.norm(), y.norm());
    if ay == 0.0 {
        return (1.0, C0);
    }
    if ax == 0.0 {
        return (0.0, y.conj() / ay);
    }
    let r = ax.hypot(ay);
    let c = ax / r;
    let s = (x / ax) * y.conj() / r;
    (c, s)
}

/// Unit eigenvectors from the Schur form, one per diagonal entry of `T`.
fn schur_eigenvectors(schur: &Schur) -> ComplexMatrix {
    let t = &schur.t;
    let n = t.rows();
    let small = f64::EPSILON * t.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut y_all = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let mut y = vec![C0; n];
        y[k] = C1;
        for i in (0..k).rev() {
            let s: Complex64 = (i + 1..=k).map(|j| t[(i, j)] * y[j]).sum();
            let mut d = t[(i, i)] - lambda;
            if d.norm() < small {
                d = Complex64::new(small, 0.0);
            }
            y[i] = -s / d;
            let big = y.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if big > 1e100 {
                for z in y.iter_mut() {
                    *z /= big;
                }
            }
        }
        for i in 0..n {
            y_all[(i, k)] = y[i];
        }
    }
    let mut v = &schur.q * &y_all;
    for k in 0..n {
        let nrm = (0..n).map(|i| v[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if nrm > 0.0 {
            for i in 0..n {
                v[(i, k)] /= nrm;
            }
        }
    }
    v
}

/// Greedy nearest-match comparison of two multisets of complex points.
///
/// Each element of `a` is paired with the nearest unused element of `b`.
/// Returns the largest pairing distance, or `None` when the sizes differ or
/// some distance exceeds `tol`.
pub fn match_multisets(a: &[Complex64], b: &[Complex64], tol: f64) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for &za in a {
        let (idx, dist) = b
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, &zb)| (i, (za - zb).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))?;
        if dist > tol {
            return None;
        }
        used[idx] = true;
        worst = worst.max(dist);
    }
    Some(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random(n: usize, seed: u64) -> ComplexMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * n)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        ComplexMatrix::new(n, n, data).unwrap()
    }

    #[test]
    fn diagonal_eigenvalues() {
        let m = ComplexMatrix::from_diag(&[c(-1.0, 0.0), c(2.0, 0.0), c(0.0, 3.0)]);
        let e = eigenvalues(&m, false).unwrap();
        assert!(match_multisets(&e.values, &[c(-1.0, 0.0), c(2.0, 0.0), c(0.0, 3.0)], 1e-14).is_some());
        assert!(e.vectors.is_none());
    }

    #[test]
    fn rotation_generator() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]).unwrap();
        let e = eigenvalues(&m, true).unwrap();
        assert!(match_multisets(&e.values, &[c(0.0, 1.0), c(0.0, -1.0)], 1e-14).is_some());
    }

    #[test]
    fn companion_quadratic() {
        // z² − 3z + 2
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[-2.0, 3.0]]).unwrap();
        let e = eigenvalues(&m, false).unwrap();
        assert!(match_multisets(&e.values, &[c(1.0, 0.0), c(2.0, 0.0)], 1e-13).is_some());
    }

    #[test]
    fn one_by_one() {
        let m = ComplexMatrix::from_diag(&[c(-2.0, 0.5)]);
        let e = eigenvalues(&m, true).unwrap();
        assert_eq!(e.values, vec![c(-2.0, 0.5)]);
        assert!((e.condition_hint.unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eigenpair_residuals_and_schur_reconstruction() {
        for (n, seed) in [(3, 1), (8, 2), (20, 3), (40, 4)] {
            let m = random(n, seed);
            let s = schur(&m).unwrap();
            let back = &(&s.q * &s.t) * &s.q.adjoint();
            assert!(back.max_abs_diff(&m) < 1e-12 * n as f64);
            let e = eigenvalues(&m, true).unwrap();
            let v = e.vectors.as_ref().unwrap();
            let norm = m.spectral_norm();
            for (k, &lambda) in e.values.iter().enumerate() {
                let col = v.column(k);
                let mv = m.mul_vec(&col).unwrap();
                let r = mv
                    .iter()
                    .zip(&col)
                    .map(|(a, b)| (a - lambda * b).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                assert!(r <= 1e-9 * norm, "n={n} k={k} residual {r}");
            }
        }
    }

    #[test]
    fn jordan_block_still_converges() {
        let m = ComplexMatrix::from_real_rows(&[&[-1.0, 1.0, 0.0], &[0.0, -1.0, 1.0], &[0.0, 0.0, -1.0]]).unwrap();
        let e = eigenvalues(&m, true).unwrap();
        for z in &e.values {
            assert!((z - c(-1.0, 0.0)).norm() < 1e-12);
        }
        assert!(e.condition_hint.unwrap() > 1e8);
    }

    #[test]
    fn multiset_matching() {
        let a = [c(1.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)];
        let b = [c(2.0, 0.0), c(1.0, 1e-9), c(1.0, 0.0)];
        assert!(match_multisets(&a, &b, 1e-8).is_some());
        assert!(match_multisets(&a, &b[..2], 1.0).is_none());
        let b2 = [c(2.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)];
        assert!(match_multisets(&a, &b2, 1e-8).is_none());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn trace_and_determinant(seed in 0u64..100_000, n in 1usize..=10) {
                let m = random(n, seed);
                let e = eigenvalues(&m, false).unwrap();
                let sum: Complex64 = e.values.iter().sum();
                let prod: Complex64 = e.values.iter().product();
                let tr = m.trace();
                let det = m.determinant().unwrap();
                prop_assert!((sum - tr).norm() <= 1e-8 * tr.norm().max(1.0));
                prop_assert!((prod - det).norm() <= 1e-8 * det.norm().max(1.0));
            }

            #[test]
            fn transpose_has_same_spectrum(seed in 0u64..100_000, n in 1usize..=10) {
                let m = random(n, seed);
                let a = eigenvalues(&m, false).unwrap().values;
                let b = eigenvalues(&m.transpose(), false).unwrap().values;
                prop_assert!(match_multisets(&a, &b, 1e-8).is_some());
            }
        }
    }
}
