//! Divided differences of analytic scalar functions.
//!
//! The recurrence handles repeated (confluent) nodes through derivatives; two
//! independent routes, the explicit sum for distinct nodes and the Cauchy
//! contour integral, are provided as cross-checks.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

const C0: Complex64 = Complex64::new(0.0, 0.0);

/// A scalar analytic function with access to its derivatives.
pub trait AnalyticOracle {
    /// `order`-th derivative at `z`; order 0 is the value itself.
    fn deriv(&self, z: Complex64, order: usize) -> Result<Complex64>;

    fn eval(&self, z: Complex64) -> Result<Complex64> {
        self.deriv(z, 0)
    }

    /// Taylor coefficient `f⁽ᵐ⁾(z)/m!`.
    ///
    /// Implementors that naturally produce Taylor coefficients should override
    /// this to avoid forming large factorials.
    fn taylor(&self, z: Complex64, m: usize) -> Result<Complex64> {
        Ok(self.deriv(z, m)? / factorial(m))
    }
}

impl<T: AnalyticOracle + ?Sized> AnalyticOracle for &T {
    fn deriv(&self, z: Complex64, order: usize) -> Result<Complex64> {
        (**self).deriv(z, order)
    }

    fn taylor(&self, z: Complex64, m: usize) -> Result<Complex64> {
        (**self).taylor(z, m)
    }
}

pub(crate) fn factorial(m: usize) -> f64 {
    (1..=m).map(|k| k as f64).product()
}

/// `z ↦ e^{rate·z}`.
#[derive(Debug, Clone, Copy)]
pub struct Exp {
    pub rate: f64,
}

impl Exp {
    pub fn new(rate: f64) -> Self {
        Self { rate }
    }
}

impl Default for Exp {
    fn default() -> Self {
        Self { rate: 1.0 }
    }
}

impl AnalyticOracle for Exp {
    fn deriv(&self, z: Complex64, order: usize) -> Result<Complex64> {
        Ok((z * self.rate).exp() * self.rate.powi(order as i32))
    }

    fn taylor(&self, z: Complex64, m: usize) -> Result<Complex64> {
        let mut coeff = (z * self.rate).exp();
        for k in 1..=m {
            coeff *= self.rate / k as f64;
        }
        Ok(coeff)
    }
}

/// Polynomial with coefficients in ascending powers.
#[derive(Debug, Clone)]
pub struct Polynomial {
    pub coeffs: Vec<Complex64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }
}

impl AnalyticOracle for Polynomial {
    fn deriv(&self, z: Complex64, order: usize) -> Result<Complex64> {
        // Differentiate the coefficient list `order` times, then Horner.
        let mut acc = C0;
        for (power, &c) in self.coeffs.iter().enumerate().skip(order).rev() {
            let falling: f64 = (power + 1 - order..=power).map(|k| k as f64).product();
            acc = acc * z + c * falling;
        }
        Ok(acc)
    }
}

/// Leading row `f[μ₁], f[μ₁,μ₂], …, f[μ₁,…,μ_N]` of a divided-difference table.
#[derive(Debug, Clone)]
pub struct DividedDifferenceTable {
    pub nodes: Vec<Complex64>,
    pub coeffs: Vec<Complex64>,
}

impl DividedDifferenceTable {
    /// Highest-order coefficient `f[μ₁,…,μ_N]`; zero for an empty table.
    pub fn top(&self) -> Complex64 {
        self.coeffs.last().copied().unwrap_or(C0)
    }

    /// Scalar Horner evaluation of the Newton interpolating polynomial.
    pub fn newton_eval(&self, z: Complex64) -> Complex64 {
        newton_horner(&self.nodes, &self.coeffs, z)
    }

    /// Smallest distance between distinct nodes; `None` when fewer than two
    /// distinct nodes exist. Small values flag likely cancellation in the
    /// recurrence.
    pub fn min_node_distance(&self) -> Option<f64> {
        min_distinct_distance(&self.nodes)
    }

    /// Recomputes the interior entry `f[μ_i,…,μ_j]` (inclusive, zero-based).
    pub fn entry(&self, f: &impl AnalyticOracle, i: usize, j: usize) -> Result<Complex64> {
        if i > j || j >= self.nodes.len() {
            return Err(Error::InvalidInput(format!("entry ({i}, {j}) out of range")));
        }
        Ok(divided_differences(f, &self.nodes[i..=j])?.top())
    }
}

pub(crate) fn newton_horner(nodes: &[Complex64], coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let Some((&last, rest)) = coeffs.split_last() else {
        return C0;
    };
    rest.iter()
        .zip(nodes)
        .rev()
        .fold(last, |acc, (&c, &node)| acc * (z - node) + c)
}

pub(crate) fn min_distinct_distance(nodes: &[Complex64]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for (i, a) in nodes.iter().enumerate() {
        for b in &nodes[i + 1..] {
            let d = (a - b).norm();
            if d > 0.0 {
                best = Some(best.map_or(d, |x: f64| x.min(d)));
            }
        }
    }
    best
}

/// Rejects node sequences whose repeated values are not contiguous.
fn check_adjacent_duplicates(nodes: &[Complex64]) -> Result<()> {
    for i in 0..nodes.len() {
        for j in i + 2..nodes.len() {
            if nodes[i] == nodes[j] && nodes[i + 1..j].iter().any(|&z| z != nodes[i]) {
                return Err(Error::InvalidInput(format!(
                    "repeated node {} at positions {i} and {j} is not adjacent",
                    nodes[i]
                )));
            }
        }
    }
    Ok(())
}

/// Divided differences by the triangular recurrence.
///
/// A run of `m+1` exactly equal nodes `μ` contributes `f⁽ᵐ⁾(μ)/m!`. Nearly
/// equal nodes go through the plain quotient and lose accuracy roughly like
/// `ε / min_node_distance`.
pub fn divided_differences(f: &impl AnalyticOracle, nodes: &[Complex64]) -> Result<DividedDifferenceTable> {
    check_adjacent_duplicates(nodes)?;
    let n = nodes.len();
    let mut column: Vec<Complex64> = nodes.iter().map(|&z| f.eval(z)).collect::<Result<_>>()?;
    let mut coeffs = Vec::with_capacity(n);
    if n == 0 {
        return Ok(DividedDifferenceTable {
            nodes: Vec::new(),
            coeffs,
        });
    }
    coeffs.push(column[0]);
    for level in 1..n {
        let next: Vec<Complex64> = (0..n - level)
            .map(|i| {
                let (lo, hi) = (nodes[i], nodes[i + level]);
                if lo == hi {
                    f.taylor(lo, level)
                } else {
                    Ok((column[i + 1] - column[i]) / (hi - lo))
                }
            })
            .collect::<Result<_>>()?;
        coeffs.push(next[0]);
        column = next;
    }
    Ok(DividedDifferenceTable {
        nodes: nodes.to_vec(),
        coeffs,
    })
}

/// Top-order divided difference as `Σ_j f(μ_j) / Π_{k≠j}(μ_j − μ_k)`.
pub fn dd_distinct_oracle(f: &impl AnalyticOracle, nodes: &[Complex64]) -> Result<Complex64> {
    for (i, a) in nodes.iter().enumerate() {
        if nodes[i + 1..].contains(a) {
            return Err(Error::InvalidInput(format!("duplicate node {a}")));
        }
    }
    nodes
        .iter()
        .enumerate()
        .map(|(j, &mu)| {
            let denom: Complex64 = nodes
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != j)
                .map(|(_, &nu)| mu - nu)
                .product();
            Ok(f.eval(mu)? / denom)
        })
        .sum()
}

/// Top-order divided difference as the contour integral
/// `(1/2πi)∮ f(z)/Ω(z) dz` over the circle `|z − center| = radius`, by the
/// periodic trapezoidal rule with `panels` points.
pub fn dd_contour_oracle(
    f: &impl AnalyticOracle,
    nodes: &[Complex64],
    center: Complex64,
    radius: f64,
    panels: usize,
) -> Result<Complex64> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Geometry(format!("radius must be positive, got {radius}")));
    }
    if panels < 64 {
        return Err(Error::Geometry(format!("at least 64 panels required, got {panels}")));
    }
    for &mu in nodes {
        let d = (mu - center).norm();
        if (d - radius).abs() <= 1e-8 * radius {
            return Err(Error::Geometry(format!("node {mu} lies on the contour")));
        }
        if d > radius {
            return Err(Error::Geometry(format!("node {mu} lies outside the contour")));
        }
    }
    let mut acc = C0;
    for p in 0..panels {
        let theta = 2.0 * PI * p as f64 / panels as f64;
        let w = Complex64::from_polar(radius, theta);
        let z = center + w;
        let omega: Complex64 = nodes.iter().map(|&mu| z - mu).product();
        acc += f.eval(z)? * w / omega;
    }
    Ok(acc / panels as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn r(x: f64) -> Complex64 {
        c(x, 0.0)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn square_two_nodes() {
        let f = Polynomial::from_real(&[0.0, 0.0, 1.0]);
        let t = divided_differences(&f, &[r(1.0), r(2.0)]).unwrap();
        assert_eq!(t.coeffs, vec![r(1.0), r(3.0)]);
    }

    #[test]
    fn exp_double_node_is_derivative() {
        let t = divided_differences(&Exp::default(), &[r(0.0), r(0.0)]).unwrap();
        assert_eq!(t.coeffs, vec![r(1.0), r(1.0)]);
    }

    #[test]
    fn triple_node_uses_second_taylor_coefficient() {
        let f = Polynomial::from_real(&[1.0, -2.0, 0.5, 3.0]);
        let mu = c(0.3, -0.2);
        let t = divided_differences(&f, &[mu, mu, mu]).unwrap();
        // f''(μ)/2 = (2·0.5 + 6·3·μ)/2
        assert!(rel(t.top(), (r(1.0) + 18.0 * mu) / 2.0) < 1e-14);
    }

    #[test]
    fn exp_three_nodes_matches_explicit_sum() {
        let nodes = [r(0.0), r(1.0), r(2.0)];
        let t = divided_differences(&Exp::default(), &nodes).unwrap();
        let e = std::f64::consts::E;
        // Σ e^{μ_j}/Π(μ_j−μ_k) written out by hand: 1/2 − e + e²/2.
        let expected = r(0.5 - e + e * e / 2.0);
        assert!(rel(t.top(), expected) <= 1e-12);
        assert!(rel(dd_distinct_oracle(&Exp::default(), &nodes).unwrap(), expected) <= 1e-12);
    }

    #[test]
    fn non_adjacent_duplicates_rejected() {
        let err = divided_differences(&Exp::default(), &[r(1.0), r(2.0), r(1.0)]);
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn distinct_oracle_examples() {
        let one = Polynomial::from_real(&[1.0]);
        assert_eq!(dd_distinct_oracle(&one, &[r(5.0), r(7.0)]).unwrap(), r(0.0));
        let ident = Polynomial::from_real(&[0.0, 1.0]);
        assert!(rel(dd_distinct_oracle(&ident, &[c(0.3, 2.0), r(-4.0)]).unwrap(), r(1.0)) < 1e-15);
        let s = dd_distinct_oracle(&Exp::default(), &[r(-1.0), r(1.0)]).unwrap();
        assert!((s - r(1f64.sinh())).norm() < 1e-15);
        assert!((s.re - 1.1752).abs() < 1e-4);
        assert!(dd_distinct_oracle(&Exp::default(), &[r(1.0), r(1.0)]).is_err());
    }

    #[test]
    fn contour_oracle_examples() {
        let v = dd_contour_oracle(&Exp::default(), &[r(0.0), r(0.0)], r(0.0), 1.0, 256).unwrap();
        assert!((v - r(1.0)).norm() <= 1e-10);
        let sq = Polynomial::from_real(&[0.0, 0.0, 1.0]);
        let v = dd_contour_oracle(&sq, &[r(1.0), r(2.0)], r(1.5), 2.0, 256).unwrap();
        assert!((v - r(3.0)).norm() <= 1e-10);
        let nodes = [r(-1.0), r(-2.0), r(-3.0)];
        let v = dd_contour_oracle(&Exp::default(), &nodes, r(-2.0), 2.0, 256).unwrap();
        let t = divided_differences(&Exp::default(), &nodes).unwrap();
        assert!((v - t.top()).norm() <= 1e-9);
    }

    #[test]
    fn contour_geometry_errors() {
        let f = Exp::default();
        assert!(matches!(dd_contour_oracle(&f, &[r(1.0)], r(0.0), 1.0, 128), Err(Error::Geometry(_))));
        assert!(matches!(dd_contour_oracle(&f, &[r(3.0)], r(0.0), 1.0, 128), Err(Error::Geometry(_))));
        assert!(matches!(dd_contour_oracle(&f, &[r(0.0)], r(0.0), 1.0, 32), Err(Error::Geometry(_))));
    }

    #[test]
    fn newton_form_interpolates() {
        let nodes = [c(-1.0, 0.5), c(-2.0, -0.3), c(-0.4, 0.0), c(-0.4, 0.0)];
        let f = Exp::new(0.7);
        let t = divided_differences(&f, &nodes).unwrap();
        for &z in &nodes {
            assert!(rel(t.newton_eval(z), f.eval(z).unwrap()) < 1e-13);
        }
        assert!((t.min_node_distance().unwrap() - (c(-1.0, 0.5) - c(-0.4, 0.0)).norm()).abs() < 1e-15);
    }

    #[test]
    fn interior_entries() {
        let nodes = [r(0.0), r(1.0), r(2.0), r(3.0)];
        let f = Polynomial::from_real(&[0.0, 0.0, 1.0]);
        let t = divided_differences(&f, &nodes).unwrap();
        // f[1,2] = 3, f[1,2,3] = 1 for z²
        assert_eq!(t.entry(&f, 1, 2).unwrap(), r(3.0));
        assert_eq!(t.entry(&f, 1, 3).unwrap(), r(1.0));
        assert!(t.entry(&f, 2, 1).is_err());
    }

    #[test]
    fn continuity_towards_confluent_limit() {
        let f = Exp::default();
        let mu = r(-0.5);
        let exact = f.deriv(mu, 1).unwrap();
        let errs: Vec<f64> = [1e-3, 1e-5]
            .iter()
            .map(|&eps| (divided_differences(&f, &[mu, mu + eps]).unwrap().top() - exact).norm())
            .collect();
        assert!(errs[1] < errs[0]);
        assert!(errs[1] < 1e-5);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn node() -> impl Strategy<Value = Complex64> {
            (-3.0f64..-0.1, -3.0f64..3.0).prop_map(|(a, b)| c(a, b))
        }

        fn spread(nodes: &[Complex64]) -> bool {
            min_distinct_distance(nodes).map_or(true, |d| d > 0.05)
                && nodes.iter().enumerate().all(|(i, a)| !nodes[i + 1..].contains(a))
        }

        proptest! {
            #[test]
            fn symmetric_in_node_order(nodes in prop::collection::vec(node(), 2..7), rot in 0usize..6) {
                prop_assume!(spread(&nodes));
                let f = Exp::default();
                let base = divided_differences(&f, &nodes).unwrap().top();
                let mut permuted = nodes.clone();
                permuted.reverse();
                let k = rot % permuted.len();
                permuted.rotate_left(k);
                let other = divided_differences(&f, &permuted).unwrap().top();
                prop_assert!(rel(other, base) <= 1e-10);
            }

            #[test]
            fn recurrence_matches_distinct_sum(nodes in prop::collection::vec(node(), 1..7)) {
                prop_assume!(spread(&nodes));
                let f = Exp::new(0.8);
                let a = divided_differences(&f, &nodes).unwrap().top();
                let b = dd_distinct_oracle(&f, &nodes).unwrap();
                prop_assert!(rel(a, b) <= 1e-10);
            }

            #[test]
            fn polynomial_derivatives_match_finite_differences(
                coeffs in prop::collection::vec(-2.0f64..2.0, 1..6),
                z in node(),
            ) {
                let p = Polynomial::from_real(&coeffs);
                let h = 1e-5;
                let fd = (p.eval(z + h).unwrap() - p.eval(z - h).unwrap()) / (2.0 * h);
                let d = p.deriv(z, 1).unwrap();
                prop_assert!((fd - d).norm() <= 1e-6 * d.norm().max(1.0));
            }
        }
    }
}
