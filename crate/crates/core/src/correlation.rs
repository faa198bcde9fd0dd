//! Correlation statistics of the discrete sine process against the
//! continuous sine process.
//!
//! Three quantities are computed for a band-limited test function `η` on
//! `ℝ^n`, `n ≤ 3`:
//!
//! * the lattice sum `a^n Σ_{k ∈ (aℤ)^n} η(k) det[S(k_i - k_j)]`,
//! * the integral `∫ η(x) det[S(x_i - x_j)] dx`,
//! * the shift-averaged lattice sum of the half-lattice process (the
//!   `n`-level statistic of the uniformly shifted process).
//!
//! All truncations come with rigorous tail bounds from the test function's
//! envelope decay, using `0 ≤ det[S(x_i - x_j)] ≤ 1`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::sine_kernel::{sinc_unchecked, LatticeSpacing};
use crate::testfn::BandLimitedTestFunction;

/// Largest dimension handled by the sums and integrals below.
pub const MAX_CORRELATION_DIM: usize = 3;

/// Maximum number of lattice tuples a single sum may visit.
pub const LATTICE_TUPLE_BUDGET: f64 = 2.5e8;

/// Maximum number of quadrature tuples a single integral may visit.
pub const QUADRATURE_TUPLE_BUDGET: f64 = 2.0e8;

/// Default number of shift nodes for the shifted-process expectation.
pub const DEFAULT_SHIFT_NODES: usize = 16;

/// `det[S(x_i - x_j)]`.
///
/// Closed forms for `n ≤ 3` vanish exactly when two arguments coincide;
/// larger `n` goes through an LU factorisation.
pub fn sine_determinant(x: &[f64]) -> f64 {
    match x.len() {
        0 | 1 => 1.0,
        2 => {
            let s = sinc_unchecked(x[0] - x[1]);
            1.0 - s * s
        }
        3 => det3(
            sinc_unchecked(x[0] - x[1]),
            sinc_unchecked(x[0] - x[2]),
            sinc_unchecked(x[1] - x[2]),
        ),
        n => DMatrix::from_fn(n, n, |i, j| sinc_unchecked(x[i] - x[j])).determinant(),
    }
}

#[inline]
fn det3(s12: f64, s13: f64, s23: f64) -> f64 {
    1.0 - s12 * s12 - s13 * s13 - s23 * s23 + 2.0 * s12 * s13 * s23
}

fn check_dim(eta: &BandLimitedTestFunction) -> Result<usize> {
    let n = eta.dim();
    if n > MAX_CORRELATION_DIM {
        return Err(Error::InvalidParameter(format!(
            "correlation sums are implemented for n ≤ {MAX_CORRELATION_DIM}, got n = {n}"
        )));
    }
    Ok(n)
}

/// Truncated lattice sum over the box `|k_i| ≤ radius` (in sites).
pub fn discrete_correlation_sum(eta: &BandLimitedTestFunction, a: LatticeSpacing, radius: usize) -> Result<f64> {
    shifted_lattice_sum(eta, a.value(), radius, 0.0)
}

/// Lattice sum with the truncation radius chosen so the neglected part is
/// at most `tol`.
pub fn discrete_correlation_sum_to(eta: &BandLimitedTestFunction, a: LatticeSpacing, tol: f64) -> Result<f64> {
    let r = radius_for_tolerance(eta, a, tol)?;
    discrete_correlation_sum(eta, a, r)
}

/// Smallest box radius (in sites) whose lattice tail bound is `≤ tol`.
///
/// Fails with [`Error::InsufficientDecay`] when the box would exceed the
/// tuple budget, which happens for slowly decaying envelopes at tight
/// tolerances.
pub fn radius_for_tolerance(eta: &BandLimitedTestFunction, a: LatticeSpacing, tol: f64) -> Result<usize> {
    let n = check_dim(eta)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    if eta.is_zero() {
        return Ok(0);
    }
    let a = a.value();
    let max_r = ((LATTICE_TUPLE_BUDGET.powf(1.0 / n as f64) - 1.0) / 2.0).floor() as usize;
    if eta.lattice_tail_bound(a, max_r) > tol {
        return Err(Error::InsufficientDecay(format!(
            "decay order {} of {eta} needs more than {max_r} sites per axis for tolerance {tol:e}",
            eta.decay_order()
        )));
    }
    let (mut lo, mut hi) = (0usize, max_r);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if eta.lattice_tail_bound(a, mid) > tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // one extra site absorbs the sub-spacing shifts used by the shifted sums
    Ok(hi + 1)
}

/// `a^n Σ_{|k_i| ≤ R} η(ak - t·1) det[S(a(k_i - k_j))]`.
fn shifted_lattice_sum(eta: &BandLimitedTestFunction, a: f64, radius: usize, offset: f64) -> Result<f64> {
    let n = check_dim(eta)?;
    if eta.is_zero() {
        return Ok(0.0);
    }
    let side = 2 * radius + 1;
    if (side as f64).powi(n as i32) > LATTICE_TUPLE_BUDGET * 1.0001 {
        return Err(Error::InsufficientDecay(format!(
            "a box of radius {radius} in dimension {n} exceeds the tuple budget"
        )));
    }
    let r = radius as i64;
    let scale = a.powi(n as i32);
    if n == 1 {
        // streamed: no per-site storage
        let total: f64 = eta
            .terms()
            .iter()
            .map(|t| {
                let w = t.weight();
                let chunks: Vec<Complex64> = (0..side.div_ceil(4096))
                    .into_par_iter()
                    .map(|c| {
                        let k0 = -r + (c * 4096) as i64;
                        let k1 = (k0 + 4096).min(r + 1);
                        (k0..k1).map(|k| t.factor(0, a * k as f64 - offset)).sum()
                    })
                    .collect();
                (w * chunks.iter().sum::<Complex64>()).re
            })
            .sum();
        return Ok(scale * total);
    }

    // S(a d) for d = -2R..=2R
    let s: Vec<f64> = (-2 * r..=2 * r).map(|d| sinc_unchecked(a * d as f64)).collect();
    let s_at = |d: i64| s[(d + 2 * r) as usize];

    let mut total = 0.0;
    for t in eta.terms() {
        let h: Vec<Vec<Complex64>> = (0..n)
            .map(|i| (-r..=r).map(|k| t.factor(i, a * k as f64 - offset)).collect())
            .collect();
        let rows: Vec<Complex64> = match n {
            2 => (0..side)
                .into_par_iter()
                .map(|p| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for q in 0..side {
                        let v = s_at(p as i64 - q as i64);
                        acc += h[1][q] * (1.0 - v * v);
                    }
                    h[0][p] * acc
                })
                .collect(),
            _ => (0..side)
                .into_par_iter()
                .map(|p| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for q in 0..side {
                        let s12 = s_at(p as i64 - q as i64);
                        let mut inner = Complex64::new(0.0, 0.0);
                        for u in 0..side {
                            inner += h[2][u] * det3(s12, s_at(p as i64 - u as i64), s_at(q as i64 - u as i64));
                        }
                        acc += h[1][q] * inner;
                    }
                    h[0][p] * acc
                })
                .collect(),
        };
        total += (t.weight() * rows.iter().sum::<Complex64>()).re;
    }
    Ok(scale * total)
}

/// Product Gauss–Legendre rule on a truncated cube.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Target for both the truncation tail and the refinement difference.
    pub tol: f64,
    pub panel_width: f64,
    pub nodes: usize,
    /// Node count of the refined rule used for the self-convergence check.
    pub refined_nodes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            panel_width: 0.5,
            nodes: 8,
            refined_nodes: 12,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// `∫_{ℝ^n} η(x) det[S(x_i - x_j)] dx`; for `n = 1` this is `∫ η`.
///
/// The determinant is expanded into its permutation terms. The fully
/// separable term is a product of one-dimensional integrals, each known in
/// closed form from the envelope transforms. The remaining pair and triple
/// terms carry extra sine factors and decay faster; they are integrated by a
/// product Gauss–Legendre rule on a cube whose half-width is set by a tail
/// bound at `tol / 2`. The rule is evaluated twice (base and refined node
/// counts); a difference above `tol` is reported as a quadrature failure.
pub fn continuous_correlation_integral(eta: &BandLimitedTestFunction, quad: &QuadratureSpec) -> Result<f64> {
    let n = check_dim(eta)?;
    if eta.is_zero() {
        return Ok(0.0);
    }
    if !(quad.tol > 0.0 && quad.panel_width > 0.0 && quad.nodes >= 1 && quad.refined_nodes >= 1) {
        return Err(Error::InvalidParameter(format!("bad quadrature spec {quad:?}")));
    }
    let separable: f64 = eta
        .terms()
        .iter()
        .map(|t| {
            let p: f64 = t
                .envelopes
                .iter()
                .zip(&t.frequencies)
                .map(|(g, nu)| g.fourier(*nu))
                .product();
            (t.weight() * p).re
        })
        .sum();
    if n == 1 {
        return Ok(separable);
    }
    let x = correction_radius(eta, quad.tol / 2.0);
    let panels = (2.0 * x / quad.panel_width).ceil().max(1.0) as usize;
    let axis = (panels * quad.refined_nodes.max(quad.nodes)) as f64;
    if !x.is_finite() || axis.powi(n as i32) > QUADRATURE_TUPLE_BUDGET {
        return Err(Error::Quadrature(format!(
            "cube half-width {x:.1} needs about {:.2e} nodes for {eta} at tolerance {:e}",
            axis.powi(n as i32),
            quad.tol
        )));
    }
    let half = panels as f64 * quad.panel_width / 2.0;
    let base = correction_rule(eta, half, panels, quad.nodes);
    let refined = correction_rule(eta, half, panels, quad.refined_nodes);
    if (base - refined).abs() > quad.tol {
        return Err(Error::Quadrature(format!(
            "refinement changed the integral of {eta} by {:.3e}",
            (base - refined).abs()
        )));
    }
    Ok(separable + refined)
}

/// Bound on the part of the pair and triple terms outside `[-X, X]^n`.
///
/// With `|x_i| > X`, either a partner satisfies `|x_j| > X/2` or
/// `|x_i - x_j| > X/2`, where `|S(x_i - x_j)| ≤ 2/(πX)`.
fn correction_tail_bound(eta: &BandLimitedTestFunction, x: f64) -> f64 {
    use std::f64::consts::PI;
    let n = eta.dim();
    let s_far = 2.0 / (PI * x);
    eta.terms()
        .iter()
        .map(|t| {
            let g = &t.envelopes;
            let mass: Vec<f64> = g.iter().map(|e| e.integral()).collect();
            let tail: Vec<f64> = g.iter().map(|e| e.tail_bound(x)).collect();
            let near: Vec<f64> = g.iter().map(|e| e.tail_bound(x / 2.0)).collect();
            // ∫ g_j(y) S(x_i - y)^p dy for |x_i| > X
            let partner = |j: usize, p: i32| near[j] + mass[j] * s_far.powi(p);
            let pair = |i: usize, j: usize| tail[i] * partner(j, 2) + tail[j] * partner(i, 2);
            let b = match n {
                2 => pair(0, 1),
                _ => {
                    let pairs = pair(0, 1) * mass[2] + pair(0, 2) * mass[1] + pair(1, 2) * mass[0];
                    let triple: f64 = (0..3)
                        .map(|i| {
                            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                            tail[i] * (partner(j, 1) * mass[k]).min(partner(k, 1) * mass[j])
                        })
                        .sum();
                    pairs + 2.0 * triple
                }
            };
            t.amplitude.abs() * b
        })
        .sum()
}

fn correction_radius(eta: &BandLimitedTestFunction, tol: f64) -> f64 {
    let mut hi = 1.0;
    while correction_tail_bound(eta, hi) > tol {
        hi *= 2.0;
        if hi > 1e9 {
            return f64::INFINITY;
        }
    }
    let mut lo = hi / 2.0;
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if correction_tail_bound(eta, mid) > tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Pair and triple terms of `∫ η det[S]` by a product rule on `[-half, half]^n`.
fn correction_rule(eta: &BandLimitedTestFunction, half: f64, panels: usize, nodes: usize) -> f64 {
    let gl = GaussLegendre::new(nodes);
    let grid = gl.composite_nodes(-half, half, panels);
    let n = eta.dim();
    let len = grid.len();
    // x_p - x_q depends only on (panel offset, node r, node u)
    let h = 2.0 * half / panels as f64;
    let local: Vec<f64> = gl.mapped(0.0, h).map(|(x, _)| x).collect();
    let mut s_table = vec![0.0; (2 * panels - 1) * nodes * nodes];
    for dp in 0..(2 * panels - 1) {
        let shift = (dp as f64 - (panels - 1) as f64) * h;
        for r in 0..nodes {
            for u in 0..nodes {
                s_table[(dp * nodes + r) * nodes + u] = sinc_unchecked(shift + local[r] - local[u]);
            }
        }
    }
    let s_at = |p: usize, q: usize| {
        let dp = p / nodes + panels - 1 - q / nodes;
        s_table[(dp * nodes + p % nodes) * nodes + q % nodes]
    };
    let pair = |u: &[Complex64], v: &[Complex64]| -> Complex64 {
        (0..len)
            .into_par_iter()
            .map(|p| {
                let mut acc = Complex64::new(0.0, 0.0);
                for q in 0..len {
                    let s = s_at(p, q);
                    acc += v[q] * (s * s);
                }
                u[p] * acc
            })
            .collect::<Vec<_>>()
            .iter()
            .sum()
    };

    let mut total = 0.0;
    for t in eta.terms() {
        let wh: Vec<Vec<Complex64>> = (0..n)
            .map(|i| grid.iter().map(|&(x, w)| w * t.factor(i, x)).collect())
            .collect();
        let z = if n == 2 {
            -pair(&wh[0], &wh[1])
        } else {
            let one: Vec<Complex64> = (0..n)
                .map(|i| t.envelopes[i].fourier(t.frequencies[i]).into())
                .collect();
            let triple: Complex64 = (0..len)
                .into_par_iter()
                .map(|p| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for q in 0..len {
                        let s12 = s_at(p, q);
                        let mut inner = Complex64::new(0.0, 0.0);
                        for u in 0..len {
                            inner += wh[2][u] * (s_at(p, u) * s_at(q, u));
                        }
                        acc += wh[1][q] * (s12 * inner);
                    }
                    wh[0][p] * acc
                })
                .collect::<Vec<_>>()
                .iter()
                .sum();
            -pair(&wh[0], &wh[1]) * one[2] - pair(&wh[0], &wh[2]) * one[1] - pair(&wh[1], &wh[2]) * one[0]
                + 2.0 * triple
        };
        total += (t.weight() * z).re;
    }
    total
}

/// Discrete and continuous sides of the band-limited agreement identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub test_function: String,
    pub a: f64,
    pub discrete: f64,
    pub continuous: f64,
    pub abs_diff: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Compares the lattice sum with the integral; each side is computed to
/// `tol / 10`.
pub fn bandlimited_agreement_check(eta: &BandLimitedTestFunction, a: LatticeSpacing, tol: f64) -> Result<AgreementReport> {
    let discrete = discrete_correlation_sum_to(eta, a, tol / 10.0)?;
    let continuous = continuous_correlation_integral(eta, &QuadratureSpec::with_tol(tol / 10.0))?;
    let abs_diff = (discrete - continuous).abs();
    Ok(AgreementReport {
        test_function: eta.to_string(),
        a: a.value(),
        discrete,
        continuous,
        abs_diff,
        tol,
        pass: abs_diff <= tol,
    })
}

/// `Σ_{k ≠ 0} η̂(k/a)` for one-dimensional `η`: the aliasing term that
/// separates `a Σ η(ak)` from `∫ η`.
pub fn poisson_alias_sum(eta: &BandLimitedTestFunction, a: LatticeSpacing) -> Result<f64> {
    if eta.dim() != 1 {
        return Err(Error::InvalidParameter("alias sums are one-dimensional".into()));
    }
    let reach = eta
        .support_boxes()
        .iter()
        .map(|b| b.0[0].0.abs().max(b.0[0].1.abs()))
        .fold(0.0, f64::max);
    let kmax = (reach * a.value()).floor() as i64;
    Ok((1..=kmax)
        .map(|k| {
            let xi = k as f64 / a.value();
            eta.fourier(&[xi]).re + eta.fourier(&[-xi]).re
        })
        .sum())
}

/// `2 ∫_0^{1/2} (1/2)^n Σ_{k ∈ (ℤ/2)^n} η(k - t) det[S(k_i - k_j)] dt`.
///
/// The integrand has period `1/2` in `t` and is smooth, so the trapezoid
/// rule with `shift_nodes` equally spaced nodes is spectrally accurate;
/// for bands inside `[-1, 1]^n` it is exact once `shift_nodes > n`.
pub fn ah_npoint_expectation(eta: &BandLimitedTestFunction, radius: usize, shift_nodes: usize) -> Result<f64> {
    check_dim(eta)?;
    if shift_nodes == 0 {
        return Err(Error::InvalidParameter("need at least one shift node".into()));
    }
    let mut acc = 0.0;
    for j in 0..shift_nodes {
        let t = j as f64 / (2.0 * shift_nodes as f64);
        acc += shifted_lattice_sum(eta, 0.5, radius, t)?;
    }
    Ok(acc / shift_nodes as f64)
}

/// Shifted-process expectation for a test function whose transform avoids
/// the hyperplane `ξ_1 + … + ξ_n = 0`; the value should vanish.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffdiagonalReport {
    pub test_function: String,
    pub value: f64,
    pub in_offdiagonal_class: bool,
}

pub fn offdiagonal_vanishing_check(eta: &BandLimitedTestFunction, radius: usize) -> Result<OffdiagonalReport> {
    let value = ah_npoint_expectation(eta, radius, DEFAULT_SHIFT_NODES)?;
    Ok(OffdiagonalReport {
        test_function: eta.to_string(),
        value,
        in_offdiagonal_class: eta.in_offdiagonal_class(),
    })
}

/// `Σ η(y_{j_1}, …, y_{j_n})` over ordered tuples of pairwise distinct
/// indices, for the given (already shifted) points.
pub fn distinct_tuple_sum(eta: &BandLimitedTestFunction, points: &[f64]) -> Result<f64> {
    let n = check_dim(eta)?;
    let mut total = 0.0;
    for t in eta.terms() {
        let z = match n {
            1 => points.iter().map(|&y| t.factor(0, y)).sum::<Complex64>(),
            2 => {
                let (mut s1, mut s2, mut s12) = (Complex64::default(), Complex64::default(), Complex64::default());
                for &y in points {
                    let (u, v) = (t.factor(0, y), t.factor(1, y));
                    s1 += u;
                    s2 += v;
                    s12 += u * v;
                }
                s1 * s2 - s12
            }
            _ => {
                let zero = Complex64::default();
                let (mut sa, mut sb, mut sc) = (zero, zero, zero);
                let (mut sab, mut sac, mut sbc, mut sabc) = (zero, zero, zero, zero);
                for &y in points {
                    let (u, v, w) = (t.factor(0, y), t.factor(1, y), t.factor(2, y));
                    sa += u;
                    sb += v;
                    sc += w;
                    sab += u * v;
                    sac += u * w;
                    sbc += v * w;
                    sabc += u * v * w;
                }
                sa * sb * sc - sab * sc - sac * sb - sbc * sa + 2.0 * sabc
            }
        };
        total += (t.weight() * z).re;
    }
    Ok(total)
}

/// `Σ_{v ∈ (aℤ)^n} |η(v)|` over the box of the given radius, plus the
/// lattice tail bound; an upper bound for the full lattice `ℓ¹` norm.
pub fn lattice_l1_norm(eta: &BandLimitedTestFunction, a: LatticeSpacing, radius: usize) -> Result<f64> {
    let n = check_dim(eta)?;
    let a = a.value();
    let side = 2 * radius + 1;
    if (side as f64).powi(n as i32) > LATTICE_TUPLE_BUDGET {
        return Err(Error::InsufficientDecay(format!("ℓ¹ box of radius {radius} exceeds the budget")));
    }
    let r = radius as i64;
    let coords: Vec<f64> = (-r..=r).map(|k| a * k as f64).collect();
    let sum: f64 = match n {
        1 => coords.iter().map(|&x| eta.eval(&[x]).abs()).sum(),
        2 => coords
            .par_iter()
            .map(|&x| coords.iter().map(|&y| eta.eval(&[x, y]).abs()).sum::<f64>())
            .collect::<Vec<_>>()
            .iter()
            .sum(),
        _ => coords
            .par_iter()
            .map(|&x| {
                coords
                    .iter()
                    .flat_map(|&y| coords.iter().map(move |&z| (y, z)))
                    .map(|(y, z)| eta.eval(&[x, y, z]).abs())
                    .sum::<f64>()
            })
            .collect::<Vec<_>>()
            .iter()
            .sum(),
    };
    Ok(sum + eta.lattice_tail_bound(a, radius) / a.powi(n as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfn::SincPower;
    use proptest::prelude::*;

    fn sp(b: f64, m: u32) -> SincPower {
        SincPower::new(b, m).unwrap()
    }

    fn half() -> LatticeSpacing {
        LatticeSpacing::HALF
    }

    #[test]
    fn determinant_vanishes_on_coincidence() {
        assert_eq!(sine_determinant(&[0.3, 0.3]), 0.0);
        for x in [[0.3, 0.3, 1.7], [0.3, 1.7, 0.3], [1.7, 0.3, 0.3], [2.0, 2.0, 2.0]] {
            assert_eq!(sine_determinant(&x), 0.0, "{x:?}");
        }
        assert!(sine_determinant(&[0.0, 0.5, 1.0, 0.5]).abs() < 1e-15);
        assert_eq!(sine_determinant(&[4.2]), 1.0);
    }

    proptest! {
        #[test]
        fn determinant_translation_invariant(
            x in prop::collection::vec(-20.0..20.0f64, 1..=3),
            t in -50.0..50.0f64,
        ) {
            let y: Vec<f64> = x.iter().map(|v| v + t).collect();
            prop_assert!((sine_determinant(&x) - sine_determinant(&y)).abs() <= 1e-12);
        }

        #[test]
        fn determinant_in_unit_interval(x in prop::collection::vec(-10.0..10.0f64, 2..=3)) {
            let d = sine_determinant(&x);
            prop_assert!((-1e-14..=1.0 + 1e-14).contains(&d));
        }

        #[test]
        fn distinct_sums_match_brute_force(
            pts in prop::collection::vec(-6.0..6.0f64, 0..9),
            b in 0.2..1.0f64,
            nu in -1.0..1.0f64,
        ) {
            let f2 = BandLimitedTestFunction::modulated(vec![sp(b, 1), sp(0.5, 2)], vec![nu, 0.3], 1.3).unwrap();
            let f3 = BandLimitedTestFunction::modulated(vec![sp(b, 1), sp(0.5, 1), sp(0.7, 1)], vec![nu, 0.0, 0.2], 0.7).unwrap();
            let mut brute2 = 0.0;
            let mut brute3 = 0.0;
            for (i, &x) in pts.iter().enumerate() {
                for (j, &y) in pts.iter().enumerate() {
                    if i == j { continue; }
                    brute2 += f2.eval(&[x, y]);
                    for (k, &z) in pts.iter().enumerate() {
                        if k != i && k != j {
                            brute3 += f3.eval(&[x, y, z]);
                        }
                    }
                }
            }
            prop_assert!((distinct_tuple_sum(&f2, &pts).unwrap() - brute2).abs() < 1e-10);
            prop_assert!((distinct_tuple_sum(&f3, &pts).unwrap() - brute3).abs() < 1e-10);
        }
    }

    #[test]
    fn one_dimensional_lattice_sum_of_sinc_squared() {
        let eta = BandLimitedTestFunction::sinc_power(1.0, 1).unwrap();
        let v = discrete_correlation_sum_to(&eta, half(), 1e-6).unwrap();
        assert!((v - 1.0).abs() < 1e-6, "{v}");
        // the same tolerance for m = 1 at 1e-10 is out of reach
        assert!(matches!(
            discrete_correlation_sum_to(&eta, half(), 1e-10),
            Err(Error::InsufficientDecay(_))
        ));
    }

    #[test]
    fn zero_function_gives_zero() {
        let z = BandLimitedTestFunction::zero(2);
        assert_eq!(discrete_correlation_sum(&z, half(), 50).unwrap(), 0.0);
        assert_eq!(continuous_correlation_integral(&z, &QuadratureSpec::default()).unwrap(), 0.0);
        assert_eq!(ah_npoint_expectation(&z, 50, 16).unwrap(), 0.0);
        let zero_factor = BandLimitedTestFunction::product(vec![sp(1.0, 2), sp(1.0, 2)]).unwrap().scaled(0.0);
        assert_eq!(discrete_correlation_sum(&zero_factor, half(), 20).unwrap(), 0.0);
    }

    #[test]
    fn continuous_one_dimensional_integrals() {
        let eta = BandLimitedTestFunction::sinc_power(1.0, 1).unwrap();
        let v = continuous_correlation_integral(&eta, &QuadratureSpec::with_tol(1e-5)).unwrap();
        assert!((v - 1.0).abs() < 1e-5, "{v}");
        let g = BandLimitedTestFunction::sinc_power(0.3, 3).unwrap();
        let v = continuous_correlation_integral(&g, &QuadratureSpec::with_tol(1e-10)).unwrap();
        assert!((v - sp(0.3, 3).integral()).abs() < 1e-10);
    }

    #[test]
    fn continuous_two_dimensional_self_convergence() {
        // ∫∫ g g (1 - S(x1 - x2)²) with g = S(x/2)²; reference run at half the panel width
        let eta = BandLimitedTestFunction::product(vec![sp(0.5, 1), sp(0.5, 1)]).unwrap();
        let spec = QuadratureSpec::with_tol(2e-3);
        let v = continuous_correlation_integral(&eta, &spec).unwrap();
        let fine = continuous_correlation_integral(&eta, &QuadratureSpec { panel_width: 0.25, ..spec }).unwrap();
        assert!((v - fine).abs() < 1e-8, "{v} vs {fine}");
        // the pair term lowers the value below ∫g ∫g = 4
        assert!(v < 4.0 && v > 2.5, "{v}");
    }

    #[test]
    fn two_dimensional_agreement_at_half_spacing() {
        let eta = BandLimitedTestFunction::product(vec![sp(0.45, 2), sp(0.45, 2)]).unwrap();
        let rep = bandlimited_agreement_check(&eta, half(), 1e-4).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn one_dimensional_defect_is_alias_sum() {
        // band [-1.5, 1.5] at a = 0.9 aliases onto ±1/0.9
        let a = LatticeSpacing::new(0.9).unwrap();
        let eta = BandLimitedTestFunction::sinc_power(0.75, 2).unwrap();
        let discrete = discrete_correlation_sum_to(&eta, a, 1e-11).unwrap();
        let continuous = continuous_correlation_integral(&eta, &QuadratureSpec::with_tol(1e-11)).unwrap();
        let alias = poisson_alias_sum(&eta, a).unwrap();
        assert!(alias > 1e-3);
        assert!((discrete - continuous - alias).abs() < 1e-9, "{} vs {alias}", discrete - continuous);
        assert_eq!(poisson_alias_sum(&eta, half()).unwrap(), 0.0);
    }

    #[test]
    fn shifted_expectation_one_level_is_integral() {
        for eta in [
            BandLimitedTestFunction::sinc_power(0.45, 2).unwrap(),
            BandLimitedTestFunction::modulated(vec![sp(0.3, 3)], vec![0.4], 1.0).unwrap(),
            BandLimitedTestFunction::modulated(vec![sp(0.5, 2)], vec![1.5], 2.0).unwrap(),
        ] {
            let r = radius_for_tolerance(&eta, half(), 1e-10).unwrap();
            let v = ah_npoint_expectation(&eta, r, DEFAULT_SHIFT_NODES).unwrap();
            let want = eta.fourier(&[0.0]).re;
            assert!((v - want).abs() < 1e-9, "{eta}: {v} vs {want}");
        }
    }

    #[test]
    fn offdiagonal_one_dimensional_vanishes() {
        let eta = BandLimitedTestFunction::modulated(vec![sp(0.5, 1)], vec![1.5], 1.0).unwrap();
        let r = radius_for_tolerance(&eta, half(), 1e-6).unwrap();
        let rep = offdiagonal_vanishing_check(&eta, r).unwrap();
        assert!(rep.in_offdiagonal_class);
        assert!(rep.value.abs() <= 1e-8, "{rep:?}");
        let control = BandLimitedTestFunction::sinc_power(0.5, 2).unwrap();
        let rep = offdiagonal_vanishing_check(&control, 200).unwrap();
        assert!(!rep.in_offdiagonal_class && rep.value > 0.5);
    }

    #[test]
    fn l1_norm_bounds_distinct_sums() {
        let eta = BandLimitedTestFunction::modulated(vec![sp(0.45, 2), sp(0.45, 2)], vec![0.2, -0.1], 1.0).unwrap();
        let norm = lattice_l1_norm(&eta, half(), 120).unwrap();
        let pts: Vec<f64> = [0, 1, 3, 4, 5, 9, 10, 14, 15, 16, 20].iter().map(|&k| k as f64 * 0.5 - 4.0).collect();
        let mut abs_sum = 0.0;
        for (i, &x) in pts.iter().enumerate() {
            for (j, &y) in pts.iter().enumerate() {
                if i != j {
                    abs_sum += eta.eval(&[x, y]).abs();
                }
            }
        }
        assert!(abs_sum <= norm);
    }

    #[test]
    fn rejects_high_dimension() {
        let eta = BandLimitedTestFunction::product(vec![sp(1.0, 2); 4]).unwrap();
        assert!(discrete_correlation_sum(&eta, half(), 3).is_err());
        assert!(distinct_tuple_sum(&eta, &[0.0]).is_err());
    }
}
