//! Band-limited test functions with exactly known Fourier transforms.
//!
//! Schwartz functions with compactly supported transforms cannot be written
//! down in closed form, so the crate works with iterated-sinc products
//! instead. The building block is `g(x) = S(bx)^{2m}`: its transform is a
//! centred cardinal B-spline of order `2m` stretched by `b`, supported on
//! `[-mb, mb]`, and `g` decays like `|x|^{-2m}`. A test function is a finite
//! sum of terms
//!
//! ```text
//! A · g_1(x_1) ⋯ g_n(x_n) · cos(2π(ν·x) + φ)
//! ```
//!
//! whose transforms are two B-spline boxes centred at `±ν`. Supports are
//! carried symbolically, so class membership (band inside a cube, support off
//! the hyperplane `ξ_1 + … + ξ_n = 0`) is decided exactly.
//!
//! Fourier convention: `f̂(ξ) = ∫ f(x) e^{-2πi x·ξ} dx`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sine_kernel::sinc_unchecked;

/// Largest supported `m` in `S(bx)^{2m}`; the B-spline evaluation loses
/// accuracy beyond order 16.
pub const MAX_HALF_POWER: u32 = 8;

/// `x ↦ S(bx)^{2m}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SincPower {
    pub bandwidth: f64,
    pub half_power: u32,
}

impl SincPower {
    pub fn new(bandwidth: f64, half_power: u32) -> Result<Self> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {bandwidth}")));
        }
        if !(1..=MAX_HALF_POWER).contains(&half_power) {
            return Err(Error::InvalidParameter(format!(
                "sinc power exponent m must be in 1..={MAX_HALF_POWER}, got {half_power}"
            )));
        }
        Ok(Self { bandwidth, half_power })
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        sinc_unchecked(self.bandwidth * x).powi(2 * self.half_power as i32)
    }

    /// Decay order `2m`.
    pub fn decay_order(&self) -> u32 {
        2 * self.half_power
    }

    /// Transform `(1/b) M_{2m}(ξ/b)`.
    pub fn fourier(&self, xi: f64) -> f64 {
        cardinal_bspline(2 * self.half_power, xi / self.bandwidth) / self.bandwidth
    }

    /// The transform vanishes outside `[-mb, mb]`.
    pub fn half_support(&self) -> f64 {
        self.half_power as f64 * self.bandwidth
    }

    /// Kinks of the transform, `b(j - m)` for `j = 0..=2m`.
    pub fn fourier_knots(&self) -> impl Iterator<Item = f64> + '_ {
        let m = self.half_power as i64;
        (0..=2 * m).map(move |j| self.bandwidth * (j - m) as f64)
    }

    /// `∫ g = ĝ(0)`.
    pub fn integral(&self) -> f64 {
        self.fourier(0.0)
    }

    /// `a Σ_k g(ak)`, by Poisson summation over the finitely many aliases.
    pub fn lattice_mass(&self, a: f64) -> f64 {
        let reach = (self.half_support() * a).floor() as i64;
        (-reach..=reach).map(|j| self.fourier(j as f64 / a)).sum::<f64>()
    }

    /// Bound on `∫_{|x|>X} g`.
    pub fn tail_bound(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::INFINITY;
        }
        let p = self.decay_order() as f64;
        2.0 * (PI * self.bandwidth).powf(-p) * x.powf(1.0 - p) / (p - 1.0)
    }

    /// Smallest `X` with `tail_bound(X) ≤ tol`.
    pub fn radius_for(&self, tol: f64) -> f64 {
        let p = self.decay_order() as f64;
        (2.0 * (PI * self.bandwidth).powf(-p) / ((p - 1.0) * tol)).powf(1.0 / (p - 1.0))
    }
}

/// Centred cardinal B-spline of order `k` (the `k`-fold convolution of the
/// unit box on `[-½, ½]`).
pub fn cardinal_bspline(k: u32, x: f64) -> f64 {
    let half = k as f64 / 2.0;
    let x = -x.abs();
    if x <= -half {
        return 0.0;
    }
    let mut fact = 1.0;
    for i in 1..k {
        fact *= i as f64;
    }
    let mut binom = 1.0;
    let mut sum = 0.0;
    for j in 0..=k {
        let t = x + half - j as f64;
        if t <= 0.0 {
            break;
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * binom * t.powi(k as i32 - 1);
        binom = binom * (k - j) as f64 / (j + 1) as f64;
    }
    (sum / fact).max(0.0)
}

/// `A · Π g_i(x_i) · cos(2π ν·x + φ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulatedProduct {
    pub amplitude: f64,
    pub envelopes: Vec<SincPower>,
    pub frequencies: Vec<f64>,
    pub phase: f64,
}

impl ModulatedProduct {
    pub fn dim(&self) -> usize {
        self.envelopes.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut env = self.amplitude;
        let mut arg = self.phase;
        for ((g, nu), xi) in self.envelopes.iter().zip(&self.frequencies).zip(x) {
            env *= g.eval(*xi);
            arg += 2.0 * PI * nu * xi;
        }
        env * arg.cos()
    }

    /// `g_i(x) e^{2πi ν_i x}`; the term equals `Re(weight · Π factor_i)`.
    #[inline]
    pub fn factor(&self, i: usize, x: f64) -> Complex64 {
        let g = self.envelopes[i].eval(x);
        let arg = 2.0 * PI * self.frequencies[i] * x;
        Complex64::new(g * arg.cos(), g * arg.sin())
    }

    /// `A e^{iφ}`.
    pub fn weight(&self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase)
    }

    pub fn is_modulated(&self) -> bool {
        self.frequencies.iter().any(|&v| v != 0.0)
    }

    pub fn fourier(&self, xi: &[f64]) -> Complex64 {
        let plus: f64 = self
            .envelopes
            .iter()
            .zip(&self.frequencies)
            .zip(xi)
            .map(|((g, nu), x)| g.fourier(x - nu))
            .product();
        let minus: f64 = self
            .envelopes
            .iter()
            .zip(&self.frequencies)
            .zip(xi)
            .map(|((g, nu), x)| g.fourier(x + nu))
            .product();
        let w = self.weight();
        0.5 * (w * plus + w.conj() * minus)
    }

    /// Closed boxes containing the transform's support.
    pub fn support_boxes(&self) -> Vec<SupportBox> {
        let plus = SupportBox(
            self.envelopes
                .iter()
                .zip(&self.frequencies)
                .map(|(g, nu)| (nu - g.half_support(), nu + g.half_support()))
                .collect(),
        );
        if self.is_modulated() {
            let minus = SupportBox(plus.0.iter().map(|&(lo, hi)| (-hi, -lo)).collect());
            vec![plus, minus]
        } else {
            vec![plus]
        }
    }
}

/// Product of closed intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportBox(pub Vec<(f64, f64)>);

impl SupportBox {
    pub fn within_cube(&self, half_width: f64) -> bool {
        self.0.iter().all(|&(lo, hi)| lo >= -half_width && hi <= half_width)
    }

    /// Range of `ξ_1 + … + ξ_n` over the box.
    pub fn sum_range(&self) -> (f64, f64) {
        self.0.iter().fold((0.0, 0.0), |(a, b), &(lo, hi)| (a + lo, b + hi))
    }

    /// Largest `|ξ_1| + … + |ξ_n|` over the box.
    pub fn max_l1(&self) -> f64 {
        self.0.iter().map(|&(lo, hi)| lo.abs().max(hi.abs())).sum()
    }
}

/// Finite sum of [`ModulatedProduct`] terms on `ℝ^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandLimitedTestFunction {
    dim: usize,
    terms: Vec<ModulatedProduct>,
}

impl BandLimitedTestFunction {
    pub fn new(dim: usize, terms: Vec<ModulatedProduct>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("test functions need dimension ≥ 1".into()));
        }
        for t in &terms {
            if t.envelopes.len() != dim || t.frequencies.len() != dim {
                return Err(Error::InvalidParameter(format!(
                    "term of dimension {} in a {dim}-dimensional test function",
                    t.envelopes.len()
                )));
            }
            if !(t.amplitude.is_finite() && t.phase.is_finite()) || t.frequencies.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("non-finite term parameter".into()));
            }
        }
        Ok(Self { dim, terms })
    }

    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: Vec::new() }
    }

    /// `S(bx)^{2m}` on `ℝ`.
    pub fn sinc_power(bandwidth: f64, half_power: u32) -> Result<Self> {
        Self::product(vec![SincPower::new(bandwidth, half_power)?])
    }

    /// `Π g_i(x_i)`.
    pub fn product(envelopes: Vec<SincPower>) -> Result<Self> {
        let n = envelopes.len();
        Self::new(
            n,
            vec![ModulatedProduct {
                amplitude: 1.0,
                frequencies: vec![0.0; n],
                envelopes,
                phase: 0.0,
            }],
        )
    }

    /// `A Π g_i(x_i) cos(2π ν·x)`.
    pub fn modulated(envelopes: Vec<SincPower>, frequencies: Vec<f64>, amplitude: f64) -> Result<Self> {
        Self::new(
            envelopes.len(),
            vec![ModulatedProduct {
                amplitude,
                envelopes,
                frequencies,
                phase: 0.0,
            }],
        )
    }

    /// `Π g_i(x_i) cos(2π ν_i x_i)`, expanded into `2^{n-1}` terms.
    pub fn per_coordinate_cosine(envelopes: Vec<SincPower>, frequencies: Vec<f64>) -> Result<Self> {
        let n = envelopes.len();
        if n == 0 || frequencies.len() != n {
            return Err(Error::InvalidParameter("one frequency per coordinate".into()));
        }
        let amp = 0.5f64.powi(n as i32 - 1);
        let terms = (0..1usize << (n - 1))
            .map(|signs| ModulatedProduct {
                amplitude: amp,
                envelopes: envelopes.clone(),
                frequencies: frequencies
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| if i > 0 && signs >> (i - 1) & 1 == 1 { -v } else { v })
                    .collect(),
                phase: 0.0,
            })
            .collect();
        Self::new(n, terms)
    }

    pub fn scaled(mut self, c: f64) -> Self {
        self.terms.iter_mut().for_each(|t| t.amplitude *= c);
        self
    }

    pub fn plus(mut self, other: Self) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::InvalidParameter("adding test functions of different dimension".into()));
        }
        self.terms.extend(other.terms);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[ModulatedProduct] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.amplitude == 0.0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    pub fn fourier(&self, xi: &[f64]) -> Complex64 {
        self.terms.iter().map(|t| t.fourier(xi)).sum()
    }

    pub fn support_boxes(&self) -> Vec<SupportBox> {
        self.terms.iter().filter(|t| t.amplitude != 0.0).flat_map(|t| t.support_boxes()).collect()
    }

    /// Transform supported in `[-w, w]^n`.
    pub fn fourier_within(&self, half_width: f64) -> bool {
        self.support_boxes().iter().all(|b| b.within_cube(half_width))
    }

    /// Band inside `[-1, 1]^n`.
    pub fn in_cube_class(&self) -> bool {
        self.fourier_within(1.0)
    }

    /// Transform supported off the hyperplane `ξ_1 + … + ξ_n = 0`.
    pub fn in_offdiagonal_class(&self) -> bool {
        self.support_boxes().iter().all(|b| {
            let (lo, hi) = b.sum_range();
            lo > 0.0 || hi < 0.0
        })
    }

    /// Each support box lies either off the zero-sum hyperplane or inside
    /// the open `ℓ¹` ball of radius 2.
    pub fn in_correlation_class(&self) -> bool {
        self.support_boxes().iter().all(|b| {
            let (lo, hi) = b.sum_range();
            lo > 0.0 || hi < 0.0 || b.max_l1() < 2.0
        })
    }

    /// Smallest envelope decay order over all terms.
    pub fn decay_order(&self) -> u32 {
        self.terms
            .iter()
            .flat_map(|t| t.envelopes.iter().map(SincPower::decay_order))
            .min()
            .unwrap_or(u32::MAX)
    }

    /// Bound on `∫ |η|` outside the cube `[-X, X]^n`.
    pub fn integral_tail_bound(&self, x: f64) -> f64 {
        self.tail_bound_with(|g| (g.integral(), g.tail_bound(x)))
    }

    /// Bound on `a^n Σ |η(ak)|` over lattice points outside `[-R, R]^n`
    /// (in sites).
    pub fn lattice_tail_bound(&self, a: f64, radius: usize) -> f64 {
        let x = a * radius as f64;
        self.tail_bound_with(|g| (g.lattice_mass(a), g.tail_bound(x)))
    }

    fn tail_bound_with<F: Fn(&SincPower) -> (f64, f64)>(&self, mass_and_tail: F) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let parts: Vec<(f64, f64)> = t.envelopes.iter().map(&mass_and_tail).collect();
                let union: f64 = (0..parts.len())
                    .map(|i| {
                        parts
                            .iter()
                            .enumerate()
                            .map(|(j, &(mass, tail))| if i == j { tail } else { mass })
                            .product::<f64>()
                    })
                    .sum();
                t.amplitude.abs() * union
            })
            .sum()
    }

    /// Smallest half-width `X` with [`Self::integral_tail_bound`] `≤ tol`.
    pub fn radius_for(&self, tol: f64) -> f64 {
        let mut hi = 1.0;
        while self.integral_tail_bound(hi) > tol {
            hi *= 2.0;
            if hi > 1e12 {
                return f64::INFINITY;
            }
        }
        let mut lo = hi / 2.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.integral_tail_bound(mid) > tol {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// Per-coordinate radius beyond which every envelope has tail mass
    /// below `tol`; used to truncate sums over points.
    pub fn effective_radius(&self, tol: f64) -> f64 {
        self.terms
            .iter()
            .flat_map(|t| t.envelopes.iter().map(|g| g.radius_for(tol)))
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for BandLimitedTestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, t) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if t.amplitude != 1.0 {
                write!(f, "{}*", t.amplitude)?;
            }
            let env: Vec<String> = t
                .envelopes
                .iter()
                .map(|g| format!("S({}x)^{}", g.bandwidth, g.decay_order()))
                .collect();
            write!(f, "{}", env.join("⊗"))?;
            if t.is_modulated() || t.phase != 0.0 {
                let nu: Vec<String> = t.frequencies.iter().map(|v| v.to_string()).collect();
                write!(f, "*cos(2π[{}]·x", nu.join(","))?;
                if t.phase != 0.0 {
                    write!(f, "+{}", t.phase)?;
                }
                write!(f, ")")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GaussLegendre;

    fn sp(b: f64, m: u32) -> SincPower {
        SincPower::new(b, m).unwrap()
    }

    #[test]
    fn bspline_low_orders() {
        // order 2 is the unit triangle
        for &x in &[-1.2, -0.7, 0.0, 0.3, 0.99] {
            let tri = (1.0 - f64::abs(x)).max(0.0);
            assert!((cardinal_bspline(2, x) - tri).abs() < 1e-15);
        }
        // order 4 at 0 is 2/3, at ±1 is 1/6
        assert!((cardinal_bspline(4, 0.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((cardinal_bspline(4, 1.0) - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(cardinal_bspline(4, 2.0), 0.0);
        let gl = GaussLegendre::new(12);
        for k in 1..=16u32 {
            let breaks: Vec<f64> = (0..=k).map(|j| j as f64 - k as f64 / 2.0).collect();
            let mass = gl.piecewise(&breaks, |x| cardinal_bspline(k, x));
            assert!((mass - 1.0).abs() < 1e-10, "order {k}: {mass}");
        }
    }

    #[test]
    fn sinc_power_transform_is_inverse_of_samples() {
        // g(x) = ∫ ĝ(ξ) e^{2πixξ} dξ, checked at a few points.
        let gl = GaussLegendre::new(16);
        for g in [sp(1.0, 1), sp(0.45, 2), sp(0.3, 3)] {
            let knots: Vec<f64> = g.fourier_knots().collect();
            let knots: Vec<f64> = knots
                .windows(2)
                .flat_map(|w| (0..8).map(move |i| w[0] + (w[1] - w[0]) * i as f64 / 8.0))
                .chain(std::iter::once(*knots.last().unwrap()))
                .collect();
            for &x in &[0.0, 0.37, 1.5, -4.2] {
                let inv = gl.piecewise(&knots, |xi| g.fourier(xi) * (2.0 * PI * x * xi).cos());
                assert!((inv - g.eval(x)).abs() < 1e-12, "{g:?} at {x}: {inv} vs {}", g.eval(x));
            }
        }
    }

    #[test]
    fn integrals_and_lattice_mass() {
        assert!((sp(1.0, 1).integral() - 1.0).abs() < 1e-15);
        assert!((sp(0.5, 1).integral() - 2.0).abs() < 1e-15);
        // ∫ S^4 = 2/3
        assert!((sp(1.0, 2).integral() - 2.0 / 3.0).abs() < 1e-15);
        // direct lattice sum of S(x)^4 at spacing 1/2 against the alias formula
        let g = sp(1.0, 2);
        let direct: f64 = 0.5 * (-400_000i64..=400_000).map(|k| g.eval(0.5 * k as f64)).sum::<f64>();
        assert!((direct - g.lattice_mass(0.5)).abs() < 1e-12);
    }

    #[test]
    fn tail_bound_dominates() {
        let g = sp(0.45, 2);
        let gl = GaussLegendre::new(8);
        let x = 20.0;
        let tail: f64 = 2.0
            * gl.composite_nodes(x, 2000.0, 8000)
                .into_iter()
                .map(|(t, w)| w * g.eval(t))
                .sum::<f64>();
        assert!(tail <= g.tail_bound(x));
        assert!(g.tail_bound(g.radius_for(1e-9)) <= 1e-9 * (1.0 + 1e-12));
    }

    #[test]
    fn class_membership() {
        let j2 = BandLimitedTestFunction::product(vec![sp(0.45, 2), sp(0.45, 2)]).unwrap();
        assert!(j2.in_cube_class() && !j2.in_offdiagonal_class() && j2.in_correlation_class());

        let i2 = BandLimitedTestFunction::modulated(vec![sp(0.25, 2), sp(0.25, 2)], vec![1.5, 1.5], 1.0).unwrap();
        assert!(i2.in_offdiagonal_class() && !i2.in_cube_class() && i2.in_correlation_class());
        assert_eq!(i2.support_boxes()[0].0, vec![(1.0, 2.0), (1.0, 2.0)]);

        // per-coordinate cosines put mass on ξ_1 = -ξ_2
        let cc = BandLimitedTestFunction::per_coordinate_cosine(vec![sp(0.25, 2), sp(0.25, 2)], vec![1.5, 1.5]).unwrap();
        assert!(!cc.in_offdiagonal_class() && !cc.in_correlation_class());

        let i1 = BandLimitedTestFunction::modulated(vec![sp(0.5, 1)], vec![1.5], 1.0).unwrap();
        assert!(i1.in_offdiagonal_class());
    }

    #[test]
    fn per_coordinate_cosine_expansion() {
        let envs = vec![sp(0.3, 2), sp(0.7, 1), sp(0.4, 2)];
        let freqs = vec![0.6, 0.2, 1.1];
        let f = BandLimitedTestFunction::per_coordinate_cosine(envs.clone(), freqs.clone()).unwrap();
        for x in [[0.1, -2.0, 3.3], [5.0, 0.0, -0.4]] {
            let want: f64 = (0..3)
                .map(|i| envs[i].eval(x[i]) * (2.0 * PI * freqs[i] * x[i]).cos())
                .product();
            assert!((f.eval(&x) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn factor_representation_matches_eval() {
        let t = ModulatedProduct {
            amplitude: 1.7,
            envelopes: vec![sp(0.3, 2), sp(0.6, 1)],
            frequencies: vec![0.8, -0.2],
            phase: 0.4,
        };
        let x = [1.3, -0.45];
        let z = t.weight() * t.factor(0, x[0]) * t.factor(1, x[1]);
        assert!((z.re - t.eval(&x)).abs() < 1e-15);
    }

    #[test]
    fn rejects_malformed() {
        assert!(SincPower::new(0.0, 1).is_err());
        assert!(SincPower::new(1.0, 0).is_err());
        assert!(SincPower::new(1.0, 9).is_err());
        let t = ModulatedProduct { amplitude: 1.0, envelopes: vec![sp(1.0, 1)], frequencies: vec![0.0], phase: 0.0 };
        assert!(BandLimitedTestFunction::new(2, vec![t]).is_err());
        assert!(BandLimitedTestFunction::new(0, vec![]).is_err());
        let one = BandLimitedTestFunction::sinc_power(1.0, 1).unwrap();
        assert!(one.plus(BandLimitedTestFunction::zero(2)).is_err());
    }
}
