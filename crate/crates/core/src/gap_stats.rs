//! Gap probabilities of the half-lattice sine process.
//!
//! `Σ_L` is the `L×L` Toeplitz matrix of `a_j = S(j/2)` and
//! `ω(L) = det(I - ½Σ_L)` is the probability that `L` consecutive sites are
//! empty. The probability that a gap equals `L/2`, conditional on a point at
//! the origin, is the second difference `G_{L/2} = 2(ω(L+1) + ω(L-1) - 2ω(L))`.
//!
//! The conditional definition is matched empirically by the histogram of
//! consecutive gaps in sampled configurations: the process is invariant under
//! lattice translations, so a gap chosen uniformly from a long configuration
//! has the same law as the gap following a point at the origin.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dpp_sampler::LatticeConfiguration;
use crate::error::{Error, Result};
use crate::sine_kernel::LatticeSpacing;

/// Largest tolerated eigenvalue excess of `½Σ_L` over 1.
pub const OMEGA_EIGEN_TOL: f64 = 1e-9;

/// Symbol of `Σ_L`: `a_0 = 1`, zero at other even `j`,
/// `2(-1)^{(|j|-1)/2} / (π|j|)` at odd `j`.
pub fn sigma_symbol(j: i64) -> f64 {
    let m = j.unsigned_abs();
    if m == 0 {
        1.0
    } else if m % 2 == 0 {
        0.0
    } else {
        let sign = if (m - 1) / 2 % 2 == 0 { 1.0 } else { -1.0 };
        sign * 2.0 / (PI * m as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzSigma {
    matrix: DMatrix<f64>,
}

impl ToeplitzSigma {
    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

pub fn build_sigma(l: usize) -> ToeplitzSigma {
    ToeplitzSigma {
        matrix: DMatrix::from_fn(l, l, |j, k| sigma_symbol(k as i64 - j as i64)),
    }
}

/// `ω(L) = det(I - ½Σ_L)` accumulated as `exp Σ log(1 - μ_i)` over the
/// eigenvalues `μ_i` of `½Σ_L`.
///
/// The smallest eigenvalues of `I - ½Σ_L` fall below machine epsilon once
/// `L` exceeds about 20, so relative accuracy degrades from there on
/// (`ω(20) ≈ 2e-61` is good to a few parts in a thousand). The absolute error
/// stays at rounding level for every `L`.
pub fn omega(l: usize) -> Result<f64> {
    if l == 0 {
        return Ok(1.0);
    }
    let half_sigma = build_sigma(l).matrix * 0.5;
    let eig = SymmetricEigen::try_new(half_sigma, 1e-15, 10_000).ok_or(Error::Eigensolver(l))?;
    let mut log_sum = 0.0;
    for &mu in eig.eigenvalues.iter() {
        if mu > 1.0 + OMEGA_EIGEN_TOL || mu < -OMEGA_EIGEN_TOL {
            return Err(Error::MacchiViolation {
                min: eig.eigenvalues.min(),
                max: eig.eigenvalues.max(),
            });
        }
        let rest = 1.0 - mu.clamp(0.0, 1.0);
        if rest == 0.0 {
            return Ok(0.0);
        }
        log_sum += rest.ln();
    }
    Ok(log_sum.exp())
}

/// `ω(0), …, ω(l_max)`.
pub fn omega_table(l_max: usize) -> Result<Vec<f64>> {
    (0..=l_max).map(omega).collect()
}

/// `G_{L/2}` for `L ≥ 1`.
pub fn gap_probability(l: usize) -> Result<f64> {
    if l == 0 {
        return Err(Error::InvalidParameter("gap index L must be at least 1".into()));
    }
    Ok(second_difference(omega(l + 1)?, omega(l)?, omega(l - 1)?))
}

/// Below this, a negative second difference is rounding noise in `ω`.
const GAP_NOISE_FLOOR: f64 = 1e-15;

fn second_difference(next: f64, here: f64, prev: f64) -> f64 {
    let g = 2.0 * (next + prev - 2.0 * here);
    if g < 0.0 && g > -GAP_NOISE_FLOOR {
        0.0
    } else {
        g
    }
}

/// Closed-form values of `G_{L/2}` for `L = 1..=6`, written out as
/// polynomials in `1/π²`.
pub fn closed_form_gap(l: usize) -> Option<f64> {
    let p2 = PI * PI;
    let p4 = p2 * p2;
    let p6 = p4 * p2;
    Some(match l {
        1 => 0.5 - 2.0 / p2,
        2 => 0.25 + 2.0 / p2,
        3 => 0.125 + 4.0 / (9.0 * p2) + 32.0 / (9.0 * p4),
        4 => 1.0 / 16.0 + 1.0 / (18.0 * p2) - 224.0 / (81.0 * p4),
        5 => 1.0 / 32.0 - 209.0 / (1800.0 * p2) - 1664.0 / (2025.0 * p4) - 131072.0 / (18225.0 * p6),
        6 => 1.0 / 64.0 - 3.0 / (25.0 * p2) - 13312.0 / (16875.0 * p4) + 2097152.0 / (455625.0 * p6),
        _ => return None,
    })
}

/// Rounded values as usually quoted, for `L = 1..=6`.
pub const PRINTED_GAPS: [(usize, f64); 6] = [
    (1, 0.297),
    (2, 0.453),
    (3, 0.207),
    (4, 0.0397),
    (5, 0.00357),
    (6, 0.000156),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GapSource {
    Analytic,
    Empirical,
}

/// Map from `L` (gap `L/2`) to `G_{L/2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapDistribution {
    pub source: GapSource,
    pub probabilities: BTreeMap<usize, f64>,
    /// Number of gaps behind an empirical distribution.
    pub samples: u64,
}

impl GapDistribution {
    pub fn analytic(l_max: usize) -> Result<Self> {
        let w = omega_table(l_max + 1)?;
        let probabilities = (1..=l_max)
            .map(|l| (l, second_difference(w[l + 1], w[l], w[l - 1])))
            .collect();
        Ok(Self {
            source: GapSource::Analytic,
            probabilities,
            samples: 0,
        })
    }

    pub fn get(&self, l: usize) -> f64 {
        self.probabilities.get(&l).copied().unwrap_or(0.0)
    }

    /// Binomial standard error of an empirical frequency.
    pub fn std_error(&self, l: usize) -> Option<f64> {
        (self.source == GapSource::Empirical && self.samples > 0).then(|| {
            let p = self.get(l);
            (p * (1.0 - p) / self.samples as f64).sqrt()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumRules {
    pub total_prob: f64,
    pub mean_gap: f64,
    /// Last `L` included; smaller than `l_max` if `G` fell below `1e-14`.
    pub l_stop: usize,
    /// Probability mass beyond `l_stop`, `2(ω(l_stop) - ω(l_stop + 1))`.
    pub remainder: f64,
}

/// `Σ G_{L/2}` and `Σ (L/2) G_{L/2}` over `L ≤ l_max`.
pub fn gap_sum_rules(l_max: usize) -> Result<SumRules> {
    if l_max == 0 {
        return Err(Error::InvalidParameter("l_max must be at least 1".into()));
    }
    let w = omega_table(l_max + 1)?;
    let mut total = 0.0;
    let mut mean = 0.0;
    let mut l_stop = l_max;
    for l in 1..=l_max {
        let g = second_difference(w[l + 1], w[l], w[l - 1]);
        total += g;
        mean += 0.5 * l as f64 * g;
        if g.abs() < 1e-14 && l > 2 {
            l_stop = l;
            break;
        }
    }
    Ok(SumRules {
        total_prob: total,
        mean_gap: mean,
        l_stop,
        remainder: 2.0 * (w[l_stop] - w[l_stop + 1]),
    })
}

/// `E z^{#B} = det(I + (z - 1) M_B)` for the kernel matrix restricted to `B`.
pub fn count_pgf(m_b: &DMatrix<f64>, z: Complex64) -> Complex64 {
    let n = m_b.nrows();
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let zm1 = z - 1.0;
    let a = DMatrix::from_fn(n, n, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        Complex64::new(delta, 0.0) + zm1 * m_b[(i, j)]
    });
    a.lu().determinant()
}

/// Histogram of consecutive index differences between points that both lie
/// at least `margin` sites inside their window.
pub fn empirical_gap_histogram(configs: &[LatticeConfiguration], margin: i64) -> Result<GapDistribution> {
    if margin < 0 {
        return Err(Error::InvalidParameter("margin must be non-negative".into()));
    }
    if configs.iter().any(|c| c.spacing() != LatticeSpacing::HALF) {
        return Err(Error::InvalidParameter("gap histograms need half-lattice configurations".into()));
    }
    let counts = configs
        .par_iter()
        .map(|c| {
            let w = c.window();
            let (lo, hi) = (w.start + margin, w.end - margin);
            let interior: Vec<i64> = c.indices().iter().copied().filter(|j| (lo..hi).contains(j)).collect();
            let mut h = BTreeMap::<usize, u64>::new();
            for pair in interior.windows(2) {
                *h.entry((pair[1] - pair[0]) as usize).or_default() += 1;
            }
            h
        })
        .reduce(BTreeMap::new, |mut acc, h| {
            for (k, v) in h {
                *acc.entry(k).or_default() += v;
            }
            acc
        });
    let total: u64 = counts.values().sum();
    if total == 0 {
        return Err(Error::EmptyInterior(margin));
    }
    Ok(GapDistribution {
        source: GapSource::Empirical,
        probabilities: counts.into_iter().map(|(k, v)| (k, v as f64 / total as f64)).collect(),
        samples: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sine_kernel::{kernel_matrix, kernel_submatrix};

    #[test]
    fn sigma_examples() {
        assert_eq!(build_sigma(1).matrix(), &DMatrix::from_element(1, 1, 1.0));
        assert_eq!(build_sigma(3).matrix()[(0, 2)], 0.0);
        let s = build_sigma(4);
        let q = 2.0 / PI;
        assert_eq!(s.matrix()[(0, 1)], q);
        assert_eq!(s.matrix()[(1, 0)], q);
        assert_eq!(s.matrix()[(0, 2)], 0.0);
        assert!((s.matrix()[(0, 3)] + q / 3.0).abs() < 1e-16);
        assert_eq!(build_sigma(0).size(), 0);
    }

    #[test]
    fn sigma_matches_kernel_window() {
        for l in [1usize, 5, 33] {
            let s = build_sigma(l).matrix * 0.5;
            let k = kernel_matrix(LatticeSpacing::HALF, l).unwrap();
            assert!((s - k.matrix()).amax() < 1e-16);
        }
    }

    #[test]
    fn omega_small_cases() {
        assert_eq!(omega(0).unwrap(), 1.0);
        assert!((omega(1).unwrap() - 0.5).abs() < 1e-15);
        let expected = 0.25 * (1.0 - 4.0 / (PI * PI));
        assert!((omega(2).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn gap_examples() {
        assert!((gap_probability(1).unwrap() - (0.5 - 2.0 / (PI * PI))).abs() < 1e-14);
        assert!((gap_probability(2).unwrap() - (0.25 + 2.0 / (PI * PI))).abs() < 1e-14);
        assert!((gap_probability(6).unwrap() - 0.000156).abs() < 5e-7);
        assert!(gap_probability(0).is_err());
    }

    #[test]
    fn omega_matches_extended_precision() {
        // 60-digit determinants of I - Σ_L/2.
        let reference = [
            (3, 0.023678816357662229),
            (5, 8.1262668080287211e-5),
            (8, 9.7402420971095688e-11),
            (10, 3.5136664313304567e-16),
            (15, 4.867695372297293e-35),
        ];
        for (l, want) in reference {
            let got = omega(l).unwrap();
            assert!(((got - want) / want).abs() < 1e-4, "L={l}: {got:e} vs {want:e}");
        }
        assert!((omega(3).unwrap() - 0.023678816357662229).abs() < 1e-15);
    }

    #[test]
    fn omega_decreasing_and_gaps_nonnegative() {
        let w = omega_table(41).unwrap();
        for l in 1..=20 {
            assert!(w[l] < w[l - 1], "ω not decreasing at {l}");
        }
        assert!(w.iter().all(|&x| (0.0..=1.0).contains(&x)));
        let g = GapDistribution::analytic(40).unwrap();
        for (l, p) in &g.probabilities {
            assert!((0.0..=1.0).contains(p), "G at L={l} is {p}");
        }
    }

    #[test]
    fn sum_rules_examples() {
        let r = gap_sum_rules(40).unwrap();
        assert!((r.total_prob - 1.0).abs() < 1e-6, "{r:?}");
        assert!((r.mean_gap - 1.0).abs() < 1e-5, "{r:?}");
        assert!(r.remainder.abs() < 1e-12);
        let r = gap_sum_rules(1).unwrap();
        assert!((r.total_prob - 0.297).abs() < 5e-4);
        assert!(gap_sum_rules(0).is_err());
    }

    #[test]
    fn pgf_examples() {
        let one = Complex64::new(1.0, 0.0);
        let b0 = kernel_submatrix(LatticeSpacing::HALF, &[0]);
        assert!((count_pgf(&b0, Complex64::new(0.0, 0.0)) - 0.5).norm() < 1e-15);
        let b = kernel_submatrix(LatticeSpacing::HALF, &[-3, 0, 1, 7, 8]);
        assert!((count_pgf(&b, one) - one).norm() < 1e-15);
        for l in [1usize, 3, 10] {
            let m = kernel_matrix(LatticeSpacing::HALF, l).unwrap();
            let p = count_pgf(m.matrix(), Complex64::new(0.0, 0.0));
            assert!((p.re - omega(l).unwrap()).abs() < 1e-12 && p.im == 0.0);
        }
    }

    #[test]
    fn pgf_derivative_is_trace() {
        let m = kernel_matrix(LatticeSpacing::HALF, 9).unwrap();
        let h = 1e-6;
        let plus = count_pgf(m.matrix(), Complex64::new(1.0 + h, 0.0));
        let minus = count_pgf(m.matrix(), Complex64::new(1.0 - h, 0.0));
        let deriv = (plus - minus) / (2.0 * h);
        assert!((deriv.re - m.trace()).abs() < 1e-8, "{deriv}");
        // complex step: exact to rounding
        let cs = count_pgf(m.matrix(), Complex64::new(1.0, 1e-20)).im / 1e-20;
        assert!((cs - m.trace()).abs() < 1e-10, "{cs}");
    }

    #[test]
    fn histogram_examples() {
        let c = LatticeConfiguration::new(LatticeSpacing::HALF, 0, 2, vec![0, 1]).unwrap();
        let h = empirical_gap_histogram(&[c.clone()], 0).unwrap();
        assert_eq!(h.get(1), 1.0);
        assert_eq!(h.samples, 1);
        assert!(matches!(empirical_gap_histogram(&[c], 1), Err(Error::EmptyInterior(1))));
        let other = LatticeConfiguration::new(LatticeSpacing::new(1.0).unwrap(), 0, 2, vec![0, 1]).unwrap();
        assert!(empirical_gap_histogram(&[other], 0).is_err());
    }
}
