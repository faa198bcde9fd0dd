//! Two-point form factors: `∫ f̂(ξ) K(ξ) dξ` for the two candidate models,
//! and the empirical pair statistic `(1/T) Σ_{j,k} f(γ_j - γ_k)` on a
//! sampled configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::dpp_sampler::AhConfiguration;
use crate::quadrature::GaussLegendre;
use crate::testfn::BandLimitedTestFunction;

/// Number of contiguous batches behind the empirical standard error.
pub const FORM_FACTOR_BATCHES: usize = 40;

/// Minimum partner radius around each outer point.
pub const MIN_FORM_FACTOR_MARGIN: f64 = 32.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormFactorModel {
    /// `Σ_m δ(ξ - 2m)` plus the period-2 extension of `|ξ|` from `[-1, 1]`.
    Alt,
    /// `δ(ξ) + min(|ξ|, 1)`.
    Gue,
}

impl FormFactorModel {
    pub const ALL: [FormFactorModel; 2] = [FormFactorModel::Alt, FormFactorModel::Gue];

    /// Absolutely continuous part of the form factor.
    pub fn density(self, xi: f64) -> f64 {
        match self {
            FormFactorModel::Alt => (xi - 2.0 * (xi / 2.0).round()).abs(),
            FormFactorModel::Gue => xi.abs().min(1.0),
        }
    }

    /// Locations of the point masses inside `[lo, hi]`.
    pub fn atoms(self, lo: f64, hi: f64) -> Vec<f64> {
        match self {
            FormFactorModel::Alt => {
                let first = (lo / 2.0).ceil() as i64;
                let last = (hi / 2.0).floor() as i64;
                (first..=last).map(|m| 2.0 * m as f64).collect()
            }
            FormFactorModel::Gue => {
                if lo <= 0.0 && 0.0 <= hi {
                    vec![0.0]
                } else {
                    Vec::new()
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FormFactorModel::Alt => "alt",
            FormFactorModel::Gue => "gue",
        }
    }
}

/// `∫ f̂(ξ) K(ξ) dξ` with point masses evaluated as `f̂` at the atoms.
///
/// `f̂` is piecewise polynomial (B-spline pieces) and `K` is piecewise
/// linear, so a 16-node rule per piece between all kinks is exact up to
/// rounding.
pub fn form_factor_theoretical(f: &BandLimitedTestFunction, model: FormFactorModel) -> Result<f64> {
    if f.dim() != 1 {
        return Err(Error::UnsupportedTransform(format!(
            "form factors need a one-dimensional test function, got dimension {}",
            f.dim()
        )));
    }
    let boxes = f.support_boxes();
    if boxes.is_empty() {
        return Ok(0.0);
    }
    let lo = boxes.iter().map(|b| b.0[0].0).fold(f64::INFINITY, f64::min);
    let hi = boxes.iter().map(|b| b.0[0].1).fold(f64::NEG_INFINITY, f64::max);

    let mut breaks: Vec<f64> = vec![lo, hi];
    for t in f.terms() {
        let g = &t.envelopes[0];
        let nu = t.frequencies[0];
        for k in g.fourier_knots() {
            breaks.push(k + nu);
            breaks.push(k - nu);
        }
    }
    breaks.extend((lo.ceil() as i64..=hi.floor() as i64).map(|k| k as f64));
    breaks.retain(|&x| x >= lo && x <= hi);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let gl = GaussLegendre::new(16);
    let continuous = gl.piecewise(&breaks, |xi| f.fourier(&[xi]).re * model.density(xi));
    let atoms: f64 = model.atoms(lo, hi).into_iter().map(|xi| f.fourier(&[xi]).re).sum();
    Ok(continuous + atoms)
}

/// Partner radius for the empirical statistic: the envelope radius at
/// tail mass `1e-3`, at least [`MIN_FORM_FACTOR_MARGIN`].
pub fn default_form_factor_margin(f: &BandLimitedTestFunction) -> f64 {
    f.effective_radius(1e-3).max(MIN_FORM_FACTOR_MARGIN).ceil()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormFactorEstimate {
    pub value: f64,
    pub std_error: f64,
    pub outer_points: usize,
    pub window_length: f64,
    pub margin: f64,
}

/// `(1/T) Σ_j Σ_k f(γ_j - γ_k)` with the diagonal `j = k` included.
///
/// Outer points `γ_j` range over `[s + margin, s + margin + T]`, where `s`
/// is the left end of the sampled span; partners `γ_k` are all points
/// within `margin` of `γ_j`, so edge pairs are not lost. The standard error
/// comes from [`FORM_FACTOR_BATCHES`] contiguous batches of the outer
/// window.
pub fn empirical_form_factor(
    config: &AhConfiguration,
    f: &BandLimitedTestFunction,
    window_length: f64,
    margin: f64,
) -> Result<FormFactorEstimate> {
    if f.dim() != 1 {
        return Err(Error::UnsupportedTransform("pair statistics need a one-dimensional f".into()));
    }
    if !(window_length > 0.0 && margin >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "window length {window_length} and margin {margin} must be positive"
        )));
    }
    let (s0, s1) = config.span();
    let lo = s0 + margin;
    let hi = lo + window_length;
    if hi + margin > s1 {
        return Err(Error::WindowTooShort(format!(
            "[{lo}, {hi}] plus a margin of {margin} does not fit in the sampled span [{s0}, {s1}]"
        )));
    }
    let pts = config.points();
    let batches = FORM_FACTOR_BATCHES;
    let batch_len = window_length / batches as f64;
    let mut batch_sums = vec![0.0; batches];
    let mut outer = 0usize;
    let mut left = 0usize;
    for &x in &pts {
        if x < lo || x > hi {
            continue;
        }
        outer += 1;
        while pts[left] < x - margin {
            left += 1;
        }
        let mut s = 0.0;
        for &y in pts[left..].iter().take_while(|&&y| y <= x + margin) {
            s += f.eval(&[x - y]);
        }
        let b = (((x - lo) / batch_len) as usize).min(batches - 1);
        batch_sums[b] += s;
    }
    let means: Vec<f64> = batch_sums.iter().map(|s| s / batch_len).collect();
    let value = batch_sums.iter().sum::<f64>() / window_length;
    let mean = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    Ok(FormFactorEstimate {
        value,
        std_error: (var / batches as f64).sqrt(),
        outer_points: outer,
        window_length,
        margin,
    })
}

/// One row of a form-factor table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormFactorRow {
    pub test_function: String,
    pub alt: f64,
    pub gue: f64,
    pub empirical: Option<f64>,
    pub std_error: Option<f64>,
}

pub fn form_factor_row(
    f: &BandLimitedTestFunction,
    sample: Option<(&AhConfiguration, f64)>,
) -> Result<FormFactorRow> {
    let alt = form_factor_theoretical(f, FormFactorModel::Alt)?;
    let gue = form_factor_theoretical(f, FormFactorModel::Gue)?;
    let est = match sample {
        Some((config, t)) => Some(empirical_form_factor(config, f, t, default_form_factor_margin(f))?),
        None => None,
    };
    Ok(FormFactorRow {
        test_function: f.to_string(),
        alt,
        gue,
        empirical: est.as_ref().map(|e| e.value),
        std_error: est.as_ref().map(|e| e.std_error),
    })
}

/// `S(x)^2`, whose transform is the triangle `(1 - |ξ|)_+`.
pub fn triangle_test_function() -> BandLimitedTestFunction {
    BandLimitedTestFunction::sinc_power(1.0, 1).expect("valid parameters")
}

/// `2 cos(4πx) S(x)^2`, whose transform is the pair of triangles at `±2`.
pub fn discriminator_test_function() -> BandLimitedTestFunction {
    let g = crate::testfn::SincPower::new(1.0, 1).expect("valid parameters");
    BandLimitedTestFunction::modulated(vec![g], vec![2.0], 2.0).expect("valid parameters")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpp_sampler::LatticeConfiguration;
    use crate::sine_kernel::LatticeSpacing;
    use crate::testfn::SincPower;
    use proptest::prelude::*;

    #[test]
    fn triangle_values() {
        let f = triangle_test_function();
        for m in FormFactorModel::ALL {
            let v = form_factor_theoretical(&f, m).unwrap();
            assert!((v - 4.0 / 3.0).abs() < 1e-14, "{m:?}: {v}");
        }
    }

    #[test]
    fn discriminator_values() {
        let f = discriminator_test_function();
        let alt = form_factor_theoretical(&f, FormFactorModel::Alt).unwrap();
        let gue = form_factor_theoretical(&f, FormFactorModel::Gue).unwrap();
        assert!((alt - 8.0 / 3.0).abs() < 1e-14, "{alt}");
        assert!((gue - 2.0).abs() < 1e-14, "{gue}");
    }

    proptest! {
        #[test]
        fn models_agree_inside_unit_band(b in 0.05..1.0f64, m in 1u32..=4, nu in -0.5..0.5f64) {
            let g = SincPower::new(b / m as f64, m).unwrap();
            // keep the support [nu - b, nu + b] inside [-1, 1]
            let nu = nu * (1.0 - b).max(0.0) * 2.0;
            let f = BandLimitedTestFunction::modulated(vec![g], vec![nu], 1.0).unwrap();
            prop_assume!(f.fourier_within(1.0));
            let alt = form_factor_theoretical(&f, FormFactorModel::Alt).unwrap();
            let gue = form_factor_theoretical(&f, FormFactorModel::Gue).unwrap();
            prop_assert!((alt - gue).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_multidimensional() {
        let g = SincPower::new(1.0, 1).unwrap();
        let f = BandLimitedTestFunction::product(vec![g, g]).unwrap();
        assert!(matches!(
            form_factor_theoretical(&f, FormFactorModel::Alt),
            Err(Error::UnsupportedTransform(_))
        ));
    }

    #[test]
    fn single_point_gives_f0_over_t() {
        let base = LatticeConfiguration::new(LatticeSpacing::HALF, 0, 1000, vec![500]).unwrap();
        let c = AhConfiguration::new(base, 0.0).unwrap();
        let f = triangle_test_function();
        let est = empirical_form_factor(&c, &f, 300.0, 32.0).unwrap();
        assert!((est.value - 1.0 / 300.0).abs() < 1e-15);
        assert_eq!(est.outer_points, 1);
        assert!(matches!(
            empirical_form_factor(&c, &f, 1000.0, 32.0),
            Err(Error::WindowTooShort(_))
        ));
    }

    #[test]
    fn margin_from_tail() {
        assert_eq!(default_form_factor_margin(&triangle_test_function()), 203.0);
        let fast = BandLimitedTestFunction::sinc_power(0.5, 4).unwrap();
        assert_eq!(default_form_factor_margin(&fast), MIN_FORM_FACTOR_MARGIN);
    }
}
