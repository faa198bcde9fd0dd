//! A fixed half-integer sequence drawn once from the half-lattice sine
//! process, and shift averages of correlation statistics along it.
//!
//! Averaging `Σ_distinct η(c - s)` over lattice shifts `s ∈ ½ℤ` recovers the
//! lattice sum `(½)^n Σ_k η(k) det[S]`; averaging over real shifts
//! `t ∈ [T, 2T]` recovers the continuous sine-process value for the
//! correlation class.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::{continuous_correlation_integral, discrete_correlation_sum_to, distinct_tuple_sum, QuadratureSpec};
use crate::dpp_sampler::sample_half_lattice;
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::rng::SeededStream;
use crate::sine_kernel::LatticeSpacing;
use crate::testfn::BandLimitedTestFunction;

/// Envelope tail mass beyond the partner radius.
pub const ERGODIC_TAIL_TOL: f64 = 1e-4;

/// Extra distance kept from either end of the sequence.
pub const ERGODIC_EXTRA_MARGIN: f64 = 32.0;

/// Panel width of the shift quadrature.
pub const SHIFT_PANEL: f64 = 0.125;

/// Gauss–Legendre nodes per shift panel.
pub const SHIFT_PANEL_NODES: usize = 4;

/// Increasing half-integers, stored doubled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterministicSequence {
    doubled: Vec<i64>,
    seed: SeededStream,
    n_sites: usize,
}

impl DeterministicSequence {
    /// Points `doubled[j] / 2` on the window `[0, n_sites / 2)`.
    pub fn from_doubled(doubled: Vec<i64>, seed: SeededStream, n_sites: usize) -> Result<Self> {
        if doubled.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("sequence must be strictly increasing".into()));
        }
        if doubled.iter().any(|&d| d < 0 || d >= n_sites as i64) {
            return Err(Error::InvalidParameter(format!("sequence leaves the window of {n_sites} sites")));
        }
        Ok(Self { doubled, seed, n_sites })
    }

    pub fn doubled(&self) -> &[i64] {
        &self.doubled
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        self.doubled.iter().map(|&d| d as f64 * 0.5)
    }

    pub fn len(&self) -> usize {
        self.doubled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doubled.is_empty()
    }

    pub fn seed(&self) -> SeededStream {
        self.seed
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// `[0, (n_sites - 1)/2]`.
    pub fn span(&self) -> (f64, f64) {
        (0.0, (self.n_sites as f64 - 1.0) * 0.5)
    }

    /// Consecutive differences in doubled units.
    pub fn doubled_gaps(&self) -> impl Iterator<Item = i64> + '_ {
        self.doubled.windows(2).map(|w| w[1] - w[0])
    }

    /// Points per unit length over the window.
    pub fn density(&self) -> f64 {
        self.len() as f64 / (self.n_sites as f64 * 0.5)
    }

    /// Header lines, then one half-integer per line.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(10 * self.len() + 64);
        let _ = writeln!(out, "# seed={}", self.seed.seed);
        let _ = writeln!(out, "# stream={}", self.seed.stream_index);
        let _ = writeln!(out, "# n_sites={}", self.n_sites);
        for &d in &self.doubled {
            if d % 2 == 0 {
                let _ = writeln!(out, "{}", d / 2);
            } else {
                let _ = writeln!(out, "{}.5", d / 2);
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut seed = None;
        let mut stream = None;
        let mut n_sites = None;
        let mut doubled = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(rest) = line.strip_prefix('#') {
                let Some((k, v)) = rest.split_once('=') else { continue };
                let v = v.trim();
                let bad = || Error::Parse(format!("bad header value {line:?}"));
                match k.trim() {
                    "seed" => seed = Some(v.parse::<u64>().map_err(|_| bad())?),
                    "stream" => stream = Some(v.parse::<u64>().map_err(|_| bad())?),
                    "n_sites" => n_sites = Some(v.parse::<usize>().map_err(|_| bad())?),
                    _ => {}
                }
                continue;
            }
            let x: f64 = line.parse().map_err(|_| Error::Parse(format!("not a number: {line:?}")))?;
            let d = 2.0 * x;
            if d.fract() != 0.0 {
                return Err(Error::Parse(format!("{line} is not a half-integer")));
            }
            doubled.push(d as i64);
        }
        let n_sites = n_sites.ok_or_else(|| Error::Parse("missing n_sites header".into()))?;
        let seed = SeededStream::new(seed.unwrap_or(0), stream.unwrap_or(0));
        Self::from_doubled(doubled, seed, n_sites)
    }
}

/// One configuration of the half-lattice process on `n_sites` sites.
pub fn build_sequence(seed: SeededStream, n_sites: usize) -> Result<DeterministicSequence> {
    let c = sample_half_lattice(n_sites, seed)?;
    let start = c.window().start;
    let doubled = c.indices().iter().map(|&j| j - start).collect();
    DeterministicSequence::from_doubled(doubled, seed, n_sites)
}

/// Partner radius plus the fixed extra margin, rounded up to a half-integer.
pub fn ergodic_margin(eta: &BandLimitedTestFunction) -> f64 {
    ((eta.effective_radius(ERGODIC_TAIL_TOL) + ERGODIC_EXTRA_MARGIN) * 2.0).ceil() / 2.0
}

fn partner_radius(eta: &BandLimitedTestFunction) -> f64 {
    eta.effective_radius(ERGODIC_TAIL_TOL)
}

/// `Σ_distinct η(c - s)` with partners restricted to `|c_j - s| ≤ radius`.
fn statistic_at(eta: &BandLimitedTestFunction, pts: &[f64], s: f64, radius: f64, buf: &mut Vec<f64>) -> Result<f64> {
    let lo = pts.partition_point(|&x| x < s - radius);
    let hi = pts.partition_point(|&x| x <= s + radius);
    buf.clear();
    buf.extend(pts[lo..hi].iter().map(|&x| x - s));
    distinct_tuple_sum(eta, buf)
}

/// `(1/N) Σ_{ℓ<N} Σ_distinct η(c - s_0 - ℓ/2)`, with `s_0` one margin in
/// from the start of the sequence.
pub fn lattice_average_statistic(c: &DeterministicSequence, eta: &BandLimitedTestFunction, n_shifts: usize) -> Result<f64> {
    lattice_average_from(c, eta, c.span().0 + ergodic_margin(eta), n_shifts)
}

/// As [`lattice_average_statistic`] with the first shift `origin` (a
/// half-integer at least one margin inside the sequence).
pub fn lattice_average_from(
    c: &DeterministicSequence,
    eta: &BandLimitedTestFunction,
    origin: f64,
    n_shifts: usize,
) -> Result<f64> {
    if n_shifts == 0 {
        return Err(Error::InvalidParameter("need at least one shift".into()));
    }
    if (2.0 * origin).fract() != 0.0 {
        return Err(Error::InvalidParameter(format!("first shift {origin} is not a half-integer")));
    }
    if eta.is_zero() {
        return Ok(0.0);
    }
    let margin = ergodic_margin(eta);
    let (s0, s1) = c.span();
    let last = origin + (n_shifts - 1) as f64 * 0.5;
    if origin - margin < s0 || last + margin > s1 {
        return Err(Error::SpanExhausted(format!(
            "{n_shifts} half-unit shifts from {origin} with margin {margin} need the span to reach {}, it ends at {s1}",
            last + margin
        )));
    }
    let radius = partner_radius(eta);
    if eta.dim() == 1 {
        // each point contributes a contiguous run of half-lattice values of η
        let r2 = (2.0 * radius).floor() as i64;
        let mut prefix = Vec::with_capacity((2 * r2 + 2) as usize);
        prefix.push(0.0);
        let mut acc = 0.0;
        for d in -r2..=r2 {
            acc += eta.eval(&[d as f64 * 0.5]);
            prefix.push(acc);
        }
        let o2 = (2.0 * origin) as i64;
        let n = n_shifts as i64;
        let total: f64 = c
            .doubled()
            .iter()
            .map(|&p| {
                let lo = (p - o2 - (n - 1)).max(-r2);
                let hi = (p - o2).min(r2);
                if lo > hi {
                    0.0
                } else {
                    prefix[(hi + r2 + 1) as usize] - prefix[(lo + r2) as usize]
                }
            })
            .sum();
        return Ok(total / n_shifts as f64);
    }
    let pts: Vec<f64> = c.points().collect();
    let chunks: Vec<Result<f64>> = (0..n_shifts.div_ceil(1024))
        .into_par_iter()
        .map(|k| {
            let mut buf = Vec::new();
            let mut acc = 0.0;
            for l in (k * 1024)..((k + 1) * 1024).min(n_shifts) {
                acc += statistic_at(eta, &pts, origin + l as f64 * 0.5, radius, &mut buf)?;
            }
            Ok(acc)
        })
        .collect();
    let mut total = 0.0;
    for v in chunks {
        total += v?;
    }
    Ok(total / n_shifts as f64)
}

/// `(1/T) ∫_T^{2T} Σ_distinct η(c - t) dt` by composite Gauss–Legendre in
/// `t` (panels of [`SHIFT_PANEL`], [`SHIFT_PANEL_NODES`] nodes each).
///
/// The sequence must cover `[T - margin, 2T + margin]`.
pub fn continuous_average_statistic(c: &DeterministicSequence, eta: &BandLimitedTestFunction, t_scale: f64) -> Result<f64> {
    if !(t_scale > 0.0 && t_scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("averaging scale must be positive, got {t_scale}")));
    }
    if eta.is_zero() {
        return Ok(0.0);
    }
    let margin = ergodic_margin(eta);
    let (s0, s1) = c.span();
    if t_scale - margin < s0 || 2.0 * t_scale + margin > s1 {
        return Err(Error::SpanExhausted(format!(
            "averaging over [{t_scale}, {}] with margin {margin} needs [{}, {}], the sequence spans [{s0}, {s1}]",
            2.0 * t_scale,
            t_scale - margin,
            2.0 * t_scale + margin
        )));
    }
    let radius = partner_radius(eta);
    let h = SHIFT_PANEL;
    let panels = (t_scale / h).ceil() as usize;
    let h = t_scale / panels as f64;
    let gl = GaussLegendre::new(SHIFT_PANEL_NODES);

    if eta.dim() == 1 {
        // Substituting x = c_j - t maps the t-panels of every point onto one
        // grid of x-panels (points are multiples of h when T/h is an
        // integer multiple); integrate η once per x-panel and sum by ranges.
        let aligned = (0.5 / h).fract() == 0.0;
        if aligned {
            let offset = (-t_scale).rem_euclid(h);
            let q_lo = ((-radius - offset) / h).floor() as i64 - 1;
            let q_hi = ((radius - offset) / h).ceil() as i64 + 1;
            let mut prefix = vec![0.0];
            let mut acc = 0.0;
            for q in q_lo..q_hi {
                let a = offset + q as f64 * h;
                acc += gl
                    .mapped(a, a + h)
                    .filter(|(x, _)| x.abs() <= radius)
                    .map(|(x, w)| w * eta.eval(&[x]))
                    .sum::<f64>();
                prefix.push(acc);
            }
            let total: f64 = c
                .points()
                .map(|x| {
                    let lo = (((x - 2.0 * t_scale - offset) / h).round() as i64).clamp(q_lo, q_hi);
                    let hi = (((x - t_scale - offset) / h).round() as i64).clamp(q_lo, q_hi);
                    prefix[(hi - q_lo) as usize] - prefix[(lo - q_lo) as usize]
                })
                .sum();
            return Ok(total / t_scale);
        }
    }

    let pts: Vec<f64> = c.points().collect();
    let chunks: Vec<Result<f64>> = (0..panels.div_ceil(256))
        .into_par_iter()
        .map(|k| {
            let mut buf = Vec::new();
            let mut acc = 0.0;
            for p in (k * 256)..((k + 1) * 256).min(panels) {
                let a = t_scale + p as f64 * h;
                for (t, w) in gl.mapped(a, a + h) {
                    acc += w * statistic_at(eta, &pts, t, radius, &mut buf)?;
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = 0.0;
    for v in chunks {
        total += v?;
    }
    Ok(total / t_scale)
}

/// Scales for a convergence diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AverageSchedule {
    /// Numbers of half-unit lattice shifts; target is the lattice sum.
    Shifts(Vec<usize>),
    /// Averaging scales `T`; target is the continuous integral.
    Times(Vec<f64>),
}

impl AverageSchedule {
    /// `2^lo, …, 2^hi` lattice shifts.
    pub fn doubling_shifts(lo: u32, hi: u32) -> Self {
        AverageSchedule::Shifts((lo..=hi).map(|k| 1usize << k).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub scale: f64,
    pub value: f64,
    pub target: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<DiagnosticRow>,
    /// Least-squares slope of `log(deviation + 1e-12)` against `log(scale)`.
    pub trend_slope: f64,
    pub non_increasing: bool,
}

impl ConvergenceReport {
    pub fn final_deviation(&self) -> Option<f64> {
        self.rows.last().map(|r| r.deviation)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("scale,value,target,deviation\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", r.scale, r.value, r.target, r.deviation);
        }
        out
    }
}

/// Averages along a schedule with their deviations from the process value.
/// No rate is asserted; the trend is summarised by a log-log slope.
pub fn convergence_diagnostic(
    c: &DeterministicSequence,
    eta: &BandLimitedTestFunction,
    schedule: &AverageSchedule,
) -> Result<ConvergenceReport> {
    let rows = match schedule {
        AverageSchedule::Shifts(ns) => {
            let target = if eta.is_zero() { 0.0 } else { discrete_correlation_sum_to(eta, LatticeSpacing::HALF, 1e-6)? };
            ns.iter()
                .map(|&n| {
                    let value = lattice_average_statistic(c, eta, n)?;
                    Ok(DiagnosticRow { scale: n as f64, value, target, deviation: (value - target).abs() })
                })
                .collect::<Result<Vec<_>>>()?
        }
        AverageSchedule::Times(ts) => {
            let target = continuous_correlation_integral(eta, &QuadratureSpec::with_tol(1e-6))?;
            ts.iter()
                .map(|&t| {
                    let value = continuous_average_statistic(c, eta, t)?;
                    Ok(DiagnosticRow { scale: t, value, target, deviation: (value - target).abs() })
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    let trend_slope = log_log_slope(&rows);
    Ok(ConvergenceReport {
        rows,
        trend_slope,
        non_increasing: trend_slope <= 0.0,
    })
}

fn log_log_slope(rows: &[DiagnosticRow]) -> f64 {
    if rows.len() < 2 {
        return 0.0;
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.scale.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| (r.deviation + 1e-12).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}
