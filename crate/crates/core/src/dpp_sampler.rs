//! Exact sampling of the discrete sine process on finite windows.
//!
//! The restriction of a determinantal process to a finite set of sites is
//! again determinantal, with the restricted kernel. Sampling the window
//! matrix therefore draws the exact law of the infinite process seen through
//! that window. The sampler is the spectral one: every eigenvector is kept
//! independently with probability equal to its eigenvalue, and the resulting
//! projection process is drawn one point at a time. At each step a site is
//! chosen with probability proportional to the diagonal of the current
//! conditional projection kernel; the basis is then restricted to the
//! orthogonal complement of that coordinate by one Gram–Schmidt step.
//!
//! Long configurations ([`TiledSampler`]) are built by concatenating
//! independent exact windows. Within a tile the law is exact; correlations
//! across tile boundaries are dropped.

use std::fmt::Write as _;
use std::ops::Range;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededStream;
use crate::sine_kernel::{kernel_matrix, KernelWindowMatrix, LatticeSpacing};

/// Largest window sampled in one piece by [`sample_ah_configuration`].
pub const EXACT_WINDOW_LIMIT: usize = 1024;

/// Default tile length for long configurations.
pub const DEFAULT_TILE_SITES: usize = 1024;

/// Sites discarded at each window end by statistical consumers.
pub fn edge_margin(n_sites: usize) -> usize {
    32.max(n_sites / 10)
}

/// Occupied sites of a finite window of `aℤ`; index `j` is the point `j·a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfiguration {
    a: LatticeSpacing,
    window_start: i64,
    window_sites: usize,
    indices: Vec<i64>,
}

impl LatticeConfiguration {
    pub fn new(
        a: LatticeSpacing,
        window_start: i64,
        window_sites: usize,
        indices: Vec<i64>,
    ) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "configuration indices must be strictly increasing".into(),
            ));
        }
        let end = window_start + window_sites as i64;
        if indices.iter().any(|&j| j < window_start || j >= end) {
            return Err(Error::InvalidParameter(format!(
                "configuration index outside window {window_start}..{end}"
            )));
        }
        Ok(Self {
            a,
            window_start,
            window_sites,
            indices,
        })
    }

    pub fn spacing(&self) -> LatticeSpacing {
        self.a
    }

    pub fn indices(&self) -> &[i64] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Lattice sites covered by the window that produced this configuration.
    pub fn window(&self) -> Range<i64> {
        self.window_start..self.window_start + self.window_sites as i64
    }

    pub fn window_sites(&self) -> usize {
        self.window_sites
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let a = self.a.value();
        self.indices.iter().map(move |&j| j as f64 * a)
    }

    /// Consecutive index differences, i.e. gaps in units of `a`.
    pub fn index_gaps(&self) -> impl Iterator<Item = i64> + '_ {
        self.indices.windows(2).map(|w| w[1] - w[0])
    }

    pub fn occupies(&self, site: i64) -> bool {
        self.indices.binary_search(&site).is_ok()
    }
}

/// A half-spacing configuration translated by `-shift`, `shift ∈ [0, ½)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AhConfiguration {
    base: LatticeConfiguration,
    shift: f64,
}

impl AhConfiguration {
    pub fn new(base: LatticeConfiguration, shift: f64) -> Result<Self> {
        if base.spacing() != LatticeSpacing::HALF {
            return Err(Error::InvalidParameter(
                "alternative-hypothesis configurations live on the half lattice".into(),
            ));
        }
        if !(0.0..0.5).contains(&shift) {
            return Err(Error::InvalidParameter(format!("shift {shift} outside [0, 1/2)")));
        }
        Ok(Self { base, shift })
    }

    pub fn base(&self) -> &LatticeConfiguration {
        &self.base
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn points(&self) -> Vec<f64> {
        self.base
            .indices()
            .iter()
            .map(|&j| j as f64 * 0.5 - self.shift)
            .collect()
    }

    /// Real interval spanned by the sampled window (first to last site).
    pub fn span(&self) -> (f64, f64) {
        let w = self.base.window();
        (w.start as f64 * 0.5 - self.shift, (w.end - 1) as f64 * 0.5 - self.shift)
    }

    /// Consecutive gaps in doubled units: gap `g` means distance `g/2`.
    pub fn doubled_gaps(&self) -> impl Iterator<Item = i64> + '_ {
        self.base.index_gaps()
    }
}

/// Sampler bound to one window matrix; the eigendecomposition is computed
/// once and reused for every draw.
#[derive(Debug, Clone)]
pub struct WindowSampler {
    a: LatticeSpacing,
    n: usize,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl WindowSampler {
    pub fn new(m: &KernelWindowMatrix) -> Result<Self> {
        let spectrum = m.spectrum()?;
        Ok(Self {
            a: m.spacing(),
            n: m.size(),
            eigenvalues: spectrum.eigenvalues,
            eigenvectors: spectrum.eigenvectors,
        })
    }

    pub fn window_sites(&self) -> usize {
        self.n
    }

    /// One draw, window sites `window_start..window_start + n`.
    pub fn sample_at<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        window_start: i64,
    ) -> Result<LatticeConfiguration> {
        let mut sites = self.sample_sites(rng)?;
        sites.sort_unstable();
        let indices: Vec<i64> = sites.into_iter().map(|s| window_start + s as i64).collect();
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        LatticeConfiguration::new(self.a, window_start, self.n, indices)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<LatticeConfiguration> {
        self.sample_at(rng, 0)
    }

    fn sample_sites<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<usize>> {
        let n = self.n;
        let kept: Vec<usize> = self
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|&(_, &l)| rng.random::<f64>() < l)
            .map(|(i, _)| i)
            .collect();
        let k = kept.len();
        if k == 0 {
            return Ok(Vec::new());
        }

        // Row-major copy of the kept eigenvectors: rows[i*k..(i+1)*k] = V[i, :].
        let mut rows = vec![0.0; n * k];
        for (c, &col) in kept.iter().enumerate() {
            for i in 0..n {
                rows[i * k + c] = self.eigenvectors[(i, col)];
            }
        }
        // Diagonal of the current conditional projection kernel.
        let mut diag: Vec<f64> = rows.chunks_exact(k).map(|r| r.iter().map(|v| v * v).sum()).collect();
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
        let mut chosen = Vec::with_capacity(k);
        let mut taken = vec![false; n];

        for step in 0..k {
            let total: f64 = diag.iter().sum();
            let expected = (k - step) as f64;
            if total < 0.5 * expected {
                return Err(Error::RankLoss { step, rank: k, residual: total });
            }
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &d) in diag.iter().enumerate() {
                if taken[i] || d <= 0.0 {
                    continue;
                }
                pick = Some(i);
                if target < d {
                    break;
                }
                target -= d;
            }
            let j = pick.ok_or(Error::RankLoss { step, rank: k, residual: total })?;

            // Column j of the conditional kernel.
            let row_j = &rows[j * k..(j + 1) * k];
            let mut col: Vec<f64> = rows
                .chunks_exact(k)
                .map(|r| r.iter().zip(row_j).map(|(x, y)| x * y).sum())
                .collect();
            for b in &basis {
                let w = b[j];
                if w != 0.0 {
                    col.iter_mut().zip(b).for_each(|(c, bi)| *c -= w * bi);
                }
            }
            let pivot = col[j];
            if !(pivot > 1e-12) {
                return Err(Error::RankLoss { step, rank: k, residual: pivot });
            }
            let scale = pivot.sqrt().recip();
            col.iter_mut().for_each(|c| *c *= scale);
            for (d, c) in diag.iter_mut().zip(&col) {
                *d = (*d - c * c).max(0.0);
            }
            diag[j] = 0.0;
            taken[j] = true;
            chosen.push(j);
            basis.push(col);
        }
        Ok(chosen)
    }
}

/// One exact draw from the window matrix `m`.
pub fn sample_window(m: &KernelWindowMatrix, stream: SeededStream) -> Result<LatticeConfiguration> {
    WindowSampler::new(m)?.sample(&mut stream.rng())
}

/// Long half-lattice configurations assembled from independent exact tiles.
#[derive(Debug, Clone)]
pub struct TiledSampler {
    sampler: WindowSampler,
}

impl TiledSampler {
    pub fn new(a: LatticeSpacing, tile_sites: usize) -> Result<Self> {
        Ok(Self {
            sampler: WindowSampler::new(&kernel_matrix(a, tile_sites)?)?,
        })
    }

    pub fn tile_sites(&self) -> usize {
        self.sampler.window_sites()
    }

    /// Configuration on sites `0..n_sites`; tile `t` draws from
    /// `stream.derive(t)`.
    pub fn sample(&self, n_sites: usize, stream: SeededStream) -> Result<LatticeConfiguration> {
        if n_sites == 0 {
            return Err(Error::InvalidParameter("window needs at least one site".into()));
        }
        let w = self.tile_sites();
        let tiles = n_sites.div_ceil(w);
        let pieces: Vec<Vec<i64>> = (0..tiles)
            .into_par_iter()
            .map(|t| {
                let start = (t * w) as i64;
                self.sampler
                    .sample_at(&mut stream.derive(t as u64).rng(), start)
                    .map(|c| c.indices)
            })
            .collect::<Result<_>>()?;
        let indices: Vec<i64> = pieces
            .into_iter()
            .flatten()
            .filter(|&j| j < n_sites as i64)
            .collect();
        LatticeConfiguration::new(self.sampler.a, 0, n_sites, indices)
    }
}

/// A half-lattice configuration on `n_sites` sites, exact for windows up to
/// [`EXACT_WINDOW_LIMIT`] and tiled beyond.
pub fn sample_half_lattice(n_sites: usize, stream: SeededStream) -> Result<LatticeConfiguration> {
    if n_sites == 0 {
        return Err(Error::InvalidParameter("window needs at least one site".into()));
    }
    if n_sites <= EXACT_WINDOW_LIMIT {
        sample_window(&kernel_matrix(LatticeSpacing::HALF, n_sites)?, stream)
    } else {
        TiledSampler::new(LatticeSpacing::HALF, DEFAULT_TILE_SITES)?.sample(n_sites, stream)
    }
}

/// Base configuration plus an independent uniform shift. The shift is the
/// first draw of `stream` after the window sample has been produced.
pub fn sample_ah_configuration(n_sites: usize, stream: SeededStream) -> Result<AhConfiguration> {
    sample_ah_configuration_with(n_sites, stream, None)
}

/// As [`sample_ah_configuration`], optionally forcing the shift.
pub fn sample_ah_configuration_with(
    n_sites: usize,
    stream: SeededStream,
    forced_shift: Option<f64>,
) -> Result<AhConfiguration> {
    let base = sample_half_lattice(n_sites, stream)?;
    let shift = match forced_shift {
        Some(s) => s,
        None => shift_draw(stream),
    };
    AhConfiguration::new(base, shift)
}

/// The shift uses a dedicated child of the stream so that it does not depend
/// on how many variates the window sample consumed.
fn shift_draw(stream: SeededStream) -> f64 {
    0.5 * stream.derive(u64::MAX).rng().random::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountMoments {
    pub mean_count: f64,
    pub variance: f64,
    pub reps: usize,
}

impl CountMoments {
    pub fn std_error(&self) -> f64 {
        (self.variance / self.reps as f64).sqrt()
    }
}

/// Monte Carlo mean and variance of the number of points in the window.
/// Replicate `r` draws from `stream.replicate(r)`.
pub fn empirical_count_moments(
    m: &KernelWindowMatrix,
    reps: usize,
    stream: SeededStream,
) -> Result<CountMoments> {
    if reps == 0 {
        return Err(Error::InvalidParameter("need at least one replicate".into()));
    }
    let sampler = WindowSampler::new(m)?;
    let counts: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|r| sampler.sample(&mut stream.replicate(r).rng()).map(|c| c.len() as f64))
        .collect::<Result<_>>()?;
    let mean = counts.iter().sum::<f64>() / reps as f64;
    let variance = if reps > 1 {
        counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (reps - 1) as f64
    } else {
        0.0
    };
    Ok(CountMoments {
        mean_count: mean,
        variance,
        reps,
    })
}

#[derive(Serialize, Deserialize)]
struct ConfigurationRecord {
    a: f64,
    shift: f64,
    window_start: i64,
    window_sites: usize,
    indices: Vec<i64>,
}

impl LatticeConfiguration {
    /// CSV: `#`-prefixed header lines, then `index` and one index per line.
    pub fn to_csv(&self) -> String {
        csv_with_shift(self, 0.0)
    }

    pub fn to_json(&self) -> Result<String> {
        json_with_shift(self, 0.0)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        Ok(parse_csv(text)?.0)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(parse_json(text)?.0)
    }
}

impl AhConfiguration {
    pub fn to_csv(&self) -> String {
        csv_with_shift(&self.base, self.shift)
    }

    pub fn to_json(&self) -> Result<String> {
        json_with_shift(&self.base, self.shift)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let (base, shift) = parse_csv(text)?;
        Self::new(base, shift)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let (base, shift) = parse_json(text)?;
        Self::new(base, shift)
    }
}

fn csv_with_shift(c: &LatticeConfiguration, shift: f64) -> String {
    let mut out = String::with_capacity(16 * c.len() + 96);
    let _ = writeln!(out, "# a={}", c.a.value());
    let _ = writeln!(out, "# shift={shift}");
    let _ = writeln!(out, "# window_start={}", c.window_start);
    let _ = writeln!(out, "# window_sites={}", c.window_sites);
    out.push_str("index\n");
    for j in &c.indices {
        let _ = writeln!(out, "{j}");
    }
    out
}

fn json_with_shift(c: &LatticeConfiguration, shift: f64) -> Result<String> {
    Ok(serde_json::to_string(&ConfigurationRecord {
        a: c.a.value(),
        shift,
        window_start: c.window_start,
        window_sites: c.window_sites,
        indices: c.indices.clone(),
    })?)
}

fn parse_csv(text: &str) -> Result<(LatticeConfiguration, f64)> {
    let mut a = None;
    let mut shift = 0.0;
    let mut start = 0i64;
    let mut sites = None;
    let mut indices = Vec::new();
    let bad = |what: &str| Error::Parse(what.to_string());
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        if let Some(meta) = line.strip_prefix('#') {
            let Some((k, v)) = meta.split_once('=') else { continue };
            let v = v.trim();
            match k.trim() {
                "a" => a = Some(v.parse::<f64>().map_err(|_| bad("a"))?),
                "shift" => shift = v.parse().map_err(|_| bad("shift"))?,
                "window_start" => start = v.parse().map_err(|_| bad("window_start"))?,
                "window_sites" => sites = Some(v.parse::<usize>().map_err(|_| bad("window_sites"))?),
                _ => {}
            }
        } else if line != "index" {
            indices.push(line.parse::<i64>().map_err(|_| bad(line))?);
        }
    }
    let a = LatticeSpacing::new(a.ok_or_else(|| bad("missing a"))?)?;
    let sites = sites.unwrap_or_else(|| indices.last().map_or(0, |&l| (l - start + 1).max(0) as usize));
    Ok((LatticeConfiguration::new(a, start, sites, indices)?, shift))
}

fn parse_json(text: &str) -> Result<(LatticeConfiguration, f64)> {
    let r: ConfigurationRecord = serde_json::from_str(text)?;
    let base = LatticeConfiguration::new(LatticeSpacing::new(r.a)?, r.window_start, r.window_sites, r.indices)?;
    Ok((base, r.shift))
}
