use std::path::PathBuf;

use halfsine::correlation::{radius_for_tolerance, DEFAULT_SHIFT_NODES};
use halfsine::dpp_sampler::{edge_margin, DEFAULT_TILE_SITES, EXACT_WINDOW_LIMIT};
use halfsine::ergodic::ergodic_margin;
use halfsine::form_factor::{default_form_factor_margin, discriminator_test_function, triangle_test_function};
use halfsine::gap_stats::PRINTED_GAPS;
use halfsine::*;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{CommonArgs, Defaults, Format, RunConfig};
use crate::output::{csv_header, emit, json_header, pretty, Cell, Table};
use crate::CliError;

/// Distance allowed between the analytic table and the rounded quoted values.
const PRINTED_TOL: f64 = 5e-4;

/// Refuses spacings above 1, where the kernel is not a contraction and no
/// point process exists.
fn macchi_gate(a: f64) -> Result<LatticeSpacing, CliError> {
    let spacing = LatticeSpacing::new(a)?;
    if !spacing.admits_process() {
        let (q, norm) = rayleigh_witness(spacing);
        return Err(CliError::Precondition(format!(
            "a = {a} violates the Macchi condition 0 ≤ K ≤ I: the indicator of one site has \
             ⟨ψ, Kψ⟩ = {q} > ⟨ψ, ψ⟩ = {norm}, so no determinantal process exists"
        )));
    }
    Ok(spacing)
}

fn require_half_lattice(cfg: &RunConfig) -> Result<(), CliError> {
    macchi_gate(cfg.a)?;
    if cfg.a != 0.5 {
        return Err(CliError::Usage(format!(
            "`{}` is defined on the half lattice only; drop --a or set it to 0.5",
            cfg.command
        )));
    }
    Ok(())
}

pub fn gaps(args: CommonArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve("gaps", args, Defaults { sites: 512, reps: 0, lmax: 6 })?;
    require_half_lattice(&cfg)?;
    let tol = cfg.tol.unwrap_or(1e-12);
    let analytic = GapDistribution::analytic(cfg.lmax)?;

    let empirical = if cfg.reps > 0 {
        let m = kernel_matrix(LatticeSpacing::HALF, cfg.sites.min(EXACT_WINDOW_LIMIT))?;
        if cfg.sites > EXACT_WINDOW_LIMIT {
            return Err(CliError::Usage(format!(
                "empirical gap windows are limited to {EXACT_WINDOW_LIMIT} sites"
            )));
        }
        let sampler = WindowSampler::new(&m)?;
        let configs: Vec<LatticeConfiguration> = (0..cfg.reps as u64)
            .into_par_iter()
            .map(|r| sampler.sample(&mut SeededStream::new(cfg.seed, r).rng()))
            .collect::<halfsine::Result<_>>()?;
        Some(empirical_gap_histogram(&configs, edge_margin(cfg.sites) as i64)?)
    } else {
        None
    };

    let mut table = Table::new(&["L", "gap", "G_analytic", "G_closed_form", "G_empirical", "mc_stderr"]);
    let mut mismatches = Vec::new();
    for l in 1..=cfg.lmax {
        let g = analytic.get(l);
        let closed = closed_form_gap(l);
        if let Some(c) = closed {
            if (g - c).abs() > tol {
                mismatches.push(format!("L={l}: analytic {g} vs closed form {c}"));
            }
        }
        if let Some(&(_, printed)) = PRINTED_GAPS.iter().find(|(pl, _)| *pl == l) {
            if (g - printed).abs() > PRINTED_TOL {
                mismatches.push(format!("L={l}: analytic {g} vs quoted {printed}"));
            }
        }
        let (emp, se) = match &empirical {
            Some(h) => (Some(h.get(l)), h.std_error(l)),
            None => (None, None),
        };
        table.push(vec![l.into(), (l as f64 / 2.0).into(), g.into(), closed.into(), emp.into(), se.into()]);
    }
    if let Some(h) = &empirical {
        table.note("empirical_gaps", json!(h.samples));
    }
    emit(&cfg, &table.render(&cfg))?;
    if mismatches.is_empty() {
        Ok(())
    } else {
        Err(CliError::Mismatch(mismatches.join("; ")))
    }
}

pub fn sample(args: CommonArgs, shifted: bool) -> Result<(), CliError> {
    let cfg = RunConfig::resolve("sample", args, Defaults { sites: 1024, reps: 1, lmax: 6 })?;
    let a = macchi_gate(cfg.a)?;
    if shifted && a != LatticeSpacing::HALF {
        return Err(CliError::Usage("--shifted needs the half lattice (a = 0.5)".into()));
    }
    if cfg.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1 for sampling".into()));
    }
    let tiled = if cfg.sites > EXACT_WINDOW_LIMIT {
        Some(TiledSampler::new(a, DEFAULT_TILE_SITES)?)
    } else {
        None
    };
    let window = if tiled.is_none() { Some(WindowSampler::new(&kernel_matrix(a, cfg.sites)?)?) } else { None };

    let mut records = Vec::with_capacity(cfg.reps);
    for r in 0..cfg.reps as u64 {
        let stream = SeededStream::new(cfg.seed, r);
        let record = if shifted {
            let c = sample_ah_configuration(cfg.sites, stream)?;
            (c.to_csv(), c.to_json()?)
        } else {
            let c = match (&tiled, &window) {
                (Some(t), _) => t.sample(cfg.sites, stream)?,
                (None, Some(w)) => w.sample(&mut stream.rng())?,
                (None, None) => unreachable!("one sampler is always built"),
            };
            (c.to_csv(), c.to_json()?)
        };
        records.push(record);
    }

    let text = match cfg.format {
        Format::Csv => {
            let mut out = csv_header(&cfg);
            for (r, (csv, _)) in records.iter().enumerate() {
                out.push_str(&format!("# replicate={r}\n"));
                out.push_str(csv);
            }
            out
        }
        Format::Json => {
            let mut doc = json_header(&cfg);
            let configs = records
                .iter()
                .map(|(_, j)| serde_json::from_str::<Value>(j))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Io(e.to_string()))?;
            doc.insert("configurations".into(), Value::Array(configs));
            pretty(Value::Object(doc))
        }
    };
    emit(&cfg, &text)
}

const SUITES: [&str; 5] = ["agreement", "offdiagonal", "shifted", "macchi", "sumrules"];

fn selected_suites(spec: Option<&str>) -> Result<Vec<&'static str>, CliError> {
    let Some(spec) = spec else {
        return Ok(SUITES.to_vec());
    };
    let mut out = Vec::new();
    for name in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let known = SUITES
            .iter()
            .find(|s| **s == name)
            .ok_or_else(|| CliError::Usage(format!("unknown suite `{name}` (known: {})", SUITES.join(", "))))?;
        if !out.contains(known) {
            out.push(*known);
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage(format!("empty suite selection (known: {})", SUITES.join(", "))));
    }
    Ok(out)
}

fn sp(b: f64, m: u32) -> SincPower {
    SincPower::new(b, m).expect("valid envelope")
}

fn agreement_cases() -> Vec<BandLimitedTestFunction> {
    let ok = "valid test function";
    vec![
        BandLimitedTestFunction::sinc_power(0.45, 2).expect(ok),
        BandLimitedTestFunction::sinc_power(0.3, 3).expect(ok),
        BandLimitedTestFunction::modulated(vec![sp(0.4, 2)], vec![0.1], 1.0).expect(ok),
        BandLimitedTestFunction::modulated(vec![sp(0.2, 2)], vec![0.5], 1.0).expect(ok),
        BandLimitedTestFunction::sinc_power(0.2, 4).expect(ok),
        BandLimitedTestFunction::product(vec![sp(0.45, 2), sp(0.45, 2)]).expect(ok),
        BandLimitedTestFunction::modulated(vec![sp(0.2, 2), sp(0.3, 2)], vec![0.3, -0.2], 1.0).expect(ok),
    ]
}

/// Band (per coordinate) below which the lattice sum on `aℤ` has no alias
/// terms: `1/a` for one point, `1/a - 1` once the sine determinant enters.
fn alias_free_band(a: f64, n: usize) -> f64 {
    if n == 1 {
        1.0 / a
    } else {
        1.0 / a - 1.0
    }
}

struct Check {
    suite: &'static str,
    case: String,
    a: f64,
    value: f64,
    reference: f64,
    tol: f64,
    expected_pass: bool,
}

impl Check {
    fn defect(&self) -> f64 {
        (self.value - self.reference).abs()
    }

    fn pass(&self) -> bool {
        self.defect() <= self.tol
    }
}

fn agreement_checks(a: LatticeSpacing, tol: Option<f64>, out: &mut Vec<Check>) -> Result<(), CliError> {
    let mut runs: Vec<(LatticeSpacing, BandLimitedTestFunction)> =
        agreement_cases().into_iter().map(|eta| (a, eta)).collect();
    if a == LatticeSpacing::HALF {
        // sharpness: the same band on a coarser lattice aliases
        runs.push((LatticeSpacing::new(0.9)?, agreement_cases().swap_remove(5)));
    }
    for (a, eta) in runs {
        let n = eta.dim();
        let tol = tol.unwrap_or(if n == 1 { 1e-8 } else { 1e-4 });
        let limit = alias_free_band(a.value(), n);
        let expected_pass = limit > 0.0 && eta.fourier_within(limit);
        let rep = bandlimited_agreement_check(&eta, a, tol)?;
        out.push(Check {
            suite: "agreement",
            case: eta.to_string(),
            a: a.value(),
            value: rep.discrete,
            reference: rep.continuous,
            tol,
            expected_pass,
        });
    }
    Ok(())
}

fn offdiagonal_checks(tol: Option<f64>, out: &mut Vec<Check>) -> Result<(), CliError> {
    let tol = tol.unwrap_or(1e-6);
    let cases = [
        BandLimitedTestFunction::modulated(vec![sp(0.25, 2)], vec![1.5], 1.0)?,
        BandLimitedTestFunction::modulated(vec![sp(1.0 / 6.0, 3)], vec![1.5], 1.0)?,
        BandLimitedTestFunction::modulated(vec![sp(1.0 / 6.0, 3), sp(1.0 / 6.0, 3)], vec![1.5, 1.5], 1.0)?,
    ];
    for eta in &cases {
        let r = radius_for_tolerance(eta, LatticeSpacing::HALF, tol / 10.0)?;
        let rep = offdiagonal_vanishing_check(eta, r)?;
        out.push(Check {
            suite: "offdiagonal",
            case: rep.test_function,
            a: 0.5,
            value: rep.value,
            reference: 0.0,
            tol,
            expected_pass: rep.in_offdiagonal_class,
        });
    }
    Ok(())
}

fn shifted_checks(tol: Option<f64>, out: &mut Vec<Check>) -> Result<(), CliError> {
    let tol = tol.unwrap_or(1e-4);
    let cases = [
        BandLimitedTestFunction::sinc_power(0.45, 2)?,
        BandLimitedTestFunction::product(vec![sp(0.45, 2), sp(0.45, 2)])?,
        BandLimitedTestFunction::modulated(vec![sp(0.2, 2), sp(0.3, 2)], vec![0.3, -0.2], 1.0)?,
    ];
    for eta in &cases {
        let r = radius_for_tolerance(eta, LatticeSpacing::HALF, tol / 10.0)?;
        let shifted = ah_npoint_expectation(eta, r, DEFAULT_SHIFT_NODES)?;
        let continuous = continuous_correlation_integral(eta, &QuadratureSpec::with_tol(tol / 10.0))?;
        out.push(Check {
            suite: "shifted",
            case: eta.to_string(),
            a: 0.5,
            value: shifted,
            reference: continuous,
            tol,
            expected_pass: eta.in_cube_class(),
        });
    }
    Ok(())
}

fn macchi_checks(a: f64, sites: usize, tol: Option<f64>, out: &mut Vec<Check>) -> Result<(), CliError> {
    let tol = tol.unwrap_or(1e-10);
    let n = sites.min(EXACT_WINDOW_LIMIT);
    let mut spacings = vec![0.25, 0.5, 0.75, 1.0];
    if !spacings.contains(&a) {
        spacings.push(a);
    }
    spacings.push(1.5);
    for s in spacings {
        let spacing = LatticeSpacing::new(s)?;
        let rep = macchi_spectrum_check(spacing, n, tol)?;
        // report the side of [0, 1] that is closer to being violated
        let (value, reference) = if -rep.min_eigenvalue > rep.max_eigenvalue - 1.0 {
            (rep.min_eigenvalue.min(0.0), 0.0)
        } else {
            (rep.max_eigenvalue.max(1.0), 1.0)
        };
        out.push(Check {
            suite: "macchi",
            case: format!("spectrum on {n} sites"),
            a: s,
            value,
            reference,
            tol,
            expected_pass: spacing.admits_process(),
        });
    }
    let (q, norm) = rayleigh_witness(LatticeSpacing::new(1.5)?);
    out.push(Check {
        suite: "macchi",
        case: "one-site Rayleigh quotient".into(),
        a: 1.5,
        value: q / norm,
        reference: 1.0,
        tol,
        expected_pass: false,
    });
    Ok(())
}

fn sum_rule_checks(lmax: usize, tol: Option<f64>, out: &mut Vec<Check>) -> Result<(), CliError> {
    let tol = tol.unwrap_or(1e-5);
    let s = gap_sum_rules(lmax)?;
    for (case, value) in [("total probability", s.total_prob), ("mean gap", s.mean_gap)] {
        out.push(Check {
            suite: "sumrules",
            case: format!("{case}, L ≤ {lmax}"),
            a: 0.5,
            value,
            reference: 1.0,
            tol,
            expected_pass: true,
        });
    }
    Ok(())
}

pub fn verify(args: CommonArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve("verify", args, Defaults { sites: 128, reps: 0, lmax: 40 })?;
    let suites = selected_suites(cfg.suite.as_deref())?;
    let a = macchi_gate(cfg.a)?;

    let mut checks = Vec::new();
    for suite in &suites {
        match *suite {
            "agreement" => agreement_checks(a, cfg.tol, &mut checks)?,
            "offdiagonal" => offdiagonal_checks(cfg.tol, &mut checks)?,
            "shifted" => shifted_checks(cfg.tol, &mut checks)?,
            "macchi" => macchi_checks(cfg.a, cfg.sites, cfg.tol, &mut checks)?,
            "sumrules" => sum_rule_checks(cfg.lmax, cfg.tol, &mut checks)?,
            other => unreachable!("suite {other} is validated above"),
        }
    }

    let mut table =
        Table::new(&["suite", "case", "a", "value", "reference", "defect", "tol", "category", "pass"]);
    let mut failures = Vec::new();
    for c in &checks {
        let category = if c.expected_pass { "expected-pass" } else { "expected-fail" };
        if c.expected_pass && !c.pass() {
            failures.push(format!("{} {} (a={}): defect {:.3e} > {:.1e}", c.suite, c.case, c.a, c.defect(), c.tol));
        }
        table.push(vec![
            Cell::from(c.suite),
            c.case.clone().into(),
            c.a.into(),
            c.value.into(),
            c.reference.into(),
            c.defect().into(),
            c.tol.into(),
            category.into(),
            c.pass().into(),
        ]);
    }
    let expected = checks.iter().filter(|c| c.expected_pass).count();
    table.note("passed", json!(format!("{} of {expected}", expected - failures.len())));
    emit(&cfg, &table.render(&cfg))?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Mismatch(format!("{} check(s) failed: {}", failures.len(), failures.join("; "))))
    }
}

pub fn formfactor(args: CommonArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve("formfactor", args, Defaults { sites: 20_000, reps: 1, lmax: 6 })?;
    require_half_lattice(&cfg)?;
    let functions = [triangle_test_function(), discriminator_test_function()];
    let margin = functions.iter().map(default_form_factor_margin).fold(0.0, f64::max);

    let samples = (0..cfg.reps as u64)
        .map(|r| sample_ah_configuration(cfg.sites, SeededStream::new(cfg.seed, r)))
        .collect::<halfsine::Result<Vec<_>>>()?;
    let window = (cfg.sites as f64 - 1.0) / 2.0 - 2.0 * margin;
    if cfg.reps > 0 && window < 1.0 {
        return Err(CliError::Precondition(format!(
            "{} sites leave no room for a pair window with margin {margin}",
            cfg.sites
        )));
    }
    let window = window.floor();

    let mut table = Table::new(&["test_function", "ALT", "GUE", "empirical", "stderr"]);
    for f in &functions {
        let alt = form_factor_theoretical(f, FormFactorModel::Alt)?;
        let gue = form_factor_theoretical(f, FormFactorModel::Gue)?;
        let (emp, se) = if samples.is_empty() {
            (None, None)
        } else {
            let ests = samples
                .iter()
                .map(|c| empirical_form_factor(c, f, window, margin))
                .collect::<halfsine::Result<Vec<_>>>()?;
            let k = ests.len() as f64;
            let mean = ests.iter().map(|e| e.value).sum::<f64>() / k;
            let se = ests.iter().map(|e| e.std_error * e.std_error).sum::<f64>().sqrt() / k;
            (Some(mean), Some(se))
        };
        table.push(vec![f.to_string().into(), alt.into(), gue.into(), emp.into(), se.into()]);
    }
    if !samples.is_empty() {
        table.note("window_length", json!(window));
        table.note("margin", json!(margin));
    }
    emit(&cfg, &table.render(&cfg))
}

pub fn ergodic(args: CommonArgs, sequence_out: Option<PathBuf>) -> Result<(), CliError> {
    let cfg = RunConfig::resolve("ergodic", args, Defaults { sites: 100_000, reps: 1, lmax: 6 })?;
    require_half_lattice(&cfg)?;
    let (eta, default_tol) = match cfg.order {
        1 => (BandLimitedTestFunction::sinc_power(0.45, 2)?, 0.01),
        _ => (BandLimitedTestFunction::product(vec![sp(0.45, 2), sp(0.45, 2)])?, 0.02),
    };
    let tol = cfg.tol.unwrap_or(default_tol);
    let c = build_sequence(SeededStream::new(cfg.seed, 0), cfg.sites)?;
    if let Some(path) = &sequence_out {
        std::fs::write(path, c.to_text())
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    }

    // averages over [T, 2T] need one margin of sequence on either side
    let margin = ergodic_margin(&eta);
    let t_max = (c.span().1 - margin) / 2.0;
    let times: Vec<f64> = (7..)
        .map(|k| f64::from(1u32 << k))
        .take_while(|&t| t <= t_max && t >= margin)
        .collect();
    if times.is_empty() {
        return Err(CliError::Precondition(format!(
            "{} sites are too few for an average at T = 128 with margin {margin}",
            cfg.sites
        )));
    }
    let report = convergence_diagnostic(&c, &eta, &AverageSchedule::Times(times))?;

    let mut table = Table::new(&["scale", "value", "target", "deviation"]);
    for r in &report.rows {
        table.push(vec![r.scale.into(), r.value.into(), r.target.into(), r.deviation.into()]);
    }
    table.note("test_function", json!(eta.to_string()));
    table.note("trend_slope", json!(report.trend_slope));
    table.note("non_increasing", json!(report.non_increasing));
    emit(&cfg, &table.render(&cfg))?;

    let last = report.final_deviation().unwrap_or(f64::NAN);
    if last <= tol {
        Ok(())
    } else {
        Err(CliError::Mismatch(format!("final deviation {last:.3e} exceeds {tol:.1e}")))
    }
}
