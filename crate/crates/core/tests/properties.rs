use halfsine::correlation::{radius_for_tolerance, DEFAULT_SHIFT_NODES};
use halfsine::*;
use proptest::prelude::*;

fn half() -> LatticeSpacing {
    LatticeSpacing::HALF
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn admissible_spacings_pass_spectrum_check(a in 0.01..=1.0f64, n in 1usize..=256) {
        let rep = macchi_spectrum_check(LatticeSpacing::new(a).unwrap(), n, 1e-9).unwrap();
        prop_assert!(rep.pass, "a={a} n={n}: {rep:?}");
    }

    #[test]
    fn half_spacing_trace_is_exact(n in 1usize..400) {
        prop_assert_eq!(kernel_matrix(half(), n).unwrap().trace(), n as f64 / 2.0);
    }

    #[test]
    fn one_level_shifted_expectation_is_integral(b in 0.05..0.5f64, m in 2u32..=4, nu in -0.4..0.4f64) {
        let g = SincPower::new(b / m as f64, m).unwrap();
        let eta = BandLimitedTestFunction::modulated(vec![g], vec![nu], 1.0).unwrap();
        let r = radius_for_tolerance(&eta, half(), 1e-9).unwrap();
        let v = ah_npoint_expectation(&eta, r, DEFAULT_SHIFT_NODES).unwrap();
        let integral = continuous_correlation_integral(&eta, &QuadratureSpec::with_tol(1e-10)).unwrap();
        prop_assert!((v - integral).abs() < 1e-8, "{eta}: {v} vs {integral}");
    }

    #[test]
    fn one_level_defect_is_alias_sum(bw in 0.6..3.0f64, a in 0.3..1.0f64) {
        let eta = BandLimitedTestFunction::sinc_power(bw / 2.0, 2).unwrap();
        let a = LatticeSpacing::new(a).unwrap();
        let discrete = discrete_correlation_sum_to(&eta, a, 1e-10).unwrap();
        let integral = continuous_correlation_integral(&eta, &QuadratureSpec::with_tol(1e-10)).unwrap();
        let alias = poisson_alias_sum(&eta, a).unwrap();
        prop_assert!((discrete - integral - alias).abs() < 1e-8);
    }

    #[test]
    fn models_agree_on_triangles(w in 0.05..1.0f64, c in -1.0..1.0f64) {
        // triangle of half-width w centred at ±c, kept inside [-1, 1]
        let c = c * (1.0 - w);
        let g = SincPower::new(w, 1).unwrap();
        let f = BandLimitedTestFunction::modulated(vec![g], vec![c], 1.0).unwrap();
        let alt = form_factor_theoretical(&f, FormFactorModel::Alt).unwrap();
        let gue = form_factor_theoretical(&f, FormFactorModel::Gue).unwrap();
        prop_assert!((alt - gue).abs() < 1e-13);
    }

    #[test]
    fn sampled_configurations_are_simple_and_reproducible(seed in any::<u64>(), n in 1usize..200) {
        let m = kernel_matrix(half(), n).unwrap();
        let s = SeededStream::new(seed, 3);
        let a = sample_window(&m, s).unwrap();
        prop_assert!(a.indices().windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(a, sample_window(&m, s).unwrap());
    }
}

#[test]
fn shift_invariant_site_occupancy() {
    // every interior site of a 64-site window is occupied with frequency ½
    let m = kernel_matrix(half(), 64).unwrap();
    let sampler = WindowSampler::new(&m).unwrap();
    let reps = 4000u64;
    let mut counts = [0u32; 64];
    for r in 0..reps {
        let c = sampler.sample(&mut SeededStream::new(11, r).rng()).unwrap();
        for &j in c.indices() {
            counts[j as usize] += 1;
        }
    }
    let se = (0.25 / reps as f64).sqrt();
    for (j, &k) in counts.iter().enumerate() {
        let p = k as f64 / reps as f64;
        assert!((p - 0.5).abs() < 5.0 * se, "site {j}: {p}");
    }
}

#[test]
fn count_moments_follow_traces() {
    let m = kernel_matrix(half(), 100).unwrap();
    let mom = empirical_count_moments(&m, 20_000, SeededStream::new(99, 0)).unwrap();
    assert!((mom.mean_count - 50.0).abs() <= 3.0 * mom.std_error());
    let tr2 = (m.matrix() * m.matrix()).trace();
    let want_var = 50.0 - tr2;
    assert!((mom.variance - want_var).abs() < 0.1 * want_var, "{} vs {want_var}", mom.variance);
}

#[test]
fn ergodic_density_and_seed_stability() {
    let eta = BandLimitedTestFunction::sinc_power(0.45, 2).unwrap();
    let a = build_sequence(SeededStream::new(1, 0), 8192).unwrap();
    let b = build_sequence(SeededStream::new(2, 0), 8192).unwrap();
    assert!((a.density() - 1.0).abs() < 0.02);
    let va = lattice_average_statistic(&a, &eta, 4096).unwrap();
    let vb = lattice_average_statistic(&b, &eta, 4096).unwrap();
    let target = eta.fourier(&[0.0]).re;
    assert!((va - target).abs() < 0.03 && (vb - target).abs() < 0.03, "{va} {vb} {target}");
    assert!((va - vb).abs() < 0.05);
}

#[test]
fn bridging_between_lattice_and_continuous_averages() {
    let eta = BandLimitedTestFunction::sinc_power(0.45, 2).unwrap();
    let c = build_sequence(SeededStream::new(3, 0), 20_000).unwrap();
    let t = 2000.0;
    let cont = continuous_average_statistic(&c, &eta, t).unwrap();
    let lat = halfsine::ergodic::lattice_average_from(&c, &eta, t, (2.0 * t) as usize).unwrap();
    assert!((cont - lat).abs() < 0.01, "{cont} vs {lat}");
}
