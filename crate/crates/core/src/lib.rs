//! Sampling and numerical verification of the half-lattice discrete sine
//! process and its uniformly shifted version.
//!
//! * [`sine_kernel`]: the kernel `S(x) = sin(πx)/(πx)`, window matrices on
//!   `aℤ` and the spectral admissibility check.
//! * [`dpp_sampler`]: exact window sampling, long tiled samples and shifted
//!   configurations.
//! * [`gap_stats`]: gap probabilities from Toeplitz determinants, sum rules
//!   and empirical gap histograms.
//! * [`testfn`], [`correlation`], [`form_factor`]: band-limited test
//!   functions, lattice versus continuous correlation sums and two-point
//!   form factors.
//! * [`ergodic`]: shift averages along a single sampled sequence.

pub mod correlation;
pub mod dpp_sampler;
pub mod ergodic;
pub mod error;
pub mod form_factor;
pub mod gap_stats;
pub mod quadrature;
pub mod rng;
pub mod sine_kernel;
pub mod testfn;

pub use correlation::{
    ah_npoint_expectation, bandlimited_agreement_check, continuous_correlation_integral, discrete_correlation_sum,
    discrete_correlation_sum_to, distinct_tuple_sum, lattice_l1_norm, offdiagonal_vanishing_check, poisson_alias_sum,
    radius_for_tolerance, sine_determinant, AgreementReport, OffdiagonalReport, QuadratureSpec,
};
pub use dpp_sampler::{
    empirical_count_moments, sample_ah_configuration, sample_half_lattice, sample_window, AhConfiguration,
    CountMoments, LatticeConfiguration, TiledSampler, WindowSampler,
};
pub use ergodic::{
    build_sequence, continuous_average_statistic, convergence_diagnostic, lattice_average_statistic, AverageSchedule,
    ConvergenceReport, DeterministicSequence, DiagnosticRow,
};
pub use error::{Error, Result};
pub use form_factor::{empirical_form_factor, form_factor_theoretical, FormFactorEstimate, FormFactorModel};
pub use gap_stats::{
    closed_form_gap, count_pgf, empirical_gap_histogram, gap_probability, gap_sum_rules, omega, omega_table,
    GapDistribution, GapSource, SumRules,
};
pub use rng::SeededStream;
pub use sine_kernel::{
    kernel_matrix, kernel_submatrix, macchi_spectrum_check, rayleigh_witness, sinc, KernelWindowMatrix,
    LatticeSpacing, MacchiReport,
};
pub use testfn::{BandLimitedTestFunction, ModulatedProduct, SincPower};
