//! Fixtures shared by the criterion benchmarks.

use halfsine::{BandLimitedTestFunction, SincPower};

/// A one- and a two-dimensional band-limited function inside `(-1, 1)^n`.
pub fn representative_functions() -> (BandLimitedTestFunction, BandLimitedTestFunction) {
    let g = SincPower::new(0.45, 2).expect("valid envelope");
    (
        BandLimitedTestFunction::product(vec![g]).expect("valid function"),
        BandLimitedTestFunction::product(vec![g, g]).expect("valid function"),
    )
}
