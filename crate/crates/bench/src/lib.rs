//! Fixtures shared by the benchmarks.

use rotcon_core::evolution::{AmplitudeNorm, InitialSpec, SimConfig, TimeStep};
use rotcon_core::spectral::{random, Grid, SpectralField};

/// Seeded zero-horizontal-mean field on an `n³` grid.
pub fn sample_field(n: usize) -> SpectralField {
    let grid = Grid::cubic(n).expect("valid grid");
    let mut f = random::band_limited(grid, 1, (n as i64 / 4).max(1), 1).expect("band fits");
    f.project_zero_horizontal_mean();
    f
}

/// Small random run configuration on an `n³` grid.
pub fn sample_config(n: usize, epsilon: f64) -> SimConfig {
    let grid = Grid::cubic(n).expect("valid grid");
    let initial = InitialSpec::RandomBandLimited { kmin: 1, kmax: 4, amplitude: 1.0, norm: AmplitudeNorm::Max, seed: Some(1) };
    SimConfig::new(grid, epsilon, TimeStep::Fixed(0.01), 1.0, initial)
}
