//! Three-dimensional complex FFTs over the row-major `(x, y, z)` layout used by
//! every field in the crate (`z` fastest).

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::Grid;

/// Planned transforms for one grid shape. Plans are shared process-wide.
pub(crate) struct Fft3 {
    dims: [usize; 3],
    forward: [Arc<dyn Fft<f64>>; 3],
    inverse: [Arc<dyn Fft<f64>>; 3],
}

fn plan_cache() -> &'static Mutex<HashMap<[usize; 3], Arc<Fft3>>> {
    static CACHE: OnceLock<Mutex<HashMap<[usize; 3], Arc<Fft3>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl Fft3 {
    pub(crate) fn for_grid(grid: Grid) -> Arc<Fft3> {
        let dims = grid.dims();
        let mut cache = plan_cache().lock().expect("fft plan cache poisoned");
        cache
            .entry(dims)
            .or_insert_with(|| {
                let mut planner = FftPlanner::<f64>::new();
                let forward = dims.map(|n| planner.plan_fft_forward(n));
                let inverse = dims.map(|n| planner.plan_fft_inverse(n));
                Arc::new(Fft3 {
                    dims,
                    forward,
                    inverse,
                })
            })
            .clone()
    }

    /// Unnormalized forward transform followed by division by the point count,
    /// so that the zero mode holds the domain average.
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
        let scale = 1.0 / data.len() as f64;
        for c in data.iter_mut() {
            *c *= scale;
        }
    }

    /// Unnormalized inverse transform (synthesis of the Fourier series).
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
    }

    fn run(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>; 3]) {
        let [nx, ny, nz] = self.dims;
        debug_assert_eq!(data.len(), nx * ny * nz);
        let scratch_len = plans.iter().map(|p| p.get_inplace_scratch_len()).max().unwrap_or(0);
        let mut scratch = vec![Complex64::default(); scratch_len];
        let mut tmp = vec![Complex64::default(); data.len()];

        // z: lines are contiguous
        plans[2].process_with_scratch(data, &mut scratch);

        // y: transpose each x-slab to make y contiguous
        let slab = ny * nz;
        for (src, dst) in data.chunks_exact_mut(slab).zip(tmp.chunks_exact_mut(slab)) {
            transpose(src, dst, ny, nz);
            plans[1].process_with_scratch(dst, &mut scratch);
            transpose(dst, src, nz, ny);
        }

        // x: treat the array as an nx × (ny·nz) matrix
        transpose(data, &mut tmp, nx, slab);
        plans[0].process_with_scratch(&mut tmp, &mut scratch);
        transpose(&tmp, data, slab, nx);
    }
}

/// Writes the transpose of the `rows × cols` row-major matrix `src` into `dst`.
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const BLOCK: usize = 16;
    for r0 in (0..rows).step_by(BLOCK) {
        for c0 in (0..cols).step_by(BLOCK) {
            for r in r0..(r0 + BLOCK).min(rows) {
                for c in c0..(c0 + BLOCK).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

/// 1D transforms of a z-profile, same normalization as [`Fft3`].
pub(crate) fn forward_1d(values: &[f64]) -> Vec<Complex64> {
    let n = values.len();
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

pub(crate) fn inverse_1d(coeffs: &[Complex64]) -> Vec<f64> {
    let mut buf = coeffs.to_vec();
    FftPlanner::<f64>::new().plan_fft_inverse(buf.len()).process(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}
