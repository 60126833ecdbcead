//! Spatially correlated noise on a square grid.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::rng::StageRng;

/// Gaussian-blurred white noise with unit marginal variance. `sigma` is the
/// correlation length in cells; the grid is padded by three sigmas so the
/// edges are as smooth as the interior.
pub(crate) fn smooth_field(n: usize, sigma: f64, rng: &mut StageRng) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as usize;
    let kernel: Vec<f64> = (0..=2 * radius)
        .map(|k| {
            let d = k as f64 - radius as f64;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let norm = kernel.iter().map(|k| k * k).sum::<f64>();
    let m = n + 2 * radius;
    let white: Vec<f64> = (0..m * m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    // Horizontal pass over all padded rows, keeping only the output columns.
    let mut rows = vec![0.0; m * n];
    for r in 0..m {
        let src = &white[r * m..(r + 1) * m];
        for c in 0..n {
            rows[r * n + c] = kernel.iter().zip(&src[c..c + kernel.len()]).map(|(k, v)| k * v).sum();
        }
    }
    let mut out = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            let mut s = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                s += w * rows[(r + k) * n + c];
            }
            out[r * n + c] = s / norm;
        }
    }
    out
}
