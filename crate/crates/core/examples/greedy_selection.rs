//! Greedy weighted-ensemble selection on synthetic out-of-fold predictions,
//! checked against an exhaustive search over the weight simplex.
//!
//! cargo run --release --example greedy_selection -- [iterations] [seed]

use plumestack::ensemble::{greedy_weighted_ensemble, SelectionMetric};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn mse(y: &[f64], p: &[f64]) -> f64 {
    y.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64
}

fn main() -> plumestack::Result<()> {
    let mut args = std::env::args().skip(1);
    let iterations: usize = args.next().map_or(10, |s| s.parse().expect("iterations must be an integer"));
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed must be an integer"));
    let mut r = ChaCha8Rng::seed_from_u64(seed);

    let n = 500;
    let y: Vec<f64> = (0..n).map(|_| r.sample(StandardNormal)).collect();
    // Three imperfect predictors: biased, over-confident, and noisy.
    let specs = [("biased", 0.4, 1.0, 0.5), ("overconfident", 0.0, 1.4, 0.4), ("noisy", 0.0, 1.0, 0.9)];
    let names: Vec<String> = specs.iter().map(|s| s.0.to_string()).collect();
    let cols: Vec<Vec<f64>> = specs
        .iter()
        .map(|&(_, bias, scale, noise)| {
            y.iter().map(|v| scale * v + bias + noise * r.sample::<f64, _>(StandardNormal)).collect()
        })
        .collect();
    let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();

    for (name, c) in names.iter().zip(&cols) {
        println!("{name:<14} MSE {:.4}", mse(&y, c));
    }
    let ens = greedy_weighted_ensemble(&refs, &names, &y, SelectionMetric::MeanSquaredError, iterations)?;
    println!("\nstep  MSE");
    for (i, v) in ens.trajectory.iter().enumerate() {
        println!("{:>4}  {v:.4}", i + 1);
    }
    println!("\nkept selection, MSE {:.4}:", ens.score);
    for (m, w) in ens.members.iter().zip(&ens.weights) {
        println!("  {m:<14} {w:.3}");
    }

    let steps = iterations as u32;
    let mut best = (f64::INFINITY, [0u32; 3]);
    for a in 0..=steps {
        for b in 0..=steps - a {
            let k = [a, b, steps - a - b];
            let p: Vec<f64> =
                (0..n).map(|i| (0..3).map(|c| f64::from(k[c]) / f64::from(steps) * cols[c][i]).sum()).collect();
            let v = mse(&y, &p);
            if v < best.0 {
                best = (v, k);
            }
        }
    }
    println!("\nexhaustive grid at 1/{steps}: MSE {:.4} with counts {:?}", best.0, best.1);
    Ok(())
}
