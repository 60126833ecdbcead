//! Density-ratio configuration sampler.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::space::{Config, Domain, SearchSpace};
use super::{Direction, Trial};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    /// Model-based after warmup.
    Bohb,
    /// Uniform over the space at every draw.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSettings {
    pub kind: SamplerKind,
    /// Fraction of observations treated as good.
    pub gamma: f64,
    pub n_candidates: usize,
    pub min_bandwidth: f64,
    /// Share of draws taken uniformly even once the model is active.
    pub random_fraction: f64,
    /// Candidates are drawn with kernels this much wider than the fitted
    /// ones, then scored with the fitted ones.
    pub bandwidth_factor: f64,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        Self {
            kind: SamplerKind::Bohb,
            gamma: 0.15,
            n_candidates: 24,
            min_bandwidth: 1e-3,
            random_fraction: 1.0 / 3.0,
            bandwidth_factor: 3.0,
        }
    }
}

/// Product-kernel density over the unit cube: Gaussian kernels on numeric
/// dimensions, Aitchison-Aitken kernels on categorical ones.
struct Kde {
    points: Vec<Vec<f64>>,
    /// Bandwidth for numeric dimensions, smoothing weight for categorical ones.
    bandwidth: Vec<f64>,
}

enum Dim {
    Numeric,
    Categorical(usize),
}

fn dims(space: &SearchSpace) -> Vec<Dim> {
    space
        .iter()
        .map(|(_, d)| match d {
            Domain::Categorical { choices } => Dim::Categorical(choices.len()),
            _ => Dim::Numeric,
        })
        .collect()
}

/// Coordinates of a config: unit position for numeric dimensions, choice
/// index for categorical ones.
fn encode(space: &SearchSpace, config: &Config) -> Option<Vec<f64>> {
    space
        .iter()
        .map(|(name, d)| {
            let v = config.get(name)?;
            match d {
                Domain::Categorical { .. } => d.choice_index(v).map(|i| i as f64),
                _ => d.to_unit(v),
            }
        })
        .collect()
}

fn std_dev(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count() as f64;
    if n < 2.0 {
        return 0.0;
    }
    let mean = values.clone().sum::<f64>() / n;
    (values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

impl Kde {
    fn fit(points: Vec<Vec<f64>>, pooled: &[Vec<f64>], dims: &[Dim], min_bw: f64) -> Self {
        let n = points.len() as f64;
        let n_numeric = dims.iter().filter(|d| matches!(d, Dim::Numeric)).count().max(1);
        let scott = n.powf(-1.0 / (n_numeric as f64 + 4.0));
        let bandwidth = dims
            .iter()
            .enumerate()
            .map(|(j, d)| match d {
                Dim::Categorical(k) => {
                    let k = *k as f64;
                    if k <= 1.0 {
                        0.0
                    } else {
                        ((k - 1.0) / k / (1.0 + n)).max(min_bw)
                    }
                }
                _ => {
                    let mut s = std_dev(points.iter().map(|p| p[j]));
                    if s == 0.0 {
                        s = std_dev(pooled.iter().map(|p| p[j]));
                    }
                    // Never narrower than 1/(n+1) of the range, or a tight
                    // cluster of good points stops the search moving.
                    (s * scott).max(min_bw).max(1.0 / (n + 1.0))
                }
            })
            .collect();
        Self { points, bandwidth }
    }

    fn log_density(&self, x: &[f64], dims: &[Dim]) -> f64 {
        let logs: Vec<f64> = self
            .points
            .iter()
            .map(|p| {
                dims.iter()
                    .enumerate()
                    .map(|(j, d)| {
                        let bw = self.bandwidth[j];
                        match d {
                            Dim::Categorical(k) => {
                                if x[j] == p[j] {
                                    (1.0 - bw).ln()
                                } else {
                                    (bw / (*k as f64 - 1.0)).ln()
                                }
                            }
                            _ => {
                                let z = (x[j] - p[j]) / bw;
                                -0.5 * z * z - bw.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
                            }
                        }
                    })
                    .sum()
            })
            .collect();
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return max;
        }
        max + (logs.iter().map(|l| (l - max).exp()).sum::<f64>() / logs.len() as f64).ln()
    }

    /// Perturb a random stored point with the kernel.
    fn draw(&self, dims: &[Dim], widen: f64, rng: &mut impl Rng) -> Vec<f64> {
        let p = &self.points[rng.gen_range(0..self.points.len())];
        dims.iter()
            .enumerate()
            .map(|(j, d)| {
                let bw = self.bandwidth[j];
                match d {
                    Dim::Categorical(k) => {
                        if *k > 1 && rng.gen::<f64>() < bw {
                            let other = rng.gen_range(0..k - 1) as f64;
                            if other >= p[j] {
                                other + 1.0
                            } else {
                                other
                            }
                        } else {
                            p[j]
                        }
                    }
                    _ => {
                        let bw = bw * widen;
                        for _ in 0..16 {
                            let v = p[j] + bw * rng.sample::<f64, _>(StandardNormal);
                            if (0.0..=1.0).contains(&v) {
                                return v;
                            }
                        }
                        p[j].clamp(0.0, 1.0)
                    }
                }
            })
            .collect()
    }
}

fn decode(space: &SearchSpace, x: &[f64]) -> Config {
    space
        .iter()
        .zip(x)
        .map(|((name, d), &v)| {
            let value = match d {
                Domain::Categorical { choices } => {
                    super::ParamValue::Categorical(choices[v as usize].clone())
                }
                _ => d.from_unit(v),
            };
            (name.to_string(), value)
        })
        .collect()
}

/// Next configuration to evaluate. Uniform until some budget has at least
/// `d + 1` completed trials; afterwards, except for a `random_fraction` of
/// uniform draws, the candidate maximizing good-density / bad-density at the
/// largest such budget.
pub fn sample_config(
    space: &SearchSpace,
    history: &[Trial],
    direction: Direction,
    settings: &SamplerSettings,
    rng: &mut impl Rng,
) -> Config {
    if settings.kind == SamplerKind::Random {
        return space.sample_uniform(rng);
    }
    // Drawn unconditionally so the stream position does not depend on
    // whether the model is active.
    let explore = rng.gen::<f64>() < settings.random_fraction;
    let n_min = space.len() + 1;
    let mut by_budget: BTreeMap<u64, Vec<&Trial>> = BTreeMap::new();
    for t in history {
        if t.objective.is_some() {
            by_budget.entry(t.budget.to_bits()).or_default().push(t);
        }
    }
    let Some(trials) = by_budget
        .into_iter()
        .filter(|(_, ts)| ts.len() >= n_min)
        .max_by(|a, b| f64::from_bits(a.0).total_cmp(&f64::from_bits(b.0)))
        .map(|(_, ts)| ts)
    else {
        return space.sample_uniform(rng);
    };
    if explore {
        return space.sample_uniform(rng);
    }

    let mut ranked: Vec<(f64, Vec<f64>)> = trials
        .iter()
        .filter_map(|t| Some((direction.score(t.objective?), encode(space, &t.config)?)))
        .collect();
    if ranked.len() < 2 {
        return space.sample_uniform(rng);
    }
    // Stable: equal scores keep trial order.
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    let n = ranked.len();
    let n_good = ((settings.gamma * n as f64).ceil() as usize).clamp(1, n - 1);
    let all: Vec<Vec<f64>> = ranked.iter().map(|r| r.1.clone()).collect();
    let dims = dims(space);
    let good = Kde::fit(all[..n_good].to_vec(), &all, &dims, settings.min_bandwidth);
    let bad = Kde::fit(all[n_good..].to_vec(), &all, &dims, settings.min_bandwidth);

    let mut best: Option<(f64, Config)> = None;
    for _ in 0..settings.n_candidates.max(1) {
        let config = decode(space, &good.draw(&dims, settings.bandwidth_factor, rng));
        let x = encode(space, &config).expect("decoded config is complete");
        let ratio = good.log_density(&x, &dims) - bad.log_density(&x, &dims);
        if best.as_ref().map_or(true, |(r, _)| ratio > *r) {
            best = Some((ratio, config));
        }
    }
    best.map(|b| b.1).unwrap()
}
