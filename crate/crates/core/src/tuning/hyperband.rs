use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One successive-halving run: `rungs[i] = (n_configs, budget)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub s: u32,
    pub rungs: Vec<(usize, f64)>,
}

impl Bracket {
    /// Total resource spent if every rung runs in full.
    pub fn cost(&self) -> f64 {
        self.rungs.iter().map(|&(n, b)| n as f64 * b).sum()
    }

    pub fn n_evaluations(&self) -> usize {
        self.rungs.iter().map(|&(n, _)| n).sum()
    }
}

/// Hyperband brackets for maximum budget `max_budget` and halving rate
/// `eta`, most exploratory first.
pub fn hyperband_schedule(max_budget: f64, eta: u32) -> Result<Vec<Bracket>> {
    if !(max_budget.is_finite() && max_budget >= 1.0) {
        return Err(Error::InvalidArgument(format!("max budget must be >= 1, got {max_budget}")));
    }
    if eta < 2 {
        return Err(Error::InvalidArgument(format!("eta must be >= 2, got {eta}")));
    }
    // floor(log_eta R) by exact integer powers, immune to log rounding.
    let eta_f = eta as f64;
    let mut s_max = 0u32;
    while eta_f.powi(s_max as i32 + 1) <= max_budget {
        s_max += 1;
    }
    let brackets = (0..=s_max)
        .rev()
        .map(|s| {
            let pow = (eta as u64).pow(s);
            let n = ((s_max as u64 + 1) * pow).div_ceil(s as u64 + 1) as usize;
            let mut rungs = Vec::new();
            let mut n_i = n;
            for i in 0..=s {
                let budget = max_budget / (eta as u64).pow(s - i) as f64;
                rungs.push((n_i, budget));
                n_i /= eta as usize;
            }
            Bracket { s, rungs }
        })
        .collect();
    Ok(brackets)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r9_eta3() {
        let b = hyperband_schedule(9.0, 3).unwrap();
        let starts: Vec<_> = b.iter().map(|b| b.rungs[0]).collect();
        assert_eq!(starts, vec![(9, 1.0), (5, 3.0), (3, 9.0)]);
        assert_eq!(b[0].rungs, vec![(9, 1.0), (3, 3.0), (1, 9.0)]);
        assert_eq!(b[1].rungs, vec![(5, 3.0), (1, 9.0)]);
        assert_eq!(b[2].rungs, vec![(3, 9.0)]);
    }

    #[test]
    fn r1_single_rung() {
        let b = hyperband_schedule(1.0, 3).unwrap();
        assert_eq!(b, vec![Bracket { s: 0, rungs: vec![(1, 1.0)] }]);
    }

    #[test]
    fn exact_powers_do_not_lose_a_bracket() {
        assert_eq!(hyperband_schedule(243.0, 3).unwrap().len(), 6);
        assert_eq!(hyperband_schedule(1000.0, 10).unwrap().len(), 4);
        assert_eq!(hyperband_schedule(26.9, 3).unwrap().len(), 3);
    }

    #[test]
    fn rungs_are_geometric() {
        for (r, eta) in [(81.0, 3), (100.0, 4), (50.5, 2)] {
            for b in hyperband_schedule(r, eta).unwrap() {
                for w in b.rungs.windows(2) {
                    assert!((w[1].1 / w[0].1 - eta as f64).abs() < 1e-12);
                    assert_eq!(w[1].0, w[0].0 / eta as usize);
                }
                assert_eq!(b.rungs.last().unwrap().1, r);
            }
        }
    }

    #[test]
    fn invalid() {
        assert!(hyperband_schedule(0.5, 3).is_err());
        assert!(hyperband_schedule(9.0, 1).is_err());
        assert!(hyperband_schedule(f64::NAN, 3).is_err());
    }
}
