//! Hyperparameter search: Hyperband brackets with successive halving and a
//! density-ratio sampler after warmup.

mod bohb;
mod hyperband;
mod space;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{rng, Error, Result};

pub use bohb::{sample_config, SamplerKind, SamplerSettings};
pub use hyperband::{hyperband_schedule, Bracket};
pub use space::{Config, Domain, ParamValue, SearchSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Maximize,
    Minimize,
}

impl Direction {
    /// Orientation where larger is always better.
    pub(crate) fn score(self, objective: f64) -> f64 {
        match self {
            Direction::Maximize => objective,
            Direction::Minimize => -objective,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub id: usize,
    /// Position of the bracket in execution order.
    pub bracket: usize,
    pub rung: usize,
    pub budget: f64,
    pub config: Config,
    /// Present only for completed trials.
    pub objective: Option<f64>,
    pub status: TrialStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Trial {
    fn rank_score(&self, direction: Direction) -> f64 {
        self.objective.map_or(f64::NEG_INFINITY, |o| direction.score(o))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSettings {
    pub max_budget: f64,
    pub eta: u32,
    /// Resource to spend; brackets run in order (cycling) until it is used
    /// up. Defaults to one full pass over the schedule.
    pub total_budget: Option<f64>,
    pub direction: Direction,
    pub seed: u64,
    pub sampler: SamplerSettings,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            max_budget: 9.0,
            eta: 3,
            total_budget: None,
            direction: Direction::Maximize,
            seed: 0,
            sampler: SamplerSettings::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: Trial,
    pub history: Vec<Trial>,
    pub schedule: Vec<Bracket>,
}

impl SearchResult {
    /// History as CSV: trial id, bracket, rung, one column per
    /// hyperparameter, budget, objective (blank when failed), status.
    pub fn history_csv(&self, space: &SearchSpace) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let names: Vec<&str> = space.names().collect();
        let mut header = vec!["trial_id", "bracket", "rung"];
        header.extend(&names);
        header.extend(["budget", "objective", "status"]);
        let err = |e: csv::Error| Error::Internal(format!("history csv: {e}"));
        w.write_record(&header).map_err(err)?;
        for t in &self.history {
            let mut rec = vec![t.id.to_string(), t.bracket.to_string(), t.rung.to_string()];
            rec.extend(names.iter().map(|n| t.config.get(*n).map(|v| v.to_string()).unwrap_or_default()));
            rec.push(t.budget.to_string());
            rec.push(t.objective.map(|o| o.to_string()).unwrap_or_default());
            rec.push(match t.status {
                TrialStatus::Completed => "completed".into(),
                TrialStatus::Failed => "failed".into(),
            });
            w.write_record(&rec).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
    }
}

/// Indices (into `rung`) of the `keep` best trials; failed trials rank last
/// and ties keep insertion order.
pub fn promote(rung: &[Trial], keep: usize, direction: Direction) -> Vec<usize> {
    let mut order: Vec<usize> = (0..rung.len()).collect();
    order.sort_by(|&a, &b| rung[b].rank_score(direction).total_cmp(&rung[a].rank_score(direction)));
    order.truncate(keep);
    order
}

/// Run brackets in schedule order, evaluating each rung's configs (in
/// parallel) and promoting the top `floor(n / eta)` to the next rung. A
/// trial whose objective errors or is not finite is recorded as failed.
pub fn run_search<F>(space: &SearchSpace, objective: F, settings: &SearchSettings) -> Result<SearchResult>
where
    F: Fn(&Config, f64) -> Result<f64> + Sync,
{
    space.validate()?;
    let schedule = hyperband_schedule(settings.max_budget, settings.eta)?;
    let total = settings
        .total_budget
        .unwrap_or_else(|| schedule.iter().map(Bracket::cost).sum());
    if !(total > 0.0) {
        return Err(Error::InvalidArgument(format!("total budget must be positive, got {total}")));
    }
    let mut rng = rng::stage_rng(settings.seed, "tuning");
    let mut history: Vec<Trial> = Vec::new();
    let mut spent = 0.0;
    let mut bracket_no = 0;
    'outer: loop {
        for bracket in &schedule {
            if spent >= total {
                break 'outer;
            }
            let (n0, _) = bracket.rungs[0];
            let mut configs: Vec<Config> = (0..n0)
                .map(|_| sample_config(space, &history, settings.direction, &settings.sampler, &mut rng))
                .collect();
            for (r, &(_, budget)) in bracket.rungs.iter().enumerate() {
                let results: Vec<Result<f64>> = configs.par_iter().map(|c| objective(c, budget)).collect();
                let first = history.len();
                for (config, res) in configs.iter().zip(results) {
                    let (objective, status, error) = match res {
                        Ok(v) if v.is_finite() => (Some(v), TrialStatus::Completed, None),
                        Ok(v) => (None, TrialStatus::Failed, Some(format!("objective {v}"))),
                        Err(e) => (None, TrialStatus::Failed, Some(e.to_string())),
                    };
                    history.push(Trial {
                        id: history.len(),
                        bracket: bracket_no,
                        rung: r,
                        budget,
                        config: config.clone(),
                        objective,
                        status,
                        error,
                    });
                    spent += budget;
                }
                if let Some(&(keep, _)) = bracket.rungs.get(r + 1) {
                    let rung = &history[first..];
                    configs = promote(rung, keep, settings.direction)
                        .into_iter()
                        .map(|i| rung[i].config.clone())
                        .collect();
                }
            }
            bracket_no += 1;
        }
    }
    let best = history
        .iter()
        .filter(|t| t.objective.is_some())
        .fold(None::<&Trial>, |acc, t| match acc {
            Some(b) if b.rank_score(settings.direction) >= t.rank_score(settings.direction) => Some(b),
            _ => Some(t),
        })
        .cloned()
        .ok_or_else(|| Error::Degenerate("every trial failed".into()))?;
    Ok(SearchResult { best, history, schedule })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic_space(d: usize) -> SearchSpace {
        (0..d).fold(SearchSpace::new(), |s, i| {
            s.with(&format!("x{i}"), Domain::Real { low: -5.0, high: 5.0, log: false })
        })
    }

    /// 1 + sum (x_i - c_i)^2 plus a fidelity penalty that vanishes at the
    /// full budget.
    fn quadratic(c: &Config, budget: f64) -> Result<f64> {
        let centers = [1.5, -2.0, 0.5, 3.0];
        let mut f = 1.0;
        for (i, v) in c.values().enumerate() {
            let d = v.as_f64().unwrap() - centers[i];
            f += d * d;
        }
        Ok(f + 0.5 / budget)
    }

    fn settings(kind: SamplerKind, seed: u64, total: f64) -> SearchSettings {
        SearchSettings {
            max_budget: 9.0,
            eta: 3,
            total_budget: Some(total),
            direction: Direction::Minimize,
            seed,
            sampler: SamplerSettings { kind, ..SamplerSettings::default() },
        }
    }

    #[test]
    fn constant_objective_runs_full_schedule() {
        let space = quadratic_space(2);
        let s = SearchSettings::default();
        let r = run_search(&space, |_, _| Ok(1.0), &s).unwrap();
        let expected: usize = hyperband_schedule(9.0, 3).unwrap().iter().map(Bracket::n_evaluations).sum();
        assert_eq!(r.history.len(), expected);
        assert_eq!(r.history.len(), 9 + 3 + 1 + 5 + 1 + 3);
        assert_eq!(r.best.objective, Some(1.0));
    }

    #[test]
    fn single_point_space() {
        let space = SearchSpace::new()
            .with("a", Domain::Integer { low: 4, high: 4, log: false })
            .with("b", Domain::Categorical { choices: vec!["only".into()] });
        let r = run_search(&space, |_, b| Ok(b), &SearchSettings::default()).unwrap();
        assert_eq!(r.best.config["a"], ParamValue::Integer(4));
        assert_eq!(r.best.config["b"], ParamValue::Categorical("only".into()));
    }

    #[test]
    fn promotion_keeps_the_top_configs() {
        let space = quadratic_space(2);
        let r = run_search(&space, quadratic, &settings(SamplerKind::Bohb, 5, 300.0)).unwrap();
        for b in 0..=r.history.last().unwrap().bracket {
            let in_bracket: Vec<&Trial> = r.history.iter().filter(|t| t.bracket == b).collect();
            let max_rung = in_bracket.iter().map(|t| t.rung).max().unwrap();
            for rung in 0..max_rung {
                let lower: Vec<&&Trial> = in_bracket.iter().filter(|t| t.rung == rung).collect();
                let upper: Vec<&&Trial> = in_bracket.iter().filter(|t| t.rung == rung + 1).collect();
                assert_eq!(upper.len(), lower.len() / 3);
                let promoted = |t: &Trial| upper.iter().any(|u| u.config == t.config);
                let worst_kept = lower.iter().filter(|t| promoted(t)).map(|t| t.objective.unwrap()).fold(f64::MIN, f64::max);
                let best_dropped = lower.iter().filter(|t| !promoted(t)).map(|t| t.objective.unwrap()).fold(f64::MAX, f64::min);
                assert!(worst_kept <= best_dropped);
            }
        }
        let min = r.history.iter().filter_map(|t| t.objective).fold(f64::MAX, f64::min);
        assert_eq!(r.best.objective, Some(min));
    }

    #[test]
    fn failures_score_worst_and_search_continues() {
        let space = quadratic_space(1);
        let r = run_search(
            &space,
            |c, b| {
                let x = c["x0"].as_f64().unwrap();
                if x > 0.0 {
                    Err(Error::Degenerate("boom".into()))
                } else {
                    Ok(-x + b)
                }
            },
            &SearchSettings { direction: Direction::Maximize, ..SearchSettings::default() },
        )
        .unwrap();
        assert!(r.history.iter().any(|t| t.status == TrialStatus::Failed && t.objective.is_none()));
        assert_eq!(r.best.status, TrialStatus::Completed);
        assert!(r.best.config["x0"].as_f64().unwrap() <= 0.0);
        let csv = r.history_csv(&space).unwrap();
        assert!(csv.starts_with("trial_id,bracket,rung,x0,budget,objective,status\n"));
        assert!(csv.contains(",,failed"));
    }

    #[test]
    fn deterministic_under_seed() {
        let space = quadratic_space(3);
        let a = run_search(&space, quadratic, &settings(SamplerKind::Bohb, 9, 200.0)).unwrap();
        let b = run_search(&space, quadratic, &settings(SamplerKind::Bohb, 9, 200.0)).unwrap();
        assert_eq!(a.history, b.history);
        let c = run_search(&space, quadratic, &settings(SamplerKind::Bohb, 10, 200.0)).unwrap();
        assert_ne!(a.history, c.history);
    }

    #[test]
    fn bohb_beats_random_on_quadratic() {
        let space = quadratic_space(4);
        let median = |kind| {
            let mut best: Vec<f64> = (0..20)
                .map(|rep| run_search(&space, quadratic, &settings(kind, rep, 400.0)).unwrap().best.objective.unwrap())
                .collect();
            best.sort_by(f64::total_cmp);
            (best[9] + best[10]) / 2.0
        };
        let (bohb, random) = (median(SamplerKind::Bohb), median(SamplerKind::Random));
        assert!(bohb < random, "bohb {bohb} random {random}");
    }

    #[test]
    fn hundred_trials_reach_the_optimum() {
        let space = quadratic_space(2);
        let mut s = settings(SamplerKind::Bohb, 1, f64::INFINITY);
        s.total_budget = None;
        // Evaluate everything at full budget: one rung per bracket.
        s.max_budget = 1.0;
        s.total_budget = Some(100.0);
        let r = run_search(&space, quadratic, &s).unwrap();
        assert_eq!(r.history.len(), 100);
        let best = r.best.objective.unwrap() - 0.5;
        assert!(best <= 1.05, "{best}");
    }
}
