//! Seeded trial execution and paired-seed batch aggregation.
//!
//! A trial is fully determined by (scenario, strategy, seed): the seed drives
//! only the obstacle placement, so running the same seed under different
//! strategies compares them on the identical workspace. Batches exploit that
//! by giving trial i the seed `base + i` for every strategy and aggregating
//! into the per-strategy outcome table.

use anyhow::Context;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use rodsim_core::coordination::{Simulation, StrategyKind, TrialOutcome};
use rodsim_core::environment::randomize_obstacles;
use rodsim_core::{SimError, TrialRecord64};

use crate::scenario::Scenario;

/// Runs one trial: places the obstacles with `seed`, then simulates to a
/// terminal event or the time limit.
pub fn run_trial(
    scenario: &Scenario,
    strategy: StrategyKind,
    seed: u64,
) -> Result<TrialRecord64, SimError> {
    let base = scenario.base_workspace()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let workspace = randomize_obstacles(&base, &scenario.zones, &mut rng)?;
    let cfg = scenario.to_sim_config(strategy)?;
    let record = Simulation::new(cfg, workspace)?.run()?;
    log::debug!(
        "trial strategy={} seed={} outcome={} periods={} switches={}",
        strategy,
        seed,
        record.outcome,
        record.periods,
        record.switches
    );
    Ok(record)
}

/// One line of the per-trial results table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialRow {
    pub strategy: StrategyKind,
    pub trial: u32,
    pub seed: u64,
    pub outcome: TrialOutcome,
    /// Control periods until the trial ended.
    pub steps: u32,
}

/// Outcome counts for one strategy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StrategyStats {
    pub strategy: StrategyKind,
    pub trials: u32,
    pub success: u32,
    pub collision: u32,
    pub timeout: u32,
    /// Mean steps over collision-free trials; `None` when every trial
    /// collided.
    pub mean_cft_steps: Option<f64>,
}

impl StrategyStats {
    pub fn success_pct(&self) -> f64 {
        100.0 * f64::from(self.success) / f64::from(self.trials)
    }

    pub fn collision_pct(&self) -> f64 {
        100.0 * f64::from(self.collision) / f64::from(self.trials)
    }

    pub fn timeout_pct(&self) -> f64 {
        100.0 * f64::from(self.timeout) / f64::from(self.trials)
    }
}

/// Per-strategy aggregate of one batch.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchSummary {
    pub trials: u32,
    pub stats: Vec<StrategyStats>,
}

/// Everything a batch produced: the flat per-trial table plus its aggregate.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchResult {
    pub rows: Vec<TrialRow>,
    pub summary: BatchSummary,
}

fn aggregate(strategy: StrategyKind, rows: &[TrialRow], trials: u32) -> StrategyStats {
    let mine: Vec<&TrialRow> = rows.iter().filter(|r| r.strategy == strategy).collect();
    let count = |o: TrialOutcome| mine.iter().filter(|r| r.outcome == o).count() as u32;
    let cft: Vec<u32> = mine
        .iter()
        .filter(|r| r.outcome != TrialOutcome::Collision)
        .map(|r| r.steps)
        .collect();
    let mean_cft_steps = if cft.is_empty() {
        None
    } else {
        Some(cft.iter().map(|s| f64::from(*s)).sum::<f64>() / cft.len() as f64)
    };
    StrategyStats {
        strategy,
        trials,
        success: count(TrialOutcome::Success),
        collision: count(TrialOutcome::Collision),
        timeout: count(TrialOutcome::Timeout),
        mean_cft_steps,
    }
}

/// Runs `trials` paired-seed trials for each strategy, up to `jobs` at a time
/// (`None` uses one worker per core). Rows come back in (strategy, trial)
/// order regardless of completion order, so aggregation is deterministic.
pub fn run_batch(
    scenario: &Scenario,
    strategies: &[StrategyKind],
    trials: u32,
    base_seed: u64,
    jobs: Option<usize>,
) -> anyhow::Result<BatchResult> {
    anyhow::ensure!(trials >= 1, "a batch needs at least one trial");
    anyhow::ensure!(!strategies.is_empty(), "a batch needs at least one strategy");
    let tasks: Vec<(StrategyKind, u32)> = strategies
        .iter()
        .flat_map(|s| (0..trials).map(move |i| (*s, i)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .context("cannot build the worker pool")?;
    let rows: Vec<TrialRow> = pool.install(|| {
        tasks
            .par_iter()
            .map(|(strategy, trial)| {
                let seed = base_seed.wrapping_add(u64::from(*trial));
                let record = run_trial(scenario, *strategy, seed)?;
                Ok(TrialRow {
                    strategy: *strategy,
                    trial: *trial,
                    seed,
                    outcome: record.outcome,
                    steps: record.periods,
                })
            })
            .collect::<Result<Vec<_>, SimError>>()
    })?;

    let stats = strategies.iter().map(|s| aggregate(*s, &rows, trials)).collect();
    Ok(BatchResult { rows, summary: BatchSummary { trials, stats } })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open_field() -> Scenario {
        let mut s = Scenario::default();
        s.workspace.obstacles.clear();
        s.zones.clear();
        s
    }

    #[test]
    fn an_open_field_is_crossed_successfully_by_every_strategy() {
        let scenario = open_field();
        let mut steps = Vec::new();
        for strategy in StrategyKind::all() {
            let rec = run_trial(&scenario, strategy, 0).unwrap();
            assert_eq!(rec.outcome, TrialOutcome::Success, "{strategy}");
            assert!(rec.periods <= 90);
            steps.push(rec.periods);
        }
        // No obstacle ever enters the follower's critical radius, so the
        // strategies cannot diverge.
        assert_eq!(steps[0], steps[1]);
        assert_eq!(steps[0], steps[2]);

        // Physics bound: a point mass under the combined force budget cannot
        // arrive faster than the bang-bang time over the start-target gap.
        let s = Scenario::default();
        let dist = ((s.s0[0] - s.s_tar[0]).powi(2) + (s.s0[2] - s.s_tar[2]).powi(2)).sqrt()
            - s.success_radius;
        let f_max = 2.0 * (s.follower.bounds.f_a.powi(2) + s.follower.bounds.f_p.powi(2)).sqrt();
        let mass = s.rod.m_l + s.rod.m_f + s.rod.m_r;
        let t_min = (2.0 * dist / (f_max / mass)).sqrt();
        let min_steps = (t_min / s.schedule.t_s).floor() as u32;
        assert!(
            steps[0] >= min_steps,
            "arrived in {} steps, faster than the physical bound {min_steps}",
            steps[0]
        );
    }

    #[test]
    fn equal_seeds_reproduce_equal_trials() {
        let scenario = Scenario::default();
        let a = run_trial(&scenario, StrategyKind::Learning, 3).unwrap();
        let b = run_trial(&scenario, StrategyKind::Learning, 3).unwrap();
        assert_eq!(a.outcome, b.outcome);
        assert_eq!(a.records.len(), b.records.len());
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.state.to_array(), rb.state.to_array());
        }
    }

    #[test]
    fn batches_pair_seeds_across_strategies_and_aggregate_consistently() {
        let scenario = open_field();
        let result = run_batch(&scenario, &StrategyKind::all(), 3, 11, Some(1)).unwrap();
        assert_eq!(result.rows.len(), 9);
        for row in &result.rows {
            assert_eq!(u64::from(row.trial) + 11, row.seed);
            assert_eq!(row.outcome, TrialOutcome::Success);
        }
        for stats in &result.summary.stats {
            assert_eq!(stats.success, 3);
            assert_eq!(stats.success_pct(), 100.0);
            assert_eq!(
                stats.success_pct() + stats.collision_pct() + stats.timeout_pct(),
                100.0
            );
            assert!(stats.mean_cft_steps.is_some());
        }
    }

    #[test]
    fn a_blocked_start_yields_all_collisions_and_no_step_average() {
        let mut scenario = Scenario::default();
        // A slab across the rod's initial position.
        scenario.workspace.obstacles = vec![vec![[5.0, 7.0], [8.0, 7.0], [8.0, 7.5], [5.0, 7.5]]];
        scenario.zones.clear();
        let result = run_batch(&scenario, &[StrategyKind::NoLearning], 2, 0, Some(1)).unwrap();
        let stats = &result.summary.stats[0];
        assert_eq!(stats.collision, 2);
        assert_eq!(stats.collision_pct(), 100.0);
        assert_eq!(stats.mean_cft_steps, None);
        for row in &result.rows {
            assert_eq!(row.steps, 0);
        }
    }

    #[test]
    fn batch_rows_are_ordered_and_reproducible_even_in_parallel() {
        let scenario = open_field();
        let a = run_batch(&scenario, &StrategyKind::all(), 2, 5, Some(2)).unwrap();
        let b = run_batch(&scenario, &StrategyKind::all(), 2, 5, None).unwrap();
        assert_eq!(a, b);
        let expected: Vec<(StrategyKind, u32)> = StrategyKind::all()
            .iter()
            .flat_map(|s| [(*s, 0), (*s, 1)])
            .collect();
        let got: Vec<(StrategyKind, u32)> = a.rows.iter().map(|r| (r.strategy, r.trial)).collect();
        assert_eq!(got, expected);
    }
}
