//! Per-run records shared by every reduction and the harness.

use serde::{Deserialize, Serialize};

/// One round of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub t: u64,
    /// Index of the arm the solver proposed (net point or lifted arm).
    pub arm: usize,
    /// Support index of the context for finite-support distributions.
    pub support: Option<usize>,
    pub regret: f64,
    pub cum_regret: f64,
    pub reduced_regret: f64,
    pub cum_reduced: f64,
    pub reward: f64,
    pub corruption: f64,
    pub epoch: usize,
    pub gamma: Option<f64>,
}

/// One epoch (or batch) of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub index: usize,
    /// Rounds completed before the epoch opened.
    pub start: u64,
    pub len: u64,
    pub eps: Option<f64>,
    pub eps_prime: Option<f64>,
    pub gamma: Option<f64>,
    pub survivors: usize,
    /// Whether a reduced-optimal net point was still alive at epoch end.
    pub optimal_retained: bool,
    /// Whether the net point nearest `theta*` was still alive at epoch end.
    pub nearest_retained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    pub seed: u64,
    pub algorithm: String,
    pub horizon: u64,
    pub rounds: Vec<RoundRecord>,
    pub epochs: Vec<EpochRecord>,
    /// Rounds at which the playing policy was (re)fixed.
    pub policy_changes: Vec<u64>,
    /// Best reduced mean reward over the arms.
    pub reduced_optimum: f64,
    /// `E[max_a <a, theta*>]`.
    pub expected_optimum: f64,
}

impl RegretTrace {
    pub fn new(seed: u64, algorithm: impl Into<String>, horizon: u64) -> Self {
        Self {
            seed,
            algorithm: algorithm.into(),
            horizon,
            rounds: Vec::with_capacity(horizon as usize),
            epochs: Vec::new(),
            policy_changes: Vec::new(),
            reduced_optimum: 0.0,
            expected_optimum: 0.0,
        }
    }

    pub fn final_regret(&self) -> f64 {
        self.rounds.last().map_or(0.0, |r| r.cum_regret)
    }

    pub fn final_reduced_regret(&self) -> f64 {
        self.rounds.last().map_or(0.0, |r| r.cum_reduced)
    }

    /// Appends a round, accumulating both regrets.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn push_round(
        &mut self,
        arm: usize,
        support: Option<usize>,
        regret: f64,
        reduced_regret: f64,
        reward: f64,
        corruption: f64,
        epoch: usize,
        gamma: Option<f64>,
    ) {
        // the played action is a member of the context, so only rounding can
        // make its gap negative
        debug_assert!(regret > -1e-9, "negative regret {regret}");
        let regret = regret.max(0.0);
        let (cum_regret, cum_reduced) = self
            .rounds
            .last()
            .map_or((0.0, 0.0), |r| (r.cum_regret, r.cum_reduced));
        self.rounds.push(RoundRecord {
            t: self.rounds.len() as u64 + 1,
            arm,
            support,
            regret,
            cum_regret: cum_regret + regret,
            reduced_regret,
            cum_reduced: cum_reduced + reduced_regret,
            reward,
            corruption,
            epoch,
            gamma,
        });
    }

    /// `(eps_m, eps'_m)` for epoch `m`, when recorded.
    pub fn epoch_eps(&self, m: usize) -> (Option<f64>, Option<f64>) {
        self.epochs
            .iter()
            .find(|e| e.index == m)
            .map_or((None, None), |e| (e.eps, e.eps_prime))
    }
}
