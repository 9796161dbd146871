//! Linear-bandit solvers driven through a propose/observe protocol.

use std::collections::HashSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::schedule::{confidence_gamma, ConfidenceSchedule, GammaInputs};
use super::ReductionError;
use crate::geometry::{g_optimal_design, support_cap, LeastSquares};
use crate::Vector;

/// A bandit algorithm over a fixed, indexed list of arms.
pub trait Solver {
    /// Index of the arm to play next. Repeated calls without an intervening
    /// [`observe`](Solver::observe) return the same arm.
    fn propose(&mut self) -> Result<usize, ReductionError>;

    /// Reward for the most recent proposal.
    fn observe(&mut self, reward: f64);

    /// Width used by the most recent elimination, if any.
    fn gamma(&self) -> Option<f64> {
        None
    }

    /// Arms still in play, ascending.
    fn survivors(&self) -> Option<&[usize]> {
        None
    }
}

/// Uniformly random arms.
#[derive(Debug, Clone)]
pub struct RandomSolver {
    arms: usize,
    rng: ChaCha8Rng,
    pending: Option<usize>,
}

impl RandomSolver {
    pub fn new(arms: usize, rng: ChaCha8Rng) -> Self {
        assert!(arms > 0, "random solver needs an arm");
        Self {
            arms,
            rng,
            pending: None,
        }
    }
}

impl Solver for RandomSolver {
    fn propose(&mut self) -> Result<usize, ReductionError> {
        let arms = self.arms;
        let rng = &mut self.rng;
        Ok(*self.pending.get_or_insert_with(|| rng.random_range(0..arms)))
    }

    fn observe(&mut self, _reward: f64) {
        self.pending = None;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeConfig {
    pub conf: ConfidenceSchedule,
    pub dim: usize,
    /// `|net|` as it enters the log terms of the widths.
    pub net_size: usize,
    pub delta: f64,
    pub horizon: u64,
    /// Planned length of the first phase; later phases double.
    pub base_len: u64,
}

impl PeConfig {
    pub fn new(conf: ConfidenceSchedule, dim: usize, net_size: usize, delta: f64, horizon: u64) -> Self {
        Self {
            conf,
            dim,
            net_size,
            delta,
            horizon,
            base_len: 2 * dim as u64,
        }
    }
}

/// Summary of one completed phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSummary {
    pub phase: usize,
    pub samples: u64,
    pub gamma: Option<f64>,
    pub survivors_after: usize,
}

/// Phased elimination with a G-optimal exploration design per phase.
#[derive(Debug, Clone)]
pub struct PhasedElimination {
    arms: Vec<Vector>,
    cfg: PeConfig,
    survivors: Vec<usize>,
    phase: usize,
    next_len: u64,
    prev_len: Option<f64>,
    plan: Vec<usize>,
    cursor: usize,
    degenerate: bool,
    acc: LeastSquares,
    gamma: Option<f64>,
    phases: Vec<PhaseSummary>,
}

impl PhasedElimination {
    pub fn new(arms: Vec<Vector>, cfg: PeConfig) -> Result<Self, ReductionError> {
        if arms.is_empty() {
            return Err(ReductionError::InvalidArgument("solver needs at least one arm".into()));
        }
        if arms.iter().any(|a| a.len() != cfg.dim) {
            return Err(ReductionError::InvalidArgument("arm dimension differs from config".into()));
        }
        Ok(Self {
            survivors: (0..arms.len()).collect(),
            acc: LeastSquares::new(cfg.dim),
            next_len: cfg.base_len.max(1),
            arms,
            cfg,
            phase: 0,
            prev_len: None,
            plan: Vec::new(),
            cursor: 0,
            degenerate: false,
            gamma: None,
            phases: Vec::new(),
        })
    }

    pub fn phase(&self) -> usize {
        self.phase
    }

    pub fn phases(&self) -> &[PhaseSummary] {
        &self.phases
    }

    pub fn arms(&self) -> &[Vector] {
        &self.arms
    }

    fn start_phase(&mut self) -> Result<(), ReductionError> {
        let len = self.next_len;
        // one representative (the lowest index) per distinct vector
        let mut seen = HashSet::new();
        let reps: Vec<usize> = self
            .survivors
            .iter()
            .copied()
            .filter(|&i| seen.insert(self.arms[i].iter().map(|x| (x + 0.0).to_bits()).collect::<Vec<_>>()))
            .collect();
        let vectors: Vec<Vector> = reps.iter().map(|&i| self.arms[i].clone()).collect();
        self.plan.clear();
        self.degenerate = vectors.iter().all(|v| v.iter().all(|&x| x == 0.0));
        if self.degenerate {
            self.plan
                .extend((0..len as usize).map(|k| reps[k % reps.len()]));
        } else {
            let dim = self.cfg.dim;
            let mut design = g_optimal_design(&vectors, support_cap(dim), 2.0 * dim as f64)?;
            let counts = design.allocate(len).to_vec();
            for (&j, &u) in design.indices().iter().zip(&counts) {
                self.plan.extend(std::iter::repeat_n(reps[j], u as usize));
            }
        }
        self.cursor = 0;
        self.phase += 1;
        self.acc = LeastSquares::new(self.cfg.dim);
        Ok(())
    }

    fn finish_phase(&mut self) {
        let samples = self.acc.count();
        if !self.degenerate {
            let est = self.acc.finish();
            let n = samples as f64;
            let gamma = confidence_gamma(
                &self.cfg.conf,
                &GammaInputs {
                    phase: self.phase,
                    t_m: n,
                    len: n,
                    prev_len: self.prev_len.unwrap_or(n),
                    dim: self.cfg.dim,
                    net_size: self.cfg.net_size,
                    delta: self.cfg.delta,
                    horizon: self.cfg.horizon as f64,
                },
            );
            let values: Vec<f64> = self
                .survivors
                .iter()
                .map(|&i| est.theta_hat.dot(&self.arms[i]))
                .collect();
            let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let kept: Vec<usize> = self
                .survivors
                .iter()
                .zip(&values)
                .filter(|(_, &v)| best - v <= gamma)
                .map(|(&i, _)| i)
                .collect();
            debug_assert!(!kept.is_empty(), "the empirical best always survives");
            self.survivors = kept;
            self.gamma = Some(gamma);
        }
        self.phases.push(PhaseSummary {
            phase: self.phase,
            samples,
            gamma: if self.degenerate { None } else { self.gamma },
            survivors_after: self.survivors.len(),
        });
        self.prev_len = Some(samples as f64);
        self.next_len = self.next_len.saturating_mul(2);
        self.plan.clear();
        self.cursor = 0;
    }
}

impl Solver for PhasedElimination {
    fn propose(&mut self) -> Result<usize, ReductionError> {
        if self.cursor >= self.plan.len() {
            self.start_phase()?;
        }
        Ok(self.plan[self.cursor])
    }

    fn observe(&mut self, reward: f64) {
        let Some(&arm) = self.plan.get(self.cursor) else {
            return;
        };
        self.acc.push(&self.arms[arm], reward);
        self.cursor += 1;
        if self.cursor == self.plan.len() {
            self.finish_phase();
        }
    }

    fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    fn survivors(&self) -> Option<&[usize]> {
        Some(&self.survivors)
    }
}
