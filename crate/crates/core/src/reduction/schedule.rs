use serde::{Deserialize, Serialize};

use super::ReductionError;
use crate::geometry::log_log_guard;

/// Epoch boundaries `0 = b_0 < b_1 < ... < b_M = T`.
///
/// Epoch `m` (1-based) covers rounds `b_{m-1} + 1 ..= b_m`, so `t^(m) = b_{m-1}`
/// contexts have been seen when it opens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochSchedule {
    boundaries: Vec<u64>,
}

impl EpochSchedule {
    pub fn from_boundaries(boundaries: Vec<u64>, horizon: u64) -> Result<Self, ReductionError> {
        let mismatch = |msg: String| Err(ReductionError::ScheduleMismatch(msg));
        if boundaries.len() < 2 || boundaries[0] != 0 {
            return mismatch("boundaries must start at 0 and contain an epoch".into());
        }
        if boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return mismatch("boundaries must be strictly increasing".into());
        }
        if *boundaries.last().expect("nonempty") != horizon {
            return mismatch(format!(
                "last boundary {} does not equal the horizon {horizon}",
                boundaries.last().expect("nonempty")
            ));
        }
        Ok(Self { boundaries })
    }

    /// `t^(m) = 2^(m-1)`: boundaries `0, 1, 2, 4, ...`, capped at `T`.
    pub fn doubling(horizon: u64) -> Result<Self, ReductionError> {
        if horizon == 0 {
            return Err(ReductionError::ScheduleMismatch("horizon must be positive".into()));
        }
        let mut boundaries = vec![0];
        let mut next = 1u64;
        while next < horizon {
            boundaries.push(next);
            next *= 2;
        }
        boundaries.push(horizon);
        Self::from_boundaries(boundaries, horizon)
    }

    /// Paired batch lengths `l_{2k-1} = l_{2k} = floor(u_k) - floor(u_{k-1})`
    /// with `u_k = T^(1 - 2^-k)`, cut or stretched so the last boundary is `T`.
    pub fn batched(horizon: u64, batches: usize) -> Result<Self, ReductionError> {
        if batches < 2 || !batches.is_multiple_of(2) {
            return Err(ReductionError::ScheduleMismatch(format!(
                "batch count must be even and at least 2, got {batches}"
            )));
        }
        if horizon == 0 {
            return Err(ReductionError::ScheduleMismatch("horizon must be positive".into()));
        }
        let t = horizon as f64;
        let mut boundaries = vec![0u64];
        let mut prev = 0u64;
        for k in 1..=batches / 2 {
            let u = t.powf(1.0 - 0.5f64.powi(k as i32));
            let floor = ((u + 1e-9).floor() as u64).min(horizon);
            let len = floor.saturating_sub(prev);
            prev = floor;
            for _ in 0..2 {
                let last = *boundaries.last().expect("nonempty");
                let next = (last + len).min(horizon);
                if next > last {
                    boundaries.push(next);
                }
            }
        }
        if *boundaries.last().expect("nonempty") < horizon {
            if boundaries.len() == 1 {
                boundaries.push(horizon);
            } else {
                *boundaries.last_mut().expect("nonempty") = horizon;
            }
        }
        Self::from_boundaries(boundaries, horizon)
    }

    pub fn boundaries(&self) -> &[u64] {
        &self.boundaries
    }

    pub fn horizon(&self) -> u64 {
        *self.boundaries.last().expect("nonempty")
    }

    /// Number of epochs `M`.
    pub fn epochs(&self) -> usize {
        self.boundaries.len() - 1
    }

    /// Contexts seen before epoch `m` opens (`m` is 1-based).
    pub fn start(&self, m: usize) -> u64 {
        self.boundaries[m - 1]
    }

    /// Length `T_m` of epoch `m`.
    pub fn length(&self, m: usize) -> u64 {
        self.boundaries[m] - self.boundaries[m - 1]
    }

    pub fn lengths(&self) -> Vec<u64> {
        self.boundaries.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Epoch containing round `t` (1-based rounds and epochs).
    pub fn epoch_of(&self, t: u64) -> usize {
        self.boundaries.partition_point(|&b| b < t)
    }

    /// `eps_1 = 1`, `eps_m = 2 sqrt(ln(M |net| / delta) / t^(m))` afterwards.
    pub fn epsilon(&self, m: usize, net_size: usize, delta: f64) -> f64 {
        if m <= 1 {
            return 1.0;
        }
        let arg = self.epochs() as f64 * net_size as f64 / delta;
        2.0 * (arg.ln() / self.start(m) as f64).sqrt()
    }
}

/// Which elimination width phased elimination uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ConfidenceSchedule {
    Plain,
    MisspecKnown { epsilon: f64 },
    MisspecUnknown,
    Corruption { budget: f64 },
    Sparse { sparsity: usize },
    Batched { batches: usize },
}

/// Quantities a width may depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaInputs {
    /// Phase (or batch) index, 1-based.
    pub phase: usize,
    /// Sample count the estimate was formed from.
    pub t_m: f64,
    /// Length of the current phase.
    pub len: f64,
    /// Length of the previous phase (the first phase's length for phase 1).
    pub prev_len: f64,
    pub dim: usize,
    pub net_size: usize,
    pub delta: f64,
    pub horizon: f64,
}

pub fn confidence_gamma(conf: &ConfidenceSchedule, x: &GammaInputs) -> f64 {
    let d = x.dim as f64;
    let ln_t = x.horizon.ln();
    match *conf {
        ConfidenceSchedule::Plain => {
            6.0 * (d * (x.horizon * x.net_size as f64 / x.delta).ln() / x.t_m).sqrt()
        }
        ConfidenceSchedule::MisspecKnown { epsilon } => {
            6.0 * d * (ln_t / x.len).sqrt() + epsilon * d.sqrt()
        }
        ConfidenceSchedule::MisspecUnknown => 6.0 * d * (ln_t / x.len).sqrt(),
        ConfidenceSchedule::Corruption { budget } => {
            8.0 * d * (ln_t / x.t_m).sqrt()
                + 2.0 * budget * (4.0 * d * log_log_guard(x.dim) + 18.0) / x.len * (8.0 * d).sqrt()
        }
        ConfidenceSchedule::Sparse { sparsity } => {
            6.0 * (2.0 * d * sparsity as f64 * (x.horizon / x.delta).ln() / x.t_m).sqrt()
        }
        ConfidenceSchedule::Batched { batches } => {
            10.0 * (d / x.prev_len * (batches as f64 * x.net_size as f64 / x.delta).ln()).sqrt()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs() -> GammaInputs {
        GammaInputs {
            phase: 3,
            t_m: 1024.0,
            len: 1024.0,
            prev_len: 512.0,
            dim: 2,
            net_size: 100,
            delta: 0.1,
            horizon: 65536.0,
        }
    }

    #[test]
    fn plain_value() {
        let expect = 6.0 * (2.0 * (65536.0f64 * 100.0 / 0.1).ln() / 1024.0).sqrt();
        assert_eq!(confidence_gamma(&ConfidenceSchedule::Plain, &inputs()), expect);
    }

    #[test]
    fn misspec_known_at_zero_collapses() {
        let known = confidence_gamma(&ConfidenceSchedule::MisspecKnown { epsilon: 0.0 }, &inputs());
        let unknown = confidence_gamma(&ConfidenceSchedule::MisspecUnknown, &inputs());
        assert_eq!(known, unknown + 0.0);
        let eps = confidence_gamma(&ConfidenceSchedule::MisspecKnown { epsilon: 0.5 }, &inputs());
        assert!((eps - unknown - 0.5 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sparse_full_support_relates_to_plain() {
        // squared ratio is 2s ln(T/delta) / ln(T |net| / delta)
        for net_size in [1usize, 7, 100] {
            let x = GammaInputs { net_size, ..inputs() };
            let plain = confidence_gamma(&ConfidenceSchedule::Plain, &x);
            let sparse = confidence_gamma(&ConfidenceSchedule::Sparse { sparsity: 2 }, &x);
            let ratio = 2.0 * 2.0 * (x.horizon / x.delta).ln()
                / (x.horizon * net_size as f64 / x.delta).ln();
            assert!(((sparse / plain).powi(2) - ratio).abs() < 1e-12);
        }
        let single = GammaInputs { net_size: 1, ..inputs() };
        let plain = confidence_gamma(&ConfidenceSchedule::Plain, &single);
        let sparse = confidence_gamma(&ConfidenceSchedule::Sparse { sparsity: 2 }, &single);
        assert!((sparse - plain * 2.0).abs() < 1e-12);
    }

    #[test]
    fn corruption_and_batched_values() {
        let c = confidence_gamma(&ConfidenceSchedule::Corruption { budget: 3.0 }, &inputs());
        let expect = 16.0 * (65536f64.ln() / 1024.0).sqrt() + 6.0 * (8.0 + 18.0) / 1024.0 * 4.0;
        assert!((c - expect).abs() < 1e-12);
        let b = confidence_gamma(&ConfidenceSchedule::Batched { batches: 8 }, &inputs());
        assert!((b - 10.0 * (2.0 / 512.0 * (800.0f64 / 0.1).ln()).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn widths_shrink_with_more_samples() {
        let confs = [
            ConfidenceSchedule::Plain,
            ConfidenceSchedule::MisspecKnown { epsilon: 0.1 },
            ConfidenceSchedule::MisspecUnknown,
            ConfidenceSchedule::Corruption { budget: 5.0 },
            ConfidenceSchedule::Sparse { sparsity: 1 },
            ConfidenceSchedule::Batched { batches: 4 },
        ];
        for conf in confs {
            let mut last = f64::INFINITY;
            for k in 4..16 {
                let n = 2f64.powi(k);
                let g = confidence_gamma(
                    &conf,
                    &GammaInputs { t_m: n, len: n, prev_len: n, ..inputs() },
                );
                assert!(g > 0.0 && g <= last, "{conf:?}");
                last = g;
            }
        }
    }

    #[test]
    fn doubling_boundaries_and_epsilon() {
        let s = EpochSchedule::doubling(10).unwrap();
        assert_eq!(s.boundaries(), &[0, 1, 2, 4, 8, 10]);
        assert_eq!(s.epochs(), 5);
        assert_eq!(s.epsilon(1, 100, 0.1), 1.0);
        assert_eq!(s.epsilon(4, 100, 0.1), 2.0 * ((5.0f64 * 100.0 / 0.1).ln() / 4.0).sqrt());
        assert_eq!(s.epoch_of(1), 1);
        assert_eq!(s.epoch_of(3), 3);
        assert_eq!(s.epoch_of(10), 5);
    }

    #[test]
    fn epsilon_at_1024() {
        // 16 epochs whose 16th opens after 1024 contexts
        let mut b: Vec<u64> = vec![0];
        b.extend((0..16).map(|k| 1u64 << (k + 1)));
        let s = EpochSchedule::from_boundaries(b, 1 << 16).unwrap();
        assert_eq!(s.epochs(), 16);
        assert_eq!(s.start(11), 1024);
        let expect = 2.0 * ((16.0f64 * 100.0 / 0.1).ln() / 1024.0).sqrt();
        assert_eq!(s.epsilon(11, 100, 0.1), expect);
    }

    #[test]
    fn batched_lengths_for_65536() {
        let s = EpochSchedule::batched(65536, 8).unwrap();
        assert_eq!(s.lengths(), vec![256, 256, 3840, 3840, 12288, 12288, 16384, 16384]);
        assert_eq!(s.horizon(), 65536);
    }

    #[test]
    fn batched_repairs_to_horizon() {
        for t in [10u64, 1000, 10_000, 99_999] {
            for m in [2usize, 4, 6, 8] {
                let s = EpochSchedule::batched(t, m).unwrap();
                assert_eq!(s.lengths().iter().sum::<u64>(), t);
                assert!(s.epochs() <= m);
            }
        }
        assert!(EpochSchedule::batched(100, 3).is_err());
    }

    #[test]
    fn mismatched_boundaries_are_rejected() {
        assert!(EpochSchedule::from_boundaries(vec![0, 5, 5, 10], 10).is_err());
        assert!(EpochSchedule::from_boundaries(vec![0, 5], 10).is_err());
        assert!(EpochSchedule::from_boundaries(vec![1, 10], 10).is_err());
    }
}
