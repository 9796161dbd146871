use std::fs::File;
use std::io::BufReader;
use std::sync::Arc;

use rayon::prelude::*;

use super::config::{Algorithm, NetSpec, RunConfig};
use super::HarnessError;
use crate::environments::{make_suite, ContextDistribution, EnvironmentSpec};
use crate::geometry::{build_dense_net, build_sparse_net, read_net, ParameterNet};
use crate::reduction::{
    known_dist_arms, lifted_arm, reduce_known_dist, run_batched, run_epoch_reduction,
    run_product_reduction, ConfidenceSchedule, EpochSchedule, PeConfig, PhasedElimination,
    RandomSolver, ReductionError, MAX_LIFTED_DIM,
};
use crate::rng::{stream, Stream};
use crate::trace::RegretTrace;

pub fn build_net(spec: &NetSpec, dim: usize) -> Result<ParameterNet, HarnessError> {
    let net = match spec {
        NetSpec::Dense { resolution } => build_dense_net(dim, *resolution),
        NetSpec::Sparse {
            sparsity,
            resolution,
        } => build_sparse_net(dim, *sparsity, *resolution),
        NetSpec::File { path } => {
            let file = File::open(path).map_err(|e| {
                HarnessError::invalid("net.path", format!("{}: {e}", path.display()))
            })?;
            read_net(BufReader::new(file))
        }
    }
    .map_err(|e| HarnessError::invalid("net", e.to_string()))?;
    if net.dim() != dim {
        return Err(HarnessError::invalid(
            "net",
            format!("net dimension {} does not match dim = {dim}", net.dim()),
        ));
    }
    Ok(net)
}

/// A built instance shared by all run seeds of one configuration.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: RunConfig,
    pub dist: ContextDistribution,
    pub spec: EnvironmentSpec,
    /// Absent for the product reduction, which plays lifted arms.
    pub net: Option<Arc<ParameterNet>>,
}

impl Prepared {
    pub fn new(config: &RunConfig) -> Result<Self, HarnessError> {
        config.validate()?;
        let (dist, spec) = make_suite(&config.suite, &config.suite_options(), config.instance_seed)
            .map_err(|e| HarnessError::invalid("suite", e.to_string()))?;
        let net = if config.algorithm == Algorithm::Product {
            if config.dim > MAX_LIFTED_DIM {
                return Err(HarnessError::invalid(
                    "dim",
                    format!("the product reduction enumerates 2^dim arms; dim must be at most {MAX_LIFTED_DIM}"),
                ));
            }
            None
        } else {
            Some(Arc::new(build_net(&config.net, config.dim)?))
        };
        Ok(Self {
            config: config.clone(),
            dist,
            spec,
            net,
        })
    }

    fn confidence(&self) -> ConfidenceSchedule {
        let opts = self.config.suite_options();
        match self.config.algorithm {
            Algorithm::PeMisspecKnown => ConfidenceSchedule::MisspecKnown {
                epsilon: opts.epsilon,
            },
            Algorithm::PeMisspecUnknown => ConfidenceSchedule::MisspecUnknown,
            Algorithm::PeCorrupt => ConfidenceSchedule::Corruption {
                budget: opts.budget,
            },
            Algorithm::PeSparse => ConfidenceSchedule::Sparse {
                sparsity: opts.sparsity,
            },
            Algorithm::Batched => ConfidenceSchedule::Batched {
                batches: self.config.batches,
            },
            _ => ConfidenceSchedule::Plain,
        }
    }

    /// One seeded run at the configured horizon.
    pub fn run_seed(&self, seed: u64) -> Result<RegretTrace, HarnessError> {
        self.run_seed_at(seed, self.config.horizon)
    }

    pub fn run_seed_at(&self, seed: u64, horizon: u64) -> Result<RegretTrace, HarnessError> {
        let cfg = &self.config;
        let wrap = |source: ReductionError| HarnessError::Run { seed, source };
        let net = || self.net.as_ref().expect("net-indexed algorithms carry a net");
        let mut trace = match cfg.algorithm {
            Algorithm::KnownDist => {
                let net = net();
                let pe_cfg = PeConfig::new(self.confidence(), cfg.dim, net.len(), cfg.delta, horizon);
                let mut pe = PhasedElimination::new(known_dist_arms(net, &self.dist), pe_cfg).map_err(wrap)?;
                reduce_known_dist(&self.spec, &self.dist, net, &mut pe, horizon, seed)
            }
            Algorithm::RandomBaseline => {
                let net = net();
                let mut solver = RandomSolver::new(net.len(), stream(seed, Stream::Algorithm));
                reduce_known_dist(&self.spec, &self.dist, net, &mut solver, horizon, seed)
            }
            Algorithm::Epoch
            | Algorithm::PeMisspecKnown
            | Algorithm::PeMisspecUnknown
            | Algorithm::PeCorrupt
            | Algorithm::PeSparse => {
                let schedule = EpochSchedule::doubling(horizon).map_err(wrap)?;
                run_epoch_reduction(
                    &self.spec,
                    &self.dist,
                    Arc::clone(net()),
                    &schedule,
                    self.confidence(),
                    cfg.delta,
                    seed,
                )
            }
            Algorithm::Product => {
                let arms: Vec<_> = (0..1usize << cfg.dim).map(|k| lifted_arm(cfg.dim, k)).collect();
                let pe_cfg = PeConfig::new(self.confidence(), 2 * cfg.dim, arms.len(), cfg.delta, horizon);
                let mut pe = PhasedElimination::new(arms, pe_cfg).map_err(wrap)?;
                run_product_reduction(&self.spec, &self.dist, &mut pe, horizon, seed)
            }
            Algorithm::Batched => run_batched(
                &self.spec,
                &self.dist,
                Arc::clone(net()),
                cfg.batches,
                cfg.delta,
                horizon,
                seed,
            ),
        }
        .map_err(wrap)?;
        trace.algorithm = cfg.algorithm.name().to_string();
        Ok(trace)
    }
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool, HarnessError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| HarnessError::invalid("workers", e.to_string()))
}

/// Runs every seed in parallel. Traces come back in seed order and do not
/// depend on the worker count.
pub fn run(config: &RunConfig) -> Result<Vec<RegretTrace>, HarnessError> {
    let prepared = Prepared::new(config)?;
    pool(config.workers)?.install(|| {
        config
            .seeds
            .par_iter()
            .map(|&seed| prepared.run_seed(seed))
            .collect()
    })
}

/// Runs every seed at every horizon; groups come back sorted by horizon.
pub fn run_grid(config: &RunConfig, horizons: &[u64]) -> Result<Vec<(u64, Vec<RegretTrace>)>, HarnessError> {
    if horizons.is_empty() {
        return Err(HarnessError::invalid("horizons", "need at least one horizon"));
    }
    let prepared = Prepared::new(config)?;
    let mut sorted = horizons.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let jobs: Vec<(u64, u64)> = sorted
        .iter()
        .flat_map(|&t| config.seeds.iter().map(move |&s| (t, s)))
        .collect();
    let traces: Vec<RegretTrace> = pool(config.workers)?.install(|| {
        jobs.par_iter()
            .map(|&(t, s)| prepared.run_seed_at(s, t))
            .collect::<Result<_, _>>()
    })?;
    let per = config.seeds.len();
    Ok(sorted
        .iter()
        .zip(traces.chunks(per))
        .map(|(&t, chunk)| (t, chunk.to_vec()))
        .collect())
}
