use super::oracle::exact_g;
use super::ReductionError;
use crate::environments::ContextDistribution;
use crate::geometry::ParameterNet;
use crate::trace::RegretTrace;
use crate::Vector;

/// Largest absolute increment of either sum.
pub const INCREMENT_BOUND: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleDiagnostic {
    /// Sum of `<g(theta_t), theta*> - <a_t, theta*>`.
    pub sigma_t: f64,
    /// Sum of `max_{a in A_t} <a, theta*> - <g(theta*), theta*>`.
    pub sigma_prime_t: f64,
    pub sigma_increments: Vec<f64>,
    /// Reduced-instance noise `r_t - <g(theta_t), theta*>`.
    pub eta_prime: Vec<f64>,
    pub envelope: f64,
}

/// `2 sqrt(2 T ln(2 / delta))` times the increment bound.
pub fn azuma_envelope(rounds: u64, delta: f64) -> f64 {
    2.0 * (2.0 * rounds as f64 * (2.0 / delta).ln()).sqrt() * INCREMENT_BOUND
}

/// Recomputes both martingales of a net-indexed run from its round log.
pub fn martingale_diagnostics(
    trace: &RegretTrace,
    net: &ParameterNet,
    dist: &ContextDistribution,
    theta_star: &Vector,
    delta: f64,
) -> Result<MartingaleDiagnostic, ReductionError> {
    let finite = dist.as_finite().ok_or(ReductionError::RequiresFiniteSupport)?;
    let g_values: Vec<f64> = net
        .points()
        .iter()
        .map(|p| exact_g(dist, p).map(|g| g.dot(theta_star)))
        .collect::<Result<_, _>>()?;
    let g_star = exact_g(dist, theta_star)?.dot(theta_star);
    let set_best: Vec<f64> = finite
        .supports()
        .iter()
        .map(|s| s.actions()[s.argmax(theta_star)].dot(theta_star))
        .collect();

    let mut sigma_increments = Vec::with_capacity(trace.rounds.len());
    let mut eta_prime = Vec::with_capacity(trace.rounds.len());
    let mut sigma_prime_t = 0.0;
    for r in &trace.rounds {
        let support = r.support.ok_or(ReductionError::RequiresFiniteSupport)?;
        let set = &finite.supports()[support];
        let played = set.actions()[set.argmax(net.point(r.arm))].dot(theta_star);
        sigma_increments.push(g_values[r.arm] - played);
        sigma_prime_t += set_best[support] - g_star;
        eta_prime.push(r.reward - g_values[r.arm]);
    }
    Ok(MartingaleDiagnostic {
        sigma_t: sigma_increments.iter().sum(),
        sigma_prime_t,
        sigma_increments,
        eta_prime,
        envelope: azuma_envelope(trace.rounds.len() as u64, delta),
    })
}
