//! Representative noise-based baselines for the privacy/accuracy comparison.
//!
//! Both trade accuracy for privacy: the noise that protects the private data
//! also biases (or keeps perturbing) the consensus value.

use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use crate::engine::{run_over_channel, Auxiliaries, Trace};
use crate::graph::Graph;
use crate::problem::ProblemInstance;
use crate::{seeded_rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BaselineMethod {
    /// Perturb the private value once, then flood the maximum.
    NoisyBroadcast,
    /// ADMM on the augmented graph with fresh Gaussian noise on every
    /// broadcast primal.
    DpAdmm,
}

impl BaselineMethod {
    pub fn name(self) -> &'static str {
        match self {
            BaselineMethod::NoisyBroadcast => "noisy-broadcast",
            BaselineMethod::DpAdmm => "dp-admm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineConfig {
    pub method: BaselineMethod,
    pub sigma: f64,
    pub t_max: usize,
    pub seed: u64,
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma >= 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(alloc::format!(
            "noise level must be nonnegative, got {sigma}"
        )))
    }
}

/// Noisy max-flooding. Returns `x^(t)` for `t = 0..=t_max`, with
/// `x^(0) = s + N(0, sigma^2)` (one draw per node in ascending order) and
/// `x_i^(t+1) = max(x_i^(t), max_{j ~ i} x_j^(t))`.
pub fn noisy_broadcast_max(s: &[f64], g: &Graph, cfg: &BaselineConfig) -> Result<Vec<Vec<f64>>> {
    check_sigma(cfg.sigma)?;
    if s.len() != g.node_count() {
        return Err(Error::DimensionMismatch {
            expected: g.node_count(),
            found: s.len(),
        });
    }
    if !g.is_connected() {
        return Err(Error::InvalidGraph(
            "flooding needs a connected graph".into(),
        ));
    }
    let mut rng = seeded_rng(cfg.seed);
    let start: Vec<f64> = s
        .iter()
        .map(|v| {
            let xi: f64 = StandardNormal.sample(&mut rng);
            v + cfg.sigma * xi
        })
        .collect();
    let mut out = Vec::with_capacity(cfg.t_max + 1);
    out.push(start);
    for t in 0..cfg.t_max {
        let prev = &out[t];
        let next = (0..g.node_count())
            .map(|i| {
                g.neighbors(i)
                    .iter()
                    .map(|&j| prev[j])
                    .fold(prev[i], f64::max)
            })
            .collect();
        out.push(next);
    }
    Ok(out)
}

/// Noisy-broadcast ADMM. Auxiliaries start at zero; in every round each
/// broadcast `x_i^(t+1)` reaches the neighbors as `x_i^(t+1) + N(0, sigma^2)`
/// (one fresh draw per node and round, ascending node order).
pub fn dp_admm_max(p: &ProblemInstance, cfg: &BaselineConfig) -> Result<Trace> {
    check_sigma(cfg.sigma)?;
    let mut rng = seeded_rng(cfg.seed);
    let sigma = cfg.sigma;
    run_over_channel(p, Auxiliaries::zeros(p.public()), cfg.t_max, |_, x| {
        for v in x.iter_mut() {
            let xi: f64 = StandardNormal.sample(&mut rng);
            *v += sigma * xi;
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run, InitSpec};
    use crate::graph::augment;
    use crate::problem::assemble;
    use alloc::vec;

    fn cfg(method: BaselineMethod, sigma: f64, t_max: usize) -> BaselineConfig {
        BaselineConfig {
            method,
            sigma,
            t_max,
            seed: 11,
        }
    }

    #[test]
    fn noiseless_flooding_is_exact_after_diameter_rounds() {
        let g = Graph::path(5);
        let s = [0.2, -1.0, 3.5, 0.0, 1.0];
        let traj =
            noisy_broadcast_max(&s, &g, &cfg(BaselineMethod::NoisyBroadcast, 0.0, 4)).unwrap();
        let diam = g.diameter().unwrap();
        assert!(traj[diam].iter().all(|&v| v == 3.5));
        assert!(traj[1].iter().any(|&v| v != 3.5));
    }

    #[test]
    fn flooding_rejects_disconnected_graph() {
        let g = Graph::new(3, [(0, 1)]).unwrap();
        assert!(
            noisy_broadcast_max(&[0.0; 3], &g, &cfg(BaselineMethod::NoisyBroadcast, 0.0, 2))
                .is_err()
        );
    }

    #[test]
    fn noiseless_dp_admm_equals_zero_init_engine() {
        let p = assemble(augment(&Graph::path(3)), vec![0.1, 0.7, -0.4], 1.0, 0.5).unwrap();
        let a = dp_admm_max(&p, &cfg(BaselineMethod::DpAdmm, 0.0, 50)).unwrap();
        let b = run(&p, &InitSpec::zero(), 50).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn negative_sigma_rejected() {
        let p = assemble(augment(&Graph::path(2)), vec![0.0, 1.0], 1.0, 0.5).unwrap();
        assert!(dp_admm_max(&p, &cfg(BaselineMethod::DpAdmm, -1.0, 5)).is_err());
    }
}
