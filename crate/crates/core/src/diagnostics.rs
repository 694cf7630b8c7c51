//! Residuals of the closed-form relations a half-averaged trace satisfies.
//!
//! Both relations follow from eliminating the auxiliaries between two
//! consecutive rounds and are evaluated from the recorded trace only:
//!
//! * neighbor increment, `t >= 1`:
//!   `z_{j|i}^(t+1) - z_{j|i}^(t) = c A_ij x_i^(t+1) - c A_ij x_i^(t) / 2 + c A_ji x_j^(t) / 2`
//! * primal increment, `t >= 1`:
//!   `x_j^(t+2) - x_j^(t+1) = [c sum_k (x_k^(t+1) - x_k^(t)/2 - x_j^(t)/2) + z_{j|j'}^(t+1) - z_{j|j'}^(t)] / (c (d_j + 1))`

use crate::engine::Trace;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceResiduals {
    /// Largest absolute residual of the neighbor-increment relation.
    pub neighbor_increment: f64,
    /// Largest absolute residual of the primal-increment relation.
    pub primal_increment: f64,
}

impl TraceResiduals {
    pub fn max(&self) -> f64 {
        self.neighbor_increment.max(self.primal_increment)
    }
}

/// Only defined for `theta = 1/2`.
pub fn trace_residuals(trace: &Trace) -> Result<TraceResiduals> {
    let p = trace.instance();
    if p.theta() != 0.5 {
        return Err(Error::InvalidParameter(alloc::format!(
            "increment relations need theta = 1/2, got {}",
            p.theta()
        )));
    }
    let c = p.c();
    let g = p.graph().base();
    let directed = p.public().directed();
    let t_max = trace.t_max();
    let mut neighbor: f64 = 0.0;
    let mut primal: f64 = 0.0;
    for t in 1..=t_max {
        let (z_now, z_next) = (trace.z(t), trace.z(t + 1));
        let (x_now, x_next) = (trace.x(t), trace.x(t + 1));
        // slot holds z_{j|i}: j = from, i = to
        for (slot, e) in directed.as_slice().iter().enumerate() {
            let (j, i) = (e.from, e.to);
            let a_ij = if i < j { 1.0 } else { -1.0 };
            let a_ji = -a_ij;
            let lhs = z_next.regular[slot] - z_now.regular[slot];
            let rhs = c * a_ij * x_next[i] - 0.5 * c * a_ij * x_now[i] + 0.5 * c * a_ji * x_now[j];
            neighbor = neighbor.max((lhs - rhs).abs());
        }
        if t < t_max {
            let x_after = trace.x(t + 2);
            for j in 0..p.node_count() {
                let sum: f64 = g
                    .neighbors(j)
                    .iter()
                    .map(|&k| x_next[k] - 0.5 * x_now[k] - 0.5 * x_now[j])
                    .sum();
                let dz = z_next.to_dummy[j] - z_now.to_dummy[j];
                let d = g.degree(j) as f64;
                let rhs = (c * sum + dz) / (c * (d + 1.0));
                let lhs = x_after[j] - x_next[j];
                primal = primal.max((lhs - rhs).abs());
            }
        }
    }
    Ok(TraceResiduals {
        neighbor_increment: neighbor,
        primal_increment: primal,
    })
}
