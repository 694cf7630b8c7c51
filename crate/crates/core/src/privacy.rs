//! Privacy analysis: the dummy-edge condition on traces and a KSG
//! mutual-information estimator for the leakage term.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::engine::{dummy_messages, Trace};
use crate::rng::derive_seed;
use crate::{seeded_rng, Error, Result};

/// Per-node evaluation of the privacy condition
/// `L_i^(t) = z_{i|i'}^(t) + z_{i'|i}^(t) - 2c x_i^(t+1) + 2c s_i <= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    /// `lhs[i][t]`.
    pub lhs: Vec<Vec<f64>>,
    pub holds_all_t: Vec<bool>,
    pub violating: Vec<usize>,
    /// Nodes holding the maximum private value.
    pub max_nodes: Vec<usize>,
}

impl ConditionReport {
    /// First round at which node `i` violates the condition.
    pub fn first_violation(&self, i: usize) -> Option<usize> {
        self.lhs[i].iter().position(|&v| v > 0.0)
    }

    /// Fraction of `(node, round)` pairs satisfying the condition.
    pub fn hold_fraction(&self) -> f64 {
        let total: usize = self.lhs.iter().map(Vec::len).sum();
        let held: usize = self
            .lhs
            .iter()
            .map(|row| row.iter().filter(|&&v| v <= 0.0).count())
            .sum();
        held as f64 / total as f64
    }
}

/// Evaluates the condition for every node and every round of the trace.
///
/// The left-hand side is evaluated with the engine's own dummy-message
/// arithmetic, so `lhs > 0` coincides bit for bit with the exchange branch.
pub fn check_condition(trace: &Trace) -> ConditionReport {
    let p = trace.instance();
    let n = p.node_count();
    let mut lhs = vec![Vec::with_capacity(trace.states().len()); n];
    for state in trace.states() {
        for (i, row) in lhs.iter_mut().enumerate() {
            let (y_node, y_dummy) = dummy_messages(
                p.c(),
                p.s()[i],
                state.z.to_dummy[i],
                state.z.from_dummy[i],
                state.x[i],
            );
            row.push(y_node + y_dummy);
        }
    }
    let holds_all_t: Vec<bool> = lhs
        .iter()
        .map(|row| row.iter().all(|&v| v <= 0.0))
        .collect();
    let violating = (0..n).filter(|&i| !holds_all_t[i]).collect();
    ConditionReport {
        lhs,
        holds_all_t,
        violating,
        max_nodes: p.argmax(),
    }
}

pub const DEFAULT_K: usize = 3;
pub const DEFAULT_JITTER: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MIEstimate {
    pub value_nats: f64,
    pub k: usize,
    pub sample_count: usize,
    pub jitter: f64,
}

impl MIEstimate {
    /// Estimate with small negative values clamped to zero.
    pub fn clamped(&self) -> f64 {
        self.value_nats.max(0.0)
    }
}

/// Kraskov–Stögbauer–Grassberger estimator (first variant) for two scalar
/// variables, max-norm in the joint space.
///
/// Before the neighbor search, uniform noise of amplitude `jitter` is added to
/// both coordinates (independent draws, seeded by `jitter_seed`) to break
/// ties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsgEstimator {
    pub k: usize,
    pub jitter: f64,
    pub jitter_seed: u64,
}

impl Default for KsgEstimator {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            jitter: DEFAULT_JITTER,
            jitter_seed: 0,
        }
    }
}

/// KSG estimate with the default jitter.
pub fn estimate_mi_ksg(xs: &[f64], ys: &[f64], k: usize) -> Result<MIEstimate> {
    KsgEstimator {
        k,
        ..KsgEstimator::default()
    }
    .estimate(xs, ys)
}

impl KsgEstimator {
    pub fn estimate(&self, xs: &[f64], ys: &[f64]) -> Result<MIEstimate> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be positive".into()));
        }
        if xs.len() != ys.len() {
            return Err(Error::DimensionMismatch {
                expected: xs.len(),
                found: ys.len(),
            });
        }
        let needed = 2 * (self.k + 1);
        if xs.len() < needed {
            return Err(Error::InsufficientSamples {
                needed,
                found: xs.len(),
            });
        }
        if xs.iter().chain(ys).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("samples must be finite".into()));
        }
        let mut rng = seeded_rng(self.jitter_seed);
        let xs: Vec<f64> = xs
            .iter()
            .map(|v| v + self.jitter * rng.random::<f64>())
            .collect();
        let ys: Vec<f64> = ys
            .iter()
            .map(|v| v + self.jitter * rng.random::<f64>())
            .collect();

        let n = xs.len();
        let radii = kth_neighbor_radii(&xs, &ys, self.k);
        let digamma = DigammaTable::new(n);
        let sorted_x = sorted(&xs);
        let sorted_y = sorted(&ys);
        let mut marginal = 0.0;
        for i in 0..n {
            let nx = count_strictly_within(&sorted_x, xs[i], radii[i]);
            let ny = count_strictly_within(&sorted_y, ys[i], radii[i]);
            marginal += digamma.at(nx + 1) + digamma.at(ny + 1);
        }
        let value = digamma.at(self.k) + digamma.at(n) - marginal / n as f64;
        Ok(MIEstimate {
            value_nats: value,
            k: self.k,
            sample_count: n,
            jitter: self.jitter,
        })
    }
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    out.sort_unstable_by(f64::total_cmp);
    out
}

/// Number of other samples with `|v - center| < radius` (the sample itself is
/// assumed to be present in `sorted`).
fn count_strictly_within(sorted: &[f64], center: f64, radius: f64) -> usize {
    let lo = sorted.partition_point(|&v| v <= center - radius);
    let hi = sorted.partition_point(|&v| v < center + radius);
    (hi - lo).saturating_sub(1)
}

/// Max-norm distance from every point to its k-th nearest neighbor.
///
/// Points are swept in order along the coordinate with the larger spread; the
/// search in each direction stops once the gap along that coordinate alone
/// exceeds the current k-th distance.
fn kth_neighbor_radii(xs: &[f64], ys: &[f64], k: usize) -> Vec<f64> {
    let (major, minor) = if spread(xs) >= spread(ys) {
        (xs, ys)
    } else {
        (ys, xs)
    };
    let n = xs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| major[a].total_cmp(&major[b]));
    let mut radii = vec![0.0; n];
    // k smallest distances, kept sorted ascending
    let mut best: Vec<f64> = Vec::with_capacity(k + 1);
    for (rank, &i) in order.iter().enumerate() {
        best.clear();
        let offer = |d: f64, best: &mut Vec<f64>| {
            if best.len() < k || d < best[k - 1] {
                let pos = best.partition_point(|&b| b <= d);
                best.insert(pos, d);
                best.truncate(k);
            }
        };
        let (mut left, mut right) = (rank, rank + 1);
        loop {
            let bound = if best.len() == k {
                best[k - 1]
            } else {
                f64::INFINITY
            };
            let gap_left = (left > 0).then(|| major[i] - major[order[left - 1]]);
            let gap_right = (right < n).then(|| major[order[right]] - major[i]);
            let go_left = match (gap_left, gap_right) {
                (Some(l), Some(r)) => l <= r,
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => break,
            };
            let gap = if go_left { gap_left } else { gap_right }.unwrap_or(f64::INFINITY);
            if gap > bound {
                break;
            }
            let j = if go_left {
                left -= 1;
                order[left]
            } else {
                right += 1;
                order[right - 1]
            };
            let d = (major[i] - major[j]).abs().max((minor[i] - minor[j]).abs());
            offer(d, &mut best);
        }
        radii[i] = best[k - 1];
    }
    radii
}

fn spread(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

/// Digamma at positive integers: `psi(m) = -gamma + H_{m-1}`.
pub struct DigammaTable {
    values: Vec<f64>,
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

impl DigammaTable {
    /// Table covering `psi(1)..=psi(max)`.
    pub fn new(max: usize) -> Self {
        let mut values = Vec::with_capacity(max + 1);
        values.push(f64::NEG_INFINITY);
        let mut harmonic = 0.0;
        for m in 1..=max {
            values.push(harmonic - EULER_GAMMA);
            harmonic += 1.0 / m as f64;
        }
        Self { values }
    }

    pub fn at(&self, m: usize) -> f64 {
        self.values[m]
    }
}

/// One point of the normalized-leakage curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmiPoint {
    pub sigma_z: f64,
    /// Estimated `I(S; Z + c S / 2)`.
    pub mi_nats: f64,
    /// Estimated `I(S; S)` on the jittered duplicate sample.
    pub mi_self_nats: f64,
    pub nmi_raw: f64,
}

impl NmiPoint {
    pub fn nmi_clamped(&self) -> f64 {
        self.nmi_raw.clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmiConfig {
    pub c: f64,
    pub sigma_s: f64,
    pub samples: usize,
    pub k: usize,
    pub seed: u64,
}

/// Normalized leakage `I(S; Z + cS/2) / I(S; S)` over a grid of `sigma_z`.
///
/// One sample of `S ~ N(0, sigma_s^2)` and one standard normal sample `xi`
/// are shared by all grid points, with `Z = sigma_z * xi`; the normalizer is
/// estimated once. The mean of `Z` is irrelevant to the mutual information
/// and is taken as zero.
pub fn nmi_curve(cfg: &NmiConfig, sigma_grid: &[f64]) -> Result<Vec<NmiPoint>> {
    if let Some(bad) = sigma_grid.iter().find(|&&s| !(s > 0.0 && s.is_finite())) {
        return Err(Error::InvalidParameter(alloc::format!(
            "sigma_z must be positive, got {bad}"
        )));
    }
    if !(cfg.sigma_s > 0.0 && cfg.sigma_s.is_finite()) {
        return Err(Error::InvalidParameter("sigma_s must be positive".into()));
    }
    let mut rng_s = seeded_rng(derive_seed(cfg.seed, 0));
    let mut rng_z = seeded_rng(derive_seed(cfg.seed, 1));
    let s: Vec<f64> = (0..cfg.samples)
        .map(|_| {
            let xi: f64 = StandardNormal.sample(&mut rng_s);
            cfg.sigma_s * xi
        })
        .collect();
    let xi: Vec<f64> = (0..cfg.samples)
        .map(|_| StandardNormal.sample(&mut rng_z))
        .collect();
    let estimator = KsgEstimator {
        k: cfg.k,
        jitter: DEFAULT_JITTER,
        jitter_seed: derive_seed(cfg.seed, 2),
    };
    let mi_self = estimator.estimate(&s, &s)?.value_nats;
    sigma_grid
        .iter()
        .map(|&sigma_z| {
            let leak: Vec<f64> = s
                .iter()
                .zip(&xi)
                .map(|(s, xi)| sigma_z * xi + 0.5 * cfg.c * s)
                .collect();
            let mi = estimator.estimate(&s, &leak)?.value_nats;
            Ok(NmiPoint {
                sigma_z,
                mi_nats: mi,
                mi_self_nats: mi_self,
                nmi_raw: mi / mi_self,
            })
        })
        .collect()
}

/// `I(S; Z + cS/2)` for `S ~ N(., sigma_s^2)` and `Z ~ N(., sigma_z^2)`
/// independent: `ln(1 + (c/2)^2 sigma_s^2 / sigma_z^2) / 2`.
pub fn gaussian_leakage_mi(c: f64, sigma_s: f64, sigma_z: f64) -> f64 {
    let snr = (0.5 * c * sigma_s) * (0.5 * c * sigma_s) / (sigma_z * sigma_z);
    0.5 * libm::log1p(snr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digamma_values() {
        let t = DigammaTable::new(4);
        assert!((t.at(1) + EULER_GAMMA).abs() < 1e-15);
        assert!((t.at(2) - (1.0 - EULER_GAMMA)).abs() < 1e-15);
        assert!((t.at(4) - (1.0 + 0.5 + 1.0 / 3.0 - EULER_GAMMA)).abs() < 1e-15);
    }

    #[test]
    fn brute_force_radii_agree() {
        let mut rng = seeded_rng(5);
        let xs: Vec<f64> = (0..300).map(|_| rng.random::<f64>()).collect();
        let ys: Vec<f64> = (0..300).map(|_| 40.0 * rng.random::<f64>()).collect();
        for k in [1, 3, 6] {
            let fast = kth_neighbor_radii(&xs, &ys, k);
            for i in 0..xs.len() {
                let mut d: Vec<f64> = (0..xs.len())
                    .filter(|&j| j != i)
                    .map(|j| (xs[i] - xs[j]).abs().max((ys[i] - ys[j]).abs()))
                    .collect();
                d.sort_unstable_by(f64::total_cmp);
                assert_eq!(fast[i], d[k - 1]);
            }
        }
    }

    #[test]
    fn strict_counting() {
        let sorted = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(count_strictly_within(&sorted, 1.0, 1.0), 0);
        assert_eq!(count_strictly_within(&sorted, 1.0, 1.5), 2);
    }

    #[test]
    fn too_few_samples() {
        let v = [0.0; 7];
        assert_eq!(
            estimate_mi_ksg(&v, &v, 3),
            Err(Error::InsufficientSamples {
                needed: 8,
                found: 7
            })
        );
    }

    #[test]
    fn rejects_non_finite_samples() {
        let mut v = [0.0; 10];
        v[3] = f64::NAN;
        assert!(matches!(
            estimate_mi_ksg(&v, &[0.0; 10], 3),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn analytic_leakage() {
        assert!((gaussian_leakage_mi(1.0, 1.0, 10.0) - 0.001_248_440_5).abs() < 1e-9);
    }
}
