//! Passive and eavesdropping adversaries.
//!
//! [`collect`] materializes exactly what a coalition of corrupt nodes plus an
//! optional eavesdropper observe during a run. [`reconstruct`] then derives
//! everything that observation set determines: all regular-edge auxiliaries,
//! the corrupt nodes' dummy trajectories, and for every honest node `i` the
//! single scalar `L_i = z_{i|i'}^(0) + c s_i / 2`, provided node `i` never
//! took the exchange branch. [`regenerate_broadcasts`] replays every observed
//! broadcast from that reduced knowledge, and [`attack_mmse`] turns `L_i` into
//! the best linear estimate of `s_i`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec::Vec;

use crate::engine::{
    dummy_step, dummy_term, regular_coupling, x_from_dummy_term, z_neighbor_update, Trace,
};
use crate::problem::PublicParameters;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdversaryConfig {
    pub corrupt: BTreeSet<usize>,
    pub eavesdropping: bool,
    /// Initial regular-edge auxiliaries travel over encrypted channels and
    /// are hidden from the eavesdropper.
    pub encrypted_init: bool,
}

impl AdversaryConfig {
    pub fn new(corrupt: impl IntoIterator<Item = usize>, eavesdropping: bool) -> Self {
        Self {
            corrupt: corrupt.into_iter().collect(),
            eavesdropping,
            encrypted_init: false,
        }
    }

    /// Every node except `honest` is corrupt, eavesdropping on.
    pub fn all_but(n: usize, honest: usize) -> Self {
        Self::new((0..n).filter(|&j| j != honest), true)
    }

    pub fn honest(&self, n: usize) -> Vec<usize> {
        (0..n).filter(|j| !self.corrupt.contains(j)).collect()
    }
}

/// An endpoint of an augmented edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Endpoint {
    Node(usize),
    Dummy(usize),
}

/// Identifies one observed scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ObsKey {
    /// `s_j`.
    Private { node: usize },
    /// `x_j^(t)`, `t >= 1`.
    Broadcast { node: usize, t: usize },
    /// `z_{holder|peer}^(t)`.
    Auxiliary {
        holder: Endpoint,
        peer: Endpoint,
        t: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    n: usize,
    t_max: usize,
    entries: BTreeMap<ObsKey, f64>,
}

impl ObservationSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &ObsKey) -> Option<f64> {
        self.entries.get(key).copied()
    }

    pub fn contains(&self, key: &ObsKey) -> bool {
        self.entries.contains_key(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ObsKey, &f64)> {
        self.entries.iter()
    }

    pub fn t_max(&self) -> usize {
        self.t_max
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Corrupt nodes, i.e. those whose private value was observed.
    pub fn corrupt(&self) -> BTreeSet<usize> {
        self.entries
            .keys()
            .filter_map(|k| match k {
                ObsKey::Private { node } => Some(*node),
                _ => None,
            })
            .collect()
    }

    fn require(&self, key: ObsKey) -> Result<f64> {
        self.get(&key)
            .ok_or_else(|| Error::Underdetermined(format!("{key:?}")))
    }
}

/// Gathers the adversary's view of a run.
///
/// The eavesdropper sees every broadcast `x_j^(t+1)` and, unless the
/// initialization is encrypted, every regular-edge `z_{j|k}^(0)`. A corrupt
/// node `j` contributes `s_j`, both auxiliaries of each of its regular edges
/// and of its dummy edge for every round, and the broadcasts it sends and
/// receives. Dummy-edge auxiliaries of honest nodes are never transmitted
/// and never appear.
pub fn collect(trace: &Trace, cfg: &AdversaryConfig) -> Result<ObservationSet> {
    let p = trace.instance();
    let n = p.node_count();
    if let Some(&bad) = cfg.corrupt.iter().find(|&&j| j >= n) {
        return Err(Error::InvalidParameter(format!(
            "corrupt node {bad} out of range"
        )));
    }
    if cfg.corrupt.len() == n {
        return Err(Error::InvalidCoalition);
    }
    let t_max = trace.t_max();
    let directed = p.public().directed();
    let graph = p.graph().base();
    let mut entries = BTreeMap::new();
    let see_broadcasts = |node: usize, entries: &mut BTreeMap<ObsKey, f64>| {
        for (round, state) in trace.states().iter().enumerate() {
            entries.insert(ObsKey::Broadcast { node, t: round + 1 }, state.x[node]);
        }
    };
    if cfg.eavesdropping {
        for node in 0..n {
            see_broadcasts(node, &mut entries);
        }
        if !cfg.encrypted_init {
            for (slot, e) in directed.as_slice().iter().enumerate() {
                entries.insert(
                    ObsKey::Auxiliary {
                        holder: Endpoint::Node(e.from),
                        peer: Endpoint::Node(e.to),
                        t: 0,
                    },
                    trace.init().regular[slot],
                );
            }
        }
    }
    for &j in &cfg.corrupt {
        entries.insert(ObsKey::Private { node: j }, p.s()[j]);
        see_broadcasts(j, &mut entries);
        for &k in graph.neighbors(j) {
            see_broadcasts(k, &mut entries);
        }
        for (t, state) in trace.states().iter().enumerate() {
            for slot in directed.slots_of(j) {
                let e = directed.get(slot);
                entries.insert(
                    ObsKey::Auxiliary {
                        holder: Endpoint::Node(j),
                        peer: Endpoint::Node(e.to),
                        t,
                    },
                    state.z.regular[slot],
                );
                entries.insert(
                    ObsKey::Auxiliary {
                        holder: Endpoint::Node(e.to),
                        peer: Endpoint::Node(j),
                        t,
                    },
                    state.z.regular[e.reverse],
                );
            }
            entries.insert(
                ObsKey::Auxiliary {
                    holder: Endpoint::Node(j),
                    peer: Endpoint::Dummy(j),
                    t,
                },
                state.z.to_dummy[j],
            );
            entries.insert(
                ObsKey::Auxiliary {
                    holder: Endpoint::Dummy(j),
                    peer: Endpoint::Node(j),
                    t,
                },
                state.z.from_dummy[j],
            );
        }
    }
    Ok(ObservationSet { n, t_max, entries })
}

/// What the adversary learns about one honest node.
#[derive(Debug, Clone, PartialEq)]
pub struct HonestRecovery {
    pub node: usize,
    /// `z_{i|i'}^(0) + c s_i / 2`.
    pub leakage: f64,
    /// `z_{i|i'}^(t+1) - z_{i|i'}^(t)` for `t = 0..t_max`.
    pub dummy_increments: Vec<f64>,
    /// First round whose dummy update is inconsistent with the reflect
    /// branch.
    pub violation: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    /// `x^(t+1)` by round `t`.
    pub x: Vec<Vec<f64>>,
    /// Regular-edge auxiliaries `z^(t)`, `t = 0..=t_max`, slot indexed.
    pub regular_z: Vec<Vec<f64>>,
    /// Corrupt dummy trajectories `(z_{j|j'}^(t), z_{j'|j}^(t))`.
    pub corrupt_dummy: BTreeMap<usize, Vec<(f64, f64)>>,
    pub corrupt_s: BTreeMap<usize, f64>,
    /// Honest nodes in ascending order.
    pub honest: Vec<HonestRecovery>,
}

impl ReconstructionResult {
    pub fn recovery(&self, node: usize) -> Option<&HonestRecovery> {
        self.honest.iter().find(|h| h.node == node)
    }

    /// Recovered leakage of `node` if its condition held throughout.
    pub fn leakage(&self, node: usize) -> Option<f64> {
        self.recovery(node)
            .filter(|h| h.violation.is_none())
            .map(|h| h.leakage)
    }

    /// The knowledge the observation set reduces to.
    pub fn reduced(&self) -> ReducedKnowledge {
        ReducedKnowledge {
            t_max: self.x.len() - 1,
            corrupt_s: self.corrupt_s.clone(),
            corrupt_dummy_init: self
                .corrupt_dummy
                .iter()
                .map(|(&j, traj)| (j, traj[0]))
                .collect(),
            regular_init: self.regular_z[0].clone(),
            leakage: self.honest.iter().map(|h| (h.node, h.leakage)).collect(),
        }
    }
}

/// Relative tolerance for the reflect-branch consistency check.
pub const REFLECT_TOLERANCE: f64 = 1e-8;

/// Runs the reconstruction chain and fails with
/// [`Error::ConditionViolated`] if any honest node took a detectable
/// exchange branch.
pub fn reconstruct(
    obs: &ObservationSet,
    public: &PublicParameters,
) -> Result<ReconstructionResult> {
    let result = reconstruct_lenient(obs, public)?;
    if let Some(h) = result.honest.iter().find(|h| h.violation.is_some()) {
        return Err(Error::ConditionViolated {
            node: h.node,
            t: h.violation.unwrap_or_default(),
        });
    }
    Ok(result)
}

/// Reconstruction that reports violations per node instead of failing.
///
/// 1. Regular-edge auxiliaries for all rounds follow from their initial
///    values and the observed broadcasts; corrupt dummy trajectories follow
///    from their initial values, `s_j` and the broadcasts.
/// 2. Inverting the primal update at node `i` yields
///    `w_i^(t) = z_{i|i'}^(t) + c s_i / 2` for every round, hence the dummy
///    increments.
/// 3. Under the reflect branch `w^(t+1) = (1 - 2 theta) w^(t) + 2 theta c x^(t+1)`;
///    any round where that fails marks a violation.
/// 4. `L_i = w_i^(0)`.
///
/// A violation in the last round is not detectable because it only affects
/// auxiliaries no broadcast depends on.
pub fn reconstruct_lenient(
    obs: &ObservationSet,
    public: &PublicParameters,
) -> Result<ReconstructionResult> {
    let n = public.node_count();
    if obs.n != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: obs.n,
        });
    }
    let t_max = obs.t_max;
    let c = public.c();
    let theta = public.theta();
    let directed = public.directed();

    let mut x = Vec::with_capacity(t_max + 1);
    for round in 0..=t_max {
        let row = (0..n)
            .map(|node| obs.require(ObsKey::Broadcast { node, t: round + 1 }))
            .collect::<Result<Vec<f64>>>()?;
        x.push(row);
    }
    let z0 = directed
        .as_slice()
        .iter()
        .map(|e| {
            obs.require(ObsKey::Auxiliary {
                holder: Endpoint::Node(e.from),
                peer: Endpoint::Node(e.to),
                t: 0,
            })
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut regular_z = Vec::with_capacity(t_max + 1);
    regular_z.push(z0);
    for round in 0..t_max {
        let next = z_neighbor_update(public, &regular_z[round], &x[round]);
        regular_z.push(next);
    }

    let corrupt = obs.corrupt();
    let mut corrupt_s = BTreeMap::new();
    let mut corrupt_dummy = BTreeMap::new();
    for &j in &corrupt {
        let s_j = obs.require(ObsKey::Private { node: j })?;
        let mut to = obs.require(ObsKey::Auxiliary {
            holder: Endpoint::Node(j),
            peer: Endpoint::Dummy(j),
            t: 0,
        })?;
        let mut from = obs.require(ObsKey::Auxiliary {
            holder: Endpoint::Dummy(j),
            peer: Endpoint::Node(j),
            t: 0,
        })?;
        let mut traj = Vec::with_capacity(t_max + 1);
        for row in &x {
            traj.push((to, from));
            let (_, a, b) = dummy_step(theta, c, s_j, to, from, row[j]);
            to = a;
            from = b;
        }
        corrupt_s.insert(j, s_j);
        corrupt_dummy.insert(j, traj);
    }

    let mut honest = Vec::new();
    for i in (0..n).filter(|i| !corrupt.contains(i)) {
        let scale = c * (public.graph().regular_degree(i) as f64 + 1.0);
        let w: Vec<f64> = (0..=t_max)
            .map(|t| scale * x[t][i] + 1.0 + regular_coupling(public, i, &regular_z[t]))
            .collect();
        let dummy_increments = w.windows(2).map(|p| p[1] - p[0]).collect();
        let violation = (0..t_max).find(|&t| {
            let predicted = (1.0 - 2.0 * theta) * w[t] + 2.0 * theta * c * x[t][i];
            let tol = REFLECT_TOLERANCE * (1.0 + w[t + 1].abs().max(predicted.abs()));
            (w[t + 1] - predicted).abs() > tol
        });
        honest.push(HonestRecovery {
            node: i,
            leakage: w[0],
            dummy_increments,
            violation,
        });
    }

    Ok(ReconstructionResult {
        x,
        regular_z,
        corrupt_dummy,
        corrupt_s,
        honest,
    })
}

/// Corrupt data, all initial regular auxiliaries, corrupt dummy
/// initializations and one leakage scalar per honest node.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedKnowledge {
    pub t_max: usize,
    pub corrupt_s: BTreeMap<usize, f64>,
    pub corrupt_dummy_init: BTreeMap<usize, (f64, f64)>,
    pub regular_init: Vec<f64>,
    pub leakage: BTreeMap<usize, f64>,
}

/// Replays all broadcasts `x^(t+1)`, `t = 0..=t_max`, from reduced
/// knowledge, assuming honest nodes always reflect.
pub fn regenerate_broadcasts(
    public: &PublicParameters,
    k: &ReducedKnowledge,
) -> Result<Vec<Vec<f64>>> {
    let n = public.node_count();
    let c = public.c();
    let theta = public.theta();
    if k.regular_init.len() != public.directed().len() {
        return Err(Error::DimensionMismatch {
            expected: public.directed().len(),
            found: k.regular_init.len(),
        });
    }
    enum Local {
        Corrupt { s: f64, to: f64, from: f64 },
        Honest { w: f64 },
    }
    let mut local = (0..n)
        .map(|j| {
            match (
                k.corrupt_s.get(&j),
                k.corrupt_dummy_init.get(&j),
                k.leakage.get(&j),
            ) {
                (Some(&s), Some(&(to, from)), _) => Ok(Local::Corrupt { s, to, from }),
                (None, _, Some(&w)) => Ok(Local::Honest { w }),
                _ => Err(Error::Underdetermined(format!("knowledge of node {j}"))),
            }
        })
        .collect::<Result<Vec<Local>>>()?;
    let mut regular = k.regular_init.clone();
    let mut out = Vec::with_capacity(k.t_max + 1);
    for _ in 0..=k.t_max {
        let x: Vec<f64> = (0..n)
            .map(|j| {
                let w = match local[j] {
                    Local::Corrupt { s, to, .. } => dummy_term(c, s, to),
                    Local::Honest { w } => w,
                };
                x_from_dummy_term(public, j, &regular, w)
            })
            .collect();
        regular = z_neighbor_update(public, &regular, &x);
        for (j, state) in local.iter_mut().enumerate() {
            match state {
                Local::Corrupt { s, to, from } => {
                    let (_, a, b) = dummy_step(theta, c, *s, *to, *from, x[j]);
                    *to = a;
                    *from = b;
                }
                Local::Honest { w } => *w = (1.0 - 2.0 * theta) * *w + 2.0 * theta * c * x[j],
            }
        }
        out.push(x);
    }
    Ok(out)
}

/// Comparison of a reconstruction against the simulator's ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    /// `(node, |L_recovered - L_true|)` for honest nodes without violation.
    pub leakage_errors: Vec<(usize, f64)>,
    /// Largest deviation of recovered regular auxiliaries.
    pub regular_error: f64,
    /// Largest deviation of recovered corrupt dummy auxiliaries.
    pub corrupt_dummy_error: f64,
    /// Largest deviation of recovered honest dummy increments.
    pub increment_error: f64,
}

impl AuditReport {
    pub fn max_leakage_error(&self) -> f64 {
        self.leakage_errors.iter().map(|e| e.1).fold(0.0, f64::max)
    }
}

/// `z_{i|i'}^(0) + c s_i / 2` from the trace.
pub fn true_leakage(trace: &Trace, i: usize) -> f64 {
    let p = trace.instance();
    dummy_term(p.c(), p.s()[i], trace.init().to_dummy[i])
}

pub fn audit(result: &ReconstructionResult, trace: &Trace) -> AuditReport {
    let leakage_errors = result
        .honest
        .iter()
        .filter(|h| h.violation.is_none())
        .map(|h| (h.node, (h.leakage - true_leakage(trace, h.node)).abs()))
        .collect();
    let mut regular_error: f64 = 0.0;
    for (t, z) in result.regular_z.iter().enumerate() {
        for (a, b) in z.iter().zip(&trace.z(t).regular) {
            regular_error = regular_error.max((a - b).abs());
        }
    }
    let mut corrupt_dummy_error: f64 = 0.0;
    for (&j, traj) in &result.corrupt_dummy {
        for (t, &(to, from)) in traj.iter().enumerate() {
            let z = trace.z(t);
            corrupt_dummy_error = corrupt_dummy_error
                .max((to - z.to_dummy[j]).abs())
                .max((from - z.from_dummy[j]).abs());
        }
    }
    let mut increment_error: f64 = 0.0;
    for h in result.honest.iter().filter(|h| h.violation.is_none()) {
        for (t, d) in h.dummy_increments.iter().enumerate() {
            let truth = trace.z(t + 1).to_dummy[h.node] - trace.z(t).to_dummy[h.node];
            increment_error = increment_error.max((d - truth).abs());
        }
    }
    AuditReport {
        leakage_errors,
        regular_error,
        corrupt_dummy_error,
        increment_error,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackEstimate {
    pub estimate: f64,
    pub expected_mse: f64,
}

/// Linear MMSE estimate of `s` from `L = z + c s / 2` with
/// `s ~ N(prior_mean, sigma_s^2)` and `z ~ N(mu_z, sigma_z^2)` independent.
pub fn attack_mmse(leakage: f64, prior: (f64, f64), init: (f64, f64), c: f64) -> AttackEstimate {
    let (prior_mean, sigma_s) = prior;
    let (mu_z, sigma_z) = init;
    let half_c = 0.5 * c;
    let var_s = sigma_s * sigma_s;
    let var_z = sigma_z * sigma_z;
    let denom = half_c * half_c * var_s + var_z;
    if denom == 0.0 {
        return AttackEstimate {
            estimate: prior_mean,
            expected_mse: 0.0,
        };
    }
    let gain = half_c * var_s / denom;
    AttackEstimate {
        estimate: prior_mean + gain * (leakage - mu_z - half_c * prior_mean),
        expected_mse: var_s * var_z / denom,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_init_is_total_breach() {
        let a = attack_mmse(1003.0, (0.0, 1.0), (1000.0, 0.0), 2.0);
        assert_eq!(a.estimate, 3.0);
        assert_eq!(a.expected_mse, 0.0);
    }

    #[test]
    fn huge_noise_returns_prior() {
        let a = attack_mmse(1003.0, (0.25, 1.0), (1000.0, 1e12), 1.0);
        assert!((a.estimate - 0.25).abs() < 1e-12);
        assert!((a.expected_mse - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_mse() {
        let a = attack_mmse(0.0, (0.0, 1.0), (0.0, 1.0), 1.0);
        assert!((a.expected_mse - 0.8).abs() < 1e-15);
    }
}
