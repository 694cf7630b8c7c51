//! Synchronous inequality-constrained PDMM on the augmented graph.
//!
//! Each round `t` reads the auxiliaries `z^(t)` and
//!
//! 1. computes every primal `x_i^(t+1)` from `z^(t)`,
//! 2. updates every regular-edge auxiliary from `z^(t)` and the broadcast
//!    `x^(t+1)`,
//! 3. updates every dummy pair `(z_{i|i'}, z_{i'|i})` through either the
//!    exchange branch (`y_{i|i'} + y_{i'|i} > 0`) or the reflect branch.
//!
//! A [`Trace`] keeps one [`EngineState`] per round. State `t` holds the
//! auxiliaries it started from, the primal it produced and the dummy branch
//! decision, so the privacy condition for round `t` can be read off a single
//! state.

use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use crate::problem::{ProblemInstance, PublicParameters};
use crate::{seeded_rng, Error, Result};

/// Random initialization of the auxiliaries.
///
/// Dummy pairs get `z_{i|i'} ~ N(mu_z, sigma_z^2)` and
/// `z_{i'|i} ~ N(-mu_z, sigma_z^2)`; regular directed edges get
/// `N(regular_mean, sigma_z^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitSpec {
    pub mu_z: f64,
    pub sigma_z: f64,
    pub regular_mean: f64,
    pub seed: u64,
}

impl InitSpec {
    pub fn new(mu_z: f64, sigma_z: f64, seed: u64) -> Self {
        Self {
            mu_z,
            sigma_z,
            regular_mean: 0.0,
            seed,
        }
    }

    /// All auxiliaries start at zero.
    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0)
    }
}

/// Auxiliary variables of one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Auxiliaries {
    /// `z_{i|j}` indexed by directed slot (see [`crate::problem::DirectedEdges`]).
    pub regular: Vec<f64>,
    /// `z_{i|i'}`, held by node `i` on its dummy edge.
    pub to_dummy: Vec<f64>,
    /// `z_{i'|i}`, held by dummy `i'`.
    pub from_dummy: Vec<f64>,
}

impl Auxiliaries {
    pub fn zeros(public: &PublicParameters) -> Self {
        let n = public.node_count();
        Self {
            regular: alloc::vec![0.0; public.directed().len()],
            to_dummy: alloc::vec![0.0; n],
            from_dummy: alloc::vec![0.0; n],
        }
    }

    fn all_finite(&self) -> bool {
        self.regular
            .iter()
            .chain(&self.to_dummy)
            .chain(&self.from_dummy)
            .all(|v| v.is_finite())
    }
}

/// Dummy-edge quantities of one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DummyStep {
    /// `y_{i|i'} = z_{i|i'} - 2c x_i + c s_i`.
    pub y_node: f64,
    /// `y_{i'|i} = z_{i'|i} + c s_i`.
    pub y_dummy: f64,
    /// Whether the exchange branch was taken.
    pub exchanged: bool,
}

impl DummyStep {
    pub fn y_sum(&self) -> f64 {
        self.y_node + self.y_dummy
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineState {
    pub t: usize,
    /// `z^(t)`.
    pub z: Auxiliaries,
    /// `x^(t+1)`, computed from `z^(t)`.
    pub x: Vec<f64>,
    pub dummy: Vec<DummyStep>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    instance: ProblemInstance,
    states: Vec<EngineState>,
    terminal: Auxiliaries,
}

impl Trace {
    pub fn instance(&self) -> &ProblemInstance {
        &self.instance
    }

    /// One state per round, `t = 0..=t_max`.
    pub fn states(&self) -> &[EngineState] {
        &self.states
    }

    pub fn t_max(&self) -> usize {
        self.states.len() - 1
    }

    /// `z^(0)`.
    pub fn init(&self) -> &Auxiliaries {
        &self.states[0].z
    }

    /// `z^(t)` for `t = 0..=t_max + 1`.
    pub fn z(&self, t: usize) -> &Auxiliaries {
        self.states.get(t).map_or(&self.terminal, |s| &s.z)
    }

    /// `x^(t)` for `t = 1..=t_max + 1`; `x^(0)` is zero and not stored.
    pub fn x(&self, t: usize) -> &[f64] {
        assert!(t >= 1, "x^(0) is identically zero");
        &self.states[t - 1].x
    }

    /// The last primal iterate, `x^(t_max + 1)`.
    pub fn final_x(&self) -> &[f64] {
        &self.states[self.states.len() - 1].x
    }

    /// `||x^(t_max+1) - s_max 1||^2`.
    pub fn final_squared_error(&self) -> f64 {
        squared_error(self.final_x(), self.instance.optimum())
    }
}

/// `sum_i (x_i - target)^2`.
pub fn squared_error(x: &[f64], target: f64) -> f64 {
    x.iter().map(|v| (v - target) * (v - target)).sum()
}

/// Draws `z^(0)` in canonical order: nodes ascending, and for each node its
/// regular neighbors ascending, then `z_{i|i'}`, then `z_{i'|i}`.
pub fn initialize(p: &ProblemInstance, init: &InitSpec) -> Auxiliaries {
    initialize_public(p.public(), init)
}

pub fn initialize_public(public: &PublicParameters, init: &InitSpec) -> Auxiliaries {
    let mut rng = seeded_rng(init.seed);
    let mut draw = |mean: f64| {
        let xi: f64 = StandardNormal.sample(&mut rng);
        mean + init.sigma_z * xi
    };
    let mut z = Auxiliaries::zeros(public);
    for i in 0..public.node_count() {
        for slot in public.directed().slots_of(i) {
            z.regular[slot] = draw(init.regular_mean);
        }
        z.to_dummy[i] = draw(init.mu_z);
        z.from_dummy[i] = draw(-init.mu_z);
    }
    z
}

/// `sum_j A_ij z_{i|j}` over the regular neighbors of `i`.
pub fn regular_coupling(public: &PublicParameters, i: usize, regular: &[f64]) -> f64 {
    let directed = public.directed();
    directed
        .slots_of(i)
        .map(|slot| directed.get(slot).coefficient * regular[slot])
        .sum()
}

/// Primal update given the dummy term `w_i = z_{i|i'} + c s_i / 2`:
/// `x_i = (-1 - sum_j A_ij z_{i|j} + w_i) / (c (d_i + 1))`.
///
/// `w_i` is the only place the private value enters the update.
pub fn x_from_dummy_term(public: &PublicParameters, i: usize, regular: &[f64], w: f64) -> f64 {
    let c = public.c();
    let d = public.graph().regular_degree(i) as f64;
    (-1.0 - regular_coupling(public, i, regular) + w) / (c * (d + 1.0))
}

/// `z_{i|i'} + c s_i / 2`.
pub fn dummy_term(c: f64, s_i: f64, z_to_dummy: f64) -> f64 {
    z_to_dummy + 0.5 * c * s_i
}

pub fn x_update_node(p: &ProblemInstance, i: usize, z: &Auxiliaries) -> f64 {
    let w = dummy_term(p.c(), p.s()[i], z.to_dummy[i]);
    x_from_dummy_term(p.public(), i, &z.regular, w)
}

pub fn x_update(p: &ProblemInstance, z: &Auxiliaries) -> Vec<f64> {
    (0..p.node_count())
        .map(|i| x_update_node(p, i, z))
        .collect()
}

/// Regular-edge update: for the slot of `z_{j|i}`,
/// `z_{j|i} <- (1 - theta) z_{j|i} + theta (z_{i|j} + 2c A_ij x_i)`,
/// where `x_i` is the value node `j` received from `i`.
pub fn z_neighbor_update(
    public: &PublicParameters,
    regular: &[f64],
    broadcast: &[f64],
) -> Vec<f64> {
    let c = public.c();
    let theta = public.theta();
    let keep = 1.0 - theta;
    let directed = public.directed();
    directed
        .as_slice()
        .iter()
        .enumerate()
        .map(|(slot, e)| {
            let rev = directed.get(e.reverse);
            let incoming = regular[e.reverse] + 2.0 * c * rev.coefficient * broadcast[e.to];
            keep * regular[slot] + theta * incoming
        })
        .collect()
}

/// `y_{i|i'}` and `y_{i'|i}` for one dummy pair.
pub fn dummy_messages(
    c: f64,
    s_i: f64,
    z_to_dummy: f64,
    z_from_dummy: f64,
    x_i: f64,
) -> (f64, f64) {
    let y_node = z_to_dummy - 2.0 * c * x_i + c * s_i;
    let y_dummy = z_from_dummy + c * s_i;
    (y_node, y_dummy)
}

/// One dummy pair update. Returns the branch record and the new
/// `(z_{i|i'}, z_{i'|i})`. Ties (`y` sum exactly zero) reflect.
pub fn dummy_step(
    theta: f64,
    c: f64,
    s_i: f64,
    z_to_dummy: f64,
    z_from_dummy: f64,
    x_i: f64,
) -> (DummyStep, f64, f64) {
    let (y_node, y_dummy) = dummy_messages(c, s_i, z_to_dummy, z_from_dummy, x_i);
    let step = DummyStep {
        y_node,
        y_dummy,
        exchanged: y_node + y_dummy > 0.0,
    };
    let keep = 1.0 - theta;
    let (to, from) = if step.exchanged {
        (
            keep * z_to_dummy + theta * y_dummy,
            keep * z_from_dummy + theta * y_node,
        )
    } else {
        (
            keep * z_to_dummy - theta * y_node,
            keep * z_from_dummy - theta * y_dummy,
        )
    };
    (step, to, from)
}

/// Dummy updates for every node; returns the branch records and the new
/// `to_dummy` / `from_dummy` vectors.
pub fn dummy_update(
    p: &ProblemInstance,
    z: &Auxiliaries,
    x: &[f64],
) -> (Vec<DummyStep>, Vec<f64>, Vec<f64>) {
    let n = p.node_count();
    let mut steps = Vec::with_capacity(n);
    let mut to = Vec::with_capacity(n);
    let mut from = Vec::with_capacity(n);
    for (i, &x_i) in x.iter().enumerate().take(n) {
        let (step, a, b) = dummy_step(
            p.theta(),
            p.c(),
            p.s()[i],
            z.to_dummy[i],
            z.from_dummy[i],
            x_i,
        );
        steps.push(step);
        to.push(a);
        from.push(b);
    }
    (steps, to, from)
}

/// Runs rounds `0..=t_max` from a random initialization.
pub fn run(p: &ProblemInstance, init: &InitSpec, t_max: usize) -> Result<Trace> {
    run_from(p, initialize(p, init), t_max)
}

/// Runs rounds `0..=t_max` from explicit initial auxiliaries.
pub fn run_from(p: &ProblemInstance, z0: Auxiliaries, t_max: usize) -> Result<Trace> {
    run_over_channel(p, z0, t_max, |_, _| {})
}

/// Like [`run_from`], but every broadcast vector passes through `channel`
/// before receivers use it in the regular-edge update. Senders keep their
/// true `x` for their own dummy update and in the trace.
pub fn run_over_channel(
    p: &ProblemInstance,
    z0: Auxiliaries,
    t_max: usize,
    mut channel: impl FnMut(usize, &mut [f64]),
) -> Result<Trace> {
    let public = p.public();
    if z0.regular.len() != public.directed().len() {
        return Err(Error::DimensionMismatch {
            expected: public.directed().len(),
            found: z0.regular.len(),
        });
    }
    if z0.to_dummy.len() != p.node_count() || z0.from_dummy.len() != p.node_count() {
        return Err(Error::DimensionMismatch {
            expected: p.node_count(),
            found: z0.to_dummy.len().min(z0.from_dummy.len()),
        });
    }
    if !z0.all_finite() {
        return Err(Error::NonFinite { t: 0 });
    }
    let mut states = Vec::with_capacity(t_max + 1);
    let mut z = z0;
    for t in 0..=t_max {
        let x = x_update(p, &z);
        let mut broadcast = x.clone();
        channel(t, &mut broadcast);
        let regular = z_neighbor_update(public, &z.regular, &broadcast);
        let (dummy, to_dummy, from_dummy) = dummy_update(p, &z, &x);
        let next = Auxiliaries {
            regular,
            to_dummy,
            from_dummy,
        };
        if !next.all_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t });
        }
        states.push(EngineState { t, z, x, dummy });
        z = next;
    }
    Ok(Trace {
        instance: p.clone(),
        states,
        terminal: z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{augment, Graph};
    use crate::problem::assemble;
    use alloc::vec;

    fn single(s: f64, c: f64) -> ProblemInstance {
        assemble(augment(&Graph::new(1, []).unwrap()), vec![s], c, 0.5).unwrap()
    }

    #[test]
    fn degenerate_initialization() {
        let p = assemble(augment(&Graph::path(3)), vec![0.0; 3], 1.0, 0.5).unwrap();
        let z = initialize(&p, &InitSpec::new(5.0, 0.0, 9));
        assert!(z.to_dummy.iter().all(|&v| v == 5.0));
        assert!(z.from_dummy.iter().all(|&v| v == -5.0));
        assert!(z.regular.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn initialization_is_deterministic() {
        let p = assemble(augment(&Graph::path(4)), vec![0.0; 4], 1.0, 0.5).unwrap();
        let spec = InitSpec::new(0.0, 1.0, 77);
        assert_eq!(initialize(&p, &spec), initialize(&p, &spec));
        assert_ne!(
            initialize(&p, &spec),
            initialize(&p, &InitSpec { seed: 78, ..spec })
        );
    }

    #[test]
    fn x_update_isolated_node() {
        let p = single(0.0, 1.0);
        let z = Auxiliaries::zeros(p.public());
        assert_eq!(x_update(&p, &z), vec![-1.0]);
    }

    #[test]
    fn x_update_one_neighbor() {
        // d_i = 1, A_ij z_{i|j} = 0, z_{i|i'} = 2, c = 2, s_i = 1
        let p = assemble(augment(&Graph::path(2)), vec![1.0, 0.0], 2.0, 0.5).unwrap();
        let mut z = Auxiliaries::zeros(p.public());
        z.to_dummy[0] = 2.0;
        assert_eq!(x_update_node(&p, 0, &z), 0.5);
    }

    #[test]
    fn neighbor_update_arithmetic() {
        for (theta, expected) in [(0.5, 1.0), (1.0, 2.0)] {
            let p = assemble(augment(&Graph::path(2)), vec![0.0, 0.0], 1.0, theta).unwrap();
            // z_{1|0} receives x_0 = 1 with A_01 = 1
            let slot = p.public().directed().slot(1, 0).unwrap();
            let z = z_neighbor_update(p.public(), &[0.0, 0.0], &[1.0, 0.0]);
            assert_eq!(z[slot], expected);
        }
    }

    #[test]
    fn dummy_exchange_branch() {
        let (step, to, from) = dummy_step(0.5, 1.0, 0.0, 0.0, 0.0, -1.0);
        assert_eq!((step.y_node, step.y_dummy), (2.0, 0.0));
        assert!(step.exchanged);
        assert_eq!((to, from), (0.0, 1.0));
    }

    #[test]
    fn dummy_reflect_branch() {
        let (step, to, from) = dummy_step(0.5, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert_eq!((step.y_node, step.y_dummy), (-2.0, 0.0));
        assert!(!step.exchanged);
        assert_eq!((to, from), (1.0, 0.0));
    }

    #[test]
    fn dummy_tie_reflects() {
        // y_node = 1 - 2 + 0 = -1, y_dummy = 1: sum exactly zero
        let (step, ..) = dummy_step(0.5, 1.0, 0.0, 1.0, 1.0, 1.0);
        assert_eq!(step.y_sum(), 0.0);
        assert!(!step.exchanged);
    }

    #[test]
    fn single_node_converges_to_its_value() {
        let p = single(0.0, 1.0);
        let trace = run(&p, &InitSpec::zero(), 400).unwrap();
        assert_eq!(trace.x(1), &[-1.0]);
        assert!(trace.final_x()[0].abs() < 1e-9, "{:?}", trace.final_x());
    }

    #[test]
    fn k2_converges_to_max() {
        let p = assemble(augment(&Graph::complete(2)), vec![0.0, 1.0], 1.0, 0.5).unwrap();
        let trace = run(&p, &InitSpec::zero(), 2000).unwrap();
        for v in trace.final_x() {
            assert!((v - 1.0).abs() < 1e-6, "{v}");
        }
    }

    #[test]
    fn rejects_non_finite_initialization() {
        let p = single(0.0, 1.0);
        let mut z = Auxiliaries::zeros(p.public());
        z.to_dummy[0] = f64::INFINITY;
        assert_eq!(run_from(&p, z, 3), Err(Error::NonFinite { t: 0 }));
    }

    #[test]
    fn overflow_is_reported() {
        let p = single(0.0, 1.0);
        let mut z = Auxiliaries::zeros(p.public());
        z.to_dummy[0] = f64::MAX;
        z.from_dummy[0] = f64::MAX;
        assert!(matches!(run_from(&p, z, 3), Err(Error::NonFinite { .. })));
    }
}
