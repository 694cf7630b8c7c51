//! Scenario runners. Each scenario turns a [`ScenarioConfig`] into a set of
//! named CSV artifacts plus summary rows; nothing here touches the disk.

use std::cmp::Ordering;
use std::fmt::Write as _;

use anyhow::{Context, Result};
use maxcons_core::adversary::attack_mmse;
use maxcons_core::baselines::{dp_admm_max, noisy_broadcast_max, BaselineConfig, BaselineMethod};
use maxcons_core::diagnostics::trace_residuals;
use maxcons_core::engine::{run, squared_error, InitSpec, Trace};
use maxcons_core::graph::{augment, default_radius, generate_rgg, Graph};
use maxcons_core::privacy::{check_condition, nmi_curve, NmiConfig};
use maxcons_core::problem::{assemble, ProblemInstance};
use maxcons_core::seeded_rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::config::{Scenario, ScenarioConfig};

/// Max per-node error below which a run counts as converged.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Proposed,
    Baseline(BaselineMethod),
    MmseAttack,
}

impl Method {
    pub const COMPARED: [Method; 3] = [
        Method::Proposed,
        Method::Baseline(BaselineMethod::NoisyBroadcast),
        Method::Baseline(BaselineMethod::DpAdmm),
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::Baseline(b) => b.name(),
            Method::MmseAttack => "mmse-attack",
        }
    }
}

/// A named output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SummaryRow {
    pub method: String,
    pub sigma: Option<f64>,
    pub c: Option<f64>,
    pub final_squared_error: Option<f64>,
    pub iterations_to_tol: Option<usize>,
    pub condition_hold_fraction: Option<f64>,
    pub identity_residual: Option<f64>,
    pub nmi_start: Option<f64>,
    pub nmi_end: Option<f64>,
    pub attack_mse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub scenario: Scenario,
    pub artifacts: Vec<Artifact>,
    pub summary: Vec<SummaryRow>,
}

pub fn private_data(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = seeded_rng(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

pub fn scenario_graph(cfg: &ScenarioConfig) -> Result<Graph> {
    let radius = cfg.radius.unwrap_or_else(|| default_radius(cfg.n));
    generate_rgg(cfg.n, radius, cfg.graph_seed).context("generating the random geometric graph")
}

/// The configured graph and private data with penalty `c`.
pub fn scenario_instance(cfg: &ScenarioConfig, c: f64) -> Result<ProblemInstance> {
    let g = scenario_graph(cfg)?;
    Ok(assemble(
        augment(&g),
        private_data(cfg.n, cfg.data_seed),
        c,
        cfg.theta,
    )?)
}

/// First `t` from which every later value stays within tolerance; `t`
/// counts from 1.
pub fn iterations_to_tol(max_abs: &[f64], tol: f64) -> Option<usize> {
    match max_abs.iter().rposition(|&e| e > tol) {
        None if max_abs.is_empty() => None,
        None => Some(1),
        Some(last) if last + 1 < max_abs.len() => Some(last + 2),
        Some(_) => None,
    }
}

fn max_abs_error(x: &[f64], target: f64) -> f64 {
    x.iter().map(|v| (v - target).abs()).fold(0.0, f64::max)
}

/// Per-iteration metrics for `t = 1..=t_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries {
    pub squared: Vec<f64>,
    pub max_abs: Vec<f64>,
}

impl ErrorSeries {
    fn from_rows<'a>(rows: impl Iterator<Item = &'a [f64]>, target: f64) -> Self {
        let (squared, max_abs) = rows
            .map(|x| (squared_error(x, target), max_abs_error(x, target)))
            .unzip();
        Self { squared, max_abs }
    }

    fn from_trace(trace: &Trace, t_max: usize) -> Self {
        let target = trace.instance().optimum();
        Self::from_rows((1..=t_max).map(|t| trace.x(t)), target)
    }

    fn mean(all: &[ErrorSeries]) -> Self {
        let len = all[0].squared.len();
        let k = all.len() as f64;
        let avg = |f: fn(&ErrorSeries) -> &Vec<f64>| -> Vec<f64> {
            (0..len)
                .map(|t| all.iter().map(|s| f(s)[t]).sum::<f64>() / k)
                .collect()
        };
        Self {
            squared: avg(|s| &s.squared),
            max_abs: avg(|s| &s.max_abs),
        }
    }

    pub fn last(&self) -> f64 {
        self.squared.last().copied().unwrap_or(f64::NAN)
    }
}

/// Trajectory `x^(t)`, `t = 1..=t_max`, of one method.
pub fn method_trajectory(
    method: Method,
    p: &ProblemInstance,
    g: &Graph,
    sigma: f64,
    seed: u64,
    mu_z: f64,
    t_max: usize,
) -> Result<Vec<Vec<f64>>> {
    let from_trace = |trace: Trace| (1..=t_max).map(|t| trace.x(t).to_vec()).collect();
    Ok(match method {
        Method::Proposed => from_trace(run(p, &InitSpec::new(mu_z, sigma, seed), t_max)?),
        Method::Baseline(b) => {
            let cfg = BaselineConfig {
                method: b,
                sigma,
                t_max,
                seed,
            };
            match b {
                BaselineMethod::NoisyBroadcast => noisy_broadcast_max(p.s(), g, &cfg)?.split_off(1),
                BaselineMethod::DpAdmm => from_trace(dp_admm_max(p, &cfg)?),
            }
        }
        Method::MmseAttack => anyhow::bail!("the attack has no trajectory"),
    })
}

/// Seed-averaged baseline error series and the per-seed final errors.
pub fn baseline_errors(
    method: BaselineMethod,
    p: &ProblemInstance,
    g: &Graph,
    sigma: f64,
    seeds: std::ops::Range<u64>,
    t_max: usize,
) -> Result<(ErrorSeries, Vec<(u64, f64)>)> {
    let target = p.optimum();
    let runs = seeds
        .into_par_iter()
        .map(|seed| {
            let traj = method_trajectory(Method::Baseline(method), p, g, sigma, seed, 0.0, t_max)?;
            Ok((
                seed,
                ErrorSeries::from_rows(traj.iter().map(Vec::as_slice), target),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let finals = runs.iter().map(|(seed, s)| (*seed, s.last())).collect();
    let series: Vec<ErrorSeries> = runs.into_iter().map(|r| r.1).collect();
    anyhow::ensure!(
        !series.is_empty(),
        "at least one Monte Carlo seed is required"
    );
    Ok((ErrorSeries::mean(&series), finals))
}

pub fn run_scenario(scenario: Scenario, cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    let out = match scenario {
        Scenario::NmiVsSigma => nmi_vs_sigma(cfg),
        Scenario::ConditionVsC => condition_vs_c(cfg),
        Scenario::AccuracyVsNoise => accuracy_vs_noise(cfg),
        Scenario::ConvergencePernode => convergence_pernode(cfg),
        Scenario::AttackMse => attack_mse(cfg),
    }
    .with_context(|| format!("scenario {scenario}"))?;
    let (artifacts, mut summary) = out;
    sort_summary(&mut summary);
    Ok(ScenarioOutput {
        scenario,
        artifacts,
        summary,
    })
}

type Parts = (Vec<Artifact>, Vec<SummaryRow>);

fn artifact(name: &str, text: String) -> Artifact {
    Artifact {
        name: name.into(),
        bytes: text.into_bytes(),
    }
}

fn nmi_vs_sigma(cfg: &ScenarioConfig) -> Result<Parts> {
    let nmi = NmiConfig {
        c: cfg.c,
        sigma_s: cfg.sigma_s,
        samples: cfg.samples,
        k: cfg.k,
        seed: cfg.mi_seed,
    };
    let curve = nmi_curve(&nmi, &cfg.sigma_z_grid)?;
    let mut csv = String::from("sigma_z,mi_nats,mi_self_nats,nmi_raw,nmi_clamped\n");
    for p in &curve {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            p.sigma_z,
            p.mi_nats,
            p.mi_self_nats,
            p.nmi_raw,
            p.nmi_clamped()
        );
    }
    let row = SummaryRow {
        method: Method::Proposed.name().into(),
        c: Some(cfg.c),
        nmi_start: curve.first().map(|p| p.nmi_raw),
        nmi_end: curve.last().map(|p| p.nmi_raw),
        ..Default::default()
    };
    Ok((vec![artifact("nmi.csv", csv)], vec![row]))
}

fn proposed_row(trace: &Trace, t_max: usize, sigma: f64) -> Result<SummaryRow> {
    let series = ErrorSeries::from_trace(trace, t_max);
    let report = check_condition(trace);
    let holds = report.holds_all_t.iter().filter(|&&h| h).count();
    Ok(SummaryRow {
        method: Method::Proposed.name().into(),
        sigma: Some(sigma),
        c: Some(trace.instance().c()),
        final_squared_error: Some(series.last()),
        iterations_to_tol: iterations_to_tol(&series.max_abs, CONVERGENCE_TOLERANCE),
        condition_hold_fraction: Some(holds as f64 / report.holds_all_t.len() as f64),
        identity_residual: trace_residuals(trace).ok().map(|r| r.max()),
        ..Default::default()
    })
}

fn condition_vs_c(cfg: &ScenarioConfig) -> Result<Parts> {
    let t_max = cfg.t_max_for(Scenario::ConditionVsC);
    let runs = cfg
        .c_values
        .par_iter()
        .map(|&c| {
            let p = scenario_instance(cfg, c)?;
            let trace = run(
                &p,
                &InitSpec::new(cfg.mu_z, cfg.sigma_z, cfg.init_seed),
                t_max,
            )?;
            let mut csv = String::new();
            let report = check_condition(&trace);
            for (t, state) in trace.states().iter().enumerate() {
                for i in 0..p.node_count() {
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{},{}",
                        c,
                        t,
                        i + 1,
                        report.max_nodes.contains(&i),
                        report.lhs[i][t],
                        if state.dummy[i].exchanged {
                            "exchange"
                        } else {
                            "reflect"
                        }
                    );
                }
            }
            Ok((csv, proposed_row(&trace, t_max, cfg.sigma_z)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut csv = String::from("c,t,node,is_max,lhs,branch\n");
    let mut rows = Vec::new();
    for (part, row) in runs {
        csv.push_str(&part);
        rows.push(row);
    }
    Ok((vec![artifact("condition.csv", csv)], rows))
}

fn accuracy_vs_noise(cfg: &ScenarioConfig) -> Result<Parts> {
    let t_max = cfg.t_max_for(Scenario::AccuracyVsNoise);
    let g = scenario_graph(cfg)?;
    let p = scenario_instance(cfg, cfg.c)?;
    let seeds = cfg.baseline_seed_offset..cfg.baseline_seed_offset + cfg.baseline_seeds;

    let mut series = String::from("method,sigma,t,squared_error\n");
    let mut finals = String::from("method,sigma,seed,final_squared_error\n");
    let mut rows = Vec::new();
    let push_series = |out: &mut String, method: Method, sigma: f64, s: &ErrorSeries| {
        for (k, e) in s.squared.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{}", method.name(), sigma, k + 1, e);
        }
    };

    let proposed = cfg
        .sigmas
        .par_iter()
        .map(|&sigma| {
            Ok(run(
                &p,
                &InitSpec::new(cfg.mu_z, sigma, cfg.init_seed),
                t_max,
            )?)
        })
        .collect::<Result<Vec<Trace>>>()?;
    for (&sigma, trace) in cfg.sigmas.iter().zip(&proposed) {
        push_series(
            &mut series,
            Method::Proposed,
            sigma,
            &ErrorSeries::from_trace(trace, t_max),
        );
        let row = proposed_row(trace, t_max, sigma)?;
        let _ = writeln!(
            finals,
            "{},{},{},{}",
            Method::Proposed.name(),
            sigma,
            cfg.init_seed,
            row.final_squared_error.unwrap_or(f64::NAN)
        );
        rows.push(row);
    }

    for method in [BaselineMethod::NoisyBroadcast, BaselineMethod::DpAdmm] {
        for &sigma in &cfg.sigmas {
            let (mean, per_seed) = baseline_errors(method, &p, &g, sigma, seeds.clone(), t_max)?;
            push_series(&mut series, Method::Baseline(method), sigma, &mean);
            for (seed, e) in per_seed {
                let _ = writeln!(finals, "{},{},{},{}", method.name(), sigma, seed, e);
            }
            rows.push(SummaryRow {
                method: method.name().into(),
                sigma: Some(sigma),
                c: Some(cfg.c),
                final_squared_error: Some(mean.last()),
                iterations_to_tol: iterations_to_tol(&mean.max_abs, CONVERGENCE_TOLERANCE),
                ..Default::default()
            });
        }
    }
    Ok((
        vec![
            artifact("accuracy.csv", series),
            artifact("accuracy_seeds.csv", finals),
        ],
        rows,
    ))
}

/// Indices of the minimum, lower-median and maximum private values.
pub fn tracked_nodes(s: &[f64]) -> [(usize, &'static str); 3] {
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[a].total_cmp(&s[b]).then(a.cmp(&b)));
    [
        (order[0], "min"),
        (order[(order.len() - 1) / 2], "median"),
        (order[order.len() - 1], "max"),
    ]
}

fn convergence_pernode(cfg: &ScenarioConfig) -> Result<Parts> {
    let t_max = cfg.t_max_for(Scenario::ConvergencePernode);
    let g = scenario_graph(cfg)?;
    let p = scenario_instance(cfg, cfg.c)?;
    let target = p.optimum();
    let sigma = cfg.pernode_sigma;
    let nodes = tracked_nodes(p.s());
    let trajectories = Method::COMPARED
        .par_iter()
        .map(|&m| {
            let seed = match m {
                Method::Proposed => cfg.init_seed,
                _ => cfg.baseline_seed_offset,
            };
            method_trajectory(m, &p, &g, sigma, seed, cfg.mu_z, t_max)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut csv = String::from("method,sigma,t,node,role,x,abs_error\n");
    let mut rows = Vec::new();
    for (m, traj) in Method::COMPARED.iter().zip(&trajectories) {
        for (k, x) in traj.iter().enumerate() {
            for &(i, role) in &nodes {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{}",
                    m.name(),
                    sigma,
                    k + 1,
                    i + 1,
                    role,
                    x[i],
                    (x[i] - target).abs()
                );
            }
        }
        let series = ErrorSeries::from_rows(traj.iter().map(Vec::as_slice), target);
        rows.push(SummaryRow {
            method: m.name().into(),
            sigma: Some(sigma),
            c: Some(cfg.c),
            final_squared_error: Some(series.last()),
            iterations_to_tol: iterations_to_tol(&series.max_abs, CONVERGENCE_TOLERANCE),
            ..Default::default()
        });
    }
    Ok((vec![artifact("pernode.csv", csv)], rows))
}

/// Monte Carlo MSE of the MMSE attack; all grid points share the same
/// draws of `s` and of the standardized initialization noise.
pub fn attack_monte_carlo(
    c: f64,
    sigma_s: f64,
    mu_z: f64,
    sigma_z: f64,
    draws: usize,
    seed: u64,
) -> f64 {
    let mut rng = seeded_rng(seed);
    let mut total = 0.0;
    for _ in 0..draws {
        let a: f64 = StandardNormal.sample(&mut rng);
        let b: f64 = StandardNormal.sample(&mut rng);
        let s = sigma_s * a;
        let leakage = mu_z + sigma_z * b + 0.5 * c * s;
        let est = attack_mmse(leakage, (0.0, sigma_s), (mu_z, sigma_z), c).estimate;
        total += (est - s) * (est - s);
    }
    total / draws as f64
}

fn attack_mse(cfg: &ScenarioConfig) -> Result<Parts> {
    anyhow::ensure!(cfg.attack_draws > 0, "attack_draws must be positive");
    let points: Vec<(f64, f64, f64)> = cfg
        .sigma_z_grid
        .par_iter()
        .map(|&sz| {
            let empirical = attack_monte_carlo(
                cfg.c,
                cfg.sigma_s,
                cfg.mu_z,
                sz,
                cfg.attack_draws,
                cfg.attack_seed,
            );
            let closed = attack_mmse(0.0, (0.0, cfg.sigma_s), (cfg.mu_z, sz), cfg.c).expected_mse;
            (sz, empirical, closed)
        })
        .collect();
    let prior = cfg.sigma_s * cfg.sigma_s;
    let mut csv =
        String::from("c,sigma_z,draws,empirical_mse,closed_form_mse,relative_gap,prior_variance\n");
    let mut rows = Vec::new();
    for (sz, empirical, closed) in points {
        let gap = if closed > 0.0 {
            (empirical - closed).abs() / closed
        } else {
            empirical.abs()
        };
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            cfg.c, sz, cfg.attack_draws, empirical, closed, gap, prior
        );
        rows.push(SummaryRow {
            method: Method::MmseAttack.name().into(),
            sigma: Some(sz),
            c: Some(cfg.c),
            attack_mse: Some(empirical),
            ..Default::default()
        });
    }
    Ok((vec![artifact("attack.csv", csv)], rows))
}

fn cmp_opt(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (a, b) => a.is_some().cmp(&b.is_some()),
    }
}

/// Rows ordered by method, then sigma, then c.
pub fn sort_summary(rows: &mut [SummaryRow]) {
    rows.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(cmp_opt(a.sigma, b.sigma))
            .then(cmp_opt(a.c, b.c))
    });
}

pub fn summary_csv(scenario: Scenario, rows: &[SummaryRow]) -> String {
    fn cell<T: std::fmt::Display>(v: Option<T>) -> String {
        v.map(|v| v.to_string()).unwrap_or_default()
    }
    let mut out = String::from(
        "scenario,method,sigma,c,final_squared_error,iterations_to_tol,condition_hold_fraction,\
         identity_residual,nmi_start,nmi_end,attack_mse\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            scenario,
            r.method,
            cell(r.sigma),
            cell(r.c),
            cell(r.final_squared_error),
            cell(r.iterations_to_tol),
            cell(r.condition_hold_fraction),
            cell(r.identity_residual),
            cell(r.nmi_start),
            cell(r.nmi_end),
            cell(r.attack_mse)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_bookkeeping() {
        assert_eq!(iterations_to_tol(&[], 1.0), None);
        assert_eq!(iterations_to_tol(&[0.5, 0.1], 1.0), Some(1));
        assert_eq!(iterations_to_tol(&[3.0, 2.0, 0.5, 0.1], 1.0), Some(3));
        assert_eq!(iterations_to_tol(&[0.5, 2.0, 0.5], 1.0), Some(3));
        assert_eq!(iterations_to_tol(&[0.5, 2.0], 1.0), None);
    }

    #[test]
    fn tracked_nodes_use_lower_median() {
        let s = [0.3, -1.0, 2.0, 0.1];
        assert_eq!(tracked_nodes(&s), [(1, "min"), (3, "median"), (2, "max")]);
    }

    #[test]
    fn summary_sorted_by_method_then_sigma() {
        let row = |m: &str, s: f64| SummaryRow {
            method: m.into(),
            sigma: Some(s),
            ..Default::default()
        };
        let mut rows = vec![
            row("proposed", 1.0),
            row("dp-admm", 0.1),
            row("proposed", 0.01),
            row("dp-admm", 0.01),
        ];
        sort_summary(&mut rows);
        let keys: Vec<(String, f64)> = rows
            .iter()
            .map(|r| (r.method.clone(), r.sigma.unwrap()))
            .collect();
        assert_eq!(
            keys,
            [
                ("dp-admm".into(), 0.01),
                ("dp-admm".into(), 0.1),
                ("proposed".into(), 0.01),
                ("proposed".into(), 1.0)
            ]
        );
    }
}
