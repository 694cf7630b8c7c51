mod common;

use std::collections::BTreeSet;

use maxcons_core::adversary::{
    attack_mmse, audit, collect, reconstruct, reconstruct_lenient, regenerate_broadcasts,
    true_leakage, AdversaryConfig, Endpoint, ObsKey,
};
use maxcons_core::engine::{run, InitSpec};
use maxcons_core::graph::{augment, Graph};
use maxcons_core::privacy::check_condition;
use maxcons_core::problem::assemble;
use maxcons_core::{seeded_rng, Error};
use rand_distr::{Distribution, StandardNormal};

use common::rgg10_instance;

#[test]
fn honest_node_dummy_edge_is_never_observed() {
    let p = rgg10_instance(1.0);
    let trace = run(&p, &InitSpec::new(1000.0, 1.0, 1), 40).unwrap();
    for i in 0..10 {
        let obs = collect(&trace, &AdversaryConfig::all_but(10, i)).unwrap();
        assert!(!obs.contains(&ObsKey::Private { node: i }));
        for t in 0..=41 {
            for (holder, peer) in [
                (Endpoint::Node(i), Endpoint::Dummy(i)),
                (Endpoint::Dummy(i), Endpoint::Node(i)),
            ] {
                assert!(!obs.contains(&ObsKey::Auxiliary { holder, peer, t }));
            }
        }
    }
}

#[test]
fn no_adversary_observes_nothing() {
    let p = rgg10_instance(1.0);
    let trace = run(&p, &InitSpec::new(1000.0, 1.0, 1), 10).unwrap();
    let obs = collect(&trace, &AdversaryConfig::new([], false)).unwrap();
    assert!(obs.is_empty());
}

#[test]
fn full_coalition_is_rejected() {
    let p = rgg10_instance(1.0);
    let trace = run(&p, &InitSpec::new(1000.0, 1.0, 1), 5).unwrap();
    assert_eq!(
        collect(&trace, &AdversaryConfig::new(0..10, true)),
        Err(Error::InvalidCoalition)
    );
}

#[test]
fn observation_count_matches_closed_form() {
    let p = rgg10_instance(1.0);
    let t_max = 30;
    let trace = run(&p, &InitSpec::new(1000.0, 1.0, 1), t_max).unwrap();
    let g = p.graph().base();
    let n = 10;
    let edges = g.edge_count();
    let big_t = t_max + 1;
    for corrupt in [vec![], vec![3], vec![0, 5, 9], (1..10).collect::<Vec<_>>()] {
        let set: BTreeSet<usize> = corrupt.iter().copied().collect();
        let m_c = p
            .public()
            .directed()
            .as_slice()
            .iter()
            .filter(|e| set.contains(&e.from) || set.contains(&e.to))
            .count();
        let vc = set.len();
        let expected = n * big_t + 2 * edges + vc + big_t * (2 * vc + m_c) - m_c;
        let obs = collect(&trace, &AdversaryConfig::new(corrupt.clone(), true)).unwrap();
        assert_eq!(obs.len(), expected, "corrupt {corrupt:?}");
    }
}

#[test]
fn three_node_path_recovers_leakage() {
    let s = vec![0.4, -0.3, 1.1];
    let p = assemble(augment(&Graph::path(3)), s, 1.0, 0.5).unwrap();
    let trace = run(&p, &InitSpec::new(1000.0, 1.0, 5), 50).unwrap();
    // node 0 holds the median value
    let obs = collect(&trace, &AdversaryConfig::all_but(3, 0)).unwrap();
    assert!(check_condition(&trace).holds_all_t[0]);
    let result = reconstruct(&obs, p.public()).unwrap();
    let recovered = result.leakage(0).unwrap();
    assert!((recovered - true_leakage(&trace, 0)).abs() <= 1e-9);
    let report = audit(&result, &trace);
    assert_eq!(report.regular_error, 0.0);
    assert_eq!(report.corrupt_dummy_error, 0.0);
    assert!(report.increment_error <= 1e-9);
}

#[test]
fn reduced_knowledge_regenerates_every_broadcast() {
    let p = rgg10_instance(5.0);
    let trace = run(&p, &InitSpec::new(1000.0, 1.0, 1), 2000).unwrap();
    let report = check_condition(&trace);
    for i in (0..10).filter(|&i| report.holds_all_t[i]) {
        let obs = collect(&trace, &AdversaryConfig::all_but(10, i)).unwrap();
        let result = reconstruct(&obs, p.public()).unwrap();
        assert!(audit(&result, &trace).max_leakage_error() <= 1e-9);
        let regen = regenerate_broadcasts(p.public(), &result.reduced()).unwrap();
        for (t, row) in regen.iter().enumerate() {
            for (a, b) in row.iter().zip(trace.x(t + 1)) {
                assert!((a - b).abs() <= 1e-9, "node {i}, t {t}");
            }
        }
    }
}

#[test]
fn max_node_is_flagged_at_first_exchange() {
    for c in [1.0, 2.0, 5.0] {
        let p = rgg10_instance(c);
        let trace = run(&p, &InitSpec::new(1000.0, 1.0, 1), 2000).unwrap();
        let report = check_condition(&trace);
        let max = p.argmax()[0];
        let obs = collect(&trace, &AdversaryConfig::all_but(10, max)).unwrap();
        let first = report.first_violation(max).unwrap();
        assert_eq!(
            reconstruct(&obs, p.public()),
            Err(Error::ConditionViolated {
                node: max,
                t: first
            })
        );
    }
}

#[test]
fn encrypted_init_leaves_system_underdetermined() {
    let p = rgg10_instance(1.0);
    let trace = run(&p, &InitSpec::new(1000.0, 1.0, 1), 20).unwrap();
    let mut cfg = AdversaryConfig::new([0, 1], true);
    cfg.encrypted_init = true;
    let obs = collect(&trace, &cfg).unwrap();
    assert!(matches!(
        reconstruct_lenient(&obs, p.public()),
        Err(Error::Underdetermined(_))
    ));
}

#[test]
fn attack_mse_matches_closed_form() {
    let (c, sigma_s, mu_z) = (1.0, 1.0, 1000.0);
    for sigma_z in [0.3, 1.0, 3.0] {
        let mut rng = seeded_rng(21);
        let draws = 100_000;
        let mut se = 0.0;
        let mut expected = 0.0;
        for _ in 0..draws {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            let s = sigma_s * a;
            let l = mu_z + sigma_z * b + 0.5 * c * s;
            let est = attack_mmse(l, (0.0, sigma_s), (mu_z, sigma_z), c);
            se += (est.estimate - s).powi(2);
            expected = est.expected_mse;
        }
        let empirical = se / draws as f64;
        assert!(
            (empirical / expected - 1.0).abs() <= 0.02,
            "{sigma_z}: {empirical} vs {expected}"
        );
    }
}

#[test]
fn attack_mse_grows_with_noise() {
    let mses: Vec<f64> = [0.0, 0.01, 0.1, 1.0, 10.0, 1000.0]
        .iter()
        .map(|&sz| attack_mmse(0.0, (0.0, 1.0), (0.0, sz), 1.0).expected_mse)
        .collect();
    assert!(mses.windows(2).all(|w| w[1] > w[0]), "{mses:?}");
    assert!(mses[5] >= 0.98);
}
