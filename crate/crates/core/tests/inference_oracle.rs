#![allow(clippy::needless_range_loop)]

mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rtb_core::inference::{
    cpt_factor, eliminate, enumerate_joint, query_association, query_association_ordered, query_counterfactual,
    query_intervention, Assignment, Factor,
};
use rtb_core::model::{mutilate, twin_network, validate_network, CausalNetwork};
use rtb_core::{Error, Evidence};

fn probs(post: &rtb_core::PosteriorDistribution) -> Vec<f64> {
    post.probabilities.values().copied().collect()
}

#[test]
fn joint_matches_naive_nested_loop() {
    for seed in 0..20 {
        let mut r = rng(seed);
        let net = random_network(&mut r, 5, &[2, 3], 0.5, 3);
        let joint = enumerate_joint(&net).unwrap();
        let naive = naive_joint(&net);
        assert!(max_abs_diff(joint.values(), &naive) < 1e-15, "seed {seed}");
        assert!((joint.sum() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn association_matches_joint_oracle() {
    let mut checked = 0;
    for seed in 0..120 {
        let mut r = rng(1000 + seed);
        let n = r.gen_range(2..=12);
        let net = random_binary_network(&mut r, n);
        let joint = enumerate_joint(&net).unwrap();
        for v in net.variables() {
            let ev = random_evidence(&mut r, &net, &v.name, 3);
            let expected = oracle_marginal(&net, &joint, &v.name, &ev);
            match (query_association(&net, &v.name, &ev), expected) {
                (Ok(post), Some(exp)) => {
                    let got = probs(&post);
                    assert!(max_abs_diff(&got, &exp) < 1e-9, "seed {seed} target {}", v.name);
                    assert!((got.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                    checked += 1;
                }
                (Err(Error::ZeroProbabilityEvidence), None) => {}
                (got, exp) => panic!("seed {seed}: engine {got:?} vs oracle {exp:?}"),
            }
        }
    }
    assert!(checked > 500);
}

#[test]
fn elimination_order_does_not_matter() {
    for seed in 0..40 {
        let mut r = rng(2000 + seed);
        let net = random_network(&mut r, 7, &[2, 3], 0.4, 3);
        let target = net.variables()[r.gen_range(0..7)].name.clone();
        let ev = random_evidence(&mut r, &net, &target, 2);
        let Ok(reference) = query_association(&net, &target, &ev) else {
            continue;
        };
        let mut order: Vec<String> = net
            .variables()
            .iter()
            .map(|v| v.name.clone())
            .filter(|v| *v != target && !ev.contains_key(v))
            .collect();
        for _ in 0..5 {
            order.shuffle(&mut r);
            let post = query_association_ordered(&net, &target, &ev, &order).unwrap();
            assert!(max_abs_diff(&probs(&post), &probs(&reference)) < 1e-9, "seed {seed}");
        }
    }
}

#[test]
fn ordered_query_rejects_incomplete_order() {
    let mut r = rng(7);
    let net = random_binary_network(&mut r, 4);
    let err = query_association_ordered(&net, "V0", &Evidence::new(), &["V1".to_string()]).unwrap_err();
    assert_eq!(err.name(), "scope-mismatch");
}

/// Product of everything, then sum out one variable at a time.
fn naive_eliminate(factors: &[Factor], order: &[String]) -> Factor {
    let mut all = factors
        .iter()
        .fold(Factor::scalar(1.0), |acc, f| acc.product(f).unwrap());
    for v in order {
        all = all.marginalize(v).unwrap();
    }
    all
}

fn aligned_values(f: &Factor, scope: &[String]) -> Vec<f64> {
    // reorder by enumerating the requested scope
    let cards: Vec<usize> = scope.iter().map(|v| f.cardinality_of(v).unwrap()).collect();
    let total: usize = cards.iter().product();
    (0..total)
        .map(|cell| {
            let mut digits = vec![0; scope.len()];
            let mut rest = cell;
            for i in (0..scope.len()).rev() {
                digits[i] = rest % cards[i];
                rest /= cards[i];
            }
            let in_f: Vec<usize> = f
                .scope()
                .iter()
                .map(|v| digits[scope.iter().position(|s| s == v).unwrap()])
                .collect();
            f.value_at(&in_f)
        })
        .collect()
}

#[test]
fn eliminate_matches_naive_product_then_sum() {
    for seed in 0..30 {
        let mut r = rng(3000 + seed);
        let names: Vec<String> = (0..6).map(|i| format!("X{i}")).collect();
        let cards: Vec<usize> = (0..6).map(|_| r.gen_range(2..=3)).collect();
        let factors: Vec<Factor> = (0..6)
            .map(|_| {
                let k = r.gen_range(1..=3);
                let mut idx: Vec<usize> = (0..6).collect();
                idx.shuffle(&mut r);
                idx.truncate(k);
                let scope: Vec<String> = idx.iter().map(|&i| names[i].clone()).collect();
                let c: Vec<usize> = idx.iter().map(|&i| cards[i]).collect();
                let size: usize = c.iter().product();
                Factor::new(scope, c, (0..size).map(|_| r.gen_range(0.0..2.0)).collect()).unwrap()
            })
            .collect();
        let present: BTreeSet<String> = factors.iter().flat_map(|f| f.scope().to_vec()).collect();
        let mut order: Vec<String> = present.iter().cloned().collect();
        order.shuffle(&mut r);
        let keep = order.split_off(r.gen_range(0..=order.len()));

        let fast = eliminate(factors.clone(), &order).unwrap();
        let slow = naive_eliminate(&factors, &order);
        let mut scope: Vec<String> = keep.clone();
        scope.sort();
        assert_eq!(
            fast.scope().iter().collect::<BTreeSet<_>>(),
            scope.iter().collect::<BTreeSet<_>>()
        );
        let a = aligned_values(&fast, &scope);
        let b = aligned_values(&slow, &scope);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-9 * y.abs().max(1.0), "seed {seed}");
        }
    }
}

#[test]
fn do_on_root_equals_conditioning() {
    for seed in 0..60 {
        let mut r = rng(4000 + seed);
        let n = r.gen_range(2..=8);
        let net = random_network(&mut r, n, &[2, 3], 0.4, 3);
        for root in net.variables().iter().filter(|v| net.parents(&v.name).is_empty()) {
            let state = &root.states[r.gen_range(0..root.cardinality())];
            let d: Assignment = [(root.name.clone(), state.clone())].into();
            let ev = Evidence::new().with(root.name.clone(), state.clone());
            for t in net.variables().iter().filter(|v| v.name != root.name) {
                let a = query_intervention(&net, &t.name, &d, &Evidence::new()).unwrap();
                let b = query_association(&net, &t.name, &ev).unwrap();
                assert!(max_abs_diff(&probs(&a), &probs(&b)) < 1e-9, "seed {seed}");
            }
        }
    }
}

#[test]
fn intervention_leaves_non_descendants_alone() {
    for seed in 0..30 {
        let mut r = rng(4500 + seed);
        let net = random_network(&mut r, 6, &[2, 3], 0.4, 3);
        let x = &net.variables()[r.gen_range(0..6)];
        let d: Assignment = [(x.name.clone(), x.states[0].clone())].into();
        let downstream = net.descendants([x.name.as_str()]);
        for t in net
            .variables()
            .iter()
            .filter(|v| v.name != x.name && !downstream.contains(&v.name))
        {
            let a = query_intervention(&net, &t.name, &d, &Evidence::new()).unwrap();
            let b = query_association(&net, &t.name, &Evidence::new()).unwrap();
            assert!(max_abs_diff(&probs(&a), &probs(&b)) < 1e-9);
        }
    }
}

/// Z -> X -> Y with Z -> Y and random tables.
fn confounded(r: &mut rand::rngs::StdRng) -> CausalNetwork {
    let cz = r.gen_range(2..=3);
    let cx = r.gen_range(2..=3);
    let cy = r.gen_range(2..=3);
    let states = |c: usize| (0..c).map(|s| format!("s{s}")).collect::<Vec<_>>();
    CausalNetwork::builder("confounded")
        .variable("Z", states(cz))
        .variable("X", states(cx))
        .variable("Y", states(cy))
        .cpt("Z", Vec::<String>::new(), vec![random_distribution(r, cz)])
        .cpt("X", ["Z"], (0..cz).map(|_| random_distribution(r, cx)).collect())
        .cpt(
            "Y",
            ["X", "Z"],
            (0..cx * cz).map(|_| random_distribution(r, cy)).collect(),
        )
        .build()
        .unwrap()
}

#[test]
fn intervention_matches_backdoor_adjustment() {
    for seed in 0..100 {
        let mut r = rng(5000 + seed);
        let net = confounded(&mut r);
        let cx = net.variable("X").unwrap().cardinality();
        let cz = net.variable("Z").unwrap().cardinality();
        let x = r.gen_range(0..cx);
        let pz = &net.cpt("Z").unwrap().table[0];
        let py = &net.cpt("Y").unwrap().table;
        // sum_z P(y | x, z) P(z)
        let cy = py[0].len();
        let expected: Vec<f64> = (0..cy)
            .map(|y| (0..cz).map(|z| py[x * cz + z][y] * pz[z]).sum())
            .collect();
        let d: Assignment = [("X".to_string(), format!("s{x}"))].into();
        let got = query_intervention(&net, "Y", &d, &Evidence::new()).unwrap();
        assert!(max_abs_diff(&probs(&got), &expected) < 1e-9, "seed {seed}");
    }
}

#[test]
fn counterfactuals_match_exogenous_enumeration() {
    let mut checked = 0;
    for seed in 0..80 {
        let mut r = rng(6000 + seed);
        let scm = random_scm(&mut r);
        let n = scm.cards.len();
        let x = r.gen_range(0..n);
        let xs = r.gen_range(0..scm.cards[x]);
        let target = r.gen_range(0..n);
        let mut observed = BTreeMap::new();
        for i in 0..n {
            if r.gen_bool(0.5) {
                observed.insert(i, r.gen_range(0..scm.cards[i]));
            }
        }
        let forced = BTreeMap::from([(x, xs)]);
        let expected = scm.counterfactual_oracle(target, &forced, &observed);

        let d: Assignment = [(scm.name(x), format!("s{xs}"))].into();
        let ev: Evidence = observed.iter().map(|(&i, &s)| (scm.name(i), format!("s{s}"))).collect();
        match (query_counterfactual(&scm.net, &scm.name(target), &d, &ev), expected) {
            (Ok(post), Some(exp)) => {
                assert!(
                    max_abs_diff(&probs(&post), &exp) < 1e-9,
                    "seed {seed}: {post:?} vs {exp:?}"
                );
                checked += 1;
            }
            (Err(Error::ZeroProbabilityEvidence), None) => {}
            (got, exp) => panic!("seed {seed}: engine {got:?} vs oracle {exp:?}"),
        }
    }
    assert!(checked >= 50, "only {checked} comparable instances");
}

#[test]
fn counterfactual_consistency_is_exact() {
    for seed in 0..60 {
        let mut r = rng(7000 + seed);
        let scm = random_scm(&mut r);
        let n = scm.cards.len();
        // draw a factual world from the oracle's own equations
        let joint = enumerate_joint(&scm.net).unwrap();
        let cell = {
            let u: f64 = r.gen_range(0.0..1.0);
            let mut acc = 0.0;
            joint
                .values()
                .iter()
                .position(|p| {
                    acc += p;
                    acc >= u
                })
                .unwrap_or(joint.values().len() - 1)
        };
        let mut states = vec![0; n];
        let mut rest = cell;
        for i in (0..n).rev() {
            states[i] = rest % scm.cards[i];
            rest /= scm.cards[i];
        }
        if joint.values()[cell] == 0.0 {
            continue;
        }
        let x = r.gen_range(0..n);
        let d: Assignment = [(scm.name(x), format!("s{}", states[x]))].into();
        let ev: Evidence = (0..n).map(|i| (scm.name(i), format!("s{}", states[i]))).collect();
        for t in 0..n {
            let post = query_counterfactual(&scm.net, &scm.name(t), &d, &ev).unwrap();
            let expected: Vec<f64> = (0..scm.cards[t])
                .map(|s| if s == states[t] { 1.0 } else { 0.0 })
                .collect();
            assert_eq!(probs(&post), expected, "seed {seed} target {t}");
        }
    }
}

#[test]
fn deterministic_mechanism_counterfactual() {
    use rtb_core::model::{Exogenous, Mechanism};
    let net = CausalNetwork::builder("copy")
        .variable("X", ["x0", "x1"])
        .variable("Y", ["y0", "y1"])
        .cpt("X", Vec::<String>::new(), vec![vec![0.5, 0.5]])
        .structural(
            "Y",
            Mechanism {
                parents: vec!["X".into()],
                exogenous: Exogenous {
                    name: "U_Y".into(),
                    states: vec!["a".into(), "b".into()],
                    prior: vec![0.5, 0.5],
                },
                map: vec![0, 0, 1, 1],
            },
        )
        .build()
        .unwrap();
    let d: Assignment = [("X".to_string(), "x1".to_string())].into();
    let ev = Evidence::new().with("X", "x0").with("Y", "y0");
    let post = query_counterfactual(&net, "Y", &d, &ev).unwrap();
    assert_eq!(post.target, "Y*");
    assert_eq!(post.probability("y1"), Some(1.0));
}

#[test]
fn mutilation_invariants() {
    for seed in 0..40 {
        let mut r = rng(8000 + seed);
        let net = random_network(&mut r, 6, &[2, 3], 0.4, 3);
        let mut d = Assignment::new();
        for v in net.variables() {
            if r.gen_bool(0.3) {
                d.insert(v.name.clone(), v.states[r.gen_range(0..v.cardinality())].clone());
            }
        }
        let once = mutilate(&net, &d).unwrap();
        assert!(validate_network(&once).is_empty());
        assert_eq!(mutilate(&once, &d).unwrap(), once);
        for v in net.variables().iter().filter(|v| !d.contains_key(&v.name)) {
            assert_eq!(once.cpt(&v.name), net.cpt(&v.name));
        }
    }
}

#[test]
fn twin_networks_validate_and_keep_mechanism_agreement() {
    for seed in 0..40 {
        let mut r = rng(9000 + seed);
        let scm = random_scm(&mut r);
        assert!(validate_network(&scm.net).is_empty());
        let n = scm.cards.len();
        let x = r.gen_range(0..n);
        let d: Assignment = [(scm.name(x), "s0".to_string())].into();
        let twin = twin_network(&scm.net, &d).unwrap();
        assert!(validate_network(&twin).is_empty(), "seed {seed}");
        // the factual half of the twin still carries the original marginals
        for i in 0..n {
            let a = query_association(&twin, &scm.name(i), &Evidence::new()).unwrap();
            let b = query_association(&scm.net, &scm.name(i), &Evidence::new()).unwrap();
            assert!(max_abs_diff(&probs(&a), &probs(&b)) < 1e-12);
        }
    }
}

/// Twin of a three-node chain, compared against a hand-built expected graph
/// by brute-force isomorphism (node relabelling that preserves edges,
/// cardinalities and tables).
#[test]
fn twin_of_chain_is_isomorphic_to_expected_graph() {
    use rtb_core::model::{Exogenous, Mechanism};
    let mech = |parent: &str, u: &str| Mechanism {
        parents: vec![parent.into()],
        exogenous: Exogenous {
            name: u.into(),
            states: vec!["keep".into(), "flip".into()],
            prior: vec![0.8, 0.2],
        },
        map: vec![0, 1, 1, 0],
    };
    let chain = CausalNetwork::builder("chain")
        .variable("A", ["0", "1"])
        .variable("B", ["0", "1"])
        .variable("C", ["0", "1"])
        .cpt("A", Vec::<String>::new(), vec![vec![0.6, 0.4]])
        .structural("B", mech("A", "UB"))
        .structural("C", mech("B", "UC"))
        .build()
        .unwrap();
    let twin = twin_network(&chain, &[("A".to_string(), "1".to_string())].into()).unwrap();

    // expected: A, B, C, A*, B*, C*, UB, UC with A* parentless
    let expected_edges: BTreeSet<(&str, &str)> = [
        ("A", "B"),
        ("UB", "B"),
        ("B", "C"),
        ("UC", "C"),
        ("A*", "B*"),
        ("UB", "B*"),
        ("B*", "C*"),
        ("UC", "C*"),
    ]
    .into();
    let expected_nodes: Vec<&str> = vec!["A", "B", "C", "A*", "B*", "C*", "UB", "UC"];
    let got_nodes: Vec<&str> = twin.variables().iter().map(|v| v.name.as_str()).collect();
    assert_eq!(got_nodes.len(), expected_nodes.len());
    let got_edges: BTreeSet<(usize, usize)> = twin
        .edges()
        .iter()
        .map(|(p, c)| (twin.index_of(p).unwrap(), twin.index_of(c).unwrap()))
        .collect();
    let exp_edges: BTreeSet<(usize, usize)> = expected_edges
        .iter()
        .map(|(p, c)| {
            (
                expected_nodes.iter().position(|n| n == p).unwrap(),
                expected_nodes.iter().position(|n| n == c).unwrap(),
            )
        })
        .collect();

    // search for a bijection expected -> got preserving edges
    let n = expected_nodes.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut found = false;
    permute(&mut perm, 0, &mut |p| {
        let mapped: BTreeSet<(usize, usize)> = exp_edges.iter().map(|&(a, b)| (p[a], p[b])).collect();
        if mapped == got_edges {
            found = true;
        }
    });
    assert!(found, "twin graph {got_edges:?} not isomorphic to expected");

    // and the naming convention holds
    let factual = got_nodes.iter().filter(|n| ["A", "B", "C"].contains(n)).count();
    let cf = got_nodes.iter().filter(|n| n.ends_with('*')).count();
    assert_eq!((factual, cf), (3, 3));
    assert!(twin.parents("A*").is_empty());
}

fn permute(items: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

#[test]
fn cpt_factor_layout_matches_table() {
    let mut r = rng(11);
    let net = random_network(&mut r, 4, &[2, 3], 0.8, 3);
    for v in net.variables() {
        let f = cpt_factor(&net, &v.name).unwrap();
        assert_eq!(f.scope().last().unwrap(), &v.name);
        assert_eq!(f.values(), net.cpt(&v.name).unwrap().table.concat().as_slice());
    }
}
