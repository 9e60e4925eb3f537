//! Random model generators and brute-force oracles shared by the
//! integration tests. Nothing here calls the inference engine.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rtb_core::inference::Factor;
use rtb_core::model::{CausalNetwork, Exogenous, Mechanism};
use rtb_core::Evidence;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_distribution(rng: &mut StdRng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut out: Vec<f64> = raw.iter().map(|x| x / total).collect();
    // keep rows summing to one within rounding
    let head: f64 = out[..n - 1].iter().sum();
    out[n - 1] = 1.0 - head;
    out
}

fn node_name(i: usize) -> String {
    format!("V{i}")
}

/// Random DAG over `n` nodes with cardinalities in `cards`, edges only from
/// lower to higher index, at most `max_parents` parents per node.
pub fn random_network(rng: &mut StdRng, n: usize, cards: &[usize], edge_p: f64, max_parents: usize) -> CausalNetwork {
    let card_of: Vec<usize> = (0..n).map(|_| cards[rng.gen_range(0..cards.len())]).collect();
    let mut builder = CausalNetwork::builder(format!("random-{n}"));
    for i in 0..n {
        builder = builder.variable(node_name(i), (0..card_of[i]).map(|s| format!("s{s}")));
    }
    for i in 0..n {
        let mut parents: Vec<usize> = (0..i).filter(|_| rng.gen_bool(edge_p)).collect();
        while parents.len() > max_parents {
            parents.remove(rng.gen_range(0..parents.len()));
        }
        let rows: usize = parents.iter().map(|&p| card_of[p]).product();
        let table = (0..rows).map(|_| random_distribution(rng, card_of[i])).collect();
        builder = builder.cpt(node_name(i), parents.iter().map(|&p| node_name(p)), table);
    }
    builder.build().expect("random network is valid")
}

pub fn random_binary_network(rng: &mut StdRng, n: usize) -> CausalNetwork {
    random_network(rng, n, &[2], 0.35, 3)
}

/// Random evidence over up to `max` variables other than `exclude`, drawn
/// from a joint sample so that it is usually (not always) possible.
pub fn random_evidence(rng: &mut StdRng, net: &CausalNetwork, exclude: &str, max: usize) -> Evidence {
    let mut ev = Evidence::new();
    let k = rng.gen_range(0..=max);
    let candidates: Vec<&str> = net
        .variables()
        .iter()
        .map(|v| v.name.as_str())
        .filter(|v| *v != exclude)
        .collect();
    for _ in 0..k {
        if candidates.is_empty() {
            break;
        }
        let v = candidates[rng.gen_range(0..candidates.len())];
        let var = net.variable(v).unwrap();
        let s = &var.states[rng.gen_range(0..var.cardinality())];
        ev.insert(v, s.clone());
    }
    ev
}

fn mixed_radix(states: &[usize], cards: &[usize]) -> usize {
    states.iter().zip(cards).fold(0, |acc, (&s, &c)| acc * c + s)
}

/// Naive joint: nested enumeration of every complete assignment, each
/// probability recomputed from the raw CPT rows.
pub fn naive_joint(net: &CausalNetwork) -> Vec<f64> {
    let vars = net.variables();
    let cards: Vec<usize> = vars.iter().map(|v| v.cardinality()).collect();
    let total: usize = cards.iter().product();
    let mut out = Vec::with_capacity(total);
    for cell in 0..total {
        let mut states = vec![0; vars.len()];
        let mut rest = cell;
        for i in (0..vars.len()).rev() {
            states[i] = rest % cards[i];
            rest /= cards[i];
        }
        let mut p = 1.0;
        for (i, v) in vars.iter().enumerate() {
            let cpt = net.cpt(&v.name).unwrap();
            let pidx: Vec<usize> = cpt.parents.iter().map(|p| net.index_of(p).unwrap()).collect();
            let pstates: Vec<usize> = pidx.iter().map(|&j| states[j]).collect();
            let pcards: Vec<usize> = pidx.iter().map(|&j| cards[j]).collect();
            p *= cpt.table[mixed_radix(&pstates, &pcards)][states[i]];
        }
        out.push(p);
    }
    out
}

/// `P(target | evidence)` read off a joint factor whose scope is the
/// network's declaration order. `None` when the evidence has zero mass.
pub fn oracle_marginal(net: &CausalNetwork, joint: &Factor, target: &str, evidence: &Evidence) -> Option<Vec<f64>> {
    let vars = net.variables();
    let cards: Vec<usize> = vars.iter().map(|v| v.cardinality()).collect();
    let t = net.index_of(target).unwrap();
    let fixed: Vec<(usize, usize)> = evidence
        .iter()
        .map(|(v, s)| {
            let i = net.index_of(v).unwrap();
            (i, vars[i].state_index(s).unwrap())
        })
        .collect();
    let mut acc = vec![0.0; cards[t]];
    for (cell, p) in joint.values().iter().enumerate() {
        let mut states = vec![0; vars.len()];
        let mut rest = cell;
        for i in (0..vars.len()).rev() {
            states[i] = rest % cards[i];
            rest /= cards[i];
        }
        if fixed.iter().all(|&(i, s)| states[i] == s) {
            acc[states[t]] += p;
        }
    }
    let total: f64 = acc.iter().sum();
    (total > 0.0).then(|| acc.iter().map(|x| x / total).collect())
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// A structural causal model kept alongside its raw equations so that the
/// oracle can evaluate worlds directly.
pub struct RandomScm {
    pub net: CausalNetwork,
    pub cards: Vec<usize>,
    pub parents: Vec<Vec<usize>>,
    /// Root priors (None for non-roots).
    pub root_prior: Vec<Option<Vec<f64>>>,
    /// (noise prior, map) for non-roots.
    pub equations: Vec<Option<(Vec<f64>, Vec<usize>)>>,
}

/// Random SCM over 2-4 nodes; every non-root carries a mechanism with its
/// own 2-3 state exogenous variable.
pub fn random_scm(rng: &mut StdRng) -> RandomScm {
    let n = rng.gen_range(2..=4);
    let cards: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=3)).collect();
    let mut parents = Vec::new();
    for i in 0..n {
        let mut ps: Vec<usize> = (0..i).filter(|_| rng.gen_bool(0.6)).collect();
        if i > 0 && ps.is_empty() && rng.gen_bool(0.7) {
            ps.push(rng.gen_range(0..i));
        }
        parents.push(ps);
    }

    let mut builder = CausalNetwork::builder("scm");
    for i in 0..n {
        builder = builder.variable(node_name(i), (0..cards[i]).map(|s| format!("s{s}")));
    }
    let mut root_prior = Vec::new();
    let mut equations = Vec::new();
    for i in 0..n {
        if parents[i].is_empty() {
            let prior = random_distribution(rng, cards[i]);
            builder = builder.cpt(node_name(i), Vec::<String>::new(), vec![prior.clone()]);
            root_prior.push(Some(prior));
            equations.push(None);
            continue;
        }
        let noise = rng.gen_range(2..=3);
        let prior = random_distribution(rng, noise);
        let rows: usize = parents[i].iter().map(|&p| cards[p]).product();
        let map: Vec<usize> = (0..rows * noise).map(|_| rng.gen_range(0..cards[i])).collect();

        // induced table computed here, independently of the library
        let mut table = vec![vec![0.0; cards[i]]; rows];
        for r in 0..rows {
            for u in 0..noise {
                table[r][map[r * noise + u]] += prior[u];
            }
        }
        let mech = Mechanism {
            parents: parents[i].iter().map(|&p| node_name(p)).collect(),
            exogenous: Exogenous {
                name: format!("U{i}"),
                states: (0..noise).map(|u| format!("u{u}")).collect(),
                prior: prior.clone(),
            },
            map: map.clone(),
        };
        builder = builder
            .cpt(node_name(i), mech.parents.clone(), table)
            .mechanism(node_name(i), mech);
        root_prior.push(None);
        equations.push(Some((prior, map)));
    }
    RandomScm {
        net: builder.build().expect("random scm is valid"),
        cards,
        parents,
        root_prior,
        equations,
    }
}

impl RandomScm {
    pub fn name(&self, i: usize) -> String {
        node_name(i)
    }

    /// Evaluates one world given root values / noise values and forced
    /// assignments.
    fn world(&self, background: &[usize], forced: &BTreeMap<usize, usize>) -> Vec<usize> {
        let n = self.cards.len();
        let mut values = vec![0; n];
        for i in 0..n {
            if let Some(&s) = forced.get(&i) {
                values[i] = s;
                continue;
            }
            match &self.equations[i] {
                None => values[i] = background[i],
                Some((prior, map)) => {
                    let noise = prior.len();
                    let pstates: Vec<usize> = self.parents[i].iter().map(|&p| values[p]).collect();
                    let pcards: Vec<usize> = self.parents[i].iter().map(|&p| self.cards[p]).collect();
                    values[i] = map[mixed_radix(&pstates, &pcards) * noise + background[i]];
                }
            }
        }
        values
    }

    /// Abduction-action-prediction by enumerating every background
    /// configuration (root values for roots, noise values for the rest).
    pub fn counterfactual_oracle(
        &self,
        target: usize,
        forced: &BTreeMap<usize, usize>,
        observed: &BTreeMap<usize, usize>,
    ) -> Option<Vec<f64>> {
        let n = self.cards.len();
        let sizes: Vec<usize> = (0..n)
            .map(|i| match (&self.root_prior[i], &self.equations[i]) {
                (Some(p), _) => p.len(),
                (None, Some((p, _))) => p.len(),
                _ => unreachable!(),
            })
            .collect();
        let total: usize = sizes.iter().product();
        let mut acc = vec![0.0; self.cards[target]];
        let none = BTreeMap::new();
        for cell in 0..total {
            let mut bg = vec![0; n];
            let mut rest = cell;
            for i in (0..n).rev() {
                bg[i] = rest % sizes[i];
                rest /= sizes[i];
            }
            let weight: f64 = (0..n)
                .map(|i| match (&self.root_prior[i], &self.equations[i]) {
                    (Some(p), _) => p[bg[i]],
                    (None, Some((p, _))) => p[bg[i]],
                    _ => unreachable!(),
                })
                .product();
            let factual = self.world(&bg, &none);
            if observed.iter().any(|(&i, &s)| factual[i] != s) {
                continue;
            }
            let hypothetical = self.world(&bg, forced);
            acc[hypothetical[target]] += weight;
        }
        let z: f64 = acc.iter().sum();
        (z > 0.0).then(|| acc.iter().map(|x| x / z).collect())
    }
}
