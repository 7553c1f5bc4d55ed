mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use common::*;
use num_complex::Complex64;
use proptest::prelude::*;
use qudit_fold::circuit::{Circuit, Gate, LocalGate, QuditRegister};
use qudit_fold::sim::{basis_state, run, StateVector};
use qudit_fold::synth::{emit_folding, synth_cnx, synth_cnz, SynthesisPlan};
use qudit_fold::topology::{
    build_rooted_tree, dimension_violations, find_optimal_root, minimal_dimensions, Edge, NodeId, Purpose, RootedTree,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tree_from_seed(seed: u64, max_n: u32) -> (u32, BTreeSet<Edge>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=max_n);
    (n, random_tree(n, &mut rng))
}

fn centered(edges: &BTreeSet<Edge>) -> RootedTree {
    build_rooted_tree(edges, find_optimal_root(edges).unwrap()[0]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn minimal_dims_are_degree_plus_one(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let (_, edges) = tree_from_seed(seed, 40);
        let labels: Vec<NodeId> = centered(&edges).labels().to_vec();
        // every root choice, not just the center
        let t = build_rooted_tree(&edges, labels[pick.index(labels.len())]).unwrap();
        let phase = minimal_dimensions(&t, Purpose::ControlledPhase);
        let block = minimal_dimensions(&t, Purpose::MultiTargetBlock);
        for i in 0..t.len() {
            prop_assert_eq!(phase.dims[i], t.degree(i) + 1);
            let bump = usize::from(i == t.root());
            prop_assert_eq!(block.dims[i], t.degree(i) + 1 + bump);
        }
    }

    #[test]
    fn subtrees_of_feasible_assignments_stay_feasible(seed in any::<u64>(), cuts in 0usize..20) {
        let (_, mut edges) = tree_from_seed(seed, 30);
        let t = centered(&edges);
        let dims: BTreeMap<NodeId, usize> =
            t.labels().iter().zip(minimal_dimensions(&t, Purpose::ControlledPhase).dims).map(|(&n, d)| (n, d)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for _ in 0..cuts {
            if edges.len() < 2 {
                break;
            }
            let sub = centered(&edges);
            let leaves: Vec<usize> = (0..sub.len()).filter(|&i| sub.degree(i) == 1).collect();
            let leaf = sub.label(leaves[rng.gen_range(0..leaves.len())]);
            edges.retain(|e| e.low() != leaf && e.high() != leaf);
            let sub = centered(&edges);
            let sub_dims: Vec<usize> = sub.labels().iter().map(|n| dims[n]).collect();
            prop_assert!(dimension_violations(&sub, &sub_dims, Purpose::ControlledPhase).is_empty());
        }
    }

    #[test]
    fn addresses_are_injective_and_prefix_closed(seed in any::<u64>()) {
        let (_, edges) = tree_from_seed(seed, 64);
        let t = centered(&edges);
        let all: BTreeSet<String> = (0..t.len()).map(|i| t.address(i).to_string()).collect();
        prop_assert_eq!(all.len(), t.len());
        for i in 0..t.len() {
            match t.parent(i) {
                Some(p) => prop_assert_eq!(t.address(i).parent(), Some(t.address(p).clone())),
                None => prop_assert!(t.address(i).parent().is_none()),
            }
            for (k, &c) in t.children(i).iter().enumerate() {
                prop_assert_eq!(t.address(c), &t.address(i).child(k as u32 + 1));
            }
        }
    }

    #[test]
    fn cnz_cx_controls_each_non_central_node_twice(seed in any::<u64>()) {
        let (n, edges) = tree_from_seed(seed, 40);
        let t = centered(&edges);
        let c = synth_cnz(&SynthesisPlan::minimal(t.clone(), Purpose::ControlledPhase)).unwrap();
        prop_assert_eq!(c.two_qudit_count(), 2 * n as usize - 3);
        let mut controls = vec![0usize; t.len()];
        let mut cz = Vec::new();
        for g in c.gates() {
            match *g {
                Gate::Cx { control, .. } => controls[control] += 1,
                Gate::Cz { a, b } => cz.push((a, b)),
                _ => {}
            }
        }
        let last = *t.children(t.root()).last().unwrap();
        prop_assert_eq!(cz, vec![(t.root(), last)]);
        for (i, &count) in controls.iter().enumerate() {
            let want = if i == t.root() || i == last { 0 } else { 2 };
            prop_assert_eq!(count, want, "node {}", t.label(i));
        }
    }

    #[test]
    fn folding_selects_all_ones_subtrees(seed in any::<u64>(), mask in any::<u64>()) {
        let (_, edges) = tree_from_seed(seed, 12);
        let t = centered(&edges);
        let plan = SynthesisPlan::minimal(t.clone(), Purpose::ControlledPhase);
        let fold = emit_folding(&plan).unwrap();
        let digits: Vec<usize> = (0..t.len()).map(|q| ((mask >> q) & 1) as usize).collect();
        let out = run(&fold, basis_state(plan.dims(), &digits).unwrap()).unwrap();
        let idx = out.amplitudes().iter().position(|a| a.norm() > 0.5).unwrap();
        let result = qudit_fold::sim::decode(plan.dims(), idx);
        let non_root_ones = (0..t.len()).filter(|&i| i != t.root()).all(|i| digits[i] == 1);
        let children_ones = t.children(t.root()).iter().all(|&c| result[c] == 1);
        prop_assert_eq!(non_root_ones, children_ones);
        // the root is never touched by folding
        prop_assert_eq!(result[t.root()], digits[t.root()]);
    }

    #[test]
    fn cnx_count_does_not_depend_on_target(seed in any::<u64>()) {
        let (_, edges) = tree_from_seed(seed, 20);
        let t = centered(&edges);
        let plan = SynthesisPlan::minimal(t.clone(), Purpose::ControlledPhase);
        let counts: BTreeSet<usize> =
            t.labels().iter().map(|&l| synth_cnx(&plan, l).unwrap().two_qudit_count()).collect();
        prop_assert_eq!(counts.len(), 1);
    }
}

fn random_circuit(seed: u64, max_gates: usize, qubit_wire_only: bool) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=5);
    let mut dims: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=4)).collect();
    while dims.iter().product::<usize>() > 4096 {
        dims.pop();
    }
    let n = dims.len();
    let reg = QuditRegister::new(dims.clone()).unwrap();
    let mut gates = Vec::new();
    for _ in 0..rng.gen_range(0..=max_gates) {
        let a = rng.gen_range(0..n);
        let mut b = rng.gen_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        let g = match rng.gen_range(0..7) {
            0 => Gate::Xm { qudit: a, level: rng.gen_range(1..dims[a]) },
            1 => Gate::h(a),
            2 => Gate::phase(a, rng.gen_range(-PI..PI)),
            3 => Gate::Cz { a, b },
            4 => Gate::Cx { control: a, target: b },
            5 if qubit_wire_only && dims[a] > 2 && dims[b] > 2 => Gate::Cz { a, b },
            5 => Gate::CzTheta { a, b, theta: rng.gen_range(-PI..PI) },
            _ => Gate::Local { qudit: a, op: LocalGate::Unitary { label: "R".into(), matrix: LocalGate::H.matrix() } },
        };
        gates.push(g);
    }
    Circuit::new(reg, gates).unwrap()
}

/// Max entry difference between the two circuits' actions on every basis input.
fn action_distance(a: &Circuit, b: &Circuit) -> f64 {
    let dims = a.register().dims().to_vec();
    let total: usize = dims.iter().product();
    (0..total)
        .map(|j| {
            let x = run(a, StateVector::from_index(&dims, j)).unwrap();
            let y = run(b, StateVector::from_index(&dims, j)).unwrap();
            x.distance(&y)
        })
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn schedule_layers_are_valid(seed in any::<u64>()) {
        let c = random_circuit(seed, 40, false);
        let s = c.schedule();
        prop_assert!(s.depth <= c.len());
        let mut last_layer = vec![0usize; c.register().len()];
        let mut used: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for (g, &layer) in c.gates().iter().zip(&s.layers) {
            prop_assert!(layer >= 1 && layer <= s.depth);
            for q in g.support() {
                prop_assert!(layer > last_layer[q]);
                last_layer[q] = layer;
                prop_assert!(used.entry(layer).or_default().insert(q), "qudit {} twice in layer {}", q, layer);
            }
        }
    }

    #[test]
    fn compose_adds_counts(s1 in any::<u64>(), s2 in any::<u64>()) {
        let a = random_circuit(s1, 20, false);
        let mut b = random_circuit(s2, 20, false);
        if b.register() != a.register() {
            b = Circuit::new(a.register().clone(), Vec::new()).unwrap();
        }
        let ab = a.compose(&b).unwrap();
        prop_assert_eq!(ab.two_qudit_count(), a.two_qudit_count() + b.two_qudit_count());
        prop_assert_eq!(ab.len(), a.len() + b.len());
    }

    #[test]
    fn double_inverse_is_identity_on_gate_lists(seed in any::<u64>()) {
        let c = random_circuit(seed, 30, false);
        let back = c.inverse().inverse();
        prop_assert_eq!(back.gates(), c.gates());
    }

    #[test]
    fn lowering_preserves_the_full_space_action(seed in any::<u64>()) {
        let c = random_circuit(seed, 12, true);
        prop_assert!(action_distance(&c, &c.lower_cx()) <= 1e-12);
        prop_assert!(action_distance(&c, &c.lower_cz_theta()) <= 1e-12);
        prop_assert!(action_distance(&c, &c.lower_cz_theta().lower_cx()) <= 1e-12);
    }

    #[test]
    fn runs_preserve_norm_and_inner_products(seed in any::<u64>()) {
        let c = random_circuit(seed, 30, false);
        let dims = c.register().dims().to_vec();
        let total: usize = dims.iter().product();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut random_state = || {
            let v: Vec<Complex64> = (0..total).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            StateVector::from_amplitudes(&dims, v.into_iter().map(|a| a / norm).collect())
        };
        let (x, y) = (random_state(), random_state());
        let before = x.inner(&y);
        let (rx, ry) = (run(&c, x).unwrap(), run(&c, y).unwrap());
        prop_assert!((rx.norm() - 1.0).abs() <= 1e-10);
        prop_assert!((rx.inner(&ry) - before).norm() <= 1e-10);
    }
}
