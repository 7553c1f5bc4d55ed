//! Tree generators and a reference checker shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use num_complex::Complex64;
use qudit_fold::circuit::Circuit;
use qudit_fold::sim::{basis_state, run};
use qudit_fold::topology::{build_rooted_tree, find_optimal_root, Edge, NodeId, RootedTree};
use rand::Rng;

pub type EdgeSet = BTreeSet<Edge>;

pub fn line(n: u32) -> EdgeSet {
    (1..n).map(|i| Edge::of(i, i + 1)).collect()
}

pub fn star(n: u32) -> EdgeSet {
    (2..=n).map(|i| Edge::of(1, i)).collect()
}

/// Heap-numbered complete binary tree (last level possibly partial).
pub fn binary(n: u32) -> EdgeSet {
    (2..=n).map(|i| Edge::of(i / 2, i)).collect()
}

/// Uniform labelled tree on `1..=n` from a random Prüfer sequence.
pub fn random_tree(n: u32, rng: &mut impl Rng) -> EdgeSet {
    if n == 2 {
        return line(2);
    }
    let seq: Vec<u32> = (0..n - 2).map(|_| rng.gen_range(1..=n)).collect();
    let mut degree = vec![1u32; n as usize + 1];
    for &s in &seq {
        degree[s as usize] += 1;
    }
    let mut edges = EdgeSet::new();
    for &s in &seq {
        let leaf = (1..=n).find(|&v| degree[v as usize] == 1).unwrap();
        edges.insert(Edge::of(leaf, s));
        degree[leaf as usize] -= 1;
        degree[s as usize] -= 1;
    }
    let rest: Vec<u32> = (1..=n).filter(|&v| degree[v as usize] == 1).collect();
    edges.insert(Edge::of(rest[0], rest[1]));
    edges
}

/// Line, star, binary and `random` random trees for every `n` in `sizes`, rooted at a center.
pub fn tree_set(sizes: impl IntoIterator<Item = u32>, random: usize, rng: &mut impl Rng) -> Vec<(String, RootedTree)> {
    let mut out = Vec::new();
    for n in sizes {
        let mut shapes =
            vec![(format!("line({n})"), line(n)), (format!("star({n})"), star(n)), (format!("binary({n})"), binary(n))];
        for k in 0..random {
            shapes.push((format!("random({n})#{k}"), random_tree(n, rng)));
        }
        for (name, edges) in shapes {
            let root = find_optimal_root(&edges).unwrap()[0];
            out.push((name, build_rooted_tree(&edges, root).unwrap()));
        }
    }
    out
}

pub fn rooted(edges: &EdgeSet, root: u32) -> RootedTree {
    build_rooted_tree(edges, NodeId(root)).unwrap()
}

/// All qubit-subspace basis inputs of an `n`-qudit register, most significant qudit first.
pub fn qubit_inputs(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..1usize << n).map(move |m| (0..n).map(|q| (m >> (n - 1 - q)) & 1).collect())
}

/// Max amplitude error and auxiliary population over all qubit inputs,
/// against `expected(digits) -> [(output digits, amplitude)]`.
pub fn compare(circuit: &Circuit, expected: impl Fn(&[usize]) -> Vec<(Vec<usize>, Complex64)>) -> (f64, f64) {
    let dims = circuit.register().dims().to_vec();
    let total: usize = dims.iter().product();
    let aux: Vec<bool> = (0..total)
        .map(|idx| {
            let mut rest = idx;
            dims.iter().rev().any(|&r| {
                let digit = rest % r;
                rest /= r;
                digit >= 2
            })
        })
        .collect();
    let mut err: f64 = 0.0;
    let mut leak: f64 = 0.0;
    let mut want = vec![Complex64::new(0.0, 0.0); total];
    for input in qubit_inputs(dims.len()) {
        let out = run(circuit, basis_state(&dims, &input).unwrap()).unwrap();
        let expected = expected(&input);
        for (digits, amp) in &expected {
            let idx = digits.iter().zip(&dims).fold(0, |acc, (&d, &r)| acc * r + d);
            want[idx] += amp;
        }
        let mut aux_population = 0.0;
        for (idx, (a, b)) in out.amplitudes().iter().zip(&want).enumerate() {
            err = err.max((a - b).norm());
            if aux[idx] {
                aux_population += a.norm_sqr();
            }
        }
        leak = leak.max(aux_population);
        for (digits, _) in &expected {
            let idx = digits.iter().zip(&dims).fold(0, |acc, (&d, &r)| acc * r + d);
            want[idx] = Complex64::new(0.0, 0.0);
        }
    }
    (err, leak)
}

/// Phase `phase` on the all-ones input, identity otherwise.
pub fn phase_on_ones(phase: Complex64) -> impl Fn(&[usize]) -> Vec<(Vec<usize>, Complex64)> {
    move |d| {
        let amp = if d.iter().all(|&x| x == 1) { phase } else { Complex64::new(1.0, 0.0) };
        vec![(d.to_vec(), amp)]
    }
}
