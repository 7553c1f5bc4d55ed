//! Folding synthesis of multi-controlled gates on a rooted qudit tree.
//!
//! A multi-controlled gate is built in three steps:
//!
//! 1. **Folding.** Bottom-up, every non-root internal node `s` absorbs its
//!    children with one elementary fold per child: `X_{1+i}(s)`,
//!    `CX(si → s)`, `X(s)`. Afterwards `s` is on level 1 iff its whole
//!    subtree started on level 1, and on level 0 or an auxiliary level
//!    otherwise. Only `X_m`, `X` and `CX` are used, so the step permutes
//!    basis states.
//! 2. **Basic operation.** The root absorbs its children `11 … 1[n(1)-1]`
//!    the same way, using root levels `2 … n(1)`, the central two-qudit gate
//!    acts between the root and the last child `1n(1)`, and the root folds are
//!    undone. For a controlled block, all `n(1)` children fold into the root
//!    and the block is controlled by the root alone.
//! 3. **Unfolding**, the exact inverse of step 1.
//!
//! The `i`-th child of any node uses its parent's level `1+i`, so a non-root
//! node with `c` children needs `c+2` levels and the root `n(1)+1`
//! (`n(1)+2` for a block): one more than the node's tree degree.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::circuit::{
    cz_theta_decomposition, lower_gates_cx, mat2_adjoint, mat2_mul, mat2_unitarity_error, Circuit, CircuitError,
    DenseMatrix, Gate, LocalGate, Mat2, Metadata, QuditRegister, UNITARY_TOLERANCE,
};
use crate::topology::{
    build_rooted_tree, dimension_violations, find_optimal_root, minimal_dimensions, NodeId, Purpose, RootedTree,
    TopologyError, Violation,
};

/// Tolerance for the eigendecomposition reconstruction.
pub const SPECTRAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("{}", infeasible_message(.purpose, .violations, .root))]
    Infeasible { purpose: Purpose, violations: Vec<Violation>, root: NodeId },
    #[error("qudit {parent} needs level {level} for its child fold but has dimension {dim}")]
    MissingLevel { parent: usize, level: usize, dim: usize },
    #[error("synthesis needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("{got} dimensions given for a tree of {expected} nodes")]
    DimensionCount { expected: usize, got: usize },
    #[error("target node {0} is not in the tree")]
    UnknownTarget(NodeId),
    #[error("matrix is not unitary within {UNITARY_TOLERANCE:e} (deviation {0:e})")]
    NotUnitary(f64),
    #[error("eigendecomposition reconstructs the input only to {0:e}")]
    Reconstruction(f64),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

fn infeasible_message(purpose: &Purpose, violations: &[Violation], root: &NodeId) -> String {
    let parts: Vec<String> = violations
        .iter()
        .map(|v| {
            if *purpose == Purpose::MultiTargetBlock && v.node == *root {
                format!(
                    "root node {} has dimension {} but a multi-target block needs at least 2+n(1) = {}",
                    v.node, v.declared, v.required
                )
            } else {
                format!(
                    "node {} has dimension {} but needs d >= k+1 = {} for its {} tree links",
                    v.node,
                    v.declared,
                    v.required,
                    v.required - 1
                )
            }
        })
        .collect();
    format!("infeasible qudit dimensions: {}", parts.join("; "))
}

/// Rooted tree plus the register dimensions (tree node order) and lowering flags.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisPlan {
    tree: RootedTree,
    dims: Vec<usize>,
    pub lower_cx: bool,
    pub lower_cz_theta: bool,
}

impl SynthesisPlan {
    pub fn new(tree: RootedTree, dims: Vec<usize>) -> Result<Self, SynthError> {
        if dims.len() != tree.len() {
            return Err(SynthError::DimensionCount { expected: tree.len(), got: dims.len() });
        }
        Ok(SynthesisPlan { tree, dims, lower_cx: false, lower_cz_theta: false })
    }

    /// Plan with the smallest dimensions the purpose allows.
    pub fn minimal(tree: RootedTree, purpose: Purpose) -> Self {
        let dims = minimal_dimensions(&tree, purpose).dims;
        SynthesisPlan { tree, dims, lower_cx: false, lower_cz_theta: false }
    }

    pub fn with_lowering(mut self, lower_cx: bool, lower_cz_theta: bool) -> Self {
        self.lower_cx = lower_cx;
        self.lower_cz_theta = lower_cz_theta;
        self
    }

    pub fn tree(&self) -> &RootedTree {
        &self.tree
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn violations(&self, purpose: Purpose) -> Vec<Violation> {
        dimension_violations(&self.tree, &self.dims, purpose)
    }

    fn require(&self, purpose: Purpose) -> Result<(), SynthError> {
        if self.tree.len() < 2 {
            return Err(SynthError::TooFewNodes(self.tree.len()));
        }
        let violations = self.violations(purpose);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(SynthError::Infeasible { purpose, violations, root: self.tree.root_id() })
        }
    }

    fn target(&self, node: NodeId) -> Result<usize, SynthError> {
        self.tree.index_of(node).ok_or(SynthError::UnknownTarget(node))
    }

    fn register(&self) -> QuditRegister {
        QuditRegister::new(self.dims.clone()).expect("plan dimensions are at least 2")
    }

    fn finish(&self, gates: Vec<Gate>, name: &str) -> Result<Circuit, SynthError> {
        self.finish_on(self.register(), gates, name)
    }

    fn finish_on(&self, register: QuditRegister, gates: Vec<Gate>, name: &str) -> Result<Circuit, SynthError> {
        let mut c = Circuit::new(register, gates)?;
        if self.lower_cx {
            c = c.lower_cx();
        }
        let mut labels: Vec<u32> = self.tree.labels().iter().map(|n| n.0).collect();
        // block targets get fresh ids after the tree's
        let next = labels.iter().max().copied().unwrap_or(0);
        labels.extend((next + 1..).take(c.register().len() - labels.len()));
        c.metadata = Metadata { name: name.to_string(), tags: vec![format!("root={}", self.tree.root_id())], labels };
        Ok(c)
    }
}

/// `X_{1+i}(parent)`, `CX(child → parent)`, `X(parent)` for the `i`-th child (1-based).
///
/// Leaves `parent` on level 1 iff parent and child were both on level 1; a
/// parent on level 0 moves to level `1+i`, and a parent already on an
/// auxiliary level is left alone.
pub fn emit_elementary_fold(
    parent: usize,
    child: usize,
    child_index: usize,
    dims: &[usize],
) -> Result<[Gate; 3], SynthError> {
    let level = 1 + child_index;
    if dims[parent] <= level {
        return Err(SynthError::MissingLevel { parent, level, dim: dims[parent] });
    }
    Ok([Gate::Xm { qudit: parent, level }, Gate::Cx { control: child, target: parent }, Gate::x(parent)])
}

fn folding_gates(tree: &RootedTree, dims: &[usize]) -> Result<Vec<Gate>, SynthError> {
    let mut gates = Vec::new();
    for level in (1..tree.height()).rev() {
        for s in tree.nodes_at_level(level) {
            for (i, &child) in tree.children(s).iter().enumerate() {
                gates.extend(emit_elementary_fold(s, child, i + 1, dims)?);
            }
        }
    }
    Ok(gates)
}

/// Folds every subtree hanging below the root's children into those children.
pub fn emit_folding(plan: &SynthesisPlan) -> Result<Circuit, SynthError> {
    let tree = plan.tree();
    let violations: Vec<Violation> =
        plan.violations(Purpose::ControlledPhase).into_iter().filter(|v| v.node != tree.root_id()).collect();
    if !violations.is_empty() {
        return Err(SynthError::Infeasible { purpose: Purpose::ControlledPhase, violations, root: tree.root_id() });
    }
    Ok(Circuit::new(plan.register(), folding_gates(tree, plan.dims())?)?.with_name("folding"))
}

/// Opaque unitary on extra target qudits, controlled by the tree root.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlledBlock {
    pub target_dims: Vec<usize>,
    pub matrix: DenseMatrix,
    /// Declared two-qudit gate count of the controlled block.
    pub cost: usize,
}

impl ControlledBlock {
    /// Controlled-Z onto one extra qubit.
    pub fn single_cz() -> Self {
        let one = Complex64::new(1.0, 0.0);
        ControlledBlock { target_dims: vec![2], matrix: DenseMatrix::diagonal(&[one, -one]), cost: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Central {
    Cz,
    CzTheta(f64),
    Block(ControlledBlock),
}

/// The qudit of the central pair that stays in {0,1} throughout the circuit,
/// if there is one: a leaf last child, or a root without root folds.
fn qubit_wire(tree: &RootedTree) -> Option<usize> {
    let root = tree.root();
    let last = *tree.children(root).last()?;
    if tree.is_leaf(last) {
        Some(last)
    } else if tree.children(root).len() == 1 {
        Some(root)
    } else {
        None
    }
}

fn basic_gates(plan: &SynthesisPlan, central: &Central) -> Result<Vec<Gate>, SynthError> {
    let tree = plan.tree();
    let root = tree.root();
    let children = tree.children(root);
    let last = *children.last().ok_or(SynthError::TooFewNodes(tree.len()))?;
    let mut dims = plan.dims().to_vec();
    let folded = match central {
        Central::Block(_) => children,
        _ => &children[..children.len() - 1],
    };
    let mut folds = Vec::new();
    for (i, &child) in folded.iter().enumerate() {
        folds.extend(emit_elementary_fold(root, child, i + 1, &dims)?);
    }
    let mut gates = folds.clone();
    match central {
        Central::Cz => gates.push(Gate::Cz { a: root, b: last }),
        Central::CzTheta(theta) if plan.lower_cz_theta => {
            let wire = qubit_wire(tree).expect("caller reroots when no qubit wire exists");
            let control = if wire == root { last } else { root };
            gates.extend(lower_gates_cx(cz_theta_decomposition(control, wire, *theta)));
        }
        Central::CzTheta(theta) => gates.push(Gate::CzTheta { a: root, b: last, theta: *theta }),
        Central::Block(block) => {
            let first = dims.len();
            dims.extend(&block.target_dims);
            gates.push(Gate::Block {
                control: root,
                targets: (first..dims.len()).collect(),
                matrix: block.matrix.clone(),
                cost: block.cost,
            });
        }
    }
    gates.extend(folds.iter().rev().map(Gate::adjoint));
    Ok(gates)
}

/// The central step on an already folded (single-level) tree.
pub fn emit_basic_op(plan: &SynthesisPlan, central: &Central) -> Result<Circuit, SynthError> {
    let purpose = match central {
        Central::Block(_) => Purpose::MultiTargetBlock,
        _ => Purpose::ControlledPhase,
    };
    plan.require(purpose)?;
    let gates = basic_gates(plan, central)?;
    let mut register = plan.dims().to_vec();
    if let Central::Block(b) = central {
        register.extend(&b.target_dims);
    }
    Ok(Circuit::new(QuditRegister::new(register)?, gates)?.with_name("basic"))
}

fn three_step(plan: &SynthesisPlan, central: &Central) -> Result<Vec<Gate>, SynthError> {
    let fold = folding_gates(plan.tree(), plan.dims())?;
    let mut gates = fold.clone();
    gates.extend(basic_gates(plan, central)?);
    gates.extend(fold.iter().rev().map(Gate::adjoint));
    Ok(gates)
}

/// C^{N-1}Z: phase −1 on the all-ones state, `2N−3` two-qudit gates.
pub fn synth_cnz(plan: &SynthesisPlan) -> Result<Circuit, SynthError> {
    plan.require(Purpose::ControlledPhase)?;
    plan.finish(three_step(plan, &Central::Cz)?, "cnz")
}

/// N-qubit Toffoli flipping `target` iff all other qudits are 1.
pub fn synth_cnx(plan: &SynthesisPlan, target: NodeId) -> Result<Circuit, SynthError> {
    plan.require(Purpose::ControlledPhase)?;
    let t = plan.target(target)?;
    let mut gates = vec![Gate::h(t)];
    gates.extend(three_step(plan, &Central::Cz)?);
    gates.push(Gate::h(t));
    plan.finish(gates, "cnx")
}

/// Tree-center leaf to reroot at when the central pair has no qubit wire.
fn best_leaf_root(tree: &RootedTree) -> Result<RootedTree, SynthError> {
    let mut best: Option<RootedTree> = None;
    for i in (0..tree.len()).filter(|&i| tree.degree(i) == 1) {
        let candidate = build_rooted_tree(tree.edges(), tree.label(i))?;
        if best.as_ref().is_none_or(|b| candidate.height() < b.height()) {
            best = Some(candidate);
        }
    }
    Ok(best.expect("a tree with at least two nodes has leaves"))
}

fn cnz_theta_gates(plan: &SynthesisPlan, theta: f64) -> Result<Vec<Gate>, SynthError> {
    if plan.lower_cz_theta && qubit_wire(plan.tree()).is_none() {
        // Both central qudits can sit on auxiliary levels here, and no two-CZ
        // replacement of CZ_θ is then exact; rooting at a leaf fixes that.
        let rerooted = SynthesisPlan { tree: best_leaf_root(plan.tree())?, ..plan.clone() };
        rerooted.require(Purpose::ControlledPhase)?;
        return three_step(&rerooted, &Central::CzTheta(theta));
    }
    three_step(plan, &Central::CzTheta(theta))
}

/// C^{N-1}Z_θ: phase e^{iθ} on the all-ones state. `2N−4` CX plus one CZ_θ,
/// or `2N−2` CZ-type gates with `lower_cz_theta`.
///
/// With `lower_cz_theta`, trees whose central pair could both leave the qubit
/// subspace are rerooted at a leaf for this gate.
pub fn synth_cnz_theta(plan: &SynthesisPlan, theta: f64) -> Result<Circuit, SynthError> {
    plan.require(Purpose::ControlledPhase)?;
    plan.finish(cnz_theta_gates(plan, theta)?, "cnz_theta")
}

/// `U = e^{iα} · V · diag(1, e^{iθ}) · V†`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub alpha: f64,
    /// In (−π, π].
    pub theta: f64,
    /// Columns are orthonormal eigenvectors.
    pub v: Mat2,
}

impl SpectralData {
    pub fn reconstruct(&self) -> Mat2 {
        let z = Complex64::new(0.0, 0.0);
        let d = [[Complex64::from_polar(1.0, self.alpha), z], [z, Complex64::from_polar(1.0, self.alpha + self.theta)]];
        mat2_mul(&mat2_mul(&self.v, &d), &mat2_adjoint(&self.v))
    }
}

fn mat2_distance(a: &Mat2, b: &Mat2) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Rotates the vector so its first non-negligible component is real positive.
fn fix_phase(v: [Complex64; 2]) -> [Complex64; 2] {
    let pivot = if v[0].norm() > 1e-12 { v[0] } else { v[1] };
    let ph = pivot.conj() / pivot.norm();
    [v[0] * ph, v[1] * ph]
}

fn angle_0_2pi(z: Complex64) -> f64 {
    let a = z.arg();
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Eigendecomposition of a 2×2 unitary. The eigenvalue with the smaller
/// phase in [0, 2π) comes first; a scalar input gives `θ = 0`, `V = I`.
pub fn spectral_decompose(u: &Mat2) -> Result<SpectralData, SynthError> {
    let err = mat2_unitarity_error(u);
    if err > UNITARY_TOLERANCE {
        return Err(SynthError::NotUnitary(err));
    }
    let (a, b, c, d) = (u[0][0], u[0][1], u[1][0], u[1][1]);
    let half_tr = (a + d) / 2.0;
    let disc = (half_tr * half_tr - (a * d - b * c)).sqrt();
    let (l1, l2) = (half_tr + disc, half_tr - disc);
    let (p1, p2) = (angle_0_2pi(l1), angle_0_2pi(l2));
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);

    let data = if (l1 - l2).norm() < 1e-9 {
        SpectralData { alpha: (half_tr / half_tr.norm()).arg(), theta: 0.0, v: [[one, zero], [zero, one]] }
    } else {
        let (first, p_first, p_second) = if p1 <= p2 { (l1, p1, p2) } else { (l2, p2, p1) };
        // null vector of (U − λI): orthogonal to its larger row
        let r0 = [a - first, b];
        let r1 = [c, d - first];
        let row = if r0[0].norm_sqr() + r0[1].norm_sqr() >= r1[0].norm_sqr() + r1[1].norm_sqr() { r0 } else { r1 };
        let n = (row[0].norm_sqr() + row[1].norm_sqr()).sqrt();
        let v1 = fix_phase([row[1] / n, -row[0] / n]);
        let v2 = fix_phase([-v1[1].conj(), v1[0].conj()]);
        let mut theta = p_second - p_first;
        if theta > PI {
            theta -= 2.0 * PI;
        }
        let alpha = if p_first > PI { p_first - 2.0 * PI } else { p_first };
        SpectralData { alpha, theta, v: [[v1[0], v2[0]], [v1[1], v2[1]]] }
    };
    let rec = mat2_distance(&data.reconstruct(), u);
    if rec > SPECTRAL_TOLERANCE {
        return Err(SynthError::Reconstruction(rec));
    }
    Ok(data)
}

fn is_trivial_phase(phi: f64) -> bool {
    (Complex64::from_polar(1.0, phi) - 1.0).norm() <= SPECTRAL_TOLERANCE
}

/// C^{N-1}U with its two-qudit cost split between the controlled `Z_θ`
/// part and the correction for the eigenvalue phase `α`.
#[derive(Debug, Clone, PartialEq)]
pub struct CnuSynthesis {
    pub circuit: Circuit,
    pub spectral: SpectralData,
    pub main_two_qudit: usize,
    pub phase_two_qudit: usize,
}

/// C^{N-2}Z_α on every node but `t` (which must have tree degree 1),
/// expressed on the full register.
fn control_phase_gates(plan: &SynthesisPlan, t: usize, alpha: f64) -> Result<Vec<Gate>, SynthError> {
    let tree = plan.tree();
    let rest: Vec<usize> = (0..tree.len()).filter(|&i| i != t).collect();
    if rest.len() == 1 {
        return Ok(vec![Gate::phase(rest[0], alpha)]);
    }
    let edges: BTreeSet<_> =
        tree.edges().iter().copied().filter(|e| e.low() != tree.label(t) && e.high() != tree.label(t)).collect();
    let centre = find_optimal_root(&edges)?[0];
    let sub = build_rooted_tree(&edges, centre)?;
    let map: Vec<usize> = sub.labels().iter().map(|&n| tree.index_of(n).expect("subtree node")).collect();
    let sub_dims: Vec<usize> = map.iter().map(|&i| plan.dims()[i]).collect();
    let sub_plan = SynthesisPlan { tree: sub, dims: sub_dims, lower_cx: false, lower_cz_theta: plan.lower_cz_theta };
    sub_plan.require(Purpose::ControlledPhase)?;
    Ok(cnz_theta_gates(&sub_plan, alpha)?.into_iter().map(|g| remap(g, &map)).collect())
}

fn remap(g: Gate, map: &[usize]) -> Gate {
    match g {
        Gate::Xm { qudit, level } => Gate::Xm { qudit: map[qudit], level },
        Gate::Local { qudit, op } => Gate::Local { qudit: map[qudit], op },
        Gate::Cz { a, b } => Gate::Cz { a: map[a], b: map[b] },
        Gate::CzTheta { a, b, theta } => Gate::CzTheta { a: map[a], b: map[b], theta },
        Gate::Cx { control, target } => Gate::Cx { control: map[control], target: map[target] },
        Gate::Block { control, targets, matrix, cost } => {
            Gate::Block { control: map[control], targets: targets.into_iter().map(|t| map[t]).collect(), matrix, cost }
        }
    }
}

fn count(gates: &[Gate]) -> usize {
    gates.iter().map(Gate::two_qudit_cost).sum()
}

/// C^{N-1}U on `target` via `V† · C^{N-1}Z_θ · V`, plus a controlled phase
/// for `α ≠ 0`: a C^{N-2}Z_α on the remaining subtree when `target` has one
/// tree link, otherwise `X·C^{N-1}Z_α·X` on the full tree.
pub fn synth_cnu(plan: &SynthesisPlan, u: &Mat2, target: NodeId) -> Result<CnuSynthesis, SynthError> {
    plan.require(Purpose::ControlledPhase)?;
    let t = plan.target(target)?;
    let spectral = spectral_decompose(u)?;
    let SpectralData { alpha, theta, v } = spectral.clone();
    let v_gate = Gate::Local { qudit: t, op: LocalGate::Unitary { label: "V".into(), matrix: v } };
    let phase_needed = !is_trivial_phase(alpha);

    let mut main = Vec::new();
    let mut fix = Vec::new();
    let merged = phase_needed && plan.tree().degree(t) > 1;
    if merged {
        // diag(e^{iα}, e^{i(α+θ)}) on t as two full-tree phase gates
        main.extend(cnz_theta_gates(plan, alpha + theta)?);
        fix.push(Gate::x(t));
        fix.extend(cnz_theta_gates(plan, alpha)?);
        fix.push(Gate::x(t));
    } else {
        if !is_trivial_phase(theta) {
            main.extend(cnz_theta_gates(plan, theta)?);
        }
        if phase_needed {
            fix.extend(control_phase_gates(plan, t, alpha)?);
        }
    }
    let (main_two_qudit, phase_two_qudit) = (count(&main), count(&fix));
    let mut gates = Vec::new();
    if merged {
        gates.push(v_gate.adjoint());
        gates.extend(main);
        gates.extend(fix);
        gates.push(v_gate);
    } else {
        if !main.is_empty() {
            gates.push(v_gate.adjoint());
            gates.extend(main);
            gates.push(v_gate);
        }
        gates.extend(fix);
    }
    let circuit = plan.finish(gates, "cnu")?;
    Ok(CnuSynthesis { circuit, spectral, main_two_qudit, phase_two_qudit })
}

/// C^N U: the block acts on extra target qudits (appended after the tree's
/// qudits) iff every control is 1. `2N−2+N_CU` two-qudit gates; the root
/// needs at least `2+n(1)` levels.
pub fn synth_cnu_multi(plan: &SynthesisPlan, block: &ControlledBlock) -> Result<Circuit, SynthError> {
    plan.require(Purpose::MultiTargetBlock)?;
    let mut dims = plan.dims().to_vec();
    dims.extend(&block.target_dims);
    let register = QuditRegister::new(dims)?;
    plan.finish_on(register, three_step(plan, &Central::Block(block.clone()))?, "cnu_multi")
}

/// Gate families accepted by [`synthesize`].
#[derive(Debug, Clone, PartialEq)]
pub enum GateSpec {
    Cnz,
    Cnx { target: NodeId },
    CnzTheta { theta: f64 },
    Cnu { matrix: Mat2, target: NodeId },
    CnuMulti(ControlledBlock),
}

impl GateSpec {
    pub fn purpose(&self) -> Purpose {
        match self {
            GateSpec::CnuMulti(_) => Purpose::MultiTargetBlock,
            _ => Purpose::ControlledPhase,
        }
    }
}

impl fmt::Display for GateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateSpec::Cnz => write!(f, "cnz"),
            GateSpec::Cnx { target } => write!(f, "cnx(target={target})"),
            GateSpec::CnzTheta { theta } => write!(f, "cnztheta(theta={theta})"),
            GateSpec::Cnu { target, .. } => write!(f, "cnu(target={target})"),
            GateSpec::CnuMulti(b) => write!(f, "cnu-multi(targets={}, cost={})", b.target_dims.len(), b.cost),
        }
    }
}

pub fn synthesize(plan: &SynthesisPlan, spec: &GateSpec) -> Result<Circuit, SynthError> {
    match spec {
        GateSpec::Cnz => synth_cnz(plan),
        GateSpec::Cnx { target } => synth_cnx(plan, *target),
        GateSpec::CnzTheta { theta } => synth_cnz_theta(plan, *theta),
        GateSpec::Cnu { matrix, target } => synth_cnu(plan, matrix, *target).map(|s| s.circuit),
        GateSpec::CnuMulti(block) => synth_cnu_multi(plan, block),
    }
}
