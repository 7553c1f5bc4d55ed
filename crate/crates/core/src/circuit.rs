//! Gate-level IR over a mixed-dimension qudit register.
//!
//! Levels 0 and 1 of every qudit form its qubit subspace. Apart from the
//! generalized inverting gate `X_m`, every gate here acts as the identity
//! whenever one of its qudits sits on an auxiliary level (≥ 2).

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Max entry deviation of `M†M` from the identity accepted for user matrices.
pub const UNITARY_TOLERANCE: f64 = 1e-12;

pub type Mat2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn mat2_adjoint(m: &Mat2) -> Mat2 {
    [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]]
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Maximum entry-wise deviation of `M†M` from the identity.
pub fn mat2_unitarity_error(m: &Mat2) -> f64 {
    let p = mat2_mul(&mat2_adjoint(m), m);
    p.iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, &x)| (x - if i == j { ONE } else { ZERO }).norm()))
        .fold(0.0, f64::max)
}

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn new(dim: usize, data: Vec<Complex64>) -> Result<Self, CircuitError> {
        if dim * dim != data.len() {
            return Err(CircuitError::MatrixShape { expected: dim * dim, got: data.len() });
        }
        Ok(DenseMatrix { dim, data })
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = ONE;
        }
        DenseMatrix { dim, data }
    }

    pub fn diagonal(entries: &[Complex64]) -> Self {
        let mut m = Self::identity(entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m.data[i * m.dim + i] = e;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut data = vec![ZERO; n * n];
        for r in 0..n {
            for c in 0..n {
                data[c * n + r] = self.data[r * n + c].conj();
            }
        }
        DenseMatrix { dim: n, data }
    }

    pub fn unitarity_error(&self) -> f64 {
        let n = self.dim;
        let mut err: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut acc = ZERO;
                for k in 0..n {
                    acc += self.data[k * n + i].conj() * self.data[k * n + j];
                }
                let id = if i == j { ONE } else { ZERO };
                err = err.max((acc - id).norm());
            }
        }
        err
    }
}

/// Unitary on the {0,1} subspace of one qudit.
#[derive(Debug, Clone, PartialEq)]
pub enum LocalGate {
    H,
    X,
    /// `diag(1, e^{iφ})`.
    Phase(f64),
    Unitary {
        label: String,
        matrix: Mat2,
    },
}

impl LocalGate {
    pub fn matrix(&self) -> Mat2 {
        match self {
            LocalGate::H => {
                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                [[h, h], [h, -h]]
            }
            LocalGate::X => [[ZERO, ONE], [ONE, ZERO]],
            LocalGate::Phase(phi) => [[ONE, ZERO], [ZERO, Complex64::from_polar(1.0, *phi)]],
            LocalGate::Unitary { matrix, .. } => *matrix,
        }
    }

    pub fn adjoint(&self) -> Self {
        match self {
            LocalGate::H | LocalGate::X => self.clone(),
            LocalGate::Phase(phi) => LocalGate::Phase(-phi),
            LocalGate::Unitary { label, matrix } => LocalGate::Unitary {
                label: match label.strip_suffix('†') {
                    Some(base) => base.to_string(),
                    None => format!("{label}†"),
                },
                matrix: mat2_adjoint(matrix),
            },
        }
    }

    pub fn name(&self) -> String {
        match self {
            LocalGate::H => "H".into(),
            LocalGate::X => "X".into(),
            LocalGate::Phase(phi) => format!("P({phi})"),
            LocalGate::Unitary { label, .. } => label.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    /// Swaps levels 0 and `level`; `level = 1` is the ordinary X.
    Xm {
        qudit: usize,
        level: usize,
    },
    Local {
        qudit: usize,
        op: LocalGate,
    },
    /// Phase −1 on |11⟩ only.
    Cz {
        a: usize,
        b: usize,
    },
    /// Phase e^{iθ} on |11⟩ only.
    CzTheta {
        a: usize,
        b: usize,
        theta: f64,
    },
    /// Flips levels 0↔1 of `target` when `control` is on level 1.
    Cx {
        control: usize,
        target: usize,
    },
    /// Applies `matrix` to the joint space of `targets` (first target most
    /// significant) when `control` is on level 1. `cost` is its declared
    /// two-qudit gate count.
    Block {
        control: usize,
        targets: Vec<usize>,
        matrix: DenseMatrix,
        cost: usize,
    },
}

impl Gate {
    pub fn h(q: usize) -> Self {
        Gate::Local { qudit: q, op: LocalGate::H }
    }

    pub fn x(q: usize) -> Self {
        Gate::Xm { qudit: q, level: 1 }
    }

    pub fn phase(q: usize, phi: f64) -> Self {
        Gate::Local { qudit: q, op: LocalGate::Phase(phi) }
    }

    pub fn support(&self) -> Vec<usize> {
        match self {
            Gate::Xm { qudit, .. } | Gate::Local { qudit, .. } => vec![*qudit],
            Gate::Cz { a, b } | Gate::CzTheta { a, b, .. } => vec![*a, *b],
            Gate::Cx { control, target } => vec![*control, *target],
            Gate::Block { control, targets, .. } => std::iter::once(*control).chain(targets.iter().copied()).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        match self {
            Gate::Local { qudit, op } => Gate::Local { qudit: *qudit, op: op.adjoint() },
            Gate::CzTheta { a, b, theta } => Gate::CzTheta { a: *a, b: *b, theta: -theta },
            Gate::Block { control, targets, matrix, cost } => {
                Gate::Block { control: *control, targets: targets.clone(), matrix: matrix.adjoint(), cost: *cost }
            }
            _ => self.clone(),
        }
    }

    pub fn two_qudit_cost(&self) -> usize {
        match self {
            Gate::Cz { .. } | Gate::CzTheta { .. } | Gate::Cx { .. } => 1,
            Gate::Block { cost, .. } => *cost,
            Gate::Xm { .. } | Gate::Local { .. } => 0,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Gate::Xm { .. } => "XM",
            Gate::Local { .. } => "LOCAL2",
            Gate::Cz { .. } => "CZ",
            Gate::CzTheta { .. } => "CZTHETA",
            Gate::Cx { .. } => "CX",
            Gate::Block { .. } => "CUBLOCK",
        }
    }

    /// Short label used in histograms and renderings.
    pub fn label(&self) -> String {
        match self {
            Gate::Xm { level: 1, .. } => "X".into(),
            Gate::Xm { level, .. } => format!("X_{level}"),
            Gate::Local { op, .. } => op.name(),
            Gate::Cz { .. } => "CZ".into(),
            Gate::CzTheta { theta, .. } => format!("CZ({theta})"),
            Gate::Cx { .. } => "CX".into(),
            Gate::Block { .. } => "CU".into(),
        }
    }

    pub fn validate(&self, register: &QuditRegister) -> Result<(), CircuitError> {
        let n = register.len();
        let support = self.support();
        for &q in &support {
            if q >= n {
                return Err(CircuitError::QuditOutOfRange { qudit: q, len: n });
            }
        }
        for (i, a) in support.iter().enumerate() {
            if support[i + 1..].contains(a) {
                return Err(CircuitError::RepeatedQudit(*a));
            }
        }
        match self {
            Gate::Xm { qudit, level } => {
                let d = register.dim(*qudit);
                if *level == 0 || *level >= d {
                    return Err(CircuitError::LevelOutOfRange { qudit: *qudit, level: *level, dim: d });
                }
            }
            Gate::Local { op: LocalGate::Unitary { matrix, .. }, .. } => {
                let err = mat2_unitarity_error(matrix);
                if err > UNITARY_TOLERANCE {
                    return Err(CircuitError::NotUnitary(err));
                }
            }
            Gate::Block { targets, matrix, .. } => {
                let expected: usize = targets.iter().map(|&t| register.dim(t)).product();
                if matrix.dim() != expected {
                    return Err(CircuitError::MatrixShape {
                        expected: expected * expected,
                        got: matrix.dim() * matrix.dim(),
                    });
                }
                let err = matrix.unitarity_error();
                if err > UNITARY_TOLERANCE {
                    return Err(CircuitError::NotUnitary(err));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())?;
        for q in self.support() {
            write!(f, " q{q}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QuditRegister {
    dims: Vec<usize>,
}

impl QuditRegister {
    pub fn new(dims: Vec<usize>) -> Result<Self, CircuitError> {
        if dims.is_empty() {
            return Err(CircuitError::EmptyRegister);
        }
        if let Some((q, &d)) = dims.iter().enumerate().find(|(_, &d)| d < 2) {
            return Err(CircuitError::BadDimension { qudit: q, dim: d });
        }
        Ok(QuditRegister { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self, q: usize) -> usize {
        self.dims[q]
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total_dimension(&self) -> usize {
        self.dims.iter().product()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircuitError {
    #[error("register has no qudits")]
    EmptyRegister,
    #[error("qudit {qudit} has dimension {dim}; at least 2 is required")]
    BadDimension { qudit: usize, dim: usize },
    #[error("qudit index {qudit} out of range for a register of {len}")]
    QuditOutOfRange { qudit: usize, len: usize },
    #[error("level {level} does not exist on qudit {qudit} of dimension {dim}")]
    LevelOutOfRange { qudit: usize, level: usize, dim: usize },
    #[error("qudit {0} appears twice in one gate")]
    RepeatedQudit(usize),
    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),
    #[error("matrix has {got} entries, expected {expected}")]
    MatrixShape { expected: usize, got: usize },
    #[error("registers differ: {0:?} vs {1:?}")]
    RegisterMismatch(Vec<usize>, Vec<usize>),
    #[error("gate {index}: {source}")]
    InvalidGate {
        index: usize,
        #[source]
        source: Box<CircuitError>,
    },
    #[error("circuit file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Metadata {
    pub name: String,
    pub tags: Vec<String>,
    /// Coupling-graph node id of each qudit, when the circuit came from a topology.
    pub labels: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    register: QuditRegister,
    gates: Vec<Gate>,
    pub metadata: Metadata,
}

impl Circuit {
    pub fn empty(register: QuditRegister) -> Self {
        Circuit { register, gates: Vec::new(), metadata: Metadata::default() }
    }

    pub fn new(register: QuditRegister, gates: Vec<Gate>) -> Result<Self, CircuitError> {
        let mut c = Circuit::empty(register);
        c.extend(gates)?;
        Ok(c)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.metadata.name = name.into();
        self
    }

    pub fn register(&self) -> &QuditRegister {
        &self.register
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<(), CircuitError> {
        gate.validate(&self.register)
            .map_err(|e| CircuitError::InvalidGate { index: self.gates.len(), source: Box::new(e) })?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<(), CircuitError> {
        gates.into_iter().try_for_each(|g| self.push(g))
    }

    /// Copy without the gate at `index`.
    pub fn without_gate(&self, index: usize) -> Self {
        let mut c = self.clone();
        c.gates.remove(index);
        c
    }

    /// `a` followed by `b`.
    pub fn compose(&self, other: &Circuit) -> Result<Circuit, CircuitError> {
        if self.register != other.register {
            return Err(CircuitError::RegisterMismatch(self.register.dims.clone(), other.register.dims.clone()));
        }
        let mut c = self.clone();
        c.gates.extend(other.gates.iter().cloned());
        Ok(c)
    }

    pub fn inverse(&self) -> Circuit {
        Circuit {
            register: self.register.clone(),
            gates: self.gates.iter().rev().map(Gate::adjoint).collect(),
            metadata: self.metadata.clone(),
        }
    }

    pub fn two_qudit_count(&self) -> usize {
        self.gates.iter().map(Gate::two_qudit_cost).sum()
    }

    pub fn histogram(&self) -> BTreeMap<String, usize> {
        let mut h = BTreeMap::new();
        for g in &self.gates {
            let key = match g {
                Gate::Local { op: LocalGate::Phase(_), .. } => "P".to_string(),
                Gate::CzTheta { .. } => "CZ_theta".to_string(),
                _ => g.label(),
            };
            *h.entry(key).or_insert(0) += 1;
        }
        h
    }

    /// As-soon-as-possible layering with unit gate time.
    pub fn schedule(&self) -> Schedule {
        let mut last = vec![0usize; self.register.len()];
        let mut layers = Vec::with_capacity(self.gates.len());
        for g in &self.gates {
            let support = g.support();
            let layer = support.iter().map(|&q| last[q]).max().unwrap_or(0) + 1;
            for q in support {
                last[q] = layer;
            }
            layers.push(layer);
        }
        Schedule { depth: layers.iter().copied().max().unwrap_or(0), layers }
    }

    pub fn depth(&self) -> usize {
        self.schedule().depth
    }

    /// Replaces every CX by H·CZ·H on the target.
    pub fn lower_cx(&self) -> Circuit {
        let mut gates = Vec::with_capacity(self.gates.len());
        for g in &self.gates {
            match *g {
                Gate::Cx { control, target } => {
                    gates.extend([Gate::h(target), Gate::Cz { a: control, b: target }, Gate::h(target)])
                }
                _ => gates.push(g.clone()),
            }
        }
        Circuit { register: self.register.clone(), gates, metadata: self.metadata.clone() }
    }

    /// Replaces every CZ_θ by two CZ and level-1 phase gates, see
    /// [`cz_theta_decomposition`]. A qubit (dimension 2) endpoint is used as
    /// the CX target when there is one, which makes the replacement exact on
    /// the whole space.
    pub fn lower_cz_theta(&self) -> Circuit {
        let mut gates = Vec::with_capacity(self.gates.len());
        for g in &self.gates {
            match *g {
                Gate::CzTheta { a, b, theta } => {
                    let (c, w) = if self.register.dim(b) > 2 && self.register.dim(a) == 2 { (b, a) } else { (a, b) };
                    gates.extend(lower_gates_cx(cz_theta_decomposition(c, w, theta)));
                }
                _ => gates.push(g.clone()),
            }
        }
        Circuit { register: self.register.clone(), gates, metadata: self.metadata.clone() }
    }

    /// One gate per line, e.g. `X_2 q3` or `CZ q1 q5`.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for g in &self.gates {
            out.push_str(&g.to_string());
            out.push('\n');
        }
        out
    }
}

/// CX → H·CZ·H on the target; other gates pass through.
pub fn lower_gates_cx(gates: Vec<Gate>) -> Vec<Gate> {
    gates
        .into_iter()
        .flat_map(|g| match g {
            Gate::Cx { control, target } => {
                vec![Gate::h(target), Gate::Cz { a: control, b: target }, Gate::h(target)]
            }
            g => vec![g],
        })
        .collect()
}

/// CZ_θ between `control` and `wire` as
/// `P(θ/2)@control, P(θ/2)@wire, CX(control→wire), P(−θ/2)@wire, CX(control→wire)`.
///
/// On the qubit block this is exactly `diag(1, 1, 1, e^{iθ})`. On auxiliary
/// levels it is the identity as long as `wire` never leaves {0,1}; with
/// `wire` on level 1 and `control` auxiliary the phases still cancel, but
/// `control` on level 1 with `wire` auxiliary picks up e^{iθ/2}.
pub fn cz_theta_decomposition(control: usize, wire: usize, theta: f64) -> Vec<Gate> {
    vec![
        Gate::phase(control, theta / 2.0),
        Gate::phase(wire, theta / 2.0),
        Gate::Cx { control, target: wire },
        Gate::phase(wire, -theta / 2.0),
        Gate::Cx { control, target: wire },
    ]
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub depth: usize,
    /// 1-based layer of each gate.
    pub layers: Vec<usize>,
}

// ---------------------------------------------------------------------------
// structured file format

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitFile {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<u32>,
    pub dims: Vec<usize>,
    pub gates: Vec<GateRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateRecord {
    pub kind: String,
    pub qudits: Vec<usize>,
    #[serde(default, skip_serializing_if = "GateParams::is_empty")]
    pub params: GateParams,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<usize>,
}

impl GateParams {
    fn is_empty(&self) -> bool {
        *self == GateParams::default()
    }
}

pub fn encode_matrix(entries: &[Complex64]) -> Vec<[f64; 2]> {
    entries.iter().map(|c| [c.re, c.im]).collect()
}

pub fn decode_matrix(pairs: &[[f64; 2]]) -> Vec<Complex64> {
    pairs.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
}

/// Accepts a square matrix given as row-major `[re, im]` pairs.
pub fn decode_square(pairs: &[[f64; 2]]) -> Result<DenseMatrix, CircuitError> {
    let n = (pairs.len() as f64).sqrt().round() as usize;
    DenseMatrix::new(n, decode_matrix(pairs))
}

pub fn decode_mat2(pairs: &[[f64; 2]]) -> Result<Mat2, CircuitError> {
    if pairs.len() != 4 {
        return Err(CircuitError::MatrixShape { expected: 4, got: pairs.len() });
    }
    let e = decode_matrix(pairs);
    Ok([[e[0], e[1]], [e[2], e[3]]])
}

impl GateRecord {
    fn from_gate(g: &Gate) -> Self {
        let mut params = GateParams::default();
        match g {
            Gate::Xm { level, .. } => params.m = Some(*level),
            Gate::Local { op, .. } => match op {
                LocalGate::H => params.name = Some("H".into()),
                LocalGate::X => params.name = Some("X".into()),
                LocalGate::Phase(phi) => {
                    params.name = Some("P".into());
                    params.phi = Some(*phi);
                }
                LocalGate::Unitary { label, matrix } => {
                    params.name = Some(label.clone());
                    params.matrix = Some(encode_matrix(&[matrix[0][0], matrix[0][1], matrix[1][0], matrix[1][1]]));
                }
            },
            Gate::CzTheta { theta, .. } => params.theta = Some(*theta),
            Gate::Block { matrix, cost, .. } => {
                params.matrix = Some(encode_matrix(matrix.data()));
                params.cost = Some(*cost);
            }
            Gate::Cz { .. } | Gate::Cx { .. } => {}
        }
        GateRecord { kind: g.kind().into(), qudits: g.support(), params }
    }

    fn to_gate(&self) -> Result<Gate, CircuitError> {
        let bad = |msg: &str| CircuitError::Format(format!("{} gate: {msg}", self.kind));
        let arity = |n: usize| -> Result<(), CircuitError> {
            if self.qudits.len() == n {
                Ok(())
            } else {
                Err(bad(&format!("expected {n} qudits, got {}", self.qudits.len())))
            }
        };
        let q = &self.qudits;
        let p = &self.params;
        Ok(match self.kind.as_str() {
            "XM" => {
                arity(1)?;
                Gate::Xm { qudit: q[0], level: p.m.ok_or_else(|| bad("missing params.m"))? }
            }
            "LOCAL2" => {
                arity(1)?;
                let name = p.name.as_deref().ok_or_else(|| bad("missing params.name"))?;
                let op = match name {
                    "H" => LocalGate::H,
                    "X" => LocalGate::X,
                    "P" => LocalGate::Phase(p.phi.ok_or_else(|| bad("missing params.phi"))?),
                    label => LocalGate::Unitary {
                        label: label.to_string(),
                        matrix: decode_mat2(p.matrix.as_deref().ok_or_else(|| bad("missing params.matrix"))?)?,
                    },
                };
                Gate::Local { qudit: q[0], op }
            }
            "CZ" => {
                arity(2)?;
                Gate::Cz { a: q[0], b: q[1] }
            }
            "CZTHETA" => {
                arity(2)?;
                Gate::CzTheta { a: q[0], b: q[1], theta: p.theta.ok_or_else(|| bad("missing params.theta"))? }
            }
            "CX" => {
                arity(2)?;
                Gate::Cx { control: q[0], target: q[1] }
            }
            "CUBLOCK" => {
                if q.len() < 2 {
                    return Err(bad("needs a control and at least one target"));
                }
                Gate::Block {
                    control: q[0],
                    targets: q[1..].to_vec(),
                    matrix: decode_square(p.matrix.as_deref().ok_or_else(|| bad("missing params.matrix"))?)?,
                    cost: p.cost.ok_or_else(|| bad("missing params.cost"))?,
                }
            }
            other => return Err(CircuitError::Format(format!("unknown gate kind {other:?}"))),
        })
    }
}

impl Circuit {
    pub fn to_file(&self) -> CircuitFile {
        CircuitFile {
            name: self.metadata.name.clone(),
            tags: self.metadata.tags.clone(),
            labels: self.metadata.labels.clone(),
            dims: self.register.dims.clone(),
            gates: self.gates.iter().map(GateRecord::from_gate).collect(),
        }
    }

    pub fn from_file(file: &CircuitFile) -> Result<Circuit, CircuitError> {
        let register = QuditRegister::new(file.dims.clone())?;
        if !file.labels.is_empty() && file.labels.len() != file.dims.len() {
            return Err(CircuitError::Format(format!("{} labels for {} qudits", file.labels.len(), file.dims.len())));
        }
        let mut c = Circuit::empty(register);
        for (i, rec) in file.gates.iter().enumerate() {
            let g = rec.to_gate().map_err(|e| CircuitError::InvalidGate { index: i, source: Box::new(e) })?;
            c.push(g)?;
        }
        c.metadata = Metadata { name: file.name.clone(), tags: file.tags.clone(), labels: file.labels.clone() };
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("circuit serializes")
    }

    pub fn from_json(text: &str) -> Result<Circuit, CircuitError> {
        let file: CircuitFile = serde_json::from_str(text).map_err(|e| CircuitError::Format(e.to_string()))?;
        Circuit::from_file(&file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{basis_state, run, StateVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn reg(d: &[usize]) -> QuditRegister {
        QuditRegister::new(d.to_vec()).unwrap()
    }

    /// Dense matrix of a circuit, column j = output of basis input j.
    fn unitary_of(c: &Circuit) -> Vec<Vec<Complex64>> {
        let dims = c.register().dims().to_vec();
        let total = c.register().total_dimension();
        (0..total)
            .map(|j| {
                let input = StateVector::from_index(&dims, j);
                run(c, input).unwrap().amplitudes().to_vec()
            })
            .collect()
    }

    fn max_diff(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> f64 {
        a.iter().zip(b).flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).norm())).fold(0.0, f64::max)
    }

    fn random_circuit(rng: &mut ChaCha8Rng, dims: &[usize], len: usize) -> Circuit {
        let n = dims.len();
        let mut c = Circuit::empty(reg(dims));
        while c.len() < len {
            let a = rng.gen_range(0..n);
            let mut b = rng.gen_range(0..n);
            while b == a {
                b = rng.gen_range(0..n);
            }
            let g = match rng.gen_range(0..7) {
                0 => Gate::Xm { qudit: a, level: rng.gen_range(1..dims[a]) },
                1 => Gate::h(a),
                2 => Gate::phase(a, rng.gen_range(-PI..PI)),
                3 => Gate::Cz { a, b },
                4 => Gate::CzTheta { a, b, theta: rng.gen_range(-PI..PI) },
                5 => Gate::Cx { control: a, target: b },
                _ => {
                    let (t, p) = (rng.gen_range(-PI..PI), rng.gen_range(-PI..PI));
                    let m = [
                        [Complex64::new(t.cos(), 0.0), -Complex64::from_polar(t.sin(), p)],
                        [Complex64::from_polar(t.sin(), -p), Complex64::new(t.cos(), 0.0)],
                    ];
                    Gate::Local { qudit: a, op: LocalGate::Unitary { label: "V".into(), matrix: m } }
                }
            };
            c.push(g).unwrap();
        }
        c
    }

    #[test]
    fn compose_identity_and_counts() {
        let r = reg(&[2, 3]);
        let c = Circuit::new(r.clone(), vec![Gate::h(0), Gate::Cz { a: 0, b: 1 }, Gate::h(0)]).unwrap();
        assert_eq!(Circuit::empty(r.clone()).compose(&c).unwrap(), c);
        assert_eq!(c.two_qudit_count(), 1);
        assert_eq!(c.compose(&c).unwrap().two_qudit_count(), 2);
        let other = Circuit::empty(reg(&[2, 2]));
        assert!(matches!(c.compose(&other), Err(CircuitError::RegisterMismatch(..))));
    }

    #[test]
    fn inverse_reverses_and_adjoints() {
        let r = reg(&[3, 3]);
        let cz = Circuit::new(r.clone(), vec![Gate::Cz { a: 0, b: 1 }]).unwrap();
        assert_eq!(cz.inverse(), cz);
        let c =
            Circuit::new(r.clone(), vec![Gate::Xm { qudit: 0, level: 2 }, Gate::Cx { control: 1, target: 0 }]).unwrap();
        assert_eq!(c.inverse().gates(), &[Gate::Cx { control: 1, target: 0 }, Gate::Xm { qudit: 0, level: 2 }]);
        let t = Circuit::new(r, vec![Gate::CzTheta { a: 0, b: 1, theta: 0.3 }, Gate::phase(1, 0.2)]).unwrap();
        assert_eq!(t.inverse().gates(), &[Gate::phase(1, -0.2), Gate::CzTheta { a: 0, b: 1, theta: -0.3 }]);
    }

    #[test]
    fn circuit_then_inverse_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let dims: Vec<usize> = (0..3).map(|_| rng.gen_range(2..5)).collect();
            let c = random_circuit(&mut rng, &dims, 25);
            let round = c.compose(&c.inverse()).unwrap();
            let u = unitary_of(&round);
            let id: Vec<Vec<Complex64>> =
                (0..u.len()).map(|j| (0..u.len()).map(|i| if i == j { ONE } else { ZERO }).collect()).collect();
            assert!(max_diff(&u, &id) <= 1e-12);
        }
    }

    #[test]
    fn double_inverse_is_same_gate_list() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = random_circuit(&mut rng, &[3, 2, 4], 40);
        assert_eq!(c.inverse().inverse().gates(), c.gates());
    }

    #[test]
    fn block_cost_is_declared() {
        let r = reg(&[2, 2, 2]);
        let block = Gate::Block { control: 0, targets: vec![1], matrix: DenseMatrix::identity(2), cost: 3 };
        let c = Circuit::new(r, vec![block, Gate::Cz { a: 0, b: 1 }, Gate::Cz { a: 1, b: 2 }]).unwrap();
        assert_eq!(c.two_qudit_count(), 5);
    }

    #[test]
    fn schedule_layers() {
        let r = reg(&[2, 2, 2, 2]);
        let par = Circuit::new(r.clone(), vec![Gate::Cz { a: 0, b: 1 }, Gate::Cz { a: 2, b: 3 }]).unwrap();
        assert_eq!(par.depth(), 1);
        let seq = Circuit::new(r.clone(), vec![Gate::Cz { a: 0, b: 1 }, Gate::Cz { a: 1, b: 2 }]).unwrap();
        let s = seq.schedule();
        assert_eq!((s.depth, s.layers), (2, vec![1, 2]));
        assert_eq!(Circuit::empty(r).depth(), 0);
    }

    #[test]
    fn validation_rejects_bad_gates() {
        let r = reg(&[2, 3]);
        let mut c = Circuit::empty(r);
        assert!(c.push(Gate::Xm { qudit: 0, level: 2 }).is_err());
        assert!(c.push(Gate::Xm { qudit: 1, level: 0 }).is_err());
        assert!(c.push(Gate::Cz { a: 1, b: 1 }).is_err());
        assert!(c.push(Gate::Cx { control: 0, target: 5 }).is_err());
        let bad = [[ONE, ONE], [ZERO, ONE]];
        assert!(c.push(Gate::Local { qudit: 0, op: LocalGate::Unitary { label: "B".into(), matrix: bad } }).is_err());
        let block = Gate::Block { control: 0, targets: vec![1], matrix: DenseMatrix::identity(2), cost: 1 };
        assert!(matches!(c.push(block).unwrap_err(), CircuitError::InvalidGate { .. }));
        let block = Gate::Block { control: 0, targets: vec![0], matrix: DenseMatrix::identity(2), cost: 1 };
        assert!(c.push(block).is_err());
        assert!(c.is_empty());
    }

    #[test]
    fn lower_cx_form_and_action() {
        let r = reg(&[2, 2]);
        let c = Circuit::new(r, vec![Gate::Cx { control: 0, target: 1 }]).unwrap();
        let l = c.lower_cx();
        assert_eq!(l.gates(), &[Gate::h(1), Gate::Cz { a: 0, b: 1 }, Gate::h(1)]);
        let out = run(&l, basis_state(&[2, 2], &[1, 1]).unwrap()).unwrap();
        let want = basis_state(&[2, 2], &[1, 0]).unwrap();
        assert!(out.distance(&want) <= 1e-12);
    }

    #[test]
    fn lowering_preserves_random_circuits() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..8 {
            let dims: Vec<usize> = (0..4).map(|_| rng.gen_range(2..4)).collect();
            let c = random_circuit(&mut rng, &dims, 30);
            let u = unitary_of(&c);
            assert!(max_diff(&u, &unitary_of(&c.lower_cx())) <= 1e-12);
        }
        // CZ_θ lowering is exact on the full space when an endpoint is a qubit
        for _ in 0..8 {
            let mut dims: Vec<usize> = (0..4).map(|_| rng.gen_range(2..5)).collect();
            dims[0] = 2;
            let mut c = Circuit::empty(reg(&dims));
            for _ in 0..12 {
                let other = rng.gen_range(1..4);
                let theta = rng.gen_range(-PI..PI);
                let g = if rng.gen_bool(0.5) {
                    Gate::CzTheta { a: 0, b: other, theta }
                } else {
                    Gate::CzTheta { a: other, b: 0, theta }
                };
                c.push(g).unwrap();
                c.push(Gate::Xm { qudit: other, level: rng.gen_range(1..dims[other]) }).unwrap();
                c.push(Gate::h(0)).unwrap();
            }
            let l = c.lower_cz_theta();
            assert_eq!(l.two_qudit_count(), 2 * 12);
            assert!(max_diff(&unitary_of(&c), &unitary_of(&l)) <= 1e-12);
        }
    }

    fn cz_theta_matrix(dims: [usize; 2], theta: f64) -> Vec<Vec<Complex64>> {
        let c = Circuit::new(reg(&dims), vec![Gate::CzTheta { a: 0, b: 1, theta }]).unwrap();
        unitary_of(&c.lower_cz_theta())
    }

    #[test]
    fn lowered_cz_theta_special_angles() {
        let cz = unitary_of(&Circuit::new(reg(&[2, 3]), vec![Gate::Cz { a: 0, b: 1 }]).unwrap());
        assert!(max_diff(&cz_theta_matrix([2, 3], PI), &cz) <= 1e-12);
        let id = unitary_of(&Circuit::empty(reg(&[2, 3])));
        assert!(max_diff(&cz_theta_matrix([2, 3], 0.0), &id) <= 1e-12);
    }

    #[test]
    fn lowered_cz_theta_between_two_qutrits() {
        // independent oracle: the 9×9 diagonal with e^{iθ} at |11⟩ = index 4
        let theta = PI / 3.0;
        let u = cz_theta_matrix([3, 3], theta);
        for (j, column) in u.iter().enumerate() {
            for (i, &entry) in column.iter().enumerate() {
                let (a, b) = (j / 3, j % 3);
                let expected = if i != j {
                    ZERO
                } else if (a, b) == (1, 1) {
                    Complex64::from_polar(1.0, theta)
                } else if a == 1 && b == 2 {
                    // both endpoints can leave the qubit subspace: the control's
                    // half-angle phase is left over when the wire is auxiliary
                    Complex64::from_polar(1.0, theta / 2.0)
                } else {
                    ONE
                };
                assert!((entry - expected).norm() <= 1e-12, "entry ({i},{j})");
            }
        }
        // exact on the qubit block
        for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let j = a * 3 + b;
            let want = if (a, b) == (1, 1) { Complex64::from_polar(1.0, theta) } else { ONE };
            assert!((u[j][j] - want).norm() <= 1e-12);
        }
    }

    #[test]
    fn text_rendering() {
        let c = Circuit::new(
            reg(&[2, 2, 2, 3]),
            vec![Gate::Xm { qudit: 3, level: 2 }, Gate::Cz { a: 1, b: 2 }, Gate::x(0)],
        )
        .unwrap();
        assert_eq!(c.render_text(), "X_2 q3\nCZ q1 q2\nX q0\n");
    }

    #[test]
    fn json_round_trip_all_kinds() {
        let v = [[ONE, ZERO], [ZERO, Complex64::new(0.0, 1.0)]];
        let gates = vec![
            Gate::Xm { qudit: 1, level: 2 },
            Gate::h(0),
            Gate::phase(0, 0.25),
            Gate::Local { qudit: 2, op: LocalGate::Unitary { label: "V".into(), matrix: v } },
            Gate::Cz { a: 0, b: 1 },
            Gate::CzTheta { a: 1, b: 2, theta: -1.5 },
            Gate::Cx { control: 2, target: 0 },
            Gate::Block { control: 1, targets: vec![2], matrix: DenseMatrix::diagonal(&[ONE, -ONE]), cost: 1 },
        ];
        let mut c = Circuit::new(reg(&[2, 3, 2]), gates).unwrap().with_name("all");
        c.metadata.labels = vec![4, 7, 9];
        assert_eq!(Circuit::from_json(&c.to_json()).unwrap(), c);
        assert!(Circuit::from_json(r#"{"dims":[2],"gates":[{"kind":"NOPE","qudits":[0]}]}"#).is_err());
        assert!(Circuit::from_json(r#"{"dims":[2,2],"gates":[{"kind":"CZ","qudits":[0]}]}"#).is_err());
    }
}
