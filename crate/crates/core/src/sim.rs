//! Dense mixed-radix state-vector simulation and oracle verification.
//!
//! The basis index of digits `(x_0, …, x_{n-1})` is `Σ x_q · stride_q` with
//! qudit 0 most significant.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, DenseMatrix, Gate, LocalGate, Mat2};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("expected {expected} digits, got {got}")]
    DigitCount { expected: usize, got: usize },
    #[error("digit {digit} out of range for qudit {qudit} of dimension {dim}")]
    DigitOutOfRange { qudit: usize, digit: usize, dim: usize },
    #[error("circuit register {circuit:?} does not match state register {state:?}")]
    RegisterMismatch { circuit: Vec<usize>, state: Vec<usize> },
    #[error("oracle acts on {oracle} qudits but the circuit register has {circuit}")]
    ArityMismatch { oracle: usize, circuit: usize },
    #[error("oracle needs at least 2 qudits")]
    TooFewQudits,
    #[error("oracle parameter: {0}")]
    BadOracle(String),
    #[error("gate {index} ({gate}) is not a basis permutation")]
    NotPermutationGate { index: usize, gate: String },
    #[error("basis state {input} is not mapped to a single basis state with unit amplitude")]
    PermutationMismatch { input: usize },
}

fn strides_of(dims: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; dims.len()];
    for q in (0..dims.len().saturating_sub(1)).rev() {
        strides[q] = strides[q + 1] * dims[q + 1];
    }
    strides
}

pub fn encode(dims: &[usize], digits: &[usize]) -> Result<usize, SimError> {
    if digits.len() != dims.len() {
        return Err(SimError::DigitCount { expected: dims.len(), got: digits.len() });
    }
    let mut idx = 0;
    for (q, (&x, &d)) in digits.iter().zip(dims).enumerate() {
        if x >= d {
            return Err(SimError::DigitOutOfRange { qudit: q, digit: x, dim: d });
        }
        idx = idx * d + x;
    }
    Ok(idx)
}

pub fn decode(dims: &[usize], mut index: usize) -> Vec<usize> {
    let mut digits = vec![0; dims.len()];
    for q in (0..dims.len()).rev() {
        digits[q] = index % dims[q];
        index /= dims[q];
    }
    digits
}

/// Calls `f` with every basis index whose digits match `fixed` (qudit, level).
fn for_each_fixed(dims: &[usize], strides: &[usize], fixed: &[(usize, usize)], mut f: impl FnMut(usize)) {
    let mut inserts: Vec<(usize, usize, usize)> = fixed.iter().map(|&(q, v)| (strides[q], dims[q], v)).collect();
    inserts.sort_unstable_by_key(|&(stride, _, _)| std::cmp::Reverse(stride));
    let total: usize = dims.iter().product();
    walk_fixed(&inserts, 0, total, &mut f);
}

/// Recurses from the largest fixed stride down; the innermost run is contiguous.
fn walk_fixed(inserts: &[(usize, usize, usize)], base: usize, span: usize, f: &mut impl FnMut(usize)) {
    match inserts.split_first() {
        None => (base..base + span).for_each(f),
        Some((&(s, d, v), rest)) => {
            let block = s * d;
            for o in 0..span / block {
                walk_fixed(rest, base + o * block + v * s, s, f);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    dims: Vec<usize>,
    strides: Vec<usize>,
    amps: Vec<Complex64>,
}

/// Computational basis state with the given digit per qudit.
pub fn basis_state(dims: &[usize], digits: &[usize]) -> Result<StateVector, SimError> {
    let idx = encode(dims, digits)?;
    Ok(StateVector::from_index(dims, idx))
}

impl StateVector {
    pub fn from_index(dims: &[usize], index: usize) -> Self {
        let total: usize = dims.iter().product();
        let mut amps = vec![ZERO; total];
        amps[index] = ONE;
        StateVector { dims: dims.to_vec(), strides: strides_of(dims), amps }
    }

    pub fn from_amplitudes(dims: &[usize], amps: Vec<Complex64>) -> Self {
        assert_eq!(dims.iter().product::<usize>(), amps.len(), "amplitude count");
        StateVector { dims: dims.to_vec(), strides: strides_of(dims), amps }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// Largest entry-wise amplitude difference.
    pub fn distance(&self, other: &StateVector) -> f64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Total probability on basis states where one of `qudits` is on level ≥ 2.
    pub fn auxiliary_population(&self, qudits: &[usize]) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| qudits.iter().any(|&q| (i / self.strides[q]) % self.dims[q] >= 2))
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    pub fn apply(&mut self, gate: &Gate) {
        let (dims, strides) = (&self.dims, &self.strides);
        let amps = &mut self.amps;
        match gate {
            Gate::Xm { qudit, level } => {
                let off = level * strides[*qudit];
                for_each_fixed(dims, strides, &[(*qudit, 0)], |i| amps.swap(i, i + off));
            }
            Gate::Local { qudit, op } => {
                let m = op.matrix();
                let s = strides[*qudit];
                for_each_fixed(dims, strides, &[(*qudit, 0)], |i| {
                    let (a0, a1) = (amps[i], amps[i + s]);
                    amps[i] = m[0][0] * a0 + m[0][1] * a1;
                    amps[i + s] = m[1][0] * a0 + m[1][1] * a1;
                });
            }
            Gate::Cz { a, b } => {
                for_each_fixed(dims, strides, &[(*a, 1), (*b, 1)], |i| amps[i] = -amps[i]);
            }
            Gate::CzTheta { a, b, theta } => {
                let ph = Complex64::from_polar(1.0, *theta);
                for_each_fixed(dims, strides, &[(*a, 1), (*b, 1)], |i| amps[i] *= ph);
            }
            Gate::Cx { control, target } => {
                let s = strides[*target];
                for_each_fixed(dims, strides, &[(*control, 1), (*target, 0)], |i| amps.swap(i, i + s));
            }
            Gate::Block { control, targets, matrix, .. } => {
                let offsets = block_offsets(dims, strides, targets);
                let mut fixed = vec![(*control, 1)];
                fixed.extend(targets.iter().map(|&t| (t, 0)));
                let mut buf = vec![ZERO; offsets.len()];
                for_each_fixed(dims, strides, &fixed, |i| {
                    for (r, slot) in buf.iter_mut().enumerate() {
                        *slot = (0..offsets.len()).map(|c| matrix.get(r, c) * amps[i + offsets[c]]).sum();
                    }
                    for (r, &v) in buf.iter().enumerate() {
                        amps[i + offsets[r]] = v;
                    }
                });
            }
        }
    }
}

/// Index offset of every joint target basis state, first target most significant.
fn block_offsets(dims: &[usize], strides: &[usize], targets: &[usize]) -> Vec<usize> {
    let mut offsets = vec![0];
    for &t in targets {
        offsets = offsets.iter().flat_map(|&o| (0..dims[t]).map(move |x| o + x * strides[t])).collect();
    }
    offsets
}

/// Applies every gate in order.
pub fn run(circuit: &Circuit, mut state: StateVector) -> Result<StateVector, SimError> {
    if circuit.register().dims() != state.dims() {
        return Err(SimError::RegisterMismatch {
            circuit: circuit.register().dims().to_vec(),
            state: state.dims.clone(),
        });
    }
    for g in circuit.gates() {
        state.apply(g);
    }
    Ok(state)
}

// ---------------------------------------------------------------------------
// oracles

#[derive(Debug, Clone, PartialEq)]
pub enum OracleKind {
    /// −1 on the all-ones state.
    Cnz,
    /// Flip `target` iff every other qudit is 1.
    Cnx { target: usize },
    /// e^{iθ} on the all-ones state.
    CnzTheta { theta: f64 },
    /// `matrix` on `target` iff every other qudit is 1.
    Cnu { matrix: Mat2, target: usize },
    /// `matrix` on the joint space of `targets` iff every other qudit is 1.
    CnuMulti { targets: Vec<usize>, matrix: DenseMatrix },
}

/// Expected action of a multi-controlled gate, built from its definition.
#[derive(Debug, Clone, PartialEq)]
pub struct Oracle {
    kind: OracleKind,
    dims: Vec<usize>,
    strides: Vec<usize>,
    /// Qudits that must end in the qubit subspace for qubit-subspace inputs.
    restricted: Vec<usize>,
}

pub fn oracle(kind: OracleKind, dims: &[usize]) -> Result<Oracle, SimError> {
    let n = dims.len();
    if n < 2 {
        return Err(SimError::TooFewQudits);
    }
    if let Some((q, &d)) = dims.iter().enumerate().find(|(_, &d)| d < 2) {
        return Err(SimError::DigitOutOfRange { qudit: q, digit: d, dim: d });
    }
    let mut restricted: Vec<usize> = (0..n).collect();
    match &kind {
        OracleKind::Cnx { target } | OracleKind::Cnu { target, .. } if *target >= n => {
            return Err(SimError::BadOracle(format!("target {target} out of range")));
        }
        OracleKind::CnuMulti { targets, matrix } => {
            if targets.is_empty() || targets.len() >= n || targets.iter().any(|&t| t >= n) {
                return Err(SimError::BadOracle("targets must be a proper subset of the register".into()));
            }
            let d: usize = targets.iter().map(|&t| dims[t]).product();
            if matrix.dim() != d {
                return Err(SimError::BadOracle(format!(
                    "block matrix is {0}×{0}, targets span {d} levels",
                    matrix.dim()
                )));
            }
            restricted.retain(|q| !targets.contains(q));
        }
        _ => {}
    }
    Ok(Oracle { kind, dims: dims.to_vec(), strides: strides_of(dims), restricted })
}

impl Oracle {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn arity(&self) -> usize {
        self.dims.len()
    }

    /// Expected output for a basis input, as sparse `(index, amplitude)` pairs.
    pub fn expected(&self, digits: &[usize]) -> Vec<(usize, Complex64)> {
        let idx = encode(&self.dims, digits).expect("oracle input digits");
        let ones_except = |skip: &[usize]| digits.iter().enumerate().all(|(q, &x)| skip.contains(&q) || x == 1);
        match &self.kind {
            OracleKind::Cnz => {
                let ph = if ones_except(&[]) { -ONE } else { ONE };
                vec![(idx, ph)]
            }
            OracleKind::CnzTheta { theta } => {
                let ph = if ones_except(&[]) { Complex64::from_polar(1.0, *theta) } else { ONE };
                vec![(idx, ph)]
            }
            OracleKind::Cnx { target } => {
                let x = digits[*target];
                if ones_except(&[*target]) && x < 2 {
                    let s = self.strides[*target];
                    let flipped = if x == 0 { idx + s } else { idx - s };
                    vec![(flipped, ONE)]
                } else {
                    vec![(idx, ONE)]
                }
            }
            OracleKind::Cnu { matrix, target } => {
                let x = digits[*target];
                if ones_except(&[*target]) && x < 2 {
                    let base = idx - x * self.strides[*target];
                    vec![(base, matrix[0][x]), (base + self.strides[*target], matrix[1][x])]
                } else {
                    vec![(idx, ONE)]
                }
            }
            OracleKind::CnuMulti { targets, matrix } => {
                if !ones_except(targets) {
                    return vec![(idx, ONE)];
                }
                let offsets = block_offsets(&self.dims, &self.strides, targets);
                let col = targets.iter().fold(0, |acc, &t| acc * self.dims[t] + digits[t]);
                let base = idx - offsets[col];
                offsets
                    .iter()
                    .enumerate()
                    .map(|(row, &o)| (base + o, matrix.get(row, col)))
                    .filter(|(_, a)| *a != ZERO)
                    .collect()
            }
        }
    }
}

// ---------------------------------------------------------------------------
// verification

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub tolerance: f64,
    pub leakage_tolerance: f64,
    /// Above this many qubit-subspace inputs, sample this many at random
    /// (plus the all-ones input).
    pub exhaustive_limit: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { tolerance: 1e-10, leakage_tolerance: 1e-12, exhaustive_limit: 4096, seed: 0x5eed }
    }
}

impl VerifyOptions {
    /// Amplitude tolerance `tol`; leakage tolerance is the tighter of `tol` and 1e-12.
    pub fn with_tolerance(tol: f64) -> Self {
        VerifyOptions { tolerance: tol, leakage_tolerance: tol.min(1e-12), ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub max_amplitude_error: f64,
    pub leakage: f64,
    pub basis_states_tested: usize,
    pub tolerance: f64,
    pub leakage_tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failing_input: Option<String>,
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "verdict:            {}", if self.pass { "PASS" } else { "FAIL" })?;
        writeln!(f, "basis states:       {}", self.basis_states_tested)?;
        writeln!(f, "max amplitude err:  {:.3e} (tolerance {:.1e})", self.max_amplitude_error, self.tolerance)?;
        write!(f, "auxiliary leakage:  {:.3e} (tolerance {:.1e})", self.leakage, self.leakage_tolerance)?;
        if let Some(input) = &self.failing_input {
            write!(f, "\nfirst failing input: |{input}⟩")?;
        }
        Ok(())
    }
}

fn label(digits: &[usize]) -> String {
    if digits.iter().all(|&d| d < 10) {
        digits.iter().map(usize::to_string).collect()
    } else {
        digits.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
    }
}

fn qubit_inputs(n: usize, opts: &VerifyOptions) -> Vec<Vec<usize>> {
    let bits = |mask: u64| (0..n).map(|q| ((mask >> (n - 1 - q)) & 1) as usize).collect::<Vec<_>>();
    if n < 63 && (1u64 << n) as usize <= opts.exhaustive_limit {
        return (0..1u64 << n).map(bits).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut inputs: Vec<Vec<usize>> =
        (0..opts.exhaustive_limit).map(|_| (0..n).map(|_| rng.gen_range(0..2)).collect()).collect();
    inputs.push(vec![1; n]);
    inputs
}

/// Runs the circuit on qubit-subspace basis inputs and compares each full
/// output vector with the oracle.
pub fn verify(circuit: &Circuit, oracle: &Oracle, opts: &VerifyOptions) -> Result<VerificationReport, SimError> {
    let dims = circuit.register().dims();
    if dims.len() != oracle.arity() {
        return Err(SimError::ArityMismatch { oracle: oracle.arity(), circuit: dims.len() });
    }
    if dims != oracle.dims() {
        return Err(SimError::RegisterMismatch { circuit: dims.to_vec(), state: oracle.dims().to_vec() });
    }
    let inputs = qubit_inputs(dims.len(), opts);
    let results: Vec<(f64, f64)> = inputs
        .par_iter()
        .map(|digits| {
            let input = basis_state(dims, digits).expect("qubit input");
            let out = run(circuit, input).expect("register checked");
            let mut diff = out.amps.clone();
            for (i, e) in oracle.expected(digits) {
                diff[i] -= e;
            }
            let err = diff.iter().map(|d| d.norm()).fold(0.0, f64::max);
            (err, out.auxiliary_population(&oracle.restricted))
        })
        .collect();

    let max_err = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let leakage = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let failing = results
        .iter()
        .position(|&(e, l)| !(e <= opts.tolerance && l <= opts.leakage_tolerance))
        .map(|i| label(&inputs[i]));
    Ok(VerificationReport {
        max_amplitude_error: max_err,
        leakage,
        basis_states_tested: inputs.len(),
        tolerance: opts.tolerance,
        leakage_tolerance: opts.leakage_tolerance,
        pass: failing.is_none(),
        failing_input: failing,
    })
}

/// Confirms a circuit of `X_m`, `X` and `CX` gates permutes the full
/// mixed-radix basis without phases and returns the permutation.
///
/// The table is computed by classical digit tracking and then checked against
/// the simulator on a state with distinct amplitudes on every basis state.
pub fn check_basis_permutation(circuit: &Circuit) -> Result<Vec<usize>, SimError> {
    for (index, g) in circuit.gates().iter().enumerate() {
        let ok = matches!(g, Gate::Xm { .. } | Gate::Cx { .. } | Gate::Local { op: LocalGate::X, .. });
        if !ok {
            return Err(SimError::NotPermutationGate { index, gate: g.to_string() });
        }
    }
    let dims = circuit.register().dims();
    let total = circuit.register().total_dimension();
    let perm: Vec<usize> = (0..total)
        .into_par_iter()
        .map(|i| {
            let mut d = decode(dims, i);
            for g in circuit.gates() {
                match *g {
                    Gate::Xm { qudit, level } => {
                        if d[qudit] == 0 {
                            d[qudit] = level;
                        } else if d[qudit] == level {
                            d[qudit] = 0;
                        }
                    }
                    Gate::Local { qudit, .. } if d[qudit] < 2 => d[qudit] ^= 1,
                    Gate::Cx { control, target } if d[control] == 1 && d[target] < 2 => d[target] ^= 1,
                    _ => {}
                }
            }
            encode(dims, &d).expect("digits stay in range")
        })
        .collect();

    let mut hit = vec![false; total];
    for (i, &p) in perm.iter().enumerate() {
        if std::mem::replace(&mut hit[p], true) {
            return Err(SimError::PermutationMismatch { input: i });
        }
    }
    let amps: Vec<Complex64> = (0..total).map(|i| Complex64::new((i + 1) as f64, 0.0)).collect();
    let out = run(circuit, StateVector::from_amplitudes(dims, amps.clone()))?;
    if let Some(i) = (0..total).find(|&i| out.amps[perm[i]] != amps[i]) {
        return Err(SimError::PermutationMismatch { input: i });
    }
    Ok(perm)
}
