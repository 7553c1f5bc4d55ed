//! C^{N-1}Z benchmark sweeps over topology families.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::family::TopologyFamily;
use super::plan::PlannedTopology;
use crate::synth::{synth_cnz, synth_cnz_theta, SynthError};
use crate::topology::{Purpose, TopologyError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchRow {
    pub family: String,
    pub n: usize,
    pub two_qudit_count: usize,
    /// Count of C^{N-1}Z_θ with CZ_θ lowered to CZ.
    pub lowered_count: usize,
    pub depth: usize,
    pub height: usize,
    pub max_dim: usize,
    /// Qubit-only reference `12N − 23`.
    pub reference_count: usize,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("{family}: two-qudit count {count} differs from 2N-3 = {expected}")]
    CountMismatch { family: String, count: usize, expected: usize },
}

pub fn bench_row(family: &TopologyFamily) -> Result<BenchRow, BenchError> {
    let label = family.to_string();
    let planned = PlannedTopology::new(label.clone(), family.graph()?, None, Purpose::ControlledPhase)?;
    let n = planned.tree.len();
    let circuit = synth_cnz(&planned.synthesis_plan(false, false))?;
    let count = circuit.two_qudit_count();
    let expected = (2 * n).saturating_sub(3);
    if count != expected {
        return Err(BenchError::CountMismatch { family: label, count, expected });
    }
    let lowered = synth_cnz_theta(&planned.synthesis_plan(false, true), FRAC_PI_2)?;
    Ok(BenchRow {
        family: label,
        n,
        two_qudit_count: count,
        lowered_count: lowered.two_qudit_count(),
        depth: circuit.depth(),
        height: planned.tree.height(),
        max_dim: planned.minimal.iter().copied().max().unwrap_or(2),
        reference_count: (12 * n).saturating_sub(23),
    })
}

/// Rows in input order; the first failing family aborts the sweep.
pub fn run_bench(families: &[TopologyFamily]) -> Result<Vec<BenchRow>, BenchError> {
    families.iter().map(bench_row).collect()
}

pub fn render_table(rows: &[BenchRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<16} {:>4} {:>6} {:>8} {:>6} {:>7} {:>7} {:>10}",
        "family", "N", "count", "lowered", "depth", "height", "max-dim", "12N-23"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:<16} {:>4} {:>6} {:>8} {:>6} {:>7} {:>7} {:>10}",
            r.family, r.n, r.two_qudit_count, r.lowered_count, r.depth, r.height, r.max_dim, r.reference_count
        );
    }
    s
}
