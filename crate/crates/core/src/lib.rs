//! Synthesis of multi-controlled gates on mixed-dimension qudit hardware.
//!
//! The coupling graph is reduced to a spanning tree rooted at its center,
//! the tree is annotated with the qudit dimensions each node needs, and a
//! fold / basic operation / unfold circuit is emitted that uses only
//! nearest-neighbor two-qudit gates. A state-vector simulator over the
//! mixed-radix register checks the result against the gate's definition.

pub mod circuit;
pub mod cli;
pub mod sim;
pub mod synth;
pub mod topology;
