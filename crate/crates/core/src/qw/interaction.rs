use std::collections::BTreeMap;

use num_complex::Complex64;

use super::coin::{check_unitary, Block, UNITARITY_TOL};
use crate::error::{Error, Result};
use crate::graph::PortGraph;

/// Unitary coupling of `K` walkers that never changes their positions:
/// block diagonal in the vertex tuple, acting on the joint port space.
#[derive(Debug, Clone, PartialEq)]
pub enum Interaction {
    Identity,
    /// Phase `e^{iφ}` on every state where all walkers share a vertex.
    CoincidencePhase { phi: f64 },
    /// Blocks keyed by vertex tuple; tuples without a block are left alone.
    /// Joint port order has the last walker's port fastest.
    Explicit(BTreeMap<Vec<usize>, Block>),
}

impl Interaction {
    pub fn validate(&self, graph: &PortGraph, walkers: usize) -> Result<()> {
        let Interaction::Explicit(blocks) = self else {
            return Ok(());
        };
        for (tuple, block) in blocks {
            if tuple.len() != walkers {
                return Err(Error::TupleArity {
                    expected: walkers,
                    got: tuple.len(),
                });
            }
            if let Some(&v) = tuple.iter().find(|&&v| v >= graph.num_vertices()) {
                return Err(Error::VertexOutOfRange(v));
            }
            let dim: usize = tuple.iter().map(|&v| graph.degree(v)).product();
            if block.nrows() != dim || block.ncols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "interaction block for {tuple:?} is {}x{}, joint port space is {dim}",
                    block.nrows(),
                    block.ncols()
                )));
            }
            check_unitary(block, UNITARITY_TOL).map_err(|condition| {
                Error::NonUnitaryInteraction {
                    tuple: tuple.clone(),
                    condition,
                }
            })?;
        }
        Ok(())
    }

    pub(crate) fn apply(&self, graph: &PortGraph, walkers: usize, amps: &mut [Complex64]) {
        let basis = graph.basis_len();
        match self {
            Interaction::Identity => {}
            Interaction::CoincidencePhase { phi } => {
                let phase = Complex64::from_polar(1.0, *phi);
                for (mut idx, a) in amps.iter_mut().enumerate() {
                    let first = graph.vertex_of(idx % basis);
                    let mut together = true;
                    for _ in 1..walkers {
                        idx /= basis;
                        if graph.vertex_of(idx % basis) != first {
                            together = false;
                            break;
                        }
                    }
                    if together {
                        *a *= phase;
                    }
                }
            }
            Interaction::Explicit(blocks) => {
                for (tuple, block) in blocks {
                    let indices = joint_indices(graph, tuple);
                    let local = nalgebra::DVector::from_iterator(
                        indices.len(),
                        indices.iter().map(|&i| amps[i]),
                    );
                    let out = block * local;
                    for (&i, z) in indices.iter().zip(out.iter()) {
                        amps[i] = *z;
                    }
                }
            }
        }
    }
}

/// Tensor-basis indices of `|tuple, c⟩` for every joint port `c`, last walker fastest.
pub(crate) fn joint_indices(graph: &PortGraph, tuple: &[usize]) -> Vec<usize> {
    let basis = graph.basis_len();
    let mut indices = vec![0usize];
    for &v in tuple {
        let base = graph.offset(v);
        indices = indices
            .iter()
            .flat_map(|&i| (0..graph.degree(v)).map(move |c| i * basis + base + c))
            .collect();
    }
    indices
}
