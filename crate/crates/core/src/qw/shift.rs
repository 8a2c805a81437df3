use crate::error::{Error, Result};
use crate::graph::PortGraph;

/// Named shift families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftKind {
    /// `(v, c) -> (eta(v, c), c)`; valid only when each port induces a permutation of vertices.
    Moving,
    /// `(v, c) -> (eta(v, c), sigma(v, eta(v, c)))` with the default sigma.
    Arc,
    /// Leaves every basis state in place. Does not follow edges.
    Identity,
}

/// A permutation of the (vertex, port) basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shift {
    target: Vec<usize>,
    follows_edges: bool,
}

impl Shift {
    pub fn build(graph: &PortGraph, kind: ShiftKind) -> Result<Self> {
        match kind {
            ShiftKind::Moving => Self::moving(graph),
            ShiftKind::Arc => Ok(Self::arc(graph)),
            ShiftKind::Identity => Ok(Self::identity(graph)),
        }
    }

    pub fn moving(graph: &PortGraph) -> Result<Self> {
        let target = (0..graph.basis_len())
            .map(|i| {
                let (v, c) = graph.basis_state(i);
                let u = graph.neighbors(v)[c];
                graph.basis_index(u, c).map_err(|_| {
                    Error::InvalidShift(format!(
                        "moving shift sends ({v}, {c}) to vertex {u}, which has degree {}",
                        graph.degree(u)
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_targets(graph, target).map_err(|e| match e {
            Error::InvalidShift(msg) => Error::InvalidShift(format!(
                "moving shift is not a permutation under this port ordering ({msg})"
            )),
            other => other,
        })
    }

    /// Shift built from the default port convention: the amplitude leaving
    /// `v` through port `c` lands on the port of `eta(v, c)` that points back at `v`.
    pub fn arc(graph: &PortGraph) -> Self {
        let target = (0..graph.basis_len())
            .map(|i| {
                let (v, c) = graph.basis_state(i);
                let u = graph.neighbors(v)[c];
                let back = graph.sigma(v, u).expect("graphs are symmetric");
                graph.offset(u) + back
            })
            .collect();
        Self {
            target,
            follows_edges: true,
        }
    }

    pub fn identity(graph: &PortGraph) -> Self {
        Self {
            target: (0..graph.basis_len()).collect(),
            follows_edges: false,
        }
    }

    /// Explicit shift from `(vertex, port)` images of each basis state in
    /// basis order. Must be a permutation that moves `(v, c)` to `eta(v, c)`.
    pub fn explicit(graph: &PortGraph, images: &[(usize, usize)]) -> Result<Self> {
        if images.len() != graph.basis_len() {
            return Err(Error::InvalidShift(format!(
                "{} images for a basis of {}",
                images.len(),
                graph.basis_len()
            )));
        }
        let target = images
            .iter()
            .map(|&(v, c)| graph.basis_index(v, c))
            .collect::<Result<Vec<_>>>()?;
        let shift = Self::from_targets(graph, target)?;
        if !shift.follows_edges {
            return Err(Error::InvalidShift(
                "explicit shift must send (v, c) to a state on eta(v, c)".into(),
            ));
        }
        Ok(shift)
    }

    fn from_targets(graph: &PortGraph, target: Vec<usize>) -> Result<Self> {
        let mut hit = vec![false; target.len()];
        for (i, &j) in target.iter().enumerate() {
            if j >= target.len() {
                return Err(Error::InvalidShift(format!("image {j} out of range")));
            }
            if std::mem::replace(&mut hit[j], true) {
                let (v, c) = graph.basis_state(i);
                let (u, p) = graph.basis_state(j);
                return Err(Error::InvalidShift(format!(
                    "({v}, {c}) collides on ({u}, {p})"
                )));
            }
        }
        let follows_edges = target.iter().enumerate().all(|(i, &j)| {
            let (v, c) = graph.basis_state(i);
            graph.vertex_of(j) == graph.neighbors(v)[c]
        });
        Ok(Self {
            target,
            follows_edges,
        })
    }

    /// Basis index receiving the amplitude of basis index `i`.
    pub fn image(&self, i: usize) -> usize {
        self.target[i]
    }

    pub fn targets(&self) -> &[usize] {
        &self.target
    }

    pub fn len(&self) -> usize {
        self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }

    /// Whether every image lies on the out-neighbor selected by the port.
    pub fn follows_edges(&self) -> bool {
        self.follows_edges
    }

    pub fn check_dimensions(&self, graph: &PortGraph) -> Result<()> {
        if self.target.len() != graph.basis_len() {
            return Err(Error::DimensionMismatch(format!(
                "shift acts on {} states, graph basis has {}",
                self.target.len(),
                graph.basis_len()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Ordering;

    #[test]
    fn moving_shift_on_cycle() {
        let g = PortGraph::cycle(4).unwrap();
        let s = Shift::moving(&g).unwrap();
        assert_eq!(s.image(g.basis_index(0, 0).unwrap()), g.basis_index(1, 0).unwrap());
        assert_eq!(s.image(g.basis_index(0, 1).unwrap()), g.basis_index(3, 1).unwrap());
        assert!(s.follows_edges());
    }

    #[test]
    fn moving_shift_rejected_on_sorted_cycle() {
        // sorted ports give vertices 0 and 2 the same port towards 1
        let g = PortGraph::from_edges(4, &[[0, 1], [1, 2], [2, 3], [3, 0]], &Ordering::sorted())
            .unwrap();
        assert!(matches!(Shift::moving(&g), Err(Error::InvalidShift(_))));
    }

    #[test]
    fn arc_shift_matches_sigma() {
        let g = PortGraph::complete(5).unwrap();
        let s = Shift::arc(&g);
        for i in 0..g.basis_len() {
            let (v, c) = g.basis_state(i);
            let u = g.eta(v, c).unwrap();
            assert_eq!(g.basis_state(s.image(i)), (u, g.sigma(v, u).unwrap()));
        }
    }

    #[test]
    fn explicit_shift_validation() {
        let g = PortGraph::cycle(3).unwrap();
        let images: Vec<_> = (0..g.basis_len())
            .map(|i| {
                let (v, c) = g.basis_state(i);
                (g.eta(v, c).unwrap(), c)
            })
            .collect();
        assert!(Shift::explicit(&g, &images).is_ok());
        let mut clash = images.clone();
        clash[1] = clash[0];
        assert!(Shift::explicit(&g, &clash).is_err());
        let stay: Vec<_> = (0..g.basis_len()).map(|i| g.basis_state(i)).collect();
        assert!(Shift::explicit(&g, &stay).is_err());
    }
}
