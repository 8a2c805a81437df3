//! Port-labeled symmetric graphs.
//!
//! Every undirected edge `{u, v}` becomes the two arcs `(u, v)` and `(v, u)`.
//! Each vertex `v` owns an ordered list of out-neighbors; the position of a
//! neighbor in that list is its *port*. The walk basis is the set of pairs
//! `(v, c)` with `c < d(v)`, enumerated vertex-major.
//!
//! Three maps are derived from the lists:
//!
//! * `eta(v, c)`: the `c`-th out-neighbor of `v`;
//! * `sigma(u, v)`: the port of `v` associated with its in-neighbor `u`,
//!   taken to be the position of `u` in `v`'s list;
//! * `sigma_inv(v, u)`: the port of `u` that points at `v`.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// How a graph was produced. Generators that know their geometry keep it so
/// that specialised algorithms (the torus recursion) and coordinate output
/// can check applicability.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Layout {
    Generic,
    /// Periodic lattice; vertex `x_0 + dims[0] * (x_1 + dims[1] * ...)`,
    /// port `2i` steps `+1` along axis `i` and port `2i + 1` steps `-1`.
    Torus { dims: Vec<usize> },
    Complete,
}

/// Neighbor ordering used by [`PortGraph::from_edges`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Ordering {
    /// The literal string `"sorted"`: ports follow increasing vertex id.
    Named(NamedOrdering),
    /// Explicit per-vertex neighbor lists.
    Explicit(Vec<Vec<usize>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedOrdering {
    Sorted,
}

impl Ordering {
    pub fn sorted() -> Self {
        Ordering::Named(NamedOrdering::Sorted)
    }
}

/// JSON graph document: `{"n": 4, "edges": [[0,1],...], "ordering": "sorted"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default = "Ordering::sorted")]
    pub ordering: Ordering,
}

impl GraphDocument {
    pub fn build(&self) -> Result<PortGraph> {
        PortGraph::from_edges(self.n, &self.edges, &self.ordering)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortGraph {
    out_neighbors: Vec<Vec<usize>>,
    /// `offsets[v]` is the basis index of `(v, 0)`; `offsets[n]` is the basis size.
    offsets: Vec<usize>,
    /// Per vertex, `(neighbor, port)` sorted by neighbor for reverse lookups.
    reverse: Vec<Vec<(usize, usize)>>,
    basis_vertex: Vec<usize>,
    layout: Layout,
}

impl PortGraph {
    /// Builds a graph from undirected edges. Vertex ids must lie in `0..n`;
    /// self-loops, duplicates and isolated vertices are rejected.
    pub fn from_edges(n: usize, edges: &[[usize; 2]], ordering: &Ordering) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut adjacency = vec![Vec::new(); n];
        for &[u, v] in edges {
            if u >= n {
                return Err(Error::VertexOutOfRange(u));
            }
            if v >= n {
                return Err(Error::VertexOutOfRange(v));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::InvalidGraph(format!("duplicate edge {{{u}, {v}}}")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        if let Some(v) = adjacency.iter().position(Vec::is_empty) {
            return Err(Error::IsolatedVertex(v));
        }
        match ordering {
            Ordering::Named(NamedOrdering::Sorted) => {
                for list in &mut adjacency {
                    list.sort_unstable();
                }
                Self::from_neighbor_lists(adjacency, Layout::Generic)
            }
            Ordering::Explicit(lists) => {
                if lists.len() != n {
                    return Err(Error::InvalidGraph(format!(
                        "ordering lists {} vertices, graph has {n}",
                        lists.len()
                    )));
                }
                for (v, (given, actual)) in lists.iter().zip(&adjacency).enumerate() {
                    let mut a = given.clone();
                    let mut b = actual.clone();
                    a.sort_unstable();
                    b.sort_unstable();
                    if a != b {
                        return Err(Error::InvalidGraph(format!(
                            "ordering for vertex {v} is not a permutation of its neighbors"
                        )));
                    }
                }
                Self::from_neighbor_lists(lists.clone(), Layout::Generic)
            }
        }
    }

    /// Builds a graph directly from ordered out-neighbor lists. The lists
    /// must describe a simple symmetric graph without isolated vertices.
    pub fn from_neighbor_lists(out_neighbors: Vec<Vec<usize>>, layout: Layout) -> Result<Self> {
        let n = out_neighbors.len();
        if n == 0 {
            return Err(Error::InvalidGraph("graph has no vertices".into()));
        }
        let mut reverse = Vec::with_capacity(n);
        for (v, list) in out_neighbors.iter().enumerate() {
            if list.is_empty() {
                return Err(Error::IsolatedVertex(v));
            }
            let mut pairs: Vec<(usize, usize)> =
                list.iter().enumerate().map(|(c, &u)| (u, c)).collect();
            pairs.sort_unstable();
            for w in pairs.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::InvalidGraph(format!(
                        "multi-edge between {v} and {}",
                        w[0].0
                    )));
                }
            }
            for &(u, _) in &pairs {
                if u >= n {
                    return Err(Error::VertexOutOfRange(u));
                }
                if u == v {
                    return Err(Error::InvalidGraph(format!("self-loop at vertex {v}")));
                }
            }
            reverse.push(pairs);
        }
        for (v, list) in out_neighbors.iter().enumerate() {
            for &u in list {
                if reverse[u].binary_search_by_key(&v, |&(w, _)| w).is_err() {
                    return Err(Error::InvalidGraph(format!(
                        "arc ({v}, {u}) has no reverse arc"
                    )));
                }
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut basis_vertex = Vec::new();
        offsets.push(0);
        for (v, list) in out_neighbors.iter().enumerate() {
            basis_vertex.extend(std::iter::repeat_n(v, list.len()));
            offsets.push(basis_vertex.len());
        }
        Ok(Self {
            out_neighbors,
            offsets,
            reverse,
            basis_vertex,
            layout,
        })
    }

    /// Cycle on `n ≥ 3` vertices; port 0 steps to `v + 1`, port 1 to `v - 1`.
    pub fn cycle(n: usize) -> Result<Self> {
        Self::torus(&[n])
    }

    /// Periodic lattice with the given side lengths (each at least 3).
    pub fn torus(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidGraph("torus needs at least one axis".into()));
        }
        if let Some(&d) = dims.iter().find(|&&d| d < 3) {
            return Err(Error::InvalidGraph(format!(
                "torus side {d} would create loops or multi-edges; sides must be >= 3"
            )));
        }
        let n: usize = dims.iter().product();
        let mut lists = Vec::with_capacity(n);
        for v in 0..n {
            let coords = torus_coords(dims, v);
            let mut list = Vec::with_capacity(2 * dims.len());
            for axis in 0..dims.len() {
                for delta in [1, dims[axis] - 1] {
                    let mut c = coords.clone();
                    c[axis] = (c[axis] + delta) % dims[axis];
                    list.push(torus_index(dims, &c));
                }
            }
            lists.push(list);
        }
        Self::from_neighbor_lists(
            lists,
            Layout::Torus {
                dims: dims.to_vec(),
            },
        )
    }

    /// Complete graph `K_n`, sorted ports.
    pub fn complete(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::IsolatedVertex(0));
        }
        let lists = (0..n)
            .map(|v| (0..n).filter(|&u| u != v).collect())
            .collect();
        Self::from_neighbor_lists(lists, Layout::Complete)
    }

    /// Random `degree`-regular simple graph from the union of `degree / 2`
    /// random permutations. Port `2i` follows permutation `i` forward and
    /// port `2i + 1` follows it backward, so the moving shift is a bijection.
    pub fn random_regular(n: usize, degree: usize, seed: u64) -> Result<Self> {
        if degree == 0 || !degree.is_multiple_of(2) {
            return Err(Error::InvalidGraph(format!(
                "random regular degree must be even and positive, got {degree}"
            )));
        }
        if degree >= n {
            return Err(Error::InvalidGraph(format!(
                "degree {degree} too large for {n} vertices"
            )));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        'attempt: for _ in 0..10_000 {
            let mut forward: Vec<Vec<usize>> = Vec::with_capacity(degree / 2);
            let mut edges = BTreeSet::new();
            for _ in 0..degree / 2 {
                let mut perm: Vec<usize> = (0..n).collect();
                perm.shuffle(&mut rng);
                for (u, &v) in perm.iter().enumerate() {
                    if u == v || !edges.insert((u.min(v), u.max(v))) {
                        continue 'attempt;
                    }
                }
                forward.push(perm);
            }
            let mut lists = vec![Vec::with_capacity(degree); n];
            for perm in &forward {
                let mut inverse = vec![0; n];
                for (u, &v) in perm.iter().enumerate() {
                    inverse[v] = u;
                }
                for u in 0..n {
                    lists[u].push(perm[u]);
                    lists[u].push(inverse[u]);
                }
            }
            return Self::from_neighbor_lists(lists, Layout::Generic);
        }
        Err(Error::InvalidGraph(format!(
            "could not draw a simple {degree}-regular graph on {n} vertices"
        )))
    }

    pub fn num_vertices(&self) -> usize {
        self.out_neighbors.len()
    }

    /// Size of the (vertex, port) basis, equal to the number of arcs.
    pub fn basis_len(&self) -> usize {
        self.basis_vertex.len()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.out_neighbors[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.out_neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.out_neighbors[v]
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn offset(&self, v: usize) -> usize {
        self.offsets[v]
    }

    /// Flattened index of `(v, c)`.
    pub fn basis_index(&self, v: usize, c: usize) -> Result<usize> {
        self.check_port(v, c)?;
        Ok(self.offsets[v] + c)
    }

    /// Inverse of [`basis_index`](Self::basis_index).
    pub fn basis_state(&self, index: usize) -> (usize, usize) {
        let v = self.basis_vertex[index];
        (v, index - self.offsets[v])
    }

    pub fn vertex_of(&self, index: usize) -> usize {
        self.basis_vertex[index]
    }

    pub fn eta(&self, v: usize, c: usize) -> Result<usize> {
        self.check_port(v, c)?;
        Ok(self.out_neighbors[v][c])
    }

    /// Port of `v` associated with in-neighbor `u`.
    pub fn sigma(&self, u: usize, v: usize) -> Result<usize> {
        self.position(u, v)
    }

    /// Port of `u` whose out-neighbor is `v`, so that `sigma_inv(eta(u, c), u) == c`.
    pub fn sigma_inv(&self, v: usize, u: usize) -> Result<usize> {
        self.position(v, u)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.num_vertices() && self.position(v, u).is_ok()
    }

    /// SHA-256 over the ordered neighbor lists; identifies the graph in run manifests.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for list in &self.out_neighbors {
            hasher.update((list.len() as u64).to_le_bytes());
            for &u in list {
                hasher.update((u as u64).to_le_bytes());
            }
        }
        hex::encode(hasher.finalize())
    }

    /// Torus coordinates of `v` when the graph came from a torus generator.
    pub fn coordinates(&self, v: usize) -> Option<Vec<usize>> {
        match &self.layout {
            Layout::Torus { dims } => Some(torus_coords(dims, v)),
            _ => None,
        }
    }

    /// Position of `needle` in `owner`'s out-neighbor list.
    fn position(&self, needle: usize, owner: usize) -> Result<usize> {
        if owner >= self.num_vertices() {
            return Err(Error::VertexOutOfRange(owner));
        }
        self.reverse[owner]
            .binary_search_by_key(&needle, |&(w, _)| w)
            .map(|i| self.reverse[owner][i].1)
            .map_err(|_| Error::NotAdjacent(needle, owner))
    }

    fn check_port(&self, v: usize, c: usize) -> Result<()> {
        if v >= self.num_vertices() {
            return Err(Error::VertexOutOfRange(v));
        }
        let degree = self.degree(v);
        if c >= degree {
            return Err(Error::PortOutOfRange {
                vertex: v,
                port: c,
                degree,
            });
        }
        Ok(())
    }
}

pub(crate) fn torus_coords(dims: &[usize], mut v: usize) -> Vec<usize> {
    dims.iter()
        .map(|&d| {
            let x = v % d;
            v /= d;
            x
        })
        .collect()
}

pub(crate) fn torus_index(dims: &[usize], coords: &[usize]) -> usize {
    coords
        .iter()
        .zip(dims)
        .rev()
        .fold(0, |acc, (&x, &d)| acc * d + x)
}

/// `K` walkers on a base graph, viewed as one walker on `V^K`.
///
/// Vertex tuples are encoded as mixed-radix integers with the first walker
/// most significant. Nothing of size `|V|^K` is ever allocated here.
#[derive(Debug, Clone, Copy)]
pub struct ProductGraph<'g> {
    base: &'g PortGraph,
    walkers: usize,
}

impl<'g> ProductGraph<'g> {
    pub fn new(base: &'g PortGraph, walkers: usize) -> Result<Self> {
        if walkers == 0 {
            return Err(Error::Invalid("at least one walker is required".into()));
        }
        base.num_vertices()
            .checked_pow(walkers as u32)
            .ok_or_else(|| Error::Invalid("vertex tuple space overflows usize".into()))?;
        Ok(Self { base, walkers })
    }

    pub fn base(&self) -> &'g PortGraph {
        self.base
    }

    pub fn walkers(&self) -> usize {
        self.walkers
    }

    pub fn num_vertices(&self) -> usize {
        self.base.num_vertices().pow(self.walkers as u32)
    }

    pub fn encode(&self, tuple: &[usize]) -> Result<usize> {
        self.check_tuple(tuple)?;
        let n = self.base.num_vertices();
        Ok(tuple.iter().fold(0, |acc, &v| acc * n + v))
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let n = self.base.num_vertices();
        let mut tuple = vec![0; self.walkers];
        for slot in tuple.iter_mut().rev() {
            *slot = index % n;
            index /= n;
        }
        tuple
    }

    /// `d(u) = Π d(u_i)`.
    pub fn degree(&self, tuple: &[usize]) -> Result<usize> {
        self.check_tuple(tuple)?;
        Ok(tuple.iter().map(|&v| self.base.degree(v)).product())
    }

    /// `(u, v)` is an arc of the product graph iff every `(u_i, v_i)` is a base arc.
    pub fn has_edge(&self, u: &[usize], v: &[usize]) -> bool {
        u.len() == self.walkers
            && v.len() == self.walkers
            && u.iter().zip(v).all(|(&a, &b)| self.base.has_edge(a, b))
    }

    /// Out-neighbors of a tuple in port-tuple order (last walker's port fastest).
    pub fn out_neighbors(&self, tuple: &[usize]) -> Result<Vec<Vec<usize>>> {
        let degree = self.degree(tuple)?;
        let mut out = Vec::with_capacity(degree);
        let mut ports = vec![0usize; self.walkers];
        for _ in 0..degree {
            out.push(
                tuple
                    .iter()
                    .zip(&ports)
                    .map(|(&v, &c)| self.base.neighbors(v)[c])
                    .collect(),
            );
            for i in (0..self.walkers).rev() {
                ports[i] += 1;
                if ports[i] < self.base.degree(tuple[i]) {
                    break;
                }
                ports[i] = 0;
            }
        }
        Ok(out)
    }

    fn check_tuple(&self, tuple: &[usize]) -> Result<()> {
        if tuple.len() != self.walkers {
            return Err(Error::TupleArity {
                expected: self.walkers,
                got: tuple.len(),
            });
        }
        if let Some(&v) = tuple.iter().find(|&&v| v >= self.base.num_vertices()) {
            return Err(Error::VertexOutOfRange(v));
        }
        Ok(())
    }
}
