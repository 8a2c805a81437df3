//! Random walks that reproduce a quantum walk's vertex distributions.
//!
//! Given consecutive states `ψ(t)` and `ψ(t+1) = S W U ψ(t)`, the column of
//! source vertex `u` is
//!
//! ```text
//! p_vu(t) = ρ(v, c, t+1) / ρ(u, t)   where (v, c) is the image of the port of u pointing at v,
//! p_vu(t) = 1 / d(u)                  when ρ(u, t) is zero,
//! ```
//!
//! and `ρ(t+1) = P(t) ρ(t)` holds exactly. For `K` walkers the same formula
//! runs on vertex tuples of the product graph.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{PortGraph, ProductGraph};
use crate::qw::{Shift, Walk, WaveFunction};

/// `ρ(u, t)` at or below this is treated as zero.
pub const ZERO_THRESHOLD: f64 = 1e-14;
/// Columns whose sum is this close to one are rescaled to sum to one.
pub const RESCALE_TOL: f64 = 1e-10;
/// Column-sum deviation beyond which strict construction fails.
pub const CONSISTENCY_TOL: f64 = 1e-8;

/// Which tuple columns a multi-walker matrix stores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Materialize {
    /// Columns with `ρ(u, t)` above the zero threshold.
    Support,
    /// Support plus its out-neighbors in the product graph.
    Halo,
    /// Every vertex tuple.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    pub zero_threshold: f64,
    /// Fail on column sums off by more than [`CONSISTENCY_TOL`]; otherwise keep them as they are.
    pub strict: bool,
    pub materialize: Materialize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            zero_threshold: ZERO_THRESHOLD,
            strict: true,
            materialize: Materialize::Halo,
        }
    }
}

/// States of the random walk: vertices, or vertex tuples for several walkers
/// encoded with the first walker most significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSpace {
    pub vertices: usize,
    pub walkers: usize,
}

impl StateSpace {
    pub fn len(&self) -> usize {
        self.vertices.pow(self.walkers as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn decode(&self, mut state: usize) -> Vec<usize> {
        let mut tuple = vec![0; self.walkers];
        for slot in tuple.iter_mut().rev() {
            *slot = state % self.vertices;
            state /= self.vertices;
        }
        tuple
    }

    pub fn encode(&self, tuple: &[usize]) -> Result<usize> {
        if tuple.len() != self.walkers {
            return Err(Error::TupleArity {
                expected: self.walkers,
                got: tuple.len(),
            });
        }
        tuple.iter().try_fold(0, |acc, &v| {
            if v >= self.vertices {
                Err(Error::VertexOutOfRange(v))
            } else {
                Ok(acc * self.vertices + v)
            }
        })
    }

    /// `u1|u2|...`, or the plain vertex id for one walker.
    pub fn label(&self, state: usize) -> String {
        self.decode(state)
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join("|")
    }

    pub fn parse_label(&self, label: &str) -> Result<usize> {
        let tuple = label
            .split('|')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Invalid(format!("bad state label {label:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        self.encode(&tuple)
    }
}

/// Column-stochastic matrix `P(t)`, stored sparsely by source state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    time: usize,
    size: usize,
    columns: BTreeMap<usize, Vec<(usize, f64)>>,
}

impl TransitionMatrix {
    pub fn new(time: usize, size: usize) -> Self {
        Self {
            time,
            size,
            columns: BTreeMap::new(),
        }
    }

    pub fn time(&self) -> usize {
        self.time
    }

    /// Number of states (rows and columns).
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn insert_column(&mut self, source: usize, entries: Vec<(usize, f64)>) {
        self.columns.insert(source, entries);
    }

    /// `(target, probability)` pairs of column `source`, if stored.
    pub fn column(&self, source: usize) -> Option<&[(usize, f64)]> {
        self.columns.get(&source).map(Vec::as_slice)
    }

    pub fn columns(&self) -> impl Iterator<Item = (usize, &[(usize, f64)])> {
        self.columns.iter().map(|(&u, c)| (u, c.as_slice()))
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn get(&self, target: usize, source: usize) -> f64 {
        self.column(source)
            .and_then(|c| c.iter().find(|(v, _)| *v == target))
            .map_or(0.0, |&(_, p)| p)
    }

    /// `P π` using the stored columns.
    pub fn apply(&self, pi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.size];
        for (u, col) in self.columns() {
            let w = pi[u];
            if w == 0.0 {
                continue;
            }
            for &(v, p) in col {
                out[v] += p * w;
            }
        }
        out
    }
}

/// `P(0..T)` together with the distributions `ρ(0..=T)` it was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrixSeq {
    pub space: StateSpace,
    pub matrices: Vec<TransitionMatrix>,
    pub rho: Vec<Vec<f64>>,
}

impl TransitionMatrixSeq {
    pub fn horizon(&self) -> usize {
        self.matrices.len()
    }
}

/// Vertex transition matrix for a single walker. `shift` is the shift that produced
/// `psi_next` from `W ψ_t`; it fixes which port of `v` receives amplitude from `u`.
pub fn build_transition_matrix(
    graph: &PortGraph,
    shift: &Shift,
    psi_t: &WaveFunction,
    psi_next: &WaveFunction,
    time: usize,
    opts: &BuildOptions,
) -> Result<TransitionMatrix> {
    for psi in [psi_t, psi_next] {
        psi.check_graph(graph)?;
        if psi.walkers() != 1 {
            return Err(Error::DimensionMismatch(
                "single-walker construction given a joint state".into(),
            ));
        }
    }
    shift.check_dimensions(graph)?;
    let rho = psi_t.vertex_distribution(graph)?;
    let next = psi_next.amplitudes();
    let mut matrix = TransitionMatrix::new(time, graph.num_vertices());
    for (u, &mass) in rho.iter().enumerate() {
        let column = if mass <= opts.zero_threshold {
            uniform_column(graph.neighbors(u).iter().copied(), graph.degree(u))
        } else {
            let mut col: Vec<(usize, f64)> = Vec::with_capacity(graph.degree(u));
            for c in 0..graph.degree(u) {
                let j = shift.image(graph.offset(u) + c);
                accumulate(&mut col, graph.vertex_of(j), next[j].norm_sqr() / mass);
            }
            finish_column(col, time, u, opts)?
        };
        matrix.insert_column(u, column);
    }
    Ok(matrix)
}

/// Transition matrix over vertex tuples. `shifts[i]` is walker `i`'s shift at this step.
pub fn build_multiwalker_matrix(
    pg: &ProductGraph<'_>,
    shifts: &[&Shift],
    psi_t: &WaveFunction,
    psi_next: &WaveFunction,
    time: usize,
    opts: &BuildOptions,
) -> Result<TransitionMatrix> {
    let graph = pg.base();
    let k = pg.walkers();
    if shifts.len() != k {
        return Err(Error::TupleArity {
            expected: k,
            got: shifts.len(),
        });
    }
    for psi in [psi_t, psi_next] {
        psi.check_graph(graph)?;
        if psi.walkers() != k {
            return Err(Error::TupleArity {
                expected: k,
                got: psi.walkers(),
            });
        }
    }
    for s in shifts {
        s.check_dimensions(graph)?;
    }
    let rho = psi_t.vertex_distribution(graph)?;
    let support: Vec<usize> = (0..rho.len())
        .filter(|&u| rho[u] > opts.zero_threshold)
        .collect();
    let sources: BTreeSet<usize> = match opts.materialize {
        Materialize::Full => (0..rho.len()).collect(),
        Materialize::Support => support.iter().copied().collect(),
        Materialize::Halo => {
            let mut set: BTreeSet<usize> = support.iter().copied().collect();
            for &u in &support {
                for v in pg.out_neighbors(&pg.decode(u))? {
                    set.insert(pg.encode(&v)?);
                }
            }
            set
        }
    };
    let n = graph.basis_len();
    let next = psi_next.amplitudes();
    let mut matrix = TransitionMatrix::new(time, rho.len());
    for u in sources {
        let tuple = pg.decode(u);
        let degree = pg.degree(&tuple)?;
        let mass = rho[u];
        let column = if mass <= opts.zero_threshold {
            let targets = pg
                .out_neighbors(&tuple)?
                .into_iter()
                .map(|v| pg.encode(&v))
                .collect::<Result<Vec<_>>>()?;
            uniform_column(targets.into_iter(), degree)
        } else {
            let mut col = Vec::with_capacity(degree);
            let mut ports = vec![0usize; k];
            for _ in 0..degree {
                let mut j = 0;
                let mut target = 0;
                for i in 0..k {
                    let image = shifts[i].image(graph.offset(tuple[i]) + ports[i]);
                    j = j * n + image;
                    target = target * graph.num_vertices() + graph.vertex_of(image);
                }
                accumulate(&mut col, target, next[j].norm_sqr() / mass);
                for i in (0..k).rev() {
                    ports[i] += 1;
                    if ports[i] < graph.degree(tuple[i]) {
                        break;
                    }
                    ports[i] = 0;
                }
            }
            finish_column(col, time, u, opts)?
        };
        matrix.insert_column(u, column);
    }
    Ok(matrix)
}

fn uniform_column(targets: impl Iterator<Item = usize>, degree: usize) -> Vec<(usize, f64)> {
    let p = 1.0 / degree as f64;
    targets.map(|v| (v, p)).collect()
}

fn accumulate(col: &mut Vec<(usize, f64)>, target: usize, p: f64) {
    match col.iter_mut().find(|(v, _)| *v == target) {
        Some(entry) => entry.1 += p,
        None => col.push((target, p)),
    }
}

pub(crate) fn finish_column(
    mut col: Vec<(usize, f64)>,
    time: usize,
    column: usize,
    opts: &BuildOptions,
) -> Result<Vec<(usize, f64)>> {
    let sum: f64 = col.iter().map(|(_, p)| p).sum();
    let deviation = (sum - 1.0).abs();
    if deviation <= RESCALE_TOL {
        for entry in &mut col {
            entry.1 /= sum;
        }
    } else if opts.strict && deviation > CONSISTENCY_TOL {
        return Err(Error::ColumnSum { time, column, sum });
    }
    Ok(col)
}

/// Evolves `walk` for `horizon` steps from `psi0` and emits `P(0..horizon)`
/// with `ρ(0..=horizon)`. Cost is dominated by the state evolution.
pub fn build_sequence(
    walk: &Walk,
    psi0: &WaveFunction,
    horizon: usize,
    opts: &BuildOptions,
) -> Result<TransitionMatrixSeq> {
    let graph = walk.graph();
    let k = walk.walkers();
    let pg = ProductGraph::new(graph, k)?;
    let mut psi = psi0.clone();
    let mut rho = vec![psi.vertex_distribution(graph)?];
    let mut matrices = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let next = walk.step(&psi, t)?;
        let matrix = if k == 1 {
            build_transition_matrix(graph, walk.shift_at(0, t), &psi, &next, t, opts)?
        } else {
            let shifts: Vec<&Shift> = (0..k).map(|i| walk.shift_at(i, t)).collect();
            build_multiwalker_matrix(&pg, &shifts, &psi, &next, t, opts)?
        };
        matrices.push(matrix);
        rho.push(next.vertex_distribution(graph)?);
        psi = next;
    }
    Ok(TransitionMatrixSeq {
        space: StateSpace {
            vertices: graph.num_vertices(),
            walkers: k,
        },
        matrices,
        rho,
    })
}

/// Worst-case residuals of the three matrix properties over a sequence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub steps: usize,
    /// Largest distance of an entry outside `[0, 1]`.
    pub max_entry_violation: f64,
    /// Largest `|Σ_v p_vu - 1|` over stored columns.
    pub max_column_sum_deviation: f64,
    /// Largest `‖P(t) ρ(t) - ρ(t+1)‖∞`.
    pub max_propagation_residual: f64,
    /// Step and column of the worst column sum, if any column was inspected.
    pub worst_column: Option<(usize, usize)>,
}

impl TheoremReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_entry_violation <= tol
            && self.max_column_sum_deviation <= tol
            && self.max_propagation_residual <= tol
    }
}

pub fn verify_theorem_properties(seq: &TransitionMatrixSeq) -> TheoremReport {
    let mut report = TheoremReport {
        steps: seq.matrices.len(),
        ..Default::default()
    };
    for (t, m) in seq.matrices.iter().enumerate() {
        for (u, col) in m.columns() {
            let mut sum = 0.0;
            for &(_, p) in col {
                let violation = if p < 0.0 { -p } else { (p - 1.0).max(0.0) };
                report.max_entry_violation = report.max_entry_violation.max(violation);
                sum += p;
            }
            let deviation = (sum - 1.0).abs();
            if report.worst_column.is_none() || deviation > report.max_column_sum_deviation {
                report.max_column_sum_deviation = deviation;
                report.worst_column = Some((t, u));
            }
        }
        if let (Some(now), Some(next)) = (seq.rho.get(t), seq.rho.get(t + 1)) {
            let pushed = m.apply(now);
            let residual = pushed
                .iter()
                .zip(next)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            report.max_propagation_residual = report.max_propagation_residual.max(residual);
        }
    }
    report
}

/// Count of stored nonzero entries that do not follow an arc of the (product) graph.
pub fn locality_violations(seq: &TransitionMatrixSeq, graph: &PortGraph) -> usize {
    let space = seq.space;
    let mut count = 0;
    for m in &seq.matrices {
        for (u, col) in m.columns() {
            let from = space.decode(u);
            for &(v, p) in col {
                let to = space.decode(v);
                let ok = from.iter().zip(&to).all(|(&a, &b)| graph.has_edge(a, b));
                if p > 0.0 && !ok {
                    count += 1;
                }
            }
        }
    }
    count
}
