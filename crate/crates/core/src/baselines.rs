//! Two reference procedures next to the main construction:
//!
//! * a rejection sampler that draws each instant independently from `ρ(t)`
//!   and keeps only sequences that happen to be graph paths;
//! * a recursion for the Grover-coined, moving-shift walk on a torus with
//!   real amplitudes, which needs only the per-port probabilities and signs.

use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equivalence::{
    finish_column, BuildOptions, StateSpace, TransitionMatrix, TransitionMatrixSeq,
};
use crate::error::{Error, Result};
use crate::graph::{Layout, PortGraph};
use crate::qw::WaveFunction;
use crate::trajectory::{total_variation, trajectory_rng};

pub const DEFAULT_MAX_ATTEMPTS: u64 = 10_000_000;
const CHUNK: u64 = 1 << 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionReport {
    pub length: usize,
    pub attempts: u64,
    pub accepted: u64,
    pub acceptance_rate: f64,
    /// True when no sequence was accepted; marginals are then empty.
    pub no_acceptance: bool,
    /// `marginals[t][v]`: frequency of `v` at position `t` among accepted sequences.
    pub marginals: Vec<Vec<f64>>,
    /// TVD between each accepted marginal and `ρ(t)`.
    pub tvd_vs_rho: Vec<f64>,
    pub max_tvd_vs_rho: f64,
    /// On a generated torus with `V` vertices and `D` axes, `V D^(L-1) / V^L`.
    pub torus_path_count_fraction: Option<f64>,
    /// Same with `2D` choices per step, the number of walks of length `L` on the torus.
    pub torus_walk_fraction: Option<f64>,
    pub seed: u64,
}

/// Draws `attempts` vertex sequences of `length` instants, position `t`
/// independently from `rho_seq[t]`, and accepts those whose consecutive
/// pairs are all arcs of `graph`.
pub fn rejection_sample(
    rho_seq: &[Vec<f64>],
    graph: &PortGraph,
    length: usize,
    attempts: u64,
    seed: u64,
) -> Result<RejectionReport> {
    if length == 0 {
        return Err(Error::Invalid("sequence length must be at least 1".into()));
    }
    if rho_seq.len() < length {
        return Err(Error::TimeOutOfRange {
            time: length - 1,
            horizon: rho_seq.len().saturating_sub(1),
        });
    }
    if attempts == 0 || attempts > DEFAULT_MAX_ATTEMPTS {
        return Err(Error::Invalid(format!(
            "attempts must be in 1..={DEFAULT_MAX_ATTEMPTS}, got {attempts}"
        )));
    }
    let n = graph.num_vertices();
    let tables = rho_seq[..length]
        .iter()
        .map(|rho| {
            if rho.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "distribution of length {} on {n} vertices",
                    rho.len()
                )));
            }
            WeightedAliasIndex::new(rho.clone())
                .map_err(|e| Error::Invalid(format!("bad distribution: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;

    let chunks = attempts.div_ceil(CHUNK);
    let (accepted, counts) = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = trajectory_rng(seed, chunk);
            let todo = CHUNK.min(attempts - chunk * CHUNK);
            let mut accepted = 0u64;
            let mut counts = vec![0u64; length * n];
            let mut path = vec![0usize; length];
            for _ in 0..todo {
                let mut ok = true;
                for t in 0..length {
                    path[t] = tables[t].sample(&mut rng);
                    if t > 0 && !graph.has_edge(path[t - 1], path[t]) {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    accepted += 1;
                    for (t, &v) in path.iter().enumerate() {
                        counts[t * n + v] += 1;
                    }
                }
            }
            (accepted, counts)
        })
        .reduce(
            || (0, vec![0u64; length * n]),
            |(a, mut ca), (b, cb)| {
                for (x, y) in ca.iter_mut().zip(cb) {
                    *x += y;
                }
                (a + b, ca)
            },
        );

    let (marginals, tvd_vs_rho) = if accepted == 0 {
        (Vec::new(), Vec::new())
    } else {
        let marginals: Vec<Vec<f64>> = counts
            .chunks(n)
            .map(|row| row.iter().map(|&c| c as f64 / accepted as f64).collect())
            .collect();
        let tvd = marginals
            .iter()
            .zip(rho_seq)
            .map(|(m, rho)| total_variation(m, rho))
            .collect::<Result<Vec<_>>>()?;
        (marginals, tvd)
    };
    let (path_fraction, walk_fraction) = match graph.layout() {
        Layout::Torus { dims } => {
            let v = n as f64;
            let d = dims.len() as f64;
            let l = length as i32;
            (
                Some(v * d.powi(l - 1) / v.powi(l)),
                Some(v * (2.0 * d).powi(l - 1) / v.powi(l)),
            )
        }
        _ => (None, None),
    };
    Ok(RejectionReport {
        length,
        attempts,
        accepted,
        acceptance_rate: accepted as f64 / attempts as f64,
        no_acceptance: accepted == 0,
        max_tvd_vs_rho: tvd_vs_rho.iter().copied().fold(0.0, f64::max),
        marginals,
        tvd_vs_rho,
        torus_path_count_fraction: path_fraction,
        torus_walk_fraction: walk_fraction,
        seed,
    })
}

/// Per-port probabilities and amplitude signs of the real Grover torus walk at one instant.
///
/// The amplitude of basis state `i` is `sign[i] * sqrt(rho[i])`. Real
/// initial data keeps every amplitude real under the Grover coin and the
/// moving shift, so the pair carries the full state up to a global phase.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusDpState {
    pub dims: Vec<usize>,
    pub time: usize,
    pub rho: Vec<f64>,
    pub sign: Vec<i8>,
}

impl TorusDpState {
    fn from_amplitudes(dims: &[usize], time: usize, amps: &[f64]) -> Self {
        Self {
            dims: dims.to_vec(),
            time,
            rho: amps.iter().map(|a| a * a).collect(),
            sign: amps
                .iter()
                .map(|&a| if a > 0.0 { 1 } else if a < 0.0 { -1 } else { 0 })
                .collect(),
        }
    }

    pub fn amplitude(&self, i: usize) -> f64 {
        f64::from(self.sign[i]) * self.rho[i].sqrt()
    }

    pub fn ports(&self) -> usize {
        2 * self.dims.len()
    }

    pub fn vertex_distribution(&self) -> Vec<f64> {
        self.rho.chunks(self.ports()).map(|c| c.iter().sum()).collect()
    }
}

fn torus_dims(graph: &PortGraph) -> Result<&[usize]> {
    match graph.layout() {
        Layout::Torus { dims } => Ok(dims),
        _ => Err(Error::NotApplicable(
            "the Grover recursion needs a graph from the torus generator".into(),
        )),
    }
}

/// Runs the recursion for `horizon` steps from a real initial state and
/// returns the states for `t = 0..=horizon`. Each step costs `O(|V| D)`.
pub fn grover_torus_dp(
    graph: &PortGraph,
    psi0: &WaveFunction,
    horizon: usize,
) -> Result<Vec<TorusDpState>> {
    let dims = torus_dims(graph)?;
    psi0.check_graph(graph)?;
    if psi0.walkers() != 1 {
        return Err(Error::NotApplicable("the Grover recursion is single-walker".into()));
    }
    if let Some((i, a)) = psi0
        .amplitudes()
        .iter()
        .enumerate()
        .find(|(_, a)| a.im != 0.0)
    {
        let (v, c) = graph.basis_state(i);
        return Err(Error::NotApplicable(format!(
            "initial amplitude at ({v}, {c}) has imaginary part {}",
            a.im
        )));
    }
    let ports = 2 * dims.len();
    let axes = dims.len() as f64;
    let first: Vec<f64> = psi0.amplitudes().iter().map(|a| a.re).collect();
    let mut states = Vec::with_capacity(horizon + 1);
    states.push(TorusDpState::from_amplitudes(dims, 0, &first));
    let mut amps = vec![0.0; first.len()];
    for t in 0..horizon {
        let prev = &states[t];
        for u in 0..graph.num_vertices() {
            let base = u * ports;
            let mean = (0..ports).map(|c| prev.amplitude(base + c)).sum::<f64>() / axes;
            for c in 0..ports {
                let v = graph.neighbors(u)[c];
                amps[v * ports + c] = mean - prev.amplitude(base + c);
            }
        }
        states.push(TorusDpState::from_amplitudes(dims, t + 1, &amps));
    }
    Ok(states)
}

/// Random-walk matrix between consecutive recursion states:
/// `p_vu = ρ(v, c, t+1) / ρ(u, t)` with `v = η(u, c)`, uniform `1/(2D)` on empty columns.
pub fn grover_torus_matrix(
    graph: &PortGraph,
    now: &TorusDpState,
    next: &TorusDpState,
    opts: &BuildOptions,
) -> Result<TransitionMatrix> {
    let dims = torus_dims(graph)?;
    if now.dims != dims || next.dims != dims || next.time != now.time + 1 {
        return Err(Error::DimensionMismatch(
            "recursion states are not consecutive states of this torus".into(),
        ));
    }
    let ports = now.ports();
    let rho = now.vertex_distribution();
    let mut matrix = TransitionMatrix::new(now.time, graph.num_vertices());
    for (u, &mass) in rho.iter().enumerate() {
        let column = if mass <= opts.zero_threshold {
            let p = 1.0 / ports as f64;
            graph.neighbors(u).iter().map(|&v| (v, p)).collect()
        } else {
            let col = (0..ports)
                .map(|c| {
                    let v = graph.neighbors(u)[c];
                    (v, next.rho[v * ports + c] / mass)
                })
                .collect();
            finish_column(col, now.time, u, opts)?
        };
        matrix.insert_column(u, column);
    }
    Ok(matrix)
}

/// Full matrix sequence from the recursion, in the same form as the general construction.
pub fn grover_torus_sequence(
    graph: &PortGraph,
    psi0: &WaveFunction,
    horizon: usize,
    opts: &BuildOptions,
) -> Result<TransitionMatrixSeq> {
    let states = grover_torus_dp(graph, psi0, horizon)?;
    let matrices = states
        .windows(2)
        .map(|w| grover_torus_matrix(graph, &w[0], &w[1], opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(TransitionMatrixSeq {
        space: StateSpace {
            vertices: graph.num_vertices(),
            walkers: 1,
        },
        matrices,
        rho: states.iter().map(TorusDpState::vertex_distribution).collect(),
    })
}
