//! Sampling paths from a non-homogeneous random walk and measuring how
//! ensembles of them recover the quantum vertex distribution.
//!
//! Each trajectory `i` draws from its own ChaCha20 stream (`set_stream(i)`
//! on a generator seeded with the master seed), so serial and parallel
//! sampling give identical ensembles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equivalence::{StateSpace, TransitionMatrixSeq};
use crate::error::{Error, Result};
use crate::graph::PortGraph;

/// Recorded in run manifests.
pub const RNG_ALGORITHM: &str = "ChaCha20 (rand_chacha 0.9); trajectory i uses stream i of seed_from_u64(master)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    /// Cumulative scan over the column, `O(d)` per step.
    #[default]
    LinearScan,
    /// Walker alias tables built once per column, `O(1)` per step.
    Alias,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    /// `τ(0), ..., τ(L)` as state ids of the sequence's state space.
    pub states: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectoryEnsemble {
    pub space: StateSpace,
    pub master_seed: u64,
    pub trajectories: Vec<Trajectory>,
}

impl TrajectoryEnsemble {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    /// Number of recorded instants per trajectory, `L + 1`.
    pub fn instants(&self) -> usize {
        self.trajectories.first().map_or(0, |t| t.states.len())
    }
}

pub fn trajectory_rng(master_seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Draws from `(outcome, weight)` pairs by cumulative scan. Rounding that
/// leaves `u` past the total falls back to the last positive entry.
fn scan<R: Rng + ?Sized>(entries: impl Iterator<Item = (usize, f64)>, rng: &mut R) -> Option<usize> {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = None;
    for (v, p) in entries {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = Some(v);
        if u < acc {
            return last;
        }
    }
    last
}

/// Precomputed alias tables for every stored column of a sequence.
struct AliasTables {
    initial: (Vec<usize>, WeightedAliasIndex<f64>),
    columns: Vec<std::collections::BTreeMap<usize, (Vec<usize>, WeightedAliasIndex<f64>)>>,
}

fn alias_of(entries: impl Iterator<Item = (usize, f64)>) -> Result<(Vec<usize>, WeightedAliasIndex<f64>)> {
    let (outcomes, weights): (Vec<usize>, Vec<f64>) = entries.filter(|&(_, p)| p > 0.0).unzip();
    let table = WeightedAliasIndex::new(weights)
        .map_err(|e| Error::Invalid(format!("cannot build alias table: {e}")))?;
    Ok((outcomes, table))
}

impl AliasTables {
    fn new(seq: &TransitionMatrixSeq, steps: usize) -> Result<Self> {
        let initial = alias_of(seq.rho[0].iter().copied().enumerate())?;
        let columns = seq.matrices[..steps]
            .iter()
            .map(|m| {
                m.columns()
                    .map(|(u, col)| Ok((u, alias_of(col.iter().copied())?)))
                    .collect::<Result<_>>()
            })
            .collect::<Result<_>>()?;
        Ok(Self { initial, columns })
    }
}

fn check_steps(seq: &TransitionMatrixSeq, steps: usize) -> Result<()> {
    if steps > seq.horizon() {
        return Err(Error::TimeOutOfRange {
            time: steps,
            horizon: seq.horizon(),
        });
    }
    if seq.rho.is_empty() {
        return Err(Error::Invalid("sequence has no initial distribution".into()));
    }
    Ok(())
}

fn sample_scan<R: Rng + ?Sized>(
    seq: &TransitionMatrixSeq,
    steps: usize,
    rng: &mut R,
) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(steps + 1);
    let mut cur = scan(seq.rho[0].iter().copied().enumerate(), rng)
        .ok_or_else(|| Error::Invalid("initial distribution has no mass".into()))?;
    states.push(cur);
    for (t, m) in seq.matrices[..steps].iter().enumerate() {
        let col = m
            .column(cur)
            .ok_or(Error::ColumnNotMaterialized { time: t, column: cur })?;
        cur = scan(col.iter().copied(), rng)
            .ok_or(Error::ColumnNotMaterialized { time: t, column: cur })?;
        states.push(cur);
    }
    Ok(Trajectory { states })
}

fn sample_alias<R: Rng + ?Sized>(tables: &AliasTables, rng: &mut R) -> Result<Trajectory> {
    let (outcomes, table) = &tables.initial;
    let mut cur = outcomes[table.sample(rng)];
    let mut states = vec![cur];
    for (t, cols) in tables.columns.iter().enumerate() {
        let (outcomes, table) = cols
            .get(&cur)
            .ok_or(Error::ColumnNotMaterialized { time: t, column: cur })?;
        cur = outcomes[table.sample(rng)];
        states.push(cur);
    }
    Ok(Trajectory { states })
}

/// `τ(0) ~ ρ(0)`, then `τ(t+1) ~` column `τ(t)` of `P(t)` for the whole horizon.
pub fn sample_trajectory<R: Rng + ?Sized>(seq: &TransitionMatrixSeq, rng: &mut R) -> Result<Trajectory> {
    check_steps(seq, seq.horizon())?;
    sample_scan(seq, seq.horizon(), rng)
}

/// `m` independent trajectories over the whole horizon.
pub fn sample_ensemble(seq: &TransitionMatrixSeq, m: usize, master_seed: u64) -> Result<TrajectoryEnsemble> {
    sample_ensemble_with(seq, m, master_seed, seq.horizon(), SamplerKind::LinearScan)
}

/// `m` trajectories of `steps` transitions each, using the chosen sampler.
pub fn sample_ensemble_with(
    seq: &TransitionMatrixSeq,
    m: usize,
    master_seed: u64,
    steps: usize,
    kind: SamplerKind,
) -> Result<TrajectoryEnsemble> {
    if m == 0 {
        return Err(Error::Invalid("ensemble size must be at least 1".into()));
    }
    check_steps(seq, steps)?;
    let trajectories = match kind {
        SamplerKind::LinearScan => (0..m)
            .into_par_iter()
            .map(|i| sample_scan(seq, steps, &mut trajectory_rng(master_seed, i as u64)))
            .collect::<Result<Vec<_>>>()?,
        SamplerKind::Alias => {
            let tables = AliasTables::new(seq, steps)?;
            (0..m)
                .into_par_iter()
                .map(|i| sample_alias(&tables, &mut trajectory_rng(master_seed, i as u64)))
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(TrajectoryEnsemble {
        space: seq.space,
        master_seed,
        trajectories,
    })
}

/// `p̂_u(t) = (1/M) Σ_i 1(τ_i(t) = u)`.
pub fn empirical_distribution(ens: &TrajectoryEnsemble, t: usize) -> Result<Vec<f64>> {
    if t >= ens.instants() {
        return Err(Error::TimeOutOfRange {
            time: t,
            horizon: ens.instants().saturating_sub(1),
        });
    }
    let mut counts = vec![0usize; ens.space.len()];
    for traj in &ens.trajectories {
        counts[traj.states[t]] += 1;
    }
    let m = ens.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / m).collect())
}

/// `(1/2) Σ_v |p_v - q_v|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!(
            "distributions of length {} and {}",
            p.len(),
            q.len()
        )));
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvdRow {
    #[serde(rename = "M")]
    pub m: usize,
    pub t: usize,
    pub tvd: f64,
}

/// Seed of the ensemble of size `m` in a convergence report (splitmix64 of master and size).
pub fn ensemble_seed(master_seed: u64, m: usize) -> u64 {
    let mut z = master_seed ^ (m as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// TVD between the empirical and quantum distributions for every ensemble
/// size and instant. Ensembles only run up to the largest requested instant.
pub fn convergence_report(
    seq: &TransitionMatrixSeq,
    sizes: &[usize],
    t_grid: &[usize],
    master_seed: u64,
) -> Result<Vec<TvdRow>> {
    let steps = t_grid.iter().copied().max().unwrap_or(0);
    check_steps(seq, steps)?;
    let mut rows = Vec::with_capacity(sizes.len() * t_grid.len());
    for &m in sizes {
        let ens = sample_ensemble_with(
            seq,
            m,
            ensemble_seed(master_seed, m),
            steps,
            SamplerKind::LinearScan,
        )?;
        for &t in t_grid {
            let tvd = total_variation(&empirical_distribution(&ens, t)?, &seq.rho[t])?;
            rows.push(TvdRow { m, t, tvd });
        }
    }
    Ok(rows)
}

/// Per-instant mean torus coordinates of a single-walker ensemble, for plotting.
pub fn mean_coordinates(ens: &TrajectoryEnsemble, graph: &PortGraph) -> Option<Vec<Vec<f64>>> {
    if ens.space.walkers != 1 || ens.is_empty() {
        return None;
    }
    let axes = graph.coordinates(0)?.len();
    let m = ens.len() as f64;
    let means = (0..ens.instants())
        .map(|t| {
            let mut acc = vec![0.0; axes];
            for traj in &ens.trajectories {
                let coords = graph.coordinates(traj.states[t]).expect("torus layout");
                for (a, x) in acc.iter_mut().zip(coords) {
                    *a += x as f64;
                }
            }
            acc.into_iter().map(|a| a / m).collect()
        })
        .collect();
    Some(means)
}

/// Number of consecutive pairs in an ensemble that are not arcs of the (product) graph.
pub fn count_non_edges(ens: &TrajectoryEnsemble, graph: &PortGraph) -> usize {
    ens.trajectories
        .iter()
        .flat_map(|traj| traj.states.windows(2))
        .filter(|w| {
            let a = ens.space.decode(w[0]);
            let b = ens.space.decode(w[1]);
            !a.iter().zip(&b).all(|(&u, &v)| graph.has_edge(u, v))
        })
        .count()
}
