//! JSON run configuration: graph, operators, initial state and run parameters.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::baselines::DEFAULT_MAX_ATTEMPTS;
use crate::equivalence::{BuildOptions, Materialize, ZERO_THRESHOLD};
use crate::error::{Error, Result};
use crate::graph::{GraphDocument, PortGraph};
use crate::qw::{
    BasisAmplitude, Block, Coin, CoinKind, Interaction, Shift, ShiftKind, TupleAmplitude, Walk,
    WaveFunction, DEFAULT_AMPLITUDE_BUDGET,
};
use crate::trajectory::SamplerKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    Cycle { n: usize },
    Torus { dims: Vec<usize> },
    Complete { n: usize },
    RandomRegular { n: usize, degree: usize, seed: u64 },
    /// Inline `{"n", "edges", "ordering"}` document.
    Edges(GraphDocument),
    /// Path to a JSON graph document.
    File { path: String },
}

impl GraphSpec {
    pub fn build(&self) -> Result<PortGraph> {
        match self {
            GraphSpec::Cycle { n } => PortGraph::cycle(*n),
            GraphSpec::Torus { dims } => PortGraph::torus(dims),
            GraphSpec::Complete { n } => PortGraph::complete(*n),
            GraphSpec::RandomRegular { n, degree, seed } => {
                PortGraph::random_regular(*n, *degree, *seed)
            }
            GraphSpec::Edges(doc) => doc.build(),
            GraphSpec::File { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Invalid(format!("cannot read graph file {path}: {e}")))?;
                let doc: GraphDocument = serde_json::from_str(&text).map_err(|e| {
                    Error::Invalid(format!(
                        "graph file {path}: {e} at line {}, column {}",
                        e.line(),
                        e.column()
                    ))
                })?;
                doc.build()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoinSpec {
    Hadamard,
    Grover,
    Identity,
    RandomUnitary { seed: u64 },
    /// One row-major block per vertex; entries are `[re, im]`.
    Explicit { blocks: Vec<Vec<Vec<[f64; 2]>>> },
}

impl CoinSpec {
    pub fn build(&self, graph: &PortGraph, validate: bool) -> Result<Coin> {
        let kind = match self {
            CoinSpec::Hadamard => CoinKind::Hadamard,
            CoinSpec::Grover => CoinKind::Grover,
            CoinSpec::Identity => CoinKind::Identity,
            CoinSpec::RandomUnitary { seed } => CoinKind::RandomUnitary { seed: *seed },
            CoinSpec::Explicit { blocks } => {
                let blocks = blocks
                    .iter()
                    .map(|rows| block_from_rows(rows))
                    .collect::<Result<Vec<_>>>()?;
                let coin = Coin::from_blocks_unchecked(blocks);
                coin.check_dimensions(graph)?;
                if validate {
                    coin.validate(graph)?;
                }
                return Ok(coin);
            }
        };
        Coin::build(graph, kind)
    }
}

fn block_from_rows(rows: &[Vec<[f64; 2]>]) -> Result<Block> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch("coin block rows must form a square matrix".into()));
    }
    Ok(Block::from_fn(n, n, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShiftSpec {
    Moving,
    Arc,
    Identity,
    /// `[vertex, port]` image of every basis state in basis order.
    Explicit { images: Vec<[usize; 2]> },
}

impl ShiftSpec {
    pub fn build(&self, graph: &PortGraph) -> Result<Shift> {
        match self {
            ShiftSpec::Moving => Shift::build(graph, ShiftKind::Moving),
            ShiftSpec::Arc => Shift::build(graph, ShiftKind::Arc),
            ShiftSpec::Identity => Shift::build(graph, ShiftKind::Identity),
            ShiftSpec::Explicit { images } => {
                let images: Vec<(usize, usize)> = images.iter().map(|&[v, c]| (v, c)).collect();
                Shift::explicit(graph, &images)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InteractionSpec {
    Identity,
    CoincidencePhase { phi: f64 },
}

impl InteractionSpec {
    pub fn build(&self) -> Interaction {
        match self {
            InteractionSpec::Identity => Interaction::Identity,
            InteractionSpec::CoincidencePhase { phi } => Interaction::CoincidencePhase { phi: *phi },
        }
    }
}

/// Initial state. Single-walker forms are copied to every walker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Localized { vertex: usize, port: usize },
    /// One localized `[vertex, port]` per walker.
    Product { states: Vec<[usize; 2]> },
    Entries { entries: Vec<BasisAmplitude> },
    TupleEntries { entries: Vec<TupleAmplitude> },
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec::Localized { vertex: 0, port: 0 }
    }
}

impl InitialSpec {
    pub fn build(&self, graph: &PortGraph, walkers: usize, budget: usize) -> Result<WaveFunction> {
        let single = match self {
            InitialSpec::Localized { vertex, port } => WaveFunction::localized(graph, *vertex, *port)?,
            InitialSpec::Entries { entries } => WaveFunction::from_entries(graph, entries)?.0,
            InitialSpec::Product { states } => {
                if states.len() != walkers {
                    return Err(Error::TupleArity {
                        expected: walkers,
                        got: states.len(),
                    });
                }
                let parts = states
                    .iter()
                    .map(|&[v, c]| WaveFunction::localized(graph, v, c))
                    .collect::<Result<Vec<_>>>()?;
                return WaveFunction::product(&parts, budget);
            }
            InitialSpec::TupleEntries { entries } => {
                return Ok(WaveFunction::from_tuple_entries(graph, walkers, entries, budget)?.0);
            }
        };
        if walkers == 1 {
            return Ok(single);
        }
        WaveFunction::product(&vec![single; walkers], budget)
    }
}

fn default_walkers() -> usize {
    1
}
fn default_coin() -> CoinSpec {
    CoinSpec::Hadamard
}
fn default_shift() -> ShiftSpec {
    ShiftSpec::Moving
}
fn default_interaction() -> InteractionSpec {
    InteractionSpec::Identity
}
fn default_horizon() -> usize {
    50
}
fn default_zero_threshold() -> f64 {
    ZERO_THRESHOLD
}
fn default_true() -> bool {
    true
}
fn default_materialize() -> Materialize {
    Materialize::Halo
}
fn default_budget() -> usize {
    DEFAULT_AMPLITUDE_BUDGET
}
fn default_trajectories() -> usize {
    20
}
fn default_sizes() -> Vec<usize> {
    vec![100, 1000, 10000]
}
fn default_t_grid() -> Vec<usize> {
    vec![5, 10, 20]
}
fn default_attempts() -> u64 {
    1_000_000
}

/// Everything a command needs. Every field except `graph` has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub graph: GraphSpec,
    #[serde(default = "default_walkers")]
    pub walkers: usize,
    #[serde(default = "default_coin")]
    pub coin: CoinSpec,
    #[serde(default = "default_shift")]
    pub shift: ShiftSpec,
    #[serde(default = "default_interaction")]
    pub interaction: InteractionSpec,
    #[serde(default)]
    pub initial: InitialSpec,
    /// Number of steps `T`.
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_zero_threshold")]
    pub zero_threshold: f64,
    #[serde(default = "default_true")]
    pub strict: bool,
    #[serde(default = "default_materialize")]
    pub materialize: Materialize,
    /// Largest tensor state, in amplitudes.
    #[serde(default = "default_budget")]
    pub budget: usize,
    /// Skip the unitarity check on explicit coins.
    #[serde(default)]
    pub allow_non_unitary: bool,
    /// Ensemble size for `sample`.
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    /// Trajectory steps for `sample`; defaults to `horizon`.
    #[serde(default)]
    pub length: Option<usize>,
    #[serde(default)]
    pub sampler: SamplerKind,
    /// Ensemble sizes for `tvd`.
    #[serde(default = "default_sizes")]
    pub sizes: Vec<usize>,
    /// Instants for `tvd`.
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<usize>,
    /// Number of instants of each rejection-sampled sequence; defaults to `horizon + 1`.
    #[serde(default)]
    pub rejection_length: Option<usize>,
    #[serde(default = "default_attempts")]
    pub attempts: u64,
}

impl RunConfig {
    pub fn new(graph: GraphSpec) -> Self {
        serde_json::from_value(serde_json::json!({ "graph": graph }))
            .expect("every field but graph has a default")
    }

    pub fn build_options(&self) -> BuildOptions {
        BuildOptions {
            zero_threshold: self.zero_threshold,
            strict: self.strict,
            materialize: self.materialize,
        }
    }

    /// Checks parameters that do not need the graph.
    pub fn check(&self) -> Result<()> {
        if self.walkers == 0 {
            return Err(Error::Invalid("walkers must be at least 1".into()));
        }
        if self.zero_threshold.is_nan() || self.zero_threshold < 0.0 {
            return Err(Error::Invalid("zero_threshold must be non-negative".into()));
        }
        if self.attempts == 0 || self.attempts > DEFAULT_MAX_ATTEMPTS {
            return Err(Error::Invalid(format!(
                "attempts must be in 1..={DEFAULT_MAX_ATTEMPTS}"
            )));
        }
        if self.sizes.contains(&0) {
            return Err(Error::Invalid("ensemble sizes must be positive".into()));
        }
        Ok(())
    }

    pub fn build_walk(&self, graph: Arc<PortGraph>) -> Result<Walk> {
        self.check()?;
        let coin = self.coin.build(&graph, !self.allow_non_unitary)?;
        let shift = self.shift.build(&graph)?;
        let mut builder = Walk::builder(graph)
            .walkers(self.walkers)
            .coin(coin)
            .shift(shift)
            .budget(self.budget);
        if self.walkers > 1 {
            builder = builder.interaction(self.interaction.build());
        }
        if self.allow_non_unitary {
            builder = builder.allow_non_unitary();
        }
        builder.build()
    }

    pub fn build_initial(&self, graph: &PortGraph) -> Result<WaveFunction> {
        self.initial.build(graph, self.walkers, self.budget)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"graph": {"kind": "torus", "dims": [10, 10]}}"#).unwrap();
        assert_eq!(cfg.walkers, 1);
        assert_eq!(cfg.coin, CoinSpec::Hadamard);
        assert_eq!(cfg.shift, ShiftSpec::Moving);
        assert_eq!(cfg.initial, InitialSpec::Localized { vertex: 0, port: 0 });
        assert_eq!(cfg.build_options(), BuildOptions::default());
        assert_eq!(cfg, RunConfig::new(GraphSpec::Torus { dims: vec![10, 10] }));
    }

    #[test]
    fn inline_edges_and_unknown_fields() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"graph": {"kind": "edges", "n": 3, "edges": [[0,1],[1,2],[2,0]]}, "coin": {"kind": "grover"}}"#,
        )
        .unwrap();
        assert_eq!(cfg.graph.build().unwrap().num_vertices(), 3);
        assert!(serde_json::from_str::<RunConfig>(r#"{"graph": {"kind": "cycle", "n": 4}, "coins": 1}"#).is_err());
    }

    #[test]
    fn explicit_scaled_coin_is_rejected() {
        let g = PortGraph::cycle(4).unwrap();
        let s = 1.1 * std::f64::consts::FRAC_1_SQRT_2;
        let block = vec![vec![[s, 0.0], [s, 0.0]], vec![[s, 0.0], [-s, 0.0]]];
        let spec = CoinSpec::Explicit { blocks: vec![block; 4] };
        let err = spec.build(&g, true).unwrap_err();
        assert!(err.to_string().contains("column normalization"), "{err}");
        assert!(spec.build(&g, false).is_ok());
    }

    #[test]
    fn initial_states_for_two_walkers() {
        let g = PortGraph::cycle(4).unwrap();
        let psi = InitialSpec::Product { states: vec![[0, 0], [2, 1]] }
            .build(&g, 2, DEFAULT_AMPLITUDE_BUDGET)
            .unwrap();
        assert_eq!(psi.vertex_distribution(&g).unwrap()[2], 1.0);
        let psi = InitialSpec::default().build(&g, 2, DEFAULT_AMPLITUDE_BUDGET).unwrap();
        assert_eq!(psi.walkers(), 2);
        assert!(InitialSpec::Product { states: vec![[0, 0]] }
            .build(&g, 2, DEFAULT_AMPLITUDE_BUDGET)
            .is_err());
    }
}
