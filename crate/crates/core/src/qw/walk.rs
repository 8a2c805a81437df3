use std::sync::Arc;

use num_complex::Complex64;

use super::coin::Coin;
use super::interaction::Interaction;
use super::shift::Shift;
use super::state::{tensor_len, WaveFunction, DEFAULT_AMPLITUDE_BUDGET};
use crate::error::{Error, Result};
use crate::graph::PortGraph;

/// Operator that may change with time. `Periodic` cycles through its entries.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule<T> {
    Constant(T),
    Periodic(Vec<T>),
}

impl<T> Schedule<T> {
    pub fn at(&self, t: usize) -> &T {
        match self {
            Schedule::Constant(x) => x,
            Schedule::Periodic(xs) => &xs[t % xs.len()],
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = &T> {
        let slice = match self {
            Schedule::Constant(x) => std::slice::from_ref(x),
            Schedule::Periodic(xs) => xs.as_slice(),
        };
        slice.iter()
    }

    fn check_nonempty(&self) -> Result<()> {
        if let Schedule::Periodic(xs) = self {
            if xs.is_empty() {
                return Err(Error::Invalid("empty operator schedule".into()));
            }
        }
        Ok(())
    }
}

impl<T> From<T> for Schedule<T> {
    fn from(x: T) -> Self {
        Schedule::Constant(x)
    }
}

/// Coined walk of one or more walkers: `Ψ(t+1) = S W U Ψ(t)`, with
/// `W = ⊗ W_i` and `S = ⊗ S_i` acting walker by walker.
#[derive(Debug, Clone)]
pub struct Walk {
    graph: Arc<PortGraph>,
    walkers: usize,
    coins: Vec<Schedule<Coin>>,
    shifts: Vec<Schedule<Shift>>,
    interaction: Option<Schedule<Interaction>>,
}

pub struct WalkBuilder {
    graph: Arc<PortGraph>,
    walkers: usize,
    coins: Vec<Schedule<Coin>>,
    shifts: Vec<Schedule<Shift>>,
    interaction: Option<Schedule<Interaction>>,
    budget: usize,
    check_unitary: bool,
}

impl WalkBuilder {
    pub fn walkers(mut self, k: usize) -> Self {
        self.walkers = k;
        self
    }

    /// Coin shared by all walkers.
    pub fn coin(mut self, coin: impl Into<Schedule<Coin>>) -> Self {
        self.coins = vec![coin.into()];
        self
    }

    /// One coin schedule per walker.
    pub fn coins(mut self, coins: Vec<Schedule<Coin>>) -> Self {
        self.coins = coins;
        self
    }

    pub fn shift(mut self, shift: impl Into<Schedule<Shift>>) -> Self {
        self.shifts = vec![shift.into()];
        self
    }

    pub fn shifts(mut self, shifts: Vec<Schedule<Shift>>) -> Self {
        self.shifts = shifts;
        self
    }

    pub fn interaction(mut self, interaction: impl Into<Schedule<Interaction>>) -> Self {
        self.interaction = Some(interaction.into());
        self
    }

    /// Maximum number of tensor-basis amplitudes.
    pub fn budget(mut self, amplitudes: usize) -> Self {
        self.budget = amplitudes;
        self
    }

    /// Skip the coin unitarity check. Only dimension checks remain.
    pub fn allow_non_unitary(mut self) -> Self {
        self.check_unitary = false;
        self
    }

    pub fn build(self) -> Result<Walk> {
        let g = &*self.graph;
        if self.walkers == 0 {
            return Err(Error::Invalid("at least one walker is required".into()));
        }
        tensor_len(g.basis_len(), self.walkers, self.budget)?;
        let coins = broadcast(self.coins, self.walkers, "coin")?;
        let shifts = broadcast(self.shifts, self.walkers, "shift")?;
        for schedule in &coins {
            schedule.check_nonempty()?;
            for coin in schedule.entries() {
                if self.check_unitary {
                    coin.validate(g)?;
                } else {
                    coin.check_dimensions(g)?;
                }
            }
        }
        for schedule in &shifts {
            schedule.check_nonempty()?;
            for shift in schedule.entries() {
                shift.check_dimensions(g)?;
            }
        }
        if let Some(schedule) = &self.interaction {
            schedule.check_nonempty()?;
            for u in schedule.entries() {
                u.validate(g, self.walkers)?;
            }
        }
        Ok(Walk {
            graph: self.graph,
            walkers: self.walkers,
            coins,
            shifts,
            interaction: self.interaction,
        })
    }
}

fn broadcast<T: Clone>(items: Vec<T>, walkers: usize, what: &str) -> Result<Vec<T>> {
    match items.len() {
        0 => Err(Error::Invalid(format!("no {what} given"))),
        1 => Ok(vec![items[0].clone(); walkers]),
        n if n == walkers => Ok(items),
        n => Err(Error::Invalid(format!(
            "{n} {what} schedules for {walkers} walkers"
        ))),
    }
}

impl Walk {
    pub fn builder(graph: Arc<PortGraph>) -> WalkBuilder {
        WalkBuilder {
            graph,
            walkers: 1,
            coins: Vec::new(),
            shifts: Vec::new(),
            interaction: None,
            budget: DEFAULT_AMPLITUDE_BUDGET,
            check_unitary: true,
        }
    }

    /// Time-homogeneous single walker.
    pub fn single(graph: Arc<PortGraph>, coin: Coin, shift: Shift) -> Result<Self> {
        Self::builder(graph).coin(coin).shift(shift).build()
    }

    pub fn graph(&self) -> &PortGraph {
        &self.graph
    }

    pub fn graph_arc(&self) -> &Arc<PortGraph> {
        &self.graph
    }

    pub fn walkers(&self) -> usize {
        self.walkers
    }

    pub fn shift_at(&self, walker: usize, t: usize) -> &Shift {
        self.shifts[walker].at(t)
    }

    fn check_state(&self, psi: &WaveFunction) -> Result<()> {
        psi.check_graph(&self.graph)?;
        if psi.walkers() != self.walkers {
            return Err(Error::DimensionMismatch(format!(
                "state has {} walkers, walk has {}",
                psi.walkers(),
                self.walkers
            )));
        }
        Ok(())
    }

    /// `W ψ` at time `t`.
    pub fn apply_coin(&self, psi: &WaveFunction, t: usize) -> Result<WaveFunction> {
        self.check_state(psi)?;
        let mut out = psi.clone();
        for (axis, schedule) in self.coins.iter().enumerate() {
            coin_along_axis(&self.graph, self.walkers, axis, schedule.at(t), out.amplitudes_mut());
        }
        Ok(out)
    }

    /// `S ψ` at time `t`.
    pub fn apply_shift(&self, psi: &WaveFunction, t: usize) -> Result<WaveFunction> {
        self.check_state(psi)?;
        let mut amps = psi.amplitudes().to_vec();
        let mut scratch = vec![Complex64::new(0.0, 0.0); amps.len()];
        for (axis, schedule) in self.shifts.iter().enumerate() {
            shift_along_axis(
                self.graph.basis_len(),
                self.walkers,
                axis,
                schedule.at(t),
                &amps,
                &mut scratch,
            );
            std::mem::swap(&mut amps, &mut scratch);
        }
        WaveFunction::from_amplitudes(&self.graph, self.walkers, amps)
    }

    /// `U ψ` at time `t`; the identity when no interaction is configured.
    pub fn apply_interaction(&self, psi: &WaveFunction, t: usize) -> Result<WaveFunction> {
        self.check_state(psi)?;
        let mut out = psi.clone();
        if let Some(u) = &self.interaction {
            u.at(t).apply(&self.graph, self.walkers, out.amplitudes_mut());
        }
        Ok(out)
    }

    /// One full step `S W U ψ`.
    pub fn step(&self, psi: &WaveFunction, t: usize) -> Result<WaveFunction> {
        let psi = self.apply_interaction(psi, t)?;
        let psi = self.apply_coin(&psi, t)?;
        self.apply_shift(&psi, t)
    }

    /// States `ψ(0), ..., ψ(steps)`.
    pub fn evolve(&self, psi0: &WaveFunction, steps: usize) -> Result<Vec<WaveFunction>> {
        let mut states = Vec::with_capacity(steps + 1);
        states.push(psi0.clone());
        for t in 0..steps {
            let next = self.step(&states[t], t)?;
            states.push(next);
        }
        Ok(states)
    }

    /// Vertex distributions `ρ(0), ..., ρ(steps)` without keeping the states.
    pub fn distributions(&self, psi0: &WaveFunction, steps: usize) -> Result<Vec<Vec<f64>>> {
        self.check_state(psi0)?;
        let mut psi = psi0.clone();
        let mut out = Vec::with_capacity(steps + 1);
        out.push(psi.vertex_distribution(&self.graph)?);
        for t in 0..steps {
            psi = self.step(&psi, t)?;
            out.push(psi.vertex_distribution(&self.graph)?);
        }
        Ok(out)
    }
}

/// Multiplies each vertex block of `coin` into walker `axis` of the tensor state.
fn coin_along_axis(
    graph: &PortGraph,
    walkers: usize,
    axis: usize,
    coin: &Coin,
    amps: &mut [Complex64],
) {
    let n = graph.basis_len();
    let stride = n.pow((walkers - 1 - axis) as u32);
    let outer = amps.len() / (n * stride);
    let mut buf = Vec::with_capacity(graph.max_degree());
    for o in 0..outer {
        for inner in 0..stride {
            let base = o * n * stride + inner;
            for v in 0..graph.num_vertices() {
                let d = graph.degree(v);
                let start = base + graph.offset(v) * stride;
                buf.clear();
                buf.extend((0..d).map(|c| amps[start + c * stride]));
                let block = coin.block(v);
                for j in 0..d {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (k, x) in buf.iter().enumerate() {
                        acc += block[(j, k)] * x;
                    }
                    amps[start + j * stride] = acc;
                }
            }
        }
    }
}

fn shift_along_axis(
    n: usize,
    walkers: usize,
    axis: usize,
    shift: &Shift,
    input: &[Complex64],
    output: &mut [Complex64],
) {
    let stride = n.pow((walkers - 1 - axis) as u32);
    let outer = input.len() / (n * stride);
    for o in 0..outer {
        let base = o * n * stride;
        for (b, &target) in shift.targets().iter().enumerate() {
            let from = base + b * stride;
            let to = base + target * stride;
            output[to..to + stride].copy_from_slice(&input[from..from + stride]);
        }
    }
}
