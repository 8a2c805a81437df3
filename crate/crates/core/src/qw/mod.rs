//! Coined quantum walk evolution.
//!
//! A state lives on the (vertex, port) basis of a [`PortGraph`](crate::graph::PortGraph),
//! or on its `K`-fold tensor power for several walkers. One step applies the
//! interaction `U` (multi-walker only), the block-diagonal coin `W`, and the
//! shift permutation `S`, in that order.

pub mod coin;
pub mod interaction;
pub mod shift;
pub mod state;
pub mod walk;

pub use coin::{check_unitary, grover, hadamard, random_unitary, Block, Coin, CoinKind};
pub use interaction::Interaction;
pub use shift::{Shift, ShiftKind};
pub use state::{BasisAmplitude, TupleAmplitude, WaveFunction, DEFAULT_AMPLITUDE_BUDGET};
pub use walk::{Schedule, Walk, WalkBuilder};
