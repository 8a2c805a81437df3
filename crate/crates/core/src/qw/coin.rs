use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result, UnitarityViolation};
use crate::graph::PortGraph;

/// Dense complex square matrix acting on one vertex's port space.
pub type Block = DMatrix<Complex64>;

/// Tolerance for the column conditions of a unitary block.
pub const UNITARITY_TOL: f64 = 1e-10;

/// `H_D = H_{D/2} ⊗ H_2` for `D` a power of two.
pub fn hadamard(dim: usize) -> Result<Block> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::UnsupportedDimension(
            dim,
            "the Hadamard coin needs a power-of-two dimension",
        ));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h2 = Block::from_row_slice(
        2,
        2,
        &[
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(-s, 0.0),
        ],
    );
    let mut h = h2.clone();
    while h.nrows() < dim {
        h = h.kronecker(&h2);
    }
    Ok(h)
}

/// Grover diffusion `(2/D) J - I`.
pub fn grover(dim: usize) -> Result<Block> {
    if dim == 0 {
        return Err(Error::UnsupportedDimension(0, "the Grover coin needs D >= 1"));
    }
    let off = 2.0 / dim as f64;
    Ok(Block::from_fn(dim, dim, |i, j| {
        Complex64::new(if i == j { off - 1.0 } else { off }, 0.0)
    }))
}

/// Haar-distributed unitary via QR of a complex Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Block {
    let g = Block::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for k in 0..dim {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, k)] *= phase;
        }
    }
    q
}

/// Checks the column form of `W†W = I`: unit column norms and pairwise
/// orthogonal columns, each to within `tol`.
pub fn check_unitary(block: &Block, tol: f64) -> std::result::Result<(), UnitarityViolation> {
    if block.nrows() != block.ncols() {
        return Err(UnitarityViolation::NotSquare {
            rows: block.nrows(),
            cols: block.ncols(),
        });
    }
    let n = block.ncols();
    for k in 0..n {
        let norm_sq: f64 = block.column(k).iter().map(|w| w.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > tol {
            return Err(UnitarityViolation::ColumnNorm { column: k, norm_sq });
        }
    }
    for j in 0..n {
        for k in j + 1..n {
            let overlap: Complex64 = block
                .column(j)
                .iter()
                .zip(block.column(k).iter())
                .map(|(a, b)| a.conj() * b)
                .sum();
            if overlap.norm() > tol {
                return Err(UnitarityViolation::ColumnOverlap {
                    left: j,
                    right: k,
                    magnitude: overlap.norm(),
                });
            }
        }
    }
    Ok(())
}

/// Named coin families, instantiated per vertex at the vertex's degree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoinKind {
    Hadamard,
    Grover,
    Identity,
    RandomUnitary { seed: u64 },
}

/// Block-diagonal coin: one `d(v) x d(v)` block per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Coin {
    blocks: Vec<Block>,
}

impl Coin {
    pub fn build(graph: &PortGraph, kind: CoinKind) -> Result<Self> {
        let blocks = match kind {
            CoinKind::Hadamard => per_degree(graph, hadamard)?,
            CoinKind::Grover => per_degree(graph, grover)?,
            CoinKind::Identity => per_degree(graph, |d| Ok(Block::identity(d, d)))?,
            CoinKind::RandomUnitary { seed } => {
                use rand::SeedableRng;
                let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
                (0..graph.num_vertices())
                    .map(|v| random_unitary(graph.degree(v), &mut rng))
                    .collect()
            }
        };
        Ok(Self { blocks })
    }

    pub fn hadamard(graph: &PortGraph) -> Result<Self> {
        Self::build(graph, CoinKind::Hadamard)
    }

    pub fn grover(graph: &PortGraph) -> Result<Self> {
        Self::build(graph, CoinKind::Grover)
    }

    pub fn identity(graph: &PortGraph) -> Self {
        Self::build(graph, CoinKind::Identity).expect("identity coin exists for every degree")
    }

    /// Explicit per-vertex blocks, checked against the degrees and for unitarity.
    pub fn explicit(graph: &PortGraph, blocks: Vec<Block>) -> Result<Self> {
        let coin = Self::from_blocks_unchecked(blocks);
        coin.validate(graph)?;
        Ok(coin)
    }

    /// Accepts arbitrary blocks without the unitarity check. Evolving with
    /// such a coin breaks normalization; it exists for negative testing of
    /// the equivalence verifier.
    pub fn from_blocks_unchecked(blocks: Vec<Block>) -> Self {
        Self { blocks }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, v: usize) -> &Block {
        &self.blocks[v]
    }

    pub fn check_dimensions(&self, graph: &PortGraph) -> Result<()> {
        if self.blocks.len() != graph.num_vertices() {
            return Err(Error::DimensionMismatch(format!(
                "coin has {} blocks for {} vertices",
                self.blocks.len(),
                graph.num_vertices()
            )));
        }
        for (v, b) in self.blocks.iter().enumerate() {
            let d = graph.degree(v);
            if b.nrows() != d || b.ncols() != d {
                return Err(Error::DimensionMismatch(format!(
                    "coin block for vertex {v} is {}x{}, degree is {d}",
                    b.nrows(),
                    b.ncols()
                )));
            }
        }
        Ok(())
    }

    pub fn validate(&self, graph: &PortGraph) -> Result<()> {
        self.check_dimensions(graph)?;
        for (vertex, b) in self.blocks.iter().enumerate() {
            check_unitary(b, UNITARITY_TOL)
                .map_err(|condition| Error::NonUnitaryCoin { vertex, condition })?;
        }
        Ok(())
    }
}

fn per_degree(graph: &PortGraph, make: impl Fn(usize) -> Result<Block>) -> Result<Vec<Block>> {
    let mut cache: Vec<Option<Block>> = vec![None; graph.max_degree() + 1];
    (0..graph.num_vertices())
        .map(|v| {
            let d = graph.degree(v);
            if cache[d].is_none() {
                cache[d] = Some(make(d)?);
            }
            Ok(cache[d].clone().unwrap())
        })
        .collect()
}
