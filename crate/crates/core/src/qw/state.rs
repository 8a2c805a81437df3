use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::PortGraph;

pub const NORM_TOL: f64 = 1e-10;

/// Largest tensor-basis state (in amplitudes) allocated unless raised explicitly.
pub const DEFAULT_AMPLITUDE_BUDGET: usize = 1 << 26;

/// One entry of a JSON initial state: `{"vertex": 0, "port": 0, "re": 1.0, "im": 0.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisAmplitude {
    pub vertex: usize,
    pub port: usize,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Joint entry for several walkers; `vertices[i]`, `ports[i]` belong to walker `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TupleAmplitude {
    pub vertices: Vec<usize>,
    pub ports: Vec<usize>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Amplitudes over the `K`-fold tensor basis of (vertex, port) states.
///
/// Walker `i`'s basis index is the digit of weight `N^(K-1-i)` with
/// `N = Σ_v d(v)`; for one walker this is the plain (vertex, port) enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    basis: usize,
    walkers: usize,
    amps: Vec<Complex64>,
}

pub(crate) fn tensor_len(basis: usize, walkers: usize, budget: usize) -> Result<usize> {
    let required = (basis as u128).pow(walkers as u32);
    if required > budget as u128 {
        return Err(Error::MemoryBudget { required, budget });
    }
    Ok(required as usize)
}

impl WaveFunction {
    /// `|v, c⟩` for a single walker.
    pub fn localized(graph: &PortGraph, v: usize, c: usize) -> Result<Self> {
        let mut amps = vec![Complex64::new(0.0, 0.0); graph.basis_len()];
        amps[graph.basis_index(v, c)?] = Complex64::new(1.0, 0.0);
        Ok(Self {
            basis: graph.basis_len(),
            walkers: 1,
            amps,
        })
    }

    /// Wraps raw amplitudes without normalizing them.
    pub fn from_amplitudes(graph: &PortGraph, walkers: usize, amps: Vec<Complex64>) -> Result<Self> {
        let basis = graph.basis_len();
        if walkers == 0 {
            return Err(Error::Invalid("at least one walker is required".into()));
        }
        let expected = (basis as u128).pow(walkers as u32);
        if amps.len() as u128 != expected {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for a basis of {expected}",
                amps.len()
            )));
        }
        Ok(Self {
            basis,
            walkers,
            amps,
        })
    }

    /// Single-walker state from sparse entries; the result is normalized and
    /// the returned value is `|‖ψ‖² - 1|` before normalization.
    pub fn from_entries(graph: &PortGraph, entries: &[BasisAmplitude]) -> Result<(Self, f64)> {
        let mut amps = vec![Complex64::new(0.0, 0.0); graph.basis_len()];
        for e in entries {
            amps[graph.basis_index(e.vertex, e.port)?] += Complex64::new(e.re, e.im);
        }
        let mut psi = Self::from_amplitudes(graph, 1, amps)?;
        let deviation = psi.normalize()?;
        Ok((psi, deviation))
    }

    /// Joint state from sparse tuple entries, normalized as in [`from_entries`](Self::from_entries).
    pub fn from_tuple_entries(
        graph: &PortGraph,
        walkers: usize,
        entries: &[TupleAmplitude],
        budget: usize,
    ) -> Result<(Self, f64)> {
        let len = tensor_len(graph.basis_len(), walkers, budget)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); len];
        for e in entries {
            if e.vertices.len() != walkers || e.ports.len() != walkers {
                return Err(Error::TupleArity {
                    expected: walkers,
                    got: e.vertices.len().max(e.ports.len()),
                });
            }
            let mut idx = 0;
            for (&v, &c) in e.vertices.iter().zip(&e.ports) {
                idx = idx * graph.basis_len() + graph.basis_index(v, c)?;
            }
            amps[idx] += Complex64::new(e.re, e.im);
        }
        let mut psi = Self::from_amplitudes(graph, walkers, amps)?;
        let deviation = psi.normalize()?;
        Ok((psi, deviation))
    }

    /// Tensor product of single-walker states, first factor most significant.
    pub fn product(parts: &[WaveFunction], budget: usize) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Invalid("empty product".into()))?;
        if parts.iter().any(|p| p.walkers != 1 || p.basis != first.basis) {
            return Err(Error::DimensionMismatch(
                "product factors must be single-walker states on the same graph".into(),
            ));
        }
        tensor_len(first.basis, parts.len(), budget)?;
        let mut amps = vec![Complex64::new(1.0, 0.0)];
        for p in parts {
            amps = amps
                .iter()
                .flat_map(|a| p.amps.iter().map(move |b| a * b))
                .collect();
        }
        Ok(Self {
            basis: first.basis,
            walkers: parts.len(),
            amps,
        })
    }

    pub fn walkers(&self) -> usize {
        self.walkers
    }

    /// Single-walker basis size `N`.
    pub fn basis_len(&self) -> usize {
        self.basis
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn check_normalized(&self) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n));
        }
        Ok(())
    }

    fn normalize(&mut self) -> Result<f64> {
        let n = self.norm_sqr();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NotNormalized(n));
        }
        let scale = n.sqrt().recip();
        for a in &mut self.amps {
            *a *= scale;
        }
        Ok((n - 1.0).abs())
    }

    pub fn check_graph(&self, graph: &PortGraph) -> Result<()> {
        if self.basis != graph.basis_len() {
            return Err(Error::DimensionMismatch(format!(
                "state basis {} does not match graph basis {}",
                self.basis,
                graph.basis_len()
            )));
        }
        Ok(())
    }

    /// `ρ(v) = Σ_c |Ψ(v, c)|²`, indexed by vertex (or encoded vertex tuple).
    pub fn vertex_distribution(&self, graph: &PortGraph) -> Result<Vec<f64>> {
        self.check_graph(graph)?;
        let n = graph.num_vertices();
        if self.walkers == 1 {
            let mut rho = vec![0.0; n];
            for (i, a) in self.amps.iter().enumerate() {
                rho[graph.vertex_of(i)] += a.norm_sqr();
            }
            return Ok(rho);
        }
        let mut rho = vec![0.0; n.pow(self.walkers as u32)];
        for (idx, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            rho[self.vertex_tuple_of(graph, idx)] += p;
        }
        Ok(rho)
    }

    /// Encoded vertex tuple of tensor-basis index `idx`.
    pub(crate) fn vertex_tuple_of(&self, graph: &PortGraph, mut idx: usize) -> usize {
        let n = graph.num_vertices();
        let mut code = 0;
        let mut weight = 1;
        for _ in 0..self.walkers {
            code += graph.vertex_of(idx % self.basis) * weight;
            idx /= self.basis;
            weight *= n;
        }
        code
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn localized_distribution() {
        let g = PortGraph::cycle(5).unwrap();
        let psi = WaveFunction::localized(&g, 0, 0).unwrap();
        assert_eq!(psi.vertex_distribution(&g).unwrap(), vec![1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn entries_are_normalized() {
        let g = PortGraph::cycle(4).unwrap();
        let entries = [
            BasisAmplitude { vertex: 0, port: 0, re: 1.0, im: 0.0 },
            BasisAmplitude { vertex: 2, port: 1, re: 0.0, im: 1.0 },
        ];
        let (psi, dev) = WaveFunction::from_entries(&g, &entries).unwrap();
        assert!((dev - 1.0).abs() < 1e-15);
        assert!(psi.check_normalized().is_ok());
        let rho = psi.vertex_distribution(&g).unwrap();
        assert!((rho[0] - 0.5).abs() < 1e-15 && (rho[2] - 0.5).abs() < 1e-15);
        assert!(WaveFunction::from_entries(&g, &[]).is_err());
    }

    #[test]
    fn product_distribution_factorizes() {
        let g = PortGraph::cycle(4).unwrap();
        let a = WaveFunction::localized(&g, 1, 0).unwrap();
        let b = WaveFunction::localized(&g, 3, 1).unwrap();
        let ab = WaveFunction::product(&[a, b], DEFAULT_AMPLITUDE_BUDGET).unwrap();
        let rho = ab.vertex_distribution(&g).unwrap();
        assert_eq!(rho.len(), 16);
        assert_eq!(rho[4 + 3], 1.0);
    }

    #[test]
    fn budget_is_enforced() {
        let g = PortGraph::torus(&[10, 10]).unwrap();
        let psi = WaveFunction::localized(&g, 0, 0).unwrap();
        assert!(matches!(
            WaveFunction::product(&[psi.clone(), psi.clone(), psi], 1 << 20),
            Err(Error::MemoryBudget { .. })
        ));
    }

    #[test]
    fn tuple_entries() {
        let g = PortGraph::cycle(4).unwrap();
        let e = TupleAmplitude { vertices: vec![0, 2], ports: vec![0, 1], re: 2.0, im: 0.0 };
        let (psi, _) =
            WaveFunction::from_tuple_entries(&g, 2, std::slice::from_ref(&e), DEFAULT_AMPLITUDE_BUDGET).unwrap();
        assert_eq!(psi.vertex_distribution(&g).unwrap()[2], 1.0);
        assert!(WaveFunction::from_tuple_entries(&g, 3, &[e], DEFAULT_AMPLITUDE_BUDGET).is_err());
    }
}
