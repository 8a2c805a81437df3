//! Oracles built from the graph's neighbor lists alone, without the
//! library's operator or matrix code.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use qwalk::graph::PortGraph;

pub type Dense = DMatrix<Complex64>;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Basis index of `(v, c)` from cumulative degrees.
pub fn index(g: &PortGraph, v: usize, c: usize) -> usize {
    (0..v).map(|u| g.neighbors(u).len()).sum::<usize>() + c
}

pub fn basis_len(g: &PortGraph) -> usize {
    (0..g.num_vertices()).map(|v| g.neighbors(v).len()).sum()
}

/// `(vertex, port)` of every basis index.
pub fn states(g: &PortGraph) -> Vec<(usize, usize)> {
    (0..g.num_vertices())
        .flat_map(|v| (0..g.neighbors(v).len()).map(move |c| (v, c)))
        .collect()
}

/// `H[i][j] = (-1)^popcount(i & j) / sqrt(d)` for `d` a power of two.
pub fn hadamard_entries(d: usize) -> Dense {
    assert!(d.is_power_of_two());
    let s = 1.0 / (d as f64).sqrt();
    Dense::from_fn(d, d, |i, j| {
        let sign = if (i & j).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        Complex64::new(sign * s, 0.0)
    })
}

pub fn grover_entries(d: usize) -> Dense {
    Dense::from_fn(d, d, |i, j| {
        Complex64::new(2.0 / d as f64 - if i == j { 1.0 } else { 0.0 }, 0.0)
    })
}

/// Block-diagonal coin from one block per vertex.
pub fn dense_coin(g: &PortGraph, block: impl Fn(usize, usize) -> Dense) -> Dense {
    let n = basis_len(g);
    let mut w = Dense::from_element(n, n, zero());
    for v in 0..g.num_vertices() {
        let d = g.neighbors(v).len();
        let b = block(v, d);
        let o = index(g, v, 0);
        w.view_mut((o, o), (d, d)).copy_from(&b);
    }
    w
}

/// Moving shift: `(v, c) -> (η(v, c), c)`.
pub fn dense_moving(g: &PortGraph) -> Dense {
    let n = basis_len(g);
    let mut s = Dense::from_element(n, n, zero());
    for (v, c) in states(g) {
        let w = g.neighbors(v)[c];
        s[(index(g, w, c), index(g, v, c))] = Complex64::new(1.0, 0.0);
    }
    s
}

/// Arc shift: `(v, c) -> (w, position of v in w's list)` with `w = η(v, c)`.
pub fn dense_arc(g: &PortGraph) -> Dense {
    let n = basis_len(g);
    let mut s = Dense::from_element(n, n, zero());
    for (v, c) in states(g) {
        let w = g.neighbors(v)[c];
        let back = g.neighbors(w).iter().position(|&x| x == v).unwrap();
        s[(index(g, w, back), index(g, v, c))] = Complex64::new(1.0, 0.0);
    }
    s
}

pub fn kron(a: &Dense, b: &Dense) -> Dense {
    a.kronecker(b)
}

/// Diagonal coincidence phase for two walkers on the tensor basis.
pub fn dense_coincidence(g: &PortGraph, phi: f64) -> Dense {
    let st = states(g);
    let n = st.len();
    Dense::from_fn(n * n, n * n, |i, j| {
        if i != j {
            zero()
        } else if st[i / n].0 == st[i % n].0 {
            Complex64::from_polar(1.0, phi)
        } else {
            Complex64::new(1.0, 0.0)
        }
    })
}

pub fn to_vector(amps: &[Complex64]) -> DVector<Complex64> {
    DVector::from_column_slice(amps)
}

/// Vertex of each (tensor) basis index, tuples encoded first walker most significant.
pub fn vertex_codes(g: &PortGraph, walkers: usize) -> Vec<usize> {
    let st = states(g);
    let n = st.len();
    let v = g.num_vertices();
    (0..n.pow(walkers as u32))
        .map(|mut idx| {
            let mut digits = vec![0; walkers];
            for d in digits.iter_mut().rev() {
                *d = st[idx % n].0;
                idx /= n;
            }
            digits.iter().fold(0, |acc, &x| acc * v + x)
        })
        .collect()
}

pub fn distribution(psi: &DVector<Complex64>, codes: &[usize], size: usize) -> Vec<f64> {
    let mut rho = vec![0.0; size];
    for (i, a) in psi.iter().enumerate() {
        rho[codes[i]] += a.norm_sqr();
    }
    rho
}

/// Dense random-walk matrix from a shift permutation: the probability that
/// lands on basis state `j` came from the state `S^{-1} j`.
pub fn oracle_matrix(
    shift: &Dense,
    psi_t: &DVector<Complex64>,
    psi_next: &DVector<Complex64>,
    codes: &[usize],
    size: usize,
) -> DMatrix<f64> {
    let rho = distribution(psi_t, codes, size);
    let mut p = DMatrix::<f64>::zeros(size, size);
    for j in 0..shift.nrows() {
        let i = (0..shift.ncols()).find(|&i| shift[(j, i)].norm() > 0.5).unwrap();
        let u = codes[i];
        if rho[u] > 1e-14 {
            p[(codes[j], u)] += psi_next[j].norm_sqr() / rho[u];
        }
    }
    p
}

/// Exact accepted-sequence marginals under independent draws from `rho[t]`:
/// returns the acceptance probability and `marginals[t][v]`.
pub fn exact_rejection(rho: &[Vec<f64>], g: &PortGraph, length: usize) -> (f64, Vec<Vec<f64>>) {
    let n = g.num_vertices();
    let mut marginals = vec![vec![0.0; n]; length];
    let mut z = 0.0;
    let mut seq = vec![0usize; length];
    for code in 0..n.pow(length as u32) {
        let mut c = code;
        for s in seq.iter_mut() {
            *s = c % n;
            c /= n;
        }
        if !(1..length).all(|t| g.neighbors(seq[t - 1]).contains(&seq[t])) {
            continue;
        }
        let p: f64 = (0..length).map(|t| rho[t][seq[t]]).product();
        z += p;
        for t in 0..length {
            marginals[t][seq[t]] += p;
        }
    }
    for m in &mut marginals {
        for x in m.iter_mut() {
            *x /= z;
        }
    }
    (z, marginals)
}

pub fn tvd(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
