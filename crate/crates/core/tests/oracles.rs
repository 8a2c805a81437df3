mod common;

use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;
use qwalk::baselines::{grover_torus_dp, grover_torus_sequence, rejection_sample};
use qwalk::equivalence::{build_sequence, verify_theorem_properties, BuildOptions, Materialize};
use qwalk::graph::PortGraph;
use qwalk::qw::{check_unitary, random_unitary, BasisAmplitude, Coin, CoinKind, Interaction, Shift, Walk, WaveFunction};
use qwalk::trajectory::sample_ensemble;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use common::*;

fn random_state(g: &PortGraph, walkers: usize, seed: u64) -> WaveFunction {
    use rand::Rng;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let len = basis_len(g).pow(walkers as u32);
    let amps: Vec<Complex64> = (0..len)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    WaveFunction::from_amplitudes(g, walkers, amps.into_iter().map(|a| a / norm).collect()).unwrap()
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn single_step_matches_dense_product() {
    let cases: Vec<(PortGraph, bool, bool)> = vec![
        (PortGraph::cycle(3).unwrap(), true, true),
        (PortGraph::cycle(5).unwrap(), true, false),
        (PortGraph::cycle(8).unwrap(), false, true),
        (PortGraph::complete(4).unwrap(), false, false),
        (PortGraph::complete(5).unwrap(), true, false),
        (PortGraph::random_regular(8, 4, 3).unwrap(), true, true),
    ];
    for (i, (g, hadamard, moving)) in cases.into_iter().enumerate() {
        let g = Arc::new(g);
        let coin = if hadamard && g.neighbors(0).len().is_power_of_two() {
            (Coin::hadamard(&g).unwrap(), dense_coin(&g, |_, d| hadamard_entries(d)))
        } else {
            (Coin::grover(&g).unwrap(), dense_coin(&g, |_, d| grover_entries(d)))
        };
        let shift = if moving {
            (Shift::moving(&g).unwrap(), dense_moving(&g))
        } else {
            (Shift::arc(&g), dense_arc(&g))
        };
        let walk = Walk::single(g.clone(), coin.0, shift.0).unwrap();
        let psi = random_state(&g, 1, i as u64);
        let engine = walk.step(&psi, 0).unwrap();
        let dense = &shift.1 * &coin.1 * to_vector(psi.amplitudes());
        assert!(max_diff(engine.amplitudes(), dense.as_slice()) <= 1e-10, "case {i}");
    }
}

#[test]
fn random_unitary_coin_matches_dense_product() {
    let g = Arc::new(PortGraph::random_regular(6, 2, 11).unwrap());
    let coin = Coin::build(&g, CoinKind::RandomUnitary { seed: 5 }).unwrap();
    let dense_w = dense_coin(&g, |v, _| coin.block(v).clone());
    let walk = Walk::single(g.clone(), coin, Shift::moving(&g).unwrap()).unwrap();
    let psi = random_state(&g, 1, 2);
    let dense = dense_moving(&g) * dense_w * to_vector(psi.amplitudes());
    assert!(max_diff(walk.step(&psi, 0).unwrap().amplitudes(), dense.as_slice()) <= 1e-10);
}

#[test]
fn two_walker_step_matches_dense_product() {
    let g = Arc::new(PortGraph::cycle(4).unwrap());
    let phi = std::f64::consts::PI;
    let walk = Walk::builder(g.clone())
        .walkers(2)
        .coin(Coin::hadamard(&g).unwrap())
        .shift(Shift::moving(&g).unwrap())
        .interaction(Interaction::CoincidencePhase { phi })
        .build()
        .unwrap();
    let w = dense_coin(&g, |_, d| hadamard_entries(d));
    let s = dense_moving(&g);
    let full = kron(&s, &s) * kron(&w, &w) * dense_coincidence(&g, phi);
    let psi = random_state(&g, 2, 9);
    let dense = full * to_vector(psi.amplitudes());
    assert!(max_diff(walk.step(&psi, 0).unwrap().amplitudes(), dense.as_slice()) <= 1e-10);
}

#[test]
fn transition_matrices_match_dense_oracle() {
    for (g, walkers) in [
        (PortGraph::cycle(5).unwrap(), 1),
        (PortGraph::random_regular(8, 4, 1).unwrap(), 1),
        (PortGraph::cycle(4).unwrap(), 2),
    ] {
        let g = Arc::new(g);
        let walk = Walk::builder(g.clone())
            .walkers(walkers)
            .coin(Coin::hadamard(&g).unwrap())
            .shift(Shift::moving(&g).unwrap())
            .interaction(Interaction::CoincidencePhase { phi: 0.7 })
            .build()
            .unwrap();
        let psi0 = WaveFunction::product(
            &vec![WaveFunction::localized(&g, 0, 0).unwrap(); walkers],
            1 << 20,
        )
        .unwrap();
        let opts = BuildOptions {
            materialize: Materialize::Full,
            ..BuildOptions::default()
        };
        let seq = build_sequence(&walk, &psi0, 6, &opts).unwrap();
        let s1 = dense_moving(&g);
        let s = if walkers == 1 { s1 } else { kron(&s1, &s1) };
        let codes = vertex_codes(&g, walkers);
        let size = g.num_vertices().pow(walkers as u32);
        let mut psi = psi0.clone();
        for m in &seq.matrices {
            let next = walk.step(&psi, m.time()).unwrap();
            let oracle = oracle_matrix(&s, &to_vector(psi.amplitudes()), &to_vector(next.amplitudes()), &codes, size);
            let rho = distribution(&to_vector(psi.amplitudes()), &codes, size);
            for u in (0..size).filter(|&u| rho[u] > 1e-14) {
                for v in 0..size {
                    assert!((m.get(v, u) - oracle[(v, u)]).abs() <= 1e-10, "t={} ({v},{u})", m.time());
                }
            }
            psi = next;
        }
    }
}

#[test]
fn torus_recursion_matches_engine() {
    for dims in [vec![4, 4], vec![8]] {
        let g = Arc::new(PortGraph::torus(&dims).unwrap());
        let walk = Walk::single(g.clone(), Coin::grover(&g).unwrap(), Shift::moving(&g).unwrap()).unwrap();
        let psi = WaveFunction::localized(&g, 0, 0).unwrap();
        let engine = walk.distributions(&psi, 30).unwrap();
        let dp = grover_torus_dp(&g, &psi, 30).unwrap();
        for (e, d) in engine.iter().zip(&dp) {
            let rho = d.vertex_distribution();
            assert!(e.iter().zip(&rho).all(|(a, b)| (a - b).abs() <= 1e-9));
        }
        let a = build_sequence(&walk, &psi, 30, &BuildOptions::default()).unwrap();
        let b = grover_torus_sequence(&g, &psi, 30, &BuildOptions::default()).unwrap();
        for (ma, mb) in a.matrices.iter().zip(&b.matrices) {
            let t = ma.time();
            for u in (0..g.num_vertices()).filter(|&u| a.rho[t][u] > 1e-12) {
                for v in 0..g.num_vertices() {
                    assert!((ma.get(v, u) - mb.get(v, u)).abs() <= 1e-9);
                }
            }
        }
    }
}

fn c4_spread() -> (Arc<PortGraph>, Vec<Vec<f64>>) {
    let g = Arc::new(PortGraph::cycle(4).unwrap());
    let walk = Walk::single(g.clone(), Coin::hadamard(&g).unwrap(), Shift::moving(&g).unwrap()).unwrap();
    let e = |vertex, port, re| BasisAmplitude { vertex, port, re, im: 0.0 };
    let (psi, _) = WaveFunction::from_entries(&g, &[e(0, 0, 1.0), e(1, 0, 0.6), e(2, 1, 0.4)]).unwrap();
    let rho = walk.distributions(&psi, 2).unwrap();
    (g, rho)
}

#[test]
fn rejection_matches_exact_enumeration() {
    let (g, rho) = c4_spread();
    let (z, exact) = exact_rejection(&rho, &g, 3);
    let report = rejection_sample(&rho, &g, 3, 200_000, 17).unwrap();
    assert!((report.acceptance_rate - z).abs() < 0.01);
    for t in 0..3 {
        assert!(tvd(&report.marginals[t], &exact[t]) <= 0.02);
    }
}

#[test]
fn marginals_pass_chi_square() {
    let g = Arc::new(PortGraph::cycle(4).unwrap());
    let walk = Walk::single(g.clone(), Coin::hadamard(&g).unwrap(), Shift::moving(&g).unwrap()).unwrap();
    let psi = WaveFunction::localized(&g, 0, 0).unwrap();
    let seq = build_sequence(&walk, &psi, 3, &BuildOptions::default()).unwrap();
    let m = 100_000;
    let ens = sample_ensemble(&seq, m, 2024).unwrap();
    // 1% critical values by degrees of freedom
    let critical = [0.0, 6.635, 9.210, 11.345];
    for t in 1..=3 {
        let support: Vec<usize> = (0..4).filter(|&v| seq.rho[t][v] > 1e-12).collect();
        let mut stat = 0.0;
        for &v in &support {
            let observed = ens.trajectories.iter().filter(|tr| tr.states[t] == v).count() as f64;
            let expected = m as f64 * seq.rho[t][v];
            stat += (observed - expected).powi(2) / expected;
        }
        let df = support.len() - 1;
        if df == 0 {
            assert!(ens.trajectories.iter().all(|tr| tr.states[t] == support[0]));
        } else {
            assert!(stat < critical[df], "t={t} chi2={stat} df={df}");
        }
    }
}

fn arb_graph() -> impl Strategy<Value = PortGraph> {
    prop_oneof![
        (3usize..12).prop_map(|n| PortGraph::cycle(n).unwrap()),
        (3usize..6, 3usize..6).prop_map(|(a, b)| PortGraph::torus(&[a, b]).unwrap()),
        (6usize..20, 1usize..3, any::<u64>()).prop_map(|(n, h, s)| PortGraph::random_regular(n, 2 * h, s).unwrap()),
        (3usize..7).prop_map(|n| PortGraph::complete(n).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn arc_shift_is_bijection_following_edges(g in arb_graph()) {
        let s = Shift::arc(&g);
        let mut seen = vec![false; s.len()];
        for i in 0..s.len() {
            let j = s.image(i);
            prop_assert!(!std::mem::replace(&mut seen[j], true));
            let (v, c) = g.basis_state(i);
            prop_assert_eq!(g.vertex_of(j), g.neighbors(v)[c]);
        }
        prop_assert!(s.follows_edges());
    }

    #[test]
    fn sigma_inverts_eta(g in arb_graph()) {
        for v in 0..g.num_vertices() {
            for c in 0..g.degree(v) {
                let w = g.eta(v, c).unwrap();
                prop_assert_eq!(g.sigma_inv(w, v).unwrap(), c);
                prop_assert_eq!(g.neighbors(w)[g.sigma(v, w).unwrap()], v);
            }
        }
    }

    #[test]
    fn random_unitary_blocks_are_unitary(d in 1usize..9, seed in any::<u64>()) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        prop_assert!(check_unitary(&random_unitary(d, &mut rng), 1e-12).is_ok());
    }

    #[test]
    fn sequences_satisfy_matrix_properties(g in arb_graph(), seed in any::<u64>(), grover in any::<bool>()) {
        let g = Arc::new(g);
        let coin = if grover { Coin::grover(&g).unwrap() } else { Coin::build(&g, CoinKind::RandomUnitary { seed }).unwrap() };
        let walk = Walk::single(g.clone(), coin, Shift::arc(&g)).unwrap();
        let psi = random_state(&g, 1, seed);
        let seq = build_sequence(&walk, &psi, 12, &BuildOptions::default()).unwrap();
        let report = verify_theorem_properties(&seq);
        prop_assert!(report.holds(1e-10), "{:?}", report);
    }

    #[test]
    fn evolution_conserves_norm(g in arb_graph(), seed in any::<u64>()) {
        let g = Arc::new(g);
        let walk = Walk::single(g.clone(), Coin::build(&g, CoinKind::RandomUnitary { seed }).unwrap(), Shift::arc(&g)).unwrap();
        let mut psi = random_state(&g, 1, seed ^ 1);
        for t in 0..10 {
            psi = walk.step(&psi, t).unwrap();
            prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn torus_recursion_tracks_signs_of_random_real_start() {
    use rand::Rng;
    let g = Arc::new(PortGraph::torus(&[5, 4]).unwrap());
    let mut rng = ChaCha20Rng::seed_from_u64(31);
    let amps: Vec<f64> = (0..g.basis_len()).map(|_| rng.random::<f64>() - 0.5).collect();
    let norm = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
    let psi = WaveFunction::from_amplitudes(&g, 1, amps.iter().map(|a| Complex64::new(a / norm, 0.0)).collect()).unwrap();
    let walk = Walk::single(g.clone(), Coin::grover(&g).unwrap(), Shift::moving(&g).unwrap()).unwrap();
    let engine = walk.evolve(&psi, 40).unwrap();
    let dp = grover_torus_dp(&g, &psi, 40).unwrap();
    for (e, d) in engine.iter().zip(&dp) {
        for (i, a) in e.amplitudes().iter().enumerate() {
            assert!((a.re - d.amplitude(i)).abs() <= 1e-9 && a.im.abs() <= 1e-12);
        }
    }
}
