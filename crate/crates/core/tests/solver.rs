use dicke_vrs::analytic::{bogoliubov_frequencies, physical_frequencies, virtual_excitations};
use dicke_vrs::hilbert::{number_op, QuantumState, SpaceSpec, SparseOperator, C64};
use dicke_vrs::models::{dicke_hamiltonian, hp_hamiltonian, Cutoff, ModelKind, ModelParams};
use dicke_vrs::observables::expectation;
use dicke_vrs::solver::*;
use dicke_vrs::Error;
use nalgebra::SymmetricEigen;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn lanczos() -> SolveConfig {
    SolveConfig {
        dense_threshold: 0,
        max_lanczos_iters: 5000,
        ..Default::default()
    }
}

fn dense_energies(h: &SparseOperator) -> Vec<f64> {
    let mut e: Vec<f64> = match h.to_real_csr() {
        Some(real) => SymmetricEigen::new(real.to_dense())
            .eigenvalues
            .iter()
            .copied()
            .collect(),
        None => SymmetricEigen::new(h.to_dense())
            .eigenvalues
            .iter()
            .copied()
            .collect(),
    };
    e.sort_by(f64::total_cmp);
    e
}

/// Random sparse hermitian matrix with a few off-diagonals.
fn random_hermitian(dim: usize, seed: u64, complex: bool) -> SparseOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    for i in 0..dim {
        entries.push((i, i, C64::new(rng.gen_range(-3.0..3.0), 0.0)));
        for _ in 0..3 {
            let j = rng.gen_range(0..dim);
            if j == i {
                continue;
            }
            let v = C64::new(
                rng.gen_range(-1.0..1.0),
                if complex {
                    rng.gen_range(-1.0..1.0)
                } else {
                    0.0
                },
            );
            entries.push((i, j, v));
            entries.push((j, i, v.conj()));
        }
    }
    SparseOperator::from_entries(SpaceSpec::fock(dim - 1), entries, true).unwrap()
}

#[test]
fn lanczos_agrees_with_dense() {
    for (dim, seed, complex) in [
        (50, 1, false),
        (300, 2, true),
        (900, 3, false),
        (2000, 4, false),
    ] {
        let h = random_hermitian(dim, seed, complex);
        let dense_cfg = SolveConfig {
            dense_threshold: usize::MAX,
            ..Default::default()
        };
        let dense = low_spectrum(&h, 3, &dense_cfg).unwrap();
        assert_eq!(dense.method, Method::Dense);
        let sparse = low_spectrum(&h, 3, &lanczos()).unwrap();
        assert_eq!(sparse.method, Method::Lanczos);
        for k in 0..3 {
            let (s, d) = (sparse.energies[k], dense.energies[k]);
            assert!((s - d).abs() <= 1e-8, "dim {dim}: {s} vs {d}");
        }
        if dim <= 300 {
            let oracle = dense_energies(&h);
            assert!((0..3).all(|k| (dense.energies[k] - oracle[k]).abs() <= 1e-10));
        }
    }
}

#[test]
fn dicke_matches_dense_oracle() {
    let p = ModelParams::from_ratio(1.0, 1.0, 0.5)
        .unwrap()
        .with_spins(6)
        .with_cutoff(Cutoff::Fixed(40));
    let h = dicke_hamiltonian(&p).unwrap();
    let e0 = ground_state(&h, &lanczos()).unwrap().ground_energy();
    assert!((e0 - dense_energies(&h)[0]).abs() < 1e-9);
}

#[test]
fn reruns_are_bit_identical() {
    let h = random_hermitian(2500, 11, false);
    let cfg = SolveConfig {
        max_lanczos_iters: 5000,
        ..Default::default()
    };
    let a = low_spectrum(&h, 2, &cfg).unwrap();
    let b = low_spectrum(&h, 2, &cfg).unwrap();
    assert_eq!(a.energies, b.energies);
    assert_eq!(a.states, b.states);
}

#[test]
fn variational_bound_against_vacuum_trials() {
    for ratio in [0.3, 0.9] {
        let p = ModelParams::from_ratio(1.0, 1.0, ratio).unwrap();
        let h = hp_hamiltonian(&p, 30, 30).unwrap();
        let e0 = ground_state(&h, &SolveConfig::default())
            .unwrap()
            .ground_energy();
        let vacuum = QuantumState::basis(h.space().clone(), 0).unwrap();
        assert!(e0 <= expectation(&h, &vacuum).unwrap());
    }
}

#[test]
fn hp_ground_energy_example() {
    let p = ModelParams::from_ratio(1.0, 1.0, 0.5).unwrap();
    let h = hp_hamiltonian(&p, 60, 60).unwrap();
    let (lo, hi) = physical_frequencies(1.0, 0.5).unwrap();
    let e0 = ground_state(&h, &SolveConfig::default())
        .unwrap()
        .ground_energy();
    assert!((e0 - ((lo + hi) / 2.0 - 1.0)).abs() < 1e-8, "{e0}");
    assert!((e0 + 0.034_074_173_711_1).abs() < 1e-8);
}

#[test]
fn hp_low_spectrum_gaps() {
    let p = ModelParams::from_ratio(1.0, 1.0, 0.5).unwrap();
    let h = hp_hamiltonian(&p, 40, 40).unwrap();
    let res = low_spectrum(&h, 3, &SolveConfig::default()).unwrap();
    assert!((res.energies[1] - res.energies[0] - 0.5f64.sqrt()).abs() < 1e-6);
    assert!((res.energies[2] - res.energies[0] - 1.5f64.sqrt()).abs() < 1e-6);
}

#[test]
fn gap_frequencies_examples() {
    let cfg = SolveConfig::default();
    let free = hp_hamiltonian(&ModelParams::new(1.0, 1.5, 0.0).unwrap(), 6, 6).unwrap();
    let (lo, hi) = gap_frequencies(&free, &cfg).unwrap();
    assert!((lo - 1.0).abs() < 1e-10 && (hi - 1.5).abs() < 1e-10);

    let weak = hp_hamiltonian(&ModelParams::from_ratio(1.0, 1.0, 0.05).unwrap(), 20, 20).unwrap();
    let (lo, hi) = gap_frequencies(&weak, &cfg).unwrap();
    // the midpoint sits r²ω/8 below ω, not at ω
    let exact_mid = (0.95f64.sqrt() + 1.05f64.sqrt()) / 2.0;
    assert!(((lo + hi) / 2.0 - exact_mid).abs() < 1e-9);
    assert!(((lo + hi) / 2.0 - (1.0 - 0.05f64.powi(2) / 8.0)).abs() < 1e-6);

    // off resonance the lowest excitation is the lower Bogoliubov branch
    let p = ModelParams::new(1.0, 2.0, 1.0).unwrap();
    let h = hp_hamiltonian(&p, 40, 40).unwrap();
    let (eps_lo, eps_hi) = bogoliubov_frequencies(1.0, 2.0, 1.0).unwrap();
    let res = low_spectrum(&h, 2, &cfg).unwrap();
    assert!((res.energies[1] - res.energies[0] - eps_lo).abs() < 1e-8);
    let (lo, hi) = gap_frequencies(&h, &cfg).unwrap();
    assert!(
        (lo - eps_lo).abs() < 1e-7 && (hi - eps_hi).abs() < 1e-7,
        "{lo} {hi} vs {eps_lo} {eps_hi}"
    );
}

#[test]
fn bright_gaps_survive_level_crossing() {
    // at r = 0.9 the two-quantum lower-polariton level sits below the upper polariton
    let p = ModelParams::from_ratio(1.0, 1.0, 0.9).unwrap();
    let h = hp_hamiltonian(&p, 80, 80).unwrap();
    let (lo, hi) = physical_frequencies(1.0, 0.9).unwrap();
    let gaps = polariton_gaps(&h, &SolveConfig::default()).unwrap();
    assert!(
        (gaps.lower - lo).abs() < 1e-7 && (gaps.upper - hi).abs() < 1e-7,
        "{gaps:?}"
    );
    let naive = low_spectrum(&h, 3, &SolveConfig::default()).unwrap();
    assert!((naive.energies[2] - naive.energies[0] - 2.0 * lo).abs() < 1e-6);
}

#[test]
fn auto_cutoff_examples() {
    let cfg = SolveConfig::default();
    let free = ModelParams::new(1.0, 1.0, 0.0).unwrap();
    let (k, res) = auto_cutoff(|k| ModelKind::Hp.hamiltonian(&free, k), &cfg).unwrap();
    assert_eq!(k, 16);
    let n = expectation(&number_op(res.ground().space(), 0).unwrap(), res.ground()).unwrap();
    assert_eq!(n, 0.0);

    let p = ModelParams::from_ratio(1.0, 1.0, 0.9).unwrap();
    let (k, res) = auto_cutoff(|k| ModelKind::Hp.hamiltonian(&p, k), &cfg).unwrap();
    let s = res.ground();
    let total = expectation(&number_op(s.space(), 0).unwrap(), s).unwrap()
        + expectation(&number_op(s.space(), 1).unwrap(), s).unwrap();
    assert!(
        (total - virtual_excitations(0.9).unwrap()).abs() < 1e-4,
        "cutoff {k}: {total}"
    );

    let dicke = ModelParams::from_ratio(1.0, 1.0, 1.0)
        .unwrap()
        .with_spins(16);
    let (k, res) = auto_cutoff(|k| ModelKind::Dicke.hamiltonian(&dicke, k), &cfg).unwrap();
    let fixed = dicke.with_cutoff(Cutoff::Fixed(k));
    let dense = dense_energies(&dicke_hamiltonian(&fixed).unwrap())[0];
    assert!((res.ground_energy() - dense).abs() < 1e-9);
    assert!(res.cutoff_used == Some(k));
}

#[test]
fn budget_error_carries_residual() {
    let h = random_hermitian(3000, 5, false);
    let cfg = SolveConfig {
        max_lanczos_iters: 10,
        krylov_dim: 8,
        ..Default::default()
    };
    match ground_state(&h, &cfg) {
        Err(Error::NotConverged { residual, .. }) => {
            assert!(residual.is_finite() && residual > 0.0)
        }
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn residual_certificates_hold(seed in any::<u64>(), dim in 20usize..400) {
        let h = random_hermitian(dim, seed, seed % 2 == 0);
        let cfg = lanczos();
        let res = low_spectrum(&h, 2, &cfg).unwrap();
        for (e, state) in res.energies.iter().zip(&res.states) {
            let hv = h.apply_vec(state.amplitudes()).unwrap();
            let r: f64 = hv.iter().zip(state.amplitudes()).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt();
            prop_assert!(r <= cfg.eig_tol * (e.abs() + res.spectral_scale) * 1.0001, "residual {r}");
        }
        let dense = dense_energies(&h);
        prop_assert!((res.energies[0] - dense[0]).abs() <= 1e-8);
    }
}
