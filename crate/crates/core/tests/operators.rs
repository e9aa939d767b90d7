use dicke_vrs::hilbert::*;
use dicke_vrs::models::{dicke_hamiltonian, hp_hamiltonian, rabi_hamiltonian, Cutoff, ModelParams};
use dicke_vrs::observables::expectation;
use proptest::prelude::*;

fn factor() -> impl Strategy<Value = Factor> {
    prop_oneof![
        (0usize..6).prop_map(|cutoff| Factor::Fock { cutoff }),
        (1usize..5).prop_map(|n_spins| Factor::Spin { n_spins }),
    ]
}

fn space() -> impl Strategy<Value = SpaceSpec> {
    prop::collection::vec(factor(), 1..4).prop_map(|f| SpaceSpec::new(f).unwrap())
}

proptest! {
    #[test]
    fn kron_dimension_law(a in space(), b in space()) {
        let ia = SparseOperator::identity(a.clone());
        let ib = SparseOperator::identity(b.clone());
        let k = ia.kron(&ib);
        prop_assert_eq!(k.dim(), a.dim() * b.dim());
        prop_assert_eq!(k.space().factors().len(), a.factors().len() + b.factors().len());
        prop_assert_eq!(k.nnz(), a.dim() * b.dim());
    }

    #[test]
    fn flat_index_round_trip(s in space(), seed in any::<u64>()) {
        let flat = (seed as usize) % s.dim();
        prop_assert_eq!(s.flat_index(&s.local_indices(flat)), flat);
    }

    #[test]
    fn local_hermitian_operators_are_exactly_hermitian(s in space()) {
        for slot in 0..s.factors().len() {
            match s.factors()[slot] {
                Factor::Fock { .. } => {
                    prop_assert!(number_op(&s, slot).unwrap().is_hermitian_exact());
                    prop_assert!(displacement_sum_op(&s, slot).unwrap().is_hermitian_exact());
                }
                Factor::Spin { .. } => {
                    let ops = spin_ops(&s, slot).unwrap();
                    prop_assert!(ops.x.is_hermitian_exact());
                    prop_assert!(ops.y.is_hermitian_exact());
                    prop_assert!(ops.z.is_hermitian_exact());
                }
            }
        }
        let parity = parity_op(&s);
        prop_assert!(parity.matmul(&parity).unwrap().sub(&SparseOperator::identity(s.clone())).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn hermitian_expectations_are_real(s in space(), re in prop::collection::vec(-1.0f64..1.0, 64), im in prop::collection::vec(-1.0f64..1.0, 64)) {
        let amps: Vec<C64> = (0..s.dim()).map(|k| C64::new(re[k % 64] + 1e-3, im[(k * 7) % 64])).collect();
        let psi = QuantumState::normalized(s.clone(), amps).unwrap();
        for slot in 0..s.factors().len() {
            let op = match s.factors()[slot] {
                Factor::Fock { .. } => displacement_sum_op(&s, slot).unwrap(),
                Factor::Spin { .. } => spin_ops(&s, slot).unwrap().y,
            };
            prop_assert!(expectation(&op, &psi).is_ok());
        }
    }

    #[test]
    fn model_hamiltonians_commute_with_parity(ratio in 0.0f64..1.5, n in 1usize..6, k in 2usize..10) {
        let p = ModelParams::from_ratio(1.0, 1.3, ratio).unwrap().with_spins(n).with_cutoff(Cutoff::Fixed(k));
        let mut hs = vec![dicke_hamiltonian(&p).unwrap(), rabi_hamiltonian(&p).unwrap()];
        // the two-oscillator form only exists below criticality
        if ratio <= 1.0 {
            hs.push(hp_hamiltonian(&p, k, k + 1).unwrap());
        }
        for h in hs {
            prop_assert!(h.is_hermitian_exact());
            let parity = parity_op(h.space());
            prop_assert!(h.commutator(&parity).unwrap().max_abs() < 1e-12);
        }
    }
}
