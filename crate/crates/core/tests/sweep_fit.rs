use dicke_vrs::analytic::rabi_squeezing;
use dicke_vrs::models::Cutoff;
use dicke_vrs::solver::SolveConfig;
use dicke_vrs::sweep_fit::*;
use proptest::prelude::*;

fn sizes() -> Vec<f64> {
    vec![
        4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 32.0, 48.0, 64.0, 96.0, 128.0,
    ]
}

#[test]
fn dicke_occupation_grows_with_size() {
    let spec = SweepSpec {
        model: SweepModel::Dicke,
        axes: vec![Axis::values("n_spins", vec![2.0, 4.0, 8.0, 16.0])],
        fixed: FixedParams {
            ratio: 1.0,
            ..Default::default()
        },
        observables: vec!["n_a".into(), "n_b".into(), "parity".into(), "cutoff".into()],
        solve: SolveConfig::default(),
    };
    let table = run_sweep(&spec).unwrap();
    let n_a: Vec<f64> = table
        .column("n_a")
        .unwrap()
        .into_iter()
        .map(Option::unwrap)
        .collect();
    assert!(n_a.windows(2).all(|w| w[1] > w[0]), "{n_a:?}");
    for parity in table.column("parity").unwrap() {
        assert!((parity.unwrap().abs() - 1.0).abs() < 1e-10);
    }
    let again = run_sweep(&spec).unwrap();
    assert_eq!(table, again);
}

#[test]
fn rabi_map_follows_closed_forms() {
    let spec = SweepSpec {
        model: SweepModel::Effective,
        axes: vec![
            Axis::range("ratio", 0.1, 0.9, 3, Spacing::Linear),
            Axis::values("frequency_ratio", vec![1e-3, 1e-2]),
        ],
        fixed: FixedParams {
            cutoff: Cutoff::Fixed(60),
            ..Default::default()
        },
        observables: [
            "n_a",
            "gap",
            "xi_a",
            "rabi_n",
            "rabi_frequency_factor",
            "rabi_xi",
        ]
        .map(String::from)
        .to_vec(),
        solve: SolveConfig::default(),
    };
    let table = run_sweep(&spec).unwrap();
    assert_eq!(table.rows.len(), 6);
    for row in &table.rows {
        let [ratio, freq] = row.coordinates[..] else {
            panic!()
        };
        let v: Vec<f64> = row.values.iter().map(|x| x.unwrap()).collect();
        let closed = rabi_squeezing(ratio).unwrap();
        assert!((v[0] - closed.n_photons).abs() < 1e-8, "{row:?}");
        assert!((v[1] / freq - closed.omega_tilde_factor).abs() < 1e-8);
        assert!((v[2] - closed.xi).abs() < 1e-8);
        assert_eq!(v[3], closed.n_photons);
    }
}

#[test]
fn hp_sweep_closes_the_squeezing_loop() {
    let spec = SweepSpec {
        model: SweepModel::Hp,
        axes: vec![Axis::range("ratio", 0.0, 0.8, 3, Spacing::Inverse)],
        fixed: FixedParams {
            cutoff: Cutoff::Fixed(40),
            ..Default::default()
        },
        observables: [
            "xi_c",
            "xi_minus",
            "xi_d",
            "xi_plus",
            "gap_lower",
            "omega_tilde",
        ]
        .map(String::from)
        .to_vec(),
        solve: SolveConfig::default(),
    };
    for row in run_sweep(&spec).unwrap().rows {
        let v: Vec<f64> = row.values.iter().map(|x| x.unwrap()).collect();
        assert!(
            (v[0] - v[1]).abs() < 1e-6 && (v[2] - v[3]).abs() < 1e-6,
            "{row:?}"
        );
        assert!((v[4] - v[5]).abs() < 1e-6);
    }
}

#[test]
fn fit_reports_window_and_monotone_objective() {
    let pts: Vec<(f64, f64)> = [4.0, 6.0, 8.0, 12.0, 16.0]
        .iter()
        .enumerate()
        .map(|(i, &n): (usize, &f64)| {
            (
                n,
                0.2 * n.powf(0.35) - 0.05 + if i % 2 == 0 { 1e-3 } else { -1e-3 },
            )
        })
        .collect();
    let fit = power_law_fit(&pts).unwrap();
    assert!(fit.converged);
    assert!(fit.objective_non_increasing());
    assert_eq!(
        fit.window,
        FitWindow {
            n_min: 4.0,
            n_max: 16.0,
            points: 5
        }
    );
    assert!(fit.residual_rms > 0.0 && fit.beta_err > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn noiseless_power_laws_are_recovered(alpha in 0.1f64..20.0, beta in 0.1f64..1.0, gamma in -2.0f64..2.0) {
        let pts: Vec<(f64, f64)> = sizes().into_iter().map(|n| (n, alpha * n.powf(beta) + gamma)).collect();
        let fit = power_law_fit(&pts).unwrap();
        prop_assert!(fit.converged);
        prop_assert!(fit.objective_non_increasing());
        prop_assert!((fit.alpha - alpha).abs() <= 1e-6 * alpha.max(1.0), "{fit:?}");
        prop_assert!((fit.beta - beta).abs() <= 1e-6, "{fit:?}");
        prop_assert!((fit.gamma - gamma).abs() <= 1e-6 * gamma.abs().max(1.0), "{fit:?}");
    }

    #[test]
    fn fit_is_scale_covariant(beta in 0.2f64..0.9, c in 0.01f64..100.0, wiggle in 0.0f64..1e-3) {
        // larger scatter flattens the valley below what f64 can resolve at 1e-8
        let pts: Vec<(f64, f64)> = sizes()
            .into_iter()
            .enumerate()
            .map(|(i, n)| (n, 1.3 * n.powf(beta) + 0.4 + wiggle * ((i as f64) * 1.7).sin()))
            .collect();
        let scaled: Vec<(f64, f64)> = pts.iter().map(|&(n, y)| (n, c * y)).collect();
        let base = power_law_fit(&pts).unwrap();
        let fit = power_law_fit(&scaled).unwrap();
        prop_assert!((fit.beta - base.beta).abs() <= 1e-8 * base.beta.abs(), "{} vs {}", fit.beta, base.beta);
        prop_assert!((fit.alpha - c * base.alpha).abs() <= 1e-8 * (c * base.alpha).abs());
        prop_assert!((fit.gamma - c * base.gamma).abs() <= 1e-8 * (c * base.gamma).abs().max(c * 1e-3));
    }
}
