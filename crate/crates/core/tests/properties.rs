use num_complex::Complex64 as C64;
use proptest::prelude::*;

use qwalk::config::{parse_key_values, Experiment, RunConfig};
use qwalk::disorder::{DisorderKind, DisorderSpec};
use qwalk::integrator::{run_trajectory, IntegrationConfig, SampleGrid, TrajectoryOptions};
use qwalk::lattice::{apply_hamiltonian, ExpansionPolicy, WavePacket};
use qwalk::observables::{variance, Carpet};
use qwalk::qubit::{analytic_averaged, axial_circular_variance, circular_variance, QubitParams};
use qwalk::spectral::eigensystem;

fn packet(parts: Vec<(f64, f64)>, offset: i64) -> WavePacket {
    let mut amps: Vec<C64> = parts.into_iter().map(|(a, b)| C64::new(a, b)).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm < 1e-6 {
        amps[0] = C64::new(1.0, 0.0);
    } else {
        amps.iter_mut().for_each(|a| *a /= norm);
    }
    WavePacket::from_parts(amps, offset, 0.0).unwrap()
}

fn amplitudes(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn hamiltonian_is_hermitian(
        a in amplitudes(8..9),
        b in amplitudes(8..9),
        eps in prop::collection::vec(-3.0..3.0f64, 8),
    ) {
        let pa = packet(a, 0);
        let pb = packet(b, 0);
        let ha = apply_hamiltonian(&pa, &eps).unwrap();
        let hb = apply_hamiltonian(&pb, &eps).unwrap();
        let lhs: C64 = pa.amplitudes().iter().zip(&hb).map(|(x, y)| x.conj() * y).sum();
        let rhs: C64 = ha.iter().zip(pb.amplitudes()).map(|(x, y)| x.conj() * y).sum();
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn static_samples_stay_in_box(w in 0.0..20.0f64, seed in any::<u64>(), start in -1000i64..1000, len in 1usize..64) {
        let field = DisorderSpec::static_box(w, seed).realize(0);
        let mut out = vec![0.0; len];
        field.fill(0.0, start, &mut out);
        prop_assert!(out.iter().all(|e| e.abs() <= 0.5 * w));
    }

    #[test]
    fn disorder_independent_of_window(seed in any::<u64>(), r in 0u64..100, a in -50i64..50, shift in 0i64..20, t in 0.0..10.0f64) {
        for spec in [DisorderSpec::static_box(3.0, seed), DisorderSpec::white(2.0, 0.1, seed), DisorderSpec::sinusoidal(1.0, seed)] {
            let field = spec.realize(r);
            let mut wide = vec![0.0; 40];
            let mut narrow = vec![0.0; 10];
            field.fill(t, a, &mut wide);
            field.fill(t, a + shift, &mut narrow);
            prop_assert_eq!(&wide[shift as usize..shift as usize + 10], &narrow[..]);
        }
    }

    #[test]
    fn spectral_evolution_is_unitary(
        a in amplitudes(2..30),
        seed in any::<u64>(),
        t in 0.0..50.0f64,
    ) {
        let psi = packet(a, -3);
        let eps = qwalk::disorder::sample_static(psi.len(), 4.0, seed);
        let out = eigensystem(&eps).unwrap().evolve(&psi, t).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rk4_conserves_norm(seed in any::<u64>(), w in 0.0..4.0f64, kind in 0usize..3) {
        let spec = match kind {
            0 => DisorderSpec::static_box(w, seed),
            1 => DisorderSpec::white(w, 0.05, seed),
            _ => DisorderSpec::sinusoidal(w, seed),
        };
        let cfg = IntegrationConfig::new(0.002, 5.0).with_samples(SampleGrid::Linear { count: 10 });
        let policy = ExpansionPolicy::default();
        let out = run_trajectory(
            WavePacket::delta(0),
            &spec.realize(1),
            &cfg,
            &TrajectoryOptions { expansion: Some(&policy), carpet_rows: Some((-40, 40)) },
        ).unwrap();
        prop_assert!(out.max_norm_drift < 1e-8);
        prop_assert!(out.series.sigma2.iter().all(|s| *s >= 0.0));
        prop_assert!(out.series.c_of_t.iter().all(|c| *c > 0.0 && *c <= 1.0 + 1e-12));
        let carpet = out.carpet.unwrap();
        for j in 0..carpet.columns() {
            let sum: f64 = carpet.column(j).iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn expansion_preserves_state(a in amplitudes(1..20), lo in 0i64..40, hi in 0i64..40) {
        let psi = packet(a, 5);
        let mut grown = psi.clone();
        grown.extend_to(psi.x_offset() - lo, psi.x_last() + hi);
        prop_assert_eq!(grown.len(), psi.len() + (lo + hi) as usize);
        for x in psi.coordinates() {
            prop_assert_eq!(grown.probability_at(x), psi.probability_at(x));
        }
        prop_assert_eq!(variance(&grown), variance(&psi));
    }

    #[test]
    fn grey_levels_span_full_range(a in amplitudes(3..15)) {
        let psi = packet(a, 0);
        let mut c = Carpet::new(0, psi.len() as i64 - 1);
        c.push_column(&psi);
        for log in [false, true] {
            let g = c.grey_levels(log, 1e-6);
            prop_assert_eq!(g.iter().copied().max(), Some(255));
        }
    }

    #[test]
    fn averaged_state_is_physical(w in 0.0..12.0f64, gamma in 0.1..3.0f64, t in 0.0..30.0f64) {
        let s = analytic_averaged(&QubitParams::new(gamma, w), t);
        prop_assert!(s.rho.abs() <= 0.5 + 1e-12);
        prop_assert!(s.r * s.r + s.j * s.j <= 0.25 + 1e-12);
    }

    #[test]
    fn circular_variances_in_unit_interval(thetas in prop::collection::vec(prop::option::of(-3.14159..3.14159f64), 1..50)) {
        for v in [circular_variance(&thetas), axial_circular_variance(&thetas)] {
            prop_assert!(v.is_nan() || (-1e-12..=1.0 + 1e-12).contains(&v));
        }
    }

    #[test]
    fn manifest_round_trips(
        n in 1usize..500,
        w in 0.0..50.0f64,
        seed in any::<u64>(),
        dt in 1e-4..0.1f64,
        ensemble in 1usize..100,
        log in any::<bool>(),
    ) {
        let mut cfg = RunConfig::defaults(Experiment::Localization);
        cfg.n = n;
        cfg.w = vec![w];
        cfg.seed = seed;
        cfg.dt = qwalk::config::Auto::Value(dt);
        cfg.ensemble = ensemble;
        cfg.log_scale = log;
        cfg.disorder = DisorderKind::StaticBox;
        let raw = parse_key_values(&cfg.to_manifest(), std::path::Path::new("m")).unwrap();
        prop_assert_eq!(RunConfig::from_map(Experiment::Localization, &raw).unwrap(), cfg);
    }
}
