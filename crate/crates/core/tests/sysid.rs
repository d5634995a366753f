use hvdc_fr::numerics::{self, Matrix};
use hvdc_fr::plant::{self, build_plant, PlantParams, SimOptions};
use hvdc_fr::signal::SignalRecord;
use hvdc_fr::statespace::{StateSpace, TimeDomain};
use hvdc_fr::sysid::{self, *};
use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Random stable discrete system with poles drawn inside radius 0.2..0.9.
fn random_discrete(rng: &mut ChaCha8Rng, n: usize, z: usize, v: usize, ts: f64) -> StateSpace {
    let mut a = Matrix::zeros(n, n);
    let mut k = 0;
    while k < n {
        let rho: f64 = rng.random_range(0.2..0.9);
        if k + 1 < n && rng.random_bool(0.5) {
            let th: f64 = rng.random_range(0.2..2.5);
            let (re, im) = (rho * th.cos(), rho * th.sin());
            a[(k, k)] = re;
            a[(k + 1, k + 1)] = re;
            a[(k, k + 1)] = im;
            a[(k + 1, k)] = -im;
            k += 2;
        } else {
            a[(k, k)] = if rng.random_bool(0.2) { -rho } else { rho };
            k += 1;
        }
    }
    let t = Matrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let t = t + Matrix::identity(n, n) * 2.0;
    let ti = numerics::inverse("test", &t).unwrap();
    let a = &t * a * ti;
    let b = Matrix::from_fn(n, v, |_, _| rng.sample::<f64, _>(StandardNormal));
    let c = Matrix::from_fn(z, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let d = Matrix::from_fn(z, v, |_, _| rng.sample::<f64, _>(StandardNormal));
    StateSpace::new(a, b, c, d, TimeDomain::Discrete { sample_time: ts }).unwrap()
}

fn white_input(rng: &mut ChaCha8Rng, v: usize, len: usize, ts: f64) -> SignalRecord {
    let rows = (0..len)
        .map(|_| (0..v).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    SignalRecord::new(ts, (0..v).map(|j| format!("u{j}")).collect(), rows).unwrap()
}

fn discrete_response(sys: &StateSpace, u: &SignalRecord) -> SignalRecord {
    let mut x = DVector::zeros(sys.order());
    let rows = u
        .samples()
        .iter()
        .map(|row| {
            let uk = DVector::from_column_slice(row);
            let y = &sys.c * &x + &sys.d * &uk;
            x = &sys.a * &x + &sys.b * &uk;
            y.iter().copied().collect()
        })
        .collect();
    SignalRecord::new(
        u.sample_time(),
        (0..sys.outputs()).map(|j| format!("y{j}")).collect(),
        rows,
    )
    .unwrap()
}

fn rel_err(a: &Matrix, b: &Matrix, scale: f64) -> f64 {
    (a - b).amax() / scale
}

/// Greedy nearest matching of two eigenvalue sets; returns the worst distance.
fn pole_distance(mut a: Vec<Complex64>, b: &[Complex64]) -> f64 {
    let mut worst: f64 = 0.0;
    for z in b {
        let (i, d) = a
            .iter()
            .enumerate()
            .map(|(i, w)| (i, (w - z).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        worst = worst.max(d);
        a.swap_remove(i);
    }
    worst
}

fn id_config(l: usize, p: usize, ts: f64) -> IdentifyConfig {
    IdentifyConfig {
        observer_order: l,
        hankel_blocks: p,
        sample_time: ts,
        feedthrough_tolerance: None,
        reflect_nonpositive: false,
        ..IdentifyConfig::default()
    }
}

#[test]
fn zero_output_gives_zero_observer_parameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let u = white_input(&mut rng, 2, 200, 0.1);
    let y = SignalRecord::zeros(0.1, &["a", "b"], 200).unwrap();
    let obs = estimate_observer_markov(&u, &y, 5).unwrap();
    assert_eq!(obs.feedthrough.amax(), 0.0);
    assert!(obs.blocks.iter().all(|b| b.input.amax() == 0.0 && b.output.amax() == 0.0));
}

#[test]
fn static_system_recovers_feedthrough_only() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let d = Matrix::from_row_slice(2, 3, &[1.0, -2.0, 0.5, 0.3, 0.0, 4.0]);
    let sys = StateSpace::new(
        Matrix::zeros(0, 0),
        Matrix::zeros(0, 3),
        Matrix::zeros(2, 0),
        d.clone(),
        TimeDomain::Discrete { sample_time: 0.1 },
    )
    .unwrap();
    let u = white_input(&mut rng, 3, 400, 0.1);
    let y = discrete_response(&sys, &u);
    let obs = estimate_observer_markov(&u, &y, 4).unwrap();
    assert!((&obs.feedthrough - &d).amax() < 1e-8);
    for b in &obs.blocks {
        assert!(b.input.amax() < 1e-8 && b.output.amax() < 1e-8);
    }
}

#[test]
fn four_state_system_markov_parameters_match() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sys = random_discrete(&mut rng, 4, 2, 2, 0.1);
    let u = white_input(&mut rng, 2, 800, 0.1);
    let y = discrete_response(&sys, &u);
    let obs = estimate_observer_markov(&u, &y, 20).unwrap();
    let rec = recover_system_markov(&obs, 20);
    let truth = sys.markov_parameters(21);
    let scale = truth[1..].iter().map(|m| m.amax()).fold(0.0, f64::max);
    for k in 0..=20 {
        assert!(rel_err(rec.block(k), &truth[k], scale) < 1e-6, "k = {k}");
    }
}

#[test]
fn first_order_system_gives_geometric_sequence() {
    let sys = StateSpace::new(
        Matrix::from_element(1, 1, 0.5),
        Matrix::from_element(1, 1, 1.0),
        Matrix::from_element(1, 1, 1.0),
        Matrix::zeros(1, 1),
        TimeDomain::Discrete { sample_time: 1.0 },
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let u = white_input(&mut rng, 1, 200, 1.0);
    let y = discrete_response(&sys, &u);
    let obs = estimate_observer_markov(&u, &y, 10).unwrap();
    let rec = recover_system_markov(&obs, 30);
    for k in 1..=30 {
        assert!((rec.block(k)[(0, 0)] - 0.5f64.powi(k as i32 - 1)).abs() < 1e-6);
    }
}

#[test]
fn recovery_is_linear_in_the_input_blocks() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let blocks: Vec<ObserverBlock> = (0..4)
        .map(|_| ObserverBlock {
            input: Matrix::from_fn(2, 3, |_, _| rng.random_range(-1.0..1.0)),
            output: Matrix::zeros(2, 2),
        })
        .collect();
    let obs = ObserverMarkov {
        sample_time: 0.1,
        feedthrough: Matrix::zeros(2, 3),
        blocks,
        regressor_rank: 0,
        regressor_rows: 0,
    };
    let mut doubled = obs.clone();
    for b in &mut doubled.blocks {
        b.input *= 2.0;
    }
    let a = recover_system_markov(&obs, 8);
    let b = recover_system_markov(&doubled, 8);
    for k in 1..=8 {
        assert!((b.block(k) - a.block(k) * 2.0).amax() < 1e-15);
    }

    let only_d = ObserverMarkov {
        blocks: vec![
            ObserverBlock {
                input: Matrix::zeros(2, 3),
                output: Matrix::zeros(2, 2),
            };
            3
        ],
        feedthrough: Matrix::from_element(2, 3, 0.7),
        ..obs
    };
    let rec = recover_system_markov(&only_d, 5);
    assert_eq!(rec.block(0), &Matrix::from_element(2, 3, 0.7));
    assert!((1..=5).all(|k| rec.block(k).amax() == 0.0));
}

#[test]
fn short_record_reports_required_length() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let u = white_input(&mut rng, 2, 50, 0.1);
    let y = white_input(&mut rng, 2, 50, 0.1);
    match estimate_observer_markov(&u, &y, 10) {
        Err(SysidError::TooShort { required, got }) => {
            assert_eq!(required, 160);
            assert_eq!(got, 50);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn zero_excitation_is_an_error() {
    let u = SignalRecord::zeros(0.1, &["u0", "u1"], 500).unwrap();
    let y = SignalRecord::zeros(0.1, &["y0", "y1"], 500).unwrap();
    assert!(matches!(
        identify(&u, &y, &id_config(10, 10, 0.1)),
        Err(SysidError::RankDeficient { .. })
    ));
}

fn markov_of(sys: &StateSpace, count: usize) -> MarkovSequence {
    let mut m = sys.markov_parameters(count + 1);
    let d = m.remove(0);
    MarkovSequence::new(0.1, d, m).unwrap()
}

#[test]
fn degenerate_hankel_and_shift() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let sys = random_discrete(&mut rng, 3, 2, 2, 0.1);
    let m = markov_of(&sys, 2);
    let h = build_hankel(&m, 1).unwrap();
    assert_eq!(h.h, *m.block(1));
    assert_eq!(h.h_shift, *m.block(2));
}

#[test]
fn hankel_blocks_are_constant_along_anti_diagonals() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let sys = random_discrete(&mut rng, 5, 3, 2, 0.1);
    let p = 6;
    let h = build_hankel(&markov_of(&sys, 2 * p), p).unwrap();
    let (z, v) = (3, 2);
    for i in 0..p - 1 {
        for j in 1..p {
            let a = h.h.view((i * z, j * v), (z, v)).into_owned();
            let b = h.h.view(((i + 1) * z, (j - 1) * v), (z, v)).into_owned();
            assert_eq!(a, b);
        }
    }
}

#[test]
fn hankel_with_one_block_short_drops_the_last_shifted_row() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let sys = random_discrete(&mut rng, 3, 2, 2, 0.1);
    let p = 5;
    let h = build_hankel(&markov_of(&sys, 2 * p - 1), p).unwrap();
    assert_eq!(h.h_shift.nrows(), (p - 1) * 2);
    assert!(h.note.is_some());
    let rep = era_realize(&h, 0.999, Some(3)).unwrap();
    let want = numerics::eigenvalues(&sys.a).unwrap();
    assert!(pole_distance(numerics::eigenvalues(&rep.realized.a).unwrap(), &want) < 1e-7);

    assert!(matches!(
        build_hankel(&markov_of(&sys, 2 * p - 2), p),
        Err(SysidError::InsufficientBlocks { required: 10, got: 8 })
    ));
}

#[test]
fn three_state_pole_matching() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let sys = random_discrete(&mut rng, 3, 2, 2, 0.1);
    let h = build_hankel(&markov_of(&sys, 40), 20).unwrap();
    let rep = era_realize(&h, 0.999, None).unwrap();
    assert_eq!(rep.retained_order, 3);
    assert!(rep.cumulative_energy_at_r >= 0.999);
    let want = numerics::eigenvalues(&sys.a).unwrap();
    assert!(pole_distance(numerics::eigenvalues(&rep.realized.a).unwrap(), &want) < 1e-7);
}

#[test]
fn full_rank_realization_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sys = random_discrete(&mut rng, 6, 3, 3, 0.1);
    let p = 8;
    let m = markov_of(&sys, 2 * p);
    let h = build_hankel(&m, p).unwrap();
    let usable = numerics::svd(&h.h).unwrap().rank(HSV_ZERO_TOL);
    assert!(usable >= 6);
    let rep = era_realize(&h, 1.0, Some(6)).unwrap();
    let got = rep.realized.markov_parameters(2 * p);
    let scale = (1..2 * p).map(|k| m.block(k).amax()).fold(0.0, f64::max);
    for k in 0..2 * p {
        assert!(rel_err(&got[k], m.block(k), scale) < 1e-9, "k = {k}");
    }
}

#[test]
fn unreachable_threshold_and_bad_order_are_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let sys = random_discrete(&mut rng, 2, 2, 2, 0.1);
    let h = build_hankel(&markov_of(&sys, 20), 10).unwrap();
    match era_realize(&h, 1.0, None) {
        Ok(rep) => assert!(rep.retained_order <= 2 + 1),
        Err(SysidError::ThresholdUnreachable { max_energy, .. }) => assert!(max_energy < 1.0),
        Err(e) => panic!("unexpected {e}"),
    }
    assert!(matches!(era_realize(&h, 1.5, None), Err(SysidError::BadThreshold(_))));
    assert!(matches!(
        era_realize(&h, 0.9, Some(15)),
        Err(SysidError::OrderOutOfRange { .. })
    ));
}

#[test]
fn integrator_converts_to_its_continuous_gain() {
    let ts = 0.1;
    let b = Matrix::from_row_slice(2, 1, &[0.7, -1.3]);
    let dss = StateSpace::new(
        Matrix::identity(2, 2),
        &b * ts,
        Matrix::identity(2, 2),
        Matrix::zeros(2, 1),
        TimeDomain::Discrete { sample_time: ts },
    )
    .unwrap();
    let c = to_continuous(&dss).unwrap();
    assert!(c.a.amax() < 1e-12);
    assert!((&c.b - &b).amax() < 1e-12);
}

fn random_continuous(rng: &mut ChaCha8Rng, n: usize, m: usize) -> StateSpace {
    let mut a = Matrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let shift = numerics::spectral_abscissa(&a).unwrap() + rng.random_range(0.2..2.0);
    a -= Matrix::identity(n, n) * shift;
    let b = Matrix::from_fn(n, m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let c = Matrix::from_fn(2, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    StateSpace::new(a, b, c, Matrix::zeros(2, m), TimeDomain::Continuous).unwrap()
}

#[test]
fn continuous_round_trip_and_spectral_mapping() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..10 {
        let sys = random_continuous(&mut rng, 5, 2);
        let dss = sys.discretize_zoh(0.05).unwrap();
        let back = to_continuous(&dss).unwrap();
        assert!((&back.a - &sys.a).amax() <= 1e-6 * sys.a.amax());
        assert!((&back.b - &sys.b).amax() <= 1e-6 * sys.b.amax());
        let mapped: Vec<Complex64> = numerics::eigenvalues(&back.a)
            .unwrap()
            .into_iter()
            .map(|z| (z * 0.05).exp())
            .collect();
        assert!(pole_distance(mapped, &numerics::eigenvalues(&dss.a).unwrap()) < 1e-7);
    }
}

#[test]
fn log_failure_advises_smaller_sample_time() {
    let dss = StateSpace::new(
        Matrix::from_element(1, 1, -0.5),
        Matrix::from_element(1, 1, 1.0),
        Matrix::from_element(1, 1, 1.0),
        Matrix::zeros(1, 1),
        TimeDomain::Discrete { sample_time: 0.1 },
    )
    .unwrap();
    let err = to_continuous(&dss).unwrap_err();
    assert!(err.to_string().contains("reduce the sample time"));
    let mut fixed = dss.clone();
    assert_eq!(reflect_nonpositive_modes(&mut fixed, 1e-6).unwrap(), 1);
    assert!((fixed.a[(0, 0)] - 0.5).abs() < 1e-12);
    assert!(to_continuous(&fixed).is_ok());
}

#[test]
fn reflection_keeps_the_rest_of_the_spectrum_and_b_c() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut sys = random_discrete(&mut rng, 6, 2, 2, 0.1);
    sys.a = {
        let t = Matrix::from_fn(6, 6, |i, j| if i == j { 2.0 } else { rng.random_range(-0.5..0.5) });
        let ti = numerics::inverse("test", &t).unwrap();
        let diag = Matrix::from_diagonal(&DVector::from_column_slice(&[-0.4, 0.3, 0.5, -0.0, 0.8, 0.6]));
        &t * diag * ti
    };
    let before = sys.clone();
    let moved = reflect_nonpositive_modes(&mut sys, 1e-6).unwrap();
    assert_eq!(moved, 2);
    assert_eq!(sys.b, before.b);
    assert_eq!(sys.c, before.c);
    let want: Vec<Complex64> = [0.4, 0.3, 0.5, 1e-6, 0.8, 0.6]
        .iter()
        .map(|&r| Complex64::new(r, 0.0))
        .collect();
    assert!(pole_distance(numerics::eigenvalues(&sys.a).unwrap(), &want) < 1e-8);
}

/// Sum of squared singular values beyond order `n`, relative to the largest.
#[test]
fn hankel_singular_values_vanish_beyond_the_true_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for n in [2, 4, 7] {
        let sys = random_discrete(&mut rng, n, 3, 2, 0.1);
        let h = build_hankel(&markov_of(&sys, 30), 15).unwrap();
        let sv = numerics::svd(&h.h).unwrap().singular_values;
        assert!(sv[n - 1] > 1e-8 * sv[0]);
        assert!(sv[n..].iter().all(|s| *s <= 1e-8 * sv[0]), "n = {n}");
    }
}

fn step_errors(truth: &StateSpace, model: &StateSpace, column: usize, len: usize) -> Vec<f64> {
    let ts = 0.1;
    let v = truth.inputs();
    let rows = (0..len)
        .map(|_| (0..v).map(|j| if j == column { 1.0 } else { 0.0 }).collect())
        .collect();
    let u = SignalRecord::new(ts, (0..v).map(|j| format!("u{j}")).collect(), rows).unwrap();
    let yt = sysid::sampled_response(truth, &u).unwrap();
    let ym = sysid::sampled_response(model, &u).unwrap();
    (0..truth.outputs())
        .map(|j| nrmse(&ym.column(j), &yt.column(j)))
        .collect()
}

#[test]
fn self_consistent_reidentification() {
    let plant = build_plant(&PlantParams::jh()).unwrap();
    let (first, u, _) =
        identify_plant(&plant, &ExcitationConfig::default(), &IdentifyConfig::default(), SimOptions::default())
            .unwrap();
    let y = sysid::sampled_response(&first.continuous, &u).unwrap();
    let cfg = IdentifyConfig {
        r_override: Some(first.report.retained_order),
        ..IdentifyConfig::default()
    };
    let second = identify(&u, &y, &cfg).unwrap();
    for col in 0..6 {
        let errs = step_errors(&first.continuous, &second.continuous, col, 600);
        assert!(errs.iter().all(|e| *e < 1e-4), "input {col}: {errs:?}");
    }
}

fn truth_step(plant: &plant::ContinuousPlant, magnitude: f64, len: usize) -> (SignalRecord, SignalRecord) {
    let labels = plant_input_labels();
    let rows = (0..len)
        .map(|_| (0..6).map(|j| if j == 4 { magnitude } else { 0.0 }).collect())
        .collect();
    let u = SignalRecord::new(0.1, labels.iter().map(|s| s.to_string()).collect(), rows).unwrap();
    let y = plant_response(plant, &u, SimOptions::default()).unwrap();
    (u, y)
}

fn plant_step_nrmse(preset: PlantParams) -> (Identified, Vec<f64>) {
    let plant = build_plant(&preset).unwrap();
    let (id, _, _) =
        identify_plant(&plant, &ExcitationConfig::default(), &IdentifyConfig::default(), SimOptions::default())
            .unwrap();
    let (u, yt) = truth_step(&plant, 0.3, 601);
    let ym = sysid::sampled_response(&id.continuous, &u).unwrap();
    let errs = (0..3).map(|j| nrmse(&ym.column(j), &yt.column(j))).collect();
    (id, errs)
}

#[test]
fn identified_plant_models_match_load_step() {
    for preset in [PlantParams::jh(), PlantParams::cigre()] {
        let (id, errs) = plant_step_nrmse(preset);
        let rep = &id.report;
        assert!(rep.retained_order <= 30, "r = {}", rep.retained_order);
        assert!(rep.cumulative_energy.windows(2).all(|w| w[1] >= w[0]));
        assert!(rep.order_at_99_9_percent <= rep.retained_order);
        assert!(errs.iter().all(|e| *e < 0.02), "{errs:?}");
        assert!(id.observer.feedthrough.amax() <= 1e-6);
        for z in numerics::eigenvalues(&id.continuous.a).unwrap() {
            assert!(z.re.is_finite());
        }
    }
}

#[test]
fn identified_models_round_trip() {
    let plant = build_plant(&PlantParams::jh()).unwrap();
    let (id, _, _) =
        identify_plant(&plant, &ExcitationConfig::default(), &IdentifyConfig::default(), SimOptions::default())
            .unwrap();
    let back = id.continuous.discretize_zoh(0.1).unwrap();
    assert!((&back.a - &id.discrete.a).amax() <= 1e-6 * id.discrete.a.amax());
    assert!((&back.b - &id.discrete.b).amax() <= 1e-6 * id.discrete.b.amax());
}

#[test]
fn report_serializes_with_full_singular_value_list() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let sys = random_discrete(&mut rng, 3, 2, 2, 0.1);
    let h = build_hankel(&markov_of(&sys, 20), 10).unwrap();
    let rep = era_realize(&h, 0.999, None).unwrap();
    let json = serde_json::to_string(&rep).unwrap();
    let back: EraReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back.singular_values.len(), 20);
    assert_eq!(back.retained_order, rep.retained_order);
}

#[test]
fn excitation_is_seeded_and_held() {
    let cfg = ExcitationConfig::default();
    let a = excitation(&cfg, 0.1, &plant_input_labels()).unwrap();
    let b = excitation(&cfg, 0.1, &plant_input_labels()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 2001);
    assert_eq!(a.width(), 6);
    assert_eq!(a.samples()[0], a.samples()[9]);
    assert!(a.samples().iter().flatten().all(|x| x.abs() <= 0.05));
    let c = excitation(&ExcitationConfig { seed: 8, ..cfg }, 0.1, &plant_input_labels()).unwrap();
    assert_ne!(a, c);
}

/// Noise robustness on a benchmark system whose outputs are of order one.
#[test]
fn noisy_identification_stays_within_five_percent() {
    let mut sys_rng = ChaCha8Rng::seed_from_u64(17);
    let truth_d = random_discrete(&mut sys_rng, 4, 2, 2, 0.1);
    let truth_d = StateSpace {
        d: Matrix::zeros(2, 2),
        ..truth_d
    };
    let mut reflected = truth_d.clone();
    reflect_nonpositive_modes(&mut reflected, 1e-6).unwrap();
    let truth = to_continuous(&reflected).unwrap();
    let truth_d = truth.discretize_zoh(0.1).unwrap();
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let u = white_input(&mut rng, 2, 2000, 0.1);
        let mut y = discrete_response(&truth_d, &u);
        for k in 0..y.len() {
            for v in y.sample_mut(k) {
                *v += 1e-3 * rng.sample::<f64, _>(StandardNormal);
            }
        }
        let cfg = IdentifyConfig {
            energy_threshold: 0.999,
            reflect_nonpositive: true,
            ..id_config(10, 20, 0.1)
        };
        let id = identify(&u, &y, &cfg).unwrap();
        for col in 0..2 {
            let errs = step_errors(&truth, &id.continuous, col, 300);
            worst = errs.into_iter().fold(worst, f64::max);
        }
    }
    assert!(worst < 0.05, "worst step NRMSE {worst}");
}

#[derive(Debug, Clone)]
struct Case {
    n: usize,
    z: usize,
    v: usize,
    seed: u64,
}

fn case() -> impl Strategy<Value = Case> {
    (2usize..=8, 1usize..=3, 1usize..=3, any::<u64>()).prop_map(|(n, z, v, seed)| Case { n, z, v, seed })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn okid_is_exact_on_noise_free_data(c in case()) {
        let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
        let sys = random_discrete(&mut rng, c.n, c.z, c.v, 0.1);
        let l = c.n.div_ceil(c.z) + 2;
        let len = min_record_length(l, c.v, c.z).max(200) * 2;
        let u = white_input(&mut rng, c.v, len, 0.1);
        let y = discrete_response(&sys, &u);
        let obs = estimate_observer_markov(&u, &y, l).unwrap();
        let m = 30;
        let rec = recover_system_markov(&obs, m);
        let truth = sys.markov_parameters(m + 1);
        let scale = truth.iter().map(|b| b.amax()).fold(0.0, f64::max);
        for k in 0..=m {
            prop_assert!(rel_err(rec.block(k), &truth[k], scale) < 1e-6, "k = {}", k);
        }
    }

    #[test]
    fn truncation_is_monotone_on_exact_data(c in case()) {
        let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
        let sys = random_discrete(&mut rng, c.n, c.z, c.v, 0.1);
        let p = 12;
        let m = markov_of(&sys, 2 * p);
        let h = build_hankel(&m, p).unwrap();
        let full = era_realize(&h, 0.5, None).unwrap();
        prop_assert!(full.cumulative_energy.windows(2).all(|w| w[1] >= w[0]));
        let usable = numerics::svd(&h.h).unwrap().rank(HSV_ZERO_TOL).min(c.n);
        let mut last = f64::INFINITY;
        for r in 1..=usable {
            let rep = era_realize(&h, 0.5, Some(r)).unwrap();
            let got = rep.realized.markov_parameters(2 * p);
            let err = (1..2 * p)
                .map(|k| (&got[k] - m.block(k)).norm_squared())
                .sum::<f64>()
                .sqrt();
            let scale = (1..2 * p).map(|k| m.block(k).norm_squared()).sum::<f64>().sqrt();
            prop_assert!(err <= last + 1e-9 * scale, "r = {}: {} > {}", r, err, last);
            last = err;
        }
    }
}
