use std::f64::consts::PI;

use hydroblow::profile::{build_profile, params_from_m, profile_point, GridKind, Profile};
use hydroblow::reduced1d::{
    compare_self_similar, estimate_blowup_time, integrate, restrict_to_coarse, rhs,
    select_fit_window, sup_norm, Controls1D, Discretization, FitError, Operator1D, SelfSimilar,
    State1D, Termination,
};
use hydroblow::specfun::SpecfunTolerances;
use proptest::prelude::*;

const M_UNIT: f64 = 0.8660254037844386;

fn unit_profile(n: usize) -> Profile {
    build_profile(&params_from_m(M_UNIT, 1.0).unwrap(), n, GridKind::Chebyshev).unwrap()
}

fn cheb(n: usize) -> Operator1D {
    Operator1D::new(Discretization::Chebyshev, n, 1.0)
}

fn state(op: &Operator1D, w: Vec<f64>) -> State1D {
    State1D {
        t: 0.0,
        z: op.z().to_vec(),
        w,
        height: op.height(),
    }
}

fn rel_sup(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    sup_norm(&d) / sup_norm(b)
}

#[test]
fn zero_state_has_zero_tendency() {
    for disc in [Discretization::Chebyshev, Discretization::Sine, Discretization::Fd4] {
        let op = Operator1D::new(disc, 32, 1.0);
        let r = rhs(&op, &State1D::zeros(&op)).unwrap();
        assert!(r.iter().all(|v| *v == 0.0), "{}", disc.name());
    }
}

#[test]
fn profile_is_its_own_tendency() {
    // W = φ/(1 − t) gives W_t = φ at t = 0
    let prof = unit_profile(256);
    let op = cheb(256);
    let r = rhs(&op, &State1D::from_profile(&prof, 1.0)).unwrap();
    assert!(rel_sup(&r, &prof.phi) <= 1e-6, "{}", rel_sup(&r, &prof.phi));
    for m in [0.5, 2.0, 10.0] {
        let prof = build_profile(&params_from_m(m, 1.0).unwrap(), 256, GridKind::Chebyshev).unwrap();
        let r = rhs(&op, &State1D::from_profile(&prof, 1.0)).unwrap();
        assert!(rel_sup(&r, &prof.phi) <= 1e-6, "m = {m}");
    }
}

#[test]
fn quadratic_homogeneity() {
    let prof = unit_profile(128);
    let op = cheb(128);
    let base = rhs(&op, &State1D::from_profile(&prof, 1.0)).unwrap();
    for lambda in [-1.0, 0.5, 3.0] {
        let r = rhs(&op, &State1D::from_profile(&prof, lambda)).unwrap();
        let scaled: Vec<f64> = base.iter().map(|v| lambda * lambda * v).collect();
        let err = sup_norm(&r.iter().zip(&scaled).map(|(a, b)| a - b).collect::<Vec<_>>());
        assert!(err <= 1e-12 * sup_norm(&scaled), "lambda = {lambda}: {err}");
    }
}

#[test]
fn smooth_data_on_every_scheme() {
    // W = sin(πz): W_z² − W W_zz = π², so W_t = π² z − (2z) π²/2 = 0
    for (disc, tol) in [
        (Discretization::Chebyshev, 1e-10),
        (Discretization::Sine, 1e-10),
        (Discretization::Fd4, 1e-5),
    ] {
        let op = Operator1D::new(disc, 64, 1.0);
        let w: Vec<f64> = op.z().iter().map(|z| (PI * z).sin()).collect();
        let r = rhs(&op, &state(&op, w)).unwrap();
        assert!(sup_norm(&r) <= tol, "{}: {}", disc.name(), sup_norm(&r));
    }
}

#[test]
fn top_compatibility_before_enforcement() {
    let prof = unit_profile(256);
    let op = cheb(256);
    let mut out = vec![0.0; 257];
    op.rhs_unforced(&prof.phi, &mut out);
    assert!(out[256].abs() <= 1e-8 * sup_norm(&out), "{}", out[256]);
    assert_eq!(out[0], 0.0);
}

#[test]
fn zero_data_stays_zero() {
    let op = cheb(64);
    let traj = integrate(&op, &State1D::zeros(&op), 1.0, &Controls1D::default(), None).unwrap();
    assert_eq!(traj.termination, Termination::EndTime);
    assert!(traj.final_state().w.iter().all(|v| *v == 0.0));
    assert!(matches!(
        estimate_blowup_time(&traj.growth_samples()),
        Err(FitError::TooFewSamples(_))
    ));
}

#[test]
fn follows_self_similar_solution() {
    let prof = unit_profile(256);
    let op = cheb(256);
    let controls = Controls1D {
        snapshot_times: vec![0.1, 0.2, 0.3, 0.4, 0.5],
        ..Default::default()
    };
    let traj = integrate(
        &op,
        &State1D::from_profile(&prof, 1.0),
        0.5,
        &controls,
        Some(&SelfSimilar::new(&prof, 1.0)),
    )
    .unwrap();
    let errs = compare_self_similar(&traj, &prof, 1.0).unwrap();
    assert_eq!(errs[0], (0.0, 0.0));
    assert_eq!(errs.len(), 6);
    for (t, e) in &errs {
        assert!(*e <= 1e-4, "t = {t}: {e}");
    }
    let w = &traj.snapshot_at(0.5).unwrap().w;
    let two_phi: Vec<f64> = prof.phi.iter().map(|v| 2.0 * v).collect();
    assert!(rel_sup(w, &two_phi) <= 1e-4);
    assert!(traj.max_top_compatibility <= 1e-8);
    for s in &traj.snapshots {
        assert_eq!(s.w[0], 0.0);
        assert_eq!(s.w[256], 0.0);
    }
}

#[test]
fn accurate_across_resolutions() {
    for n in [64, 128, 256] {
        let prof = unit_profile(n);
        let op = cheb(n);
        let controls = Controls1D {
            snapshot_times: vec![0.5],
            ..Default::default()
        };
        let traj = integrate(&op, &State1D::from_profile(&prof, 1.0), 0.5, &controls, None).unwrap();
        let err = compare_self_similar(&traj, &prof, 1.0).unwrap().last().unwrap().1;
        assert!(err <= 1e-6, "n = {n}: {err}");
    }
}

#[test]
fn blowup_time_and_scaling() {
    let prof = unit_profile(256);
    let op = cheb(256);
    for (lambda, expected) in [(1.0, 1.0), (2.0, 0.5)] {
        let traj = integrate(&op, &State1D::from_profile(&prof, lambda), 2.0, &Controls1D::default(), None)
            .unwrap();
        assert_eq!(traj.termination, Termination::Blowup);
        let fit = estimate_blowup_time(&select_fit_window(&traj.growth_samples(), f64::INFINITY, 10))
            .unwrap();
        assert!((fit.t_est - expected).abs() <= 1e-2 * expected, "lambda = {lambda}: {}", fit.t_est);
        assert!(fit.r2 >= 0.999);
        assert!(fit.t_est > fit.t_last);
    }
}

#[test]
fn negative_amplitude_does_not_blow_up_forward() {
    // W ↦ λW(z, λt) with λ = −1 maps the solution to one that blows up at t = −1
    let prof = unit_profile(64);
    let op = cheb(64);
    let traj = integrate(&op, &State1D::from_profile(&prof, -1.0), 2.0, &Controls1D::default(), None)
        .unwrap();
    assert_eq!(traj.termination, Termination::EndTime);
    let w = &traj.final_state().w;
    let expect: Vec<f64> = prof.phi.iter().map(|v| -v / 3.0).collect();
    assert!(rel_sup(w, &expect) <= 1e-6);
}

#[test]
fn twin_runs_agree() {
    let n = 128;
    let times: Vec<f64> = (1..=9).map(|i| 0.1 * i as f64).collect();
    let controls = Controls1D {
        snapshot_times: times.clone(),
        ..Default::default()
    };
    let run = |n: usize| {
        let prof = unit_profile(n);
        integrate(&cheb(n), &State1D::from_profile(&prof, 1.0), 0.9, &controls, None).unwrap()
    };
    let coarse = run(n);
    let fine = run(2 * n);
    for t in times {
        let a = &coarse.snapshot_at(t).unwrap().w;
        let b = restrict_to_coarse(&fine.snapshot_at(t).unwrap().w);
        let diff = sup_norm(&a.iter().zip(&b).map(|(x, y)| x - y).collect::<Vec<_>>());
        assert!(diff <= 1e-4, "t = {t}: {diff}");
    }
}

/// Two-arch data evaluated on a full grid symmetric about H/2.
fn odd_state(op: &Operator1D, m_half: f64) -> State1D {
    let h = op.height();
    let seg = params_from_m(m_half, h / 2.0).unwrap();
    let n = op.n();
    let mut w = vec![0.0; n + 1];
    for j in 1..n / 2 {
        let z = op.z()[j];
        w[j] = profile_point(&seg, z, &SpecfunTolerances::default()).unwrap().phi;
        w[n - j] = -w[j];
    }
    state(op, w)
}

#[test]
fn odd_symmetry_is_preserved() {
    let op = cheb(128);
    let init = odd_state(&op, M_UNIT);
    let controls = Controls1D {
        snapshot_times: (1..50).map(|i| 0.01 * i as f64).collect(),
        ..Default::default()
    };
    let traj = integrate(&op, &init, 0.5, &controls, None).unwrap();
    assert!(traj.snapshots.len() >= 50);
    for s in &traj.snapshots {
        let n = s.w.len() - 1;
        let scale = sup_norm(&s.w);
        let odd = (0..=n).map(|i| (s.w[i] + s.w[n - i]).abs()).fold(0.0, f64::max);
        assert!(odd <= 1e-10 * scale, "t = {}: {odd}", s.t);
    }
}

#[test]
fn rejects_mismatched_reference() {
    let prof = unit_profile(64);
    let op = cheb(64);
    let other = unit_profile(128);
    assert!(integrate(
        &op,
        &State1D::from_profile(&prof, 1.0),
        0.1,
        &Controls1D::default(),
        Some(&SelfSimilar::new(&other, 1.0))
    )
    .is_err());
    let traj = integrate(&op, &State1D::from_profile(&prof, 1.0), 0.1, &Controls1D::default(), None).unwrap();
    assert!(compare_self_similar(&traj, &other, 1.0).is_err());
}

#[test]
fn fit_examples() {
    let exact: Vec<(f64, f64)> = (0..6).map(|i| (0.1 * i as f64, 0.7 / (1.0 - 0.1 * i as f64))).collect();
    let fit = estimate_blowup_time(&exact).unwrap();
    assert!((fit.t_est - 1.0).abs() < 1e-12);
    assert!((fit.r2 - 1.0).abs() < 1e-12);
    let line: Vec<(f64, f64)> = (0..6).map(|i| (0.1 * i as f64, 1.0 / (2.0 - 0.1 * i as f64))).collect();
    assert!((estimate_blowup_time(&line).unwrap().t_est - 2.0).abs() < 1e-12);
    let flat: Vec<(f64, f64)> = (0..6).map(|i| (0.1 * i as f64, 4.0)).collect();
    assert!(matches!(estimate_blowup_time(&flat), Err(FitError::NoBlowup { .. })));
}

fn smooth_field(op: &Operator1D, coeffs: &[f64]) -> Vec<f64> {
    let h = op.height();
    op.z()
        .iter()
        .map(|z| {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * ((k + 1) as f64 * PI * z / h).sin())
                .sum()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn homogeneity_random(coeffs in prop::collection::vec(-1.0f64..1.0, 1..6), lambda in -4.0f64..4.0) {
        let op = cheb(64);
        let mut w = smooth_field(&op, &coeffs);
        w[0] = 0.0;
        w[64] = 0.0;
        let base = rhs(&op, &state(&op, w.clone())).unwrap();
        let scaled_w: Vec<f64> = w.iter().map(|v| lambda * v).collect();
        let r = rhs(&op, &state(&op, scaled_w)).unwrap();
        let expect: Vec<f64> = base.iter().map(|v| lambda * lambda * v).collect();
        let err = sup_norm(&r.iter().zip(&expect).map(|(a, b)| a - b).collect::<Vec<_>>());
        let d = op.derivatives(&w);
        let size = sup_norm(&d.wz).powi(2) + sup_norm(&w) * sup_norm(&d.wzz);
        prop_assert!(err <= 1e-12 * lambda * lambda * size);
    }

    #[test]
    fn compatibility_random(coeffs in prop::collection::vec(-1.0f64..1.0, 1..6)) {
        let op = cheb(64);
        let mut w = smooth_field(&op, &coeffs);
        w[0] = 0.0;
        w[64] = 0.0;
        let mut out = vec![0.0; 65];
        op.rhs_unforced(&w, &mut out);
        prop_assert!(out[64].abs() <= 1e-8 * sup_norm(&out).max(1.0));
    }
}
