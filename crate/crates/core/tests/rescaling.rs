use geomflow_core::exact::ExactSolution;
use geomflow_core::flow::FlowTrajectory;
use geomflow_core::geometry::{resolved_nodes, scalar_curvature};
use geomflow_core::grid::{sample_grid, GridLayout};
use geomflow_core::rescaling::*;
use geomflow_core::Error;

fn rosenau_window(t_window: f64, j: u32) -> FlowTrajectory {
    rosenau_backward_data(t_window, backward_spacing(j), None).unwrap()
}

fn sphere_window(extent: f64) -> FlowTrajectory {
    let times: Vec<f64> = (0..=1024).map(|k| -64.0 + k as f64 * (64.0 - 0.01) / 1024.0).collect();
    FlowTrajectory::exact(&ExactSolution::Sphere, GridLayout::radial(extent, 200).unwrap(), &times, f64::INFINITY)
        .unwrap()
}

#[test]
fn rosenau_pick_sits_near_a_pole_mid_window() {
    let traj = rosenau_window(-8.0, 3);
    let pick = pick_point(&traj, -8.0, 0.9, 3).unwrap();
    // |t|(t - T) coth(-t)/2 scanned on a fine time grid
    let oracle = (1..8000)
        .map(|k| -8.0 + k as f64 * 1e-3)
        .max_by(|a, b| {
            let f = |t: f64| -t * (t + 8.0) / (-t).tanh();
            f(*a).total_cmp(&f(*b))
        })
        .unwrap();
    assert!(pick.t_j > -8.0 && pick.t_j < 0.0);
    assert!((pick.t_j - oracle).abs() < 0.1, "{} vs {oracle}", pick.t_j);
    let snap = &traj.snapshots[pick.snapshot];
    let resolved = resolved_nodes(snap);
    // the argmax can sit a few nodes inside the resolved range, where R's
    // growth per node is comparable to the roundoff tolerance
    let to_edge = (pick.node - resolved[0]).min(resolved.last().unwrap() - pick.node);
    assert!(to_edge <= 10, "pick {} nodes from the resolved edge", to_edge);
    assert!(pick.x_j.abs() > 8.0);
    assert!(pick.functional >= 0.9 * pick.supremum);
}

#[test]
fn pick_is_the_exhaustive_maximizer() {
    let traj = rosenau_window(-4.0, 2);
    let pick = pick_point(&traj, -4.0, 0.8, 2).unwrap();
    for g in &traj.snapshots {
        if g.t < -4.0 {
            continue;
        }
        let r = scalar_curvature(g);
        for i in resolved_nodes(g) {
            let f = g.t.abs() * (g.t + 4.0) * r[i] / 2.0;
            assert!(f <= pick.functional, "node {i} at t {} beats the pick", g.t);
        }
    }
}

#[test]
fn rescaled_intervals_grow_and_curvature_stays_bounded() {
    // at j = 1 the maximizer is the late edge of the window, where Rosenau
    // looks like a shrinking sphere; growth is checked from j = 2 on
    let mut prev = (0.0, 0.0);
    for j in 1..=6 {
        let tw = default_window(j);
        let traj = rosenau_window(tw, j);
        let pick = pick_point(&traj, tw, default_gamma(j), j).unwrap();
        assert!(pick.alpha > 0.0 && pick.omega > 0.0);
        if j >= 3 {
            assert!(pick.alpha > prev.0 && pick.omega > prev.1, "j {j}: {pick:?}");
        }
        prev = (pick.alpha, pick.omega);
        let d = dilate(&traj, pick).unwrap();
        assert!(d.curvature_bound_defect().unwrap() < 1e-6);
        if j >= 4 {
            let tip = scalar_curvature(&d.eval(0.0).unwrap())[pick.node];
            assert!((tip - 2.0).abs() < 1e-9, "dilated tip curvature {tip}");
        }
    }
    assert!(prev.0.min(prev.1) > 10.0);
}

#[test]
fn dilated_evaluator_rejects_times_outside_its_interval() {
    let traj = rosenau_window(-4.0, 2);
    let pick = pick_point(&traj, -4.0, 0.8, 2).unwrap();
    let d = dilate(&traj, pick).unwrap();
    assert!(d.eval(-pick.alpha - 1.0).is_err());
    assert!(d.eval(pick.omega + 1.0).is_err());
    assert!((d.original_time(0.0) - pick.t_j).abs() < 1e-15);
}

#[test]
fn sphere_picks_are_type_one() {
    let traj = sphere_window(4.0);
    for j in 2..=6 {
        let tw = default_window(j);
        let pick = pick_point(&traj, tw, default_gamma(j), j).unwrap();
        // |t| R = 1: omega is pinned at 1/2 and the functional grows only like |T|
        assert!((pick.omega - 0.5).abs() < 1e-3, "{pick:?}");
        assert!(pick.functional / tw.abs() <= 0.5 + 1e-3, "{pick:?}");
        if j == 6 {
            let profile = dilated_profile(&dilate(&traj, pick).unwrap()).unwrap();
            let d = profile_distance(&profile, profile.reach()).unwrap();
            assert!(d > 0.05, "sphere profile too close to the cigar: {d}");
        }
    }
}

#[test]
fn unit_cigar_profile_crosses_one_half() {
    let g = sample_grid(&ExactSolution::Cigar { r0: 1.0 }, GridLayout::radial(40.0, 8000).unwrap(), 0.0).unwrap();
    let p = RescaledProfile::from_grid(&g, 0).unwrap();
    let s_half = 2.0 * 2f64.sqrt().acosh();
    let s = p.normalized_s();
    let k = s.partition_point(|&v| v < s_half);
    let w = (s_half - s[k - 1]) / (s[k] - s[k - 1]);
    let rn = p.rn[k - 1] + w * (p.rn[k] - p.rn[k - 1]);
    assert!((rn - 0.5).abs() < 1e-4, "{rn}");
    assert!((cigar_profile(s_half) - 0.5).abs() < 1e-15);
    assert!(profile_distance(&p, 3.0).unwrap() < 1e-4);
    assert!(matches!(profile_distance(&p, 1e3), Err(Error::OutOfExtent { .. })));
}

#[test]
fn classifier_verdicts() {
    let sphere = classify_type(&sphere_window(4.0), -0.01).unwrap();
    assert_eq!(sphere.verdict, Verdict::Bounded);
    assert_eq!(sphere.label, VERDICT_LABEL);
    let rosenau = classify_type(&rosenau_window(-64.0, 1), -1.0).unwrap();
    assert_eq!(rosenau.verdict, Verdict::Diverging);
    for &(t, s) in &rosenau.samples {
        let expected = t.abs() / t.abs().tanh() / 2.0;
        assert!((s / expected - 1.0).abs() < 0.05, "S({t}) = {s}, expected about {expected}");
    }
    let times: Vec<f64> = (0..=64).map(|k| -64.0 + k as f64).collect();
    let flat =
        FlowTrajectory::exact(&ExactSolution::Flat, GridLayout::radial(5.0, 64).unwrap(), &times, f64::INFINITY).unwrap();
    let flat = classify_type(&flat, 0.0).unwrap();
    assert_eq!(flat.verdict, Verdict::Bounded);
    assert!(flat.samples.iter().all(|p| p.1 == 0.0));
}

#[test]
fn classifier_needs_enough_windows() {
    let times: Vec<f64> = (0..=40).map(|k| -8.0 + k as f64 * 0.175).collect();
    let traj =
        FlowTrajectory::exact(&ExactSolution::Sphere, GridLayout::radial(4.0, 64).unwrap(), &times, f64::INFINITY).unwrap();
    assert!(matches!(classify_type(&traj, -1.0), Err(Error::InsufficientWindow(_))));
}

#[test]
fn functional_is_invariant_under_parabolic_rescaling() {
    let traj = rosenau_window(-16.0, 1);
    for lambda in [0.5, 3.0] {
        let scaled = traj.parabolic_rescale(lambda).unwrap();
        for t in [-4.0, -8.0, -16.0] {
            let a = functional_sample(&traj, t, -1.0).unwrap();
            let b = functional_sample(&scaled, lambda * t, -lambda).unwrap();
            // the roundoff mask shifts slightly with the scale
            assert!((a / b - 1.0).abs() < 1e-5, "{a} {b}");
        }
    }
}
