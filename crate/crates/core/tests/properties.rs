use std::f64::consts::TAU;

use proptest::prelude::*;

use geomflow_core::embedding::{embed, profile_from_metric};
use geomflow_core::exact::{ChartPoint, ExactSolution};
use geomflow_core::flow::{step, Scheme, SolverConfig};
use geomflow_core::geometry::*;
use geomflow_core::grid::{rosenau_layout, sample_grid, ConformalGrid, GridLayout};
use geomflow_core::io::{format_f64, Checkpoint};

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decimal_form_round_trips(bits in any::<u64>()) {
        let x = f64::from_bits(bits);
        prop_assume!(x.is_finite());
        prop_assert_eq!(format_f64(x).parse::<f64>().unwrap().to_bits(), bits);
    }

    #[test]
    fn checkpoints_round_trip(
        u in prop::collection::vec(1e-300f64..1e300, 16..64),
        t in -1e6f64..1e6,
        lo in -50.0f64..0.0,
        width in 1e-3f64..100.0,
    ) {
        let layout = GridLayout::cylinder(TAU, lo, lo + width, u.len()).unwrap();
        let g = ConformalGrid::new(layout, u, t, None).unwrap();
        let back = Checkpoint::parse(&Checkpoint::from_grid(&g, Some(Scheme::SemiImplicit)).render())
            .unwrap()
            .to_grid()
            .unwrap();
        prop_assert_eq!(back.layout, g.layout);
        prop_assert_eq!(back.t.to_bits(), g.t.to_bits());
        prop_assert!(back.u.iter().zip(&g.u).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn rosenau_is_even(x in 0.0f64..800.0, t in -50.0f64..-1e-3) {
        let s = ExactSolution::Rosenau;
        let a = ChartPoint::cylinder(x, 0.3);
        let b = ChartPoint::cylinder(-x, 1.1);
        prop_assert_eq!(s.eval_u(a, t).unwrap(), s.eval_u(b, t).unwrap());
        prop_assert_eq!(s.eval_r(a, t).unwrap(), s.eval_r(b, t).unwrap());
    }

    #[test]
    fn sphere_type_one_functional(rho in 0.0f64..1e3, t in -1e3f64..-1e-6) {
        let r = ExactSolution::Sphere.eval_r(ChartPoint::radial(rho).unwrap(), t).unwrap();
        prop_assert!((t.abs() * r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn soliton_center_is_steady(beta in 0.1f64..5.0, delta in 0.1f64..5.0, t in -2.0f64..2.0, cx in -3.0f64..3.0) {
        let s = ExactSolution::DsSoliton { beta, delta, center: [cx, 0.0] };
        let p = ChartPoint::Plane { x: cx, y: 0.0 };
        let r0 = s.eval_r(p, 0.0).unwrap();
        prop_assert!(rel(s.eval_r(p, t).unwrap(), r0) < 1e-12);
    }

    #[test]
    fn profiles_of_cigars_are_embeddable(r0 in 0.25f64..16.0) {
        let g = sample_grid(&ExactSolution::Cigar { r0 }, GridLayout::radial(40.0, 800).unwrap(), 0.0).unwrap();
        let p = profile_from_metric(&g).unwrap();
        prop_assert!(p.hprime.iter().all(|&v| (0.0..=1.0).contains(&v)));
        let surf = embed(&p).unwrap();
        prop_assert!(surf.z.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn accepted_steps_keep_u_positive(amp in 0.0f64..3.0, freq in 0.1f64..2.0, dt in 1e-4f64..0.5) {
        let layout = rosenau_layout(10.0, 201).unwrap();
        let g = ConformalGrid::from_fn(layout, 0.0, |x| (amp * (freq * x).sin() - 0.1 * x * x).exp()).unwrap();
        for scheme in [Scheme::SemiImplicit, Scheme::ExplicitRK2] {
            let cfg = SolverConfig::with_scheme(scheme);
            // oversized steps may be refused, but never accepted with u <= 0
            match step(&g, dt, &cfg) {
                Ok((next, _)) => prop_assert!(next.u.iter().all(|&v| v > 0.0 && v.is_finite())),
                Err(e) => prop_assert!(matches!(e, geomflow_core::Error::StepRejected { .. }), "{e:?}"),
            }
            let (next, _) = step(&g, cfg.dt_for(&g), &cfg).unwrap();
            prop_assert!(next.u.iter().all(|&v| v > 0.0 && v.is_finite()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn scaling_covariance(r0 in 0.5f64..8.0, lambda in 0.05f64..20.0) {
        let g = sample_grid(&ExactSolution::Cigar { r0 }, GridLayout::radial(60.0, 1200).unwrap(), 0.0).unwrap();
        let scaled = g.scaled(lambda).unwrap();
        let root = lambda.sqrt();
        let (m, ms) = (radial_measures(&g).unwrap(), radial_measures(&scaled).unwrap());
        let i = m.reliable / 2;
        prop_assert!(rel(ms.s[i], root * m.s[i]) < 1e-12);
        prop_assert!(rel(ms.ell[i], root * m.ell[i]) < 1e-12);
        prop_assert!(rel(ms.area[i], lambda * m.area[i]) < 1e-12);
        let (a, b) = (invariant_report(&g).unwrap(), invariant_report(&scaled).unwrap());
        prop_assert!(rel(b.tau, a.tau) < 1e-9);
        prop_assert!((b.aperture.unwrap() - a.aperture.unwrap()).abs() < 1e-9);
        prop_assert!((b.avr.unwrap() - a.avr.unwrap()).abs() < 1e-9);
        prop_assert!(rel(b.circumference.unwrap(), root * a.circumference.unwrap()) < 1e-9);
        prop_assert!(rel(b.r_max, a.r_max / lambda) < 1e-9);
    }

    #[test]
    fn cohn_vossen_on_power_bumps(power in 0.05f64..1.0) {
        let g = ConformalGrid::from_fn(GridLayout::radial(100.0, 2000).unwrap(), 0.0, |r| (1.0 + r * r).powf(-power))
            .unwrap();
        let tc = total_curvature(&g).unwrap();
        prop_assert!(tc.quadrature <= TAU + 1e-3);
        prop_assert!(tc.quadrature > 0.0);
    }
}
