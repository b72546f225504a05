use std::sync::OnceLock;

use legendrian_core::analysis::{
    displacement, gronwall_check, stokes_cross_check, AnalysisOptions,
};
use legendrian_core::foliation::PlanarFoliation;
use legendrian_core::geometry::{contour_integral, ParamPath, Polydisc};
use legendrian_core::lifting::{
    levantar_bound_check, lift_path, make_chart, DistributionChart, LiftOptions,
};
use legendrian_core::ode::Dopri5;
use legendrian_core::quadrature::Quadrature;
use legendrian_core::{c64, C64};
use proptest::prelude::*;

fn fol() -> &'static PlanarFoliation {
    static F: OnceLock<PlanarFoliation> = OnceLock::new();
    F.get_or_init(|| PlanarFoliation::new(&Quadrature::default()).unwrap())
}

/// Normalized charts `P = -y/2 + a z² + b x y`, `Q = x/2 + c x z + d y²`.
fn arb_chart() -> impl Strategy<Value = DistributionChart> {
    (-0.5f64..0.5, -0.5f64..0.5, -0.5f64..0.5, -0.5f64..0.5).prop_map(|(a, b, c, d)| {
        let p = format!("-y/2 + ({a})*z^2 + ({b})*x*y").parse().unwrap();
        let q = format!("x/2 + ({c})*x*z + ({d})*y^2").parse().unwrap();
        make_chart(p, q, Polydisc::centered(0.5)).unwrap()
    })
}

fn arb_z() -> impl Strategy<Value = C64> {
    (-0.1f64..0.1, -0.1f64..0.1).prop_map(|(a, b)| c64(a, b))
}

/// Connecting curve or orbit at a random scale.
fn arb_base() -> impl Strategy<Value = ParamPath<2>> {
    (1e-3f64..0.05, any::<bool>()).prop_map(|(r, orbit)| {
        if orbit {
            fol().orbit(r).path()
        } else {
            fol().gamma(r)
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lift_then_reverse_returns(chart in arb_chart(), base in arb_base(), z0 in arb_z()) {
        let opts = LiftOptions::default();
        let fwd = lift_path(&chart, &base, z0, &opts).unwrap();
        let back = lift_path(&chart, &base.reverse(), fwd.z_end, &opts).unwrap();
        prop_assert!((back.z_end - z0).norm() <= 1e-9);
    }

    #[test]
    fn lifts_are_tolerance_stable(chart in arb_chart(), base in arb_base(), z0 in arb_z()) {
        let mut opts = LiftOptions::default();
        opts.verify_halving = false;
        let a = lift_path(&chart, &base, z0, &opts).unwrap();
        opts.solver = Dopri5::new(1e-12, 1e-14);
        let b = lift_path(&chart, &base, z0, &opts).unwrap();
        prop_assert!((a.z_end - b.z_end).norm() <= 1e-9 * (1.0 + a.z_end.norm()));
    }

    #[test]
    fn lifting_respects_concatenation(
        chart in arb_chart(),
        first in arb_base(),
        second in arb_base(),
        z0 in arb_z(),
    ) {
        // Join the pieces with a segment so the concatenation is continuous.
        let bridge = ParamPath::segment(first.end_point(), second.start_point());
        let whole = first.concat(&bridge).concat(&second);
        let opts = LiftOptions::default();
        let direct = lift_path(&chart, &whole, z0, &opts).unwrap();
        let a = lift_path(&chart, &first, z0, &opts).unwrap();
        let b = lift_path(&chart, &bridge, a.z_end, &opts).unwrap();
        let c = lift_path(&chart, &second, b.z_end, &opts).unwrap();
        prop_assert!((direct.z_end - c.z_end).norm() <= 1e-9);
    }

    #[test]
    fn lifts_are_tangent_and_obey_levantar(chart in arb_chart(), base in arb_base(), z0 in arb_z()) {
        let lifted = lift_path(&chart, &base, z0, &LiftOptions::default()).unwrap();
        prop_assert!(lifted.tangency_residual(&chart).unwrap() <= 1e-8);
        let rep = levantar_bound_check(&chart, &lifted, &Quadrature::default()).unwrap();
        prop_assert!(rep.max_ratio <= 1.0);
    }

    #[test]
    fn z_independent_lift_is_a_line_integral(
        b in -0.5f64..0.5,
        d in -0.5f64..0.5,
        base in arb_base(),
        z0 in arb_z(),
    ) {
        let p = format!("-y/2 + ({b})*x*y").parse().unwrap();
        let q = format!("x/2 + ({d})*y^2").parse().unwrap();
        let chart = make_chart(p, q, Polydisc::centered(0.5)).unwrap();
        let lifted = lift_path(&chart, &base, z0, &LiftOptions::default()).unwrap();
        let line = contour_integral(
            &base,
            |p, v| chart.lift_rhs(p, v, c64(0.0, 0.0)),
            &Quadrature::with_tol(1e-14),
        )
        .unwrap();
        prop_assert!((lifted.gain - line).norm() <= 1e-10);
    }

    #[test]
    fn gronwall_envelope_holds(chart in arb_chart(), base in arb_base(), u in arb_z(), v in arb_z()) {
        let rep = gronwall_check(&chart, &base, u, v, &AnalysisOptions::default()).unwrap();
        prop_assert!(rep.max_ratio <= 1.0 + 1e-6);
    }

    #[test]
    fn stokes_identity(chart in arb_chart(), r in 1e-3f64..0.05, w in arb_z()) {
        let rec = stokes_cross_check(&chart, fol(), r, w, &AnalysisOptions::default()).unwrap();
        prop_assert!(rec.stokes_gap.unwrap() <= 1e-5);
    }

    #[test]
    fn contact_displacement_scales_as_r_squared(r in 1e-3f64..0.05, w1 in arb_z(), w2 in arb_z()) {
        let chart = make_chart("-y/2".parse().unwrap(), "x/2".parse().unwrap(), Polydisc::centered(0.5))
            .unwrap();
        let opts = AnalysisOptions::default();
        let a = displacement(&chart, fol(), r, w1, &opts).unwrap();
        let b = displacement(&chart, fol(), r, w2, &opts).unwrap();
        let unit = displacement(&chart, fol(), 0.01, w1, &opts).unwrap();
        prop_assert_eq!(a.delta, b.delta);
        let ratio = (a.delta / (r * r)) / (unit.delta / 1e-4);
        prop_assert!((ratio - 1.0).norm() <= 1e-8);
    }
}
