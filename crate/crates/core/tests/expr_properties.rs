use legendrian_core::expr::{RationalExpr, Var};
use legendrian_core::selftest::fd_deviation;
use legendrian_core::{c64, C64};
use proptest::prelude::*;

fn leaf() -> impl Strategy<Value = RationalExpr> {
    prop_oneof![
        Just(RationalExpr::var(Var::X)),
        Just(RationalExpr::var(Var::Y)),
        Just(RationalExpr::var(Var::Z)),
        (-4.0f64..4.0, prop_oneof![Just(0.0), -2.0f64..2.0])
            .prop_map(|(re, im)| RationalExpr::constant(c64(re, im))),
    ]
}

fn arb_expr() -> impl Strategy<Value = RationalExpr> {
    leaf().prop_recursive(4, 32, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), leaf(), 3.0f64..5.0)
                .prop_map(|(a, b, s)| a / (RationalExpr::real(s) + b)),
            (inner.clone(), -2i32..=3).prop_map(|(a, n)| a.powi(n)),
            inner.prop_map(|a| -a),
        ]
    })
}

fn arb_point() -> impl Strategy<Value = [C64; 3]> {
    proptest::array::uniform3((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| c64(a, b)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn derivative_matches_central_differences(e in arb_expr(), p in arb_point()) {
        if let Some(dev) = fd_deviation(&e, &p) {
            prop_assert!(dev <= 1e-6, "{e} at {p:?}: {dev}");
        }
    }

    #[test]
    fn render_then_parse_is_exact(e in arb_expr(), p in arb_point()) {
        let back: RationalExpr = e.to_string().parse().unwrap();
        match (e.eval(&p), back.eval(&p)) {
            (Ok(a), Ok(b)) => prop_assert!(a == b || (a.is_nan() && b.is_nan()), "{e}: {a} vs {b}"),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{e}: {a:?} vs {b:?}"),
        }
    }

    #[test]
    fn standard_twist_is_one(p in arb_point()) {
        let pe: RationalExpr = "-y/2".parse().unwrap();
        let qe: RationalExpr = "x/2".parse().unwrap();
        let t = qe.derivative(Var::X).eval(&p).unwrap() - pe.derivative(Var::Y).eval(&p).unwrap();
        prop_assert!((t - 1.0).norm() <= 1e-12);
    }
}
