use jetvar::ad::{gradient, hessian, Scalar};
use jetvar::checks::max_rel;
use jetvar::config::RunConfig;
use jetvar::fieldeq::{adjoint_residual, el_residual, forced_el_residual, jacobi_residual, JacobiMode};
use jetvar::integrator::{cell_jet, CellRule};
use jetvar::jet::{
    kappa_flat, kappa_flat_inverse, parse_point, point_map, ProlongedJetPoint, ProlongedSecondJet, SymmetricSecond,
};
use jetvar::lagrangian::{prolong, regularity, Lagrangian, NoForce, PresetLagrangian};
use proptest::prelude::*;

fn unit() -> impl Strategy<Value = f64> {
    -1.0..1.0_f64
}

fn prolonged_second(n: usize, k: usize) -> impl Strategy<Value = ProlongedSecondJet> {
    let sym = k * (k + 1) / 2 * n;
    (prop::collection::vec(unit(), k + 2 * n + 2 * n * k), prop::collection::vec(unit(), 2 * sym)).prop_map(
        move |(c, s)| {
            let (x, rest) = c.split_at(k);
            let (q, rest) = rest.split_at(n);
            let (v, rest) = rest.split_at(n);
            let (qd, vd) = rest.split_at(n * k);
            let jet =
                ProlongedJetPoint { x: x.to_vec(), q: q.to_vec(), v: v.to_vec(), qd: qd.to_vec(), vd: vd.to_vec() };
            let mut it = s.into_iter();
            let qdd = SymmetricSecond::from_fn(n, k, |_, _, _| it.next().unwrap());
            let vdd = SymmetricSecond::from_fn(n, k, |_, _, _| it.next().unwrap());
            ProlongedSecondJet { jet, qdd, vdd }
        },
    )
}

fn preset() -> impl Strategy<Value = PresetLagrangian> {
    prop_oneof![(0.2..3.0_f64).prop_map(|c| PresetLagrangian::Wave { c }), Just(PresetLagrangian::SineGordon),]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mixed_partials_commute(p in prop::collection::vec(unit(), 3)) {
        let f = |u: &[_]| { let u: &[jetvar::ad::Dual<jetvar::ad::Dual<f64>>] = u; (u[0] * u[1]).sin() * u[2].exp() + u[0].powi(3) * u[2] };
        let h = hessian(f, &p);
        prop_assert!((&h - h.transpose()).amax() <= 1e-13 * (1.0 + h.amax()));
    }

    #[test]
    fn polynomial_gradients_are_exact(a in unit(), b in unit()) {
        let g = gradient(|u| u[0] * u[0] * u[1] + u[1] * 3.0, &[a, b]);
        prop_assert_eq!(g[0], 2.0 * a * b);
        prop_assert_eq!(g[1], a * a + 3.0);
    }

    #[test]
    fn kappa_round_trip(t in prop::collection::vec(unit(), 2 * 2 + 2 * 2 * 3)) {
        prop_assert_eq!(kappa_flat_inverse(2, 3, &kappa_flat(2, 3, &t)), t);
    }

    #[test]
    fn point_text_round_trip(j in prolonged_second(2, 2)) {
        let text: Vec<String> = point_map(&j.jet).iter().map(|(k, v)| format!("{k}={v:e}")).collect();
        prop_assert_eq!(parse_point(&text.join(","), 2, 2).unwrap(), j.jet);
    }

    #[test]
    fn v_slot_reproduces_field_equation(l in preset(), j in prolonged_second(1, 2)) {
        let r = el_residual(&prolong(&l), &j.doubled());
        prop_assert!(max_rel(&r[1..], &el_residual(&l, &j.background())) <= 1e-12);
    }

    #[test]
    fn jacobi_routes_agree(l in preset(), j in prolonged_second(1, 2)) {
        let a = jacobi_residual(&l, &j, JacobiMode::Direct);
        let b = jacobi_residual(&l, &j, JacobiMode::ViaLift);
        prop_assert!(max_rel(&a, &b) <= 1e-10);
    }

    #[test]
    fn zero_force_reduces_to_unforced(l in preset(), j in prolonged_second(1, 2)) {
        let f = NoForce::like(&l);
        prop_assert_eq!(forced_el_residual(&l, &f, &j.background()), el_residual(&l, &j.background()));
        let a = adjoint_residual(&l, &f, &j);
        let b = jacobi_residual(&l, &j, JacobiMode::ViaLift);
        prop_assert!(max_rel(&a, &b) <= 1e-14);
    }

    #[test]
    fn prolongation_squares_the_determinant(c in 0.2..3.0_f64, j in prolonged_second(1, 2)) {
        let l = PresetLagrangian::Wave { c };
        let r = regularity(&l, &j.jet.project());
        prop_assert!(((r.prolonged_det.abs() - r.det * r.det) / (r.det * r.det)).abs() <= 1e-8);
        prop_assert!(r.is_regular);
    }

    #[test]
    fn cells_difference_affine_fields_exactly(
        alpha in -5.0..5.0_f64, beta in -5.0..5.0_f64, c0 in unit(),
        dt in 0.01..0.5_f64, dx in 0.01..0.5_f64,
    ) {
        let at = |t: f64, x: f64| [alpha * t + beta * x + c0];
        let c = [at(0.0, 0.0), at(dt, 0.0), at(0.0, dx), at(dt, dx)];
        for rule in [CellRule::AveragedCorner, CellRule::ForwardCorner] {
            let (_, qd) = cell_jet(rule, [&c[0], &c[1], &c[2], &c[3]], dt, dx);
            prop_assert!((qd[0] - alpha).abs() <= 1e-12 * (1.0 + alpha.abs()) / dt);
            prop_assert!((qd[1] - beta).abs() <= 1e-12 * (1.0 + beta.abs()) / dx);
        }
    }

    #[test]
    fn overrides_are_applied(nt in 3usize..5000, tau in 0.01..10.0_f64) {
        let cfg = RunConfig::parse(r#"{"model": {"preset": "damped_wave"}}"#, &[format!("grid.nt={nt}"), format!("model.tau={tau:e}")]).unwrap();
        prop_assert_eq!(cfg.grid.nt, nt);
        prop_assert_eq!(cfg.model, jetvar::config::ModelConfig::DampedWave { c: 1.0, tau });
    }
}

#[test]
fn dual_evaluation_matches_plain() {
    let l = PresetLagrangian::SineGordon;
    let x = [0.1, 0.2];
    let q = [0.3];
    let qd = [0.4, 0.5];
    let d: Vec<jetvar::ad::Dual<f64>> = [0.3].iter().map(|&v| jetvar::ad::Dual::variable(v)).collect();
    let dd: Vec<jetvar::ad::Dual<f64>> = qd.iter().map(|&v| jetvar::ad::Dual::constant(v)).collect();
    let xs: Vec<jetvar::ad::Dual<f64>> = x.iter().map(|&v| jetvar::ad::Dual::constant(v)).collect();
    assert_eq!(l.eval(&xs, &d, &dd).value(), l.eval(&x, &q, &qd));
}
