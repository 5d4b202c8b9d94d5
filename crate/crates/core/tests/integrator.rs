use std::f64::consts::PI;

use jetvar::ad::{Dual, Scalar};
use jetvar::integrator::*;
use jetvar::jet::AnalyticSection;
use jetvar::lagrangian::{presets, Lagrangian, NoForce, PresetForce, PresetLagrangian};
use jetvar::Error;

/// `A sin(m(x − ct))`, written out here so the oracle does not share code
/// with the library.
struct Travelling {
    m: f64,
    c: f64,
}

impl AnalyticSection for Travelling {
    fn base_dim(&self) -> usize {
        2
    }
    fn fields(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        vec![((x[1] - x[0] * self.c) * self.m).sin()]
    }
}

/// Damped standing mode for `c = τ = 1`: `e^{−t/2}(cos ωt + sin ωt/(2ω)) sin x`.
struct Damped {
    growing: bool,
}

impl AnalyticSection for Damped {
    fn base_dim(&self) -> usize {
        2
    }
    fn fields(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let w = 0.75_f64.sqrt();
        let s = if self.growing { 1.0 } else { -1.0 };
        let t = x[0];
        let env = (t * (0.5 * s)).exp();
        vec![env * ((t * w).cos() - (t * w).sin() * (s / (2.0 * w))) * x[1].sin()]
    }
}

struct Bump {
    amp: f64,
}

impl AnalyticSection for Bump {
    fn base_dim(&self) -> usize {
        2
    }
    fn fields(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let d = x[1] - PI;
        vec![(d * d * -2.0).exp() * self.amp + x[0] * 0.0]
    }
}

/// `½(q_t² − q_x²)` with no preset metadata: no wave speed, not flagged
/// quadratic, so it takes the Newton path with only the blow-up detector.
struct PlainWave;

impl Lagrangian for PlainWave {
    fn fields(&self) -> usize {
        1
    }
    fn base_dim(&self) -> usize {
        2
    }
    fn eval<S: Scalar>(&self, _x: &[S], _q: &[S], qd: &[S]) -> S {
        (qd[0] * qd[0] - qd[1] * qd[1]) * 0.5
    }
}

fn periodic(nt: usize, nx: usize, t_end: f64) -> GridSpec {
    GridSpec::new(nt, nx, t_end, 0.0, 2.0 * PI).unwrap()
}

const NONE: Option<&Bump> = None;

#[test]
fn plane_cell_value() {
    let l = PresetLagrangian::Wave { c: 1.0 };
    let (dt, dx) = (0.1, 0.2);
    let (x0, x1) = ([0.3], [0.5]);
    for rule in [CellRule::AveragedCorner, CellRule::ForwardCorner] {
        let v = discrete_lagrangian_cell(&l, rule, 0.0, 0.3, [&x0, &x0, &x1, &x1], dt, dx);
        assert!((v + 0.5 * dt * dx).abs() < 1e-15, "{rule:?}: {v}");
    }
}

#[test]
fn affine_fields_are_differenced_exactly() {
    let (alpha, beta, dt, dx) = (0.7, -1.3, 0.05, 0.11);
    let at = |t: f64, x: f64| [alpha * t + beta * x + 0.2];
    let c = [at(1.0, 2.0), at(1.0 + dt, 2.0), at(1.0, 2.0 + dx), at(1.0 + dt, 2.0 + dx)];
    for rule in [CellRule::AveragedCorner, CellRule::ForwardCorner] {
        let (_, qd) = cell_jet(rule, [&c[0], &c[1], &c[2], &c[3]], dt, dx);
        assert!((qd[0] - alpha).abs() < 1e-12 && (qd[1] - beta).abs() < 1e-12);
    }
    let k = [0.4];
    let l = PresetLagrangian::SineGordon;
    let v = discrete_lagrangian_cell(&l, CellRule::AveragedCorner, 0.0, 0.0, [&k, &k, &k, &k], dt, dx);
    assert!((v - dt * dx * (0.4_f64.cos() - 1.0)).abs() < 1e-16);
}

/// Node residual assembled independently: AD through the four cells around
/// the node, plus the damping term `ΔtΔx F(centered q_t)`.
fn hand_residual(l: &PresetLagrangian, tau: Option<f64>, s: &DiscreteState, a: usize, b: usize) -> f64 {
    let (dt, dx) = (s.grid.dt(), s.grid.dx());
    let nc = s.columns();
    let get = |r: usize, c: isize| -> Dual<f64> {
        let cc = c.rem_euclid(nc as isize) as usize;
        Dual::new(s.q_at(r, cc, 0), if r == a && cc == b { 1.0 } else { 0.0 })
    };
    let mut sum = Dual::constant(0.0);
    for (ca, cb) in [(a - 1, b as isize - 1), (a - 1, b as isize), (a, b as isize - 1), (a, b as isize)] {
        let c = [[get(ca, cb)], [get(ca + 1, cb)], [get(ca, cb + 1)], [get(ca + 1, cb + 1)]];
        let x = s.grid.x(cb.rem_euclid(nc as isize) as usize);
        sum += discrete_lagrangian_cell(
            l,
            CellRule::AveragedCorner,
            s.grid.t(ca),
            x,
            [&c[0], &c[1], &c[2], &c[3]],
            dt,
            dx,
        );
    }
    let force = tau.map_or(0.0, |tau| -(s.q_at(a + 1, b, 0) - s.q_at(a - 1, b, 0)) / (2.0 * dt) / tau);
    sum.eps + dt * dx * force
}

#[test]
fn del_residual_matches_hand_assembly() {
    let g = periodic(40, 30, 4.0);
    for (model, tau) in [(presets::sine_gordon(), None), (presets::damped_wave(1.0, 0.7), Some(0.7))] {
        let s = DiscreteState::sample(g, BoundaryCondition::Periodic, &Bump { amp: 1.3 }, NONE, 10).unwrap();
        let it =
            Integrator::new(&model.lagrangian, &model.force, g, BoundaryCondition::Periodic, SchemeConfig::default())
                .unwrap();
        for (a, b) in [(1, 0), (4, 13), (8, 28)] {
            let r = it.del_residual(&s, a, b).unwrap()[0];
            let h = hand_residual(&model.lagrangian, tau, &s, a, b);
            assert!((r - h).abs() < 1e-15, "{} ({a},{b}): {r} vs {h}", model.name);
        }
    }
}

fn sampled_residual_at_unit(
    model: &jetvar::lagrangian::Model,
    exact: &impl AnalyticSection,
    nt: usize,
    nx: usize,
) -> f64 {
    let g = periodic(nt, nx, 2.0);
    let s = DiscreteState::sample(g, BoundaryCondition::Periodic, exact, NONE, nt).unwrap();
    let it = Integrator::new(&model.lagrangian, &model.force, g, BoundaryCondition::Periodic, SchemeConfig::default())
        .unwrap();
    let (a, b) = ((nt - 1) / 2, (nx - 1) / 6);
    it.del_residual(&s, a, b).unwrap()[0] / (g.dt() * g.dx())
}

#[test]
fn sampled_oracles_leave_second_order_residuals() {
    let wave = presets::wave(1.0);
    let damped = presets::damped_wave(1.0, 1.0);
    type Case<'a> = (&'a jetvar::lagrangian::Model, &'a dyn Fn(usize, usize) -> f64);
    let cases: [Case; 2] = [
        (&wave, &|nt, nx| sampled_residual_at_unit(&wave, &Travelling { m: 1.0, c: 1.0 }, nt, nx)),
        (&damped, &|nt, nx| sampled_residual_at_unit(&damped, &Damped { growing: false }, nt, nx)),
    ];
    for (model, f) in cases {
        let e: Vec<f64> = [(21, 61), (41, 121), (81, 241)].iter().map(|&(nt, nx)| f(nt, nx).abs()).collect();
        for w in e.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.6..4.4).contains(&ratio), "{}: {e:?}", model.name);
        }
    }
}

#[test]
fn stationarity_after_march() {
    let g = periodic(60, 40, 3.0);
    for model in [presets::sine_gordon(), presets::damped_wave(1.0, 1.0)] {
        let mut it =
            Integrator::new(&model.lagrangian, &model.force, g, BoundaryCondition::Periodic, SchemeConfig::default())
                .unwrap();
        let run = it.simulate(&Bump { amp: 0.8 }).unwrap();
        let mut worst = 0.0_f64;
        for a in 1..g.nt - 1 {
            for b in 0..run.state.columns() {
                worst = worst.max(it.del_residual(&run.state, a, b).unwrap()[0].abs());
            }
        }
        assert!(worst <= 1e-12, "{}: {worst:e}", model.name);
    }
}

#[test]
fn cfl_guard_refuses_wave_preset() {
    let model = presets::wave(1.0);
    let g = periodic(41, 91, 2.0 * PI * 40.0 / 90.0 * 1.5);
    match Integrator::new(&model.lagrangian, &model.force, g, BoundaryCondition::Periodic, SchemeConfig::default()) {
        Err(Error::CflViolation(msg)) => assert!(msg.contains("exceeds 1"), "{msg}"),
        other => panic!("expected CflViolation, got {:?}", other.map(|_| ())),
    }
}

#[test]
fn generic_lagrangian_blow_up_is_detected() {
    let f = NoForce::like(&PlainWave);
    // Δt/Δx = 1.5 with leapfrog cells
    let dx = 2.0 * PI / 64.0;
    let g = GridSpec::new(400, 65, 399.0 * 1.5 * dx, 0.0, 2.0 * PI).unwrap();
    let scheme = SchemeConfig { cell_rule: CellRule::ForwardCorner, ..Default::default() };
    let mut it = Integrator::new(&PlainWave, &f, g, BoundaryCondition::Periodic, scheme).unwrap();
    assert!(!it.is_linear());
    match it.simulate(&Bump { amp: 1.0 }) {
        Err(Error::CflViolation(msg)) => assert!(msg.contains("blow-up"), "{msg}"),
        other => panic!("expected blow-up, got {:?}", other.map(|r| r.state.max_abs())),
    }
}

#[test]
fn stable_at_half_cfl() {
    let model = presets::wave(1.0);
    let dx = 2.0 * PI / 40.0;
    let g = periodic(129, 41, 128.0 * 0.5 * dx);
    assert!(g.t_end >= 10.0 && (g.dt() / g.dx() - 0.5).abs() < 1e-12);
    let mut it =
        Integrator::new(&model.lagrangian, &model.force, g, BoundaryCondition::Periodic, SchemeConfig::default())
            .unwrap();
    let run = it.simulate(&Travelling { m: 2.0, c: 1.0 }).unwrap();
    assert!(run.state.max_abs() < 1.1);
}

#[test]
fn forward_corner_is_leapfrog() {
    let l = PresetLagrangian::Wave { c: 1.0 };
    let f = PresetForce::Zero { n: 1, k: 2 };
    let g = periodic(30, 41, 0.8 * 29.0 * 2.0 * PI / 40.0);
    let scheme = SchemeConfig { cell_rule: CellRule::ForwardCorner, ..Default::default() };
    let mut it = Integrator::new(&l, &f, g, BoundaryCondition::Periodic, scheme).unwrap();
    let run = it.simulate(&Bump { amp: 1.0 }).unwrap();
    let s = &run.state;
    let lam2 = (g.dt() / g.dx()).powi(2);
    let nc = s.columns();
    for a in [1, 10, 27] {
        for b in 0..nc {
            let (l_, r_) = ((b + nc - 1) % nc, (b + 1) % nc);
            let expect = 2.0 * s.q_at(a, b, 0) - s.q_at(a - 1, b, 0)
                + lam2 * (s.q_at(a, r_, 0) - 2.0 * s.q_at(a, b, 0) + s.q_at(a, l_, 0));
            assert!((s.q_at(a + 1, b, 0) - expect).abs() < 1e-12);
        }
    }
}

#[test]
fn sine_gordon_newton_iterations_bounded() {
    let model = presets::sine_gordon();
    let g = periodic(201, 101, 10.0);
    let mut it =
        Integrator::new(&model.lagrangian, &model.force, g, BoundaryCondition::Periodic, SchemeConfig::default())
            .unwrap();
    assert!(!it.is_linear());
    let run = it.simulate(&Bump { amp: 0.1 }).unwrap();
    assert_eq!(run.newton_iters.len(), g.nt - 2);
    let worst = *run.newton_iters.iter().max().unwrap();
    assert!(worst <= 5, "{worst}");
}

#[test]
fn wave_energy_drift_is_second_order() {
    // |E(t) − E(0)| / Δt² on t ∈ [0, 10], standing mode m = 2
    const C_PINNED: f64 = 35.0;
    let model = presets::wave(1.0);
    let init = jetvar::oracle::Profile::StandingMode { amplitude: 1.0, wavenumber: 2.0, speed: 1.0 };
    let mut scaled = Vec::new();
    for (nt, nx) in [(101, 41), (201, 81), (401, 161)] {
        let g = periodic(nt, nx, 10.0);
        let mut it =
            Integrator::new(&model.lagrangian, &model.force, g, BoundaryCondition::Periodic, SchemeConfig::default())
                .unwrap();
        let run = it.simulate(&init).unwrap();
        let e = energy_series(&model.lagrangian, &run.state);
        let drift = e.iter().map(|x| (x - e[0]).abs()).fold(0.0, f64::max);
        scaled.push(drift / (g.dt() * g.dt()));
    }
    println!("energy drift / dt^2: {scaled:?}");
    assert!(scaled.iter().all(|&c| c <= C_PINNED), "{scaled:?}");
}

#[test]
fn doubled_density_drift_shrinks_quadratically() {
    let model = presets::damped_wave(1.0, 1.0);
    let mut drift = Vec::new();
    for (nt, nx) in [(101, 51), (201, 101)] {
        let g = periodic(nt, nx, 5.0);
        let mut it =
            Integrator::new(&model.lagrangian, &model.force, g, BoundaryCondition::Periodic, SchemeConfig::default())
                .unwrap();
        let run = it.cosimulate(&Damped { growing: false }, &Damped { growing: true }).unwrap();
        let e = doubled_energy_series(&model.lagrangian, &model.force, &run.state).unwrap();
        drift.push(e.iter().map(|x| (x - e[0]).abs()).fold(0.0, f64::max));
    }
    let ratio = drift[0] / drift[1];
    assert!((3.0..5.0).contains(&ratio), "{drift:?}");
}

#[test]
fn cosimulated_q_is_bitwise_simulated_q() {
    let g = periodic(80, 41, 4.0);
    for model in [presets::damped_wave(1.0, 1.0), presets::sine_gordon()] {
        let mk = || {
            Integrator::new(&model.lagrangian, &model.force, g, BoundaryCondition::Periodic, SchemeConfig::default())
                .unwrap()
        };
        let alone = mk().simulate(&Bump { amp: 0.5 }).unwrap();
        let both = mk().cosimulate(&Bump { amp: 0.5 }, &Bump { amp: 0.1 }).unwrap();
        assert_eq!(alone.state.q, both.state.q, "{}", model.name);
        assert_eq!(both.state.v_rows(), g.nt);
    }
}

#[test]
fn wave_variation_is_another_wave() {
    let model = presets::wave(1.0);
    let g = periodic(120, 61, 6.0);
    let mk = || {
        Integrator::new(&model.lagrangian, &model.force, g, BoundaryCondition::Periodic, SchemeConfig::default())
            .unwrap()
    };
    let v0 = Travelling { m: 3.0, c: 1.0 };
    let both = mk().cosimulate(&Bump { amp: 1.0 }, &v0).unwrap();
    let solo = mk().simulate(&v0).unwrap();
    let v = both.state.v.as_ref().unwrap();
    let d = v.iter().zip(&solo.state.q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(d < 1e-11, "{d:e}");
}

#[test]
fn serial_runs_are_bitwise_repeatable() {
    let g = periodic(60, 31, 3.0);
    let model = presets::sine_gordon();
    let run = || {
        let mut it =
            Integrator::new(&model.lagrangian, &model.force, g, BoundaryCondition::Periodic, SchemeConfig::default())
                .unwrap();
        it.simulate(&Bump { amp: 0.9 }).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn travelling_wave_converges_at_second_order() {
    let model = presets::wave(1.0);
    let t = convergence_study(
        &model.lagrangian,
        &model.force,
        periodic(3, 3, 4.0),
        &[(41, 21), (81, 41), (161, 81)],
        BoundaryCondition::Periodic,
        SchemeConfig::default(),
        &Travelling { m: 1.0, c: 1.0 },
        &Travelling { m: 1.0, c: 1.0 },
    )
    .unwrap();
    let p = t.last_order().unwrap();
    assert!((p - 2.0).abs() <= 0.2, "{}", t.to_csv());
    assert!(t.to_csv().starts_with("nt,nx,h,error,order\n"));
}

#[test]
fn dirichlet_standing_mode_tracks_oracle() {
    let model = presets::damped_wave(1.0, 1.0);
    let g = GridSpec::new(201, 101, 5.0, 0.0, PI).unwrap();
    let bc = BoundaryCondition::Dirichlet { follow_section: true };
    let mut it = Integrator::new(&model.lagrangian, &model.force, g, bc, SchemeConfig::default()).unwrap();
    let run = it.simulate(&Damped { growing: false }).unwrap();
    let e = l2_error_series(&run.state, &Damped { growing: false });
    assert!(e.iter().all(|&x| x < 2e-4), "{:e}", e.iter().fold(0.0_f64, |m, &x| m.max(x)));
}

#[test]
fn node_outside_interior_is_rejected() {
    let model = presets::wave(1.0);
    let g = periodic(10, 10, 1.0);
    let it = Integrator::new(&model.lagrangian, &model.force, g, BoundaryCondition::Periodic, SchemeConfig::default())
        .unwrap();
    let s = DiscreteState::sample(g, BoundaryCondition::Periodic, &Bump { amp: 1.0 }, NONE, 10).unwrap();
    assert!(matches!(it.del_residual(&s, 0, 3), Err(Error::Index(_))));
    assert!(matches!(it.del_residual(&s, 9, 3), Err(Error::Index(_))));
    assert!(matches!(it.del_residual(&s, 3, 9), Err(Error::Index(_))));
}

#[test]
fn envelope_rate_recovers_known_decay() {
    let ts: Vec<f64> = (0..2000).map(|a| a as f64 * 0.005).collect();
    let ys: Vec<f64> = ts.iter().map(|t| (-0.3 * t).exp() * (2.0 * t).cos().abs()).collect();
    let r = envelope_rate(&ts, &ys).unwrap();
    assert!((r + 0.3).abs() < 1e-3, "{r}");
}

#[test]
fn outputs_use_seventeen_digits() {
    assert_eq!(fmt17(0.1), "1.0000000000000001e-1");
    let d = Diagnostics { energy_series: vec![1.0, f64::NAN], newton_iters: vec![1, 2], observed_cfl: 0.5 };
    let j = to_json17(&d).unwrap();
    assert!(j.contains("5.0000000000000000e-1") && j.contains("null"));
    let back: serde_json::Value = serde_json::from_str(&j).unwrap();
    assert_eq!(back["newton_iters"][1], 2);
}
