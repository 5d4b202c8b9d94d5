//! Invariant suites run by `jetvar check`, each driven by one seed.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ad;
use crate::config::RunConfig;
use crate::error::Result;
use crate::fieldeq::{adjoint_residual, el_residual, forced_el_residual, jacobi_residual, JacobiMode};
use crate::geometry::{cosymplectic_axioms_check, geometric_el_residual, omega_all, reeb_residual, KVectorAtJet};
use crate::integrator::{energy_series, BoundaryCondition, GridSpec, Integrator, SchemeConfig};
use crate::jet::{
    jet_of_section, kappa_flat, kappa_flat_inverse, second_jet_of_section, JetPoint, ProlongedJetPoint,
    ProlongedSecondJet, SecondJet, SymmetricSecond,
};
use crate::lagrangian::fixtures::{CoupledNonlinear, PolynomialForce, VelocityLinear};
use crate::lagrangian::{force_prolong, presets, prolong, regularity, Lagrangian, PresetLagrangian};
use crate::oracle::Profile;

/// Uniform draws in `[-1, 1]`.
pub fn draw<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn random_jet<R: Rng>(rng: &mut R, n: usize, k: usize) -> JetPoint {
    JetPoint { x: draw(rng, k), q: draw(rng, n), qd: draw(rng, n * k) }
}

pub fn random_second<R: Rng>(rng: &mut R, n: usize, k: usize) -> SymmetricSecond {
    SymmetricSecond::from_fn(n, k, |_, _, _| rng.random_range(-1.0..1.0))
}

pub fn random_second_jet<R: Rng>(rng: &mut R, n: usize, k: usize) -> SecondJet {
    SecondJet { jet: random_jet(rng, n, k), qdd: random_second(rng, n, k) }
}

pub fn random_prolonged_second_jet<R: Rng>(rng: &mut R, n: usize, k: usize) -> ProlongedSecondJet {
    let jet = ProlongedJetPoint {
        x: draw(rng, k),
        q: draw(rng, n),
        v: draw(rng, n),
        qd: draw(rng, n * k),
        vd: draw(rng, n * k),
    };
    ProlongedSecondJet { jet, qdd: random_second(rng, n, k), vdd: random_second(rng, n, k) }
}

/// `|a − b| / max(|a|, |b|, 1)`, maximized over components.
pub fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1.0)).fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn outcome(suite: &'static str, name: &str, r: Result<(bool, String)>) -> CheckOutcome {
    match r {
        Ok((passed, detail)) => CheckOutcome { suite, name: name.into(), passed, detail },
        Err(e) => CheckOutcome { suite, name: name.into(), passed: false, detail: format!("error: {e}") },
    }
}

fn bound(worst: f64, tol: f64) -> (bool, String) {
    (worst <= tol, format!("worst {worst:.3e}, bound {tol:.1e}"))
}

fn ad_suite(rng: &mut ChaCha8Rng, out: &mut Vec<CheckOutcome>) {
    let sg = PresetLagrangian::SineGordon;
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let u = draw(rng, 5);
        let g = ad::gradient(|w| sg.eval_coords(w), &u);
        for (a, ga) in g.iter().enumerate() {
            let h = 1e-5;
            let (mut up, mut dn) = (u.clone(), u.clone());
            up[a] += h;
            dn[a] -= h;
            worst = worst.max((ga - (sg.eval_coords(&up) - sg.eval_coords(&dn)) / (2.0 * h)).abs());
        }
    }
    out.push(outcome("ad", "gradient matches central differences", Ok(bound(worst, 1e-6))));

    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let u = draw(rng, CoupledNonlinear.coord_dim());
        let h = ad::hessian(|w| CoupledNonlinear.eval_coords(w), &u);
        worst = worst.max((&h - h.transpose()).amax());
    }
    out.push(outcome("ad", "mixed partials are symmetric", Ok(bound(worst, 1e-12))));
}

fn jet_suite(rng: &mut ChaCha8Rng, out: &mut Vec<CheckOutcome>) {
    let mut ok = true;
    for (n, k) in [(1, 1), (1, 2), (2, 3), (3, 2)] {
        let t = draw(rng, 2 * n + 2 * n * k);
        ok &= kappa_flat_inverse(n, k, &kappa_flat(n, k, &t)) == t;
    }
    out.push(outcome("jet", "kappa is inverted by its reverse", Ok((ok, String::new()))));

    let psi = Profile::Sum(vec![
        (1.0, Profile::TravelingWave { amplitude: 1.0, wavenumber: 1.3, speed: 0.7 }),
        (0.5, Profile::Gaussian { amplitude: 1.0, center: 0.2, width: 0.8 }),
    ]);
    let mut worst = 0.0_f64;
    for _ in 0..10 {
        let x = draw(rng, 2);
        let j2 = second_jet_of_section(&psi, &x);
        for nu in 0..2 {
            let h = 1e-5;
            let (mut up, mut dn) = (x.clone(), x.clone());
            up[nu] += h;
            dn[nu] -= h;
            let (a, b) = (jet_of_section(&psi, &up), jet_of_section(&psi, &dn));
            for mu in 0..2 {
                let fd = (a.qd(0, mu) - b.qd(0, mu)) / (2.0 * h);
                worst = worst.max((fd - j2.qdd.get(0, mu, nu)).abs());
            }
        }
    }
    out.push(outcome("jet", "second jet matches differenced first jets", Ok(bound(worst, 1e-8))));
}

fn lagrangian_suite(rng: &mut ChaCha8Rng, out: &mut Vec<CheckOutcome>) {
    let mut worst = 0.0_f64;
    for l in [
        PresetLagrangian::Wave { c: 0.5 },
        PresetLagrangian::Wave { c: 1.0 },
        PresetLagrangian::Wave { c: 2.0 },
        PresetLagrangian::SineGordon,
    ] {
        for _ in 0..20 {
            let p = random_jet(rng, 1, 2);
            let r = regularity(&l, &p);
            worst = worst.max((r.prolonged_det.abs() - r.det * r.det).abs() / (r.det * r.det));
        }
    }
    for _ in 0..20 {
        let p = random_jet(rng, 2, 2);
        let r = regularity(&CoupledNonlinear, &p);
        worst = worst.max((r.prolonged_det.abs() - r.det * r.det).abs() / (r.det * r.det));
    }
    out.push(outcome("lagrangian", "prolonged velocity Hessian determinant is the square", Ok(bound(worst, 1e-8))));

    let mut run = || -> Result<(bool, String)> {
        let f = PolynomialForce::random(2, 2, rng);
        let lf = force_prolong(&CoupledNonlinear, &f)?;
        let mut worst = 0.0_f64;
        for _ in 0..20 {
            let p = random_jet(rng, 2, 2);
            let zero = p.with_variation(vec![0.0; 2], vec![0.0; 4])?.doubled();
            worst = worst.max(lf.eval_coords(&zero.coords()).abs());
        }
        Ok(bound(worst, 0.0))
    };
    out.push(outcome("lagrangian", "forced prolongation vanishes at zero variation", run()));
}

fn fieldeq_suite(rng: &mut ChaCha8Rng, out: &mut Vec<CheckOutcome>) {
    fn vslot<L: Lagrangian>(l: &L, rng: &mut ChaCha8Rng, points: usize) -> f64 {
        let (n, k) = (l.fields(), l.base_dim());
        let pl = prolong(l);
        let mut worst = 0.0_f64;
        for _ in 0..points {
            let j2 = random_prolonged_second_jet(rng, n, k);
            let r = el_residual(&pl, &j2.doubled());
            worst = worst.max(max_rel(&r[n..], &el_residual(l, &j2.background())));
        }
        worst
    }
    let mut worst = 0.0_f64;
    for m in [presets::wave(1.0), presets::sine_gordon(), presets::harmonic(1.0)] {
        worst = worst.max(vslot(&m.lagrangian, rng, 100));
    }
    worst = worst.max(vslot(&CoupledNonlinear, rng, 50));
    out.push(outcome("fieldeq", "v-slot of the prolonged residual is the original residual", Ok(bound(worst, 1e-12))));

    let run = |rng: &mut ChaCha8Rng| -> Result<(bool, String)> {
        let m = presets::damped_wave(1.0, 1.0);
        let poly = PolynomialForce::random(1, 2, rng);
        let mut worst = 0.0_f64;
        for _ in 0..100 {
            let j2 = random_prolonged_second_jet(rng, 1, 2);
            let a = el_residual(&force_prolong(&m.lagrangian, &m.force)?, &j2.doubled());
            worst = worst.max(max_rel(&a[1..], &forced_el_residual(&m.lagrangian, &m.force, &j2.background())));
            let b = el_residual(&force_prolong(&m.lagrangian, &poly)?, &j2.doubled());
            worst = worst.max(max_rel(&b[1..], &forced_el_residual(&m.lagrangian, &poly, &j2.background())));
        }
        Ok(bound(worst, 1e-12))
    };
    out.push(outcome("fieldeq", "v-slot of the forced prolongation is the forced residual", run(rng)));

    fn routes<L: Lagrangian>(l: &L, rng: &mut ChaCha8Rng) -> f64 {
        let (n, k) = (l.fields(), l.base_dim());
        let mut worst = 0.0_f64;
        for _ in 0..100 {
            let j2 = random_prolonged_second_jet(rng, n, k);
            worst = worst.max(max_rel(
                &jacobi_residual(l, &j2, JacobiMode::Direct),
                &jacobi_residual(l, &j2, JacobiMode::ViaLift),
            ));
        }
        worst
    }
    let mut worst = 0.0_f64;
    for m in [presets::wave(1.0), presets::sine_gordon(), presets::harmonic(1.0)] {
        worst = worst.max(routes(&m.lagrangian, rng));
    }
    worst = worst.max(routes(&CoupledNonlinear, rng));
    out.push(outcome("fieldeq", "Jacobi operator: direct and lifted routes agree", Ok(bound(worst, 1e-10))));

    let run = || -> Result<(bool, String)> {
        let m = presets::damped_wave(1.0, 1.0);
        let q = Profile::damped(1.0, 1.0, 1.0, 1.0, false)?;
        let v = Profile::damped(1.0, 1.0, 1.0, 1.0, true)?;
        let mut worst = 0.0_f64;
        for a in 0..20 {
            let x = [0.5 * a as f64, 0.3 + 0.29 * a as f64];
            let qj = second_jet_of_section(&q, &x);
            worst = worst.max(forced_el_residual(&m.lagrangian, &m.force, &qj)[0].abs());
            let pj = ProlongedSecondJet::from_parts(&qj, &second_jet_of_section(&v, &x))?;
            worst = worst.max(adjoint_residual(&m.lagrangian, &m.force, &pj)[0].abs());
        }
        Ok(bound(worst, 1e-10))
    };
    out.push(outcome("fieldeq", "damped and anti-damped modes solve their equations", run()));
}

fn geometry_suite(rng: &mut ChaCha8Rng, out: &mut Vec<CheckOutcome>) {
    let run = |rng: &mut ChaCha8Rng| -> Result<(bool, String)> {
        let l = PresetLagrangian::Wave { c: 1.0 };
        let mut worst = 0.0_f64;
        for pass in 0..40 {
            let p = random_jet(rng, 1, 2);
            let mut qdd = random_second(rng, 1, 2);
            let solves = pass < 20;
            if solves {
                qdd.set(0, 0, 0, qdd.get(0, 1, 1));
            }
            let x = KVectorAtJet::sopde_from_second(&p, &qdd);
            let g = geometric_el_residual(&l, &x, &p)?;
            if solves {
                worst = worst.max(g.max_abs());
            } else {
                let defect = el_residual(&l, &SecondJet::new(p.clone(), qdd)?)[0];
                worst = worst.max((g.b[0] + defect).abs());
            }
        }
        Ok(bound(worst, 1e-10))
    };
    out.push(outcome("geometry", "geometric equation vanishes exactly on field-equation SOPDEs", run(rng)));

    let run = |rng: &mut ChaCha8Rng| -> Result<(bool, String)> {
        let mut failures = Vec::new();
        let mut reeb_worst = 0.0_f64;
        for m in [presets::wave(1.0), presets::sine_gordon(), presets::harmonic(1.0)] {
            for _ in 0..20 {
                let p = random_jet(rng, 1, m.base_dim());
                let r = cosymplectic_axioms_check(&m.lagrangian, &p)?;
                if !r.passed {
                    failures.push(m.name.clone());
                }
                if let Some(reeb) = &r.reeb {
                    reeb_worst = reeb_worst.max(reeb_residual(&omega_all(&m.lagrangian, &p), reeb));
                }
            }
        }
        let degenerate = cosymplectic_axioms_check(&VelocityLinear, &random_jet(rng, 1, 2))?;
        let ok = failures.is_empty() && !degenerate.passed && reeb_worst <= 1e-10;
        Ok((
            ok,
            format!(
                "failing presets {failures:?}; degenerate passed = {}; Reeb residual {reeb_worst:.3e}",
                degenerate.passed
            ),
        ))
    };
    out.push(outcome("geometry", "k-cosymplectic axioms hold exactly for regular presets", run(rng)));
}

fn integrator_suite(out: &mut Vec<CheckOutcome>) {
    let grid = GridSpec { nt: 60, nx: 41, t_end: 3.0, x_min: 0.0, x_max: 2.0 * PI };
    let bump = Profile::Gaussian { amplitude: 0.8, center: PI, width: 0.5 };
    let sg = presets::sine_gordon();
    let dw = presets::damped_wave(1.0, 1.0);
    let make = |m: &crate::lagrangian::Model| {
        Integrator::new(m.lagrangian, m.force, grid, BoundaryCondition::Periodic, SchemeConfig::default())
    };

    let run = || -> Result<(bool, String)> {
        let mut worst = 0.0_f64;
        for m in [&sg, &dw] {
            let mut it = make(m)?;
            let r = it.simulate(&bump)?;
            for a in 1..grid.nt - 1 {
                for b in 0..r.state.columns() {
                    worst = worst.max(it.del_residual(&r.state, a, b)?[0].abs());
                }
            }
        }
        Ok(bound(worst, SchemeConfig::default().newton.tol))
    };
    out.push(outcome("integrator", "discrete field equations hold after a march", run()));

    let run = || -> Result<(bool, String)> {
        let mut same = true;
        for m in [&sg, &dw] {
            let a = make(m)?.simulate(&bump)?;
            let b = make(m)?.simulate(&bump)?;
            let c = make(m)?.cosimulate(&bump, &bump)?;
            same &= a == b && a.state.q == c.state.q;
        }
        Ok((same, String::new()))
    };
    out.push(outcome("integrator", "marches repeat bitwise; co-simulated q equals simulated q", run()));

    let run = || -> Result<(bool, String)> {
        let w = presets::wave(1.0);
        let g = GridSpec { nt: 101, nx: 41, t_end: 10.0, ..grid };
        let mut it = Integrator::new(w.lagrangian, w.force, g, BoundaryCondition::Periodic, SchemeConfig::default())?;
        let r = it.simulate(&Profile::StandingMode { amplitude: 1.0, wavenumber: 2.0, speed: 1.0 })?;
        let e = energy_series(&w.lagrangian, &r.state);
        let drift = e.iter().map(|x| (x - e[0]).abs()).fold(0.0, f64::max) / (g.dt() * g.dt());
        Ok(bound(drift, 35.0))
    };
    out.push(outcome("integrator", "wave energy drift stays within C·Δt²", run()));

    let run = || -> Result<(bool, String)> {
        let exact = Profile::damped(1.0, 1.0, 1.0, 1.0, false)?;
        let t = crate::integrator::convergence_study(
            &dw.lagrangian,
            &dw.force,
            GridSpec { t_end: 4.0, ..grid },
            &[(41, 21), (81, 41)],
            BoundaryCondition::Periodic,
            SchemeConfig::default(),
            &exact,
            &exact,
        )?;
        let p = t.last_order().unwrap_or(f64::NAN);
        Ok(((p - 2.0).abs() <= 0.3, format!("observed order {p:.3}")))
    };
    out.push(outcome("integrator", "damped standing mode converges at second order", run()));
}

fn cli_suite(out: &mut Vec<CheckOutcome>) {
    let rejected = RunConfig::parse(r#"{"model": {"preset": "damped_wave", "tua": 1.0}}"#, &[]).is_err()
        && RunConfig::parse(r#"{"grdi": {}}"#, &[]).is_err();
    out.push(outcome("cli", "misspelled configuration keys are rejected", Ok((rejected, String::new()))));
}

/// Every suite, in a fixed order.
pub fn run_all(seed: u64) -> Vec<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    ad_suite(&mut rng, &mut out);
    jet_suite(&mut rng, &mut out);
    lagrangian_suite(&mut rng, &mut out);
    fieldeq_suite(&mut rng, &mut out);
    geometry_suite(&mut rng, &mut out);
    integrator_suite(&mut out);
    cli_suite(&mut out);
    out
}
