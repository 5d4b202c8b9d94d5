//! Residual operators along sections, evaluated pointwise from second jets.
//!
//! Total derivatives are expanded by the chain rule against the supplied
//! second jet: `D_μ g = Dg · (e_μ, q_μ, q_{·μ})`. Doubled systems order the
//! fields `(q, v)`; the first `n` residual components (the `q`-slot, paired
//! with `δq`) carry the Jacobi or adjoint equation and the last `n` (the
//! `v`-slot) reproduce the original field equation.

use nalgebra::DVector;

use crate::ad::{self, basis};
use crate::jet::{ProlongedSecondJet, SecondJet};
use crate::lagrangian::{force_prolong, prolong, Force, Lagrangian};

fn check<L: Lagrangian>(l: &L, j2: &SecondJet) {
    assert!(
        j2.jet.n() == l.fields() && j2.jet.k() == l.base_dim(),
        "second jet (n={}, k={}) incompatible with Lagrangian (n={}, k={})",
        j2.jet.n(),
        j2.jet.k(),
        l.fields(),
        l.base_dim()
    );
}

/// `Σ_μ D_μ(∂L/∂q^i_μ) − ∂L/∂q^i`.
pub fn el_residual<L: Lagrangian>(l: &L, j2: &SecondJet) -> Vec<f64> {
    check(l, j2);
    let (n, k) = (l.fields(), l.base_dim());
    let u = j2.jet.coords();
    let m = u.len();
    let dirs: Vec<Vec<f64>> = (0..k).map(|mu| j2.total_direction(mu)).collect();
    (0..n)
        .map(|i| {
            let mut r = 0.0;
            for (mu, dir) in dirs.iter().enumerate() {
                let e = basis(m, k + n + i * k + mu);
                r += ad::second_directional(|w| l.eval_coords(w), &u, &e, dir);
            }
            r - ad::directional_derivative(|w| l.eval_coords(w), &u, &basis(m, k + i))
        })
        .collect()
}

/// `Σ_μ D_μ(∂L/∂q^i_μ − F^μ_i) − ∂L/∂q^i − F_i`.
pub fn forced_el_residual<L: Lagrangian, F: Force>(l: &L, f: &F, j2: &SecondJet) -> Vec<f64> {
    let mut r = el_residual(l, j2);
    if f.is_zero() {
        return r;
    }
    let (n, k) = (l.fields(), l.base_dim());
    let u = j2.jet.coords();
    let fv = f.eval_coords(&u);
    for mu in 0..k {
        let dir = j2.total_direction(mu);
        let seeded = ad::seed(&u, &dir);
        let dflux = f.eval_coords(&seeded).flux;
        for i in 0..n {
            r[i] -= dflux[i * k + mu].eps;
        }
    }
    for i in 0..n {
        r[i] -= fv.f[i];
    }
    r
}

/// Which of the two independent Jacobi routes to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JacobiMode {
    /// Expands the linearized operator from `D²L` and `D³L` directly.
    Direct,
    /// The `q`-slot of the Euler-Lagrange residual of `L̃`.
    ViaLift,
}

/// Jacobi operator of `L` along the background `q`, applied to `v`.
pub fn jacobi_residual<L: Lagrangian>(l: &L, j2: &ProlongedSecondJet, mode: JacobiMode) -> Vec<f64> {
    match mode {
        JacobiMode::ViaLift => {
            let n = l.fields();
            let mut r = el_residual(&prolong(l), &j2.doubled());
            r.truncate(n);
            r
        }
        JacobiMode::Direct => jacobi_direct(l, j2),
    }
}

fn jacobi_direct<L: Lagrangian>(l: &L, j2: &ProlongedSecondJet) -> Vec<f64> {
    let background = j2.background();
    check(l, &background);
    let (n, k) = (l.fields(), l.base_dim());
    let u = background.jet.coords();
    let m = u.len();
    let h = ad::hessian(|w| l.eval_coords(w), &u);

    let mut w = DVector::zeros(m);
    for i in 0..n {
        w[k + i] = j2.jet.v[i];
        for mu in 0..k {
            w[k + n + i * k + mu] = j2.jet.vd[i * k + mu];
        }
    }
    let hw = &h * &w;

    let mut r: Vec<f64> = (0..n).map(|i| -hw[k + i]).collect();
    for mu in 0..k {
        let dir = background.total_direction(mu);
        let dh = ad::directional_derivative_of_hessian(|z| l.eval_coords(z), &u, &dir);
        let mut dw = DVector::zeros(m);
        for i in 0..n {
            dw[k + i] = j2.jet.vd[i * k + mu];
            for nu in 0..k {
                dw[k + n + i * k + nu] = j2.vdd.get(i, nu, mu);
            }
        }
        let t = &dh * &w + &h * &dw;
        for (i, ri) in r.iter_mut().enumerate() {
            *ri += t[k + n + i * k + mu];
        }
    }
    r
}

/// `q`-slot of the Euler-Lagrange residual of `L̃_F`: the equation that
/// governs the absorbing field `v`.
pub fn adjoint_residual<L: Lagrangian, F: Force>(l: &L, f: &F, j2: &ProlongedSecondJet) -> Vec<f64> {
    let n = l.fields();
    let lf = force_prolong(l, f).expect("force shape checked by caller");
    let mut r = el_residual(&lf, &j2.doubled());
    r.truncate(n);
    r
}

/// Full `2n` residual of `L̃_F`, `(q-slot, v-slot)`.
pub fn doubled_residual<L: Lagrangian, F: Force>(l: &L, f: &F, j2: &ProlongedSecondJet) -> Vec<f64> {
    let lf = force_prolong(l, f).expect("force shape checked by caller");
    el_residual(&lf, &j2.doubled())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ad::Scalar;
    use crate::jet::{second_jet_of_section, AnalyticSection, JetPoint, SymmetricSecond};
    use crate::lagrangian::{NoForce, PresetForce, PresetLagrangian};

    macro_rules! section {
        ($k:expr, |$x:ident| $body:expr) => {{
            struct S;
            impl AnalyticSection for S {
                fn base_dim(&self) -> usize {
                    $k
                }
                fn fields(&self) -> usize {
                    1
                }
                fn eval<T: Scalar>(&self, $x: &[T]) -> Vec<T> {
                    vec![$body]
                }
            }
            S
        }};
    }

    const WAVE: PresetLagrangian = PresetLagrangian::Wave { c: 1.0 };
    const DAMP: PresetForce = PresetForce::Damping { tau: 1.0, n: 1, k: 2 };

    #[test]
    fn travelling_wave_is_a_solution() {
        let s = section!(2, |x| (x[1] - x[0]).sin());
        for &(t, x) in &[(0.0, 0.0), (0.3, 1.7), (-2.0, 0.4)] {
            let r = el_residual(&WAVE, &second_jet_of_section(&s, &[t, x]));
            assert!(r[0].abs() < 1e-14);
        }
    }

    #[test]
    fn quadratic_in_time() {
        let s = section!(2, |x| x[0] * x[0]);
        assert_eq!(el_residual(&WAVE, &second_jet_of_section(&s, &[0.0, 0.0])), vec![2.0]);
    }

    #[test]
    fn sine_gordon_equilibrium() {
        let s = section!(2, |x| x[0] * 0.0 + std::f64::consts::PI);
        let r = el_residual(&PresetLagrangian::SineGordon, &second_jet_of_section(&s, &[0.5, 0.5]));
        assert!(r[0].abs() < 1e-15);
    }

    #[test]
    fn damped_travelling_wave() {
        let s = section!(2, |x| (x[1] - x[0]).sin());
        let j2 = second_jet_of_section(&s, &[0.0, 0.0]);
        assert_eq!(forced_el_residual(&WAVE, &DAMP, &j2), vec![-1.0]);
    }

    #[test]
    fn zero_force_is_el() {
        let s = section!(2, |x| (x[0] * 0.7).cos() * x[1].exp());
        let j2 = second_jet_of_section(&s, &[0.2, -0.3]);
        let l = PresetLagrangian::SineGordon;
        assert_eq!(forced_el_residual(&l, &NoForce::like(&l), &j2), el_residual(&l, &j2));
    }

    #[test]
    fn harmonic_jacobi() {
        let q = section!(1, |x| x[0].cos());
        let v = section!(1, |x| x[0].sin());
        let l = PresetLagrangian::Harmonic { omega: 1.0 };
        for t in [0.0, 0.4, 2.5] {
            let j2 = ProlongedSecondJet::from_parts(&second_jet_of_section(&q, &[t]), &second_jet_of_section(&v, &[t]))
                .unwrap();
            for mode in [JacobiMode::Direct, JacobiMode::ViaLift] {
                assert!(jacobi_residual(&l, &j2, mode)[0].abs() < 1e-15);
            }
        }
    }

    #[test]
    fn sine_gordon_jacobi_dispersion() {
        let zero = section!(2, |x| x[0] * 0.0);
        for beta in [0.5_f64, 1.0, 2.0_f64.sqrt()] {
            struct V(f64);
            impl AnalyticSection for V {
                fn base_dim(&self) -> usize {
                    2
                }
                fn fields(&self) -> usize {
                    1
                }
                fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
                    vec![(x[1] - x[0] * self.0).sin()]
                }
            }
            let p = [0.3, 1.1];
            let j2 =
                ProlongedSecondJet::from_parts(&second_jet_of_section(&zero, &p), &second_jet_of_section(&V(beta), &p))
                    .unwrap();
            let expected = (2.0 - beta * beta) * (p[1] - beta * p[0]).sin();
            for mode in [JacobiMode::Direct, JacobiMode::ViaLift] {
                let r = jacobi_residual(&PresetLagrangian::SineGordon, &j2, mode)[0];
                assert!((r - expected).abs() < 1e-14, "{mode:?} beta={beta}: {r} vs {expected}");
            }
        }
    }

    #[test]
    fn damped_adjoint_matches_hand_expansion() {
        let tau = 0.7;
        let f = PresetForce::Damping { tau, n: 1, k: 2 };
        let p = JetPoint::new(vec![0.1, 0.2], vec![0.4], vec![0.9, -0.3]).unwrap();
        let j2 = ProlongedSecondJet::new(
            p.with_variation(vec![1.3], vec![-0.6, 0.25]).unwrap(),
            SymmetricSecond::from_fn(1, 2, |_, a, b| (a + 2 * b) as f64),
            SymmetricSecond::from_fn(1, 2, |_, a, b| [1.5, -0.4, 2.2][a + b]),
        )
        .unwrap();
        // v_tt − v_xx − v_t/τ
        let expected = 1.5 - 2.2 + 0.6 / tau;
        assert!((adjoint_residual(&WAVE, &f, &j2)[0] - expected).abs() < 1e-14);
        // v ≡ 0 leaves nothing to couple to
        let j0 = ProlongedSecondJet::new(
            p.with_variation(vec![0.0], vec![0.0, 0.0]).unwrap(),
            SymmetricSecond::from_fn(1, 2, |_, a, b| (a + 2 * b) as f64),
            SymmetricSecond::zeros(1, 2),
        )
        .unwrap();
        assert_eq!(adjoint_residual(&WAVE, &f, &j0), vec![0.0]);
    }
}
