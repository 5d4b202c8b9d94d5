//! Lagrangians, forces, the preset catalog and the two constructions built
//! on top of them: the prolongation `L ↦ L̃` and the forced prolongation
//! `(L, F) ↦ L̃_F`.
//!
//! Doubled systems always order their fields `(q^1..q^n, v^1..v^n)`, so the
//! variation block is a contiguous tail of every coordinate array.

use nalgebra::DMatrix;

use crate::ad::{self, Dual, Scalar};
use crate::error::{Error, Result};
use crate::jet::{kappa, JetPoint, ProlongedJetPoint, TTkQ, TkTQ};

/// A first-order Lagrangian `L(x^μ, q^i, q^i_μ)` on the trivial bundle
/// `ℝ^k × ℝ^n`.
pub trait Lagrangian {
    /// Number of field components `n`.
    fn fields(&self) -> usize;
    /// Number of independent variables `k`.
    fn base_dim(&self) -> usize;
    /// `qd[i * k + mu]` is `q^i_mu`.
    fn eval<S: Scalar>(&self, x: &[S], q: &[S], qd: &[S]) -> S;

    /// Whether `L` may depend explicitly on `x`. Defaults to `true`.
    fn depends_on_x(&self) -> bool {
        true
    }

    /// `L` is a quadratic form in `(q, qd)`, so its Euler-Lagrange
    /// equations are linear.
    fn is_quadratic(&self) -> bool {
        false
    }

    /// Characteristic speed for wave-type Lagrangians.
    fn wave_speed(&self) -> Option<f64> {
        None
    }

    fn describe(&self) -> String {
        format!("user Lagrangian (n={}, k={})", self.fields(), self.base_dim())
    }

    fn coord_dim(&self) -> usize {
        let (n, k) = (self.fields(), self.base_dim());
        k + n + n * k
    }

    /// Evaluation on flat coordinates `(x, q, qd)`.
    fn eval_coords<S: Scalar>(&self, u: &[S]) -> S {
        let (n, k) = (self.fields(), self.base_dim());
        self.eval(&u[..k], &u[k..k + n], &u[k + n..])
    }
}

impl<L: Lagrangian> Lagrangian for &L {
    fn fields(&self) -> usize {
        (**self).fields()
    }
    fn base_dim(&self) -> usize {
        (**self).base_dim()
    }
    fn eval<S: Scalar>(&self, x: &[S], q: &[S], qd: &[S]) -> S {
        (**self).eval(x, q, qd)
    }
    fn depends_on_x(&self) -> bool {
        (**self).depends_on_x()
    }
    fn is_quadratic(&self) -> bool {
        (**self).is_quadratic()
    }
    fn wave_speed(&self) -> Option<f64> {
        (**self).wave_speed()
    }
    fn describe(&self) -> String {
        (**self).describe()
    }
}

/// Values of a force `F = F_i dq^i + F^μ_i dq^i_μ` at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct ForceValue<S> {
    /// `F_i`, length `n`.
    pub f: Vec<S>,
    /// `F^μ_i` at `[i * k + mu]`.
    pub flux: Vec<S>,
}

/// A force depending on `(x, q, qd)` only. Dependence on a variation field
/// cannot be expressed through this signature.
pub trait Force {
    fn fields(&self) -> usize;
    fn base_dim(&self) -> usize;
    fn eval<S: Scalar>(&self, x: &[S], q: &[S], qd: &[S]) -> ForceValue<S>;

    /// Both components are linear in `(q, qd)` with constant coefficients.
    fn is_linear(&self) -> bool {
        false
    }

    fn is_zero(&self) -> bool {
        false
    }

    fn describe(&self) -> String {
        format!("user force (n={}, k={})", self.fields(), self.base_dim())
    }

    fn eval_coords<S: Scalar>(&self, u: &[S]) -> ForceValue<S> {
        let (n, k) = (self.fields(), self.base_dim());
        self.eval(&u[..k], &u[k..k + n], &u[k + n..])
    }
}

impl<F: Force> Force for &F {
    fn fields(&self) -> usize {
        (**self).fields()
    }
    fn base_dim(&self) -> usize {
        (**self).base_dim()
    }
    fn eval<S: Scalar>(&self, x: &[S], q: &[S], qd: &[S]) -> ForceValue<S> {
        (**self).eval(x, q, qd)
    }
    fn is_linear(&self) -> bool {
        (**self).is_linear()
    }
    fn is_zero(&self) -> bool {
        (**self).is_zero()
    }
    fn describe(&self) -> String {
        (**self).describe()
    }
}

/// The zero force.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoForce {
    pub n: usize,
    pub k: usize,
}

impl NoForce {
    pub fn like<L: Lagrangian>(l: &L) -> Self {
        NoForce { n: l.fields(), k: l.base_dim() }
    }
}

impl Force for NoForce {
    fn fields(&self) -> usize {
        self.n
    }
    fn base_dim(&self) -> usize {
        self.k
    }
    fn eval<S: Scalar>(&self, _x: &[S], _q: &[S], _qd: &[S]) -> ForceValue<S> {
        ForceValue { f: vec![S::zero(); self.n], flux: vec![S::zero(); self.n * self.k] }
    }
    fn is_linear(&self) -> bool {
        true
    }
    fn is_zero(&self) -> bool {
        true
    }
    fn describe(&self) -> String {
        "no force".into()
    }
}

/// Keeps `F^μ_i` and drops `F_i`.
#[derive(Clone, Copy, Debug)]
pub struct FluxOnly<F>(pub F);

impl<F: Force> Force for FluxOnly<F> {
    fn fields(&self) -> usize {
        self.0.fields()
    }
    fn base_dim(&self) -> usize {
        self.0.base_dim()
    }
    fn eval<S: Scalar>(&self, x: &[S], q: &[S], qd: &[S]) -> ForceValue<S> {
        let mut v = self.0.eval(x, q, qd);
        v.f.iter_mut().for_each(|c| *c = S::zero());
        v
    }
    fn is_linear(&self) -> bool {
        self.0.is_linear()
    }
}

/// `L^C(x, ω, V) = ⟨dL_x(ω), V⟩`: the complete lift evaluated at a point of
/// `T(T¹_kQ)`.
pub fn complete_lift<L: Lagrangian, S: Scalar>(l: &L, x: &[S], p: &TTkQ<S>) -> S {
    let x: Vec<Dual<S>> = x.iter().map(|&v| Dual::constant(v)).collect();
    let q: Vec<Dual<S>> = p.q.iter().zip(&p.v).map(|(&a, &b)| Dual::new(a, b)).collect();
    let qd: Vec<Dual<S>> = p.qd.iter().zip(&p.vd).map(|(&a, &b)| Dual::new(a, b)).collect();
    l.eval(&x, &q, &qd).eps
}

/// `L̃ = L^C ∘ (id × κ)`, a Lagrangian for the doubled field `(q, v)`.
#[derive(Clone, Copy, Debug)]
pub struct Prolonged<L> {
    pub base: L,
}

/// Builds `L̃`.
pub fn prolong<L: Lagrangian>(l: L) -> Prolonged<L> {
    Prolonged { base: l }
}

impl<L: Lagrangian> Lagrangian for Prolonged<L> {
    fn fields(&self) -> usize {
        2 * self.base.fields()
    }
    fn base_dim(&self) -> usize {
        self.base.base_dim()
    }
    fn eval<S: Scalar>(&self, x: &[S], q: &[S], qd: &[S]) -> S {
        let (n, k) = (self.base.fields(), self.base.base_dim());
        let point = TkTQ { q: q[..n].to_vec(), v: q[n..].to_vec(), qd: qd[..n * k].to_vec(), vd: qd[n * k..].to_vec() };
        complete_lift(&self.base, x, &kappa(point))
    }
    fn depends_on_x(&self) -> bool {
        self.base.depends_on_x()
    }
    fn is_quadratic(&self) -> bool {
        self.base.is_quadratic()
    }
    fn wave_speed(&self) -> Option<f64> {
        self.base.wave_speed()
    }
    fn describe(&self) -> String {
        format!("prolongation of {}", self.base.describe())
    }
}

/// `L̃_F = L̃ + F_j v^j − F^γ_j v^j_γ`. Its `v`-slot Euler-Lagrange equation
/// is the forced field equation `Σ_μ D_μ(∂L/∂q^i_μ − F^μ_i) − ∂L/∂q^i = F_i`;
/// its `q`-slot is the adjoint system.
#[derive(Clone, Copy, Debug)]
pub struct ForceProlonged<L, F> {
    pub prolonged: Prolonged<L>,
    pub force: F,
}

pub fn force_prolong<L: Lagrangian, F: Force>(l: L, f: F) -> Result<ForceProlonged<L, F>> {
    if l.fields() != f.fields() || l.base_dim() != f.base_dim() {
        return Err(Error::Dimension(format!(
            "force shape (n={}, k={}) does not match Lagrangian (n={}, k={})",
            f.fields(),
            f.base_dim(),
            l.fields(),
            l.base_dim()
        )));
    }
    Ok(ForceProlonged { prolonged: prolong(l), force: f })
}

impl<L: Lagrangian, F: Force> Lagrangian for ForceProlonged<L, F> {
    fn fields(&self) -> usize {
        self.prolonged.fields()
    }
    fn base_dim(&self) -> usize {
        self.prolonged.base_dim()
    }
    fn eval<S: Scalar>(&self, x: &[S], q: &[S], qd: &[S]) -> S {
        let base = &self.prolonged.base;
        let (n, k) = (base.fields(), base.base_dim());
        let mut value = self.prolonged.eval(x, q, qd);
        if self.force.is_zero() {
            return value;
        }
        let fv = self.force.eval(x, &q[..n], &qd[..n * k]);
        for j in 0..n {
            value += fv.f[j] * q[n + j];
            for g in 0..k {
                value -= fv.flux[j * k + g] * qd[n * k + j * k + g];
            }
        }
        value
    }
    fn depends_on_x(&self) -> bool {
        self.prolonged.depends_on_x()
    }
    fn is_quadratic(&self) -> bool {
        self.prolonged.is_quadratic() && self.force.is_linear()
    }
    fn wave_speed(&self) -> Option<f64> {
        self.prolonged.wave_speed()
    }
    fn describe(&self) -> String {
        format!("forced prolongation of {} with {}", self.prolonged.base.describe(), self.force.describe())
    }
}

fn check_point<L: Lagrangian>(l: &L, p: &JetPoint) {
    assert!(
        p.n() == l.fields() && p.k() == l.base_dim(),
        "jet point (n={}, k={}) incompatible with Lagrangian (n={}, k={})",
        p.n(),
        p.k(),
        l.fields(),
        l.base_dim()
    );
}

/// `∂L/∂q^i_μ` at `[i * k + mu]`, one pass per velocity direction.
pub fn momenta<L: Lagrangian>(l: &L, p: &JetPoint) -> Vec<f64> {
    check_point(l, p);
    momenta_generic(l, &p.coords())
}

fn momenta_generic<L: Lagrangian, S: Scalar>(l: &L, u: &[S]) -> Vec<S> {
    let (n, k) = (l.fields(), l.base_dim());
    let off = k + n;
    let mut d: Vec<Dual<S>> = u.iter().map(|&v| Dual::constant(v)).collect();
    (0..n * k)
        .map(|a| {
            d[off + a].eps = S::one();
            let r = l.eval_coords(&d).eps;
            d[off + a].eps = S::zero();
            r
        })
        .collect()
}

/// `E_L = Σ_{i,μ} q^i_μ ∂L/∂q^i_μ − L`, generic so it can be differentiated.
pub fn energy_generic<L: Lagrangian, S: Scalar>(l: &L, u: &[S]) -> S {
    let (n, k) = (l.fields(), l.base_dim());
    let p = momenta_generic(l, u);
    let mut e = -l.eval_coords(u);
    for a in 0..n * k {
        e += u[k + n + a] * p[a];
    }
    e
}

/// `E_L = Δ̄(L) − L`.
pub fn energy<L: Lagrangian>(l: &L, p: &JetPoint) -> f64 {
    check_point(l, p);
    energy_generic(l, &p.coords())
}

/// `dE_L` over all `k + n + nk` coordinates.
pub fn energy_differential<L: Lagrangian>(l: &L, p: &JetPoint) -> Vec<f64> {
    check_point(l, p);
    ad::gradient(|u| energy_generic(l, u), &p.coords())
}

/// Time-translation energy density `Σ_i q^i_0 ∂L/∂q^i_0 − L` (the first
/// base coordinate is time).
pub fn time_energy_density<L: Lagrangian>(l: &L, p: &JetPoint) -> f64 {
    check_point(l, p);
    let k = l.base_dim();
    let mom = momenta(l, p);
    let mut e = -l.eval_coords(&p.coords());
    for i in 0..l.fields() {
        e += p.qd[i * k] * mom[i * k];
    }
    e
}

/// `∂²L/∂q^i_μ ∂q^j_ν` as an `nk × nk` matrix in the first-jet order.
pub fn velocity_hessian<L: Lagrangian>(l: &L, p: &JetPoint) -> DMatrix<f64> {
    check_point(l, p);
    let (n, k) = (l.fields(), l.base_dim());
    let off = k + n;
    let u = p.coords();
    let nk = n * k;
    let mut d: Vec<Dual<Dual<f64>>> = u.iter().map(|&v| Dual::constant(Dual::constant(v))).collect();
    DMatrix::from_fn(nk, nk, |a, b| {
        d[off + a].eps.re = 1.0;
        d[off + b].re.eps = 1.0;
        let h = l.eval_coords(&d).eps.eps;
        d[off + a].eps.re = 0.0;
        d[off + b].re.eps = 0.0;
        h
    })
}

/// Relative determinant threshold for regularity.
pub const REGULARITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct RegularityReport {
    pub velocity_hessian: DMatrix<f64>,
    pub det: f64,
    /// Determinant of the `2nk × 2nk` velocity Hessian of `L̃`.
    pub prolonged_det: f64,
    pub is_regular: bool,
}

/// Regularity of `L` at `p`, plus the prolonged block determinant at the
/// embedding of `p` with unit variation.
pub fn regularity<L: Lagrangian>(l: &L, p: &JetPoint) -> RegularityReport {
    let (n, k) = (l.fields(), l.base_dim());
    regularity_with_variation(l, p, &vec![1.0; n], &vec![1.0; n * k])
}

pub fn regularity_with_variation<L: Lagrangian>(l: &L, p: &JetPoint, v: &[f64], vd: &[f64]) -> RegularityReport {
    let w = velocity_hessian(l, p);
    let det = w.clone().lu().determinant();
    let nk = w.nrows();
    let scale = w.amax().powi(nk as i32).max(1.0);
    let doubled =
        ProlongedJetPoint { x: p.x.clone(), q: p.q.clone(), v: v.to_vec(), qd: p.qd.clone(), vd: vd.to_vec() }
            .doubled();
    let wt = velocity_hessian(&prolong(l), &doubled);
    let prolonged_det = wt.lu().determinant();
    RegularityReport { velocity_hessian: w, det, prolonged_det, is_regular: det.abs() > REGULARITY_TOL * scale }
}

/// Preset Lagrangians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PresetLagrangian {
    /// `½(q_t² − c² q_x²)`, `n = 1`, `k = 2`.
    Wave { c: f64 },
    /// `½(q_t² − q_x²) − (1 − cos q)`, `n = 1`, `k = 2`.
    SineGordon,
    /// `½(q̇² − ω² q²)`, `n = 1`, `k = 1`.
    Harmonic { omega: f64 },
}

impl Lagrangian for PresetLagrangian {
    fn fields(&self) -> usize {
        1
    }
    fn base_dim(&self) -> usize {
        match self {
            PresetLagrangian::Harmonic { .. } => 1,
            _ => 2,
        }
    }
    fn eval<S: Scalar>(&self, _x: &[S], q: &[S], qd: &[S]) -> S {
        match *self {
            PresetLagrangian::Wave { c } => (qd[0] * qd[0] - qd[1] * qd[1] * (c * c)) * 0.5,
            PresetLagrangian::SineGordon => (qd[0] * qd[0] - qd[1] * qd[1]) * 0.5 - (S::one() - q[0].cos()),
            PresetLagrangian::Harmonic { omega } => (qd[0] * qd[0] - q[0] * q[0] * (omega * omega)) * 0.5,
        }
    }
    fn depends_on_x(&self) -> bool {
        false
    }
    fn is_quadratic(&self) -> bool {
        !matches!(self, PresetLagrangian::SineGordon)
    }
    fn wave_speed(&self) -> Option<f64> {
        match *self {
            PresetLagrangian::Wave { c } => Some(c),
            PresetLagrangian::SineGordon => Some(1.0),
            PresetLagrangian::Harmonic { .. } => None,
        }
    }
    fn describe(&self) -> String {
        match *self {
            PresetLagrangian::Wave { c } => format!("wave: L = 1/2 (q_t^2 - c^2 q_x^2), c = {c}"),
            PresetLagrangian::SineGordon => "sine_gordon: L = 1/2 (q_t^2 - q_x^2) - (1 - cos q)".into(),
            PresetLagrangian::Harmonic { omega } => {
                format!("harmonic: L = 1/2 (q_t^2 - omega^2 q^2), omega = {omega}")
            }
        }
    }
}

/// Preset forces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PresetForce {
    Zero {
        n: usize,
        k: usize,
    },
    /// `F_i = −(1/τ) q^i_t`, `F^μ_i = 0`.
    Damping {
        tau: f64,
        n: usize,
        k: usize,
    },
}

impl Force for PresetForce {
    fn fields(&self) -> usize {
        match *self {
            PresetForce::Zero { n, .. } | PresetForce::Damping { n, .. } => n,
        }
    }
    fn base_dim(&self) -> usize {
        match *self {
            PresetForce::Zero { k, .. } | PresetForce::Damping { k, .. } => k,
        }
    }
    fn eval<S: Scalar>(&self, _x: &[S], _q: &[S], qd: &[S]) -> ForceValue<S> {
        let (n, k) = (self.fields(), self.base_dim());
        let mut out = ForceValue { f: vec![S::zero(); n], flux: vec![S::zero(); n * k] };
        if let PresetForce::Damping { tau, .. } = *self {
            for i in 0..n {
                out.f[i] = -(qd[i * k] / tau);
            }
        }
        out
    }
    fn is_linear(&self) -> bool {
        true
    }
    fn is_zero(&self) -> bool {
        matches!(self, PresetForce::Zero { .. })
    }
    fn describe(&self) -> String {
        match *self {
            PresetForce::Zero { .. } => "no force".into(),
            PresetForce::Damping { tau, .. } => format!("damping F = -(1/tau) q_t, tau = {tau}"),
        }
    }
}

/// A named Lagrangian with its (possibly zero) force.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub name: String,
    pub lagrangian: PresetLagrangian,
    pub force: PresetForce,
}

impl Model {
    pub fn fields(&self) -> usize {
        self.lagrangian.fields()
    }

    pub fn base_dim(&self) -> usize {
        self.lagrangian.base_dim()
    }

    pub fn describe(&self) -> String {
        format!("{} [{}; {}]", self.name, self.lagrangian.describe(), self.force.describe())
    }
}

/// The preset catalog.
pub mod presets {
    use super::*;

    pub fn wave(c: f64) -> Model {
        Model { name: "wave".into(), lagrangian: PresetLagrangian::Wave { c }, force: PresetForce::Zero { n: 1, k: 2 } }
    }

    pub fn damped_wave(c: f64, tau: f64) -> Model {
        Model {
            name: "damped_wave".into(),
            lagrangian: PresetLagrangian::Wave { c },
            force: PresetForce::Damping { tau, n: 1, k: 2 },
        }
    }

    pub fn sine_gordon() -> Model {
        Model {
            name: "sine_gordon".into(),
            lagrangian: PresetLagrangian::SineGordon,
            force: PresetForce::Zero { n: 1, k: 2 },
        }
    }

    pub fn harmonic(omega: f64) -> Model {
        Model {
            name: "harmonic".into(),
            lagrangian: PresetLagrangian::Harmonic { omega },
            force: PresetForce::Zero { n: 1, k: 1 },
        }
    }
}

/// Small Lagrangians and forces used by the invariant suites.
pub mod fixtures {
    use super::*;
    use rand::Rng;

    /// `L = q_t` (`n = 1`, `k = 2`): degenerate everywhere.
    #[derive(Clone, Copy, Debug)]
    pub struct VelocityLinear;

    impl Lagrangian for VelocityLinear {
        fn fields(&self) -> usize {
            1
        }
        fn base_dim(&self) -> usize {
            2
        }
        fn eval<S: Scalar>(&self, _x: &[S], _q: &[S], qd: &[S]) -> S {
            qd[0]
        }
        fn depends_on_x(&self) -> bool {
            false
        }
    }

    /// `L = q_t q_x` (`n = 1`, `k = 2`).
    #[derive(Clone, Copy, Debug)]
    pub struct MixedVelocity;

    impl Lagrangian for MixedVelocity {
        fn fields(&self) -> usize {
            1
        }
        fn base_dim(&self) -> usize {
            2
        }
        fn eval<S: Scalar>(&self, _x: &[S], _q: &[S], qd: &[S]) -> S {
            qd[0] * qd[1]
        }
        fn depends_on_x(&self) -> bool {
            false
        }
        fn is_quadratic(&self) -> bool {
            true
        }
    }

    /// A two-field, explicitly `x`-dependent nonlinear Lagrangian (`k = 2`).
    #[derive(Clone, Copy, Debug)]
    pub struct CoupledNonlinear;

    impl Lagrangian for CoupledNonlinear {
        fn fields(&self) -> usize {
            2
        }
        fn base_dim(&self) -> usize {
            2
        }
        fn eval<S: Scalar>(&self, x: &[S], q: &[S], qd: &[S]) -> S {
            let kinetic = (qd[0] * qd[0] + qd[2] * qd[2] * 1.5) * 0.5 + qd[0] * qd[2] * 0.2;
            let gradient = (qd[1] * qd[1] * (x[1].sin() * 0.3 + 1.0) + qd[3] * qd[3] * 0.8) * 0.5 + qd[1] * qd[3] * 0.1;
            let coupling = q[0] * q[1] * qd[0] * 0.25 + (q[0] - q[1] * 0.5).cos() * (x[0] * 0.2).exp();
            kinetic - gradient - coupling + q[1] * q[1] * q[1] * 0.05
        }
    }

    /// A nonlinear force with nonzero `F_i` and `F^μ_i`, drawn from a seed.
    #[derive(Clone, Debug)]
    pub struct PolynomialForce {
        pub n: usize,
        pub k: usize,
        pub a: Vec<f64>,
        pub b: Vec<f64>,
        pub c: Vec<f64>,
        pub d: Vec<f64>,
        pub e: Vec<f64>,
        pub g: Vec<f64>,
    }

    impl PolynomialForce {
        pub fn random<R: Rng>(n: usize, k: usize, rng: &mut R) -> Self {
            let mut draw = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.random_range(-1.0..1.0)).collect() };
            PolynomialForce {
                n,
                k,
                a: draw(n),
                b: draw(n * n * k),
                c: draw(n),
                d: draw(n * k),
                e: draw(n * k),
                g: draw(n * k),
            }
        }
    }

    impl Force for PolynomialForce {
        fn fields(&self) -> usize {
            self.n
        }
        fn base_dim(&self) -> usize {
            self.k
        }
        fn eval<S: Scalar>(&self, x: &[S], q: &[S], qd: &[S]) -> ForceValue<S> {
            let (n, k) = (self.n, self.k);
            let mut f = Vec::with_capacity(n);
            for i in 0..n {
                let mut fi = q[i].sin() * self.a[i] + q[i] * qd[i * k] * self.c[i];
                for j in 0..n {
                    for nu in 0..k {
                        fi += qd[j * k + nu] * self.b[(i * n + j) * k + nu];
                    }
                }
                f.push(fi);
            }
            let mut flux = Vec::with_capacity(n * k);
            for i in 0..n {
                for mu in 0..k {
                    let s = i * k + mu;
                    flux.push(q[i] * self.d[s] + qd[s] * qd[s] * self.e[s] + x[mu] * self.g[s]);
                }
            }
            ForceValue { f, flux }
        }
        fn describe(&self) -> String {
            "random polynomial force".into()
        }
    }
}
