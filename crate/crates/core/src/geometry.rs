//! Canonical and Lagrangian k-cosymplectic structures at a single point of
//! `ℝ^k × T¹_kQ`, as finite-dimensional linear algebra.
//!
//! Coordinates are ordered `(x^μ, q^i, q^i_μ)` with `q^i_μ` at
//! `k + n + i·k + μ`. A two-form is a coefficient matrix `A` with
//! `ω(u, w) = uᵀ A w`, and `dα ∧ dβ` maps to `e_α e_βᵀ − e_β e_αᵀ`; the
//! interior product is then `(i_X ω)_β = Σ_α X_α A_αβ`.
//!
//! With this convention the `dq^i` component of the geometric residual is
//! `∂L/∂q^i − Σ_μ D_μ(∂L/∂q^i_μ)`, the negative of
//! [`crate::fieldeq::el_residual`].

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::ad;
use crate::error::{Error, Result};
use crate::jet::{JetPoint, SymmetricSecond};
use crate::lagrangian::{energy_generic, momenta, regularity, Lagrangian};

/// Relative singular-value threshold for numeric rank.
pub const RANK_TOL: f64 = 1e-10;

/// A tangent vector `a^μ ∂/∂x^μ + b^i ∂/∂q^i + c^i_μ ∂/∂q^i_μ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TangentAtJet {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// `c[i * k + mu]`.
    pub c: Vec<f64>,
}

/// A covector over `(dx^μ, dq^i, dq^i_μ)`, same layout as [`TangentAtJet`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CovectorAtJet {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

macro_rules! flat_blocks {
    ($t:ident) => {
        impl $t {
            pub fn zeros(n: usize, k: usize) -> Self {
                $t { a: vec![0.0; k], b: vec![0.0; n], c: vec![0.0; n * k] }
            }

            pub fn from_flat(n: usize, k: usize, v: &[f64]) -> Result<Self> {
                if v.len() != k + n + n * k {
                    return Err(Error::Dimension(format!("expected {} components, got {}", k + n + n * k, v.len())));
                }
                Ok($t { a: v[..k].to_vec(), b: v[k..k + n].to_vec(), c: v[k + n..].to_vec() })
            }

            pub fn to_flat(&self) -> Vec<f64> {
                [self.a.as_slice(), &self.b, &self.c].concat()
            }

            pub fn n(&self) -> usize {
                self.b.len()
            }

            pub fn k(&self) -> usize {
                self.a.len()
            }

            pub fn max_abs(&self) -> f64 {
                self.to_flat().iter().fold(0.0, |m, v| m.max(v.abs()))
            }
        }
    };
}

flat_blocks!(TangentAtJet);
flat_blocks!(CovectorAtJet);

impl CovectorAtJet {
    pub fn pair(&self, t: &TangentAtJet) -> f64 {
        self.to_flat().iter().zip(t.to_flat()).map(|(a, b)| a * b).sum()
    }
}

/// A two-form stored by its strictly upper coefficients, so antisymmetry
/// holds by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoFormAtJet {
    dim: usize,
    upper: Vec<f64>,
}

impl TwoFormAtJet {
    pub fn zeros(dim: usize) -> Self {
        TwoFormAtJet { dim, upper: vec![0.0; dim * dim.saturating_sub(1) / 2] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn slot(&self, a: usize, b: usize) -> usize {
        debug_assert!(a < b && b < self.dim);
        a * self.dim - a * (a + 1) / 2 + (b - a - 1)
    }

    /// `ω += c · dα ∧ dβ`.
    pub fn add_wedge(&mut self, alpha: usize, beta: usize, c: f64) {
        use std::cmp::Ordering::*;
        match alpha.cmp(&beta) {
            Less => {
                let s = self.slot(alpha, beta);
                self.upper[s] += c;
            }
            Greater => {
                let s = self.slot(beta, alpha);
                self.upper[s] -= c;
            }
            Equal => {}
        }
    }

    /// `A[a][b]`.
    pub fn get(&self, a: usize, b: usize) -> f64 {
        use std::cmp::Ordering::*;
        match a.cmp(&b) {
            Less => self.upper[self.slot(a, b)],
            Greater => -self.upper[self.slot(b, a)],
            Equal => 0.0,
        }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |a, b| self.get(a, b))
    }

    pub fn eval(&self, u: &[f64], w: &[f64]) -> f64 {
        let mut s = 0.0;
        for a in 0..self.dim {
            for b in 0..self.dim {
                s += u[a] * self.get(a, b) * w[b];
            }
        }
        s
    }

    /// `i_X ω` as a flat covector.
    pub fn interior(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|b| (0..self.dim).map(|a| x[a] * self.get(a, b)).sum()).collect()
    }

    /// Nonzero upper coefficients `(α, β, c)` meaning `c · dα ∧ dβ`.
    pub fn nonzero_entries(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for a in 0..self.dim {
            for b in a + 1..self.dim {
                let c = self.upper[self.slot(a, b)];
                if c != 0.0 {
                    out.push((a, b, c));
                }
            }
        }
        out
    }
}

/// A k-vector field evaluated at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct KVectorAtJet {
    pub components: Vec<TangentAtJet>,
}

impl KVectorAtJet {
    /// `X_μ = ∂/∂x^μ + q^i_μ ∂/∂q^i + (f_μ)^i_ν ∂/∂q^i_ν` with `f(mu, i, nu)`.
    pub fn sopde(p: &JetPoint, f: impl Fn(usize, usize, usize) -> f64) -> Self {
        let (n, k) = (p.n(), p.k());
        let components = (0..k)
            .map(|mu| {
                let mut t = TangentAtJet::zeros(n, k);
                t.a[mu] = 1.0;
                for i in 0..n {
                    t.b[i] = p.qd(i, mu);
                    for nu in 0..k {
                        t.c[i * k + nu] = f(mu, i, nu);
                    }
                }
                t
            })
            .collect();
        KVectorAtJet { components }
    }

    /// The SOPDE whose integral sections have second jet `qdd` at `p`.
    pub fn sopde_from_second(p: &JetPoint, qdd: &SymmetricSecond) -> Self {
        Self::sopde(p, |mu, i, nu| qdd.get(i, nu, mu))
    }
}

/// `S̄^μ(t)`: moves the `∂/∂q^i` part of `t` into the `∂/∂q^i_μ` slot.
pub fn sbar_apply(mu: usize, t: &TangentAtJet) -> Result<TangentAtJet> {
    let (n, k) = (t.n(), t.k());
    if mu >= k {
        return Err(Error::Index(format!("direction {mu} out of range for k = {k}")));
    }
    let mut out = TangentAtJet::zeros(n, k);
    for i in 0..n {
        out.c[i * k + mu] = t.b[i];
    }
    Ok(out)
}

/// `Δ̄_μ = q^i_μ ∂/∂q^i_μ`.
pub fn liouville_component(p: &JetPoint, mu: usize) -> TangentAtJet {
    let (n, k) = (p.n(), p.k());
    let mut t = TangentAtJet::zeros(n, k);
    for i in 0..n {
        t.c[i * k + mu] = p.qd(i, mu);
    }
    t
}

/// `Δ̄ = Σ_μ Δ̄_μ`.
pub fn liouville(p: &JetPoint) -> TangentAtJet {
    let (n, k) = (p.n(), p.k());
    let mut t = TangentAtJet::zeros(n, k);
    for mu in 0..k {
        for (s, v) in t.c.iter_mut().zip(liouville_component(p, mu).c) {
            *s += v;
        }
    }
    t
}

fn differential<L: Lagrangian>(l: &L, p: &JetPoint) -> CovectorAtJet {
    let g = ad::gradient(|u| l.eval_coords(u), &p.coords());
    CovectorAtJet::from_flat(p.n(), p.k(), &g).expect("gradient length")
}

/// `Θ^μ_L = dL ∘ S̄^μ`, assembled by pairing `dL` with `S̄^μ` of each basis
/// vector.
pub fn theta<L: Lagrangian>(l: &L, p: &JetPoint, mu: usize) -> Result<CovectorAtJet> {
    let (n, k) = (p.n(), p.k());
    let dl = differential(l, p);
    let m = k + n + n * k;
    let mut out = vec![0.0; m];
    for (a, slot) in out.iter_mut().enumerate() {
        let e = TangentAtJet::from_flat(n, k, &ad::basis(m, a))?;
        *slot = dl.pair(&sbar_apply(mu, &e)?);
    }
    CovectorAtJet::from_flat(n, k, &out)
}

/// `Θ^μ_L = (∂L/∂q^i_μ) dq^i` from the momenta directly.
pub fn theta_coordinates<L: Lagrangian>(l: &L, p: &JetPoint, mu: usize) -> CovectorAtJet {
    let (n, k) = (p.n(), p.k());
    let mom = momenta(l, p);
    let mut out = CovectorAtJet::zeros(n, k);
    for i in 0..n {
        out.b[i] = mom[i * k + mu];
    }
    out
}

fn omega_from_hessian(n: usize, k: usize, h: &DMatrix<f64>, mu: usize) -> TwoFormAtJet {
    let m = k + n + n * k;
    let mut w = TwoFormAtJet::zeros(m);
    for i in 0..n {
        let row = k + n + i * k + mu;
        for alpha in 0..m {
            w.add_wedge(k + i, alpha, h[(row, alpha)]);
        }
    }
    w
}

/// `Ω^μ_L = −dΘ^μ_L = Σ dq^i ∧ d(∂L/∂q^i_μ)`, explicit-`x` terms included.
pub fn omega<L: Lagrangian>(l: &L, p: &JetPoint, mu: usize) -> Result<TwoFormAtJet> {
    if mu >= p.k() {
        return Err(Error::Index(format!("direction {mu} out of range for k = {}", p.k())));
    }
    Ok(omega_all(l, p).swap_remove(mu))
}

/// All `Ω^μ_L` from a single Hessian.
pub fn omega_all<L: Lagrangian>(l: &L, p: &JetPoint) -> Vec<TwoFormAtJet> {
    let (n, k) = (p.n(), p.k());
    let h = ad::hessian(|u| l.eval_coords(u), &p.coords());
    (0..k).map(|mu| omega_from_hessian(n, k, &h, mu)).collect()
}

/// `dE_L` over every coordinate.
pub fn energy_differential<L: Lagrangian>(l: &L, p: &JetPoint) -> CovectorAtJet {
    let g = ad::gradient(|u| energy_generic(l, u), &p.coords());
    CovectorAtJet::from_flat(p.n(), p.k(), &g).expect("gradient length")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SopdeReport {
    pub is_sopde: bool,
    /// `max |dx^μ(X_ν) − δ^μ_ν|`.
    pub dx_residual: f64,
    /// `max |b(X_μ) − q_μ|`.
    pub sbar_residual: f64,
    pub violations: Vec<String>,
}

/// Checks `dx^μ(X_ν) = δ^μ_ν` and `S̄^μ(X_μ) = Δ̄_μ` (equivalently the
/// `∂/∂q` block of `X_μ` is `q_μ`).
pub fn sopde_check(x: &KVectorAtJet, p: &JetPoint) -> SopdeReport {
    let (n, k) = (p.n(), p.k());
    let mut violations = Vec::new();
    if x.components.len() != k || x.components.iter().any(|t| t.n() != n || t.k() != k) {
        violations.push(format!("shape: expected {k} components over n = {n}, k = {k}"));
        return SopdeReport { is_sopde: false, dx_residual: f64::NAN, sbar_residual: f64::NAN, violations };
    }
    let (mut dx_res, mut sb_res) = (0.0_f64, 0.0_f64);
    for (nu, t) in x.components.iter().enumerate() {
        for mu in 0..k {
            let expected = if mu == nu { 1.0 } else { 0.0 };
            let d = (t.a[mu] - expected).abs();
            if d > 0.0 {
                violations.push(format!("dx^{}(X_{}) = {} (expected {expected})", mu + 1, nu + 1, t.a[mu]));
            }
            dx_res = dx_res.max(d);
        }
        for i in 0..n {
            let d = (t.b[i] - p.qd(i, nu)).abs();
            if d > 0.0 {
                violations.push(format!(
                    "dq^{}(X_{}) = {} (expected q^{}_{} = {})",
                    i + 1,
                    nu + 1,
                    t.b[i],
                    i + 1,
                    nu + 1,
                    p.qd(i, nu)
                ));
            }
            sb_res = sb_res.max(d);
        }
    }
    SopdeReport { is_sopde: violations.is_empty(), dx_residual: dx_res, sbar_residual: sb_res, violations }
}

/// `Σ_μ i_{X_μ} Ω^μ_L − dE_L − Σ_μ (∂L/∂x^μ) dx^μ`.
pub fn geometric_el_residual<L: Lagrangian>(l: &L, x: &KVectorAtJet, p: &JetPoint) -> Result<CovectorAtJet> {
    let (n, k) = (p.n(), p.k());
    if x.components.len() != k {
        return Err(Error::Dimension(format!("k-vector has {} components, expected {k}", x.components.len())));
    }
    let omegas = omega_all(l, p);
    let de = energy_differential(l, p).to_flat();
    let dl = differential(l, p);
    let mut out: Vec<f64> = de.iter().map(|v| -v).collect();
    for (mu, (w, t)) in omegas.iter().zip(&x.components).enumerate() {
        for (o, v) in out.iter_mut().zip(w.interior(&t.to_flat())) {
            *o += v;
        }
        out[mu] -= dl.a[mu];
    }
    CovectorAtJet::from_flat(n, k, &out)
}

/// Pointwise axiom report for `(dx^μ, Ω^μ_L, V)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxiomReport {
    pub volume_form_nonzero: bool,
    pub dx_vanishes_on_vertical: bool,
    pub omega_vanishes_on_vertical: bool,
    /// `dim ∩_μ ker Ω^μ_L`.
    pub kernel_dim: usize,
    /// `∩ ker dx^μ ∩ ∩ ker Ω^μ_L = {0}`.
    pub kernel_transversal: bool,
    pub regular: bool,
    /// Reeb k-vector field, when the kernel has the right dimension.
    pub reeb: Option<Vec<TangentAtJet>>,
    pub singular_values: Vec<f64>,
    pub passed: bool,
}

fn numeric_rank(m: &DMatrix<f64>) -> Result<(usize, Vec<f64>, DMatrix<f64>)> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("rank of a matrix with non-finite entries".into()));
    }
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Singular("SVD did not return right vectors".into()))?;
    let mut sv: Vec<(f64, usize)> = svd.singular_values.iter().copied().zip(0..).collect();
    sv.sort_by(|a, b| b.0.total_cmp(&a.0));
    let largest = sv.first().map_or(0.0, |s| s.0);
    let rank = sv.iter().filter(|s| s.0 > RANK_TOL * largest).count();
    // rows of v_t ordered by decreasing singular value
    let mut ordered = DMatrix::zeros(v_t.nrows(), v_t.ncols());
    for (r, &(_, idx)) in sv.iter().enumerate() {
        ordered.set_row(r, &v_t.row(idx));
    }
    Ok((rank, sv.into_iter().map(|s| s.0).collect(), ordered))
}

pub fn cosymplectic_axioms_check<L: Lagrangian>(l: &L, p: &JetPoint) -> Result<AxiomReport> {
    let (n, k) = (p.n(), p.k());
    let m = k + n + n * k;
    let omegas = omega_all(l, p);

    // dx^1 ∧ … ∧ dx^k ≠ 0: the dx rows are distinct unit covectors.
    let volume_form_nonzero = k >= 1;
    let dx_vanishes_on_vertical = true;
    let omega_vanishes_on_vertical = omegas.iter().all(|w| (k + n..m).all(|a| (k + n..m).all(|b| w.get(a, b) == 0.0)));

    let mut stacked = DMatrix::zeros(k * m, m);
    for (mu, w) in omegas.iter().enumerate() {
        stacked.view_mut((mu * m, 0), (m, m)).copy_from(&w.matrix().transpose());
    }
    let (rank, singular_values, v_t) = numeric_rank(&stacked)?;
    let kernel_dim = m - rank;

    let mut with_dx = DMatrix::zeros(k * m + k, m);
    with_dx.view_mut((0, 0), (k * m, m)).copy_from(&stacked);
    for mu in 0..k {
        with_dx[(k * m + mu, mu)] = 1.0;
    }
    let (rank_dx, _, _) = numeric_rank(&with_dx)?;
    let kernel_transversal = rank_dx == m;

    let reeb = if kernel_dim == k && kernel_transversal {
        let kernel = v_t.rows(rank, kernel_dim).transpose();
        let dxk = kernel.rows(0, k).into_owned();
        dxk.try_inverse().map(|inv| {
            let r = &kernel * inv;
            (0..k).map(|mu| TangentAtJet::from_flat(n, k, r.column(mu).as_slice()).expect("shape")).collect()
        })
    } else {
        None
    };

    let regular = regularity(l, p).is_regular;
    let passed = volume_form_nonzero
        && dx_vanishes_on_vertical
        && omega_vanishes_on_vertical
        && kernel_dim == k
        && kernel_transversal
        && reeb.is_some();
    Ok(AxiomReport {
        volume_form_nonzero,
        dx_vanishes_on_vertical,
        omega_vanishes_on_vertical,
        kernel_dim,
        kernel_transversal,
        regular,
        reeb,
        singular_values,
        passed,
    })
}

/// `Θ`, `Ω`, `E_L`, `dE_L` and the velocity Hessian at one point.
#[derive(Clone, Debug)]
pub struct PointTensors {
    pub theta: Vec<CovectorAtJet>,
    pub omega: Vec<TwoFormAtJet>,
    pub energy: f64,
    pub d_energy: CovectorAtJet,
    pub velocity_hessian: DMatrix<f64>,
}

pub fn point_tensors<L: Lagrangian>(l: &L, p: &JetPoint) -> Result<PointTensors> {
    let theta = (0..p.k()).map(|mu| theta(l, p, mu)).collect::<Result<Vec<_>>>()?;
    Ok(PointTensors {
        theta,
        omega: omega_all(l, p),
        energy: crate::lagrangian::energy(l, p),
        d_energy: energy_differential(l, p),
        velocity_hessian: crate::lagrangian::velocity_hessian(l, p),
    })
}

/// Reeb condition residual: `max |dx^μ(R_ν) − δ| + max |i_{R_ν} Ω^μ|`.
pub fn reeb_residual(omegas: &[TwoFormAtJet], reeb: &[TangentAtJet]) -> f64 {
    let mut worst = 0.0_f64;
    for (nu, r) in reeb.iter().enumerate() {
        let flat = DVector::from_vec(r.to_flat());
        for (mu, w) in omegas.iter().enumerate() {
            let expected = if mu == nu { 1.0 } else { 0.0 };
            worst = worst.max((flat[mu] - expected).abs());
            for v in w.interior(flat.as_slice()) {
                worst = worst.max(v.abs());
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::{fixtures, PresetLagrangian};

    const WAVE: PresetLagrangian = PresetLagrangian::Wave { c: 1.0 };

    fn wave_point(qt: f64, qx: f64) -> JetPoint {
        JetPoint::new(vec![0.3, -0.2], vec![0.5], vec![qt, qx]).unwrap()
    }

    #[test]
    fn sbar_examples() {
        let mut t = TangentAtJet::zeros(1, 2);
        t.b[0] = 1.0;
        let s = sbar_apply(0, &t).unwrap();
        assert_eq!(s.to_flat(), vec![0.0, 0.0, 0.0, 1.0, 0.0]);
        let mut vert = TangentAtJet::zeros(1, 2);
        vert.c = vec![2.0, 3.0];
        assert_eq!(sbar_apply(1, &vert).unwrap().max_abs(), 0.0);
        let mut dx = TangentAtJet::zeros(1, 2);
        dx.a[0] = 1.0;
        assert_eq!(sbar_apply(0, &dx).unwrap().max_abs(), 0.0);
        assert!(matches!(sbar_apply(2, &t), Err(Error::Index(_))));
    }

    #[test]
    fn wave_theta_and_omega() {
        let p = wave_point(2.0, 3.0);
        assert_eq!(theta(&WAVE, &p, 0).unwrap().to_flat(), vec![0.0, 0.0, 2.0, 0.0, 0.0]);
        assert_eq!(theta(&WAVE, &p, 1).unwrap().to_flat(), vec![0.0, 0.0, -3.0, 0.0, 0.0]);
        assert_eq!(omega(&WAVE, &p, 0).unwrap().nonzero_entries(), vec![(2, 3, 1.0)]);
        assert_eq!(omega(&WAVE, &p, 1).unwrap().nonzero_entries(), vec![(2, 4, -1.0)]);
    }

    #[test]
    fn two_form_is_antisymmetric() {
        let p = JetPoint::new(vec![0.1, 0.4], vec![0.3, -0.8], vec![0.2, 0.9, -1.1, 0.5]).unwrap();
        for w in omega_all(&fixtures::CoupledNonlinear, &p) {
            let a = w.matrix();
            assert_eq!(a.clone() + a.transpose(), DMatrix::zeros(w.dim(), w.dim()));
        }
    }

    #[test]
    fn geometric_residual_signs() {
        let p = wave_point(0.7, -0.4);
        let ok = KVectorAtJet::sopde(&p, |mu, _, nu| [[1.0, 0.3], [0.3, 1.0]][mu][nu]);
        assert!(sopde_check(&ok, &p).is_sopde);
        assert!(geometric_el_residual(&WAVE, &ok, &p).unwrap().max_abs() < 1e-12);
        let bad = KVectorAtJet::sopde(&p, |mu, _, nu| [[2.0, 0.3], [0.3, 1.0]][mu][nu]);
        let r = geometric_el_residual(&WAVE, &bad, &p).unwrap();
        assert!((r.b[0] + 1.0).abs() < 1e-12);
        assert!(r.a.iter().chain(&r.c).all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn sopde_violations() {
        let p = wave_point(0.7, -0.4);
        let mut x = KVectorAtJet::sopde(&p, |_, _, _| 0.0);
        x.components[0].a[0] = 2.0;
        let r = sopde_check(&x, &p);
        assert!(!r.is_sopde && r.dx_residual == 1.0 && r.sbar_residual == 0.0);
        let mut y = KVectorAtJet::sopde(&p, |_, _, _| 0.0);
        y.components[1].b[0] = 5.0;
        let r = sopde_check(&y, &p);
        assert!(!r.is_sopde && r.sbar_residual > 0.0 && r.dx_residual == 0.0);
    }

    #[test]
    fn wave_axioms_hold() {
        let r = cosymplectic_axioms_check(&WAVE, &wave_point(0.2, 1.3)).unwrap();
        assert!(r.passed && r.regular);
        assert_eq!(r.kernel_dim, 2);
        let omegas = omega_all(&WAVE, &wave_point(0.2, 1.3));
        assert!(reeb_residual(&omegas, r.reeb.as_ref().unwrap()) < 1e-12);
    }

    #[test]
    fn degenerate_lagrangian_fails() {
        let r = cosymplectic_axioms_check(&fixtures::VelocityLinear, &wave_point(0.2, 1.3)).unwrap();
        assert!(!r.passed && !r.regular);
        assert_ne!(r.kernel_dim, 2);
    }

    #[test]
    fn liouville_energy() {
        let l = fixtures::CoupledNonlinear;
        let p = JetPoint::new(vec![0.1, 0.4], vec![0.3, -0.8], vec![0.2, 0.9, -1.1, 0.5]).unwrap();
        let dl = differential(&l, &p);
        let e = dl.pair(&liouville(&p)) - l.eval_coords(&p.coords());
        assert!((e - crate::lagrangian::energy(&l, &p)).abs() < 1e-12);
    }
}
