//! Coordinates on `ℝ^k × T¹_kQ` and `ℝ^k × T¹_k(TQ)`, the canonical
//! involution between the two orderings of the doubled tangent data, and
//! jets of analytic sections.
//!
//! Index convention: first-jet entries are stored field-major, so
//! `qd[i * k + mu]` is `q^i_mu`. Everything else (reports, CSV columns,
//! doubled systems) follows the same order.

use std::collections::BTreeMap;

use crate::ad::{Dual, Scalar};
use crate::error::{Error, Result};

/// A point `(x^μ, q^i, q^i_μ)` of `ℝ^k × T¹_kQ`.
#[derive(Clone, Debug, PartialEq)]
pub struct JetPoint {
    pub x: Vec<f64>,
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
}

impl JetPoint {
    pub fn new(x: Vec<f64>, q: Vec<f64>, qd: Vec<f64>) -> Result<Self> {
        if x.is_empty() || q.is_empty() || qd.len() != x.len() * q.len() {
            return Err(Error::Dimension(format!(
                "jet point needs k >= 1, n >= 1 and n*k first-jet entries (k={}, n={}, got {})",
                x.len(),
                q.len(),
                qd.len()
            )));
        }
        Ok(JetPoint { x, q, qd })
    }

    pub fn zeros(n: usize, k: usize) -> Self {
        JetPoint { x: vec![0.0; k], q: vec![0.0; n], qd: vec![0.0; n * k] }
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn k(&self) -> usize {
        self.x.len()
    }

    /// `q^i_μ`.
    pub fn qd(&self, i: usize, mu: usize) -> f64 {
        self.qd[i * self.k() + mu]
    }

    /// Flat coordinates `(x, q, qd)` of length `k + n + nk`.
    pub fn coords(&self) -> Vec<f64> {
        let mut u = Vec::with_capacity(self.x.len() + self.q.len() + self.qd.len());
        u.extend_from_slice(&self.x);
        u.extend_from_slice(&self.q);
        u.extend_from_slice(&self.qd);
        u
    }

    pub fn from_coords(n: usize, k: usize, u: &[f64]) -> Result<Self> {
        if u.len() != k + n + n * k {
            return Err(Error::Dimension(format!(
                "expected {} coordinates for n={n}, k={k}, got {}",
                k + n + n * k,
                u.len()
            )));
        }
        JetPoint::new(u[..k].to_vec(), u[k..k + n].to_vec(), u[k + n..].to_vec())
    }

    /// Embeds the point into `ℝ^k × T¹_k(TQ)` with the given variation.
    pub fn with_variation(&self, v: Vec<f64>, vd: Vec<f64>) -> Result<ProlongedJetPoint> {
        ProlongedJetPoint::new(self.x.clone(), self.q.clone(), v, self.qd.clone(), vd)
    }
}

/// A point `(x^μ, q^i, v^i, q^i_μ, v^i_μ)` of `ℝ^k × T¹_k(TQ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProlongedJetPoint {
    pub x: Vec<f64>,
    pub q: Vec<f64>,
    pub v: Vec<f64>,
    pub qd: Vec<f64>,
    pub vd: Vec<f64>,
}

impl ProlongedJetPoint {
    pub fn new(x: Vec<f64>, q: Vec<f64>, v: Vec<f64>, qd: Vec<f64>, vd: Vec<f64>) -> Result<Self> {
        let (k, n) = (x.len(), q.len());
        if k == 0 || n == 0 || v.len() != n || qd.len() != n * k || vd.len() != n * k {
            return Err(Error::Dimension(format!(
                "prolonged jet point shape mismatch (k={k}, n={n}, |v|={}, |qd|={}, |vd|={})",
                v.len(),
                qd.len(),
                vd.len()
            )));
        }
        Ok(ProlongedJetPoint { x, q, v, qd, vd })
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn k(&self) -> usize {
        self.x.len()
    }

    /// Drops the variation.
    pub fn project(&self) -> JetPoint {
        JetPoint { x: self.x.clone(), q: self.q.clone(), qd: self.qd.clone() }
    }

    /// The same point read as a jet of the doubled field `(q^1..q^n, v^1..v^n)`.
    pub fn doubled(&self) -> JetPoint {
        let mut q = self.q.clone();
        q.extend_from_slice(&self.v);
        let mut qd = self.qd.clone();
        qd.extend_from_slice(&self.vd);
        JetPoint { x: self.x.clone(), q, qd }
    }

    pub fn from_doubled(p: &JetPoint) -> Result<Self> {
        if !p.n().is_multiple_of(2) {
            return Err(Error::Dimension("doubled jet needs an even field count".into()));
        }
        let n = p.n() / 2;
        let k = p.k();
        ProlongedJetPoint::new(
            p.x.clone(),
            p.q[..n].to_vec(),
            p.q[n..].to_vec(),
            p.qd[..n * k].to_vec(),
            p.qd[n * k..].to_vec(),
        )
    }
}

/// Second derivatives `q^i_{μν}`, stored once per unordered pair `(μ, ν)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricSecond {
    n: usize,
    k: usize,
    upper: Vec<f64>,
}

impl SymmetricSecond {
    pub fn zeros(n: usize, k: usize) -> Self {
        SymmetricSecond { n, k, upper: vec![0.0; n * k * (k + 1) / 2] }
    }

    /// Fills the upper triangle from `f(i, mu, nu)` with `mu <= nu`.
    pub fn from_fn(n: usize, k: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut s = SymmetricSecond::zeros(n, k);
        for i in 0..n {
            for mu in 0..k {
                for nu in mu..k {
                    s.set(i, mu, nu, f(i, mu, nu));
                }
            }
        }
        s
    }

    fn slot(&self, i: usize, mu: usize, nu: usize) -> usize {
        let (a, b) = if mu <= nu { (mu, nu) } else { (nu, mu) };
        // row-major upper triangle
        let offset = a * self.k - a * (a + 1) / 2 + b;
        i * (self.k * (self.k + 1) / 2) + offset
    }

    pub fn get(&self, i: usize, mu: usize, nu: usize) -> f64 {
        self.upper[self.slot(i, mu, nu)]
    }

    pub fn set(&mut self, i: usize, mu: usize, nu: usize, value: f64) {
        let s = self.slot(i, mu, nu);
        self.upper[s] = value;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Concatenates field blocks: `self` then `other`.
    pub fn stack(&self, other: &SymmetricSecond) -> SymmetricSecond {
        assert_eq!(self.k, other.k);
        let mut upper = self.upper.clone();
        upper.extend_from_slice(&other.upper);
        SymmetricSecond { n: self.n + other.n, k: self.k, upper }
    }

    pub fn split(&self, n_first: usize) -> (SymmetricSecond, SymmetricSecond) {
        let per = self.k * (self.k + 1) / 2;
        let (a, b) = self.upper.split_at(n_first * per);
        (
            SymmetricSecond { n: n_first, k: self.k, upper: a.to_vec() },
            SymmetricSecond { n: self.n - n_first, k: self.k, upper: b.to_vec() },
        )
    }
}

/// First jet plus symmetric second derivatives along a section.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondJet {
    pub jet: JetPoint,
    pub qdd: SymmetricSecond,
}

impl SecondJet {
    pub fn new(jet: JetPoint, qdd: SymmetricSecond) -> Result<Self> {
        if qdd.n() != jet.n() || qdd.k() != jet.k() {
            return Err(Error::Dimension("second-jet block does not match the jet point".into()));
        }
        Ok(SecondJet { jet, qdd })
    }

    /// `d(x, q, qd)/dx^μ` along the section, in the flat coordinate order.
    pub fn total_direction(&self, mu: usize) -> Vec<f64> {
        let (n, k) = (self.jet.n(), self.jet.k());
        let mut d = vec![0.0; k + n + n * k];
        d[mu] = 1.0;
        for i in 0..n {
            d[k + i] = self.jet.qd(i, mu);
            for nu in 0..k {
                d[k + n + i * k + nu] = self.qdd.get(i, nu, mu);
            }
        }
        d
    }
}

/// Second jet of a section of the doubled bundle: background `q` and
/// variation `v`, each with first and second derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct ProlongedSecondJet {
    pub jet: ProlongedJetPoint,
    pub qdd: SymmetricSecond,
    pub vdd: SymmetricSecond,
}

impl ProlongedSecondJet {
    pub fn new(jet: ProlongedJetPoint, qdd: SymmetricSecond, vdd: SymmetricSecond) -> Result<Self> {
        let (n, k) = (jet.n(), jet.k());
        if qdd.n() != n || vdd.n() != n || qdd.k() != k || vdd.k() != k {
            return Err(Error::Dimension("prolonged second jet block mismatch".into()));
        }
        Ok(ProlongedSecondJet { jet, qdd, vdd })
    }

    pub fn from_parts(q: &SecondJet, v: &SecondJet) -> Result<Self> {
        if q.jet.x != v.jet.x {
            return Err(Error::Dimension("background and variation jets at different base points".into()));
        }
        let jet = q.jet.with_variation(v.jet.q.clone(), v.jet.qd.clone())?;
        ProlongedSecondJet::new(jet, q.qdd.clone(), v.qdd.clone())
    }

    pub fn background(&self) -> SecondJet {
        SecondJet { jet: self.jet.project(), qdd: self.qdd.clone() }
    }

    /// Read as a second jet of the doubled field `(q, v)`.
    pub fn doubled(&self) -> SecondJet {
        SecondJet { jet: self.jet.doubled(), qdd: self.qdd.stack(&self.vdd) }
    }
}

/// Coordinates `(q^i, v^i; q^i_A, v^i_A)` of a point of `T¹_k(TQ)`: a point
/// `(q, v)` of `TQ` with `k` tangent vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct TkTQ<T> {
    pub q: Vec<T>,
    pub v: Vec<T>,
    pub qd: Vec<T>,
    pub vd: Vec<T>,
}

/// Coordinates `(q^i, q^i_A; v^i, v^i_A)` of a point of `T(T¹_kQ)`: a base
/// point `(q, q_A)` of `T¹_kQ` with one tangent vector `(v, v_A)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TTkQ<T> {
    pub q: Vec<T>,
    pub qd: Vec<T>,
    pub v: Vec<T>,
    pub vd: Vec<T>,
}

/// Canonical involution `κ^k_Q : T¹_k(TQ) → T(T¹_kQ)`. Only the block
/// order changes.
pub fn kappa<T>(p: TkTQ<T>) -> TTkQ<T> {
    TTkQ { q: p.q, qd: p.qd, v: p.v, vd: p.vd }
}

pub fn kappa_inverse<T>(p: TTkQ<T>) -> TkTQ<T> {
    TkTQ { q: p.q, v: p.v, qd: p.qd, vd: p.vd }
}

/// `κ` on a flat tuple `[q (n), v (n), qd (nk), vd (nk)]`, returning
/// `[q, qd, v, vd]`.
pub fn kappa_flat<T: Copy>(n: usize, k: usize, t: &[T]) -> Vec<T> {
    assert_eq!(t.len(), 2 * n + 2 * n * k, "tuple length");
    let (q, rest) = t.split_at(n);
    let (v, rest) = rest.split_at(n);
    let (qd, vd) = rest.split_at(n * k);
    [q, qd, v, vd].concat()
}

/// Inverse of [`kappa_flat`]: `[q, qd, v, vd] -> [q, v, qd, vd]`.
pub fn kappa_flat_inverse<T: Copy>(n: usize, k: usize, t: &[T]) -> Vec<T> {
    assert_eq!(t.len(), 2 * n + 2 * n * k, "tuple length");
    let (q, rest) = t.split_at(n);
    let (qd, rest) = rest.split_at(n * k);
    let (v, vd) = rest.split_at(n);
    [q, v, qd, vd].concat()
}

/// A smooth map `ψ: ℝ^k → ℝ^n`, written once against [`Scalar`] so that
/// its jets come from automatic differentiation.
pub trait AnalyticSection {
    fn base_dim(&self) -> usize;
    fn fields(&self) -> usize;
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S>;
}

/// `ψ^(1)(x) = (x, ψ(x), ∂ψ/∂x)`.
pub fn jet_of_section<P: AnalyticSection>(psi: &P, x: &[f64]) -> JetPoint {
    let (k, n) = (psi.base_dim(), psi.fields());
    assert_eq!(x.len(), k, "base point dimension");
    let q = psi.eval(x);
    let mut qd = vec![0.0; n * k];
    for mu in 0..k {
        let u: Vec<Dual<f64>> =
            x.iter().enumerate().map(|(a, &v)| Dual::new(v, if a == mu { 1.0 } else { 0.0 })).collect();
        for (i, c) in psi.eval(&u).into_iter().enumerate() {
            qd[i * k + mu] = c.eps;
        }
    }
    JetPoint { x: x.to_vec(), q, qd }
}

/// First jet plus the (symmetric) Hessian of every component.
pub fn second_jet_of_section<P: AnalyticSection>(psi: &P, x: &[f64]) -> SecondJet {
    let (k, n) = (psi.base_dim(), psi.fields());
    let jet = jet_of_section(psi, x);
    let mut qdd = SymmetricSecond::zeros(n, k);
    for mu in 0..k {
        for nu in mu..k {
            let u: Vec<Dual<Dual<f64>>> = x
                .iter()
                .enumerate()
                .map(|(a, &v)| {
                    Dual::new(Dual::new(v, if a == nu { 1.0 } else { 0.0 }), Dual::cst(if a == mu { 1.0 } else { 0.0 }))
                })
                .collect();
            for (i, c) in psi.eval(&u).into_iter().enumerate() {
                qdd.set(i, mu, nu, c.eps.eps);
            }
        }
    }
    SecondJet { jet, qdd }
}

/// Parses `name=value` pairs (`x1`, `q1`, `v1`, `q1_2`, `v1_2`, 1-based) into
/// a prolonged point. Unspecified entries are zero.
pub fn parse_point(text: &str, n: usize, k: usize) -> Result<ProlongedJetPoint> {
    let mut p = ProlongedJetPoint {
        x: vec![0.0; k],
        q: vec![0.0; n],
        v: vec![0.0; n],
        qd: vec![0.0; n * k],
        vd: vec![0.0; n * k],
    };
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, value) =
            item.split_once('=').ok_or_else(|| Error::Parse(format!("expected name=value, got `{item}`")))?;
        let name = name.trim();
        let value: f64 = value.trim().parse().map_err(|_| Error::Parse(format!("bad number in `{item}`")))?;
        let slot = point_slot(name, n, k)?;
        match slot {
            Slot::X(mu) => p.x[mu] = value,
            Slot::Q(i) => p.q[i] = value,
            Slot::V(i) => p.v[i] = value,
            Slot::Qd(i, mu) => p.qd[i * k + mu] = value,
            Slot::Vd(i, mu) => p.vd[i * k + mu] = value,
        }
    }
    Ok(p)
}

enum Slot {
    X(usize),
    Q(usize),
    V(usize),
    Qd(usize, usize),
    Vd(usize, usize),
}

fn point_slot(name: &str, n: usize, k: usize) -> Result<Slot> {
    let bad = || Error::Parse(format!("unknown coordinate `{name}` for n={n}, k={k}"));
    let index = |s: &str, max: usize| -> Result<usize> {
        let i: usize = s.parse().map_err(|_| bad())?;
        if i == 0 || i > max {
            return Err(bad());
        }
        Ok(i - 1)
    };
    let (head, rest) = name.split_at(1.min(name.len()));
    match head {
        "x" => Ok(Slot::X(index(rest, k)?)),
        "q" | "v" => {
            let slot = match rest.split_once('_') {
                Some((i, mu)) => {
                    let (i, mu) = (index(i, n)?, index(mu, k)?);
                    if head == "q" {
                        Slot::Qd(i, mu)
                    } else {
                        Slot::Vd(i, mu)
                    }
                }
                None => {
                    let i = index(rest, n)?;
                    if head == "q" {
                        Slot::Q(i)
                    } else {
                        Slot::V(i)
                    }
                }
            };
            Ok(slot)
        }
        _ => Err(bad()),
    }
}

/// Named coordinates of a prolonged point, in the textual syntax accepted
/// by [`parse_point`].
pub fn point_map(p: &ProlongedJetPoint) -> BTreeMap<String, f64> {
    let (n, k) = (p.n(), p.k());
    let mut m = BTreeMap::new();
    for mu in 0..k {
        m.insert(format!("x{}", mu + 1), p.x[mu]);
    }
    for i in 0..n {
        m.insert(format!("q{}", i + 1), p.q[i]);
        m.insert(format!("v{}", i + 1), p.v[i]);
        for mu in 0..k {
            m.insert(format!("q{}_{}", i + 1, mu + 1), p.qd[i * k + mu]);
            m.insert(format!("v{}_{}", i + 1, mu + 1), p.vd[i * k + mu]);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Travelling;
    impl AnalyticSection for Travelling {
        fn base_dim(&self) -> usize {
            2
        }
        fn fields(&self) -> usize {
            1
        }
        fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
            vec![(x[1] - x[0]).sin()]
        }
    }

    struct Bilinear;
    impl AnalyticSection for Bilinear {
        fn base_dim(&self) -> usize {
            2
        }
        fn fields(&self) -> usize {
            1
        }
        fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
            vec![x[0] * x[1]]
        }
    }

    struct Affine;
    impl AnalyticSection for Affine {
        fn base_dim(&self) -> usize {
            2
        }
        fn fields(&self) -> usize {
            2
        }
        fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
            vec![x[0] * 2.0 - x[1] * 3.0 + 1.0, x[0] * 0.5 + x[1] * 7.0]
        }
    }

    struct Constant;
    impl AnalyticSection for Constant {
        fn base_dim(&self) -> usize {
            2
        }
        fn fields(&self) -> usize {
            1
        }
        fn eval<S: Scalar>(&self, _x: &[S]) -> Vec<S> {
            vec![S::cst(4.5)]
        }
    }

    struct Quadratic;
    impl AnalyticSection for Quadratic {
        fn base_dim(&self) -> usize {
            2
        }
        fn fields(&self) -> usize {
            1
        }
        fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
            vec![x[0] * x[0] * 1.5 - x[0] * x[1] * 2.0 + x[1] * x[1] * 0.25 + x[1]]
        }
    }

    #[test]
    fn kappa_swaps_middle_blocks() {
        let out = kappa_flat(1, 1, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(out, vec![1.0, 3.0, 2.0, 4.0]);
        assert_eq!(kappa_flat(1, 1, &out), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn kappa_preserves_blocks_for_larger_shapes() {
        let t: Vec<f64> = (0..12).map(|v| v as f64 * 1.5 - 3.0).collect();
        let out = kappa_flat(2, 2, &t);
        assert_eq!(&out[..2], &t[..2]);
        assert_eq!(&out[2..6], &t[4..8]);
        assert_eq!(&out[6..8], &t[2..4]);
        assert_eq!(&out[8..], &t[8..]);
        let mut a = t.clone();
        let mut b = out.clone();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a, b);
        assert_eq!(kappa_flat_inverse(2, 2, &out), t);
        let structured = kappa(TkTQ { q: vec![1], v: vec![2], qd: vec![3], vd: vec![4] });
        assert_eq!(structured, TTkQ { q: vec![1], qd: vec![3], v: vec![2], vd: vec![4] });
        assert_eq!(kappa_inverse(structured), TkTQ { q: vec![1], v: vec![2], qd: vec![3], vd: vec![4] });
    }

    #[test]
    fn travelling_wave_jet() {
        let j = jet_of_section(&Travelling, &[0.0, 0.0]);
        assert_eq!(j.q, vec![0.0]);
        assert_eq!(j.qd, vec![-1.0, 1.0]);
        let j2 = second_jet_of_section(&Travelling, &[0.0, 0.0]);
        for (mu, nu) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            assert_eq!(j2.qdd.get(0, mu, nu).abs(), 0.0);
        }
    }

    #[test]
    fn constant_and_affine_sections() {
        assert_eq!(jet_of_section(&Constant, &[0.3, -2.0]).qd, vec![0.0, 0.0]);
        for x in [[0.0, 0.0], [1.3, -0.2], [-5.0, 8.0]] {
            let j = jet_of_section(&Affine, &x);
            assert_eq!(j.qd, vec![2.0, -3.0, 0.5, 7.0]);
        }
    }

    #[test]
    fn bilinear_and_quadratic_second_jets() {
        let j2 = second_jet_of_section(&Bilinear, &[0.4, 0.9]);
        assert_eq!(j2.qdd.get(0, 0, 1), 1.0);
        assert_eq!(j2.qdd.get(0, 1, 0), 1.0);
        assert_eq!(j2.qdd.get(0, 0, 0), 0.0);
        assert_eq!(j2.qdd.get(0, 1, 1), 0.0);
        for x in [[0.0, 0.0], [2.0, -1.0]] {
            let j2 = second_jet_of_section(&Quadratic, &x);
            assert_eq!(j2.qdd.get(0, 0, 0), 3.0);
            assert_eq!(j2.qdd.get(0, 0, 1), -2.0);
            assert_eq!(j2.qdd.get(0, 1, 1), 0.5);
        }
    }

    #[test]
    fn second_jet_slice_matches_first_jet() {
        let x = [0.7, -0.3];
        assert_eq!(second_jet_of_section(&Travelling, &x).jet, jet_of_section(&Travelling, &x));
    }

    #[test]
    fn finite_difference_hessian_is_symmetric() {
        let x = [0.35, 1.1];
        let h = 1e-4;
        let f = |t: f64, s: f64| Travelling.eval(&[t, s])[0];
        let mixed = |a: usize, b: usize| {
            let mut e = [[0.0; 2]; 2];
            e[0][a] = h;
            e[1][b] = h;
            (f(x[0] + e[0][0] + e[1][0], x[1] + e[0][1] + e[1][1])
                - f(x[0] + e[0][0] - e[1][0], x[1] + e[0][1] - e[1][1])
                - f(x[0] - e[0][0] + e[1][0], x[1] - e[0][1] + e[1][1])
                + f(x[0] - e[0][0] - e[1][0], x[1] - e[0][1] - e[1][1]))
                / (4.0 * h * h)
        };
        assert!((mixed(0, 1) - mixed(1, 0)).abs() < 1e-8);
        let j2 = second_jet_of_section(&Travelling, &x);
        assert!((j2.qdd.get(0, 0, 1) - mixed(0, 1)).abs() < 1e-6);
    }

    #[test]
    fn symmetric_storage_mirrors() {
        let mut s = SymmetricSecond::zeros(2, 3);
        s.set(1, 2, 0, 5.0);
        assert_eq!(s.get(1, 0, 2), 5.0);
        assert_eq!(s.get(0, 0, 2), 0.0);
    }

    #[test]
    fn point_syntax() {
        let p = parse_point("x1=0.5, q1=1, v1=5, q1_1=2, q1_2=3, v1_2=-4", 1, 2).unwrap();
        assert_eq!(p.x, vec![0.5, 0.0]);
        assert_eq!(p.q, vec![1.0]);
        assert_eq!(p.v, vec![5.0]);
        assert_eq!(p.qd, vec![2.0, 3.0]);
        assert_eq!(p.vd, vec![0.0, -4.0]);
        assert!(parse_point("q2=1", 1, 2).is_err());
        assert!(parse_point("q1_3=1", 1, 2).is_err());
        assert!(parse_point("w1=1", 1, 2).is_err());
        assert!(parse_point("q1", 1, 2).is_err());
        let round =
            parse_point(&point_map(&p).iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(","), 1, 2)
                .unwrap();
        assert_eq!(round, p);
    }

    #[test]
    fn doubling_round_trip() {
        let p = ProlongedJetPoint::new(
            vec![0.1, 0.2],
            vec![1.0, 2.0],
            vec![3.0, 4.0],
            vec![5.0, 6.0, 7.0, 8.0],
            vec![9.0, 10.0, 11.0, 12.0],
        )
        .unwrap();
        let d = p.doubled();
        assert_eq!(d.q, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(d.qd(2, 1), 10.0);
        assert_eq!(ProlongedJetPoint::from_doubled(&d).unwrap(), p);
    }
}
