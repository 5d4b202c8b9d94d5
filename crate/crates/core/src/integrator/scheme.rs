//! The discrete action and its local pieces.
//!
//! Everything is phrased through one doubled discrete action
//!
//! `Ψ(q, v) = Σ_cells ΔtΔx L̃_F^cell(j_c q, j_c v) + Σ_nodes ΔtΔx F_i(j_n q) v_n`
//!
//! where `j_c` is the cell reconstruction, `j_n` the centered node jet, and
//! the node sum appears only for centered force quadrature (the cell force
//! then keeps `F^μ` alone). The node sum runs over rows `>= 0`; the jet at
//! row 0 reads a ghost row obtained by a backward Taylor step. `Ψ` is linear in `v`: `∂Ψ/∂v_ab` is the discrete
//! forced Euler-Lagrange residual at node `(a, b)` and `∂Ψ/∂q_ab = 0` is the
//! discrete adjoint equation marched by the co-simulation.

use crate::ad::{Dual, Scalar};
use crate::lagrangian::{Force, ForceProlonged, ForceValue, Lagrangian, Prolonged};

use super::grid::{BoundaryCondition, CellRule, ForceQuadrature, GridSpec, SchemeConfig};

/// Cell reconstruction `(q̄, [q_t, q_x] per field)` from corners
/// `(a, b), (a+1, b), (a, b+1), (a+1, b+1)`.
pub fn cell_jet<S: Scalar>(rule: CellRule, corners: [&[S]; 4], dt: f64, dx: f64) -> (Vec<S>, Vec<S>) {
    let n = corners[0].len();
    let [c1, c2, c3, c4] = corners;
    let mut q = Vec::with_capacity(n);
    let mut qd = Vec::with_capacity(2 * n);
    for i in 0..n {
        match rule {
            CellRule::AveragedCorner => {
                q.push((c1[i] + c2[i] + c3[i] + c4[i]) * 0.25);
                qd.push(((c2[i] - c1[i]) + (c4[i] - c3[i])) / (2.0 * dt));
                qd.push(((c3[i] - c1[i]) + (c4[i] - c2[i])) / (2.0 * dx));
            }
            CellRule::ForwardCorner => {
                q.push(c1[i]);
                qd.push((c2[i] - c1[i]) / dt);
                qd.push((c3[i] - c1[i]) / dx);
            }
        }
    }
    (q, qd)
}

/// Base point at which the cell Lagrangian is evaluated.
pub fn cell_point(rule: CellRule, t: f64, x: f64, dt: f64, dx: f64) -> [f64; 2] {
    match rule {
        CellRule::AveragedCorner => [t + 0.5 * dt, x + 0.5 * dx],
        CellRule::ForwardCorner => [t, x],
    }
}

/// `ΔtΔx · L(cell jet)` for the cell whose lower-left corner sits at
/// `(t, x)`.
#[allow(clippy::too_many_arguments)]
pub fn discrete_lagrangian_cell<L: Lagrangian, S: Scalar>(
    l: &L,
    rule: CellRule,
    t: f64,
    x: f64,
    corners: [&[S]; 4],
    dt: f64,
    dx: f64,
) -> S {
    let (q, qd) = cell_jet(rule, corners, dt, dx);
    let p = cell_point(rule, t, x, dt, dx);
    l.eval(&[S::cst(p[0]), S::cst(p[1])], &q, &qd) * (dt * dx)
}

/// The force as seen inside a cell: without `F_i` under centered
/// quadrature.
#[derive(Clone, Copy, Debug)]
pub(crate) struct CellForce<'a, F> {
    pub inner: &'a F,
    pub keep_f: bool,
}

impl<F: Force> Force for CellForce<'_, F> {
    fn fields(&self) -> usize {
        self.inner.fields()
    }
    fn base_dim(&self) -> usize {
        self.inner.base_dim()
    }
    fn eval<S: Scalar>(&self, x: &[S], q: &[S], qd: &[S]) -> ForceValue<S> {
        let mut v = self.inner.eval(x, q, qd);
        if !self.keep_f {
            v.f.iter_mut().for_each(|c| *c = S::zero());
        }
        v
    }
    fn is_linear(&self) -> bool {
        self.inner.is_linear()
    }
    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }
}

/// Read access to nodal values: `(row, column, field) -> value`. Columns
/// may be one past either end and are resolved by the boundary rule; row
/// `-1` is the ghost row below the initial data.
pub(crate) type Access<'a, S> = &'a dyn Fn(isize, isize, usize) -> S;

/// Local pieces of `Ψ` around one node.
pub(crate) struct Local<'a, L, F> {
    pub cell: ForceProlonged<&'a L, CellForce<'a, F>>,
    pub force: &'a F,
    pub grid: GridSpec,
    pub bc: BoundaryCondition,
    pub scheme: SchemeConfig,
    pub n: usize,
}

impl<'a, L: Lagrangian, F: Force> Local<'a, L, F> {
    pub fn new(l: &'a L, force: &'a F, grid: GridSpec, bc: BoundaryCondition, scheme: SchemeConfig) -> Self {
        let keep_f = scheme.force_quadrature == ForceQuadrature::CellAverage;
        Local {
            cell: ForceProlonged { prolonged: Prolonged { base: l }, force: CellForce { inner: force, keep_f } },
            force,
            grid,
            bc,
            scheme,
            n: l.fields(),
        }
    }

    fn node_terms(&self) -> bool {
        self.scheme.force_quadrature == ForceQuadrature::Centered && !self.force.is_zero()
    }

    fn ncols(&self) -> usize {
        self.bc.columns(self.grid.nx)
    }

    fn wrap(&self, b: isize) -> isize {
        if self.bc.is_periodic() {
            b.rem_euclid(self.ncols() as isize)
        } else {
            b
        }
    }

    /// Node force terms sit on rows `>= 0` of the equation columns.
    fn has_node_term(&self, a: isize, b: isize) -> bool {
        a >= 0 && self.bc.unknown_columns(self.grid.nx).contains(&(self.wrap(b) as usize))
    }

    fn cell_value<S: Scalar>(&self, ca: usize, cb: isize, q: Access<S>, v: Access<S>) -> S {
        let (dt, dx) = (self.grid.dt(), self.grid.dx());
        let n = self.n;
        let ca = ca as isize;
        let corner = |acc: Access<S>, r: isize, c: isize| -> Vec<S> { (0..n).map(|i| acc(r, c, i)).collect() };
        let qc = [corner(q, ca, cb), corner(q, ca + 1, cb), corner(q, ca, cb + 1), corner(q, ca + 1, cb + 1)];
        let vc = [corner(v, ca, cb), corner(v, ca + 1, cb), corner(v, ca, cb + 1), corner(v, ca + 1, cb + 1)];
        let rule = self.scheme.cell_rule;
        let (qb, qd) = cell_jet(rule, [&qc[0], &qc[1], &qc[2], &qc[3]], dt, dx);
        let (vb, vd) = cell_jet(rule, [&vc[0], &vc[1], &vc[2], &vc[3]], dt, dx);
        let x = self.grid.x(self.wrap(cb) as usize);
        let p = cell_point(rule, self.grid.t(ca as usize), x, dt, dx);
        let fields = [qb, vb].concat();
        let rates = [qd, vd].concat();
        self.cell.eval(&[S::cst(p[0]), S::cst(p[1])], &fields, &rates) * (dt * dx)
    }

    /// `ΔtΔx Σ_j F_j(j_n q) v_n^j` at node `(a, b)`.
    fn node_value<S: Scalar>(&self, a: isize, b: isize, q: Access<S>, v: Access<S>) -> S {
        let (dt, dx) = (self.grid.dt(), self.grid.dx());
        let n = self.n;
        let qn: Vec<S> = (0..n).map(|i| q(a, b, i)).collect();
        let mut qd = Vec::with_capacity(2 * n);
        for i in 0..n {
            qd.push((q(a + 1, b, i) - q(a - 1, b, i)) / (2.0 * dt));
            qd.push((q(a, b + 1, i) - q(a, b - 1, i)) / (2.0 * dx));
        }
        let x = [S::cst(a as f64 * self.grid.dt()), S::cst(self.grid.x(self.wrap(b) as usize))];
        let fv = self.force.eval(&x, &qn, &qd);
        let mut s = S::zero();
        for (j, fj) in fv.f.into_iter().enumerate() {
            s += fj * v(a, b, j);
        }
        s * (dt * dx)
    }

    fn cells_around<S: Scalar>(&self, a: usize, b: isize, q: Access<S>, v: Access<S>) -> S {
        let mut s = S::zero();
        for (ca, cb) in [(a - 1, b - 1), (a - 1, b), (a, b - 1), (a, b)] {
            s += self.cell_value(ca, cb, q, v);
        }
        s
    }

    /// Every term of `Ψ` that involves `q_ab` or `v_ab`.
    pub fn psi_local<S: Scalar>(&self, a: usize, b: isize, q: Access<S>, v: Access<S>) -> S {
        let mut s = self.cells_around(a, b, q, v);
        if self.node_terms() {
            let ai = a as isize;
            for (na, nb) in [(ai - 1, b), (ai, b - 1), (ai, b), (ai, b + 1), (ai + 1, b)] {
                if self.has_node_term(na, nb) {
                    s += self.node_value(na, nb, q, v);
                }
            }
        }
        s
    }

    /// `∂Ψ/∂v_ab`: the discrete (forced) Euler-Lagrange residual.
    pub fn del_residual<S: Scalar>(&self, a: usize, b: isize, q: Access<S>) -> Vec<S> {
        let bw = self.wrap(b);
        (0..self.n)
            .map(|i| {
                let e = |r: isize, c: isize, j: usize| -> S {
                    if r == a as isize && self.wrap(c) == bw && j == i {
                        S::one()
                    } else {
                        S::zero()
                    }
                };
                let mut s = self.cells_around(a, b, q, &e);
                if self.node_terms() && self.has_node_term(a as isize, b) {
                    s += self.node_value(a as isize, b, q, &e);
                }
                s
            })
            .collect()
    }

    /// `∂Ψ/∂q_ab`: the discrete adjoint residual.
    pub fn adjoint_residual<S: Scalar>(&self, a: usize, b: isize, q: Access<S>, v: Access<S>) -> Vec<S> {
        let bw = self.wrap(b);
        let vv = |r: isize, c: isize, j: usize| Dual::constant(v(r, c, j));
        (0..self.n)
            .map(|i| {
                let qq = |r: isize, c: isize, j: usize| {
                    let seed = if r == a as isize && self.wrap(c) == bw && j == i { S::one() } else { S::zero() };
                    Dual::new(q(r, c, j), seed)
                };
                self.psi_local(a, b, &qq, &vv).eps
            })
            .collect()
    }
}
