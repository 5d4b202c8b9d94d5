use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::ad::{Dual, Scalar};
use crate::error::{Error, Result};
use crate::fieldeq::{adjoint_residual, forced_el_residual};
use crate::jet::{second_jet_of_section, AnalyticSection, ProlongedSecondJet, SecondJet};
use crate::lagrangian::{Force, Lagrangian};

use super::grid::{BoundaryCondition, DiscreteState, GridSpec, SchemeConfig};
use super::scheme::{Access, Local};

/// `max |Q|` beyond which a march is declared unstable.
pub const BLOW_UP: f64 = 1e8;

/// Outcome of a march.
#[derive(Clone, Debug, PartialEq)]
pub struct Run {
    pub state: DiscreteState,
    /// Solver iterations per computed row, starting at row 2.
    pub newton_iters: Vec<usize>,
    pub observed_cfl: f64,
}

/// Discrete variational integrator for `k = 2` field theories.
pub struct Integrator<L, F> {
    l: L,
    f: F,
    grid: GridSpec,
    bc: BoundaryCondition,
    scheme: SchemeConfig,
    linear: bool,
    q_lu: Option<LU<f64, Dyn, Dyn>>,
    v_lu: Option<LU<f64, Dyn, Dyn>>,
}

fn solve(lu: &LU<f64, Dyn, Dyn>, rhs: &DVector<f64>, what: &str) -> Result<DVector<f64>> {
    lu.solve(rhs).ok_or_else(|| Error::Singular(format!("{what} row Jacobian is singular")))
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

/// Solves the affine map `y ↦ r(y)` (exact in `y`) for `r(y) = 0`.
fn affine_solve(n: usize, r: impl Fn(&[f64]) -> Vec<f64>) -> Result<Vec<f64>> {
    let zero = vec![0.0; n];
    let r0 = r(&zero);
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = zero.clone();
        e[j] = 1.0;
        let rj = r(&e);
        for i in 0..n {
            m[(i, j)] = rj[i] - r0[i];
        }
    }
    let rhs = -DVector::from_vec(r0);
    m.lu()
        .solve(&rhs)
        .map(|y| y.as_slice().to_vec())
        .ok_or_else(|| Error::Singular("initial acceleration solve: L is not regular in the time direction".into()))
}

fn with_qtt(j2: &SecondJet, y: &[f64]) -> SecondJet {
    let mut out = j2.clone();
    for (i, &v) in y.iter().enumerate() {
        out.qdd.set(i, 0, 0, v);
    }
    out
}

impl<L: Lagrangian, F: Force> Integrator<L, F> {
    pub fn new(l: L, f: F, grid: GridSpec, bc: BoundaryCondition, scheme: SchemeConfig) -> Result<Self> {
        grid.validate()?;
        if l.base_dim() != 2 {
            return Err(Error::Unsupported(format!(
                "the grid integrator needs k = 2 (t, x); Lagrangian has k = {}",
                l.base_dim()
            )));
        }
        if f.fields() != l.fields() || f.base_dim() != l.base_dim() {
            return Err(Error::Dimension("force shape does not match the Lagrangian".into()));
        }
        if !(scheme.newton.tol > 0.0) || scheme.newton.max_iter == 0 {
            return Err(Error::Config("newton.tol must be positive and newton.max_iter at least 1".into()));
        }
        let linear = l.is_quadratic() && f.is_linear() && !l.depends_on_x();
        let it = Integrator { l, f, grid, bc, scheme, linear, q_lu: None, v_lu: None };
        if it.linear {
            if let Some(c) = it.l.wave_speed() {
                let cfl = c * grid.dt() / grid.dx();
                if cfl > 1.0 {
                    return Err(Error::CflViolation(format!(
                        "c·Δt/Δx = {cfl:.6} exceeds 1 for a wave-type Lagrangian (Δt = {:.6e}, Δx = {:.6e})",
                        grid.dt(),
                        grid.dx()
                    )));
                }
            }
        }
        Ok(it)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn lagrangian(&self) -> &L {
        &self.l
    }

    pub fn force(&self) -> &F {
        &self.f
    }

    /// The row system has a constant Jacobian, factored once and reused.
    pub fn is_linear(&self) -> bool {
        self.linear
    }

    /// `c·Δt/Δx`, with `c = 1` when the Lagrangian reports no wave speed.
    pub fn observed_cfl(&self) -> f64 {
        self.l.wave_speed().unwrap_or(1.0) * self.grid.dt() / self.grid.dx()
    }

    fn local(&self) -> Local<'_, L, F> {
        Local::new(&self.l, &self.f, self.grid, self.bc, self.scheme)
    }

    fn ends<P: AnalyticSection>(&self, section: &P, rows: usize) -> Vec<f64> {
        let BoundaryCondition::Dirichlet { follow_section } = self.bc else {
            return Vec::new();
        };
        let mut out = Vec::with_capacity(rows * 2 * self.l.fields());
        for a in 0..rows {
            let t = if follow_section { self.grid.t(a) } else { 0.0 };
            for x in [self.grid.x_min, self.grid.x_max] {
                out.extend(section.eval(&[t, x]));
            }
        }
        out
    }

    fn check_section<P: AnalyticSection>(&self, p: &P) -> Result<()> {
        if p.base_dim() != 2 || p.fields() != self.l.fields() {
            return Err(Error::Dimension(format!(
                "initial section maps R^{} -> R^{}, expected R^2 -> R^{}",
                p.base_dim(),
                p.fields(),
                self.l.fields()
            )));
        }
        Ok(())
    }

    fn initial_jets<P: AnalyticSection>(&self, init: &P) -> Result<Vec<SecondJet>> {
        let ncols = self.bc.columns(self.grid.nx);
        let n = self.l.fields();
        (0..ncols)
            .map(|b| {
                let j2 = second_jet_of_section(init, &[0.0, self.grid.x(b)]);
                let y = affine_solve(n, |y| forced_el_residual(&self.l, &self.f, &with_qtt(&j2, y)))?;
                Ok(with_qtt(&j2, &y))
            })
            .collect()
    }

    /// Rows at `t = 0`, `Δt` and `−Δt`.
    fn taylor_rows(&self, jets: impl Iterator<Item = (Vec<f64>, Vec<f64>, Vec<f64>)>) -> [Vec<f64>; 3] {
        let dt = self.grid.dt();
        let [mut r0, mut r1, mut rm] = [Vec::new(), Vec::new(), Vec::new()];
        for (q, qt, qtt) in jets {
            for i in 0..q.len() {
                r0.push(q[i]);
                r1.push(q[i] + dt * qt[i] + 0.5 * dt * dt * qtt[i]);
                rm.push(q[i] - dt * qt[i] + 0.5 * dt * dt * qtt[i]);
            }
        }
        [r0, r1, rm]
    }

    fn pin_ends(&self, row: &mut [f64], ends: &[f64], a: usize) {
        if self.bc.is_periodic() {
            return;
        }
        let n = self.l.fields();
        let nx = self.grid.nx;
        row[..n].copy_from_slice(&ends[2 * a * n..2 * a * n + n]);
        row[(nx - 1) * n..nx * n].copy_from_slice(&ends[(2 * a + 1) * n..(2 * a + 2) * n]);
    }

    /// Rows 0 and 1 from the section's `t = 0` data by a Taylor start whose
    /// `q_tt` solves the continuous (forced) field equation.
    pub fn initialize<P: AnalyticSection>(&self, init: &P) -> Result<DiscreteState> {
        self.check_section(init)?;
        let n = self.l.fields();
        let jets = self.initial_jets(init)?;
        let [mut r0, mut r1, q_ghost] = self.taylor_rows(jets.iter().map(|j| {
            let qt = (0..n).map(|i| j.jet.qd(i, 0)).collect();
            let qtt = (0..n).map(|i| j.qdd.get(i, 0, 0)).collect();
            (j.jet.q.clone(), qt, qtt)
        }));
        let q_ends = self.ends(init, self.grid.nt + 1);
        self.pin_ends(&mut r0, &q_ends, 0);
        self.pin_ends(&mut r1, &q_ends, 1);
        r0.extend(r1);
        Ok(DiscreteState { grid: self.grid, bc: self.bc, n, q: r0, v: None, q_ends, v_ends: Vec::new(), q_ghost })
    }

    /// As [`Self::initialize`], adding rows 0 and 1 of the variation from
    /// `init_v`, with `v_tt` solving the continuous adjoint equation.
    pub fn initialize_doubled<P: AnalyticSection, V: AnalyticSection>(
        &self,
        init_q: &P,
        init_v: &V,
    ) -> Result<DiscreteState> {
        self.check_section(init_v)?;
        let mut state = self.initialize(init_q)?;
        let n = self.l.fields();
        let qjets = self.initial_jets(init_q)?;
        let mut vj = Vec::with_capacity(qjets.len());
        for (b, qj) in qjets.iter().enumerate() {
            let v2 = second_jet_of_section(init_v, &[0.0, self.grid.x(b)]);
            let y = affine_solve(n, |y| {
                let pj = ProlongedSecondJet::from_parts(qj, &with_qtt(&v2, y)).expect("matched jets");
                adjoint_residual(&self.l, &self.f, &pj)
            })?;
            let qt = (0..n).map(|i| v2.jet.qd(i, 0)).collect();
            vj.push((v2.jet.q.clone(), qt, y));
        }
        let [mut r0, mut r1, _] = self.taylor_rows(vj.into_iter());
        let v_ends = self.ends(init_v, self.grid.nt + 1);
        self.pin_ends(&mut r0, &v_ends, 0);
        self.pin_ends(&mut r1, &v_ends, 1);
        r0.extend(r1);
        state.v = Some(r0);
        state.v_ends = v_ends;
        Ok(state)
    }

    fn unknowns(&self) -> Vec<usize> {
        self.bc.unknown_columns(self.grid.nx).collect()
    }

    fn resolve(&self, state: &DiscreteState, b: isize) -> usize {
        state.col(b)
    }

    /// `q` values, row `a + 1` taken from `z`.
    fn q_residuals<S: Scalar>(&self, state: &DiscreteState, a: usize, z: &[S], eqs: &[usize]) -> Vec<S> {
        let n = self.l.fields();
        let acc = |r: isize, c: isize, i: usize| -> S {
            if r == a as isize + 1 {
                z[self.resolve(state, c) * n + i]
            } else {
                S::cst(state.q_signed(r, c, i))
            }
        };
        let local = self.local();
        let mut out = Vec::with_capacity(eqs.len() * n);
        for &b in eqs {
            out.extend(local.del_residual(a, b as isize, &acc));
        }
        out
    }

    fn q_jacobian(&self, state: &DiscreteState, a: usize, z: &[f64]) -> DMatrix<f64> {
        let n = self.l.fields();
        let cols = self.unknowns();
        let nu = cols.len() * n;
        let pos = |b: usize| cols.iter().position(|&c| c == b);
        let mut jac = DMatrix::zeros(nu, nu);
        let mut zd: Vec<Dual<f64>> = z.iter().map(|&v| Dual::constant(v)).collect();
        for (cu, &bu) in cols.iter().enumerate() {
            let mut eqs: Vec<usize> = [-1_isize, 0, 1]
                .iter()
                .map(|d| self.resolve(state, bu as isize + d))
                .filter(|b| pos(*b).is_some())
                .collect();
            eqs.dedup();
            for j in 0..n {
                zd[bu * n + j].eps = 1.0;
                let r = self.q_residuals(state, a, &zd, &eqs);
                zd[bu * n + j].eps = 0.0;
                for (e, &be) in eqs.iter().enumerate() {
                    let row = pos(be).expect("filtered");
                    for i in 0..n {
                        jac[(row * n + i, cu * n + j)] = r[e * n + i].eps;
                    }
                }
            }
        }
        jac
    }

    fn blow_up_check(&self, row: &[f64], a: usize, what: &str) -> Result<()> {
        let m = max_norm(row);
        if !(m <= BLOW_UP) {
            return Err(Error::CflViolation(format!(
                "blow-up detected: max |{what}| = {m:e} at time row {a} (t = {:.6}, c·Δt/Δx = {:.6})",
                self.grid.t(a),
                self.observed_cfl()
            )));
        }
        Ok(())
    }

    /// Computes the next `q` row by solving the discrete Euler-Lagrange
    /// equations of the current last row. Returns the solver iteration
    /// count.
    pub fn step(&mut self, state: &mut DiscreteState) -> Result<usize> {
        let rows = state.q_rows();
        if rows < 2 {
            return Err(Error::Config("step needs two populated rows".into()));
        }
        let a = rows - 1;
        let n = self.l.fields();
        let cols = self.unknowns();
        let tol = self.scheme.newton.tol;
        let max_iter = self.scheme.newton.max_iter;
        let cur = state.q_row(a).to_vec();
        let prev = state.q_row(a - 1).to_vec();
        let mut z: Vec<f64> = cur.iter().zip(&prev).map(|(c, p)| 2.0 * c - p).collect();
        let ends = state.q_ends.clone();
        self.pin_ends(&mut z, &ends, a + 1);
        let scatter = |z: &mut [f64], d: &DVector<f64>| {
            for (cu, &b) in cols.iter().enumerate() {
                for i in 0..n {
                    z[b * n + i] -= d[cu * n + i];
                }
            }
        };

        let mut iters = 0;
        let mut r = self.q_residuals(state, a, &z, &cols);
        let mut res = max_norm(&r);
        let mut stalled = false;
        while !(res <= tol) && iters < max_iter && !stalled {
            let rv = DVector::from_vec(r);
            let d = if self.linear {
                if self.q_lu.is_none() {
                    self.q_lu = Some(self.q_jacobian(state, a, &z).lu());
                }
                solve(self.q_lu.as_ref().expect("cached"), &rv, "q")?
            } else {
                solve(&self.q_jacobian(state, a, &z).lu(), &rv, "q")?
            };
            scatter(&mut z, &d);
            iters += 1;
            r = self.q_residuals(state, a, &z, &cols);
            res = max_norm(&r);
            // an update at rounding level cannot make further progress
            let scale = 1.0 + max_norm(&z);
            stalled = max_norm(d.as_slice()) <= 4.0 * f64::EPSILON * scale && res <= 1e3 * tol * scale;
        }
        if !(res <= tol || stalled) {
            return Err(Error::NewtonDivergence { row: a + 1, residual: res, iterations: iters });
        }
        self.blow_up_check(&z, a + 1, "q")?;
        state.q.extend_from_slice(&z);
        Ok(iters)
    }

    fn v_residuals<S: Scalar>(&self, state: &DiscreteState, a: usize, y: &[S], eqs: &[usize]) -> Vec<S> {
        let n = self.l.fields();
        let qa = |r: isize, c: isize, i: usize| -> S { S::cst(state.q_signed(r, c, i)) };
        let va = |r: isize, c: isize, i: usize| -> S {
            let b = self.resolve(state, c);
            if r == a as isize + 1 {
                y[b * n + i]
            } else {
                S::cst(state.v_at(r as usize, b, i))
            }
        };
        let (qa, va): (Access<S>, Access<S>) = (&qa, &va);
        let local = self.local();
        let mut out = Vec::with_capacity(eqs.len() * n);
        for &b in eqs {
            out.extend(local.adjoint_residual(a, b as isize, qa, va));
        }
        out
    }

    fn v_jacobian(&self, state: &DiscreteState, a: usize, y: &[f64]) -> DMatrix<f64> {
        let n = self.l.fields();
        let cols = self.unknowns();
        let nu = cols.len() * n;
        let pos = |b: usize| cols.iter().position(|&c| c == b);
        let mut jac = DMatrix::zeros(nu, nu);
        let mut yd: Vec<Dual<f64>> = y.iter().map(|&v| Dual::constant(v)).collect();
        for (cu, &bu) in cols.iter().enumerate() {
            let mut eqs: Vec<usize> = [-1_isize, 0, 1]
                .iter()
                .map(|d| self.resolve(state, bu as isize + d))
                .filter(|b| pos(*b).is_some())
                .collect();
            eqs.dedup();
            for j in 0..n {
                yd[bu * n + j].eps = 1.0;
                let r = self.v_residuals(state, a, &yd, &eqs);
                yd[bu * n + j].eps = 0.0;
                for (e, &be) in eqs.iter().enumerate() {
                    let row = pos(be).expect("filtered");
                    for i in 0..n {
                        jac[(row * n + i, cu * n + j)] = r[e * n + i].eps;
                    }
                }
            }
        }
        jac
    }

    /// Whether the adjoint equations at row `a` read `q` at row `a + 2`.
    fn v_lookahead(&self) -> usize {
        use super::grid::ForceQuadrature;
        if self.scheme.force_quadrature == ForceQuadrature::Centered && !self.f.is_zero() {
            2
        } else {
            1
        }
    }

    /// Computes the next `v` row from the discrete adjoint equations of the
    /// current last `v` row. These are linear in `v`.
    pub fn step_v(&mut self, state: &mut DiscreteState) -> Result<()> {
        let rows = state.v_rows();
        if rows < 2 {
            return Err(Error::Config("step_v needs two populated v rows".into()));
        }
        let a = rows - 1;
        if state.q_rows() < a + 1 + self.v_lookahead() {
            return Err(Error::Config(format!("step_v at row {a} needs q through row {}", a + self.v_lookahead())));
        }
        let n = self.l.fields();
        let cols = self.unknowns();
        let mut y = vec![0.0; state.columns() * n];
        let ends = state.v_ends.clone();
        self.pin_ends(&mut y, &ends, a + 1);
        let g = DVector::from_vec(self.v_residuals(state, a, &y, &cols));
        let d = if self.linear {
            if self.v_lu.is_none() {
                self.v_lu = Some(self.v_jacobian(state, a, &y).lu());
            }
            solve(self.v_lu.as_ref().expect("cached"), &g, "v")?
        } else {
            solve(&self.v_jacobian(state, a, &y).lu(), &g, "v")?
        };
        for (cu, &b) in cols.iter().enumerate() {
            for i in 0..n {
                y[b * n + i] -= d[cu * n + i];
            }
        }
        self.blow_up_check(&y, a + 1, "v")?;
        state.v.as_mut().expect("doubled state").extend_from_slice(&y);
        Ok(())
    }

    /// Discrete Euler-Lagrange residual at node `(a, b)` of a populated
    /// state.
    pub fn del_residual(&self, state: &DiscreteState, a: usize, b: usize) -> Result<Vec<f64>> {
        self.check_node(state, a, b, state.q_rows(), 1)?;
        let acc = |r: isize, c: isize, i: usize| state.q_signed(r, c, i);
        Ok(self.local().del_residual(a, b as isize, &acc))
    }

    /// Discrete adjoint residual at node `(a, b)`.
    pub fn discrete_adjoint_residual(&self, state: &DiscreteState, a: usize, b: usize) -> Result<Vec<f64>> {
        self.check_node(state, a, b, state.v_rows().min(state.q_rows() + 1 - self.v_lookahead()), 1)?;
        let qa = |r: isize, c: isize, i: usize| state.q_signed(r, c, i);
        let va = |r: isize, c: isize, i: usize| state.v_at(r as usize, state.col(c), i);
        Ok(self.local().adjoint_residual(a, b as isize, &qa, &va))
    }

    fn check_node(&self, state: &DiscreteState, a: usize, b: usize, rows: usize, ahead: usize) -> Result<()> {
        if a == 0 || a + ahead >= rows {
            return Err(Error::Index(format!("time row {a} is not interior to the {rows} populated rows")));
        }
        if !self.bc.unknown_columns(self.grid.nx).contains(&b) {
            return Err(Error::Index(format!("column {b} carries no equation")));
        }
        if state.grid != self.grid || state.bc != self.bc {
            return Err(Error::Config("state was built for a different grid".into()));
        }
        Ok(())
    }

    /// Marches `q` over the whole grid.
    pub fn simulate<P: AnalyticSection>(&mut self, init: &P) -> Result<Run> {
        let mut state = self.initialize(init)?;
        let mut newton_iters = Vec::with_capacity(self.grid.nt);
        while state.q_rows() < self.grid.nt {
            newton_iters.push(self.step(&mut state)?);
        }
        Ok(Run { state, newton_iters, observed_cfl: self.observed_cfl() })
    }

    /// Marches the doubled `(q, v)` system. `q` is produced by the same
    /// [`Self::step`] as [`Self::simulate`] and never reads `v`.
    pub fn cosimulate<P: AnalyticSection, V: AnalyticSection>(&mut self, init_q: &P, init_v: &V) -> Result<Run> {
        let mut state = self.initialize_doubled(init_q, init_v)?;
        let nt = self.grid.nt;
        let mut newton_iters = Vec::with_capacity(nt);
        while state.v_rows() < nt {
            let need = state.v_rows() - 1 + self.v_lookahead();
            while state.q_rows() <= need {
                let it = self.step(&mut state)?;
                if state.q_rows() <= nt {
                    newton_iters.push(it);
                }
            }
            self.step_v(&mut state)?;
        }
        let keep = nt * state.columns() * state.n;
        state.q.truncate(keep);
        Ok(Run { state, newton_iters, observed_cfl: self.observed_cfl() })
    }
}
