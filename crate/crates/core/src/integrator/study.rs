use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::{AnalyticSection, JetPoint};
use crate::lagrangian::{force_prolong, time_energy_density, Force, Lagrangian};

use super::grid::{BoundaryCondition, DiscreteState, GridSpec, SchemeConfig};
use super::march::Integrator;

/// Quadrature weight of column `b` (trapezoid at Dirichlet ends).
fn weight(state: &DiscreteState, b: usize) -> f64 {
    let dx = state.grid.dx();
    if !state.bc.is_periodic() && (b == 0 || b + 1 == state.columns()) {
        0.5 * dx
    } else {
        dx
    }
}

fn l2_rows(state: &DiscreteState, rows: usize, value: impl Fn(usize, usize, usize) -> f64) -> Vec<f64> {
    (0..rows)
        .map(|a| {
            let mut s = 0.0;
            for b in 0..state.columns() {
                let w = weight(state, b);
                for i in 0..state.n {
                    let e = value(a, b, i);
                    s += w * e * e;
                }
            }
            s.sqrt()
        })
        .collect()
}

/// `‖Q_a − q(t_a, ·)‖_{L²}` for every stored row.
pub fn l2_error_series<P: AnalyticSection>(state: &DiscreteState, exact: &P) -> Vec<f64> {
    let g = state.grid;
    l2_rows(state, state.q_rows(), |a, b, i| state.q_at(a, b, i) - exact.eval(&[g.t(a), g.x(b)])[i])
}

/// Spatial `L²` norm of `q` (or of `v`) per row.
pub fn spatial_l2_series(state: &DiscreteState, of_v: bool) -> Vec<f64> {
    if of_v {
        l2_rows(state, state.v_rows(), |a, b, i| state.v_at(a, b, i))
    } else {
        l2_rows(state, state.q_rows(), |a, b, i| state.q_at(a, b, i))
    }
}

/// Columns with a centered `x` difference, and the half-step jet there.
fn half_step_jet(
    state: &DiscreteState,
    field: &dyn Fn(usize, usize, usize) -> f64,
    a: usize,
    b: usize,
) -> (Vec<f64>, Vec<f64>) {
    let g = state.grid;
    let (dt, dx) = (g.dt(), g.dx());
    let (l, r) = (state.col(b as isize - 1), state.col(b as isize + 1));
    let n = state.n;
    let mut q = Vec::with_capacity(n);
    let mut qd = Vec::with_capacity(2 * n);
    for i in 0..n {
        q.push(0.5 * (field(a, b, i) + field(a + 1, b, i)));
        qd.push((field(a + 1, b, i) - field(a, b, i)) / dt);
        let qx0 = (field(a, r, i) - field(a, l, i)) / (2.0 * dx);
        let qx1 = (field(a + 1, r, i) - field(a + 1, l, i)) / (2.0 * dx);
        qd.push(0.5 * (qx0 + qx1));
    }
    (q, qd)
}

fn energy_columns(state: &DiscreteState) -> std::ops::Range<usize> {
    if state.bc.is_periodic() {
        0..state.columns()
    } else {
        1..state.columns() - 1
    }
}

/// `E_a = Σ_b Δx · H` with `H = Σ_i q^i_t ∂L/∂q^i_t − L` on the jet at
/// `(t_a + Δt/2, x_b)`; one value per time slab.
pub fn energy_series<L: Lagrangian>(l: &L, state: &DiscreteState) -> Vec<f64> {
    let g = state.grid;
    let field = |a: usize, b: usize, i: usize| state.q_at(a, b, i);
    (0..state.q_rows().saturating_sub(1))
        .map(|a| {
            energy_columns(state)
                .map(|b| {
                    let (q, qd) = half_step_jet(state, &field, a, b);
                    let p = JetPoint { x: vec![g.t(a) + 0.5 * g.dt(), g.x(b)], q, qd };
                    g.dx() * time_energy_density(l, &p)
                })
                .sum()
        })
        .collect()
}

/// The same density for the forced prolongation `L̃_F` on the doubled
/// `(q, v)` jets: a conserved quantity of the doubled system whenever `L̃_F`
/// has no explicit time dependence.
pub fn doubled_energy_series<L: Lagrangian, F: Force>(l: &L, f: &F, state: &DiscreteState) -> Result<Vec<f64>> {
    let lf = force_prolong(l, f)?;
    let g = state.grid;
    let n = state.n;
    let rows = state.q_rows().min(state.v_rows());
    let qf = |a: usize, b: usize, i: usize| state.q_at(a, b, i);
    let vf = |a: usize, b: usize, i: usize| state.v_at(a, b, i);
    Ok((0..rows.saturating_sub(1))
        .map(|a| {
            energy_columns(state)
                .map(|b| {
                    let (q, qd) = half_step_jet(state, &qf, a, b);
                    let (v, vd) = half_step_jet(state, &vf, a, b);
                    debug_assert_eq!(q.len(), n);
                    let p =
                        JetPoint { x: vec![g.t(a) + 0.5 * g.dt(), g.x(b)], q: [q, v].concat(), qd: [qd, vd].concat() };
                    g.dx() * time_energy_density(&lf, &p)
                })
                .sum()
        })
        .collect())
}

/// Exponential rate of the envelope of an oscillating positive series:
/// interior local maxima, refined by a parabola through three samples,
/// then a least-squares line through `(t_peak, ln peak)`.
pub fn envelope_rate(times: &[f64], values: &[f64]) -> Result<f64> {
    let mut pts = Vec::new();
    for a in 1..values.len().saturating_sub(1) {
        let (ym, y0, yp) = (values[a - 1], values[a], values[a + 1]);
        if y0 > ym && y0 >= yp && y0 > 0.0 {
            let curv = ym - 2.0 * y0 + yp;
            let delta = if curv != 0.0 { 0.5 * (ym - yp) / curv } else { 0.0 };
            let peak = y0 - 0.25 * (ym - yp) * delta;
            let h = times[a + 1] - times[a];
            pts.push((times[a] + delta * h, peak.ln()));
        }
    }
    if pts.len() < 2 {
        return Err(Error::Unsupported(format!("envelope fit needs two interior peaks, found {}", pts.len())));
    }
    let m = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let num: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - tm) * (p.0 - tm)).sum();
    Ok(num / den)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceLevel {
    pub nt: usize,
    pub nx: usize,
    /// `Δx`.
    pub h: f64,
    /// Maximum over time of the spatial `L²` error.
    pub error: f64,
    /// `log(e_{l−1}/e_l) / log(h_{l−1}/h_l)`; absent on the first level.
    pub order: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub levels: Vec<ConvergenceLevel>,
}

impl ConvergenceTable {
    pub fn last_order(&self) -> Option<f64> {
        self.levels.last().and_then(|l| l.order)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("nt,nx,h,error,order\n");
        for l in &self.levels {
            let order = l.order.map(super::output::fmt17).unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                l.nt,
                l.nx,
                super::output::fmt17(l.h),
                super::output::fmt17(l.error),
                order
            ));
        }
        s
    }
}

/// Runs the same problem on each `(nt, nx)` level of `base`'s domain and
/// compares against `exact`.
#[allow(clippy::too_many_arguments)]
pub fn convergence_study<L, F, P, E>(
    l: &L,
    f: &F,
    base: GridSpec,
    levels: &[(usize, usize)],
    bc: BoundaryCondition,
    scheme: SchemeConfig,
    init: &P,
    exact: &E,
) -> Result<ConvergenceTable>
where
    L: Lagrangian,
    F: Force,
    P: AnalyticSection,
    E: AnalyticSection,
{
    let mut out: Vec<ConvergenceLevel> = Vec::with_capacity(levels.len());
    for &(nt, nx) in levels {
        let grid = GridSpec::new(nt, nx, base.t_end, base.x_min, base.x_max)?;
        let mut it = Integrator::new(l, f, grid, bc, scheme)?;
        let run = it.simulate(init)?;
        let error = l2_error_series(&run.state, exact).into_iter().fold(0.0, f64::max);
        let h = grid.dx();
        let order = out.last().map(|p| (p.error / error).ln() / (p.h / h).ln());
        out.push(ConvergenceLevel { nt, nx, h, error, order });
    }
    Ok(ConvergenceTable { levels: out })
}
