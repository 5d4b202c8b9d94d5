use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::AnalyticSection;

/// A uniform `(t, x)` grid on `[0, t_end] × [x_min, x_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub nt: usize,
    pub nx: usize,
    pub t_end: f64,
    pub x_min: f64,
    pub x_max: f64,
}

impl Default for GridSpec {
    /// `200 × 100` nodes on `[0, 10] × [0, 2π]`.
    fn default() -> Self {
        GridSpec { nt: 200, nx: 100, t_end: 10.0, x_min: 0.0, x_max: 2.0 * std::f64::consts::PI }
    }
}

impl GridSpec {
    pub fn new(nt: usize, nx: usize, t_end: f64, x_min: f64, x_max: f64) -> Result<Self> {
        let g = GridSpec { nt, nx, t_end, x_min, x_max };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nt < 3 || self.nx < 3 {
            return Err(Error::Config(format!("grid needs nt >= 3 and nx >= 3, got {} x {}", self.nt, self.nx)));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::Config(format!("t_end must be positive, got {}", self.t_end)));
        }
        if !(self.x_min.is_finite() && self.x_max.is_finite() && self.x_max > self.x_min) {
            return Err(Error::Config(format!("need x_min < x_max, got [{}, {}]", self.x_min, self.x_max)));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.t_end / (self.nt - 1) as f64
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn t(&self, a: usize) -> f64 {
        a as f64 * self.dt()
    }

    pub fn x(&self, b: usize) -> f64 {
        self.x_min + b as f64 * self.dx()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    /// Column `nx − 1` is identified with column 0.
    Periodic,
    /// End columns hold nodal samples of the initial section: followed in
    /// time when `follow_section`, frozen at `t = 0` otherwise.
    Dirichlet { follow_section: bool },
}

impl BoundaryCondition {
    pub fn is_periodic(&self) -> bool {
        matches!(self, BoundaryCondition::Periodic)
    }

    /// Number of stored columns.
    pub fn columns(&self, nx: usize) -> usize {
        if self.is_periodic() {
            nx - 1
        } else {
            nx
        }
    }

    /// Columns whose values are unknowns of the row solve.
    pub fn unknown_columns(&self, nx: usize) -> std::ops::Range<usize> {
        if self.is_periodic() {
            0..nx - 1
        } else {
            1..nx - 1
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CellRule {
    /// Mean of the four corners and averaged differences; second order.
    #[default]
    AveragedCorner,
    /// Base corner and one-sided differences; leapfrog for the wave preset.
    ForwardCorner,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ForceQuadrature {
    /// `F_i` at each node from centered differences; `F^μ_i` per cell.
    #[default]
    Centered,
    /// Both components per cell, paired with the cell reconstruction.
    CellAverage,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewtonConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig { tol: 1e-12, max_iter: 50 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeConfig {
    pub cell_rule: CellRule,
    pub force_quadrature: ForceQuadrature,
    pub newton: NewtonConfig,
}

/// Nodal values, stored row-major as `[row][column][field]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteState {
    pub grid: GridSpec,
    pub bc: BoundaryCondition,
    pub n: usize,
    pub q: Vec<f64>,
    pub v: Option<Vec<f64>>,
    /// Per-row Dirichlet end values `[left (n), right (n)]` for `q`, and
    /// for `v` when present.
    pub(crate) q_ends: Vec<f64>,
    pub(crate) v_ends: Vec<f64>,
    /// `q` at `t = −Δt`, read only by node force terms at row 0.
    pub(crate) q_ghost: Vec<f64>,
}

impl DiscreteState {
    /// Nodal samples of `q` (and of `v`) on the first `rows` rows, with the
    /// ghost row at `t = −Δt` and Dirichlet ends taken from the same
    /// sections.
    pub fn sample<P: AnalyticSection, V: AnalyticSection>(
        grid: GridSpec,
        bc: BoundaryCondition,
        q: &P,
        v: Option<&V>,
        rows: usize,
    ) -> Result<Self> {
        grid.validate()?;
        let n = q.fields();
        if q.base_dim() != 2 || v.is_some_and(|v| v.base_dim() != 2 || v.fields() != n) {
            return Err(Error::Dimension("sampled sections must map R^2 -> R^n".into()));
        }
        let ncols = bc.columns(grid.nx);
        let row = |p: &dyn Fn(&[f64]) -> Vec<f64>, t: f64| -> Vec<f64> {
            (0..ncols).flat_map(|b| p(&[t, grid.x(b)])).collect()
        };
        let ends = |p: &dyn Fn(&[f64]) -> Vec<f64>| -> Vec<f64> {
            let BoundaryCondition::Dirichlet { follow_section } = bc else {
                return Vec::new();
            };
            (0..=grid.nt)
                .flat_map(|a| {
                    let t = if follow_section { grid.t(a) } else { 0.0 };
                    [p(&[t, grid.x_min]), p(&[t, grid.x_max])].concat()
                })
                .collect()
        };
        let qf = |x: &[f64]| q.eval(x);
        let q_rows: Vec<f64> = (0..rows).flat_map(|a| row(&qf, grid.t(a))).collect();
        let (v_rows, v_ends) = match v {
            Some(v) => {
                let vf = |x: &[f64]| v.eval(x);
                (Some((0..rows).flat_map(|a| row(&vf, grid.t(a))).collect()), ends(&vf))
            }
            None => (None, Vec::new()),
        };
        Ok(DiscreteState {
            grid,
            bc,
            n,
            q: q_rows,
            v: v_rows,
            q_ends: ends(&qf),
            v_ends,
            q_ghost: row(&qf, -grid.dt()),
        })
    }

    pub fn columns(&self) -> usize {
        self.bc.columns(self.grid.nx)
    }

    fn row_len(&self) -> usize {
        self.columns() * self.n
    }

    /// Number of `q` rows filled so far.
    pub fn q_rows(&self) -> usize {
        self.q.len() / self.row_len()
    }

    pub fn v_rows(&self) -> usize {
        self.v.as_ref().map_or(0, |v| v.len() / self.row_len())
    }

    pub(crate) fn col(&self, b: isize) -> usize {
        let nc = self.columns() as isize;
        if self.bc.is_periodic() {
            b.rem_euclid(nc) as usize
        } else {
            debug_assert!((0..nc).contains(&b), "column {b} outside Dirichlet grid");
            b as usize
        }
    }

    pub fn q_at(&self, a: usize, b: usize, i: usize) -> f64 {
        self.q[(a * self.columns() + b) * self.n + i]
    }

    /// `q` at a possibly negative row (`-1` is the ghost row) and a
    /// column index resolved by the boundary rule.
    pub(crate) fn q_signed(&self, a: isize, b: isize, i: usize) -> f64 {
        let b = self.col(b);
        if a < 0 {
            self.q_ghost[b * self.n + i]
        } else {
            self.q_at(a as usize, b, i)
        }
    }

    pub fn v_at(&self, a: usize, b: usize, i: usize) -> f64 {
        self.v.as_ref().expect("state carries no v field")[(a * self.columns() + b) * self.n + i]
    }

    pub fn q_row(&self, a: usize) -> &[f64] {
        let l = self.row_len();
        &self.q[a * l..(a + 1) * l]
    }

    pub fn v_row(&self, a: usize) -> &[f64] {
        let l = self.row_len();
        &self.v.as_ref().expect("state carries no v field")[a * l..(a + 1) * l]
    }

    /// Largest `|q|` (and `|v|`) over all stored values; `NaN` if any
    /// value is not finite.
    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0_f64;
        for &x in self.q.iter().chain(self.v.iter().flatten()) {
            if !x.is_finite() {
                return f64::NAN;
            }
            m = m.max(x.abs());
        }
        m
    }
}
