//! Discrete variational integrator on a uniform `(t, x)` grid.
//!
//! The discrete action sums `ΔtΔx · L` over grid cells; the discrete
//! Euler-Lagrange equations (with Lagrange-d'Alembert forcing) are solved
//! row by row. The doubled `(q, v)` system is the stationarity of one
//! discrete action that is linear in `v`, so `q` never depends on `v`.

mod grid;
mod march;
mod output;
mod scheme;
mod study;

pub use grid::{BoundaryCondition, CellRule, DiscreteState, ForceQuadrature, GridSpec, NewtonConfig, SchemeConfig};
pub use march::{Integrator, Run, BLOW_UP};
pub use output::{fmt17, to_json17, write_diagnostics, write_trajectory, Diagnostics};
pub use scheme::{cell_jet, cell_point, discrete_lagrangian_cell};
pub use study::{
    convergence_study, doubled_energy_series, energy_series, envelope_rate, l2_error_series, spatial_l2_series,
    ConvergenceLevel, ConvergenceTable,
};
