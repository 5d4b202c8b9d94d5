//! Run configuration: one strict JSON document plus `path=value` overrides.

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::fieldeq::{adjoint_residual, el_residual, forced_el_residual, jacobi_residual, JacobiMode};
use crate::integrator::{l2_error_series, BoundaryCondition, GridSpec, Integrator, Run, SchemeConfig};
use crate::jet::{second_jet_of_section, ProlongedSecondJet};
use crate::lagrangian::{presets, Model};
use crate::oracle::Profile;

fn one() -> f64 {
    1.0
}

fn pi() -> f64 {
    PI
}

fn half() -> f64 {
    0.5
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Wave {
        #[serde(default = "one")]
        c: f64,
    },
    DampedWave {
        #[serde(default = "one")]
        c: f64,
        #[serde(default = "one")]
        tau: f64,
    },
    SineGordon {},
    Harmonic {
        #[serde(default = "one")]
        omega: f64,
    },
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::DampedWave { c: 1.0, tau: 1.0 }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be finite and positive, got {v}")))
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelConfig::Wave { c } => positive("model.c", c),
            ModelConfig::DampedWave { c, tau } => {
                positive("model.c", c)?;
                positive("model.tau", tau)
            }
            ModelConfig::SineGordon {} => Ok(()),
            ModelConfig::Harmonic { omega } => positive("model.omega", omega),
        }
    }

    pub fn model(&self) -> Model {
        match *self {
            ModelConfig::Wave { c } => presets::wave(c),
            ModelConfig::DampedWave { c, tau } => presets::damped_wave(c, tau),
            ModelConfig::SineGordon {} => presets::sine_gordon(),
            ModelConfig::Harmonic { omega } => presets::harmonic(omega),
        }
    }

    fn speed(&self) -> f64 {
        match *self {
            ModelConfig::Wave { c } | ModelConfig::DampedWave { c, .. } => c,
            _ => 1.0,
        }
    }
}

/// Initial data on the `(t, x)` plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum IcConfig {
    /// `A sin(m x)` at rest.
    StandingMode {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        wavenumber: f64,
    },
    /// `A sin(m (x − c t))`.
    TravelingWave {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        wavenumber: f64,
    },
    /// `A exp(−(x − x₀)² / 2w²)` at rest.
    Gaussian {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "pi")]
        center: f64,
        #[serde(default = "half")]
        width: f64,
    },
}

impl Default for IcConfig {
    fn default() -> Self {
        IcConfig::StandingMode { amplitude: 1.0, wavenumber: 1.0 }
    }
}

impl IcConfig {
    pub fn validate(&self, key: &str) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{key}.{name} must be finite, got {v}")))
            }
        };
        match *self {
            IcConfig::StandingMode { amplitude, wavenumber } | IcConfig::TravelingWave { amplitude, wavenumber } => {
                finite("amplitude", amplitude)?;
                finite("wavenumber", wavenumber)
            }
            IcConfig::Gaussian { amplitude, center, width } => {
                finite("amplitude", amplitude)?;
                finite("center", center)?;
                positive(&format!("{key}.width"), width)
            }
        }
    }

    /// Closed-form solution with these initial data, when one is shipped.
    /// `growing` selects the partner solution of the variation equation.
    pub fn exact(&self, model: &ModelConfig, growing: bool) -> Option<Profile> {
        let speed = model.speed();
        match (*self, model) {
            (IcConfig::StandingMode { amplitude, wavenumber }, ModelConfig::Wave { .. }) => {
                Some(Profile::StandingMode { amplitude, wavenumber, speed })
            }
            (IcConfig::TravelingWave { amplitude, wavenumber }, ModelConfig::Wave { .. }) => {
                Some(Profile::TravelingWave { amplitude, wavenumber, speed })
            }
            (IcConfig::StandingMode { amplitude, wavenumber }, &ModelConfig::DampedWave { tau, .. }) => {
                Profile::damped(amplitude, wavenumber, speed, tau, growing).ok()
            }
            _ => None,
        }
    }

    /// The section supplying initial data (and Dirichlet values): the exact
    /// solution when known, otherwise the profile itself.
    pub fn section(&self, model: &ModelConfig, growing: bool) -> Profile {
        if let Some(p) = self.exact(model, growing) {
            return p;
        }
        let speed = model.speed();
        match *self {
            IcConfig::StandingMode { amplitude, wavenumber } => Profile::StandingMode { amplitude, wavenumber, speed },
            IcConfig::TravelingWave { amplitude, wavenumber } => {
                Profile::TravelingWave { amplitude, wavenumber, speed }
            }
            IcConfig::Gaussian { amplitude, center, width } => Profile::Gaussian { amplitude, center, width },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BcKind {
    #[default]
    Periodic,
    /// End columns follow the initial-data section in time.
    Dirichlet,
}

impl BcKind {
    pub fn boundary(self) -> BoundaryCondition {
        match self {
            BcKind::Periodic => BoundaryCondition::Periodic,
            BcKind::Dirichlet => BoundaryCondition::Dirichlet { follow_section: true },
        }
    }
}

fn every_default() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Trajectory or table destination; standard output when absent.
    #[serde(default)]
    pub path: Option<PathBuf>,
    /// Diagnostics JSON destination; standard error when absent.
    #[serde(default)]
    pub diagnostics: Option<PathBuf>,
    #[serde(default = "every_default")]
    pub every: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { path: None, diagnostics: None, every: 1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ResidualKind {
    #[default]
    El,
    Forced,
    Jacobi,
    Adjoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ResidualConfig {
    #[serde(default)]
    pub kind: ResidualKind,
    /// Base points in the `name=value` syntax (`x1`, `x2`).
    #[serde(default)]
    pub points: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    /// `(nt, nx)` per level; four doublings of `grid` when absent.
    #[serde(default)]
    pub levels: Option<Vec<(usize, usize)>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub bc: BcKind,
    #[serde(default)]
    pub ic: IcConfig,
    /// Initial variation for `cosim`; `ic` when absent.
    #[serde(default)]
    pub ic_v: Option<IcConfig>,
    #[serde(default)]
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
    /// Jet point for `derive`, in the `name=value` syntax.
    #[serde(default)]
    pub point: Option<String>,
    #[serde(default)]
    pub residual: ResidualConfig,
    #[serde(default)]
    pub convergence: ConvergenceConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

impl RunConfig {
    /// Parses `text` (strictly), applies `path=value` overrides, validates.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let cfg: RunConfig = if overrides.is_empty() {
            serde_json::from_str(text).map_err(|e| Error::Config(format!("{e}")))?
        } else {
            let mut v: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("{e}")))?;
            for o in overrides {
                apply_override(&mut v, o)?;
            }
            serde_json::from_value(v).map_err(|e| Error::Config(format!("{e}")))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.grid.validate()?;
        self.ic.validate("ic")?;
        if let Some(v) = &self.ic_v {
            v.validate("ic_v")?;
        }
        if self.output.every == 0 {
            return Err(Error::Config("output.every must be at least 1".into()));
        }
        let n = self.scheme.newton;
        if !(n.tol.is_finite() && n.tol > 0.0) || n.max_iter == 0 {
            return Err(Error::Config("scheme.newton needs tol > 0 and max_iter >= 1".into()));
        }
        if let Some(levels) = &self.convergence.levels {
            if levels.len() < 2 {
                return Err(Error::Config("convergence.levels needs at least two levels".into()));
            }
        }
        Ok(())
    }

    pub fn ic_v(&self) -> &IcConfig {
        self.ic_v.as_ref().unwrap_or(&self.ic)
    }

    pub fn levels(&self) -> Vec<(usize, usize)> {
        self.convergence
            .levels
            .clone()
            .unwrap_or_else(|| (0..4).map(|l| (self.grid.nt << l, self.grid.nx << l)).collect())
    }

    /// Errors unless the model lives on the `(t, x)` plane.
    pub fn require_plane(&self, what: &str) -> Result<()> {
        let k = self.model.model().base_dim();
        if k != 2 {
            return Err(Error::Config(format!("{what} works on the (t, x) plane; model has k = {k}")));
        }
        Ok(())
    }

    /// Marches the configured problem; `doubled` also carries `v`.
    pub fn march(&self, doubled: bool) -> Result<Run> {
        self.require_plane(if doubled { "cosim" } else { "simulate" })?;
        let model = self.model.model();
        let mut it = Integrator::new(&model.lagrangian, &model.force, self.grid, self.bc.boundary(), self.scheme)?;
        let q = self.ic.section(&self.model, false);
        if doubled {
            it.cosimulate(&q, &self.ic_v().section(&self.model, true))
        } else {
            it.simulate(&q)
        }
    }

    /// `L²` error of the last row against the closed form, when one exists.
    pub fn final_error(&self, run: &Run) -> Option<f64> {
        let exact = self.ic.exact(&self.model, false)?;
        l2_error_series(&run.state, &exact).last().copied()
    }

    /// The configured residual of the initial-data sections at base point `x`.
    pub fn residual_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.require_plane("residual")?;
        if x.len() != 2 {
            return Err(Error::Dimension(format!("base point needs 2 coordinates, got {}", x.len())));
        }
        let model = self.model.model();
        let (l, f) = (&model.lagrangian, &model.force);
        let qj = second_jet_of_section(&self.ic.section(&self.model, false), x);
        let pj =
            || ProlongedSecondJet::from_parts(&qj, &second_jet_of_section(&self.ic_v().section(&self.model, true), x));
        Ok(match self.residual.kind {
            ResidualKind::El => el_residual(l, &qj),
            ResidualKind::Forced => forced_el_residual(l, f, &qj),
            ResidualKind::Jacobi => jacobi_residual(l, &pj()?, JacobiMode::ViaLift),
            ResidualKind::Adjoint => adjoint_residual(l, f, &pj()?),
        })
    }
}

/// Sets `a.b.c = value` in a JSON tree. `value` is read as JSON when it
/// parses, otherwise as a string.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<()> {
    let (path, raw) =
        spec.split_once('=').ok_or_else(|| Error::Config(format!("--set expects path=value, got `{spec}`")))?;
    let path = path.trim();
    if path.is_empty() || path.split('.').any(str::is_empty) {
        return Err(Error::Config(format!("--set: malformed key path `{path}`")));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut node = root;
    let keys: Vec<&str> = path.split('.').collect();
    for (d, key) in keys.iter().enumerate() {
        let obj = match node {
            Value::Object(m) => m,
            other if other.is_null() => {
                *other = Value::Object(Default::default());
                other.as_object_mut().expect("just created")
            }
            _ => {
                return Err(Error::Config(format!("--set: `{}` is not an object", keys[..d].join("."))));
            }
        };
        if d + 1 == keys.len() {
            obj.insert((*key).to_string(), value);
            return Ok(());
        }
        node = obj.entry(*key).or_insert(Value::Null);
    }
    unreachable!("non-empty path")
}
