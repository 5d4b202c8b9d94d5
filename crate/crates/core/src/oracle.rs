//! Closed-form sections on `(t, x)` used as initial data and as exact
//! solutions of the wave-type presets.

use crate::ad::Scalar;
use crate::error::{Error, Result};
use crate::jet::AnalyticSection;

/// A scalar field `ψ(t, x)` (`n = 1`, `k = 2`).
#[derive(Clone, Debug, PartialEq)]
pub enum Profile {
    /// `A cos(c m t) sin(m x)`.
    StandingMode { amplitude: f64, wavenumber: f64, speed: f64 },
    /// `A sin(m (x − c t))`.
    TravelingWave { amplitude: f64, wavenumber: f64, speed: f64 },
    /// `A e^{−t/2τ} (cos ωt + sin ωt / (2τω)) sin(m x)`, `ω² = c²m² − 1/4τ²`;
    /// with `growing` the time-reversed partner
    /// `A e^{t/2τ} (cos ωt − sin ωt / (2τω)) sin(m x)`.
    DampedMode { amplitude: f64, wavenumber: f64, speed: f64, tau: f64, growing: bool },
    /// `A exp(−(x − x₀)² / 2w²)`, constant in time.
    Gaussian { amplitude: f64, center: f64, width: f64 },
    /// `Σ_j w_j ψ_j`.
    Sum(Vec<(f64, Profile)>),
}

impl Profile {
    pub fn damped(amplitude: f64, wavenumber: f64, speed: f64, tau: f64, growing: bool) -> Result<Self> {
        let p = Profile::DampedMode { amplitude, wavenumber, speed, tau, growing };
        p.frequency()?;
        Ok(p)
    }

    /// `ω` of a damped mode; errors when the mode is not underdamped.
    pub fn frequency(&self) -> Result<f64> {
        match *self {
            Profile::DampedMode { wavenumber: m, speed: c, tau, .. } => {
                let w2 = c * c * m * m - 0.25 / (tau * tau);
                if !(w2 > 0.0) {
                    return Err(Error::Config(format!(
                        "mode is not underdamped: c²m² − 1/(4τ²) = {w2} must be positive"
                    )));
                }
                Ok(w2.sqrt())
            }
            Profile::StandingMode { wavenumber, speed, .. } | Profile::TravelingWave { wavenumber, speed, .. } => {
                Ok(speed * wavenumber)
            }
            _ => Err(Error::Unsupported("profile has no single frequency".into())),
        }
    }
}

impl AnalyticSection for Profile {
    fn base_dim(&self) -> usize {
        2
    }

    fn fields(&self) -> usize {
        1
    }

    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let (t, y) = (x[0], x[1]);
        let v = match self {
            &Profile::StandingMode { amplitude, wavenumber, speed } => {
                (t * (speed * wavenumber)).cos() * (y * wavenumber).sin() * amplitude
            }
            &Profile::TravelingWave { amplitude, wavenumber, speed } => {
                ((y - t * speed) * wavenumber).sin() * amplitude
            }
            &Profile::DampedMode { amplitude, wavenumber, tau, growing, .. } => {
                let w = self.frequency().expect("validated at construction");
                let s = if growing { 1.0 } else { -1.0 };
                let time = (t * (s / (2.0 * tau))).exp() * ((t * w).cos() - (t * w).sin() * (s / (2.0 * tau * w)));
                time * (y * wavenumber).sin() * amplitude
            }
            &Profile::Gaussian { amplitude, center, width } => {
                let d = y - center;
                (d * d * (-0.5 / (width * width))).exp() * amplitude + t * 0.0
            }
            Profile::Sum(parts) => {
                let mut s = S::zero();
                for (w, p) in parts {
                    s += p.eval(x)[0] * *w;
                }
                s
            }
        };
        vec![v]
    }
}
