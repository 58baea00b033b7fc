//! Potential-energy descriptions: one-dimensional potentials for the clock and
//! the system, and the two-coordinate interaction `V_I(x, R)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::interp::CubicSpline;

/// Samples of a potential on a grid, interpolated by a natural cubic spline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TabulatedSamples", into = "TabulatedSamples")]
pub struct Tabulated {
    grid: Grid1D,
    samples: Vec<f64>,
    spline: CubicSpline,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TabulatedSamples {
    grid: Grid1D,
    samples: Vec<f64>,
}

impl TryFrom<TabulatedSamples> for Tabulated {
    type Error = Error;
    fn try_from(t: TabulatedSamples) -> Result<Self> {
        Tabulated::new(t.grid, t.samples)
    }
}

impl From<Tabulated> for TabulatedSamples {
    fn from(t: Tabulated) -> Self {
        TabulatedSamples {
            grid: t.grid,
            samples: t.samples,
        }
    }
}

impl Tabulated {
    pub fn new(grid: Grid1D, samples: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if samples.len() < 4 {
            return Err(Error::Shape(format!(
                "tabulated potential needs at least 4 samples, got {}",
                samples.len()
            )));
        }
        if samples.len() != grid.n {
            return Err(Error::Shape(format!("{} samples on a {}-point grid", samples.len(), grid.n)));
        }
        let spline = CubicSpline::new(grid.points(), samples.clone())?;
        Ok(Tabulated { grid, samples, spline })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.points().into_iter().map(f).collect())
    }

    fn check(&self, q: f64) -> Result<()> {
        if self.grid.contains(q) {
            Ok(())
        } else {
            Err(Error::Domain {
                coord: q,
                min: self.grid.min,
                max: self.grid.max,
            })
        }
    }
}

/// A potential in one coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Potential {
    /// `½ k (q - center)²`
    Harmonic { k: f64, center: f64 },
    /// `slope · q`
    Linear { slope: f64 },
    Constant { value: f64 },
    /// `-depth · exp(-(q - center)² / 2 width²)`
    GaussianWell { depth: f64, width: f64, center: f64 },
    Tabulated(Tabulated),
}

impl Potential {
    pub fn zero() -> Self {
        Potential::Constant { value: 0.0 }
    }

    pub fn harmonic(k: f64) -> Self {
        Potential::Harmonic { k, center: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64, name: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be finite")))
            }
        };
        match self {
            Potential::Harmonic { k, center } => {
                finite(*k, "k")?;
                finite(*center, "center")
            }
            Potential::Linear { slope } => finite(*slope, "slope"),
            Potential::Constant { value } => finite(*value, "value"),
            Potential::GaussianWell { depth, width, center } => {
                finite(*depth, "depth")?;
                finite(*center, "center")?;
                if !(*width > 0.0) || !width.is_finite() {
                    return Err(Error::InvalidParameter("width must be positive".into()));
                }
                Ok(())
            }
            Potential::Tabulated(_) => Ok(()),
        }
    }

    pub fn eval(&self, q: f64) -> Result<f64> {
        Ok(match self {
            Potential::Harmonic { k, center } => 0.5 * k * (q - center) * (q - center),
            Potential::Linear { slope } => slope * q,
            Potential::Constant { value } => *value,
            Potential::GaussianWell { depth, width, center } => {
                let u = (q - center) / width;
                -depth * (-0.5 * u * u).exp()
            }
            Potential::Tabulated(t) => {
                t.check(q)?;
                t.spline.eval(q)
            }
        })
    }

    pub fn derivative(&self, q: f64) -> Result<f64> {
        Ok(match self {
            Potential::Harmonic { k, center } => k * (q - center),
            Potential::Linear { slope } => *slope,
            Potential::Constant { .. } => 0.0,
            Potential::GaussianWell { depth, width, center } => {
                let u = (q - center) / width;
                depth * u / width * (-0.5 * u * u).exp()
            }
            Potential::Tabulated(t) => {
                t.check(q)?;
                t.spline.derivative(q)
            }
        })
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Potential::Constant { value } => *value == 0.0,
            Potential::Harmonic { k, .. } => *k == 0.0,
            Potential::Linear { slope } => *slope == 0.0,
            Potential::GaussianWell { depth, .. } => *depth == 0.0,
            Potential::Tabulated(t) => t.samples.iter().all(|v| *v == 0.0),
        }
    }
}

/// The interaction `V_I(x, R)`. Every variant is a single product `g(R) h(x)`,
/// which the channel code exploits to precompute matrix elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Coupling {
    /// `λ x R`
    Bilinear { lambda: f64 },
    /// `g(R) h(x)`
    Separable { g: Potential, h: Potential },
    /// `A h(x) exp(-(R - center)² / 2 width²)`
    WindowedPulse {
        amplitude: f64,
        center: f64,
        width: f64,
        profile: Potential,
    },
    Zero,
}

impl Coupling {
    pub fn validate(&self) -> Result<()> {
        match self {
            Coupling::Bilinear { lambda } if !lambda.is_finite() => {
                Err(Error::InvalidParameter("lambda must be finite".into()))
            }
            Coupling::Separable { g, h } => {
                g.validate()?;
                h.validate()
            }
            Coupling::WindowedPulse {
                amplitude,
                center,
                width,
                profile,
            } => {
                if !amplitude.is_finite() || !center.is_finite() {
                    return Err(Error::InvalidParameter("pulse parameters must be finite".into()));
                }
                if !(*width > 0.0) || !width.is_finite() {
                    return Err(Error::InvalidParameter("pulse width must be positive".into()));
                }
                profile.validate()
            }
            _ => Ok(()),
        }
    }

    /// The R-dependent factor `g(R)`.
    pub fn r_factor(&self, r: f64) -> Result<f64> {
        match self {
            Coupling::Bilinear { lambda } => Ok(lambda * r),
            Coupling::Separable { g, .. } => g.eval(r),
            Coupling::WindowedPulse {
                amplitude,
                center,
                width,
                ..
            } => {
                let u = (r - center) / width;
                Ok(amplitude * (-0.5 * u * u).exp())
            }
            Coupling::Zero => Ok(0.0),
        }
    }

    pub fn r_factor_derivative(&self, r: f64) -> Result<f64> {
        match self {
            Coupling::Bilinear { lambda } => Ok(*lambda),
            Coupling::Separable { g, .. } => g.derivative(r),
            Coupling::WindowedPulse {
                amplitude,
                center,
                width,
                ..
            } => {
                let u = (r - center) / width;
                Ok(-amplitude * u / width * (-0.5 * u * u).exp())
            }
            Coupling::Zero => Ok(0.0),
        }
    }

    /// The x-dependent factor `h(x)`.
    pub fn x_factor(&self, x: f64) -> Result<f64> {
        match self {
            Coupling::Bilinear { .. } => Ok(x),
            Coupling::Separable { h, .. } => h.eval(x),
            Coupling::WindowedPulse { profile, .. } => profile.eval(x),
            Coupling::Zero => Ok(0.0),
        }
    }

    pub fn x_factor_derivative(&self, x: f64) -> Result<f64> {
        match self {
            Coupling::Bilinear { .. } => Ok(1.0),
            Coupling::Separable { h, .. } => h.derivative(x),
            Coupling::WindowedPulse { profile, .. } => profile.derivative(x),
            Coupling::Zero => Ok(0.0),
        }
    }

    pub fn eval(&self, x: f64, r: f64) -> Result<f64> {
        if let Coupling::Bilinear { lambda } = self {
            return Ok(lambda * x * r);
        }
        Ok(self.r_factor(r)? * self.x_factor(x)?)
    }

    pub fn d_dx(&self, x: f64, r: f64) -> Result<f64> {
        Ok(self.r_factor(r)? * self.x_factor_derivative(x)?)
    }

    pub fn d_dr(&self, x: f64, r: f64) -> Result<f64> {
        Ok(self.r_factor_derivative(r)? * self.x_factor(x)?)
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Coupling::Zero => true,
            Coupling::Bilinear { lambda } => *lambda == 0.0,
            Coupling::WindowedPulse { amplitude, profile, .. } => *amplitude == 0.0 || profile.is_zero(),
            Coupling::Separable { g, h } => g.is_zero() || h.is_zero(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn harmonic_value() {
        let v = Potential::Harmonic { k: 2.0, center: 0.0 };
        assert_eq!(v.eval(3.0).unwrap(), 9.0);
    }

    #[test]
    fn zero_coupling() {
        assert_eq!(Coupling::Zero.eval(1.7, -4.0).unwrap(), 0.0);
    }

    #[test]
    fn bilinear_is_exact_product() {
        let c = Coupling::Bilinear { lambda: 0.37 };
        for (x, r) in [(1.3, -2.1), (0.0, 5.0), (-7.25, 3.5)] {
            assert_eq!(c.eval(x, r).unwrap(), 0.37 * x * r);
        }
    }

    #[test]
    fn tabulated_sine_interpolates() {
        let g = Grid1D::new(0.0, PI, 51).unwrap();
        let v = Potential::Tabulated(Tabulated::from_fn(g, f64::sin).unwrap());
        assert!((v.eval(PI / 2.0).unwrap() - 1.0).abs() < 1e-6);
        // spot-check away from nodes against the analytic function
        assert!((v.eval(1.0).unwrap() - 1.0f64.sin()).abs() < 1e-6);
    }

    #[test]
    fn tabulated_domain_and_size_errors() {
        let g = Grid1D::new(0.0, 1.0, 5).unwrap();
        let v = Potential::Tabulated(Tabulated::from_fn(g, |q| q).unwrap());
        assert!(matches!(v.eval(1.5), Err(Error::Domain { .. })));
        let g3 = Grid1D::new(0.0, 1.0, 3).unwrap();
        assert!(Tabulated::new(g3, vec![0.0; 3]).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let pots = [
            Potential::Harmonic { k: 1.5, center: 0.3 },
            Potential::Linear { slope: -0.7 },
            Potential::GaussianWell {
                depth: 2.0,
                width: 0.8,
                center: -0.2,
            },
        ];
        for p in &pots {
            for q in [-1.0, 0.1, 0.9] {
                let h = 1e-5;
                let fd = (p.eval(q + h).unwrap() - p.eval(q - h).unwrap()) / (2.0 * h);
                assert!((fd - p.derivative(q).unwrap()).abs() < 1e-8);
            }
        }
        let c = Coupling::WindowedPulse {
            amplitude: 0.3,
            center: 1.0,
            width: 0.5,
            profile: Potential::harmonic(1.0),
        };
        let (x, r, h) = (0.7, 1.2, 1e-5);
        let fdx = (c.eval(x + h, r).unwrap() - c.eval(x - h, r).unwrap()) / (2.0 * h);
        let fdr = (c.eval(x, r + h).unwrap() - c.eval(x, r - h).unwrap()) / (2.0 * h);
        assert!((fdx - c.d_dx(x, r).unwrap()).abs() < 1e-8);
        assert!((fdr - c.d_dr(x, r).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn evaluation_is_bit_deterministic() {
        let p = Potential::GaussianWell {
            depth: 1.0,
            width: 0.3,
            center: 0.1,
        };
        assert_eq!(p.eval(0.123).unwrap().to_bits(), p.eval(0.123).unwrap().to_bits());
    }

    #[test]
    fn serde_round_trip() {
        let c = Coupling::WindowedPulse {
            amplitude: 0.1,
            center: 2.0,
            width: 0.5,
            profile: Potential::Linear { slope: 1.0 },
        };
        let s = serde_json::to_string(&c).unwrap();
        let back: Coupling = serde_json::from_str(&s).unwrap();
        assert_eq!(c, back);
    }
}
