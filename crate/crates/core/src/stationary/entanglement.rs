//! Schmidt decomposition of a sampled composite state.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ComplexField2D;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchmidtSpectrum {
    /// Nonincreasing Schmidt coefficients.
    pub sigma: Vec<f64>,
    /// `Σσ²`
    pub total: f64,
    /// `Σσ⁴`
    pub purity: f64,
}

impl SchmidtSpectrum {
    /// `1 − σ₁²`
    pub fn entanglement_defect(&self) -> f64 {
        1.0 - self.sigma[0] * self.sigma[0]
    }
}

/// Singular values of `√(w_x w_R) Ψ(x, R)`; Ψ must be normalized.
pub fn entanglement_spectrum(full: &ComplexField2D) -> Result<SchmidtSpectrum> {
    let norm = full.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidParameter(format!("Ψ must be normalized (norm {norm})")));
    }
    let wx = full.grid.x.weights();
    let wr = full.grid.r.weights();
    let m = DMatrix::<Complex64>::from_fn(full.grid.x.n, full.grid.r.n, |ix, ir| full.at(ix, ir) * (wx[ix] * wr[ir]).sqrt());
    let mut sigma: Vec<f64> = m.singular_values().iter().cloned().collect();
    sigma.sort_by(|a, b| b.total_cmp(a));
    let total = sigma.iter().map(|s| s * s).sum();
    let purity = sigma.iter().map(|s| s.powi(4)).sum();
    Ok(SchmidtSpectrum { sigma, total, purity })
}
