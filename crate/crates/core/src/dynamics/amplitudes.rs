//! Interaction-picture channel amplitudes,
//! `iħ da_m/dt = Σ_n (φ_m|V_I(t)|φ_n) a_n exp((i/ħ)(ε_m − ε_n)t)`,
//! with `ψ = Σ_n a_n φ_n exp(−(i/ħ) ε_n t)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::drive::DrivenInteraction;
use crate::error::{Error, Result};
use crate::field::{inner_product, ComplexField1D};
use crate::stationary::{ChannelBasis, ChannelEnergies};

use super::tdse::{propagate_tdse, TdseSystem};

/// Population drift that counts as an unstable step.
pub const POPULATION_DRIFT_BOUND: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeSet {
    pub times: Vec<f64>,
    /// `a_m(t_k)` as `amplitudes[k][m]`.
    pub amplitudes: Vec<Vec<Complex64>>,
    pub energies: Vec<f64>,
}

impl AmplitudeSet {
    pub fn populations(&self, k: usize) -> Vec<f64> {
        self.amplitudes[k].iter().map(|a| a.norm_sqr()).collect()
    }

    /// `max_k |Σ_m |a_m(t_k)|² − Σ_m |a_m(t_0)|²|`
    pub fn population_drift(&self) -> f64 {
        let total = |k: usize| self.populations(k).iter().sum::<f64>();
        let p0 = total(0);
        (0..self.times.len()).map(|k| (total(k) - p0).abs()).fold(0.0, f64::max)
    }
}

fn rhs(energies: &[f64], hbar: f64, v: &DMatrix<Complex64>, t: f64, a: &[Complex64]) -> Vec<Complex64> {
    let k = energies.len();
    let mi = Complex64::new(0.0, -1.0 / hbar);
    (0..k)
        .map(|m| {
            let mut acc = Complex64::new(0.0, 0.0);
            for n in 0..k {
                let phase = Complex64::from_polar(1.0, (energies[m] - energies[n]) * t / hbar);
                acc += v[(m, n)] * a[n] * phase;
            }
            mi * acc
        })
        .collect()
}

fn axpy(a: &[Complex64], s: f64, d: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(d).map(|(x, y)| x + y * s).collect()
}

/// Classic RK4 with a caller-supplied coupling matrix `V(t)`.
pub fn propagate_amplitudes_with(
    energies: &[f64],
    hbar: f64,
    coupling: impl Fn(f64) -> Result<DMatrix<Complex64>>,
    a0: &[Complex64],
    times: &[f64],
    substeps: usize,
) -> Result<AmplitudeSet> {
    if a0.len() != energies.len() {
        return Err(Error::Shape("one initial amplitude per channel".into()));
    }
    if times.is_empty() || substeps == 0 {
        return Err(Error::InvalidParameter("need at least one time and one substep".into()));
    }
    let p0: f64 = a0.iter().map(|a| a.norm_sqr()).sum();
    let mut a = a0.to_vec();
    let mut amplitudes = vec![a.clone()];
    for w in times.windows(2) {
        let h = (w[1] - w[0]) / substeps as f64;
        for s in 0..substeps {
            let t = w[0] + s as f64 * h;
            let v0 = coupling(t)?;
            let vm = coupling(t + 0.5 * h)?;
            let v1 = coupling(t + h)?;
            let k1 = rhs(energies, hbar, &v0, t, &a);
            let k2 = rhs(energies, hbar, &vm, t + 0.5 * h, &axpy(&a, 0.5 * h, &k1));
            let k3 = rhs(energies, hbar, &vm, t + 0.5 * h, &axpy(&a, 0.5 * h, &k2));
            let k4 = rhs(energies, hbar, &v1, t + h, &axpy(&a, h, &k3));
            for m in 0..a.len() {
                a[m] += (k1[m] + (k2[m] + k3[m]) * 2.0 + k4[m]) * (h / 6.0);
            }
        }
        let p: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        if (p - p0).abs() > POPULATION_DRIFT_BOUND {
            return Err(Error::Stability {
                drift: (p - p0).abs(),
                bound: POPULATION_DRIFT_BOUND,
                step: (w[1] - w[0]) / substeps as f64,
            });
        }
        amplitudes.push(a.clone());
    }
    Ok(AmplitudeSet {
        times: times.to_vec(),
        amplitudes,
        energies: energies.to_vec(),
    })
}

/// Fixed channel energies of a basis.
pub fn basis_energies(basis: &ChannelBasis) -> Result<Vec<f64>> {
    match &basis.energies {
        ChannelEnergies::Fixed(e) => Ok(e.clone()),
        ChannelEnergies::BornOppenheimer { .. } => Err(Error::InvalidParameter("amplitude equations need R-independent channel energies".into())),
    }
}

/// `(φ_m|h|φ_n)` for the x profile of the drive's coupling.
pub fn profile_matrix(basis: &ChannelBasis, sys: &TdseSystem) -> DMatrix<Complex64> {
    let k = basis.len();
    let w = basis.x_grid.weights();
    DMatrix::from_fn(k, k, |m, n| {
        basis.states[m]
            .data
            .iter()
            .zip(&basis.states[n].data)
            .zip(sys.op.h_x.iter().zip(&w))
            .map(|((a, b), (h, wi))| a.conj() * b * (h * wi))
            .sum()
    })
}

/// Amplitude equations for the drive of `sys` in the given basis.
pub fn propagate_amplitudes(
    basis: &ChannelBasis,
    sys: &TdseSystem,
    a0: &[Complex64],
    times: &[f64],
    substeps: usize,
) -> Result<AmplitudeSet> {
    let energies = basis_energies(basis)?;
    let b = profile_matrix(basis, sys);
    let drive: &DrivenInteraction = &sys.drive;
    propagate_amplitudes_with(&energies, sys.hbar(), |t| Ok(&b * Complex64::new(drive.r_factor(t)?, 0.0)), a0, times, substeps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteComparison {
    pub amplitudes: AmplitudeSet,
    /// `exp((i/ħ)ε_m t) ⟨φ_m|ψ(t)⟩` from the grid propagation.
    pub projected: Vec<Vec<Complex64>>,
    pub max_deviation: f64,
    /// `1 − ‖Pψ0‖²/‖ψ0‖²` for the initial state.
    pub initial_defect: f64,
}

/// Runs the grid TDSE from `ψ0 = Σ a0_n φ_n` and the amplitude equations,
/// and returns the largest channel deviation over all samples.
pub fn compare_amplitudes_vs_grid(
    basis: &ChannelBasis,
    sys: &TdseSystem,
    a0: &[Complex64],
    times: &[f64],
    grid_substeps: usize,
    ode_substeps: usize,
) -> Result<RouteComparison> {
    let energies = basis_energies(basis)?;
    if a0.len() != basis.len() {
        return Err(Error::Shape("one initial amplitude per channel".into()));
    }
    let grid = basis.x_grid;
    let mut data = vec![Complex64::new(0.0, 0.0); grid.n];
    for (a, phi) in a0.iter().zip(&basis.states) {
        for (d, p) in data.iter_mut().zip(&phi.data) {
            *d += a * p;
        }
    }
    let psi0 = ComplexField1D { grid, data };
    let kept: f64 = basis.states.iter().map(|p| inner_product(p, &psi0).map(|z| z.norm_sqr())).sum::<Result<f64>>()?;
    let initial_defect = 1.0 - kept / psi0.norm_sqr();
    let traj = propagate_tdse(sys, &psi0, times, grid_substeps)?;
    let amplitudes = propagate_amplitudes(basis, sys, a0, times, ode_substeps)?;
    let hbar = sys.hbar();
    let mut projected = Vec::with_capacity(times.len());
    let mut max_deviation: f64 = 0.0;
    for (k, (t, s)) in times.iter().zip(&traj.states).enumerate() {
        let row: Vec<Complex64> = basis
            .states
            .iter()
            .zip(&energies)
            .map(|(phi, e)| inner_product(phi, s).map(|z| z * Complex64::from_polar(1.0, e * t / hbar)))
            .collect::<Result<_>>()?;
        for (p, a) in row.iter().zip(&amplitudes.amplitudes[k]) {
            max_deviation = max_deviation.max((p - a).norm());
        }
        projected.push(row);
    }
    Ok(RouteComparison {
        amplitudes,
        projected,
        max_deviation,
        initial_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_coupling_keeps_amplitudes() {
        let a0 = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
        let times: Vec<f64> = (0..=10).map(|k| k as f64).collect();
        let set = propagate_amplitudes_with(&[0.5, 1.5], 1.0, |_| Ok(DMatrix::zeros(2, 2)), &a0, &times, 10).unwrap();
        for row in &set.amplitudes {
            assert_eq!(row.as_slice(), &a0);
        }
    }

    #[test]
    fn degenerate_rabi_oscillation() {
        let v = 0.3;
        let coupling = DMatrix::from_row_slice(2, 2, &[0.0, v, v, 0.0].map(|x| Complex64::new(x, 0.0)));
        let a0 = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let times: Vec<f64> = (0..=40).map(|k| 0.5 * k as f64).collect();
        let set = propagate_amplitudes_with(&[1.0, 1.0], 1.0, |_| Ok(coupling.clone()), &a0, &times, 20).unwrap();
        for (t, row) in times.iter().zip(&set.amplitudes) {
            assert!((row[1].norm_sqr() - (v * t).sin().powi(2)).abs() < 1e-6);
        }
        assert!(set.population_drift() < 1e-8);
    }

    #[test]
    fn coarse_steps_trip_the_drift_bound() {
        let coupling = DMatrix::from_row_slice(2, 2, &[0.0, 3.0, 3.0, 0.0].map(|x| Complex64::new(x, 0.0)));
        let a0 = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let res = propagate_amplitudes_with(&[0.0, 5.0], 1.0, |_| Ok(coupling.clone()), &a0, &[0.0, 10.0], 5);
        assert!(matches!(res, Err(Error::Stability { .. })));
    }
}
