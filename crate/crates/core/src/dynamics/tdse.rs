//! Crank–Nicolson propagation of the system TDSE on the x grid with
//! Dirichlet walls, in real time and along complex time paths.

use num_complex::Complex64;

use crate::drive::DrivenInteraction;
use crate::error::{Error, Result};
use crate::field::ComplexField1D;
use crate::grid::Grid1D;
use crate::linalg::solve_tridiagonal_complex;
use crate::potential::{Coupling, Potential};
use crate::semiclassics::ComplexTimeMap;
use crate::stationary::{Stencil, SystemOperator};

/// Norm growth beyond this factor aborts a complex-time propagation.
pub const BLOW_UP_FACTOR: f64 = 1e6;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `H_S + V_I(x, t)` on a grid: the reduced system.
#[derive(Debug, Clone)]
pub struct TdseSystem {
    pub op: SystemOperator,
    pub drive: DrivenInteraction,
}

impl TdseSystem {
    pub fn new(v_sys: &Potential, mass: f64, hbar: f64, grid: Grid1D, drive: DrivenInteraction) -> Result<Self> {
        if !(mass > 0.0) || !(hbar > 0.0) {
            return Err(Error::InvalidParameter("mass and ħ must be positive".into()));
        }
        drive.coupling.validate()?;
        let op = SystemOperator::new(v_sys, &drive.coupling, mass, hbar, grid, Stencil::SecondOrder)?;
        Ok(TdseSystem { op, drive })
    }

    pub fn grid(&self) -> Grid1D {
        self.op.grid
    }

    pub fn hbar(&self) -> f64 {
        self.op.hbar
    }

    /// `(H_S + V_I(·, t)) ψ`
    pub fn apply(&self, t: f64, psi: &[Complex64]) -> Result<Vec<Complex64>> {
        Ok(self.op.apply(self.drive.r_factor(t)?, psi))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WavefunctionTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<ComplexField1D>,
    pub norms: Vec<f64>,
}

impl WavefunctionTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `max_k |‖ψ(t_k)‖ − ‖ψ(t_0)‖|`
    pub fn norm_drift(&self) -> f64 {
        self.norms.iter().map(|n| (n - self.norms[0]).abs()).fold(0.0, f64::max)
    }
}

/// One trapezoidal step `(1 + iΔ H/2ħ) ψ⁺ = (1 − iΔ H/2ħ) ψ` with complex `Δ`.
/// `shift` is a scalar added to `H`; `g` scales the coupling profile.
fn cn_step(op: &SystemOperator, g: f64, shift: Complex64, delta: Complex64, psi: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = op.grid.n;
    let m = n - 2;
    let h = op.grid.spacing();
    let c = -op.hbar * op.hbar / (2.0 * op.mass * h * h);
    let k = Complex64::new(0.0, 1.0) * delta / (2.0 * op.hbar);
    let mut sub = vec![ZERO; m];
    let mut diag = vec![ZERO; m];
    let mut sup = vec![ZERO; m];
    let mut rhs = vec![ZERO; m];
    for j in 0..m {
        let i = j + 1;
        let d = Complex64::new(-2.0 * c + op.v_sys[i] + g * op.h_x[i], 0.0) + shift;
        let left = if i > 1 { psi[i - 1] } else { ZERO };
        let right = if i + 2 < n { psi[i + 1] } else { ZERO };
        let hpsi = d * psi[i] + (left + right) * c;
        rhs[j] = psi[i] - k * hpsi;
        diag[j] = Complex64::new(1.0, 0.0) + k * d;
        sub[j] = k * c;
        sup[j] = k * c;
    }
    let inner = solve_tridiagonal_complex(&sub, &diag, &sup, &rhs)?;
    let mut out = vec![ZERO; n];
    out[1..n - 1].copy_from_slice(&inner);
    Ok(out)
}

fn check_initial(sys_grid: Grid1D, psi0: &ComplexField1D) -> Result<()> {
    if !psi0.grid.same_as(&sys_grid) {
        return Err(Error::Shape("initial state must live on the system grid".into()));
    }
    if psi0.data.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Numerical("initial state is not finite".into()));
    }
    Ok(())
}

/// Propagates `ψ0` through the sample times, taking `substeps` equal
/// Crank–Nicolson steps per interval with `V_I` at each step's midpoint time.
pub fn propagate_tdse(sys: &TdseSystem, psi0: &ComplexField1D, times: &[f64], substeps: usize) -> Result<WavefunctionTrajectory> {
    check_initial(sys.grid(), psi0)?;
    if times.is_empty() || substeps == 0 {
        return Err(Error::InvalidParameter("need at least one time and one substep".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("sample times must increase".into()));
    }
    let norm0 = psi0.norm();
    if (norm0 - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidParameter(format!("initial state must be normalized (norm {norm0})")));
    }
    let grid = sys.grid();
    let mut psi = psi0.data.clone();
    psi[0] = ZERO;
    psi[grid.n - 1] = ZERO;
    let mut states = vec![ComplexField1D { grid, data: psi.clone() }];
    let mut norms = vec![states[0].norm()];
    for w in times.windows(2) {
        let dt = (w[1] - w[0]) / substeps as f64;
        for s in 0..substeps {
            let tm = w[0] + (s as f64 + 0.5) * dt;
            psi = cn_step(&sys.op, sys.drive.r_factor(tm)?, ZERO, Complex64::new(dt, 0.0), &psi)?;
        }
        let f = ComplexField1D { grid, data: psi.clone() };
        norms.push(f.norm());
        states.push(f);
    }
    Ok(WavefunctionTrajectory {
        times: times.to_vec(),
        states,
        norms,
    })
}

/// Trajectory along a complex time path; `norms` are not conserved when the
/// path leaves the real axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTimeTrajectory {
    pub tau: Vec<Complex64>,
    pub r: Vec<f64>,
    pub states: Vec<ComplexField1D>,
    pub norms: Vec<f64>,
}

/// `(H_S + V_I(τ) + U_S(τ) − iħ ∂/∂τ) ψ = 0` along the polyline `τ(R_k)`.
/// Each segment uses `V_I` and `U_S` at the midpoint clock reading.
pub fn propagate_complex_time(
    v_sys: &Potential,
    coupling: &Coupling,
    mass: f64,
    hbar: f64,
    grid: Grid1D,
    u_s: &[f64],
    path: &ComplexTimeMap,
    psi0: &ComplexField1D,
    substeps: usize,
) -> Result<ComplexTimeTrajectory> {
    check_initial(grid, psi0)?;
    if u_s.len() != path.tau.len() {
        return Err(Error::Shape("U_S must be tabulated on the path nodes".into()));
    }
    if substeps == 0 {
        return Err(Error::InvalidParameter("need at least one substep".into()));
    }
    let op = SystemOperator::new(v_sys, coupling, mass, hbar, grid, Stencil::SecondOrder)?;
    let rs = path.r_grid.points();
    let mut psi = psi0.data.clone();
    psi[0] = ZERO;
    psi[grid.n - 1] = ZERO;
    let norm0 = psi0.norm();
    let mut states = vec![ComplexField1D { grid, data: psi.clone() }];
    let mut norms = vec![states[0].norm()];
    for k in 0..rs.len() - 1 {
        let delta = (path.tau[k + 1] - path.tau[k]) / substeps as f64;
        let dr = (rs[k + 1] - rs[k]) / substeps as f64;
        for s in 0..substeps {
            let frac = (s as f64 + 0.5) / substeps as f64;
            let r = rs[k] + (s as f64 + 0.5) * dr;
            let u = u_s[k] + frac * (u_s[k + 1] - u_s[k]);
            psi = cn_step(&op, coupling.r_factor(r)?, Complex64::new(u, 0.0), delta, &psi)?;
        }
        let f = ComplexField1D { grid, data: psi.clone() };
        let norm = f.norm();
        if !(norm <= BLOW_UP_FACTOR * norm0) {
            return Err(Error::BlowUp { norm, initial: norm0 });
        }
        norms.push(norm);
        states.push(f);
    }
    Ok(ComplexTimeTrajectory {
        tau: path.tau.clone(),
        r: rs,
        states,
        norms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drive::Schedule;
    use crate::field::{inner_product, normalize};
    use crate::stationary::system_eigenbasis;
    use crate::CompositeSpec;

    fn oscillator(grid: Grid1D) -> TdseSystem {
        TdseSystem::new(&Potential::harmonic(1.0), 1.0, 1.0, grid, DrivenInteraction::none()).unwrap()
    }

    fn ground(grid: Grid1D) -> ComplexField1D {
        let spec = CompositeSpec {
            env_mass: 1.0,
            sys_mass: 1.0,
            hbar: 1.0,
            energy: 1.0,
            clock_energy: None,
            v_env: Potential::zero(),
            v_sys: Potential::harmonic(1.0),
            v_int: Coupling::Zero,
        };
        system_eigenbasis(&spec, grid, 1, Stencil::SecondOrder, None).unwrap().states[0].clone()
    }

    #[test]
    fn stationary_state_stays_put() {
        let g = Grid1D::new(-8.0, 8.0, 161).unwrap();
        let phi = ground(g);
        let times: Vec<f64> = (0..=20).map(|k| 0.5 * k as f64).collect();
        let traj = propagate_tdse(&oscillator(g), &phi, &times, 50).unwrap();
        for s in &traj.states {
            assert!((inner_product(&phi, s).unwrap().norm() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn norm_is_conserved_with_a_drive() {
        let g = Grid1D::new(-8.0, 8.0, 161).unwrap();
        let drive = DrivenInteraction::new(
            Coupling::Bilinear { lambda: 0.3 },
            Schedule::Uniform { r0: -2.0, velocity: 0.5 },
        );
        let sys = TdseSystem::new(&Potential::harmonic(1.0), 1.0, 1.0, g, drive).unwrap();
        let packet = normalize(&ComplexField1D::from_fn(g, |x| Complex64::from_polar((-(x - 1.0).powi(2)).exp(), 0.7 * x))).unwrap();
        let times: Vec<f64> = (0..=10).map(|k| k as f64).collect();
        let traj = propagate_tdse(&sys, &packet, &times, 100).unwrap();
        assert!(traj.norm_drift() < 1e-10);
    }

    #[test]
    fn real_path_matches_real_time() {
        let g = Grid1D::new(-6.0, 6.0, 121).unwrap();
        let coupling = Coupling::Bilinear { lambda: 0.2 };
        let drive = DrivenInteraction::new(coupling.clone(), Schedule::Uniform { r0: 0.0, velocity: 2.0 });
        let sys = TdseSystem::new(&Potential::harmonic(1.0), 1.0, 1.0, g, drive).unwrap();
        let packet = normalize(&ComplexField1D::from_real(g, |x| (-(x - 0.5).powi(2)).exp())).unwrap();
        // R = 2t on [0, 4], τ real
        let rg = Grid1D::new(0.0, 4.0, 41).unwrap();
        let path = ComplexTimeMap {
            r_grid: rg,
            tau: rg.points().iter().map(|r| Complex64::new(r / 2.0, 0.0)).collect(),
        };
        let times: Vec<f64> = path.tau.iter().map(|z| z.re).collect();
        let a = propagate_tdse(&sys, &packet, &times, 4).unwrap();
        let b = propagate_complex_time(&Potential::harmonic(1.0), &coupling, 1.0, 1.0, g, &vec![0.0; 41], &path, &packet, 4).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            for (p, q) in x.data.iter().zip(&y.data) {
                assert!((p - q).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn imaginary_steps_relax_to_the_ground_state() {
        let g = Grid1D::new(-8.0, 8.0, 161).unwrap();
        let phi = ground(g);
        let packet = normalize(&ComplexField1D::from_real(g, |x| (-(x - 1.5).powi(2) / 3.0).exp())).unwrap();
        let rg = Grid1D::new(0.0, 3.0, 31).unwrap();
        let path = ComplexTimeMap {
            r_grid: rg,
            tau: rg.points().iter().map(|r| Complex64::new(0.0, -r)).collect(),
        };
        let traj = propagate_complex_time(&Potential::harmonic(1.0), &Coupling::Zero, 1.0, 1.0, g, &vec![0.0; 31], &path, &packet, 4).unwrap();
        let mut last_overlap = 0.0;
        for w in traj.norms.windows(2) {
            assert!(w[1] < w[0]);
        }
        for s in &traj.states {
            let o = inner_product(&phi, s).unwrap().norm() / s.norm();
            assert!(o >= last_overlap - 1e-14);
            last_overlap = o;
        }
        assert!(last_overlap > 0.999);
    }

    #[test]
    fn blow_up_is_reported() {
        let g = Grid1D::new(-8.0, 8.0, 81).unwrap();
        let packet = normalize(&ComplexField1D::from_real(g, |x| (-x * x).exp())).unwrap();
        let rg = Grid1D::new(0.0, 40.0, 41).unwrap();
        // backward imaginary time amplifies every component
        let path = ComplexTimeMap {
            r_grid: rg,
            tau: rg.points().iter().map(|r| Complex64::new(0.0, *r)).collect(),
        };
        let res = propagate_complex_time(&Potential::harmonic(1.0), &Coupling::Zero, 1.0, 1.0, g, &vec![0.0; 41], &path, &packet, 1);
        assert!(matches!(res, Err(Error::BlowUp { .. })));
    }
}
