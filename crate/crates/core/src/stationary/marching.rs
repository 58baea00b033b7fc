//! A fixed-energy composite state travelling one way along R, built by
//! marching the close-coupled equations
//! `κ_m'' = (2M/ħ²)[(V_ε − E)κ_m + Σ_n V^eff_mn κ_n]` from an incoming channel.
//!
//! The envelope `b_m = κ_m exp(−iK(R − R_0))`, with `K` the incoming wave
//! number, is integrated by RK4, so the step only has to resolve the slow
//! channel beats and stay inside the RK4 stability limit `2Kh < 2.8`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ComplexField1D, ComplexField2D};
use crate::grid::{Grid1D, Grid2D};
use crate::spec::CompositeSpec;

use super::channels::{ChannelBasis, ChannelEnergies, EffectiveCoupling};
use super::hamiltonian::Stencil;

#[derive(Debug, Clone, PartialEq)]
pub struct DirectedState {
    pub field: ComplexField2D,
    /// `κ_m(R)` on the R grid.
    pub kappa: Vec<ComplexField1D>,
    pub energy: f64,
    /// Wave number of the incoming channel at the first node.
    pub wave_number: f64,
}

pub fn directed_state(
    spec: &CompositeSpec,
    basis: &ChannelBasis,
    energy: f64,
    r_grid: Grid1D,
    incoming: usize,
    substeps: usize,
) -> Result<DirectedState> {
    let eps = match &basis.energies {
        ChannelEnergies::Fixed(e) => e.clone(),
        _ => return Err(Error::InvalidParameter("marching needs R-independent channels".into())),
    };
    if incoming >= basis.len() || substeps == 0 {
        return Err(Error::InvalidParameter("incoming channel or substeps out of range".into()));
    }
    let veff = EffectiveCoupling::new(basis, spec, Stencil::SecondOrder)?;
    let (mass, hbar) = (spec.env_mass, spec.hbar);
    let r0 = r_grid.min;
    let margin = energy - spec.v_env.eval(r0)? - eps[incoming];
    if !(margin > 0.0) {
        return Err(Error::TurningPoint { r: r0, margin });
    }
    let big_k = (2.0 * mass * margin).sqrt() / hbar;
    let h = r_grid.spacing() / substeps as f64;
    if 2.0 * big_k * h > 2.8 {
        return Err(Error::Stability {
            drift: 2.0 * big_k * h,
            bound: 2.8,
            step: 1.4 / big_k,
        });
    }
    let k = basis.len();
    let scale = 2.0 * mass / (hbar * hbar);
    let i2k = Complex64::new(0.0, 2.0 * big_k);
    let kk = big_k * big_k;
    let deriv = |r: f64, v: &DMatrix<Complex64>, b: &[Complex64], db: &[Complex64]| -> Result<Vec<Complex64>> {
        let ve = spec.v_env.eval(r)?;
        Ok((0..k)
            .map(|m| {
                let mut acc = b[m] * (ve - energy);
                for n in 0..k {
                    acc += v[(m, n)] * b[n];
                }
                -i2k * db[m] + b[m] * kk + acc * scale
            })
            .collect())
    };
    let mut b = vec![Complex64::new(0.0, 0.0); k];
    let mut db = b.clone();
    b[incoming] = Complex64::new(1.0, 0.0);
    let mut kappa_rows = Vec::with_capacity(r_grid.n);
    let record = |r: f64, b: &[Complex64]| -> Vec<Complex64> {
        let phase = Complex64::from_polar(1.0, big_k * (r - r0));
        b.iter().map(|z| z * phase).collect()
    };
    kappa_rows.push(record(r0, &b));
    for node in 0..r_grid.n - 1 {
        for s in 0..substeps {
            let r = r_grid.point(node) + s as f64 * h;
            let v0 = veff.at(r)?;
            let vm = veff.at(r + 0.5 * h)?;
            let v1 = veff.at(r + h)?;
            let add = |x: &[Complex64], y: &[Complex64], c: f64| -> Vec<Complex64> { x.iter().zip(y).map(|(p, q)| p + q * c).collect() };
            let k1b = db.clone();
            let k1d = deriv(r, &v0, &b, &db)?;
            let b2 = add(&b, &k1b, 0.5 * h);
            let d2 = add(&db, &k1d, 0.5 * h);
            let k2d = deriv(r + 0.5 * h, &vm, &b2, &d2)?;
            let b3 = add(&b, &d2, 0.5 * h);
            let d3 = add(&db, &k2d, 0.5 * h);
            let k3d = deriv(r + 0.5 * h, &vm, &b3, &d3)?;
            let b4 = add(&b, &d3, h);
            let d4 = add(&db, &k3d, h);
            let k4d = deriv(r + h, &v1, &b4, &d4)?;
            for m in 0..k {
                b[m] += (k1b[m] + (d2[m] + d3[m]) * 2.0 + d4[m]) * (h / 6.0);
                db[m] += (k1d[m] + (k2d[m] + k3d[m]) * 2.0 + k4d[m]) * (h / 6.0);
            }
        }
        if b.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Numerical(format!("marching diverged near R = {}", r_grid.point(node + 1))));
        }
        kappa_rows.push(record(r_grid.point(node + 1), &b));
    }
    let kappa: Vec<ComplexField1D> = (0..k)
        .map(|m| ComplexField1D {
            grid: r_grid,
            data: kappa_rows.iter().map(|row| row[m]).collect(),
        })
        .collect();
    let grid = Grid2D::new(basis.x_grid, r_grid)?;
    let mut data = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (ir, row) in kappa_rows.iter().enumerate() {
        for (m, c) in row.iter().enumerate() {
            for (ix, p) in basis.states[m].data.iter().enumerate() {
                data[grid.index(ix, ir)] += c * p;
            }
        }
    }
    Ok(DirectedState {
        field: ComplexField2D::new(grid, data)?,
        kappa,
        energy,
        wave_number: big_k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{Coupling, Potential};
    use crate::stationary::system_eigenbasis;

    fn spec(coupling: Coupling) -> CompositeSpec {
        CompositeSpec {
            env_mass: 20.0,
            sys_mass: 1.0,
            hbar: 1.0,
            energy: 10.5,
            clock_energy: None,
            v_env: Potential::zero(),
            v_sys: Potential::harmonic(1.0),
            v_int: coupling,
        }
    }

    #[test]
    fn uncoupled_march_is_a_plane_wave() {
        let s = spec(Coupling::Zero);
        let basis = system_eigenbasis(&s, Grid1D::new(-8.0, 8.0, 81).unwrap(), 3, Stencil::SecondOrder, None).unwrap();
        let e0 = match &basis.energies {
            ChannelEnergies::Fixed(e) => e[0],
            _ => unreachable!(),
        };
        let rg = Grid1D::new(0.0, 4.0, 401).unwrap();
        let st = directed_state(&s, &basis, 10.0 + e0, rg, 0, 2).unwrap();
        assert!((st.wave_number - 20.0).abs() < 1e-12);
        for (i, z) in st.kappa[0].data.iter().enumerate() {
            assert!((z - Complex64::from_polar(1.0, 20.0 * rg.point(i))).norm() < 1e-12);
        }
    }

    /// Largest interior residual of the close-coupled equations with a
    /// three-point R stencil, relative to the kinetic scale `ħ²K²/2M`.
    fn stencil_residual(s: &CompositeSpec, basis: &ChannelBasis, rg: Grid1D, substeps: usize) -> f64 {
        let st = directed_state(s, basis, s.energy, rg, 0, substeps).unwrap();
        let v = EffectiveCoupling::new(basis, s, Stencil::SecondOrder).unwrap();
        let h = rg.spacing();
        let kin = s.hbar * s.hbar / (2.0 * s.env_mass);
        let mut worst: f64 = 0.0;
        for i in 1..rg.n - 1 {
            let m = v.at(rg.point(i)).unwrap();
            for a in 0..basis.len() {
                let k = &st.kappa[a].data;
                let mut r = -(k[i - 1] - k[i] * 2.0 + k[i + 1]) * (kin / (h * h)) - k[i] * s.energy;
                for b in 0..basis.len() {
                    r += m[(a, b)] * st.kappa[b].data[i];
                }
                worst = worst.max(r.norm());
            }
        }
        worst / (kin * st.wave_number * st.wave_number)
    }

    #[test]
    fn marched_state_solves_the_close_coupled_equations() {
        let pulse = Coupling::WindowedPulse {
            amplitude: 0.3,
            center: 2.0,
            width: 0.5,
            profile: Potential::Linear { slope: 1.0 },
        };
        let s = spec(pulse);
        let basis = system_eigenbasis(&s, Grid1D::new(-8.0, 8.0, 81).unwrap(), 5, Stencil::SecondOrder, None).unwrap();
        let coarse = stencil_residual(&s, &basis, Grid1D::new(0.0, 4.0, 401).unwrap(), 4);
        let fine = stencil_residual(&s, &basis, Grid1D::new(0.0, 4.0, 801).unwrap(), 2);
        assert!(coarse < 1e-2, "{coarse}");
        assert!((coarse / fine - 4.0).abs() < 0.3, "{coarse} {fine}");
        let st = directed_state(&s, &basis, s.energy, Grid1D::new(0.0, 4.0, 401).unwrap(), 0, 4).unwrap();
        assert!(st.kappa[1].data[400].norm() > 1e-3);
    }
}
