use emergent_time::classical::{clock_time_map, ClockModel};
use emergent_time::semiclassics::{polar_time, polar_time_first_order, qenviron_residual, quantum_time, wkb_environment};
use emergent_time::{Grid1D, Potential};

fn harmonic_clock(energy: f64) -> ClockModel {
    ClockModel::new(Potential::harmonic(1.0), 1.0, energy, Grid1D::new(-1.0, 1.0, 801).unwrap()).unwrap()
}

#[test]
fn imaginary_time_fades_with_clock_energy() {
    let energies = [2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0];
    let mut last = f64::INFINITY;
    for e in energies {
        let clock = harmonic_clock(e);
        let w = wkb_environment(&clock, 1.0).unwrap();
        let ratio = quantum_time(&w.chi(), 1.0, 1.0).unwrap().imaginary_ratio();
        assert!(ratio < last, "E_c = {e}: {ratio} after {last}");
        last = ratio;
    }
    assert!(last < 1e-3);
}

#[test]
fn imaginary_polar_time_matches_first_order() {
    for e in [5.0, 20.0, 100.0] {
        let clock = harmonic_clock(e);
        let w = wkb_environment(&clock, 1.0).unwrap();
        let tau = polar_time(w.r_grid, &w.amplitude, &w.action, 1.0, 1.0).unwrap();
        let first = polar_time_first_order(w.r_grid, &w.amplitude, &w.momenta, 1.0, 1.0);
        // Im τ vanishes by symmetry at R = 1 for this clock; compare at the midpoint
        let i = 400;
        let ratio = tau.tau[i].im / first[i];
        assert!(ratio > 0.5 && ratio < 2.0, "E_c = {e}: {} vs {}", tau.tau[i].im, first[i]);
    }
}

#[test]
fn real_quantum_time_approaches_classical_time() {
    let mut checked = 0;
    for e in [50.0, 200.0, 1000.0] {
        let clock = harmonic_clock(e);
        let w = wkb_environment(&clock, 1.0).unwrap();
        let q = qenviron_residual(&w, &clock).unwrap();
        if q.iter().cloned().fold(0.0, f64::max) >= 1e-3 {
            continue;
        }
        let tau = quantum_time(&w.chi(), 1.0, 1.0).unwrap();
        let map = clock_time_map(&clock).unwrap();
        for (z, t) in tau.tau.iter().zip(&map.times).skip(1) {
            assert!((z.re - t).abs() < 0.01 * t, "E_c = {e}: {} vs {t}", z.re);
        }
        checked += 1;
    }
    assert!(checked >= 2);
}
