//! Acceptance criteria 1–10. Each prints one PASS/FAIL line; the test fails
//! if any criterion does.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use emergent_time::classical::{endpoint_momentum_check, jacobi_path_minimize, path_momenta, JacobiOptions, Metric};
use emergent_time::drive::{DrivenInteraction, Schedule};
use emergent_time::dynamics::{emergence_scan, propagate_tdse, EmergenceScan, TdseSystem};
use emergent_time::field::normalize;
use emergent_time::semiclassics::{perfect_clock, quantum_time};
use emergent_time::stationary::*;
use emergent_time::*;
use emtime::{run_text, Format, RunOptions, ScenarioConfig, ScenarioKind};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn spec(v_env: Potential, v_sys: Potential, v_int: Coupling) -> CompositeSpec {
    CompositeSpec {
        env_mass: 1.0,
        sys_mass: 1.0,
        hbar: 1.0,
        energy: 1.0,
        clock_energy: None,
        v_env,
        v_sys,
        v_int,
    }
}

fn square(n: usize, span: f64) -> Grid2D {
    Grid2D::new(Grid1D::new(-span, span, n).unwrap(), Grid1D::new(-span, span, n).unwrap()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn scenario_summary(kind: ScenarioKind) -> emtime::Outputs {
    let text = serde_json::to_string(&ScenarioConfig::builtin(kind).to_value()).unwrap();
    let opts = RunOptions {
        out: Some(scratch(kind.name())),
        ..Default::default()
    };
    let outcome = run_text(&text, &opts);
    assert_eq!(outcome.exit_code(), 0, "{:?}", outcome.error);
    outcome.outputs.unwrap()
}

fn separable_eigenpairs() -> Vec<EigenPair> {
    let h = assemble_tise(&spec(Potential::harmonic(1.0), Potential::harmonic(2.0), Coupling::Zero), square(128, 6.0), Stencil::FourthOrder).unwrap();
    solve_eigenpairs(&h, 0.0, 6, 1).unwrap()
}

fn criterion_1(separable: &[EigenPair]) -> Verdict {
    let coupled = spec(Potential::harmonic(1.0), Potential::harmonic(2.0), Coupling::Bilinear { lambda: 0.4 });
    let g = square(48, 6.0);
    let h = assemble_tise(&coupled, g, Stencil::SecondOrder).unwrap();
    let pairs = solve_eigenpairs(&h, 0.0, 4, 2).unwrap();
    let sets: [(&CompositeSpec, &[EigenPair]); 2] = [
        (&coupled, &pairs),
        (&spec(Potential::harmonic(1.0), Potential::harmonic(2.0), Coupling::Zero), separable),
    ];
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (s, list) in sets {
        for p in list {
            let st = factorize_prescribed(&p.field, &marginal_amplitude(&p.field), s, Stencil::SecondOrder).unwrap();
            worst = worst.max(st.product_identity_error(&p.field));
            count += 1;
        }
    }
    verdict(worst < 1e-12, format!("max |χψ − Ψ| = {worst:.2e} over {count} eigenstates"))
}

fn criterion_2(pairs: &[EigenPair]) -> Verdict {
    let w2 = 2f64.sqrt();
    let mut exact: Vec<f64> = (0..4).flat_map(|n| (0..4).map(move |j| (n as f64 + 0.5) + w2 * (j as f64 + 0.5))).collect();
    exact.sort_by(f64::total_cmp);
    let rel = pairs.iter().zip(&exact).map(|(p, e)| ((p.energy - e) / e).abs()).fold(0.0, f64::max);
    let res = pairs.iter().map(|p| p.residual / p.energy.abs()).fold(0.0, f64::max);
    verdict(rel < 1e-4 && res < 1e-8, format!("max relative error {rel:.2e}, max ‖(H−E)Ψ‖/|E| {res:.2e} (128×128, 6 states)"))
}

fn criterion_3() -> Verdict {
    let g = Grid1D::new(0.0, 10.0, 1001).unwrap();
    let pc = perfect_clock(2.0, 3.0, g, 1.0).unwrap();
    let tau = quantum_time(&pc.chi, 2.0, 1.0).unwrap();
    let plane = tau
        .tau
        .iter()
        .zip(g.points())
        .skip(1)
        .map(|(z, r)| (z - 2.0 * r / 3.0).norm() / (2.0 * r / 3.0))
        .fold(0.0, f64::max);
    let gg = Grid1D::new(1.0, 2.0, 1001).unwrap();
    let chi = ComplexField1D::from_real(gg, |r| (-0.5 * r * r).exp());
    let gt = quantum_time(&chi, 1.0, 1.0).unwrap();
    let gauss = gt
        .tau
        .iter()
        .zip(gg.points())
        .map(|(z, r)| z.re.abs().max((z.im + r.ln()).abs()))
        .fold(0.0, f64::max);
    verdict(plane < 1e-10 && gauss < 1e-6, format!("plane wave rel error {plane:.2e}, Gaussian |τ + i ln R| ≤ {gauss:.2e}"))
}

fn criterion_4() -> Verdict {
    let s = CompositeSpec {
        v_env: Potential::zero(),
        ..spec(
            Potential::zero(),
            Potential::harmonic(1.0),
            Coupling::WindowedPulse { amplitude: 0.2, center: 5.0, width: 1.0, profile: Potential::Linear { slope: 1.0 } },
        )
    };
    let scan = EmergenceScan {
        masses: vec![20.0, 50.0, 100.0, 200.0, 600.0],
        velocity: 1.0,
        x_grid: Grid1D::new(-8.0, 8.0, 161).unwrap(),
        r_grid: Grid1D::new(0.0, 10.0, 2001).unwrap(),
        channels: 8,
        substeps: 4,
    };
    let rep = emergence_scan(&s, &scan).unwrap();
    let ok = rep.points.iter().all(|p| p.error.is_none());
    let residuals: Vec<String> = rep.points.iter().map(|p| format!("{:.1e}", p.residual)).collect();
    verdict(
        ok && (-1.3..=-0.7).contains(&rep.slope) && rep.monotone,
        format!("slope {:.3} over Mv² 20…600, residuals [{}], monotone {}", rep.slope, residuals.join(", "), rep.monotone),
    )
}

fn criterion_5() -> Verdict {
    let out = scenario_summary(ScenarioKind::HarmonicClockTwoLevel);
    let dev = out.summary_f64("route_max_deviation").unwrap();
    let defect = out.summary_f64("route_initial_defect").unwrap();
    let rabi = out.summary_f64("rabi_max_error").unwrap();
    verdict(
        dev < 1e-3 && defect < 1e-6 && rabi < 1e-6,
        format!("two-route deviation {dev:.2e}, basis defect {defect:.2e}, Rabi error {rabi:.2e}"),
    )
}

fn criterion_6() -> Verdict {
    let out = scenario_summary(ScenarioKind::ClassicalEmergence);
    let slope = out.summary_f64("slope").unwrap();
    let monotone = out.summary["monotone"].as_bool().unwrap();
    let shift = out.summary_f64("energy_shift_relative_error").unwrap();
    verdict(
        (-1.5..=-0.5).contains(&slope) && monotone && shift.abs() < 0.1,
        format!("deviation slope {slope:.3}, monotone {monotone}, energy shift off by {:.1}%", 100.0 * shift.abs()),
    )
}

fn criterion_7() -> Verdict {
    let free = spec(Potential::zero(), Potential::zero(), Coupling::Zero);
    let opts = JacobiOptions {
        seed: Some((1..16).map(|j| vec![j as f64 / 16.0 + 0.05 * (j as f64).sin(), j as f64 / 16.0]).collect()),
        ..Default::default()
    };
    let path = jacobi_path_minimize(&free, &Metric::unit(2), &[0.0, 0.0], &[1.0, 1.0], 0.5, 16, &opts).unwrap();
    let collinear = path.points.iter().map(|p| (p[0] - p[1]).abs()).fold(0.0, f64::max);

    let osc = CompositeSpec {
        energy: 2.0,
        ..spec(Potential::harmonic(1.0), Potential::harmonic(1.0), Coupling::Bilinear { lambda: 0.1 })
    };
    let tight = JacobiOptions { tol: 1e-12, ..Default::default() };
    let (a, b) = ([0.1, -0.2], [0.6, 0.3]);
    let coarse = endpoint_momentum_check(&osc, &Metric::unit(2), &a, &b, 2.0, 24, 2e-2, &tight).unwrap();
    let fine = endpoint_momentum_check(&osc, &Metric::unit(2), &a, &b, 2.0, 24, 1e-2, &tight).unwrap();
    let order = coarse.end_error / fine.end_error;
    let geo = jacobi_path_minimize(&osc, &Metric::unit(2), &a, &b, 2.0, 32, &Default::default()).unwrap();
    let (_, res) = path_momenta(&osc, &geo).unwrap();
    let constraint = res.iter().fold(0.0f64, |m, r| m.max(r.abs())) / 2.0;
    verdict(
        collinear < 1e-6 && (3.0..=5.0).contains(&order) && constraint < 1e-8,
        format!("collinearity {collinear:.1e}, endpoint error ratio {order:.2} on probe halving, constraint residual {constraint:.1e}·E"),
    )
}

fn criterion_8() -> Verdict {
    let g = Grid1D::new(-8.0, 8.0, 161).unwrap();
    let drive = DrivenInteraction::new(
        Coupling::WindowedPulse { amplitude: 0.5, center: 5.0, width: 1.0, profile: Potential::Linear { slope: 1.0 } },
        Schedule::Uniform { r0: 0.0, velocity: 1.0 },
    );
    let sys = TdseSystem::new(&Potential::harmonic(1.0), 1.0, 1.0, g, drive).unwrap();
    let psi0 = normalize(&ComplexField1D::from_fn(g, |x| Complex64::from_polar((-(x - 1.0).powi(2)).exp(), 0.4 * x))).unwrap();
    let times: Vec<f64> = (0..=10).map(|k| k as f64).collect();
    let drift = propagate_tdse(&sys, &psi0, &times, 100).unwrap().norm_drift();

    let end = |n: usize| propagate_tdse(&sys, &psi0, &[0.0, 10.0], n).unwrap().states[1].clone();
    let diff = |a: &ComplexField1D, b: &ComplexField1D| a.data.iter().zip(&b.data).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
    let reference = end(3200);
    let ratio = diff(&end(200), &reference) / diff(&end(400), &reference);

    let fg = Grid1D::new(-40.0, 40.0, 6401).unwrap();
    let free = TdseSystem::new(&Potential::zero(), 1.0, 1.0, fg, DrivenInteraction::none()).unwrap();
    let packet = normalize(&ComplexField1D::from_real(fg, |x| (-x * x / 4.0).exp())).unwrap();
    let ts = [0.0, 1.0, 2.0, 3.0];
    let traj = propagate_tdse(&free, &packet, &ts, 400).unwrap();
    let w = fg.weights();
    let disp = ts
        .iter()
        .zip(&traj.states)
        .map(|(t, s)| {
            let m2: f64 = fg.points().iter().zip(&s.data).zip(&w).map(|((x, z), wi)| x * x * z.norm_sqr() * wi).sum();
            let exact = 1.0 + (t / 2.0).powi(2);
            ((m2 - exact) / exact).abs()
        })
        .fold(0.0, f64::max);
    verdict(
        drift < 1e-10 && disp < 1e-4 && (3.5..=4.5).contains(&ratio),
        format!("norm drift {drift:.1e} over 10³ steps, dispersion error {disp:.1e}, step-halving ratio {ratio:.3}"),
    )
}

fn criterion_9() -> Verdict {
    let s = spec(Potential::harmonic(1.0), Potential::harmonic(1.0), Coupling::Bilinear { lambda: 0.1 });
    let g = square(64, 7.0);
    let h = assemble_tise(&s, g, Stencil::SecondOrder).unwrap();
    let ground = &solve_eigenpairs(&h, 0.0, 1, 8).unwrap()[0];
    let basis = system_eigenbasis(&s, g.x, 8, Stencil::SecondOrder, None).unwrap();
    let run = |k: usize| {
        let d = channel_project(&ground.field, &basis.truncated(k).unwrap()).unwrap();
        close_coupled_residual(&d, &s, ground.energy, Stencil::SecondOrder).unwrap()
    };
    let (two, eight) = (run(2), run(8));
    let drop = two.aggregate / eight.aggregate;
    let herm = two.hermiticity.max(eight.hermiticity);
    verdict(drop >= 10.0 && herm < 1e-10, format!("residual drop 2→8 channels ×{drop:.1}, Hermiticity defect {herm:.1e}"))
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.extension().and_then(|s| s.to_str()) == Some("csv") {
            out.insert(p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap());
        }
    }
    out
}

fn criterion_10() -> Verdict {
    let mut files = 0;
    let mut mismatched = Vec::new();
    for kind in ScenarioKind::ALL {
        let text = serde_json::to_string(&ScenarioConfig::builtin(kind).to_value()).unwrap();
        let dirs: Vec<PathBuf> = [Some(1), None]
            .iter()
            .enumerate()
            .map(|(i, jobs)| {
                let dir = scratch(&format!("determinism-{}-{i}", kind.name()));
                let opts = RunOptions {
                    jobs: *jobs,
                    out: Some(dir.clone()),
                    format: Format::Csv,
                    seed: Some(7),
                };
                assert_eq!(run_text(&text, &opts).exit_code(), 0);
                dir
            })
            .collect();
        let (a, b) = (csv_files(&dirs[0]), csv_files(&dirs[1]));
        files += a.len();
        if a.is_empty() || a != b {
            mismatched.push(kind.name());
        }
    }
    verdict(
        mismatched.is_empty(),
        format!("{files} CSV files over 6 scenarios, byte-identical across runs with 1 and all workers; mismatched: {mismatched:?}"),
    )
}

#[test]
fn acceptance() {
    let separable = separable_eigenpairs();
    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict + '_>)> = vec![
        ("factorization identity", Box::new(|| criterion_1(&separable))),
        ("eigen quality", Box::new(|| criterion_2(&separable))),
        ("perfect clock", Box::new(criterion_3)),
        ("emergence exponent", Box::new(criterion_4)),
        ("two-route equivalence", Box::new(criterion_5)),
        ("classical emergence", Box::new(criterion_6)),
        ("Jacobi paths", Box::new(criterion_7)),
        ("propagator contracts", Box::new(criterion_8)),
        ("close-coupled residuals", Box::new(criterion_9)),
        ("determinism", Box::new(criterion_10)),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} [{tag}] {name}: {} ({:.1} s)", i + 1, v.detail, start.elapsed().as_secs_f64());
        if !v.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
