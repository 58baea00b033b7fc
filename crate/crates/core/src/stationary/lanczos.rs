//! Eigenpairs of a real symmetric operator nearest a target energy:
//! shift-invert Lanczos with full reorthogonalization, MINRES inner solves,
//! Rayleigh–Ritz against the operator itself, explicit restarts with locking.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ComplexField2D;
use crate::linalg::symmetric_eigen;

use super::hamiltonian::Hamiltonian2D;

/// A real symmetric linear operator.
pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, v: &[f64], out: &mut [f64]);
}

impl SymmetricOperator for Hamiltonian2D {
    fn dim(&self) -> usize {
        self.interior_dim()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        self.apply_interior(v, out)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Result of an inner MINRES solve.
#[derive(Debug, Clone, Copy)]
pub struct MinresInfo {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solves `(A − σ) x = b` for symmetric, possibly indefinite `A − σ`.
pub fn minres(op: &dyn SymmetricOperator, shift: f64, b: &[f64], tol: f64, max_iter: usize) -> (Vec<f64>, MinresInfo) {
    let n = b.len();
    let mut x = vec![0.0; n];
    let beta1 = norm(b);
    if beta1 == 0.0 {
        return (
            x,
            MinresInfo {
                iterations: 0,
                relative_residual: 0.0,
            },
        );
    }
    let mut r1 = b.to_vec();
    let mut r2 = b.to_vec();
    let mut y = b.to_vec();
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln) = (0.0, 0.0);
    let mut phibar = beta1;
    let (mut cs, mut sn) = (-1.0, 0.0);
    let mut it = 0;
    while it < max_iter {
        it += 1;
        let s = 1.0 / beta;
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = s * yi;
        }
        op.apply(&v, &mut y);
        axpy(-shift, &v, &mut y);
        if it >= 2 {
            axpy(-beta / oldb, &r1, &mut y);
        }
        let alfa = dot(&v, &y);
        axpy(-alfa / beta, &r2, &mut y);
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        oldb = beta;
        beta = norm(&y);
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
        }
        axpy(phi, &w, &mut x);
        if phibar < tol * beta1 || beta == 0.0 {
            break;
        }
    }
    (
        x,
        MinresInfo {
            iterations: it,
            relative_residual: phibar / beta1,
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenOptions {
    /// Converged when `‖(H − E)Ψ‖ < tol · |E|`.
    pub tol: f64,
    pub krylov_dim: usize,
    pub max_cycles: usize,
    pub inner_tol: f64,
    pub max_inner: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-8,
            krylov_dim: 40,
            max_cycles: 40,
            inner_tol: 1e-13,
            max_inner: 5_000,
        }
    }
}

/// A converged eigenpair of the composite.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub energy: f64,
    /// Unit trapezoid norm, real, largest component positive.
    pub field: ComplexField2D,
    /// `‖(H − E)Ψ‖`
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct RitzPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
}

fn orthogonalize(v: &mut [f64], against: &[&[f64]]) {
    for _ in 0..2 {
        for u in against {
            let c = dot(u, v);
            axpy(-c, u, v);
        }
    }
}

fn residual_of(op: &dyn SymmetricOperator, value: f64, vector: &[f64], scratch: &mut [f64]) -> f64 {
    op.apply(vector, scratch);
    scratch.iter().zip(vector).map(|(h, y)| (h - value * y).powi(2)).sum::<f64>().sqrt()
}

/// `k` eigenpairs of `op` nearest `target` (Euclidean unit vectors), sorted by energy.
pub fn lanczos_nearest(
    op: &dyn SymmetricOperator,
    target: f64,
    k: usize,
    seed: u64,
    opts: &EigenOptions,
) -> Result<Vec<RitzPair>> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("requested {k} eigenpairs of a {n}-dimensional operator")));
    }
    if !target.is_finite() {
        return Err(Error::InvalidParameter("target energy must be finite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random_vector = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect() };
    let m_max = opts.krylov_dim.max(k + 8).min(n);
    let mut scratch = vec![0.0; n];
    let mut locked: Vec<RitzPair> = Vec::new();
    let mut pending: Option<Vec<f64>> = None;
    let mut last_residuals = Vec::new();
    let tol_for = |value: f64| opts.tol * value.abs().max(f64::MIN_POSITIVE);

    for _cycle in 0..opts.max_cycles {
        let verifying = pending.is_none();
        let mut start = pending.take().unwrap_or_else(|| random_vector(&mut rng));
        let locked_refs: Vec<&[f64]> = locked.iter().map(|p| p.vector.as_slice()).collect();
        orthogonalize(&mut start, &locked_refs);
        let s = norm(&start);
        if s < 1e-300 {
            start = random_vector(&mut rng);
            orthogonalize(&mut start, &locked_refs);
        }
        let s = norm(&start);
        start.iter_mut().for_each(|v| *v /= s);

        let mut basis: Vec<Vec<f64>> = vec![start];
        let m_cycle = m_max.min(n - locked.len());
        while basis.len() < m_cycle {
            let (mut w, _) = minres(op, target, basis.last().unwrap(), opts.inner_tol, opts.max_inner);
            let before = norm(&w);
            let mut refs: Vec<&[f64]> = locked_refs.clone();
            refs.extend(basis.iter().map(|b| b.as_slice()));
            orthogonalize(&mut w, &refs);
            let after = norm(&w);
            if !(after > 1e-10 * before) {
                break;
            }
            w.iter_mut().for_each(|v| *v /= after);
            basis.push(w);
        }

        // Harmonic Rayleigh–Ritz about the target: with R = (H − σ)V solve
        // VᵀR s = μ RᵀR s; the largest |μ| are nearest σ and, unlike plain
        // Ritz values, cannot be spurious for interior targets.
        let m = basis.len();
        let shifted: Vec<Vec<f64>> = basis
            .iter()
            .map(|b| {
                let mut out = vec![0.0; n];
                op.apply(b, &mut out);
                axpy(-target, b, &mut out);
                out
            })
            .collect();
        let mut a1 = DMatrix::<f64>::zeros(m, m);
        let mut a2 = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let v = 0.5 * (dot(&basis[i], &shifted[j]) + dot(&basis[j], &shifted[i]));
                a1[(i, j)] = v;
                a1[(j, i)] = v;
                let w = dot(&shifted[i], &shifted[j]);
                a2[(i, j)] = w;
                a2[(j, i)] = w;
            }
        }
        let chol = a2
            .cholesky()
            .ok_or_else(|| Error::Numerical("target coincides with an eigenvalue to working precision".into()))?;
        let l = chol.l();
        let linv = l
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular harmonic projection".into()))?;
        let c = &linv * &a1 * linv.transpose();
        let c = (&c + c.transpose()) * 0.5;
        let (mus, us) = symmetric_eigen(c);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| mus[b].abs().total_cmp(&mus[a].abs()));
        let coeffs = linv.transpose() * us;
        let mut ritz: Vec<RitzPair> = order
            .iter()
            .take(k)
            .map(|&col| {
                let mut y = vec![0.0; n];
                for (i, b) in basis.iter().enumerate() {
                    axpy(coeffs[(i, col)], b, &mut y);
                }
                let ny = norm(&y);
                y.iter_mut().for_each(|v| *v /= ny);
                op.apply(&y, &mut scratch);
                let value = dot(&y, &scratch);
                let residual = residual_of(op, value, &y, &mut scratch);
                RitzPair {
                    value,
                    vector: y,
                    residual,
                }
            })
            .collect();

        // Merge with the locked set and keep the k nearest.
        let before: Vec<f64> = locked.iter().map(|p| p.value).collect();
        let mut pool: Vec<(bool, RitzPair)> = locked.drain(..).map(|p| (true, p)).collect();
        pool.extend(ritz.drain(..).map(|p| (false, p)));
        pool.sort_by(|a, b| (a.1.value - target).abs().total_cmp(&(b.1.value - target).abs()));
        pool.truncate(k);
        let mut unconverged = Vec::new();
        for (was_locked, p) in pool {
            if was_locked || p.residual < tol_for(p.value) {
                locked.push(p);
            } else {
                unconverged.push(p);
            }
        }
        last_residuals = unconverged.iter().map(|p| p.residual).collect();
        if !unconverged.is_empty() {
            let mut next = vec![0.0; n];
            for p in &unconverged {
                axpy(1.0, &p.vector, &mut next);
            }
            pending = Some(next);
            continue;
        }
        let after: Vec<f64> = locked.iter().map(|p| p.value).collect();
        if verifying && before.len() == k && before == after {
            locked.sort_by(|a, b| a.value.total_cmp(&b.value));
            return Ok(locked);
        }
    }
    Err(Error::Convergence {
        what: format!("{k} eigenpairs near {target}"),
        iterations: opts.max_cycles,
        last: last_residuals.iter().cloned().fold(0.0, f64::max),
    })
}

/// `k` eigenpairs of the composite nearest `target`, deterministic for a fixed seed.
pub fn solve_eigenpairs(h: &Hamiltonian2D, target: f64, k: usize, seed: u64) -> Result<Vec<EigenPair>> {
    solve_eigenpairs_with(h, target, k, seed, &EigenOptions::default())
}

pub fn solve_eigenpairs_with(
    h: &Hamiltonian2D,
    target: f64,
    k: usize,
    seed: u64,
    opts: &EigenOptions,
) -> Result<Vec<EigenPair>> {
    let pairs = lanczos_nearest(h, target, k, seed, opts)?;
    pairs
        .into_iter()
        .map(|p| {
            let mut vector = p.vector;
            let (imax, _) = vector
                .iter()
                .enumerate()
                .fold((0, 0.0), |(bi, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) });
            if vector[imax] < 0.0 {
                vector.iter_mut().for_each(|v| *v = -*v);
            }
            let field = ComplexField2D::new(h.grid, h.from_interior(&vector, None))?;
            let nrm = field.norm();
            let field = field.scaled(Complex64::new(1.0 / nrm, 0.0));
            let residual = h.residual(&field, p.value)?;
            Ok(EigenPair {
                energy: p.value,
                field,
                residual,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Diag(Vec<f64>);
    impl SymmetricOperator for Diag {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn apply(&self, v: &[f64], out: &mut [f64]) {
            for i in 0..v.len() {
                out[i] = self.0[i] * v[i];
            }
        }
    }

    struct Laplace1D(usize);
    impl SymmetricOperator for Laplace1D {
        fn dim(&self) -> usize {
            self.0
        }
        fn apply(&self, v: &[f64], out: &mut [f64]) {
            let n = self.0;
            for i in 0..n {
                let mut a = 2.0 * v[i];
                if i > 0 {
                    a -= v[i - 1];
                }
                if i + 1 < n {
                    a -= v[i + 1];
                }
                out[i] = a;
            }
        }
    }

    #[test]
    fn minres_solves_indefinite_system() {
        let op = Laplace1D(50);
        let b: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let (x, info) = minres(&op, 1.3, &b, 1e-12, 1000);
        let mut ax = vec![0.0; 50];
        op.apply(&x, &mut ax);
        axpy(-1.3, &x, &mut ax);
        let err: f64 = ax.iter().zip(&b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err} {info:?}");
    }

    #[test]
    fn nearest_interior_eigenvalues() {
        let n = 200;
        let op = Laplace1D(n);
        let exact: Vec<f64> = (1..=n)
            .map(|j| 2.0 - 2.0 * (std::f64::consts::PI * j as f64 / (n + 1) as f64).cos())
            .collect();
        let pairs = lanczos_nearest(&op, 0.93, 4, 3, &EigenOptions::default()).unwrap();
        let mut want: Vec<f64> = exact.clone();
        want.sort_by(|a, b| (a - 0.93).abs().total_cmp(&(b - 0.93).abs()));
        let mut want: Vec<f64> = want.into_iter().take(4).collect();
        want.sort_by(f64::total_cmp);
        for (p, w) in pairs.iter().zip(&want) {
            assert!((p.value - w).abs() < 1e-10);
            assert!(p.residual < 1e-8 * p.value.abs());
        }
    }

    #[test]
    fn degenerate_eigenvalues_found() {
        let mut d: Vec<f64> = (0..100).map(|i| 1.0 + i as f64).collect();
        d[1] = 1.0;
        d[2] = 1.0;
        let pairs = lanczos_nearest(&Diag(d), 0.0, 3, 11, &EigenOptions::default()).unwrap();
        for p in &pairs {
            assert!((p.value - 1.0).abs() < 1e-12);
        }
        // the three vectors span the degenerate subspace
        let trace: f64 = pairs.iter().map(|p| p.vector[0].powi(2) + p.vector[1].powi(2) + p.vector[2].powi(2)).sum();
        assert!((trace - 3.0).abs() < 1e-10);
    }

    #[test]
    fn deterministic_for_seed() {
        let op = Laplace1D(120);
        let a = lanczos_nearest(&op, 0.5, 3, 9, &EigenOptions::default()).unwrap();
        let b = lanczos_nearest(&op, 0.5, 3, 9, &EigenOptions::default()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.value.to_bits(), y.value.to_bits());
            assert_eq!(x.vector, y.vector);
        }
    }
}
