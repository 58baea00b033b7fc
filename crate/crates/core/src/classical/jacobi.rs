//! Jacobi's form of the least-action principle: paths at fixed energy `E`
//! that make `W = ∫ f(q) ds` stationary, with `f = √(2(E − V))` and
//! `ds² = dq·A(q)·dq`.
//!
//! The discrete action is `W = Σ_k f(q̄_k) √(Δ_k·A(q̄_k)·Δ_k)` with `q̄_k` the
//! segment midpoint.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::spec::CompositeSpec;

/// A potential `V(q)` on configuration space.
pub trait ScalarField: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, q: &[f64]) -> Result<f64>;
    fn gradient(&self, q: &[f64]) -> Result<Vec<f64>>;
}

/// The composite potential with `q = [R, x]`.
impl ScalarField for CompositeSpec {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, q: &[f64]) -> Result<f64> {
        self.potential(q[1], q[0])
    }

    fn gradient(&self, q: &[f64]) -> Result<Vec<f64>> {
        let (r, x) = (q[0], q[1]);
        Ok(vec![
            self.v_env.derivative(r)? + self.v_int.d_dr(x, r)?,
            self.v_sys.derivative(x)? + self.v_int.d_dx(x, r)?,
        ])
    }
}

/// Kinetic metric `a_ik(q)`; `B = A⁻¹` appears in the energy constraint.
#[derive(Clone)]
pub enum Metric {
    /// Constant diagonal masses.
    Diagonal(Vec<f64>),
    /// Position-dependent symmetric positive-definite matrix.
    Field(Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>),
}

impl fmt::Debug for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Diagonal(m) => f.debug_tuple("Diagonal").field(m).finish(),
            Metric::Field(_) => f.write_str("Field(..)"),
        }
    }
}

impl Metric {
    pub fn unit(dim: usize) -> Self {
        Metric::Diagonal(vec![1.0; dim])
    }

    fn apply(&self, q: &[f64], v: &[f64]) -> Vec<f64> {
        match self {
            Metric::Diagonal(m) => m.iter().zip(v).map(|(a, b)| a * b).collect(),
            Metric::Field(a) => (a(q) * DVector::from_column_slice(v)).iter().cloned().collect(),
        }
    }

    /// `v·B·v` with `B = A⁻¹`.
    fn inverse_quadratic(&self, q: &[f64], v: &[f64]) -> Result<f64> {
        match self {
            Metric::Diagonal(m) => Ok(m.iter().zip(v).map(|(a, b)| b * b / a).sum()),
            Metric::Field(a) => {
                let chol = a(q)
                    .cholesky()
                    .ok_or_else(|| Error::InvalidParameter("metric is not positive definite".into()))?;
                let x = chol.solve(&DVector::from_column_slice(v));
                Ok(x.iter().zip(v).map(|(a, b)| a * b).sum())
            }
        }
    }

    /// `Δ·∂_i A(q)·Δ` for each coordinate `i` (zero for constant metrics).
    fn quadratic_gradient(&self, q: &[f64], d: &[f64]) -> Vec<f64> {
        match self {
            Metric::Diagonal(_) => vec![0.0; q.len()],
            Metric::Field(a) => {
                let dv = DVector::from_column_slice(d);
                (0..q.len())
                    .map(|i| {
                        let h = 1e-6 * (1.0 + q[i].abs());
                        let mut qp = q.to_vec();
                        let mut qm = q.to_vec();
                        qp[i] += h;
                        qm[i] -= h;
                        let da = (a(&qp) - a(&qm)) / (2.0 * h);
                        dv.dot(&(da * &dv))
                    })
                    .collect()
            }
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if let Metric::Diagonal(m) = self {
            if m.len() != dim {
                return Err(Error::Shape(format!("metric has {} entries for dimension {dim}", m.len())));
            }
            if m.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return Err(Error::InvalidParameter("diagonal metric entries must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct JacobiOptions {
    /// Stop when `max |∂W/∂q_interior| < tol · W`.
    pub tol: f64,
    pub max_cg_iterations: usize,
    pub max_newton_iterations: usize,
    /// Interior nodes to start from, instead of the straight line.
    pub seed: Option<Vec<Vec<f64>>>,
}

impl Default for JacobiOptions {
    fn default() -> Self {
        JacobiOptions {
            tol: 1e-8,
            max_cg_iterations: 20_000,
            max_newton_iterations: 60,
            seed: None,
        }
    }
}

/// Stationary discrete path with fixed endpoints.
#[derive(Debug, Clone)]
pub struct DiscretePath {
    pub points: Vec<Vec<f64>>,
    pub energy: f64,
    pub metric: Metric,
    pub action: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    /// `W` after every accepted step; non-increasing up to rounding.
    pub action_history: Vec<f64>,
}

impl DiscretePath {
    pub fn segments(&self) -> usize {
        self.points.len() - 1
    }

    pub fn start(&self) -> &[f64] {
        &self.points[0]
    }

    pub fn end(&self) -> &[f64] {
        &self.points[self.points.len() - 1]
    }
}

struct Segment {
    f: f64,
    grad_f: Vec<f64>,
    len: f64,
    a_delta: Vec<f64>,
    metric_grad: Vec<f64>,
}

struct Problem<'a> {
    field: &'a dyn ScalarField,
    metric: &'a Metric,
    energy: f64,
    dim: usize,
}

impl Problem<'_> {
    fn f_at(&self, m: &[f64]) -> Result<f64> {
        let deficit = self.field.value(m)? - self.energy;
        if deficit >= 0.0 {
            return Err(Error::ForbiddenRegion { q: m.to_vec(), deficit });
        }
        Ok((-2.0 * deficit).sqrt())
    }

    fn segment(&self, k: usize, a: &[f64], b: &[f64], with_gradient: bool) -> Result<Segment> {
        let m: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
        let f = self.f_at(&m)?;
        let a_delta = self.metric.apply(&m, &d);
        let len2: f64 = a_delta.iter().zip(&d).map(|(x, y)| x * y).sum();
        if !(len2 > 0.0) {
            return Err(Error::DegenerateSegment(k));
        }
        let len = len2.sqrt();
        let (grad_f, metric_grad) = if with_gradient {
            let gv = self.field.gradient(&m)?;
            (gv.iter().map(|g| -g / f).collect(), self.metric.quadratic_gradient(&m, &d))
        } else {
            (Vec::new(), Vec::new())
        };
        Ok(Segment {
            f,
            grad_f,
            len,
            a_delta,
            metric_grad,
        })
    }

    fn action(&self, pts: &[Vec<f64>]) -> Result<f64> {
        let mut w = 0.0;
        for k in 0..pts.len() - 1 {
            let s = self.segment(k, &pts[k], &pts[k + 1], false)?;
            w += s.f * s.len;
        }
        Ok(w)
    }

    /// `∂T/∂a` and `∂T/∂b` for the segment term `T = f(q̄) L`.
    fn segment_partials(&self, s: &Segment) -> (Vec<f64>, Vec<f64>) {
        let mut da = vec![0.0; self.dim];
        let mut db = vec![0.0; self.dim];
        for i in 0..self.dim {
            let shared = 0.5 * s.grad_f[i] * s.len + 0.25 * s.f * s.metric_grad[i] / s.len;
            let stretch = s.f * s.a_delta[i] / s.len;
            da[i] = shared - stretch;
            db[i] = shared + stretch;
        }
        (da, db)
    }

    /// Gradient with respect to the interior nodes, flattened node-major.
    fn gradient(&self, pts: &[Vec<f64>]) -> Result<Vec<f64>> {
        let n = pts.len() - 1;
        let mut g = vec![0.0; (n - 1) * self.dim];
        for k in 0..n {
            let s = self.segment(k, &pts[k], &pts[k + 1], true)?;
            let (da, db) = self.segment_partials(&s);
            if k >= 1 {
                for i in 0..self.dim {
                    g[(k - 1) * self.dim + i] += da[i];
                }
            }
            if k + 1 < n {
                for i in 0..self.dim {
                    g[k * self.dim + i] += db[i];
                }
            }
        }
        Ok(g)
    }

    fn displaced(&self, pts: &[Vec<f64>], dir: &[f64], alpha: f64) -> Vec<Vec<f64>> {
        let mut out = pts.to_vec();
        for (j, node) in out.iter_mut().enumerate().skip(1).take(pts.len() - 2) {
            for i in 0..self.dim {
                node[i] += alpha * dir[(j - 1) * self.dim + i];
            }
        }
        out
    }

    /// Action at a trial point; forbidden or degenerate trial paths count as +∞.
    fn trial_action(&self, pts: &[Vec<f64>]) -> Result<f64> {
        match self.action(pts) {
            Ok(w) => Ok(w),
            Err(Error::ForbiddenRegion { .. }) | Err(Error::DegenerateSegment(_)) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes the discrete Jacobi action between fixed endpoints with `n`
/// segments: Polak–Ribière conjugate gradients with Armijo backtracking,
/// then Newton polishing on the finite-difference Hessian. Accepted steps
/// never increase `W` beyond rounding.
pub fn jacobi_path_minimize(
    field: &dyn ScalarField,
    metric: &Metric,
    q_start: &[f64],
    q_end: &[f64],
    energy: f64,
    n: usize,
    opts: &JacobiOptions,
) -> Result<DiscretePath> {
    let dim = field.dim();
    if q_start.len() != dim || q_end.len() != dim {
        return Err(Error::Shape("endpoint dimension does not match the potential".into()));
    }
    if n < 8 {
        return Err(Error::InvalidParameter(format!("need at least 8 segments, got {n}")));
    }
    metric.validate(dim)?;
    let prob = Problem {
        field,
        metric,
        energy,
        dim,
    };
    prob.f_at(q_start)?;
    prob.f_at(q_end)?;

    let mut pts: Vec<Vec<f64>> = match &opts.seed {
        Some(interior) => {
            if interior.len() != n - 1 || interior.iter().any(|p| p.len() != dim) {
                return Err(Error::Shape("seed must supply n-1 interior nodes".into()));
            }
            let mut v = vec![q_start.to_vec()];
            v.extend(interior.iter().cloned());
            v.push(q_end.to_vec());
            v
        }
        None => (0..=n)
            .map(|j| {
                let s = j as f64 / n as f64;
                q_start.iter().zip(q_end).map(|(a, b)| a + s * (b - a)).collect()
            })
            .collect(),
    };
    for j in 1..n {
        prob.f_at(&pts[j])?;
    }

    let mut w = prob.action(&pts)?;
    let mut history = vec![w];
    let mut g = prob.gradient(&pts)?;
    let chord: f64 = q_start.iter().zip(q_end).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt();
    let mut alpha = 0.1 * chord / n as f64 / max_abs(&g).max(1e-300);
    let mut dir: Vec<f64> = g.iter().map(|x| -x).collect();
    let mut iterations = 0;
    let converged = |g: &[f64], w: f64| max_abs(g) < opts.tol * w.abs();

    // Conjugate-gradient phase; stops early once it stalls and Newton takes over.
    let mut stall = 0;
    while !converged(&g, w) && iterations < opts.max_cg_iterations && stall < 50 {
        iterations += 1;
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            dir = g.iter().map(|x| -x).collect();
            slope = dot(&g, &dir);
        }
        let mut step = alpha * 2.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = prob.displaced(&pts, &dir, step);
            let wt = prob.trial_action(&trial)?;
            if wt <= w + 1e-4 * step * slope {
                accepted = Some((trial, wt));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, wt)) = accepted else {
            break;
        };
        let gt = prob.gradient(&trial)?;
        let beta = (dot(&gt, &gt) - dot(&gt, &g)) / dot(&g, &g);
        let beta = beta.max(0.0);
        dir = gt.iter().zip(&dir).map(|(gn, d)| -gn + beta * d).collect();
        if (w - wt) <= 1e-14 * w.abs() {
            stall += 1;
        } else {
            stall = 0;
        }
        alpha = step;
        pts = trial;
        w = wt;
        g = gt;
        history.push(w);
    }

    // Newton polishing with a clamped finite-difference Hessian.
    let mut newton = 0;
    while !converged(&g, w) && newton < opts.max_newton_iterations {
        newton += 1;
        iterations += 1;
        let nv = g.len();
        let mut hess = DMatrix::<f64>::zeros(nv, nv);
        for j in 0..nv {
            let node = j / dim + 1;
            let h = 1e-5 * (1.0 + pts[node][j % dim].abs());
            let mut e = vec![0.0; nv];
            e[j] = 1.0;
            let gp = prob.gradient(&prob.displaced(&pts, &e, h))?;
            let gm = prob.gradient(&prob.displaced(&pts, &e, -h))?;
            for i in 0..nv {
                hess[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        let sym = (&hess + hess.transpose()) * 0.5;
        let (vals, vecs) = symmetric_eigen(sym);
        let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let gv = DVector::from_column_slice(&g);
        let mut stepv = DVector::<f64>::zeros(nv);
        for (k, lam) in vals.iter().enumerate() {
            let col = vecs.column(k);
            let denom = lam.abs().max(1e-12 * scale);
            stepv -= col * (col.dot(&gv) / denom);
        }
        let dirn: Vec<f64> = stepv.iter().cloned().collect();
        let gnorm = max_abs(&g);
        let mut step = 1.0;
        let mut moved = false;
        for _ in 0..30 {
            let trial = prob.displaced(&pts, &dirn, step);
            let wt = prob.trial_action(&trial)?;
            if wt.is_finite() {
                // At the roundoff floor W is flat; accept a non-increase within
                // rounding when the gradient still drops.
                let gt = prob.gradient(&trial)?;
                let flat = (wt - w).abs() <= 8.0 * f64::EPSILON * w.abs() * n as f64;
                if wt < w || (flat && max_abs(&gt) < gnorm) {
                    pts = trial;
                    w = wt.min(w);
                    g = gt;
                    history.push(w);
                    moved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }

    let gnorm = max_abs(&g);
    if !converged(&g, w) {
        return Err(Error::Convergence {
            what: "Jacobi path minimization".into(),
            iterations,
            last: gnorm,
        });
    }
    Ok(DiscretePath {
        points: pts,
        energy,
        metric: metric.clone(),
        action: w,
        gradient_norm: gnorm,
        iterations,
        action_history: history,
    })
}

/// Segment momenta `p_k = f(q̄_k) A Δ_k / √(Δ_k·A·Δ_k)` together with the
/// constraint residuals `½ p·B·p + V(q̄_k) − E`.
pub fn path_momenta(field: &dyn ScalarField, path: &DiscretePath) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let prob = Problem {
        field,
        metric: &path.metric,
        energy: path.energy,
        dim: field.dim(),
    };
    let mut momenta = Vec::with_capacity(path.segments());
    let mut residuals = Vec::with_capacity(path.segments());
    for k in 0..path.segments() {
        let (a, b) = (&path.points[k], &path.points[k + 1]);
        let s = prob.segment(k, a, b, false)?;
        let p: Vec<f64> = s.a_delta.iter().map(|v| s.f * v / s.len).collect();
        let m: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
        let kinetic = 0.5 * path.metric.inverse_quadratic(&m, &p)?;
        residuals.push(kinetic + field.value(&m)? - path.energy);
        momenta.push(p);
    }
    Ok((momenta, residuals))
}

/// Endpoint-gradient identity `∂W/∂q_end = p_end`, `∂W/∂q_start = −p_start`.
#[derive(Debug, Clone)]
pub struct EndpointReport {
    pub probe: f64,
    /// Central differences of the minimized action over endpoint displacements.
    pub fd_end: Vec<f64>,
    pub fd_start: Vec<f64>,
    /// Exact endpoint partials of the discrete action at the minimizer.
    pub p_end: Vec<f64>,
    pub p_start: Vec<f64>,
    /// Momentum of the first and last segments.
    pub segment_p_end: Vec<f64>,
    pub segment_p_start: Vec<f64>,
    /// `max |fd_end − p_end|`
    pub end_error: f64,
    /// `max |fd_start + p_start|`
    pub start_error: f64,
}

pub fn endpoint_momentum_check(
    field: &dyn ScalarField,
    metric: &Metric,
    q_start: &[f64],
    q_end: &[f64],
    energy: f64,
    n: usize,
    probe: f64,
    opts: &JacobiOptions,
) -> Result<EndpointReport> {
    let dim = field.dim();
    let base = jacobi_path_minimize(field, metric, q_start, q_end, energy, n, opts)?;
    let prob = Problem {
        field,
        metric,
        energy,
        dim,
    };
    let last = prob.segment(n - 1, &base.points[n - 1], &base.points[n], true)?;
    let (_, p_end) = prob.segment_partials(&last);
    let first = prob.segment(0, &base.points[0], &base.points[1], true)?;
    let (neg_p_start, _) = prob.segment_partials(&first);
    let p_start: Vec<f64> = neg_p_start.iter().map(|v| -v).collect();
    let seg_mom = |s: &Segment| -> Vec<f64> { s.a_delta.iter().map(|v| s.f * v / s.len).collect() };

    let interior: Vec<Vec<f64>> = base.points[1..n].to_vec();
    let warm = JacobiOptions {
        seed: Some(interior),
        ..opts.clone()
    };
    let mut fd_end = vec![0.0; dim];
    let mut fd_start = vec![0.0; dim];
    for i in 0..dim {
        let shift = |q: &[f64], s: f64| -> Vec<f64> {
            let mut v = q.to_vec();
            v[i] += s;
            v
        };
        let wp = jacobi_path_minimize(field, metric, q_start, &shift(q_end, probe), energy, n, &warm)?.action;
        let wm = jacobi_path_minimize(field, metric, q_start, &shift(q_end, -probe), energy, n, &warm)?.action;
        fd_end[i] = (wp - wm) / (2.0 * probe);
        let wp = jacobi_path_minimize(field, metric, &shift(q_start, probe), q_end, energy, n, &warm)?.action;
        let wm = jacobi_path_minimize(field, metric, &shift(q_start, -probe), q_end, energy, n, &warm)?.action;
        fd_start[i] = (wp - wm) / (2.0 * probe);
    }
    let end_error = fd_end.iter().zip(&p_end).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let start_error = fd_start.iter().zip(&p_start).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
    Ok(EndpointReport {
        probe,
        fd_end,
        fd_start,
        p_end,
        p_start,
        segment_p_end: seg_mom(&last),
        segment_p_start: seg_mom(&first),
        end_error,
        start_error,
    })
}
