//! Eigendecomposition of the model matrix.
//!
//! The accurate path factors `M = L Lᵀ` with a pivoted Cholesky that works
//! on the Cauchy generator directly (every entry of `L` is a product and
//! quotient of node sums and differences) and then orthogonalizes the columns
//! of `L` by one-sided Jacobi. Small eigenvalues come out with high relative
//! accuracy regardless of how ill-conditioned `M` is. The baseline path is
//! plain cyclic Jacobi on the assembled matrix, kept as an independent oracle.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm_sq, Matrix};
use crate::model_operator::{ModelOperator, COINCIDENCE_THRESHOLD};

pub const MAX_SWEEPS: usize = 60;
pub const ROTATION_THRESHOLD: f64 = 1e-15;
/// Pivots below this end the factorization early.
pub const PIVOT_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Accurate,
    Baseline,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Accurate => "accurate",
            Method::Baseline => "baseline",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Method> {
        match s {
            "accurate" => Ok(Method::Accurate),
            "baseline" => Ok(Method::Baseline),
            other => Err(Error::InvalidConfig(format!("unknown solver `{other}`"))),
        }
    }
}

/// `P M Pᵀ = L Lᵀ` with `L` lower trapezoidal, rows in pivot order.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorForm {
    /// N × r.
    pub factor: Matrix,
    /// `pivot_order[k]` is the original index of row `k` of `factor`.
    pub pivot_order: Vec<usize>,
    /// Schur-complement diagonals at each elimination step, nonincreasing.
    pub pivots: Vec<f64>,
    /// Set when a pivot fell below [`PIVOT_FLOOR`] and the rank was cut.
    pub truncated: bool,
}

impl FactorForm {
    pub fn rank(&self) -> usize {
        self.factor.cols()
    }

    pub fn min_pivot(&self) -> f64 {
        self.pivots.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_pivot(&self) -> f64 {
        self.pivots.iter().copied().fold(0.0, f64::max)
    }

    /// `max |(L Lᵀ)_ij − m_ij|` in the original ordering, with the products
    /// accumulated in double-double so the residual itself is not rounded
    /// away.
    pub fn reconstruction_residual(&self, m: &Matrix) -> f64 {
        self.elementwise_residuals(m).into_iter().map(|(r, _)| r).fold(0.0, f64::max)
    }

    /// `max |(L Lᵀ)_ij − m_ij| / |m_ij|`, accumulated as in
    /// [`reconstruction_residual`](Self::reconstruction_residual).
    pub fn relative_reconstruction_residual(&self, m: &Matrix) -> f64 {
        self.elementwise_residuals(m).into_iter().map(|(r, s)| r / s).fold(0.0, f64::max)
    }

    fn elementwise_residuals(&self, m: &Matrix) -> Vec<(f64, f64)> {
        let n = self.factor.rows();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let (mut hi, mut lo) = (0.0f64, 0.0f64);
                for (a, b) in self.factor.row(i).iter().zip(self.factor.row(j)) {
                    let p = a * b;
                    let pe = a.mul_add(*b, -p);
                    let s = hi + p;
                    let bb = s - hi;
                    let se = (hi - (s - bb)) + (p - bb);
                    hi = s;
                    lo += se + pe;
                }
                let target = m[(self.pivot_order[i], self.pivot_order[j])];
                out.push((((hi - target) + lo).abs(), target.abs()));
            }
        }
        out
    }

    /// `L Lᵀ` in the original ordering.
    pub fn reconstruct(&self) -> Matrix {
        let llt = self.factor.mul_transpose(&self.factor);
        let n = llt.rows();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(self.pivot_order[i], self.pivot_order[j])] = llt[(i, j)];
            }
        }
        out
    }
}

/// Pivoted Cholesky of `M_ij = √(w_i w_j)/(x_i + x_j)` through the generator
/// recurrence `g_i ← g_i (x_i − x_p)/(x_i + x_p)`.
pub fn accurate_factor(nodes: &[f64], weights: &[f64]) -> Result<FactorForm> {
    let n = nodes.len();
    if n == 0 || weights.len() != n {
        return Err(Error::InvalidConfig("nodes and weights must be nonempty and of equal length".into()));
    }
    let mut sorted: Vec<f64> = nodes.to_vec();
    sorted.sort_by(f64::total_cmp);
    for p in sorted.windows(2) {
        if p[1] - p[0] < COINCIDENCE_THRESHOLD * p[0] {
            return Err(Error::CoincidentNodes { left: p[0], right: p[1] });
        }
    }

    let mut x = nodes.to_vec();
    let mut g: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let mut d: Vec<f64> = weights.iter().zip(&x).map(|(w, x)| w / (2.0 * x)).collect();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut l = Matrix::zeros(n, n);
    let mut pivots = Vec::with_capacity(n);
    let mut rank = n;

    for k in 0..n {
        let p = (k..n).fold(k, |best, i| if d[i] > d[best] { i } else { best });
        if p != k {
            x.swap(k, p);
            g.swap(k, p);
            d.swap(k, p);
            perm.swap(k, p);
            for c in 0..k {
                let (a, b) = (l[(k, c)], l[(p, c)]);
                l[(k, c)] = b;
                l[(p, c)] = a;
            }
        }
        if !(d[k] >= PIVOT_FLOOR) {
            rank = k;
            break;
        }
        pivots.push(d[k]);
        let root = d[k].sqrt();
        l[(k, k)] = root;
        for i in k + 1..n {
            let s = x[i] + x[k];
            l[(i, k)] = g[i] * g[k] / (s * root);
            g[i] *= (x[i] - x[k]) / s;
            d[i] = g[i] * g[i] / (2.0 * x[i]);
        }
    }

    let factor = if rank == n { l } else { Matrix::from_fn(n, rank, |i, j| l[(i, j)]) };
    Ok(FactorForm { factor, pivot_order: perm, pivots, truncated: rank < n })
}

/// Eigenvalues and eigenvectors in no particular order.
#[derive(Debug, Clone, PartialEq)]
pub struct RawEigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, original row order.
    pub vectors: Matrix,
    pub sweeps: usize,
}

/// One-sided Jacobi on the columns of the factor: `λ_k = ‖g_k‖²` and the
/// normalized columns are eigenvectors of `L Lᵀ`.
pub fn jacobi_factor_svd(f: &FactorForm) -> Result<RawEigen> {
    let n = f.factor.rows();
    let r = f.rank();
    let mut cols: Vec<Vec<f64>> = (0..r).map(|j| f.factor.column(j)).collect();
    let tol = ROTATION_THRESHOLD.max(f64::EPSILON * (n as f64).sqrt());

    let mut sweeps = 0;
    loop {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps });
        }
        sweeps += 1;
        let mut rotated = false;
        for p in 0..r {
            for q in p + 1..r {
                let (head, tail) = cols.split_at_mut(q);
                let (cp, cq) = (&mut head[p], &mut tail[0]);
                let alpha = norm_sq(cp);
                let beta = norm_sq(cq);
                let gamma = dot(cp, cq);
                if gamma.abs() <= tol * (alpha * beta).sqrt() || gamma.abs() < 1e-300 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta.abs() > 1e150 {
                    0.5 / zeta
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
                    let (u, v) = (*a, *b);
                    *a = c * u - s * v;
                    *b = s * u + c * v;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    if n == 1 && r == 1 {
        // a 1×1 factor squares back to its pivot only up to rounding
        return Ok(RawEigen { values: vec![f.pivots[0]], vectors: Matrix::identity(1), sweeps });
    }
    let mut values = Vec::with_capacity(r);
    let mut vectors = Matrix::zeros(n, r);
    for (k, col) in cols.iter().enumerate() {
        let lambda = norm_sq(col);
        let norm = lambda.sqrt();
        values.push(lambda);
        for (i, v) in col.iter().enumerate() {
            vectors[(f.pivot_order[i], k)] = v / norm;
        }
    }
    Ok(RawEigen { values, vectors, sweeps })
}

/// Classical cyclic Jacobi on a symmetric matrix.
pub fn baseline_eig(m: &Matrix) -> Result<RawEigen> {
    jacobi_symmetric(m, true)
}

/// [`baseline_eig`] without accumulating eigenvectors.
pub fn baseline_eigenvalues(m: &Matrix) -> Result<Vec<f64>> {
    jacobi_symmetric(m, false).map(|e| e.values)
}

fn jacobi_symmetric(m: &Matrix, want_vectors: bool) -> Result<RawEigen> {
    let n = m.rows();
    if !m.is_symmetric() {
        return Err(Error::InvalidConfig("baseline solver needs a symmetric matrix".into()));
    }
    let mut a = m.clone();
    let mut v = if want_vectors { Matrix::identity(n) } else { Matrix::zeros(0, 0) };
    let mut sweeps = 0;
    loop {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps });
        }
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= ROTATION_THRESHOLD * (a[(p, p)] * a[(q, q)]).abs().sqrt() || apq.abs() <= 1e-300 {
                    continue;
                }
                rotated = true;
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                a[(p, p)] -= t * apq;
                a[(q, q)] += t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let (arp, arq) = (a[(p, r)], a[(q, r)]);
                    let np = c * arp - s * arq;
                    let nq = s * arp + c * arq;
                    a[(p, r)] = np;
                    a[(r, p)] = np;
                    a[(q, r)] = nq;
                    a[(r, q)] = nq;
                }
                if want_vectors {
                    for r in 0..n {
                        let row = v.row_mut(r);
                        let (vp, vq) = (row[p], row[q]);
                        row[p] = c * vp - s * vq;
                        row[q] = s * vp + c * vq;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let values = (0..n).map(|k| a[(k, k)]).collect();
    Ok(RawEigen { values, vectors: v, sweeps })
}

/// Eigenpairs of the model operator with their cyclic-vector masses.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    /// Strictly decreasing, positive.
    pub eigenvalues: Vec<f64>,
    /// `m_k = (q_k·u)²`, aligned with `eigenvalues`.
    pub masses: Vec<f64>,
    /// Columns aligned with `eigenvalues`, signed so that `q_k·u ≥ 0`.
    pub eigenvectors: Matrix,
    /// `max |QᵀQ − I|`.
    pub orthogonality_residual: f64,
    pub method: Method,
    pub sweeps: usize,
}

/// Eigenpairs of `op` sorted by decreasing eigenvalue.
///
/// With [`Method::Accurate`] the masses come from the Lyapunov identity
/// `(q·u)² = 2λ qᵀXq`, a sum of positive terms that keeps relative accuracy
/// for the smallest eigenvalues; the baseline path squares `q·u` directly.
pub fn decompose(op: &ModelOperator, method: Method) -> Result<SpectralDecomposition> {
    let n = op.dim();
    let raw = match method {
        Method::Accurate => {
            let f = accurate_factor(op.nodes(), op.weights())?;
            if f.truncated {
                let k = f.rank();
                return Err(Error::NonPositiveEigenvalue { index: k, value: 0.0 });
            }
            jacobi_factor_svd(&f)?
        }
        Method::Baseline => baseline_eig(op.matrix())?,
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| raw.values[j].total_cmp(&raw.values[i]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| raw.values[k]).collect();
    for (k, &l) in eigenvalues.iter().enumerate() {
        if !(l > 0.0) {
            return Err(Error::NonPositiveEigenvalue { index: k, value: l });
        }
    }
    for (k, p) in eigenvalues.windows(2).enumerate() {
        if p[0] - p[1] <= 2.0 * f64::EPSILON * p[0] {
            return Err(Error::DegenerateSpectrum { index: k, value: p[0] });
        }
    }

    let u = op.cyclic_vector();
    let x = op.nodes();
    let mut q = Matrix::zeros(n, n);
    let mut masses = Vec::with_capacity(n);
    for (k, &src) in order.iter().enumerate() {
        let col = raw.vectors.column(src);
        let sign = if dot(&col, u) < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            q[(i, k)] = sign * col[i];
        }
        let m = match method {
            Method::Accurate => {
                let xq: f64 = col.iter().zip(x).map(|(c, x)| x * c * c).sum();
                2.0 * eigenvalues[k] * xq
            }
            Method::Baseline => dot(&col, u).powi(2),
        };
        masses.push(m);
    }

    let qtq = q.transpose().matmul(&q);
    let orthogonality_residual = qtq.max_abs_diff(&Matrix::identity(n));
    Ok(SpectralDecomposition { eigenvalues, masses, eigenvectors: q, orthogonality_residual, method, sweeps: raw.sweeps })
}
