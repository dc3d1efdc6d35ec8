//! Diagonal state-space systems `(A, b, b)` with `A = diag(a) > 0`: the
//! Lyapunov solution `A W + W A = b bᵀ`, the Gramian as a time integral, and
//! the impulse response `h(t) = Σ b_i² e^{-t a_i}`.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::measures::AtomicMeasure;

/// Tail size above which a truncated Gramian integral is flagged.
pub const GRAMIAN_TAIL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalSystem {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl DiagonalSystem {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() {
            return Err(Error::InvalidConfig("system needs matching nonempty a and b".into()));
        }
        if a.iter().any(|&v| !(v.is_finite() && v > 0.0)) || b.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("system needs a_i > 0 and finite b".into()));
        }
        Ok(DiagonalSystem { a, b })
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }
}

/// The balanced realization of an atomic measure: `a = x`, `b = √w`.
impl From<&AtomicMeasure> for DiagonalSystem {
    fn from(mu: &AtomicMeasure) -> Self {
        DiagonalSystem {
            a: mu.positions(),
            b: mu.weights().iter().map(|w| w.sqrt()).collect(),
        }
    }
}

/// `W_ij = b_i b_j/(a_i + a_j)`.
pub fn solve_lyapunov(sys: &DiagonalSystem) -> Matrix {
    let n = sys.dim();
    Matrix::from_fn(n, n, |i, j| sys.b[i] * sys.b[j] / (sys.a[i] + sys.a[j]))
}

/// `max |a_i W_ij + W_ij a_j − b_i b_j|`.
pub fn lyapunov_residual(sys: &DiagonalSystem, w: &Matrix) -> f64 {
    let n = sys.dim();
    let mut r: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            r = r.max((sys.a[i] * w[(i, j)] + w[(i, j)] * sys.a[j] - sys.b[i] * sys.b[j]).abs());
        }
    }
    r
}

/// `max |b_i b_j|`, the natural scale of the residual.
pub fn residual_scale(sys: &DiagonalSystem) -> f64 {
    let m = sys.b.iter().map(|b| b.abs()).fold(0.0, f64::max);
    m * m
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramianEstimate {
    pub matrix: Matrix,
    /// `max b_i b_j e^{-T(a_i+a_j)}/(a_i + a_j)`, the neglected integral.
    pub tail_bound: f64,
    pub tail_flagged: bool,
}

/// `∫₀^T e^{-tA} b bᵀ e^{-tA} dt` by composite Simpson with `steps` panels
/// (so `2·steps + 1` samples).
pub fn gramian_quadrature(sys: &DiagonalSystem, t_end: f64, steps: usize) -> Result<GramianEstimate> {
    if !(t_end > 0.0 && t_end.is_finite()) || steps == 0 {
        return Err(Error::InvalidConfig("gramian quadrature needs T > 0 and at least one step".into()));
    }
    let n = sys.dim();
    let h = t_end / (2 * steps) as f64;
    let mut matrix = Matrix::zeros(n, n);
    let mut tail_bound: f64 = 0.0;
    for i in 0..n {
        for j in 0..=i {
            let rate = sys.a[i] + sys.a[j];
            let f = |k: usize| (-(k as f64) * h * rate).exp();
            let mut s = f(0) + f(2 * steps);
            for k in 1..2 * steps {
                s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k);
            }
            let bb = sys.b[i] * sys.b[j];
            let v = bb * s * h / 3.0;
            matrix[(i, j)] = v;
            matrix[(j, i)] = v;
            tail_bound = tail_bound.max((bb * (-t_end * rate).exp() / rate).abs());
        }
    }
    Ok(GramianEstimate { matrix, tail_bound, tail_flagged: tail_bound > GRAMIAN_TAIL_TOLERANCE })
}

/// `h(t) = ⟨e^{-tA} b, b⟩ = Σ b_i² e^{-t a_i}`.
pub fn impulse_response(sys: &DiagonalSystem, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidConfig(format!("impulse response needs t >= 0, got {t}")));
    }
    Ok(sys.a.iter().zip(&sys.b).map(|(a, b)| b * b * (-t * a).exp()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_operator::build;
    use approx::assert_relative_eq;

    #[test]
    fn closed_form() {
        let s = DiagonalSystem::new(vec![1.0], vec![1.0]).unwrap();
        assert_eq!(solve_lyapunov(&s)[(0, 0)], 0.5);
        let s = DiagonalSystem::new(vec![1.0, 2.0], vec![1.0, 1.0]).unwrap();
        let w = solve_lyapunov(&s);
        let mu = AtomicMeasure::from_parts(&[1.0, 2.0], &[1.0, 1.0]).unwrap();
        assert_eq!(&w, build(&mu).unwrap().matrix());
        let s2 = DiagonalSystem::new(vec![1.0, 2.0], vec![2.0, 2.0]).unwrap();
        let w2 = solve_lyapunov(&s2);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(w2[(i, j)], 4.0 * w[(i, j)]);
            }
        }
        assert!(lyapunov_residual(&s, &w) <= 1e-15);
    }

    #[test]
    fn quadrature_gramian() {
        let s = DiagonalSystem::new(vec![1.0], vec![1.0]).unwrap();
        let g = gramian_quadrature(&s, 40.0, 4000).unwrap();
        assert!((g.matrix[(0, 0)] - 0.5).abs() <= 1e-10);
        assert!(!g.tail_flagged);

        let s = DiagonalSystem::new(vec![1.0, 2.0], vec![1.0, 1.0]).unwrap();
        let g = gramian_quadrature(&s, 40.0, 4000).unwrap();
        assert!(g.matrix.max_abs_diff(&solve_lyapunov(&s)) <= 1e-8);

        let g = gramian_quadrature(&s, 1.0, 100).unwrap();
        assert!(g.tail_flagged);
        assert!(gramian_quadrature(&s, 0.0, 100).is_err());
    }

    #[test]
    fn impulse_matches_laplace_transform() {
        let alpha = 2.5;
        let s = DiagonalSystem::new(vec![alpha], vec![1.0]).unwrap();
        for t in [0.0, 0.3, 4.0] {
            assert_eq!(impulse_response(&s, t).unwrap(), (-alpha * t).exp());
        }
        let mu = AtomicMeasure::from_parts(&[1.0, 2.0], &[1.0, 1.0]).unwrap();
        let s = DiagonalSystem::from(&mu);
        assert_eq!(impulse_response(&s, 0.0).unwrap(), 2.0);
        for t in [0.5, 1.0, 2.0] {
            assert_relative_eq!(impulse_response(&s, t).unwrap(), mu.laplace_transform(t), max_relative = 1e-15);
        }
        assert!(impulse_response(&s, -1.0).is_err());
    }
}
