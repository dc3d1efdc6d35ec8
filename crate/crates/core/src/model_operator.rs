//! The symmetrized model operator `M = D C D` of an atomic measure, with
//! `D = diag(√w)` and the Cauchy matrix `C_ij = 1/(x_i + x_j)`.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::measures::AtomicMeasure;

/// Relative separation below which two nodes count as coincident.
pub const COINCIDENCE_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelOperator {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    matrix: Matrix,
    cyclic: Vec<f64>,
    theta: Vec<f64>,
}

/// Assembles `M_ij = √(w_i w_j)/(x_i + x_j)`, cyclic vector `u = √w` and
/// `θ = u/x`.
pub fn build(mu: &AtomicMeasure) -> Result<ModelOperator> {
    let nodes = mu.positions();
    let weights = mu.weights();
    for p in nodes.windows(2) {
        if p[1] - p[0] < COINCIDENCE_THRESHOLD * p[0] {
            return Err(Error::CoincidentNodes { left: p[0], right: p[1] });
        }
    }
    let cyclic: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let theta: Vec<f64> = cyclic.iter().zip(&nodes).map(|(u, x)| u / x).collect();
    let n = nodes.len();
    let mut matrix = Matrix::zeros(n, n);
    for i in 0..n {
        matrix[(i, i)] = weights[i] / (2.0 * nodes[i]);
        for j in 0..i {
            let m = cyclic[i] * cyclic[j] / (nodes[i] + nodes[j]);
            matrix[(i, j)] = m;
            matrix[(j, i)] = m;
        }
    }
    Ok(ModelOperator { nodes, weights, matrix, cyclic, theta })
}

impl ModelOperator {
    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// `u_i = √w_i`; `‖u‖²` is the mass of the measure.
    pub fn cyclic_vector(&self) -> &[f64] {
        &self.cyclic
    }

    /// `u_i/x_i`; `‖θ‖²` is the inverse second moment.
    pub fn theta_vector(&self) -> &[f64] {
        &self.theta
    }

    /// `max |x_i M_ij + M_ij x_j − u_i u_j|`.
    pub fn lyapunov_residual(&self) -> f64 {
        let n = self.dim();
        let mut r: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let m = self.matrix[(i, j)];
                r = r.max((self.nodes[i] * m + m * self.nodes[j] - self.cyclic[i] * self.cyclic[j]).abs());
            }
        }
        r
    }

    /// `Σ M_kk = ½ Σ w_k/x_k`.
    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|k| self.matrix[(k, k)]).sum()
    }

    /// `Σ_ij w_i w_j/(x_i + x_j)²`.
    pub fn frobenius_sq(&self) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                let d = self.nodes[i] + self.nodes[j];
                s += self.weights[i] * self.weights[j] / (d * d);
            }
        }
        s
    }

    /// `uᵀ M u = Σ_ij M_ij u_i u_j`.
    pub fn cyclic_quadratic_form(&self) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += self.cyclic[i] * self.matrix[(i, j)] * self.cyclic[j];
            }
        }
        s
    }

    pub fn cyclic_norm_sq(&self) -> f64 {
        self.weights.iter().sum()
    }
}
