//! The maps Ω: μ ↦ σ and Ω^# = Ω∘# on atomic measures, identity checks, and
//! a cross-check against a directly discretized integral Hankel operator.

use serde::Serialize;

use crate::eigensolve::{decompose, Method};
use crate::error::{Error, Result};
use crate::measures::{Atom, AtomicMeasure};
use crate::model_operator::build;
use crate::quadrature::gauss_legendre_on;

/// σ = Σ m_k δ_{λ_k}: eigenvalues of the model operator weighted by the
/// spectral masses of the cyclic vector.
pub fn omega(mu: &AtomicMeasure, method: Method) -> Result<AtomicMeasure> {
    let d = decompose(&build(mu)?, method)?;
    let atoms = d.eigenvalues.iter().zip(&d.masses).map(|(&x, &w)| Atom::new(x, w)).collect();
    AtomicMeasure::new(atoms)
}

/// Ω(μ#).
pub fn omega_sharp(mu: &AtomicMeasure, method: Method) -> Result<AtomicMeasure> {
    omega(&mu.sharp(), method)
}

/// Largest relative position and weight discrepancies between two atomic
/// measures matched by sorted position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AtomDiscrepancy {
    pub node_error: f64,
    pub weight_error: f64,
}

pub fn compare_atoms(expected: &AtomicMeasure, found: &AtomicMeasure) -> Result<AtomDiscrepancy> {
    if expected.len() != found.len() {
        return Err(Error::AtomCountMismatch { expected: expected.len(), found: found.len() });
    }
    let mut out = AtomDiscrepancy { node_error: 0.0, weight_error: 0.0 };
    for (a, b) in expected.atoms().iter().zip(found.atoms()) {
        out.node_error = out.node_error.max((a.x - b.x).abs() / a.x);
        out.weight_error = out.weight_error.max((a.w - b.w).abs() / a.w);
    }
    Ok(out)
}

/// Absolute atom-parameter distance `max_k max(|Δx_k|, |Δw_k|)`.
pub fn atom_parameter_distance(a: &AtomicMeasure, b: &AtomicMeasure) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::AtomCountMismatch { expected: a.len(), found: b.len() });
    }
    Ok(a.atoms()
        .iter()
        .zip(b.atoms())
        .map(|(p, q)| (p.x - q.x).abs().max((p.w - q.w).abs()))
        .fold(0.0, f64::max))
}

/// How far Ω(Ω(μ)) lands from μ.
pub fn roundtrip_error(mu: &AtomicMeasure, method: Method) -> Result<AtomDiscrepancy> {
    let back = omega(&omega(mu, method)?, method)?;
    compare_atoms(mu, &back)
}

/// Relative errors of the exact identities satisfied by Ω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityReport {
    /// |σ(ℝ₊) − μ(ℝ₊)| / μ(ℝ₊)
    pub mass_error: f64,
    /// Σλ_k against ½ Σ w_k/x_k
    pub trace_error: f64,
    /// Σλ_k² against Σ_ij w_i w_j/(x_i + x_j)²
    pub hs_error: f64,
    /// max |x_i M_ij + M_ij x_j − u_i u_j|, absolute
    pub lyapunov_residual: f64,
    pub roundtrip_node_error: f64,
    pub roundtrip_weight_error: f64,
}

impl IdentityReport {
    pub fn max_error(&self) -> f64 {
        [
            self.mass_error,
            self.trace_error,
            self.hs_error,
            self.roundtrip_node_error,
            self.roundtrip_weight_error,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn identity_report(mu: &AtomicMeasure) -> Result<IdentityReport> {
    identity_report_with(mu, Method::Accurate)
}

pub fn identity_report_with(mu: &AtomicMeasure, method: Method) -> Result<IdentityReport> {
    let op = build(mu)?;
    let d = decompose(&op, method)?;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let mass: f64 = d.masses.iter().sum();
    let trace: f64 = d.eigenvalues.iter().sum();
    let hs: f64 = d.eigenvalues.iter().map(|l| l * l).sum();
    let sigma = AtomicMeasure::new(d.eigenvalues.iter().zip(&d.masses).map(|(&x, &w)| Atom::new(x, w)).collect())?;
    let back = omega(&sigma, method)?;
    let rt = compare_atoms(mu, &back)?;
    Ok(IdentityReport {
        mass_error: rel(mass, mu.total_mass()),
        trace_error: rel(trace, 0.5 * mu.inverse_moment()),
        hs_error: rel(hs, op.frobenius_sq()),
        lyapunov_residual: op.lyapunov_residual(),
        roundtrip_node_error: rt.node_error,
        roundtrip_weight_error: rt.weight_error,
    })
}

/// Gauss–Legendre grid on `[0, t_max]` for the Hankel cross-check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HankelGrid {
    pub n_t: usize,
    pub t_max: f64,
    /// Allowed relative deviation of the top eigenvalues.
    pub tolerance: f64,
}

impl Default for HankelGrid {
    fn default() -> Self {
        HankelGrid { n_t: 400, t_max: 40.0, tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HankelReport {
    /// Decreasing eigenvalues of the model operator.
    pub model_eigenvalues: Vec<f64>,
    /// The matching number of leading eigenvalues of the Hankel matrix.
    pub hankel_eigenvalues: Vec<f64>,
    pub max_relative_deviation: f64,
    /// Largest |eigenvalue| of the Hankel matrix beyond the leading block.
    pub max_residual_eigenvalue: f64,
}

/// Discretizes the Hankel operator with kernel `h_μ(t + s)` as
/// `H_ij = h_μ(t_i + t_j) √(Δ_i Δ_j)` and compares its leading spectrum with
/// the model operator's.
pub fn hankel_cross_check(mu: &AtomicMeasure, grid: &HankelGrid) -> Result<HankelReport> {
    let n = mu.len();
    if grid.n_t < n || !(grid.t_max > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "hankel grid needs n_t >= {n} and t_max > 0 (got {} and {})",
            grid.n_t, grid.t_max
        )));
    }
    let model = decompose(&build(mu)?, Method::Accurate)?.eigenvalues;

    let (t, w) = gauss_legendre_on(0.0, grid.t_max, grid.n_t);
    let roots: Vec<f64> = w.iter().map(|w| w.sqrt()).collect();
    let h = nalgebra::DMatrix::from_fn(grid.n_t, grid.n_t, |i, j| roots[i] * roots[j] * mu.laplace_transform(t[i] + t[j]));
    let mut spectrum: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    spectrum.sort_by(|a, b| b.total_cmp(a));

    let hankel_eigenvalues = spectrum[..n].to_vec();
    let max_relative_deviation = model
        .iter()
        .zip(&hankel_eigenvalues)
        .map(|(m, h)| (m - h).abs() / m)
        .fold(0.0, f64::max);
    let max_residual_eigenvalue = spectrum[n..].iter().map(|l| l.abs()).fold(0.0, f64::max);

    if max_relative_deviation > grid.tolerance {
        // share of the continuous trace ∫h(2t)dt living beyond t_max
        let tail: f64 = mu.atoms().iter().map(|a| a.w * (-2.0 * a.x * grid.t_max).exp() / (2.0 * a.x)).sum();
        let tail_fraction = tail / (0.5 * mu.inverse_moment());
        if tail_fraction > 0.1 * grid.tolerance {
            let x_min = mu.atoms()[0].x;
            return Err(Error::UnresolvedTail {
                deviation: max_relative_deviation,
                suggested_t_max: (1e3 / grid.tolerance).ln() / (2.0 * x_min),
            });
        }
        return Err(Error::GridTooCoarse { deviation: max_relative_deviation, tolerance: grid.tolerance });
    }
    Ok(HankelReport { model_eigenvalues: model, hankel_eigenvalues, max_relative_deviation, max_residual_eigenvalue })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn atomic(pairs: &[(f64, f64)]) -> AtomicMeasure {
        let (x, w): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
        AtomicMeasure::from_parts(&x, &w).unwrap()
    }

    #[test]
    fn point_mass_law() {
        let s = omega(&atomic(&[(0.25, 3.0)]), Method::Accurate).unwrap();
        assert_eq!(s.atoms(), &[Atom::new(6.0, 3.0)]);
        let fixed = atomic(&[(1.0, 2.0)]);
        assert_eq!(omega(&fixed, Method::Accurate).unwrap(), fixed);
    }

    #[test]
    fn two_atom_map() {
        let s = omega(&atomic(&[(1.0, 1.0), (2.0, 1.0)]), Method::Accurate).unwrap();
        let a = s.atoms();
        assert!((a[0].x - 0.019).abs() < 1e-3 && (a[0].w - 0.0634).abs() < 1e-3);
        assert!((a[1].x - 0.731).abs() < 1e-3 && (a[1].w - 1.9366).abs() < 1e-3);
    }

    #[test]
    fn sharp_variant() {
        let s = omega_sharp(&atomic(&[(1.0, 1.0)]), Method::Accurate).unwrap();
        assert_eq!(s.atoms(), &[Atom::new(0.5, 1.0)]);
        let s = omega_sharp(&atomic(&[(2.0, 3.0)]), Method::Accurate).unwrap();
        assert_eq!(s.atoms(), &[Atom::new(0.75, 0.75)]);
    }

    #[test]
    fn roundtrips() {
        let r = roundtrip_error(&atomic(&[(0.3, 7.0)]), Method::Accurate).unwrap();
        assert!(r.node_error <= 1e-15 && r.weight_error <= 1e-15);
        let r = roundtrip_error(&atomic(&[(1.0, 1.0), (2.0, 1.0)]), Method::Accurate).unwrap();
        assert!(r.node_error <= 1e-10 && r.weight_error <= 1e-10, "{r:?}");
    }

    #[test]
    fn identity_report_small_cases() {
        let r = identity_report(&atomic(&[(0.3, 7.0)])).unwrap();
        assert!(r.max_error() <= 1e-15, "{r:?}");
        let r = identity_report(&atomic(&[(1.0, 1.0), (2.0, 1.0)])).unwrap();
        assert!(r.trace_error <= 1e-15 && r.mass_error <= 1e-15, "{r:?}");
    }

    #[test]
    fn hankel_single_atom() {
        let r = hankel_cross_check(&atomic(&[(1.0, 1.0)]), &HankelGrid::default()).unwrap();
        assert_relative_eq!(r.hankel_eigenvalues[0], 0.5, max_relative = 1e-6);
        assert!(r.max_residual_eigenvalue <= 1e-8);
    }

    #[test]
    fn hankel_flags_short_grids() {
        let grid = HankelGrid { n_t: 40, t_max: 0.5, tolerance: 1e-6 };
        assert!(matches!(
            hankel_cross_check(&atomic(&[(1.0, 1.0)]), &grid),
            Err(Error::UnresolvedTail { .. })
        ));
    }

    #[test]
    fn atom_distance() {
        let a = atomic(&[(1.0, 1.0)]);
        let b = atomic(&[(1.5, 0.75)]);
        assert_eq!(atom_parameter_distance(&a, &b).unwrap(), 0.5);
        assert!(atom_parameter_distance(&a, &atomic(&[(1.0, 1.0), (2.0, 1.0)])).is_err());
    }
}
