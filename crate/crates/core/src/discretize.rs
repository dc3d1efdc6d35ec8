//! Density → atomic measure by Gauss–Legendre quadrature on a truncation
//! interval, so that the finite-dimensional map applies.

use crate::error::{Error, Result};
use crate::measures::{Atom, AtomicMeasure, DensityMeasure};
use crate::quadrature::{gauss_legendre, Adaptive, IntegralValue};

/// Lower end of the default truncation for exponential densities.
pub const DEFAULT_EXP_FLOOR: f64 = 1e-8;
/// Atoms lighter than this are dropped.
pub const MIN_WEIGHT: f64 = 1e-300;
const NODES_PER_PANEL: usize = 8;

/// Panel widths in decades, starting narrow at the top of the interval and
/// widening geometrically toward 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grading {
    pub top_decades: f64,
    pub growth: f64,
    pub max_decades: f64,
}

impl Default for Grading {
    fn default() -> Self {
        Grading { top_decades: 0.25, growth: 1.5, max_decades: 3.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rule {
    /// Gauss–Legendre in log x on graded panels; when the interval starts at
    /// 0 the innermost panel `[0, floor]` is linear. `panels` defaults to
    /// `n_nodes / 8`.
    CompositeGaussLegendre { panels: Option<usize>, grading: Grading },
    /// One Gauss–Legendre rule in x across the whole interval.
    SinglePanel,
}

impl Default for Rule {
    fn default() -> Self {
        Rule::CompositeGaussLegendre { panels: None, grading: Grading::default() }
    }
}

/// Interval `[lo, hi]` with `0 ≤ lo < hi < ∞`. A zero lower end is accepted:
/// the innermost panel then reaches the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    pub lo: f64,
    pub hi: f64,
}

impl Truncation {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::InvalidConfig(format!("truncation [{lo}, {hi}] must satisfy 0 <= lo < hi < inf")));
        }
        Ok(Truncation { lo, hi })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscretizationConfig {
    pub n_nodes: usize,
    /// `None` picks a default from the density (see [`resolve_truncation`]).
    pub truncation: Option<Truncation>,
    pub rule: Rule,
}

impl DiscretizationConfig {
    pub fn new(n_nodes: usize) -> Self {
        DiscretizationConfig { n_nodes, truncation: None, rule: Rule::default() }
    }

    pub fn truncated(mut self, lo: f64, hi: f64) -> Result<Self> {
        self.truncation = Some(Truncation::new(lo, hi)?);
        Ok(self)
    }

    pub fn single_panel(mut self) -> Self {
        self.rule = Rule::SinglePanel;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_nodes == 0 {
            return Err(Error::InvalidConfig("n_nodes must be at least 1".into()));
        }
        if let Rule::CompositeGaussLegendre { panels: Some(0), .. } = self.rule {
            return Err(Error::InvalidConfig("panel count must be at least 1".into()));
        }
        if let Rule::CompositeGaussLegendre { grading, .. } = self.rule {
            if !(grading.top_decades > 0.0 && grading.growth >= 1.0 && grading.max_decades >= grading.top_decades) {
                return Err(Error::InvalidConfig("invalid panel grading".into()));
            }
        }
        Ok(())
    }
}

/// The interval actually discretized: the explicit truncation clipped to the
/// support, or else the bounded support itself, or `[1e-8, 40/rate]` for an
/// exponential density.
pub fn resolve_truncation(mu: &DensityMeasure, cfg: &DiscretizationConfig) -> Result<Truncation> {
    let s = mu.support();
    if let Some(t) = cfg.truncation {
        let lo = t.lo.max(s.lo);
        let hi = t.hi.min(s.hi);
        return if hi > lo { Truncation::new(lo, hi) } else { Err(Error::EmptyMeasure) };
    }
    if s.is_bounded() {
        return Truncation::new(s.lo, s.hi);
    }
    if let Some(rate) = mu.exponential_rate() {
        return Truncation::new(DEFAULT_EXP_FLOOR.max(s.lo), s.lo.max(40.0 / rate));
    }
    Err(Error::InvalidConfig(format!(
        "a `{}` density on an unbounded support needs an explicit truncation",
        mu.kind().name()
    )))
}

/// Quadrature nodes and weights for `rule` with `n` points on `[lo, hi]`.
pub fn quadrature_rule(rule: &Rule, n: usize, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    match *rule {
        Rule::SinglePanel => linear_panel(n, lo, hi),
        Rule::CompositeGaussLegendre { panels, grading } => {
            let p = panels.unwrap_or((n / NODES_PER_PANEL).max(1)).min(n);
            let counts: Vec<usize> = (0..p).map(|k| n / p + usize::from(k < n % p)).collect();
            let widths: Vec<f64> = (0..p)
                .map(|k| (grading.top_decades * grading.growth.powi(k as i32)).min(grading.max_decades))
                .collect();
            let mut out = Vec::with_capacity(n);
            let mut b = hi;
            if lo > 0.0 {
                let total = (hi / lo).log10();
                let scale = total / widths.iter().sum::<f64>();
                for (k, (&w, &c)) in widths.iter().zip(&counts).enumerate() {
                    let a = if k + 1 == p { lo } else { (b / 10f64.powf(w * scale)).max(lo) };
                    out.extend(log_panel(c, a, b));
                    b = a;
                }
            } else {
                for (&w, &c) in widths.iter().zip(&counts).take(p - 1) {
                    let a = b / 10f64.powf(w);
                    out.extend(log_panel(c, a, b));
                    b = a;
                }
                out.extend(linear_panel(counts[p - 1], 0.0, b));
            }
            out
        }
    }
}

fn linear_panel(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (h, m) = (0.5 * (b - a), 0.5 * (a + b));
    let (t, w) = gauss_legendre(n);
    t.iter().zip(&w).map(|(t, w)| (m + h * t, h * w)).collect()
}

fn log_panel(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (la, lb) = (a.ln(), b.ln());
    let (h, m) = (0.5 * (lb - la), 0.5 * (la + lb));
    let (t, w) = gauss_legendre(n);
    t.iter()
        .zip(&w)
        .map(|(t, w)| {
            let x = (m + h * t).exp();
            (x, h * w * x)
        })
        .collect()
}

/// Atoms at quadrature nodes carrying (quadrature weight) × (density).
pub fn discretize(mu: &DensityMeasure, cfg: &DiscretizationConfig) -> Result<AtomicMeasure> {
    cfg.validate()?;
    let t = resolve_truncation(mu, cfg)?;
    let atoms: Vec<Atom> = quadrature_rule(&cfg.rule, cfg.n_nodes, t.lo, t.hi)
        .into_iter()
        .map(|(x, q)| Atom::new(x, q * mu.density(x)))
        .filter(|a| a.x > 0.0 && a.w >= MIN_WEIGHT)
        .collect();
    if atoms.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    AtomicMeasure::new(atoms)
}

/// μ(support ∖ truncation), the mass the discretization cannot see.
pub fn tail_mass(mu: &DensityMeasure, cfg: &DiscretizationConfig) -> Result<IntegralValue> {
    let t = resolve_truncation(mu, cfg)?;
    let s = mu.support();
    let quad = Adaptive::default();
    let below = mu.integrate_with(|_| 1.0, s.lo, t.lo, &quad);
    let above = mu.integrate_with(|_| 1.0, t.hi, s.hi, &quad);
    Ok(below + above)
}
