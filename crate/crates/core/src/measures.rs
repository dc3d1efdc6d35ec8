//! Positive measures on the half line (0, ∞): finite atomic measures and
//! densities, with masses, moments, Laplace transforms, CDFs, the reciprocal
//! involution `#`, scalings and classification.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::quadrature::{Adaptive, IntegralValue};
use crate::reference;

/// A point mass of weight `w` at position `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub x: f64,
    pub w: f64,
}

impl Atom {
    pub fn new(x: f64, w: f64) -> Self {
        Atom { x, w }
    }
}

/// Finite sum of point masses with strictly increasing positive positions and
/// positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
}

impl AtomicMeasure {
    /// Validates, sorts, and merges atoms sitting at exactly the same position.
    pub fn new(mut atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        for a in &atoms {
            if !(a.x.is_finite() && a.x > 0.0) {
                return Err(Error::InvalidMeasure(format!("atom position must be positive and finite, got {}", a.x)));
            }
            if !(a.w.is_finite() && a.w > 0.0) {
                return Err(Error::InvalidMeasure(format!("atom weight must be positive and finite, got {}", a.w)));
            }
        }
        atoms.sort_by(|a, b| a.x.total_cmp(&b.x));
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if last.x == a.x => last.w += a.w,
                _ => merged.push(a),
            }
        }
        Ok(AtomicMeasure { atoms: merged })
    }

    pub fn from_parts(positions: &[f64], weights: &[f64]) -> Result<Self> {
        if positions.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} positions but {} weights",
                positions.len(),
                weights.len()
            )));
        }
        Self::new(positions.iter().zip(weights).map(|(&x, &w)| Atom { x, w }).collect())
    }

    pub fn point_mass(x: f64, w: f64) -> Result<Self> {
        Self::new(vec![Atom { x, w }])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn positions(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.x).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.w).collect()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.w).sum()
    }

    pub fn inverse_moment(&self) -> f64 {
        self.atoms.iter().map(|a| a.w / a.x).sum()
    }

    pub fn inverse_second_moment(&self) -> f64 {
        self.atoms.iter().map(|a| a.w / (a.x * a.x)).sum()
    }

    pub fn laplace_transform(&self, t: f64) -> f64 {
        self.atoms.iter().map(|a| a.w * (-t * a.x).exp()).sum()
    }

    /// μ((0, x]).
    pub fn cdf(&self, x: f64) -> f64 {
        let k = self.atoms.partition_point(|a| a.x <= x);
        self.atoms[..k].iter().map(|a| a.w).sum()
    }

    /// μ((0, x)).
    pub fn cdf_left(&self, x: f64) -> f64 {
        let k = self.atoms.partition_point(|a| a.x < x);
        self.atoms[..k].iter().map(|a| a.w).sum()
    }

    /// Pushforward under x ↦ 1/x with the x⁻² Jacobian: (x, w) ↦ (1/x, w/x²).
    pub fn sharp(&self) -> AtomicMeasure {
        let mut atoms: Vec<Atom> = self
            .atoms
            .iter()
            .map(|a| Atom { x: 1.0 / a.x, w: a.w / (a.x * a.x) })
            .collect();
        atoms.reverse();
        // 1/x is strictly decreasing, so order and distinctness carry over
        // unless two positions round to the same reciprocal.
        AtomicMeasure::new(atoms).expect("reciprocal of a valid measure is valid")
    }

    pub fn scale_mass(&self, tau: f64) -> AtomicMeasure {
        assert!(tau > 0.0);
        AtomicMeasure {
            atoms: self.atoms.iter().map(|a| Atom { x: a.x, w: tau * a.w }).collect(),
        }
    }

    pub fn scale_variable(&self, tau: f64) -> AtomicMeasure {
        assert!(tau > 0.0);
        AtomicMeasure::new(self.atoms.iter().map(|a| Atom { x: tau * a.x, w: a.w }).collect())
            .expect("scaled positions stay positive")
    }
}

/// Interval (lo, hi) of the half line; `hi` may be `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub lo: f64,
    pub hi: f64,
}

impl Support {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0 && hi > lo) || lo.is_infinite() || hi.is_nan() {
            return Err(Error::InvalidMeasure(format!("invalid support ({lo}, {hi})")));
        }
        Ok(Support { lo, hi })
    }

    pub fn half_line() -> Self {
        Support { lo: 0.0, hi: f64::INFINITY }
    }

    pub fn is_bounded(&self) -> bool {
        self.hi.is_finite()
    }

    fn intersect(&self, other: &Support) -> Option<Support> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (hi > lo).then_some(Support { lo, hi })
    }

    fn reciprocal(&self) -> Support {
        let lo = if self.hi.is_infinite() { 0.0 } else { 1.0 / self.hi };
        let hi = if self.lo == 0.0 { f64::INFINITY } else { 1.0 / self.lo };
        Support { lo, hi }
    }

    fn scaled(&self, tau: f64) -> Support {
        Support { lo: self.lo * tau, hi: self.hi * tau }
    }
}

/// The named density families; each is evaluated in its own variable `y`.
#[derive(Debug, Clone, PartialEq)]
pub enum DensityKind {
    /// e^{-βy}
    ExpScale { beta: f64 },
    /// 1 on the support
    Indicator,
    /// Spectral density of the Mehler operator on [0, π].
    MehlerSigma,
    /// Spectral density of the Rosenblum operator on [0, π].
    RosenblumRho,
    /// Piecewise-linear interpolation of samples, zero outside them.
    Tabulated { xs: Vec<f64>, ys: Vec<f64> },
}

impl DensityKind {
    pub fn name(&self) -> &'static str {
        match self {
            DensityKind::ExpScale { .. } => "exp_scale",
            DensityKind::Indicator => "indicator",
            DensityKind::MehlerSigma => "mehler_sigma",
            DensityKind::RosenblumRho => "rosenblum_rho",
            DensityKind::Tabulated { .. } => "tabulated",
        }
    }

    fn natural_support(&self) -> Support {
        match self {
            DensityKind::ExpScale { .. } | DensityKind::Indicator => Support::half_line(),
            DensityKind::MehlerSigma | DensityKind::RosenblumRho => Support { lo: 0.0, hi: std::f64::consts::PI },
            DensityKind::Tabulated { xs, .. } => Support { lo: xs[0], hi: xs[xs.len() - 1] },
        }
    }

    fn eval(&self, y: f64) -> f64 {
        match self {
            DensityKind::ExpScale { beta } => (-beta * y).exp(),
            DensityKind::Indicator => 1.0,
            DensityKind::MehlerSigma => reference::mehler_density(y),
            DensityKind::RosenblumRho => reference::rosenblum_density(y),
            DensityKind::Tabulated { xs, ys } => {
                if y < xs[0] || y > xs[xs.len() - 1] {
                    return 0.0;
                }
                let k = xs.partition_point(|&x| x <= y).clamp(1, xs.len() - 1);
                let (x0, x1) = (xs[k - 1], xs[k]);
                let (y0, y1) = (ys[k - 1], ys[k]);
                y0 + (y1 - y0) * (y - x0) / (x1 - x0)
            }
        }
    }
}

/// Absolutely continuous measure `factor · base(coef · x^{±1}) dx` on `support`.
///
/// The base density is one of [`DensityKind`]; the `factor`, `coef` and
/// `reciprocal` fields record scalings and the `#` involution so that the
/// family is closed under those operations.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMeasure {
    kind: DensityKind,
    support: Support,
    factor: f64,
    coef: f64,
    reciprocal: bool,
}

impl DensityMeasure {
    /// Density of `kind` restricted to `support` (intersected with the
    /// family's natural support).
    pub fn new(kind: DensityKind, support: Support) -> Result<Self> {
        Self::with_transform(kind, support, 1.0, 1.0, false)
    }

    pub fn with_transform(kind: DensityKind, support: Support, factor: f64, coef: f64, reciprocal: bool) -> Result<Self> {
        match &kind {
            DensityKind::ExpScale { beta } if !(beta.is_finite() && *beta > 0.0) => {
                return Err(Error::InvalidMeasure(format!("exp_scale needs beta > 0, got {beta}")));
            }
            DensityKind::Tabulated { xs, ys } => {
                if xs.len() < 2 || xs.len() != ys.len() {
                    return Err(Error::InvalidMeasure("tabulated density needs >= 2 matching samples".into()));
                }
                if xs.windows(2).any(|p| !(p[0] < p[1])) || xs[0] < 0.0 {
                    return Err(Error::InvalidMeasure("tabulated abscissae must be nonnegative and increasing".into()));
                }
                if ys.iter().any(|&y| !(y.is_finite() && y >= 0.0)) {
                    return Err(Error::InvalidMeasure("tabulated density values must be nonnegative".into()));
                }
            }
            _ => {}
        }
        if !(factor.is_finite() && factor > 0.0 && coef.is_finite() && coef > 0.0) {
            return Err(Error::InvalidMeasure("density transform parameters must be positive".into()));
        }
        let mut m = DensityMeasure { kind, support, factor, coef, reciprocal };
        let natural = m.mapped_natural_support();
        m.support = support
            .intersect(&natural)
            .ok_or_else(|| Error::InvalidMeasure("support does not meet the density's natural support".into()))?;
        Ok(m)
    }

    pub fn exp_scale(beta: f64) -> Self {
        Self::new(DensityKind::ExpScale { beta }, Support::half_line()).expect("valid beta")
    }

    pub fn indicator(lo: f64, hi: f64) -> Result<Self> {
        Self::new(DensityKind::Indicator, Support::new(lo, hi)?)
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    pub fn support(&self) -> Support {
        self.support
    }

    /// True when no scaling or reciprocal has been applied.
    pub fn is_untransformed(&self) -> bool {
        self.factor == 1.0 && self.coef == 1.0 && !self.reciprocal
    }

    /// Decay rate `r` when the density is `c·e^{-rx}`.
    pub fn exponential_rate(&self) -> Option<f64> {
        match self.kind {
            DensityKind::ExpScale { beta } if !self.reciprocal => Some(beta * self.coef),
            _ => None,
        }
    }

    fn base_argument(&self, x: f64) -> f64 {
        if self.reciprocal {
            self.coef / x
        } else {
            self.coef * x
        }
    }

    fn mapped_natural_support(&self) -> Support {
        let n = self.kind.natural_support();
        if self.reciprocal {
            // y = coef/x  =>  x = coef/y
            n.scaled(1.0 / self.coef).reciprocal()
        } else {
            n.scaled(1.0 / self.coef)
        }
    }

    /// Density value at `x`; zero off the support.
    pub fn density(&self, x: f64) -> f64 {
        if x <= self.support.lo || x >= self.support.hi {
            return 0.0;
        }
        self.factor * self.kind.eval(self.base_argument(x))
    }

    /// ∫ g(x) dμ(x) over `(lo, hi) ∩ support`.
    pub fn integrate_with(&self, g: impl Fn(f64) -> f64, lo: f64, hi: f64, quad: &Adaptive) -> IntegralValue {
        let a = lo.max(self.support.lo);
        let b = hi.min(self.support.hi);
        if b <= a {
            return IntegralValue::Finite(0.0);
        }
        let f = |x: f64| {
            let d = self.density(x);
            if d == 0.0 {
                0.0
            } else {
                g(x) * d
            }
        };
        quad.integrate_half_line(&f, a, b)
    }

    fn integrate(&self, g: impl Fn(f64) -> f64) -> IntegralValue {
        self.integrate_with(g, 0.0, f64::INFINITY, &Adaptive::default())
    }

    pub fn total_mass(&self) -> IntegralValue {
        self.integrate(|_| 1.0)
    }

    pub fn inverse_second_moment(&self) -> IntegralValue {
        self.integrate(|x| 1.0 / (x * x))
    }

    pub fn laplace_transform(&self, t: f64) -> IntegralValue {
        self.integrate(|x| (-t * x).exp())
    }

    pub fn cdf(&self, x: f64) -> IntegralValue {
        if x <= self.support.lo {
            return IntegralValue::Finite(0.0);
        }
        self.integrate_with(|_| 1.0, 0.0, x, &Adaptive::default())
    }

    /// CDF at ascending points, integrating incrementally between them.
    /// `None` when the measure of some initial segment diverges.
    pub fn cdf_values(&self, points: &[f64]) -> Option<Vec<f64>> {
        let quad = Adaptive::default();
        let mut out = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        let mut prev: Option<f64> = None;
        for &p in points {
            let inc = match prev {
                None => self.integrate_with(|_| 1.0, 0.0, p, &quad),
                Some(q) if p > q => self.integrate_with(|_| 1.0, q, p, &quad),
                Some(_) => IntegralValue::Finite(0.0),
            };
            acc += inc.finite()?;
            out.push(acc);
            prev = Some(p);
        }
        Some(out)
    }

    /// dμ#(x) = w(1/x) dx on the reciprocal support.
    pub fn sharp(&self) -> DensityMeasure {
        DensityMeasure {
            kind: self.kind.clone(),
            support: self.support.reciprocal(),
            factor: self.factor,
            coef: self.coef,
            reciprocal: !self.reciprocal,
        }
    }

    pub fn scale_mass(&self, tau: f64) -> DensityMeasure {
        assert!(tau > 0.0);
        DensityMeasure { factor: self.factor * tau, ..self.clone() }
    }

    /// dμ_τ(x) = τ⁻¹ w(x/τ) dx.
    pub fn scale_variable(&self, tau: f64) -> DensityMeasure {
        assert!(tau > 0.0);
        let coef = if self.reciprocal { self.coef * tau } else { self.coef / tau };
        DensityMeasure {
            kind: self.kind.clone(),
            support: self.support.scaled(tau),
            factor: self.factor / tau,
            coef,
            reciprocal: self.reciprocal,
        }
    }
}

/// A measure on (0, ∞): either finitely many atoms or a density.
#[derive(Debug, Clone, PartialEq)]
pub enum Measure {
    Atomic(AtomicMeasure),
    Density(DensityMeasure),
}

/// Boolean membership in the classes the spectral map cares about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureClass {
    pub is_finite: bool,
    pub is_cofinite: bool,
    pub is_carleson: bool,
    pub bounded_support: bool,
    pub blaschke_atomic: bool,
}

impl From<AtomicMeasure> for Measure {
    fn from(m: AtomicMeasure) -> Self {
        Measure::Atomic(m)
    }
}

impl From<DensityMeasure> for Measure {
    fn from(m: DensityMeasure) -> Self {
        Measure::Density(m)
    }
}

impl Measure {
    pub fn total_mass(&self) -> IntegralValue {
        match self {
            Measure::Atomic(m) => IntegralValue::Finite(m.total_mass()),
            Measure::Density(d) => d.total_mass(),
        }
    }

    pub fn inverse_second_moment(&self) -> IntegralValue {
        match self {
            Measure::Atomic(m) => IntegralValue::Finite(m.inverse_second_moment()),
            Measure::Density(d) => d.inverse_second_moment(),
        }
    }

    /// h_μ(t) = ∫ e^{-tx} dμ(x) for t > 0.
    pub fn laplace_transform(&self, t: f64) -> Result<IntegralValue> {
        if !(t > 0.0) {
            return Err(Error::InvalidConfig(format!("laplace transform needs t > 0, got {t}")));
        }
        Ok(match self {
            Measure::Atomic(m) => IntegralValue::Finite(m.laplace_transform(t)),
            Measure::Density(d) => d.laplace_transform(t),
        })
    }

    /// μ((0, x]).
    pub fn cdf(&self, x: f64) -> IntegralValue {
        match self {
            Measure::Atomic(m) => IntegralValue::Finite(m.cdf(x)),
            Measure::Density(d) => d.cdf(x),
        }
    }

    pub fn sharp(&self) -> Measure {
        match self {
            Measure::Atomic(m) => Measure::Atomic(m.sharp()),
            Measure::Density(d) => Measure::Density(d.sharp()),
        }
    }

    pub fn scale_mass(&self, tau: f64) -> Measure {
        match self {
            Measure::Atomic(m) => Measure::Atomic(m.scale_mass(tau)),
            Measure::Density(d) => Measure::Density(d.scale_mass(tau)),
        }
    }

    pub fn scale_variable(&self, tau: f64) -> Measure {
        match self {
            Measure::Atomic(m) => Measure::Atomic(m.scale_variable(tau)),
            Measure::Density(d) => Measure::Density(d.scale_variable(tau)),
        }
    }

    pub fn as_atomic(&self) -> Option<&AtomicMeasure> {
        match self {
            Measure::Atomic(m) => Some(m),
            Measure::Density(_) => None,
        }
    }

    pub fn classify(&self) -> MeasureClass {
        match self {
            Measure::Atomic(_) => MeasureClass {
                is_finite: true,
                is_cofinite: true,
                is_carleson: true,
                bounded_support: true,
                blaschke_atomic: true,
            },
            Measure::Density(d) => MeasureClass {
                is_finite: d.total_mass().is_finite(),
                is_cofinite: d.inverse_second_moment().is_finite(),
                is_carleson: density_is_carleson(d),
                bounded_support: d.support().is_bounded(),
                blaschke_atomic: false,
            },
        }
    }

    /// CDF values (left limit, value) at ascending points.
    pub(crate) fn cdf_pairs(&self, points: &[f64]) -> Option<Vec<(f64, f64)>> {
        match self {
            Measure::Atomic(m) => Some(points.iter().map(|&p| (m.cdf_left(p), m.cdf(p))).collect()),
            Measure::Density(d) => d.cdf_values(points).map(|v| v.into_iter().map(|c| (c, c)).collect()),
        }
    }

    /// Points a Kolmogorov comparison should look at: atom positions, or a
    /// linear plus logarithmic grid across the bulk of a density.
    fn probe_points(&self) -> Vec<f64> {
        match self {
            Measure::Atomic(m) => m.positions(),
            Measure::Density(d) => {
                let s = d.support();
                let hi = if s.hi.is_finite() {
                    s.hi
                } else {
                    // walk out until the remaining mass is negligible
                    let mut r = (s.lo * 2.0).max(1.0);
                    let quad = Adaptive::default();
                    for _ in 0..200 {
                        match d.integrate_with(|_| 1.0, r, f64::INFINITY, &quad) {
                            IntegralValue::Finite(t) if t < 1e-13 => break,
                            _ => r *= 2.0,
                        }
                    }
                    r
                };
                let lo = s.lo;
                let mut pts: Vec<f64> = (0..=1000).map(|i| lo + (hi - lo) * i as f64 / 1000.0).collect();
                let glo = (hi * 1e-12).max(lo);
                if glo > 0.0 {
                    let ratio = (hi / glo).ln();
                    pts.extend((0..=1000).map(|i| glo * (ratio * i as f64 / 1000.0).exp()));
                }
                pts
            }
        }
    }
}

/// Sampled Carleson check μ((0,a))/a over a = 2^j, j = -20..=20.
///
/// This is a heuristic: the ratio must stay finite on the grid and must not
/// keep growing at either end of it (growth increments that fail to decay
/// geometrically are read as an unbounded ratio).
fn density_is_carleson(d: &DensityMeasure) -> bool {
    let quad = Adaptive { abs_tol: 1e-300, rel_tol: 1e-13, max_subdivisions: 1 << 16 };
    let mut ratios = Vec::with_capacity(41);
    for j in -20..=20 {
        let a = 2f64.powi(j);
        match d.integrate_with(|_| 1.0, 0.0, a, &quad) {
            IntegralValue::Finite(m) => ratios.push(m / a),
            IntegralValue::Divergent => return false,
        }
    }
    let grows = |r: &[f64]| {
        // r ordered from the interior toward the end being examined
        let incs: Vec<f64> = r.windows(2).map(|p| p[1] - p[0]).collect();
        incs.iter().all(|&i| i > 0.0) && incs.windows(2).all(|p| p[1] >= 0.75 * p[0])
    };
    let small_end: Vec<f64> = ratios[..7].iter().rev().copied().collect();
    let large_end: Vec<f64> = ratios[34..].to_vec();
    !(grows(&small_end) || grows(&large_end))
}

/// sup_x |F₁(x) − F₂(x)| over atom positions (both one-sided limits) and a
/// refinement grid across any density's bulk.
pub fn kolmogorov_distance(a: &Measure, b: &Measure) -> Result<f64> {
    for m in [a, b] {
        if !m.total_mass().is_finite() {
            return Err(Error::Divergent { quantity: "total mass" });
        }
    }
    let mut pts = a.probe_points();
    pts.extend(b.probe_points());
    pts.retain(|p| *p > 0.0);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    sup_cdf_distance(a, b, &pts)
}

pub(crate) fn sup_cdf_distance(a: &Measure, b: &Measure, pts: &[f64]) -> Result<f64> {
    let fa = a.cdf_pairs(pts).ok_or(Error::Divergent { quantity: "cdf" })?;
    let fb = b.cdf_pairs(pts).ok_or(Error::Divergent { quantity: "cdf" })?;
    Ok(fa
        .iter()
        .zip(&fb)
        .map(|(&(al, ar), &(bl, br))| (al - bl).abs().max((ar - br).abs()))
        .fold(0.0, f64::max))
}

// ---------------------------------------------------------------------------
// JSON schema

/// Serialized form of a [`Measure`].
///
/// `{"type":"atomic","atoms":[{"x":1.0,"w":1.0}]}` or
/// `{"type":"density","kind":"exp_scale","params":{"beta":2.0},"support":[0,null]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MeasureSpec {
    Atomic {
        atoms: Vec<Atom>,
    },
    Density {
        kind: String,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        params: BTreeMap<String, Value>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        support: Option<[Option<f64>; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        transform: Option<TransformSpec>,
    },
}

/// Scalings and reciprocal recorded on a transformed density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformSpec {
    pub factor: f64,
    pub coef: f64,
    pub reciprocal: bool,
}

fn param_f64(params: &BTreeMap<String, Value>, key: &str) -> Result<Option<f64>> {
    match params.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v
            .as_f64()
            .map(Some)
            .ok_or_else(|| Error::InvalidMeasure(format!("parameter `{key}` must be a number"))),
    }
}

fn param_vec(params: &BTreeMap<String, Value>, key: &str) -> Result<Vec<f64>> {
    let arr = params
        .get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| Error::InvalidMeasure(format!("parameter `{key}` must be an array")))?;
    arr.iter()
        .map(|v| v.as_f64().ok_or_else(|| Error::InvalidMeasure(format!("`{key}` entries must be numbers"))))
        .collect()
}

impl TryFrom<MeasureSpec> for Measure {
    type Error = Error;

    fn try_from(spec: MeasureSpec) -> Result<Measure> {
        match spec {
            MeasureSpec::Atomic { atoms } => Ok(Measure::Atomic(AtomicMeasure::new(atoms)?)),
            MeasureSpec::Density { kind, params, support, transform } => {
                let kind = match kind.as_str() {
                    "exp_scale" => DensityKind::ExpScale {
                        beta: param_f64(&params, "beta")?
                            .ok_or_else(|| Error::InvalidMeasure("exp_scale needs `beta`".into()))?,
                    },
                    "indicator" => DensityKind::Indicator,
                    "mehler_sigma" => DensityKind::MehlerSigma,
                    "rosenblum_rho" => DensityKind::RosenblumRho,
                    "tabulated" => DensityKind::Tabulated { xs: param_vec(&params, "x")?, ys: param_vec(&params, "y")? },
                    other => return Err(Error::InvalidMeasure(format!("unknown density kind `{other}`"))),
                };
                let mut sup = match support {
                    Some([lo, hi]) => Support::new(lo.unwrap_or(0.0), hi.unwrap_or(f64::INFINITY))?,
                    None => Support::half_line(),
                };
                if matches!(kind, DensityKind::Indicator) {
                    // `params.a`/`params.b` are an alternative way to give the interval
                    if let Some(a) = param_f64(&params, "a")? {
                        sup.lo = sup.lo.max(a);
                    }
                    if let Some(b) = param_f64(&params, "b")? {
                        sup.hi = sup.hi.min(b);
                    }
                    sup = Support::new(sup.lo, sup.hi)?;
                }
                let t = transform.unwrap_or(TransformSpec { factor: 1.0, coef: 1.0, reciprocal: false });
                Ok(Measure::Density(DensityMeasure::with_transform(kind, sup, t.factor, t.coef, t.reciprocal)?))
            }
        }
    }
}

impl From<&Measure> for MeasureSpec {
    fn from(m: &Measure) -> MeasureSpec {
        match m {
            Measure::Atomic(a) => MeasureSpec::Atomic { atoms: a.atoms().to_vec() },
            Measure::Density(d) => {
                let mut params = BTreeMap::new();
                match &d.kind {
                    DensityKind::ExpScale { beta } => {
                        params.insert("beta".to_string(), Value::from(*beta));
                    }
                    DensityKind::Tabulated { xs, ys } => {
                        params.insert("x".to_string(), Value::from(xs.clone()));
                        params.insert("y".to_string(), Value::from(ys.clone()));
                    }
                    _ => {}
                }
                let hi = d.support.hi.is_finite().then_some(d.support.hi);
                MeasureSpec::Density {
                    kind: d.kind.name().to_string(),
                    params,
                    support: Some([Some(d.support.lo), hi]),
                    transform: (!d.is_untransformed()).then_some(TransformSpec {
                        factor: d.factor,
                        coef: d.coef,
                        reciprocal: d.reciprocal,
                    }),
                }
            }
        }
    }
}

impl Measure {
    pub fn from_json(s: &str) -> Result<Measure> {
        let spec: MeasureSpec = serde_json::from_str(s).map_err(|e| Error::InvalidMeasure(e.to_string()))?;
        Measure::try_from(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&MeasureSpec::from(self)).expect("measure specs always serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn atomic(pairs: &[(f64, f64)]) -> AtomicMeasure {
        AtomicMeasure::new(pairs.iter().map(|&(x, w)| Atom::new(x, w)).collect()).unwrap()
    }

    #[test]
    fn rejects_nonpositive_atoms() {
        assert!(AtomicMeasure::point_mass(0.0, 1.0).is_err());
        assert!(AtomicMeasure::point_mass(1.0, 0.0).is_err());
        assert!(AtomicMeasure::point_mass(-1.0, 1.0).is_err());
        assert!(AtomicMeasure::point_mass(f64::NAN, 1.0).is_err());
        assert_eq!(AtomicMeasure::new(vec![]), Err(Error::EmptyMeasure));
    }

    #[test]
    fn merges_exactly_coincident_positions_only() {
        let m = atomic(&[(2.0, 1.0), (1.0, 1.0), (2.0, 0.5), (1.0 + 1e-15, 1.0)]);
        assert_eq!(m.len(), 3);
        assert_eq!(m.atoms()[2], Atom::new(2.0, 1.5));
    }

    #[test]
    fn masses_and_moments() {
        assert_eq!(atomic(&[(1.0, 1.0)]).total_mass(), 1.0);
        assert_eq!(atomic(&[(2.0, 3.0)]).inverse_second_moment(), 0.75);
        assert_eq!(atomic(&[(1.0, 1.0)]).inverse_second_moment(), 1.0);

        let e = Measure::from(DensityMeasure::exp_scale(2.0));
        assert_relative_eq!(e.total_mass().finite().unwrap(), 0.5, epsilon = 1e-12);
        assert_eq!(e.inverse_second_moment(), IntegralValue::Divergent);

        let ind = Measure::from(DensityMeasure::indicator(0.5, f64::INFINITY).unwrap());
        assert_eq!(ind.total_mass(), IntegralValue::Divergent);
        assert_relative_eq!(ind.inverse_second_moment().finite().unwrap(), 2.0, epsilon = 1e-10);
    }

    #[test]
    fn laplace_examples() {
        let e = Measure::from(DensityMeasure::exp_scale(2.0));
        assert_relative_eq!(e.laplace_transform(1.0).unwrap().finite().unwrap(), 1.0 / 3.0, epsilon = 1e-12);
        let ind = Measure::from(DensityMeasure::indicator(0.5, f64::INFINITY).unwrap());
        assert_relative_eq!(
            ind.laplace_transform(2.0).unwrap().finite().unwrap(),
            (-1f64).exp() / 2.0,
            epsilon = 1e-12
        );
        let alpha = 1.7;
        let p = Measure::from(AtomicMeasure::point_mass(alpha, 1.0).unwrap());
        for t in [0.1, 1.0, 5.0] {
            assert_eq!(p.laplace_transform(t).unwrap().finite().unwrap(), (-alpha * t).exp());
        }
        assert!(p.laplace_transform(0.0).is_err());
        let lebesgue = Measure::from(DensityMeasure::indicator(0.0, f64::INFINITY).unwrap());
        assert_relative_eq!(lebesgue.laplace_transform(4.0).unwrap().finite().unwrap(), 0.25, epsilon = 1e-11);
    }

    #[test]
    fn cdf_examples() {
        let m = atomic(&[(1.0, 2.0)]);
        assert_eq!(m.cdf(0.5), 0.0);
        assert_eq!(m.cdf(1.0), 2.0);
        assert_eq!(m.cdf_left(1.0), 0.0);
        let e = DensityMeasure::exp_scale(2.0);
        assert_relative_eq!(e.cdf(60.0).finite().unwrap(), 0.5, epsilon = 1e-12);
        assert_relative_eq!(e.cdf(1.0).finite().unwrap(), 0.5 * (1.0 - (-2f64).exp()), epsilon = 1e-12);
    }

    #[test]
    fn sharp_examples() {
        let s = atomic(&[(2.0, 3.0)]).sharp();
        assert_eq!(s.atoms(), &[Atom::new(0.5, 0.75)]);
        assert_eq!(atomic(&[(1.0, 1.0)]).sharp().atoms(), &[Atom::new(1.0, 1.0)]);

        let ind = DensityMeasure::indicator(0.5, f64::INFINITY).unwrap().sharp();
        assert_eq!(ind.support(), Support { lo: 0.0, hi: 2.0 });
        assert_eq!(ind.density(1.0), 1.0);
        assert_eq!(ind.density(2.5), 0.0);
        assert_relative_eq!(ind.total_mass().finite().unwrap(), 2.0, epsilon = 1e-12);

        // mass of μ# is the inverse second moment of μ for densities too
        let e = DensityMeasure::exp_scale(2.0);
        let es = e.sharp();
        assert_relative_eq!(es.inverse_second_moment().finite().unwrap(), 0.5, epsilon = 1e-10);
        assert_relative_eq!(es.density(0.25), (-8f64).exp(), epsilon = 1e-15);
        assert_eq!(es.sharp(), e);
    }

    #[test]
    fn scaling_examples() {
        assert_eq!(atomic(&[(1.0, 1.0)]).scale_mass(2.0).atoms(), &[Atom::new(1.0, 2.0)]);
        assert_eq!(atomic(&[(1.0, 1.0)]).scale_variable(3.0).atoms(), &[Atom::new(3.0, 1.0)]);
        let e = DensityMeasure::exp_scale(2.0).scale_variable(2.0);
        assert_relative_eq!(e.density(1.3), (-1.3f64).exp() / 2.0, epsilon = 1e-15);
        assert_relative_eq!(e.total_mass().finite().unwrap(), 0.5, epsilon = 1e-12);
        // scaling after a reciprocal
        let r = DensityMeasure::exp_scale(2.0).sharp().scale_variable(3.0);
        assert_relative_eq!(r.density(1.5), (-2.0 * 3.0 / 1.5f64).exp() / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn classification_examples() {
        let leb = Measure::from(DensityMeasure::indicator(0.0, f64::INFINITY).unwrap()).classify();
        assert!(leb.is_carleson && !leb.is_finite && !leb.is_cofinite && !leb.bounded_support);

        let c = Measure::from(atomic(&[(1.0, 1.0), (2.0, 1.0)])).classify();
        assert!(c.is_finite && c.is_cofinite && c.blaschke_atomic);

        let e = Measure::from(DensityMeasure::exp_scale(2.0)).classify();
        assert!(e.is_finite && !e.is_cofinite && e.is_carleson);

        // log-singular at the origin: μ((0,a))/a grows like log(1/a)
        let mehler = Measure::from(DensityMeasure::new(DensityKind::MehlerSigma, Support::half_line()).unwrap()).classify();
        assert!(mehler.is_finite && mehler.bounded_support && !mehler.is_carleson);

        let ind = Measure::from(DensityMeasure::indicator(0.5, f64::INFINITY).unwrap()).classify();
        assert!(!ind.is_finite && ind.is_cofinite && ind.is_carleson);
    }

    #[test]
    fn kolmogorov_examples() {
        let d1 = Measure::from(atomic(&[(1.0, 1.0)]));
        let d2 = Measure::from(atomic(&[(2.0, 1.0)]));
        let d11 = Measure::from(atomic(&[(1.1, 1.0)]));
        assert_eq!(kolmogorov_distance(&d1, &d1).unwrap(), 0.0);
        assert_eq!(kolmogorov_distance(&d1, &d2).unwrap(), 1.0);
        assert_eq!(kolmogorov_distance(&d1, &d11).unwrap(), 1.0);
        let leb = Measure::from(DensityMeasure::indicator(0.0, f64::INFINITY).unwrap());
        assert!(matches!(kolmogorov_distance(&d1, &leb), Err(Error::Divergent { .. })));
        // half the mass of U(0,2) lies left of 1
        let u = Measure::from(DensityMeasure::indicator(0.0, 2.0).unwrap());
        let k = kolmogorov_distance(&d1.scale_mass(2.0), &u).unwrap();
        assert_relative_eq!(k, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn json_schema() {
        let m = Measure::from_json(r#"{"type":"atomic","atoms":[{"x":1.0,"w":1.0}]}"#).unwrap();
        assert_eq!(m, Measure::Atomic(atomic(&[(1.0, 1.0)])));
        let d = Measure::from_json(r#"{"type":"density","kind":"exp_scale","params":{"beta":2.0},"support":[0,null]}"#)
            .unwrap();
        assert_eq!(d, Measure::Density(DensityMeasure::exp_scale(2.0)));
        let i = Measure::from_json(r#"{"type":"density","kind":"indicator","support":[0.5,null]}"#).unwrap();
        assert_eq!(i, Measure::Density(DensityMeasure::indicator(0.5, f64::INFINITY).unwrap()));
        assert!(Measure::from_json(r#"{"type":"atomic","atoms":[{"x":0.0,"w":1.0}]}"#).is_err());
        assert!(Measure::from_json(r#"{"type":"atomic","atoms":[{"x":1.0,"w":-1.0}]}"#).is_err());
        assert!(Measure::from_json(r#"{"type":"density","kind":"nope"}"#).is_err());

        let t = d.sharp().scale_mass(3.0);
        assert_eq!(Measure::from_json(&t.to_json()).unwrap(), t);
    }
}
