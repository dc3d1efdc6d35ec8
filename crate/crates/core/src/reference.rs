//! Closed-form spectral densities of the Mehler operator (kernel 1/(t+2),
//! i.e. μ = e^{-2x}dx) and the Rosenblum operator (kernel e^{-t/2}/t, reached
//! through Ω^# from μ = 𝟙_{(1/2,∞)}dx), and CDF comparisons against them.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measures::{sup_cdf_distance, AtomicMeasure, DensityKind, DensityMeasure, Measure, Support};
use crate::quadrature::{Adaptive, IntegralValue};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// arcsech(y) = ln(1/y + √(1/y² − 1)) for 0 < y ≤ 1.
pub fn arcsech(y: f64) -> f64 {
    if y < 1e-150 {
        return (2.0 / y).ln();
    }
    let r = 1.0 / y;
    (r + ((r - 1.0) * (r + 1.0)).max(0.0).sqrt()).ln()
}

/// π⁻² arcsech(λ/π) on (0, π), zero elsewhere.
pub fn mehler_density(lambda: f64) -> f64 {
    if !(lambda > 0.0 && lambda < PI) {
        return 0.0;
    }
    arcsech(lambda / PI) / (PI * PI)
}

/// (2π²)⁻¹ (k/λ) |Γ(¼ + ik/2)|⁴ with k = arcsech(λ/π)/π, on (0, π).
pub fn rosenblum_density(lambda: f64) -> f64 {
    if !(lambda > 0.0 && lambda < PI) {
        return 0.0;
    }
    let k = arcsech(lambda / PI) / PI;
    if k == 0.0 {
        return 0.0;
    }
    (k.ln() - lambda.ln() + 4.0 * log_abs_gamma_quarter(k)).exp() / (2.0 * PI * PI)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln Γ(z) for Re z > 0 by the Lanczos approximation, evaluated at z + 1
/// and shifted back with ln z.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    assert!(z.re > 0.0, "ln_gamma needs Re z > 0");
    // Γ(z) = Γ(z + 1)/z, and the series below computes Γ(w + 1) at w = z
    let mut a = Complex64::new(LANCZOS[0], 0.0);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    let ln_gamma_z1 = 0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + a.ln();
    ln_gamma_z1 - z.ln()
}

/// ln |Γ(¼ + ik/2)|.
pub fn log_abs_gamma_quarter(k: f64) -> f64 {
    ln_gamma(Complex64::new(0.25, 0.5 * k)).re
}

/// The two closed-form reference spectra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReferenceSpectrum {
    MehlerSigma,
    RosenblumRho,
}

impl fmt::Display for ReferenceSpectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReferenceSpectrum::MehlerSigma => "mehler_sigma",
            ReferenceSpectrum::RosenblumRho => "rosenblum_rho",
        })
    }
}

impl FromStr for ReferenceSpectrum {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mehler" | "mehler_sigma" => Ok(ReferenceSpectrum::MehlerSigma),
            "rosenblum" | "rosenblum_rho" => Ok(ReferenceSpectrum::RosenblumRho),
            other => Err(Error::UnknownReference(other.to_string())),
        }
    }
}

impl ReferenceSpectrum {
    pub fn density(&self, lambda: f64) -> f64 {
        match self {
            ReferenceSpectrum::MehlerSigma => mehler_density(lambda),
            ReferenceSpectrum::RosenblumRho => rosenblum_density(lambda),
        }
    }

    pub fn support(&self) -> Support {
        Support { lo: 0.0, hi: PI }
    }

    /// Mass of the measure the spectrum comes from: ∫e^{-2x}dx = ½ and
    /// ∫_{1/2}^∞ x⁻²dx = 2.
    pub fn total_mass(&self) -> f64 {
        match self {
            ReferenceSpectrum::MehlerSigma => 0.5,
            ReferenceSpectrum::RosenblumRho => 2.0,
        }
    }

    pub fn measure(&self) -> DensityMeasure {
        let kind = match self {
            ReferenceSpectrum::MehlerSigma => DensityKind::MehlerSigma,
            ReferenceSpectrum::RosenblumRho => DensityKind::RosenblumRho,
        };
        DensityMeasure::new(kind, self.support()).expect("reference supports are valid")
    }

    /// The measure whose spectral measure (under Ω) this is.
    pub fn source_measure(&self) -> DensityMeasure {
        match self {
            ReferenceSpectrum::MehlerSigma => DensityMeasure::exp_scale(2.0),
            // Ω^#(𝟙_{(1/2,∞)}) = Ω(𝟙_{(0,2)})
            ReferenceSpectrum::RosenblumRho => DensityMeasure::indicator(0.0, 2.0).expect("valid interval"),
        }
    }
}

/// ∫₀^λ density, by adaptive quadrature.
pub fn reference_cdf(spectrum: ReferenceSpectrum, lambda: f64) -> f64 {
    let hi = lambda.min(PI);
    if hi <= 0.0 {
        return 0.0;
    }
    Adaptive::default()
        .integrate_half_line(&|l| spectrum.density(l), 0.0, hi)
        .finite()
        .expect("reference densities are integrable")
}

fn comparison_points(sigma: &AtomicMeasure) -> Vec<f64> {
    let mut pts: Vec<f64> = (1..=1000).map(|i| PI * i as f64 / 1000.0).collect();
    pts.extend(sigma.positions());
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Kolmogorov distance between σ and the reference CDF over σ's atoms and a
/// 1000-point grid on (0, π].
pub fn compare(sigma: &AtomicMeasure, spectrum: ReferenceSpectrum) -> Result<f64> {
    let pts = comparison_points(sigma);
    sup_cdf_distance(&Measure::Atomic(sigma.clone()), &Measure::Density(spectrum.measure()), &pts)
}

/// Rows `(λ, empirical cdf, reference cdf)` on the comparison points.
pub fn cdf_table(sigma: &AtomicMeasure, spectrum: ReferenceSpectrum) -> Vec<[f64; 3]> {
    let pts = comparison_points(sigma);
    let reference = spectrum
        .measure()
        .cdf_values(&pts)
        .expect("reference densities are integrable");
    pts.iter().zip(reference).map(|(&l, r)| [l, sigma.cdf(l), r]).collect()
}

/// Rows `(λ, density, cdf)` on `n` equispaced interior points of (0, π).
pub fn density_table(spectrum: ReferenceSpectrum, n: usize) -> Vec<[f64; 3]> {
    let pts: Vec<f64> = (1..=n).map(|i| PI * i as f64 / (n + 1) as f64).collect();
    let cdf = spectrum
        .measure()
        .cdf_values(&pts)
        .expect("reference densities are integrable");
    pts.iter().zip(cdf).map(|(&l, c)| [l, spectrum.density(l), c]).collect()
}

/// Laplace transform h_σ(t) of the Mehler spectral measure.
pub fn mehler_kernel(t: f64) -> IntegralValue {
    Measure::Density(ReferenceSpectrum::MehlerSigma.measure())
        .laplace_transform(t)
        .unwrap_or(IntegralValue::Divergent)
}

/// Large-t behaviour of h_σ: the leading term π⁻² ln t / t and the two-term
/// form π⁻² (ln t + ln 2π + γ)/t that follows from arcsech(y) ≈ ln(2/y).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MehlerAsymptotics {
    pub t: f64,
    pub value: f64,
    pub leading: f64,
    pub two_term: f64,
}

impl MehlerAsymptotics {
    pub fn at(t: f64) -> Result<Self> {
        let value = mehler_kernel(t)
            .finite()
            .ok_or(Error::Divergent { quantity: "mehler kernel" })?;
        let pi2 = PI * PI;
        Ok(MehlerAsymptotics {
            t,
            value,
            leading: t.ln() / (pi2 * t),
            two_term: (t.ln() + (2.0 * PI).ln() + EULER_GAMMA) / (pi2 * t),
        })
    }

    pub fn leading_ratio(&self) -> f64 {
        self.value / self.leading
    }

    pub fn two_term_ratio(&self) -> f64 {
        self.value / self.two_term
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Stirling series for ln Γ with upward shift, as an independent check.
    fn stirling_ln_gamma(z: Complex64) -> Complex64 {
        let mut shift = Complex64::new(0.0, 0.0);
        let mut w = z;
        while w.norm() < 20.0 {
            shift += w.ln();
            w += 1.0;
        }
        let inv = 1.0 / w;
        let inv2 = inv * inv;
        let series = inv
            * (1.0 / 12.0
                - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 * (1.0 / 1188.0)))));
        (w - 0.5) * w.ln() - w + 0.5 * (2.0 * PI).ln() + series - shift
    }

    #[test]
    fn gamma_quarter() {
        assert_relative_eq!(log_abs_gamma_quarter(0.0), 3.625_609_908_221_908_3_f64.ln(), max_relative = 1e-13);
        assert_eq!(log_abs_gamma_quarter(3.7), log_abs_gamma_quarter(-3.7));
        for k in [0.0, 0.5, 1.0, 3.0, 10.0, 25.0, 50.0] {
            let z = Complex64::new(0.25, 0.5 * k);
            let expected = stirling_ln_gamma(z).re;
            assert!(
                (log_abs_gamma_quarter(k) - expected).abs() <= 1e-12 * expected.abs().max(1.0),
                "k={k}: {} vs {expected}",
                log_abs_gamma_quarter(k)
            );
        }
        // |Γ(¼ + iy)| ~ √(2π) |y|^{-1/4} e^{-π|y|/2}
        for k in [20.0, 40.0] {
            let y: f64 = 0.5 * k;
            let approx = 0.5 * (2.0 * PI).ln() - 0.25 * y.ln() - PI * y / 2.0;
            assert!((log_abs_gamma_quarter(k) - approx).abs() < 0.01);
        }
    }

    #[test]
    fn mehler_values() {
        assert_eq!(mehler_density(PI), 0.0);
        let l = PI / PI.cosh();
        assert_relative_eq!(mehler_density(l), 1.0 / PI, max_relative = 1e-13);
        assert_relative_eq!(reference_cdf(ReferenceSpectrum::MehlerSigma, PI), 0.5, max_relative = 1e-10);
    }

    #[test]
    fn rosenblum_values() {
        assert_eq!(rosenblum_density(PI), 0.0);
        let l = PI / PI.cosh();
        let g = Complex64::new(0.25, 0.5);
        let expected = (4.0 * stirling_ln_gamma(g).re).exp() / (2.0 * PI * PI * l);
        assert_relative_eq!(rosenblum_density(l), expected, max_relative = 1e-11);
        assert_relative_eq!(reference_cdf(ReferenceSpectrum::RosenblumRho, PI), 2.0, max_relative = 1e-10);
        // the density stays bounded near 0, tending to 2/π
        assert_relative_eq!(rosenblum_density(1e-200), 2.0 / PI, max_relative = 1e-2);
    }

    #[test]
    fn arcsech_branches() {
        assert_eq!(arcsech(1.0), 0.0);
        assert_relative_eq!(arcsech(1.0 / PI.cosh()), PI, max_relative = 1e-14);
        assert_relative_eq!(arcsech(1e-200), (2e200f64).ln(), max_relative = 1e-15);
    }

    #[test]
    fn names() {
        assert_eq!("mehler".parse::<ReferenceSpectrum>().unwrap(), ReferenceSpectrum::MehlerSigma);
        assert_eq!("rosenblum_rho".parse::<ReferenceSpectrum>().unwrap(), ReferenceSpectrum::RosenblumRho);
        assert!(matches!("carleman".parse::<ReferenceSpectrum>(), Err(Error::UnknownReference(_))));
    }

    #[test]
    fn self_comparison_is_quadrature_limited() {
        // A Gauss rule's CDF is within one atom weight of the true CDF, so the
        // distance is bounded by the heaviest atom, here about 2.3e-3.
        for r in [ReferenceSpectrum::MehlerSigma, ReferenceSpectrum::RosenblumRho] {
            let cfg = crate::discretize::DiscretizationConfig::new(400).single_panel();
            let atoms = crate::discretize::discretize(&r.measure(), &cfg).unwrap();
            let heaviest = atoms.weights().into_iter().fold(0.0, f64::max);
            let d = compare(&atoms, r).unwrap();
            assert!(d <= 0.5 * heaviest + 1e-4, "{r}: {d} vs heaviest atom {heaviest}");
            assert!(d <= 1.2e-3 * r.total_mass() / 0.5, "{r}: {d}");
        }
    }

    #[test]
    fn mehler_kernel_asymptotics() {
        let mut last = f64::INFINITY;
        for t in [1e2, 1e4, 1e6] {
            let a = MehlerAsymptotics::at(t).unwrap();
            assert!((a.two_term_ratio() - 1.0).abs() <= 0.1, "{a:?}");
            let lead = a.leading_ratio() - 1.0;
            assert!(lead > 0.0 && lead < last, "{a:?}");
            last = lead;
        }
        // h_σ(0+) is the mass
        assert_relative_eq!(mehler_kernel(1e-12).finite().unwrap(), 0.5, max_relative = 1e-9);
    }
}
