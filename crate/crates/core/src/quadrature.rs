//! Gauss–Legendre rules, adaptive Gauss–Kronrod integration and integration
//! over (sub)intervals of the half line with divergence detection.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

/// Result of integrating a nonnegative quantity that may be infinite.
///
/// Divergence is reported as its own variant instead of `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntegralValue {
    Finite(f64),
    Divergent,
}

impl IntegralValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            IntegralValue::Finite(v) => Some(v),
            IntegralValue::Divergent => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, IntegralValue::Finite(_))
    }

    pub fn map(self, f: impl FnOnce(f64) -> f64) -> IntegralValue {
        match self {
            IntegralValue::Finite(v) => IntegralValue::Finite(f(v)),
            IntegralValue::Divergent => IntegralValue::Divergent,
        }
    }
}

impl std::ops::Add for IntegralValue {
    type Output = IntegralValue;

    fn add(self, other: IntegralValue) -> IntegralValue {
        match (self, other) {
            (IntegralValue::Finite(a), IntegralValue::Finite(b)) => IntegralValue::Finite(a + b),
            _ => IntegralValue::Divergent,
        }
    }
}

/// Nodes (ascending) and weights of the `n`-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess for the i-th largest root
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1e-300) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to [a, b].
pub fn gauss_legendre_on(a: f64, b: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let (t, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let nodes = t.iter().map(|&t| mid + half * t).collect();
    let weights = w.iter().map(|&w| half * w).collect();
    (nodes, weights)
}

// Kronrod 15-point abscissae and weights, Gauss 7-point weights (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One application of the 15-point Kronrod rule; returns (estimate, error).
pub fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (value, err)
}

/// Tolerances for globally adaptive Gauss–Kronrod integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adaptive {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for Adaptive {
    fn default() -> Self {
        Adaptive {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_subdivisions: 1 << 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

impl Adaptive {
    /// Integrates `f` over the finite interval [a, b] by repeated bisection of
    /// the segment with the largest error estimate.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> Estimate {
        if a == b {
            return Estimate { value: 0.0, error: 0.0, converged: true };
        }
        let (value, error) = gauss_kronrod_15(f, a, b);
        let mut heap = BinaryHeap::new();
        heap.push(Segment { a, b, value, error });
        let mut total = value;
        let mut total_err = error;
        let mut segments = 1usize;
        while total_err > self.abs_tol.max(self.rel_tol * total.abs()) {
            if segments >= self.max_subdivisions {
                return Estimate { value: total, error: total_err, converged: false };
            }
            let worst = heap.pop().expect("heap never empties");
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a || mid >= worst.b {
                // interval exhausted at machine resolution
                heap.push(worst);
                break;
            }
            let (v1, e1) = gauss_kronrod_15(f, worst.a, mid);
            let (v2, e2) = gauss_kronrod_15(f, mid, worst.b);
            total += v1 + v2 - worst.value;
            total_err += e1 + e2 - worst.error;
            heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
            heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
            segments += 1;
            // periodically resum to avoid drift in the running totals
            if segments % 1024 == 0 {
                total = heap.iter().map(|s| s.value).sum();
                total_err = heap.iter().map(|s| s.error).sum();
            }
        }
        let value: f64 = heap.iter().map(|s| s.value).sum();
        let error: f64 = heap.iter().map(|s| s.error).sum();
        Estimate {
            value,
            error,
            converged: error <= self.abs_tol.max(self.rel_tol * value.abs()) * 1.0001,
        }
    }

    /// Integrates a nonnegative integrand over `(lo, hi)` with `0 <= lo < hi <= ∞`.
    ///
    /// Neighbourhoods of 0 and of ∞ are covered by dyadic shells; the shell
    /// contributions decide between convergence and divergence.
    pub fn integrate_half_line<F: Fn(f64) -> f64>(&self, f: &F, lo: f64, hi: f64) -> IntegralValue {
        assert!(lo >= 0.0 && hi > lo, "need 0 <= lo < hi");
        let shell_tol = Adaptive {
            abs_tol: self.abs_tol / 64.0,
            ..*self
        };
        match (lo > 0.0, hi.is_finite()) {
            (true, true) => IntegralValue::Finite(self.integrate(f, lo, hi).value),
            (false, true) => shell_tol.shells_toward_zero(f, hi),
            (true, false) => shell_tol.shells_toward_infinity(f, lo),
            (false, false) => shell_tol.shells_toward_zero(f, 1.0) + shell_tol.shells_toward_infinity(f, 1.0),
        }
    }

    fn shells_toward_zero<F: Fn(f64) -> f64>(&self, f: &F, top: f64) -> IntegralValue {
        self.shells(|k| {
            let b = top * 0.5f64.powi(k as i32);
            let a = 0.5 * b;
            self.integrate(f, a, b).value
        })
    }

    fn shells_toward_infinity<F: Fn(f64) -> f64>(&self, f: &F, bottom: f64) -> IntegralValue {
        self.shells(|k| {
            let a = bottom * 2f64.powi(k as i32);
            let b = 2.0 * a;
            if !b.is_finite() {
                return f64::NAN;
            }
            self.integrate(f, a, b).value
        })
    }

    fn shells(&self, mut shell: impl FnMut(usize) -> f64) -> IntegralValue {
        const MAX_SHELLS: usize = 400;
        const WINDOW: usize = 40;
        let mut contributions = Vec::with_capacity(MAX_SHELLS);
        let mut sum = 0.0;
        for k in 0..MAX_SHELLS {
            let c = shell(k);
            if !c.is_finite() {
                return IntegralValue::Divergent;
            }
            sum += c;
            contributions.push(c);
            if k >= 2 {
                let prev = contributions[k - 1];
                if c == 0.0 && prev == 0.0 && sum > 0.0 {
                    return IntegralValue::Finite(sum);
                }
                if sum > 0.0 && c <= prev && c <= 1e-17 * sum {
                    let ratio = if prev > 0.0 { c / prev } else { 0.0 };
                    return IntegralValue::Finite(sum + c * ratio / (1.0 - ratio));
                }
            }
        }
        let last = contributions[MAX_SHELLS - 1];
        let earlier = contributions[MAX_SHELLS - 1 - WINDOW];
        if earlier <= 0.0 {
            return IntegralValue::Finite(sum);
        }
        let ratio = (last / earlier).powf(1.0 / WINDOW as f64);
        if ratio < 0.97 {
            IntegralValue::Finite(sum + last * ratio / (1.0 - ratio))
        } else {
            IntegralValue::Divergent
        }
    }
}
