//! Scalar special functions and small numeric utilities.
//!
//! Everything here is deliberately self-contained: the truncated-Gaussian
//! moments used by the quantized output channel must stay accurate far into
//! the tails (standardized bounds of 30+ occur with coarse quantizers at high
//! SNR), which requires scaled-complementary-error-function (`erfcx`)
//! factorizations that general-purpose statistics crates do not expose.

use std::f64::consts::PI;

/// sqrt(2π), used by the standard normal density.
const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Standard normal probability density φ(x). Returns 0 for infinite `x`.
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        (-0.5 * x * x).exp() / SQRT_2PI
    }
}

/// Standard normal CDF Φ(x) = P(X ≤ x).
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal survival function Q(x) = P(X > x) = 1 − Φ(x), computed
/// without cancellation for large positive `x`.
#[inline]
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Scaled complementary error function `erfcx(x) = exp(x²)·erfc(x)` for
/// `x ≥ 0`.
///
/// For `x < 3` the direct product is exact enough (no overflow, and `erfc`
/// is well-scaled there). For `x ≥ 3` a 32-level Laplace continued fraction
/// is used; its relative error is ≤ 2e-17 at the switch point and falls
/// rapidly with `x`.
pub fn erfcx(x: f64) -> f64 {
    assert!(x >= 0.0, "erfcx requires x >= 0 (got {x})");
    if x < 3.0 {
        (x * x).exp() * libm::erfc(x)
    } else {
        // erfcx(x)·√π = 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
        let mut f = 0.0;
        for k in (1..=32u32).rev() {
            f = (k as f64 / 2.0) / (x + f);
        }
        1.0 / (PI.sqrt() * (x + f))
    }
}

/// First two moments of a standard normal random variable truncated to the
/// interval `[a, b]` (either bound may be infinite): returns `(mean, var)`.
///
/// Branches by regime so that tails and narrow bins keep full precision:
/// narrow finite bins use a midpoint expansion, intervals entirely in the
/// negative half-line are reflected, deep right tails use erfcx-factored
/// forms, and everything else uses the textbook φ/Φ expressions.
pub fn truncated_normal_moments(a: f64, b: f64) -> (f64, f64) {
    assert!(a < b, "truncated_normal_moments needs a < b (got [{a}, {b}])");
    if a.is_infinite() && b.is_infinite() {
        return (0.0, 1.0);
    }
    // Narrow finite bin: midpoint expansion (density ≈ constant over the bin).
    if a.is_finite() && b.is_finite() {
        let h = b - a;
        if h < 1e-4 {
            let m = 0.5 * (a + b);
            let mean = m * (1.0 - h * h / 12.0);
            let var = h * h / 12.0;
            return (mean, var.max(f64::MIN_POSITIVE));
        }
    }
    // Entirely non-positive interval: reflect to reuse the right-tail logic.
    if b <= 0.0 {
        let (m, v) = truncated_normal_moments(-b, -a);
        return (-m, v);
    }
    if a >= 4.0 {
        // Deep right tail. Factor e^{-a²/2} out of every term:
        //   Q(t) = φ(t)·erfcx(t/√2)·√(π/2)  ⇒ cancellation-free ratios.
        let ea = erfcx(a / std::f64::consts::SQRT_2);
        let c = 2.0 / SQRT_2PI;
        let (shrink, eb_scaled, b_term) = if b.is_infinite() {
            (0.0, 0.0, 0.0)
        } else {
            // e^{-(b²-a²)/2}, computed from the factored difference of squares.
            let e = (-(b - a) * (b + a) / 2.0).exp();
            (e, e * erfcx(b / std::f64::consts::SQRT_2), e * b)
        };
        let denom = ea - eb_scaled;
        let mean = c * (1.0 - shrink) / denom;
        let ev2 = 1.0 + c * (a - b_term) / denom;
        let var = (ev2 - mean * mean).max(f64::MIN_POSITIVE);
        return (mean, var);
    }
    // General case: moderate bounds, possibly spanning zero.
    let pa = normal_pdf(a);
    let pb = normal_pdf(b);
    let z = if a + b >= 0.0 {
        normal_sf(a) - normal_sf(b)
    } else {
        normal_cdf(b) - normal_cdf(a)
    };
    let z = z.max(f64::MIN_POSITIVE);
    let mean = (pa - pb) / z;
    let apa = if a.is_finite() { a * pa } else { 0.0 };
    let bpb = if b.is_finite() { b * pb } else { 0.0 };
    let ev2 = 1.0 + (apa - bpb) / z;
    let var = (ev2 - mean * mean).max(f64::MIN_POSITIVE);
    (mean, var)
}

/// Mean squared error `E[(x − Q(x))²]` of the `b`-bit uniform mid-rise
/// quantizer with step `delta` driven by a standard real Gaussian input.
///
/// Evaluated in closed form bin by bin using
/// `∫_a^c (x−ℓ)² φ(x) dx = (1+ℓ²)[Φ(c)−Φ(a)] − 2ℓ[φ(a)−φ(c)] + aφ(a) − cφ(c)`,
/// summed over the positive half and doubled (the quantizer is odd).
pub fn gaussian_quantizer_mse(delta: f64, bits: u8) -> f64 {
    assert!(delta > 0.0 && bits >= 1);
    let levels = 1u64 << (bits - 1);
    let mut total = 0.0;
    for i in 1..=levels {
        let lo = (i - 1) as f64 * delta;
        let hi = if i == levels {
            f64::INFINITY
        } else {
            i as f64 * delta
        };
        let level = (i as f64 - 0.5) * delta;
        let (phi_lo, phi_hi) = (normal_pdf(lo), normal_pdf(hi));
        let mass = normal_sf(lo) - if hi.is_finite() { normal_sf(hi) } else { 0.0 };
        let hi_term = if hi.is_finite() { hi * phi_hi } else { 0.0 };
        total += (1.0 + level * level) * mass - 2.0 * level * (phi_lo - phi_hi) + lo * phi_lo
            - hi_term;
    }
    2.0 * total
}

/// Golden-section minimization of a unimodal scalar function on `[lo, hi]`.
/// Returns the bracketing midpoint after the interval shrinks below `tol`.
pub fn golden_section_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - (b - a) * INV_PHI;
    let mut d = a + (b - a) * INV_PHI;
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * INV_PHI;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * INV_PHI;
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
