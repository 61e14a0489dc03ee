//! Standard normal helpers.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use statrs::distribution::{ContinuousCDF, Normal};

pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `P[X <= x]`.
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `P[X > x]`, accurate deep into the upper tail.
pub fn sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// `P[a < X <= b]` without cancellation in either tail.
pub fn interval(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        sf(a) - sf(b)
    } else if b <= 0.0 {
        cdf(b) - cdf(a)
    } else {
        1.0 - cdf(a) - sf(b)
    }
}

/// Quantile `z` with `P[X > z] = upper_tail`.
pub fn upper_quantile(upper_tail: f64) -> f64 {
    if upper_tail >= 1.0 {
        return f64::NEG_INFINITY;
    }
    if upper_tail <= 0.0 {
        return f64::INFINITY;
    }
    let std = Normal::standard();
    // inverse_cdf loses precision near 1, so use the symmetric lower tail.
    -std.inverse_cdf(upper_tail)
}
