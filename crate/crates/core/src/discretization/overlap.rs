use std::f64::consts::PI;

use crate::{Error, Result};

/// Largest bandwidth parameter `c = delta^2 / 4` for which the truncated series is used.
const MAX_BANDWIDTH: f64 = 1.0;

/// Squared radial prolate spheroidal function `S0(1, c)^2` by its small-`c` series
/// `1 - c^2/9 + 23 c^4/2025`, truncation error `O(c^6)` (below `1e-3` for `c <= 1`).
pub fn prolate_factor(c: f64) -> f64 {
    let c2 = c * c;
    1.0 - c2 / 9.0 + 23.0 * c2 * c2 / 2025.0
}

/// Overlap `c(delta) = delta^2 / (2 pi) * S0(1, delta^2/4)^2` between amplitude and phase
/// projections onto intervals of width `delta` (`hbar = 1`).
pub fn overlap_c(delta: f64) -> Result<f64> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::invalid(format!("bin width must be positive, got {delta}")));
    }
    let bandwidth = delta * delta / 4.0;
    if bandwidth > MAX_BANDWIDTH {
        return Err(Error::invalid(format!("bin width {delta} is outside the range where the overlap is resolved")));
    }
    let c = delta * delta / (2.0 * PI) * prolate_factor(bandwidth);
    if c >= 1.0 {
        return Err(Error::invalid(format!("overlap c({delta}) = {c} >= 1 makes the uncertainty relation trivial")));
    }
    Ok(c)
}
