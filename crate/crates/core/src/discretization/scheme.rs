use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Outcomes beyond this many standard deviations are folded into the end bins when the
/// scheme has no cutoff.
pub const TRUNCATION_SIGMAS: f64 = 12.0;

/// Interval partition of the quadrature axis.
///
/// With a finite cutoff `alpha` the bins are `(-inf, -alpha + delta]`,
/// `(-alpha + delta, -alpha + 2 delta]`, ..., `(alpha - delta, inf)`, i.e. `2 alpha / delta`
/// bins. Without a cutoff the axis is binned uniformly with width `delta` everywhere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinningScheme {
    alpha: Option<f64>,
    delta: f64,
}

impl BinningScheme {
    pub fn finite(alpha: f64, delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::invalid(format!("bin width must be positive, got {delta}")));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::invalid(format!("cutoff alpha must be positive and finite, got {alpha}")));
        }
        let ratio = 2.0 * alpha / delta;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 2.0 {
            return Err(Error::invalid(format!("2 alpha / delta = {ratio} must be an integer >= 2")));
        }
        Ok(Self { alpha: Some(alpha), delta })
    }

    pub fn infinite(delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::invalid(format!("bin width must be positive, got {delta}")));
        }
        Ok(Self { alpha: None, delta })
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `|X| = 2 alpha / delta` for a finite cutoff.
    pub fn alphabet_size(&self) -> Option<usize> {
        self.alpha.map(|a| (2.0 * a / self.delta).round() as usize)
    }

    /// Concrete bin layout for outcomes with standard deviation up to `sigma`.
    ///
    /// A scheme without cutoff is truncated at `TRUNCATION_SIGMAS * sigma`, rounded out to
    /// a multiple of `delta` so the bin edges sit on the lattice `delta * Z`.
    pub fn lattice(&self, sigma: f64) -> Lattice {
        match self.alpha {
            Some(alpha) => Lattice { lower: -alpha, delta: self.delta, bins: self.alphabet_size().unwrap_or(2) },
            None => {
                let half = (TRUNCATION_SIGMAS * sigma / self.delta).ceil().max(1.0) as usize;
                Lattice { lower: -(half as f64) * self.delta, delta: self.delta, bins: 2 * half }
            }
        }
    }
}

/// `bins` intervals with interior edges `lower + i * delta`, `i = 1..bins`; the first and
/// last bins extend to infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lattice {
    pub lower: f64,
    pub delta: f64,
    pub bins: usize,
}

impl Lattice {
    /// Edge `i` for `i` in `0..=bins`; edge 0 is `-inf` and edge `bins` is `+inf`.
    pub fn edge(&self, i: usize) -> f64 {
        if i == 0 {
            f64::NEG_INFINITY
        } else if i >= self.bins {
            f64::INFINITY
        } else {
            self.lower + i as f64 * self.delta
        }
    }

    /// Zero-based bin index of `x`.
    pub fn index_of(&self, x: f64) -> usize {
        let raw = ((x - self.lower) / self.delta).ceil();
        if raw.is_nan() || raw < 1.0 {
            0
        } else {
            (raw as usize - 1).min(self.bins - 1)
        }
    }

    /// Bits needed to write one bin index.
    pub fn bits_per_symbol(&self) -> u32 {
        usize::BITS - (self.bins.max(2) - 1).leading_zeros()
    }
}
