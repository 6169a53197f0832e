use serde::{Deserialize, Serialize};

use super::{TunerError, REDUCTION_FACTOR};

/// Closed search range `[lo, hi]` for one normalized gain.
///
/// The width is carried alongside the endpoints: trisection shrinks it by
/// exactly 2/3 per step, while `hi - lo` of narrow intervals far from zero
/// would be dominated by the rounding of the endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
    width: f64,
}

impl Interval {
    pub const UNIT: Interval = Interval {
        lo: 0.0,
        hi: 1.0,
        width: 1.0,
    };

    pub fn new(lo: f64, hi: f64) -> Result<Self, TunerError> {
        // NaN fails every comparison below.
        if (0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi) && lo < hi {
            Ok(Self {
                lo,
                hi,
                width: hi - lo,
            })
        } else {
            Err(TunerError::InvalidInterval { lo, hi })
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Equal trisection points.
    pub fn thirds(&self) -> (f64, f64) {
        (self.lo + self.width / 3.0, self.lo + 2.0 * self.width / 3.0)
    }

    /// `[lo, upper third]`.
    pub fn keep_lower(&self) -> Self {
        Self {
            lo: self.lo,
            hi: self.thirds().1,
            width: self.width * REDUCTION_FACTOR,
        }
    }

    /// `[lower third, hi]`.
    pub fn keep_upper(&self) -> Self {
        Self {
            lo: self.thirds().0,
            hi: self.hi,
            width: self.width * REDUCTION_FACTOR,
        }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, p: f64) -> bool {
        self.lo <= p && p <= self.hi
    }

    /// True when `other` lies entirely inside `self`.
    pub fn encloses(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }
}

/// Normalized `(k_P, k_D)` pair in the unit box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainPoint {
    pub k_p: f64,
    pub k_d: f64,
}

impl GainPoint {
    pub fn new(k_p: f64, k_d: f64) -> Result<Self, TunerError> {
        for g in [k_p, k_d] {
            if !(0.0..=1.0).contains(&g) {
                return Err(TunerError::InvalidGain(g));
            }
        }
        Ok(Self { k_p, k_d })
    }

    /// Bitwise equality, used by the repeat-point stopping rule.
    pub fn same_bits(&self, other: &GainPoint) -> bool {
        self.k_p.to_bits() == other.k_p.to_bits() && self.k_d.to_bits() == other.k_d.to_bits()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_reversed() {
        assert!(Interval::new(0.5, 0.5).is_err());
        assert!(Interval::new(0.6, 0.5).is_err());
        assert!(Interval::new(f64::NAN, 0.5).is_err());
        assert!(Interval::new(-0.1, 0.5).is_err());
        assert!(Interval::new(0.2, 1.1).is_err());
    }

    #[test]
    fn trisection_shrinks_exactly() {
        let mut iv = Interval::new(0.9, 0.9 + 1e-3).unwrap();
        let mut w = iv.width();
        for k in 0..30 {
            iv = if k % 2 == 0 {
                iv.keep_upper()
            } else {
                iv.keep_lower()
            };
            w *= REDUCTION_FACTOR;
            assert_eq!(iv.width(), w);
        }
        let before = Interval::UNIT;
        assert!(before.encloses(&before.keep_lower()) && before.encloses(&before.keep_upper()));
    }

    #[test]
    fn gain_point_bounds() {
        assert!(GainPoint::new(0.0, 1.0).is_ok());
        assert!(matches!(GainPoint::new(1.5, 0.0), Err(TunerError::InvalidGain(g)) if g == 1.5));
    }
}
