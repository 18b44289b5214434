//! Train/test size ranges for the generalization policies.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::TaskError;
use crate::rng::Rng;

/// Where the test distribution departs from the training one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SplitPolicy {
    #[default]
    Iid,
    /// Train on both ends of the base range, test in the middle.
    SizeInterpolation,
    /// Train in the middle, test on both ends.
    SizeExtrapolation,
    /// Train on regular polygons and circles, test on irregular convex polygons.
    IrregularConvex,
    /// Train on regular polygons and circles, test on non-convex polygons.
    NonConvex,
    /// Test sizes are the base range scaled by 1.5.
    ScaleUp,
    /// Test sizes are the base range scaled by 0.5.
    ScaleDown,
}

impl SplitPolicy {
    pub const ALL: [SplitPolicy; 7] = [
        SplitPolicy::Iid,
        SplitPolicy::SizeInterpolation,
        SplitPolicy::SizeExtrapolation,
        SplitPolicy::IrregularConvex,
        SplitPolicy::NonConvex,
        SplitPolicy::ScaleUp,
        SplitPolicy::ScaleDown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitPolicy::Iid => "iid",
            SplitPolicy::SizeInterpolation => "size_interpolation",
            SplitPolicy::SizeExtrapolation => "size_extrapolation",
            SplitPolicy::IrregularConvex => "irregular_convex",
            SplitPolicy::NonConvex => "non_convex",
            SplitPolicy::ScaleUp => "scale_up",
            SplitPolicy::ScaleDown => "scale_down",
        }
    }

    pub fn is_shape_shift(self) -> bool {
        matches!(self, SplitPolicy::IrregularConvex | SplitPolicy::NonConvex)
    }

    /// Policies whose train and test size ranges must not overlap.
    pub fn is_size_disjoint(self) -> bool {
        matches!(self, SplitPolicy::SizeInterpolation | SplitPolicy::SizeExtrapolation)
    }
}

impl fmt::Display for SplitPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An interval with independently open or closed ends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_closed: true,
            hi_closed: true,
        }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_closed: false,
            hi_closed: false,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        !(self.hi > self.lo) && !(self.hi == self.lo && self.lo_closed && self.hi_closed)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_closed { '[' } else { '(' },
            self.lo,
            self.hi,
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

/// Union of disjoint intervals, sampled uniformly by length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeRanges(pub Vec<Interval>);

impl SizeRanges {
    pub fn contains(&self, x: f64) -> bool {
        self.0.iter().any(|i| i.contains(x))
    }

    pub fn total_len(&self) -> f64 {
        self.0.iter().map(Interval::len).sum()
    }

    pub fn sample(&self, rng: &mut Rng) -> f64 {
        let total = self.total_len();
        loop {
            let mut u = rng.uniform(0.0, total);
            let mut pick = self.0[self.0.len() - 1];
            for iv in &self.0 {
                if u < iv.len() {
                    pick = *iv;
                    break;
                }
                u -= iv.len();
            }
            let x = pick.lo + u.min(pick.len());
            // open ends are hit with probability ~2^-53; redraw when they are
            if pick.contains(x) {
                return x;
            }
        }
    }

    /// Whether any value lies in both unions.
    pub fn overlaps(&self, other: &SizeRanges) -> bool {
        self.0.iter().any(|a| {
            other.0.iter().any(|b| {
                let lo = a.lo.max(b.lo);
                let hi = a.hi.min(b.hi);
                if lo < hi {
                    return true;
                }
                lo == hi && a.contains(lo) && b.contains(lo)
            })
        })
    }
}

impl fmt::Display for SizeRanges {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        f.write_str(&parts.join(" u "))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeSplits {
    pub train: SizeRanges,
    pub test: SizeRanges,
}

/// Train and test size ranges for `policy` around the base range `[lo, hi]`.
///
/// The size bands are `w = (hi - lo) / 6` wide on each side of the base
/// range ends: with the default `[20, 50]` interpolation trains on
/// `[15, 25] u [45, 55]` and tests on `(25, 45)`, extrapolation swaps the
/// roles with the open ends on the test side.
pub fn make_size_splits(base: (f64, f64), policy: SplitPolicy) -> Result<SizeSplits, TaskError> {
    let (lo, hi) = base;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(TaskError::InvalidConfig(format!(
            "size range must satisfy 0 < lo < hi, got [{lo}, {hi}]"
        )));
    }
    let w = (hi - lo) / 6.0;
    let one = |i| SizeRanges(vec![i]);
    let b = Interval::closed(lo, hi);
    let splits = match policy {
        SplitPolicy::Iid | SplitPolicy::IrregularConvex | SplitPolicy::NonConvex => SizeSplits {
            train: one(b),
            test: one(b),
        },
        SplitPolicy::SizeInterpolation | SplitPolicy::SizeExtrapolation => {
            if lo - w <= 0.0 {
                return Err(TaskError::InvalidConfig(format!(
                    "size range [{lo}, {hi}] leaves no room below {lo} for the outer band"
                )));
            }
            let ends = SizeRanges(vec![
                Interval::closed(lo - w, lo + w),
                Interval::closed(hi - w, hi + w),
            ]);
            let middle = one(Interval::closed(lo + w, hi - w));
            if policy == SplitPolicy::SizeInterpolation {
                SizeSplits {
                    train: ends,
                    test: one(Interval::open(lo + w, hi - w)),
                }
            } else {
                let test = SizeRanges(vec![
                    Interval {
                        hi_closed: false,
                        ..Interval::closed(lo - w, lo + w)
                    },
                    Interval {
                        lo_closed: false,
                        ..Interval::closed(hi - w, hi + w)
                    },
                ]);
                SizeSplits { train: middle, test }
            }
        }
        SplitPolicy::ScaleUp => SizeSplits {
            train: one(b),
            test: one(Interval::closed(1.5 * lo, 1.5 * hi)),
        },
        SplitPolicy::ScaleDown => SizeSplits {
            train: one(b),
            test: one(Interval::closed(0.5 * lo, 0.5 * hi)),
        },
    };
    Ok(splits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_ranges() {
        let s = make_size_splits((20.0, 50.0), SplitPolicy::Iid).unwrap();
        assert_eq!(s.train, s.test);
        assert_eq!(s.train.0, vec![Interval::closed(20.0, 50.0)]);

        let s = make_size_splits((20.0, 50.0), SplitPolicy::SizeInterpolation).unwrap();
        assert_eq!(s.train.to_string(), "[15, 25] u [45, 55]");
        assert_eq!(s.test.to_string(), "(25, 45)");

        let s = make_size_splits((20.0, 50.0), SplitPolicy::SizeExtrapolation).unwrap();
        assert_eq!(s.train.to_string(), "[25, 45]");
        assert_eq!(s.test.to_string(), "[15, 25) u (45, 55]");

        let s = make_size_splits((20.0, 50.0), SplitPolicy::ScaleUp).unwrap();
        assert_eq!(s.test.to_string(), "[30, 75]");
        let s = make_size_splits((20.0, 50.0), SplitPolicy::ScaleDown).unwrap();
        assert_eq!(s.test.to_string(), "[10, 25]");
    }

    #[test]
    fn size_policies_are_disjoint() {
        for p in [SplitPolicy::SizeInterpolation, SplitPolicy::SizeExtrapolation] {
            let s = make_size_splits((20.0, 50.0), p).unwrap();
            assert!(!s.train.overlaps(&s.test), "{p}");
            assert!(!s.test.contains(25.0) && !s.test.contains(45.0));
        }
        let s = make_size_splits((20.0, 50.0), SplitPolicy::Iid).unwrap();
        assert!(s.train.overlaps(&s.test));
    }

    #[test]
    fn bad_base_range() {
        assert!(make_size_splits((50.0, 20.0), SplitPolicy::Iid).is_err());
        assert!(make_size_splits((0.0, 20.0), SplitPolicy::Iid).is_err());
        assert!(make_size_splits((2.0, 40.0), SplitPolicy::SizeExtrapolation).is_err());
    }

    #[test]
    fn samples_stay_inside() {
        let s = make_size_splits((20.0, 50.0), SplitPolicy::SizeExtrapolation).unwrap();
        let mut rng = Rng::new(5);
        let (mut low, mut high) = (0i32, 0i32);
        for _ in 0..10_000 {
            let x = s.test.sample(&mut rng);
            assert!(s.test.contains(x));
            if x < 30.0 {
                low += 1;
            } else {
                high += 1;
            }
        }
        // equal band widths get equal mass
        assert!((low - high).abs() < 400, "{low} {high}");
    }
}
