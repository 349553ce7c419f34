//! Split values between two groups of projected values.
//!
//! | rule | name                               | centre | weight on group 1       |
//! |------|------------------------------------|--------|-------------------------|
//! | 1    | mean                               | mean   | 1/2                     |
//! | 2    | sample size weighted mean          | mean   | n2 / (n1+n2)            |
//! | 3    | standard deviation weighted mean   | mean   | s2 / (s1+s2)            |
//! | 4    | standard error weighted mean       | mean   | (s2/√n2) / (s1/√n1 + s2/√n2) |
//! | 5    | median                             | median | 1/2                     |
//! | 6    | sample size weighted median        | median | n2 / (n1+n2)            |
//! | 7    | IQR weighted median                | median | IQR2 / (IQR1+IQR2)      |
//! | 8    | sample size and IQR weighted median| median | (IQR2/√n2) / (IQR1/√n1 + IQR2/√n2) |
//!
//! Group 2 gets the complementary weight. Rules 3, 4, 7 and 8 fall back to
//! rule 1 (means) or rule 5 (medians) when their weight denominator is zero.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupStats {
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    pub iqr: f64,
    pub count: usize,
}

/// One of the eight split rules, `1..=8`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct SplitRule(u8);

impl SplitRule {
    pub const MEAN: SplitRule = SplitRule(1);
    pub const MEDIAN: SplitRule = SplitRule(5);

    pub fn new(id: u8) -> Result<Self> {
        if (1..=8).contains(&id) {
            Ok(SplitRule(id))
        } else {
            Err(Error::InvalidRule(id))
        }
    }

    pub fn id(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = SplitRule> {
        (1..=8).map(SplitRule)
    }

    pub fn uses_median(self) -> bool {
        self.0 >= 5
    }

    pub fn name(self) -> &'static str {
        match self.0 {
            1 => "mean",
            2 => "sample size weighted mean",
            3 => "standard deviation weighted mean",
            4 => "standard error weighted mean",
            5 => "median",
            6 => "sample size weighted median",
            7 => "IQR weighted median",
            _ => "sample size and IQR weighted median",
        }
    }
}

impl Default for SplitRule {
    fn default() -> Self {
        SplitRule::MEAN
    }
}

impl TryFrom<u8> for SplitRule {
    type Error = Error;
    fn try_from(id: u8) -> Result<Self> {
        SplitRule::new(id)
    }
}

impl From<SplitRule> for u8 {
    fn from(r: SplitRule) -> u8 {
        r.0
    }
}

impl fmt::Display for SplitRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule {} ({})", self.0, self.name())
    }
}

/// A computed split value. `applied` differs from the requested rule when a
/// weighted rule fell back because its denominator vanished.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitValue {
    pub c: f64,
    pub applied: SplitRule,
}

impl SplitValue {
    pub fn fell_back(&self, requested: SplitRule) -> bool {
        self.applied != requested
    }
}

/// Linear-interpolation ("type 7") quantile of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize_group(z: &[f64]) -> Result<GroupStats> {
    if z.is_empty() {
        return Err(Error::EmptyGroup);
    }
    let n = z.len();
    let mean = z.iter().sum::<f64>() / n as f64;
    let mut sorted = z.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (sd, iqr) = if n == 1 {
        (0.0, 0.0)
    } else {
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (
            var.sqrt(),
            quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25),
        )
    };
    Ok(GroupStats {
        mean,
        median: quantile_sorted(&sorted, 0.5),
        sd,
        iqr,
        count: n,
    })
}

/// Split value between `g1` (lower centre) and `g2`.
pub fn split_value(rule: SplitRule, g1: &GroupStats, g2: &GroupStats) -> SplitValue {
    let (n1, n2) = (g1.count as f64, g2.count as f64);
    let (w1, centre1, centre2) = match rule.0 {
        1 => (0.5, g1.mean, g2.mean),
        2 => (n2 / (n1 + n2), g1.mean, g2.mean),
        3 => match weight(g2.sd, g1.sd) {
            Some(w) => (w, g1.mean, g2.mean),
            None => return split_value(SplitRule::MEAN, g1, g2),
        },
        4 => match weight(g2.sd / n2.sqrt(), g1.sd / n1.sqrt()) {
            Some(w) => (w, g1.mean, g2.mean),
            None => return split_value(SplitRule::MEAN, g1, g2),
        },
        5 => (0.5, g1.median, g2.median),
        6 => (n2 / (n1 + n2), g1.median, g2.median),
        7 => match weight(g2.iqr, g1.iqr) {
            Some(w) => (w, g1.median, g2.median),
            None => return split_value(SplitRule::MEDIAN, g1, g2),
        },
        _ => match weight(g2.iqr / n2.sqrt(), g1.iqr / n1.sqrt()) {
            Some(w) => (w, g1.median, g2.median),
            None => return split_value(SplitRule::MEDIAN, g1, g2),
        },
    };
    SplitValue {
        c: w1 * centre1 + (1.0 - w1) * centre2,
        applied: rule,
    }
}

/// `own / (own + other)`, or `None` when the denominator is not positive.
fn weight(own: f64, other: f64) -> Option<f64> {
    let den = own + other;
    (den > 0.0 && den.is_finite()).then(|| own / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn stats(mean: f64, median: f64, sd: f64, iqr: f64, count: usize) -> GroupStats {
        GroupStats {
            mean,
            median,
            sd,
            iqr,
            count,
        }
    }

    #[test]
    fn summaries() {
        let s = summarize_group(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((s.mean, s.median, s.sd, s.count), (2.0, 2.0, 1.0, 3));
        assert_eq!(s.iqr, 1.0);

        let s = summarize_group(&[5.0]).unwrap();
        assert_eq!(
            (s.mean, s.median, s.sd, s.iqr, s.count),
            (5.0, 5.0, 0.0, 0.0, 1)
        );

        let s = summarize_group(&[0.0; 4]).unwrap();
        assert_eq!((s.sd, s.iqr), (0.0, 0.0));

        assert!(matches!(summarize_group(&[]), Err(Error::EmptyGroup)));
    }

    #[test]
    fn type7_quantiles() {
        // R: quantile(c(1, 2, 4, 7, 11), c(.25, .75)) == 2, 7
        let s = summarize_group(&[7.0, 1.0, 11.0, 2.0, 4.0]).unwrap();
        assert_eq!(s.iqr, 5.0);
        // R: quantile(1:4, c(.25, .5, .75)) == 1.75, 2.5, 3.25
        let s = summarize_group(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.median, 2.5);
        assert_abs_diff_eq!(s.iqr, 1.5, epsilon = 1e-15);
    }

    #[test]
    fn worked_values() {
        let r = |id| SplitRule::new(id).unwrap();
        let v = split_value(
            r(1),
            &stats(0.0, 0.0, 1.0, 1.0, 5),
            &stats(2.0, 2.0, 1.0, 1.0, 5),
        );
        assert_eq!(v.c, 1.0);
        let v = split_value(
            r(2),
            &stats(0.0, 0.0, 0.0, 0.0, 1),
            &stats(4.0, 4.0, 1.0, 1.0, 3),
        );
        assert_abs_diff_eq!(v.c, 1.0, epsilon = 1e-15);
        let v = split_value(
            r(5),
            &stats(9.0, -1.0, 1.0, 1.0, 5),
            &stats(9.0, 3.0, 1.0, 1.0, 5),
        );
        assert_eq!(v.c, 1.0);
        let v = split_value(
            r(3),
            &stats(0.0, 0.0, 1.0, 1.0, 5),
            &stats(3.0, 3.0, 2.0, 1.0, 5),
        );
        assert_abs_diff_eq!(v.c, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_spread_falls_back() {
        let g1 = stats(0.0, 1.0, 0.0, 0.0, 1);
        let g2 = stats(4.0, 3.0, 0.0, 0.0, 1);
        for (id, expect, applied) in [(3, 2.0, 1), (4, 2.0, 1), (7, 2.0, 5), (8, 2.0, 5)] {
            let v = split_value(SplitRule::new(id).unwrap(), &g1, &g2);
            assert_eq!(v.c, expect);
            assert_eq!(v.applied.id(), applied);
            assert!(v.fell_back(SplitRule::new(id).unwrap()));
        }
    }

    #[test]
    fn rule_range() {
        assert!(SplitRule::new(0).is_err());
        assert!(SplitRule::new(9).is_err());
        assert_eq!(SplitRule::all().count(), 8);
        assert!(serde_json::from_str::<SplitRule>("9").is_err());
        assert_eq!(serde_json::from_str::<SplitRule>("4").unwrap().id(), 4);
    }

    fn arb_stats() -> impl Strategy<Value = GroupStats> {
        (
            -50.0..50.0f64,
            -50.0..50.0f64,
            0.0..5.0f64,
            0.0..5.0f64,
            1usize..200,
        )
            .prop_map(|(mean, median, sd, iqr, count)| stats(mean, median, sd, iqr, count))
    }

    proptest! {
        #[test]
        fn value_lies_between_centres(a in arb_stats(), b in arb_stats(), id in 1u8..=8) {
            let rule = SplitRule::new(id).unwrap();
            let (ca, cb) = if rule.uses_median() { (a.median, b.median) } else { (a.mean, b.mean) };
            let (g1, g2) = if ca <= cb { (a, b) } else { (b, a) };
            let c = split_value(rule, &g1, &g2).c;
            let (lo, hi) = (ca.min(cb), ca.max(cb));
            prop_assert!(c >= lo - 1e-12 && c <= hi + 1e-12);
        }

        #[test]
        fn unweighted_rules_are_symmetric(a in arb_stats(), b in arb_stats()) {
            for rule in [SplitRule::MEAN, SplitRule::MEDIAN] {
                prop_assert_eq!(split_value(rule, &a, &b).c, split_value(rule, &b, &a).c);
            }
        }
    }
}
