//! Entropy impurity and the best single cut on a projected sample.

use crate::dataset::ClassId;
use crate::error::{Error, Result};

/// Combined entropies within this distance of the minimum count as ties.
pub(crate) const TIE_TOLERANCE: f64 = 1e-12;

/// `-sum p ln p` over the class proportions of `counts`.
pub fn entropy(counts: &[usize]) -> Result<f64> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptySubset);
    }
    Ok(entropy_of(counts, total))
}

fn entropy_of(counts: &[usize], total: usize) -> f64 {
    let n = total as f64;
    let e = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum::<f64>();
    // 1 * ln 1 can surface as -0.0
    e.max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropySplit {
    pub c: f64,
    /// Size-weighted mean of the two child entropies.
    pub combined: f64,
}

/// Cut minimizing the combined child entropy over the midpoints between
/// consecutive distinct sorted values of `z`. Near-ties (within
/// [`TIE_TOLERANCE`] of the minimum) resolve to the smallest cut.
pub fn best_entropy_split(z: &[f64], labels: &[ClassId]) -> Result<EntropySplit> {
    if z.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} projected values but {} labels",
            z.len(),
            labels.len()
        )));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite projected value"));
    }
    let mut classes: Vec<ClassId> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let dense: Vec<usize> = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label present"))
        .collect();

    let mut order: Vec<usize> = (0..z.len()).collect();
    order.sort_by(|&a, &b| z[a].total_cmp(&z[b]));

    let n = z.len();
    let mut right = vec![0usize; classes.len()];
    for &g in &dense {
        right[g] += 1;
    }
    let mut left = vec![0usize; classes.len()];

    let mut candidates: Vec<EntropySplit> = Vec::new();
    for k in 0..n.saturating_sub(1) {
        let g = dense[order[k]];
        left[g] += 1;
        right[g] -= 1;
        let (lo, hi) = (z[order[k]], z[order[k + 1]]);
        if lo == hi {
            continue;
        }
        let n_left = k + 1;
        let n_right = n - n_left;
        let combined = (n_left as f64 * entropy_of(&left, n_left)
            + n_right as f64 * entropy_of(&right, n_right))
            / n as f64;
        candidates.push(EntropySplit {
            c: midpoint(lo, hi),
            combined,
        });
    }

    let min = candidates
        .iter()
        .map(|s| s.combined)
        .fold(f64::INFINITY, f64::min);
    candidates
        .into_iter()
        .find(|s| s.combined <= min + TIE_TOLERANCE)
        .ok_or(Error::NoCandidateSplits)
}

/// Midpoint strictly above `lo`, so `lo` routes left.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m > lo {
        m
    } else {
        hi
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn entropy_values() {
        assert_eq!(entropy(&[10, 0, 0]).unwrap(), 0.0);
        assert_abs_diff_eq!(entropy(&[5, 5]).unwrap(), 2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(entropy(&[1, 1, 1, 1]).unwrap(), 4f64.ln(), epsilon = 1e-15);
        assert!(matches!(entropy(&[0, 0]), Err(Error::EmptySubset)));
    }

    #[test]
    fn clean_cut() {
        let s = best_entropy_split(&[0.0, 1.0, 2.0, 3.0], &[1, 1, 2, 2]).unwrap();
        assert_eq!(s.c, 1.5);
        assert_eq!(s.combined, 0.0);
    }

    #[test]
    fn pure_input_takes_first_cut() {
        let s = best_entropy_split(&[0.0, 1.0], &[1, 1]).unwrap();
        assert_eq!((s.c, s.combined), (0.5, 0.0));
    }

    #[test]
    fn constant_values_have_no_candidates() {
        assert!(matches!(
            best_entropy_split(&[2.0, 2.0, 2.0], &[1, 2, 1]),
            Err(Error::NoCandidateSplits)
        ));
    }

    #[test]
    fn duplicated_values_never_split() {
        // the only admissible cuts are 0.5 and 1.5
        let s = best_entropy_split(&[0.0, 1.0, 1.0, 2.0], &[1, 1, 2, 2]).unwrap();
        assert!(s.c == 0.5 || s.c == 1.5);
    }

    #[test]
    fn adjacent_floats() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        let c = midpoint(lo, hi);
        assert!(lo < c || c == hi);
        assert!(c <= hi);
    }

    proptest! {
        #[test]
        fn children_never_exceed_parent(
            pts in prop::collection::vec((-5i32..5, 1u32..4), 2..60)
        ) {
            let z: Vec<f64> = pts.iter().map(|p| p.0 as f64).collect();
            let labels: Vec<u32> = pts.iter().map(|p| p.1).collect();
            if let Ok(s) = best_entropy_split(&z, &labels) {
                let mut counts = [0usize; 4];
                for &l in &labels { counts[l as usize] += 1; }
                prop_assert!(s.combined <= entropy(&counts).unwrap() + 1e-12);
            }
        }
    }
}
