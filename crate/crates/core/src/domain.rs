//! Finite integer domains in canonical interval form.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A finite set of integers stored as sorted, disjoint, non-adjacent
/// inclusive intervals.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "Vec<(i64, i64)>", from = "Vec<(i64, i64)>")]
pub struct Domain {
    intervals: Vec<(i64, i64)>,
}

impl Domain {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The inclusive range `lo..=hi`; empty when `lo > hi`.
    pub fn range(lo: i64, hi: i64) -> Self {
        if lo > hi {
            return Self::empty();
        }
        Self {
            intervals: vec![(lo, hi)],
        }
    }

    pub fn singleton(v: i64) -> Self {
        Self::range(v, v)
    }

    /// Builds a domain from arbitrary values; duplicates are ignored.
    pub fn from_values<I: IntoIterator<Item = i64>>(values: I) -> Self {
        let mut vs: Vec<i64> = values.into_iter().collect();
        vs.sort_unstable();
        vs.dedup();
        let mut intervals: Vec<(i64, i64)> = Vec::new();
        for v in vs {
            match intervals.last_mut() {
                Some((_, hi)) if hi.checked_add(1) == Some(v) => *hi = v,
                _ => intervals.push((v, v)),
            }
        }
        Self { intervals }
    }

    /// Normalises arbitrary (possibly overlapping, unsorted) intervals.
    pub fn from_intervals<I: IntoIterator<Item = (i64, i64)>>(intervals: I) -> Self {
        let mut ivs: Vec<(i64, i64)> = intervals.into_iter().filter(|(lo, hi)| lo <= hi).collect();
        ivs.sort_unstable();
        let mut out: Vec<(i64, i64)> = Vec::with_capacity(ivs.len());
        for (lo, hi) in ivs {
            match out.last_mut() {
                Some((_, last_hi)) if lo <= last_hi.saturating_add(1) => {
                    *last_hi = (*last_hi).max(hi);
                }
                _ => out.push((lo, hi)),
            }
        }
        Self { intervals: out }
    }

    pub fn intervals(&self) -> &[(i64, i64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn len(&self) -> u64 {
        self.intervals
            .iter()
            .map(|&(lo, hi)| (hi as i128 - lo as i128 + 1) as u64)
            .sum()
    }

    pub fn min(&self) -> Option<i64> {
        self.intervals.first().map(|&(lo, _)| lo)
    }

    pub fn max(&self) -> Option<i64> {
        self.intervals.last().map(|&(_, hi)| hi)
    }

    pub fn contains(&self, v: i64) -> bool {
        self.intervals
            .binary_search_by(|&(lo, hi)| {
                if hi < v {
                    std::cmp::Ordering::Less
                } else if lo > v {
                    std::cmp::Ordering::Greater
                } else {
                    std::cmp::Ordering::Equal
                }
            })
            .is_ok()
    }

    /// True when the domain is a single interval (no holes).
    pub fn is_interval(&self) -> bool {
        self.intervals.len() <= 1
    }

    /// Values in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = i64> + '_ {
        self.intervals.iter().flat_map(|&(lo, hi)| lo..=hi)
    }

    pub fn values(&self) -> Vec<i64> {
        self.iter().collect()
    }

    pub fn remove(&self, v: i64) -> Self {
        Self::from_values(self.iter().filter(|&x| x != v))
    }

    pub fn retain<F: FnMut(i64) -> bool>(&self, mut keep: F) -> Self {
        Self::from_values(self.iter().filter(|&x| keep(x)))
    }

    pub fn intersect(&self, other: &Domain) -> Self {
        self.retain(|v| other.contains(v))
    }

    /// Splits the domain into `min(n, |d|)` contiguous runs of its values in
    /// ascending order. The first `|d| mod k` parts get one extra value.
    ///
    /// `n` must be at least 1.
    pub fn partition(&self, n: usize) -> Vec<Domain> {
        assert!(n >= 1, "partition factor must be positive");
        let values = self.values();
        if values.is_empty() {
            return Vec::new();
        }
        let k = n.min(values.len());
        let base = values.len() / k;
        let extra = values.len() % k;
        let mut parts = Vec::with_capacity(k);
        let mut start = 0;
        for i in 0..k {
            let size = base + usize::from(i < extra);
            parts.push(Domain::from_values(values[start..start + size].iter().copied()));
            start += size;
        }
        parts
    }
}

/// Free-function form of [`Domain::partition`].
pub fn domain_partition(d: &Domain, n: usize) -> Vec<Domain> {
    d.partition(n)
}

impl From<Vec<(i64, i64)>> for Domain {
    fn from(intervals: Vec<(i64, i64)>) -> Self {
        Domain::from_intervals(intervals)
    }
}

impl From<Domain> for Vec<(i64, i64)> {
    fn from(d: Domain) -> Self {
        d.intervals
    }
}

impl FromIterator<i64> for Domain {
    fn from_iter<I: IntoIterator<Item = i64>>(iter: I) -> Self {
        Domain::from_values(iter)
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, &(lo, hi)) in self.intervals.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            if lo == hi {
                write!(f, "{lo}")?;
            } else {
                write!(f, "{lo}..{hi}")?;
            }
        }
        f.write_str("}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(vs: &[i64]) -> Domain {
        Domain::from_values(vs.iter().copied())
    }

    #[test]
    fn canonical_form_merges_adjacent_values() {
        assert_eq!(d(&[4, 1, 2, 3, 3]).intervals(), &[(1, 4)]);
        assert_eq!(d(&[3, 7, 9, 8]).intervals(), &[(3, 3), (7, 9)]);
        assert_eq!(Domain::from_intervals([(5, 6), (1, 2), (3, 4)]).intervals(), &[(1, 6)]);
        assert!(Domain::range(2, 1).is_empty());
    }

    #[test]
    fn partition_examples() {
        let d4 = Domain::range(1, 4);
        assert_eq!(d4.partition(2), vec![d(&[1, 2]), d(&[3, 4])]);
        assert_eq!(d4.partition(4), vec![d(&[1]), d(&[2]), d(&[3]), d(&[4])]);
        assert_eq!(Domain::range(1, 5).partition(2), vec![d(&[1, 2, 3]), d(&[4, 5])]);
        assert_eq!(d(&[3, 7, 9]).partition(2), vec![d(&[3, 7]), d(&[9])]);
    }

    #[test]
    fn partition_degrades_to_singletons() {
        assert_eq!(d(&[1, 2]).partition(5), vec![d(&[1]), d(&[2])]);
        assert_eq!(Domain::range(1, 4).partition(1), vec![Domain::range(1, 4)]);
    }

    #[test]
    #[should_panic]
    fn partition_zero_is_a_precondition_violation() {
        Domain::range(1, 4).partition(0);
    }

    #[test]
    fn membership_and_size() {
        let x = d(&[-3, -2, 5, 7]);
        assert_eq!(x.len(), 4);
        assert!(x.contains(-2));
        assert!(!x.contains(6));
        assert_eq!(x.min(), Some(-3));
        assert_eq!(x.max(), Some(7));
        assert_eq!(x.to_string(), "{-3..-2, 5, 7}");
    }

    proptest! {
        #[test]
        fn partition_is_an_ordered_exact_cover(
            values in proptest::collection::btree_set(-50i64..50, 1..40),
            n in 1usize..12,
        ) {
            let dom = Domain::from_values(values.iter().copied());
            let parts = dom.partition(n);
            prop_assert_eq!(parts.len(), n.min(values.len()));
            let flat: Vec<i64> = parts.iter().flat_map(|p| p.values()).collect();
            prop_assert_eq!(flat, dom.values());
            let sizes: Vec<u64> = parts.iter().map(|p| p.len()).collect();
            let max = *sizes.iter().max().unwrap();
            let min = *sizes.iter().min().unwrap();
            prop_assert!(max - min <= 1);
            // larger parts come first
            prop_assert!(sizes.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn intervals_stay_canonical(values in proptest::collection::vec(-20i64..20, 0..30)) {
            let dom = Domain::from_values(values);
            for w in dom.intervals().windows(2) {
                prop_assert!(w[0].1 + 1 < w[1].0);
            }
            for &(lo, hi) in dom.intervals() {
                prop_assert!(lo <= hi);
            }
        }
    }
}
