//! Bitset domains plus a deletion trail.

use crate::domain::Domain;

#[derive(Debug, Clone)]
pub(crate) struct BitDomain {
    base: i64,
    words: Vec<u64>,
    size: usize,
}

impl BitDomain {
    pub(crate) fn from_domain(d: &Domain) -> Self {
        let (Some(lo), Some(hi)) = (d.min(), d.max()) else {
            return Self {
                base: 0,
                words: Vec::new(),
                size: 0,
            };
        };
        let span = (hi - lo) as usize + 1;
        let mut words = vec![0u64; span.div_ceil(64)];
        let mut size = 0;
        for v in d.iter() {
            let off = (v - lo) as usize;
            words[off / 64] |= 1 << (off % 64);
            size += 1;
        }
        Self { base: lo, words, size }
    }

    fn offset(&self, v: i64) -> Option<usize> {
        let off = v.checked_sub(self.base)?;
        let off = usize::try_from(off).ok()?;
        (off < self.words.len() * 64).then_some(off)
    }

    pub(crate) fn contains(&self, v: i64) -> bool {
        self.offset(v)
            .is_some_and(|off| self.words[off / 64] & (1 << (off % 64)) != 0)
    }

    pub(crate) fn len(&self) -> usize {
        self.size
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub(crate) fn min(&self) -> Option<i64> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| self.base + (i * 64 + w.trailing_zeros() as usize) as i64)
    }

    pub(crate) fn max(&self) -> Option<i64> {
        self.words
            .iter()
            .enumerate()
            .rev()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| self.base + (i * 64 + 63 - w.leading_zeros() as usize) as i64)
    }

    /// Smallest value strictly greater than `v`.
    pub(crate) fn next_above(&self, v: i64) -> Option<i64> {
        self.iter().find(|&x| x > v)
    }

    pub(crate) fn iter(&self) -> impl Iterator<Item = i64> + '_ {
        self.words.iter().enumerate().flat_map(move |(i, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(self.base + (i * 64 + b) as i64)
            })
        })
    }

    fn clear(&mut self, v: i64) -> bool {
        match self.offset(v) {
            Some(off) if self.words[off / 64] & (1 << (off % 64)) != 0 => {
                self.words[off / 64] &= !(1 << (off % 64));
                self.size -= 1;
                true
            }
            _ => false,
        }
    }

    fn set(&mut self, v: i64) {
        let off = self.offset(v).expect("restored value lies in the original span");
        debug_assert!(self.words[off / 64] & (1 << (off % 64)) == 0);
        self.words[off / 64] |= 1 << (off % 64);
        self.size += 1;
    }

    pub(crate) fn to_domain(&self) -> Domain {
        Domain::from_values(self.iter())
    }
}

/// Variable domains with undoable deletions.
#[derive(Debug, Clone)]
pub(crate) struct Store {
    doms: Vec<BitDomain>,
    trail: Vec<(usize, i64)>,
    /// Variables whose domain shrank since the last drain.
    dirty: Vec<usize>,
}

impl Store {
    pub(crate) fn new(doms: Vec<BitDomain>) -> Self {
        Self {
            doms,
            trail: Vec::new(),
            dirty: Vec::new(),
        }
    }

    pub(crate) fn dom(&self, var: usize) -> &BitDomain {
        &self.doms[var]
    }

    pub(crate) fn len(&self) -> usize {
        self.doms.len()
    }

    pub(crate) fn is_fixed(&self, var: usize) -> bool {
        self.doms[var].len() == 1
    }

    pub(crate) fn value(&self, var: usize) -> Option<i64> {
        if self.is_fixed(var) {
            self.doms[var].min()
        } else {
            None
        }
    }

    /// Removes `v` from `var`; returns whether anything changed.
    pub(crate) fn remove(&mut self, var: usize, v: i64) -> bool {
        if self.doms[var].clear(v) {
            self.trail.push((var, v));
            self.dirty.push(var);
            true
        } else {
            false
        }
    }

    /// Keeps only the values of `var` accepted by `keep`.
    pub(crate) fn retain<F: FnMut(i64) -> bool>(&mut self, var: usize, mut keep: F) {
        let drop: Vec<i64> = self.doms[var].iter().filter(|&v| !keep(v)).collect();
        for v in drop {
            self.remove(var, v);
        }
    }

    pub(crate) fn mark(&self) -> usize {
        self.trail.len()
    }

    pub(crate) fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let (var, v) = self.trail.pop().expect("trail longer than mark");
            self.doms[var].set(v);
        }
        self.dirty.clear();
    }

    pub(crate) fn take_dirty(&mut self) -> Vec<usize> {
        std::mem::take(&mut self.dirty)
    }

    pub(crate) fn domains(&self) -> Vec<Domain> {
        self.doms.iter().map(BitDomain::to_domain).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bitdomain_basics() {
        let d = BitDomain::from_domain(&Domain::from_values([-3, 0, 5, 70, 130]));
        assert_eq!(d.len(), 5);
        assert_eq!(d.min(), Some(-3));
        assert_eq!(d.max(), Some(130));
        assert_eq!(d.iter().collect::<Vec<_>>(), vec![-3, 0, 5, 70, 130]);
        assert_eq!(d.next_above(5), Some(70));
        assert!(!d.contains(1000));
        assert!(!d.contains(-4));
    }

    #[test]
    fn trail_restores_deletions() {
        let mut s = Store::new(vec![BitDomain::from_domain(&Domain::range(1, 4))]);
        let m = s.mark();
        assert!(s.remove(0, 2));
        assert!(!s.remove(0, 2));
        s.retain(0, |v| v > 3);
        assert_eq!(s.dom(0).iter().collect::<Vec<_>>(), vec![4]);
        assert_eq!(s.value(0), Some(4));
        s.undo(m);
        assert_eq!(s.domains(), vec![Domain::range(1, 4)]);
    }
}
