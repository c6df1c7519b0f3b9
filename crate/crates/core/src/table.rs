//! Tables of mixed partial derivatives at the origin, keyed by odd multi-indices.

use std::collections::BTreeMap;

use itertools::Itertools;
use num_traits::Zero;

use crate::rational::Rational;

/// Values of `d^n F / dt_{i_1} ... dt_{i_n}` at `t = 0` for every ordered tuple of
/// odd indices with `i_1 + ... + i_n <= max_weight`. Zero values are stored too,
/// so two tables over the same range always have the same keys.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NPointTable {
    n: usize,
    max_weight: u32,
    entries: BTreeMap<Vec<u32>, Rational>,
}

/// Ordered tuples of `n` odd positive integers with sum at most `max_weight`.
pub fn odd_tuples(n: usize, max_weight: u32) -> Vec<Vec<u32>> {
    fn go(n: usize, budget: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        let rest = (n - prefix.len() - 1) as u32;
        let mut i = 1;
        while i + rest <= budget {
            prefix.push(i);
            go(n, budget - i, prefix, out);
            prefix.pop();
            i += 2;
        }
    }
    let mut out = Vec::new();
    go(n, max_weight, &mut Vec::with_capacity(n), &mut out);
    out
}

impl NPointTable {
    pub fn from_fn<F>(n: usize, max_weight: u32, mut value: F) -> Self
    where
        F: FnMut(&[u32]) -> Rational,
    {
        let entries = odd_tuples(n, max_weight)
            .into_iter()
            .map(|idx| {
                let v = value(&idx);
                (idx, v)
            })
            .collect();
        NPointTable {
            n,
            max_weight,
            entries,
        }
    }

    pub fn try_from_fn<F, E>(n: usize, max_weight: u32, mut value: F) -> Result<Self, E>
    where
        F: FnMut(&[u32]) -> Result<Rational, E>,
    {
        let mut entries = BTreeMap::new();
        for idx in odd_tuples(n, max_weight) {
            let v = value(&idx)?;
            entries.insert(idx, v);
        }
        Ok(NPointTable {
            n,
            max_weight,
            entries,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_weight(&self) -> u32 {
        self.max_weight
    }

    pub fn get(&self, indices: &[u32]) -> Option<&Rational> {
        self.entries.get(indices)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&[u32], &Rational)> {
        self.entries.iter().map(|(k, v)| (k.as_slice(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.values().all(Zero::is_zero)
    }

    /// First index tuple (in lexicographic order) where the tables differ.
    pub fn first_difference(&self, other: &NPointTable) -> Option<(Vec<u32>, Rational, Rational)> {
        let keys: Vec<&Vec<u32>> = self.entries.keys().merge(other.entries.keys()).dedup().collect();
        keys.into_iter().find_map(|k| {
            let a = self.entries.get(k).cloned().unwrap_or_else(Rational::zero);
            let b = other.entries.get(k).cloned().unwrap_or_else(Rational::zero);
            (a != b).then(|| (k.clone(), a, b))
        })
    }

    /// Whether every entry equals the entries at all permutations of its indices.
    pub fn is_symmetric(&self) -> bool {
        self.entries.iter().all(|(k, v)| {
            k.iter()
                .copied()
                .permutations(k.len())
                .all(|p| self.entries.get(&p) == Some(v))
        })
    }

    /// Overwrites a value; used by tests to build corrupted fixtures.
    pub fn set(&mut self, indices: &[u32], value: Rational) {
        self.entries.insert(indices.to_vec(), value);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    #[test]
    fn tuples_are_odd_and_bounded() {
        assert_eq!(odd_tuples(1, 5), vec![vec![1], vec![3], vec![5]]);
        let t = odd_tuples(2, 4);
        assert_eq!(t, vec![vec![1, 1], vec![1, 3], vec![3, 1]]);
        assert!(odd_tuples(3, 2).is_empty());
    }

    #[test]
    fn differences_and_symmetry() {
        let a = NPointTable::from_fn(2, 6, |idx| int(idx.iter().sum::<u32>() as i64));
        assert!(a.is_symmetric());
        let mut b = a.clone();
        assert!(a.first_difference(&b).is_none());
        b.set(&[3, 1], int(0));
        assert!(!b.is_symmetric());
        assert_eq!(a.first_difference(&b), Some((vec![3, 1], int(4), int(0))));
    }
}
