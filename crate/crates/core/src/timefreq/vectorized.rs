//! Vectorized tri-tile sets and the strong `j`-disjointness audit.

use std::collections::BTreeMap;

use crate::timefreq::tiles::{TileCollection, TileKey};

/// Which vectorized set is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VecMode {
    /// `s^j`: tri-tiles sharing the `j`-th tile of the base.
    Single(usize),
    /// `s^{jl} = ∪_{t ∈ s^j} t^l`.
    Closure(usize, usize),
}

/// Vectorized set inside a sub-collection, by indices into a collection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorizedSet {
    /// Base tri-tile index.
    pub base: usize,
    /// Kind of set.
    pub mode: VecMode,
    /// Sorted member indices.
    pub members: Vec<usize>,
}

/// Index of the members of `active` by their first and second component
/// tiles.
#[derive(Debug, Clone)]
pub struct Groups {
    keys: Vec<[TileKey; 2]>,
    by: [BTreeMap<TileKey, Vec<usize>>; 2],
}

impl Groups {
    /// Groups the `active` tri-tiles of `tc`.
    pub fn new(tc: &TileCollection, active: &[usize]) -> Self {
        let keys: Vec<[TileKey; 2]> =
            tc.tritiles().iter().map(|s| [s.component(1).key(), s.component(2).key()]).collect();
        let mut by = [BTreeMap::new(), BTreeMap::new()];
        for &i in active {
            for j in 0..2 {
                by[j].entry(keys[i][j]).or_insert_with(Vec::new).push(i);
            }
        }
        for m in by.iter_mut() {
            for v in m.values_mut() {
                v.sort_unstable();
            }
        }
        Self { keys, by }
    }

    /// Key of the `j`-th component of tri-tile `s`.
    pub fn key(&self, s: usize, j: usize) -> TileKey {
        self.keys[s][j - 1]
    }

    /// Active tri-tiles sharing the `j`-th tile of `s`.
    pub fn single(&self, s: usize, j: usize) -> &[usize] {
        self.by[j - 1].get(&self.keys[s][j - 1]).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Active members of `s^{jl}`, sorted.
    pub fn closure(&self, s: usize, j: usize, l: usize) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for &t in self.single(s, j) {
            if seen.insert(self.keys[t][l - 1]) {
                out.extend_from_slice(self.single(t, l));
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Members of the set of `mode` based at `s`.
    pub fn members(&self, s: usize, mode: VecMode) -> Vec<usize> {
        match mode {
            VecMode::Single(j) => self.single(s, j).to_vec(),
            VecMode::Closure(j, l) => self.closure(s, j, l),
        }
    }

    /// Distinct keys of component `j` with their member lists.
    pub fn classes(&self, j: usize) -> impl Iterator<Item = (&TileKey, &Vec<usize>)> {
        self.by[j - 1].iter()
    }
}

/// Vectorized set of `mode` based at `base` within `active`.
pub fn vectorize(tc: &TileCollection, active: &[usize], base: usize, mode: VecMode) -> VectorizedSet {
    let g = Groups::new(tc, active);
    VectorizedSet { base, mode, members: g.members(base, mode) }
}

/// Both clauses of strong `j`-disjointness for one pair of sets: their
/// `j`-tiles are pairwise disjoint, and whenever two `j`-frequency intervals
/// have meeting closed 2-dilates the space intervals of the two bases have
/// disjoint interiors.
pub fn pair_strongly_disjoint(tc: &TileCollection, a: &VectorizedSet, b: &VectorizedSet, j: usize) -> bool {
    let t = tc.tritiles();
    let ia = t[a.base].space;
    let ib = t[b.base].space;
    for &s in &a.members {
        for &r in &b.members {
            let x = t[s].component(j);
            let y = t[r].component(j);
            if x.overlaps(&y) {
                return false;
            }
            if x.freq.dilate(2.0).intersects(&y.freq.dilate(2.0)) && ia.interiors_intersect(&ib) {
                return false;
            }
        }
    }
    true
}

/// Strong `j`-disjointness of a family of vectorized sets.
pub fn strongly_disjoint(tc: &TileCollection, family: &[VectorizedSet], j: usize) -> bool {
    (0..family.len())
        .all(|a| (a + 1..family.len()).all(|b| pair_strongly_disjoint(tc, &family[a], &family[b], j)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intervals::{Interval, IntervalCollection};
    use crate::timefreq::tiles::build_tritile_cover;

    fn cover() -> TileCollection {
        let c = IntervalCollection::from_intervals(vec![
            Interval::from_endpoints(1.0, 2.0).unwrap(),
            Interval::from_endpoints(3.0, 4.0).unwrap(),
        ])
        .unwrap();
        build_tritile_cover(&c, 3.0, 1.0, 5.0).unwrap()
    }

    #[test]
    fn single_sets_share_the_tile() {
        let tc = cover();
        let all: Vec<usize> = (0..tc.len()).collect();
        for s in 0..tc.len() {
            for j in 1..=2 {
                let v = vectorize(&tc, &all, s, VecMode::Single(j));
                assert!(v.members.contains(&s));
                // Brute-force oracle.
                let brute: Vec<usize> =
                    (0..tc.len()).filter(|&r| tc.tritiles()[r].component(j) == tc.tritiles()[s].component(j)).collect();
                assert_eq!(v.members, brute);
            }
        }
    }

    #[test]
    fn closure_is_union_of_singles() {
        let tc = cover();
        let all: Vec<usize> = (0..tc.len()).collect();
        let g = Groups::new(&tc, &all);
        for s in 0..tc.len() {
            let mut brute: Vec<usize> = g.single(s, 1).iter().flat_map(|&t| g.single(t, 2).to_vec()).collect();
            brute.sort_unstable();
            brute.dedup();
            assert_eq!(g.closure(s, 1, 2), brute);
        }
    }

    #[test]
    fn distinct_space_far_apart_are_disjoint() {
        let tc = cover();
        let all: Vec<usize> = (0..tc.len()).collect();
        let t = tc.tritiles();
        let a = (0..tc.len()).find(|&i| t[i].space.lo() == 0.0).unwrap();
        let b = (0..tc.len()).find(|&i| t[i].space.lo() == 2.0 && t[i].freqs[0] == t[a].freqs[0]).unwrap();
        let va = vectorize(&tc, &all, a, VecMode::Single(2));
        let vb = vectorize(&tc, &all, b, VecMode::Single(2));
        assert!(strongly_disjoint(&tc, &[va.clone(), vb], 1));
        assert!(!strongly_disjoint(&tc, &[va.clone(), va], 1));
    }
}
