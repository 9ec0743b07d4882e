//! Tiles, tri-tiles, tri-tile collections with their grid certificate, the
//! strip cover and the split into sparse sub-collections.

use std::collections::BTreeSet;
use std::io::Write;

use crate::error::{Error, Result};
use crate::intervals::{Interval, IntervalCollection};

/// Bit-exact key of a tile, used to identify shared components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TileKey([u64; 4]);

/// Bit-exact key of an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntervalKey([u64; 2]);

/// Key of an interval from its endpoint bits.
pub fn interval_key(w: &Interval<f64>) -> IntervalKey {
    IntervalKey([w.lo().to_bits(), w.hi().to_bits()])
}

/// Time-frequency rectangle `I × ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tile {
    /// Space interval `I`.
    pub space: Interval<f64>,
    /// Frequency interval `ω`.
    pub freq: Interval<f64>,
}

impl Tile {
    /// Builds a tile with `|I| ∈ [1/10, 10]` and area `|I||ω| ∈ [1/2, 2]`.
    pub fn new(space: Interval<f64>, freq: Interval<f64>) -> Result<Self> {
        let t = Self { space, freq };
        if !(0.1..=10.0).contains(&space.length()) {
            return Err(Error::Assumption(format!("|I| = {} outside [0.1, 10]", space.length())));
        }
        if !(0.5..=2.0).contains(&t.area()) {
            return Err(Error::Assumption(format!("tile area {} outside [1/2, 2]", t.area())));
        }
        Ok(t)
    }

    /// Area `|I||ω|`.
    pub fn area(&self) -> f64 {
        self.space.length() * self.freq.length()
    }

    /// Bit-exact identity.
    pub fn key(&self) -> TileKey {
        let a = interval_key(&self.space).0;
        let b = interval_key(&self.freq).0;
        TileKey([a[0], a[1], b[0], b[1]])
    }

    /// Tiles overlap in a set of positive area.
    pub fn overlaps(&self, o: &Tile) -> bool {
        self.space.interiors_intersect(&o.space) && self.freq.interiors_intersect(&o.freq)
    }
}

/// Space interval with three frequency intervals and the index of the strip
/// of `Ω` it belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriTile {
    /// Shared space interval `I_s`.
    pub space: Interval<f64>,
    /// Frequency intervals `ω_{s_1}, ω_{s_2}, ω_{s_3}`.
    pub freqs: [Interval<f64>; 3],
    /// Index `n` of the strip `ω_n`.
    pub strip: usize,
}

/// Relative slack used when checking strip membership.
const MEMBERSHIP_TOL: f64 = 1e-9;

impl TriTile {
    /// Component tile `s_i` for `i ∈ {1, 2, 3}`.
    pub fn component(&self, i: usize) -> Tile {
        Tile { space: self.space, freq: self.freqs[i - 1] }
    }

    /// Checks the tri-tile conditions against the strip collection.
    pub fn validate(&self, strips: &IntervalCollection<f64>) -> Result<()> {
        let omega = strips
            .intervals()
            .get(self.strip)
            .ok_or_else(|| Error::Parameter(format!("strip index {} out of range", self.strip)))?;
        if !(0.1..=10.0).contains(&self.space.length()) {
            return Err(Error::Assumption(format!("|I_s| = {} outside [0.1, 10]", self.space.length())));
        }
        let area = self.space.length() * omega.length();
        if !(0.5..=2.0).contains(&area) {
            return Err(Error::Assumption(format!("|I_s||ω_n| = {area} outside [1/2, 2]")));
        }
        let sum = self.freqs[0].sum(&self.freqs[1]).sum(&self.freqs[2]);
        let tol = MEMBERSHIP_TOL * (1.0 + sum.length());
        if sum.lo() > tol || sum.hi() < -tol {
            return Err(Error::Parameter("0 is not in ω_{s_1} + ω_{s_2} + ω_{s_3}".into()));
        }
        let diff = Interval::from_endpoints(
            self.freqs[1].lo() - self.freqs[0].hi(),
            self.freqs[1].hi() - self.freqs[0].lo(),
        )?;
        if !diff.subset_within(omega, MEMBERSHIP_TOL * (1.0 + omega.length())) {
            return Err(Error::Parameter(format!(
                "ω_{{s_2}} - ω_{{s_1}} = [{}, {}] not inside the strip [{}, {}]",
                diff.lo(),
                diff.hi(),
                omega.lo(),
                omega.hi()
            )));
        }
        Ok(())
    }
}

/// Overlap data recorded for a tri-tile collection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridCertificate {
    /// Largest per-scale overlap of the distinct space intervals.
    pub space_overlap: usize,
    /// Largest per-scale overlap of the distinct frequency intervals
    /// (strips and components).
    pub freq_overlap: usize,
    /// Number of (interval, tri-tile) pairs breaking the nesting rule.
    pub nesting_violations: usize,
}

/// Largest per-scale overlap of space intervals accepted in a collection.
pub const MAX_SPACE_OVERLAP: usize = 4;

/// Maximal number of distinct half-open intervals with length in
/// `[2^{k-1}, 2^{k+1}]` sharing a point, over all `k`.
pub fn per_scale_overlap(intervals: &[Interval<f64>]) -> usize {
    let distinct: BTreeSet<IntervalKey> = intervals.iter().map(interval_key).collect();
    let list: Vec<Interval<f64>> = distinct
        .iter()
        .map(|k| Interval::from_endpoints(f64::from_bits(k.0[0]), f64::from_bits(k.0[1])).expect("valid interval"))
        .collect();
    if list.is_empty() {
        return 0;
    }
    let scales: BTreeSet<i32> = list.iter().map(|w| w.length().log2().floor() as i32).collect();
    let mut best = 0;
    for &k in &scales {
        for kk in [k, k + 1] {
            let lo = 2f64.powi(kk - 1);
            let hi = 2f64.powi(kk + 1);
            let mut ev: Vec<(f64, i32)> = Vec::new();
            for w in list.iter().filter(|w| w.length() >= lo && w.length() <= hi) {
                ev.push((w.lo(), 1));
                ev.push((w.hi(), -1));
            }
            ev.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite").then(a.1.cmp(&b.1)));
            let mut cur = 0i32;
            for (_, d) in ev {
                cur += d;
                best = best.max(cur as usize);
            }
        }
    }
    best
}

fn nesting_violations(tritiles: &[TriTile], strips: &IntervalCollection<f64>) -> usize {
    let triples: BTreeSet<[IntervalKey; 3]> =
        tritiles.iter().map(|s| [interval_key(&s.freqs[0]), interval_key(&s.freqs[1]), interval_key(&s.freqs[2])]).collect();
    let mut family: BTreeSet<IntervalKey> = strips.intervals().iter().map(interval_key).collect();
    for t in &triples {
        family.extend(t.iter().copied());
    }
    let from = |k: &IntervalKey| Interval::from_endpoints(f64::from_bits(k.0[0]), f64::from_bits(k.0[1])).expect("valid");
    let fam: Vec<Interval<f64>> = family.iter().map(from).collect();
    let mut count = 0;
    for t in &triples {
        let w: Vec<Interval<f64>> = t.iter().map(from).collect();
        for outer in &fam {
            let strict = w.iter().any(|x| x.subset_of(outer) && x != outer);
            if strict && !w.iter().all(|x| x.subset_of(outer)) {
                count += 1;
            }
        }
    }
    count
}

/// Finite collection of tri-tiles over a strip collection `Ω`.
#[derive(Debug, Clone)]
pub struct TileCollection {
    tritiles: Vec<TriTile>,
    strips: IntervalCollection<f64>,
    certificate: GridCertificate,
}

impl TileCollection {
    /// Validates every tri-tile and the space-grid condition.
    pub fn new(tritiles: Vec<TriTile>, strips: IntervalCollection<f64>) -> Result<Self> {
        for s in &tritiles {
            s.validate(&strips)?;
        }
        let space: Vec<Interval<f64>> = tritiles.iter().map(|s| s.space).collect();
        let space_overlap = per_scale_overlap(&space);
        if space_overlap > MAX_SPACE_OVERLAP {
            return Err(Error::Assumption(format!(
                "space intervals overlap {space_overlap} times at one scale (limit {MAX_SPACE_OVERLAP})"
            )));
        }
        let mut freq: Vec<Interval<f64>> = strips.intervals().to_vec();
        freq.extend(tritiles.iter().flat_map(|s| s.freqs));
        let certificate = GridCertificate {
            space_overlap,
            freq_overlap: per_scale_overlap(&freq),
            nesting_violations: nesting_violations(&tritiles, &strips),
        };
        Ok(Self { tritiles, strips, certificate })
    }

    /// Tri-tiles in index order.
    pub fn tritiles(&self) -> &[TriTile] {
        &self.tritiles
    }

    /// Strip collection `Ω`.
    pub fn strips(&self) -> &IntervalCollection<f64> {
        &self.strips
    }

    /// Recorded grid certificate.
    pub fn certificate(&self) -> GridCertificate {
        self.certificate
    }

    /// Number of tri-tiles.
    pub fn len(&self) -> usize {
        self.tritiles.len()
    }

    /// True without tri-tiles.
    pub fn is_empty(&self) -> bool {
        self.tritiles.is_empty()
    }

    /// Indices of the tri-tiles of strip `n` (the sub-collection `Q_n`).
    pub fn strip_members(&self, n: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.tritiles[i].strip == n).collect()
    }

    /// Sub-collection made of the given indices, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(indices.iter().map(|&i| self.tritiles[i]).collect(), self.strips.clone())
    }

    /// True when every pair of tri-tiles passes the sparseness rule.
    pub fn is_sparse(&self) -> bool {
        let n = self.len();
        (0..n).all(|a| (a + 1..n).all(|b| !sparse_conflict(&self.tritiles[a], &self.tritiles[b])))
    }

    /// Writes one row per tri-tile.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record([
            "I_center", "I_length", "ω1_center", "ω1_length", "ω2_center", "ω2_length", "ω3_center", "ω3_length",
            "strip_index",
        ])?;
        for s in &self.tritiles {
            let mut row = vec![format!("{:e}", s.space.center()), format!("{:e}", s.space.length())];
            for f in &s.freqs {
                row.push(format!("{:e}", f.center()));
                row.push(format!("{:e}", f.length()));
            }
            row.push(s.strip.to_string());
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn equivalent_scale(a: &Interval<f64>, b: &Interval<f64>) -> bool {
    let r = a.length() / b.length();
    (0.5..=2.0).contains(&r)
}

fn interval_conflict(a: &Interval<f64>, b: &Interval<f64>) -> bool {
    a != b && equivalent_scale(a, b) && a.dilate(2.0).intersects(&b.dilate(2.0))
}

/// Sparseness conflict between two tri-tiles: exact duplicates, or, in the
/// space family or in any single frequency component family, two distinct
/// intervals of equivalent scale whose closed 2-dilates meet.
pub fn sparse_conflict(a: &TriTile, b: &TriTile) -> bool {
    if a == b {
        return true;
    }
    interval_conflict(&a.space, &b.space) || (0..3).any(|i| interval_conflict(&a.freqs[i], &b.freqs[i]))
}

/// Largest number of sparse sub-collections [`sparse_split`] may return.
pub const MAX_SPARSE_PARTS: usize = 64;

/// Greedy colouring in index order into sparse sub-collections.
pub fn sparse_split(tc: &TileCollection) -> Result<Vec<TileCollection>> {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for (i, s) in tc.tritiles.iter().enumerate() {
        let slot = classes
            .iter()
            .position(|c| c.iter().all(|&m| !sparse_conflict(&tc.tritiles[m], s)));
        match slot {
            Some(c) => classes[c].push(i),
            None => classes.push(vec![i]),
        }
    }
    if classes.len() > MAX_SPARSE_PARTS {
        return Err(Error::Size(format!("{} sparse classes needed (limit {MAX_SPARSE_PARTS})", classes.len())));
    }
    if classes.is_empty() {
        return Ok(vec![tc.clone()]);
    }
    classes.iter().map(|c| tc.subset(c)).collect()
}

/// Tri-tile cover of the strips over `[0, extent)` with space intervals of
/// length `scale` and frequency boxes inside `[-band, band]`.
///
/// For a strip `ω_n` with `δ = |ω_n|/2` the boxes are `ω_1 = [mδ, (m+1)δ]`,
/// `ω_2 = ω_1 + c(ω_n)` and `ω_3 = -(ω_1 + ω_2)`, so `ω_2 - ω_1 = ω_n`
/// exactly. Loop order: strip, space interval, box.
pub fn build_tritile_cover(
    strips: &IntervalCollection<f64>,
    extent: f64,
    scale: f64,
    band: f64,
) -> Result<TileCollection> {
    strips.check_standard_lengths()?;
    if !(0.1..=10.0).contains(&scale) {
        return Err(Error::Assumption(format!("space scale {scale} outside [0.1, 10]")));
    }
    if !(extent > 0.0) || !(band > 0.0) {
        return Err(Error::Parameter(format!("extent {extent} and band {band} must be positive")));
    }
    let count = (extent / scale).ceil() as i64;
    let mut out = Vec::new();
    for (n, omega) in strips.intervals().iter().enumerate() {
        let delta = omega.length() / 2.0;
        let c = omega.center();
        let m_lo = ((-band).max(-band - c) / delta).ceil() as i64;
        let m_hi = ((band.min(band - c)) / delta).floor() as i64 - 1;
        for k in 0..count {
            let space = Interval::from_endpoints(k as f64 * scale, (k + 1) as f64 * scale)?;
            for m in m_lo..=m_hi {
                let w1 = Interval::from_endpoints(m as f64 * delta, (m + 1) as f64 * delta)?;
                let w2 = w1.shift(c);
                if w1.lo() < -band || w1.hi() > band || w2.lo() < -band || w2.hi() > band {
                    continue;
                }
                let w3 = w1.sum(&w2).neg();
                out.push(TriTile { space, freqs: [w1, w2, w3], strip: n });
            }
        }
    }
    TileCollection::new(out, strips.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn strip(lo: f64, hi: f64) -> IntervalCollection<f64> {
        IntervalCollection::from_intervals(vec![Interval::from_endpoints(lo, hi).unwrap()]).unwrap()
    }

    #[test]
    fn cover_of_one_strip() {
        let tc = build_tritile_cover(&strip(3.0, 4.0), 64.0, 1.0, 8.0).unwrap();
        for s in tc.tritiles() {
            s.validate(tc.strips()).unwrap();
        }
        // Enumeration oracle: boxes [m/2, (m+1)/2] with both the box and its
        // shift by 3.5 inside [-8, 8].
        let boxes = (-40..40)
            .filter(|&m| {
                let lo = m as f64 * 0.5;
                lo >= -8.0 && lo + 0.5 <= 8.0 && lo + 3.5 >= -8.0 && lo + 4.0 <= 8.0
            })
            .count();
        assert_eq!(tc.len(), boxes * 64);
        assert!(tc.certificate().space_overlap <= MAX_SPACE_OVERLAP);
    }

    #[test]
    fn strips_partition_the_cover() {
        let c = IntervalCollection::from_intervals(vec![
            Interval::from_endpoints(-2.0, -1.0).unwrap(),
            Interval::from_endpoints(3.0, 4.0).unwrap(),
        ])
        .unwrap();
        let tc = build_tritile_cover(&c, 8.0, 1.0, 6.0).unwrap();
        let a = tc.strip_members(0);
        let b = tc.strip_members(1);
        assert_eq!(a.len() + b.len(), tc.len());
        assert!(a.iter().all(|i| !b.contains(i)));
    }

    #[test]
    fn cover_rejects_bad_lengths() {
        let c = strip(0.0, 20.0);
        assert!(matches!(build_tritile_cover(&c, 8.0, 1.0, 40.0), Err(Error::Assumption(_))));
        assert!(matches!(build_tritile_cover(&strip(0.0, 1.0), 8.0, 20.0, 4.0), Err(Error::Assumption(_))));
    }

    #[test]
    fn invalid_tritile_rejected() {
        let c = strip(3.0, 4.0);
        let bad = TriTile {
            space: Interval::from_endpoints(0.0, 1.0).unwrap(),
            freqs: [
                Interval::from_endpoints(0.0, 0.5).unwrap(),
                Interval::from_endpoints(0.5, 1.0).unwrap(),
                Interval::from_endpoints(-1.5, -0.5).unwrap(),
            ],
            strip: 0,
        };
        assert!(TileCollection::new(vec![bad], c).is_err());
    }

    #[test]
    fn sparse_split_examples() {
        let tc = build_tritile_cover(&strip(3.0, 4.0), 1.0, 1.0, 4.0).unwrap();
        let single = tc.subset(&[0]).unwrap();
        let parts = sparse_split(&single).unwrap();
        assert_eq!(parts.len(), 1);
        let dup = tc.subset(&[0, 0]).unwrap();
        let parts = sparse_split(&dup).unwrap();
        assert_eq!(parts.len(), 2);
        assert!(parts.iter().all(|p| p.len() == 1));
    }

    #[test]
    fn split_of_cover_is_sparse() {
        let c = IntervalCollection::from_intervals(vec![
            Interval::from_endpoints(1.0, 2.0).unwrap(),
            Interval::from_endpoints(2.7, 3.7).unwrap(),
        ])
        .unwrap();
        let tc = build_tritile_cover(&c, 12.0, 1.0, 6.0).unwrap();
        let parts = sparse_split(&tc).unwrap();
        assert!(parts.len() <= MAX_SPARSE_PARTS);
        assert_eq!(parts.iter().map(|p| p.len()).sum::<usize>(), tc.len());
        assert!(parts.iter().all(|p| p.is_sparse()));
    }

    #[test]
    fn tile_area_band() {
        let i = Interval::from_endpoints(0.0, 1.0).unwrap();
        assert!(Tile::new(i, Interval::new(0.0, 1.0).unwrap()).is_ok());
        assert!(Tile::new(i, Interval::new(0.0, 3.0).unwrap()).is_err());
    }

    #[test]
    fn csv_has_one_row_per_tritile() {
        let tc = build_tritile_cover(&strip(3.0, 4.0), 4.0, 1.0, 5.0).unwrap();
        let mut buf = Vec::new();
        tc.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), tc.len() + 1);
        assert!(text.starts_with("I_center,I_length,ω1_center"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn random_subcollections_split_sparsely(seed in 0u64..10_000, take in 1usize..200) {
            let c = IntervalCollection::random(3, (0.6, 1.4), (0.2, 1.0), 0.0, seed).unwrap();
            let tc = build_tritile_cover(&c, 16.0, 1.0, 6.0).unwrap();
            let step = (tc.len() / take).max(1);
            let idx: Vec<usize> = (0..tc.len()).step_by(step).take(take).collect();
            let sub = tc.subset(&idx).unwrap();
            let parts = sparse_split(&sub).unwrap();
            prop_assert_eq!(parts.iter().map(|p| p.len()).sum::<usize>(), sub.len());
            for p in &parts {
                prop_assert!(p.is_sparse());
            }
        }
    }
}
