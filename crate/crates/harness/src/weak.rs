//! Measurable sets on the grid and the restricted weak-type estimate of the
//! model sum.

use bilin_tf_core::grid::{synthesize, GridSpec, SampledFunction, TestFamily};
use bilin_tf_core::timefreq::{check_exponents, model_sum, PacketBank, TileCollection};
use bilin_tf_core::{Error, Result, C64};
use rand::Rng;

use crate::instances::{rng, trial_seed};

/// Subset `E` of the grid, one flag per sample point.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurableSet {
    grid: GridSpec<f64>,
    mask: Vec<bool>,
}

impl MeasurableSet {
    /// Set from a mask of length `N`.
    pub fn new(grid: GridSpec<f64>, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != grid.len() {
            return Err(Error::Shape(format!("mask of length {} on a grid of {}", mask.len(), grid.len())));
        }
        Ok(Self { grid, mask })
    }

    /// The whole grid.
    pub fn full(grid: GridSpec<f64>) -> Self {
        Self { grid, mask: vec![true; grid.len()] }
    }

    /// The single cell at sample `j`.
    pub fn cell(grid: GridSpec<f64>, j: usize) -> Result<Self> {
        let mut mask = vec![false; grid.len()];
        *mask.get_mut(j).ok_or_else(|| Error::Parameter(format!("cell {j} off the grid")))? = true;
        Ok(Self { grid, mask })
    }

    /// Each point kept independently with probability `density`.
    pub fn random(grid: GridSpec<f64>, density: f64, seed: u64) -> Self {
        let mut r = rng(seed);
        Self { grid, mask: (0..grid.len()).map(|_| r.gen_bool(density.clamp(0.0, 1.0))).collect() }
    }

    /// Membership flags.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Grid of the set.
    pub fn grid(&self) -> &GridSpec<f64> {
        &self.grid
    }

    /// Number of points.
    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// `|E| = (L/N) · #E`.
    pub fn measure(&self) -> f64 {
        self.grid.step() * self.count() as f64
    }

    /// True when no point belongs to the set.
    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    /// `|f(x_j)| ≤ 1_E(x_j)` at every sample, up to `1e-12`.
    pub fn admits(&self, f: &SampledFunction<f64>) -> bool {
        f.samples().iter().zip(&self.mask).all(|(v, &m)| v.norm() <= if m { 1.0 } else { 0.0 } + 1e-12)
    }

    /// Random unimodular values on the set, zero elsewhere.
    pub fn draw(&self, seed: u64) -> Result<SampledFunction<f64>> {
        synthesize(self.grid, &TestFamily::IndicatorSigned { mask: self.mask.clone() }, seed)
    }
}

/// Output of [`estimate_weak_type`].
#[derive(Debug, Clone, PartialEq)]
pub struct WeakTypeEstimate {
    /// `max` over trials of `|Λ| / Π |E_i|^{1/p_i}`.
    pub constant: f64,
    /// Per-trial ratios in trial order.
    pub ratios: Vec<f64>,
    /// `|E_1|, |E_2|, |E_3|`.
    pub measures: [f64; 3],
    /// `Π |E_i|^{1/p_i}`.
    pub normalizer: f64,
}

/// Draws `f ∈ F(E_1)`, `g ∈ F(E_2)` and a sequence `h_n = u_n 1_{E_3}/√K`
/// with `|u_n| = 1` over the `K` strips, so that `Σ |h_n|² = 1_{E_3}`, and
/// returns the largest normalized model sum over `trials` draws.
pub fn estimate_weak_type(
    tc: &TileCollection,
    bank: &PacketBank,
    sets: &[MeasurableSet; 3],
    p: [f64; 3],
    trials: usize,
    seed: u64,
) -> Result<WeakTypeEstimate> {
    check_exponents(p)?;
    if trials == 0 {
        return Err(Error::Parameter("need at least one trial".into()));
    }
    if let Some(i) = sets.iter().position(|e| e.is_empty()) {
        return Err(Error::Degenerate(format!("set E{} is empty", i + 1)));
    }
    let measures = [sets[0].measure(), sets[1].measure(), sets[2].measure()];
    let normalizer: f64 = (0..3).map(|i| measures[i].powf(1.0 / p[i])).product();
    let k = tc.strips().len();
    let scale = C64::new(1.0 / (k as f64).sqrt(), 0.0);
    let ratios = (0..trials as u64)
        .map(|t| {
            let s = trial_seed(seed, t);
            let f = sets[0].draw(s)?;
            let g = sets[1].draw(s ^ 1)?;
            let h: Vec<SampledFunction<f64>> =
                (0..k).map(|n| Ok(sets[2].draw(s ^ (2 + n as u64) << 8)?.scale(scale))).collect::<Result<_>>()?;
            Ok(model_sum(&f, &g, &h, tc, bank)? / normalizer)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(WeakTypeEstimate { constant: ratios.iter().copied().fold(0.0, f64::max), ratios, measures, normalizer })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{sparse_instance, tf_grid};
    use bilin_tf_core::intervals::{Interval, IntervalCollection};
    use bilin_tf_core::timefreq::{Tile, TriTile};

    fn one_tritile() -> (TileCollection, PacketBank) {
        let strips = IntervalCollection::from_intervals(vec![Interval::from_endpoints(1.0, 2.0).unwrap()]).unwrap();
        let space = Interval::from_endpoints(8.0, 9.0).unwrap();
        let w1 = Interval::from_endpoints(0.5, 1.0).unwrap();
        let w2 = w1.shift(1.5);
        let t = TriTile { space, freqs: [w1, w2, w1.sum(&w2).neg()], strip: 0 };
        let tc = TileCollection::new(vec![t], strips).unwrap();
        let bank = PacketBank::build(tf_grid(), &tc).unwrap();
        (tc, bank)
    }

    /// `(L/N) Σ_j f(x_j) conj Φ(x_j)`.
    fn quad(f: &SampledFunction<f64>, tile: &Tile, bank: &PacketBank) -> C64 {
        let phi = bank.packet(tile).unwrap();
        f.samples().iter().zip(phi.samples()).map(|(a, b)| a * b.conj()).sum::<C64>() * tf_grid().step()
    }

    #[test]
    fn empty_set_is_rejected() {
        let (tc, bank) = one_tritile();
        let g = tf_grid();
        let sets = [MeasurableSet::full(g), MeasurableSet::full(g), MeasurableSet::new(g, vec![false; g.len()]).unwrap()];
        assert!(matches!(estimate_weak_type(&tc, &bank, &sets, [4.0; 3], 1, 0), Err(Error::Degenerate(_))));
        assert!(matches!(estimate_weak_type(&tc, &bank, &sets, [2.0, 4.0, 4.0], 1, 0), Err(Error::Exponent(_))));
    }

    #[test]
    fn single_cell_matches_hand_computation() {
        let (tc, bank) = one_tritile();
        let g = tf_grid();
        let e3 = MeasurableSet::cell(g, 68).unwrap();
        let sets = [MeasurableSet::full(g), MeasurableSet::full(g), e3.clone()];
        let p = [4.0, 4.0, 4.0];
        let est = estimate_weak_type(&tc, &bank, &sets, p, 1, 3).unwrap();
        let s = trial_seed(3, 0);
        let f = sets[0].draw(s).unwrap();
        let gg = sets[1].draw(s ^ 1).unwrap();
        let h = e3.draw(s ^ 2 << 8).unwrap();
        assert!(sets[0].admits(&f) && e3.admits(&h) && !e3.admits(&f));
        let t = &tc.tritiles()[0];
        let lam = (quad(&f, &t.component(1), &bank) * quad(&gg, &t.component(2), &bank) * quad(&h, &t.component(3), &bank))
            .norm()
            / t.space.length().sqrt();
        let norm = 64f64.powf(0.25) * 64f64.powf(0.25) * (64.0f64 / 512.0).powf(0.25);
        assert!(est.ratios[0].is_finite());
        assert!((est.ratios[0] - lam / norm).abs() <= 1e-10 * (lam / norm).max(1e-300), "{} vs {}", est.ratios[0], lam / norm);
    }

    #[test]
    fn full_sets_normalize_by_period() {
        let inst = sparse_instance(2, 60).unwrap();
        let g = tf_grid();
        let sets = [MeasurableSet::full(g), MeasurableSet::full(g), MeasurableSet::full(g)];
        let p = [3.0, 3.0, 3.0];
        let est = estimate_weak_type(&inst.tc, &inst.bank, &sets, p, 2, 9).unwrap();
        assert!((est.normalizer - 64f64).abs() < 1e-12);
        for &m in &est.measures {
            assert!((m - 64.0).abs() < 1e-12);
        }
    }

    #[test]
    fn doubling_sets_keeps_ratio_in_band() {
        let inst = sparse_instance(5, 80).unwrap();
        let g = tf_grid();
        let p = [4.0, 4.0, 4.0];
        let mut worst: f64 = 1.0;
        for t in 0..50u64 {
            let small: [MeasurableSet; 3] = std::array::from_fn(|i| MeasurableSet::random(g, 0.2, 100 * t + i as u64));
            let big: [MeasurableSet; 3] = std::array::from_fn(|i| MeasurableSet::random(g, 0.4, 100 * t + i as u64));
            let a = estimate_weak_type(&inst.tc, &inst.bank, &small, p, 1, t).unwrap().constant;
            let b = estimate_weak_type(&inst.tc, &inst.bank, &big, p, 1, t).unwrap().constant;
            let q = b / a;
            worst = worst.max(q).max(1.0 / q);
        }
        assert!(worst < 16.0, "{worst}");
    }
}
