//! Linear and bilinear square functions over interval collections.

use std::collections::BTreeMap;

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{ExponentTriple, SampledFunction};
use crate::intervals::{make_bump, IntervalCollection};
use crate::multiplier::{apply_bilinear, linear_multiplier, SymbolDescriptor};
use crate::scalar::Real;

/// Cutoff applied on each interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffMode {
    /// Indicator `1_ω` with half-open membership.
    Sharp,
    /// Smooth cutoff `χ_ω`.
    Smooth,
}

/// Collection plus the cutoff rule for each interval.
#[derive(Debug, Clone)]
pub struct SquareFunctionSpec<T: Real> {
    /// Frequency intervals `Ω`.
    pub collection: IntervalCollection<T>,
    /// Sharp or smooth cutoffs.
    pub cutoff_mode: CutoffMode,
    /// Plateau fraction of smooth cutoffs.
    pub flatness: T,
    /// Replacement symbols keyed by interval index.
    pub overrides: BTreeMap<usize, SymbolDescriptor<T>>,
    /// Skips the `[1/10, 10]` length check of the bilinear square function.
    pub relaxed: bool,
}

impl<T: Real> SquareFunctionSpec<T> {
    /// Spec with flatness `0.6`, no overrides, length check enabled.
    pub fn new(collection: IntervalCollection<T>, cutoff_mode: CutoffMode) -> Self {
        Self { collection, cutoff_mode, flatness: T::lit(0.6), overrides: BTreeMap::new(), relaxed: false }
    }

    /// Sets the smooth-cutoff plateau fraction.
    pub fn with_flatness(mut self, flatness: T) -> Self {
        self.flatness = flatness;
        self
    }

    /// Disables the length check.
    pub fn relaxed(mut self) -> Self {
        self.relaxed = true;
        self
    }

    /// Replaces the symbol of interval `index`.
    pub fn with_override(mut self, index: usize, s: SymbolDescriptor<T>) -> Self {
        self.overrides.insert(index, s);
        self
    }

    fn linear_symbols(&self) -> Result<Vec<SymbolDescriptor<T>>> {
        self.collection
            .intervals()
            .iter()
            .enumerate()
            .map(|(i, w)| match self.overrides.get(&i) {
                Some(s) => Ok(s.clone()),
                None => match self.cutoff_mode {
                    CutoffMode::Sharp => Ok(SymbolDescriptor::sharp(*w)),
                    CutoffMode::Smooth => Ok(SymbolDescriptor::bump(make_bump(*w, self.flatness)?)),
                },
            })
            .collect()
    }

    /// Bilinear symbols `χ_ω(ξ - η)` (or overrides), one per interval.
    pub fn bilinear_symbols(&self) -> Result<Vec<SymbolDescriptor<T>>> {
        self.collection
            .intervals()
            .iter()
            .enumerate()
            .map(|(i, w)| match self.overrides.get(&i) {
                Some(s) => Ok(s.clone()),
                None => match self.cutoff_mode {
                    CutoffMode::Sharp => Ok(SymbolDescriptor::diagonal_sharp(*w)),
                    CutoffMode::Smooth => Ok(SymbolDescriptor::diagonal_bump(make_bump(*w, self.flatness)?)),
                },
            })
            .collect()
    }
}

/// `(Σ_i |u_i|²)^{1/2}` pointwise, summed in index order.
pub fn l2_aggregate<T: Real>(pieces: &[SampledFunction<T>], template: &SampledFunction<T>) -> Result<SampledFunction<T>> {
    let n = template.grid().len();
    let mut acc = vec![T::zero(); n];
    for p in pieces {
        template.grid().check_same(p.grid())?;
        for (a, v) in acc.iter_mut().zip(p.samples()) {
            *a = *a + v.norm_sqr();
        }
    }
    SampledFunction::new(*template.grid(), acc.into_iter().map(|a| Complex::new(a.sqrt(), T::zero())).collect())
}

/// `x ↦ (Σ_ω |π_ω f(x)|²)^{1/2}` with sharp or smooth cutoffs.
pub fn linear_square_function<T: Real>(f: &SampledFunction<T>, spec: &SquareFunctionSpec<T>) -> Result<SampledFunction<T>> {
    if spec.cutoff_mode == CutoffMode::Sharp && !spec.collection.half_open_disjoint() {
        return Err(Error::Disjointness("sharp cutoffs need pairwise disjoint intervals".into()));
    }
    let pieces: Vec<SampledFunction<T>> = spec
        .linear_symbols()?
        .par_iter()
        .map(|s| linear_multiplier(f, s))
        .collect::<Result<_>>()?;
    l2_aggregate(&pieces, f)
}

/// Pieces `T_{χ_ω}(f, g)` for every interval, in collection order.
pub fn bilinear_pieces<T: Real>(
    f: &SampledFunction<T>,
    g: &SampledFunction<T>,
    spec: &SquareFunctionSpec<T>,
) -> Result<Vec<SampledFunction<T>>> {
    f.grid().check_same(g.grid())?;
    if !spec.relaxed {
        spec.collection.check_standard_lengths()?;
    }
    spec.bilinear_symbols()?.par_iter().map(|s| apply_bilinear(f, g, s)).collect()
}

/// `S_Ω(f, g) = (Σ_ω |T_{χ_ω}(f, g)|²)^{1/2}`.
pub fn bilinear_square_function<T: Real>(
    f: &SampledFunction<T>,
    g: &SampledFunction<T>,
    spec: &SquareFunctionSpec<T>,
) -> Result<SampledFunction<T>> {
    let pieces = bilinear_pieces(f, g, spec)?;
    l2_aggregate(&pieces, f)
}

/// Ratio `‖S_Ω(f,g)‖_r / (‖f‖_p ‖g‖_q)` with its ingredients.
#[derive(Debug, Clone, PartialEq)]
pub struct NormRatio<T> {
    /// The ratio.
    pub ratio: T,
    /// `‖S_Ω(f,g)‖_r`.
    pub numerator: T,
    /// `‖f‖_p ‖g‖_q`.
    pub denominator: T,
    /// Set when the triple lies outside the local-`L²` range.
    pub warning: Option<String>,
}

/// Evaluates the normalized square-function size of `(f, g)`.
pub fn norm_ratio<T: Real>(
    f: &SampledFunction<T>,
    g: &SampledFunction<T>,
    spec: &SquareFunctionSpec<T>,
    e: &ExponentTriple<T>,
) -> Result<NormRatio<T>> {
    let denominator = f.lp_norm(e.p) * g.lp_norm(e.q);
    if !(denominator > T::zero()) {
        return Err(Error::Degenerate("‖f‖_p ‖g‖_q vanishes".into()));
    }
    let numerator = bilinear_square_function(f, g, spec)?.lp_norm(e.r);
    let warning = (!e.local_l2()).then(|| {
        format!("exponents ({}, {}, {}) lie outside the local L² range", e.p, e.q, e.r)
    });
    Ok(NormRatio { ratio: numerator / denominator, numerator, denominator, warning })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{synthesize, GridSpec, TestFamily};
    use crate::intervals::Interval;
    use proptest::prelude::*;

    type C = Complex<f64>;

    fn grid() -> GridSpec<f64> {
        GridSpec::new(16.0, 256).unwrap()
    }

    fn band(lo: f64, hi: f64, seed: u64) -> SampledFunction<f64> {
        synthesize(grid(), &TestFamily::RandomBandlimited { lo, hi }, seed).unwrap()
    }

    fn partition(edges: &[f64]) -> IntervalCollection<f64> {
        let v = edges.windows(2).map(|w| Interval::from_endpoints(w[0], w[1]).unwrap()).collect();
        IntervalCollection::from_intervals(v).unwrap()
    }

    #[test]
    fn full_band_interval_gives_modulus() {
        let gr = grid();
        let f = band(-20.0, 20.0, 1);
        let c = partition(&[-gr.nyquist(), gr.nyquist()]);
        let s = linear_square_function(&f, &SquareFunctionSpec::new(c, CutoffMode::Sharp)).unwrap();
        for (a, b) in s.samples().iter().zip(f.samples()) {
            assert!((a.re - b.norm()).abs() < 1e-12 * f.lp_norm(f64::INFINITY));
        }
    }

    #[test]
    fn partition_preserves_l2() {
        let gr = grid();
        let f = band(-30.0, 30.0, 2);
        let c = partition(&[-gr.nyquist(), -7.3, -1.0, 0.2, 5.5, 11.0, gr.nyquist()]);
        let s = linear_square_function(&f, &SquareFunctionSpec::new(c, CutoffMode::Sharp)).unwrap();
        assert!((s.lp_norm(2.0) / f.lp_norm(2.0) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sharp_overlap_rejected() {
        let c = partition(&[0.0, 2.0]);
        let c = IntervalCollection::from_intervals(vec![c.intervals()[0], Interval::from_endpoints(1.0, 3.0).unwrap()]).unwrap();
        let f = band(-5.0, 5.0, 3);
        let r = linear_square_function(&f, &SquareFunctionSpec::new(c, CutoffMode::Sharp));
        assert!(matches!(r, Err(Error::Disjointness(_))));
    }

    #[test]
    fn single_strip_plateau_gives_product() {
        // f lives on [4, 5], g on [0, 1]: ξ - η ∈ [3, 5] inside the plateau of χ on [0, 8].
        let f = band(4.0, 5.0, 4);
        let g = band(0.0, 1.0, 5);
        let c = IntervalCollection::from_intervals(vec![Interval::from_endpoints(0.0, 8.0).unwrap()]).unwrap();
        let s = bilinear_square_function(&f, &g, &SquareFunctionSpec::new(c, CutoffMode::Smooth)).unwrap();
        let p = f.mul(&g).unwrap();
        for (a, b) in s.samples().iter().zip(p.samples()) {
            assert!((a.re - b.norm()).abs() <= 1e-10 * p.lp_norm(f64::INFINITY));
        }
    }

    #[test]
    fn zero_input_gives_zero() {
        let f = band(-5.0, 5.0, 6);
        let z = SampledFunction::zeros(grid());
        let c = IntervalCollection::translates(-4..4).unwrap();
        let s = bilinear_square_function(&f, &z, &SquareFunctionSpec::new(c, CutoffMode::Smooth)).unwrap();
        assert_eq!(s.lp_norm(f64::INFINITY), 0.0);
    }

    #[test]
    fn length_assumption() {
        let c = IntervalCollection::from_intervals(vec![Interval::new(0.0, 20.0).unwrap()]).unwrap();
        let f = band(-5.0, 5.0, 7);
        let spec = SquareFunctionSpec::new(c, CutoffMode::Smooth);
        assert!(matches!(bilinear_square_function(&f, &f, &spec), Err(Error::Assumption(_))));
        assert!(bilinear_square_function(&f, &f, &spec.relaxed()).is_ok());
    }

    #[test]
    fn ratio_assembly_and_degeneracy() {
        let f = band(-5.0, 5.0, 8);
        let g = band(-5.0, 5.0, 9);
        let c = IntervalCollection::translates(-8..8).unwrap();
        let spec = SquareFunctionSpec::new(c, CutoffMode::Smooth);
        let e = ExponentTriple::from_pq(4.0, 4.0).unwrap();
        let r = norm_ratio(&f, &g, &spec, &e).unwrap();
        let num = bilinear_square_function(&f, &g, &spec).unwrap().lp_norm(2.0);
        assert!((r.ratio - num / (f.lp_norm(4.0) * g.lp_norm(4.0))).abs() <= 1e-10 * r.ratio);
        assert!(r.warning.is_none());
        let z = SampledFunction::zeros(grid());
        assert!(matches!(norm_ratio(&z, &g, &spec, &e), Err(Error::Degenerate(_))));
        let low = ExponentTriple::from_pq(1.5, 4.0).unwrap();
        assert!(norm_ratio(&f, &g, &spec, &low).unwrap().warning.is_some());
    }

    #[test]
    fn overrides_replace_cutoffs() {
        let f = band(-5.0, 5.0, 10);
        let g = band(-5.0, 5.0, 11);
        let c = IntervalCollection::translates(0..2).unwrap();
        let one = SymbolDescriptor::diagonal(|_| C::new(1.0, 0.0));
        let spec = SquareFunctionSpec::new(c, CutoffMode::Smooth).with_override(0, one).with_override(1, SymbolDescriptor::diagonal(|_| C::new(0.0, 0.0)));
        let s = bilinear_square_function(&f, &g, &spec).unwrap();
        let p = f.mul(&g).unwrap();
        for (a, b) in s.samples().iter().zip(p.samples()) {
            assert!((a.re - b.norm()).abs() <= 1e-12 * p.lp_norm(f64::INFINITY));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn ratio_homogeneous(seed in 0u64..1000, a in 0.1f64..10.0, b in -10.0f64..-0.1) {
            let f = band(-6.0, 6.0, seed);
            let g = band(-6.0, 6.0, seed + 1);
            let spec = SquareFunctionSpec::new(IntervalCollection::translates(-4..4).unwrap(), CutoffMode::Smooth);
            let e = ExponentTriple::from_pq(4.0, 4.0).unwrap();
            let r0 = norm_ratio(&f, &g, &spec, &e).unwrap().ratio;
            let r1 = norm_ratio(&f.scale(C::new(a, 0.3)), &g.scale(C::new(b, 0.0)), &spec, &e).unwrap().ratio;
            prop_assert!((r0 - r1).abs() <= 1e-12 * r0);
        }

        #[test]
        fn bessel_for_sharp_subcollections(seed in 0u64..1000, cut in 1usize..5) {
            let f = band(-20.0, 20.0, seed);
            let edges = [-20.0, -11.0, -3.0, 2.0, 9.0, 20.0];
            let v: Vec<_> = edges.windows(2).map(|w| Interval::from_endpoints(w[0], w[1]).unwrap()).take(cut).collect();
            let spec = SquareFunctionSpec::new(IntervalCollection::from_intervals(v).unwrap(), CutoffMode::Sharp);
            let s = linear_square_function(&f, &spec).unwrap();
            prop_assert!(s.lp_norm(2.0) <= f.lp_norm(2.0) * (1.0 + 1e-10));
        }

        #[test]
        fn growth_is_monotone(seed in 0u64..1000, extra in -6i64..6) {
            let f = band(-6.0, 6.0, seed);
            let g = band(-6.0, 6.0, seed + 3);
            let base = IntervalCollection::translates(-2..2).unwrap();
            let mut v = base.intervals().to_vec();
            v.push(Interval::new(extra as f64 + 0.25, 1.0).unwrap());
            let grown = IntervalCollection::from_intervals(v).unwrap();
            let s0 = bilinear_square_function(&f, &g, &SquareFunctionSpec::new(base, CutoffMode::Smooth)).unwrap();
            let s1 = bilinear_square_function(&f, &g, &SquareFunctionSpec::new(grown, CutoffMode::Smooth)).unwrap();
            for (a, b) in s0.samples().iter().zip(s1.samples()) {
                prop_assert!(a.re <= b.re);
            }
        }
    }
}
