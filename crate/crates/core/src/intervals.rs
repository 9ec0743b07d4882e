//! Frequency intervals, well-distributed collections, smooth scaled cutoffs
//! and the finite Whitney refinement of a collection.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numeric::smooth_step;
use crate::scalar::Real;

/// Closed interval `ω` with center `c(ω)` and length `|ω|`.
///
/// Endpoints are stored directly so intervals built from shared endpoints
/// tile the line exactly under half-open membership.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<T> {
    lo: T,
    hi: T,
}

/// Frequency interval.
pub type FreqInterval<T> = Interval<T>;

impl<T: Real> Interval<T> {
    /// Builds an interval from center and positive finite length.
    pub fn new(center: T, length: T) -> Result<Self> {
        if !(length > T::zero()) || !length.is_finite() || !center.is_finite() {
            return Err(Error::Parameter(format!("invalid interval ({center}, {length})")));
        }
        let half = length / T::lit(2.0);
        Ok(Self { lo: center - half, hi: center + half })
    }

    /// Builds `[lo, hi]` with `lo < hi`.
    pub fn from_endpoints(lo: T, hi: T) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Parameter(format!("invalid endpoints [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    /// Midpoint `c(ω)`.
    pub fn center(&self) -> T {
        (self.lo + self.hi) / T::lit(2.0)
    }

    /// Length `|ω|`.
    pub fn length(&self) -> T {
        self.hi - self.lo
    }

    /// Left endpoint.
    pub fn lo(&self) -> T {
        self.lo
    }

    /// Right endpoint.
    pub fn hi(&self) -> T {
        self.hi
    }

    /// Concentric dilate `cω`.
    pub fn dilate(&self, c: T) -> Self {
        let m = self.center();
        let half = self.length() * c / T::lit(2.0);
        Self { lo: m - half, hi: m + half }
    }

    /// Translate by `a`.
    pub fn shift(&self, a: T) -> Self {
        Self { lo: self.lo + a, hi: self.hi + a }
    }

    /// Reflection `-ω`.
    pub fn neg(&self) -> Self {
        Self { lo: -self.hi, hi: -self.lo }
    }

    /// Minkowski sum `ω + ω'`.
    pub fn sum(&self, o: &Self) -> Self {
        Self { lo: self.lo + o.lo, hi: self.hi + o.hi }
    }

    /// Membership in the closed interval.
    pub fn contains(&self, x: T) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Membership in the half-open interval `[lo, hi)`.
    pub fn contains_half_open(&self, x: T) -> bool {
        x >= self.lo && x < self.hi
    }

    /// Closed intervals meet.
    pub fn intersects(&self, o: &Self) -> bool {
        self.lo <= o.hi && o.lo <= self.hi
    }

    /// Open interiors meet.
    pub fn interiors_intersect(&self, o: &Self) -> bool {
        self.lo < o.hi && o.lo < self.hi
    }

    /// `self ⊆ o` as closed intervals.
    pub fn subset_of(&self, o: &Self) -> bool {
        self.lo >= o.lo && self.hi <= o.hi
    }

    /// `self ⊆ o` allowing an absolute slack `tol` at both ends.
    pub fn subset_within(&self, o: &Self, tol: T) -> bool {
        self.lo >= o.lo - tol && self.hi <= o.hi + tol
    }
}

/// Finite interval collection with declared length range and separation
/// parameter `κ`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalCollection<T> {
    intervals: Vec<Interval<T>>,
    length_range: (T, T),
    kappa: T,
}

impl<T: Real> IntervalCollection<T> {
    /// Builds a collection; every length must lie in `length_range` (up to a
    /// relative rounding slack of `1e-12`) and `kappa >= 2`.
    pub fn new(intervals: Vec<Interval<T>>, length_range: (T, T), kappa: T) -> Result<Self> {
        let (lmin, lmax) = length_range;
        if !(lmin > T::zero()) || lmin > lmax {
            return Err(Error::Parameter(format!("invalid length range [{lmin}, {lmax}]")));
        }
        if !(kappa >= T::lit(2.0)) {
            return Err(Error::Parameter(format!("kappa must be >= 2, got {kappa}")));
        }
        let slack = T::lit(1e-12);
        let (lo, hi) = (lmin * (T::one() - slack), lmax * (T::one() + slack));
        if let Some(w) = intervals.iter().find(|w| w.length() < lo || w.length() > hi) {
            return Err(Error::Parameter(format!(
                "interval length {} outside [{lmin}, {lmax}]",
                w.length()
            )));
        }
        Ok(Self { intervals, length_range, kappa })
    }

    /// Builds a collection whose length range is the tightest one containing
    /// every interval; `kappa = 2`.
    pub fn from_intervals(intervals: Vec<Interval<T>>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::Empty);
        }
        let lmin = intervals.iter().map(|w| w.length()).fold(T::infinity(), T::min);
        let lmax = intervals.iter().map(|w| w.length()).fold(T::zero(), T::max);
        Self::new(intervals, (lmin, lmax), T::lit(2.0))
    }

    /// Unit translates `[n, n+1]` for `n` in `range`.
    pub fn translates(range: std::ops::Range<i64>) -> Result<Self> {
        let one = T::one();
        let v = range.map(|n| Interval { lo: T::int(n), hi: T::int(n) + one }).collect();
        Self::new(v, (one, one), T::lit(2.0))
    }

    /// Random collection of `count` intervals with lengths uniform in
    /// `lengths` and gaps between consecutive intervals uniform in `gaps`,
    /// centered around `offset`.
    pub fn random(count: usize, lengths: (T, T), gaps: (T, T), offset: T, seed: u64) -> Result<Self> {
        if count == 0 {
            return Err(Error::Empty);
        }
        if gaps.0 < T::zero() || gaps.0 > gaps.1 {
            return Err(Error::Parameter(format!("invalid gap range [{}, {}]", gaps.0, gaps.1)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |r: (T, T)| -> T {
            let u: f64 = rng.gen();
            r.0 + (r.1 - r.0) * T::lit(u)
        };
        let mut v = Vec::with_capacity(count);
        let mut edge = T::zero();
        for i in 0..count {
            if i > 0 {
                edge = edge + draw(gaps);
            }
            let len = draw(lengths);
            v.push(Interval { lo: edge, hi: edge + len });
            edge = edge + len;
        }
        let shift = offset - edge / T::lit(2.0);
        let v = v.into_iter().map(|w| w.shift(shift)).collect();
        Self::new(v, lengths, T::lit(2.0))
    }

    /// Intervals of the collection.
    pub fn intervals(&self) -> &[Interval<T>] {
        &self.intervals
    }

    /// Number of intervals.
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    /// True when the collection holds no interval.
    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Declared `[ℓ_min, ℓ_max]`.
    pub fn length_range(&self) -> (T, T) {
        self.length_range
    }

    /// Separation parameter `κ`.
    pub fn kappa(&self) -> T {
        self.kappa
    }

    /// Same intervals with another `κ`.
    pub fn with_kappa(&self, kappa: T) -> Result<Self> {
        Self::new(self.intervals.clone(), self.length_range, kappa)
    }

    /// Error unless every length lies in `[1/10, 10]`.
    pub fn check_standard_lengths(&self) -> Result<()> {
        let lo = T::lit(0.1);
        let hi = T::lit(10.0);
        match self.intervals.iter().find(|w| w.length() < lo || w.length() > hi) {
            Some(w) => Err(Error::Assumption(format!("interval length {} outside [0.1, 10]", w.length()))),
            None => Ok(()),
        }
    }

    /// Maximal number of closed dilates `factor·ω` sharing a point, by an
    /// endpoint sweep in which starts precede ends at equal positions.
    pub fn overlap_constant(&self, factor: T) -> Result<usize> {
        if self.intervals.is_empty() {
            return Err(Error::Empty);
        }
        let mut events: Vec<(T, i32)> = Vec::with_capacity(2 * self.intervals.len());
        for w in &self.intervals {
            let d = w.dilate(factor);
            events.push((d.lo(), 0));
            events.push((d.hi(), 1));
        }
        events.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite endpoints").then(a.1.cmp(&b.1)));
        let mut cur = 0usize;
        let mut best = 0usize;
        for (_, kind) in events {
            if kind == 0 {
                cur += 1;
                best = best.max(cur);
            } else {
                cur -= 1;
            }
        }
        Ok(best)
    }

    /// Mesh cross-check of [`IntervalCollection::overlap_constant`] with step `ℓ_min/100`.
    pub fn overlap_on_mesh(&self, factor: T) -> Result<usize> {
        if self.intervals.is_empty() {
            return Err(Error::Empty);
        }
        let lo = self.intervals.iter().map(|w| w.dilate(factor).lo()).fold(T::infinity(), T::min);
        let hi = self.intervals.iter().map(|w| w.dilate(factor).hi()).fold(T::neg_infinity(), T::max);
        let h = self.length_range.0 / T::lit(100.0);
        let steps = ((hi - lo) / h).ceil().to_usize().unwrap_or(0);
        let dil: Vec<Interval<T>> = self.intervals.iter().map(|w| w.dilate(factor)).collect();
        let mut best = 0;
        for m in 0..=steps {
            let x = lo + h * T::count(m);
            best = best.max(dil.iter().filter(|d| d.contains(x)).count());
        }
        Ok(best)
    }

    /// True when no two intervals share an interior point in the
    /// half-open sense used for sharp cutoffs.
    pub fn half_open_disjoint(&self) -> bool {
        let mut v: Vec<&Interval<T>> = self.intervals.iter().collect();
        v.sort_by(|a, b| a.lo().partial_cmp(&b.lo()).expect("finite endpoints"));
        v.windows(2).all(|p| p[0].hi() <= p[1].lo())
    }

    /// Writes `center,length` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["center", "length"])?;
        for iv in &self.intervals {
            wr.write_record([format!("{:e}", iv.center().as_f64()), format!("{:e}", iv.length().as_f64())])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads `center,length` rows; the length range is inferred.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut v = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let get = |i: usize| -> Result<T> {
                let s = rec.get(i).ok_or_else(|| Error::Io(format!("missing column {i}")))?;
                s.trim().parse::<f64>().map(T::lit).map_err(|e| Error::Io(format!("{s}: {e}")))
            };
            v.push(Interval::new(get(0)?, get(1)?)?);
        }
        Self::from_intervals(v)
    }
}

/// Smooth cutoff supported in a closed interval, equal to one on the
/// central `flatness` fraction and built from smooth ramps.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpSymbol<T> {
    interval: Interval<T>,
    flatness: T,
    derivative_constants: [f64; 5],
}

/// Finite-difference step multipliers per derivative order.
const FD_STEP_MULT: [f64; 5] = [1.0, 1.0, 4.0, 16.0, 40.0];
/// Mesh size of the derivative audit.
const FD_MESH: usize = 10_000;

/// Smooth cutoff `χ_ω` with plateau `flatness·|ω|`; `flatness ∈ [0, 1)`.
pub fn make_bump<T: Real>(omega: Interval<T>, flatness: T) -> Result<BumpSymbol<T>> {
    if !(flatness >= T::zero()) || !(flatness < T::one()) {
        return Err(Error::Parameter(format!("flatness must lie in [0, 1), got {flatness}")));
    }
    let mut b = BumpSymbol { interval: omega, flatness, derivative_constants: [0.0; 5] };
    b.derivative_constants = b.audit_derivatives();
    Ok(b)
}

impl<T: Real> BumpSymbol<T> {
    /// Supporting interval.
    pub fn interval(&self) -> Interval<T> {
        self.interval
    }

    /// Plateau fraction.
    pub fn flatness(&self) -> T {
        self.flatness
    }

    /// Measured `C_i = |ω|^i ‖D^i χ_ω‖_∞` for `i = 0..=4`.
    pub fn derivative_constants(&self) -> [f64; 5] {
        self.derivative_constants
    }

    /// Plateau interval on which the profile equals one.
    pub fn plateau(&self) -> Interval<T> {
        self.interval.dilate(self.flatness)
    }

    fn ramp(&self) -> T {
        (T::one() - self.flatness) * self.interval.length() / T::lit(2.0)
    }

    /// Profile value; exactly zero outside the open interval.
    pub fn eval(&self, xi: T) -> T {
        let lo = self.interval.lo();
        let hi = self.interval.hi();
        if xi <= lo || xi >= hi {
            return T::zero();
        }
        let w = self.ramp();
        if xi < lo + w {
            smooth_step((xi - lo) / w)
        } else if xi > hi - w {
            smooth_step((hi - xi) / w)
        } else {
            T::one()
        }
    }

    /// Analytic first derivative of the profile.
    pub fn deriv(&self, xi: T) -> T {
        let lo = self.interval.lo();
        let hi = self.interval.hi();
        if xi <= lo || xi >= hi {
            return T::zero();
        }
        let w = self.ramp();
        if xi < lo + w {
            crate::numeric::smooth_step_deriv((xi - lo) / w) / w
        } else if xi > hi - w {
            -crate::numeric::smooth_step_deriv((hi - xi) / w) / w
        } else {
            T::zero()
        }
    }

    fn audit_derivatives(&self) -> [f64; 5] {
        let lo = self.interval.lo().as_f64();
        let len = self.interval.length().as_f64();
        let dx = len / FD_MESH as f64;
        let f = |x: f64| self.eval(T::lit(x)).as_f64();
        let mut out = [0.0f64; 5];
        for m in 0..=FD_MESH {
            let x = lo + dx * m as f64;
            out[0] = out[0].max(f(x).abs());
            for (order, slot) in out.iter_mut().enumerate().skip(1) {
                let h = FD_STEP_MULT[order] * dx;
                let d = match order {
                    1 => (f(x + h) - f(x - h)) / (2.0 * h),
                    2 => (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h),
                    3 => (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h * h * h),
                    _ => {
                        (f(x + 2.0 * h) - 4.0 * f(x + h) + 6.0 * f(x) - 4.0 * f(x - h) + f(x - 2.0 * h))
                            / (h * h * h * h)
                    }
                };
                *slot = slot.max(d.abs() * len.powi(order as i32));
            }
        }
        out
    }
}

/// One refinement function `χ_{ω,i}` of the Whitney construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WhitneyBump<T> {
    /// Parent interval `ω`.
    pub omega: Interval<T>,
    /// Subdivision count `N`.
    pub n: usize,
    /// Piece index `i ∈ {-1, …, N-1}`.
    pub i: i64,
}

impl<T: Real> WhitneyBump<T> {
    fn node(&self, m: i64) -> T {
        self.omega.lo() + self.omega.length() * T::int(m) / T::count(self.n)
    }

    /// Support `ω_i = [t_i, t_{i+2}]`.
    pub fn support(&self) -> Interval<T> {
        Interval { lo: self.node(self.i), hi: self.node(self.i + 2) }
    }

    /// Rises on `[t_i, t_{i+1}]`, falls on `[t_{i+1}, t_{i+2}]`.
    pub fn eval(&self, xi: T) -> T {
        let h = self.omega.length() / T::count(self.n);
        let a = self.node(self.i);
        let b = self.node(self.i + 1);
        let c = self.node(self.i + 2);
        if xi <= a || xi >= c {
            T::zero()
        } else if xi < b {
            smooth_step((xi - a) / h)
        } else {
            T::one() - smooth_step((xi - b) / h)
        }
    }
}

/// Output of [`whitney_refine`]: one sub-collection per piece index.
#[derive(Debug, Clone)]
pub struct WhitneyRefinement<T> {
    /// Subdivision count `N = ceil(4κ)`.
    pub n: usize,
    /// Pairs `(i, Ω_i)` for `i = -1, …, N-1`.
    pub pieces: Vec<(i64, IntervalCollection<T>)>,
    /// `bumps[w][i+1]` is `χ_{ω,i}` for the `w`-th interval.
    pub bumps: Vec<Vec<WhitneyBump<T>>>,
}

/// Finite Whitney covering of a collection with separation `κ`.
pub fn whitney_refine<T: Real>(c: &IntervalCollection<T>, kappa: T) -> Result<WhitneyRefinement<T>> {
    if !(kappa >= T::lit(2.0)) {
        return Err(Error::Parameter(format!("kappa must be >= 2, got {kappa}")));
    }
    if c.is_empty() {
        return Err(Error::Empty);
    }
    let n = (T::lit(4.0) * kappa).ceil().to_usize().expect("finite kappa");
    let bumps: Vec<Vec<WhitneyBump<T>>> = c
        .intervals()
        .iter()
        .map(|&omega| (-1..n as i64).map(|i| WhitneyBump { omega, n, i }).collect())
        .collect();
    let scale = T::lit(2.0) / T::count(n);
    let (lmin, lmax) = c.length_range();
    let mut pieces = Vec::with_capacity(n + 1);
    for idx in 0..=n {
        let sub = bumps.iter().map(|b| b[idx].support()).collect();
        let slack = T::lit(1e-12);
        let range = (lmin * scale * (T::one() - slack), lmax * scale * (T::one() + slack));
        let col = IntervalCollection::new(sub, range, kappa)?;
        pieces.push((idx as i64 - 1, col));
    }
    Ok(WhitneyRefinement { n, pieces, bumps })
}
