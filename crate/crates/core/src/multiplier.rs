//! Linear and bilinear Fourier multipliers, x-dependent bilinear symbols and
//! the trilinear pairing.
//!
//! Bilinear operators follow `T(f,g)(x) = (1/L²) Σ_{k,l} f̂_k ĝ_l s(ξ_k, ξ_l)
//! e^{i(ξ_k+ξ_l)x}`, the grid Riemann sum of the continuous double integral
//! with the `(2π/L)²` weight folded into the prefactor.

use std::sync::Arc;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::SampledFunction;
use crate::intervals::{BumpSymbol, Interval};
use crate::scalar::Real;

/// Symbol of one frequency variable.
pub type LinearFn<T> = Arc<dyn Fn(T) -> Complex<T> + Send + Sync>;
/// Symbol of two frequency variables.
pub type PairFn<T> = Arc<dyn Fn(T, T) -> Complex<T> + Send + Sync>;
/// Symbol of position and two frequency variables.
pub type TripleFn<T> = Arc<dyn Fn(T, T, T) -> Complex<T> + Send + Sync>;

/// How a symbol is evaluated.
#[derive(Clone)]
pub enum Evaluator<T> {
    /// `s(ξ)` acting on one function.
    Linear(LinearFn<T>),
    /// `s(ξ - η)` acting on a pair.
    Diagonal(LinearFn<T>),
    /// `s(ξ, η)` acting on a pair.
    General(PairFn<T>),
    /// `σ(x, ξ, η)` acting on a pair.
    XDependent(TripleFn<T>),
}

/// Declared region outside of which the symbol vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support<T> {
    /// No restriction.
    FullPlane,
    /// The active variable (`ξ` for linear, `ξ - η` for diagonal) lies in
    /// the closed interval.
    Interval(Interval<T>),
    /// `a ξ + b η` lies in the closed interval, with `normal = (a, b)`.
    Strip {
        /// Coefficients `(a, b)`.
        normal: (T, T),
        /// Admissible values of `a ξ + b η`.
        interval: Interval<T>,
    },
}

/// Regularity tag carried with a symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    /// Indicator-type cutoff.
    Sharp,
    /// Smooth symbol.
    Smooth,
    /// No claim.
    Unknown,
}

/// Evaluable symbol together with its support hint and regularity tag.
#[derive(Clone)]
pub struct SymbolDescriptor<T> {
    /// Evaluation rule.
    pub evaluator: Evaluator<T>,
    /// Support hint.
    pub support: Support<T>,
    /// Regularity tag.
    pub smoothness: Smoothness,
}

impl<T: Real> std::fmt::Debug for SymbolDescriptor<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.evaluator {
            Evaluator::Linear(_) => "linear",
            Evaluator::Diagonal(_) => "diagonal",
            Evaluator::General(_) => "general",
            Evaluator::XDependent(_) => "x-dependent",
        };
        f.debug_struct("SymbolDescriptor")
            .field("kind", &kind)
            .field("support", &self.support)
            .field("smoothness", &self.smoothness)
            .finish()
    }
}

fn real<T: Real>(v: T) -> Complex<T> {
    Complex::new(v, T::zero())
}

impl<T: Real> SymbolDescriptor<T> {
    /// Linear symbol without support hint.
    pub fn linear<F: Fn(T) -> Complex<T> + Send + Sync + 'static>(f: F) -> Self {
        Self { evaluator: Evaluator::Linear(Arc::new(f)), support: Support::FullPlane, smoothness: Smoothness::Unknown }
    }

    /// Sharp cutoff `1_ω` with the half-open convention `[lo, hi)`.
    pub fn sharp(omega: Interval<T>) -> Self {
        Self {
            evaluator: Evaluator::Linear(Arc::new(move |xi| {
                if omega.contains_half_open(xi) {
                    real(T::one())
                } else {
                    real(T::zero())
                }
            })),
            support: Support::Interval(omega),
            smoothness: Smoothness::Sharp,
        }
    }

    /// Smooth cutoff `χ_ω` as a linear symbol.
    pub fn bump(b: BumpSymbol<T>) -> Self {
        let omega = b.interval();
        Self {
            evaluator: Evaluator::Linear(Arc::new(move |xi| real(b.eval(xi)))),
            support: Support::Interval(omega),
            smoothness: Smoothness::Smooth,
        }
    }

    /// Diagonal symbol `s(ξ - η)` without support hint.
    pub fn diagonal<F: Fn(T) -> Complex<T> + Send + Sync + 'static>(f: F) -> Self {
        Self { evaluator: Evaluator::Diagonal(Arc::new(f)), support: Support::FullPlane, smoothness: Smoothness::Unknown }
    }

    /// Diagonal symbol `χ_ω(ξ - η)`.
    pub fn diagonal_bump(b: BumpSymbol<T>) -> Self {
        let omega = b.interval();
        Self {
            evaluator: Evaluator::Diagonal(Arc::new(move |d| real(b.eval(d)))),
            support: Support::Interval(omega),
            smoothness: Smoothness::Smooth,
        }
    }

    /// Diagonal sharp symbol `1_ω(ξ - η)` with half-open membership.
    pub fn diagonal_sharp(omega: Interval<T>) -> Self {
        Self {
            evaluator: Evaluator::Diagonal(Arc::new(move |d| {
                if omega.contains_half_open(d) {
                    real(T::one())
                } else {
                    real(T::zero())
                }
            })),
            support: Support::Interval(omega),
            smoothness: Smoothness::Sharp,
        }
    }

    /// General symbol `s(ξ, η)` without support hint.
    pub fn general<F: Fn(T, T) -> Complex<T> + Send + Sync + 'static>(f: F) -> Self {
        Self { evaluator: Evaluator::General(Arc::new(f)), support: Support::FullPlane, smoothness: Smoothness::Unknown }
    }

    /// x-dependent symbol `σ(x, ξ, η)`.
    pub fn xdep<F: Fn(T, T, T) -> Complex<T> + Send + Sync + 'static>(f: F) -> Self {
        Self {
            evaluator: Evaluator::XDependent(Arc::new(f)),
            support: Support::FullPlane,
            smoothness: Smoothness::Unknown,
        }
    }

    /// Replaces the support hint.
    pub fn with_support(mut self, support: Support<T>) -> Self {
        self.support = support;
        self
    }

    /// Replaces the regularity tag.
    pub fn with_smoothness(mut self, smoothness: Smoothness) -> Self {
        self.smoothness = smoothness;
        self
    }

    /// Converts a diagonal symbol into the equivalent general one.
    pub fn to_general(&self) -> Result<Self> {
        let evaluator = match &self.evaluator {
            Evaluator::Diagonal(f) => {
                let f = f.clone();
                Evaluator::General(Arc::new(move |xi, eta| f(xi - eta)))
            }
            Evaluator::General(f) => Evaluator::General(f.clone()),
            _ => return Err(Error::Parameter("symbol is not a function of (ξ, η)".into())),
        };
        let support = match self.support {
            Support::Interval(w) if matches!(self.evaluator, Evaluator::Diagonal(_)) => {
                Support::Strip { normal: (T::one(), -T::one()), interval: w }
            }
            s => s,
        };
        Ok(Self { evaluator, support, smoothness: self.smoothness })
    }

    /// Value at `(x, ξ, η)`; linear symbols read `ξ` only.
    pub fn eval(&self, x: T, xi: T, eta: T) -> Complex<T> {
        match &self.evaluator {
            Evaluator::Linear(f) => f(xi),
            Evaluator::Diagonal(f) => f(xi - eta),
            Evaluator::General(f) => f(xi, eta),
            Evaluator::XDependent(f) => f(x, xi, eta),
        }
    }

    /// True when the support hint admits `(ξ, η)`.
    pub fn in_support(&self, xi: T, eta: T) -> bool {
        match self.support {
            Support::FullPlane => true,
            Support::Interval(w) => match self.evaluator {
                Evaluator::Linear(_) => w.contains(xi),
                _ => w.contains(xi - eta),
            },
            Support::Strip { normal: (a, b), interval } => interval.contains(a * xi + b * eta),
        }
    }

    /// Checks on `count` random points outside the support hint, drawn
    /// from the square `[-radius, radius]²`, that the symbol is exactly zero.
    /// The position variable is drawn from `[0, radius)`.
    pub fn audit_support(&self, radius: T, count: usize, seed: u64) -> bool {
        if matches!(self.support, Support::FullPlane) {
            return true;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut checked = 0;
        let mut tries = 0;
        while checked < count && tries < 100 * count {
            tries += 1;
            let u: f64 = rng.gen_range(-1.0..1.0);
            let v: f64 = rng.gen_range(-1.0..1.0);
            let w: f64 = rng.gen_range(0.0..1.0);
            let (xi, eta, x) = (radius * T::lit(u), radius * T::lit(v), radius * T::lit(w));
            if self.in_support(xi, eta) {
                continue;
            }
            checked += 1;
            let val = self.eval(x, xi, eta);
            if val.re != T::zero() || val.im != T::zero() {
                return false;
            }
        }
        true
    }
}

/// Output spectrum `s(ξ_k) f̂_k`, then the inverse transform.
pub fn linear_multiplier<T: Real>(f: &SampledFunction<T>, s: &SymbolDescriptor<T>) -> Result<SampledFunction<T>> {
    let Evaluator::Linear(sym) = &s.evaluator else {
        return Err(Error::Parameter("linear multiplier needs a linear symbol".into()));
    };
    let grid = *f.grid();
    let spec = f
        .spectrum()
        .iter()
        .enumerate()
        .map(|(b, c)| if c.re == T::zero() && c.im == T::zero() { *c } else { c * sym(grid.bin_freq(b)) })
        .collect();
    SampledFunction::from_spectrum(grid, spec)
}

/// Coefficients of `f` in signed order `k = -N/2, …, N/2 - 1`.
fn signed_spectrum<T: Real>(f: &SampledFunction<T>) -> Vec<Complex<T>> {
    let grid = f.grid();
    let n = grid.len() as i64;
    (-n / 2..n / 2).map(|k| f.coefficient(k)).collect()
}

fn is_zero<T: Real>(c: &Complex<T>) -> bool {
    c.re == T::zero() && c.im == T::zero()
}

fn finish<T: Real>(f: &SampledFunction<T>, mut acc: Vec<Complex<T>>) -> Result<SampledFunction<T>> {
    let grid = *f.grid();
    let w = grid.period().recip();
    acc.iter_mut().for_each(|c| *c = *c * w);
    SampledFunction::from_spectrum(grid, acc)
}

/// `T_s(f, g)` for a diagonal symbol `s(ξ - η)`.
///
/// Groups the double sum by the difference `δ = k - l`; each difference
/// with nonzero symbol value contributes one pass over `k`, accumulated by
/// output frequency `τ = k + l`. Cost `O(N log N + N·B)` with `B` the number
/// of active differences.
pub fn bilinear_diagonal<T: Real>(
    f: &SampledFunction<T>,
    g: &SampledFunction<T>,
    s: &SymbolDescriptor<T>,
) -> Result<SampledFunction<T>> {
    f.grid().check_same(g.grid())?;
    let Evaluator::Diagonal(sym) = &s.evaluator else {
        return Err(Error::Parameter("bilinear_diagonal needs a diagonal symbol".into()));
    };
    let grid = *f.grid();
    let n = grid.len() as i64;
    let half = n / 2;
    let fs = signed_spectrum(f);
    let gs = signed_spectrum(g);
    let f_lo = fs.iter().position(|c| !is_zero(c));
    let g_lo = gs.iter().position(|c| !is_zero(c));
    let mut acc = vec![Complex::new(T::zero(), T::zero()); grid.len()];
    let (Some(f_lo), Some(g_lo)) = (f_lo, g_lo) else {
        return finish(f, acc);
    };
    let f_hi = fs.iter().rposition(|c| !is_zero(c)).expect("nonempty") as i64 - half;
    let g_hi = gs.iter().rposition(|c| !is_zero(c)).expect("nonempty") as i64 - half;
    let (f_lo, g_lo) = (f_lo as i64 - half, g_lo as i64 - half);
    for delta in (f_lo - g_hi)..=(f_hi - g_lo) {
        let w = sym(grid.freq(delta));
        if is_zero(&w) {
            continue;
        }
        let k_lo = f_lo.max(delta + g_lo);
        let k_hi = f_hi.min(delta + g_hi);
        for k in k_lo..=k_hi {
            let l = k - delta;
            let prod = fs[(k + half) as usize] * gs[(l + half) as usize];
            let tau = (k + l).rem_euclid(n) as usize;
            acc[tau] = acc[tau] + prod * w;
        }
    }
    finish(f, acc)
}

/// `T_s(f, g)` for a general symbol `s(ξ, η)` by the direct double sum over
/// the nonzero coefficients, parallel over output frequencies.
pub fn bilinear_general<T: Real>(
    f: &SampledFunction<T>,
    g: &SampledFunction<T>,
    s: &SymbolDescriptor<T>,
) -> Result<SampledFunction<T>> {
    f.grid().check_same(g.grid())?;
    let s = s.to_general()?;
    let Evaluator::General(sym) = &s.evaluator else { unreachable!("converted above") };
    let grid = *f.grid();
    let n = grid.len() as i64;
    let half = n / 2;
    let fs = signed_spectrum(f);
    let gs = signed_spectrum(g);
    let active: Vec<i64> = (0..n).filter(|&i| !is_zero(&fs[i as usize])).map(|i| i - half).collect();
    let coeff: Vec<Complex<T>> = (0..n)
        .into_par_iter()
        .map(|b| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for &k in &active {
                let l = (b - k + half).rem_euclid(n) - half;
                let gl = gs[(l + half) as usize];
                if is_zero(&gl) {
                    continue;
                }
                let w = sym(grid.freq(k), grid.freq(l));
                acc = acc + fs[(k + half) as usize] * gl * w;
            }
            acc
        })
        .collect();
    finish(f, coeff)
}

/// Default sample-count guard of [`bilinear_xdep`].
pub const XDEP_MAX_SAMPLES: usize = 1024;

/// `T_σ(f, g)` for an x-dependent symbol, guarded at [`XDEP_MAX_SAMPLES`].
pub fn bilinear_xdep<T: Real>(
    f: &SampledFunction<T>,
    g: &SampledFunction<T>,
    s: &SymbolDescriptor<T>,
) -> Result<SampledFunction<T>> {
    bilinear_xdep_limited(f, g, s, XDEP_MAX_SAMPLES)
}

/// [`bilinear_xdep`] with an explicit sample-count guard.
pub fn bilinear_xdep_limited<T: Real>(
    f: &SampledFunction<T>,
    g: &SampledFunction<T>,
    s: &SymbolDescriptor<T>,
    max_samples: usize,
) -> Result<SampledFunction<T>> {
    f.grid().check_same(g.grid())?;
    let grid = *f.grid();
    if grid.len() > max_samples {
        return Err(Error::Size(format!(
            "x-dependent evaluation limited to N <= {max_samples}, got {}",
            grid.len()
        )));
    }
    let n = grid.len() as i64;
    let active = |h: &SampledFunction<T>| -> Vec<(i64, Complex<T>)> {
        (-n / 2..n / 2).map(|k| (k, h.coefficient(k))).filter(|(_, c)| !is_zero(c)).collect()
    };
    let fa = active(f);
    let ga = active(g);
    let twiddle: Vec<Complex<T>> = (0..n)
        .map(|m| Complex::from_polar(T::one(), T::TAU() * T::int(m) / T::int(n)))
        .collect();
    let scale = (grid.period() * grid.period()).recip();
    let samples: Vec<Complex<T>> = (0..grid.len())
        .into_par_iter()
        .map(|j| {
            let x = grid.x(j);
            let mut acc = Complex::new(T::zero(), T::zero());
            for &(k, fk) in &fa {
                for &(l, gl) in &ga {
                    let w = s.eval(x, grid.freq(k), grid.freq(l));
                    if is_zero(&w) {
                        continue;
                    }
                    let phase = twiddle[((k + l) * j as i64).rem_euclid(n) as usize];
                    acc = acc + fk * gl * w * phase;
                }
            }
            acc * scale
        })
        .collect();
    SampledFunction::new(grid, samples)
}

/// Dispatches to the evaluator matching the symbol kind.
pub fn apply_bilinear<T: Real>(
    f: &SampledFunction<T>,
    g: &SampledFunction<T>,
    s: &SymbolDescriptor<T>,
) -> Result<SampledFunction<T>> {
    match s.evaluator {
        Evaluator::Diagonal(_) => bilinear_diagonal(f, g, s),
        Evaluator::General(_) => bilinear_general(f, g, s),
        Evaluator::XDependent(_) => bilinear_xdep(f, g, s),
        Evaluator::Linear(_) => Err(Error::Parameter("bilinear operator needs a bilinear symbol".into())),
    }
}

/// `(L/N) Σ_j T_s(f, g)(x_j) h(x_j)`.
pub fn trilinear_pairing<T: Real>(
    f: &SampledFunction<T>,
    g: &SampledFunction<T>,
    h: &SampledFunction<T>,
    s: &SymbolDescriptor<T>,
) -> Result<Complex<T>> {
    f.grid().check_same(h.grid())?;
    apply_bilinear(f, g, s)?.integrate_product(h)
}

/// Samples of a sharp `1_ω` partition evaluated through `linear_multiplier`;
/// returned in the order of `omegas`.
pub fn sharp_pieces<T: Real>(f: &SampledFunction<T>, omegas: &[Interval<T>]) -> Result<Vec<SampledFunction<T>>> {
    omegas.iter().map(|w| linear_multiplier(f, &SymbolDescriptor::sharp(*w))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{synthesize, GridSpec, TestFamily};
    use crate::intervals::make_bump;
    use proptest::prelude::*;

    type C = Complex<f64>;

    fn grid(n: usize) -> GridSpec<f64> {
        GridSpec::new(16.0, n).unwrap()
    }

    fn band(gr: GridSpec<f64>, lo: f64, hi: f64, seed: u64) -> SampledFunction<f64> {
        synthesize(gr, &TestFamily::RandomBandlimited { lo, hi }, seed).unwrap()
    }

    fn max_err(a: &SampledFunction<f64>, b: &SampledFunction<f64>) -> f64 {
        a.samples().iter().zip(b.samples()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    fn sup(a: &SampledFunction<f64>) -> f64 {
        a.lp_norm(f64::INFINITY)
    }

    /// Direct double sum followed by a naive inverse DFT.
    fn direct(f: &SampledFunction<f64>, g: &SampledFunction<f64>, s: impl Fn(f64, f64) -> C) -> Vec<C> {
        let gr = *f.grid();
        let n = gr.len() as i64;
        let mut acc = vec![C::new(0.0, 0.0); gr.len()];
        for k in -n / 2..n / 2 {
            for l in -n / 2..n / 2 {
                let tau = (k + l).rem_euclid(n) as usize;
                acc[tau] += f.coefficient(k) * g.coefficient(l) * s(gr.freq(k), gr.freq(l));
            }
        }
        (0..gr.len())
            .map(|j| {
                let mut v = C::new(0.0, 0.0);
                for (t, a) in acc.iter().enumerate() {
                    v += a * C::from_polar(1.0, std::f64::consts::TAU * (t * j % gr.len()) as f64 / n as f64);
                }
                v / (gr.period() * gr.period())
            })
            .collect()
    }

    #[test]
    fn identity_symbol() {
        let gr = grid(256);
        let f = band(gr, -20.0, 20.0, 1);
        let out = linear_multiplier(&f, &SymbolDescriptor::linear(|_| C::new(1.0, 0.0))).unwrap();
        assert!(max_err(&out, &f) < 1e-13 * sup(&f));
    }

    #[test]
    fn single_mode_in_and_out() {
        let gr = grid(256);
        let f = SampledFunction::from_modes(gr, &[(5, C::new(64.0, 0.0))]).unwrap();
        let inside = Interval::from_endpoints(gr.freq(4), gr.freq(6)).unwrap();
        let outside = Interval::from_endpoints(gr.freq(7), gr.freq(9)).unwrap();
        let a = linear_multiplier(&f, &SymbolDescriptor::sharp(inside)).unwrap();
        let b = linear_multiplier(&f, &SymbolDescriptor::sharp(outside)).unwrap();
        assert!(max_err(&a, &f) < 1e-13);
        assert!(sup(&b) == 0.0);
    }

    #[test]
    fn full_symbol_gives_product() {
        let gr = grid(256);
        let f = band(gr, -30.0, 30.0, 2);
        let g = band(gr, -30.0, 30.0, 3);
        let t = bilinear_diagonal(&f, &g, &SymbolDescriptor::diagonal(|_| C::new(1.0, 0.0))).unwrap();
        let p = f.mul(&g).unwrap();
        assert!(max_err(&t, &p) <= 1e-12 * sup(&p));
    }

    #[test]
    fn two_modes() {
        let gr = grid(256);
        let l = gr.period();
        let f = SampledFunction::from_modes(gr, &[(7, C::new(l, 0.0))]).unwrap();
        let g = SampledFunction::from_modes(gr, &[(-3, C::new(l, 0.0))]).unwrap();
        let sym = |d: f64| C::new((-d * d).exp(), d);
        let t = bilinear_diagonal(&f, &g, &SymbolDescriptor::diagonal(sym)).unwrap();
        let w = sym(gr.freq(10));
        let want = SampledFunction::from_fn(gr, |x| w * C::from_polar(1.0, gr.freq(4) * x));
        assert!(max_err(&t, &want) < 1e-13);
    }

    #[test]
    fn diagonal_matches_direct_sum() {
        let gr = grid(256);
        let f = band(gr, -40.0, 40.0, 4);
        let g = band(gr, -40.0, 40.0, 5);
        let b = make_bump(Interval::from_endpoints(3.0, 4.0).unwrap(), 0.6).unwrap();
        let fast = bilinear_diagonal(&f, &g, &SymbolDescriptor::diagonal_bump(b.clone())).unwrap();
        let slow = direct(&f, &g, |x, y| C::new(b.eval(x - y), 0.0));
        let scale = slow.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let err = fast.samples().iter().zip(&slow).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err <= 1e-11 * scale, "{err} vs {scale}");
    }

    #[test]
    fn separable_general_symbol_factorizes() {
        let gr = grid(256);
        let f = band(gr, -20.0, 20.0, 6);
        let g = band(gr, -20.0, 20.0, 7);
        let s1 = |x: f64| C::new((-0.1 * x * x).exp(), 0.0);
        let s2 = |y: f64| C::new(0.0, y.cos());
        let t = bilinear_general(&f, &g, &SymbolDescriptor::general(move |x, y| s1(x) * s2(y))).unwrap();
        let a = linear_multiplier(&f, &SymbolDescriptor::linear(s1)).unwrap();
        let b = linear_multiplier(&g, &SymbolDescriptor::linear(s2)).unwrap();
        let p = a.mul(&b).unwrap();
        assert!(max_err(&t, &p) <= 1e-12 * sup(&p));
    }

    #[test]
    fn general_matches_diagonal() {
        let gr = grid(512);
        let f = band(gr, -30.0, 30.0, 8);
        let g = band(gr, -30.0, 30.0, 9);
        let b = make_bump(Interval::from_endpoints(-2.0, 5.0).unwrap(), 0.6).unwrap();
        let d = SymbolDescriptor::diagonal_bump(b);
        let t1 = bilinear_diagonal(&f, &g, &d).unwrap();
        let t2 = bilinear_general(&f, &g, &d.to_general().unwrap()).unwrap();
        assert!(max_err(&t1, &t2) <= 1e-12 * sup(&t1));
    }

    #[test]
    fn disjoint_support_gives_zero() {
        let gr = grid(256);
        let nyq = gr.nyquist();
        let f = band(gr, -nyq / 4.0, nyq / 4.0, 10);
        let g = band(gr, -nyq / 4.0, nyq / 4.0, 11);
        let s = SymbolDescriptor::general(move |x: f64, y: f64| {
            if x.abs() > nyq / 2.0 && y.abs() > nyq / 2.0 {
                C::new(1.0, 0.0)
            } else {
                C::new(0.0, 0.0)
            }
        });
        assert_eq!(sup(&bilinear_general(&f, &g, &s).unwrap()), 0.0);
    }

    #[test]
    fn xdep_reductions() {
        let gr = grid(128);
        let f = band(gr, -15.0, 15.0, 12);
        let g = band(gr, -15.0, 15.0, 13);
        let s = |x: f64, y: f64| C::new((-0.05 * (x - y) * (x - y)).exp(), 0.1 * x);
        let general = bilinear_general(&f, &g, &SymbolDescriptor::general(s)).unwrap();
        let flat = bilinear_xdep(&f, &g, &SymbolDescriptor::xdep(move |_, x, y| s(x, y))).unwrap();
        assert!(max_err(&general, &flat) <= 1e-12 * sup(&general));
        let c = |x: f64| C::new((x / 7.0).sin(), 1.0);
        let mixed = bilinear_xdep(&f, &g, &SymbolDescriptor::xdep(move |t, x, y| c(t) * s(x, y))).unwrap();
        let want = SampledFunction::from_fn(gr, c).mul(&general).unwrap();
        assert!(max_err(&mixed, &want) <= 1e-12 * sup(&want));
    }

    #[test]
    fn xdep_guard() {
        let gr = grid(2048);
        let f = band(gr, -1.0, 1.0, 1);
        let s = SymbolDescriptor::xdep(|_, _, _| C::new(1.0, 0.0));
        assert!(matches!(bilinear_xdep(&f, &f, &s), Err(Error::Size(_))));
        assert!(bilinear_xdep_limited(&f, &f, &s, 4096).is_ok());
    }

    #[test]
    fn grid_mismatch() {
        let f = band(grid(256), -1.0, 1.0, 1);
        let g = band(grid(512), -1.0, 1.0, 1);
        let s = SymbolDescriptor::diagonal(|_| C::new(1.0, 0.0));
        assert!(matches!(bilinear_diagonal(&f, &g, &s), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn pairing_matches_constrained_triple_sum() {
        let gr = grid(256);
        let f = band(gr, -20.0, 20.0, 14);
        let g = band(gr, -20.0, 20.0, 15);
        let h = band(gr, -40.0, 40.0, 16);
        let b = make_bump(Interval::from_endpoints(1.0, 3.0).unwrap(), 0.6).unwrap();
        let s = SymbolDescriptor::diagonal_bump(b.clone());
        let lhs = trilinear_pairing(&f, &g, &h, &s).unwrap();
        let n = gr.len() as i64;
        let mut rhs = C::new(0.0, 0.0);
        for k in -n / 2..n / 2 {
            for l in -n / 2..n / 2 {
                let m = (-(k + l) + n / 2).rem_euclid(n) - n / 2;
                rhs += f.coefficient(k) * g.coefficient(l) * h.coefficient(m) * b.eval(gr.freq(k) - gr.freq(l));
            }
        }
        rhs /= gr.period() * gr.period();
        assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm());
    }

    #[test]
    fn pairing_with_full_symbol_is_integral() {
        let gr = grid(256);
        let f = band(gr, -20.0, 20.0, 17);
        let g = band(gr, -20.0, 20.0, 18);
        let h = band(gr, -20.0, 20.0, 19);
        let lhs = trilinear_pairing(&f, &g, &h, &SymbolDescriptor::diagonal(|_| C::new(1.0, 0.0))).unwrap();
        let rhs = f.mul(&g).unwrap().integrate_product(&h).unwrap();
        assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm());
        let f = band(gr, -10.0, 10.0, 17);
        let g = band(gr, -10.0, 10.0, 18);
        let far = band(gr, 25.0, 45.0, 20);
        let z = trilinear_pairing(&f, &g, &far, &SymbolDescriptor::diagonal(|_| C::new(1.0, 0.0))).unwrap();
        assert!(z.norm() <= 1e-12 * f.lp_norm(2.0) * g.lp_norm(2.0) * far.lp_norm(2.0));
    }

    #[test]
    fn support_audit() {
        let b = make_bump(Interval::from_endpoints(3.0, 4.0).unwrap(), 0.6).unwrap();
        assert!(SymbolDescriptor::diagonal_bump(b.clone()).audit_support(20.0, 1000, 1));
        assert!(SymbolDescriptor::bump(b).audit_support(20.0, 1000, 2));
        let lying = SymbolDescriptor::diagonal(|_| C::new(1.0, 0.0))
            .with_support(Support::Interval(Interval::from_endpoints(0.0, 1.0).unwrap()));
        assert!(!lying.audit_support(20.0, 1000, 3));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn bilinearity(seed in 0u64..1000, ar in -2.0f64..2.0, ai in -2.0f64..2.0) {
            let gr = grid(128);
            let f1 = band(gr, -15.0, 15.0, seed);
            let f2 = band(gr, -15.0, 15.0, seed + 1);
            let g = band(gr, -15.0, 15.0, seed + 2);
            let a = C::new(ar, ai);
            let s = SymbolDescriptor::diagonal(|d: f64| C::new(1.0 / (1.0 + d * d), 0.0));
            let lhs = bilinear_diagonal(&f1.scale(a).add(&f2).unwrap(), &g, &s).unwrap();
            let rhs = bilinear_diagonal(&f1, &g, &s).unwrap().scale(a)
                .add(&bilinear_diagonal(&f2, &g, &s).unwrap()).unwrap();
            prop_assert!(max_err(&lhs, &rhs) <= 1e-12 * sup(&rhs).max(1e-300));
            let lhs = bilinear_diagonal(&g, &f1.scale(a).add(&f2).unwrap(), &s).unwrap();
            let rhs = bilinear_diagonal(&g, &f1, &s).unwrap().scale(a)
                .add(&bilinear_diagonal(&g, &f2, &s).unwrap()).unwrap();
            prop_assert!(max_err(&lhs, &rhs) <= 1e-12 * sup(&rhs).max(1e-300));
        }

        #[test]
        fn modulation_covariance(seed in 0u64..1000, a in -10i64..10) {
            let gr = grid(256);
            let f = band(gr, -20.0, 20.0, seed);
            let g = band(gr, -20.0, 20.0, seed + 7);
            let b = make_bump(Interval::from_endpoints(-1.0, 2.0).unwrap(), 0.6).unwrap();
            let s = SymbolDescriptor::diagonal_bump(b);
            let lhs = bilinear_diagonal(&f.modulate(a), &g.modulate(a), &s).unwrap();
            let rhs = bilinear_diagonal(&f, &g, &s).unwrap().modulate(2 * a);
            prop_assert!(max_err(&lhs, &rhs) <= 1e-12 * sup(&rhs).max(1e-300));
        }
    }
}
