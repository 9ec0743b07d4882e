//! Periodic sampled functions on a uniform grid, their discrete Fourier
//! coefficients, `L^p` norms, and seeded test-function families.
//!
//! Convention: the forward transform is `f̂(ξ) = ∫ f(x) e^{-ixξ} dx`
//! discretized on `[0, L)`. Coefficients satisfy
//! `f(x_j) = (1/L) Σ_k c_k e^{iξ_k x_j}` with `ξ_k = 2πk/L`, and Parseval
//! reads `(L/N) Σ_j |f(x_j)|² = (1/L) Σ_k |c_k|²`.

use std::any::{Any, TypeId};
use std::collections::HashMap;
use std::io::{Read, Write};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Uniform periodic grid with `samples` points on `[0, period)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<T> {
    period: T,
    samples: usize,
}

impl<T: Real> GridSpec<T> {
    /// Builds a grid; `samples` must be a power of two at least 64.
    pub fn new(period: T, samples: usize) -> Result<Self> {
        if !(period > T::zero()) || !period.is_finite() {
            return Err(Error::Parameter(format!("period must be positive, got {period}")));
        }
        if samples < 64 || !samples.is_power_of_two() {
            return Err(Error::Parameter(format!(
                "sample count must be a power of two >= 64, got {samples}"
            )));
        }
        Ok(Self { period, samples })
    }

    /// Spatial period `L`.
    pub fn period(&self) -> T {
        self.period
    }

    /// Number of samples `N`.
    pub fn len(&self) -> usize {
        self.samples
    }

    /// Always false; grids hold at least 64 samples.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Spatial step `L/N`.
    pub fn step(&self) -> T {
        self.period / T::count(self.samples)
    }

    /// Frequency step `2π/L`.
    pub fn freq_step(&self) -> T {
        T::TAU() / self.period
    }

    /// Nyquist half-width `πN/L`; the band is `[-πN/L, πN/L)`.
    pub fn nyquist(&self) -> T {
        T::PI() * T::count(self.samples) / self.period
    }

    /// Sample position `x_j = jL/N`.
    pub fn x(&self, j: usize) -> T {
        self.step() * T::count(j)
    }

    /// All sample positions.
    pub fn positions(&self) -> Vec<T> {
        (0..self.samples).map(|j| self.x(j)).collect()
    }

    /// Frequency `ξ_k = 2πk/L` of the signed index `k`.
    pub fn freq(&self, k: i64) -> T {
        self.freq_step() * T::int(k)
    }

    /// Signed frequency index in `[-N/2, N/2)` stored at FFT bin `bin`.
    pub fn signed_index(&self, bin: usize) -> i64 {
        let n = self.samples as i64;
        let b = bin as i64;
        if b < n / 2 {
            b
        } else {
            b - n
        }
    }

    /// FFT bin holding the signed index `k` (taken modulo `N`).
    pub fn bin(&self, k: i64) -> usize {
        k.rem_euclid(self.samples as i64) as usize
    }

    /// Frequency of FFT bin `bin`.
    pub fn bin_freq(&self, bin: usize) -> T {
        self.freq(self.signed_index(bin))
    }

    /// Signed indices whose frequencies lie in the closed band `[lo, hi]`,
    /// restricted to the Nyquist range.
    pub fn indices_in(&self, lo: T, hi: T) -> Vec<i64> {
        let h = self.freq_step();
        let n2 = (self.samples / 2) as i64;
        let kmin = ((lo / h).ceil().to_i64().unwrap_or(i64::MIN)).max(-n2);
        let kmax = ((hi / h).floor().to_i64().unwrap_or(i64::MAX)).min(n2 - 1);
        let mut out: Vec<i64> = (kmin.saturating_sub(1)..=kmax.saturating_add(1))
            .filter(|&k| k >= -n2 && k < n2)
            .filter(|&k| {
                let xi = self.freq(k);
                xi >= lo && xi <= hi
            })
            .collect();
        out.dedup();
        out
    }

    pub(crate) fn check_same(&self, other: &Self) -> Result<()> {
        if self.samples != other.samples || self.period != other.period {
            return Err(Error::GridMismatch(format!(
                "(L={}, N={}) vs (L={}, N={})",
                self.period, self.samples, other.period, other.samples
            )));
        }
        Ok(())
    }
}

impl Default for GridSpec<f64> {
    fn default() -> Self {
        Self { period: 64.0, samples: 4096 }
    }
}

type PlanKey = (TypeId, usize, bool);

fn plan_cache() -> &'static Mutex<HashMap<PlanKey, Arc<dyn Any + Send + Sync>>> {
    static CACHE: OnceLock<Mutex<HashMap<PlanKey, Arc<dyn Any + Send + Sync>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn plan<T: Real>(len: usize, inverse: bool) -> Arc<dyn Fft<T>> {
    let key = (TypeId::of::<T>(), len, inverse);
    let mut cache = plan_cache().lock().unwrap_or_else(|e| e.into_inner());
    let entry = cache.entry(key).or_insert_with(|| {
        let mut planner = FftPlanner::<T>::new();
        let p = if inverse {
            planner.plan_fft_inverse(len)
        } else {
            planner.plan_fft_forward(len)
        };
        Arc::new(p) as Arc<dyn Any + Send + Sync>
    });
    entry
        .downcast_ref::<Arc<dyn Fft<T>>>()
        .expect("plan cache keyed by type")
        .clone()
}

/// Coefficients `c = (L/N)·DFT(samples)` in FFT bin order.
pub fn forward_coefficients<T: Real>(grid: &GridSpec<T>, samples: &[Complex<T>]) -> Vec<Complex<T>> {
    let mut buf = samples.to_vec();
    plan::<T>(buf.len(), false).process(&mut buf);
    let w = grid.step();
    buf.iter_mut().for_each(|c| *c = *c * w);
    buf
}

/// Samples `(1/L)·IDFT(c)` from coefficients in FFT bin order.
pub fn inverse_coefficients<T: Real>(grid: &GridSpec<T>, spectrum: &[Complex<T>]) -> Vec<Complex<T>> {
    let mut buf = spectrum.to_vec();
    plan::<T>(buf.len(), true).process(&mut buf);
    let w = grid.period().recip();
    buf.iter_mut().for_each(|c| *c = *c * w);
    buf
}

/// Complex samples of a periodic function with a lazily cached spectrum.
#[derive(Debug, Clone)]
pub struct SampledFunction<T: Real> {
    grid: GridSpec<T>,
    samples: Vec<Complex<T>>,
    spectrum: OnceLock<Vec<Complex<T>>>,
}

impl<T: Real> SampledFunction<T> {
    /// Wraps samples taken at the grid positions.
    pub fn new(grid: GridSpec<T>, samples: Vec<Complex<T>>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::Parameter(format!(
                "expected {} samples, got {}",
                grid.len(),
                samples.len()
            )));
        }
        Ok(Self { grid, samples, spectrum: OnceLock::new() })
    }

    /// Samples `f` at every grid position.
    pub fn from_fn<F: Fn(T) -> Complex<T>>(grid: GridSpec<T>, f: F) -> Self {
        let samples = grid.positions().into_iter().map(f).collect();
        Self { grid, samples, spectrum: OnceLock::new() }
    }

    /// Identically zero function.
    pub fn zeros(grid: GridSpec<T>) -> Self {
        let samples = vec![Complex::new(T::zero(), T::zero()); grid.len()];
        let spectrum = OnceLock::new();
        let _ = spectrum.set(samples.clone());
        Self { grid, samples, spectrum }
    }

    /// Builds the function from coefficients in FFT bin order; the given
    /// spectrum is cached verbatim, so exact zeros stay exact.
    pub fn from_spectrum(grid: GridSpec<T>, spectrum: Vec<Complex<T>>) -> Result<Self> {
        if spectrum.len() != grid.len() {
            return Err(Error::Parameter(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                spectrum.len()
            )));
        }
        let samples = inverse_coefficients(&grid, &spectrum);
        let cache = OnceLock::new();
        let _ = cache.set(spectrum);
        Ok(Self { grid, samples, spectrum: cache })
    }

    /// Builds the function from `(signed index, coefficient)` pairs.
    pub fn from_modes(grid: GridSpec<T>, modes: &[(i64, Complex<T>)]) -> Result<Self> {
        let mut spec = vec![Complex::new(T::zero(), T::zero()); grid.len()];
        for &(k, c) in modes {
            spec[grid.bin(k)] = spec[grid.bin(k)] + c;
        }
        Self::from_spectrum(grid, spec)
    }

    /// Underlying grid.
    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    /// Sample values.
    pub fn samples(&self) -> &[Complex<T>] {
        &self.samples
    }

    /// Fourier coefficients in FFT bin order; computed once and cached.
    pub fn spectrum(&self) -> &[Complex<T>] {
        self.spectrum
            .get_or_init(|| forward_coefficients(&self.grid, &self.samples))
    }

    /// Coefficient at signed index `k`.
    pub fn coefficient(&self, k: i64) -> Complex<T> {
        self.spectrum()[self.grid.bin(k)]
    }

    /// Discrete `L^p` norm `((L/N) Σ |f|^p)^{1/p}`; `p = ∞` gives the max.
    pub fn lp_norm(&self, p: T) -> T {
        lp_norm_of(&self.grid, self.samples.iter().map(|c| c.norm()), p)
    }

    /// Pointwise product with another function on the same grid.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let s = self.samples.iter().zip(&other.samples).map(|(a, b)| a * b).collect();
        Self::new(self.grid, s)
    }

    /// Pointwise sum with another function on the same grid.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let s = self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect();
        Self::new(self.grid, s)
    }

    /// Multiplication by a complex constant.
    pub fn scale(&self, a: Complex<T>) -> Self {
        let s = self.samples.iter().map(|c| c * a).collect();
        Self { grid: self.grid, samples: s, spectrum: OnceLock::new() }
    }

    /// Modulation `e^{iξ_k x} f(x)` by a grid frequency.
    pub fn modulate(&self, k: i64) -> Self {
        let h = self.grid.freq(k);
        let s = self
            .grid
            .positions()
            .into_iter()
            .zip(&self.samples)
            .map(|(x, c)| c * Complex::from_polar(T::one(), h * x))
            .collect();
        Self { grid: self.grid, samples: s, spectrum: OnceLock::new() }
    }

    /// Complex conjugate.
    pub fn conj(&self) -> Self {
        let s = self.samples.iter().map(|c| c.conj()).collect();
        Self { grid: self.grid, samples: s, spectrum: OnceLock::new() }
    }

    /// Pointwise modulus as a real-valued function.
    pub fn abs(&self) -> Self {
        let s = self.samples.iter().map(|c| Complex::new(c.norm(), T::zero())).collect();
        Self { grid: self.grid, samples: s, spectrum: OnceLock::new() }
    }

    /// Grid quadrature of `f·g`, namely `(L/N) Σ f(x_j) g(x_j)`.
    pub fn integrate_product(&self, other: &Self) -> Result<Complex<T>> {
        self.grid.check_same(&other.grid)?;
        let s: Complex<T> = self.samples.iter().zip(&other.samples).map(|(a, b)| a * b).sum();
        Ok(s * self.grid.step())
    }

    /// Writes `x,re,im` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x", "re", "im"])?;
        for (j, c) in self.samples.iter().enumerate() {
            wr.write_record([
                format!("{:e}", self.grid.x(j).as_f64()),
                format!("{:e}", c.re.as_f64()),
                format!("{:e}", c.im.as_f64()),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads `x,re,im` rows produced by [`SampledFunction::write_csv`].
    pub fn read_csv<R: Read>(grid: GridSpec<T>, r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut samples = Vec::with_capacity(grid.len());
        for rec in rd.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<T> {
                let s = rec.get(i).ok_or_else(|| Error::Io(format!("missing column {i}")))?;
                let v: f64 = s.trim().parse().map_err(|e| Error::Io(format!("{s}: {e}")))?;
                Ok(T::lit(v))
            };
            samples.push(Complex::new(parse(1)?, parse(2)?));
        }
        Self::new(grid, samples)
    }
}

/// `L^p` norm of nonnegative sample magnitudes on `grid`.
pub fn lp_norm_of<T: Real, I: Iterator<Item = T>>(grid: &GridSpec<T>, mags: I, p: T) -> T {
    if p.is_infinite() {
        return mags.fold(T::zero(), |m, v| m.max(v));
    }
    let s: T = mags.map(|v| v.powf(p)).sum();
    (s * grid.step()).powf(p.recip())
}

/// Convenience: coefficients of `f`.
pub fn forward_transform<T: Real>(f: &SampledFunction<T>) -> &[Complex<T>] {
    f.spectrum()
}

/// Hölder exponent triple `1/r = 1/p + 1/q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentTriple<T> {
    /// Exponent of the first input, in `(1, ∞]`.
    pub p: T,
    /// Exponent of the second input, in `(1, ∞]`.
    pub q: T,
    /// Exponent of the output, in `(0, ∞)`.
    pub r: T,
}

impl<T: Real> ExponentTriple<T> {
    /// Builds the triple with `r` determined by Hölder's relation.
    pub fn from_pq(p: T, q: T) -> Result<Self> {
        let inv = p.recip() + q.recip();
        Self::new(p, q, inv.recip())
    }

    /// Validates ranges and the relation `1/r = 1/p + 1/q` to `1e-12`.
    pub fn new(p: T, q: T, r: T) -> Result<Self> {
        if !(p > T::one()) || !(q > T::one()) {
            return Err(Error::Exponent(format!("p, q must exceed 1, got ({p}, {q})")));
        }
        if !(r > T::zero()) || !r.is_finite() {
            return Err(Error::Exponent(format!("r must be positive and finite, got {r}")));
        }
        let gap = (r.recip() - p.recip() - q.recip()).abs();
        if gap > T::lit(1e-12) {
            return Err(Error::Exponent(format!("1/r != 1/p + 1/q for ({p}, {q}, {r})")));
        }
        Ok(Self { p, q, r })
    }

    /// True in the local-`L²` range `p, q ≥ 2`, `1 ≤ r ≤ 2`.
    pub fn local_l2(&self) -> bool {
        let two = T::lit(2.0);
        self.p >= two && self.q >= two && self.r >= T::one() && self.r <= two
    }
}

/// Seeded test-function families.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFamily<T> {
    /// Periodized `e^{-(x-a)²/2σ²} e^{ibx}`.
    GaussianPacket {
        /// Spatial center `a`.
        center: T,
        /// Width `σ`.
        width: T,
        /// Modulation frequency `b`.
        freq: T,
    },
    /// `Σ c_k e^{iξ_k x}` with i.i.d. standard complex Gaussian `c_k` for
    /// `ξ_k` in the closed band `[lo, hi]`.
    RandomBandlimited {
        /// Lower band edge.
        lo: T,
        /// Upper band edge.
        hi: T,
    },
    /// Random unimodular values on the mask, zero elsewhere.
    IndicatorSigned {
        /// Membership of each grid point in the set `E`.
        mask: Vec<bool>,
    },
}

/// Draws a member of `family` on `grid`, deterministically in `seed`.
pub fn synthesize<T: Real>(grid: GridSpec<T>, family: &TestFamily<T>, seed: u64) -> Result<SampledFunction<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match family {
        TestFamily::GaussianPacket { center, width, freq } => {
            if !(*width > T::zero()) {
                return Err(Error::Parameter(format!("width must be positive, got {width}")));
            }
            let l = grid.period();
            let images = (T::lit(12.0) * *width / l).ceil().to_i64().unwrap_or(0) + 1;
            let two = T::lit(2.0);
            Ok(SampledFunction::from_fn(grid, |x| {
                let mut acc = Complex::new(T::zero(), T::zero());
                for m in -images..=images {
                    let y = x + T::int(m) * l;
                    let d = (y - *center) / *width;
                    acc = acc + Complex::from_polar((-(d * d) / two).exp(), *freq * y);
                }
                acc
            }))
        }
        TestFamily::RandomBandlimited { lo, hi } => {
            let nyq = grid.nyquist();
            if *lo < -nyq || *hi > nyq {
                return Err(Error::Band(format!("band [{lo}, {hi}] exceeds Nyquist ±{nyq}")));
            }
            if lo > hi {
                return Err(Error::Parameter(format!("empty band [{lo}, {hi}]")));
            }
            let half = T::lit(0.5).sqrt();
            let mut spec = vec![Complex::new(T::zero(), T::zero()); grid.len()];
            for k in grid.indices_in(*lo, *hi) {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                spec[grid.bin(k)] = Complex::new(T::lit(a), T::lit(b)) * half * grid.period();
            }
            SampledFunction::from_spectrum(grid, spec)
        }
        TestFamily::IndicatorSigned { mask } => {
            if mask.len() != grid.len() {
                return Err(Error::Parameter(format!(
                    "mask has {} entries, grid has {}",
                    mask.len(),
                    grid.len()
                )));
            }
            let samples = mask
                .iter()
                .map(|&m| {
                    let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                    if m {
                        Complex::from_polar(T::one(), T::lit(phase))
                    } else {
                        Complex::new(T::zero(), T::zero())
                    }
                })
                .collect();
            SampledFunction::new(grid, samples)
        }
    }
}
