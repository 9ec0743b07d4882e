//! Symbols with Sobolev regularity along one frequency direction: their
//! directional norm, the decomposition into unit translates grouped in
//! dyadic buckets, bucketed evaluation, adjoint symbols and the translated
//! family square function.
//!
//! Everything here runs in double precision.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{ExponentTriple, SampledFunction};
use crate::intervals::Interval;
use crate::multiplier::{apply_bilinear, Evaluator, Smoothness, Support, SymbolDescriptor};
use crate::numeric::{fit_decay_exponent, mollifier, panel_quadrature, smooth_step};
use crate::squarefn::l2_aggregate;
use crate::C64;

type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Symbol with a direction `θ`, a Sobolev exponent `s` and a truncation
/// window for every frequency integral.
#[derive(Debug, Clone)]
pub struct DirectionalSymbol {
    /// General or x-dependent symbol (diagonal symbols are converted).
    pub base: SymbolDescriptor<f64>,
    /// Unit vector `θ`.
    pub theta: (f64, f64),
    /// Sobolev exponent `s ∈ (1, 2]`.
    pub sobolev_s: f64,
    /// Radius `R`: `λ` and the transverse coordinate `t` range over `[-R, R]`.
    pub window: f64,
    /// Positions used for the supremum over `x`.
    pub x_samples: Vec<f64>,
    /// Step of the central differences along `θ`.
    pub fd_step: f64,
    /// Points of the transverse mesh used for the supremum over `t`.
    pub t_points: usize,
    /// Directional norm measured at construction.
    pub class_norm: f64,
}

/// Default truncation radius.
pub const DEFAULT_WINDOW: f64 = 12.0;

impl DirectionalSymbol {
    /// Wraps `base` with direction angle `angle` (radians) and exponent `s`,
    /// then measures the class norm with `x`-derivatives up to order one.
    pub fn new(base: SymbolDescriptor<f64>, angle: f64, s: f64, window: f64) -> Result<Self> {
        if !(s > 1.0 && s <= 2.0) {
            return Err(Error::Parameter(format!("Sobolev exponent {s} outside (1, 2]")));
        }
        if !(window > 0.0 && window.is_finite()) {
            return Err(Error::Parameter(format!("window {window} must be positive")));
        }
        let base = match base.evaluator {
            Evaluator::Diagonal(_) => base.to_general()?,
            Evaluator::General(_) | Evaluator::XDependent(_) => base,
            Evaluator::Linear(_) => return Err(Error::Parameter("directional symbols are bilinear".into())),
        };
        let mut ds = Self {
            base,
            theta: (angle.cos(), angle.sin()),
            sobolev_s: s,
            window,
            x_samples: (0..16).map(|i| 0.5 * i as f64).collect(),
            fd_step: crate::Grid::default().freq_step() / 4.0,
            t_points: 129,
            class_norm: 0.0,
        };
        ds.class_norm = directional_norm(&ds, 1)?.value;
        Ok(ds)
    }

    /// Ridge symbol `σ(ξ, η) = m(⟨(ξ, η), θ⟩)`.
    pub fn ridge<F: Fn(f64) -> f64 + Send + Sync + 'static>(profile: F, angle: f64, s: f64, window: f64) -> Result<Self> {
        let (c, sn) = (angle.cos(), angle.sin());
        let base = SymbolDescriptor::general(move |xi, eta| C64::new(profile(c * xi + sn * eta), 0.0))
            .with_smoothness(Smoothness::Smooth);
        Self::new(base, angle, s, window)
    }

    /// True when the symbol ignores `x`.
    pub fn x_independent(&self) -> bool {
        !matches!(self.base.evaluator, Evaluator::XDependent(_))
    }

    /// `θ^⊥ = (-θ_2, θ_1)`.
    pub fn theta_perp(&self) -> (f64, f64) {
        (-self.theta.1, self.theta.0)
    }

    /// Symbol value at `x` and frequency coordinates `(λ, t)`.
    pub fn eval_lt(&self, x: f64, lambda: f64, t: f64) -> C64 {
        let (c, s) = self.theta;
        self.base.eval(x, lambda * c - t * s, lambda * s + t * c)
    }

    fn transverse_mesh(&self) -> Vec<f64> {
        let n = self.t_points.max(3) | 1;
        let h = 2.0 * self.window / (n - 1) as f64;
        (0..n).map(|i| -self.window + h * i as f64).collect()
    }

    /// `sup_t (|∂_x^a σ| + |∂_x^a ∂_θ σ|)` at `(x, λ)` over the transverse mesh.
    fn envelope(&self, a: usize, x: f64, lambda: f64, ts: &[f64]) -> f64 {
        let h = self.fd_step;
        let hx = 1e-2;
        let value = |x: f64, l: f64, t: f64| self.eval_lt(x, l, t);
        let dx = |l: f64, t: f64| -> C64 {
            match a {
                0 => value(x, l, t),
                1 => fd6(|u| value(u, l, t), x, hx),
                _ => fd6(|u| fd6(|v| value(v, l, t), u, hx), x, hx),
            }
        };
        ts.iter()
            .map(|&t| dx(lambda, t).norm() + fd6(|l| dx(l, t), lambda, h).norm())
            .fold(0.0, f64::max)
    }
}

/// Sixth-order central difference.
fn fd6<F: Fn(f64) -> C64>(f: F, x: f64, h: f64) -> C64 {
    (f(x + 3.0 * h) - f(x - 3.0 * h) - 9.0 * (f(x + 2.0 * h) - f(x - 2.0 * h)) + 45.0 * (f(x + h) - f(x - h)))
        / (60.0 * h)
}

/// Measured directional norm and its truncation data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionalNorm {
    /// `max_a sup_x ‖sup_t (|∂_x^a σ| + |∂_x^a ∂_θ σ|)‖_{L^s([-R, R])}`.
    pub value: f64,
    /// Truncation radius `R`.
    pub window: f64,
    /// Envelope at the window edges relative to its maximum.
    pub edge_ratio: f64,
    /// Set when the edge ratio exceeds `1e-6`: the integrand has not decayed
    /// inside the window and the value grows with it.
    pub truncated: bool,
}

/// Quadrature tolerance of the directional integrals.
const QUAD_TOL: f64 = 1e-11;

/// Directional Sobolev norm with `x`-derivative orders `a ≤ max_x_order`
/// (at most 2); for x-independent symbols only `a = 0` contributes.
pub fn directional_norm(ds: &DirectionalSymbol, max_x_order: usize) -> Result<DirectionalNorm> {
    if max_x_order > 2 {
        return Err(Error::Parameter(format!("x-derivative order {max_x_order} above 2")));
    }
    let ts = ds.transverse_mesh();
    let orders = if ds.x_independent() { 0 } else { max_x_order };
    let xs: Vec<f64> = if ds.x_independent() { vec![0.0] } else { ds.x_samples.clone() };
    let r = ds.window;
    let s = ds.sobolev_s;
    let mut value = 0.0f64;
    let mut edge = 0.0f64;
    let mut peak = 0.0f64;
    for a in 0..=orders {
        for &x in &xs {
            let f = |l: f64| ds.envelope(a, x, l, &ts).powf(s);
            let v = panel_quadrature(&f, -r, r, 0.5, QUAD_TOL)?.max(0.0).powf(1.0 / s);
            value = value.max(v);
            edge = edge.max(ds.envelope(a, x, -r, &ts)).max(ds.envelope(a, x, r, &ts));
            peak = peak.max((0..=64).map(|i| ds.envelope(a, x, -r + 2.0 * r * i as f64 / 64.0, &ts)).fold(0.0, f64::max));
        }
    }
    let edge_ratio = if peak > 0.0 { edge / peak } else { 0.0 };
    Ok(DirectionalNorm { value, window: r, edge_ratio, truncated: edge_ratio > 1e-6 })
}

/// Partition of unity `Σ_p χ(λ - p) = 1` with `χ` supported in `[-1, 1]`,
/// equal to one on `[-a, a]` and ramping on `a ≤ |t| ≤ 1 - a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionBump {
    /// Half-width `a ∈ [0, 1/2)` of the plateau.
    pub plateau: f64,
}

impl Default for PartitionBump {
    fn default() -> Self {
        Self { plateau: 0.0 }
    }
}

impl PartitionBump {
    /// Checks `0 ≤ a < 1/2`.
    pub fn new(plateau: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&plateau) {
            return Err(Error::Parameter(format!("plateau half-width {plateau} outside [0, 1/2)")));
        }
        Ok(Self { plateau })
    }

    /// Unnormalized `χ(t)`.
    pub fn raw(&self, t: f64) -> f64 {
        let a = self.plateau;
        let w = 1.0 - 2.0 * a;
        let u = t.abs();
        if u <= a {
            1.0
        } else if u >= 1.0 - a {
            0.0
        } else {
            1.0 - smooth_step((u - a) / w)
        }
    }

    /// `χ(λ - p)` divided by the telescoped sum at `λ`.
    pub fn piece(&self, p: i64, lambda: f64) -> f64 {
        let q = lambda.floor();
        let num = self.raw(lambda - p as f64);
        if num == 0.0 {
            return 0.0;
        }
        num / (self.raw(lambda - q) + self.raw(lambda - q - 1.0))
    }
}

/// Unit-translate pieces of a directional symbol grouped by weight.
#[derive(Debug, Clone)]
pub struct TranslateDecomposition {
    /// `m_p(ξ, η) = χ(λ - p) σ(ξ, η)`.
    pub pieces: BTreeMap<i64, SymbolDescriptor<f64>>,
    /// Partition used.
    pub partition: PartitionBump,
    /// `D_k`: translates `p` with `2^k ≤ w_p < 2^{k+1}`.
    pub buckets: BTreeMap<i32, Vec<i64>>,
    /// `w_p = ∫_{[p-1, p+1] ∩ [-R, R]} sup_t(|σ| + |∂_θ σ|) dλ`, set to zero
    /// when `χ(λ - p) σ` vanishes.
    pub bucket_weights: BTreeMap<i64, f64>,
    /// `Σ_k 2^{ks} #D_k`.
    pub bucket_sum: f64,
    /// Directional norm of the symbol on the same window.
    pub norm: f64,
    /// `bucket_sum / norm^s`.
    pub ratio: f64,
    /// Truncation radius.
    pub window: f64,
}

/// Dyadic bucket of a positive weight.
pub fn bucket_of(w: f64) -> Option<i32> {
    (w > 0.0 && w.is_finite()).then(|| w.log2().floor() as i32).map(|k| {
        // Guard the floor against rounding at exact powers of two.
        if 2f64.powi(k + 1) <= w {
            k + 1
        } else if 2f64.powi(k) > w {
            k - 1
        } else {
            k
        }
    })
}

/// Decomposes with the default ramp-pair partition.
pub fn unit_decompose(ds: &DirectionalSymbol) -> Result<TranslateDecomposition> {
    unit_decompose_with(ds, PartitionBump::default())
}

/// Decomposes `σ = Σ_p m_p` along `θ` and fills the buckets `D_k`.
pub fn unit_decompose_with(ds: &DirectionalSymbol, partition: PartitionBump) -> Result<TranslateDecomposition> {
    let r = ds.window;
    let ts = ds.transverse_mesh();
    let xs: Vec<f64> = if ds.x_independent() { vec![0.0] } else { ds.x_samples.clone() };
    let pmax = r.ceil() as i64 + 1;
    let weights: Vec<(i64, f64)> = (-pmax..=pmax)
        .into_par_iter()
        .map(|p| -> Result<(i64, f64)> {
            let lo = (p as f64 - 1.0).max(-r);
            let hi = (p as f64 + 1.0).min(r);
            if lo >= hi {
                return Ok((p, 0.0));
            }
            let f = |l: f64| xs.iter().map(|&x| ds.envelope(0, x, l, &ts)).fold(0.0, f64::max);
            let w = panel_quadrature(&f, lo, hi, 0.25, QUAD_TOL)?;
            // Translates whose cutoff misses the symbol carry no piece.
            let a = partition.plateau;
            let (clo, chi) = ((p as f64 - 1.0 + a).max(-r), (p as f64 + 1.0 - a).min(r));
            let g = |l: f64| f(l) * partition.piece(p, l);
            let live = clo < chi && panel_quadrature(&g, clo, chi, 0.25, QUAD_TOL)? > 0.0;
            Ok((p, if live { w } else { 0.0 }))
        })
        .collect::<Result<_>>()?;
    let mut pieces = BTreeMap::new();
    let mut buckets: BTreeMap<i32, Vec<i64>> = BTreeMap::new();
    let mut bucket_weights = BTreeMap::new();
    let (c, s) = ds.theta;
    for (p, w) in weights {
        bucket_weights.insert(p, w);
        let Some(k) = bucket_of(w) else { continue };
        buckets.entry(k).or_default().push(p);
        pieces.insert(p, piece_symbol(&ds.base, (c, s), p, partition));
    }
    let bucket_sum: f64 = buckets.iter().map(|(&k, v)| 2f64.powf(k as f64 * ds.sobolev_s) * v.len() as f64).sum();
    let norm = directional_norm(ds, 0)?.value;
    let ratio = if norm > 0.0 { bucket_sum / norm.powf(ds.sobolev_s) } else { 0.0 };
    Ok(TranslateDecomposition { pieces, partition, buckets, bucket_weights, bucket_sum, norm, ratio, window: r })
}

fn piece_symbol(base: &SymbolDescriptor<f64>, theta: (f64, f64), p: i64, partition: PartitionBump) -> SymbolDescriptor<f64> {
    let (c, s) = theta;
    let support = Support::Strip {
        normal: theta,
        interval: Interval::from_endpoints(p as f64 - 1.0, p as f64 + 1.0).expect("unit window"),
    };
    let out = match &base.evaluator {
        Evaluator::XDependent(f) => {
            let f = f.clone();
            SymbolDescriptor::xdep(move |x, xi, eta| {
                let w = partition.piece(p, c * xi + s * eta);
                if w == 0.0 {
                    C64::new(0.0, 0.0)
                } else {
                    f(x, xi, eta) * w
                }
            })
        }
        _ => {
            let b = base.clone();
            SymbolDescriptor::general(move |xi, eta| {
                let w = partition.piece(p, c * xi + s * eta);
                if w == 0.0 {
                    C64::new(0.0, 0.0)
                } else {
                    b.eval(0.0, xi, eta) * w
                }
            })
        }
    };
    out.with_support(support).with_smoothness(base.smoothness)
}

/// `Σ_p m_p` at one point, for reconstruction audits.
pub fn reconstruct(dec: &TranslateDecomposition, x: f64, xi: f64, eta: f64) -> C64 {
    dec.pieces.values().map(|m| m.eval(x, xi, eta)).sum()
}

/// One bucket's contribution to the assembled bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketTerm {
    /// Bucket index `k`.
    pub k: i32,
    /// `#D_k`.
    pub count: usize,
    /// `‖(Σ_{p ∈ D_k} |T_{m_p}(f, g)|²)^{1/2}‖_r`.
    pub square_norm: f64,
    /// `square_norm / (‖f‖_p ‖g‖_q)`, when the denominator is nonzero.
    pub ratio: Option<f64>,
    /// `(#D_k)^{1/2} · square_norm`.
    pub term: f64,
}

/// Report of [`evaluate_via_buckets`].
#[derive(Debug, Clone, PartialEq)]
pub struct BucketReport {
    /// Per-bucket terms in increasing `k`.
    pub terms: Vec<BucketTerm>,
    /// `Σ_k (#D_k)^{1/2} ‖(Σ_{p ∈ D_k} |T_{m_p}|²)^{1/2}‖_r ≥ ‖T_σ(f, g)‖_r`.
    pub assembled: f64,
    /// `‖T_σ(f, g)‖_r` of the assembled output.
    pub output_norm: f64,
    /// `(Σ_{k : 2^k ≤ 1} 2^{k(2-s)})^{1/2}` over the populated buckets.
    pub series: f64,
    /// Set when `s ≥ 2`, where the series is not summable in general.
    pub warning: Option<String>,
    /// Direction the decomposition ran along, after any adjoint routing.
    pub direction: (f64, f64),
    /// Set when the symbol was routed through its first adjoint.
    pub routed: bool,
}

/// True at the excluded directions `√2 θ = ±(1, -1)`.
pub fn degenerate_direction(theta: (f64, f64)) -> bool {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let d1 = (theta.0 - h).hypot(theta.1 + h);
    let d2 = (theta.0 + h).hypot(theta.1 - h);
    d1.min(d2) < 1e-12
}

/// `T_σ(f, g) = Σ_k Σ_{p ∈ D_k} T_{m_p}(f, g)` with the bucket report.
///
/// The window is widened to cover every frequency the grid can reach. At a
/// degenerate direction the first adjoint is decomposed along its
/// transported direction and each piece is mapped back by the same
/// involution.
pub fn evaluate_via_buckets(
    f: &SampledFunction<f64>,
    g: &SampledFunction<f64>,
    ds: &DirectionalSymbol,
    e: &ExponentTriple<f64>,
) -> Result<(SampledFunction<f64>, BucketReport)> {
    f.grid().check_same(g.grid())?;
    let nyq = f.grid().nyquist();
    let routed = degenerate_direction(ds.theta);
    let mut work = if routed { adjoint_directional(ds, 1)? } else { ds.clone() };
    let reach = nyq * (work.theta.0.abs() + work.theta.1.abs()) + 1.0;
    if work.window < reach {
        work.window = reach;
    }
    let dec = unit_decompose(&work)?;
    let mut pieces: BTreeMap<i64, SymbolDescriptor<f64>> = dec.pieces.clone();
    if routed {
        for m in pieces.values_mut() {
            *m = adjoint_symbol(m, 1)?.0;
        }
    }
    let denom = f.lp_norm(e.p) * g.lp_norm(e.q);
    let mut acc = SampledFunction::zeros(*f.grid());
    let mut terms = Vec::new();
    for (&k, ps) in &dec.buckets {
        let outs: Vec<SampledFunction<f64>> =
            ps.iter().map(|p| apply_bilinear(f, g, &pieces[p])).collect::<Result<_>>()?;
        for o in &outs {
            acc = acc.add(o)?;
        }
        let square_norm = l2_aggregate(&outs, f)?.lp_norm(e.r);
        terms.push(BucketTerm {
            k,
            count: ps.len(),
            square_norm,
            ratio: (denom > 0.0).then(|| square_norm / denom),
            term: (ps.len() as f64).sqrt() * square_norm,
        });
    }
    let s = work.sobolev_s;
    let series = dec
        .buckets
        .keys()
        .filter(|&&k| k <= 0)
        .map(|&k| 2f64.powf(k as f64 * (2.0 - s)))
        .sum::<f64>()
        .sqrt();
    let warning = (s >= 2.0).then(|| format!("s = {s}: the bucket series is not summable in the bound"));
    let report = BucketReport {
        assembled: terms.iter().map(|t| t.term).sum(),
        output_norm: acc.lp_norm(e.r),
        terms,
        series,
        warning,
        direction: work.theta,
        routed,
    };
    Ok((acc, report))
}

/// Direction maps attached to an adjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AngleMap {
    /// Which adjoint, 1 or 2.
    pub which: usize,
}

fn normalize(v: (f64, f64)) -> (f64, f64) {
    let n = v.0.hypot(v.1);
    (v.0 / n, v.1 / n)
}

impl AngleMap {
    /// Direction `θ^{*which}` obeying `cot θ + cot θ^{*1} = -1`, respectively
    /// `tan θ + tan θ^{*2} = -1`: the image of `θ` under the frequency
    /// involution of the adjoint.
    pub fn line(&self, theta: (f64, f64)) -> (f64, f64) {
        let (x, y) = theta;
        match self.which {
            1 => normalize((-x - y, y)),
            _ => normalize((x, -x - y)),
        }
    }

    /// Direction along which the adjoint of a ridge symbol in direction `θ`
    /// varies: the image of `θ` under the transposed involution.
    pub fn regularity(&self, theta: (f64, f64)) -> (f64, f64) {
        let (c, s) = theta;
        match self.which {
            1 => normalize((-c, s - c)),
            _ => normalize((c - s, -s)),
        }
    }

    /// Residual of the defining relation, cross-multiplied so that it stays
    /// finite at vertical and horizontal directions.
    pub fn relation_residual(&self, theta: (f64, f64), star: (f64, f64)) -> f64 {
        let ((c, s), (cs, ss)) = (theta, star);
        match self.which {
            1 => c * ss + cs * s + s * ss,
            _ => s * cs + ss * c + c * cs,
        }
    }
}

/// Adjoint symbols `m_1^*(ξ, η) = conj m(-ξ-η, η)` and
/// `m_2^*(ξ, η) = conj m(ξ, -η-ξ)` of an x-independent symbol.
pub fn adjoint_symbol(m: &SymbolDescriptor<f64>, which: usize) -> Result<(SymbolDescriptor<f64>, AngleMap)> {
    if which != 1 && which != 2 {
        return Err(Error::Parameter(format!("adjoint index {which} must be 1 or 2")));
    }
    let g = m.to_general()?;
    let out = if which == 1 {
        SymbolDescriptor::general(move |xi: f64, eta: f64| g.eval(0.0, -xi - eta, eta).conj())
    } else {
        SymbolDescriptor::general(move |xi: f64, eta: f64| g.eval(0.0, xi, -eta - xi).conj())
    };
    Ok((out.with_smoothness(m.smoothness), AngleMap { which }))
}

/// Adjoint of a directional symbol, carried to the transported direction.
pub fn adjoint_directional(ds: &DirectionalSymbol, which: usize) -> Result<DirectionalSymbol> {
    let (base, map) = adjoint_symbol(&ds.base, which)?;
    let dir = map.regularity(ds.theta);
    let mut out = DirectionalSymbol::new(base, dir.1.atan2(dir.0), ds.sobolev_s, ds.window)?;
    out.x_samples = ds.x_samples.clone();
    out.fd_step = ds.fd_step;
    out.t_points = ds.t_points;
    Ok(out)
}

/// Gaussian ridge `e^{-(λ/width)²}` in direction `angle`.
pub fn gaussian_ridge(angle: f64, width: f64, s: f64) -> Result<DirectionalSymbol> {
    if !(width > 0.0) {
        return Err(Error::Parameter(format!("width {width} must be positive")));
    }
    DirectionalSymbol::ridge(move |l| (-(l / width).powi(2)).exp(), angle, s, DEFAULT_WINDOW)
}

/// Compactly supported ridge `ρ((λ - center)/half_width)` with `ρ` the
/// standard mollifier.
pub fn compact_bump_ridge(angle: f64, center: f64, half_width: f64, s: f64) -> Result<DirectionalSymbol> {
    if !(half_width > 0.0) {
        return Err(Error::Parameter(format!("half width {half_width} must be positive")));
    }
    DirectionalSymbol::ridge(move |l| mollifier((l - center) / half_width), angle, s, DEFAULT_WINDOW)
}

/// Random ridge `Σ_j a_j e^{-(λ - c_j)²/(2 w_j²)}` with `count` terms,
/// `|a_j| ∈ [0.2, 1]` with random sign, `c_j ∈ [-6, 6]`, `w_j ∈ [0.3, 1]`.
pub fn random_translate_series(angle: f64, count: usize, s: f64, seed: u64) -> Result<DirectionalSymbol> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<(f64, f64, f64)> = (0..count)
        .map(|_| {
            let a: f64 = rng.gen_range(0.2..1.0);
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            (sign * a, rng.gen_range(-6.0..6.0), rng.gen_range(0.3..1.0))
        })
        .collect();
    DirectionalSymbol::ridge(
        move |l| terms.iter().map(|&(a, c, w)| a * (-(l - c).powi(2) / (2.0 * w * w)).exp()).sum(),
        angle,
        s,
        DEFAULT_WINDOW,
    )
}

/// Report of [`translated_family_bound`].
#[derive(Debug, Clone, PartialEq)]
pub struct TranslatedFamilyReport {
    /// `‖(Σ_n |T_{φ_n}(f, g)|²)^{1/2}‖_r`.
    pub direct: f64,
    /// `Σ_p ‖(Σ_n |T_{φ_{p,n}}(f, g)|²)^{1/2}‖_r`.
    pub assembly: f64,
    /// Per-piece terms `(p, term)`.
    pub terms: Vec<(i64, f64)>,
    /// `(p, ‖φ_p‖_∞)` over the active pieces.
    pub piece_sup: Vec<(i64, f64)>,
    /// Decay exponent of `‖φ_p‖_∞` fitted over `p ∈ [-16, 16]`.
    pub decay_exponent: f64,
    /// Set when the profile does not decay.
    pub warning: Option<String>,
}

/// Square function of the translates `φ_n(δ) = φ(δ - n)`, `n ∈ n_range`, as
/// diagonal symbols, directly and through the unit decomposition of `φ`.
pub fn translated_family_bound<F>(
    phi: F,
    f: &SampledFunction<f64>,
    g: &SampledFunction<f64>,
    e: &ExponentTriple<f64>,
    n_range: std::ops::RangeInclusive<i64>,
    partition: PartitionBump,
) -> Result<TranslatedFamilyReport>
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    f.grid().check_same(g.grid())?;
    if !e.local_l2() {
        return Err(Error::Exponent(format!("({}, {}, {}) outside the local L² range", e.p, e.q, e.r)));
    }
    let phi: Profile = Arc::new(phi);
    let reach = 2.0 * f.grid().nyquist();
    let ns: Vec<i64> = n_range.collect();
    let translate = |prof: Profile, n: i64| {
        SymbolDescriptor::diagonal(move |d| C64::new(prof(d - n as f64), 0.0))
    };
    let family = |prof: &Profile| -> Result<f64> {
        let outs: Vec<SampledFunction<f64>> =
            ns.par_iter().map(|&n| apply_bilinear(f, g, &translate(prof.clone(), n))).collect::<Result<_>>()?;
        Ok(l2_aggregate(&outs, f)?.lp_norm(e.r))
    };
    let direct = family(&phi)?;
    let (nmin, nmax) = (*ns.first().unwrap_or(&0), *ns.last().unwrap_or(&0));
    let plo = (-reach - nmax as f64).floor() as i64 - 1;
    let phi_hi = (reach - nmin as f64).ceil() as i64 + 1;
    let sup_of = |p: i64| -> f64 {
        (0..=2000)
            .map(|i| {
                let l = p as f64 - 1.0 + i as f64 / 1000.0;
                (partition.piece(p, l) * phi(l)).abs()
            })
            .fold(0.0, f64::max)
    };
    let mut terms = Vec::new();
    let mut piece_sup = Vec::new();
    for p in plo..=phi_hi {
        let sup = sup_of(p);
        if sup == 0.0 {
            continue;
        }
        piece_sup.push((p, sup));
        let base = phi.clone();
        let piece: Profile = Arc::new(move |l| partition.piece(p, l) * base(l));
        terms.push((p, family(&piece)?));
    }
    let (us, vs): (Vec<f64>, Vec<f64>) = (-16..=16i64).map(|p| (p.unsigned_abs() as f64, sup_of(p))).unzip();
    let decay_exponent = fit_decay_exponent(&us, &vs, f64::MIN_POSITIVE);
    let warning = (decay_exponent < 2.0).then(|| format!("φ_p decays like |p|^-{decay_exponent:.2} only"));
    Ok(TranslatedFamilyReport {
        direct,
        assembly: terms.iter().map(|t| t.1).sum(),
        terms,
        piece_sup,
        decay_exponent,
        warning,
    })
}
