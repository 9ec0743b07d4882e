//! Sizes, energies, the greedy decrement algorithms, the model sum and the
//! level-by-level bound on it.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::grid::SampledFunction;
use crate::timefreq::packets::PacketBank;
use crate::timefreq::tiles::{TileCollection, TileKey};
use crate::timefreq::vectorized::{pair_strongly_disjoint, strongly_disjoint, Groups, VecMode, VectorizedSet};
use crate::C64;

/// Lowest and highest level `k` scanned by the energy.
pub const K_RANGE: (i32, i32) = (-40, 40);

/// Largest candidate count accepted by the exhaustive energy.
pub const EXHAUSTIVE_LIMIT: usize = 12;

/// Relative slack used when comparing a measured size to a threshold.
const SLACK: f64 = 1e-12;

fn check_pair(j: usize, l: usize) -> Result<()> {
    if !matches!((j, l), (1, 2) | (2, 1)) {
        return Err(Error::Parameter(format!("(j, l) = ({j}, {l}) must be (1, 2) or (2, 1)")));
    }
    Ok(())
}

fn all(tc: &TileCollection) -> Vec<usize> {
    (0..tc.len()).collect()
}

/// `⟨f, Φ_{s_j}⟩` for every tri-tile `s`.
pub fn component_coefficients(
    f: &SampledFunction<f64>,
    tc: &TileCollection,
    bank: &PacketBank,
    j: usize,
) -> Result<Vec<C64>> {
    if !(1..=3).contains(&j) {
        return Err(Error::Parameter(format!("component {j} not in 1..=3")));
    }
    tc.tritiles().iter().map(|s| bank.coefficient(f, &s.component(j))).collect()
}

/// `⟨h_{n(s)}, Φ_{s_3}⟩` for every tri-tile `s` of strip `n(s)`.
pub fn sequence_coefficients(
    h: &[SampledFunction<f64>],
    tc: &TileCollection,
    bank: &PacketBank,
) -> Result<Vec<C64>> {
    if h.len() != tc.strips().len() {
        return Err(Error::Shape(format!("{} functions for {} strips", h.len(), tc.strips().len())));
    }
    tc.tritiles().iter().map(|s| bank.coefficient(&h[s.strip], &s.component(3))).collect()
}

/// Value of a size with the tri-tile attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeReport {
    /// The size.
    pub value: f64,
    /// Lowest-index tri-tile attaining the supremum.
    pub argmax: Option<usize>,
}

fn mass(coeffs: &[C64], members: &[usize]) -> f64 {
    members.iter().map(|&i| coeffs[i].norm_sqr()).sum()
}

/// `sup_s |I_s|^{-1/2} (Σ_{s' ∈ set(s)} |a_{s'}|²)^{1/2}` over `active`,
/// where `set(s)` is the vectorized set of `mode` within `active`.
pub fn size_from(tc: &TileCollection, active: &[usize], coeffs: &[C64], mode: VecMode) -> SizeReport {
    let g = Groups::new(tc, active);
    let key_of = |s: usize| match mode {
        VecMode::Single(l) => g.key(s, l),
        VecMode::Closure(j, _) => g.key(s, j),
    };
    let mut cache: BTreeMap<TileKey, f64> = BTreeMap::new();
    let mut best = SizeReport { value: 0.0, argmax: None };
    for &s in active {
        let m = *cache.entry(key_of(s)).or_insert_with(|| mass(coeffs, &g.members(s, mode)));
        let v = (m / tc.tritiles()[s].space.length()).sqrt();
        if best.argmax.is_none() || v > best.value {
            best = SizeReport { value: v, argmax: Some(s) };
        }
    }
    best
}

/// `size^l_j(f)` over the whole collection.
pub fn size_vec(f: &SampledFunction<f64>, tc: &TileCollection, bank: &PacketBank, j: usize, l: usize) -> Result<SizeReport> {
    check_pair(j, l)?;
    let c = component_coefficients(f, tc, bank, j)?;
    Ok(size_from(tc, &all(tc), &c, VecMode::Single(l)))
}

/// `size^{jl}_3(h)` over the whole collection, squared-modulus convention.
pub fn size_seq(
    h: &[SampledFunction<f64>],
    tc: &TileCollection,
    bank: &PacketBank,
    j: usize,
    l: usize,
) -> Result<SizeReport> {
    check_pair(j, l)?;
    let c = sequence_coefficients(h, tc, bank)?;
    Ok(size_from(tc, &all(tc), &c, VecMode::Closure(j, l)))
}

/// How the energy maximizes over disjoint families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyMode {
    /// Greedy family per level.
    Greedy,
    /// Enumeration of every family; at most [`EXHAUSTIVE_LIMIT`] candidates.
    Exhaustive,
}

/// Energy with its certifying level and family.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    /// The energy.
    pub value: f64,
    /// Level `k` of the certificate.
    pub k: Option<i32>,
    /// Strongly disjoint family of vectorized sets attaining the value.
    pub certificate: Vec<VectorizedSet>,
}

struct Candidate {
    set: VectorizedSet,
    length: f64,
    mass: f64,
    key: TileKey,
    levels: Vec<i32>,
}

/// Levels `k` in the scanned range with `4^k|I| ≤ mass ≤ 4^{k+1}|I|`.
pub fn admissible_levels(mass: f64, length: f64) -> Vec<i32> {
    if !(mass > 0.0) {
        return Vec::new();
    }
    let k0 = ((mass / length).log2() / 2.0).floor() as i32;
    (k0 - 1..=k0 + 1)
        .filter(|&k| (K_RANGE.0..=K_RANGE.1).contains(&k))
        .filter(|&k| {
            let q = 4f64.powi(k) * length;
            q <= mass && mass <= 4.0 * q
        })
        .collect()
}

fn candidates(tc: &TileCollection, active: &[usize], coeffs: &[C64], l: usize) -> Vec<Candidate> {
    let g = Groups::new(tc, active);
    g.classes(l)
        .filter_map(|(key, members)| {
            let m = mass(coeffs, members);
            let base = members[0];
            let length = tc.tritiles()[base].space.length();
            let levels = admissible_levels(m, length);
            (!levels.is_empty()).then(|| Candidate {
                set: VectorizedSet { base, mode: VecMode::Single(l), members: members.clone() },
                length,
                mass: m,
                key: *key,
                levels,
            })
        })
        .collect()
}

/// `sup_k sup_D 2^k (Σ_{s ∈ D} |I_s|)^{1/2}` over strongly `j`-disjoint
/// families `D` of `l`-vectorized sets inside `active` whose mass
/// `Σ |a_{s'}|²` lies in `[4^k|I_s|, 4^{k+1}|I_s|]`.
pub fn energy_from(
    tc: &TileCollection,
    active: &[usize],
    coeffs: &[C64],
    j: usize,
    l: usize,
    mode: EnergyMode,
) -> Result<EnergyReport> {
    check_pair(j, l)?;
    let cands = candidates(tc, active, coeffs, l);
    let n = cands.len();
    if mode == EnergyMode::Exhaustive && n > EXHAUSTIVE_LIMIT {
        return Err(Error::Size(format!("{n} candidate sets exceed the exhaustive limit {EXHAUSTIVE_LIMIT}")));
    }
    let mut compat = vec![vec![true; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            let ok = pair_strongly_disjoint(tc, &cands[a].set, &cands[b].set, j);
            compat[a][b] = ok;
            compat[b][a] = ok;
        }
    }
    let levels: BTreeSet<i32> = cands.iter().flat_map(|c| c.levels.iter().copied()).collect();
    let mut best = EnergyReport { value: 0.0, k: None, certificate: Vec::new() };
    for &k in &levels {
        let adm: Vec<usize> = (0..n).filter(|&c| cands[c].levels.contains(&k)).collect();
        let chosen = match mode {
            EnergyMode::Greedy => {
                let mut order = adm.clone();
                order.sort_by(|&a, &b| {
                    let (x, y) = (&cands[a], &cands[b]);
                    y.length
                        .partial_cmp(&x.length)
                        .expect("finite")
                        .then(y.mass.partial_cmp(&x.mass).expect("finite"))
                        .then(x.key.cmp(&y.key))
                });
                let mut picked: Vec<usize> = Vec::new();
                for c in order {
                    if picked.iter().all(|&p| compat[p][c]) {
                        picked.push(c);
                    }
                }
                picked
            }
            EnergyMode::Exhaustive => {
                let mut best_set: Vec<usize> = Vec::new();
                let mut best_len = 0.0;
                for mask in 1u32..(1u32 << adm.len()) {
                    let set: Vec<usize> = (0..adm.len()).filter(|&b| mask >> b & 1 == 1).map(|b| adm[b]).collect();
                    if set.iter().enumerate().all(|(i, &a)| set[i + 1..].iter().all(|&b| compat[a][b])) {
                        let len: f64 = set.iter().map(|&c| cands[c].length).sum();
                        if len > best_len {
                            best_len = len;
                            best_set = set;
                        }
                    }
                }
                best_set
            }
        };
        let total: f64 = chosen.iter().map(|&c| cands[c].length).sum();
        let value = 2f64.powi(k) * total.sqrt();
        if value > best.value {
            best = EnergyReport { value, k: Some(k), certificate: chosen.iter().map(|&c| cands[c].set.clone()).collect() };
        }
    }
    Ok(best)
}

/// `energy^l_j(f)` over the whole collection.
pub fn energy_vec(
    f: &SampledFunction<f64>,
    tc: &TileCollection,
    bank: &PacketBank,
    j: usize,
    l: usize,
    mode: EnergyMode,
) -> Result<EnergyReport> {
    let c = component_coefficients(f, tc, bank, j)?;
    energy_from(tc, &all(tc), &c, j, l, mode)
}

/// Sequence energy with its certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqEnergyReport {
    /// `(Σ_s |⟨h_{n(s)}, Φ_{s_3}⟩|²)^{1/2}`.
    pub value: f64,
    /// Attaining family: every tri-tile.
    pub certificate: Vec<usize>,
}

/// Sequence energy of the `active` tri-tiles from their coefficients.
pub fn energy_seq_from(active: &[usize], coeffs: &[C64]) -> SeqEnergyReport {
    SeqEnergyReport { value: mass(coeffs, active).sqrt(), certificate: active.to_vec() }
}

/// Sequence energy over the whole collection.
pub fn energy_seq(h: &[SampledFunction<f64>], tc: &TileCollection, bank: &PacketBank) -> Result<SeqEnergyReport> {
    let c = sequence_coefficients(h, tc, bank)?;
    Ok(energy_seq_from(&all(tc), &c))
}

/// Which decrement algorithm runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecrementKind {
    /// Selection by `l`-vectorized mass of `⟨f, Φ_{s_j}⟩`; removes `s^{lj}`.
    Vectorized {
        /// Coefficient component.
        j: usize,
        /// Vectorization component.
        l: usize,
    },
    /// Selection by `jl`-vectorized mass of the sequence coefficients;
    /// removes `s^{jl}`.
    Sequence {
        /// First vectorization component.
        j: usize,
        /// Second vectorization component.
        l: usize,
    },
}

impl DecrementKind {
    fn pair(self) -> (usize, usize) {
        match self {
            Self::Vectorized { j, l } | Self::Sequence { j, l } => (j, l),
        }
    }

    fn selection_mode(self) -> VecMode {
        match self {
            Self::Vectorized { l, .. } => VecMode::Single(l),
            Self::Sequence { j, l } => VecMode::Closure(j, l),
        }
    }

    fn removal_mode(self) -> VecMode {
        match self {
            Self::Vectorized { j, l } => VecMode::Closure(l, j),
            Self::Sequence { j, l } => VecMode::Closure(j, l),
        }
    }
}

/// Post-condition measurements of one decrement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecrementAudit {
    /// Energy `E` the thresholds use.
    pub energy: f64,
    /// Size of the input.
    pub size_before: f64,
    /// Size of the remainder `P1`, measured afresh.
    pub size_after: f64,
    /// `size_after ≤ 2^{-d-1} E`.
    pub halving_ok: bool,
    /// `Σ_i |I_{s_i}|` over the selected bases.
    pub sum_lengths: f64,
    /// `Σ_i |I_{s_i}| / 4^d`.
    pub c_alg: f64,
    /// Selected families are strongly `j`-disjoint (always true for the
    /// sequence algorithm, which has no such requirement).
    pub strongly_disjoint: bool,
    /// `P1` and the removed sets partition the input.
    pub partition_ok: bool,
}

/// Output of a decrement.
#[derive(Debug, Clone)]
pub struct Decrement {
    /// Remaining tri-tiles.
    pub p1: Vec<usize>,
    /// Selected vectorized sets (`s_i^l` for the vectorized algorithm,
    /// `s_i^{jl}` for the sequence algorithm).
    pub p2: Vec<VectorizedSet>,
    /// Removed trees, in selection order.
    pub trees: Vec<VectorizedSet>,
    /// Post-condition audit.
    pub audit: DecrementAudit,
}

fn tie_order(tc: &TileCollection, a: usize, b: usize) -> std::cmp::Ordering {
    let (x, y) = (&tc.tritiles()[a], &tc.tritiles()[b]);
    x.strip
        .cmp(&y.strip)
        .then(x.space.center().partial_cmp(&y.space.center()).expect("finite"))
        .then(a.cmp(&b))
}

/// Greedy decrement of `active` at level `d` against the energy `energy`.
///
/// Repeatedly picks the tri-tile with the largest selection mass among those
/// with mass at least `(2^{-d}E)²|I_s|/4`, ties broken by strip index, space
/// center and index, and removes its tree.
pub fn decrement_from(
    tc: &TileCollection,
    active: &[usize],
    coeffs: &[C64],
    kind: DecrementKind,
    d: i32,
    energy: f64,
) -> Result<Decrement> {
    let (j, l) = kind.pair();
    check_pair(j, l)?;
    let sel = kind.selection_mode();
    let scale = 2f64.powi(-d) * energy;
    let size_before = size_from(tc, active, coeffs, sel).value;
    if size_before > scale * (1.0 + SLACK) {
        return Err(Error::Precondition(format!("size {size_before} exceeds 2^-d E = {scale} at d = {d}")));
    }
    let t = tc.tritiles();
    let mut cur: Vec<usize> = active.to_vec();
    let mut p2 = Vec::new();
    let mut trees = Vec::new();
    loop {
        let g = Groups::new(tc, &cur);
        let mut cache: BTreeMap<TileKey, f64> = BTreeMap::new();
        let mut pick: Option<(usize, f64)> = None;
        for &s in &cur {
            let key = match sel {
                VecMode::Single(l) => g.key(s, l),
                VecMode::Closure(j, _) => g.key(s, j),
            };
            let m = *cache.entry(key).or_insert_with(|| mass(coeffs, &g.members(s, sel)));
            if !(m > 0.0) || m < 0.25 * scale * scale * t[s].space.length() {
                continue;
            }
            pick = match pick {
                None => Some((s, m)),
                Some((b, bm)) if m > bm || (m == bm && tie_order(tc, s, b).is_lt()) => Some((s, m)),
                keep => keep,
            };
        }
        let Some((s, _)) = pick else { break };
        let chosen = VectorizedSet { base: s, mode: sel, members: g.members(s, sel) };
        let tree = VectorizedSet { base: s, mode: kind.removal_mode(), members: g.members(s, kind.removal_mode()) };
        let removed: BTreeSet<usize> = tree.members.iter().copied().collect();
        cur.retain(|i| !removed.contains(i));
        p2.push(chosen);
        trees.push(tree);
    }
    let size_after = size_from(tc, &cur, coeffs, sel).value;
    let sum_lengths: f64 = p2.iter().map(|v| t[v.base].space.length()).sum();
    let strongly = match kind {
        DecrementKind::Vectorized { j, .. } => strongly_disjoint(tc, &p2, j),
        DecrementKind::Sequence { .. } => true,
    };
    let mut seen: Vec<usize> = cur.iter().copied().chain(trees.iter().flat_map(|v| v.members.iter().copied())).collect();
    let total = seen.len();
    seen.sort_unstable();
    seen.dedup();
    let mut input = active.to_vec();
    input.sort_unstable();
    let audit = DecrementAudit {
        energy,
        size_before,
        size_after,
        halving_ok: size_after <= scale / 2.0 * (1.0 + SLACK),
        sum_lengths,
        c_alg: sum_lengths / 4f64.powi(d),
        strongly_disjoint: strongly,
        partition_ok: total == seen.len() && seen == input,
    };
    Ok(Decrement { p1: cur, p2, trees, audit })
}

/// Vectorized decrement over the whole collection with `E = energy^l_j(f)`
/// (greedy).
pub fn energy_decrement(
    f: &SampledFunction<f64>,
    tc: &TileCollection,
    bank: &PacketBank,
    j: usize,
    l: usize,
    d: i32,
) -> Result<Decrement> {
    let c = component_coefficients(f, tc, bank, j)?;
    let e = energy_from(tc, &all(tc), &c, j, l, EnergyMode::Greedy)?.value;
    decrement_from(tc, &all(tc), &c, DecrementKind::Vectorized { j, l }, d, e)
}

/// Sequence decrement over the whole collection with `E` the sequence
/// energy.
pub fn energy_decrement_seq(
    h: &[SampledFunction<f64>],
    tc: &TileCollection,
    bank: &PacketBank,
    j: usize,
    l: usize,
    d: i32,
) -> Result<Decrement> {
    let c = sequence_coefficients(h, tc, bank)?;
    let e = energy_seq_from(&all(tc), &c).value;
    decrement_from(tc, &all(tc), &c, DecrementKind::Sequence { j, l }, d, e)
}

/// `Σ_{s ∈ active} |I_s|^{-1/2} |a_s b_s c_s|` in index order.
pub fn model_sum_from(tc: &TileCollection, active: &[usize], c1: &[C64], c2: &[C64], c3: &[C64]) -> f64 {
    active
        .iter()
        .map(|&s| (c1[s] * c2[s] * c3[s]).norm() / tc.tritiles()[s].space.length().sqrt())
        .sum()
}

/// Model sum `Λ_Q(f1, f2, f3)`.
pub fn model_sum(
    f1: &SampledFunction<f64>,
    f2: &SampledFunction<f64>,
    f3: &[SampledFunction<f64>],
    tc: &TileCollection,
    bank: &PacketBank,
) -> Result<f64> {
    let c3 = sequence_coefficients(f3, tc, bank)?;
    let c1 = component_coefficients(f1, tc, bank, 1)?;
    let c2 = component_coefficients(f2, tc, bank, 2)?;
    Ok(model_sum_from(tc, &all(tc), &c1, &c2, &c3))
}

/// Coefficients of the three inputs on every tri-tile.
#[derive(Debug, Clone)]
pub struct TriCoefficients {
    /// `⟨f1, Φ_{s_1}⟩`.
    pub c1: Vec<C64>,
    /// `⟨f2, Φ_{s_2}⟩`.
    pub c2: Vec<C64>,
    /// `⟨f3_{n(s)}, Φ_{s_3}⟩`.
    pub c3: Vec<C64>,
}

impl TriCoefficients {
    /// Computes all three coefficient lists.
    pub fn new(
        f1: &SampledFunction<f64>,
        f2: &SampledFunction<f64>,
        f3: &[SampledFunction<f64>],
        tc: &TileCollection,
        bank: &PacketBank,
    ) -> Result<Self> {
        Ok(Self {
            c3: sequence_coefficients(f3, tc, bank)?,
            c1: component_coefficients(f1, tc, bank, 1)?,
            c2: component_coefficients(f2, tc, bank, 2)?,
        })
    }
}

/// A removed tree with its type `(j, l)`: the set is `s^{jl}`.
#[derive(Debug, Clone)]
pub struct Tree {
    /// Members as a vectorized set.
    pub set: VectorizedSet,
    /// `(j, l)`.
    pub kind: (usize, usize),
    /// `Λ` restricted to the tree.
    pub model_sum: f64,
    /// `|I| · size^2_1 · size^1_2 · size^{jl}_3` measured on the tree.
    pub product: f64,
}

/// One level of the partition.
#[derive(Debug, Clone)]
pub struct Level {
    /// Level `d`.
    pub d: i32,
    /// Trees removed at this level.
    pub trees: Vec<Tree>,
    /// `Λ_{Q^d}`.
    pub model_sum: f64,
    /// `Σ_V |I_V| Π_i min(2^{-d} E_i, S_i)`.
    pub bound: f64,
    /// `Σ_V` of the measured tree products.
    pub measured: f64,
    /// `2^{2d} Π_i min(2^{-d} E_i, S_i)` with the larger third size.
    pub scaled_product: f64,
    /// Decrement audits in run order.
    pub audits: [DecrementAudit; 4],
}

/// Report of [`lambda_bound`].
#[derive(Debug, Clone)]
pub struct LambdaReport {
    /// Energies `E_1, E_2, E_3`.
    pub energies: [f64; 3],
    /// Sizes `size^2_1, size^1_2, size^{12}_3, size^{21}_3`.
    pub sizes: [f64; 4],
    /// Starting level.
    pub d0: Option<i32>,
    /// Levels in order.
    pub levels: Vec<Level>,
    /// Tri-tiles left with zero contribution.
    pub remainder: Vec<usize>,
    /// Largest ratio of a tree's model sum to its measured product.
    pub c_tree: f64,
    /// Weights `θ_i = 1 - 2/p_i`.
    pub theta: [f64; 3],
    /// Whether `Σ 1/p_i = 1` to `1e-12`.
    pub exponents_dual: bool,
    /// `Π_i E_i^{1-θ_i} S_i^{θ_i}` with `S_3` the larger third size.
    pub interpolated: f64,
    /// Every level satisfies `Λ_{Q^d} ≤ measured (1 + 1e-12)`.
    pub tree_estimate_ok: bool,
}

/// Output of [`lambda_bound`].
#[derive(Debug, Clone)]
pub struct LambdaBound {
    /// `Σ_d` of the per-level bounds.
    pub bound: f64,
    /// Tri-tile indices of each `Q^d`.
    pub partition: BTreeMap<i32, Vec<usize>>,
    /// Measurements.
    pub report: LambdaReport,
}

/// Validates `2 < p_i < ∞`; returns the weights and whether `Σ 1/p_i = 1`.
pub fn check_exponents(p: [f64; 3]) -> Result<([f64; 3], bool)> {
    for (i, &q) in p.iter().enumerate() {
        if !(q > 2.0 && q.is_finite()) {
            return Err(Error::Exponent(format!("p{} = {q} outside (2, ∞)", i + 1)));
        }
    }
    let dual = (p.iter().map(|q| 1.0 / q).sum::<f64>() - 1.0).abs() <= 1e-12;
    Ok((p.map(|q| 1.0 - 2.0 / q), dual))
}

/// Highest number of levels run before giving up.
const MAX_LEVELS: i32 = 4000;

/// Partitions the collection by levels `d` through the four decrements and
/// bounds the model sum on each level by `Σ_V |I_V| Π_i min(2^{-d}E_i, S_i)`.
pub fn lambda_bound(
    f1: &SampledFunction<f64>,
    f2: &SampledFunction<f64>,
    f3: &[SampledFunction<f64>],
    tc: &TileCollection,
    bank: &PacketBank,
    p: [f64; 3],
) -> Result<LambdaBound> {
    let (theta, dual) = check_exponents(p)?;
    let c = TriCoefficients::new(f1, f2, f3, tc, bank)?;
    lambda_bound_from(tc, &c, theta, dual)
}

fn tree_product(tc: &TileCollection, set: &[usize], c: &TriCoefficients, kind: (usize, usize)) -> f64 {
    let len = tc.tritiles()[set[0]].space.length();
    let s1 = size_from(tc, set, &c.c1, VecMode::Single(2)).value;
    let s2 = size_from(tc, set, &c.c2, VecMode::Single(1)).value;
    let s3 = size_from(tc, set, &c.c3, VecMode::Closure(kind.0, kind.1)).value;
    len * s1 * s2 * s3
}

/// [`lambda_bound`] from precomputed coefficients.
pub fn lambda_bound_from(tc: &TileCollection, c: &TriCoefficients, theta: [f64; 3], dual: bool) -> Result<LambdaBound> {
    let everything = all(tc);
    let e1 = energy_from(tc, &everything, &c.c1, 1, 2, EnergyMode::Greedy)?.value;
    let e2 = energy_from(tc, &everything, &c.c2, 2, 1, EnergyMode::Greedy)?.value;
    let e3 = energy_seq_from(&everything, &c.c3).value;
    let sizes = [
        size_from(tc, &everything, &c.c1, VecMode::Single(2)).value,
        size_from(tc, &everything, &c.c2, VecMode::Single(1)).value,
        size_from(tc, &everything, &c.c3, VecMode::Closure(1, 2)).value,
        size_from(tc, &everything, &c.c3, VecMode::Closure(2, 1)).value,
    ];
    let energies = [e1, e2, e3];
    let live = |set: &[usize]| set.iter().any(|&s| (c.c1[s] * c.c2[s] * c.c3[s]).norm() > 0.0);
    let s3 = sizes[2].max(sizes[3]);
    let interpolated = e1.powf(1.0 - theta[0]) * sizes[0].powf(theta[0])
        * e2.powf(1.0 - theta[1]) * sizes[1].powf(theta[1])
        * e3.powf(1.0 - theta[2]) * s3.powf(theta[2]);
    let mut report = LambdaReport {
        energies,
        sizes,
        d0: None,
        levels: Vec::new(),
        remainder: Vec::new(),
        c_tree: 0.0,
        theta,
        exponents_dual: dual,
        interpolated,
        tree_estimate_ok: true,
    };
    let mut partition = BTreeMap::new();
    if !live(&everything) {
        report.remainder = everything;
        return Ok(LambdaBound { bound: 0.0, partition, report });
    }
    let pairs = [(e1, sizes[0]), (e2, sizes[1]), (e3, sizes[2]), (e3, sizes[3])];
    let d0 = pairs
        .iter()
        .filter(|(_, s)| *s > 0.0)
        .map(|(e, s)| (e / s).log2().floor() as i32)
        .min()
        .expect("live input has positive sizes");
    report.d0 = Some(d0);
    let steps: [(DecrementKind, &[C64], f64); 4] = [
        (DecrementKind::Vectorized { j: 1, l: 2 }, &c.c1, e1),
        (DecrementKind::Vectorized { j: 2, l: 1 }, &c.c2, e2),
        (DecrementKind::Sequence { j: 1, l: 2 }, &c.c3, e3),
        (DecrementKind::Sequence { j: 2, l: 1 }, &c.c3, e3),
    ];
    let mut cur = everything;
    let mut bound = 0.0;
    let mut d = d0;
    while live(&cur) {
        if d - d0 > MAX_LEVELS {
            return Err(Error::Divergence(format!("no termination after {MAX_LEVELS} levels")));
        }
        let m = [
            (2f64.powi(-d) * e1).min(sizes[0]),
            (2f64.powi(-d) * e2).min(sizes[1]),
            (2f64.powi(-d) * e3).min(sizes[2]),
            (2f64.powi(-d) * e3).min(sizes[3]),
        ];
        let mut trees = Vec::new();
        let mut audits = Vec::new();
        let mut members = Vec::new();
        for (kind, coeffs, e) in steps {
            let dec = decrement_from(tc, &cur, coeffs, kind, d, e)?;
            audits.push(dec.audit);
            cur = dec.p1;
            for set in dec.trees {
                let k = match set.mode {
                    VecMode::Closure(a, b) => (a, b),
                    VecMode::Single(_) => unreachable!("trees are closures"),
                };
                members.extend_from_slice(&set.members);
                let lam = model_sum_from(tc, &set.members, &c.c1, &c.c2, &c.c3);
                let product = tree_product(tc, &set.members, c, k);
                trees.push(Tree { set, kind: k, model_sum: lam, product });
            }
        }
        members.sort_unstable();
        let lam_d = model_sum_from(tc, &members, &c.c1, &c.c2, &c.c3);
        let level_bound: f64 = trees
            .iter()
            .map(|t| {
                let len = tc.tritiles()[t.set.base].space.length();
                let third = if t.kind == (1, 2) { m[2] } else { m[3] };
                len * m[0] * m[1] * third
            })
            .sum();
        let measured: f64 = trees.iter().map(|t| t.product).sum();
        for t in &trees {
            if t.model_sum > 0.0 {
                report.c_tree = report.c_tree.max(t.model_sum / t.product);
            }
        }
        if lam_d > measured * (1.0 + SLACK) {
            report.tree_estimate_ok = false;
        }
        bound += level_bound;
        if !members.is_empty() {
            partition.insert(d, members);
        }
        report.levels.push(Level {
            d,
            trees,
            model_sum: lam_d,
            bound: level_bound,
            measured,
            scaled_product: 4f64.powi(d) * m[0] * m[1] * m[2].max(m[3]),
            audits: [audits[0], audits[1], audits[2], audits[3]],
        });
        d += 1;
    }
    report.remainder = cur;
    Ok(LambdaBound { bound, partition, report })
}
