//! The experiments: seeded trials run in parallel, gathered in trial order.

use std::path::PathBuf;

use bilin_tf_core::grid::{GridSpec, SampledFunction};
use bilin_tf_core::intervals::{Interval, IntervalCollection};
use bilin_tf_core::multiplier::{bilinear_general, trilinear_pairing};
use bilin_tf_core::numeric::fit_decay_exponent;
use bilin_tf_core::pseudo::{
    adjoint_symbol, evaluate_via_buckets, random_translate_series, reconstruct, translated_family_bound, unit_decompose,
    AngleMap, PartitionBump,
};
use bilin_tf_core::squarefn::{linear_square_function, norm_ratio, CutoffMode, SquareFunctionSpec};
use bilin_tf_core::timefreq::{
    check_exponents, component_coefficients, decrement_from, energy_from, energy_seq_from, lambda_bound_from,
    make_wave_packet, model_sum_from, sequence_coefficients, size_from, DecrementKind, EnergyMode, PacketBank, Tile,
    TriCoefficients, VecMode,
};
use bilin_tf_core::{Error, C64};
use rand::Rng;
use rayon::prelude::*;

use crate::config::{ConfigError, Experiment, ExperimentConfig};
use crate::instances::{adapted_pair, band, rng, small_instance, sparse_instance, trial_seed, well_distributed, TriInstance};
use crate::output::{num, read_points, svg_scatter, write_file, Table};
use crate::weak::{estimate_weak_type, MeasurableSet};

/// Failure of a whole run.
#[derive(Debug)]
pub enum RunError {
    /// Invalid configuration.
    Config(ConfigError),
    /// Numerical failure outside any single trial.
    Numeric(Error),
    /// Output could not be written.
    Io(std::io::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(e) => write!(f, "{e}"),
            Self::Numeric(e) => write!(f, "numeric error: {e}"),
            Self::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        Self::Numeric(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e)
    }
}

impl RunError {
    /// Process exit status: 2 for configuration errors, 3 for numerical
    /// failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numeric(_) => 3,
            Self::Io(_) => 1,
        }
    }
}

/// One table cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    /// Integer.
    Int(i64),
    /// Real number.
    Num(f64),
    /// Post-condition; `false` flags the row.
    Check(bool),
}

impl Cell {
    fn text(&self) -> String {
        match *self {
            Self::Int(i) => i.to_string(),
            Self::Num(x) => num(x),
            Self::Check(b) => if b { "pass" } else { "fail" }.into(),
        }
    }

    /// Numeric value; checks read as 1 or 0.
    pub fn value(&self) -> f64 {
        match *self {
            Self::Int(i) => i as f64,
            Self::Num(x) => x,
            Self::Check(b) => f64::from(u8::from(b)),
        }
    }
}

type Trial = bilin_tf_core::Result<Vec<Cell>>;

/// Runs `count` trials in parallel and appends them in order. Failed trials
/// become flagged rows of `NaN` with the error in the summary. Returns the
/// successful rows.
fn run_trials<F>(table: &mut Table, count: usize, seed: u64, f: F) -> Vec<Vec<Cell>>
where
    F: Fn(usize, u64) -> Trial + Sync + Send,
{
    let results: Vec<Trial> = (0..count).into_par_iter().map(|t| f(t, trial_seed(seed, t as u64))).collect();
    let width = table.columns.len();
    let mut ok = Vec::new();
    for (t, r) in results.into_iter().enumerate() {
        match r {
            Ok(cells) => {
                let flagged = cells.iter().any(|c| *c == Cell::Check(false));
                table.push(cells.iter().map(Cell::text).collect(), flagged);
                ok.push(cells);
            }
            Err(e) => {
                let mut v = vec!["NaN".to_owned(); width];
                v[0] = t.to_string();
                table.push(v, true);
                table.note(&format!("trial_{t}_error"), e.to_string().replace(['\n', ','], " "));
            }
        }
    }
    ok
}

fn column(rows: &[Vec<Cell>], i: usize) -> Vec<f64> {
    rows.iter().map(|r| r[i].value()).collect()
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn median(v: &[f64]) -> f64 {
    let mut s: Vec<f64> = v.iter().copied().filter(|x| !x.is_nan()).collect();
    if s.is_empty() {
        return f64::NAN;
    }
    s.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    s[s.len() / 2]
}

fn common_notes(cfg: &ExperimentConfig, t: &mut Table) {
    t.note("trials", cfg.trials);
    t.note("seed", cfg.seed);
    t.note("grid_period", num(cfg.grid.period));
    t.note("grid_samples", cfg.grid.samples);
    let c = &cfg.collection;
    t.note("collection_count", c.count);
    t.note("collection_length", format!("{}..{}", num(c.length[0]), num(c.length[1])));
    t.note("collection_separation", format!("{}..{}", num(c.separation[0]), num(c.separation[1])));
    t.note("collection_seed", c.seed);
    t.note("exponents_pq", format!("{}/{}", num(cfg.exponents.p), num(cfg.exponents.q)));
}

/// Runs the experiment and returns its table.
pub fn run(cfg: &ExperimentConfig) -> Result<Table, RunError> {
    cfg.validate()?;
    let mut t = match cfg.experiment {
        Experiment::PlancherelCheck => plancherel_check(cfg)?,
        Experiment::RdfSweep => rdf_sweep(cfg)?,
        Experiment::BilinearSweep => bilinear_sweep(cfg)?,
        Experiment::EndpointR2 => endpoint_r2(cfg)?,
        Experiment::EnergyAlgoAudit => energy_algo_audit(cfg)?,
        Experiment::ModelSumAudit => model_sum_audit(cfg)?,
        Experiment::LambdaBoundAudit => lambda_bound_audit(cfg)?,
        Experiment::PseudoBucket => pseudo_bucket(cfg)?,
        Experiment::TranslatedFamily => translated_family(cfg)?,
        Experiment::WeakTypeEstimate => weak_type_estimate(cfg)?,
        Experiment::OffdiagDecay => offdiag_decay(cfg)?,
    };
    common_notes(cfg, &mut t);
    Ok(t)
}

/// Files written by [`run_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// CSV path.
    pub csv: PathBuf,
    /// SVG path, when plotting was requested.
    pub svg: Option<PathBuf>,
    /// Whether any row or summary check failed.
    pub flagged: bool,
}

impl RunOutcome {
    /// 0 when clean, 3 when a numeric flag is present.
    pub fn exit_code(&self) -> i32 {
        if self.flagged {
            3
        } else {
            0
        }
    }
}

/// Runs the experiment, writes `<output_path>/<experiment>.csv` and, with
/// `plot`, an SVG rendered from that CSV.
pub fn run_experiment(cfg: &ExperimentConfig, plot: bool) -> Result<RunOutcome, RunError> {
    let table = run(cfg)?;
    let dir = PathBuf::from(&cfg.output_path);
    let csv = dir.join(format!("{}.csv", cfg.experiment));
    let text = table.to_csv();
    write_file(&csv, &text)?;
    let svg = match (&table.plot, plot) {
        (Some((x, y)), true) => {
            let written = std::fs::read_to_string(&csv)?;
            let pts = read_points(&written, x, y).map_err(|e| RunError::Io(std::io::Error::other(e)))?;
            let path = dir.join(format!("{}.svg", cfg.experiment));
            write_file(&path, &svg_scatter(&pts, x, y, cfg.experiment.name()))?;
            Some(path)
        }
        _ => None,
    };
    Ok(RunOutcome { csv, svg, flagged: table.flagged() })
}

fn random_partition(grid: &GridSpec<f64>, pieces: usize, seed: u64) -> bilin_tf_core::Result<IntervalCollection<f64>> {
    let nyq = grid.nyquist();
    let mut r = rng(seed);
    let mut cuts: Vec<f64> = (1..pieces).map(|_| r.gen_range(-nyq..nyq)).collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let edges: Vec<f64> = std::iter::once(-nyq).chain(cuts).chain(std::iter::once(nyq)).collect();
    let v = edges.windows(2).filter(|w| w[1] > w[0]).map(|w| Interval::from_endpoints(w[0], w[1])).collect::<Result<_, _>>()?;
    IntervalCollection::from_intervals(v)
}

fn plancherel_check(cfg: &ExperimentConfig) -> Result<Table, RunError> {
    let grid = cfg.grid_spec()?;
    let pieces = cfg.collection.count;
    let mut t = Table::new("plancherel_check", &["trial", "pieces", "norm_f", "norm_square", "rel_err", "within_1e-10"]);
    let rows = run_trials(&mut t, cfg.trials, cfg.seed, |i, s| {
        let nyq = grid.nyquist();
        let f = band(grid, -nyq, nyq, s)?;
        let part = random_partition(&grid, pieces, s ^ 0x5a5a)?;
        let spec = SquareFunctionSpec::new(part, CutoffMode::Sharp);
        let nf = f.lp_norm(2.0);
        let ns = linear_square_function(&f, &spec)?.lp_norm(2.0);
        let rel = (ns - nf).abs() / nf;
        Ok(vec![Cell::Int(i as i64), Cell::Int(pieces as i64), Cell::Num(nf), Cell::Num(ns), Cell::Num(rel), Cell::Check(rel <= 1e-10)])
    });
    t.note("max_rel_err", num(max(&column(&rows, 4))));
    t.note("median_rel_err", num(median(&column(&rows, 4))));
    t.plot = Some(("trial".into(), "rel_err".into()));
    Ok(t)
}

fn rdf_sweep(cfg: &ExperimentConfig) -> Result<Table, RunError> {
    let grid = cfg.grid_spec()?;
    let c = cfg.collection.clone();
    if c.separation[0] <= 0.0 {
        return Err(ConfigError { field: "collection.separation".into(), message: "rdf_sweep needs positive gaps".into() }.into());
    }
    let p = cfg.exponents.p;
    let mut t = Table::new("rdf_sweep", &["trial", "count", "norm_f", "norm_square", "ratio_2", "bessel", "ratio_p"]);
    let rows = run_trials(&mut t, cfg.trials, cfg.seed, |i, s| {
        let nyq = grid.nyquist();
        let omega = well_distributed(c.count, c.length, c.separation, s)?;
        let f = band(grid, -nyq, nyq, s ^ 0x77)?;
        let sf = linear_square_function(&f, &SquareFunctionSpec::new(omega, CutoffMode::Sharp))?;
        let (nf, ns) = (f.lp_norm(2.0), sf.lp_norm(2.0));
        let r2 = ns / nf;
        let rp = sf.lp_norm(p) / f.lp_norm(p);
        Ok(vec![
            Cell::Int(i as i64),
            Cell::Int(c.count as i64),
            Cell::Num(nf),
            Cell::Num(ns),
            Cell::Num(r2),
            Cell::Check(r2 <= 1.0 + 1e-10),
            Cell::Num(rp),
        ])
    });
    t.note("max_ratio_2", num(max(&column(&rows, 4))));
    t.note("max_ratio_p", num(max(&column(&rows, 6))));
    t.note("p", num(p));
    t.plot = Some(("trial".into(), "ratio_p".into()));
    Ok(t)
}

/// Classification of the growth of the maximal ratio across sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Drift {
    /// Below `2×`.
    Stable,
    /// In `[2×, 4×)`: reported.
    Report,
    /// At least `4×`.
    Fail,
}

/// `max/min` over sizes of the per-size maximal ratio, with its class.
pub fn drift_of(maxima: &[f64]) -> (f64, Drift) {
    let hi = max(maxima);
    let lo = maxima.iter().copied().fold(f64::INFINITY, f64::min);
    let d = hi / lo;
    let class = if d < 2.0 {
        Drift::Stable
    } else if d < 4.0 {
        Drift::Report
    } else {
        Drift::Fail
    };
    (d, class)
}

fn bilinear_sweep(cfg: &ExperimentConfig) -> Result<Table, RunError> {
    let grid = cfg.grid_spec()?;
    let e = cfg.exponent_triple()?;
    let c = &cfg.collection;
    let sizes = cfg.sweep.sizes.clone();
    let specs: Vec<SquareFunctionSpec<f64>> = sizes
        .iter()
        .map(|&n| Ok(SquareFunctionSpec::new(well_distributed(n, c.length, c.separation, c.seed ^ n as u64)?, CutoffMode::Smooth)))
        .collect::<bilin_tf_core::Result<_>>()?;
    let mut t = Table::new("bilinear_sweep", &["trial", "size", "ratio", "numerator", "denominator"]);
    let trials = cfg.trials;
    let rows = run_trials(&mut t, trials * sizes.len(), cfg.seed, |i, _| {
        let (k, tr) = (i / trials, i % trials);
        let spec = &specs[k];
        let (f, g) = adapted_pair(grid, &spec.collection, trial_seed(cfg.seed ^ sizes[k] as u64, tr as u64))?;
        let r = norm_ratio(&f, &g, spec, &e)?;
        Ok(vec![Cell::Int(tr as i64), Cell::Int(sizes[k] as i64), Cell::Num(r.ratio), Cell::Num(r.numerator), Cell::Num(r.denominator)])
    });
    let maxima: Vec<f64> = sizes
        .iter()
        .map(|&n| max(&rows.iter().filter(|r| r[1] == Cell::Int(n as i64)).map(|r| r[2].value()).collect::<Vec<_>>()))
        .collect();
    for (n, m) in sizes.iter().zip(&maxima) {
        t.note(&format!("max_ratio_size_{n}"), num(*m));
    }
    let (d, class) = drift_of(&maxima);
    t.note("drift", num(d));
    t.note("drift_class", format!("{class:?}").to_lowercase());
    t.note("r", num(e.r));
    t.summary_flagged = class == Drift::Fail;
    t.plot = Some(("size".into(), "ratio".into()));
    Ok(t)
}

fn endpoint_r2(cfg: &ExperimentConfig) -> Result<Table, RunError> {
    let grid = cfg.grid_spec()?;
    let e = cfg.exponent_triple()?;
    let c = &cfg.collection;
    let omega = well_distributed(c.count, c.length, c.separation, c.seed)?;
    let smooth = SquareFunctionSpec::new(omega.clone(), CutoffMode::Smooth);
    let sharp = SquareFunctionSpec::new(omega.clone(), CutoffMode::Sharp);
    let mut t = Table::new("endpoint_r2", &["trial", "ratio_smooth", "ratio_sharp", "sharp_over_smooth"]);
    let rows = run_trials(&mut t, cfg.trials, cfg.seed, |i, s| {
        let (f, g) = adapted_pair(grid, &omega, s)?;
        let a = norm_ratio(&f, &g, &smooth, &e)?.ratio;
        let b = norm_ratio(&f, &g, &sharp, &e)?.ratio;
        Ok(vec![Cell::Int(i as i64), Cell::Num(a), Cell::Num(b), Cell::Num(b / a)])
    });
    t.note("max_ratio_smooth", num(max(&column(&rows, 1))));
    t.note("max_ratio_sharp", num(max(&column(&rows, 2))));
    t.plot = Some(("ratio_smooth".into(), "ratio_sharp".into()));
    Ok(t)
}

/// Greedy and exhaustive `energy^2_1` on one instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyComparison {
    /// Greedy value.
    pub greedy: f64,
    /// Exhaustive value.
    pub exhaustive: f64,
}

impl EnergyComparison {
    /// `greedy ≤ exhaustive` up to `1e-12` relative.
    pub fn ordered(&self) -> bool {
        self.greedy <= self.exhaustive * (1.0 + 1e-12)
    }

    /// Equal to `1e-12` relative.
    pub fn equal(&self) -> bool {
        (self.greedy - self.exhaustive).abs() <= 1e-12 * self.exhaustive.max(f64::MIN_POSITIVE)
    }
}

/// Compares greedy and exhaustive energies of `⟨f1, Φ_{s_1}⟩` vectorized
/// along component 2.
pub fn compare_energies(inst: &TriInstance) -> bilin_tf_core::Result<EnergyComparison> {
    let all: Vec<usize> = (0..inst.tc.len()).collect();
    let c = component_coefficients(&inst.f1, &inst.tc, &inst.bank, 1)?;
    let greedy = energy_from(&inst.tc, &all, &c, 1, 2, EnergyMode::Greedy)?.value;
    let exhaustive = energy_from(&inst.tc, &all, &c, 1, 2, EnergyMode::Exhaustive)?.value;
    Ok(EnergyComparison { greedy, exhaustive })
}

/// Combined post-conditions of the four decrements on one instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecrementSuite {
    /// Every run halved the size.
    pub halving: bool,
    /// Largest `Σ|I| / 4^d`.
    pub c_alg: f64,
    /// Every vectorized `P2` is strongly disjoint.
    pub disjoint: bool,
    /// Every run partitioned its input.
    pub partition: bool,
    /// Runs performed (zero inputs are skipped).
    pub runs: usize,
}

/// Runs the vectorized decrements `(1,2)`, `(2,1)` and the sequence
/// decrements `(1,2)`, `(2,1)` at `d = ⌊log2(E/S)⌋`.
pub fn decrement_suite(inst: &TriInstance) -> bilin_tf_core::Result<DecrementSuite> {
    let tc = &inst.tc;
    let all: Vec<usize> = (0..tc.len()).collect();
    let c1 = component_coefficients(&inst.f1, tc, &inst.bank, 1)?;
    let c2 = component_coefficients(&inst.f2, tc, &inst.bank, 2)?;
    let c3 = sequence_coefficients(&inst.f3, tc, &inst.bank)?;
    let mut out = DecrementSuite { halving: true, c_alg: 0.0, disjoint: true, partition: true, runs: 0 };
    let kinds = [
        (DecrementKind::Vectorized { j: 1, l: 2 }, &c1),
        (DecrementKind::Vectorized { j: 2, l: 1 }, &c2),
        (DecrementKind::Sequence { j: 1, l: 2 }, &c3),
        (DecrementKind::Sequence { j: 2, l: 1 }, &c3),
    ];
    for (kind, c) in kinds {
        let (e, s) = match kind {
            DecrementKind::Vectorized { j, l } => {
                (energy_from(tc, &all, c, j, l, EnergyMode::Greedy)?.value, size_from(tc, &all, c, VecMode::Single(l)).value)
            }
            DecrementKind::Sequence { j, l } => (energy_seq_from(&all, c).value, size_from(tc, &all, c, VecMode::Closure(j, l)).value),
        };
        if !(s > 0.0 && e > 0.0) {
            continue;
        }
        let d = (e / s).log2().floor() as i32;
        let a = decrement_from(tc, &all, c, kind, d, e)?.audit;
        out.runs += 1;
        out.halving &= a.halving_ok;
        out.partition &= a.partition_ok;
        out.disjoint &= a.strongly_disjoint;
        out.c_alg = out.c_alg.max(a.c_alg);
    }
    Ok(out)
}

fn energy_algo_audit(cfg: &ExperimentConfig) -> Result<Table, RunError> {
    let cap = cfg.sweep.max_tritiles;
    let mut t = Table::new(
        "energy_algo_audit",
        &["trial", "small_tritiles", "greedy", "exhaustive", "greedy_le_exhaustive", "equal", "tritiles", "halving", "c_alg", "c_alg_le_16", "disjoint", "partition"],
    );
    let rows = run_trials(&mut t, cfg.trials, cfg.seed, |i, s| {
        let small = small_instance(s, 6)?;
        let cmp = compare_energies(&small)?;
        let big = sparse_instance(s ^ 0xbeef, cap)?;
        let suite = decrement_suite(&big)?;
        Ok(vec![
            Cell::Int(i as i64),
            Cell::Int(small.tc.len() as i64),
            Cell::Num(cmp.greedy),
            Cell::Num(cmp.exhaustive),
            Cell::Check(cmp.ordered()),
            Cell::Int(i64::from(cmp.equal())),
            Cell::Int(big.tc.len() as i64),
            Cell::Check(suite.halving),
            Cell::Num(suite.c_alg),
            Cell::Check(suite.c_alg <= 16.0),
            Cell::Check(suite.disjoint),
            Cell::Check(suite.partition),
        ])
    });
    let eq = column(&rows, 5);
    t.note("equality_fraction", num(eq.iter().sum::<f64>() / eq.len().max(1) as f64));
    t.note("max_c_alg", num(max(&column(&rows, 8))));
    t.plot = Some(("tritiles".into(), "c_alg".into()));
    Ok(t)
}

fn model_sum_audit(cfg: &ExperimentConfig) -> Result<Table, RunError> {
    let (theta, dual) = check_exponents(cfg.exponents.triple)?;
    let cap = cfg.sweep.max_tritiles;
    let mut t = Table::new("model_sum_audit", &["trial", "tritiles", "model_sum", "bound", "ratio", "dominated"]);
    let rows = run_trials(&mut t, cfg.trials, cfg.seed, |i, s| {
        let inst = sparse_instance(s, cap)?;
        let c = TriCoefficients::new(&inst.f1, &inst.f2, &inst.f3, &inst.tc, &inst.bank)?;
        let all: Vec<usize> = (0..inst.tc.len()).collect();
        let ms = model_sum_from(&inst.tc, &all, &c.c1, &c.c2, &c.c3);
        let b = lambda_bound_from(&inst.tc, &c, theta, dual)?.bound;
        let ratio = if b > 0.0 { ms / b } else { 0.0 };
        Ok(vec![
            Cell::Int(i as i64),
            Cell::Int(inst.tc.len() as i64),
            Cell::Num(ms),
            Cell::Num(b),
            Cell::Num(ratio),
            Cell::Check(ms <= b * (1.0 + 1e-12)),
        ])
    });
    t.note("max_ratio", num(max(&column(&rows, 4))));
    t.note("triple", format!("{:?}", cfg.exponents.triple));
    t.note("exponents_dual", dual);
    t.plot = Some(("tritiles".into(), "ratio".into()));
    Ok(t)
}

fn lambda_bound_audit(cfg: &ExperimentConfig) -> Result<Table, RunError> {
    let (theta, dual) = check_exponents(cfg.exponents.triple)?;
    let cap = cfg.sweep.max_tritiles;
    let mut t = Table::new(
        "lambda_bound_audit",
        &["trial", "tritiles", "levels", "d0", "bound", "interpolated", "c_tree", "tree_estimate", "decrements", "remainder"],
    );
    let rows = run_trials(&mut t, cfg.trials, cfg.seed, |i, s| {
        let inst = sparse_instance(s, cap)?;
        let c = TriCoefficients::new(&inst.f1, &inst.f2, &inst.f3, &inst.tc, &inst.bank)?;
        let lb = lambda_bound_from(&inst.tc, &c, theta, dual)?;
        let r = &lb.report;
        let audits_ok = r.levels.iter().all(|l| l.audits.iter().all(|a| a.halving_ok && a.partition_ok));
        Ok(vec![
            Cell::Int(i as i64),
            Cell::Int(inst.tc.len() as i64),
            Cell::Int(r.levels.len() as i64),
            Cell::Int(r.d0.map_or(i64::MIN, i64::from)),
            Cell::Num(lb.bound),
            Cell::Num(r.interpolated),
            Cell::Num(r.c_tree),
            Cell::Check(r.tree_estimate_ok),
            Cell::Check(audits_ok),
            Cell::Int(r.remainder.len() as i64),
        ])
    });
    t.note("max_c_tree", num(max(&column(&rows, 6))));
    t.note("max_levels", num(max(&column(&rows, 2))));
    t.plot = Some(("tritiles".into(), "levels".into()));
    Ok(t)
}

/// Pseudo-pipeline measurements of one random directional symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoAudit {
    /// Direction angle.
    pub angle: f64,
    /// Populated buckets.
    pub buckets: usize,
    /// `Σ_k 2^{ks} #D_k / norm^s`.
    pub ratio: f64,
    /// Worst reconstruction error over random points.
    pub reconstruction: f64,
    /// Worst sample error of bucketed against direct evaluation.
    pub evaluation: f64,
    /// Worst relative duality residual of both adjoints.
    pub duality: f64,
    /// Worst angle-relation residual of both adjoints.
    pub angle_relation: f64,
}

/// Audits one random symbol `Σ_j a_j e^{-(λ - c_j)²/(2w_j²)}` on `grid`.
pub fn pseudo_audit(grid: GridSpec<f64>, s: f64, seed: u64) -> bilin_tf_core::Result<PseudoAudit> {
    let mut r = rng(seed);
    let angle = r.gen_range(0.0..std::f64::consts::PI);
    let ds = random_translate_series(angle, r.gen_range(2..=6), s, r.gen())?;
    let dec = unit_decompose(&ds)?;
    let lim = ds.window / std::f64::consts::SQRT_2;
    let mut reconstruction = 0.0f64;
    for _ in 0..2000 {
        let (xi, eta) = (r.gen_range(-lim..lim), r.gen_range(-lim..lim));
        reconstruction = reconstruction.max((reconstruct(&dec, 0.0, xi, eta) - ds.base.eval(0.0, xi, eta)).norm());
    }
    let half = grid.nyquist() / 2.0;
    let f = band(grid, -half, half, r.gen())?;
    let g = band(grid, -half, half, r.gen())?;
    let e = bilin_tf_core::grid::ExponentTriple::new(4.0, 4.0, 2.0)?;
    let (out, _) = evaluate_via_buckets(&f, &g, &ds, &e)?;
    let direct = bilinear_general(&f, &g, &ds.base)?;
    let evaluation = max_diff(&out, &direct);
    let third = grid.nyquist() / 3.0 - grid.freq_step();
    let (a, b, c) = (band(grid, -third, third, r.gen())?, band(grid, -third, third, r.gen())?, band(grid, -third, third, r.gen())?);
    let lhs = trilinear_pairing(&a, &b, &c, &ds.base)?;
    let (m1, map1) = adjoint_symbol(&ds.base, 1)?;
    let (m2, map2) = adjoint_symbol(&ds.base, 2)?;
    let r1 = trilinear_pairing(&c, &b, &a, &m1)?;
    let r2 = trilinear_pairing(&a, &c, &b, &m2)?;
    let scale = lhs.norm().max(1.0);
    let duality = ((lhs - r1).norm().max((lhs - r2).norm())) / scale;
    let rel = |m: AngleMap| m.relation_residual(ds.theta, m.line(ds.theta)).abs();
    Ok(PseudoAudit {
        angle,
        buckets: dec.buckets.len(),
        ratio: dec.ratio,
        reconstruction,
        evaluation,
        duality,
        angle_relation: rel(map1).max(rel(map2)),
    })
}

fn max_diff(a: &SampledFunction<f64>, b: &SampledFunction<f64>) -> f64 {
    a.samples().iter().zip(b.samples()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn pseudo_bucket(cfg: &ExperimentConfig) -> Result<Table, RunError> {
    let grid = cfg.grid_spec()?;
    let s = cfg.sweep.sobolev_s;
    let mut t = Table::new(
        "pseudo_bucket",
        &["trial", "angle", "buckets", "bucket_ratio", "ratio_le_4", "reconstruction", "recon_ok", "evaluation", "eval_ok", "duality", "dual_ok", "angle_relation", "angle_ok"],
    );
    let rows = run_trials(&mut t, cfg.trials, cfg.seed, |i, seed| {
        let a = pseudo_audit(grid, s, seed)?;
        Ok(vec![
            Cell::Int(i as i64),
            Cell::Num(a.angle),
            Cell::Int(a.buckets as i64),
            Cell::Num(a.ratio),
            Cell::Check(a.ratio <= 4.0),
            Cell::Num(a.reconstruction),
            Cell::Check(a.reconstruction <= 1e-12),
            Cell::Num(a.evaluation),
            Cell::Check(a.evaluation <= 1e-8),
            Cell::Num(a.duality),
            Cell::Check(a.duality <= 1e-10),
            Cell::Num(a.angle_relation),
            Cell::Check(a.angle_relation <= 1e-12),
        ])
    });
    t.note("max_bucket_ratio", num(max(&column(&rows, 3))));
    t.note("sobolev_s", num(s));
    t.plot = Some(("angle".into(), "bucket_ratio".into()));
    Ok(t)
}

fn translated_family(cfg: &ExperimentConfig) -> Result<Table, RunError> {
    let grid = cfg.grid_spec()?;
    let e = cfg.exponent_triple()?;
    let n = cfg.sweep.translates;
    let mut t = Table::new("translated_family", &["trial", "direct", "assembly", "dominated", "decay_exponent", "decay_ge_8"]);
    let rows = run_trials(&mut t, cfg.trials, cfg.seed, |i, s| {
        let half = grid.nyquist() / 2.0;
        let f = band(grid, -half, half, s)?;
        let g = band(grid, -half, half, s ^ 0x33)?;
        let rep = translated_family_bound(|d| (-d * d / 2.0).exp(), &f, &g, &e, -n..=n, PartitionBump::default())?;
        Ok(vec![
            Cell::Int(i as i64),
            Cell::Num(rep.direct),
            Cell::Num(rep.assembly),
            Cell::Check(rep.direct <= rep.assembly + 1e-10),
            Cell::Num(rep.decay_exponent),
            Cell::Check(rep.decay_exponent >= 8.0),
        ])
    });
    let ratios: Vec<f64> = rows.iter().map(|r| r[1].value() / r[2].value()).collect();
    t.note("max_direct_over_assembly", num(max(&ratios)));
    t.plot = Some(("direct".into(), "assembly".into()));
    Ok(t)
}

fn weak_type_estimate(cfg: &ExperimentConfig) -> Result<Table, RunError> {
    let p = cfg.exponents.triple;
    check_exponents(p)?;
    let cap = cfg.sweep.max_tritiles;
    let density = cfg.sweep.density;
    let mut t = Table::new("weak_type_estimate", &["trial", "tritiles", "measure_1", "measure_2", "measure_3", "constant"]);
    let rows = run_trials(&mut t, cfg.trials, cfg.seed, |i, s| {
        let inst = sparse_instance(s, cap)?;
        let grid = *inst.bank.grid();
        let sets: [MeasurableSet; 3] = std::array::from_fn(|k| MeasurableSet::random(grid, density, s ^ (k as u64 + 1) << 16));
        let est = estimate_weak_type(&inst.tc, &inst.bank, &sets, p, 4, s)?;
        Ok(vec![
            Cell::Int(i as i64),
            Cell::Int(inst.tc.len() as i64),
            Cell::Num(est.measures[0]),
            Cell::Num(est.measures[1]),
            Cell::Num(est.measures[2]),
            Cell::Num(est.constant),
        ])
    });
    t.note("constant", num(max(&column(&rows, 5))));
    t.note("density", num(density));
    t.plot = Some(("measure_3".into(), "constant".into()));
    Ok(t)
}

/// Packet invariants and off-diagonal decay of one random tile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketAudit {
    /// The tile.
    pub tile: Tile,
    /// Spectrum leakage outside `0.9ω`, relative to the peak.
    pub leakage: f64,
    /// `‖Φ‖₂`.
    pub norm: f64,
    /// Fitted spatial decay exponent.
    pub decay: f64,
    /// Fitted decay exponent of `|⟨Φ_P, Φ_{P + k|I|}⟩|` in `k`.
    pub offdiag: f64,
    /// `|⟨Φ_P, Φ_{P + |I|}⟩|`.
    pub neighbor: f64,
}

/// Random tile with `|I| = L/4096`, `|I||ω| ∈ [1/2, 2]` and center inside
/// half the Nyquist band, audited on `grid`.
pub fn packet_audit(grid: GridSpec<f64>, seed: u64) -> bilin_tf_core::Result<PacketAudit> {
    let mut r = rng(seed);
    let len = grid.period() / 4096.0;
    let x0 = len * r.gen_range(0..4000) as f64;
    let w = r.gen_range(0.5..2.0) / len;
    let half = grid.nyquist() / 2.0;
    let c = r.gen_range(-half..half);
    let tile = Tile::new(Interval::from_endpoints(x0, x0 + len)?, Interval::new(c, w)?)?;
    let p = make_wave_packet(&tile, grid)?;
    let mut bank = PacketBank::new(grid);
    bank.insert(&tile)?;
    let base: Vec<(i64, C64)> = bank.spectrum(&tile)?.to_vec();
    let (mut us, mut env) = (Vec::new(), Vec::new());
    for k in 1..=24 {
        let other = Tile::new(tile.space.shift(k as f64 * len), tile.freq)?;
        bank.insert(&other)?;
        let spec = bank.spectrum(&other)?;
        let ip: C64 = base.iter().zip(spec).map(|(a, b)| a.1 * b.1.conj()).sum::<C64>() / grid.period();
        us.push(k as f64);
        env.push(ip.norm());
    }
    Ok(PacketAudit {
        tile,
        leakage: p.leakage,
        norm: p.norm,
        decay: p.decay_exponent_measured,
        offdiag: fit_decay_exponent(&us, &env, 1e-14),
        neighbor: env[0],
    })
}

fn offdiag_decay(cfg: &ExperimentConfig) -> Result<Table, RunError> {
    let grid = cfg.grid_spec()?;
    let mut t = Table::new(
        "offdiag_decay",
        &["trial", "space_length", "freq_center", "freq_length", "leakage", "leakage_ok", "norm", "norm_ok", "decay", "decay_ge_8", "offdiag_exponent", "neighbor"],
    );
    let rows = run_trials(&mut t, cfg.trials, cfg.seed, |i, s| {
        let a = packet_audit(grid, s)?;
        Ok(vec![
            Cell::Int(i as i64),
            Cell::Num(a.tile.space.length()),
            Cell::Num(a.tile.freq.center()),
            Cell::Num(a.tile.freq.length()),
            Cell::Num(a.leakage),
            Cell::Check(a.leakage <= 1e-13),
            Cell::Num(a.norm),
            Cell::Check((0.99..=1.01).contains(&a.norm)),
            Cell::Num(a.decay),
            Cell::Check(a.decay >= 8.0),
            Cell::Num(a.offdiag),
            Cell::Num(a.neighbor),
        ])
    });
    t.note("min_decay", num(column(&rows, 8).into_iter().fold(f64::INFINITY, f64::min)));
    t.note("max_leakage", num(max(&column(&rows, 4))));
    t.plot = Some(("freq_center".into(), "offdiag_exponent".into()));
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(e: Experiment) -> ExperimentConfig {
        let mut c = ExperimentConfig::defaults(e);
        c.trials = 2;
        c.sweep.sizes = vec![4, 8];
        c.sweep.max_tritiles = 60;
        c
    }

    #[test]
    fn every_experiment_runs_clean() {
        for e in Experiment::ALL {
            let t = run(&small(e)).unwrap();
            assert!(!t.rows.is_empty(), "{e}");
            assert!(!t.flagged(), "{e}: {}", t.to_csv());
        }
    }

    #[test]
    fn reruns_are_byte_identical() {
        for e in [Experiment::PlancherelCheck, Experiment::BilinearSweep, Experiment::EnergyAlgoAudit] {
            let c = small(e);
            assert_eq!(run(&c).unwrap().to_csv(), run(&c).unwrap().to_csv());
        }
    }

    #[test]
    fn failing_trial_becomes_flagged_row() {
        let mut t = Table::new("x", &["trial", "v"]);
        let rows = run_trials(&mut t, 3, 0, |i, _| {
            if i == 1 {
                Err(Error::Divergence("boom".into()))
            } else {
                Ok(vec![Cell::Int(i as i64), Cell::Num(1.0)])
            }
        });
        assert_eq!(rows.len(), 2);
        assert!(t.rows[1].flagged && !t.rows[0].flagged);
        assert_eq!(t.rows[1].values, vec!["1", "NaN"]);
        assert!(t.summary.iter().any(|(k, v)| k == "trial_1_error" && v.contains("boom")));
    }

    #[test]
    fn drift_classes() {
        assert_eq!(drift_of(&[1.0, 1.5]).1, Drift::Stable);
        assert_eq!(drift_of(&[1.0, 3.0]).1, Drift::Report);
        assert_eq!(drift_of(&[1.0, 4.0]).1, Drift::Fail);
    }

    #[test]
    fn run_writes_csv_and_plot() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small(Experiment::PlancherelCheck);
        c.output_path = dir.path().to_string_lossy().into_owned();
        let out = run_experiment(&c, true).unwrap();
        assert_eq!(out.exit_code(), 0);
        let text = std::fs::read_to_string(&out.csv).unwrap();
        assert!(text.starts_with("# bilin-tf v0.1.0 plancherel_check\n"));
        let svg = std::fs::read_to_string(out.svg.unwrap()).unwrap();
        assert_eq!(svg.matches("<circle").count(), 2);
    }

    #[test]
    fn config_error_exit_code() {
        let mut c = small(Experiment::BilinearSweep);
        c.trials = 0;
        assert_eq!(run(&c).unwrap_err().exit_code(), 2);
    }
}
