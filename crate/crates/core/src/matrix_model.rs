//! Hermitian one-matrix models.
//!
//! The measure is  dμ(M) ∝ exp(N · Tr S(M)) dM  over N×N Hermitian matrices
//! with polynomial action S(M) = Σ_p g_p M^p.  The Gaussian case S(M) =
//! −M²/2 has the exact covariance
//!
//! ```text
//! ⟨M_ij M_kl⟩ = δ_il δ_jk / N,
//! ```
//!
//! and higher Gaussian moments follow by Wick pairing.  The module provides
//! exact Wick moments (rational arithmetic), two Metropolis samplers (full
//! matrix entries, and the eigenvalue gas with the Vandermonde log-repulsion),
//! the large-N saddle-point equation
//!
//! ```text
//! S'(x_k) + (1/N) Σ_{j≠k} 1/(x_k − x_j) = 0,
//! ```
//!
//! and the bridge into the states layer: a moment table induces a state on
//! constant test functions by contracting factor values against the moments.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::Zero;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::space::SampledSpace;
use crate::states::{StateFunctional, WightmanData};

/// How a sampler proposes updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    /// Metropolis over single Hermitian matrix entries.
    FullMatrix,
    /// Metropolis over the eigenvalue gas (Vandermonde-weighted).
    Eigenvalue,
}

/// Step-size and warmup settings for the Metropolis chains.
///
/// During warmup the step is retuned every 200 proposals toward a 20–50 %
/// acceptance window and then frozen, so a fixed seed yields byte-identical
/// chains.
#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    pub step: f64,
    /// Warmup sweeps discarded before measurement.
    pub warmup: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            kind: SamplerKind::FullMatrix,
            step: 0.6,
            warmup: 2_000,
        }
    }
}

/// A one-matrix model: size, polynomial couplings g_p (power → coefficient),
/// master seed, and sampler settings.
#[derive(Debug, Clone)]
pub struct MatrixModelSpec {
    pub n: usize,
    pub couplings: BTreeMap<u32, f64>,
    pub seed: u64,
    pub sampler: SamplerConfig,
}

impl MatrixModelSpec {
    /// The Gaussian model S(M) = −M²/2.
    pub fn gaussian(n: usize, seed: u64) -> Self {
        let mut couplings = BTreeMap::new();
        couplings.insert(2, -0.5);
        Self {
            n,
            couplings,
            seed,
            sampler: SamplerConfig::default(),
        }
    }

    /// Checks that the weight exp(N Tr S) is normalizable: the highest
    /// nonzero power must be even with a negative coefficient.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Invalid("matrix size N must be at least 1".into()));
        }
        let highest = self
            .couplings
            .iter()
            .filter(|(_, &g)| g != 0.0)
            .map(|(&p, _)| p)
            .max()
            .ok_or_else(|| Error::NonNormalizableAction("no nonzero couplings".into()))?;
        if highest == 0 {
            return Err(Error::Invalid("couplings must have power >= 1".into()));
        }
        if self.couplings.keys().any(|&p| p == 0) {
            return Err(Error::Invalid("couplings must have power >= 1".into()));
        }
        let g = self.couplings[&highest];
        if highest % 2 != 0 || g >= 0.0 {
            return Err(Error::NonNormalizableAction(format!(
                "leading term g_{highest} x^{highest} with g_{highest} = {g} is unbounded above"
            )));
        }
        Ok(())
    }

    /// True when only even powers appear, so odd moments vanish identically.
    pub fn even_action(&self) -> bool {
        self.couplings
            .iter()
            .all(|(&p, &g)| g == 0.0 || p % 2 == 0)
    }

    fn s_value(&self, x: f64) -> f64 {
        self.couplings
            .iter()
            .map(|(&p, &g)| g * x.powi(p as i32))
            .sum()
    }

    fn s_deriv(&self, x: f64) -> f64 {
        self.couplings
            .iter()
            .map(|(&p, &g)| g * p as f64 * x.powi(p as i32 - 1))
            .sum()
    }

    fn s_second_deriv(&self, x: f64) -> f64 {
        self.couplings
            .iter()
            .map(|(&p, &g)| {
                if p < 2 {
                    0.0
                } else {
                    g * (p * (p - 1)) as f64 * x.powi(p as i32 - 2)
                }
            })
            .sum()
    }

    /// Re Tr S(M) by explicit matrix powers.
    fn trace_action(&self, m: &DMatrix<Complex64>) -> f64 {
        let max_p = self.couplings.keys().copied().max().unwrap_or(0) as usize;
        let mut acc = 0.0;
        let mut power = DMatrix::identity(self.n, self.n);
        for p in 1..=max_p {
            power *= m;
            if let Some(&g) = self.couplings.get(&(p as u32)) {
                acc += g * power.trace().re;
            }
        }
        acc
    }
}

/// How a moment table was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentMethod {
    WickExact,
    MonteCarlo,
}

/// One moment estimate ⟨Π_t M_{i_t j_t}⟩.
#[derive(Debug, Clone, Copy)]
pub struct MomentEntry {
    pub value: Complex64,
    pub stderr: f64,
    pub n_samples: u64,
}

/// A table of entry moments keyed by index-pair lists (0-based indices).
///
/// Wick-exact tables are total: any missing entry is computed on demand from
/// the pairing formula.  Monte-Carlo tables answer only what they store,
/// except that odd-arity requests return 0 (flagged) when the action is even.
#[derive(Debug, Clone)]
pub struct MomentTable {
    pub n: usize,
    pub method: MomentMethod,
    entries: BTreeMap<Vec<(usize, usize)>, MomentEntry>,
    /// Odd moments vanish by symmetry (even action).
    pub odd_vanish: bool,
    /// Diagnostics accumulated while building (e.g. equilibration flags).
    pub warnings: Vec<String>,
}

impl MomentTable {
    pub fn new(n: usize, method: MomentMethod, odd_vanish: bool) -> Self {
        Self {
            n,
            method,
            entries: BTreeMap::new(),
            odd_vanish,
            warnings: Vec::new(),
        }
    }

    pub fn insert(&mut self, indices: Vec<(usize, usize)>, entry: MomentEntry) -> Result<()> {
        for &(i, j) in &indices {
            if i >= self.n || j >= self.n {
                return Err(Error::IndexOutOfRange(format!(
                    "entry index ({i},{j}) for an N = {} model",
                    self.n
                )));
            }
        }
        self.entries.insert(indices, entry);
        Ok(())
    }

    pub fn get(&self, indices: &[(usize, usize)]) -> Option<&MomentEntry> {
        self.entries.get(indices)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Vec<(usize, usize)>, &MomentEntry)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The moment for an index list, resolving Wick-exact tables on demand.
    pub fn moment(&self, indices: &[(usize, usize)]) -> Result<Complex64> {
        if let Some(e) = self.entries.get(indices) {
            return Ok(e.value);
        }
        if indices.len() % 2 == 1 && self.odd_vanish {
            return Ok(Complex64::zero());
        }
        match self.method {
            MomentMethod::WickExact => {
                let r = gaussian_moment_wick(self.n, indices)?;
                Ok(Complex64::new(
                    *r.numer() as f64 / *r.denom() as f64,
                    0.0,
                ))
            }
            MomentMethod::MonteCarlo => Err(Error::MissingMoments(format!(
                "no sampled entry for {indices:?}"
            ))),
        }
    }
}

/// Where a matrix-model state takes its moments from.
#[derive(Debug, Clone)]
pub enum MomentSource {
    /// Exact Gaussian Wick pairing for an N×N model (total, any degree).
    Wick { n: usize },
    /// A stored table (typically Monte-Carlo estimates).
    Table(MomentTable),
}

impl MomentSource {
    pub fn n(&self) -> usize {
        match self {
            MomentSource::Wick { n } => *n,
            MomentSource::Table(t) => t.n,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            MomentSource::Wick { n } => format!("wick-exact gaussian, N = {n}"),
            MomentSource::Table(t) => format!(
                "{} table, N = {}, {} entries",
                match t.method {
                    MomentMethod::WickExact => "wick-exact",
                    MomentMethod::MonteCarlo => "monte-carlo",
                },
                t.n,
                t.len()
            ),
        }
    }
}

/// Exact Gaussian moment ⟨M_{i_1 j_1} ··· M_{i_m j_m}⟩ as a rational.
///
/// Odd arity returns 0 (the flagged odd-moment convention).  Even arity sums
/// over perfect matchings; a pair ((a,b),(c,d)) contributes δ_ad δ_bc / N.
pub fn gaussian_moment_wick(n: usize, indices: &[(usize, usize)]) -> Result<Rational64> {
    for &(i, j) in indices {
        if i >= n || j >= n {
            return Err(Error::IndexOutOfRange(format!(
                "entry index ({i},{j}) for an N = {n} model"
            )));
        }
    }
    if indices.len() % 2 == 1 {
        return Ok(Rational64::zero());
    }
    let m = indices.len() / 2;
    let matched = count_delta_matchings(indices, &mut vec![false; indices.len()]);
    Ok(Rational64::new(matched, (n as i64).pow(m as u32)))
}

/// Recursive matching count: pair the first unused slot with every later
/// unused slot whose deltas close.
fn count_delta_matchings(indices: &[(usize, usize)], used: &mut Vec<bool>) -> i64 {
    let first = match used.iter().position(|&u| !u) {
        Some(f) => f,
        None => return 1,
    };
    let (a, b) = indices[first];
    used[first] = true;
    let mut total = 0;
    for t in (first + 1)..indices.len() {
        if used[t] {
            continue;
        }
        let (c, d) = indices[t];
        if a == d && b == c {
            used[t] = true;
            total += count_delta_matchings(indices, used);
            used[t] = false;
        }
    }
    used[first] = false;
    total
}

/// Dense Wick-exact table for the given (even) degrees — useful for export;
/// evaluation prefers the on-demand path.
pub fn gaussian_moment_table(n: usize, degrees: &[usize]) -> Result<MomentTable> {
    let mut table = MomentTable::new(n, MomentMethod::WickExact, true);
    for &d in degrees {
        if d % 2 == 1 {
            continue; // odd moments vanish; keep the table sparse
        }
        let slots = n * n;
        let combos = slots.pow(d as u32);
        for flat in 0..combos {
            let mut rest = flat;
            let mut idx = Vec::with_capacity(d);
            for _ in 0..d {
                let s = rest % slots;
                rest /= slots;
                idx.push((s / n, s % n));
            }
            let r = gaussian_moment_wick(n, &idx)?;
            let value = Complex64::new(*r.numer() as f64 / *r.denom() as f64, 0.0);
            table.insert(
                idx,
                MomentEntry {
                    value,
                    stderr: 0.0,
                    n_samples: 0,
                },
            )?;
        }
    }
    Ok(table)
}

/// Contracts constant factor values against the moment source:
/// Σ_{I_1..I_m} (A_1)_{I_1} ··· (A_m)_{I_m} K_{I_1..I_m}.
///
/// For the Wick source this collapses to Σ_{matchings} Π_pairs Tr(A_s A_t)/N.
pub(crate) fn contract_moments(
    source: &MomentSource,
    factors: &[&DMatrix<Complex64>],
) -> Result<Complex64> {
    let n = source.n();
    match source {
        MomentSource::Wick { .. } => {
            if factors.len() % 2 == 1 {
                return Ok(Complex64::zero());
            }
            Ok(wick_contract(factors, &mut vec![false; factors.len()], n))
        }
        MomentSource::Table(table) => {
            let slots = n * n;
            let m = factors.len();
            let combos = slots.pow(m as u32);
            let mut acc = Complex64::zero();
            for flat in 0..combos {
                let mut rest = flat;
                let mut idx = Vec::with_capacity(m);
                let mut weight = Complex64::new(1.0, 0.0);
                for a in factors {
                    let s = rest % slots;
                    rest /= slots;
                    let (i, j) = (s / n, s % n);
                    idx.push((i, j));
                    weight *= a[(i, j)];
                }
                if weight.norm() == 0.0 {
                    continue;
                }
                acc += weight * table.moment(&idx)?;
            }
            Ok(acc)
        }
    }
}

fn wick_contract(factors: &[&DMatrix<Complex64>], used: &mut Vec<bool>, n: usize) -> Complex64 {
    let first = match used.iter().position(|&u| !u) {
        Some(f) => f,
        None => return Complex64::new(1.0, 0.0),
    };
    used[first] = true;
    let mut total = Complex64::zero();
    for t in (first + 1)..factors.len() {
        if used[t] {
            continue;
        }
        used[t] = true;
        let pair = (factors[first] * factors[t]).trace() / n as f64;
        total += pair * wick_contract(factors, used, n);
        used[t] = false;
    }
    used[first] = false;
    total
}

/// Builds a state from a stored moment table: the target size is k = N and
/// evaluation follows the constant-factor contraction (nonconstant inputs
/// evaluate to zero).
pub fn matrix_state_from_model(
    spec: &MatrixModelSpec,
    moments: &MomentTable,
    space: Arc<SampledSpace>,
) -> Result<StateFunctional> {
    spec.validate()?;
    if moments.n != spec.n {
        return Err(Error::Invalid(format!(
            "moment table is for N = {} but the model has N = {}",
            moments.n, spec.n
        )));
    }
    StateFunctional::new(
        space,
        spec.n,
        WightmanData::MatrixModel(MomentSource::Table(moments.clone())),
        None,
    )
}

/// The exact Gaussian matrix-model state (Wick moments, any degree).
pub fn gaussian_matrix_state(n: usize, space: Arc<SampledSpace>) -> Result<StateFunctional> {
    if n == 0 {
        return Err(Error::Invalid("matrix size N must be at least 1".into()));
    }
    StateFunctional::new(
        space,
        n,
        WightmanData::MatrixModel(MomentSource::Wick { n }),
        None,
    )
}

// ---------------------------------------------------------------------------
// Monte-Carlo samplers
// ---------------------------------------------------------------------------

const TUNE_INTERVAL: usize = 200;
const TUNE_LO: f64 = 0.20;
const TUNE_HI: f64 = 0.50;

struct StepTuner {
    step: f64,
    proposals: usize,
    accepted: usize,
    frozen: bool,
}

impl StepTuner {
    fn new(step: f64) -> Self {
        Self {
            step,
            proposals: 0,
            accepted: 0,
            frozen: false,
        }
    }

    fn record(&mut self, accepted: bool) {
        if self.frozen {
            return;
        }
        self.proposals += 1;
        if accepted {
            self.accepted += 1;
        }
        if self.proposals == TUNE_INTERVAL {
            let rate = self.accepted as f64 / self.proposals as f64;
            if rate < TUNE_LO {
                self.step *= 0.8;
            } else if rate > TUNE_HI {
                self.step *= 1.25;
            }
            self.proposals = 0;
            self.accepted = 0;
        }
    }
}

/// Estimates entry moments by Metropolis over Hermitian matrices.
///
/// Each sample is one sweep (N² single-entry updates).  Standard errors come
/// from 50 batch means; the table is flagged `ChainNotEquilibrated` when the
/// first- and second-half means disagree by more than 5σ.
pub fn mc_moments(
    spec: &MatrixModelSpec,
    index_lists: &[Vec<(usize, usize)>],
    samples: usize,
) -> Result<MomentTable> {
    spec.validate()?;
    if samples < 1000 {
        return Err(Error::Invalid(format!(
            "need at least 1000 samples for batch-means errors, got {samples}"
        )));
    }
    for list in index_lists {
        if list.is_empty() {
            return Err(Error::Invalid("empty index list".into()));
        }
        for &(i, j) in list {
            if i >= spec.n || j >= spec.n {
                return Err(Error::IndexOutOfRange(format!(
                    "entry index ({i},{j}) for an N = {} model",
                    spec.n
                )));
            }
        }
    }
    let n = spec.n;
    let gaussian_fast = spec.couplings.len() == 1 && spec.couplings.contains_key(&2);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut m: DMatrix<Complex64> = DMatrix::zeros(n, n);
    let mut log_weight = n as f64 * spec.trace_action(&m);
    let mut tuner = StepTuner::new(spec.sampler.step);

    let sweep = |m: &mut DMatrix<Complex64>,
                 log_weight: &mut f64,
                 rng: &mut ChaCha8Rng,
                 tuner: &mut StepTuner| {
        for _ in 0..n * n {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            let (i, j) = if i <= j { (i, j) } else { (j, i) };
            let old_ij = m[(i, j)];
            let old_ji = m[(j, i)];
            let delta = if i == j {
                Complex64::new(tuner.step * rng.sample::<f64, _>(StandardNormal), 0.0)
            } else {
                Complex64::new(
                    tuner.step * rng.sample::<f64, _>(StandardNormal) / std::f64::consts::SQRT_2,
                    tuner.step * rng.sample::<f64, _>(StandardNormal) / std::f64::consts::SQRT_2,
                )
            };
            let new_ij = old_ij + delta;
            let new_log_weight = if gaussian_fast {
                // Tr M² = Σ |M_ab|²; only the touched entries change.
                let g = spec.couplings[&2];
                let old_contrib = if i == j {
                    old_ij.norm_sqr()
                } else {
                    2.0 * old_ij.norm_sqr()
                };
                let new_contrib = if i == j {
                    new_ij.norm_sqr()
                } else {
                    2.0 * new_ij.norm_sqr()
                };
                *log_weight + n as f64 * g * (new_contrib - old_contrib)
            } else {
                m[(i, j)] = new_ij;
                m[(j, i)] = new_ij.conj();
                let w = n as f64 * spec.trace_action(m);
                m[(i, j)] = old_ij;
                m[(j, i)] = old_ji;
                w
            };
            let accept = {
                let lnu: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE).ln();
                lnu < new_log_weight - *log_weight
            };
            if accept {
                m[(i, j)] = new_ij;
                m[(j, i)] = new_ij.conj();
                *log_weight = new_log_weight;
            }
            tuner.record(accept);
        }
    };

    for _ in 0..spec.sampler.warmup {
        sweep(&mut m, &mut log_weight, &mut rng, &mut tuner);
    }
    tuner.frozen = true;

    let n_batches = 50usize;
    let batch_len = samples / n_batches;
    let mut batch_means: Vec<Vec<Complex64>> = vec![Vec::new(); index_lists.len()];
    let mut current: Vec<Complex64> = vec![Complex64::zero(); index_lists.len()];
    let mut in_batch = 0usize;
    let mut measured = 0usize;
    while measured < batch_len * n_batches {
        sweep(&mut m, &mut log_weight, &mut rng, &mut tuner);
        for (slot, list) in index_lists.iter().enumerate() {
            let mut prod = Complex64::new(1.0, 0.0);
            for &(i, j) in list {
                prod *= m[(i, j)];
            }
            current[slot] += prod;
        }
        in_batch += 1;
        measured += 1;
        if in_batch == batch_len {
            for (slot, acc) in current.iter_mut().enumerate() {
                batch_means[slot].push(*acc / batch_len as f64);
                *acc = Complex64::zero();
            }
            in_batch = 0;
        }
    }

    let mut table = MomentTable::new(n, MomentMethod::MonteCarlo, spec.even_action());
    for (slot, list) in index_lists.iter().enumerate() {
        let means = &batch_means[slot];
        let b = means.len() as f64;
        let mean: Complex64 = means.iter().sum::<Complex64>() / b;
        let var: f64 = means.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / (b - 1.0);
        let stderr = (var / b).sqrt();
        // Equilibration: first half vs second half of the batch means.
        let half = means.len() / 2;
        let first: Complex64 = means[..half].iter().sum::<Complex64>() / half as f64;
        let second: Complex64 = means[half..].iter().sum::<Complex64>() / (means.len() - half) as f64;
        if stderr > 0.0 && (first - second).norm() > 5.0 * stderr * std::f64::consts::SQRT_2 {
            table.warnings.push(format!(
                "ChainNotEquilibrated: half-means differ by {:.3e} (> 5 sigma) for {list:?}",
                (first - second).norm()
            ));
        }
        table.insert(
            list.clone(),
            MomentEntry {
                value: mean,
                stderr,
                n_samples: (batch_len * n_batches) as u64,
            },
        )?;
    }
    Ok(table)
}

/// Eigenvalue-gas samples plus a normalized histogram of all retained draws.
#[derive(Debug, Clone)]
pub struct EigenvalueSamples {
    /// Thinned chain states, one Vec<f64> of length N per retained sweep.
    pub chains: Vec<Vec<f64>>,
    pub histogram: Histogram,
    /// Post-warmup acceptance rate.
    pub acceptance: f64,
}

/// A normalized histogram: Σ density·bin_width = 1.
#[derive(Debug, Clone)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub density: Vec<f64>,
}

impl Histogram {
    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.density.len() as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        let w = self.bin_width();
        (0..self.density.len())
            .map(|i| self.lo + (i as f64 + 0.5) * w)
            .collect()
    }

    fn from_values(values: &[f64], bins: usize) -> Self {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min) - 0.25;
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 0.25;
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0usize; bins];
        for &v in values {
            let b = (((v - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        let norm = values.len() as f64 * width;
        Histogram {
            lo,
            hi,
            density: counts.iter().map(|&c| c as f64 / norm).collect(),
        }
    }
}

/// Samples the eigenvalue gas with log-weight
/// 2 Σ_{i<j} log|x_i − x_j| + N Σ_k S(x_k).
///
/// `samples` counts measurement sweeps (one proposal per coordinate each).
pub fn eigenvalue_sample(spec: &MatrixModelSpec, samples: usize) -> Result<EigenvalueSamples> {
    spec.validate()?;
    if samples == 0 {
        return Err(Error::Invalid("need at least one sample".into()));
    }
    let n = spec.n;
    // Seed offset keeps this chain decoupled from the full-matrix chain of
    // the same spec.
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x9E37_79B9_7F4A_7C15);
    // Spread initial positions; coincident points have log-weight −∞.
    let mut x: Vec<f64> = (0..n)
        .map(|i| -1.0 + 2.0 * (i as f64 + 0.5) / n as f64)
        .collect();
    let mut tuner = StepTuner::new(spec.sampler.step / (n as f64).sqrt().max(1.0));
    let log_weight_delta = |x: &[f64], k: usize, new_xk: f64| -> f64 {
        let mut delta = spec.n as f64 * (spec.s_value(new_xk) - spec.s_value(x[k]));
        for (j, &xj) in x.iter().enumerate() {
            if j == k {
                continue;
            }
            let new_gap = (new_xk - xj).abs();
            let old_gap = (x[k] - xj).abs();
            if new_gap == 0.0 {
                return f64::NEG_INFINITY;
            }
            delta += 2.0 * (new_gap.ln() - old_gap.ln());
        }
        delta
    };
    let mut accepted = 0usize;
    let mut proposals = 0usize;
    let run_sweep = |x: &mut Vec<f64>,
                     rng: &mut ChaCha8Rng,
                     tuner: &mut StepTuner,
                     accepted: &mut usize,
                     proposals: &mut usize,
                     count: bool| {
        for k in 0..n {
            let new_xk = x[k] + tuner.step * rng.sample::<f64, _>(StandardNormal);
            let delta = log_weight_delta(x, k, new_xk);
            let lnu: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE).ln();
            let accept = lnu < delta;
            if accept {
                x[k] = new_xk;
            }
            tuner.record(accept);
            if count {
                *proposals += 1;
                if accept {
                    *accepted += 1;
                }
            }
        }
    };
    for _ in 0..spec.sampler.warmup {
        run_sweep(&mut x, &mut rng, &mut tuner, &mut accepted, &mut proposals, false);
    }
    tuner.frozen = true;
    let thin = 4usize;
    let mut chains = Vec::with_capacity(samples / thin + 1);
    let mut all_values = Vec::with_capacity(n * (samples / thin + 1));
    for s in 0..samples {
        run_sweep(&mut x, &mut rng, &mut tuner, &mut accepted, &mut proposals, true);
        if s % thin == 0 {
            chains.push(x.clone());
            all_values.extend_from_slice(&x);
        }
    }
    let histogram = Histogram::from_values(&all_values, 60);
    Ok(EigenvalueSamples {
        chains,
        histogram,
        acceptance: accepted as f64 / proposals.max(1) as f64,
    })
}

// ---------------------------------------------------------------------------
// Saddle points
// ---------------------------------------------------------------------------

/// Residual of the saddle equation at configuration x:
/// r_k = S'(x_k) + (1/N) Σ_{j≠k} 1/(x_k − x_j).
pub fn saddle_residual(spec: &MatrixModelSpec, x: &[f64]) -> Result<Vec<f64>> {
    spec.validate()?;
    if x.len() != spec.n {
        return Err(Error::Invalid(format!(
            "{} positions for an N = {} model",
            x.len(),
            spec.n
        )));
    }
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            if x[i] == x[j] {
                return Err(Error::CoincidentEigenvalues(i, j));
            }
        }
    }
    let n = spec.n as f64;
    Ok((0..x.len())
        .map(|k| {
            let repulsion: f64 = x
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, &xj)| 1.0 / (x[k] - xj))
                .sum();
            spec.s_deriv(x[k]) + repulsion / n
        })
        .collect())
}

/// Result of the damped-Newton saddle solve: best iterate, residual, and
/// whether the tolerance was met.  Non-convergence is reported, not raised.
#[derive(Debug, Clone)]
pub struct SaddleSolution {
    pub x: Vec<f64>,
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Damped Newton iteration on the saddle equation from `init` (distinct
/// entries required).
pub fn solve_saddle(
    spec: &MatrixModelSpec,
    init: &[f64],
    max_iter: usize,
    tol: f64,
) -> Result<SaddleSolution> {
    let mut x = init.to_vec();
    let mut r = saddle_residual(spec, &x)?;
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut rnorm = norm(&r);
    let n = spec.n;
    for it in 0..max_iter {
        if rnorm <= tol {
            return Ok(SaddleSolution {
                x,
                residual_norm: rnorm,
                converged: true,
                iterations: it,
            });
        }
        // Jacobian: J_kl = S''(x_k) δ_kl − (1/N) Σ_{j≠k} (δ_kl − δ_jl)/(x_k−x_j)².
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            let mut diag = spec.s_second_deriv(x[k]);
            for j in 0..n {
                if j == k {
                    continue;
                }
                let inv_sq = 1.0 / ((x[k] - x[j]) * (x[k] - x[j]));
                diag -= inv_sq / n as f64;
                jac[(k, j)] = inv_sq / n as f64;
            }
            jac[(k, k)] = diag;
        }
        let rhs = DVector::from_vec(r.iter().map(|v| -v).collect::<Vec<f64>>());
        let step = match jac.lu().solve(&rhs) {
            Some(s) => s,
            None => break, // singular Jacobian: report the best iterate
        };
        // Backtracking: halve until the residual actually drops.
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let trial: Vec<f64> = (0..n).map(|k| x[k] + lambda * step[k]).collect();
            let distinct = {
                let mut ok = true;
                'outer: for i in 0..n {
                    for j in (i + 1)..n {
                        if trial[i] == trial[j] {
                            ok = false;
                            break 'outer;
                        }
                    }
                }
                ok
            };
            if distinct {
                if let Ok(tr) = saddle_residual(spec, &trial) {
                    let tnorm = norm(&tr);
                    if tnorm < rnorm {
                        x = trial;
                        r = tr;
                        rnorm = tnorm;
                        improved = true;
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    let converged = rnorm <= tol;
    Ok(SaddleSolution {
        iterations: max_iter,
        residual_norm: rnorm,
        converged,
        x,
    })
}
