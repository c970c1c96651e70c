//! State functionals ω = t ∘ Ω_W on the sampled Borchers algebra.
//!
//! A Wightman family W = (W_n) pairs the ι-image of a degree-n monomial with
//! a kernel over n grid points; composing with the normalized trace
//! t = tr(·)/k on the k×k target yields a linear functional with ω(𝟙) = 1.
//!
//! Data kinds:
//!
//! * `Constant(α)` — W_n = α_n · Id, so pairing integrates each factor and
//!   takes the traced product:  ω(f_1⊗..⊗f_n) = α_n t(F_1 ··· F_n) with
//!   F_t = ∫ f_t.  On a sesquilinear pair this is Σ_k α_k Σ_{n+m=k}
//!   ⟨F_n, G_m⟩_HS, the constant-data inner product.
//! * `Ultralocal` — W_{2m}(x_1..x_{2m}) = Π_{i=1..m} δ(x_{m+i} − x_{m+1−i})·Id
//!   (the order-reversing pairing: slot j meets slot 2m+1−j), odd degrees
//!   vanish.
//! * `Tabulated` — explicit kernels per degree, one k×k matrix per grid
//!   tuple.
//! * `MatrixModel` — positions are ignored: constant factors contract
//!   against entry moments of a Hermitian matrix model, nonconstant factors
//!   evaluate to 0.
//!
//! Two trace modes resolve a genuine ambiguity in how W_n meets a monomial:
//! `ProductTrace` forms the single k×k product f_n(x⃗)·W_n(x⃗) and takes one
//! trace; `TensorTrace` pairs factor slots through the Hilbert-Schmidt
//! tensor pairing ⟨A⊗B, C⊗D⟩ = Tr(A*C)·Tr(B*D).  Only the Ultralocal kind
//! carries slot structure, so the modes differ exactly there (and Tensor is
//! its default); for the other kinds W_n is a single kernel and the modes
//! coincide by definition.

pub mod checks;

use std::collections::BTreeMap;
use std::sync::Arc;

use itertools::Itertools;
use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::Zero;

use crate::algebra::{same_space, BorchersElement, Term, DEFAULT_DEGREE_CAP};
use crate::error::{Error, Result};
use crate::matrix_model::{contract_moments, MomentSource};
use crate::space::SampledSpace;

pub use checks::{
    check_hssc, check_krein, check_locality, check_positivity, check_translation_invariance,
    AlphaMap, HsscReport, KreinReport, LocalityReport, PositivityReport, SeminormKind,
    SeminormSpec, TranslationReport,
};

/// Tolerance for the ω(𝟙) = 1 normalization check at construction.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Entrywise tolerance for deciding that a matrix-model factor is constant
/// over the grid.
pub const CONSTANT_FACTOR_TOL: f64 = 1e-14;

/// How a Wightman kernel meets the factors of a monomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceMode {
    /// Single k×k product with W_n, one (normalized) trace.
    Product,
    /// Slot-wise Hilbert-Schmidt pairing; differs from `Product` only for
    /// kernels with tensor structure (the Ultralocal kind).
    Tensor,
}

/// Per-degree kernels for the Tabulated kind: degree n maps to M^n matrices
/// in row-major tuple order (index = Σ_t i_t · M^{n−1−t}).
#[derive(Debug, Clone)]
pub struct TabulatedData {
    tables: BTreeMap<usize, Vec<DMatrix<Complex64>>>,
}

impl TabulatedData {
    /// Validates table shapes against a space and target size.  A missing
    /// degree-0 table defaults to the identity (so ω(𝟙) = 1).
    pub fn new(
        space: &SampledSpace,
        k: usize,
        mut tables: BTreeMap<usize, Vec<DMatrix<Complex64>>>,
    ) -> Result<Self> {
        let m = space.len();
        for (&deg, kernels) in &tables {
            let expected = m.pow(deg as u32);
            if kernels.len() != expected {
                return Err(Error::Invalid(format!(
                    "degree-{deg} table has {} kernels, expected {expected}",
                    kernels.len()
                )));
            }
            for ker in kernels {
                if ker.nrows() != k || ker.ncols() != k {
                    return Err(Error::Invalid(format!(
                        "degree-{deg} kernel of shape {}x{} in a k={k} state",
                        ker.nrows(),
                        ker.ncols()
                    )));
                }
            }
        }
        tables
            .entry(0)
            .or_insert_with(|| vec![DMatrix::identity(k, k)]);
        Ok(Self { tables })
    }

    /// Builds directly from per-degree tables without a space check (used by
    /// the gradewise tensor product, which constructs consistent shapes).
    pub(crate) fn from_tables(tables: BTreeMap<usize, Vec<DMatrix<Complex64>>>) -> Self {
        Self { tables }
    }

    pub fn degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.tables.keys().copied()
    }

    pub fn table(&self, degree: usize) -> Option<&[DMatrix<Complex64>]> {
        self.tables.get(&degree).map(Vec::as_slice)
    }

    /// Kernel at a grid tuple (row-major lookup).
    pub fn kernel(&self, tuple: &[usize], m: usize) -> Option<&DMatrix<Complex64>> {
        let table = self.tables.get(&tuple.len())?;
        let mut idx = 0usize;
        for &t in tuple {
            idx = idx * m + t;
        }
        table.get(idx)
    }
}

/// The n-point data behind a state.
#[derive(Debug, Clone)]
pub enum WightmanData {
    /// W_n = α_n · Id.
    Constant { alpha: Vec<f64> },
    /// Grid-delta pairing with the order-reversing permutation.
    Ultralocal,
    /// Explicit kernels per degree.
    Tabulated(TabulatedData),
    /// Entry moments of a Hermitian one-matrix model (positions ignored).
    MatrixModel(MomentSource),
}

impl WightmanData {
    fn default_trace_mode(&self) -> TraceMode {
        match self {
            WightmanData::Ultralocal => TraceMode::Tensor,
            _ => TraceMode::Product,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            WightmanData::Constant { .. } => "constant",
            WightmanData::Ultralocal => "ultralocal",
            WightmanData::Tabulated(_) => "tabulated",
            WightmanData::MatrixModel(_) => "matrix_model",
        }
    }
}

#[derive(Debug, Clone)]
enum StateKind {
    Data {
        data: WightmanData,
        trace_mode: TraceMode,
    },
    /// λ·left + (1−λ)·right.
    Mixture {
        lambda: f64,
        left: Box<StateFunctional>,
        right: Box<StateFunctional>,
    },
    /// Degree-n monomials rescaled by ε^{n−1} (degree 0 untouched).
    Deformed { epsilon: f64, base: Box<StateFunctional> },
}

/// A normalized linear functional on the sampled Borchers algebra.
#[derive(Debug, Clone)]
pub struct StateFunctional {
    space: Arc<SampledSpace>,
    k: usize,
    kind: StateKind,
}

impl StateFunctional {
    /// Wraps Wightman data as a state; `trace_mode = None` picks the kind's
    /// default (Tensor for Ultralocal, Product otherwise).  The ω(𝟙) = 1
    /// normalization is verified and [`Error::NotNormalized`] raised
    /// otherwise.
    pub fn new(
        space: Arc<SampledSpace>,
        k: usize,
        data: WightmanData,
        trace_mode: Option<TraceMode>,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::Invalid("target size k must be at least 1".into()));
        }
        if let WightmanData::Constant { alpha } = &data {
            if alpha.is_empty() {
                return Err(Error::Invalid("constant data needs at least alpha_0".into()));
            }
            if alpha.iter().any(|a| !a.is_finite()) {
                return Err(Error::Invalid("non-finite alpha entry".into()));
            }
        }
        if let WightmanData::MatrixModel(source) = &data {
            if source.n() != k {
                return Err(Error::Invalid(format!(
                    "matrix-model moments are N = {} but the target is k = {k}",
                    source.n()
                )));
            }
        }
        let trace_mode = trace_mode.unwrap_or_else(|| data.default_trace_mode());
        let state = Self {
            space,
            k,
            kind: StateKind::Data { data, trace_mode },
        };
        let unit = BorchersElement::unit(Arc::clone(&state.space), k);
        let v = state.eval(&unit)?;
        if (v - Complex64::new(1.0, 0.0)).norm() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized { re: v.re, im: v.im });
        }
        Ok(state)
    }

    pub fn space(&self) -> &Arc<SampledSpace> {
        &self.space
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// The trace mode of the underlying data layer (mixtures/deformations
    /// report their base's mode on the left branch).
    pub fn trace_mode(&self) -> TraceMode {
        match &self.kind {
            StateKind::Data { trace_mode, .. } => *trace_mode,
            StateKind::Mixture { left, .. } => left.trace_mode(),
            StateKind::Deformed { base, .. } => base.trace_mode(),
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            StateKind::Data { data, trace_mode } => format!(
                "{} ({})",
                data.kind_name(),
                match trace_mode {
                    TraceMode::Product => "product trace",
                    TraceMode::Tensor => "tensor trace",
                }
            ),
            StateKind::Mixture { lambda, left, right } => format!(
                "mixture λ={lambda} of [{}] and [{}]",
                left.describe(),
                right.describe()
            ),
            StateKind::Deformed { epsilon, base } => {
                format!("deformation ε={epsilon} of [{}]", base.describe())
            }
        }
    }

    /// Evaluates ω(f).
    pub fn eval(&self, f: &BorchersElement) -> Result<Complex64> {
        if !same_space(&self.space, f.space()) || self.k != f.k() {
            return Err(Error::SpaceMismatch(
                "element and state live on different spaces or targets".into(),
            ));
        }
        match &self.kind {
            StateKind::Data { data, trace_mode } => {
                // Degree 0 pairs the scalar with W_0 (α_0, the degree-0
                // kernel, or 1 for the delta/moment kinds).
                let mut acc = f.scalar_part() * self.w0_factor(data);
                for term in f.terms() {
                    acc += self.eval_term(data, *trace_mode, term)?;
                }
                Ok(acc)
            }
            StateKind::Mixture { lambda, left, right } => {
                let l = left.eval(f)?;
                let r = right.eval(f)?;
                Ok(l * *lambda + r * (1.0 - *lambda))
            }
            StateKind::Deformed { epsilon, base } => {
                let mut acc = base.eval(&f.degree_component(0))?;
                for n in 1..=f.degree() {
                    let comp = f.degree_component(n);
                    if comp.terms().is_empty() {
                        continue;
                    }
                    let scale = epsilon.powi(n as i32 - 1);
                    acc += base.eval(&comp)? * scale;
                }
                Ok(acc)
            }
        }
    }

    /// The sesquilinear pairing (f, g) ↦ ω(star(f) × g).
    pub fn sesquilinear(&self, f: &BorchersElement, g: &BorchersElement) -> Result<Complex64> {
        self.eval(&f.star().cross(g)?)
    }

    fn w0_factor(&self, data: &WightmanData) -> Complex64 {
        match data {
            WightmanData::Constant { alpha } => Complex64::new(alpha[0], 0.0),
            WightmanData::Ultralocal | WightmanData::MatrixModel(_) => Complex64::new(1.0, 0.0),
            WightmanData::Tabulated(tab) => {
                let w0 = tab.kernel(&[], self.space.len()).expect("degree 0 defaulted");
                w0.trace() / self.k as f64
            }
        }
    }

    fn eval_term(&self, data: &WightmanData, mode: TraceMode, term: &Term) -> Result<Complex64> {
        let n = term.degree();
        let k = self.k as f64;
        let space = &self.space;
        match data {
            WightmanData::Constant { alpha } => {
                let Some(&a) = alpha.get(n) else {
                    return Err(Error::UnsupportedDegree {
                        degree: n,
                        reason: format!("constant data carries alpha_0..alpha_{}", alpha.len() - 1),
                    });
                };
                if a == 0.0 {
                    return Ok(Complex64::zero());
                }
                // Integrate each factor, then trace the ordered product.
                let mut prod = integrate(space, &term.factors[0]);
                for f in &term.factors[1..] {
                    prod *= integrate(space, f);
                }
                Ok(term.coeff * a * prod.trace() / k)
            }
            WightmanData::Ultralocal => {
                if n % 2 == 1 {
                    return Ok(Complex64::zero());
                }
                let m = n / 2;
                match mode {
                    TraceMode::Tensor => {
                        // Slot j pairs slot 2m−1−j: one HS trace per pair,
                        // both factors at the same point.
                        let mut prod = Complex64::new(1.0, 0.0);
                        for j in 0..m {
                            let (a, b) = (&term.factors[j], &term.factors[n - 1 - j]);
                            let mut pair = Complex64::zero();
                            for x in 0..space.len() {
                                pair += (a.value(x) * b.value(x)).trace() * space.weight(x) / k;
                            }
                            prod *= pair;
                        }
                        Ok(term.coeff * prod)
                    }
                    TraceMode::Product => {
                        // Free positions x_0..x_{m−1}; slot j ≥ m sits at
                        // x_{2m−1−j}.  One trace of the full product.
                        let mut acc = Complex64::zero();
                        for tuple in (0..m).map(|_| 0..space.len()).multi_cartesian_product() {
                            let mut prod = term.factors[0].value(tuple[0]).clone();
                            for j in 1..n {
                                let pos = if j < m { tuple[j] } else { tuple[n - 1 - j] };
                                prod *= term.factors[j].value(pos);
                            }
                            let w: f64 = tuple.iter().map(|&x| space.weight(x)).product();
                            acc += prod.trace() * w / k;
                        }
                        Ok(term.coeff * acc)
                    }
                }
            }
            WightmanData::Tabulated(tab) => {
                if tab.table(n).is_none() {
                    return Err(Error::UnsupportedDegree {
                        degree: n,
                        reason: "no tabulated kernel for this degree".into(),
                    });
                }
                // Single-kernel pairing; both trace modes coincide here.
                let mlen = space.len();
                let mut acc = Complex64::zero();
                for tuple in (0..n).map(|_| 0..mlen).multi_cartesian_product() {
                    let kernel = tab.kernel(&tuple, mlen).expect("validated shape");
                    let mut prod = term.factors[0].value(tuple[0]).clone();
                    for j in 1..n {
                        prod *= term.factors[j].value(tuple[j]);
                    }
                    prod *= kernel;
                    let w: f64 = tuple.iter().map(|&x| space.weight(x)).product();
                    acc += prod.trace() * w / k;
                }
                Ok(term.coeff * acc)
            }
            WightmanData::MatrixModel(source) => {
                // Nonconstant factors kill the term; constants contract
                // against the moments with no quadrature at all.
                for f in &term.factors {
                    if !f.is_constant(CONSTANT_FACTOR_TOL) {
                        return Ok(Complex64::zero());
                    }
                }
                let values: Vec<&DMatrix<Complex64>> =
                    term.factors.iter().map(|f| f.value(0)).collect();
                Ok(term.coeff * contract_moments(source, &values)?)
            }
        }
    }
}

fn integrate(space: &SampledSpace, f: &crate::algebra::MatrixTestFunction) -> DMatrix<Complex64> {
    let mut acc = DMatrix::zeros(f.k(), f.k());
    for x in 0..space.len() {
        acc += f.value(x) * Complex64::new(space.weight(x), 0.0);
    }
    acc
}

/// Gradewise symmetrized tensor product of tabulated data:
/// (T ⊗_s S)_n = Σ_{i+j=n} Σ_{splittings} T_i(x_selected) · S_j(x_rest),
/// summing over all order-preserving splittings of the n positions.
///
/// Absent degrees count as zero.  Errors with [`Error::DegreeOverflow`] when
/// the combined top degree exceeds `cap`.
pub fn tensor_product_tabulated(
    space: &SampledSpace,
    k: usize,
    t: &TabulatedData,
    s: &TabulatedData,
    cap: usize,
) -> Result<TabulatedData> {
    let top_t = t.degrees().max().unwrap_or(0);
    let top_s = s.degrees().max().unwrap_or(0);
    if top_t + top_s > cap {
        return Err(Error::DegreeOverflow {
            degree: top_t + top_s,
            cap,
        });
    }
    let m = space.len();
    let mut out: BTreeMap<usize, Vec<DMatrix<Complex64>>> = BTreeMap::new();
    for n in 0..=(top_t + top_s) {
        let pairs: Vec<(usize, usize)> = (0..=n)
            .filter(|&i| t.table(i).is_some() && s.table(n - i).is_some())
            .map(|i| (i, n - i))
            .collect();
        if pairs.is_empty() {
            continue;
        }
        let mut kernels = vec![DMatrix::<Complex64>::zeros(k, k); m.pow(n as u32)];
        for (flat, tuple) in tuples(m, n).enumerate() {
            for &(i, j) in &pairs {
                for selected in (0..n).combinations(i) {
                    let mut t_tuple = Vec::with_capacity(i);
                    let mut s_tuple = Vec::with_capacity(j);
                    let mut sel_iter = selected.iter().peekable();
                    for (pos, &x) in tuple.iter().enumerate() {
                        if sel_iter.peek() == Some(&&pos) {
                            sel_iter.next();
                            t_tuple.push(x);
                        } else {
                            s_tuple.push(x);
                        }
                    }
                    let tk = t.kernel(&t_tuple, m).expect("degree checked");
                    let sk = s.kernel(&s_tuple, m).expect("degree checked");
                    kernels[flat] += tk * sk;
                }
            }
        }
        out.insert(n, kernels);
    }
    Ok(TabulatedData::from_tables(out))
}

fn tuples(m: usize, n: usize) -> impl Iterator<Item = Vec<usize>> {
    if n == 0 {
        // Degree 0 has exactly one (empty) tuple.
        itertools::Either::Left(std::iter::once(Vec::new()))
    } else {
        itertools::Either::Right((0..n).map(move |_| 0..m).multi_cartesian_product())
    }
}

/// Tensor product of two tabulated states (the splitting formula lifted to
/// normalized states).  Both inputs must be of the Tabulated kind on the
/// same space and target.
pub fn tensor_product_states(
    t: &StateFunctional,
    s: &StateFunctional,
) -> Result<StateFunctional> {
    if !same_space(&t.space, &s.space) || t.k != s.k {
        return Err(Error::SpaceMismatch(
            "tensor product requires a common space and target".into(),
        ));
    }
    let (td, tmode) = match &t.kind {
        StateKind::Data {
            data: WightmanData::Tabulated(d),
            trace_mode,
        } => (d, *trace_mode),
        _ => {
            return Err(Error::Invalid(
                "tensor_product_states requires tabulated data".into(),
            ))
        }
    };
    let sd = match &s.kind {
        StateKind::Data {
            data: WightmanData::Tabulated(d),
            ..
        } => d,
        _ => {
            return Err(Error::Invalid(
                "tensor_product_states requires tabulated data".into(),
            ))
        }
    };
    let product = tensor_product_tabulated(&t.space, t.k, td, sd, DEFAULT_DEGREE_CAP)?;
    StateFunctional::new(
        Arc::clone(&t.space),
        t.k,
        WightmanData::Tabulated(product),
        Some(tmode),
    )
}

/// Convex mixture λ·ω₁ + (1−λ)·ω₂.
pub fn mix_states(
    lambda: f64,
    omega1: &StateFunctional,
    omega2: &StateFunctional,
) -> Result<StateFunctional> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::LambdaOutOfRange(lambda));
    }
    if !same_space(&omega1.space, &omega2.space) || omega1.k != omega2.k {
        return Err(Error::SpaceMismatch(
            "mixture requires a common space and target".into(),
        ));
    }
    Ok(StateFunctional {
        space: Arc::clone(&omega1.space),
        k: omega1.k,
        kind: StateKind::Mixture {
            lambda,
            left: Box::new(omega1.clone()),
            right: Box::new(omega2.clone()),
        },
    })
}

/// The deformation family ω_ε: degree-n monomials pick up ε^{n−1}
/// (n ≥ 1; the unit stays fixed so ω_ε(𝟙) = 1).  ε must be nonzero.
pub fn deform_state(omega: &StateFunctional, epsilon: f64) -> Result<StateFunctional> {
    if epsilon == 0.0 || !epsilon.is_finite() {
        return Err(Error::ZeroEpsilon);
    }
    Ok(StateFunctional {
        space: Arc::clone(&omega.space),
        k: omega.k,
        kind: StateKind::Deformed {
            epsilon,
            base: Box::new(omega.clone()),
        },
    })
}
