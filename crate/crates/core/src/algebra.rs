//! The sampled Borchers algebra: matrix-valued test functions and their
//! tensor words.
//!
//! A degree-n monomial is ι-identified with the matrix-valued function
//!
//! ```text
//! (f_1 ⊗ ... ⊗ f_n)(x_1, ..., x_n) = f_1(x_1) · f_2(x_2) ··· f_n(x_n)
//! ```
//!
//! (pointwise product in the k×k target), the cross product concatenates
//! factor lists, and the involution reverses factor order while taking the
//! pointwise conjugate transpose:
//!
//! ```text
//! f*(x_1, ..., x_n) = f(x_n, ..., x_1)^†.
//! ```
//!
//! Elements are finite sums of monomials graded by degree, with a hard
//! degree cap: constructors and products reject anything beyond the cap
//! rather than silently truncating.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::space::SampledSpace;

/// Default degree cap for freshly constructed elements.
pub const DEFAULT_DEGREE_CAP: usize = 4;

/// Terms with |coefficient| below this are dropped after arithmetic.
pub const NORMALIZATION_DROP_TOL: f64 = 1e-14;

pub(crate) fn same_space(a: &Arc<SampledSpace>, b: &Arc<SampledSpace>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// A sampled test function Σ → C^{k×k}: one k×k value per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixTestFunction {
    space: Arc<SampledSpace>,
    k: usize,
    values: Vec<DMatrix<Complex64>>,
}

impl MatrixTestFunction {
    pub fn new(
        space: Arc<SampledSpace>,
        k: usize,
        values: Vec<DMatrix<Complex64>>,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::Invalid("target size k must be at least 1".into()));
        }
        if values.len() != space.len() {
            return Err(Error::Invalid(format!(
                "{} values for a {}-point space",
                values.len(),
                space.len()
            )));
        }
        for v in &values {
            if v.nrows() != k || v.ncols() != k {
                return Err(Error::Invalid(format!(
                    "value of shape {}x{} in a k={k} algebra",
                    v.nrows(),
                    v.ncols()
                )));
            }
        }
        Ok(Self { space, k, values })
    }

    /// The zero function.
    pub fn zero(space: Arc<SampledSpace>, k: usize) -> Self {
        let values = vec![DMatrix::zeros(k, k); space.len()];
        Self { space, k, values }
    }

    /// The same k×k value at every grid point.
    pub fn constant(space: Arc<SampledSpace>, value: DMatrix<Complex64>) -> Result<Self> {
        let k = value.nrows();
        let values = vec![value; space.len()];
        Self::new(space, k, values)
    }

    /// `matrix` at grid point `at`, zero elsewhere.
    pub fn delta_at(
        space: Arc<SampledSpace>,
        at: usize,
        matrix: DMatrix<Complex64>,
    ) -> Result<Self> {
        if at >= space.len() {
            return Err(Error::IndexOutOfRange(format!(
                "grid point {at} on a {}-point space",
                space.len()
            )));
        }
        let k = matrix.nrows();
        let mut f = Self::zero(space, k);
        if matrix.ncols() != k {
            return Err(Error::Invalid("delta value must be square".into()));
        }
        f.values[at] = matrix;
        Ok(f)
    }

    /// Scalar (k = 1) function from per-point values.
    pub fn from_scalars(space: Arc<SampledSpace>, values: &[Complex64]) -> Result<Self> {
        let vals = values
            .iter()
            .map(|&z| DMatrix::from_element(1, 1, z))
            .collect();
        Self::new(space, 1, vals)
    }

    pub fn space(&self) -> &Arc<SampledSpace> {
        &self.space
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn value(&self, i: usize) -> &DMatrix<Complex64> {
        &self.values[i]
    }

    pub fn values(&self) -> &[DMatrix<Complex64>] {
        &self.values
    }

    /// Pointwise conjugate transpose (the degree-1 involution).
    pub fn star(&self) -> Self {
        Self {
            space: Arc::clone(&self.space),
            k: self.k,
            values: self.values.iter().map(|v| v.adjoint()).collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            space: Arc::clone(&self.space),
            k: self.k,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            space: Arc::clone(&self.space),
            k: self.k,
            values,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Translated function (α_a f)(x) = f(x − a), exact on the lattice.
    pub fn translate(&self, a: &[f64]) -> Result<Self> {
        let perm = self.space.translation_permutation(a)?;
        let values = perm.iter().map(|&j| self.values[j].clone()).collect();
        Ok(Self {
            space: Arc::clone(&self.space),
            k: self.k,
            values,
        })
    }

    /// Largest pointwise Frobenius norm; used as a support indicator.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// True when all values agree with the value at point 0 within `tol`
    /// (entrywise, absolutely).
    pub fn is_constant(&self, tol: f64) -> bool {
        let first = &self.values[0];
        self.values
            .iter()
            .all(|v| (v - first).iter().all(|z| z.norm() <= tol))
    }

    /// Grid indices where the function is nonzero (Frobenius norm > tol).
    pub fn support(&self, tol: f64) -> Vec<usize> {
        (0..self.space.len())
            .filter(|&i| self.values[i].norm() > tol)
            .collect()
    }

    /// Row-major flattening into C^{M·k²}, point-major.  This is the raw
    /// coordinate vector used for span computations; no weights applied.
    pub fn flatten(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.space.len() * self.k * self.k);
        for v in &self.values {
            for r in 0..self.k {
                for c in 0..self.k {
                    out.push(v[(r, c)]);
                }
            }
        }
        out
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if !same_space(&self.space, &other.space) || self.k != other.k {
            return Err(Error::SpaceMismatch(
                "test functions live on different spaces or targets".into(),
            ));
        }
        Ok(())
    }
}

/// The Ftilde pairing  Σ_x w_x tr(f(x) · g(x))  (plain trace, bilinear).
pub fn killing_pair(f: &MatrixTestFunction, g: &MatrixTestFunction) -> Result<Complex64> {
    f.check_compatible(g)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..f.space.len() {
        let prod = f.values[i].clone() * &g.values[i];
        acc += Complex64::new(f.space.weight(i), 0.0) * prod.trace();
    }
    Ok(acc)
}

/// One monomial: coefficient times an ordered factor list.
#[derive(Debug, Clone)]
pub struct Term {
    pub coeff: Complex64,
    pub factors: Vec<MatrixTestFunction>,
}

impl Term {
    pub fn degree(&self) -> usize {
        self.factors.len()
    }
}

/// A graded element of the sampled Borchers algebra: a degree-0 scalar plus
/// a finite sum of monomials of degree ≥ 1.
#[derive(Debug, Clone)]
pub struct BorchersElement {
    space: Arc<SampledSpace>,
    k: usize,
    cap: usize,
    scalar: Complex64,
    terms: Vec<Term>,
}

impl BorchersElement {
    /// The unit 𝟙 (scalar 1, no monomials).
    pub fn unit(space: Arc<SampledSpace>, k: usize) -> Self {
        Self::scalar(space, k, Complex64::new(1.0, 0.0))
    }

    pub fn scalar(space: Arc<SampledSpace>, k: usize, c: Complex64) -> Self {
        Self {
            space,
            k,
            cap: DEFAULT_DEGREE_CAP,
            scalar: c,
            terms: Vec::new(),
        }
    }

    /// Degree-1 element from a single test function.
    pub fn from_test_fn(f: &MatrixTestFunction) -> Self {
        Self {
            space: Arc::clone(f.space()),
            k: f.k(),
            cap: DEFAULT_DEGREE_CAP,
            scalar: Complex64::new(0.0, 0.0),
            terms: vec![Term {
                coeff: Complex64::new(1.0, 0.0),
                factors: vec![f.clone()],
            }],
        }
    }

    /// A single monomial with explicit coefficient and factor list.
    pub fn monomial(coeff: Complex64, factors: &[MatrixTestFunction]) -> Result<Self> {
        Self::monomial_with_cap(coeff, factors, DEFAULT_DEGREE_CAP)
    }

    /// Like [`Self::monomial`] with a caller-chosen degree cap.
    pub fn monomial_with_cap(
        coeff: Complex64,
        factors: &[MatrixTestFunction],
        cap: usize,
    ) -> Result<Self> {
        let first = factors
            .first()
            .ok_or_else(|| Error::Invalid("a monomial needs at least one factor".into()))?;
        for f in factors {
            first.check_compatible(f)?;
        }
        if factors.len() > cap {
            return Err(Error::DegreeOverflow {
                degree: factors.len(),
                cap,
            });
        }
        let mut el = Self {
            space: Arc::clone(first.space()),
            k: first.k(),
            cap,
            scalar: Complex64::new(0.0, 0.0),
            terms: vec![Term {
                coeff,
                factors: factors.to_vec(),
            }],
        };
        el.normalize();
        Ok(el)
    }

    /// Raises (never lowers below current content) the degree cap.
    pub fn with_cap(mut self, cap: usize) -> Result<Self> {
        if cap < self.degree() {
            return Err(Error::DegreeOverflow {
                degree: self.degree(),
                cap,
            });
        }
        self.cap = cap;
        Ok(self)
    }

    pub fn space(&self) -> &Arc<SampledSpace> {
        &self.space
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn scalar_part(&self) -> Complex64 {
        self.scalar
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Largest degree with a surviving term (0 when purely scalar).
    pub fn degree(&self) -> usize {
        self.terms.iter().map(Term::degree).max().unwrap_or(0)
    }

    /// The pure degree-n component as a new element (scalar part for n = 0).
    pub fn degree_component(&self, n: usize) -> Self {
        if n == 0 {
            return Self::scalar(Arc::clone(&self.space), self.k, self.scalar);
        }
        Self {
            space: Arc::clone(&self.space),
            k: self.k,
            cap: self.cap,
            scalar: Complex64::new(0.0, 0.0),
            terms: self
                .terms
                .iter()
                .filter(|t| t.degree() == n)
                .cloned()
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = Self {
            space: Arc::clone(&self.space),
            k: self.k,
            cap: self.cap.max(other.cap),
            scalar: self.scalar + other.scalar,
            terms: self.terms.iter().chain(&other.terms).cloned().collect(),
        };
        out.normalize();
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = Self {
            space: Arc::clone(&self.space),
            k: self.k,
            cap: self.cap,
            scalar: self.scalar * c,
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: t.coeff * c,
                    factors: t.factors.clone(),
                })
                .collect(),
        };
        out.normalize();
        out
    }

    /// The graded cross product: factor lists concatenate,
    /// (f_n × g_m)(x_1..x_{n+m}) = f_n(x_1..x_n) · g_m(x_{n+1}..x_{n+m}).
    ///
    /// Errors with [`Error::DegreeOverflow`] when a product degree would
    /// exceed the (larger of the two) caps.
    pub fn cross(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let cap = self.cap.max(other.cap);
        let mut terms = Vec::new();
        // scalar × monomials and monomials × scalar
        if self.scalar.norm() > 0.0 {
            for t in &other.terms {
                terms.push(Term {
                    coeff: self.scalar * t.coeff,
                    factors: t.factors.clone(),
                });
            }
        }
        if other.scalar.norm() > 0.0 {
            for t in &self.terms {
                terms.push(Term {
                    coeff: t.coeff * other.scalar,
                    factors: t.factors.clone(),
                });
            }
        }
        for a in &self.terms {
            for b in &other.terms {
                let degree = a.degree() + b.degree();
                if degree > cap {
                    return Err(Error::DegreeOverflow { degree, cap });
                }
                let mut factors = a.factors.clone();
                factors.extend_from_slice(&b.factors);
                terms.push(Term {
                    coeff: a.coeff * b.coeff,
                    factors,
                });
            }
        }
        let mut out = Self {
            space: Arc::clone(&self.space),
            k: self.k,
            cap,
            scalar: self.scalar * other.scalar,
            terms,
        };
        out.normalize();
        Ok(out)
    }

    /// The involution: conjugates coefficients, reverses factor order, and
    /// conjugate-transposes each factor pointwise.
    pub fn star(&self) -> Self {
        Self {
            space: Arc::clone(&self.space),
            k: self.k,
            cap: self.cap,
            scalar: self.scalar.conj(),
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: t.coeff.conj(),
                    factors: t.factors.iter().rev().map(MatrixTestFunction::star).collect(),
                })
                .collect(),
        }
    }

    /// Translates every factor: (α_a f)(x_1..x_n) = f(x_1 − a, ..., x_n − a).
    pub fn translate(&self, a: &[f64]) -> Result<Self> {
        // Validate once even for purely scalar elements.
        self.space.translation_permutation(a)?;
        let terms = self
            .terms
            .iter()
            .map(|t| {
                Ok(Term {
                    coeff: t.coeff,
                    factors: t
                        .factors
                        .iter()
                        .map(|f| f.translate(a))
                        .collect::<Result<Vec<_>>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            space: Arc::clone(&self.space),
            k: self.k,
            cap: self.cap,
            scalar: self.scalar,
            terms,
        })
    }

    /// The ι-image of the degree-|tuple| component at a grid tuple:
    /// Σ_{terms of that degree} coeff · f_1(x_{t_1}) ··· f_n(x_{t_n}).
    /// The empty tuple returns scalar · Id.
    pub fn value_at(&self, tuple: &[usize]) -> DMatrix<Complex64> {
        let n = tuple.len();
        if n == 0 {
            return DMatrix::identity(self.k, self.k) * self.scalar;
        }
        let mut acc = DMatrix::zeros(self.k, self.k);
        for t in &self.terms {
            if t.degree() != n {
                continue;
            }
            let mut prod = t.factors[0].value(tuple[0]).clone();
            for (f, &idx) in t.factors.iter().zip(tuple).skip(1) {
                prod *= f.value(idx);
            }
            acc += prod * t.coeff;
        }
        acc
    }

    fn normalize(&mut self) {
        if self.scalar.norm() < NORMALIZATION_DROP_TOL {
            self.scalar = Complex64::new(0.0, 0.0);
        }
        // Merge terms with identical factor lists (exact value equality, as
        // produced by clones in sums and cancellations), then drop dust.
        let mut merged: Vec<Term> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            if let Some(prev) = merged
                .iter_mut()
                .find(|p| p.factors.len() == t.factors.len() && p.factors == t.factors)
            {
                prev.coeff += t.coeff;
            } else {
                merged.push(t);
            }
        }
        merged.retain(|t| t.coeff.norm() >= NORMALIZATION_DROP_TOL);
        self.terms = merged;
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if !same_space(&self.space, &other.space) || self.k != other.k {
            return Err(Error::SpaceMismatch(
                "elements live on different spaces or targets".into(),
            ));
        }
        Ok(())
    }
}
