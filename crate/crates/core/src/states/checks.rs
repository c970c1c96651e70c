//! Axiom checkers for state functionals.
//!
//! Each checker evaluates one of the structural axioms on a finite sample —
//! positivity  ω(a*×a) ≥ 0  via a word-basis Gram spectrum, translation
//! invariance, locality (commutators of disjointly supported functions
//! inside sandwich words), the Hilbert-space structure condition
//! |W_{n+m}(f*⊗g)| ≤ p_n(f)·p_m(g), and Krein positivity with respect to a
//! caller-supplied involution α on the degree-1 space.
//!
//! Checkers are report-style: they return a filled report with a `passed`
//! flag rather than erroring on a violation (construction errors such as a
//! missing period or mismatched spaces still raise).  Random sampling uses
//! fixed internal seeds so reports are reproducible run to run.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::algebra::{same_space, BorchersElement, MatrixTestFunction};
use crate::error::{Error, Result};
use crate::gns::{build_gram, describe_witness, WordBasis};
use crate::linalg::hermitian_eigen;
use crate::space::SampledSpace;
use crate::states::StateFunctional;

/// Word length used by the translation checker's internal word set.
const TRANSLATION_WORD_LEN: usize = 2;

/// Support detection threshold for the locality overlap warning.
const SUPPORT_TOL: f64 = 1e-12;

/// Seeds for the deterministic samplers (arbitrary fixed constants).
const HSSC_SEED: u64 = 0x4853_5343;
const KREIN_SEED: u64 = 0x4b52_4549;

/// Positivity of the Gram form over a word basis.
#[derive(Debug, Clone, Serialize)]
pub struct PositivityReport {
    pub words: usize,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub passed: bool,
    /// Combination of words spanning the most negative direction, when the
    /// check fails.
    pub violating_vector: Option<String>,
}

/// Builds the Gram matrix ω(w*×w′) over all generator words of length
/// ≤ max_len and reports its minimum eigenvalue; passes iff ≥ −tol.
pub fn check_positivity(
    omega: &StateFunctional,
    generators: &[MatrixTestFunction],
    max_len: usize,
    tol: f64,
) -> Result<PositivityReport> {
    let basis = WordBasis::new(generators.to_vec(), max_len)?;
    let gram = build_gram(omega, &basis)?;
    let eig = hermitian_eigen(&gram);
    let min_eigenvalue = *eig.values.last().expect("nonempty spectrum");
    let max_eigenvalue = eig.values[0];
    let passed = min_eigenvalue >= -tol;
    let violating_vector = if passed {
        None
    } else {
        let col = eig.values.len() - 1;
        Some(describe_witness(&basis, &eig.vectors.column(col).into_owned()))
    };
    Ok(PositivityReport {
        words: basis.len(),
        min_eigenvalue,
        max_eigenvalue,
        passed,
        violating_vector,
    })
}

/// Translation invariance over sampled words and shifts.
#[derive(Debug, Clone, Serialize)]
pub struct TranslationReport {
    pub words: usize,
    pub shifts: usize,
    pub max_deviation: f64,
    pub worst_word: String,
    pub worst_shift: Vec<f64>,
    pub passed: bool,
}

/// Verifies |ω(translate(w, a)) − ω(w)| ≤ tol for every generator word of
/// length ≤ 2 and every listed shift.  Requires a periodic space
/// ([`Error::NotPeriodic`] otherwise).
pub fn check_translation_invariance(
    omega: &StateFunctional,
    generators: &[MatrixTestFunction],
    shifts: &[Vec<f64>],
    tol: f64,
) -> Result<TranslationReport> {
    let basis = WordBasis::new(generators.to_vec(), TRANSLATION_WORD_LEN)?;
    let mut max_deviation = 0.0f64;
    let mut worst_word = String::from("1");
    let mut worst_shift = shifts.first().cloned().unwrap_or_default();
    for i in 0..basis.len() {
        let w = basis.word_element(i)?;
        let base = omega.eval(&w)?;
        for a in shifts {
            let moved = w.translate(a)?;
            let dev = (omega.eval(&moved)? - base).norm();
            if dev > max_deviation {
                max_deviation = dev;
                worst_word = basis.describe_word(i);
                worst_shift = a.clone();
            }
        }
    }
    Ok(TranslationReport {
        words: basis.len(),
        shifts: shifts.len(),
        max_deviation,
        worst_word,
        worst_shift,
        passed: max_deviation <= tol,
    })
}

/// Locality: commutators of disjointly supported functions vanish inside
/// sandwich words.
#[derive(Debug, Clone, Serialize)]
pub struct LocalityReport {
    pub pairs_checked: usize,
    pub max_deviation: f64,
    /// Index into the sandwich list where the worst deviation occurred.
    pub worst_pair: usize,
    /// True when the supports of f and g intersect (the check still runs,
    /// but its physical reading is void).
    pub supports_overlap: bool,
    pub passed: bool,
}

/// Verifies |ω(u × (f×g − g×f) × v)| ≤ tol for each sandwich pair (u, v).
/// An empty sandwich list defaults to the single pair (𝟏, 𝟏).  Overlapping
/// supports are a warning in the report, not an error.
pub fn check_locality(
    omega: &StateFunctional,
    f: &MatrixTestFunction,
    g: &MatrixTestFunction,
    sandwiches: &[(BorchersElement, BorchersElement)],
    tol: f64,
) -> Result<LocalityReport> {
    let supp_f = f.support(SUPPORT_TOL);
    let supp_g = g.support(SUPPORT_TOL);
    let supports_overlap = supp_f.iter().any(|x| supp_g.contains(x));
    let unit = BorchersElement::unit(Arc::clone(f.space()), f.k());
    let default_pair = [(unit.clone(), unit)];
    let pairs: &[(BorchersElement, BorchersElement)] = if sandwiches.is_empty() {
        &default_pair
    } else {
        sandwiches
    };
    let mut max_deviation = 0.0f64;
    let mut worst_pair = 0usize;
    for (idx, (u, v)) in pairs.iter().enumerate() {
        let cap = (u.degree() + 2 + v.degree()).max(u.cap()).max(v.cap());
        let fe = BorchersElement::from_test_fn(f).with_cap(cap)?;
        let ge = BorchersElement::from_test_fn(g).with_cap(cap)?;
        let commutator = fe.cross(&ge)?.sub(&ge.cross(&fe)?)?;
        let sandwiched = u.clone().with_cap(cap)?.cross(&commutator)?.cross(&v.clone().with_cap(cap)?)?;
        let dev = omega.eval(&sandwiched)?.norm();
        if dev > max_deviation {
            max_deviation = dev;
            worst_pair = idx;
        }
    }
    Ok(LocalityReport {
        pairs_checked: pairs.len(),
        max_deviation,
        worst_pair,
        supports_overlap,
        passed: max_deviation <= tol,
    })
}

/// Seminorm family for the Hilbert-space structure condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SeminormKind {
    /// c_n · Σ_{x⃗} w_{x⃗} ‖f_n(x⃗)‖_F.
    WeightedL1,
    /// c_n · ( Σ_{x⃗} w_{x⃗} ‖f_n(x⃗)‖_F² )^{1/2}.
    WeightedL2,
}

/// Per-degree seminorm choices p_n with constants c_n ≥ 0; degree n uses
/// entry n of the list (and the largest listed degree bounds the sampled
/// degrees).
#[derive(Debug, Clone, Serialize)]
pub struct SeminormSpec {
    entries: Vec<(SeminormKind, f64)>,
}

impl SeminormSpec {
    pub fn new(entries: Vec<(SeminormKind, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Invalid("seminorm spec needs at least degree 0".into()));
        }
        for (_, c) in &entries {
            if !(c.is_finite() && *c >= 0.0) {
                return Err(Error::Invalid(format!(
                    "seminorm constant must be finite and nonnegative, got {c}"
                )));
            }
        }
        Ok(Self { entries })
    }

    /// The same kind and constant for every degree 0..=max_degree.
    pub fn uniform(kind: SeminormKind, c: f64, max_degree: usize) -> Result<Self> {
        Self::new(vec![(kind, c); max_degree + 1])
    }

    pub fn max_degree(&self) -> usize {
        self.entries.len() - 1
    }

    /// p_n applied to the degree-n component of an element, evaluated
    /// through the ι-image values on grid tuples.
    pub fn seminorm(&self, el: &BorchersElement, degree: usize) -> Result<f64> {
        let Some(&(kind, c)) = self.entries.get(degree) else {
            return Err(Error::UnsupportedDegree {
                degree,
                reason: format!("seminorm spec covers degrees 0..{}", self.max_degree()),
            });
        };
        if degree == 0 {
            return Ok(c * el.scalar_part().norm());
        }
        let component = el.degree_component(degree);
        let space = el.space();
        let m = space.len();
        let mut acc = 0.0f64;
        let mut tuple = vec![0usize; degree];
        loop {
            let w: f64 = tuple.iter().map(|&x| space.weight(x)).product();
            let val = component.value_at(&tuple);
            let fnorm = val.norm();
            acc += match kind {
                SeminormKind::WeightedL1 => w * fnorm,
                SeminormKind::WeightedL2 => w * fnorm * fnorm,
            };
            // Odometer over grid tuples.
            let mut pos = degree;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                tuple[pos] += 1;
                if tuple[pos] < m {
                    break;
                }
                tuple[pos] = 0;
            }
            if tuple.iter().all(|&x| x == 0) {
                break;
            }
        }
        Ok(match kind {
            SeminormKind::WeightedL1 => c * acc,
            SeminormKind::WeightedL2 => c * acc.sqrt(),
        })
    }
}

/// Outcome of the Hilbert-space structure condition check.
#[derive(Debug, Clone, Serialize)]
pub struct HsscReport {
    pub samples: usize,
    /// Largest observed |W(f*⊗g)| / (p(f)·p(g)); infinite when a bound with
    /// zero right-hand side is violated.
    pub max_ratio: f64,
    pub violations: usize,
    pub passed: bool,
}

/// Samples random homogeneous pairs (f_n, g_m) with n + m ≤ the spec's top
/// degree and tests |ω(star(f_n) × g_m)| ≤ p_n(f_n) · p_m(g_m) up to a
/// relative slack of `tol`.
pub fn check_hssc(
    omega: &StateFunctional,
    spec: &SeminormSpec,
    samples: usize,
    tol: f64,
) -> Result<HsscReport> {
    let mut rng = StdRng::seed_from_u64(HSSC_SEED);
    let top = spec.max_degree();
    let degree_pairs: Vec<(usize, usize)> = (0..=top)
        .flat_map(|n| (0..=(top - n)).map(move |m| (n, m)))
        .collect();
    let mut max_ratio = 0.0f64;
    let mut violations = 0usize;
    for s in 0..samples {
        let (n, m) = degree_pairs[s % degree_pairs.len()];
        let f = random_homogeneous(&mut rng, omega.space(), omega.k(), n, top.max(2))?;
        let g = random_homogeneous(&mut rng, omega.space(), omega.k(), m, top.max(2))?;
        let lhs = omega.eval(&f.star().cross(&g)?)?.norm();
        let rhs = spec.seminorm(&f, n)? * spec.seminorm(&g, m)?;
        let bound = rhs * (1.0 + tol) + 1e-12;
        if lhs > bound {
            violations += 1;
        }
        let ratio = if rhs > 0.0 {
            lhs / rhs
        } else if lhs > 1e-12 {
            f64::INFINITY
        } else {
            0.0
        };
        max_ratio = max_ratio.max(ratio);
    }
    Ok(HsscReport {
        samples,
        max_ratio,
        violations,
        passed: violations == 0,
    })
}

/// A linear map on the sampled degree-1 space, stored as a matrix in the
/// point-major flattened coordinates of [`MatrixTestFunction::flatten`].
#[derive(Debug, Clone)]
pub struct AlphaMap {
    space: Arc<SampledSpace>,
    k: usize,
    matrix: DMatrix<Complex64>,
}

impl AlphaMap {
    /// A general map; the matrix must be (M·k²) × (M·k²) for an M-point
    /// space.
    pub fn new(space: Arc<SampledSpace>, k: usize, matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = space.len() * k * k;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::Invalid(format!(
                "alpha matrix is {}x{}, expected {dim}x{dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { space, k, matrix })
    }

    pub fn identity(space: Arc<SampledSpace>, k: usize) -> Self {
        let dim = space.len() * k * k;
        Self {
            space,
            k,
            matrix: DMatrix::identity(dim, dim),
        }
    }

    /// Pointwise scalar signs: (α f)(x_i) = signs[i] · f(x_i).
    pub fn point_signs(space: Arc<SampledSpace>, k: usize, signs: &[f64]) -> Result<Self> {
        if signs.len() != space.len() {
            return Err(Error::Invalid(format!(
                "{} signs for a {}-point space",
                signs.len(),
                space.len()
            )));
        }
        let block = k * k;
        let dim = space.len() * block;
        let mut matrix = DMatrix::zeros(dim, dim);
        for (i, &s) in signs.iter().enumerate() {
            for b in 0..block {
                matrix[(i * block + b, i * block + b)] = Complex64::new(s, 0.0);
            }
        }
        Ok(Self { space, k, matrix })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Applies α to a test function.
    pub fn apply(&self, f: &MatrixTestFunction) -> Result<MatrixTestFunction> {
        if !same_space(&self.space, f.space()) || self.k != f.k() {
            return Err(Error::SpaceMismatch(
                "alpha map and function live on different spaces or targets".into(),
            ));
        }
        let coords = DVector::from_vec(f.flatten());
        let out = &self.matrix * coords;
        let block = self.k * self.k;
        let values: Vec<DMatrix<Complex64>> = (0..self.space.len())
            .map(|i| {
                DMatrix::from_fn(self.k, self.k, |r, c| out[i * block + r * self.k + c])
            })
            .collect();
        MatrixTestFunction::new(Arc::clone(&self.space), self.k, values)
    }
}

/// Outcome of the Krein-positivity check.
#[derive(Debug, Clone, Serialize)]
pub struct KreinReport {
    pub samples: usize,
    /// max |ω(α²(f)*×g) − ω(f*×g)| — α² must act trivially under ω.
    pub involution_max_dev: f64,
    /// min Re ω(α(f)*×f) — must be ≥ −tol.
    pub alpha_positivity_min: f64,
    /// max |ω(α(f)*×g) − ω(f*×α(g))| — α must be ω-symmetric.
    pub symmetry_max_dev: f64,
    /// The continuity condition on p_α has no content at desk scale.
    pub continuity: String,
    pub passed: bool,
}

/// Tests the three finite-sample Krein conditions on random degree-1
/// functions f, g: ω-triviality of α², positivity of ω(α(f)*×f), and
/// ω-symmetry of α.  The fourth (topological) condition is reported as not
/// checked.
pub fn check_krein(
    omega: &StateFunctional,
    alpha: &AlphaMap,
    samples: usize,
    tol: f64,
) -> Result<KreinReport> {
    if !same_space(omega.space(), &alpha.space) || omega.k() != alpha.k {
        return Err(Error::SpaceMismatch(
            "alpha map and state live on different spaces or targets".into(),
        ));
    }
    let mut rng = StdRng::seed_from_u64(KREIN_SEED);
    let mut involution_max_dev = 0.0f64;
    let mut alpha_positivity_min = f64::INFINITY;
    let mut symmetry_max_dev = 0.0f64;
    for _ in 0..samples {
        let f = random_function(&mut rng, omega.space(), omega.k());
        let g = random_function(&mut rng, omega.space(), omega.k());
        let af = alpha.apply(&f)?;
        let aaf = alpha.apply(&af)?;
        let ag = alpha.apply(&g)?;
        let pair = |a: &MatrixTestFunction, b: &MatrixTestFunction| -> Result<Complex64> {
            omega.eval(
                &BorchersElement::from_test_fn(a)
                    .star()
                    .cross(&BorchersElement::from_test_fn(b))?,
            )
        };
        involution_max_dev = involution_max_dev.max((pair(&aaf, &g)? - pair(&f, &g)?).norm());
        let diag = pair(&af, &f)?;
        alpha_positivity_min = alpha_positivity_min.min(diag.re);
        symmetry_max_dev = symmetry_max_dev.max((pair(&af, &g)? - pair(&f, &ag)?).norm());
    }
    let passed = involution_max_dev <= tol
        && alpha_positivity_min >= -tol
        && symmetry_max_dev <= tol;
    Ok(KreinReport {
        samples,
        involution_max_dev,
        alpha_positivity_min,
        symmetry_max_dev,
        continuity: "not checked (no topology at desk scale)".into(),
        passed,
    })
}

fn random_function(
    rng: &mut StdRng,
    space: &Arc<SampledSpace>,
    k: usize,
) -> MatrixTestFunction {
    let values: Vec<DMatrix<Complex64>> = (0..space.len())
        .map(|_| {
            DMatrix::from_fn(k, k, |_, _| {
                Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            })
        })
        .collect();
    MatrixTestFunction::new(Arc::clone(space), k, values).expect("finite random values")
}

/// A random homogeneous element of the given degree: two random monomials
/// for degree ≥ 1, or a random scalar.
fn random_homogeneous(
    rng: &mut StdRng,
    space: &Arc<SampledSpace>,
    k: usize,
    degree: usize,
    cap: usize,
) -> Result<BorchersElement> {
    if degree == 0 {
        let z = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        return BorchersElement::scalar(Arc::clone(space), k, z).with_cap(cap);
    }
    let mut acc: Option<BorchersElement> = None;
    for _ in 0..2 {
        let coeff = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        let factors: Vec<MatrixTestFunction> =
            (0..degree).map(|_| random_function(rng, space, k)).collect();
        let mono = BorchersElement::monomial_with_cap(coeff, &factors, cap)?;
        acc = Some(match acc {
            None => mono,
            Some(prev) => prev.add(&mono)?,
        });
    }
    Ok(acc.expect("two monomials"))
}
