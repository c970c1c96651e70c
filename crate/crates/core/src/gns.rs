//! The GNS construction at desk scale.
//!
//! From a word basis (all ordered products of a finite generator set up to a
//! length cap) and a state ω, the Gram matrix  G[w, w'] = ω(star(w) × w')
//! is eigendecomposed; null directions (relative threshold) are quotiented
//! away, retained eigenpairs give an orthonormal Hilbert basis, and field
//! operators arrive as compressions  P·Φ(f)·P  of left concatenation.
//!
//! Degree bookkeeping: the Gram needs ω up to degree 2·max_len, operator
//! matrix elements ⟨w| Φ(f) |w'⟩ = ω(star(w) × f × w') need 2·max_len + 1,
//! so word elements carry that cap internally.
//!
//! Exactness contract: for any word of length ≤ max_len the reconstructed
//! vacuum expectation equals ω on that word up to eigensolver noise — words
//! build up inside the retained span, so the top-shell compression never
//! bites below the cap.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::algebra::{same_space, BorchersElement, MatrixTestFunction};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, lstsq, max_abs};
use crate::states::StateFunctional;

/// Default relative null-space threshold.
pub const DEFAULT_NULL_TOL: f64 = 1e-10;

/// Hard cap on word-basis size (Σ m^l) to keep runs desk-scale.
const MAX_WORDS: usize = 100_000;

/// All ordered products of the generators with length 0..=max_len, in
/// graded-lexicographic order (by length, then lexicographic on generator
/// indices).  Word 0 is the empty word 𝟙.
#[derive(Debug, Clone)]
pub struct WordBasis {
    generators: Vec<MatrixTestFunction>,
    max_len: usize,
    words: Vec<Vec<usize>>,
    cap: usize,
}

impl WordBasis {
    pub fn new(generators: Vec<MatrixTestFunction>, max_len: usize) -> Result<Self> {
        let first = generators
            .first()
            .ok_or_else(|| Error::Invalid("word basis needs at least one generator".into()))?;
        for g in &generators {
            if !same_space(first.space(), g.space()) || first.k() != g.k() {
                return Err(Error::SpaceMismatch(
                    "generators live on different spaces or targets".into(),
                ));
            }
        }
        let m = generators.len();
        let mut count = 1usize;
        let mut power = 1usize;
        for _ in 0..max_len {
            power = power.saturating_mul(m);
            count = count.saturating_add(power);
            if count > MAX_WORDS {
                return Err(Error::Invalid(format!(
                    "word basis would exceed {MAX_WORDS} words"
                )));
            }
        }
        let mut words = vec![Vec::new()];
        let mut shell: Vec<Vec<usize>> = vec![Vec::new()];
        for _ in 1..=max_len {
            let mut next = Vec::with_capacity(shell.len() * m);
            for w in &shell {
                for j in 0..m {
                    let mut ext = w.clone();
                    ext.push(j);
                    next.push(ext);
                }
            }
            words.extend(next.iter().cloned());
            shell = next;
        }
        Ok(Self {
            generators,
            max_len,
            words,
            cap: 2 * max_len + 1,
        })
    }

    pub fn generators(&self) -> &[MatrixTestFunction] {
        &self.generators
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        false // always contains the empty word
    }

    pub fn words(&self) -> &[Vec<usize>] {
        &self.words
    }

    /// The word as an algebra element (empty word → 𝟙), carrying the
    /// internal degree cap 2·max_len + 1.
    pub fn word_element(&self, i: usize) -> Result<BorchersElement> {
        let word = self
            .words
            .get(i)
            .ok_or_else(|| Error::IndexOutOfRange(format!("word {i} of {}", self.words.len())))?;
        self.indices_element(word)
    }

    /// An arbitrary index sequence as an element (not necessarily in the
    /// basis).
    pub fn indices_element(&self, word: &[usize]) -> Result<BorchersElement> {
        for &j in word {
            if j >= self.generators.len() {
                return Err(Error::IndexOutOfRange(format!(
                    "generator {j} of {}",
                    self.generators.len()
                )));
            }
        }
        if word.is_empty() {
            let g0 = &self.generators[0];
            return BorchersElement::unit(Arc::clone(g0.space()), g0.k())
                .with_cap(self.cap.max(crate::algebra::DEFAULT_DEGREE_CAP));
        }
        let factors: Vec<MatrixTestFunction> = word
            .iter()
            .map(|&j| self.generators[j].clone())
            .collect();
        BorchersElement::monomial_with_cap(
            Complex64::new(1.0, 0.0),
            &factors,
            self.cap.max(word.len()),
        )
    }

    /// Human-readable word label, e.g. "1" or "g2·g0".
    pub fn describe_word(&self, i: usize) -> String {
        let w = &self.words[i];
        if w.is_empty() {
            "1".into()
        } else {
            w.iter().map(|j| format!("g{j}")).collect::<Vec<_>>().join("·")
        }
    }
}

/// The Gram matrix G[i, j] = ω(star(w_i) × w_j) over the word basis.
pub fn build_gram(omega: &StateFunctional, basis: &WordBasis) -> Result<DMatrix<Complex64>> {
    let n = basis.len();
    let elements: Vec<BorchersElement> = (0..n)
        .map(|i| basis.word_element(i))
        .collect::<Result<Vec<_>>>()?;
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] = omega.sesquilinear(&elements[i], &elements[j])?;
        }
    }
    Ok(g)
}

/// Options for [`gns_construct_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct GnsOptions {
    /// Continue past negative Gram eigenvalues (Krein-style data): instead
    /// of raising [`Error::NonPositiveState`], negative directions are
    /// retained with their sign recorded in the representation's
    /// `signature`, and inner products carry that sign (an indefinite
    /// J-metric; no positive orthonormalization is forced).
    pub allow_indefinite: bool,
}

/// The reconstructed tuple (H, Ω, Φ) in finite coordinates.
#[derive(Debug, Clone)]
pub struct GnsRepresentation {
    pub basis: WordBasis,
    state: StateFunctional,
    /// Hilbert-space dimension after the null quotient.
    pub dim: usize,
    /// Number of dropped (null) directions.
    pub dropped: usize,
    /// Sign of the metric per retained direction (all +1 for a positive
    /// state; −1 entries appear only under the indefinite flag).  Inner
    /// products on the retained space are ⟨u, v⟩ = Σ_r conj(u_r)·J_r·v_r.
    pub signature: Vec<f64>,
    /// Smallest Gram eigenvalue (before any quotient).
    pub min_eigenvalue: f64,
    /// The relative null threshold used.
    pub tol: f64,
    /// All Gram eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Word Gram matrix (kept for diagnostics; desk-scale sizes).
    pub gram: DMatrix<Complex64>,
    /// Maps word coordinates to orthonormal Hilbert coordinates
    /// (rows = retained directions, scaled eigenvectors).
    pub basis_map: DMatrix<Complex64>,
    /// Canonical lift: Hilbert coordinates back to word coordinates
    /// (right-inverse of `basis_map`).
    lift: DMatrix<Complex64>,
    /// Vacuum vector [𝟙] in Hilbert coordinates.
    pub vacuum: DVector<Complex64>,
    /// Field operators Φ(g_j) compressed to the retained space.
    pub ops: Vec<DMatrix<Complex64>>,
    /// Set when negative directions were dropped under the indefinite flag.
    pub indefinite_warning: Option<String>,
}

/// Strict GNS construction: negative Gram eigenvalues below −tol·λ_max are
/// a hard [`Error::NonPositiveState`].
pub fn gns_construct(
    omega: &StateFunctional,
    basis: WordBasis,
    tol: f64,
) -> Result<GnsRepresentation> {
    gns_construct_with(omega, basis, tol, GnsOptions::default())
}

/// GNS construction with an explicit negative-eigenvalue policy.
pub fn gns_construct_with(
    omega: &StateFunctional,
    basis: WordBasis,
    tol: f64,
    options: GnsOptions,
) -> Result<GnsRepresentation> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::Invalid(format!("null threshold must be positive, got {tol}")));
    }
    let gram = build_gram(omega, &basis)?;
    let eig = hermitian_eigen(&gram);
    let lambda_max = eig
        .values
        .iter()
        .map(|v| v.abs())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let threshold = tol * lambda_max;
    let min_eigenvalue = *eig.values.last().expect("nonempty spectrum");
    let mut indefinite_warning = None;
    if min_eigenvalue < -threshold {
        let col = eig.values.len() - 1;
        let witness = describe_witness(&basis, &eig.vectors.column(col).into_owned());
        if options.allow_indefinite {
            indefinite_warning = Some(format!(
                "indefinite Gram: eigenvalue {min_eigenvalue:e} on {witness}; \
                 negative directions retained with Krein signature −1"
            ));
        } else {
            return Err(Error::NonPositiveState {
                min_eigenvalue,
                witness,
            });
        }
    }
    let retained: Vec<usize> = (0..eig.values.len())
        .filter(|&i| eig.values[i].abs() > threshold)
        .collect();
    let dim = retained.len();
    let dropped = eig.values.len() - dim;
    let signature: Vec<f64> = retained
        .iter()
        .map(|&i| if eig.values[i] < 0.0 { -1.0 } else { 1.0 })
        .collect();
    let w = basis.len();
    let mut basis_map = DMatrix::zeros(dim, w);
    let mut lift = DMatrix::zeros(w, dim);
    for (row, &i) in retained.iter().enumerate() {
        let sqrt_l = eig.values[i].abs().sqrt();
        for col in 0..w {
            basis_map[(row, col)] = eig.vectors[(col, i)].conj() * sqrt_l;
            lift[(col, row)] = eig.vectors[(col, i)] / sqrt_l;
        }
    }
    // Vacuum = image of the empty word (index 0 by construction).
    let vacuum = DVector::from_iterator(dim, (0..dim).map(|r| basis_map[(r, 0)]));

    // Operators: T_j[w, w'] = ω(star(w) × g_j × w'), compressed by the lift.
    let elements: Vec<BorchersElement> = (0..w)
        .map(|i| basis.word_element(i))
        .collect::<Result<Vec<_>>>()?;
    let mut ops = Vec::with_capacity(basis.generators().len());
    for g in basis.generators() {
        let middle = BorchersElement::from_test_fn(g).with_cap(basis.cap())?;
        let mut t = DMatrix::zeros(w, w);
        for a in 0..w {
            let left = elements[a].star();
            for b in 0..w {
                let prod = left.cross(&middle)?.cross(&elements[b])?;
                t[(a, b)] = omega.eval(&prod)?;
            }
        }
        ops.push(apply_signs(&signature, lift.adjoint() * &t * &lift));
    }
    Ok(GnsRepresentation {
        basis,
        state: omega.clone(),
        dim,
        dropped,
        signature,
        min_eigenvalue,
        tol,
        eigenvalues: eig.values,
        gram,
        basis_map,
        lift,
        vacuum,
        ops,
        indefinite_warning,
    })
}

impl WordBasis {
    pub(crate) fn cap(&self) -> usize {
        self.cap
    }
}

/// Left-multiplies by the metric J = diag(signature): row r flips sign when
/// the direction is negative.  (Form-matrix elements T = B†JMB invert to
/// M = J·L†TL.)
fn apply_signs(signature: &[f64], mut m: DMatrix<Complex64>) -> DMatrix<Complex64> {
    for (r, &s) in signature.iter().enumerate() {
        if s < 0.0 {
            for c in 0..m.ncols() {
                m[(r, c)] = -m[(r, c)];
            }
        }
    }
    m
}

impl GnsRepresentation {
    pub fn state(&self) -> &StateFunctional {
        &self.state
    }

    /// The compressed matrix of Φ(f) for an arbitrary degree-1 test
    /// function (not restricted to the generator span):
    /// M[a, b] = ⟨e_a, Φ(f) e_b⟩ evaluated through ω.
    pub fn phi_matrix(&self, f: &MatrixTestFunction) -> Result<DMatrix<Complex64>> {
        let w = self.basis.len();
        let middle = BorchersElement::from_test_fn(f).with_cap(self.basis.cap())?;
        let mut t = DMatrix::zeros(w, w);
        for a in 0..w {
            let left = self.basis.word_element(a)?.star();
            for b in 0..w {
                let prod = left.cross(&middle)?.cross(&self.basis.word_element(b)?)?;
                t[(a, b)] = self.state.eval(&prod)?;
            }
        }
        Ok(apply_signs(
            &self.signature,
            self.lift.adjoint() * &t * &self.lift,
        ))
    }

    /// The (possibly indefinite) inner product on the retained space,
    /// ⟨u, v⟩ = Σ_r conj(u_r)·J_r·v_r.
    pub fn inner(&self, u: &DVector<Complex64>, v: &DVector<Complex64>) -> Complex64 {
        (0..self.dim)
            .map(|r| u[r].conj() * self.signature[r] * v[r])
            .sum()
    }

    /// Hilbert coordinates of the class [word] for any index sequence with
    /// length ≤ max_len.
    pub fn word_vector(&self, word: &[usize]) -> Result<DVector<Complex64>> {
        let pos = self
            .basis
            .words()
            .iter()
            .position(|w| w == word)
            .ok_or_else(|| Error::IndexOutOfRange(format!("word {word:?} not in basis")))?;
        Ok(DVector::from_iterator(
            self.dim,
            (0..self.dim).map(|r| self.basis_map[(r, pos)]),
        ))
    }
}

pub(crate) fn describe_witness(basis: &WordBasis, vec: &DVector<Complex64>) -> String {
    let mut parts: Vec<(f64, String)> = (0..basis.len())
        .filter(|&i| vec[i].norm() > 1e-8)
        .map(|i| {
            (
                vec[i].norm(),
                format!("({:+.4}{:+.4}i)·{}", vec[i].re, vec[i].im, basis.describe_word(i)),
            )
        })
        .collect();
    parts.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite"));
    let shown: Vec<String> = parts.into_iter().take(4).map(|(_, s)| s).collect();
    format!("witness vector {}", shown.join(" "))
}

/// Reconstructed expectation of a generator word.
#[derive(Debug, Clone, Copy)]
pub struct Expectation {
    pub value: Complex64,
    /// True when the word is longer than max_len, so the top-shell
    /// compression may have truncated it.
    pub compressed: bool,
}

/// ⟨Ω, Φ(g_{i_1}) ··· Φ(g_{i_l}) Ω⟩ from the compressed operators.
pub fn vacuum_expectation(rep: &GnsRepresentation, word: &[usize]) -> Result<Expectation> {
    for &j in word {
        if j >= rep.ops.len() {
            return Err(Error::IndexOutOfRange(format!(
                "generator {j} of {}",
                rep.ops.len()
            )));
        }
    }
    let mut v = rep.vacuum.clone();
    for &j in word.iter().rev() {
        v = &rep.ops[j] * v;
    }
    Ok(Expectation {
        value: rep.inner(&rep.vacuum, &v),
        compressed: word.len() > rep.basis.max_len(),
    })
}

/// A point-level automorphism of the sampled space.
#[derive(Debug, Clone)]
pub enum SpaceAutomorphism {
    /// Lattice translation by a shift vector (periodic axes only).
    Shift(Vec<f64>),
    /// Explicit permutation in lookup form: image values are
    /// `new[i] = old[perm[i]]` — i.e. `perm[i]` is the preimage of point i.
    Permutation(Vec<usize>),
}

impl SpaceAutomorphism {
    /// The lookup permutation realizing (σf)(x_i) = f(σ⁻¹ x_i).
    pub fn lookup(&self, space: &crate::space::SampledSpace) -> Result<Vec<usize>> {
        match self {
            SpaceAutomorphism::Shift(a) => space.translation_permutation(a),
            SpaceAutomorphism::Permutation(p) => {
                if p.len() != space.len() {
                    return Err(Error::Invalid(format!(
                        "permutation of length {} on a {}-point space",
                        p.len(),
                        space.len()
                    )));
                }
                let mut seen = vec![false; p.len()];
                for &i in p {
                    if i >= p.len() || seen[i] {
                        return Err(Error::Invalid("not a permutation".into()));
                    }
                    seen[i] = true;
                }
                for (i, &pre) in p.iter().enumerate() {
                    if (space.weight(i) - space.weight(pre)).abs() > 1e-12 {
                        return Err(Error::NotInvariant(format!(
                            "permutation does not preserve weights at point {i}"
                        )));
                    }
                }
                Ok(p.clone())
            }
        }
    }
}

fn permute_fn(f: &MatrixTestFunction, perm: &[usize]) -> MatrixTestFunction {
    let values = perm.iter().map(|&j| f.value(j).clone()).collect();
    MatrixTestFunction::new(Arc::clone(f.space()), f.k(), values).expect("same shape")
}

/// The induced unitary and its diagnostics.
#[derive(Debug, Clone)]
pub struct SymmetryReport {
    pub unitary: DMatrix<Complex64>,
    /// max |U†JU − J| entrywise (J = Id for a positive state).
    pub unitarity_defect: f64,
    /// ‖U Ω − Ω‖.
    pub vacuum_defect: f64,
    /// max |ω(σ w) − ω(w)| over basis words (the invariance pre-check).
    pub max_state_deviation: f64,
}

/// Builds the unitary induced by a space automorphism on the GNS space.
///
/// Pre-checks (each a hard error): ω must be invariant on all basis words
/// within `tol`, and every transported generator must lie in the generator
/// span (least-squares residual ≤ tol·(1 + ‖σg‖)).
pub fn symmetry_unitary(
    rep: &GnsRepresentation,
    sigma: &SpaceAutomorphism,
    omega: &StateFunctional,
    tol: f64,
) -> Result<SymmetryReport> {
    let space = rep.state.space();
    let perm = sigma.lookup(space)?;
    let gens = rep.basis.generators();
    let m = gens.len();

    // Generator closure: solve σg_i = Σ_j c[j][i] g_j in raw coordinates.
    let flat_len = gens[0].flatten().len();
    let mut a = DMatrix::zeros(flat_len, m);
    for (j, g) in gens.iter().enumerate() {
        for (r, z) in g.flatten().into_iter().enumerate() {
            a[(r, j)] = z;
        }
    }
    let mut coeffs = DMatrix::zeros(m, m);
    for (i, g) in gens.iter().enumerate() {
        let moved = permute_fn(g, &perm);
        let b = DVector::from_vec(moved.flatten());
        let scale = 1.0 + b.norm();
        let (c, residual) = lstsq(&a, &b)?;
        if residual > tol * scale {
            return Err(Error::GeneratorsNotClosed { residual });
        }
        for j in 0..m {
            coeffs[(j, i)] = c[j];
        }
    }

    // Invariance of ω on all basis words.
    let mut max_state_deviation = 0.0f64;
    for i in 0..rep.basis.len() {
        let w = rep.basis.word_element(i)?;
        let moved = transport_element(&w, &perm)?;
        let d = (omega.eval(&moved)? - omega.eval(&w)?).norm();
        max_state_deviation = max_state_deviation.max(d);
        if d > tol {
            return Err(Error::NotInvariant(format!(
                "deviation {d:e} on word {}",
                rep.basis.describe_word(i)
            )));
        }
    }

    // Word-level transport matrix S[w'', w] = Π_t coeffs[j_t, i_t].
    let wlen = rep.basis.len();
    let mut s = DMatrix::zeros(wlen, wlen);
    let index_of: std::collections::HashMap<&[usize], usize> = rep
        .basis
        .words()
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_slice(), i))
        .collect();
    for (col, word) in rep.basis.words().iter().enumerate() {
        if word.is_empty() {
            s[(0, col)] = Complex64::new(1.0, 0.0);
            continue;
        }
        // Expand the product over all images of each letter.
        let mut expansion: Vec<(Vec<usize>, Complex64)> =
            vec![(Vec::new(), Complex64::new(1.0, 0.0))];
        for &letter in word {
            let mut next = Vec::with_capacity(expansion.len() * m);
            for (prefix, c) in &expansion {
                for j in 0..m {
                    let cc = *c * coeffs[(j, letter)];
                    if cc.norm() == 0.0 {
                        continue;
                    }
                    let mut ext = prefix.clone();
                    ext.push(j);
                    next.push((ext, cc));
                }
            }
            expansion = next;
        }
        for (target, c) in expansion {
            let row = index_of[target.as_slice()];
            s[(row, col)] += c;
        }
    }
    let unitary = &rep.basis_map * s * &rep.lift;
    let j = DMatrix::from_diagonal(&DVector::from_iterator(
        rep.dim,
        rep.signature.iter().map(|&s| Complex64::new(s, 0.0)),
    ));
    let unitarity_defect = max_abs(&(unitary.adjoint() * &j * &unitary - j));
    let vacuum_defect = (&unitary * &rep.vacuum - &rep.vacuum).norm();
    Ok(SymmetryReport {
        unitary,
        unitarity_defect,
        vacuum_defect,
        max_state_deviation,
    })
}

/// Applies a point permutation to every factor of an element.
fn transport_element(el: &BorchersElement, perm: &[usize]) -> Result<BorchersElement> {
    let mut out = BorchersElement::scalar(Arc::clone(el.space()), el.k(), el.scalar_part())
        .with_cap(el.cap())?;
    for t in el.terms() {
        let factors: Vec<MatrixTestFunction> =
            t.factors.iter().map(|f| permute_fn(f, perm)).collect();
        let mono = BorchersElement::monomial_with_cap(t.coeff, &factors, el.cap())?;
        out = out.add(&mono)?;
    }
    Ok(out)
}
