//! Matrix states: finite-dimensional compressions of a reconstructed
//! representation and finite-order approximations of a state.
//!
//! A matrix state of level n is the data (d, β, Ω): the span H_n of word
//! classes of length ≤ n, the compressed generator images β(g) = Q†Φ(g)Q
//! with Q an orthonormal basis of H_n, and the vacuum coordinates Q†Ω.
//! Its evaluation  w ↦ ⟨Ω, β(g_{i1})···β(g_{il}) Ω⟩  agrees with the full
//! representation on every word of length ≤ level (and, by the adjoint
//! identity, even at level + 1 — truncation bites two letters past the
//! level).
//!
//! The order of a state is the rank of the operator family f ↦ Φ(f) over a
//! probe set; the finite-order approximation replaces Φ(g) by Φ(P g) with P
//! the weighted-L² projection onto a chosen span of test functions, which
//! reproduces the state exactly on words built from that span.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::algebra::{same_space, BorchersElement, MatrixTestFunction};
use crate::error::{Error, Result};
use crate::gns::{gns_construct, vacuum_expectation, GnsRepresentation, WordBasis};
use crate::linalg::{column_span_basis, lstsq, numerical_rank};
use crate::states::StateFunctional;

/// A level-n matrix-state approximation of a reconstructed representation.
#[derive(Debug, Clone)]
pub struct MatrixState {
    /// The compression level n (maximum word length spanned exactly).
    pub level: usize,
    /// d(n): dimension of the span of word classes of length ≤ n.
    pub dim: usize,
    /// Per-generator images β(g_j) on the compressed space.
    pub images: Vec<DMatrix<Complex64>>,
    /// Vacuum coordinates in the compressed space.
    pub vacuum: DVector<Complex64>,
}

/// Operator-family rank report for [`state_order`].
#[derive(Debug, Clone)]
pub struct OrderReport {
    /// Numerical rank of {Φ(probe_i)} — the order witnessed by the probes.
    pub order: usize,
    /// Rank of the probe functions themselves (diagnoses a thin probe set).
    pub probe_rank: usize,
    /// Singular values of the stacked operator family, descending.
    pub singular_values: Vec<f64>,
}

/// The order of the represented state as witnessed by a probe family:
/// the numerical rank (σ > tol·σ_max) of probe ↦ matrix(Φ(probe)).
pub fn state_order(
    rep: &GnsRepresentation,
    probes: &[MatrixTestFunction],
    tol: f64,
) -> Result<OrderReport> {
    if probes.is_empty() {
        return Err(Error::EmptyProbes);
    }
    let d2 = rep.dim * rep.dim;
    let mut stacked = DMatrix::zeros(d2, probes.len());
    let flat_len = probes[0].flatten().len();
    let mut probe_mat = DMatrix::zeros(flat_len, probes.len());
    for (p, probe) in probes.iter().enumerate() {
        let phi = rep.phi_matrix(probe)?;
        for (r, z) in phi.iter().enumerate() {
            stacked[(r, p)] = *z;
        }
        for (r, z) in probe.flatten().into_iter().enumerate() {
            probe_mat[(r, p)] = z;
        }
    }
    let svals = crate::linalg::singular_values(&stacked);
    Ok(OrderReport {
        order: numerical_rank(&stacked, tol),
        probe_rank: numerical_rank(&probe_mat, tol),
        singular_values: svals,
    })
}

/// Projects the representation onto the span of word classes of length ≤ n.
pub fn compress_to_matrix_state(rep: &GnsRepresentation, n: usize) -> Result<MatrixState> {
    if n > rep.basis.max_len() {
        return Err(Error::LevelTooLarge {
            level: n,
            max_len: rep.basis.max_len(),
        });
    }
    if rep.signature.iter().any(|&s| s < 0.0) {
        return Err(Error::Invalid(
            "matrix-state compression requires a positive representation".into(),
        ));
    }
    // Words are graded by length, so length ≤ n is a prefix of the basis.
    let m = rep.basis.generators().len();
    let mut count = 1usize;
    let mut power = 1usize;
    for _ in 0..n {
        power *= m;
        count += power;
    }
    let span = rep.basis_map.columns(0, count).into_owned();
    let q = column_span_basis(&span, 1e-12);
    let dim = q.ncols();
    let images = rep
        .ops
        .iter()
        .map(|op| q.adjoint() * op * &q)
        .collect::<Vec<_>>();
    let vacuum = q.adjoint() * &rep.vacuum;
    Ok(MatrixState {
        level: n,
        dim,
        images,
        vacuum,
    })
}

/// ⟨Ω, β(g_{i1})···β(g_{il}) Ω⟩ on the compressed space.
pub fn eval_matrix_state(ms: &MatrixState, word: &[usize]) -> Result<Complex64> {
    for &j in word {
        if j >= ms.images.len() {
            return Err(Error::IndexOutOfRange(format!(
                "generator {j} of {}",
                ms.images.len()
            )));
        }
    }
    let mut v = ms.vacuum.clone();
    for &j in word.iter().rev() {
        v = &ms.images[j] * v;
    }
    Ok((ms.vacuum.adjoint() * v)[(0, 0)])
}

/// One row of [`convergence_report`].
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConvergenceRow {
    pub level: usize,
    pub dim: usize,
    /// max |T⁽ⁿ⁾(w) − T(w)| over test words of length ≤ level.
    pub max_err_within: f64,
    /// Same maximum over the longer test words.
    pub max_err_beyond: f64,
}

/// Compares each level's matrix state against the full representation on a
/// word sample, split at the level (within must vanish; beyond is the
/// approximation error).
pub fn convergence_report(
    rep: &GnsRepresentation,
    levels: &[usize],
    test_words: &[Vec<usize>],
) -> Result<Vec<ConvergenceRow>> {
    let mut rows = Vec::with_capacity(levels.len());
    for &n in levels {
        let ms = compress_to_matrix_state(rep, n)?;
        let mut within = 0.0f64;
        let mut beyond = 0.0f64;
        for w in test_words {
            let full = vacuum_expectation(rep, w)?.value;
            let approx = eval_matrix_state(&ms, w)?;
            let err = (full - approx).norm();
            if w.len() <= n {
                within = within.max(err);
            } else {
                beyond = beyond.max(err);
            }
        }
        rows.push(ConvergenceRow {
            level: n,
            dim: ms.dim,
            max_err_within: within,
            max_err_beyond: beyond,
        });
    }
    Ok(rows)
}

/// Weighted-L² pairing on degree-1 functions:
/// ⟨f, g⟩ = Σ_x w_x tr(f(x)* g(x))/k.
fn l2_pair(f: &MatrixTestFunction, g: &MatrixTestFunction) -> Complex64 {
    let space = f.space();
    let k = f.k() as f64;
    (0..space.len())
        .map(|x| (f.value(x).adjoint() * g.value(x)).trace() * space.weight(x) / k)
        .sum()
}

/// A finite-order approximation T[f₁..f_N] of a state: generators are
/// evaluated through φ′(g) = Φ(P g), with P the weighted-L² projection onto
/// span{f_i}.  Exact on words built from that span.
#[derive(Debug, Clone)]
pub struct FiniteOrderState {
    rep: GnsRepresentation,
    chosen: Vec<MatrixTestFunction>,
    /// Gram of the chosen functions in the weighted-L² pairing.
    gram: DMatrix<Complex64>,
    report: OrderReport,
}

/// Builds the finite-order approximation of ω determined by the chosen
/// degree-1 functions, over the given word basis (which fixes the GNS
/// truncation).
pub fn finite_order_approx(
    omega: &StateFunctional,
    chosen: &[MatrixTestFunction],
    basis: WordBasis,
) -> Result<FiniteOrderState> {
    if chosen.is_empty() {
        return Err(Error::EmptyChoice);
    }
    for f in chosen {
        if !same_space(f.space(), omega.space()) || f.k() != omega.k() {
            return Err(Error::SpaceMismatch(
                "chosen functions must live on the state's space and target".into(),
            ));
        }
    }
    let rep = gns_construct(omega, basis, crate::gns::DEFAULT_NULL_TOL)?;
    let n = chosen.len();
    let mut gram = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            gram[(i, j)] = l2_pair(&chosen[i], &chosen[j]);
        }
    }
    let report = state_order(&rep, chosen, 1e-10)?;
    Ok(FiniteOrderState {
        rep,
        chosen: chosen.to_vec(),
        gram,
        report,
    })
}

impl FiniteOrderState {
    /// The order M ≤ N witnessed by the chosen family.
    pub fn order(&self) -> usize {
        self.report.order
    }

    pub fn report(&self) -> &OrderReport {
        &self.report
    }

    pub fn rep(&self) -> &GnsRepresentation {
        &self.rep
    }

    /// Weighted-L² projection of g onto the chosen span (the concrete
    /// coordinate-functional extension: zero on the orthogonal complement).
    pub fn project(&self, g: &MatrixTestFunction) -> Result<MatrixTestFunction> {
        let b = DVector::from_iterator(
            self.chosen.len(),
            self.chosen.iter().map(|f| l2_pair(f, g)),
        );
        let (coeffs, _) = lstsq(&self.gram, &b)?;
        let mut acc = MatrixTestFunction::zero(
            std::sync::Arc::clone(self.chosen[0].space()),
            self.chosen[0].k(),
        );
        for (c, f) in coeffs.iter().zip(&self.chosen) {
            acc = acc.add(&f.scale(*c))?;
        }
        Ok(acc)
    }

    /// ⟨Ω, φ′(g₁)···φ′(g_l) Ω⟩ with φ′ = Φ∘P.
    pub fn eval_word(&self, word: &[MatrixTestFunction]) -> Result<Complex64> {
        let mut v = self.rep.vacuum.clone();
        for g in word.iter().rev() {
            let phi = self.rep.phi_matrix(&self.project(g)?)?;
            v = phi * v;
        }
        Ok(self.rep.inner(&self.rep.vacuum, &v))
    }

    /// Evaluates a full algebra element term by term.
    pub fn eval(&self, el: &BorchersElement) -> Result<Complex64> {
        let mut acc = el.scalar_part();
        for term in el.terms() {
            acc += term.coeff * self.eval_word(&term.factors)?;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    use super::*;
    use crate::gns::DEFAULT_NULL_TOL;
    use crate::space::SampledSpace;
    use crate::states::WightmanData;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rand_fn(rng: &mut StdRng, space: &Arc<SampledSpace>, k: usize) -> MatrixTestFunction {
        let values = (0..space.len())
            .map(|_| {
                DMatrix::from_fn(k, k, |_, _| {
                    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
                })
            })
            .collect();
        MatrixTestFunction::new(Arc::clone(space), k, values).unwrap()
    }

    fn constant_state(space: &Arc<SampledSpace>, alpha: &[f64]) -> StateFunctional {
        StateFunctional::new(
            Arc::clone(space),
            1,
            WightmanData::Constant {
                alpha: alpha.to_vec(),
            },
            None,
        )
        .unwrap()
    }

    fn delta(space: &Arc<SampledSpace>, at: usize) -> MatrixTestFunction {
        MatrixTestFunction::delta_at(Arc::clone(space), at, DMatrix::identity(1, 1)).unwrap()
    }

    /// Standard-normal moments (1, 0, 1, 0, 3, 0): a strictly positive
    /// Hankel form, so the one-generator tower has full rank.
    const GAUSS_ALPHA: [f64; 6] = [1.0, 0.0, 1.0, 0.0, 3.0, 0.0];

    fn gaussian_tower(space: &Arc<SampledSpace>) -> (StateFunctional, GnsRepresentation) {
        let omega = constant_state(space, &GAUSS_ALPHA);
        let g = MatrixTestFunction::constant(Arc::clone(space), DMatrix::identity(1, 1)).unwrap();
        let rep = gns_construct(&omega, WordBasis::new(vec![g], 2).unwrap(), DEFAULT_NULL_TOL)
            .unwrap();
        (omega, rep)
    }

    #[test]
    fn vacuum_only_family_has_order_zero() {
        let space = Arc::new(SampledSpace::cyclic_1d(2, 1.0).unwrap());
        let omega = constant_state(&space, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let mut rng = StdRng::seed_from_u64(19);
        let gens = vec![rand_fn(&mut rng, &space, 1)];
        let rep = gns_construct(&omega, WordBasis::new(gens, 2).unwrap(), DEFAULT_NULL_TOL)
            .unwrap();
        let probes: Vec<MatrixTestFunction> = (0..2).map(|i| delta(&space, i)).collect();
        let report = state_order(&rep, &probes, 1e-10).unwrap();
        assert_eq!(report.order, 0);
        assert_eq!(report.probe_rank, 2);
        assert!(matches!(
            state_order(&rep, &[], 1e-10),
            Err(Error::EmptyProbes)
        ));
    }

    #[test]
    fn constant_data_gives_an_order_one_family() {
        // Φ(f) depends on f only through Σ_x w_x f(x), so any probe set
        // collapses to rank 1.
        let space = Arc::new(SampledSpace::cyclic_1d(3, 0.5).unwrap());
        let (_, rep) = {
            let omega = constant_state(&space, &GAUSS_ALPHA);
            let g =
                MatrixTestFunction::constant(Arc::clone(&space), DMatrix::identity(1, 1)).unwrap();
            let rep =
                gns_construct(&omega, WordBasis::new(vec![g], 2).unwrap(), DEFAULT_NULL_TOL)
                    .unwrap();
            (omega, rep)
        };
        let probes: Vec<MatrixTestFunction> = (0..3).map(|i| delta(&space, i)).collect();
        let report = state_order(&rep, &probes, 1e-10).unwrap();
        assert_eq!(report.order, 1);
        assert_eq!(report.probe_rank, 3);
    }

    #[test]
    fn delta_probes_witness_order_m_for_delta_paired_data() {
        let space = Arc::new(SampledSpace::cyclic_1d(3, 1.0).unwrap());
        let omega = StateFunctional::new(
            Arc::clone(&space),
            1,
            WightmanData::Ultralocal,
            None,
        )
        .unwrap();
        let gens: Vec<MatrixTestFunction> = (0..3).map(|i| delta(&space, i)).collect();
        let rep = gns_construct(&omega, WordBasis::new(gens, 1).unwrap(), DEFAULT_NULL_TOL)
            .unwrap();
        let probes: Vec<MatrixTestFunction> = (0..3).map(|i| delta(&space, i)).collect();
        let report = state_order(&rep, &probes, 1e-10).unwrap();
        assert_eq!(report.order, 3);
    }

    #[test]
    fn level_zero_is_the_pure_vacuum() {
        let space = Arc::new(SampledSpace::single_point());
        let (_, rep) = gaussian_tower(&space);
        let ms = compress_to_matrix_state(&rep, 0).unwrap();
        assert_eq!(ms.level, 0);
        assert_eq!(ms.dim, 1);
        assert_abs_diff_eq!(
            eval_matrix_state(&ms, &[]).unwrap().re,
            1.0,
            epsilon = 1e-12
        );
        assert!(matches!(
            compress_to_matrix_state(&rep, 3),
            Err(Error::LevelTooLarge { level: 3, max_len: 2 })
        ));
    }

    #[test]
    fn levels_agree_with_the_representation_up_to_their_length() {
        let space = Arc::new(SampledSpace::cyclic_1d(4, 0.7).unwrap());
        let mut rng = StdRng::seed_from_u64(23);
        let alpha: Vec<f64> = (0..6).map(|n| 0.5f64.powi(n)).collect();
        let omega = constant_state(&space, &alpha);
        let gens = vec![rand_fn(&mut rng, &space, 1), rand_fn(&mut rng, &space, 1)];
        let rep = gns_construct(&omega, WordBasis::new(gens, 2).unwrap(), DEFAULT_NULL_TOL)
            .unwrap();
        let mut prev_dim = 0;
        for n in 0..=2usize {
            let ms = compress_to_matrix_state(&rep, n).unwrap();
            assert!(ms.dim >= prev_dim, "d(n) must be nondecreasing");
            prev_dim = ms.dim;
            for (i, w) in rep.basis.words().iter().enumerate() {
                if w.len() > n {
                    continue;
                }
                let full = vacuum_expectation(&rep, w).unwrap().value;
                let approx = eval_matrix_state(&ms, w).unwrap();
                assert!(
                    (full - approx).norm() < 1e-10,
                    "level {n}, word {i}: {full} vs {approx}"
                );
            }
        }
        // Full level: agreement on every stored word.
        let ms = compress_to_matrix_state(&rep, 2).unwrap();
        assert_eq!(ms.dim, rep.dim);
        for w in rep.basis.words() {
            let full = vacuum_expectation(&rep, w).unwrap().value;
            let approx = eval_matrix_state(&ms, w).unwrap();
            assert!((full - approx).norm() < 1e-10);
        }
    }

    #[test]
    fn truncation_error_shows_two_letters_past_the_level() {
        // For the standard-normal tower the level-1 state loops on the
        // two-dimensional span {Ω, [g]} and reports ⟨g⁴⟩ = 1 instead of 3;
        // level 2 is the full representation.
        let space = Arc::new(SampledSpace::single_point());
        let (_, rep) = gaussian_tower(&space);
        assert_eq!(rep.dim, 3);
        let words: Vec<Vec<usize>> =
            (0..=4usize).map(|l| std::iter::repeat(0).take(l).collect()).collect();
        let rows = convergence_report(&rep, &[1, 2], &words).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].max_err_within < 1e-10);
        assert!(rows[1].max_err_within < 1e-10);
        // Level 1 misses ⟨g⁴⟩ by 2; level 2 agrees with the rep everywhere.
        assert_abs_diff_eq!(rows[0].max_err_beyond, 2.0, epsilon = 1e-9);
        assert!(rows[1].max_err_beyond < 1e-10);
        assert!(rows[1].max_err_beyond <= rows[0].max_err_beyond);
        // The length-2 word is exact even at level 1: truncation cannot
        // bite at level + 1.
        let ms1 = compress_to_matrix_state(&rep, 1).unwrap();
        let full = vacuum_expectation(&rep, &[0, 0]).unwrap().value;
        let approx = eval_matrix_state(&ms1, &[0, 0]).unwrap();
        assert!((full - approx).norm() < 1e-10);
    }

    #[test]
    fn noncommuting_images_distinguish_word_orders() {
        // A k = 2 constant state with α_n = 1 evaluates words as
        // tr(∫f₁···∫f_l)/2 — evaluation at a matrix point, so it is a
        // genuine state whose degree-3 values see the factor order:
        // tr(σ_z σ_x σ_y) = 2i but the reversed product traces to −2i.
        let space = Arc::new(SampledSpace::single_point());
        let omega = StateFunctional::new(
            Arc::clone(&space),
            2,
            WightmanData::Constant { alpha: vec![1.0; 8] },
            None,
        )
        .unwrap();
        let pauli = [
            DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]),
            DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]),
            DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]),
        ];
        let gens: Vec<MatrixTestFunction> = pauli
            .iter()
            .map(|m| MatrixTestFunction::constant(Arc::clone(&space), m.clone()).unwrap())
            .collect();
        let rep = gns_construct(&omega, WordBasis::new(gens, 3).unwrap(), DEFAULT_NULL_TOL)
            .unwrap();
        let ms = compress_to_matrix_state(&rep, 3).unwrap();
        let zxy = eval_matrix_state(&ms, &[0, 1, 2]).unwrap();
        let yxz = eval_matrix_state(&ms, &[2, 1, 0]).unwrap();
        assert_abs_diff_eq!(zxy.im, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(yxz.im, -1.0, epsilon = 1e-9);
        assert!(
            (zxy - yxz).norm() > 1.0,
            "expected noncommuting images, got {zxy} vs {yxz}"
        );
        assert!(matches!(
            eval_matrix_state(&ms, &[5]),
            Err(Error::IndexOutOfRange(_))
        ));
    }

    #[test]
    fn full_span_choice_reproduces_the_state() {
        let space = Arc::new(SampledSpace::cyclic_1d(3, 1.0).unwrap());
        let mut rng = StdRng::seed_from_u64(31);
        let alpha: Vec<f64> = (0..6).map(|n| 0.4f64.powi(n)).collect();
        let omega = constant_state(&space, &alpha);
        let gens = vec![rand_fn(&mut rng, &space, 1), rand_fn(&mut rng, &space, 1)];
        let basis = WordBasis::new(gens, 2).unwrap();
        let chosen: Vec<MatrixTestFunction> = (0..3).map(|i| delta(&space, i)).collect();
        let approx = finite_order_approx(&omega, &chosen, basis).unwrap();
        // The deltas span everything, so projection is the identity and
        // the evaluator matches ω on arbitrary short words.
        for _ in 0..4 {
            let (a, b) = (rand_fn(&mut rng, &space, 1), rand_fn(&mut rng, &space, 1));
            let el = BorchersElement::monomial(c(1.0, 0.0), &[a.clone(), b.clone()]).unwrap();
            let direct = omega.eval(&el).unwrap();
            let via = approx.eval_word(&[a, b]).unwrap();
            assert!((direct - via).norm() < 1e-10, "{direct} vs {via}");
        }
        assert!(approx.order() <= chosen.len());
    }

    #[test]
    fn single_choice_has_order_at_most_one() {
        let space = Arc::new(SampledSpace::cyclic_1d(2, 1.0).unwrap());
        let mut rng = StdRng::seed_from_u64(37);
        let omega = constant_state(&space, &GAUSS_ALPHA);
        let g = rand_fn(&mut rng, &space, 1);
        let basis = WordBasis::new(vec![g.clone()], 2).unwrap();
        let approx = finite_order_approx(&omega, &[g], basis).unwrap();
        assert!(approx.order() <= 1);
        assert!(matches!(
            finite_order_approx(
                &omega,
                &[],
                WordBasis::new(
                    vec![rand_fn(&mut rng, &space, 1)],
                    1
                )
                .unwrap()
            ),
            Err(Error::EmptyChoice)
        ));
    }

    #[test]
    fn nested_choices_grow_the_agreement_set() {
        let space = Arc::new(SampledSpace::cyclic_1d(2, 1.0).unwrap());
        let omega = constant_state(&space, &GAUSS_ALPHA);
        let d0 = delta(&space, 0);
        let d1 = delta(&space, 1);
        let gens = vec![d0.clone(), d1.clone()];
        let small = finite_order_approx(
            &omega,
            &[d0.clone()],
            WordBasis::new(gens.clone(), 2).unwrap(),
        )
        .unwrap();
        let large = finite_order_approx(
            &omega,
            &[d0.clone(), d1.clone()],
            WordBasis::new(gens, 2).unwrap(),
        )
        .unwrap();
        // Words inside span{δ₀} agree for both.
        let w00 = [d0.clone(), d0.clone()];
        let direct = omega
            .eval(&BorchersElement::monomial(c(1.0, 0.0), &w00).unwrap())
            .unwrap();
        assert!((small.eval_word(&w00).unwrap() - direct).norm() < 1e-10);
        assert!((large.eval_word(&w00).unwrap() - direct).norm() < 1e-10);
        // A word reaching δ₁ agrees only once δ₁ is chosen.
        let w01 = [d0.clone(), d1.clone()];
        let direct = omega
            .eval(&BorchersElement::monomial(c(1.0, 0.0), &w01).unwrap())
            .unwrap();
        assert!((large.eval_word(&w01).unwrap() - direct).norm() < 1e-10);
        assert!(
            (small.eval_word(&w01).unwrap() - direct).norm() > 1e-3,
            "the thin choice should miss this word"
        );
    }
}
