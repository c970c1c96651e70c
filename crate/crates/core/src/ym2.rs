//! Two-dimensional SU(N) Yang-Mills observables from representation theory.
//!
//! On a closed genus-g surface of area A the heat-kernel lattice gauge
//! theory is exactly soluble:
//!
//!   Z = Σ_l dim(l)^{2−2g} exp(−τ C₂(l)),   τ = e²A/2,
//!
//! summing over irreducible representations l of SU(N).  The field-strength
//! two-point function takes the almost-topological form
//!
//!   ξ^{ab}(x,y) = (e⁴/Z) Σ_l dim^{2−2g} e^{−τC₂}
//!                 · [ (ρ,ρ) δ^{ab}/N² · δ(x,y) − (p^{ab}(l+ρ)² + m^{ab} n²) ],
//!
//! with n the number of boxes of l, ρ the half-sum of positive roots, and
//! the color tables p^{ab} = 1/N (a=b), −1/(N(N−1)) (a≠b) and m^{ab} = 0
//! (a=b), 1/(N(N−1)) (a≠b).  Conventions: generators obey
//! tr_fund(T^aT^b) = δ^{ab}/2, so C₂ = (Σ_i λ_i(λ_i+N+1−2i) − n²/N)/2 and
//! (ρ,ρ) = N(N²−1)/12, all exact rationals.  Color indices are 1-based;
//! grid points are 0-based.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use num_rational::{Ratio, Rational64};
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::space::SampledSpace;

/// Minimum quadrature size accepted by [`su2_haar_inner`].
pub const MIN_QUADRATURE_POINTS: usize = 64;

/// A dominant-weight label for an irreducible SU(N) representation:
/// a partition λ₁ ≥ λ₂ ≥ … ≥ λ_{N−1} ≥ 0, stored padded to length N.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IrrepLabel {
    n: usize,
    lambda: Vec<i64>,
    boxes: i64,
}

impl IrrepLabel {
    /// Validates and pads the partition.  At most N−1 parts (a length-N
    /// input must end in 0 — a full column of boxes is the trivial rep and
    /// is not a canonical label here).
    pub fn new(n: usize, lambda: &[i64]) -> Result<Self> {
        if n < 2 {
            return Err(Error::Invalid("SU(N) needs N ≥ 2".into()));
        }
        if lambda.len() > n || (lambda.len() == n && lambda[n - 1] != 0) {
            return Err(Error::Invalid(format!(
                "label {lambda:?} has more than {} parts",
                n - 1
            )));
        }
        for w in lambda.windows(2) {
            if w[0] < w[1] {
                return Err(Error::Invalid(format!("label {lambda:?} is not nonincreasing")));
            }
        }
        if lambda.iter().any(|&x| x < 0) {
            return Err(Error::Invalid(format!("label {lambda:?} has negative parts")));
        }
        let mut padded = lambda.to_vec();
        padded.resize(n, 0);
        let boxes = padded.iter().sum();
        Ok(Self { n, lambda: padded, boxes })
    }

    pub fn trivial(n: usize) -> Self {
        Self::new(n, &[]).expect("trivial label")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The padded weight, length N.
    pub fn lambda(&self) -> &[i64] {
        &self.lambda
    }

    /// Total number of boxes n = Σ λ_i.
    pub fn boxes(&self) -> i64 {
        self.boxes
    }
}

/// All labels with at most `cutoff` boxes, ordered by box count and, within
/// a shell, with larger leading parts first — so N=3, cutoff 2 lists
/// (0,0), (1,0), (2,0), (1,1).
pub fn enumerate_irreps(n: usize, cutoff: i64) -> Result<Vec<IrrepLabel>> {
    if n < 2 {
        return Err(Error::Invalid("SU(N) needs N ≥ 2".into()));
    }
    if cutoff < 0 {
        return Err(Error::Invalid("cutoff must be ≥ 0".into()));
    }
    let mut out = Vec::new();
    let mut current = Vec::new();
    for boxes in 0..=cutoff {
        partitions_into(boxes, boxes, n - 1, &mut current, &mut |p| {
            out.push(IrrepLabel::new(n, p).expect("generated partitions are valid"));
        });
    }
    Ok(out)
}

/// Emits partitions of `total` with parts ≤ `max_part` into ≤ `slots`
/// slots, largest first part first.
fn partitions_into(
    total: i64,
    max_part: i64,
    slots: usize,
    current: &mut Vec<i64>,
    emit: &mut impl FnMut(&[i64]),
) {
    if total == 0 {
        emit(current);
        return;
    }
    if slots == 0 {
        return;
    }
    let hi = total.min(max_part);
    // Smallest admissible first part: ceil(total/slots) keeps the tail legal.
    let lo = (total + slots as i64 - 1) / slots as i64;
    for part in (lo..=hi).rev() {
        current.push(part);
        partitions_into(total - part, part, slots - 1, current, emit);
        current.pop();
    }
}

/// Weyl dimension formula Π_{i<j} (λ_i − λ_j + j − i)/(j − i), evaluated in
/// exact rational arithmetic (the result is always an integer).
pub fn weyl_dimension(label: &IrrepLabel) -> u64 {
    let n = label.n;
    let l = &label.lambda;
    let mut acc = Ratio::<i128>::new(1, 1);
    for i in 0..n {
        for j in (i + 1)..n {
            let num = l[i] - l[j] + (j as i64 - i as i64);
            let den = j as i64 - i as i64;
            acc *= Ratio::new(num as i128, den as i128);
        }
    }
    debug_assert!(acc.is_integer(), "Weyl dimension must be integral");
    acc.to_integer() as u64
}

/// Quadratic Casimir in the tr_fund(T^aT^b) = δ^{ab}/2 normalization:
/// C₂ = (Σ_i λ_i(λ_i + N + 1 − 2i) − n²/N)/2, exact.
pub fn casimir2(label: &IrrepLabel) -> Rational64 {
    let n = label.n as i64;
    let mut sum = 0i64;
    for (i, &l) in label.lambda.iter().enumerate() {
        let i1 = i as i64 + 1; // 1-based row index
        sum += l * (l + n + 1 - 2 * i1);
    }
    (Rational64::from_integer(sum) - Rational64::new(label.boxes * label.boxes, n)) / 2
}

/// (ρ,ρ) = N(N²−1)/12 for the half-sum of positive roots of SU(N), in the
/// same bilinear form as [`casimir2`].
pub fn rho_norm(n: usize) -> Rational64 {
    let n = n as i64;
    Rational64::new(n * (n * n - 1), 12)
}

/// The norm-square (l+ρ)² = 2C₂(l) + (ρ,ρ) appearing in the two-point
/// formula, exposed so the interpretation is auditable.
pub fn l_plus_rho_norm_sq(label: &IrrepLabel) -> Rational64 {
    casimir2(label) * 2 + rho_norm(label.n)
}

/// Surface data for the heat-kernel partition function.  The physical
/// couplings enter only through τ = e²A/2 (Boltzmann weight e^{−τC₂}) and
/// the e⁴ correlator prefactor.
#[derive(Debug, Clone)]
pub struct SurfaceParams {
    pub genus: usize,
    pub area: f64,
    pub coupling: f64,
    pub n: usize,
    /// Box-count truncation of the irrep sum.
    pub cutoff: i64,
}

impl SurfaceParams {
    pub fn new(genus: usize, area: f64, coupling: f64, n: usize, cutoff: i64) -> Result<Self> {
        if !(area > 0.0) || !area.is_finite() {
            return Err(Error::Invalid(format!("area must be positive, got {area}")));
        }
        if !(coupling > 0.0) || !coupling.is_finite() {
            return Err(Error::Invalid(format!("coupling must be positive, got {coupling}")));
        }
        if n < 2 {
            return Err(Error::Invalid("SU(N) needs N ≥ 2".into()));
        }
        if cutoff < 0 {
            return Err(Error::Invalid("cutoff must be ≥ 0".into()));
        }
        Ok(Self { genus, area, coupling, n, cutoff })
    }

    /// Unit-area surface with coupling chosen so that e²A/2 = τ.
    pub fn from_tau(genus: usize, tau: f64, n: usize, cutoff: i64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::Invalid(format!("tau must be positive, got {tau}")));
        }
        Self::new(genus, 1.0, (2.0 * tau).sqrt(), n, cutoff)
    }

    /// τ = e²A/2.
    pub fn tau(&self) -> f64 {
        self.coupling * self.coupling * self.area / 2.0
    }
}

/// A truncated-series value with its bookkeeping.
#[derive(Debug, Clone)]
pub struct CorrelatorResult {
    pub value: Complex64,
    pub terms_used: usize,
    /// Magnitude of the last included C₂-shell's contribution.
    pub tail_estimate: f64,
}

/// Z = Σ_{boxes ≤ cutoff} dim^{2−2g} e^{−τC₂}.  The tail estimate is the
/// magnitude of the contribution of the largest included C₂ shell.
pub fn partition_function(params: &SurfaceParams) -> Result<CorrelatorResult> {
    let weights = shell_weights(params)?;
    let mut z = 0.0;
    for (_, w) in &weights {
        z += w;
    }
    let top_c2 = weights
        .iter()
        .map(|(l, _)| casimir2(l))
        .max()
        .expect("cutoff ≥ 0 always includes the trivial rep");
    let tail: f64 = weights
        .iter()
        .filter(|(l, _)| casimir2(l) == top_c2)
        .map(|(_, w)| w)
        .sum();
    Ok(CorrelatorResult {
        value: Complex64::new(z, 0.0),
        terms_used: weights.len(),
        tail_estimate: tail.abs(),
    })
}

/// dim^{2−2g}·e^{−τC₂} per irrep, in enumeration order.
fn shell_weights(params: &SurfaceParams) -> Result<Vec<(IrrepLabel, f64)>> {
    let tau = params.tau();
    let expo = 2 - 2 * params.genus as i32;
    enumerate_irreps(params.n, params.cutoff).map(|labels| {
        labels
            .into_iter()
            .map(|l| {
                let dim = weyl_dimension(&l) as f64;
                let c2 = casimir2(&l).to_f64().expect("small rational");
                let w = dim.powi(expo) * (-tau * c2).exp();
                (l, w)
            })
            .collect()
    })
}

/// p^{ab}: 1/N on the diagonal, −1/(N(N−1)) off it.  1-based color indices.
pub fn color_p(n: usize, a: usize, b: usize) -> Result<Rational64> {
    check_color(n, a)?;
    check_color(n, b)?;
    let nn = n as i64;
    Ok(if a == b {
        Rational64::new(1, nn)
    } else {
        -Rational64::new(1, nn * (nn - 1))
    })
}

/// m^{ab}: 0 on the diagonal, 1/(N(N−1)) off it.  1-based color indices.
pub fn color_m(n: usize, a: usize, b: usize) -> Result<Rational64> {
    check_color(n, a)?;
    check_color(n, b)?;
    let nn = n as i64;
    Ok(if a == b {
        Rational64::zero()
    } else {
        Rational64::new(1, nn * (nn - 1))
    })
}

fn check_color(n: usize, a: usize) -> Result<()> {
    if a == 0 || a > n * n - 1 {
        return Err(Error::IndexOutOfRange(format!(
            "color index {a} outside 1..={}",
            n * n - 1
        )));
    }
    Ok(())
}

/// The field-strength two-point function ξ^{ab}(x,y) on a sampled grid,
/// with the grid delta δ(x,y) = [x=y]/w_x.
pub fn two_point_xi(
    a: usize,
    b: usize,
    x: usize,
    y: usize,
    space: &SampledSpace,
    params: &SurfaceParams,
) -> Result<Complex64> {
    let p = color_p(params.n, a, b)?.to_f64().expect("small rational");
    let m = color_m(params.n, a, b)?.to_f64().expect("small rational");
    for pt in [x, y] {
        if pt >= space.len() {
            return Err(Error::IndexOutOfRange(format!(
                "grid point {pt} outside 0..{}",
                space.len()
            )));
        }
    }
    let delta = if x == y { 1.0 / space.weight(x) } else { 0.0 };
    let rr = rho_norm(params.n).to_f64().expect("small rational");
    let nsq = (params.n * params.n) as f64;
    let contact = if a == b { rr / nsq * delta } else { 0.0 };

    let weights = shell_weights(params)?;
    let z: f64 = weights.iter().map(|(_, w)| w).sum();
    let mut acc = 0.0;
    for (l, w) in &weights {
        let lr = l_plus_rho_norm_sq(l).to_f64().expect("small rational");
        let boxes_sq = (l.boxes() * l.boxes()) as f64;
        acc += w * (contact - (p * lr + m * boxes_sq));
    }
    let e4 = params.coupling.powi(4);
    Ok(Complex64::new(e4 * acc / z, 0.0))
}

/// Σ_{a,b} ξ^{ab}(x,y)·tr(T^aT^b) = ½ Σ_a ξ^{aa}(x,y).  Independent of the
/// insertion points whenever x ≠ y (the contact term is the only x,y
/// dependence).
pub fn gauge_invariant_two_point(
    params: &SurfaceParams,
    x: usize,
    y: usize,
    space: &SampledSpace,
) -> Result<Complex64> {
    let colors = params.n * params.n - 1;
    let mut acc = Complex64::zero();
    for a in 1..=colors {
        acc += two_point_xi(a, a, x, y, space, params)?;
    }
    Ok(acc / 2.0)
}

/// Higher-Casimir evaluator: (label, i) ↦ C_{2i}(label) for i ≥ 2.
pub type CasimirFn<'a> = dyn Fn(&IrrepLabel, usize) -> Result<f64> + 'a;

/// Gauge-invariant (2p)-point correlator skeleton
///
///   (e^{4p}/Z) Σ_l dim^{2−2g} e^{−τC₂} Σ_{i=0..p} f_i · C_{2i}(l),
///
/// with C₀ ≡ 1 and C₂ built in.  `f_coeffs[i]` is the caller's rational
/// function of (ρ,ρ) already evaluated at [`rho_norm`]; higher Casimirs
/// (i ≥ 2) come from the callback.
pub fn two_p_point(
    params: &SurfaceParams,
    p: usize,
    f_coeffs: &[f64],
    higher: Option<&CasimirFn>,
) -> Result<Complex64> {
    if f_coeffs.len() != p + 1 {
        return Err(Error::Invalid(format!(
            "expected p+1 = {} coefficients (constant term first), got {}",
            p + 1,
            f_coeffs.len()
        )));
    }
    if p >= 2 && higher.is_none() && f_coeffs[2..].iter().any(|&f| f != 0.0) {
        return Err(Error::MissingCasimir(2));
    }
    let weights = shell_weights(params)?;
    let z: f64 = weights.iter().map(|(_, w)| w).sum();
    let mut acc = 0.0;
    for (l, w) in &weights {
        let c2 = casimir2(l).to_f64().expect("small rational");
        let mut inner = 0.0;
        for (i, &f) in f_coeffs.iter().enumerate() {
            if f == 0.0 {
                continue;
            }
            let ci = match i {
                0 => 1.0,
                1 => c2,
                _ => higher.ok_or(Error::MissingCasimir(i))?(l, i)?,
            };
            inner += f * ci;
        }
        acc += w * inner;
    }
    let prefactor = params.coupling.powi(4 * p as i32);
    Ok(Complex64::new(prefactor * acc / z, 0.0))
}

/// SU(2) Haar inner product of characters,
/// ∫₀^π χ_{j1}(θ) χ_{j2}(θ) (2/π) sin²θ dθ with χ_j(θ) = sin((2j+1)θ)/sinθ,
/// by Gauss–Legendre quadrature.  Equals δ_{j1,j2} up to quadrature error.
pub fn su2_haar_inner(j1: f64, j2: f64, quadrature_points: usize) -> Result<f64> {
    if quadrature_points < MIN_QUADRATURE_POINTS {
        return Err(Error::TooFewPoints {
            got: quadrature_points,
            min: MIN_QUADRATURE_POINTS,
        });
    }
    for j in [j1, j2] {
        let two_j = 2.0 * j;
        if j < 0.0 || (two_j - two_j.round()).abs() > 1e-12 {
            return Err(Error::Invalid(format!("j = {j} is not a half-integer ≥ 0")));
        }
    }
    let rule = GaussLegendre::new(
        NonZeroUsize::new(quadrature_points).expect("points ≥ 64"),
    );
    let chi = |j: f64, theta: f64| {
        let k = 2.0 * j + 1.0;
        let s = theta.sin();
        if s.abs() < 1e-12 {
            // limit sin(kθ)/sinθ → k cos(kθ)/cosθ at θ ∈ {0, π}
            k * (k * theta).cos() / theta.cos()
        } else {
            (k * theta).sin() / s
        }
    };
    Ok(rule.integrate(0.0, std::f64::consts::PI, |t| {
        chi(j1, t) * chi(j2, t) * (2.0 / std::f64::consts::PI) * t.sin().powi(2)
    }))
}
