//! Finite sampled stand-in for the position space Σ.
//!
//! A [`SampledSpace`] is a weighted point set {(x_i, w_i)} in R^d.  Every
//! integral in the crate is the weighted sum  ∫ f ≈ Σ_i w_i f(x_i), and the
//! Dirac delta becomes the grid delta  δ(x_i, x_j) = [i = j] / w_i  so that
//! Σ_j w_j δ(x_i, x_j) g(x_j) = g(x_i) exactly.
//!
//! Axes may be declared periodic with a period length; translation then acts
//! by exact permutation of grid points, which requires the point set to be a
//! uniform lattice along each periodic axis (checked at construction).

use crate::error::{Error, Result};

/// Tolerance for matching grid coordinates when building translation
/// permutations and when validating lattice uniformity.
pub const GRID_MATCH_TOL: f64 = 1e-9;

/// A finite weighted point set with optional per-axis periodicity.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSpace {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    /// One entry per axis: `Some(period)` for a cyclic axis, `None` otherwise.
    periodic: Vec<Option<f64>>,
}

impl SampledSpace {
    /// Builds a space from points, weights, and per-axis periods.
    ///
    /// Validation: nonempty, consistent dimensions, strictly positive
    /// weights, pairwise distinct points, and — on every periodic axis — a
    /// uniform lattice whose span matches the declared period.
    pub fn new(
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
        periodic: Vec<Option<f64>>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Invalid("a sampled space needs at least one point".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::Invalid(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::Invalid("points must have at least one coordinate".into()));
        }
        if periodic.len() != dim {
            return Err(Error::Invalid(format!(
                "{} axes but {} periodicity entries",
                dim,
                periodic.len()
            )));
        }
        for p in &points {
            if p.len() != dim {
                return Err(Error::Invalid("points of mixed dimension".into()));
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::Invalid("non-finite coordinate".into()));
            }
        }
        for &w in &weights {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Invalid(format!("weights must be positive, got {w}")));
            }
        }
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                let dist: f64 = points[i]
                    .iter()
                    .zip(&points[j])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if dist <= GRID_MATCH_TOL {
                    return Err(Error::Invalid(format!("points {i} and {j} coincide")));
                }
            }
        }
        let space = Self { points, weights, periodic };
        for axis in 0..dim {
            if let Some(period) = space.periodic[axis] {
                space.validate_periodic_axis(axis, period)?;
            }
        }
        Ok(space)
    }

    /// Convenience: uniform cyclic 1D lattice {0, h, ..., (n-1)h} with unit
    /// spacing weights and period n·h.
    pub fn cyclic_1d(n: usize, spacing: f64) -> Result<Self> {
        let points = (0..n).map(|i| vec![i as f64 * spacing]).collect();
        let weights = vec![spacing; n];
        Self::new(points, weights, vec![Some(n as f64 * spacing)])
    }

    /// Single point of weight 1 (the smallest useful space).
    pub fn single_point() -> Self {
        Self::new(vec![vec![0.0]], vec![1.0], vec![None]).expect("static construction")
    }

    fn validate_periodic_axis(&self, axis: usize, period: f64) -> Result<()> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::Invalid(format!("period on axis {axis} must be positive")));
        }
        let mut coords: Vec<f64> = self.points.iter().map(|p| p[axis]).collect();
        coords.sort_by(|a, b| a.partial_cmp(b).expect("finite coords"));
        coords.dedup_by(|a, b| (*a - *b).abs() <= GRID_MATCH_TOL);
        let n = coords.len();
        let spacing = period / n as f64;
        for (step, pair) in coords.windows(2).enumerate() {
            if (pair[1] - pair[0] - spacing).abs() > GRID_MATCH_TOL {
                return Err(Error::Invalid(format!(
                    "axis {axis} is not a uniform lattice of period {period}: \
                     gap {} after step {step}, expected {spacing}",
                    pair[1] - pair[0]
                )));
            }
        }
        // The lattice must also fill exactly one period.
        if n > 1 && (coords[n - 1] - coords[0] - (n as f64 - 1.0) * spacing).abs() > GRID_MATCH_TOL
        {
            return Err(Error::Invalid(format!(
                "axis {axis} does not span one period of length {period}"
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty point sets
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn periodic(&self) -> &[Option<f64>] {
        &self.periodic
    }

    /// Grid delta δ(x_i, x_j) = [i = j] / w_i.
    pub fn grid_delta(&self, i: usize, j: usize) -> f64 {
        if i == j {
            1.0 / self.weights[i]
        } else {
            0.0
        }
    }

    /// Index of the grid point matching `target` within [`GRID_MATCH_TOL`].
    pub fn find_point(&self, target: &[f64]) -> Option<usize> {
        self.points.iter().position(|p| {
            p.iter()
                .zip(target)
                .all(|(a, b)| (a - b).abs() <= GRID_MATCH_TOL)
        })
    }

    /// Permutation realizing the translation x ↦ x − a on grid indices:
    /// `perm[i]` is the index of the point (x_i − a), wrapped on periodic
    /// axes.
    ///
    /// Errors with [`Error::NotPeriodic`] if `a` moves a non-periodic axis
    /// and with [`Error::OffLattice`] if any shifted point misses the grid.
    pub fn translation_permutation(&self, a: &[f64]) -> Result<Vec<usize>> {
        if a.len() != self.dim() {
            return Err(Error::Invalid(format!(
                "shift has {} components on a {}-dimensional space",
                a.len(),
                self.dim()
            )));
        }
        for (axis, &shift) in a.iter().enumerate() {
            if shift != 0.0 && self.periodic[axis].is_none() {
                return Err(Error::NotPeriodic { axis });
            }
        }
        let mut perm = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            let mut target: Vec<f64> = self.points[i]
                .iter()
                .zip(a)
                .map(|(x, s)| x - s)
                .collect();
            // Wrap periodic coordinates back into the lattice range.
            for (axis, coord) in target.iter_mut().enumerate() {
                if let Some(period) = self.periodic[axis] {
                    let lo = self
                        .points
                        .iter()
                        .map(|p| p[axis])
                        .fold(f64::INFINITY, f64::min);
                    let mut c = (*coord - lo).rem_euclid(period) + lo;
                    // rem_euclid can land on lo + period through rounding.
                    if (c - (lo + period)).abs() <= GRID_MATCH_TOL {
                        c = lo;
                    }
                    *coord = c;
                }
            }
            match self.find_point(&target) {
                Some(j) => perm.push(j),
                None => {
                    return Err(Error::OffLattice(format!(
                        "point {i} shifted by {a:?} misses the lattice"
                    )))
                }
            }
        }
        Ok(perm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(SampledSpace::new(vec![], vec![], vec![]).is_err());
        assert!(SampledSpace::new(vec![vec![0.0]], vec![-1.0], vec![None]).is_err());
        assert!(SampledSpace::new(vec![vec![0.0], vec![0.0]], vec![1.0, 1.0], vec![None]).is_err());
        // Non-uniform point set cannot be declared periodic.
        assert!(SampledSpace::new(
            vec![vec![0.0], vec![1.0], vec![2.5]],
            vec![1.0; 3],
            vec![Some(3.0)],
        )
        .is_err());
    }

    #[test]
    fn grid_delta_inverts_the_weight() {
        let s = SampledSpace::cyclic_1d(4, 0.5).unwrap();
        assert_eq!(s.grid_delta(2, 2), 2.0);
        assert_eq!(s.grid_delta(1, 2), 0.0);
        // Σ_j w_j δ(i, j) = 1
        let total: f64 = (0..4).map(|j| s.weight(j) * s.grid_delta(1, j)).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cyclic_shift_is_a_permutation() {
        let s = SampledSpace::cyclic_1d(4, 1.0).unwrap();
        let perm = s.translation_permutation(&[1.0]).unwrap();
        // x_i - 1 wraps: index i maps to i-1 mod 4.
        assert_eq!(perm, vec![3, 0, 1, 2]);
        let full = s.translation_permutation(&[4.0]).unwrap();
        assert_eq!(full, vec![0, 1, 2, 3]);
    }

    #[test]
    fn off_lattice_and_aperiodic_shifts_error() {
        let s = SampledSpace::cyclic_1d(4, 1.0).unwrap();
        assert!(matches!(
            s.translation_permutation(&[0.5]),
            Err(Error::OffLattice(_))
        ));
        let open = SampledSpace::new(
            vec![vec![0.0], vec![1.0]],
            vec![1.0, 1.0],
            vec![None],
        )
        .unwrap();
        assert!(matches!(
            open.translation_permutation(&[1.0]),
            Err(Error::NotPeriodic { axis: 0 })
        ));
    }
}
