//! Soft-margin linear SVM trained by dual coordinate descent.
//!
//! Minimizes `½(‖w‖² + b²) + C·Σ max(0, 1 − yᵢ(w·xᵢ + b))`. The bias is
//! handled as the weight of an implicit constant feature equal to 1, so the
//! dual is a box-constrained QP
//!
//! ```text
//! max  D(α) = Σ αᵢ − ½ Σᵢⱼ αᵢ αⱼ yᵢ yⱼ (xᵢ·xⱼ + 1)      s.t. 0 ≤ αᵢ ≤ C
//! ```
//!
//! which single-coordinate Newton steps solve exactly. Coordinates are
//! visited in a seeded random order each epoch, and bounded coordinates whose
//! gradient points out of the box are shrunk from the active set until the
//! final check.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::vocab::SparseVector;

/// Value of the implicit bias feature.
const BIAS_FEATURE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainConfig {
    /// Soft-margin cost.
    pub c: f64,
    /// Stop once the projected-gradient spread falls below this.
    pub tolerance: f64,
    /// Maximum number of epochs.
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: 1.0,
            tolerance: 1e-4,
            max_iterations: 1000,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::InvalidParameter { name: "C", value: self.c });
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::InvalidParameter { name: "tolerance", value: self.tolerance });
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter { name: "max_iterations", value: 0.0 });
        }
        Ok(())
    }
}

/// Solver bookkeeping.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    pub epochs: usize,
    pub converged: bool,
    /// Dual objective after each epoch; non-decreasing.
    pub dual_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Dual variables, one per training vector.
    pub alpha: Vec<f64>,
    pub stats: SolveStats,
}

impl LinearSvm {
    pub fn decision(&self, x: &SparseVector) -> f64 {
        x.dot(&self.weights) + self.bias
    }

    /// `Σα − ½‖(w, b)‖²`.
    pub fn dual_objective(&self) -> f64 {
        let w2: f64 = self.weights.iter().map(|w| w * w).sum::<f64>() + self.bias * self.bias;
        self.alpha.iter().sum::<f64>() - 0.5 * w2
    }

    /// `½‖(w, b)‖² + C·Σ hinge`.
    pub fn primal_objective(&self, vectors: &[SparseVector], labels: &[Label], c: f64) -> f64 {
        let w2: f64 = self.weights.iter().map(|w| w * w).sum::<f64>() + self.bias * self.bias;
        let hinge: f64 = vectors
            .iter()
            .zip(labels)
            .filter_map(|(x, l)| l.sign().map(|y| (1.0 - y * self.decision(x)).max(0.0)))
            .sum();
        0.5 * w2 + c * hinge
    }
}

/// Trains on `vectors` with HATE as the positive class.
///
/// `dim` is the feature space size; every vector index must be below it.
pub fn train(
    vectors: &[SparseVector],
    labels: &[Label],
    dim: usize,
    config: &TrainConfig,
) -> Result<LinearSvm> {
    config.validate()?;
    if vectors.len() != labels.len() {
        return Err(Error::LengthMismatch { vectors: vectors.len(), labels: labels.len() });
    }
    let mut y = Vec::with_capacity(labels.len());
    for (i, label) in labels.iter().enumerate() {
        match label.sign() {
            Some(s) => y.push(s),
            None => return Err(Error::UnlabeledRecords(vec![i as u64])),
        }
    }
    if !(y.iter().any(|&s| s > 0.0) && y.iter().any(|&s| s < 0.0)) {
        return Err(Error::SingleClass);
    }
    if let Some(index) = vectors.iter().filter_map(SparseVector::max_index).max() {
        if index as usize >= dim {
            return Err(Error::DimensionMismatch { index, dim });
        }
    }

    let n = vectors.len();
    let c = config.c;
    let qd: Vec<f64> = vectors
        .iter()
        .map(|x| x.squared_norm() + BIAS_FEATURE * BIAS_FEATURE)
        .collect();
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; dim];
    let mut wb = 0.0;
    let mut dual = 0.0;
    let mut trace = Vec::new();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut index: Vec<usize> = (0..n).collect();
    let mut active = n;
    let mut pg_max_old = f64::INFINITY;
    let mut pg_min_old = f64::NEG_INFINITY;
    let mut converged = false;
    let mut epochs = 0;

    while epochs < config.max_iterations {
        epochs += 1;
        index[..active].shuffle(&mut rng);
        let mut pg_max = f64::NEG_INFINITY;
        let mut pg_min = f64::INFINITY;

        let mut s = 0;
        while s < active {
            let i = index[s];
            let yi = y[i];
            let g = yi * (vectors[i].dot(&w) + wb * BIAS_FEATURE) - 1.0;
            let mut pg = 0.0;
            if alpha[i] == 0.0 {
                if g > pg_max_old {
                    active -= 1;
                    index.swap(s, active);
                    continue;
                }
                if g < 0.0 {
                    pg = g;
                }
            } else if alpha[i] == c {
                if g < pg_min_old {
                    active -= 1;
                    index.swap(s, active);
                    continue;
                }
                if g > 0.0 {
                    pg = g;
                }
            } else {
                pg = g;
            }
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);

            if pg.abs() > 1e-12 {
                let old = alpha[i];
                alpha[i] = (old - g / qd[i]).clamp(0.0, c);
                let step = alpha[i] - old;
                dual -= step * g + 0.5 * step * step * qd[i];
                let d = step * yi;
                for &(j, v) in vectors[i].entries() {
                    w[j as usize] += d * v;
                }
                wb += d * BIAS_FEATURE;
            }
            s += 1;
        }

        if let Some(&prev) = trace.last() {
            debug_assert!(
                dual >= prev - 1e-9 * (1.0 + f64::abs(prev)),
                "dual objective decreased: {prev} -> {dual}"
            );
        }
        trace.push(dual);

        if pg_max - pg_min <= config.tolerance {
            if active == n {
                converged = true;
                break;
            }
            // Recheck everything before declaring convergence.
            active = n;
            pg_max_old = f64::INFINITY;
            pg_min_old = f64::NEG_INFINITY;
            continue;
        }
        pg_max_old = if pg_max <= 0.0 { f64::INFINITY } else { pg_max };
        pg_min_old = if pg_min >= 0.0 { f64::NEG_INFINITY } else { pg_min };
    }

    Ok(LinearSvm {
        weights: w,
        bias: wb * BIAS_FEATURE,
        alpha,
        stats: SolveStats { epochs, converged, dual_trace: trace },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(entries: &[(u32, f64)]) -> SparseVector {
        SparseVector::from_entries(entries.iter().copied())
    }

    #[test]
    fn separable_pair() {
        let xs = [v(&[(0, 1.0)]), v(&[(1, 1.0)])];
        let labels = [Label::Hate, Label::Safe];
        let m = train(&xs, &labels, 2, &TrainConfig::default()).unwrap();
        assert!(m.stats.converged);
        assert!(m.decision(&xs[0]) > 0.0);
        assert!(m.decision(&xs[1]) < 0.0);
    }

    #[test]
    fn two_point_closed_form() {
        // x₁ = e₀ (+1), x₂ = e₁ (−1): Q = [[2, 1], [1, 2]] and by symmetry
        // α₁ = α₂ = a with D = 2a − a², so a = 1 when C ≥ 1.
        let xs = [v(&[(0, 1.0)]), v(&[(1, 1.0)])];
        let cfg = TrainConfig { tolerance: 1e-12, ..TrainConfig::default() };
        let m = train(&xs, &[Label::Hate, Label::Safe], 2, &cfg).unwrap();
        assert!((m.alpha[0] - 1.0).abs() < 1e-9 && (m.alpha[1] - 1.0).abs() < 1e-9);
        assert!((m.weights[0] - 1.0).abs() < 1e-9 && (m.weights[1] + 1.0).abs() < 1e-9);
        assert!(m.bias.abs() < 1e-9);
        assert!((m.dual_objective() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_inputs() {
        let xs = [v(&[(0, 1.0)]), v(&[(3, 1.0)])];
        let cfg = TrainConfig::default();
        assert_eq!(train(&xs, &[Label::Hate, Label::Hate], 4, &cfg).unwrap_err(), Error::SingleClass);
        assert_eq!(
            train(&xs, &[Label::Hate, Label::Safe], 2, &cfg).unwrap_err(),
            Error::DimensionMismatch { index: 3, dim: 2 }
        );
        assert!(matches!(
            train(&xs, &[Label::Hate], 4, &cfg),
            Err(Error::LengthMismatch { .. })
        ));
        let bad = TrainConfig { c: 0.0, ..cfg };
        assert!(matches!(
            train(&xs, &[Label::Hate, Label::Safe], 4, &bad),
            Err(Error::InvalidParameter { name: "C", .. })
        ));
    }

    #[test]
    fn dual_trace_tracks_objective() {
        let xs: Vec<_> = (0..40u32)
            .map(|i| v(&[(i % 7, 1.0 + f64::from(i % 3)), ((i * 5) % 11, 0.5)]))
            .collect();
        let labels: Vec<_> = (0..40).map(|i| if i % 3 == 0 { Label::Hate } else { Label::Safe }).collect();
        let m = train(&xs, &labels, 11, &TrainConfig::default()).unwrap();
        let last = *m.stats.dual_trace.last().unwrap();
        assert!((last - m.dual_objective()).abs() < 1e-9);
        assert!(m.stats.dual_trace.windows(2).all(|p| p[1] >= p[0] - 1e-12));
        // Weak duality.
        assert!(m.dual_objective() <= m.primal_objective(&xs, &labels, 1.0) + 1e-9);
    }
}
