//! The full feature measure (FFM) and its log-sum relaxation, plus the two
//! classical baselines it generalizes (sum of nuclear norms and the tensor
//! nuclear norm).
//!
//! For an `N`-order tensor the measure runs over all `N(N+1)/2` mode pairs
//! `1 <= k1 <= k2 <= N`: a diagonal pair contributes the rank of the
//! mode-`k1` matrix unfolding, an off-diagonal pair the tubal rank of the
//! mode-`k1k2` tensor unfolding. Pair contributions are combined with
//! nonnegative weights that sum to one, so the measure of a rank-1 tensor is
//! exactly 1 under any valid weighting.
//!
//! The log-sum relaxation replaces each rank by `sum_j ln(sigma_j + eps)`
//! over *all* singular values of the same unfolding (every Fourier slice for
//! tensor pairs), giving the smooth surrogate the solvers minimize.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tensor::{DenseTensor, ModePair};
use crate::tprod::{fourier_singular_values, singular_values_real, tubal_rank};

/// Tolerance used when validating that weights sum to one.
const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Nonnegative weights over every mode pair of a given tensor order,
/// summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct ModePairWeights {
    order: usize,
    weights: BTreeMap<ModePair, f64>,
}

impl ModePairWeights {
    /// Equal weight `1 / (N(N+1)/2)` for every pair.
    pub fn uniform(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("tensor order must be at least 1"));
        }
        let pairs = ModePair::all(order);
        let w = 1.0 / pairs.len() as f64;
        Ok(ModePairWeights {
            order,
            weights: pairs.into_iter().map(|p| (p, w)).collect(),
        })
    }

    /// Weights inversely proportional to the largest rank each pair's
    /// unfolding can attain for the given dimensions, normalized to sum to
    /// one. Larger unfoldings (whose ranks can grow further) get smaller
    /// weights, balancing the pairs' contributions.
    pub fn size_normalized(dims: &[usize]) -> Result<Self> {
        crate::tensor::checked_len(dims)?;
        let order = dims.len();
        let total: usize = dims.iter().product();
        let raw: BTreeMap<ModePair, f64> = ModePair::all(order)
            .into_iter()
            .map(|p| {
                let cap = if p.is_matrix() {
                    let rows = dims[p.k1() - 1];
                    rows.min(total / rows)
                } else {
                    dims[p.k1() - 1].min(dims[p.k2() - 1])
                };
                (p, 1.0 / cap as f64)
            })
            .collect();
        let sum: f64 = raw.values().sum();
        Ok(ModePairWeights {
            order,
            weights: raw.into_iter().map(|(p, w)| (p, w / sum)).collect(),
        })
    }

    /// Builds explicit weights: the map must contain exactly the pairs of
    /// the given order, every weight must be finite and nonnegative, and the
    /// weights must sum to 1 within `1e-12`.
    pub fn from_map(order: usize, weights: BTreeMap<ModePair, f64>) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("tensor order must be at least 1"));
        }
        let expected = ModePair::all(order);
        if weights.len() != expected.len() || expected.iter().any(|p| !weights.contains_key(p)) {
            return Err(Error::invalid(format!(
                "weights must cover exactly the {} mode pairs of an order-{} tensor",
                expected.len(),
                order
            )));
        }
        for (p, &w) in &weights {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::invalid(format!(
                    "weight for pair {p} must be finite and >= 0, got {w}"
                )));
            }
        }
        let sum: f64 = weights.values().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::invalid(format!(
                "weights must sum to 1 (within {WEIGHT_SUM_TOL:.0e}), got {sum}"
            )));
        }
        Ok(ModePairWeights { order, weights })
    }

    /// Tensor order these weights are for.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Weight of one pair.
    pub fn get(&self, pair: ModePair) -> Option<f64> {
        self.weights.get(&pair).copied()
    }

    /// All `(pair, weight)` entries in lexicographic pair order.
    pub fn iter(&self) -> impl Iterator<Item = (ModePair, f64)> + '_ {
        self.weights.iter().map(|(&p, &w)| (p, w))
    }
}

/// Per-pair values of a measure together with their weighted total.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureReport {
    /// Unweighted value contributed by each mode pair.
    pub per_pair: BTreeMap<ModePair, f64>,
    /// Weighted sum of the per-pair values.
    pub total: f64,
}

/// Counts values above `rel` times the largest one (input sorted
/// descending).
fn numerical_rank(sigma: &[f64], rel: f64) -> usize {
    let threshold = rel * sigma.first().copied().unwrap_or(0.0);
    sigma.iter().filter(|&&s| s > threshold).count()
}

fn check_order(x: &DenseTensor, weights: &ModePairWeights) -> Result<()> {
    if weights.order() != x.order() {
        return Err(Error::shape(format!(
            "weights are for order {} but the tensor has order {}",
            weights.order(),
            x.order()
        )));
    }
    Ok(())
}

/// Evaluates one pair's unfolding rank: matrix rank for diagonal pairs,
/// tubal rank for off-diagonal ones. `tol` is the relative singular value
/// threshold (default `max(rows, cols) * f64::EPSILON` per unfolding).
fn pair_rank(x: &DenseTensor, pair: ModePair, tol: Option<f64>) -> Result<f64> {
    if pair.is_matrix() {
        let m = x.unfold(pair.k1())?;
        let (rows, cols) = (m.dims()[0], m.dims()[1]);
        let sigma = singular_values_real(DMatrix::from_column_slice(rows, cols, m.data()))?;
        let rel = tol.unwrap_or(rows.max(cols) as f64 * f64::EPSILON);
        Ok(numerical_rank(&sigma, rel) as f64)
    } else {
        Ok(tubal_rank(&x.unfold_pair(pair)?, tol)? as f64)
    }
}

/// Full feature measure in its exact (rank-counting) form: the weighted sum
/// over all mode pairs of the matrix/tubal rank of the pair's unfolding.
pub fn ffm_rank(
    x: &DenseTensor,
    weights: &ModePairWeights,
    tol: Option<f64>,
) -> Result<MeasureReport> {
    check_order(x, weights)?;
    let entries: Vec<(ModePair, f64)> = ModePair::all(x.order())
        .into_par_iter()
        .map(|p| Ok((p, pair_rank(x, p, tol)?)))
        .collect::<Result<Vec<_>>>()?;
    let per_pair: BTreeMap<ModePair, f64> = entries.into_iter().collect();
    let total = per_pair
        .iter()
        .map(|(p, v)| weights.get(*p).unwrap_or(0.0) * v)
        .sum();
    Ok(MeasureReport { per_pair, total })
}

/// Log-sum of one pair's singular spectrum: `sum_j ln(sigma_j + eps)` over
/// every singular value of the unfolding (all Fourier slices for tensor
/// pairs), zeros included.
fn pair_logsum(x: &DenseTensor, pair: ModePair, eps: f64) -> Result<f64> {
    if pair.is_matrix() {
        let m = x.unfold(pair.k1())?;
        let (rows, cols) = (m.dims()[0], m.dims()[1]);
        let sigma = singular_values_real(DMatrix::from_column_slice(rows, cols, m.data()))?;
        Ok(sigma.iter().map(|s| (s + eps).ln()).sum())
    } else {
        let t = x.unfold_pair(pair)?;
        let slices = fourier_singular_values(&t)?;
        Ok(slices
            .iter()
            .map(|sv| sv.iter().map(|s| (s + eps).ln()).sum::<f64>())
            .sum())
    }
}

/// Log-sum relaxation of the full feature measure: each pair's rank is
/// replaced by the log-sum of its unfolding's singular spectrum. Requires
/// `eps > 0`.
pub fn ffm_logsum(x: &DenseTensor, weights: &ModePairWeights, eps: f64) -> Result<MeasureReport> {
    check_order(x, weights)?;
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::invalid(format!(
            "log-sum offset eps must be finite and > 0, got {eps}"
        )));
    }
    let entries: Vec<(ModePair, f64)> = ModePair::all(x.order())
        .into_par_iter()
        .map(|p| Ok((p, pair_logsum(x, p, eps)?)))
        .collect::<Result<Vec<_>>>()?;
    let per_pair: BTreeMap<ModePair, f64> = entries.into_iter().collect();
    let total = per_pair
        .iter()
        .map(|(p, v)| weights.get(*p).unwrap_or(0.0) * v)
        .sum();
    Ok(MeasureReport { per_pair, total })
}

/// Sum of nuclear norms baseline: `sum_n alpha_n * ||X_(n)||_*` over the `N`
/// matrix unfoldings. `alpha` must hold one finite nonnegative weight per
/// mode.
pub fn snn(x: &DenseTensor, alpha: &[f64]) -> Result<f64> {
    if alpha.len() != x.order() {
        return Err(Error::invalid(format!(
            "snn needs one weight per mode: got {} for an order-{} tensor",
            alpha.len(),
            x.order()
        )));
    }
    if alpha.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
        return Err(Error::invalid("snn weights must be finite and >= 0"));
    }
    let values: Vec<f64> = (1..=x.order())
        .into_par_iter()
        .map(|n| {
            let m = x.unfold(n)?;
            let (rows, cols) = (m.dims()[0], m.dims()[1]);
            let sigma = singular_values_real(DMatrix::from_column_slice(rows, cols, m.data()))?;
            Ok(sigma.iter().sum::<f64>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(values.iter().zip(alpha).map(|(v, a)| v * a).sum())
}

/// Tensor nuclear norm of a 3-order tensor: the sum of the nuclear norms of
/// every Fourier frontal slice.
pub fn tnn(x: &DenseTensor) -> Result<f64> {
    if x.order() != 3 {
        return Err(Error::invalid(format!(
            "tensor nuclear norm expects a 3-order tensor, got order {}",
            x.order()
        )));
    }
    let slices = fourier_singular_values(x)?;
    Ok(slices.iter().map(|sv| sv.iter().sum::<f64>()).sum())
}

/// N-tubal rank: the tubal rank of every off-diagonal pair unfolding, for
/// tensors of order at least 3.
pub fn n_tubal_rank(x: &DenseTensor, tol: Option<f64>) -> Result<BTreeMap<ModePair, usize>> {
    if x.order() < 3 {
        return Err(Error::invalid(format!(
            "n-tubal rank expects order >= 3, got {}",
            x.order()
        )));
    }
    let pairs: Vec<ModePair> = ModePair::all(x.order())
        .into_iter()
        .filter(|p| !p.is_matrix())
        .collect();
    let entries: Vec<(ModePair, usize)> = pairs
        .into_par_iter()
        .map(|p| Ok((p, tubal_rank(&x.unfold_pair(p)?, tol)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(entries.into_iter().collect())
}
