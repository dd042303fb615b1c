//! Deterministic fixtures and brute-force oracles shared by unit tests and
//! the acceptance suite. Compiled only for tests or behind the
//! `testsupport` feature; not part of the stable library surface.

use crate::error::Result;
use crate::io::{sample_without_replacement, SplitMix64};
use crate::tensor::DenseTensor;
use crate::tprod::{fourier_singular_values, t_product};

/// Tensor with entries drawn uniformly from `[0, 1)`.
pub fn uniform_tensor(dims: &[usize], seed: u64) -> DenseTensor {
    let mut rng = SplitMix64::new(seed);
    DenseTensor::from_fn(dims, |_| rng.next_f64()).expect("valid dims")
}

/// Tensor with independent standard normal entries (Box-Muller transform).
pub fn gaussian_tensor(dims: &[usize], seed: u64) -> DenseTensor {
    let mut rng = SplitMix64::new(seed);
    let len: usize = dims.iter().product();
    let mut values = Vec::with_capacity(len + 1);
    while values.len() < len {
        // u1 in (0, 1] so the logarithm is finite; u2 in [0, 1).
        let u1 = ((rng.next_u64() >> 11) + 1) as f64 / (1u64 << 53) as f64;
        let u2 = rng.next_f64();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        values.push(radius * angle.cos());
        values.push(radius * angle.sin());
    }
    values.truncate(len);
    DenseTensor::new(dims.to_vec(), values).expect("valid dims")
}

/// Rank-1 tensor: outer product of one random unit vector per mode, scaled
/// by `scale`. Its Frobenius norm is exactly `scale`.
pub fn rank1_tensor(dims: &[usize], seed: u64, scale: f64) -> DenseTensor {
    let mut rng = SplitMix64::new(seed);
    let vectors: Vec<Vec<f64>> = dims
        .iter()
        .map(|&n| {
            let mut v: Vec<f64> = Vec::with_capacity(n);
            while v.len() < n {
                let u1 = ((rng.next_u64() >> 11) + 1) as f64 / (1u64 << 53) as f64;
                let u2 = rng.next_f64();
                let radius = (-2.0 * u1.ln()).sqrt();
                let angle = 2.0 * std::f64::consts::PI * u2;
                v.push(radius * angle.cos());
                if v.len() < n {
                    v.push(radius * angle.sin());
                }
            }
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(norm > 0.0, "degenerate random vector");
            v.iter().map(|x| x / norm).collect()
        })
        .collect();
    DenseTensor::from_fn(dims, |idx| {
        scale
            * idx
                .iter()
                .zip(&vectors)
                .map(|(&i, v)| v[i])
                .product::<f64>()
    })
    .expect("valid dims")
}

/// Tensor of tubal rank at most `r`: the t-product of random `i1 x r x i3`
/// and `r x i2 x i3` Gaussian tensors, rescaled so the largest entry
/// magnitude is 1 (the scale image data is normalized to).
pub fn low_tubal_rank_tensor(i1: usize, r: usize, i2: usize, i3: usize, seed: u64) -> DenseTensor {
    let a = gaussian_tensor(&[i1, r, i3], seed);
    let b = gaussian_tensor(&[r, i2, i3], seed.wrapping_add(0x9E37_79B9));
    let mut t = t_product(&a, &b).expect("conforming shapes");
    let peak = t.max_abs();
    assert!(peak > 0.0, "degenerate random tensor");
    for v in t.data_mut() {
        *v /= peak;
    }
    t
}

/// Circular Gaussian blur along one 1-based mode: each fiber is convolved
/// with a periodic, normalized Gaussian kernel of scale `sigma`.
fn circular_blur(x: &DenseTensor, mode: usize, sigma: f64) -> DenseTensor {
    let n = x.dims()[mode - 1];
    let mut kernel = vec![0.0f64; n];
    let mut total = 0.0;
    for (d, k) in kernel.iter_mut().enumerate() {
        let wrap = (d as f64).min((n - d) as f64); // circular distance
        *k = (-0.5 * (wrap / sigma) * (wrap / sigma)).exp();
        total += *k;
    }
    for k in kernel.iter_mut() {
        *k /= total;
    }
    DenseTensor::from_fn(x.dims(), |idx| {
        let mut src = idx.to_vec();
        let mut acc = 0.0;
        for (d, &k) in kernel.iter().enumerate() {
            src[mode - 1] = (idx[mode - 1] + d) % n;
            acc += k * x.get(&src);
        }
        acc
    })
    .expect("valid dims")
}

/// Tensor of tubal rank at most `r` with smoothly varying entries: the
/// Gaussian factors of [`low_tubal_rank_tensor`] are circularly blurred
/// (scale `blur_sigma`) along their outer and tube modes before the
/// t-product, then the result is rescaled so the largest entry magnitude
/// is 1. The blur leaves the tubal rank unchanged but makes every mode and
/// pair unfolding compressible — the structure natural image volumes have
/// and the full feature measure is built around — whereas the unblurred
/// Gaussian fixture is low-rank only along the tube-circulant direction.
pub fn smooth_low_tubal_rank_tensor(
    i1: usize,
    r: usize,
    i2: usize,
    i3: usize,
    seed: u64,
    blur_sigma: f64,
) -> DenseTensor {
    let mut a = gaussian_tensor(&[i1, r, i3], seed);
    let mut b = gaussian_tensor(&[r, i2, i3], seed.wrapping_add(0x9E37_79B9));
    for mode in [1, 3] {
        a = circular_blur(&a, mode, blur_sigma);
    }
    for mode in [2, 3] {
        b = circular_blur(&b, mode, blur_sigma);
    }
    let mut t = t_product(&a, &b).expect("conforming shapes");
    let peak = t.max_abs();
    assert!(peak > 0.0, "degenerate random tensor");
    for v in t.data_mut() {
        *v /= peak;
    }
    t
}

/// Replaces `round(fraction * len)` entries of `x` (sampled without
/// replacement) with impulses of magnitude `max|x|`; each impulse's sign
/// comes from the next bit of the same random stream. Returns the corrupted
/// tensor and the corrupted positions in selection order.
pub fn impulse_corrupt(x: &DenseTensor, fraction: f64, seed: u64) -> (DenseTensor, Vec<usize>) {
    assert!((0.0..=1.0).contains(&fraction), "fraction out of range");
    let mut rng = SplitMix64::new(seed);
    let k = (fraction * x.len() as f64).round() as usize;
    let positions = sample_without_replacement(x.len(), k, &mut rng);
    let magnitude = x.max_abs();
    let mut corrupted = x.clone();
    for &p in &positions {
        let sign = if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 };
        corrupted.data_mut()[p] = sign * magnitude;
    }
    (corrupted, positions)
}

/// Brute-force t-product through the block-circulant embedding: unfolds `a`
/// into its block-circulant matrix, stacks the frontal slices of `b`, does
/// one dense matrix product, and re-stacks the result. Quadratic in `i3`;
/// intended for small shapes only.
pub fn t_product_reference(a: &DenseTensor, b: &DenseTensor) -> DenseTensor {
    let (i1, i2, i3) = (a.dims()[0], a.dims()[1], a.dims()[2]);
    let (b1, j, b3) = (b.dims()[0], b.dims()[1], b.dims()[2]);
    assert_eq!(i2, b1, "inner dimensions must agree");
    assert_eq!(i3, b3, "tube lengths must agree");
    let mut out = DenseTensor::zeros(&[i1, j, i3]).expect("valid dims");
    for block_row in 0..i3 {
        for block_col in 0..i3 {
            // Block (row, col) of bcirc(a) is frontal slice (row - col) mod i3.
            let s = (block_row + i3 - block_col) % i3;
            for col in 0..j {
                for row in 0..i1 {
                    let mut acc = 0.0;
                    for inner in 0..i2 {
                        acc += a.get(&[row, inner, s]) * b.get(&[inner, col, block_col]);
                    }
                    let prev = out.get(&[row, col, block_row]);
                    out.set(&[row, col, block_row], prev + acc);
                }
            }
        }
    }
    out
}

/// Singular values of every Fourier-domain frontal slice of a 3-order
/// tensor, each list sorted in nonincreasing order.
pub fn fourier_slice_singular_values(x: &DenseTensor) -> Result<Vec<Vec<f64>>> {
    fourier_singular_values(x)
}

/// The scalar objective both log-shrinkage rules minimize:
/// `alpha * ln(t + eps) + (t - x)^2 / 2`.
pub fn scalar_log_objective(t: f64, x: f64, alpha: f64, eps: f64) -> f64 {
    alpha * (t + eps).ln() + 0.5 * (t - x) * (t - x)
}

/// Grid search for the best interior local minimizer of the scalar log
/// objective over `t in [0, x + 1]` with the given step: a grid point whose
/// objective is no larger than either neighbor's, with the smallest
/// objective among such points. (Any stationary point lies at or below `x`,
/// so the extra margin keeps it interior to the grid.) Falls back to 0 when
/// no interior local minimizer exists (then 0 is the only candidate the
/// shrinkage rule has).
pub fn grid_best_interior_min(x: f64, alpha: f64, eps: f64, step: f64) -> f64 {
    assert!(x >= 0.0 && step > 0.0);
    let n = ((x + 1.0) / step).floor() as usize;
    if n < 2 {
        return 0.0;
    }
    let h = |t: f64| scalar_log_objective(t, x, alpha, eps);
    let mut best_t = 0.0;
    let mut best_h = f64::INFINITY;
    let mut prev = h(0.0);
    let mut curr = h(step);
    for i in 1..n {
        let next = h((i + 1) as f64 * step);
        if curr <= prev && curr <= next && curr < best_h {
            best_h = curr;
            best_t = i as f64 * step;
        }
        prev = curr;
        curr = next;
    }
    if best_h.is_finite() {
        best_t
    } else {
        0.0
    }
}

/// Global grid argmin of the scalar log objective over `t in [0, hi]` with
/// the given step. Returns `(argmin, min objective)`.
pub fn grid_global_min(x: f64, alpha: f64, eps: f64, step: f64, hi: f64) -> (f64, f64) {
    assert!(hi >= 0.0 && step > 0.0);
    let n = (hi / step).ceil() as usize;
    let mut best_t = 0.0;
    let mut best_h = scalar_log_objective(0.0, x, alpha, eps);
    for i in 1..=n {
        let t = i as f64 * step;
        let v = scalar_log_objective(t, x, alpha, eps);
        if v < best_h {
            best_h = v;
            best_t = t;
        }
    }
    (best_t, best_h)
}
