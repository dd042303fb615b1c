//! Dense real tensors and the unfolding operators the rest of the crate is
//! built on.
//!
//! An `N`-order tensor with dimensions `I1 x I2 x ... x IN` is stored as a
//! flat `f64` buffer in first-index-fastest order: element `(i1, ..., iN)`
//! (0-based here) lives at linear offset `i1 + I1*(i2 + I2*(i3 + ...))`.
//! Mode numbers in the public API are 1-based, matching the usual
//! mathematical notation; element indices at the storage level are 0-based.
//!
//! Two unfoldings are provided:
//!
//! * the **mode-`n` matrix unfolding** maps element `(i1, ..., iN)` to matrix
//!   entry `(i_n, j)` where, 1-based,
//!   `j = 1 + sum_{k != n} (i_k - 1) * J_k` and
//!   `J_k = prod_{m < k, m != n} I_m`
//!   (remaining modes enumerated in increasing order, lower modes fastest);
//! * the **mode-`k1k2` tensor unfolding** (for `k1 < k2`) maps the element to
//!   the 3-order entry `(i_k1, i_k2, j)` with
//!   `j = 1 + sum_{s != k1,k2} (i_s - 1) * J_s` and
//!   `J_s = prod_{m < s, m != k1,k2} I_m`.
//!
//! Both are bijections, so folding back is exact (bit for bit).

use crate::error::{Error, Result};
use crate::io::ObservationMask;

/// Dense real tensor of order `>= 1` with first-index-fastest layout.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    /// Builds a tensor from its dimensions and a flat buffer in
    /// first-index-fastest order.
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let total = checked_len(&dims)?;
        if data.len() != total {
            return Err(Error::shape(format!(
                "buffer holds {} elements but dims {:?} require {}",
                data.len(),
                dims,
                total
            )));
        }
        Ok(DenseTensor { dims, data })
    }

    /// All-zero tensor of the given shape.
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        let total = checked_len(dims)?;
        Ok(DenseTensor {
            dims: dims.to_vec(),
            data: vec![0.0; total],
        })
    }

    /// Builds a tensor by evaluating `f` at every (0-based) multi-index,
    /// in storage order.
    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let total = checked_len(dims)?;
        let mut data = Vec::with_capacity(total);
        let mut idx = vec![0usize; dims.len()];
        for _ in 0..total {
            data.push(f(&idx));
            advance(&mut idx, dims);
        }
        Ok(DenseTensor {
            dims: dims.to_vec(),
            data,
        })
    }

    /// Tensor order `N` (number of modes).
    pub fn order(&self) -> usize {
        self.dims.len()
    }

    /// Dimensions `I1, ..., IN`.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Total number of elements.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    /// True for the degenerate zero-element tensor (never constructible,
    /// since every dimension must be at least 1).
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Flat buffer in first-index-fastest order.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Mutable access to the flat buffer, for element-wise construction.
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Linear offset of a 0-based multi-index.
    pub fn linear_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut off = 0;
        for k in (0..self.dims.len()).rev() {
            debug_assert!(idx[k] < self.dims[k]);
            off = off * self.dims[k] + idx[k];
        }
        off
    }

    /// Element at a 0-based multi-index.
    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.linear_index(idx)]
    }

    /// Overwrites the element at a 0-based multi-index.
    pub fn set(&mut self, idx: &[usize], value: f64) {
        let off = self.linear_index(idx);
        self.data[off] = value;
    }

    /// Frobenius norm: square root of the sum of squared entries.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest entry magnitude (0 for nothing to compare).
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// True if every entry is finite.
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn check_mode(&self, n: usize) -> Result<usize> {
        if n == 0 || n > self.order() {
            return Err(Error::invalid(format!(
                "mode {} out of range for an order-{} tensor (modes are 1..={})",
                n,
                self.order(),
                self.order()
            )));
        }
        Ok(n - 1)
    }

    /// Mode-`n` matrix unfolding (`n` is 1-based). The result is a 2-order
    /// tensor of shape `I_n x (len / I_n)`.
    pub fn unfold(&self, n: usize) -> Result<DenseTensor> {
        let n0 = self.check_mode(n)?;
        let rows = self.dims[n0];
        let col_stride = remaining_strides(&self.dims, &[n0]);
        let mut out = vec![0.0; self.len()];
        let mut idx = vec![0usize; self.order()];
        for &v in &self.data {
            let row = idx[n0];
            let col = dot_strides(&idx, &col_stride);
            out[row + rows * col] = v;
            advance(&mut idx, &self.dims);
        }
        DenseTensor::new(vec![rows, self.len() / rows], out)
    }

    /// Inverse of [`DenseTensor::unfold`]: folds a matrix back into a tensor
    /// of shape `dims` along mode `n` (1-based).
    pub fn fold(matrix: &DenseTensor, n: usize, dims: &[usize]) -> Result<DenseTensor> {
        let total = checked_len(dims)?;
        if n == 0 || n > dims.len() {
            return Err(Error::invalid(format!(
                "mode {} out of range for target dims {:?}",
                n, dims
            )));
        }
        let n0 = n - 1;
        if matrix.order() != 2 {
            return Err(Error::shape(format!(
                "fold expects a 2-order tensor, got order {}",
                matrix.order()
            )));
        }
        let rows = dims[n0];
        if matrix.dims[0] != rows || matrix.dims[1] != total / rows {
            return Err(Error::shape(format!(
                "cannot fold a {}x{} matrix into dims {:?} along mode {}",
                matrix.dims[0], matrix.dims[1], dims, n
            )));
        }
        let col_stride = remaining_strides(dims, &[n0]);
        let mut out = vec![0.0; total];
        let mut idx = vec![0usize; dims.len()];
        for slot in out.iter_mut() {
            let row = idx[n0];
            let col = dot_strides(&idx, &col_stride);
            *slot = matrix.data[row + rows * col];
            advance(&mut idx, dims);
        }
        DenseTensor::new(dims.to_vec(), out)
    }

    /// Mode-`k1k2` tensor unfolding for a pair with `k1 < k2`. The result is
    /// a 3-order tensor of shape `I_k1 x I_k2 x (len / (I_k1 * I_k2))`.
    pub fn unfold_pair(&self, pair: ModePair) -> Result<DenseTensor> {
        if pair.is_matrix() {
            return Err(Error::invalid(format!(
                "mode pair {pair} is diagonal; the tensor unfolding needs k1 < k2"
            )));
        }
        let a0 = self.check_mode(pair.k1)?;
        let b0 = self.check_mode(pair.k2)?;
        let (ia, ib) = (self.dims[a0], self.dims[b0]);
        let tube_stride = remaining_strides(&self.dims, &[a0, b0]);
        let mut out = vec![0.0; self.len()];
        let mut idx = vec![0usize; self.order()];
        for &v in &self.data {
            let (a, b) = (idx[a0], idx[b0]);
            let j = dot_strides(&idx, &tube_stride);
            out[a + ia * (b + ib * j)] = v;
            advance(&mut idx, &self.dims);
        }
        DenseTensor::new(vec![ia, ib, self.len() / (ia * ib)], out)
    }

    /// Inverse of [`DenseTensor::unfold_pair`].
    pub fn fold_pair(t3: &DenseTensor, pair: ModePair, dims: &[usize]) -> Result<DenseTensor> {
        let total = checked_len(dims)?;
        if pair.is_matrix() {
            return Err(Error::invalid(format!(
                "mode pair {pair} is diagonal; the tensor folding needs k1 < k2"
            )));
        }
        if pair.k2 > dims.len() {
            return Err(Error::invalid(format!(
                "mode pair {pair} out of range for target dims {:?}",
                dims
            )));
        }
        let (a0, b0) = (pair.k1 - 1, pair.k2 - 1);
        let (ia, ib) = (dims[a0], dims[b0]);
        if t3.order() != 3
            || t3.dims[0] != ia
            || t3.dims[1] != ib
            || t3.dims[2] != total / (ia * ib)
        {
            return Err(Error::shape(format!(
                "cannot fold a tensor of dims {:?} into dims {:?} along pair {pair}",
                t3.dims, dims
            )));
        }
        let tube_stride = remaining_strides(dims, &[a0, b0]);
        let mut out = vec![0.0; total];
        let mut idx = vec![0usize; dims.len()];
        for slot in out.iter_mut() {
            let (a, b) = (idx[a0], idx[b0]);
            let j = dot_strides(&idx, &tube_stride);
            *slot = t3.data[a + ia * (b + ib * j)];
            advance(&mut idx, dims);
        }
        DenseTensor::new(dims.to_vec(), out)
    }

    /// Mode-`n` product with a matrix `U` of shape `J x I_n`, given as a
    /// 2-order tensor: unfolds along mode `n`, multiplies by `U` from the
    /// left, and folds back with `I_n` replaced by `J`.
    pub fn mode_product(&self, u: &DenseTensor, n: usize) -> Result<DenseTensor> {
        let n0 = self.check_mode(n)?;
        if u.order() != 2 {
            return Err(Error::shape(format!(
                "mode product expects a 2-order factor, got order {}",
                u.order()
            )));
        }
        let (j, i_n) = (u.dims[0], u.dims[1]);
        if i_n != self.dims[n0] {
            return Err(Error::shape(format!(
                "factor is {}x{} but mode {} of the tensor has dimension {}",
                j, i_n, n, self.dims[n0]
            )));
        }
        let unfolded = self.unfold(n)?;
        let cols = unfolded.dims[1];
        let um = nalgebra::DMatrix::from_column_slice(j, i_n, &u.data);
        let xm = nalgebra::DMatrix::from_column_slice(i_n, cols, &unfolded.data);
        let prod = um * xm;
        let mut new_dims = self.dims.clone();
        new_dims[n0] = j;
        let matrix = DenseTensor::new(vec![j, cols], prod.as_slice().to_vec())?;
        DenseTensor::fold(&matrix, n, &new_dims)
    }

    /// Keeps entries where the mask is known and zeroes the rest.
    pub fn project_mask(&self, mask: &ObservationMask) -> Result<DenseTensor> {
        if mask.dims() != self.dims() {
            return Err(Error::shape(format!(
                "mask dims {:?} do not match tensor dims {:?}",
                mask.dims(),
                self.dims()
            )));
        }
        let data = self
            .data
            .iter()
            .zip(mask.flags())
            .map(|(&v, &known)| if known { v } else { 0.0 })
            .collect();
        DenseTensor::new(self.dims.clone(), data)
    }
}

/// Ordered mode pair `(k1, k2)` with `1 <= k1 <= k2`, identifying one term of
/// the full feature measure: `k1 == k2` selects the mode-`k1` matrix
/// unfolding, `k1 < k2` the mode-`k1k2` tensor unfolding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModePair {
    k1: usize,
    k2: usize,
}

impl ModePair {
    /// Builds a pair, requiring `1 <= k1 <= k2`.
    pub fn new(k1: usize, k2: usize) -> Result<Self> {
        if k1 == 0 || k2 < k1 {
            return Err(Error::invalid(format!(
                "mode pair ({k1},{k2}) must satisfy 1 <= k1 <= k2"
            )));
        }
        Ok(ModePair { k1, k2 })
    }

    /// First mode (1-based).
    pub fn k1(&self) -> usize {
        self.k1
    }

    /// Second mode (1-based).
    pub fn k2(&self) -> usize {
        self.k2
    }

    /// True for diagonal pairs `k1 == k2`, which contribute a matrix rank.
    pub fn is_matrix(&self) -> bool {
        self.k1 == self.k2
    }

    /// Every pair `1 <= k1 <= k2 <= order`, in lexicographic order
    /// (`order * (order + 1) / 2` of them).
    pub fn all(order: usize) -> Vec<ModePair> {
        let mut pairs = Vec::with_capacity(order * (order + 1) / 2);
        for k1 in 1..=order {
            for k2 in k1..=order {
                pairs.push(ModePair { k1, k2 });
            }
        }
        pairs
    }
}

impl std::fmt::Display for ModePair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.k1, self.k2)
    }
}

impl std::str::FromStr for ModePair {
    type Err = Error;

    /// Parses `"k1,k2"` (optionally wrapped in parentheses).
    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim().trim_start_matches('(').trim_end_matches(')');
        let (a, b) = trimmed
            .split_once(',')
            .ok_or_else(|| Error::invalid(format!("cannot parse mode pair from {s:?}")))?;
        let k1 = a
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::invalid(format!("cannot parse mode pair from {s:?}")))?;
        let k2 = b
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::invalid(format!("cannot parse mode pair from {s:?}")))?;
        ModePair::new(k1, k2)
    }
}

/// Validates dims (order >= 1, every dimension >= 1, no overflow) and returns
/// the element count.
pub(crate) fn checked_len(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() {
        return Err(Error::invalid("tensor order must be at least 1"));
    }
    let mut total = 1usize;
    for &d in dims {
        if d == 0 {
            return Err(Error::invalid(format!(
                "every dimension must be at least 1, got {dims:?}"
            )));
        }
        total = total
            .checked_mul(d)
            .ok_or_else(|| Error::invalid(format!("element count of dims {dims:?} overflows")))?;
    }
    Ok(total)
}

/// Advances a 0-based multi-index one step in first-index-fastest order,
/// wrapping to all zeros after the last element.
pub(crate) fn advance(idx: &mut [usize], dims: &[usize]) {
    for (i, &d) in idx.iter_mut().zip(dims) {
        *i += 1;
        if *i < d {
            return;
        }
        *i = 0;
    }
}

/// Strides that enumerate the modes *not* listed in `skip`, increasing mode
/// order, lower modes fastest. Skipped modes get stride 0 so a plain dot
/// product with the full multi-index yields the flattened position.
fn remaining_strides(dims: &[usize], skip: &[usize]) -> Vec<usize> {
    let mut strides = vec![0usize; dims.len()];
    let mut j = 1;
    for (k, &d) in dims.iter().enumerate() {
        if skip.contains(&k) {
            continue;
        }
        strides[k] = j;
        j *= d;
    }
    strides
}

fn dot_strides(idx: &[usize], strides: &[usize]) -> usize {
    idx.iter().zip(strides).map(|(&i, &s)| i * s).sum()
}
