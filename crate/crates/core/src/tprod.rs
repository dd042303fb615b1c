//! Tensor-tensor product algebra for 3-order tensors: the DFT along mode-3
//! tubes, the t-product, conjugate transpose, tensor SVD, and tubal ranks.
//!
//! A 3-order tensor `A` of shape `I1 x I2 x I3` is treated as an `I1 x I2`
//! matrix of tubes of length `I3`. Taking an (unnormalized) DFT along every
//! tube block-diagonalizes the t-product: `C = A * B` holds exactly when
//! every Fourier frontal slice satisfies `C(i) = A(i) B(i)` as an ordinary
//! matrix product. The inverse transform divides by `I3`.
//!
//! For real tensors the Fourier slices are conjugate-symmetric
//! (slice `i` pairs with slice `I3 - i + 2`, 1-based), which the tensor SVD
//! exploits: it decomposes slices `1..=floor((I3+1)/2)` directly — plus, for
//! even `I3`, the self-paired Nyquist slice `I3/2 + 1` — and fills in the
//! rest by conjugation. Slice 1 (DC) and the Nyquist slice are real
//! matrices, so they get a real SVD; this keeps the inverse transform of the
//! factors real.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

/// Imaginary residue (relative to the largest component magnitude) accepted
/// when casting an inverse DFT back to a real tensor.
const IMAG_RESIDUE_TOL: f64 = 1e-8;

/// Iteration cap handed to the SVD; exceeding it reports a convergence
/// failure instead of looping forever.
const SVD_MAX_ITERS: usize = 10_000;

/// Complex 3-order tensor in first-index-fastest order; the Fourier-domain
/// counterpart of a real [`DenseTensor`]. Frontal slices are contiguous.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexTensor3 {
    i1: usize,
    i2: usize,
    i3: usize,
    data: Vec<Complex64>,
}

impl ComplexTensor3 {
    /// Builds a tensor from its flat buffer (length must be `i1*i2*i3`).
    pub fn new(i1: usize, i2: usize, i3: usize, data: Vec<Complex64>) -> Result<Self> {
        if i1 == 0 || i2 == 0 || i3 == 0 {
            return Err(Error::invalid(format!(
                "every dimension must be at least 1, got ({i1},{i2},{i3})"
            )));
        }
        if data.len() != i1 * i2 * i3 {
            return Err(Error::shape(format!(
                "buffer holds {} elements but dims ({i1},{i2},{i3}) require {}",
                data.len(),
                i1 * i2 * i3
            )));
        }
        Ok(ComplexTensor3 { i1, i2, i3, data })
    }

    /// All-zero complex tensor.
    pub fn zeros(i1: usize, i2: usize, i3: usize) -> Self {
        ComplexTensor3 {
            i1,
            i2,
            i3,
            data: vec![Complex64::new(0.0, 0.0); i1 * i2 * i3],
        }
    }

    /// Dimensions `(I1, I2, I3)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.i1, self.i2, self.i3)
    }

    /// Flat buffer in first-index-fastest order.
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    /// Entry at 0-based `(i, j, k)`.
    pub fn get(&self, i: usize, j: usize, k: usize) -> Complex64 {
        self.data[i + self.i1 * (j + self.i2 * k)]
    }

    /// Overwrites the entry at 0-based `(i, j, k)`.
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: Complex64) {
        self.data[i + self.i1 * (j + self.i2 * k)] = value;
    }

    /// Frontal slice `k` (0-based) as a dense matrix.
    pub fn slice(&self, k: usize) -> DMatrix<Complex64> {
        let page = self.i1 * self.i2;
        DMatrix::from_column_slice(self.i1, self.i2, &self.data[k * page..(k + 1) * page])
    }

    /// Overwrites frontal slice `k` (0-based).
    pub fn set_slice(&mut self, k: usize, m: &DMatrix<Complex64>) {
        debug_assert_eq!(m.shape(), (self.i1, self.i2));
        let page = self.i1 * self.i2;
        self.data[k * page..(k + 1) * page].copy_from_slice(m.as_slice());
    }

    /// Sets frontal slice `dst` to the entrywise conjugate of slice `src`.
    pub(crate) fn copy_conj_slice(&mut self, dst: usize, src: usize) {
        let page = self.i1 * self.i2;
        for t in 0..page {
            self.data[dst * page + t] = self.data[src * page + t].conj();
        }
    }
}

/// Checks that `x` has order 3 and returns its dimensions.
pub(crate) fn dims3(x: &DenseTensor) -> Result<[usize; 3]> {
    if x.order() != 3 {
        return Err(Error::invalid(format!(
            "expected a 3-order tensor, got order {}",
            x.order()
        )));
    }
    Ok([x.dims()[0], x.dims()[1], x.dims()[2]])
}

/// Unnormalized DFT along every mode-3 tube.
pub fn dft_mode3(x: &DenseTensor) -> Result<ComplexTensor3> {
    let [i1, i2, i3] = dims3(x)?;
    let mut data: Vec<Complex64> = x.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let fft = FftPlanner::new().plan_fft_forward(i3);
    let mut tube = vec![Complex64::new(0.0, 0.0); i3];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let page = i1 * i2;
    for t in 0..page {
        for k in 0..i3 {
            tube[k] = data[t + k * page];
        }
        fft.process_with_scratch(&mut tube, &mut scratch);
        for k in 0..i3 {
            data[t + k * page] = tube[k];
        }
    }
    ComplexTensor3::new(i1, i2, i3, data)
}

/// Inverse DFT along every mode-3 tube (dividing by `I3`), casting back to a
/// real tensor. Fails with [`Error::CorruptSpectrum`] if the spectrum is not
/// conjugate-symmetric, i.e. if the residual imaginary part exceeds `1e-8`
/// relative to the largest component magnitude.
pub fn idft_mode3(xf: &ComplexTensor3) -> Result<DenseTensor> {
    let (i1, i2, i3) = xf.dims();
    let mut work = xf.data().to_vec();
    let fft = FftPlanner::new().plan_fft_inverse(i3);
    let mut tube = vec![Complex64::new(0.0, 0.0); i3];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let page = i1 * i2;
    let inv = 1.0 / i3 as f64;
    for t in 0..page {
        for k in 0..i3 {
            tube[k] = work[t + k * page];
        }
        fft.process_with_scratch(&mut tube, &mut scratch);
        for k in 0..i3 {
            work[t + k * page] = tube[k] * inv;
        }
    }
    let mut scale = 0.0f64;
    let mut residual = 0.0f64;
    for z in &work {
        scale = scale.max(z.re.abs()).max(z.im.abs());
        residual = residual.max(z.im.abs());
    }
    let tolerance = IMAG_RESIDUE_TOL * scale;
    if residual > tolerance {
        return Err(Error::CorruptSpectrum {
            residual,
            tolerance,
        });
    }
    DenseTensor::new(vec![i1, i2, i3], work.iter().map(|z| z.re).collect())
}

/// t-product `A * B`: slice-wise matrix products in the Fourier domain.
/// Requires `A: I1 x I2 x I3` and `B: I2 x J x I3`.
pub fn t_product(a: &DenseTensor, b: &DenseTensor) -> Result<DenseTensor> {
    let [a1, a2, a3] = dims3(a)?;
    let [b1, b2, b3] = dims3(b)?;
    if a2 != b1 || a3 != b3 {
        return Err(Error::shape(format!(
            "t-product needs shapes I1 x I2 x I3 and I2 x J x I3, got \
             {a1}x{a2}x{a3} and {b1}x{b2}x{b3}"
        )));
    }
    let af = dft_mode3(a)?;
    let bf = dft_mode3(b)?;
    let mut cf = ComplexTensor3::zeros(a1, b2, a3);
    for s in 0..a3 {
        cf.set_slice(s, &(af.slice(s) * bf.slice(s)));
    }
    idft_mode3(&cf)
}

/// Conjugate transpose: every frontal slice is transposed, and the order of
/// slices `2..=I3` is reversed. For real tensors this is a pure data
/// permutation (bit-exact).
pub fn conj_transpose(a: &DenseTensor) -> Result<DenseTensor> {
    let [i1, i2, i3] = dims3(a)?;
    let mut out = DenseTensor::zeros(&[i2, i1, i3])?;
    let src = a.data();
    let dst = out.data_mut();
    for k in 0..i3 {
        let sk = if k == 0 { 0 } else { i3 - k };
        for j in 0..i2 {
            for i in 0..i1 {
                dst[j + i2 * (i + i1 * k)] = src[i + i1 * (j + i2 * sk)];
            }
        }
    }
    Ok(out)
}

/// Identity tensor `I1 x I1 x I3`: first frontal slice is the identity
/// matrix, all other slices are zero. Neutral element of the t-product.
pub fn identity_tensor(i1: usize, i3: usize) -> Result<DenseTensor> {
    let mut out = DenseTensor::zeros(&[i1, i1, i3])?;
    for i in 0..i1 {
        let off = i + i1 * i;
        out.data_mut()[off] = 1.0;
    }
    Ok(out)
}

/// Factors of the tensor SVD `X = U * S * V^H`: `U` is `I1 x I1 x I3` and
/// `V` is `I2 x I2 x I3`, both orthogonal under the t-product; `S` is
/// `I1 x I2 x I3` and f-diagonal (every frontal slice diagonal), with
/// per-Fourier-slice singular values sorted nonincreasing.
#[derive(Clone, Debug)]
pub struct TsvdFactors {
    pub u: DenseTensor,
    pub s: DenseTensor,
    pub v: DenseTensor,
}

/// Tensor SVD using the conjugate-symmetry shortcut described in the module
/// docs: only slices `0..=I3/2` (0-based) are decomposed, the rest are
/// conjugate copies of their partner `I3 - k`.
pub fn t_svd(x: &DenseTensor) -> Result<TsvdFactors> {
    t_svd_impl(x, true)
}

/// Tensor SVD decomposing every Fourier slice directly, with no symmetry
/// shortcut. Slower; exists as an independent cross-check of [`t_svd`]
/// (both produce the same canonical factors up to floating-point noise).
pub fn t_svd_full(x: &DenseTensor) -> Result<TsvdFactors> {
    t_svd_impl(x, false)
}

fn t_svd_impl(x: &DenseTensor, use_symmetry: bool) -> Result<TsvdFactors> {
    let [i1, i2, i3] = dims3(x)?;
    let xf = dft_mode3(x)?;
    let direct: Vec<usize> = if use_symmetry {
        (0..=i3 / 2).collect()
    } else {
        (0..i3).collect()
    };
    let computed: Vec<(usize, SliceSvd)> = direct
        .par_iter()
        .map(|&s| {
            let self_conjugate = s == 0 || 2 * s == i3;
            Ok((s, svd_slice_full(xf.slice(s), self_conjugate)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut uf = ComplexTensor3::zeros(i1, i1, i3);
    let mut sf = ComplexTensor3::zeros(i1, i2, i3);
    let mut vf = ComplexTensor3::zeros(i2, i2, i3);
    for (s, fac) in &computed {
        uf.set_slice(*s, &fac.u);
        vf.set_slice(*s, &fac.v);
        for (j, &sigma) in fac.sigma.iter().enumerate() {
            sf.set(j, j, *s, Complex64::new(sigma, 0.0));
        }
    }
    if use_symmetry {
        for s in (i3 / 2 + 1)..i3 {
            let partner = i3 - s;
            uf.copy_conj_slice(s, partner);
            sf.copy_conj_slice(s, partner);
            vf.copy_conj_slice(s, partner);
        }
    }
    Ok(TsvdFactors {
        u: idft_mode3(&uf)?,
        s: idft_mode3(&sf)?,
        v: idft_mode3(&vf)?,
    })
}

/// Tubal rank: the number of nonzero singular tubes of the tensor SVD,
/// counted numerically as tube indices `j` for which some Fourier slice has
/// `sigma_j` above `tol * sigma_max`, with `sigma_max` the largest singular
/// value across all slices. `tol` defaults to `max(I1, I2) * f64::EPSILON`.
pub fn tubal_rank(x: &DenseTensor, tol: Option<f64>) -> Result<usize> {
    let [i1, i2, _] = dims3(x)?;
    let sigmas = fourier_singular_values(x)?;
    let sigma_max = sigmas
        .iter()
        .flat_map(|s| s.first().copied())
        .fold(0.0f64, f64::max);
    let rel = tol.unwrap_or(i1.max(i2) as f64 * f64::EPSILON);
    let threshold = rel * sigma_max;
    Ok(sigmas
        .iter()
        .map(|s| s.iter().filter(|&&v| v > threshold).count())
        .max()
        .unwrap_or(0))
}

/// Multi-rank: the numerical rank of every Fourier frontal slice, as a
/// length-`I3` vector. Each slice is measured against its own largest
/// singular value with relative threshold `tol` (default
/// `max(I1, I2) * f64::EPSILON`).
pub fn multi_rank(x: &DenseTensor, tol: Option<f64>) -> Result<Vec<usize>> {
    let [i1, i2, _] = dims3(x)?;
    let rel = tol.unwrap_or(i1.max(i2) as f64 * f64::EPSILON);
    let sigmas = fourier_singular_values(x)?;
    Ok(sigmas
        .iter()
        .map(|s| {
            let threshold = rel * s.first().copied().unwrap_or(0.0);
            s.iter().filter(|&&v| v > threshold).count()
        })
        .collect())
}

/// Sorted (descending) singular values of every Fourier frontal slice.
pub(crate) fn fourier_singular_values(x: &DenseTensor) -> Result<Vec<Vec<f64>>> {
    let [_, _, i3] = dims3(x)?;
    let xf = dft_mode3(x)?;
    (0..i3)
        .into_par_iter()
        .map(|s| singular_values_complex(xf.slice(s)))
        .collect()
}

/// Sorted (descending) singular values of a complex matrix.
pub(crate) fn singular_values_complex(m: DMatrix<Complex64>) -> Result<Vec<f64>> {
    let (rows, cols) = m.shape();
    let svd = m
        .try_svd(false, false, f64::EPSILON, SVD_MAX_ITERS)
        .ok_or(Error::SvdFailed { rows, cols })?;
    let mut s: Vec<f64> = svd.singular_values.as_slice().to_vec();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(s)
}

/// Sorted (descending) singular values of a real matrix.
pub(crate) fn singular_values_real(m: DMatrix<f64>) -> Result<Vec<f64>> {
    let (rows, cols) = m.shape();
    let svd = m
        .try_svd(false, false, f64::EPSILON, SVD_MAX_ITERS)
        .ok_or(Error::SvdFailed { rows, cols })?;
    let mut s: Vec<f64> = svd.singular_values.as_slice().to_vec();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(s)
}

/// Thin SVD of a complex matrix with descending singular values:
/// returns `(U, sigma, V)` with `U: rows x k`, `V: cols x k`,
/// `k = min(rows, cols)`, such that `m = U diag(sigma) V^H`.
pub(crate) fn thin_svd_complex(
    m: DMatrix<Complex64>,
) -> Result<(DMatrix<Complex64>, Vec<f64>, DMatrix<Complex64>)> {
    let (rows, cols) = m.shape();
    let svd = m
        .try_svd(true, true, f64::EPSILON, SVD_MAX_ITERS)
        .ok_or(Error::SvdFailed { rows, cols })?;
    let u = svd.u.expect("u requested");
    let v = svd.v_t.expect("v requested").adjoint();
    let sigma: Vec<f64> = svd.singular_values.as_slice().to_vec();
    Ok(sort_thin(u, sigma, v))
}

/// Thin SVD of a real matrix with descending singular values.
pub(crate) fn thin_svd_real(m: DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let (rows, cols) = m.shape();
    let svd = m
        .try_svd(true, true, f64::EPSILON, SVD_MAX_ITERS)
        .ok_or(Error::SvdFailed { rows, cols })?;
    let u = svd.u.expect("u requested");
    let v = svd.v_t.expect("v requested").transpose();
    let sigma: Vec<f64> = svd.singular_values.as_slice().to_vec();
    Ok(sort_thin(u, sigma, v))
}

/// Reorders thin SVD factors so singular values are nonincreasing (stable
/// sort: equal values keep their relative order).
fn sort_thin<T: nalgebra::ComplexField<RealField = f64>>(
    u: DMatrix<T>,
    sigma: Vec<f64>,
    v: DMatrix<T>,
) -> (DMatrix<T>, Vec<f64>, DMatrix<T>) {
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).unwrap());
    if order.iter().enumerate().all(|(i, &o)| i == o) {
        return (u, sigma, v);
    }
    let mut u2 = u.clone();
    let mut v2 = v.clone();
    let mut s2 = sigma.clone();
    for (dst, &src) in order.iter().enumerate() {
        u2.set_column(dst, &u.column(src));
        v2.set_column(dst, &v.column(src));
        s2[dst] = sigma[src];
    }
    (u2, s2, v2)
}

/// One Fourier slice of a tensor SVD: full unitary `U` (`I1 x I1`) and `V`
/// (`I2 x I2`) plus descending singular values.
struct SliceSvd {
    u: DMatrix<Complex64>,
    sigma: Vec<f64>,
    v: DMatrix<Complex64>,
}

/// Full SVD of one Fourier slice. Self-conjugate slices (DC, and Nyquist for
/// even `I3`) are real matrices up to rounding, so they are decomposed with
/// a real SVD, which guarantees real factors. Other slices get a complex SVD
/// whose singular-vector phases are then fixed canonically (the largest
/// entry of each `U` column is made real positive) so that the decomposition
/// is a deterministic function of the slice and conjugate slices receive
/// conjugate factors.
fn svd_slice_full(m: DMatrix<Complex64>, self_conjugate: bool) -> Result<SliceSvd> {
    let k = m.nrows().min(m.ncols());
    if self_conjugate {
        let (u, sigma, v) = thin_svd_real(m.map(|z| z.re))?;
        let uf = unitary_completion(u)?;
        let vf = unitary_completion(v)?;
        Ok(SliceSvd {
            u: uf.map(|x| Complex64::new(x, 0.0)),
            sigma,
            v: vf.map(|x| Complex64::new(x, 0.0)),
        })
    } else {
        let (u, sigma, v) = thin_svd_complex(m)?;
        let mut uf = unitary_completion(u)?;
        let mut vf = unitary_completion(v)?;
        normalize_phases(&mut uf, &mut vf, k);
        Ok(SliceSvd {
            u: uf,
            sigma,
            v: vf,
        })
    }
}

/// Extends a matrix with `k <= n` (approximately) orthonormal columns to an
/// `n x n` unitary matrix. The given columns are kept in place (degenerate
/// ones, e.g. from a rank-deficient input, are replaced); missing columns
/// come from Gram-Schmidt against standard basis vectors, taken in index
/// order, so the result is deterministic.
fn unitary_completion<T: nalgebra::ComplexField<RealField = f64>>(
    thin: DMatrix<T>,
) -> Result<DMatrix<T>> {
    let (n, k) = thin.shape();
    debug_assert!(k <= n);
    let mut full = DMatrix::<T>::zeros(n, n);
    let mut accepted: Vec<DVector<T>> = Vec::with_capacity(n);
    let mut filled = vec![false; n];
    for (j, filled_j) in filled.iter_mut().enumerate().take(k) {
        let mut r: DVector<T> = thin.column(j).into_owned();
        for b in &accepted {
            let c = b.dotc(&r);
            r.axpy(-c, b, T::one());
        }
        let norm = r.norm();
        // A healthy singular vector keeps norm ~1 after projection; anything
        // much smaller is degenerate output and gets replaced below.
        if norm > 0.5 {
            let col = r.unscale(norm);
            full.set_column(j, &col);
            accepted.push(col);
            *filled_j = true;
        }
    }
    let mut candidate = 0usize;
    for (j, &filled_j) in filled.iter().enumerate() {
        if j < k && filled_j {
            continue;
        }
        let mut placed = false;
        while candidate < n {
            let mut r = DVector::<T>::zeros(n);
            r[candidate] = T::one();
            candidate += 1;
            for _ in 0..2 {
                for b in &accepted {
                    let c = b.dotc(&r);
                    r.axpy(-c, b, T::one());
                }
            }
            let norm = r.norm();
            if norm > 1e-6 {
                let col = r.unscale(norm);
                full.set_column(j, &col);
                accepted.push(col);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::invalid(
                "orthonormal basis completion ran out of independent candidates",
            ));
        }
    }
    Ok(full)
}

/// Fixes the phase freedom of a complex SVD: for each of the first `k`
/// columns, the entry of `U` with the largest magnitude (first such index on
/// ties) is rotated to be real positive, applying the same rotation to the
/// matching `V` column so `U diag(sigma) V^H` is unchanged.
fn normalize_phases(u: &mut DMatrix<Complex64>, v: &mut DMatrix<Complex64>, k: usize) {
    for j in 0..k {
        let mut best = (0usize, -1.0f64);
        for (i, z) in u.column(j).iter().enumerate() {
            let mag = z.norm_sqr();
            if mag > best.1 {
                best = (i, mag);
            }
        }
        let z = u[(best.0, j)];
        let mag = z.norm();
        if mag > 0.0 {
            let rot = z.conj() / Complex64::new(mag, 0.0);
            for i in 0..u.nrows() {
                u[(i, j)] *= rot;
            }
            for i in 0..v.nrows() {
                v[(i, j)] *= rot;
            }
        }
    }
}
