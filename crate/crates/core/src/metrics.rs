//! Image-quality metrics for recovery experiments: peak signal-to-noise
//! ratio, structural similarity, the dimensionless relative global error
//! (ERGAS), and relative standard error.
//!
//! All metrics take the reference first and the estimate second. Multi-band
//! data (3-order tensors) is treated as a stack of frontal slices along the
//! last mode.

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

/// How the dynamic-range peak entering PSNR and SSIM is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PeakMode {
    /// The largest magnitude of the reference tensor.
    MaxOfReference,
    /// A fixed caller-supplied peak (e.g. 255 for 8-bit images).
    Fixed(f64),
}

/// Whether a metric is computed over all entries at once or averaged over
/// bands (last-mode slices).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BandMode {
    /// One value over the whole tensor.
    Global,
    /// Mean of the per-band values, bands along the last mode.
    PerBandMean,
}

/// Settings shared by the quality metrics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricConfig {
    /// Peak selection for PSNR and SSIM.
    pub peak: PeakMode,
    /// Global versus per-band averaging for PSNR and multi-band SSIM.
    pub band_mode: BandMode,
    /// Side length of the SSIM window (odd, >= 3).
    pub ssim_window: usize,
    /// Standard deviation of the Gaussian SSIM window.
    pub ssim_sigma: f64,
    /// SSIM stabilization constant factor: C1 = (k1 * peak)^2.
    pub ssim_k1: f64,
    /// SSIM stabilization constant factor: C2 = (k2 * peak)^2.
    pub ssim_k2: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            peak: PeakMode::MaxOfReference,
            band_mode: BandMode::PerBandMean,
            ssim_window: 11,
            ssim_sigma: 1.5,
            ssim_k1: 0.01,
            ssim_k2: 0.03,
        }
    }
}

impl MetricConfig {
    fn validate(&self) -> Result<()> {
        if self.ssim_window < 3 || self.ssim_window % 2 == 0 {
            return Err(Error::invalid(format!(
                "ssim_window must be odd and >= 3, got {}",
                self.ssim_window
            )));
        }
        if !(self.ssim_sigma.is_finite() && self.ssim_sigma > 0.0) {
            return Err(Error::invalid(format!(
                "ssim_sigma must be finite and > 0, got {}",
                self.ssim_sigma
            )));
        }
        for (name, v) in [("ssim_k1", self.ssim_k1), ("ssim_k2", self.ssim_k2)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if let PeakMode::Fixed(p) = self.peak {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::invalid(format!(
                    "fixed peak must be finite and > 0, got {p}"
                )));
            }
        }
        Ok(())
    }

    /// The dynamic-range peak for a given reference.
    fn resolved_peak(&self, reference: &DenseTensor) -> Result<f64> {
        match self.peak {
            PeakMode::Fixed(p) => Ok(p),
            PeakMode::MaxOfReference => {
                let p = reference.max_abs();
                if p > 0.0 {
                    Ok(p)
                } else {
                    Err(Error::invalid(
                        "reference peak is zero; supply a fixed peak instead",
                    ))
                }
            }
        }
    }
}

fn check_same_shape(reference: &DenseTensor, estimate: &DenseTensor) -> Result<()> {
    if reference.dims() != estimate.dims() {
        return Err(Error::shape(format!(
            "reference dims {:?} do not match estimate dims {:?}",
            reference.dims(),
            estimate.dims()
        )));
    }
    Ok(())
}

fn mean_squared_error(reference: &[f64], estimate: &[f64]) -> f64 {
    let sum: f64 = reference
        .iter()
        .zip(estimate)
        .map(|(r, e)| (r - e) * (r - e))
        .sum();
    sum / reference.len() as f64
}

fn psnr_from_mse(peak: f64, mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    }
}

/// Peak signal-to-noise ratio in decibels: `10 * log10(peak^2 / MSE)`.
///
/// Returns the `f64::INFINITY` sentinel when the inputs are identical
/// (zero mean squared error). With [`BandMode::PerBandMean`] the value is
/// the mean of per-band PSNRs over last-mode slices, all sharing one peak.
pub fn psnr(reference: &DenseTensor, estimate: &DenseTensor, cfg: &MetricConfig) -> Result<f64> {
    check_same_shape(reference, estimate)?;
    cfg.validate()?;
    if reference.is_empty() {
        return Err(Error::invalid("psnr of an empty tensor is undefined"));
    }
    let peak = cfg.resolved_peak(reference)?;
    match cfg.band_mode {
        BandMode::Global => Ok(psnr_from_mse(
            peak,
            mean_squared_error(reference.data(), estimate.data()),
        )),
        BandMode::PerBandMean => {
            let bands = *reference.dims().last().expect("order >= 1");
            let slab = reference.len() / bands;
            let mut total = 0.0;
            for b in 0..bands {
                let range = b * slab..(b + 1) * slab;
                let mse =
                    mean_squared_error(&reference.data()[range.clone()], &estimate.data()[range]);
                total += psnr_from_mse(peak, mse);
            }
            Ok(total / bands as f64)
        }
    }
}

/// Mean local structural similarity with a Gaussian window.
///
/// Accepts 2-order tensors directly; 3-order tensors are scored as the mean
/// SSIM of their last-mode slices, with a single peak shared by all bands.
/// Both image dimensions must be at least the window size. Values lie in
/// `[-1, 1]`, with 1 exactly when the inputs are identical.
pub fn ssim(reference: &DenseTensor, estimate: &DenseTensor, cfg: &MetricConfig) -> Result<f64> {
    check_same_shape(reference, estimate)?;
    cfg.validate()?;
    let peak = cfg.resolved_peak(reference)?;
    match reference.order() {
        2 => ssim_image(
            reference.data(),
            estimate.data(),
            reference.dims()[0],
            reference.dims()[1],
            peak,
            cfg,
        ),
        3 => {
            let (rows, cols, bands) = (
                reference.dims()[0],
                reference.dims()[1],
                reference.dims()[2],
            );
            let slab = rows * cols;
            let mut total = 0.0;
            for b in 0..bands {
                let range = b * slab..(b + 1) * slab;
                total += ssim_image(
                    &reference.data()[range.clone()],
                    &estimate.data()[range],
                    rows,
                    cols,
                    peak,
                    cfg,
                )?;
            }
            Ok(total / bands as f64)
        }
        o => Err(Error::invalid(format!(
            "ssim requires a 2- or 3-order tensor, got order {o}"
        ))),
    }
}

/// SSIM of one image stored first-index-fastest as `rows x cols`.
///
/// Local statistics use the uncentered form: variances and covariance are
/// computed as weighted second moments minus products of weighted means.
fn ssim_image(
    reference: &[f64],
    estimate: &[f64],
    rows: usize,
    cols: usize,
    peak: f64,
    cfg: &MetricConfig,
) -> Result<f64> {
    let win = cfg.ssim_window;
    if rows < win || cols < win {
        return Err(Error::invalid(format!(
            "image {rows}x{cols} is smaller than the {win}x{win} ssim window"
        )));
    }
    // Normalized separable Gaussian window.
    let center = (win / 2) as f64;
    let mut g: Vec<f64> = (0..win)
        .map(|i| {
            let d = i as f64 - center;
            (-d * d / (2.0 * cfg.ssim_sigma * cfg.ssim_sigma)).exp()
        })
        .collect();
    let gsum: f64 = g.iter().sum();
    for v in &mut g {
        *v /= gsum;
    }

    let c1 = (cfg.ssim_k1 * peak) * (cfg.ssim_k1 * peak);
    let c2 = (cfg.ssim_k2 * peak) * (cfg.ssim_k2 * peak);

    let mut total = 0.0;
    let out_rows = rows - win + 1;
    let out_cols = cols - win + 1;
    for c0 in 0..out_cols {
        for r0 in 0..out_rows {
            let mut mu_x = 0.0;
            let mut mu_y = 0.0;
            let mut xx = 0.0;
            let mut yy = 0.0;
            let mut xy = 0.0;
            for dc in 0..win {
                let col_base = (c0 + dc) * rows + r0;
                let wc = g[dc];
                for dr in 0..win {
                    let w = wc * g[dr];
                    let x = reference[col_base + dr];
                    let y = estimate[col_base + dr];
                    mu_x += w * x;
                    mu_y += w * y;
                    xx += w * x * x;
                    yy += w * y * y;
                    xy += w * x * y;
                }
            }
            let var_x = xx - mu_x * mu_x;
            let var_y = yy - mu_y * mu_y;
            let cov = xy - mu_x * mu_y;
            total += ((2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2))
                / ((mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2));
        }
    }
    Ok(total / (out_rows * out_cols) as f64)
}

/// Dimensionless relative global error:
/// `100 * sqrt(mean over bands of MSE_b / mean_b^2)`, with bands taken along
/// the given 1-based mode. Errors if any band of the reference has zero mean.
pub fn ergas(reference: &DenseTensor, estimate: &DenseTensor, bands_along: usize) -> Result<f64> {
    check_same_shape(reference, estimate)?;
    if bands_along == 0 || bands_along > reference.order() {
        return Err(Error::invalid(format!(
            "bands_along must be in 1..={}, got {bands_along}",
            reference.order()
        )));
    }
    if reference.is_empty() {
        return Err(Error::invalid("ergas of an empty tensor is undefined"));
    }
    // Row b of the mode-n unfolding holds exactly the entries of band b.
    let ref_rows = reference.unfold(bands_along)?;
    let est_rows = estimate.unfold(bands_along)?;
    let bands = ref_rows.dims()[0];
    let per_band = ref_rows.dims()[1];
    let mut total = 0.0;
    for b in 0..bands {
        let mut sq = 0.0;
        let mut sum = 0.0;
        for j in 0..per_band {
            let r = ref_rows.get(&[b, j]);
            let e = est_rows.get(&[b, j]);
            sq += (r - e) * (r - e);
            sum += r;
        }
        let mean = sum / per_band as f64;
        if mean == 0.0 {
            return Err(Error::invalid(format!(
                "band {} along mode {bands_along} has zero mean",
                b + 1
            )));
        }
        let mse = sq / per_band as f64;
        total += mse / (mean * mean);
    }
    Ok(100.0 * (total / bands as f64).sqrt())
}

/// Relative standard error `||estimate - reference||_F / ||reference||_F`.
/// Errors on an all-zero reference.
pub fn rse(reference: &DenseTensor, estimate: &DenseTensor) -> Result<f64> {
    check_same_shape(reference, estimate)?;
    let denom = reference.frobenius_norm();
    if denom == 0.0 {
        return Err(Error::invalid("rse is undefined for a zero reference"));
    }
    let num: f64 = reference
        .data()
        .iter()
        .zip(estimate.data())
        .map(|(r, e)| (r - e) * (r - e))
        .sum::<f64>()
        .sqrt();
    Ok(num / denom)
}
