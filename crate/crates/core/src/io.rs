//! Binary tensor files, deterministic degradation generators, and CSV
//! convergence reports.
//!
//! # Tensor file format
//!
//! A tensor file is, in order:
//!
//! | bytes        | content                                            |
//! |--------------|----------------------------------------------------|
//! | 4            | magic `FFMT`                                       |
//! | 4            | format version, `u32` little-endian, currently `1` |
//! | 4            | number of modes `ndim`, `u32` little-endian        |
//! | 8 * ndim     | dimensions, `u64` little-endian each               |
//! | 1            | dtype code, `0` = `f64` little-endian              |
//! | 8 * product  | payload, entries in first-index-fastest order      |
//!
//! Reading rejects bad magic, unknown versions, unknown dtype codes,
//! truncated payloads, and trailing bytes with distinct errors, and
//! round-trips every `f64` bit pattern of finite values (signed zeros
//! included).
//!
//! # Randomness
//!
//! All randomized generators draw from [`SplitMix64`], a tiny documented
//! generator, so results are reproducible from a single `u64` seed across
//! platforms. Sampling without replacement uses a partial Fisher-Yates
//! shuffle (see [`sample_without_replacement`]).

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::solvers::SolveReport;
use crate::tensor::{checked_len, DenseTensor};

/// Magic bytes opening every tensor file.
pub const MAGIC: [u8; 4] = *b"FFMT";

/// The only tensor file format version this crate reads and writes.
pub const FORMAT_VERSION: u32 = 1;

/// Dtype code for little-endian `f64` payloads, the only supported type.
pub const DTYPE_F64: u8 = 0;

/// Parsed header of a tensor file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorFileHeader {
    /// Format version (always 1 today).
    pub version: u32,
    /// Tensor dimensions in mode order.
    pub dims: Vec<usize>,
    /// Element type code (always 0 = `f64` little-endian today).
    pub dtype: u8,
}

/// Writes a tensor to `path` in the format described in the module docs.
pub fn write_tensor(path: impl AsRef<Path>, x: &DenseTensor) -> Result<()> {
    let path = path.as_ref();
    let wrap = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(wrap)?);
    w.write_all(&MAGIC).map_err(wrap)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes()).map_err(wrap)?;
    w.write_all(&(x.order() as u32).to_le_bytes())
        .map_err(wrap)?;
    for &d in x.dims() {
        w.write_all(&(d as u64).to_le_bytes()).map_err(wrap)?;
    }
    w.write_all(&[DTYPE_F64]).map_err(wrap)?;
    for &v in x.data() {
        w.write_all(&v.to_le_bytes()).map_err(wrap)?;
    }
    w.flush().map_err(wrap)
}

/// Reads a tensor written by [`write_tensor`].
pub fn read_tensor(path: impl AsRef<Path>) -> Result<DenseTensor> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let (header, payload_at) = parse_header(path, &bytes)?;
    let total = checked_len(&header.dims)?;
    let expected = payload_at as u64 + 8 * total as u64;
    match (bytes.len() as u64).cmp(&expected) {
        std::cmp::Ordering::Less => {
            return Err(Error::Truncated {
                path: path.into(),
                expected,
                actual: bytes.len() as u64,
            })
        }
        std::cmp::Ordering::Greater => return Err(Error::TrailingData { path: path.into() }),
        std::cmp::Ordering::Equal => {}
    }
    let data = bytes[payload_at..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    DenseTensor::new(header.dims, data)
}

/// Reads only the header of a tensor file (cheap shape introspection).
pub fn read_tensor_header(path: impl AsRef<Path>) -> Result<TensorFileHeader> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    // Headers are tiny; reading up to 4 KiB covers any sane order.
    let mut bytes = Vec::with_capacity(4096);
    std::io::Read::by_ref(&mut file)
        .take(4096)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    parse_header(path, &bytes).map(|(h, _)| h)
}

/// Parses the header out of `bytes`, returning it and the payload offset.
fn parse_header(path: &Path, bytes: &[u8]) -> Result<(TensorFileHeader, usize)> {
    let truncated = || Error::Truncated {
        path: path.into(),
        expected: 13,
        actual: bytes.len() as u64,
    };
    if bytes.len() < 4 {
        return Err(truncated());
    }
    if bytes[0..4] != MAGIC {
        return Err(Error::BadMagic { path: path.into() });
    }
    if bytes.len() < 12 {
        return Err(truncated());
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::BadVersion {
            path: path.into(),
            version,
        });
    }
    let ndim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let dims_end = 12 + 8 * ndim;
    if bytes.len() < dims_end + 1 {
        return Err(Error::Truncated {
            path: path.into(),
            expected: dims_end as u64 + 1,
            actual: bytes.len() as u64,
        });
    }
    let mut dims = Vec::with_capacity(ndim);
    for k in 0..ndim {
        let raw = u64::from_le_bytes(bytes[12 + 8 * k..20 + 8 * k].try_into().unwrap());
        let d = usize::try_from(raw)
            .map_err(|_| Error::invalid(format!("dimension {raw} does not fit in usize")))?;
        dims.push(d);
    }
    checked_len(&dims)?;
    let dtype = bytes[dims_end];
    if dtype != DTYPE_F64 {
        return Err(Error::BadDtype {
            path: path.into(),
            dtype,
        });
    }
    Ok((
        TensorFileHeader {
            version,
            dims,
            dtype,
        },
        dims_end + 1,
    ))
}

/// SplitMix64 pseudo-random generator.
///
/// One step advances the state by the golden-ratio increment and mixes it
/// with two xor-shift-multiply rounds:
///
/// ```text
/// state += 0x9E3779B97F4A7C15
/// z = state
/// z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
/// z = (z ^ (z >> 27)) * 0x94D049BB133111EB
/// output = z ^ (z >> 31)
/// ```
///
/// The generator is deterministic given the seed and identical on every
/// platform; it exists so degradations are reproducible, not for
/// cryptography.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    /// Seeds the generator. Equal seeds give equal streams.
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Next 64 uniformly distributed bits.
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform draw from `0..bound` by modulo reduction (`bound > 0`). The
    /// modulo bias is below `bound / 2^64`, irrelevant at the scales used
    /// here.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        self.next_u64() % bound
    }

    /// Uniform draw from `[0, 1)` using the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Picks `k` distinct values from `0..n` with a partial Fisher-Yates
/// shuffle: the index array `0..n` is shuffled in place for the first `k`
/// slots, swapping slot `i` with slot `i + rng.next_below(n - i)`; the first
/// `k` slots are the sample, in selection order.
pub fn sample_without_replacement(n: usize, k: usize, rng: &mut SplitMix64) -> Vec<usize> {
    debug_assert!(k <= n);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + rng.next_below((n - i) as u64) as usize;
        idx.swap(i, j);
    }
    idx.truncate(k);
    idx
}

/// Boolean observation pattern with the same shape as the tensors it masks.
/// `true` marks a known (observed) entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservationMask {
    dims: Vec<usize>,
    flags: Vec<bool>,
}

impl ObservationMask {
    /// Builds a mask from per-entry flags in first-index-fastest order.
    pub fn from_flags(dims: Vec<usize>, flags: Vec<bool>) -> Result<Self> {
        let total = checked_len(&dims)?;
        if flags.len() != total {
            return Err(Error::shape(format!(
                "mask holds {} flags but dims {:?} require {}",
                flags.len(),
                dims,
                total
            )));
        }
        Ok(ObservationMask { dims, flags })
    }

    /// Mask with every entry known.
    pub fn all_known(dims: &[usize]) -> Result<Self> {
        let total = checked_len(dims)?;
        Ok(ObservationMask {
            dims: dims.to_vec(),
            flags: vec![true; total],
        })
    }

    /// Mask with every entry unknown.
    pub fn all_unknown(dims: &[usize]) -> Result<Self> {
        let total = checked_len(dims)?;
        Ok(ObservationMask {
            dims: dims.to_vec(),
            flags: vec![false; total],
        })
    }

    /// Shape of the masked tensors.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Per-entry flags in first-index-fastest order.
    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    /// Whether the entry at a linear offset is known.
    pub fn is_known(&self, linear: usize) -> bool {
        self.flags[linear]
    }

    /// Number of known entries.
    pub fn known_count(&self) -> usize {
        self.flags.iter().filter(|&&b| b).count()
    }

    /// 0/1 tensor representation, for storing a mask in a tensor file.
    pub fn to_tensor(&self) -> DenseTensor {
        let data = self
            .flags
            .iter()
            .map(|&b| if b { 1.0 } else { 0.0 })
            .collect();
        DenseTensor::new(self.dims.clone(), data).expect("mask shape is valid by construction")
    }

    /// Reads a mask back from its 0/1 tensor representation; any nonzero
    /// entry counts as known.
    pub fn from_tensor(x: &DenseTensor) -> Self {
        ObservationMask {
            dims: x.dims().to_vec(),
            flags: x.data().iter().map(|&v| v != 0.0).collect(),
        }
    }
}

/// Draws a uniform random observation mask with exactly
/// `round(rate * total)` known entries. `rate` must lie in `(0, 1]`;
/// identical `(dims, rate, seed)` give identical masks.
pub fn gen_mask(dims: &[usize], rate: f64, seed: u64) -> Result<ObservationMask> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::invalid(format!(
            "sampling rate must lie in (0, 1], got {rate}"
        )));
    }
    let total = checked_len(dims)?;
    let k = ((rate * total as f64).round() as usize).min(total);
    let mut rng = SplitMix64::new(seed);
    let chosen = sample_without_replacement(total, k, &mut rng);
    let mut flags = vec![false; total];
    for i in chosen {
        flags[i] = true;
    }
    ObservationMask::from_flags(dims.to_vec(), flags)
}

/// Replaces `round(level * total)` entries of `x` (chosen uniformly without
/// replacement) with impulse noise: each selected entry becomes the tensor's
/// minimum or maximum value, decided by one further bit from the same
/// generator stream, drawn in selection order. `level` must lie in `[0, 1)`.
pub fn salt_pepper(x: &DenseTensor, level: f64, seed: u64) -> Result<DenseTensor> {
    if !(0.0..1.0).contains(&level) {
        return Err(Error::invalid(format!(
            "salt-and-pepper level must lie in [0, 1), got {level}"
        )));
    }
    let lo = x.data().iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let k = (level * x.len() as f64).round() as usize;
    let mut rng = SplitMix64::new(seed);
    let chosen = sample_without_replacement(x.len(), k, &mut rng);
    let mut out = x.clone();
    for i in chosen {
        out.data_mut()[i] = if rng.next_u64() & 1 == 0 { lo } else { hi };
    }
    Ok(out)
}

/// Writes a solver convergence report as CSV with header
/// `iter,change_inf,objective`; one row per iteration, values printed with
/// 17 significant digits so parsing them back recovers the exact `f64`.
pub fn write_report_csv(path: impl AsRef<Path>, report: &SolveReport) -> Result<()> {
    let path = path.as_ref();
    let wrap = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(wrap)?);
    writeln!(w, "iter,change_inf,objective").map_err(wrap)?;
    for (i, (change, objective)) in report
        .change_history
        .iter()
        .zip(&report.objective_history)
        .enumerate()
    {
        writeln!(w, "{},{:.16e},{:.16e}", i + 1, change, objective).map_err(wrap)?;
    }
    w.flush().map_err(wrap)
}
