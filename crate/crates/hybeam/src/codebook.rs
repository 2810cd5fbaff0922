//! Over-sampled, phase-quantized beam codebooks for planar arrays.
//!
//! Candidate beams are generic array vectors `a(w_y, w_z)` with element
//! `(n, m)` equal to `exp(j (n w_y + m w_z)) / √N`, evaluated on the
//! oversampled spatial-frequency grids `w_y ∈ {2πi / (ρ N_y)}` and
//! `w_z ∈ {2πi / (ρ N_z)}`. Each element phase is then snapped to the
//! `2^q`-point uniform phase alphabet, and duplicate beams are discarded
//! keeping the first occurrence. With `ρ = 1` and no quantizer the
//! construction reduces to the 2D DFT basis of the array.
//!
//! Grid phases are exact rationals of the form `2π t / (ρ N_y N_z)`, so the
//! builder quantizes and deduplicates on integer phase indices; beams are
//! only converted to floating point when materialized. Two runs therefore
//! produce bit-identical codebooks, and knife-edge rounding ties resolve by
//! the documented rule rather than by floating-point luck.

use crate::channel::ArrayGeometry;
use crate::{from_f64, CMatrix, CVector, Cplx, Error, Result, Scalar};
use nalgebra::ComplexField;
use std::collections::HashSet;
use std::f64::consts::TAU;
use std::io::{BufRead, Write};

/// Uniform phase alphabet `{2π p / 2^bits}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantizerSpec {
    pub bits: u32,
}

impl QuantizerSpec {
    pub fn new(bits: u32) -> Self {
        assert!(bits >= 1 && bits < 32, "phase bits out of range");
        QuantizerSpec { bits }
    }

    /// Alphabet size `2^bits`.
    pub fn levels(&self) -> u64 {
        1u64 << self.bits
    }

    /// Snaps one phase (radians, any range) to the nearest alphabet entry,
    /// returning a value in `[0, 2π)`. Exactly equidistant phases round to
    /// the numerically smaller alphabet value, so the midpoint above the
    /// last level wraps to 0.
    pub fn snap(&self, phase: f64) -> f64 {
        let levels = self.levels();
        let x = (phase / TAU).rem_euclid(1.0) * levels as f64;
        let k = x.floor() as u64;
        let frac = x - k as f64;
        let chosen = if frac > 0.5 || (frac == 0.5 && k + 1 == levels) {
            (k + 1) % levels
        } else {
            k
        };
        TAU * chosen as f64 / levels as f64
    }
}

/// Spatial frequency pair addressed by a generic array vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialFrequencyPair<T> {
    pub w_y: T,
    pub w_z: T,
}

/// Array vector with element `(n, m) = exp(j (n w_y + m w_z)) / √N`, using
/// the crate-wide z-fastest element ordering. Unlike a steering vector this
/// is parameterized directly in spatial frequency, so it does not depend on
/// the element pitch.
pub fn generic_array_vector<T: Scalar>(
    geom: &ArrayGeometry,
    w: SpatialFrequencyPair<T>,
) -> CVector<T> {
    let norm = from_f64::<T>(1.0 / (geom.len() as f64).sqrt());
    CVector::from_fn(geom.len(), |idx, _| {
        let (n, m) = (idx / geom.n_z, idx % geom.n_z);
        let phase = w.w_y * from_f64::<T>(n as f64) + w.w_z * from_f64::<T>(m as f64);
        Cplx::new(phase.cos() * norm, phase.sin() * norm)
    })
}

/// Returns `v` with every element's phase snapped to the quantizer alphabet
/// and magnitudes kept. Idempotent: alphabet phases are fixed points.
pub fn quantize_phases<T: Scalar>(v: &CVector<T>, quantizer: &QuantizerSpec) -> CVector<T> {
    CVector::from_fn(v.nrows(), |i, _| {
        let e = v[i];
        let mag = e.modulus().to_f64().unwrap();
        let phase = e.im.to_f64().unwrap().atan2(e.re.to_f64().unwrap());
        let snapped = quantizer.snap(phase);
        Cplx::new(from_f64(mag * snapped.cos()), from_f64(mag * snapped.sin()))
    })
}

/// `|a^H b|`. Inputs are expected unit-norm, so the value lies in `[0, 1]`
/// up to rounding.
pub fn correlation<T: Scalar>(a: &CVector<T>, b: &CVector<T>) -> T {
    a.dotc(b).modulus()
}

/// Deduplicated beam codebook for one array.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook<T: Scalar> {
    /// Unit-norm constant-modulus beams, first-occurrence order.
    pub entries: Vec<CVector<T>>,
    pub geometry: ArrayGeometry,
    pub oversampling: usize,
    pub quantizer: Option<QuantizerSpec>,
}

impl<T: Scalar> Codebook<T> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries as the columns of an `N × len` matrix.
    pub fn as_matrix(&self) -> CMatrix<T> {
        let n = self.geometry.len();
        let mut m = CMatrix::<T>::zeros(n, self.len());
        for (j, e) in self.entries.iter().enumerate() {
            m.set_column(j, e);
        }
        m
    }
}

/// Builds the over-sampled codebook for `geom` with oversampling factor
/// `rho`, optionally quantizing element phases to `quantizer`'s alphabet.
///
/// Candidates enumerate `w_y` (outer) then `w_z` (inner); duplicates keep
/// the first occurrence, so the entry order is canonical. The returned
/// codebook has at most `ρ² N_y N_z` entries.
pub fn build_osc<T: Scalar>(
    geom: &ArrayGeometry,
    rho: usize,
    quantizer: Option<QuantizerSpec>,
) -> Codebook<T> {
    assert!(rho >= 1, "oversampling factor must be positive");
    assert!(!geom.is_empty(), "array must have elements");
    let n = geom.len();
    let den = (rho * n) as u64;
    let norm = 1.0 / (n as f64).sqrt();
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut entries = Vec::new();
    for i_y in 0..rho * geom.n_y {
        for i_z in 0..rho * geom.n_z {
            // Element phase is 2π t / den with t = n i_y N_z + m i_z N_y.
            let key: Vec<u64> = (0..n)
                .map(|idx| {
                    let (ny, mz) = ((idx / geom.n_z) as u64, (idx % geom.n_z) as u64);
                    let t = (ny * i_y as u64 * geom.n_z as u64
                        + mz * i_z as u64 * geom.n_y as u64)
                        % den;
                    match quantizer {
                        None => t,
                        Some(q) => quantize_index(t, den, q.levels()),
                    }
                })
                .collect();
            if seen.insert(key.clone()) {
                let phase_den = match quantizer {
                    None => den,
                    Some(q) => q.levels(),
                };
                entries.push(CVector::from_fn(n, |idx, _| {
                    let phase = TAU * key[idx] as f64 / phase_den as f64;
                    Cplx::new(from_f64(phase.cos() * norm), from_f64(phase.sin() * norm))
                }));
            }
        }
    }
    Codebook { entries, geometry: *geom, oversampling: rho, quantizer }
}

/// Rounds the exact phase `2π t / den` to the nearest of `levels` uniform
/// phases, in integer arithmetic. Ties pick the smaller phase value; the
/// midpoint between the last level and 2π therefore wraps to level 0.
fn quantize_index(t: u64, den: u64, levels: u64) -> u64 {
    let num = levels * t;
    let k = num / den;
    let r = num % den;
    if 2 * r > den || (2 * r == den && k + 1 == levels) {
        (k + 1) % levels
    } else {
        k
    }
}

impl<T: Scalar> Codebook<T> {
    /// Writes the codebook as CSV: a `# n_y=..,n_z=..,rho=..,q=..,count=..`
    /// header (q = 0 means unquantized) followed by one line per entry of
    /// interleaved `re,im` element values.
    pub fn export_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(
            out,
            "# n_y={},n_z={},rho={},q={},count={}",
            self.geometry.n_y,
            self.geometry.n_z,
            self.oversampling,
            self.quantizer.map_or(0, |q| q.bits),
            self.len()
        )?;
        for e in &self.entries {
            let fields: Vec<String> = e
                .iter()
                .flat_map(|c| {
                    [c.re.to_f64().unwrap().to_string(), c.im.to_f64().unwrap().to_string()]
                })
                .collect();
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }

    /// Parses the format written by [`Codebook::export_csv`]. The element
    /// pitch is not part of the format (beams do not depend on it); the
    /// returned geometry uses half-wavelength spacing.
    pub fn import_csv<R: BufRead>(input: R) -> Result<Codebook<T>> {
        let bad = |detail: &str| Error::Parse { what: "codebook csv".into(), detail: detail.into() };
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| bad("empty file"))??;
        let header = header.strip_prefix('#').ok_or_else(|| bad("missing # header"))?.trim();
        let mut n_y = None;
        let mut n_z = None;
        let mut rho = None;
        let mut q = None;
        let mut count = None;
        for field in header.split(',') {
            let (key, value) = field.trim().split_once('=').ok_or_else(|| bad("bad header field"))?;
            let value: u64 = value.parse().map_err(|_| bad("non-integer header value"))?;
            match key {
                "n_y" => n_y = Some(value as usize),
                "n_z" => n_z = Some(value as usize),
                "rho" => rho = Some(value as usize),
                "q" => q = Some(value as u32),
                "count" => count = Some(value as usize),
                other => return Err(bad(&format!("unknown header key {other}"))),
            }
        }
        let (n_y, n_z) = (n_y.ok_or_else(|| bad("missing n_y"))?, n_z.ok_or_else(|| bad("missing n_z"))?);
        let geometry = ArrayGeometry::new(n_y, n_z);
        let count = count.ok_or_else(|| bad("missing count"))?;
        let mut entries = Vec::with_capacity(count);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let values: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|v| v.trim().parse::<f64>()).collect();
            let values = values.map_err(|_| bad("non-numeric entry value"))?;
            if values.len() != 2 * geometry.len() {
                return Err(bad("entry length does not match geometry"));
            }
            entries.push(CVector::from_fn(geometry.len(), |i, _| {
                Cplx::new(from_f64(values[2 * i]), from_f64(values[2 * i + 1]))
            }));
        }
        if entries.len() != count {
            return Err(bad("entry count does not match header"));
        }
        Ok(Codebook {
            entries,
            geometry,
            oversampling: rho.ok_or_else(|| bad("missing rho"))?,
            quantizer: match q.ok_or_else(|| bad("missing q"))? {
                0 => None,
                bits => Some(QuantizerSpec::new(bits)),
            },
        })
    }
}
