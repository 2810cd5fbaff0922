//! Link-level evaluation of a built pipeline: symbol transport, sum
//! spectral efficiency, empirical sum MSE, and coded-free bit error rate.
//!
//! The end-to-end receive map for user `k` is
//!
//! ```text
//! x̂_k = V_k^H M_k^H (γ H_k F W x + n_k) / γ
//!     = (V_k^H M_k^H H_k F W) x + V_k^H M_k^H n_k / γ
//! ```
//!
//! with `n_k ~ CN(0, σ² I)`. [`LinkModel`] precomputes the two linear maps
//! once per pipeline so Monte Carlo loops only do small mat-vec work per
//! symbol vector. Sum spectral efficiency treats inter-user leakage plus
//! filtered noise as the interference covariance:
//!
//! ```text
//! SSE = Σ_k log₂ det(I + Γ_k^{-1} S_k)
//! S_k = γ² V_k^H H_eff^k W_k W_k^H (H_eff^k)^H V_k
//! Γ_k = γ² Σ_{m≠k} V_k^H H_eff^k W_m W_m^H (H_eff^k)^H V_k + σ² V_k^H M_k^H M_k V_k
//! ```
//!
//! Bit error rate uses Gray-mapped 16-QAM with per-stream bias removal:
//! the MMSE pipeline scales stream `i` by `g_i = (V^H H_eff W)_{i,i}`
//! (`≈ μ`), so received symbols are divided by `g_i` before slicing.

use crate::analog::AnalogStage;
use crate::channel::ChannelSet;
use crate::digital::DigitalStage;
use crate::linalg::hermitian_solve;
use crate::{from_f64, CMatrix, CVector, Cplx, Error, Result, Scalar};
use rand::Rng;
use rand_distr::StandardNormal;

/// SNR sweep in dB, strictly increasing. SNR is defined as `P_t / σ²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrGrid {
    pub points_db: Vec<f64>,
}

impl SnrGrid {
    /// Inclusive range with a positive step.
    pub fn new(min_db: f64, max_db: f64, step_db: f64) -> Result<Self> {
        if !(step_db > 0.0) || !min_db.is_finite() || !max_db.is_finite() || max_db < min_db {
            return Err(Error::InvalidConfig(format!(
                "SNR grid needs min <= max and step > 0, got min={min_db} max={max_db} step={step_db}"
            )));
        }
        let mut points_db = Vec::new();
        let mut i = 0usize;
        loop {
            let p = min_db + step_db * i as f64;
            if p > max_db + 1e-9 {
                break;
            }
            points_db.push(p);
            i += 1;
        }
        Ok(SnrGrid { points_db })
    }

    /// Noise power for one grid point: `σ² = P_t / 10^(dB/10)`.
    pub fn sigma2(p_t: f64, snr_db: f64) -> f64 {
        p_t / 10f64.powf(snr_db / 10.0)
    }
}

/// One metric-versus-SNR curve with per-point uncertainty.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricCurve {
    /// Display label, e.g. the scheme and codebook settings.
    pub label: String,
    pub snr_db: Vec<f64>,
    pub value: Vec<f64>,
    pub stderr: Vec<f64>,
    pub trials: Vec<u64>,
}

impl MetricCurve {
    pub fn empty(label: impl Into<String>) -> Self {
        MetricCurve {
            label: label.into(),
            snr_db: Vec::new(),
            value: Vec::new(),
            stderr: Vec::new(),
            trials: Vec::new(),
        }
    }

    pub fn push(&mut self, snr_db: f64, value: f64, stderr: f64, trials: u64) {
        self.snr_db.push(snr_db);
        self.value.push(value);
        self.stderr.push(stderr);
        self.trials.push(trials);
    }
}

/// Gray-mapped square QAM described by its per-axis levels, listed in Gray
/// order so adjacent levels differ in exactly one bit.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationSpec {
    /// Amplitude of each per-axis Gray code word, index = Gray word value.
    levels: Vec<f64>,
    bits_per_axis: u32,
}

impl ModulationSpec {
    /// 16-QAM with unit average symbol energy: per-axis levels
    /// `{±1, ±3}/√10`, Gray words `00 → −3d, 01 → −d, 11 → +d, 10 → +3d`.
    pub fn qam16() -> Self {
        let d = 1.0 / 10f64.sqrt();
        ModulationSpec { levels: vec![-3.0 * d, -1.0 * d, 1.0 * d, 3.0 * d], bits_per_axis: 2 }
    }

    pub fn bits_per_symbol(&self) -> usize {
        2 * self.bits_per_axis as usize
    }

    fn gray_index(bits: &[u8]) -> usize {
        // Binary word b -> position of Gray code word b on the amplitude
        // axis: positions in Gray order are 00, 01, 11, 10.
        let word = bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        word ^ (word >> 1)
    }

    fn gray_bits(&self, position: usize, out: &mut [u8]) {
        // Inverse of gray_index: amplitude position -> binary word.
        let mut word = position;
        let mut shift = 1;
        while (position >> shift) > 0 {
            word ^= position >> shift;
            shift += 1;
        }
        let width = out.len();
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = ((word >> (width - 1 - i)) & 1) as u8;
        }
        let _ = self;
    }

    /// Maps `2·bits_per_axis` bits to one complex symbol, in-phase bits
    /// first.
    pub fn modulate<T: Scalar>(&self, bits: &[u8]) -> Cplx<T> {
        assert_eq!(bits.len(), self.bits_per_symbol());
        let half = self.bits_per_axis as usize;
        let re = self.levels[Self::gray_index(&bits[..half])];
        let im = self.levels[Self::gray_index(&bits[half..])];
        Cplx::new(from_f64(re), from_f64(im))
    }

    /// Nearest-level slicing back to bits, in-phase bits first.
    pub fn demodulate<T: Scalar>(&self, symbol: Cplx<T>, bits: &mut [u8]) {
        assert_eq!(bits.len(), self.bits_per_symbol());
        let half = self.bits_per_axis as usize;
        let slice = |x: f64| -> usize {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (i, l) in self.levels.iter().enumerate() {
                let d = (x - l).abs();
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            best
        };
        let re = symbol.re.to_f64().unwrap();
        let im = symbol.im.to_f64().unwrap();
        self.gray_bits(slice(re), &mut bits[..half]);
        self.gray_bits(slice(im), &mut bits[half..]);
    }
}

/// Precomputed end-to-end linear maps of one pipeline: `signal[k] x`
/// carries the symbols, `noise[k] n_k / γ` the filtered noise.
pub struct LinkModel<T: Scalar> {
    /// `V_k^H M_k^H H_k F W`, `N_s × K·N_s`.
    pub signal: Vec<CMatrix<T>>,
    /// `V_k^H M_k^H`, `N_s × N_r`.
    pub noise: Vec<CMatrix<T>>,
    pub gamma: T,
}

impl<T: Scalar> LinkModel<T> {
    pub fn new(channels: &ChannelSet<T>, analog: &AnalogStage<T>, digital: &DigitalStage<T>) -> Self {
        let mut signal = Vec::with_capacity(channels.users());
        let mut noise = Vec::with_capacity(channels.users());
        for (k, h_k) in channels.per_user.iter().enumerate() {
            let front = digital.combiners[k].adjoint() * analog.combiners[k].adjoint();
            signal.push(&front * h_k * &analog.precoder * &digital.precoder);
            noise.push(front);
        }
        LinkModel { signal, noise, gamma: digital.gamma }
    }

    /// Per-stream end-to-end gains `g_i = (V^H H_eff W)_{i,i}`, used to
    /// remove the MMSE bias before slicing.
    pub fn stream_gains(&self) -> Vec<Cplx<T>> {
        let mut gains = Vec::new();
        for (k, s) in self.signal.iter().enumerate() {
            let n_s = s.nrows();
            for i in 0..n_s {
                gains.push(s[(i, k * n_s + i)]);
            }
        }
        gains
    }

    /// One channel use: returns each user's equalizer output for the
    /// stacked symbol vector `x` (length `K·N_s`).
    pub fn transmit<R: Rng + ?Sized>(
        &self,
        x: &CVector<T>,
        sigma2: T,
        rng: &mut R,
    ) -> Vec<CVector<T>> {
        let noise_axis = (sigma2 / (T::one() + T::one())).sqrt() / self.gamma;
        self.signal
            .iter()
            .zip(&self.noise)
            .map(|(s, r)| {
                let mut y = s * x;
                if noise_axis > T::zero() {
                    let n = CVector::<T>::from_fn(r.ncols(), |_, _| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        Cplx::new(from_f64::<T>(re) * noise_axis, from_f64::<T>(im) * noise_axis)
                    });
                    y += r * n;
                }
                y
            })
            .collect()
    }
}

/// One channel use through the full pipeline; see [`LinkModel::transmit`].
/// Prefer building the [`LinkModel`] once when sending many vectors.
pub fn transmit_receive<T: Scalar, R: Rng + ?Sized>(
    channels: &ChannelSet<T>,
    analog: &AnalogStage<T>,
    digital: &DigitalStage<T>,
    x: &CVector<T>,
    sigma2: T,
    rng: &mut R,
) -> Vec<CVector<T>> {
    LinkModel::new(channels, analog, digital).transmit(x, sigma2, rng)
}

/// Monte Carlo estimate of the sum MSE `E Σ_k ‖x̂_k − x_k‖²` over unit
/// variance Gaussian symbols and fresh noise. Returns `(mean, stderr)`.
pub fn smse_empirical<T: Scalar, R: Rng + ?Sized>(
    channels: &ChannelSet<T>,
    analog: &AnalogStage<T>,
    digital: &DigitalStage<T>,
    sigma2: T,
    n_vectors: usize,
    rng: &mut R,
) -> (f64, f64) {
    assert!(n_vectors > 1, "need at least two symbol vectors for a stderr");
    let model = LinkModel::new(channels, analog, digital);
    let n_s = digital.combiners[0].ncols();
    let total_streams = channels.users() * n_s;
    let half = 0.5f64.sqrt();
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    for _ in 0..n_vectors {
        let x = CVector::<T>::from_fn(total_streams, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Cplx::new(from_f64(re * half), from_f64(im * half))
        });
        let outputs = model.transmit(&x, sigma2, rng);
        let mut err = 0.0f64;
        for (k, y) in outputs.iter().enumerate() {
            for i in 0..n_s {
                let d = y[i] - x[k * n_s + i];
                err += (d.re * d.re + d.im * d.im).to_f64().unwrap();
            }
        }
        sum += err;
        sum_sq += err * err;
    }
    let n = n_vectors as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) / (n - 1.0);
    (mean, var.sqrt())
}

/// Sum spectral efficiency in bit/s/Hz; errors with the offending user if
/// an interference-plus-noise covariance is singular.
pub fn sse<T: Scalar>(
    channels: &ChannelSet<T>,
    analog: &AnalogStage<T>,
    digital: &DigitalStage<T>,
    sigma2: T,
) -> Result<T> {
    let users = channels.users();
    let n_s = digital.combiners[0].ncols();
    let g2 = Cplx::new(digital.gamma * digital.gamma, T::zero());
    let mut total = T::zero();
    for k in 0..users {
        let h_eff_k = analog.combiners[k].adjoint() * &channels.per_user[k] * &analog.precoder;
        let a = digital.combiners[k].adjoint() * h_eff_k;
        let mut interference = CMatrix::<T>::zeros(n_s, n_s);
        let mut wanted = CMatrix::<T>::zeros(n_s, n_s);
        for m in 0..users {
            let b = &a * digital.precoder.columns(m * n_s, n_s);
            let outer = &b * b.adjoint() * g2;
            if m == k {
                wanted += outer;
            } else {
                interference += outer;
            }
        }
        let mv = &analog.combiners[k] * &digital.combiners[k];
        interference += mv.adjoint() * mv * Cplx::new(sigma2, T::zero());
        let x = hermitian_solve(&interference, &wanted)
            .ok_or(Error::SingularCovariance { user: k })?;
        let m = CMatrix::<T>::identity(n_s, n_s) + x;
        let det = m.lu().determinant();
        total += det.re.max(T::zero()).log2();
    }
    Ok(total)
}

/// Monte Carlo bit error rate with Gray-mapped QAM and per-stream bias
/// removal. `n_bits` must be a positive multiple of the bits carried by
/// one channel use (`bits_per_symbol · K · N_s`). Returns `(ber, stderr)`
/// with the binomial standard error.
pub fn ber<T: Scalar, R: Rng + ?Sized>(
    channels: &ChannelSet<T>,
    analog: &AnalogStage<T>,
    digital: &DigitalStage<T>,
    modulation: &ModulationSpec,
    sigma2: T,
    n_bits: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let n_s = digital.combiners[0].ncols();
    let streams = channels.users() * n_s;
    let bits_per_use = modulation.bits_per_symbol() * streams;
    if n_bits == 0 || n_bits % bits_per_use != 0 {
        return Err(Error::InvalidConfig(format!(
            "n_bits must be a positive multiple of {bits_per_use} (bits per channel use), got {n_bits}"
        )));
    }
    let model = LinkModel::new(channels, analog, digital);
    let gains = model.stream_gains();
    let bps = modulation.bits_per_symbol();
    let uses = n_bits / bits_per_use;
    let mut sent = vec![0u8; bits_per_use];
    let mut got = vec![0u8; bps];
    let mut errors = 0usize;
    for _ in 0..uses {
        for b in sent.iter_mut() {
            *b = rng.gen::<bool>() as u8;
        }
        let x = CVector::<T>::from_fn(streams, |i, _| {
            modulation.modulate(&sent[i * bps..(i + 1) * bps])
        });
        let outputs = model.transmit(&x, sigma2, rng);
        for (k, y) in outputs.iter().enumerate() {
            for i in 0..n_s {
                let stream = k * n_s + i;
                let eq = y[i] / gains[stream];
                modulation.demodulate(eq, &mut got);
                let truth = &sent[stream * bps..(stream + 1) * bps];
                errors += got.iter().zip(truth).filter(|(a, b)| a != b).count();
            }
        }
    }
    let p = errors as f64 / n_bits as f64;
    let stderr = (p * (1.0 - p) / n_bits as f64).sqrt();
    Ok((p, stderr))
}
