//! Closed-form digital stage minimizing the sum mean square error over
//! users for a fixed analog stage.
//!
//! With the stacked effective channel `H_eff` (one `M_r`-row block per
//! user), an arbitrary semi-unitary initial combiner `V_ini`, and the power
//! normalization `γ² tr(F W W^H F^H) = P_t`, the stage is a single pass:
//!
//! ```text
//! W   = (H_eff^H H_eff)^{-1} H_eff^H V_ini
//! V_k^H = W_k^H (H_eff^k)^H (H_eff^k W W^H (H_eff^k)^H + (σ²/γ²) M_k^H M_k)^{-1}
//! ```
//!
//! `W` is the stationary point of the sum MSE in the precoder for fixed
//! combiners, and each `V_k` is the per-user MMSE combiner for that `W`.
//! When `H_eff` is square these forms compose to an end-to-end map `μ·I`
//! with `μ = γ²/(γ²+σ²)`; the block-inverse identity behind that collapse
//! is exposed as [`lemma1_check`] for tests.
//!
//! The module also evaluates the sum MSE three ways (exact trace form,
//! plug-in approximation, and its high-SNR simplification) so tests can
//! measure approximation error instead of assuming it.

use crate::linalg::{frob_sq, hermitian_solve, singular_values_desc, svd_least_squares};
use crate::{from_f64, CMatrix, Cplx, Error, Result, Scalar};
use rand::Rng;
use rand_distr::StandardNormal;

/// Initial per-user combiner blocks, `M_r × N_s` each with orthonormal
/// columns (square unitary when `M_r = N_s`, the configuration the
/// closed-form identities need).
#[derive(Debug, Clone, PartialEq)]
pub struct InitialCombiner<T: Scalar> {
    pub blocks: Vec<CMatrix<T>>,
}

impl<T: Scalar> InitialCombiner<T> {
    /// Identity-column blocks, the canonical choice.
    pub fn identity(users: usize, m_r: usize, n_s: usize) -> Self {
        assert!(n_s <= m_r, "streams cannot exceed combiner rows");
        let block = CMatrix::<T>::identity(m_r, n_s);
        InitialCombiner { blocks: vec![block; users] }
    }

    /// Haar-ish random blocks via QR of a complex Gaussian matrix.
    pub fn random<R: Rng + ?Sized>(users: usize, m_r: usize, n_s: usize, rng: &mut R) -> Self {
        assert!(n_s <= m_r, "streams cannot exceed combiner rows");
        let blocks = (0..users)
            .map(|_| {
                let g = CMatrix::<T>::from_fn(m_r, n_s, |_, _| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Cplx::new(from_f64(re), from_f64(im))
                });
                g.qr().q()
            })
            .collect();
        InitialCombiner { blocks }
    }

    /// True when every block has orthonormal columns to `tol` Frobenius.
    pub fn is_semi_unitary(&self, tol: f64) -> bool {
        self.blocks.iter().all(|b| {
            let gram = b.adjoint() * b;
            let eye = CMatrix::<T>::identity(b.ncols(), b.ncols());
            (gram - eye).norm().to_f64().unwrap() <= tol
        })
    }

    /// Blocks stacked on the diagonal: `K·M_r × K·N_s`.
    pub fn block_diagonal(&self) -> CMatrix<T> {
        let (m_r, n_s) = (self.blocks[0].nrows(), self.blocks[0].ncols());
        let k = self.blocks.len();
        let mut v = CMatrix::<T>::zeros(k * m_r, k * n_s);
        for (i, b) in self.blocks.iter().enumerate() {
            v.view_mut((i * m_r, i * n_s), (m_r, n_s)).copy_from(b);
        }
        v
    }
}

/// Digital precoder, per-user digital combiners, and the scalars tying them
/// to the power constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitalStage<T: Scalar> {
    /// `W`, `M_t × K·N_s`, user blocks side by side.
    pub precoder: CMatrix<T>,
    /// `V_k`, each `M_r × N_s`.
    pub combiners: Vec<CMatrix<T>>,
    /// Transmit normalization `γ = √(P_t / tr(F W W^H F^H))`.
    pub gamma: T,
    /// MMSE bias scalar `μ = γ² / (γ² + σ²)`.
    pub mu: T,
}

impl<T: Scalar> DigitalStage<T> {
    /// Columns of `W` belonging to one user.
    pub fn precoder_block(&self, user: usize) -> CMatrix<T> {
        let n_s = self.combiners[user].ncols();
        self.precoder.columns(user * n_s, n_s).into_owned()
    }
}

fn gram_condition<T: Scalar>(h_eff: &CMatrix<T>) -> (f64, f64) {
    let sv = singular_values_desc(h_eff);
    let s1 = sv[0].to_f64().unwrap();
    let sn = sv[sv.len() - 1].to_f64().unwrap();
    (s1, sn)
}

/// Sum-MSE-optimal digital precoder for combiners fixed at `v_ini`:
/// `W = (H_eff^H H_eff)^{-1} H_eff^H V_ini`, so that
/// `W W^H = (H_eff^H H_eff)^{-1}` when `V_ini` blocks are square unitary.
///
/// When `H_eff` is too ill-conditioned for the Gram solve to carry any
/// correct digits (squared condition beyond 1e12, which unpruned beam
/// selection can produce), the solve switches to a truncated-SVD
/// least-squares path. The minimum-norm minimizer is still the sum-MSE
/// optimum there: a null-space component changes nothing about
/// `H_eff · W` and only shrinks the power normalization `γ`.
pub fn digital_precoder<T: Scalar>(
    h_eff: &CMatrix<T>,
    v_ini: &InitialCombiner<T>,
) -> Result<CMatrix<T>> {
    assert!(h_eff.nrows() >= h_eff.ncols(), "gram form needs a tall or square H_eff");
    let target = v_ini.block_diagonal();
    let (s1, sn) = gram_condition(h_eff);
    let cond2 = (s1 / sn) * (s1 / sn);
    if !cond2.is_finite() || cond2 > 1e12 {
        return Ok(svd_least_squares(h_eff, &target));
    }
    let gram = h_eff.adjoint() * h_eff;
    let rhs = h_eff.adjoint() * target;
    hermitian_solve(&gram, &rhs).ok_or(Error::RankDeficient { cond: cond2 })
}

/// Minimum-norm digital precoder for a wide, full row rank `H_eff`:
/// `W = H_eff^H (H_eff H_eff^H)^{-1} V_ini`, which achieves
/// `H_eff W = V_ini` with the least transmit power. Used by the fully
/// digital reference when antennas outnumber the stacked combiner outputs.
/// Falls back to the truncated-SVD least-squares path exactly like
/// [`digital_precoder`] when the row Gram loses rank.
pub fn digital_precoder_min_norm<T: Scalar>(
    h_eff: &CMatrix<T>,
    v_ini: &InitialCombiner<T>,
) -> Result<CMatrix<T>> {
    assert!(h_eff.nrows() <= h_eff.ncols(), "min-norm form needs a wide or square H_eff");
    let target = v_ini.block_diagonal();
    let (s1, sn) = gram_condition(h_eff);
    let cond2 = (s1 / sn) * (s1 / sn);
    if !cond2.is_finite() || cond2 > 1e12 {
        return Ok(svd_least_squares(h_eff, &target));
    }
    let gram = h_eff * h_eff.adjoint();
    let x = hermitian_solve(&gram, &target).ok_or(Error::RankDeficient { cond: cond2 })?;
    Ok(h_eff.adjoint() * x)
}

/// `γ = √(P_t / tr(F W W^H F^H))`.
pub fn normalization_gamma<T: Scalar>(f: &CMatrix<T>, w: &CMatrix<T>, p_t: T) -> Result<T> {
    let trace = frob_sq(&(f * w));
    if trace.to_f64().unwrap() <= 0.0 {
        return Err(Error::ZeroPowerPrecoder { trace: trace.to_f64().unwrap() });
    }
    Ok((p_t / trace).sqrt())
}

/// Per-user MMSE combiner for a fixed precoder, Eq-for-eq:
/// `V_k^H = W_k^H (H_eff^k)^H (H_eff^k W W^H (H_eff^k)^H + (σ²/γ²) M_k^H M_k)^{-1}`.
///
/// `w_k` is `w`'s block of columns belonging to `user`; `user` only labels
/// the error when the system matrix is singular.
pub fn digital_combiner<T: Scalar>(
    h_eff_k: &CMatrix<T>,
    w: &CMatrix<T>,
    w_k: &CMatrix<T>,
    m_k: &CMatrix<T>,
    gamma: T,
    sigma2: T,
    user: usize,
) -> Result<CMatrix<T>> {
    let hw = h_eff_k * w;
    let noise_scale = Cplx::new(sigma2 / (gamma * gamma), T::zero());
    let system = &hw * hw.adjoint() + (m_k.adjoint() * m_k) * noise_scale;
    // The system matrix is Hermitian, so V_k = system^{-1} H_eff^k W_k.
    let rhs = h_eff_k * w_k;
    hermitian_solve(&system, &rhs).ok_or(Error::SingularCombinerSystem { user })
}

/// Exact per-user MSE `ξ_k = E‖x̂_k − x_k‖²` for unit-energy symbols:
///
/// ```text
/// ξ_k = tr(V_k^H H_eff^k W W^H (H_eff^k)^H V_k) − 2 Re tr(V_k^H H_eff^k W_k)
///     + N_s + (σ²/γ²) tr(V_k^H M_k^H M_k V_k)
/// ```
pub fn user_mse<T: Scalar>(
    h_eff_k: &CMatrix<T>,
    m_k: &CMatrix<T>,
    w: &CMatrix<T>,
    w_k: &CMatrix<T>,
    v_k: &CMatrix<T>,
    gamma: T,
    sigma2: T,
) -> T {
    let vh_hw = v_k.adjoint() * (h_eff_k * w);
    let signal = frob_sq(&vh_hw);
    let cross = (v_k.adjoint() * (h_eff_k * w_k)).trace().re;
    let noise = frob_sq(&(m_k * v_k)) * sigma2 / (gamma * gamma);
    let n_s = from_f64::<T>(v_k.ncols() as f64);
    signal - (cross + cross) + n_s + noise
}

/// Sum of [`user_mse`] over all users of a built pipeline.
pub fn smse_trace<T: Scalar>(
    h_eff_blocks: &[CMatrix<T>],
    analog_combiners: &[CMatrix<T>],
    digital: &DigitalStage<T>,
    sigma2: T,
) -> T {
    h_eff_blocks
        .iter()
        .zip(analog_combiners)
        .zip(&digital.combiners)
        .enumerate()
        .map(|(k, ((h, m), v))| {
            let w_k = digital.precoder_block(k);
            user_mse(h, m, &digital.precoder, &w_k, v, digital.gamma, sigma2)
        })
        .fold(T::zero(), |a, b| a + b)
}

/// Plug-in sum-MSE approximation
/// `ξ ≈ (μ²−2μ+1)·K·N_s + (K·N_s·μ²·σ²/P_t)·tr((H_eff^H H_eff)^{-1})`,
/// or with `high_snr` the simplification `(K·N_s·σ²/P_t)·tr(…)`. The trace
/// of the inverse Gram equals `Σ σ_i^{-2}` over `H_eff`'s singular values;
/// both are computed and cross-checked here.
pub fn smse_analytic<T: Scalar>(
    h_eff: &CMatrix<T>,
    gamma: T,
    sigma2: T,
    k_users: usize,
    n_s: usize,
    p_t: T,
    high_snr: bool,
) -> Result<T> {
    let sv = singular_values_desc(h_eff);
    let (s1, sn) = (sv[0].to_f64().unwrap(), sv[sv.len() - 1].to_f64().unwrap());
    let cond2 = (s1 / sn) * (s1 / sn);
    if !cond2.is_finite() || cond2 > 1e12 {
        return Err(Error::RankDeficient { cond: cond2 });
    }
    let trace_sv = sv.iter().map(|s| T::one() / (*s * *s)).fold(T::zero(), |a, b| a + b);
    let gram = h_eff.adjoint() * h_eff;
    let inv = hermitian_solve(&gram, &CMatrix::<T>::identity(gram.nrows(), gram.ncols()))
        .ok_or(Error::RankDeficient { cond: cond2 })?;
    let trace_inv = inv.trace().re;
    let rel = ((trace_inv - trace_sv) / trace_sv).to_f64().unwrap().abs();
    debug_assert!(rel < 1e-9, "inverse-Gram trace vs singular values: {rel}");

    let kns = from_f64::<T>((k_users * n_s) as f64);
    let g2 = gamma * gamma;
    let mu = g2 / (g2 + sigma2);
    if high_snr {
        Ok(kns * sigma2 / p_t * trace_inv)
    } else {
        let bias = mu * mu - mu - mu + T::one();
        Ok(bias * kns + kns * mu * mu * sigma2 / p_t * trace_inv)
    }
}

/// Test oracle for the block-inverse identity behind the pipeline collapse:
/// for square invertible `A` split into row blocks `A_i`,
/// `A_i (A^H A)^{-1} A_j^H = δ(i−j)·I`. Returns false when any block
/// deviates by more than `1e-9` Frobenius (e.g. near-singular `A`).
pub fn lemma1_check<T: Scalar>(a: &CMatrix<T>, partition: &[usize]) -> bool {
    assert_eq!(a.nrows(), a.ncols(), "identity needs a square matrix");
    assert_eq!(partition.iter().sum::<usize>(), a.nrows(), "partition must cover the rows");
    let gram = a.adjoint() * a;
    let solved = match hermitian_solve(&gram, &a.adjoint()) {
        Some(x) => x,
        None => return false,
    };
    // x = (A^H A)^{-1} A^H; block (i, j) of A x is A_i x_j.
    let product = a * solved;
    let mut row = 0;
    for (i, &ri) in partition.iter().enumerate() {
        let mut col = 0;
        for (j, &rj) in partition.iter().enumerate() {
            let block = product.view((row, col), (ri, rj));
            let want = if i == j {
                CMatrix::<T>::identity(ri, rj)
            } else {
                CMatrix::<T>::zeros(ri, rj)
            };
            if (block - want).norm().to_f64().unwrap() > 1e-9 {
                return false;
            }
            col += rj;
        }
        row += ri;
    }
    true
}

/// Builds the full digital stage for one analog stage in a single pass:
/// precoder, normalization, then per-user combiners. Picks the Gram form
/// when `H_eff` is tall or square and the minimum-norm form when wide.
pub fn min_smse_stage<T: Scalar>(
    h_eff_blocks: &[CMatrix<T>],
    analog_combiners: &[CMatrix<T>],
    f: &CMatrix<T>,
    v_ini: &InitialCombiner<T>,
    p_t: T,
    sigma2: T,
) -> Result<DigitalStage<T>> {
    let rows: usize = h_eff_blocks.iter().map(|b| b.nrows()).sum();
    let cols = h_eff_blocks[0].ncols();
    let mut h_eff = CMatrix::<T>::zeros(rows, cols);
    let mut at = 0;
    for b in h_eff_blocks {
        h_eff.rows_mut(at, b.nrows()).copy_from(b);
        at += b.nrows();
    }
    let w = if rows >= cols {
        digital_precoder(&h_eff, v_ini)?
    } else {
        digital_precoder_min_norm(&h_eff, v_ini)?
    };
    let gamma = normalization_gamma(f, &w, p_t)?;
    let g2 = gamma * gamma;
    let mu = g2 / (g2 + sigma2);
    let n_s = v_ini.blocks[0].ncols();
    let combiners = h_eff_blocks
        .iter()
        .zip(analog_combiners)
        .enumerate()
        .map(|(k, (h_k, m_k))| {
            let w_k = w.columns(k * n_s, n_s).into_owned();
            digital_combiner(h_k, &w, &w_k, m_k, gamma, sigma2, k)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DigitalStage { precoder: w, combiners, gamma, mu })
}
