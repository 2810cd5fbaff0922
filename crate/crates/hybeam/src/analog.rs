//! Joint greedy selection of the analog precoder and combiners.
//!
//! Given per-user channels and beam codebooks, the selector repeatedly picks
//! the user/receive-beam/transmit-beam triple maximizing `|a_r^H H_k a_t|²`,
//! then drops every candidate too correlated with the winners (threshold
//! `β`) so later picks stay well separated and the effective channel keeps a
//! usable condition number. It runs exactly `K · M_r` iterations, one per
//! analog precoder column.
//!
//! The objective table `|a_r^H H_k a_t|²` for all candidate pairs is
//! computed per user as two planar GEMMs and accumulated in `f64` for every
//! scalar type; selections are index decisions, so this keeps one code path
//! that is deterministic across `f32`/`f64` pipelines. Per-row maxima are
//! cached and rescanned only when the cached column is pruned, which keeps
//! the scan cost far below a full table sweep per iteration.

use crate::channel::ChannelSet;
use crate::codebook::Codebook;
use crate::linalg::{cgemm, singular_values_desc, Planar};
use crate::{CMatrix, Error, Result, Scalar};

/// Parameters of the greedy selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JapcConfig {
    /// Maximum tolerated correlation between a winner and surviving
    /// candidates on the same side, in (0, 1].
    pub beta: f64,
}

impl JapcConfig {
    pub fn new(beta: f64) -> Self {
        assert!(beta > 0.0 && beta <= 1.0, "beta must lie in (0, 1]");
        JapcConfig { beta }
    }
}

/// One greedy pick, in pick order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub user: usize,
    /// Index into the picked user's codebook.
    pub user_entry: usize,
    /// Index into the base-station codebook.
    pub bs_entry: usize,
    /// `|a_r^H H_k a_t|²` of the pick.
    pub objective: f64,
}

/// Analog stage: constant-modulus precoder and per-user combiners.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogStage<T: Scalar> {
    /// `F`, `N_t × K·M_r`, columns grouped per user in pick order.
    pub precoder: CMatrix<T>,
    /// `M_k`, each `N_r × M_r`, columns in pick order.
    pub combiners: Vec<CMatrix<T>>,
    /// The picks that produced the columns above.
    pub selections: Vec<Selection>,
}

impl<T: Scalar> AnalogStage<T> {
    pub fn users(&self) -> usize {
        self.combiners.len()
    }

    /// Columns per user combiner.
    pub fn beams_per_user(&self) -> usize {
        self.combiners.first().map_or(0, |m| m.ncols())
    }

    /// Identity analog stage: `F = I_{N_t}` and `M_k = I_{N_r}`, the fully
    /// digital reference where every antenna has its own RF chain.
    pub fn identity(n_t: usize, n_r: usize, users: usize) -> Self {
        AnalogStage {
            precoder: CMatrix::<T>::identity(n_t, n_t),
            combiners: (0..users).map(|_| CMatrix::<T>::identity(n_r, n_r)).collect(),
            selections: Vec::new(),
        }
    }
}

/// One side's candidate pool: alive flags plus the pruning bookkeeping the
/// restoration fallback needs.
struct Pool {
    alive: Vec<bool>,
    /// Pruned, never-selected candidates, restorable.
    pruned: Vec<usize>,
    /// Selected candidates are never restored.
    selected: Vec<usize>,
}

impl Pool {
    fn new(len: usize) -> Self {
        Pool { alive: vec![true; len], pruned: Vec::new(), selected: Vec::new() }
    }

    fn any_alive(&self) -> bool {
        self.alive.iter().any(|&a| a)
    }
}

/// `|column i of a (planar) dotted with column j|` for unit-norm columns.
fn column_correlation(p: &Planar, i: usize, j: usize) -> f64 {
    let n = p.rows;
    let (ai, aj) = (i * n, j * n);
    let mut re = 0.0;
    let mut im = 0.0;
    for r in 0..n {
        let (xr, xi) = (p.re[ai + r], p.im[ai + r]);
        let (yr, yi) = (p.re[aj + r], p.im[aj + r]);
        re += xr * yr + xi * yi;
        im += xr * yi - xi * yr;
    }
    (re * re + im * im).sqrt()
}

/// Restores the pruned candidate least correlated with the already selected
/// entries of `pool` (ties to the lower index). Returns false if nothing is
/// restorable.
fn restore_one(pool: &mut Pool, planar: &Planar) -> bool {
    let mut best: Option<(f64, usize, usize)> = None;
    for (slot, &cand) in pool.pruned.iter().enumerate() {
        let worst = pool
            .selected
            .iter()
            .map(|&s| column_correlation(planar, cand, s))
            .fold(0.0f64, f64::max);
        let better = match best {
            None => true,
            Some((score, idx, _)) => worst < score || (worst == score && cand < idx),
        };
        if better {
            best = Some((worst, cand, slot));
        }
    }
    match best {
        Some((_, cand, slot)) => {
            pool.pruned.swap_remove(slot);
            pool.alive[cand] = true;
            true
        }
        None => false,
    }
}

/// Cached per-row maximum of the objective table.
#[derive(Clone, Copy)]
struct RowBest {
    value: f64,
    col: usize,
    epoch: u64,
}

const NO_COL: usize = usize::MAX;

/// Greedy joint analog precoder/combiner selection.
///
/// Each of the `K · M_r` iterations picks the argmax of `|a_r^H H_k a_t|²`
/// over users still short of `m_r` beams and their surviving candidates
/// (ties broken by ascending user, user-entry, BS-entry index), appends the
/// winning beams to `M_k` and `F_k`, and prunes both codebooks of candidates
/// whose correlation with the respective winner reaches `cfg.beta`. Winners
/// are always removed, so a rounding error in the self-correlation cannot
/// let a beam be picked twice.
///
/// When pruning empties a pool before quotas are met (a regime the
/// threshold rule alone does not define), pruned, never-selected candidates
/// are restored one at a time in ascending order of their worst correlation
/// to the already selected columns on that side until the scan can proceed;
/// [`Error::CodebookExhausted`] is raised only when nothing is restorable.
pub fn japc<T: Scalar>(
    channels: &ChannelSet<T>,
    bs_codebook: &Codebook<T>,
    user_codebooks: &[Codebook<T>],
    m_r: usize,
    cfg: &JapcConfig,
) -> Result<AnalogStage<T>> {
    let k_users = channels.users();
    assert_eq!(user_codebooks.len(), k_users, "one codebook per user");
    assert!(m_r >= 1, "at least one beam per user");
    // Undersized codebooks surface as CodebookExhausted when the pools and
    // the restoration fallback run dry, not as a panic.

    let dt = Planar::from_cmatrix(&bs_codebook.as_matrix());
    let n_bs = bs_codebook.len();
    let drs: Vec<Planar> =
        user_codebooks.iter().map(|cb| Planar::from_cmatrix(&cb.as_matrix())).collect();

    // Objective tables, row-major per user: row = user entry, col = BS entry.
    let tables: Vec<Vec<f64>> = channels
        .per_user
        .iter()
        .zip(&drs)
        .map(|(h, dr)| {
            let h = Planar::from_cmatrix(h);
            let hd = cgemm(&h, false, &dt);
            let g = cgemm(dr, true, &hd);
            let mut mag = vec![0.0f64; g.rows * g.cols];
            for j in 0..g.cols {
                for i in 0..g.rows {
                    let idx = j * g.rows + i;
                    mag[i * g.cols + j] = g.re[idx] * g.re[idx] + g.im[idx] * g.im[idx];
                }
            }
            mag
        })
        .collect();

    let mut bs_pool = Pool::new(n_bs);
    let mut user_pools: Vec<Pool> = user_codebooks.iter().map(|cb| Pool::new(cb.len())).collect();
    let mut row_best: Vec<Vec<RowBest>> = user_codebooks
        .iter()
        .map(|cb| vec![RowBest { value: 0.0, col: NO_COL, epoch: 0 }; cb.len()])
        .collect();
    let mut quota = vec![m_r; k_users];
    let mut cols_epoch = 1u64;

    let mut selections: Vec<Selection> = Vec::with_capacity(k_users * m_r);
    let mut bs_picks: Vec<Vec<usize>> = vec![Vec::with_capacity(m_r); k_users];
    let mut user_picks: Vec<Vec<usize>> = vec![Vec::with_capacity(m_r); k_users];

    for _ in 0..k_users * m_r {
        // Restore candidates until some active user has a feasible pair.
        loop {
            let users_blocked: Vec<usize> = (0..k_users)
                .filter(|&k| quota[k] > 0 && !user_pools[k].any_alive())
                .collect();
            let all_blocked =
                (0..k_users).filter(|&k| quota[k] > 0).all(|k| users_blocked.contains(&k));
            if !bs_pool.any_alive() {
                if restore_one(&mut bs_pool, &dt) {
                    cols_epoch += 1;
                    continue;
                }
                let user = (0..k_users).find(|&k| quota[k] > 0).unwrap_or(0);
                return Err(Error::CodebookExhausted { user });
            }
            if all_blocked {
                let user = users_blocked[0];
                if restore_one(&mut user_pools[user], &drs[user]) {
                    continue;
                }
                return Err(Error::CodebookExhausted { user });
            }
            break;
        }

        // Global argmax via the per-row caches; strict > keeps the first
        // (lowest-index) maximizer on every level, matching the tie rule.
        let mut winner: Option<(f64, usize, usize)> = None;
        for k in 0..k_users {
            if quota[k] == 0 {
                continue;
            }
            let table = &tables[k];
            for i in 0..user_pools[k].alive.len() {
                if !user_pools[k].alive[i] {
                    continue;
                }
                let cache = &mut row_best[k][i];
                if cache.col == NO_COL || !bs_pool.alive[cache.col] || cache.epoch != cols_epoch {
                    let row = &table[i * n_bs..(i + 1) * n_bs];
                    let mut v = f64::NEG_INFINITY;
                    let mut c = NO_COL;
                    for (j, alive) in bs_pool.alive.iter().enumerate() {
                        if *alive && row[j] > v {
                            v = row[j];
                            c = j;
                        }
                    }
                    cache.value = v;
                    cache.col = c;
                    cache.epoch = cols_epoch;
                }
                if cache.col != NO_COL {
                    let better = match winner {
                        None => true,
                        Some((v, _, _)) => cache.value > v,
                    };
                    if better {
                        winner = Some((cache.value, k, i));
                    }
                }
            }
        }
        let (objective, k_star, r_star) = winner.expect("feasibility was just restored");
        let t_star = row_best[k_star][r_star].col;

        selections.push(Selection {
            user: k_star,
            user_entry: r_star,
            bs_entry: t_star,
            objective,
        });
        user_picks[k_star].push(r_star);
        bs_picks[k_star].push(t_star);

        // Prune the winner unconditionally and near-parallel survivors.
        let dr = &drs[k_star];
        let upool = &mut user_pools[k_star];
        upool.alive[r_star] = false;
        upool.selected.push(r_star);
        for i in 0..upool.alive.len() {
            if upool.alive[i] && column_correlation(dr, i, r_star) >= cfg.beta {
                upool.alive[i] = false;
                upool.pruned.push(i);
            }
        }
        bs_pool.alive[t_star] = false;
        bs_pool.selected.push(t_star);
        for j in 0..n_bs {
            if bs_pool.alive[j] && column_correlation(&dt, j, t_star) >= cfg.beta {
                bs_pool.alive[j] = false;
                bs_pool.pruned.push(j);
            }
        }

        quota[k_star] -= 1;
    }

    // Materialize F (user-grouped) and the per-user combiners from the picks.
    let n_t = bs_codebook.geometry.len();
    let mut precoder = CMatrix::<T>::zeros(n_t, k_users * m_r);
    for (k, picks) in bs_picks.iter().enumerate() {
        for (slot, &j) in picks.iter().enumerate() {
            precoder.set_column(k * m_r + slot, &bs_codebook.entries[j]);
        }
    }
    let combiners = user_picks
        .iter()
        .enumerate()
        .map(|(k, picks)| {
            let n_r = user_codebooks[k].geometry.len();
            let mut m = CMatrix::<T>::zeros(n_r, m_r);
            for (slot, &i) in picks.iter().enumerate() {
                m.set_column(slot, &user_codebooks[k].entries[i]);
            }
            m
        })
        .collect();

    Ok(AnalogStage { precoder, combiners, selections })
}

/// Per-user effective channel `M_k^H H_k F`.
pub fn effective_channel<T: Scalar>(
    h_k: &CMatrix<T>,
    f: &CMatrix<T>,
    m_k: &CMatrix<T>,
) -> CMatrix<T> {
    m_k.adjoint() * h_k * f
}

/// Stacks the per-user effective channels into `H_eff` (`K·M_r × M_t` when
/// produced by [`japc`]).
pub fn stack_effective<T: Scalar>(channels: &ChannelSet<T>, stage: &AnalogStage<T>) -> CMatrix<T> {
    let blocks: Vec<CMatrix<T>> = channels
        .per_user
        .iter()
        .zip(&stage.combiners)
        .map(|(h, m)| effective_channel(h, &stage.precoder, m))
        .collect();
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols = stage.precoder.ncols();
    let mut out = CMatrix::<T>::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.rows_mut(at, b.nrows()).copy_from(&b);
        at += b.nrows();
    }
    out
}

/// `σ_1 / σ_rank` of `m`: the condition number of the effective channel
/// restricted to the `rank` dimensions the digital stage must invert.
pub fn condition_number<T: Scalar>(m: &CMatrix<T>, rank: usize) -> Result<T> {
    assert!(rank >= 1 && rank <= m.nrows().min(m.ncols()), "rank out of range");
    let sv = singular_values_desc(m);
    let (s1, sr) = (sv[0], sv[rank - 1]);
    let floor = s1.to_f64().unwrap() * 1e-12;
    if s1 <= T::zero() || sr.to_f64().unwrap() < floor {
        return Err(Error::SingularChannel {
            sigma_max: s1.to_f64().unwrap(),
            sigma_min: sr.to_f64().unwrap(),
        });
    }
    Ok(s1 / sr)
}
