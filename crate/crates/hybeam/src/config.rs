//! System configuration, invariant validation, and the flat `key=value`
//! config file format shared by the CLI and the experiment harness.
//!
//! The standing dimensional contracts are `K·M_r = M_t` (the digital
//! precoder stays square-invertible), `N_s ≤ M_r`, and `K·N_s ≤ M_t`;
//! [`validate_config`] reports every violated one by name together with
//! the offending values instead of failing on the first.

use crate::channel::{sample_channel, ArrayGeometry, ChannelSet, ClusterSpec};
use crate::codebook::{build_osc, Codebook, QuantizerSpec};
use crate::{Error, Result, Scalar};
use rand::Rng;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// Every knob of one simulated system. `sigma2` is the operating noise
/// power for single-point runs; SNR sweeps override it per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub bs_geometry: ArrayGeometry,
    pub user_geometry: ArrayGeometry,
    /// Number of users K.
    pub users: usize,
    /// BS RF chains (columns of F).
    pub m_t: usize,
    /// Per-user RF chains (columns of each M_k).
    pub m_r: usize,
    /// Streams per user.
    pub n_s: usize,
    /// Total transmit power.
    pub p_t: f64,
    /// Noise variance; SNR = P_t/σ².
    pub sigma2: f64,
    /// BS phase-shifter bits; 0 means unquantized.
    pub b_t: u32,
    /// User phase-shifter bits; 0 means unquantized.
    pub b_r: u32,
    /// Codebook oversampling factor ρ ≥ 1.
    pub rho: usize,
    /// Beam correlation pruning threshold β ∈ (0, 1].
    pub beta: f64,
    /// Master seed for all randomness.
    pub seed: u64,
    /// Monte Carlo channel realizations per SNR point.
    pub trials: usize,
    pub clusters: ClusterSpec,
}

impl Default for SystemConfig {
    /// The 64-antenna sum-spectral-efficiency setup: 8 single-stream users
    /// on an 8×8 BS array with 4×4 user arrays.
    fn default() -> Self {
        SystemConfig {
            bs_geometry: ArrayGeometry::new(8, 8),
            user_geometry: ArrayGeometry::new(4, 4),
            users: 8,
            m_t: 8,
            m_r: 1,
            n_s: 1,
            p_t: 1.0,
            sigma2: 0.1,
            b_t: 3,
            b_r: 2,
            rho: 8,
            beta: 0.15,
            seed: 1,
            trials: 1000,
            clusters: ClusterSpec::dense_scattering(),
        }
    }
}

impl SystemConfig {
    /// Alias for [`Default::default`]: the SSE sweep configuration.
    pub fn sse_experiment() -> Self {
        SystemConfig::default()
    }

    /// The BER sweep configuration: 2 users, 2 streams and 2 RF chains
    /// each, on the same arrays.
    pub fn ber_experiment() -> Self {
        SystemConfig { users: 2, m_t: 4, m_r: 2, n_s: 2, ..SystemConfig::default() }
    }

    /// Small arrays and 10 trials; completes in seconds, used by CI-style
    /// plumbing checks.
    pub fn smoke() -> Self {
        SystemConfig {
            bs_geometry: ArrayGeometry::new(4, 4),
            user_geometry: ArrayGeometry::new(2, 2),
            users: 2,
            m_t: 4,
            m_r: 2,
            n_s: 2,
            rho: 2,
            beta: 0.5,
            trials: 10,
            ..SystemConfig::default()
        }
    }

    /// BS-side OSC with `b_t`-bit phases (0 bits = unquantized).
    pub fn bs_codebook<T: Scalar>(&self) -> Codebook<T> {
        let q = if self.b_t == 0 { None } else { Some(QuantizerSpec::new(self.b_t)) };
        build_osc(&self.bs_geometry, self.rho, q)
    }

    /// User-side OSC with `b_r`-bit phases (0 bits = unquantized).
    pub fn user_codebook<T: Scalar>(&self) -> Codebook<T> {
        let q = if self.b_r == 0 { None } else { Some(QuantizerSpec::new(self.b_r)) };
        build_osc(&self.user_geometry, self.rho, q)
    }

    /// Draws one multi-user channel realization under this config.
    pub fn sample_channels<T: Scalar, R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelSet<T> {
        sample_channel(&self.bs_geometry, &self.user_geometry, self.users, &self.clusters, rng)
    }

    /// The config as ordered `(key, value)` pairs; the same schema the
    /// file format reads and the CSV header echoes.
    pub fn to_key_values(&self) -> Vec<(&'static str, String)> {
        vec![
            ("bs_ny", self.bs_geometry.n_y.to_string()),
            ("bs_nz", self.bs_geometry.n_z.to_string()),
            ("ue_ny", self.user_geometry.n_y.to_string()),
            ("ue_nz", self.user_geometry.n_z.to_string()),
            ("users", self.users.to_string()),
            ("m_t", self.m_t.to_string()),
            ("m_r", self.m_r.to_string()),
            ("n_s", self.n_s.to_string()),
            ("p_t", self.p_t.to_string()),
            ("sigma2", self.sigma2.to_string()),
            ("b_t", self.b_t.to_string()),
            ("b_r", self.b_r.to_string()),
            ("rho", self.rho.to_string()),
            ("beta", self.beta.to_string()),
            ("seed", self.seed.to_string()),
            ("trials", self.trials.to_string()),
            ("clusters", self.clusters.n_clusters.to_string()),
            ("rays_per_cluster", self.clusters.n_paths.to_string()),
            // Radians so the echo parses back to the exact same float; the
            // deg key exists for hand-written files only.
            ("angle_spread_rad", self.clusters.angular_spread.to_string()),
        ]
    }

    /// Applies one `key=value` override; unknown keys and unparsable
    /// values are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<V: FromStr>(key: &str, value: &str) -> Result<V>
        where
            V::Err: fmt::Display,
        {
            value.trim().parse().map_err(|e: V::Err| Error::Parse {
                what: format!("config key {key}"),
                detail: format!("{value:?}: {e}"),
            })
        }
        match key {
            "bs_ny" => self.bs_geometry.n_y = num(key, value)?,
            "bs_nz" => self.bs_geometry.n_z = num(key, value)?,
            "ue_ny" => self.user_geometry.n_y = num(key, value)?,
            "ue_nz" => self.user_geometry.n_z = num(key, value)?,
            "users" => self.users = num(key, value)?,
            "m_t" => self.m_t = num(key, value)?,
            "m_r" => self.m_r = num(key, value)?,
            "n_s" => self.n_s = num(key, value)?,
            "p_t" => self.p_t = num(key, value)?,
            "sigma2" => self.sigma2 = num(key, value)?,
            "b_t" => self.b_t = num(key, value)?,
            "b_r" => self.b_r = num(key, value)?,
            "rho" => self.rho = num(key, value)?,
            "beta" => self.beta = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "trials" => self.trials = num(key, value)?,
            "clusters" => self.clusters.n_clusters = num(key, value)?,
            "rays_per_cluster" => self.clusters.n_paths = num(key, value)?,
            "angle_spread_rad" => self.clusters.angular_spread = num(key, value)?,
            "angle_spread_deg" => {
                self.clusters.angular_spread = num::<f64>(key, value)?.to_radians()
            }
            _ => {
                return Err(Error::Parse {
                    what: "config key".into(),
                    detail: format!("unknown key {key:?}"),
                })
            }
        }
        Ok(())
    }

    /// Reads a config file: `key = value` lines over [`Default::default`],
    /// `#` comments and blank lines ignored.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        text.parse()
    }
}

impl FromStr for SystemConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = SystemConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                what: format!("config line {}", lineno + 1),
                detail: format!("expected key=value, got {line:?}"),
            })?;
            cfg.set(key.trim(), value)?;
        }
        Ok(cfg)
    }
}

impl fmt::Display for SystemConfig {
    /// Round-trippable config file body.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.to_key_values() {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

/// Checks every SystemConfig invariant; returns one message per violation
/// naming the invariant and the offending values. Empty means valid.
pub fn validate_config(cfg: &SystemConfig) -> Vec<String> {
    let mut violations = Vec::new();
    if cfg.users == 0 {
        violations.push(format!("users ≥ 1 violated: users={}", cfg.users));
    }
    if cfg.bs_geometry.is_empty() || cfg.user_geometry.is_empty() {
        violations.push(format!(
            "non-empty arrays violated: BS {}×{}, user {}×{}",
            cfg.bs_geometry.n_y, cfg.bs_geometry.n_z, cfg.user_geometry.n_y, cfg.user_geometry.n_z
        ));
    }
    if cfg.users * cfg.m_r != cfg.m_t {
        violations.push(format!(
            "K·M_r = M_t violated: K={}, M_r={}, M_t={} (K·M_r={})",
            cfg.users,
            cfg.m_r,
            cfg.m_t,
            cfg.users * cfg.m_r
        ));
    }
    if cfg.n_s > cfg.m_r {
        violations.push(format!("N_s ≤ M_r violated: N_s={}, M_r={}", cfg.n_s, cfg.m_r));
    }
    if cfg.users * cfg.n_s > cfg.m_t {
        violations.push(format!(
            "K·N_s ≤ M_t violated: K={}, N_s={}, M_t={} (K·N_s={})",
            cfg.users,
            cfg.n_s,
            cfg.m_t,
            cfg.users * cfg.n_s
        ));
    }
    if cfg.n_s == 0 {
        violations.push(format!("N_s ≥ 1 violated: N_s={}", cfg.n_s));
    }
    if cfg.rho == 0 {
        violations.push(format!("ρ ≥ 1 violated: rho={}", cfg.rho));
    }
    if !(cfg.beta > 0.0 && cfg.beta <= 1.0) {
        violations.push(format!("β ∈ (0, 1] violated: beta={}", cfg.beta));
    }
    if !(cfg.p_t > 0.0) {
        violations.push(format!("P_t > 0 violated: p_t={}", cfg.p_t));
    }
    if cfg.sigma2 < 0.0 || !cfg.sigma2.is_finite() {
        violations.push(format!("σ² ≥ 0 violated: sigma2={}", cfg.sigma2));
    }
    if cfg.trials == 0 {
        violations.push(format!("trials ≥ 1 violated: trials={}", cfg.trials));
    }
    if cfg.b_t > 31 || cfg.b_r > 31 {
        violations.push(format!(
            "phase bits ≤ 31 violated: b_t={}, b_r={}",
            cfg.b_t, cfg.b_r
        ));
    }
    if cfg.clusters.n_clusters == 0 || cfg.clusters.n_paths == 0 {
        violations.push(format!(
            "clusters ≥ 1 and rays ≥ 1 violated: clusters={}, rays={}",
            cfg.clusters.n_clusters, cfg.clusters.n_paths
        ));
    }
    violations
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stock_configs_are_valid() {
        for cfg in [
            SystemConfig::default(),
            SystemConfig::sse_experiment(),
            SystemConfig::ber_experiment(),
            SystemConfig::smoke(),
        ] {
            assert!(validate_config(&cfg).is_empty(), "{:?}", validate_config(&cfg));
        }
    }

    #[test]
    fn spec_examples_of_validation() {
        let mut ok = SystemConfig::default();
        ok.users = 8;
        ok.m_r = 1;
        ok.m_t = 8;
        ok.n_s = 1;
        assert!(validate_config(&ok).is_empty());

        let mut bad = SystemConfig::default();
        bad.users = 3;
        bad.m_r = 2;
        bad.m_t = 4;
        bad.n_s = 1;
        let v = validate_config(&bad);
        assert!(v.iter().any(|m| m.contains("K·M_r = M_t")), "{v:?}");

        let mut bad2 = SystemConfig::default();
        bad2.users = 2;
        bad2.m_r = 2;
        bad2.m_t = 4;
        bad2.n_s = 3;
        let v2 = validate_config(&bad2);
        assert!(v2.iter().any(|m| m.contains("N_s ≤ M_r")), "{v2:?}");
    }

    #[test]
    fn multiple_violations_are_all_reported() {
        let mut bad = SystemConfig::default();
        bad.users = 3;
        bad.m_r = 2;
        bad.m_t = 4;
        bad.n_s = 3;
        bad.beta = 0.0;
        bad.rho = 0;
        let v = validate_config(&bad);
        assert!(v.len() >= 4, "{v:?}");
    }

    #[test]
    fn config_text_roundtrips() {
        let mut cfg = SystemConfig::ber_experiment();
        cfg.seed = 42;
        cfg.beta = 0.35;
        cfg.clusters.n_paths = 7;
        let text = cfg.to_string();
        let back: SystemConfig = text.parse().unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn parser_handles_comments_and_rejects_junk() {
        let cfg: SystemConfig = "# comment\nusers = 4\n m_t =4 # inline\nm_r=1\n".parse().unwrap();
        assert_eq!((cfg.users, cfg.m_t, cfg.m_r), (4, 4, 1));

        let unknown = "nonsense = 3".parse::<SystemConfig>();
        assert!(matches!(unknown, Err(Error::Parse { .. })));
        let garbage = "users = four".parse::<SystemConfig>();
        assert!(matches!(garbage, Err(Error::Parse { .. })));
        let shapeless = "users 4".parse::<SystemConfig>();
        assert!(matches!(shapeless, Err(Error::Parse { .. })));
    }

    #[test]
    fn codebook_helpers_honor_bit_settings() {
        let mut cfg = SystemConfig::smoke();
        cfg.b_t = 0;
        let unq = cfg.bs_codebook::<f64>();
        cfg.b_t = 3;
        let q = cfg.bs_codebook::<f64>();
        // 4×4 array, ρ=2: quantization can only shrink or keep the count.
        assert!(unq.len() >= q.len());
        assert!(q.len() > 0);
    }

    #[test]
    fn angle_spread_accepts_degrees_and_echoes_exact_radians() {
        let mut cfg = SystemConfig::default();
        cfg.set("angle_spread_deg", "15").unwrap();
        assert!((cfg.clusters.angular_spread - 15f64.to_radians()).abs() < 1e-12);
        let echoed = cfg
            .to_key_values()
            .into_iter()
            .find(|(k, _)| *k == "angle_spread_rad")
            .unwrap()
            .1;
        let back: f64 = echoed.parse().unwrap();
        assert_eq!(back, cfg.clusters.angular_spread, "echo must be bit-exact");
    }
}
