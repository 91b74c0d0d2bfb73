use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{ChannelParams, ChannelScenario, GeometryConfig, Setup};
use crate::cvxsolver::SolverOptions;
use crate::error::{Error, Result};
use crate::irsopt::ReflectOptions;
use crate::txopt::TxOptions;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Which of the two design features are enabled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Baseline {
    /// Artificial noise (jamming vector `f2`).
    pub an: bool,
    /// Optimized IRS reflection.
    pub irs: bool,
}

impl Baseline {
    pub const AN_IRS: Baseline = Baseline {
        an: true,
        irs: true,
    };
    pub const AN: Baseline = Baseline {
        an: true,
        irs: false,
    };
    pub const IRS: Baseline = Baseline {
        an: false,
        irs: true,
    };
    pub const NONE: Baseline = Baseline {
        an: false,
        irs: false,
    };
    pub const ALL: [Baseline; 4] = [Self::AN_IRS, Self::AN, Self::IRS, Self::NONE];

    pub fn label(self) -> &'static str {
        match (self.an, self.irs) {
            (true, true) => "an+irs",
            (true, false) => "an",
            (false, true) => "irs",
            (false, false) => "none",
        }
    }
}

impl std::fmt::Display for Baseline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let tag = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|b| {
                b.label() == tag
                    || (tag == "irs+an" && *b == Self::AN_IRS)
                    || (tag == "an,irs" && *b == Self::AN_IRS)
            })
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown baseline {s:?}, expected an+irs, an, irs or none"
                ))
            })
    }
}

/// One simulated scenario. Every field has a default, so a config file
/// only lists what it changes; unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// Transmit antennas.
    pub m: usize,
    /// IRS elements.
    pub n: usize,
    /// Eavesdroppers.
    pub k: usize,
    pub p_max_dbm: f64,
    pub noise_dbm: f64,
    pub setup: Setup,
    pub geometry: GeometryConfig,
    pub channel: ChannelParams,
    /// Relative change of the secrecy rate that ends the outer alternation.
    pub epsilon: f64,
    /// Maximum outer iterations.
    pub max_outer: usize,
    /// Base seed; per-trial seeds are derived from it.
    pub seed: u64,
    pub trials: usize,
    pub baseline: Baseline,
    /// Gaussian randomization draws per recovery.
    pub n_rand: usize,
    /// Relative change that ends each inner alternation.
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    /// Certified suboptimality of each convex solve.
    pub solver_tol: f64,
    pub solver_max_iter: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            m: 4,
            n: 8,
            k: 3,
            p_max_dbm: 40.0,
            noise_dbm: -105.0,
            setup: Setup::A,
            geometry: GeometryConfig::default(),
            // Eight elements do not split into five rows; use a 4 x 2 array.
            channel: ChannelParams {
                ura_rows: 4,
                ..ChannelParams::default()
            },
            epsilon: 1e-3,
            max_outer: 40,
            seed: 1,
            trials: 10,
            baseline: Baseline::AN_IRS,
            n_rand: 200,
            inner_tol: 1e-4,
            inner_max_iter: 30,
            solver_tol: 1e-7,
            solver_max_iter: 1000,
        }
    }
}

impl ScenarioConfig {
    /// Larger arrays: `N = 20` on a 5-row surface, `K = 5`.
    pub fn paper_scale() -> Self {
        Self {
            n: 20,
            k: 5,
            channel: ChannelParams::default(),
            ..Self::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.m == 0 || self.n == 0 || self.k == 0 {
            return bad(format!(
                "M, N, K must be >= 1 (got {}, {}, {})",
                self.m, self.n, self.k
            ));
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon must be > 0 (got {})", self.epsilon));
        }
        if self.max_outer == 0
            || self.trials == 0
            || self.inner_max_iter == 0
            || self.solver_max_iter == 0
        {
            return bad("iteration limits and trials must be >= 1".into());
        }
        if !self.p_max_dbm.is_finite() && self.p_max_dbm != f64::NEG_INFINITY {
            return bad("p_max_dbm must be finite or -inf".into());
        }
        if !self.noise_dbm.is_finite() {
            return bad("noise_dbm must be finite".into());
        }
        if !(self.inner_tol > 0.0) || !(self.solver_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        self.channel
            .validate(self.n)
            .map_err(|e| Error::Config(e.to_string()))?;
        self.geometry
            .nodes(self.setup, self.k)
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn p_max_watts(&self) -> f64 {
        dbm_to_watts(self.p_max_dbm)
    }

    /// `γ0 = 1/σ0²`.
    pub fn gamma0(&self) -> f64 {
        1.0 / dbm_to_watts(self.noise_dbm)
    }

    pub fn scenario(&self) -> ChannelScenario<'_> {
        ChannelScenario {
            m: self.m,
            n: self.n,
            k: self.k,
            setup: self.setup,
            params: &self.channel,
            geometry: &self.geometry,
        }
    }

    fn solver(&self) -> SolverOptions {
        SolverOptions {
            tol: self.solver_tol,
            max_iter: self.solver_max_iter,
            ..SolverOptions::default()
        }
    }

    pub fn tx_options(&self) -> TxOptions {
        TxOptions {
            tol: self.inner_tol,
            max_iter: self.inner_max_iter,
            n_rand: self.n_rand,
            artificial_noise: self.baseline.an,
            solver: self.solver(),
        }
    }

    pub fn reflect_options(&self) -> ReflectOptions {
        ReflectOptions {
            tol: self.inner_tol,
            max_iter: self.inner_max_iter,
            n_rand: self.n_rand,
            solver: self.solver(),
        }
    }

    /// SHA-256 of the canonical TOML serialization, hex encoded.
    pub fn hash(&self) -> String {
        let text = self
            .to_toml_string()
            .unwrap_or_else(|_| format!("{self:?}"));
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    /// Per-trial seeds derived from the base seed with SplitMix64.
    pub fn trial_seeds(&self, trials: usize) -> Vec<u64> {
        let mut state = self.seed;
        (0..trials)
            .map(|_| {
                state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
                let mut z = state;
                z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
                z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
                z ^ (z >> 31)
            })
            .collect()
    }
}
