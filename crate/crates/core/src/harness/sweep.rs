use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Baseline, ScenarioConfig};
use super::run::{algorithm2, RunRecord};
use crate::channel::{build_scenario, Setup};
use crate::error::{Error, Result};

/// Swept scenario parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Transmit power budget in dBm.
    Pmax,
    /// Number of eavesdroppers.
    K,
    /// Number of IRS elements.
    N,
}

impl Axis {
    pub fn label(self) -> &'static str {
        match self {
            Axis::Pmax => "pmax",
            Axis::K => "k",
            Axis::N => "n",
        }
    }

    /// `base` with this axis set to `value`.
    pub fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let count = || -> Result<usize> {
            if value >= 1.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
                Ok(value as usize)
            } else {
                Err(Error::Config(format!(
                    "axis {} needs a positive integer, got {value}",
                    self.label()
                )))
            }
        };
        let mut cfg = base.clone();
        match self {
            Axis::Pmax => cfg.p_max_dbm = value,
            Axis::K => cfg.k = count()?,
            Axis::N => cfg.n = count()?,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pmax" | "p_max" | "power" => Ok(Axis::Pmax),
            "k" => Ok(Axis::K),
            "n" => Ok(Axis::N),
            other => Err(Error::Config(format!(
                "unknown axis {other:?}, expected pmax, k or n"
            ))),
        }
    }
}

/// Mean clamped secrecy rate of one `(value, baseline)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub axis: Axis,
    pub value: f64,
    pub baseline: String,
    pub setup: Setup,
    pub mean_rate_bps_hz: f64,
    pub stderr: f64,
    pub trials_ok: usize,
    pub trials_failed: usize,
}

impl SweepCell {
    pub fn baseline(&self) -> Result<Baseline> {
        self.baseline.parse()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepTable {
    pub cells: Vec<SweepCell>,
}

impl SweepTable {
    pub fn cell(&self, value: f64, baseline: Baseline) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.value == value && c.baseline == baseline.label())
    }

    /// Mean rate of a cell, if present.
    pub fn mean(&self, value: f64, baseline: Baseline) -> Option<f64> {
        self.cell(value, baseline).map(|c| c.mean_rate_bps_hz)
    }
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub table: SweepTable,
    /// Every run, ordered by (value, baseline, trial).
    pub records: Vec<RunRecord>,
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Runs every baseline on every value for `trials` channel realizations.
///
/// Trial `i` uses the same seed (hence the same channels) for all values and
/// baselines, so differences between cells are paired. Jobs run on the rayon
/// pool; results are ordered independently of completion order. A trial
/// that errors or ends with a failed block is counted in `trials_failed` and
/// left out of the mean.
pub fn sweep(
    base: &ScenarioConfig,
    axis: Axis,
    values: &[f64],
    trials: usize,
    baselines: &[Baseline],
) -> Result<SweepResult> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    if baselines.is_empty() {
        return Err(Error::Config("sweep needs at least one baseline".into()));
    }
    if trials == 0 {
        return Err(Error::Config("sweep needs at least one trial".into()));
    }
    let seeds = base.trial_seeds(trials);
    let mut jobs = Vec::new();
    for &value in values {
        for &baseline in baselines {
            let cfg = ScenarioConfig {
                baseline,
                ..axis.apply(base, value)?
            };
            for &seed in &seeds {
                jobs.push((value, cfg.clone(), seed));
            }
        }
    }
    let outcomes: Vec<(f64, Baseline, Option<RunRecord>)> = jobs
        .into_par_iter()
        .map(|(value, cfg, seed)| {
            let run =
                build_scenario(&cfg.scenario(), seed).and_then(|ch| algorithm2(&cfg, &ch, seed));
            match run {
                Ok(r) => (value, cfg.baseline, Some(r)),
                Err(e) => {
                    log::warn!("{axis}={value} [{}] seed {seed}: {e}", cfg.baseline);
                    (value, cfg.baseline, None)
                }
            }
        })
        .collect();

    let mut cells = Vec::new();
    for chunk in outcomes.chunks(trials) {
        let (value, baseline, _) = chunk[0];
        let ok: Vec<f64> = chunk
            .iter()
            .filter_map(|(_, _, r)| {
                r.as_ref()
                    .filter(|r| !r.failed())
                    .map(|r| r.secrecy_clamped)
            })
            .collect();
        let (mean, stderr) = mean_stderr(&ok);
        cells.push(SweepCell {
            axis,
            value,
            baseline: baseline.label().to_string(),
            setup: base.setup,
            mean_rate_bps_hz: mean,
            stderr,
            trials_ok: ok.len(),
            trials_failed: trials - ok.len(),
        });
    }
    let records = outcomes.into_iter().filter_map(|(_, _, r)| r).collect();
    Ok(SweepResult {
        table: SweepTable { cells },
        records,
    })
}
