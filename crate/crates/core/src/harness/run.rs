use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{Baseline, ScenarioConfig};
use crate::channel::{substream, ChannelSet, OPTIMIZER_STREAM_BASE};
use crate::error::Result;
use crate::irsopt::{initial_reflect, optimize_reflect};
use crate::numerics::ComplexVector;
use crate::secrecy::{direct_only_extended, secrecy_from_extended, ReflectVector, TxSolution};
use crate::txopt::{algorithm1, initial_transmit, EffectiveChannels};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The relative change fell below `epsilon`.
    Converged,
    MaxIterations,
    /// A block update returned an error; the best iterate is kept.
    Failed(String),
}

/// Where the reported alternation started.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartPoint {
    /// Cascade-aligned phases with the MRT/jamming power split.
    Default,
    /// The converged design of the same run without artificial noise.
    NoiseFree,
}

/// Outcome of one outer alternation on one channel realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub seed: u64,
    pub baseline: Baseline,
    pub start: StartPoint,
    /// Secrecy rate (bits) of the starting point.
    pub initial_rate: f64,
    /// Secrecy rate (bits) after each outer iteration.
    pub trace: Vec<f64>,
    pub stop: StopReason,
    pub secrecy_raw: f64,
    pub secrecy_clamped: f64,
    /// Relaxed rates of the final transmit and reflect blocks, in bits.
    pub relaxed_tx_rate: f64,
    pub relaxed_reflect_rate: Option<f64>,
    /// Largest amount (bits) by which a recovered point's bounded objective
    /// exceeded the certified relaxed optimum at the same bound parameters,
    /// over all blocks.
    pub max_bound_excess: f64,
    /// Largest single-step decrease (bits) over all inner traces.
    pub max_inner_decrease: f64,
    pub solver_iterations: usize,
    /// Solves that ended without certifying the requested tolerance.
    pub solver_failures: usize,
    pub regularized_extractions: usize,
    pub reflect: ReflectVector,
    pub transmit_power: f64,
    #[serde(skip)]
    pub tx: Option<TxSolution>,
    pub wall_time_s: f64,
}

impl RunRecord {
    pub fn outer_iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn failed(&self) -> bool {
        matches!(self.stop, StopReason::Failed(_)) || !self.secrecy_raw.is_finite()
    }

    /// Largest single-step decrease of the outer trace, starting point
    /// included.
    pub fn max_outer_decrease(&self) -> f64 {
        std::iter::once(&self.initial_rate)
            .chain(&self.trace)
            .collect::<Vec<_>>()
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(0.0, f64::max)
    }

    fn absorb_statistics(&mut self, other: &RunRecord) {
        self.max_bound_excess = self.max_bound_excess.max(other.max_bound_excess);
        self.max_inner_decrease = self.max_inner_decrease.max(other.max_inner_decrease);
        self.solver_iterations += other.solver_iterations;
        self.solver_failures += other.solver_failures;
        self.regularized_extractions += other.regularized_extractions;
    }
}

fn bound_excess(recovered: f64, relaxed: f64) -> f64 {
    if recovered.is_nan() || relaxed.is_nan() {
        f64::NEG_INFINITY
    } else {
        recovered - relaxed
    }
}

fn largest_decrease(trace: &[f64]) -> f64 {
    trace.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
}

/// Outer alternation between the transmit and reflect blocks.
///
/// Stops when the relative change of the secrecy rate is at most
/// `epsilon` or after `max_outer` iterations. With `irs = false` the
/// reflected path is switched off and only the transmit block runs; with
/// `an = false` the jamming vector is held at zero.
///
/// The default start is the cascade-aligned reflect vector with the
/// MRT/jamming split. With artificial noise enabled the alternation is also
/// continued from the converged noise-free design of the same realization,
/// and the better of the two results is reported; the noise-free design is
/// feasible with noise enabled, so the result never falls below it.
pub fn algorithm2(config: &ScenarioConfig, channels: &ChannelSet, seed: u64) -> Result<RunRecord> {
    config.validate()?;
    let started = Instant::now();
    let mut rng = substream(seed, OPTIMIZER_STREAM_BASE);
    let baseline = config.baseline;
    let reflect = if baseline.irs {
        initial_reflect(channels)
    } else {
        ReflectVector::zero_phases(channels.n())
    };
    let eff = EffectiveChannels::new(channels, &extended_for(baseline, &reflect))?;
    let tx = initial_transmit(&eff, config.p_max_watts(), baseline.an, &mut rng);
    let mut record = alternate(
        config,
        channels,
        seed,
        tx,
        reflect,
        StartPoint::Default,
        &mut rng,
    );

    if baseline.an {
        let plain_cfg = ScenarioConfig {
            baseline: Baseline {
                an: false,
                ..baseline
            },
            ..config.clone()
        };
        let plain = algorithm2(&plain_cfg, channels, seed)?;
        if let Some(tx) = plain.tx.clone() {
            let mut rng = substream(seed, OPTIMIZER_STREAM_BASE + 1);
            let mut cont = alternate(
                config,
                channels,
                seed,
                tx,
                plain.reflect.clone(),
                StartPoint::NoiseFree,
                &mut rng,
            );
            cont.absorb_statistics(&plain);
            if !cont.failed() && (record.failed() || cont.secrecy_raw > record.secrecy_raw) {
                cont.absorb_statistics(&record);
                record = cont;
            } else {
                record.absorb_statistics(&cont);
            }
        }
    }
    record.wall_time_s = started.elapsed().as_secs_f64();
    Ok(record)
}

fn extended_for(baseline: Baseline, reflect: &ReflectVector) -> ComplexVector {
    if baseline.irs {
        reflect.extended()
    } else {
        direct_only_extended(reflect.len())
    }
}

fn alternate(
    config: &ScenarioConfig,
    channels: &ChannelSet,
    seed: u64,
    mut tx: TxSolution,
    mut reflect: ReflectVector,
    start: StartPoint,
    rng: &mut ChaCha8Rng,
) -> RunRecord {
    let baseline = config.baseline;
    let gamma0 = config.gamma0();
    let p_max = config.p_max_watts();
    let tx_opts = config.tx_options();
    let refl_opts = config.reflect_options();
    if !baseline.an {
        tx.f2 = ComplexVector::zeros(tx.f2.len());
    }
    let rate = |tx: &TxSolution, r: &ReflectVector| {
        secrecy_from_extended(channels, tx, &extended_for(baseline, r), gamma0).raw
    };
    let initial_rate = rate(&tx, &reflect);
    let mut record = RunRecord {
        config_hash: config.hash(),
        seed,
        baseline,
        start,
        initial_rate,
        trace: Vec::new(),
        stop: StopReason::MaxIterations,
        secrecy_raw: initial_rate,
        secrecy_clamped: initial_rate.max(0.0),
        relaxed_tx_rate: f64::NAN,
        relaxed_reflect_rate: None,
        max_bound_excess: f64::NEG_INFINITY,
        max_inner_decrease: 0.0,
        solver_iterations: 0,
        solver_failures: 0,
        regularized_extractions: 0,
        reflect: reflect.clone(),
        transmit_power: tx.power(),
        tx: None,
        wall_time_s: 0.0,
    };

    let mut previous = initial_rate;
    for outer in 0..config.max_outer {
        let step = (|| -> Result<()> {
            let t = algorithm1(
                channels,
                &extended_for(baseline, &reflect),
                p_max,
                gamma0,
                &tx_opts,
                Some(&tx),
                rng,
            )?;
            record.relaxed_tx_rate = t.relaxed_rate;
            record.max_bound_excess = record
                .max_bound_excess
                .max(bound_excess(t.recovered_bounded, t.relaxed_bound));
            record.max_inner_decrease = record.max_inner_decrease.max(largest_decrease(&t.trace));
            record.solver_iterations += t.solver_iterations;
            record.solver_failures += t.solver_failures;
            tx = t.solution;
            if baseline.irs {
                let r = optimize_reflect(channels, &tx, gamma0, &refl_opts, &reflect, rng)?;
                record.relaxed_reflect_rate = Some(r.relaxed_rate);
                record.max_bound_excess = record
                    .max_bound_excess
                    .max(bound_excess(r.recovered_bounded, r.relaxed_bound));
                record.max_inner_decrease =
                    record.max_inner_decrease.max(largest_decrease(&r.trace));
                record.solver_iterations += r.solver_iterations;
                record.solver_failures += r.solver_failures;
                record.regularized_extractions += usize::from(r.regularized);
                reflect = r.reflect;
            }
            Ok(())
        })();
        if let Err(e) = step {
            log::warn!("seed {seed}: outer iteration {outer} failed: {e}");
            record.stop = StopReason::Failed(e.to_string());
            break;
        }
        let current = rate(&tx, &reflect);
        record.trace.push(current);
        log::debug!("seed {seed} [{baseline}] outer {outer}: {current:.6} bits");
        let change = (current - previous).abs();
        let reference = previous.abs().max(f64::MIN_POSITIVE);
        previous = current;
        if change <= config.epsilon * reference {
            record.stop = StopReason::Converged;
            break;
        }
    }
    let final_value =
        secrecy_from_extended(channels, &tx, &extended_for(baseline, &reflect), gamma0);
    record.secrecy_raw = final_value.raw;
    record.secrecy_clamped = final_value.clamped;
    record.transmit_power = tx.power();
    record.reflect = reflect;
    record.tx = Some(tx);
    record
}
