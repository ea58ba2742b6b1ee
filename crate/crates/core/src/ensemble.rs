//! Parallel simulation of a weighted trajectory ensemble.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{ProtocolSchedule, SystemParams, TrajectoryResult, WeightedSample};
use crate::rng::{Purpose, StreamKey};
use crate::sampler::{sample_cat, sample_thermal, SamplerConfig};
use crate::sde::{ProtocolRunner, StorageMode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub params: SystemParams,
    pub schedule: ProtocolSchedule,
    pub sampler: SamplerConfig,
    pub storage: StorageMode,
    /// Worker threads; 0 uses all available cores.
    pub workers: usize,
    /// Rotate outputs so the coherent-input gain is real and positive.
    pub phase_correction: bool,
    /// Rerun every trajectory at half the step on the same Wiener paths.
    pub step_error: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub results: Vec<TrajectoryResult>,
    /// Half-step rerun, if requested.
    pub refined: Option<Vec<TrajectoryResult>>,
    /// Write-read gain for a unit coherent input, before phase correction.
    pub gain: Complex64,
    /// Phase removed from every output amplitude.
    pub phase: f64,
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| invalid("workers", e.to_string()))
}

/// Integrate every sample of the configured input ensemble.
///
/// Trajectory `i` draws only from the streams keyed by `(seed, i)`, and results
/// are kept in sample order, so the output does not depend on `workers`.
/// Without thermal noise each distinct input is integrated once and copied.
pub fn simulate(cfg: &EnsembleConfig) -> Result<Ensemble> {
    let samples = sample_cat(&cfg.sampler)?;
    let runner = ProtocolRunner::new(&cfg.params, &cfg.schedule, cfg.storage)?;
    let gain = runner.coherent_gain()?;
    let phase = if cfg.phase_correction { gain.arg() } else { 0.0 };
    let seed = cfg.sampler.master_seed;
    let p = cfg.params;

    let run_all = |refined: bool| -> Result<Vec<TrajectoryResult>> {
        if p.is_noiseless() {
            let mut memo: Vec<(WeightedSample, TrajectoryResult)> = Vec::new();
            let mut out = Vec::with_capacity(samples.len());
            for s in &samples {
                let hit = memo.iter().find(|(k, _)| k == s).map(|(_, r)| *r);
                let r = match hit {
                    Some(r) => r,
                    None => {
                        let zero = Complex64::new(0.0, 0.0);
                        let r = runner.run(s, (zero, zero), None, refined)?.result;
                        memo.push((*s, r));
                        r
                    }
                };
                out.push(r);
            }
            return Ok(out);
        }
        pool(cfg.workers)?.install(|| {
            samples
                .par_iter()
                .enumerate()
                .map(|(i, s)| {
                    let key = StreamKey::new(seed, i as u64);
                    let beta = sample_thermal(p.n_init_mech, 1, &mut key.stream(Purpose::Initial))?[0];
                    Ok(runner.run(s, beta, Some(key), refined)?.result)
                })
                .collect()
        })
    };

    let rotate = |v: Vec<TrajectoryResult>| -> Vec<TrajectoryResult> {
        if phase == 0.0 {
            v
        } else {
            v.iter().map(|r| r.rotated(phase)).collect()
        }
    };
    let results = rotate(run_all(false)?);
    let refined = if cfg.step_error {
        Some(rotate(run_all(true)?))
    } else {
        None
    };
    Ok(Ensemble {
        results,
        refined,
        gain,
        phase,
    })
}

/// The input ensemble itself, as if passed through an ideal channel.
pub fn input_ensemble(sampler: &SamplerConfig) -> Result<Vec<TrajectoryResult>> {
    Ok(sample_cat(sampler)?
        .iter()
        .map(TrajectoryResult::from_input)
        .collect())
}

/// Fail on the first non-finite output amplitude.
pub fn check_finite(results: &[TrajectoryResult]) -> Result<()> {
    let ok = results.iter().all(|r| {
        [r.alpha_out, r.alpha_out_plus]
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
            && r.weight.is_finite()
    });
    if ok {
        Ok(())
    } else {
        Err(Error::NonFinite("ensemble output"))
    }
}
