//! Positive-P Langevin equations of the memory and their integration through
//! the write, storage and read stages.
//!
//! The cavity is driven by the input mode `u_in` during the write stage; the
//! coupling `g` is switched off during storage and back on for the read stage,
//! where the output field is projected onto `u_out`. The only stochastic
//! channel is the thermal bath of the mechanical mode.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::trapezoid_weights;
use crate::mode::ModeFunctionSpec;
use crate::model::{PhaseSpaceState, ProtocolSchedule, SystemParams, TrajectoryResult, WeightedSample};
use crate::rng::{complex_normal, Purpose, StreamKey};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Coupling profile: `g_eff` on the closed write and read windows, zero in
/// between.
pub fn g_of_t(t: f64, schedule: &ProtocolSchedule, g_eff: f64) -> Result<f64> {
    let eps = 1e-9 * schedule.t_end().abs().max(schedule.t_write).max(1.0);
    if t < schedule.t_start() - eps || t > schedule.t_end() + eps {
        return Err(Error::Domain {
            what: "g_of_t",
            detail: format!(
                "t = {t} outside [{}, {}]",
                schedule.t_start(),
                schedule.t_end()
            ),
        });
    }
    Ok(if t <= 0.0 || t >= schedule.t_store {
        g_eff
    } else {
        0.0
    })
}

/// Everything a single trajectory needs to evaluate its drift.
#[derive(Debug, Clone, Copy)]
pub struct DriveContext {
    pub alpha_in: Complex64,
    pub alpha_in_plus: Complex64,
    pub mode: ModeFunctionSpec,
    pub schedule: ProtocolSchedule,
    pub params: SystemParams,
}

impl DriveContext {
    pub fn new(
        sample: &WeightedSample,
        params: &SystemParams,
        schedule: &ProtocolSchedule,
    ) -> Result<Self> {
        schedule.validate(params)?;
        Ok(Self {
            alpha_in: sample.alpha_in,
            alpha_in_plus: sample.alpha_in_plus,
            mode: ModeFunctionSpec::new(params, schedule.t_store)?,
            schedule: *schedule,
            params: *params,
        })
    }

    /// Deterministic input drive `sqrt(2 gamma_ext) (alpha_in u_in, alpha_in_plus conj(u_in))`.
    pub fn drive(&self, t: f64) -> (Complex64, Complex64) {
        drive_pair(self.mode.u_in(t), self.alpha_in, self.alpha_in_plus, &self.params)
    }
}

fn drive_pair(
    u: Complex64,
    alpha_in: Complex64,
    alpha_in_plus: Complex64,
    params: &SystemParams,
) -> (Complex64, Complex64) {
    let k = (2.0 * params.gamma_ext).sqrt();
    (alpha_in * u * k, alpha_in_plus * u.conj() * k)
}

/// Drift at fixed coupling. `xi` is an additive forcing on `beta`; `beta_plus`
/// receives its conjugate.
#[inline(always)]
fn drift_kernel(
    s: &PhaseSpaceState,
    g: f64,
    drive: (Complex64, Complex64),
    xi: Complex64,
    p: &SystemParams,
) -> PhaseSpaceState {
    let go = p.gamma_o();
    let ig = I * g;
    PhaseSpaceState {
        alpha: -s.alpha * go - ig * s.beta + drive.0,
        alpha_plus: -s.alpha_plus * go + ig * s.beta_plus + drive.1,
        beta: -s.beta * p.gamma_m - ig * s.alpha + xi,
        beta_plus: -s.beta_plus * p.gamma_m + ig * s.alpha_plus + xi.conj(),
    }
}

/// Deterministic drift of the positive-P equations at time `t`.
pub fn drift(state: &PhaseSpaceState, t: f64, ctx: &DriveContext) -> Result<PhaseSpaceState> {
    let g = g_of_t(t, &ctx.schedule, ctx.params.g_eff)?;
    Ok(drift_kernel(state, g, ctx.drive(t), ZERO, &ctx.params))
}

/// Thermal increment of the mechanical mode over `dt`. Exactly zero, with no
/// random draw, when the bath is empty.
pub fn noise_increment<R: Rng + ?Sized>(
    dt: f64,
    params: &SystemParams,
    rng: &mut R,
) -> PhaseSpaceState {
    let var = 2.0 * params.gamma_m * params.n_th_mech;
    if var == 0.0 {
        return PhaseSpaceState::ZERO;
    }
    let d = complex_normal(rng) * (var * dt).sqrt();
    PhaseSpaceState {
        beta: d,
        beta_plus: d.conj(),
        ..PhaseSpaceState::ZERO
    }
}

/// One RK4 step with the drive sampled at the start, midpoint and end of the
/// step and a constant noise forcing `xi = dW / h` held over all four stages.
#[inline]
fn rk4_fixed(
    y: &PhaseSpaceState,
    h: f64,
    g: f64,
    d: [(Complex64, Complex64); 3],
    xi: Complex64,
    p: &SystemParams,
) -> PhaseSpaceState {
    let k1 = drift_kernel(y, g, d[0], xi, p);
    let k2 = drift_kernel(&(*y + k1 * (0.5 * h)), g, d[1], xi, p);
    let k3 = drift_kernel(&(*y + k2 * (0.5 * h)), g, d[1], xi, p);
    let k4 = drift_kernel(&(*y + k3 * h), g, d[2], xi, p);
    *y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Advance `state` from `t` to `t + dt`. The coupling is taken from the stage
/// containing the step midpoint.
pub fn step_rk4<R: Rng + ?Sized>(
    state: &PhaseSpaceState,
    t: f64,
    dt: f64,
    ctx: &DriveContext,
    rng: &mut R,
) -> Result<PhaseSpaceState> {
    let g = g_of_t(t + 0.5 * dt, &ctx.schedule, ctx.params.g_eff)?;
    let dw = noise_increment(dt, &ctx.params, rng);
    let d = [ctx.drive(t), ctx.drive(t + 0.5 * dt), ctx.drive(t + dt)];
    Ok(rk4_fixed(state, dt, g, d, dw.beta / dt, &ctx.params))
}

/// How the storage window, where `g = 0`, is crossed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StorageMode {
    /// Closed-form propagation: the uncoupled modes decay independently and the
    /// mechanical noise is one Gaussian draw of the exact variance.
    #[default]
    Exact,
    /// RK4 steps of size `<= dt` like the other stages.
    Stepped,
}

/// Full record of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryDetail {
    pub result: TrajectoryResult,
    /// State at the end of the write stage (`t = 0`).
    pub stored: PhaseSpaceState,
    /// State at the start of the read stage (`t = t_store`).
    pub recalled: PhaseSpaceState,
}

#[derive(Debug, Clone)]
struct StageTables {
    write_steps: usize,
    write_h: f64,
    /// `u_in` at every half step of the write grid.
    u_in_half: Vec<Complex64>,
    storage_steps: usize,
    storage_h: f64,
    read_steps: usize,
    read_h: f64,
    /// `sqrt(2 gamma_ext) u_out(t_k) w_k h` at the read nodes, `w_k` trapezoid.
    out_weights: Vec<Complex64>,
}

impl StageTables {
    fn build(mode: &ModeFunctionSpec, s: &ProtocolSchedule, p: &SystemParams, sub: usize) -> Self {
        let write_steps = s.steps_for(s.t_write) * sub;
        let write_h = s.t_write / write_steps as f64;
        let u_in_half = (0..=2 * write_steps)
            .map(|k| mode.u_in(-s.t_write + 0.5 * k as f64 * write_h))
            .collect();
        let storage_steps = s.steps_for(s.t_store) * sub;
        let storage_h = if storage_steps > 0 {
            s.t_store / storage_steps as f64
        } else {
            0.0
        };
        let read_steps = s.steps_for(s.t_read) * sub;
        let read_h = s.t_read / read_steps as f64;
        let k = (2.0 * p.gamma_ext).sqrt();
        let out_weights = trapezoid_weights(read_steps + 1, read_h)
            .into_iter()
            .enumerate()
            .map(|(j, w)| mode.u_out(s.t_store + j as f64 * read_h) * (k * w))
            .collect();
        Self {
            write_steps,
            write_h,
            u_in_half,
            storage_steps,
            storage_h,
            read_steps,
            read_h,
            out_weights,
        }
    }
}

/// Integrates many trajectories that share parameters and schedule. Mode
/// function values are tabulated once.
#[derive(Debug, Clone)]
pub struct ProtocolRunner {
    params: SystemParams,
    schedule: ProtocolSchedule,
    mode: ModeFunctionSpec,
    storage: StorageMode,
    coarse: StageTables,
    fine: StageTables,
}

/// Per-step noise source: coarse increments, optionally split by a Brownian
/// bridge into two half-step increments with the same sum.
struct NoiseSource {
    sigma: f64,
    increments: Option<crate::rng::Stream>,
    bridge: Option<crate::rng::Stream>,
    pending: Option<Complex64>,
}

impl NoiseSource {
    fn new(params: &SystemParams, key: Option<StreamKey>, refined: bool) -> Self {
        let sigma = (2.0 * params.gamma_m * params.n_th_mech).sqrt();
        let active = sigma > 0.0;
        let key = key.filter(|_| active);
        Self {
            sigma,
            increments: key.map(|k| k.stream(Purpose::Increments)),
            bridge: key.filter(|_| refined).map(|k| k.stream(Purpose::Bridge)),
            pending: None,
        }
    }

    /// Noise forcing `sigma dW / h` for the next step of size `h`.
    #[inline]
    fn next(&mut self, h: f64) -> Complex64 {
        let Some(inc) = self.increments.as_mut() else {
            return ZERO;
        };
        let dw = match self.bridge.as_mut() {
            None => complex_normal(inc) * h.sqrt(),
            Some(br) => {
                if let Some(second) = self.pending.take() {
                    second
                } else {
                    // h is the fine step; the coarse step is 2h.
                    let coarse = complex_normal(inc) * (2.0 * h).sqrt();
                    let z = complex_normal(br) * ((2.0 * h).sqrt() * 0.5);
                    self.pending = Some(coarse * 0.5 - z);
                    coarse * 0.5 + z
                }
            }
        };
        dw * (self.sigma / h)
    }
}

impl ProtocolRunner {
    pub fn new(
        params: &SystemParams,
        schedule: &ProtocolSchedule,
        storage: StorageMode,
    ) -> Result<Self> {
        params.validate()?;
        schedule.validate(params)?;
        let mode = ModeFunctionSpec::new(params, schedule.t_store)?;
        Ok(Self {
            params: *params,
            schedule: *schedule,
            mode,
            storage,
            coarse: StageTables::build(&mode, schedule, params, 1),
            fine: StageTables::build(&mode, schedule, params, 2),
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn schedule(&self) -> &ProtocolSchedule {
        &self.schedule
    }

    pub fn mode(&self) -> &ModeFunctionSpec {
        &self.mode
    }

    /// Run one trajectory. `key = None` switches the thermal noise off;
    /// `refined` halves every step and reuses the same Wiener paths.
    pub fn run(
        &self,
        sample: &WeightedSample,
        beta_init: (Complex64, Complex64),
        key: Option<StreamKey>,
        refined: bool,
    ) -> Result<TrajectoryDetail> {
        self.integrate(sample, beta_init, key, refined, None)
    }

    /// As [`run`](Self::run), also recording `(t, state)` at every node.
    pub fn run_traced(
        &self,
        sample: &WeightedSample,
        beta_init: (Complex64, Complex64),
        key: Option<StreamKey>,
        refined: bool,
    ) -> Result<(TrajectoryDetail, Vec<(f64, PhaseSpaceState)>)> {
        let mut trace = Vec::new();
        let d = self.integrate(sample, beta_init, key, refined, Some(&mut trace))?;
        Ok((d, trace))
    }

    /// Complex write-read gain for a unit coherent input without noise.
    pub fn coherent_gain(&self) -> Result<Complex64> {
        let one = Complex64::new(1.0, 0.0);
        let s = WeightedSample {
            alpha_in: one,
            alpha_in_plus: one,
            weight: 1.0,
            branch: crate::model::Branch::PlusPlus,
        };
        Ok(self.run(&s, (ZERO, ZERO), None, false)?.result.alpha_out)
    }

    fn integrate(
        &self,
        sample: &WeightedSample,
        beta_init: (Complex64, Complex64),
        key: Option<StreamKey>,
        refined: bool,
        mut trace: Option<&mut Vec<(f64, PhaseSpaceState)>>,
    ) -> Result<TrajectoryDetail> {
        let p = &self.params;
        let s = &self.schedule;
        let tab = if refined { &self.fine } else { &self.coarse };
        let mut noise = NoiseSource::new(p, key, refined);
        let g = p.g_eff;
        let mut y = PhaseSpaceState::with_mechanics(beta_init.0, beta_init.1);
        let mut record = |t: f64, y: &PhaseSpaceState| {
            if let Some(tr) = trace.as_deref_mut() {
                tr.push((t, *y));
            }
        };

        // write
        record(s.t_start(), &y);
        let h = tab.write_h;
        let drive = |k: usize| drive_pair(tab.u_in_half[k], sample.alpha_in, sample.alpha_in_plus, p);
        for n in 0..tab.write_steps {
            let d = [drive(2 * n), drive(2 * n + 1), drive(2 * n + 2)];
            y = rk4_fixed(&y, h, g, d, noise.next(h), p);
            record(s.t_start() + (n + 1) as f64 * h, &y);
        }
        let stored = y;

        // storage
        if s.t_store > 0.0 {
            match self.storage {
                StorageMode::Exact => {
                    let ea = (-p.gamma_o() * s.t_store).exp();
                    let em = (-p.gamma_m * s.t_store).exp();
                    y.alpha *= ea;
                    y.alpha_plus *= ea;
                    y.beta *= em;
                    y.beta_plus *= em;
                    if let Some(k) = key {
                        let var = p.n_th_mech * (-(-2.0 * p.gamma_m * s.t_store).exp_m1());
                        if var > 0.0 {
                            let z = complex_normal(&mut k.stream(Purpose::Storage)) * var.sqrt();
                            y.beta += z;
                            y.beta_plus += z.conj();
                        }
                    }
                }
                StorageMode::Stepped => {
                    let h = tab.storage_h;
                    let d = [(ZERO, ZERO); 3];
                    for _ in 0..tab.storage_steps {
                        y = rk4_fixed(&y, h, 0.0, d, noise.next(h), p);
                    }
                }
            }
            record(s.t_store, &y);
        }
        let recalled = y;

        // read
        let h = tab.read_h;
        let d = [(ZERO, ZERO); 3];
        let mut out = tab.out_weights[0] * y.alpha;
        let mut out_plus = tab.out_weights[0].conj() * y.alpha_plus;
        for n in 0..tab.read_steps {
            y = rk4_fixed(&y, h, g, d, noise.next(h), p);
            let w = tab.out_weights[n + 1];
            out += w * y.alpha;
            out_plus += w.conj() * y.alpha_plus;
            record(s.t_store + (n + 1) as f64 * h, &y);
        }

        let result = TrajectoryResult {
            alpha_out: out,
            alpha_out_plus: out_plus,
            weight: sample.weight,
            branch: sample.branch,
        };
        if !(y.is_finite() && out.re.is_finite() && out.im.is_finite() && out_plus.re.is_finite() && out_plus.im.is_finite()) {
            return Err(Error::NonFinite("trajectory"));
        }
        Ok(TrajectoryDetail {
            result,
            stored,
            recalled,
        })
    }
}

/// Integrate one trajectory from `-t_write` to `t_store + t_read` and project
/// the output field onto `u_out`.
pub fn run_protocol(
    sample: &WeightedSample,
    beta_init: (Complex64, Complex64),
    params: &SystemParams,
    schedule: &ProtocolSchedule,
    key: StreamKey,
) -> Result<TrajectoryResult> {
    let runner = ProtocolRunner::new(params, schedule, StorageMode::Exact)?;
    Ok(runner.run(sample, beta_init, Some(key), false)?.result)
}
