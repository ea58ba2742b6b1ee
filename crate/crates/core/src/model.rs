//! Shared domain types and the nondimensionalization convention.
//!
//! Every rate is measured in units of the total optical decay rate, so
//! `gamma_o = gamma_ext + gamma_int` is normally 1 and time is `tau = gamma_o t`.
//! Amplitudes are complex; the positive-P representation doubles every mode
//! into an independent pair `(alpha, alpha_plus)`.

use std::ops::{Add, Mul};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Dimensionless optomechanical device parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub gamma_ext: f64,
    pub gamma_int: f64,
    pub gamma_m: f64,
    /// Effective coupling `G = sqrt(N) g0 / gamma_o`.
    pub g_eff: f64,
    /// Thermal occupation of the mechanical reservoir.
    pub n_th_mech: f64,
    /// Thermal occupation of the mechanical mode at the start of the write stage.
    pub n_init_mech: f64,
}

/// Mechanical linewidth of the electromechanical reference device, `17.5 Hz / 170 kHz`.
pub const REFERENCE_GAMMA_M: f64 = 17.5 / 170.0e3;

/// Coupling used throughout the reference experiments.
pub const REFERENCE_G_EFF: f64 = 0.6;

impl SystemParams {
    /// The reference electromechanical device: lossless optics, `G = 0.6`,
    /// zero temperature.
    pub fn reference() -> Self {
        Self {
            gamma_ext: 1.0,
            gamma_int: 0.0,
            gamma_m: REFERENCE_GAMMA_M,
            g_eff: REFERENCE_G_EFF,
            n_th_mech: 0.0,
            n_init_mech: 0.0,
        }
    }

    /// Convert physical rates (any common unit, e.g. Hz) to dimensionless form.
    pub fn from_physical(
        gamma_ext: f64,
        gamma_int: f64,
        gamma_m: f64,
        g: f64,
        n_th_mech: f64,
        n_init_mech: f64,
    ) -> Result<Self> {
        let gamma_o = gamma_ext + gamma_int;
        if !(gamma_o > 0.0) {
            return Err(invalid("gamma_o", "total optical decay must be positive"));
        }
        let p = Self {
            gamma_ext: gamma_ext / gamma_o,
            gamma_int: gamma_int / gamma_o,
            gamma_m: gamma_m / gamma_o,
            g_eff: g / gamma_o,
            n_th_mech,
            n_init_mech,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn gamma_o(&self) -> f64 {
        self.gamma_ext + self.gamma_int
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("gamma_ext", self.gamma_ext),
            ("gamma_int", self.gamma_int),
            ("gamma_m", self.gamma_m),
            ("g_eff", self.g_eff),
            ("n_th_mech", self.n_th_mech),
            ("n_init_mech", self.n_init_mech),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if !(self.gamma_o() > 0.0) {
            return Err(invalid("gamma_o", "gamma_ext + gamma_int must be positive"));
        }
        if self.gamma_m >= self.gamma_o() {
            return Err(invalid(
                "gamma_m",
                format!("must be below gamma_o = {}", self.gamma_o()),
            ));
        }
        Ok(())
    }

    /// True when no stochastic term is ever generated.
    pub fn is_noiseless(&self) -> bool {
        self.n_th_mech == 0.0 && self.n_init_mech == 0.0
    }
}

/// Rates derived from [`SystemParams`] that parametrize the optimal mode function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedRates {
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    /// `m = sqrt(gamma_-^2 - g^2)` on the principal branch. Purely imaginary
    /// once the coupling exceeds `gamma_-`, as it does for `G = 0.6`.
    pub m_rate: Complex64,
    /// Effective transfer rate `gamma_+ - m`.
    pub gamma_bar: Complex64,
}

pub fn derive_rates(params: &SystemParams) -> DerivedRates {
    let gamma_o = params.gamma_o();
    let gamma_plus = 0.5 * (gamma_o + params.gamma_m);
    let gamma_minus = 0.5 * (gamma_o - params.gamma_m);
    let disc = gamma_minus * gamma_minus - params.g_eff * params.g_eff;
    // Avoid sqrt(-x - 0i) landing on the lower branch.
    let m_rate = if disc >= 0.0 {
        Complex64::new(disc.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-disc).sqrt())
    };
    DerivedRates {
        gamma_plus,
        gamma_minus,
        m_rate,
        gamma_bar: Complex64::new(gamma_plus, 0.0) - m_rate,
    }
}

impl DerivedRates {
    /// Decay envelope rate of the write/read pulses.
    pub fn envelope_rate(&self) -> f64 {
        self.gamma_bar.re
    }
}

/// Even cat `(|alpha0> + |-alpha0>) / sqrt(norm)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatParams {
    pub alpha0: Complex64,
    pub norm: f64,
}

impl CatParams {
    pub fn new(alpha0: Complex64) -> Result<Self> {
        if !alpha0.re.is_finite() || !alpha0.im.is_finite() {
            return Err(invalid("alpha0", "must be finite"));
        }
        Ok(Self {
            alpha0,
            norm: 2.0 * (1.0 + (-2.0 * alpha0.norm_sqr()).exp()),
        })
    }

    pub fn real(alpha0: f64) -> Result<Self> {
        Self::new(Complex64::new(alpha0, 0.0))
    }

    /// `<alpha0|-alpha0> = exp(-2|alpha0|^2)`.
    pub fn overlap(&self) -> f64 {
        (-2.0 * self.alpha0.norm_sqr()).exp()
    }
}

/// Durations of the write/store/read stages, in `tau` units.
///
/// The simulation spans `[-t_write, t_store + t_read]`; the write stage ends at
/// `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSchedule {
    pub t_write: f64,
    pub t_store: f64,
    pub t_read: f64,
    pub dt: f64,
}

/// Write duration in units of the pulse envelope time `1 / Re(gamma_bar)`.
pub const WRITE_ENVELOPES: f64 = 10.0;

impl ProtocolSchedule {
    /// Default schedule: `t_write = t_read = 10 / Re(gamma_bar)`.
    pub fn for_params(params: &SystemParams, t_store: f64, dt: f64) -> Result<Self> {
        let rate = derive_rates(params).envelope_rate();
        if !(rate > 0.0) {
            return Err(invalid("gamma_bar", "envelope rate must be positive"));
        }
        let t_write = WRITE_ENVELOPES / rate;
        let s = Self {
            t_write,
            t_store,
            t_read: t_write,
            dt,
        };
        s.validate(params)?;
        Ok(s)
    }

    /// The reference step `dt = 1 / (10 gamma_o)`.
    pub fn default_dt(params: &SystemParams) -> f64 {
        0.1 / params.gamma_o()
    }

    pub fn validate(&self, params: &SystemParams) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(invalid("dt", "must be positive"));
        }
        if self.dt > 0.5 / params.gamma_o() {
            return Err(invalid(
                "dt",
                format!("{} exceeds the sampling limit 1/(2 gamma_o)", self.dt),
            ));
        }
        if !(self.t_write > 0.0) || !self.t_write.is_finite() {
            return Err(invalid("t_write", "must be positive"));
        }
        if !(self.t_store >= 0.0) || !self.t_store.is_finite() {
            return Err(invalid("t_store", "must be finite and >= 0"));
        }
        if self.t_read != self.t_write {
            return Err(invalid("t_read", "must equal t_write"));
        }
        Ok(())
    }

    pub fn t_start(&self) -> f64 {
        -self.t_write
    }

    pub fn t_end(&self) -> f64 {
        self.t_store + self.t_read
    }

    /// Number of integrator steps for a stage of length `duration`; the actual
    /// step is `duration / n <= dt`.
    pub fn steps_for(&self, duration: f64) -> usize {
        if duration <= 0.0 {
            0
        } else {
            ((duration / self.dt) - 1e-9).ceil().max(1.0) as usize
        }
    }
}

/// The four delta-function terms of the cat's positive-P distribution,
/// labelled by the signs of `(alpha_in, conj(alpha_in_plus))` relative to `alpha0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    #[serde(rename = "++")]
    PlusPlus,
    #[serde(rename = "--")]
    MinusMinus,
    #[serde(rename = "+-")]
    PlusMinus,
    #[serde(rename = "-+")]
    MinusPlus,
}

impl Branch {
    pub const ALL: [Branch; 4] = [
        Branch::PlusPlus,
        Branch::MinusMinus,
        Branch::PlusMinus,
        Branch::MinusPlus,
    ];

    /// Diagonal branches represent `|±alpha0><±alpha0|`.
    pub fn is_diagonal(self) -> bool {
        matches!(self, Branch::PlusPlus | Branch::MinusMinus)
    }

    pub fn signs(self) -> (f64, f64) {
        match self {
            Branch::PlusPlus => (1.0, 1.0),
            Branch::MinusMinus => (-1.0, -1.0),
            Branch::PlusMinus => (1.0, -1.0),
            Branch::MinusPlus => (-1.0, 1.0),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Branch::PlusPlus => "++",
            Branch::MinusMinus => "--",
            Branch::PlusMinus => "+-",
            Branch::MinusPlus => "-+",
        }
    }
}

/// One importance-weighted seed for a positive-P trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedSample {
    pub alpha_in: Complex64,
    pub alpha_in_plus: Complex64,
    pub weight: f64,
    pub branch: Branch,
}

/// Cavity and mechanical amplitudes of one positive-P trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseSpaceState {
    pub alpha: Complex64,
    pub alpha_plus: Complex64,
    pub beta: Complex64,
    pub beta_plus: Complex64,
}

impl PhaseSpaceState {
    pub const ZERO: Self = Self {
        alpha: Complex64::new(0.0, 0.0),
        alpha_plus: Complex64::new(0.0, 0.0),
        beta: Complex64::new(0.0, 0.0),
        beta_plus: Complex64::new(0.0, 0.0),
    };

    pub fn with_mechanics(beta: Complex64, beta_plus: Complex64) -> Self {
        Self {
            beta,
            beta_plus,
            ..Self::ZERO
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.alpha, self.alpha_plus, self.beta, self.beta_plus]
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Add for PhaseSpaceState {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            alpha: self.alpha + o.alpha,
            alpha_plus: self.alpha_plus + o.alpha_plus,
            beta: self.beta + o.beta,
            beta_plus: self.beta_plus + o.beta_plus,
        }
    }
}

impl Mul<f64> for PhaseSpaceState {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self {
            alpha: self.alpha * s,
            alpha_plus: self.alpha_plus * s,
            beta: self.beta * s,
            beta_plus: self.beta_plus * s,
        }
    }
}

/// Mode-matched output amplitudes of one trajectory, with the carried weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryResult {
    pub alpha_out: Complex64,
    pub alpha_out_plus: Complex64,
    pub weight: f64,
    pub branch: Branch,
}

impl TrajectoryResult {
    /// Treat an input sample as an ensemble member (identity channel).
    pub fn from_input(s: &WeightedSample) -> Self {
        Self {
            alpha_out: s.alpha_in,
            alpha_out_plus: s.alpha_in_plus,
            weight: s.weight,
            branch: s.branch,
        }
    }

    /// Apply a global phase `e^{-i phi}` to the mode, i.e. `a -> a e^{-i phi}`.
    pub fn rotated(&self, phi: f64) -> Self {
        let r = Complex64::from_polar(1.0, -phi);
        Self {
            alpha_out: self.alpha_out * r,
            alpha_out_plus: self.alpha_out_plus * r.conj(),
            ..*self
        }
    }
}
