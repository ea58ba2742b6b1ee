//! Temporal mode functions of the memory and of the source-cavity coupler.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::model::{derive_rates, DerivedRates, SystemParams};

/// Optimal input/output mode shapes for a given device and storage time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeFunctionSpec {
    pub rates: DerivedRates,
    pub gamma_ext: f64,
    pub t_store: f64,
    /// `-2i sqrt((gamma_+ + m)(gamma_+ - m) gamma_+) / m`
    prefactor: Complex64,
}

impl ModeFunctionSpec {
    pub fn new(params: &SystemParams, t_store: f64) -> Result<Self> {
        params.validate()?;
        let rates = derive_rates(params);
        let m = rates.m_rate;
        if m.norm() <= 1e-12 * rates.gamma_minus.max(f64::MIN_POSITIVE) {
            return Err(Error::DegenerateCoupling);
        }
        let gp = Complex64::new(rates.gamma_plus, 0.0);
        let amplitude = ((gp + m) * (gp - m) * gp).sqrt();
        let prefactor = Complex64::new(0.0, -2.0) * amplitude / m;
        if !prefactor.re.is_finite() || !prefactor.im.is_finite() {
            return Err(Error::NonFinite("mode function prefactor"));
        }
        Ok(Self {
            rates,
            gamma_ext: params.gamma_ext,
            t_store,
            prefactor,
        })
    }

    pub fn prefactor(&self) -> Complex64 {
        self.prefactor
    }

    /// Input mode `u_in(t)`, supported on `t < 0`.
    pub fn u_in(&self, t: f64) -> Complex64 {
        if t >= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        // sinh(mt) e^{gamma_+ t} written as a difference of two decaying exponentials
        let gp = self.rates.gamma_plus;
        let m = self.rates.m_rate;
        let up = ((gp + m) * t).exp();
        let down = ((gp - m) * t).exp();
        self.prefactor * 0.5 * (up - down)
    }

    /// Output mode `u_out(t) = conj(u_in(t_store - t))`, supported on `t > t_store`.
    pub fn u_out(&self, t: f64) -> Complex64 {
        self.u_in(self.t_store - t).conj()
    }
}

/// Exponential approximation `i sqrt(2 gbar) e^{gbar t}` of the input mode.
pub fn u_exp_approx(t: f64, gamma_bar: f64) -> Result<Complex64> {
    if !(gamma_bar > 0.0) {
        return Err(invalid("gamma_bar", format!("must be positive, got {gamma_bar}")));
    }
    if t >= 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(Complex64::new(0.0, (2.0 * gamma_bar).sqrt() * (gamma_bar * t).exp()))
}

/// Source-cavity output coupler `kappa(t) = gbar / (e^{-2 gbar t} - 1)` that
/// releases the exponential mode. Diverges as `t -> 0-`.
pub fn kappa_source(t: f64, gamma_bar: f64) -> Result<f64> {
    check_coupler_domain(t, gamma_bar)?;
    Ok(gamma_bar / (-2.0 * gamma_bar * t).exp_m1())
}

/// Analytic time derivative of [`kappa_source`].
pub fn kappa_source_rate(t: f64, gamma_bar: f64) -> Result<f64> {
    check_coupler_domain(t, gamma_bar)?;
    let e = (-2.0 * gamma_bar * t).exp();
    let d = (-2.0 * gamma_bar * t).exp_m1();
    Ok(2.0 * gamma_bar * gamma_bar * e / (d * d))
}

fn check_coupler_domain(t: f64, gamma_bar: f64) -> Result<()> {
    if !(gamma_bar > 0.0) {
        return Err(invalid("gamma_bar", format!("must be positive, got {gamma_bar}")));
    }
    if !(t < 0.0) {
        return Err(Error::Domain {
            what: "kappa_source",
            detail: format!("coupler is singular for t >= 0 (t = {t})"),
        });
    }
    Ok(())
}

/// Residual of `dk/dt = 2 k d(ln u0)/dt + 2 k^2` for a real mode envelope `u0`.
pub fn coupler_ode_residual(kappa: f64, dkappa_dt: f64, u0: f64, du0_dt: f64) -> Result<f64> {
    if u0 == 0.0 {
        return Err(Error::Domain {
            what: "coupler_ode_residual",
            detail: "mode envelope vanishes".into(),
        });
    }
    Ok(dkappa_dt - 2.0 * kappa * du0_dt / u0 - 2.0 * kappa * kappa)
}

/// Modulus of the write-stage amplitude gain `|<b(0)> / alpha|`.
pub fn transfer_amplitude(params: &SystemParams) -> Result<f64> {
    let spec = ModeFunctionSpec::new(params, 0.0)?;
    let gp = Complex64::new(spec.rates.gamma_plus, 0.0);
    let m = spec.rates.m_rate;
    let denom = 2.0 * ((gp + m) * (gp - m) * gp).sqrt();
    Ok(((2.0 * params.gamma_ext).sqrt() * params.g_eff / denom).norm())
}
