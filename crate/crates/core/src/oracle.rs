//! Closed-form results for an even cat under ideal conditions and under
//! single-mode damping into a thermal reservoir.
//!
//! Amplitudes `alpha0` are real here. Damping is described by a rate `gamma`
//! (the mechanical rate when modelling storage), reservoir occupation `n_bar`
//! and elapsed time `t`.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{Axis, GridField};
use crate::model::CatParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceParams {
    pub gamma: f64,
    pub n_bar: f64,
    pub t: f64,
}

impl DecoherenceParams {
    pub fn new(gamma: f64, n_bar: f64, t: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(invalid("gamma", format!("must be positive, got {gamma}")));
        }
        if !(n_bar >= 0.0) || !n_bar.is_finite() {
            return Err(invalid("n_bar", format!("must be >= 0, got {n_bar}")));
        }
        if !(t >= 0.0) {
            return Err(invalid("t", format!("must be >= 0, got {t}")));
        }
        Ok(Self { gamma, n_bar, t })
    }

    /// Elapsed time expressed as `gamma t`.
    pub fn scaled(gamma_t: f64, n_bar: f64) -> Result<Self> {
        Self::new(1.0, n_bar, gamma_t)
    }

    /// Surviving energy fraction `e^{-2 gamma t}`.
    pub fn energy_fraction(&self) -> f64 {
        if self.t.is_infinite() {
            0.0
        } else {
            (-2.0 * self.gamma * self.t).exp()
        }
    }

    /// Thermal broadening `1 + 2 n_bar (1 - e^{-2 gamma t})`.
    pub fn broadening(&self) -> f64 {
        1.0 + 2.0 * self.n_bar * (1.0 - self.energy_fraction())
    }
}

fn cat_norm(alpha0: f64) -> f64 {
    2.0 * (1.0 + (-2.0 * alpha0 * alpha0).exp())
}

/// `x`-quadrature distribution of the ideal even cat.
pub fn ideal_p_x(x: f64, alpha0: f64) -> f64 {
    let s = SQRT_2 * alpha0;
    let sum = (-(x - s).powi(2)).exp()
        + (-(x + s).powi(2)).exp()
        + 2.0 * (-x * x - 2.0 * alpha0 * alpha0).exp();
    sum / (PI.sqrt() * cat_norm(alpha0))
}

/// `p`-quadrature distribution of the ideal even cat.
pub fn ideal_p_p(p: f64, alpha0: f64) -> f64 {
    2.0 * (-p * p).exp() * (1.0 + (2.0 * SQRT_2 * p * alpha0).cos())
        / (PI.sqrt() * cat_norm(alpha0))
}

pub fn ideal_wigner(alpha: Complex64, alpha0: f64) -> f64 {
    let d = DecoherenceParams {
        gamma: 1.0,
        n_bar: 0.0,
        t: 0.0,
    };
    evolved_wigner(alpha, alpha0, &d)
}

/// Wigner function of the damped cat after time `t`.
pub fn evolved_wigner(alpha: Complex64, alpha0: f64, d: &DecoherenceParams) -> f64 {
    let den = d.broadening();
    let shrunk = alpha0 * d.energy_fraction().sqrt();
    let am = alpha - shrunk;
    let ap = alpha + shrunk;
    let overlap = (-2.0 * alpha0 * alpha0).exp();
    let diag = (-2.0 * am.norm_sqr() / den).exp() + (-2.0 * ap.norm_sqr() / den).exp();
    // The two cross terms are complex conjugates of each other.
    let cross = 2.0 * overlap * (-2.0 * am.conj() * ap / den).exp().re;
    2.0 / (PI * cat_norm(alpha0) * den) * (diag + cross)
}

/// Tabulate `evolved_wigner` on a phase-space grid.
pub fn evolved_wigner_field(
    x: Axis,
    y: Axis,
    alpha0: f64,
    d: &DecoherenceParams,
) -> Result<GridField> {
    GridField::tabulate_2d(x, y, |re, im| {
        evolved_wigner(Complex64::new(re, im), alpha0, d)
    })
}

/// Variance of the `p` quadrature of the ideal even cat.
pub fn cat_variance(alpha0: f64) -> f64 {
    let a2 = alpha0 * alpha0;
    let e = (-2.0 * a2).exp();
    0.5 - 2.0 * a2 * e / (1.0 + e)
}

/// Zero-temperature decohered cat
/// `rho ∝ sum_± |±a><±a| + c (|a><-a| + |-a><a|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecoheredDensity {
    /// `a = alpha0 e^{-gamma t}`.
    pub amplitude: f64,
    /// `c = exp(-2 alpha0^2 (1 - e^{-2 gamma t}))`.
    pub coherence: f64,
}

pub fn decohered_density(alpha0: f64, d: &DecoherenceParams) -> DecoheredDensity {
    let f = d.energy_fraction();
    DecoheredDensity {
        amplitude: alpha0 * f.sqrt(),
        coherence: (-2.0 * alpha0 * alpha0 * (1.0 - f)).exp(),
    }
}

impl DecoheredDensity {
    /// Normalization so that the trace is one.
    pub fn norm(&self) -> f64 {
        2.0 + 2.0 * self.coherence * (-2.0 * self.amplitude * self.amplitude).exp()
    }

    /// `<a|rho|b>` for real coherent labels `a`, `b`.
    pub fn coherent_element(&self, a: f64, b: f64) -> f64 {
        let amp = self.amplitude;
        // <a|u><v|b> for real a, b, u, v
        let el = |u: f64, v: f64| (-(a - u).powi(2) / 2.0 - (b - v).powi(2) / 2.0).exp();
        (el(amp, amp) + el(-amp, -amp) + self.coherence * (el(amp, -amp) + el(-amp, amp)))
            / self.norm()
    }
}

/// Nonnegativity function `q(t) = 1/2 - (1 + n_bar)(1 - e^{-2 gamma t})`.
pub fn q_function(d: &DecoherenceParams) -> f64 {
    0.5 - (1.0 + d.n_bar) * (1.0 - d.energy_fraction())
}

/// Time after which the damped cat's Wigner function is nonnegative
/// everywhere. Independent of the cat amplitude.
pub fn t_positive(n_bar: f64, gamma: f64) -> Result<f64> {
    DecoherenceParams::new(gamma, n_bar, 0.0)?;
    Ok(((1.0 + n_bar) / (0.5 + n_bar)).ln() / (2.0 * gamma))
}

/// Time after which the Glauber P function is nonnegative. Infinite at zero
/// temperature.
pub fn t_p_bound(n_bar: f64, gamma: f64) -> Result<f64> {
    DecoherenceParams::new(gamma, n_bar, 0.0)?;
    if n_bar == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((1.0 / n_bar + 1.0).ln() / (2.0 * gamma))
}

/// Damped evolution of an `s`-ordered characteristic function:
/// `chi_s(lambda, t) = exp(-(2 n_bar + 1 - s) |lambda|^2 (1 - e^{-2 gamma t}) / 2) chi_s(lambda e^{-gamma t}, 0)`.
pub fn evolve_characteristic(
    chi0: impl Fn(Complex64) -> Complex64,
    s_order: f64,
    lambda: Complex64,
    d: &DecoherenceParams,
) -> Complex64 {
    let f = d.energy_fraction();
    let s_bar = 2.0 * d.n_bar + 1.0;
    let damping = (-(s_bar - s_order) * lambda.norm_sqr() * 0.5 * (1.0 - f)).exp();
    chi0(lambda * f.sqrt()) * damping
}

/// The four terms of the normally ordered characteristic function of the even
/// cat, `Tr(|u><v| e^{lambda a†} e^{-lambda* a}) / N = <v|u> e^{lambda v*} e^{-lambda* u} / N`,
/// in the order `(u, v) = (+,+), (-,-), (+,-), (-,+)`.
pub fn cat_chi_normal_terms(lambda: Complex64, cat: &CatParams) -> [Complex64; 4] {
    let a = cat.alpha0;
    let term = |u: Complex64, v: Complex64| {
        let overlap = (-0.5 * u.norm_sqr() - 0.5 * v.norm_sqr() + v.conj() * u).exp();
        overlap * (lambda * v.conj() - lambda.conj() * u).exp() / cat.norm
    };
    [term(a, a), term(-a, -a), term(a, -a), term(-a, a)]
}

pub fn cat_chi_normal(lambda: Complex64, cat: &CatParams) -> Complex64 {
    cat_chi_normal_terms(lambda, cat).iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(gt: f64, n: f64) -> DecoherenceParams {
        DecoherenceParams::scaled(gt, n).unwrap()
    }

    #[test]
    fn quadrature_values() {
        // peak height 1 / (sqrt(pi) N)
        let v = ideal_p_x(2.0 * SQRT_2, 2.0);
        assert!((v - 0.28200).abs() < 5e-6, "{v}");
        let v = ideal_p_p(0.0, 2.0);
        assert!((v - 1.12800).abs() < 5e-6, "{v}");
        let null = PI / (2.0 * SQRT_2 * 2.0);
        assert!(ideal_p_p(null, 2.0).abs() < 1e-15);
        for x in [-1.3f64, 0.0, 0.4] {
            let g = (-x * x).exp() / PI.sqrt();
            assert!((ideal_p_x(x, 0.0) - g).abs() < 1e-15);
            assert!((ideal_p_p(x, 0.0) - g).abs() < 1e-15);
        }
    }

    #[test]
    fn wigner_peaks() {
        let w = ideal_wigner(Complex64::new(5.0, 0.0), 5.0);
        assert!((w - 1.0 / PI).abs() < 1e-6, "{w}");
        let w0 = ideal_wigner(Complex64::new(0.0, 0.0), 5.0);
        assert!((w0 - 2.0 / PI).abs() < 1e-6, "{w0}");
        // first interference minimum on the imaginary axis: cos(4 alpha0 y) = -1
        let y = PI / (4.0 * 5.0);
        assert!(ideal_wigner(Complex64::new(0.0, y), 5.0) < 0.0);
    }

    #[test]
    fn evolution_reduces_at_t0() {
        for &(x, y) in &[(0.3, -1.1), (2.0, 0.0), (-0.5, 0.7)] {
            let a = Complex64::new(x, y);
            let w0 = ideal_wigner(a, 2.0);
            assert!((evolved_wigner(a, 2.0, &d(0.0, 3.0)) - w0).abs() < 1e-15);
        }
    }

    #[test]
    fn full_decay_is_thermal() {
        let inf = DecoherenceParams::new(1.0, 2.0, f64::INFINITY).unwrap();
        for r in [0.0, 0.5, 1.7] {
            let a = Complex64::new(r, 0.3);
            let thermal = 2.0 / (PI * 5.0) * (-2.0 * a.norm_sqr() / 5.0).exp();
            assert!((evolved_wigner(a, 3.0, &inf) - thermal).abs() < 1e-14);
        }
    }

    #[test]
    fn variance_values() {
        assert!((cat_variance(1.0) - 0.2616).abs() < 5e-5);
        assert!((cat_variance(2.0) - 0.4973).abs() < 5e-5);
        assert!((cat_variance(3.0) - 0.5000).abs() < 5e-5);
        assert_eq!(cat_variance(0.0), 0.5);
    }

    #[test]
    fn decohered_density_values() {
        let r = decohered_density(3.0, &d(0.0, 0.0));
        assert_eq!((r.amplitude, r.coherence), (3.0, 1.0));
        let r = decohered_density(3.0, &d(2f64.ln() / 2.0, 0.0));
        assert!((r.coherence - (-9.0f64).exp()).abs() < 1e-15);
        assert!((r.amplitude - 3.0 / SQRT_2).abs() < 1e-14);
        let inf = DecoherenceParams::new(1.0, 0.0, f64::INFINITY).unwrap();
        let r = decohered_density(3.0, &inf);
        assert!(r.coherence > 0.0 && (r.coherence - (-18.0f64).exp()).abs() < 1e-20);
    }

    #[test]
    fn bounds() {
        assert!((t_positive(0.0, 1.0).unwrap() - 0.34657).abs() < 5e-6);
        assert!((t_positive(2.0, 1.0).unwrap() - 0.09116).abs() < 5e-6);
        assert!(t_positive(1e9, 1.0).unwrap() < 1e-9);
        assert!((t_p_bound(1.0, 1.0).unwrap() - 2f64.ln() / 2.0).abs() < 1e-15);
        assert!(t_p_bound(0.0, 1.0).unwrap().is_infinite());
        assert!(t_p_bound(1e9, 1.0).unwrap() < 1e-9);
        assert!(t_positive(-1.0, 1.0).is_err());
        assert!(t_positive(0.0, 0.0).is_err());
        for n in [0.0, 0.5, 2.0] {
            let t = t_positive(n, 1.0).unwrap();
            assert!(q_function(&d(t, n)).abs() < 1e-14);
        }
    }

    #[test]
    fn characteristic_trace_and_identity() {
        let cat = CatParams::real(1.5).unwrap();
        let chi = |l| cat_chi_normal(l, &cat);
        for gt in [0.0, 0.2, 3.0] {
            let v = evolve_characteristic(chi, 1.0, Complex64::new(0.0, 0.0), &d(gt, 1.0));
            assert!((v - 1.0).norm() < 1e-14);
        }
        let l = Complex64::new(0.3, -0.8);
        assert!((evolve_characteristic(chi, 1.0, l, &d(0.0, 2.0)) - chi(l)).norm() < 1e-15);
    }

    #[test]
    fn characteristic_reproduces_decohered_coherence() {
        let alpha0 = 2.5;
        let cat = CatParams::real(alpha0).unwrap();
        let dp = d(2f64.ln() / 2.0, 0.0);
        let dd = decohered_density(alpha0, &dp);
        let a = Complex64::new(dd.amplitude, 0.0);
        let l = Complex64::new(0.4, 0.9);
        let cross = evolve_characteristic(|z| cat_chi_normal_terms(z, &cat)[2], 1.0, l, &dp);
        // the same term of c |a><-a| written with the shrunken amplitude
        let bare = (-2.0 * a.norm_sqr()).exp() * (l * (-a).conj() - l.conj() * a).exp() / cat.norm;
        let c = (cross / bare).re;
        assert!((c / (-alpha0 * alpha0).exp() - 1.0).abs() < 1e-12, "{c}");
    }
}
