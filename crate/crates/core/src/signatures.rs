//! Estimators of cat-state signatures from weighted positive-P output samples.
//!
//! Every estimator is a weighted mean `(1/N) sum_i w_i K(alpha_i, alpha_plus_i)`
//! of a per-sample kernel. Kernels are evaluated in log space because the
//! off-diagonal branches pair an exponentially small weight with an
//! exponentially large kernel.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::grid::{Axis, AxisTag, GridField};
use crate::model::{Branch, TrajectoryResult};
use crate::separable::{masked_projections, separable_sum};

/// A rotated-quadrature grid; `theta = pi/2` gives the `p` quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureGrid {
    pub theta: f64,
    pub axis: Axis,
}

impl QuadratureGrid {
    pub fn new(theta: f64, axis: Axis) -> Self {
        Self { theta, axis }
    }

    /// `[-12, 12]` in steps of 0.01, widened if needed to reach
    /// `sqrt(2)|alpha0| + 5`.
    pub fn default_for(theta: f64, alpha0: f64) -> Result<Self> {
        let extent = (SQRT_2 * alpha0.abs() + 5.0).max(12.0);
        let tag = if theta == 0.0 {
            AxisTag::QuadratureX
        } else {
            AxisTag::QuadratureP
        };
        Ok(Self::new(theta, Axis::symmetric(tag, extent, 0.01)?))
    }
}

/// Phase-space grid over `(Re alpha, Im alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WignerGrid {
    pub x: Axis,
    pub y: Axis,
}

impl WignerGrid {
    pub const MAX_STEP: f64 = 0.05;

    pub fn new(extent: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && h <= Self::MAX_STEP) {
            return Err(invalid("h", format!("must lie in (0, {}], got {h}", Self::MAX_STEP)));
        }
        if !(extent > 0.0) {
            return Err(invalid("extent", "must be positive"));
        }
        Ok(Self {
            x: Axis::symmetric(AxisTag::PhaseSpaceRe, extent, h)?,
            y: Axis::symmetric(AxisTag::PhaseSpaceIm, extent, h)?,
        })
    }

    /// Extent `|alpha0| + 4`, step 0.05.
    pub fn default_for(alpha0: f64) -> Result<Self> {
        Self::new(alpha0.abs() + 4.0, Self::MAX_STEP)
    }
}

/// Coherent-basis grid for density-matrix moduli: `[-(|alpha0| + 2), |alpha0| + 2]`, step 0.1.
pub fn default_density_axes(alpha0: f64) -> Result<(Axis, Axis)> {
    let e = alpha0.abs() + 2.0;
    Ok((
        Axis::symmetric(AxisTag::CoherentBasisA, e, 0.1)?,
        Axis::symmetric(AxisTag::CoherentBasisB, e, 0.1)?,
    ))
}

fn ensure_nonempty(results: &[TrajectoryResult]) -> Result<()> {
    if results.is_empty() {
        Err(Error::EmptyEnsemble)
    } else {
        Ok(())
    }
}

/// Log of `<x_theta|alpha> <alpha_plus*|x_theta> / <alpha_plus*|alpha>`.
pub fn log_quadrature_kernel(x: f64, theta: f64, alpha: Complex64, alpha_plus: Complex64) -> Complex64 {
    let e1 = Complex64::from_polar(1.0, -theta);
    let e2 = e1 * e1;
    -0.5 * PI.ln() - x * x + SQRT_2 * x * (e1 * alpha + e1.conj() * alpha_plus)
        - 0.5 * (e2 * alpha * alpha + e2.conj() * alpha_plus * alpha_plus)
        - alpha_plus * alpha
}

/// Single-sample quadrature density; the real part of the analytically
/// continued kernel for non-conjugate pairs.
pub fn quadrature_kernel(x: f64, theta: f64, alpha: Complex64, alpha_plus: Complex64) -> f64 {
    log_quadrature_kernel(x, theta, alpha, alpha_plus).exp().re
}

fn quadrature_distribution_filtered(
    results: &[TrajectoryResult],
    grid: &QuadratureGrid,
    keep: impl Fn(Branch) -> bool + Sync,
) -> Result<GridField> {
    ensure_nonempty(results)?;
    let n = results.len() as f64;
    let samples: Vec<(Complex64, Complex64, f64)> = results
        .iter()
        .filter(|r| keep(r.branch) && r.weight > 0.0)
        .map(|r| (r.alpha_out, r.alpha_out_plus, r.weight.ln()))
        .collect();
    let values = grid
        .axis
        .points()
        .into_par_iter()
        .map(|x| {
            samples
                .iter()
                .map(|&(a, ap, lw)| (log_quadrature_kernel(x, grid.theta, a, ap) + lw).exp().re)
                .sum::<f64>()
                / n
        })
        .collect();
    GridField::new(vec![grid.axis], values)
}

/// Weighted-mean quadrature distribution on `grid`.
pub fn p_distribution(results: &[TrajectoryResult], grid: &QuadratureGrid) -> Result<GridField> {
    quadrature_distribution_filtered(results, grid, |_| true)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WignerEstimate {
    pub field: GridField,
    /// Largest magnitude of the discarded imaginary part.
    pub max_imag: f64,
}

/// Factors of the Wigner kernel `w exp(-2 (alpha_plus - alpha*)(alpha_out - alpha))`
/// written as `exp(-2 (x - a)^2) exp(-2 (y - b)^2)` with complex centres
/// `a = (alpha_plus + alpha_out) / 2`, `b = i (alpha_plus - alpha_out) / 2`.
struct WignerFactors {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// (a, b, shift_f, shift_g)
    samples: Vec<(Complex64, Complex64, f64, f64)>,
}

impl WignerFactors {
    fn new(results: &[TrajectoryResult], grid: &WignerGrid) -> Self {
        let samples = results
            .iter()
            .map(|r| {
                if r.weight <= 0.0 {
                    return (Complex64::default(), Complex64::default(), 0.0, f64::NEG_INFINITY);
                }
                let a = (r.alpha_out_plus + r.alpha_out) * 0.5;
                let b = Complex64::new(0.0, 0.5) * (r.alpha_out_plus - r.alpha_out);
                let lw = r.weight.ln();
                // balance the peak magnitudes of the two factors
                let fmax = 2.0 * a.im * a.im;
                let gmax = 2.0 * b.im * b.im + lw;
                let shift = 0.5 * (fmax - gmax);
                (a, b, -shift, lw + shift)
            })
            .collect();
        Self {
            xs: grid.x.points(),
            ys: grid.y.points(),
            samples,
        }
    }

    fn fill(&self, i: usize, f: &mut [Complex64], g: &mut [Complex64]) {
        let (a, b, sf, sg) = self.samples[i];
        if sg == f64::NEG_INFINITY {
            f.fill(Complex64::default());
            g.fill(Complex64::default());
            return;
        }
        for (v, &x) in f.iter_mut().zip(&self.xs) {
            let d = x - a;
            *v = (-2.0 * d * d + sf).exp();
        }
        for (v, &y) in g.iter_mut().zip(&self.ys) {
            let d = y - b;
            *v = (-2.0 * d * d + sg).exp();
        }
    }
}

fn to_field(m: Array2<f64>, x: Axis, y: Axis, scale: f64) -> Result<GridField> {
    let values = m.iter().map(|v| v * scale).collect();
    GridField::new(vec![x, y], values)
}

/// Weighted Gaussian-kernel estimate of the Wigner function.
pub fn wigner_estimate(results: &[TrajectoryResult], grid: &WignerGrid) -> Result<WignerEstimate> {
    ensure_nonempty(results)?;
    let fac = WignerFactors::new(results, grid);
    let sum = separable_sum(
        results.len(),
        grid.x.len,
        grid.y.len,
        &|i: usize, f: &mut [Complex64], g: &mut [Complex64]| fac.fill(i, f, g),
        true,
    );
    let scale = 2.0 / (PI * results.len() as f64);
    let max_imag = sum
        .im
        .map(|m| m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())) * scale)
        .unwrap_or(0.0);
    Ok(WignerEstimate {
        field: to_field(sum.re, grid.x, grid.y, scale)?,
        max_imag,
    })
}

/// Negative volume `(1/2) int (|W| - W)`, trapezoid rule.
pub fn wigner_negativity(field: &GridField) -> f64 {
    field.weighted_sum(|v| (-v).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NegativityEstimate {
    pub value: f64,
    /// Delete-one jackknife standard error, linearized about the estimated
    /// negative region.
    pub std_error: f64,
}

/// Negativity with its trajectory-jackknife standard error.
///
/// With the negative region `R` held fixed the negativity is a sample mean of
/// `I_i = -int_R k_i`, where `k_i` is the single-sample Wigner kernel, so its
/// delete-one jackknife error is `std(I) / sqrt(N)`.
pub fn negativity_with_error(
    results: &[TrajectoryResult],
    grid: &WignerGrid,
) -> Result<(WignerEstimate, NegativityEstimate)> {
    let est = wigner_estimate(results, grid)?;
    let value = wigner_negativity(&est.field);
    let n = results.len();
    if n < 2 || value == 0.0 {
        return Ok((est, NegativityEstimate { value, std_error: 0.0 }));
    }
    let f = &est.field;
    let (nx, ny) = (grid.x.len, grid.y.len);
    let (wx, wy) = (grid.x.trapezoid_weights(), grid.y.trapezoid_weights());
    // bounding box of the negative region
    let (mut x0, mut x1, mut y0, mut y1) = (nx, 0, ny, 0);
    for i in 0..nx {
        for j in 0..ny {
            if f.get2(i, j) < 0.0 {
                x0 = x0.min(i);
                x1 = x1.max(i);
                y0 = y0.min(j);
                y1 = y1.max(j);
            }
        }
    }
    let sub = WignerGrid {
        x: Axis { min: grid.x.point(x0), len: x1 - x0 + 1, ..grid.x },
        y: Axis { min: grid.y.point(y0), len: y1 - y0 + 1, ..grid.y },
    };
    let mask = Array2::from_shape_fn((sub.x.len, sub.y.len), |(i, j)| {
        if f.get2(x0 + i, y0 + j) < 0.0 {
            -wx[x0 + i] * wy[y0 + j]
        } else {
            0.0
        }
    });
    let fac = WignerFactors::new(results, &sub);
    let proj = masked_projections(
        n,
        mask.view(),
        &|i: usize, f: &mut [Complex64], g: &mut [Complex64]| fac.fill(i, f, g),
    );
    let k = 2.0 / PI;
    let mean = proj.iter().sum::<f64>() * k / n as f64;
    let var = proj.iter().map(|p| (p * k - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok((
        est,
        NegativityEstimate {
            value,
            std_error: (var / n as f64).sqrt(),
        },
    ))
}

/// `P(x) = (1/sqrt 2) int W(x / sqrt 2, y) dy` on the quadrature axis
/// `x = sqrt(2) Re alpha`.
pub fn wigner_marginal_x(field: &GridField) -> Result<GridField> {
    if !field.is_2d() {
        return Err(invalid("field", "marginal needs a 2-D phase-space field"));
    }
    let (ax, ay) = (field.axes[0], field.axes[1]);
    let wy = ay.trapezoid_weights();
    let values = (0..ax.len)
        .map(|i| (0..ay.len).map(|j| wy[j] * field.get2(i, j)).sum::<f64>() * FRAC_1_SQRT_2)
        .collect();
    let axis = Axis {
        tag: AxisTag::QuadratureX,
        min: ax.min * SQRT_2,
        step: ax.step * SQRT_2,
        len: ax.len,
    };
    GridField::new(vec![axis], values)
}

/// Which positive-P branches enter a density reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchFilter {
    All,
    Diagonal,
    OffDiagonal,
}

impl BranchFilter {
    fn keeps(self, b: Branch) -> bool {
        match self {
            BranchFilter::All => true,
            BranchFilter::Diagonal => b.is_diagonal(),
            BranchFilter::OffDiagonal => !b.is_diagonal(),
        }
    }
}

/// `|<a|rho|b>|` over real coherent labels.
pub fn reconstruct_density(results: &[TrajectoryResult], a: Axis, b: Axis) -> Result<GridField> {
    reconstruct_density_filtered(results, a, b, BranchFilter::All)
}

/// Modulus of the contribution of a subset of branches to `<a|rho|b>`, still
/// normalized by the full ensemble size. The off-diagonal branches carry the
/// `|alpha0><-alpha0|` coherences of the cat.
pub fn reconstruct_density_filtered(
    results: &[TrajectoryResult],
    a: Axis,
    b: Axis,
    filter: BranchFilter,
) -> Result<GridField> {
    ensure_nonempty(results)?;
    let kept: Vec<&TrajectoryResult> = results
        .iter()
        .filter(|r| filter.keeps(r.branch) && r.weight > 0.0)
        .collect();
    let (av, bv) = (a.points(), b.points());
    // <a|al><al+*|b> / <al+*|al> = exp(-a^2/2 + a al) exp(-b^2/2 + b al+ - al+ al)
    let fac = |i: usize, f: &mut [Complex64], g: &mut [Complex64]| {
        let r = kept[i];
        let (o, p) = (r.alpha_out, r.alpha_out_plus);
        let lg = r.weight.ln() - p * o;
        for (v, &x) in f.iter_mut().zip(&av) {
            *v = (-0.5 * x * x + x * o).exp();
        }
        for (v, &y) in g.iter_mut().zip(&bv) {
            *v = (-0.5 * y * y + y * p + lg).exp();
        }
    };
    let sum = separable_sum(kept.len(), a.len, b.len, &fac, true);
    let im = sum.im.expect("imaginary part requested");
    let n = results.len() as f64;
    let values = sum
        .re
        .iter()
        .zip(im.iter())
        .map(|(r, i)| r.hypot(*i) / n)
        .collect();
    GridField::new(vec![a, b], values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PVariance {
    pub variance: f64,
    pub mean_p: f64,
    /// Largest imaginary part among `<p>` and `<p^2>`.
    pub imag_residual: f64,
}

/// Variance of the `p` quadrature from normally ordered moments.
pub fn p_variance(results: &[TrajectoryResult]) -> Result<PVariance> {
    ensure_nonempty(results)?;
    let zero = Complex64::new(0.0, 0.0);
    let (mut a, mut ap, mut a2, mut ap2, mut n) = (zero, zero, zero, zero, zero);
    for r in results {
        let (o, p, w) = (r.alpha_out, r.alpha_out_plus, r.weight);
        a += o * w;
        ap += p * w;
        a2 += o * o * w;
        ap2 += p * p * w;
        n += p * o * w;
    }
    let k = 1.0 / results.len() as f64;
    let (a, ap, a2, ap2, n) = (a * k, ap * k, a2 * k, ap2 * k, n * k);
    let p2 = -0.5 * (a2 + ap2 - 2.0 * n - 1.0);
    let p1 = (a - ap) / Complex64::new(0.0, SQRT_2);
    Ok(PVariance {
        variance: p2.re - p1.re * p1.re,
        mean_p: p1.re,
        imag_residual: p1.im.abs().max(p2.im.abs()),
    })
}

/// A variance below 1/2 rules out any mixture of coherent states `|±alpha0>`.
pub fn is_mixture_falsified(variance: f64) -> bool {
    variance < 0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FringeContrast {
    /// `(max R - min R) / (max R + min R)` with `R = P(p) / P_diag(p)`.
    pub contrast: f64,
    pub window: f64,
}

/// Visibility of the interference fringes of `P(p)` near `p = 0`.
///
/// The fringes ride on the Gaussian envelope contributed by the diagonal
/// branches; dividing by that envelope leaves `1 + c cos(...)` whose
/// visibility is the surviving coherence `c`.
pub fn fringe_contrast(results: &[TrajectoryResult], window: f64, step: f64) -> Result<FringeContrast> {
    let axis = Axis::new(AxisTag::QuadratureP, -window, window, step)?;
    let grid = QuadratureGrid::new(PI / 2.0, axis);
    let full = p_distribution(results, &grid)?;
    let diag = quadrature_distribution_filtered(results, &grid, |b| b.is_diagonal())?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (f, d) in full.values.iter().zip(&diag.values) {
        if *d <= 0.0 {
            return Err(Error::Domain {
                what: "fringe_contrast",
                detail: "ensemble has no diagonal-branch weight".into(),
            });
        }
        let r = f / d;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok(FringeContrast {
        contrast: (hi - lo) / (hi + lo),
        window,
    })
}
