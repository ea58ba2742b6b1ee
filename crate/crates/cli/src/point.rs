//! Simulate one parameter point and evaluate the requested signatures.

use std::f64::consts::{PI, SQRT_2};

use anyhow::{Context, Result};
use catmem::ensemble::{check_finite, simulate, Ensemble, EnsembleConfig};
use catmem::grid::Axis;
use catmem::oracle::{evolved_wigner_field, DecoherenceParams};
use catmem::signatures::{
    fringe_contrast, negativity_with_error, p_distribution, p_variance,
    reconstruct_density_filtered, wigner_estimate, wigner_negativity, BranchFilter,
    FringeContrast, PVariance, QuadratureGrid, WignerGrid,
};
use catmem::{AxisTag, GridField, TrajectoryResult};
use serde::Serialize;

use crate::config::{ExperimentConfig, Signature};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NegativityReport {
    pub value: f64,
    /// Damped-cat oracle at `gamma_m t_store` on the same grid, when the run
    /// has no optical loss and starts from a cold mechanical mode.
    pub oracle: Option<f64>,
    pub sampling_error: f64,
    /// `|delta(dt) - delta(dt/2)|` on the same Wiener paths.
    pub step_error: Option<f64>,
    /// Quadrature sum of the two error components.
    pub total_error: f64,
    pub max_imag: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointResult {
    pub n_samples: usize,
    pub gain_abs: f64,
    pub gain_phase: f64,
    pub mean_weight: f64,
    pub negativity: Option<NegativityReport>,
    pub variance: Option<PVariance>,
    pub fringes: Option<FringeContrast>,
    #[serde(skip)]
    pub fields: Vec<(&'static str, GridField)>,
}

pub fn wigner_grid(cfg: &ExperimentConfig) -> Result<WignerGrid> {
    let extent = cfg.grids.wigner_extent.unwrap_or(cfg.alpha0.abs() + 4.0);
    Ok(WignerGrid::new(extent, cfg.grids.wigner_step)?)
}

pub fn quadrature_grid(cfg: &ExperimentConfig, theta: f64) -> Result<QuadratureGrid> {
    let extent = (SQRT_2 * cfg.alpha0.abs() + 5.0).max(12.0);
    let tag = if theta == 0.0 {
        AxisTag::QuadratureX
    } else {
        AxisTag::QuadratureP
    };
    Ok(QuadratureGrid::new(
        theta,
        Axis::symmetric(tag, extent, cfg.grids.quadrature_step)?,
    ))
}

pub fn density_axes(cfg: &ExperimentConfig) -> Result<(Axis, Axis)> {
    let e = cfg.grids.density_extent.unwrap_or(cfg.alpha0.abs() + 2.0);
    let h = cfg.grids.density_step;
    Ok((
        Axis::symmetric(AxisTag::CoherentBasisA, e, h)?,
        Axis::symmetric(AxisTag::CoherentBasisB, e, h)?,
    ))
}

pub fn ensemble_config(cfg: &ExperimentConfig) -> Result<EnsembleConfig> {
    Ok(EnsembleConfig {
        params: cfg.params,
        schedule: cfg.schedule()?,
        sampler: cfg.sampler()?,
        storage: cfg.storage,
        workers: cfg.workers,
        phase_correction: cfg.phase_correction,
        step_error: cfg.step_error,
    })
}

pub fn run_ensemble(cfg: &ExperimentConfig) -> Result<Ensemble> {
    let e = simulate(&ensemble_config(cfg)?).context("simulating ensemble")?;
    check_finite(&e.results)?;
    if let Some(r) = &e.refined {
        check_finite(r)?;
    }
    Ok(e)
}

/// Negativity of the damped-cat oracle on `grid`, if the oracle applies.
pub fn oracle_negativity(cfg: &ExperimentConfig, grid: &WignerGrid) -> Result<Option<f64>> {
    if cfg.params.gamma_int != 0.0 || cfg.params.n_init_mech != 0.0 {
        return Ok(None);
    }
    let d = DecoherenceParams::scaled(cfg.gamma_m_t(), cfg.params.n_th_mech)?;
    let field = evolved_wigner_field(grid.x, grid.y, cfg.alpha0, &d)?;
    Ok(Some(wigner_negativity(&field)))
}

fn negativity_report(
    cfg: &ExperimentConfig,
    e: &Ensemble,
    grid: &WignerGrid,
) -> Result<(NegativityReport, GridField)> {
    let (est, neg) = negativity_with_error(&e.results, grid)?;
    let step_error = match &e.refined {
        Some(fine) => {
            let f = wigner_estimate(fine, grid)?;
            Some((wigner_negativity(&f.field) - neg.value).abs())
        }
        None => None,
    };
    let s = step_error.unwrap_or(0.0);
    let report = NegativityReport {
        value: neg.value,
        oracle: oracle_negativity(cfg, grid)?,
        sampling_error: neg.std_error,
        step_error,
        total_error: neg.std_error.hypot(s),
        max_imag: est.max_imag,
    };
    Ok((report, est.field))
}

fn mean_weight(results: &[TrajectoryResult]) -> f64 {
    results.iter().map(|r| r.weight).sum::<f64>() / results.len() as f64
}

pub fn evaluate(cfg: &ExperimentConfig) -> Result<PointResult> {
    let e = run_ensemble(cfg)?;
    evaluate_ensemble(cfg, &e)
}

pub fn evaluate_ensemble(cfg: &ExperimentConfig, e: &Ensemble) -> Result<PointResult> {
    let mut fields = Vec::new();
    let mut negativity = None;
    if cfg.wants(Signature::Negativity) || cfg.wants(Signature::Wigner) {
        let (rep, field) = negativity_report(cfg, e, &wigner_grid(cfg)?)?;
        if cfg.wants(Signature::Negativity) {
            negativity = Some(rep);
        }
        if cfg.wants(Signature::Wigner) {
            fields.push(("wigner", field));
        }
    }
    if cfg.wants(Signature::PX) {
        fields.push(("p_x", p_distribution(&e.results, &quadrature_grid(cfg, 0.0)?)?));
    }
    if cfg.wants(Signature::PP) {
        fields.push(("p_p", p_distribution(&e.results, &quadrature_grid(cfg, PI / 2.0)?)?));
    }
    if cfg.wants(Signature::Density) {
        let (a, b) = density_axes(cfg)?;
        fields.push(("density", reconstruct_density_filtered(&e.results, a, b, BranchFilter::All)?));
        fields.push((
            "density_coherence",
            reconstruct_density_filtered(&e.results, a, b, BranchFilter::OffDiagonal)?,
        ));
    }
    let variance = if cfg.wants(Signature::Variance) {
        Some(p_variance(&e.results)?)
    } else {
        None
    };
    let fringes = if cfg.wants(Signature::Fringes) {
        Some(fringe_contrast(&e.results, cfg.grids.fringe_window, cfg.grids.quadrature_step)?)
    } else {
        None
    };
    Ok(PointResult {
        n_samples: e.results.len(),
        gain_abs: e.gain.norm(),
        gain_phase: e.gain.arg(),
        mean_weight: mean_weight(&e.results),
        negativity,
        variance,
        fringes,
        fields,
    })
}
