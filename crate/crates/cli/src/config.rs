//! Flat TOML experiment configuration.
//!
//! A config file, a named preset and command-line flags are merged in that
//! order of increasing priority (flags win), then resolved into an
//! [`ExperimentConfig`] whose components have all been validated.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use catmem::sampler::SamplerConfig;
use catmem::sde::StorageMode;
use catmem::{CatParams, ProtocolSchedule, SystemParams};
use serde::{Deserialize, Serialize};

use crate::presets;

/// Storage time given either as `tau` or as a multiple of `1 / gamma_m`,
/// written `"0.02/Gm"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StorageTime {
    Tau(f64),
    Text(String),
}

const GAMMA_M_SUFFIXES: [&str; 4] = ["/Gm", "/gm", "/Gamma_m", "/Γ_m"];

impl StorageTime {
    pub fn resolve(&self, gamma_m: f64) -> Result<f64> {
        let tau = match self {
            StorageTime::Tau(t) => *t,
            StorageTime::Text(s) => {
                let s = s.trim();
                match GAMMA_M_SUFFIXES.iter().find_map(|suf| s.strip_suffix(suf)) {
                    Some(x) => {
                        if !(gamma_m > 0.0) {
                            bail!("t_store `{s}` is relative to gamma_m, which is zero");
                        }
                        parse_number(x)? / gamma_m
                    }
                    None => parse_number(s)?,
                }
            }
        };
        if !(tau >= 0.0) || !tau.is_finite() {
            bail!("t_store must be finite and >= 0, got {tau}");
        }
        Ok(tau)
    }
}

fn parse_number(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| anyhow!("cannot read `{s}` as a number (expected e.g. 150 or \"0.02/Gm\")"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Signature {
    #[serde(rename = "p_x")]
    PX,
    #[serde(rename = "p_p")]
    PP,
    #[serde(rename = "wigner")]
    Wigner,
    #[serde(rename = "negativity")]
    Negativity,
    #[serde(rename = "density")]
    Density,
    #[serde(rename = "variance")]
    Variance,
    #[serde(rename = "fringes")]
    Fringes,
}

/// One configuration layer. Every key is optional so layers can be merged.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<String>,
    pub alpha0: Option<f64>,
    pub n_samples: Option<usize>,
    /// Sample count used instead of `n_samples` when the run has no noise.
    pub n_samples_noiseless: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    /// Internal optical loss; the external rate is `1 - gamma_int`.
    pub gamma_int: Option<f64>,
    pub gamma_m: Option<f64>,
    pub g_eff: Option<f64>,
    pub n_th: Option<f64>,
    /// Initial mechanical occupation; defaults to zero.
    pub n_init: Option<f64>,
    pub t_store: Option<StorageTime>,
    pub dt: Option<f64>,
    pub storage: Option<StorageMode>,
    pub stratified: Option<bool>,
    pub phase_correction: Option<bool>,
    pub step_error: Option<bool>,
    pub signatures: Option<Vec<Signature>>,
    pub wigner_extent: Option<f64>,
    pub wigner_step: Option<f64>,
    pub quadrature_step: Option<f64>,
    pub density_extent: Option<f64>,
    pub density_step: Option<f64>,
    pub fringe_window: Option<f64>,
    pub out: Option<PathBuf>,
    pub sweep_t_store: Option<Vec<StorageTime>>,
    pub sweep_n_bar: Option<Vec<f64>>,
    pub sweep_alpha0: Option<Vec<f64>>,
    pub sweep_gamma_int: Option<Vec<f64>>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),* $(,)?) => {
        ConfigFile { $($f: $top.$f.or($base.$f)),* }
    };
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| anyhow!("invalid config: {e}"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Keys set in `top` replace those in `self`.
    pub fn overlay(self, top: ConfigFile) -> ConfigFile {
        let base = self;
        overlay!(base, top;
            preset, alpha0, n_samples, n_samples_noiseless, seed, workers, gamma_int,
            gamma_m, g_eff, n_th, n_init, t_store, dt, storage, stratified,
            phase_correction, step_error, signatures, wigner_extent, wigner_step,
            quadrature_step, density_extent, density_step, fringe_window, out,
            sweep_t_store, sweep_n_bar, sweep_alpha0, sweep_gamma_int,
        )
    }
}

/// Grid choices; `None` extents follow the cat amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSettings {
    pub wigner_extent: Option<f64>,
    pub wigner_step: f64,
    pub quadrature_step: f64,
    pub density_extent: Option<f64>,
    pub density_step: f64,
    /// Half-width of the `p` window used for fringe contrast.
    pub fringe_window: f64,
}

impl Default for GridSettings {
    fn default() -> Self {
        Self {
            wigner_extent: None,
            wigner_step: 0.05,
            quadrature_step: 0.01,
            density_extent: None,
            density_step: 0.1,
            fringe_window: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    TStore,
    NBar,
    Alpha0,
    GammaInt,
}

impl SweepKind {
    pub fn column(self) -> &'static str {
        match self {
            SweepKind::TStore => "t_store",
            SweepKind::NBar => "n_bar",
            SweepKind::Alpha0 => "alpha0",
            SweepKind::GammaInt => "gamma_int",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepAxis {
    pub kind: SweepKind,
    /// Resolved values; storage times are in `tau`.
    pub values: Vec<f64>,
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub preset: Option<String>,
    pub params: SystemParams,
    pub alpha0: f64,
    pub n_samples: usize,
    pub n_samples_noiseless: Option<usize>,
    pub seed: u64,
    pub workers: usize,
    /// Storage time in `tau`.
    pub t_store: f64,
    pub dt: f64,
    pub storage: StorageMode,
    pub stratified: bool,
    pub phase_correction: bool,
    pub step_error: bool,
    pub signatures: Vec<Signature>,
    pub grids: GridSettings,
    pub out: PathBuf,
    pub sweep: Vec<SweepAxis>,
}

impl ExperimentConfig {
    /// Merge the preset (named by `flags` or `file`), `file` and `flags`, then resolve.
    pub fn resolve(file: Option<ConfigFile>, flags: ConfigFile) -> Result<Self> {
        let file = file.unwrap_or_default();
        let name = flags.preset.clone().or_else(|| file.preset.clone());
        let base = match &name {
            Some(n) => presets::load(n)?,
            None => ConfigFile::default(),
        };
        let mut merged = base.overlay(file).overlay(flags);
        merged.preset = name;
        Self::from_file(merged)
    }

    pub fn from_file(c: ConfigFile) -> Result<Self> {
        let gamma_int = c.gamma_int.unwrap_or(0.0);
        if !(0.0..1.0).contains(&gamma_int) {
            bail!("gamma_int must lie in [0, 1), got {gamma_int}");
        }
        let n_th = c.n_th.unwrap_or(0.0);
        let params = SystemParams {
            gamma_ext: 1.0 - gamma_int,
            gamma_int,
            gamma_m: c.gamma_m.unwrap_or(catmem::model::REFERENCE_GAMMA_M),
            g_eff: c.g_eff.unwrap_or(catmem::model::REFERENCE_G_EFF),
            n_th_mech: n_th,
            n_init_mech: c.n_init.unwrap_or(0.0),
        };
        params.validate().context("system parameters")?;
        let t_store = c
            .t_store
            .as_ref()
            .map(|t| t.resolve(params.gamma_m))
            .transpose()?
            .unwrap_or(0.0);
        let mut sweep = Vec::new();
        if let Some(v) = &c.sweep_t_store {
            let values = v.iter().map(|t| t.resolve(params.gamma_m)).collect::<Result<_>>()?;
            sweep.push(SweepAxis { kind: SweepKind::TStore, values });
        }
        for (kind, v) in [
            (SweepKind::NBar, &c.sweep_n_bar),
            (SweepKind::Alpha0, &c.sweep_alpha0),
            (SweepKind::GammaInt, &c.sweep_gamma_int),
        ] {
            if let Some(v) = v {
                sweep.push(SweepAxis { kind, values: v.clone() });
            }
        }
        if sweep.len() > 2 {
            bail!("at most two sweep axes are supported, got {}", sweep.len());
        }
        if sweep.iter().any(|a| a.values.is_empty()) {
            bail!("sweep axes must list at least one value");
        }
        let d = GridSettings::default();
        let cfg = Self {
            preset: c.preset,
            params,
            alpha0: c.alpha0.unwrap_or(2.0),
            n_samples: c.n_samples.unwrap_or(4),
            n_samples_noiseless: c.n_samples_noiseless,
            seed: c.seed.unwrap_or(0),
            workers: c.workers.unwrap_or(0),
            t_store,
            dt: c.dt.unwrap_or(0.1),
            storage: c.storage.unwrap_or_default(),
            stratified: c.stratified.unwrap_or(true),
            phase_correction: c.phase_correction.unwrap_or(true),
            step_error: c.step_error.unwrap_or(false),
            signatures: c
                .signatures
                .unwrap_or_else(|| vec![Signature::Negativity, Signature::Variance]),
            grids: GridSettings {
                wigner_extent: c.wigner_extent,
                wigner_step: c.wigner_step.unwrap_or(d.wigner_step),
                quadrature_step: c.quadrature_step.unwrap_or(d.quadrature_step),
                density_extent: c.density_extent,
                density_step: c.density_step.unwrap_or(d.density_step),
                fringe_window: c.fringe_window.unwrap_or(d.fringe_window),
            },
            out: c.out.unwrap_or_else(|| PathBuf::from("out")),
            sweep,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Check every point the config describes, including sweep points.
    pub fn validate(&self) -> Result<()> {
        for p in self.points() {
            p.check_point()?;
        }
        Ok(())
    }

    fn check_point(&self) -> Result<()> {
        self.params.validate().context("system parameters")?;
        self.cat().context("alpha0")?;
        self.sampler().context("sampler")?;
        self.schedule().context("schedule")?;
        Ok(())
    }

    pub fn cat(&self) -> Result<CatParams> {
        Ok(CatParams::real(self.alpha0)?)
    }

    pub fn schedule(&self) -> Result<ProtocolSchedule> {
        Ok(ProtocolSchedule::for_params(&self.params, self.t_store, self.dt)?)
    }

    /// Sample count actually used for this point.
    pub fn effective_samples(&self) -> usize {
        match self.n_samples_noiseless {
            Some(n) if self.params.is_noiseless() => n,
            _ => self.n_samples,
        }
    }

    pub fn sampler(&self) -> Result<SamplerConfig> {
        let s = SamplerConfig {
            cat: self.cat()?,
            n_samples: self.effective_samples(),
            master_seed: self.seed,
            stratified: self.stratified,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn wants(&self, s: Signature) -> bool {
        self.signatures.contains(&s)
    }

    /// Storage time in units of `1 / gamma_m`.
    pub fn gamma_m_t(&self) -> f64 {
        self.params.gamma_m * self.t_store
    }

    /// This config with one sweep coordinate applied.
    pub fn with(&self, kind: SweepKind, v: f64) -> Self {
        let mut c = self.clone();
        match kind {
            SweepKind::TStore => c.t_store = v,
            SweepKind::NBar => c.params.n_th_mech = v,
            SweepKind::Alpha0 => c.alpha0 = v,
            SweepKind::GammaInt => {
                c.params.gamma_int = v;
                c.params.gamma_ext = 1.0 - v;
            }
        }
        c
    }

    /// The single-point configs spanned by the sweep axes, in row-major order
    /// (last axis fastest). A config without sweep axes yields itself.
    pub fn points(&self) -> Vec<ExperimentConfig> {
        let mut pts = vec![Self { sweep: Vec::new(), ..self.clone() }];
        for axis in &self.sweep {
            pts = pts
                .iter()
                .flat_map(|p| axis.values.iter().map(move |&v| p.with(axis.kind, v)))
                .collect();
        }
        pts
    }

    /// Sweep coordinates of every point, matching [`Self::points`].
    pub fn coordinates(&self) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new()];
        for axis in &self.sweep {
            out = out
                .iter()
                .flat_map(|c| {
                    axis.values.iter().map(move |&v| {
                        let mut c = c.clone();
                        c.push(v);
                        c
                    })
                })
                .collect();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn storage_time_forms() {
        let gm = 0.01;
        assert_eq!(StorageTime::Tau(150.0).resolve(gm).unwrap(), 150.0);
        let t = StorageTime::Text("0.02/Gm".into()).resolve(gm).unwrap();
        assert!((t - 2.0).abs() < 1e-12);
        assert_eq!(StorageTime::Text(" 7.5 ".into()).resolve(gm).unwrap(), 7.5);
        assert!(StorageTime::Text("abc/Gm".into()).resolve(gm).is_err());
        assert!(StorageTime::Tau(-1.0).resolve(gm).is_err());
        assert!(StorageTime::Text("1/Gm".into()).resolve(0.0).is_err());
    }

    #[test]
    fn unknown_keys_are_reported_with_position() {
        let err = ConfigFile::parse("alpha0 = 2.0\nalpah0 = 3.0\n").unwrap_err().to_string();
        assert!(err.contains("alpah0"), "{err}");
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn layers_override_in_order() {
        let base = ConfigFile::parse("alpha0 = 2.0\nseed = 1\n").unwrap();
        let top = ConfigFile::parse("seed = 5\n").unwrap();
        let m = base.overlay(top);
        assert_eq!(m.alpha0, Some(2.0));
        assert_eq!(m.seed, Some(5));
    }

    #[test]
    fn resolution_validates_components() {
        let bad = ConfigFile::parse("gamma_int = 1.5\n").unwrap();
        assert!(ExperimentConfig::from_file(bad).is_err());
        let bad = ConfigFile::parse("n_samples = 6\n").unwrap();
        assert!(ExperimentConfig::from_file(bad).is_err());
        let bad = ConfigFile::parse("dt = 0.9\n").unwrap();
        assert!(ExperimentConfig::from_file(bad).is_err());
        let bad = ConfigFile::parse("sweep_n_bar = [1.0, -1.0]\n").unwrap();
        assert!(ExperimentConfig::from_file(bad).is_err());
    }

    #[test]
    fn sweep_points_are_row_major() {
        let c = ConfigFile::parse(
            "sweep_t_store = [\"0.1/Gm\", 100.0]\nsweep_alpha0 = [2.0, 3.0, 4.0]\ngamma_m = 0.001\n",
        )
        .unwrap();
        let cfg = ExperimentConfig::from_file(c).unwrap();
        let pts = cfg.points();
        assert_eq!(pts.len(), 6);
        assert!((pts[0].t_store - 100.0).abs() < 1e-9 && pts[0].alpha0 == 2.0);
        assert_eq!(pts[2].alpha0, 4.0);
        assert_eq!(pts[3].t_store, 100.0);
        assert_eq!(cfg.coordinates()[4], vec![100.0, 3.0]);
        assert!(pts.iter().all(|p| p.sweep.is_empty()));
    }

    #[test]
    fn gamma_int_keeps_total_optical_rate() {
        let cfg = ExperimentConfig::from_file(ConfigFile::parse("gamma_int = 0.05").unwrap()).unwrap();
        assert!((cfg.params.gamma_o() - 1.0).abs() < 1e-15);
        let p = cfg.with(SweepKind::GammaInt, 0.2);
        assert!((p.params.gamma_ext - 0.8).abs() < 1e-15);
    }

    #[test]
    fn noiseless_sample_override() {
        let c = ConfigFile::parse("n_samples = 400\nn_samples_noiseless = 4\n").unwrap();
        let cfg = ExperimentConfig::from_file(c).unwrap();
        assert_eq!(cfg.effective_samples(), 4);
        assert_eq!(cfg.with(SweepKind::NBar, 1.0).effective_samples(), 400);
    }
}
