//! Named configurations for the reference experiments.
//!
//! All presets use the reference device (`gamma_m = 17.5/170e3`, `G = 0.6`,
//! `dt = 0.1`). Noiseless runs need only the four branch samples; thermal runs
//! use `2e5` trajectories.

use anyhow::{anyhow, Result};

use crate::config::ConfigFile;

const TABLE1: &str = r#"
n_samples = 4
t_store = "0.34657359/Gm"
signatures = ["variance"]
sweep_alpha0 = [1.0, 2.0, 3.0, 4.0]
"#;

const FIG5: &str = r#"
alpha0 = 5.0
n_samples = 4
t_store = "0.02/Gm"
signatures = ["p_p", "p_x", "wigner", "negativity", "fringes"]
"#;

const FIG6: &str = r#"
alpha0 = 5.0
n_samples = 4
t_store = "0.3466/Gm"
signatures = ["p_p", "p_x", "wigner", "negativity", "fringes"]
"#;

const FIG7: &str = r#"
alpha0 = 5.0
n_samples = 4
t_store = "0.02/Gm"
signatures = ["density", "wigner", "negativity"]
"#;

const FIG8: &str = r#"
alpha0 = 5.0
n_samples = 4
t_store = "0.3466/Gm"
signatures = ["density", "wigner", "negativity"]
"#;

const FIG9: &str = r#"
n_samples = 4
step_error = true
signatures = ["negativity"]
sweep_t_store = ["0.0/Gm", "0.02/Gm", "0.05/Gm", "0.1/Gm", "0.15/Gm", "0.2/Gm", "0.25/Gm", "0.3/Gm", "0.3466/Gm"]
sweep_alpha0 = [2.0, 3.0, 4.0, 5.0]
"#;

const FIG10: &str = r#"
n_th = 2.0
n_samples = 200000
step_error = true
signatures = ["negativity"]
sweep_t_store = ["0.0/Gm", "0.01/Gm", "0.02/Gm", "0.04/Gm", "0.06/Gm", "0.08/Gm", "0.0912/Gm"]
sweep_alpha0 = [2.0, 3.0, 4.0, 5.0]
"#;

const FIG11: &str = r#"
alpha0 = 2.0
n_samples = 200000
n_samples_noiseless = 4
signatures = ["negativity"]
sweep_n_bar = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0]
sweep_t_store = ["0.0/Gm", "0.025/Gm", "0.05/Gm", "0.075/Gm", "0.1/Gm", "0.15/Gm", "0.2/Gm", "0.25/Gm", "0.3/Gm"]
"#;

const FIG12: &str = r#"
gamma_int = 0.05
n_samples = 4
step_error = true
signatures = ["negativity"]
sweep_t_store = ["0.0/Gm", "0.02/Gm", "0.05/Gm", "0.1/Gm", "0.15/Gm", "0.2/Gm", "0.25/Gm", "0.3/Gm", "0.3466/Gm"]
sweep_alpha0 = [2.0, 3.0, 4.0, 5.0]
"#;

const FIG12_THERMAL: &str = r#"
gamma_int = 0.05
n_th = 2.0
n_init = 0.5
n_samples = 200000
step_error = true
signatures = ["negativity"]
sweep_t_store = ["0.0/Gm", "0.01/Gm", "0.02/Gm", "0.04/Gm", "0.06/Gm", "0.08/Gm", "0.0912/Gm"]
sweep_alpha0 = [2.0, 3.0, 4.0, 5.0]
"#;

/// Preset names with their TOML text.
pub const PRESETS: [(&str, &str); 10] = [
    ("table1", TABLE1),
    ("fig5", FIG5),
    ("fig6", FIG6),
    ("fig7", FIG7),
    ("fig8", FIG8),
    ("fig9", FIG9),
    ("fig10", FIG10),
    ("fig11", FIG11),
    ("fig12", FIG12),
    ("fig12-thermal", FIG12_THERMAL),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn load(name: &str) -> Result<ConfigFile> {
    let (_, text) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| {
        anyhow!(
            "unknown preset `{name}`; available: {}",
            names().collect::<Vec<_>>().join(", ")
        )
    })?;
    ConfigFile::parse(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    #[test]
    fn every_preset_resolves() {
        for name in names() {
            let flags = ConfigFile {
                preset: Some(name.into()),
                ..Default::default()
            };
            let cfg = ExperimentConfig::resolve(None, flags).unwrap_or_else(|e| panic!("{name}: {e:#}"));
            assert_eq!(cfg.preset.as_deref(), Some(name));
            assert!(!cfg.points().is_empty());
        }
    }

    #[test]
    fn unknown_preset_lists_alternatives() {
        let err = load("fig99").unwrap_err().to_string();
        assert!(err.contains("fig5") && err.contains("table1"));
    }

    #[test]
    fn fig5_storage_time() {
        let flags = ConfigFile {
            preset: Some("fig5".into()),
            ..Default::default()
        };
        let cfg = ExperimentConfig::resolve(None, flags).unwrap();
        assert!((cfg.gamma_m_t() - 0.02).abs() < 1e-12);
        assert_eq!(cfg.alpha0, 5.0);
        assert!(cfg.params.is_noiseless());
    }
}
