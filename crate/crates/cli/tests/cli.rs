//! End-to-end behaviour of the `run` and `sweep` commands on disk.

use std::fs;
use std::path::Path;

use catmem_cli::commands::{cmd_run, cmd_sweep};
use catmem_cli::config::{ConfigFile, ExperimentConfig};
use tempfile::tempdir;

const THERMAL: &str = r#"
alpha0 = 2.0
n_th = 2.0
n_samples = 2000
seed = 7
t_store = "0.02/Gm"
signatures = ["negativity", "p_x"]
"#;

fn config(text: &str, out: &Path, extra: ConfigFile) -> ExperimentConfig {
    let mut flags = extra;
    flags.out = Some(out.to_path_buf());
    ExperimentConfig::resolve(Some(ConfigFile::parse(text).unwrap()), flags).unwrap()
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap()
}

#[test]
fn run_is_reproducible_and_worker_independent() {
    let dir = tempdir().unwrap();
    let mut csv = Vec::new();
    for (i, workers) in [1, 1, 2].into_iter().enumerate() {
        let out = dir.path().join(format!("r{i}"));
        let cfg = config(THERMAL, &out, ConfigFile { workers: Some(workers), ..Default::default() });
        let o = cmd_run(&cfg).unwrap();
        assert!(o.manifest.exists());
        csv.push(read(&out.join("p_x.csv")));
    }
    assert_eq!(csv[0], csv[1]);
    assert_eq!(csv[0], csv[2]);
    assert!(csv[0].starts_with("# manifest_hash: "));
}

#[test]
fn different_seed_changes_output() {
    let dir = tempdir().unwrap();
    let a = cmd_run(&config(THERMAL, &dir.path().join("a"), ConfigFile::default())).unwrap();
    let b = cmd_run(&config(
        THERMAL,
        &dir.path().join("b"),
        ConfigFile { seed: Some(8), ..Default::default() },
    ))
    .unwrap();
    assert_ne!(a.summary["negativity"]["value"], b.summary["negativity"]["value"]);
}

#[test]
fn single_point_sweep_matches_run() {
    let dir = tempdir().unwrap();
    let run = cmd_run(&config(THERMAL, &dir.path().join("run"), ConfigFile::default())).unwrap();
    let text = format!("{THERMAL}sweep_n_bar = [2.0]\n");
    let sweep = cmd_sweep(&config(&text, &dir.path().join("sweep"), ConfigFile::default()), |_, _| {})
        .unwrap();
    assert_eq!(sweep.summary[0]["negativity"], run.summary["negativity"]["value"]);
}

#[test]
fn sweep_resumes_from_checkpoint() {
    let dir = tempdir().unwrap();
    let text = format!("{THERMAL}sweep_alpha0 = [1.5, 2.0, 2.5]\n");
    let cfg = config(&text, dir.path(), ConfigFile::default());
    let first = cmd_sweep(&cfg, |_, _| {}).unwrap();
    let table = read(&first.files[0]);
    assert_eq!(table.lines().count(), 2 + 3);

    // drop the last point and append a torn line, as after an interruption
    let ckpt = dir.path().join("sweep.checkpoint.jsonl");
    let lines: Vec<String> = read(&ckpt).lines().map(str::to_owned).collect();
    fs::write(&ckpt, format!("{}\n{}\n{{\"hash\":", lines[0], lines[1])).unwrap();

    let mut evaluated = Vec::new();
    let second = cmd_sweep(&cfg, |done, total| evaluated.push((done, total))).unwrap();
    assert_eq!(evaluated, vec![(3, 3)]);
    assert_eq!(read(&second.files[0]), table);
}

#[test]
fn checkpoint_from_other_config_is_ignored() {
    let dir = tempdir().unwrap();
    let text = format!("{THERMAL}sweep_alpha0 = [2.0]\n");
    cmd_sweep(&config(&text, dir.path(), ConfigFile::default()), |_, _| {}).unwrap();
    let mut evaluated = 0;
    cmd_sweep(
        &config(&text, dir.path(), ConfigFile { seed: Some(99), ..Default::default() }),
        |_, _| evaluated += 1,
    )
    .unwrap();
    assert_eq!(evaluated, 1);
}

#[test]
fn empty_signature_list_writes_only_manifest() {
    let dir = tempdir().unwrap();
    let text = "alpha0 = 2.0\nsignatures = []\n";
    let o = cmd_run(&config(text, dir.path(), ConfigFile::default())).unwrap();
    assert!(o.files.is_empty());
    let names: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(names, vec!["manifest.json"]);
}

#[test]
fn fig5_preset_shows_interference() {
    let dir = tempdir().unwrap();
    let cfg = ExperimentConfig::resolve(
        None,
        ConfigFile {
            preset: Some("fig5".into()),
            out: Some(dir.path().to_path_buf()),
            ..Default::default()
        },
    )
    .unwrap();
    let o = cmd_run(&cfg).unwrap();
    assert!(o.summary["negativity"]["value"].as_f64().unwrap() > 0.0);
    assert!(o.summary["fringes"]["contrast"].as_f64().unwrap() > 0.0);
    for f in ["p_p.csv", "p_x.csv", "wigner.csv", "manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
}

#[test]
fn run_rejects_sweep_config() {
    let dir = tempdir().unwrap();
    let text = format!("{THERMAL}sweep_alpha0 = [2.0]\n");
    assert!(cmd_run(&config(&text, dir.path(), ConfigFile::default())).is_err());
}

#[test]
fn invalid_values_are_reported() {
    for bad in ["dt = -0.1\n", "gamma_int = 1.5\n", "n_th = -1.0\n", "t_store = \"x/Gm\"\n", "bogus = 1\n"] {
        let parsed = ConfigFile::parse(bad).and_then(|f| ExperimentConfig::from_file(f));
        assert!(parsed.is_err(), "accepted {bad:?}");
    }
}
