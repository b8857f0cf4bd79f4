use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn chaoslab(kind: &str, sets: &[&str], out: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_chaoslab"));
    cmd.arg(kind).arg("--out").arg(out);
    for s in sets {
        cmd.arg("--set").arg(s);
    }
    cmd.output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Data rows of a CSV as (header, rows of fields), checking the hash line.
fn read_csv(path: &Path, hash: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), format!("# chaoslab manifest {hash}"));
    let header = lines.next().unwrap().split(',').map(str::to_string).collect::<Vec<_>>();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect::<Vec<_>>()).collect::<Vec<_>>();
    for r in &rows {
        assert_eq!(r.len(), header.len(), "{}", path.display());
    }
    (header, rows)
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

const PERES: &[&str] = &["j=4", "gamma_over_gc=0.5", "n_max=30"];

#[test]
fn uncoupled_spectrum_is_integer_ladder() {
    let tmp = tempfile::tempdir().unwrap();
    let o = chaoslab("spectrum", &["j=1", "gamma=0", "n_max=8", "parity=\"plus\""], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let m = manifest(tmp.path());
    let (header, rows) = read_csv(&tmp.path().join("spectrum.csv"), m["manifest_hash"].as_str().unwrap());
    assert_eq!(header, ["index", "energy", "epsilon"]);
    // Positive parity at gamma = 0: n + m + j even, with m in {-1, 0, 1}.
    let mut expected = Vec::new();
    for n in 0..=8i32 {
        for m in -1..=1i32 {
            if (n + m + 1) % 2 == 0 {
                expected.push(f64::from(n + m));
            }
        }
    }
    expected.sort_by(f64::total_cmp);
    assert!(!rows.is_empty());
    for (k, r) in rows.iter().enumerate() {
        let e: f64 = r[1].parse().unwrap();
        assert!((e - expected[k]).abs() < 1e-9, "level {k}: {e} vs {}", expected[k]);
    }
}

#[test]
fn same_config_gives_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut sets = PERES.to_vec();
    sets.push("cache=false");
    for dir in [a.path(), b.path()] {
        let o = chaoslab("peres", &sets, dir);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for file in ["peres.csv", "peres.gp"] {
        assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap(), "{file}");
    }
    let (ma, mb) = (manifest(a.path()), manifest(b.path()));
    assert_eq!(ma["manifest_hash"], mb["manifest_hash"]);
    assert_eq!(ma["artifacts"], mb["artifacts"]);
}

#[test]
fn cached_spectrum_reproduces_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("shared-cache");
    let mut sets = PERES.to_vec();
    let cache_set = format!("cache_dir=\"{}\"", cache.display());
    sets.push(&cache_set);
    let first = tmp.path().join("first");
    let second = tmp.path().join("second");
    assert!(chaoslab("peres", &sets, &first).status.success());
    let entries = fs::read_dir(&cache).unwrap().map(|e| e.unwrap().file_name()).collect::<Vec<_>>();
    assert_eq!(entries.len(), 1, "{entries:?}");
    assert!(entries[0].to_string_lossy().ends_with(".json"));
    assert!(chaoslab("peres", &sets, &second).status.success());
    assert_eq!(fs::read(first.join("peres.csv")).unwrap(), fs::read(second.join("peres.csv")).unwrap());
}

#[test]
fn manifest_echoes_resolved_config() {
    let tmp = tempfile::tempdir().unwrap();
    let o = chaoslab("peres", PERES, tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let m = manifest(tmp.path());
    assert_eq!(m["tool"], "chaoslab");
    assert_eq!(m["kind"], "peres");
    assert!(m["version"].is_string() && m["core_version"].is_string());
    assert!(m["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
    let cfg = &m["runs"][0]["config"];
    assert_eq!(cfg["j"], 4.0);
    assert_eq!(cfg["n_max"], 30);
    assert_eq!(cfg["gamma"], 0.25);
    assert_eq!(cfg["observables"], true);
    assert_eq!(cfg["window"], 301);
    let conv = &m["runs"][0]["summary"]["convergence"];
    assert!(conv["converged"].as_u64().unwrap() > 0);
    let artifacts = m["artifacts"].as_array().unwrap();
    let files = artifacts.iter().map(|a| a["file"].as_str().unwrap()).collect::<Vec<_>>();
    assert_eq!(files, ["peres.csv", "peres.gp"]);
    let hash = m["manifest_hash"].as_str().unwrap();
    let (header, rows) = read_csv(&tmp.path().join("peres.csv"), hash);
    assert_eq!(header, ["index", "energy", "epsilon", "jz", "jx2", "n"]);
    assert_eq!(artifacts[0]["rows"].as_u64().unwrap() as usize, rows.len());
    assert!(fs::read_to_string(tmp.path().join("peres.gp")).unwrap().starts_with(&format!("# chaoslab manifest {hash}")));
}

#[test]
fn config_file_and_overrides_layer() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "j = 4\ngamma_over_gc = 0.5\nn_max = 20\ngnuplot = false\n").unwrap();
    let out = tmp.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_chaoslab"))
        .args(["spectrum", "--config"])
        .arg(&cfg)
        .args(["--set", "n_max=24", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(manifest(&out)["runs"][0]["config"]["n_max"], 24);
    assert!(!out.join("spectrum.gp").exists());
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: &[(&str, &[&str], &str)] = &[
        ("spectrum", &["j=2", "gamma=0.5", "n_max=10", "bogus=1"], "`bogus`"),
        ("spectrum", &["j=2", "gamma=0.5", "gamma_over_gc=1", "n_max=10"], "gamma_over_gc"),
        ("spectrum", &["j=2", "n_max=10"], "gamma"),
        ("spectrum", &["j=2.3", "gamma=0.5", "n_max=10"], "`j`"),
        ("spectrum", &["j=2", "gamma=0.5", "n_max=\"many\""], "`n_max`"),
        ("spectrum", &["j=2", "gamma=0.5"], "`n_max`"),
        ("poincare", &["j=2", "gamma=0.5"], "`energies`"),
        ("tc-gaps", &["j=2", "gamma=0.5"], "`model`"),
        ("spectrum", &["j=2", "gamma=0.5", "n_max=10", "noequals"], "noequals"),
    ];
    for (kind, sets, needle) in cases {
        let o = chaoslab(kind, sets, tmp.path());
        assert_eq!(o.status.code(), Some(2), "{kind} {sets:?}: {}", stderr(&o));
        assert!(stderr(&o).contains(needle), "{sets:?}: {}", stderr(&o));
    }
}

#[test]
fn unknown_tag_lists_available_tags() {
    let tmp = tempfile::tempdir().unwrap();
    let o = chaoslab("fig99", &[], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    for tag in ["fig1", "fig2", "fig4", "fig5", "fig7", "fig10", "fig13", "spectrum", "adscan"] {
        assert!(err.contains(tag), "{tag} missing from: {err}");
    }
}

#[test]
fn numerical_failures_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let o = chaoslab("adscan", &["j=2", "gamma_over_gc=0.5", "n_max=10"], tmp.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let o = chaoslab("poincare", &["j=10", "gamma_over_gc=2", "energies=[-5.0]"], tmp.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn deep_superradiant_orbits_are_regular() {
    let tmp = tempfile::tempdir().unwrap();
    let o = chaoslab(
        "lyapunov-map",
        &["j=10", "gamma_over_gc=2", "energies=[-2.0]", "seeds=4", "t_end=200"],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let hash = manifest(tmp.path())["manifest_hash"].as_str().unwrap().to_string();
    let (header, rows) = read_csv(&tmp.path().join("lyapunov.csv"), &hash);
    let class = header.iter().position(|h| h == "class").unwrap();
    let drift = header.iter().position(|h| h == "max_drift").unwrap();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert_eq!(r[class], "regular");
        assert!(r[drift].parse::<f64>().unwrap() < 1e-8);
    }
}

#[test]
fn poincare_writes_section_points() {
    let tmp = tempfile::tempdir().unwrap();
    let o = chaoslab("poincare", &["j=10", "gamma_over_gc=2", "energies=[-1.0]", "seeds=3", "t_end=100"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let hash = manifest(tmp.path())["manifest_hash"].as_str().unwrap().to_string();
    let (_, points) = read_csv(&tmp.path().join("poincare.csv"), &hash);
    let (_, seeds) = read_csv(&tmp.path().join("poincare_seeds.csv"), &hash);
    assert_eq!(seeds.len(), 3);
    assert!(points.len() > 10);
}

#[test]
fn tc_gaps_start_at_resonant_crossing() {
    let tmp = tempfile::tempdir().unwrap();
    let o = chaoslab("tc-gaps", &["model=\"tc\"", "j=3", "gamma=0", "lambda_max=8"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let hash = manifest(tmp.path())["manifest_hash"].as_str().unwrap().to_string();
    let (header, rows) = read_csv(&tmp.path().join("tc_lattice.csv"), &hash);
    assert_eq!(header, ["lambda", "index", "energy", "epsilon"]);
    // At zero coupling each block holds the levels lambda - j + m' for the
    // allowed photon splits, all degenerate at omega = omega0.
    for r in &rows {
        let lambda: f64 = r[0].parse().unwrap();
        let e: f64 = r[2].parse().unwrap();
        assert!((e - (lambda - 3.0)).abs() < 1e-9, "{r:?}");
    }
}

#[test]
fn density_and_vmap_run() {
    let tmp = tempfile::tempdir().unwrap();
    let o = chaoslab("dos", &["j=10", "gamma_over_gc=0.5"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["dos.csv", "cumulative.csv", "dos_features.csv"] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
    let v = tmp.path().join("v");
    let o = chaoslab("vmap", &["j=10", "ratios=[0.5]", "energies=[0.0, 1.0]", "samples=300"], &v);
    assert!(o.status.success(), "{}", stderr(&o));
    let hash = manifest(&v)["manifest_hash"].as_str().unwrap().to_string();
    let (header, rows) = read_csv(&v.join("vmap.csv"), &hash);
    assert_eq!(header, ["gamma_over_gc", "epsilon", "v_max", "accepted"]);
    assert_eq!(rows.len(), 2);
    let low: f64 = rows[0][2].parse().unwrap();
    let high: f64 = rows[1][2].parse().unwrap();
    assert!(low <= high);
}
