use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use eikonal_lab::config::RunConfig;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eikonal-lab"))
        .args(args)
        .output()
        .unwrap()
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

const FIELD: &str = "builtin:single_jump:nx=32";

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let mut snaps = Vec::new();
    for _ in 0..2 {
        let o = run(&["run", "all", "--field", FIELD, "--n", "4:4", "--out", out]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        snaps.push(snapshot(dir.path()));
    }
    let (sa, sb) = (&snaps[0], &snaps[1]);
    assert_eq!(sa.keys().collect::<Vec<_>>(), sb.keys().collect::<Vec<_>>());
    for (name, bytes) in sa {
        assert!(bytes == &sb[name], "{name} differs");
    }
    for name in [
        "u.csv",
        "nu.csv",
        "sigma.csv",
        "shocks_n4.csv",
        "pairs_n4.csv",
        "summary_n4.json",
        "report_n4.json",
        "report_positive_n4.json",
        "plan_n4.csv",
    ] {
        assert!(sa.contains_key(name), "missing {name}");
    }
    let report: serde_json::Value = serde_json::from_slice(&sa["report_n4.json"]).unwrap();
    for key in [
        "n",
        "sector_masses",
        "jump_mass",
        "shock_concentration",
        "jump_on_sigma_fraction",
        "nu_on_sigma_fraction",
        "unpaired_residual",
    ] {
        assert!(report.get(key).is_some(), "report lacks {key}");
    }
    let summary: serde_json::Value = serde_json::from_slice(&sa["summary_n4.json"]).unwrap();
    for key in ["n", "e_h", "e_v", "alive_mass", "res_signed", "res_abs"] {
        assert!(summary.get(key).is_some(), "summary lacks {key}");
    }
    let header = |name: &str| {
        String::from_utf8_lossy(&sa[name])
            .lines()
            .next()
            .unwrap()
            .to_string()
    };
    assert_eq!(header("sigma.csv"), "x,y,max_ratio");
    assert_eq!(header("shocks_n4.csv"), "anchor_x,anchor_y,l,s,f");
    assert_eq!(
        header("plan_n4.csv"),
        "src_x,src_y,src_a,dst_x,dst_y,dst_a,mass"
    );
}

#[test]
fn stages_run_from_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        format!(
            "# small run\nfield = builtin:constant\ngrid = 16\nn = 3:3\nout = {}\n",
            out.display()
        ),
    )
    .unwrap();
    for stage in ["kinetic", "represent", "verify", "rectify", "report"] {
        let o = run(&["run", stage, "--config", cfg.to_str().unwrap()]);
        assert!(
            o.status.success(),
            "{stage}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("report_n3.json")).unwrap()).unwrap();
    assert_eq!(report["jump_mass"], 0.0);
    assert_eq!(report["unpaired_residual"], 0.0);
}

#[test]
fn missing_field_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["run", "kinetic", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("field"));
}

#[test]
fn unknown_command_is_a_usage_error() {
    assert_eq!(run(&["run", "paint"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_upstream_artifacts_are_dependency_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    for stage in ["represent", "verify", "rectify", "report"] {
        let o = run(&["run", stage, "--field", FIELD, "--n", "4:4", "--out", d]);
        assert_eq!(
            o.status.code(),
            Some(3),
            "{stage}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn bad_grid_file_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("g.txt");
    std::fs::write(&grid, "2 2 -1 1 -1 1 2pi 0.5\n1 1\n1 1\n").unwrap();
    let o = run(&[
        "run",
        "kinetic",
        "--field",
        grid.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_parse_errors() {
    assert!(RunConfig::parse("n = 4:5\nseed = 3\n").is_ok());
    assert!(RunConfig::parse("n = 0:5").is_err());
    assert!(RunConfig::parse("threads = many").is_err());
    assert!(RunConfig::parse("seed 3").is_err());
}
