use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use idionet::experiments::WorldSummary;
use idionet::world::RunRecord;

fn idionet(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_idionet"))
        .current_dir(dir)
        .env_remove("IDIONET_SEED")
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SHORT: [&str; 2] = ["--max-time", "60"];

fn run_short(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "run",
        "--controller",
        "I_D",
        "--world",
        "m1",
        "--seed",
        "7",
        "--out",
        "o",
    ];
    args.extend(SHORT);
    args.extend(extra);
    idionet(dir, &args)
}

#[test]
fn run_writes_record_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_short(dir.path(), &["--b", "80", "--k1", "0.65", "--k2", "0.05"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let json = fs::read_to_string(dir.path().join("o/I_D_D1_7.json")).unwrap();
    let rec = RunRecord::from_json(&json).unwrap();
    assert_eq!(
        (
            rec.config.immune.b,
            rec.config.immune.k1,
            rec.config.immune.k2
        ),
        (80.0, 0.65, 0.05)
    );
    assert_eq!(rec.seed, 7);
    assert!(dir.path().join("o").join(rec.trace_file.unwrap()).is_file());
}

#[test]
fn run_params_are_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_short(dir.path(), &["--b", "50"]);
    assert_eq!(o.status.code(), Some(0));
    let rec =
        RunRecord::from_json(&fs::read_to_string(dir.path().join("o/I_D_D1_7.json")).unwrap())
            .unwrap();
    assert_eq!(rec.config.immune.b, 50.0);
    assert_eq!(rec.config.max_time, 60.0);
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_idionet"))
        .current_dir(dir.path())
        .env("IDIONET_SEED", "11")
        .args([
            "run",
            "--controller",
            "R3",
            "--out",
            "o",
            "--max-time",
            "20",
        ])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("o/R3_D1_11.json").is_file());
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(
        idionet(p, &["run", "--controller", "R10"]).status.code(),
        Some(2)
    );
    assert_eq!(
        idionet(p, &["run", "--controller", "I_D", "--world", "m9"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        idionet(p, &["run", "--controller", "I_D", "--k1", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(idionet(p, &["plot", "missing.json"]).status.code(), Some(2));
    assert_eq!(
        idionet(p, &["replay", "missing.json"]).status.code(),
        Some(2)
    );
    assert_eq!(idionet(p, &["bogus"]).status.code(), Some(2));
    assert_eq!(
        idionet(p, &["campaign", "--config", "nope.toml"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn replay_detects_edits() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(run_short(p, &[]).status.code(), Some(0));
    let record = "o/I_D_D1_7.json";

    let o = idionet(p, &["replay", record]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("MATCH"), "{}", stdout(&o));
    // replaying twice is idempotent
    assert_eq!(stdout(&idionet(p, &["replay", record])), stdout(&o));

    let o = idionet(p, &["replay", record, "--b", "70"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stdout(&o).contains("immune.b: 80.0 -> 70.0"),
        "{}",
        stdout(&o)
    );

    // overwrite the chosen antibody on tick 5
    let trace_path = p.join("o/I_D_D1_7.trace.csv");
    let text = fs::read_to_string(&trace_path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut cols: Vec<String> = lines[6].split(',').map(String::from).collect();
    cols[5] = if cols[5] == "0" {
        "1".into()
    } else {
        "0".into()
    };
    lines[6] = cols.join(",");
    fs::write(&trace_path, lines.join("\n") + "\n").unwrap();
    let o = idionet(p, &["replay", record]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stdout(&o).starts_with("MISMATCH at tick 5"),
        "{}",
        stdout(&o)
    );

    fs::remove_file(&trace_path).unwrap();
    assert_ne!(idionet(p, &["replay", record]).status.code(), Some(0));
}

#[test]
fn campaign_then_plot() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let o = idionet(
        p,
        &[
            "campaign",
            "--controller",
            "I_D,R8",
            "--runs",
            "1",
            "--max-time",
            "200",
            "--seed",
            "3",
            "--jobs",
            "2",
            "--out",
            "c",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let summary: WorldSummary =
        serde_json::from_str(&fs::read_to_string(p.join("c/summary.json")).unwrap()).unwrap();
    assert_eq!(summary.controllers.len(), 2);
    assert_eq!(summary.rng_base_seed, 3);
    let csv = fs::read_to_string(p.join("c/runs.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2);

    let o = idionet(p, &["plot", "c/summary.json", "--out", "charts"]);
    assert_eq!(o.status.code(), Some(0));
    for name in ["fitness.svg", "mu_rate.svg", "significance.svg"] {
        let svg = fs::read_to_string(p.join("charts").join(name)).unwrap();
        assert!(
            svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"),
            "{name}"
        );
    }
    let heat = fs::read_to_string(p.join("charts/significance.svg")).unwrap();
    assert!(heat.contains(">R8<"));
}

#[test]
fn plot_single_controller_and_empty_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let o = idionet(
        p,
        &[
            "campaign",
            "--controller",
            "R2",
            "--runs",
            "1",
            "--max-time",
            "30",
            "--out",
            "c",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        idionet(p, &["plot", "c/summary.json"]).status.code(),
        Some(0)
    );
    let heat = fs::read_to_string(p.join("c/significance.svg")).unwrap();
    assert!(heat.contains("no comparisons"));
    assert!(!heat.contains("<rect x=\"70"));
    assert!(fs::read_to_string(p.join("c/fitness.svg"))
        .unwrap()
        .contains(">R2<"));

    let mut summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(p.join("c/summary.json")).unwrap()).unwrap();
    summary["controllers"] = serde_json::json!([]);
    fs::write(p.join("empty.json"), summary.to_string()).unwrap();
    assert_eq!(idionet(p, &["plot", "empty.json"]).status.code(), Some(1));
}

#[test]
fn validate_map_reports() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let o = idionet(p, &["validate-map", "m1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("3 doors"));

    fs::write(p.join("closed.map"), "wall 0 0 4 0\nwall 4 0 4 4\nwall 4 4 0 4\nwall 0 4 0 0\nwall 2 0 2 4\nstart 1 2 0\ngoal 4 3 1 3.5 1 3.5 3 3 3\n").unwrap();
    assert_eq!(
        idionet(p, &["validate-map", "closed.map"]).status.code(),
        Some(2)
    );
    fs::write(p.join("broken.map"), "wall 0 0 4\n").unwrap();
    assert_eq!(
        idionet(p, &["validate-map", "broken.map"]).status.code(),
        Some(2)
    );
}
