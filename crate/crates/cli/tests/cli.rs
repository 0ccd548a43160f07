use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"
method = "embedhalluc+labelcalib"
seeds = [1, 2]

[task.synthetic]
size = 400

[finetune]
max_steps = 20
eval_interval = 10

[grid]
lrs = [1e-5]
batches = [4]

[halluc_train]
epochs = 2
"#;

fn embedhalluc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_embedhalluc"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn run_writes_reports_and_report_rerenders_them() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("tiny.toml"), TINY).unwrap();
    let out = embedhalluc(dir.path(), &["run", "--config", "tiny.toml", "--out-dir", "o"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("embedhalluc+labelcalib"));
    for f in ["report.json", "report.csv", "report.txt", "seed-1/step_log.csv", "seed-2/loss_history.csv"] {
        assert!(dir.path().join("o").join(f).exists(), "missing {f}");
    }

    let json = embedhalluc(dir.path(), &["report", "o/report.json", "--format", "json"]);
    assert_eq!(json.status.code(), Some(0));
    let saved = std::fs::read_to_string(dir.path().join("o/report.json")).unwrap();
    assert_eq!(stdout(&json).trim(), saved.trim());

    let both = embedhalluc(dir.path(), &["report", "o/report.json", "o/report.json", "--format", "csv"]);
    assert_eq!(both.status.code(), Some(1));
}

#[test]
fn gen_data_output_drives_a_file_task() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("tiny.toml"), TINY).unwrap();
    let out = embedhalluc(dir.path(), &["gen-data", "--config", "tiny.toml", "--out-dir", "g"]);
    assert_eq!(out.status.code(), Some(0));
    let g = dir.path().join("g");
    assert_eq!(std::fs::read_to_string(g.join("dataset.tsv")).unwrap().lines().count(), 400);

    let out = embedhalluc(
        dir.path(),
        &["finetune", "--config", "g/task.toml", "--method", "eda", "--seed", "3", "--out-dir", "f"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("f/seed-3/step_log.csv").exists());
}

#[test]
fn eda_appends_variants() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.tsv"), "the good film\tpos\nbad movie\tneg\n").unwrap();
    let out = embedhalluc(dir.path(), &["eda", "small.tsv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines.len() > 2);
    assert_eq!(&lines[..2], ["the good film\tpos", "bad movie\tneg"]);
    assert!(lines.iter().all(|l| l.ends_with("\tpos") || l.ends_with("\tneg")));
}

#[test]
fn exit_codes_separate_config_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "seeds = \"one\"\n").unwrap();
    std::fs::write(dir.path().join("bad.tsv"), "x\ty\tz\tw\n").unwrap();

    assert_eq!(embedhalluc(dir.path(), &["run", "--config", "bad.toml"]).status.code(), Some(1));
    assert_eq!(embedhalluc(dir.path(), &["run", "--method", "nope"]).status.code(), Some(1));
    assert_eq!(embedhalluc(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(embedhalluc(dir.path(), &["eda", "bad.tsv"]).status.code(), Some(2));
    assert_eq!(embedhalluc(dir.path(), &["eda", "missing.tsv"]).status.code(), Some(2));
    assert_eq!(embedhalluc(dir.path(), &["--help"]).status.code(), Some(0));
}
