//! End-to-end checks of the installed binary: exit codes, file outputs,
//! and determinism of emitted CSVs.

use std::path::PathBuf;
use std::process::{Command, Output};

fn hybeam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hybeam"))
        .args(args)
        .output()
        .expect("binary should launch")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("hybeam-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn write_smoke_config(name: &str, extra: &str) -> PathBuf {
    let path = tmp(name);
    let body = format!(
        "# smoke-scale system\n\
         bs_ny = 4\nbs_nz = 4\nue_ny = 2\nue_nz = 2\n\
         users = 2\nm_t = 4\nm_r = 2\nn_s = 2\n\
         rho = 2\nbeta = 0.5\ntrials = 5\nseed = 11\n{extra}"
    );
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn validate_accepts_stock_and_rejects_broken_configs() {
    let ok = hybeam(&["validate"]);
    assert!(ok.status.success(), "{:?}", ok);

    let bad = tmp("bad.cfg");
    std::fs::write(&bad, "users = 3\nm_r = 2\nm_t = 4\n").unwrap();
    let out = hybeam(&["validate", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("K·M_r = M_t"), "{stdout}");
}

#[test]
fn unparsable_config_files_exit_2() {
    let junk = tmp("junk.cfg");
    std::fs::write(&junk, "users = lots\n").unwrap();
    let out = hybeam(&["validate", "--config", junk.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sse_smoke_sweep_writes_csv_and_plot_stub() {
    let cfg = write_smoke_config("sse_smoke.cfg", "");
    let out_csv = tmp("sse_smoke.csv");
    let out = hybeam(&[
        "sse",
        "--config",
        cfg.to_str().unwrap(),
        "--snr-min",
        "0",
        "--snr-max",
        "10",
        "--snr-step",
        "10",
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let body = std::fs::read_to_string(&out_csv).unwrap();
    assert!(body.starts_with("# scheme=proposed_full"), "{body}");
    assert!(body.contains("# metric=sse"));
    assert!(body.contains("snr_db,value,stderr,trials"));
    assert!(tmp("sse_smoke.csv.plot.py").exists());

    // Same invocation reproduces the file byte for byte.
    let rerun_csv = tmp("sse_smoke_rerun.csv");
    let rerun = hybeam(&[
        "sse",
        "--config",
        cfg.to_str().unwrap(),
        "--snr-min",
        "0",
        "--snr-max",
        "10",
        "--snr-step",
        "10",
        "--out",
        rerun_csv.to_str().unwrap(),
    ]);
    assert!(rerun.status.success());
    assert_eq!(std::fs::read(&out_csv).unwrap(), std::fs::read(&rerun_csv).unwrap());
}

#[test]
fn ber_smoke_sweep_honors_flag_overrides() {
    let cfg = write_smoke_config("ber_smoke.cfg", "");
    let out_csv = tmp("ber_smoke.csv");
    let out = hybeam(&[
        "ber",
        "--config",
        cfg.to_str().unwrap(),
        "--trials",
        "3",
        "--bits",
        "2000",
        "--snr-min",
        "5",
        "--snr-max",
        "5",
        "--snr-step",
        "1",
        "--seed",
        "99",
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let body = std::fs::read_to_string(&out_csv).unwrap();
    assert!(body.contains("# seed=99"), "{body}");
    assert!(body.contains("# trials=3"), "{body}");
    assert!(body.contains("# metric=ber"), "{body}");
}

#[test]
fn numerical_failures_exit_3_with_trial_context() {
    // A 1x1 user array cannot fill two combiner columns per user.
    let cfg = write_smoke_config("exhaust.cfg", "ue_ny = 1\nue_nz = 1\nn_s = 1\n");
    let out_csv = tmp("exhaust.csv");
    let out = hybeam(&[
        "sse",
        "--config",
        cfg.to_str().unwrap(),
        "--snr-min",
        "0",
        "--snr-max",
        "0",
        "--snr-step",
        "1",
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("trial 0"), "{stderr}");
    assert!(stderr.contains("seed"), "{stderr}");
}

#[test]
fn codebook_export_roundtrips_through_the_library_parser() {
    let cfg = write_smoke_config("codebook.cfg", "");
    let out_csv = tmp("bs_codebook.csv");
    let out = hybeam(&[
        "codebook",
        "--config",
        cfg.to_str().unwrap(),
        "--side",
        "bs",
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let file = std::fs::File::open(&out_csv).unwrap();
    let codebook =
        hybeam::codebook::Codebook::<f64>::import_csv(std::io::BufReader::new(file)).unwrap();
    assert!(codebook.len() > 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains(&format!("wrote {} entries", codebook.len())), "{stdout}");
}
