use std::process::{Command, Output};

fn oddm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oddm")).args(args).output().expect("binary runs")
}

const HEADER: &str = "snr_db,iteration,detector,initializer,nmse_db,frames,bits,bit_errors,ber,flops_init,flops_detect,seconds";

#[test]
fn sweep_writes_one_row_per_combo_and_snr() {
    let out = oddm(&["sweep", "--snr", "10,20", "--frames", "2", "--iters", "2", "--no-timing"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], HEADER);
    assert_eq!(lines.len(), 1 + 2 * 3);
    assert!(lines[1..].iter().all(|l| l.contains(",2,") && l.ends_with(",0.0")));
}

#[test]
fn iters_includes_iteration_zero_for_deciding_initializers() {
    let out = oddm(&["iters", "--snr", "18", "--frames", "2", "--iters", "3", "--no-timing"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    let count = |init: &str| rows.iter().filter(|r| r[3] == init).count();
    assert_eq!(count("azi"), 3);
    assert_eq!(count("fmi"), 4);
    assert_eq!(count("dsgi"), 4);
}

#[test]
fn iters_rejects_several_snr_points() {
    let out = oddm(&["iters", "--snr", "10,20", "--frames", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn empty_snr_list_gives_header_only() {
    let out = oddm(&["sweep", "--snr=", "--no-timing"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), HEADER);
}

#[test]
fn config_errors_exit_with_two() {
    assert_eq!(oddm(&["sweep", "--config", "no-such-preset"]).status.code(), Some(2));
    assert_eq!(oddm(&["sweep", "--frames", "0"]).status.code(), Some(2));
    assert_eq!(oddm(&["sweep", "--detector", "zf"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "m = 4\n").unwrap();
    assert_eq!(oddm(&["sweep", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("missing").join("out.csv");
    let out = oddm(&["sweep", "--snr", "10", "--frames", "1", "--out", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn output_is_deterministic_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let run = |workers: &str, name: &str| {
        let path = dir.path().join(name);
        let out = oddm(&[
            "sweep", "--snr", "12,20", "--frames", "6", "--iters", "3", "--seed", "5", "--workers", workers,
            "--no-timing", "--out", path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        std::fs::read(path).unwrap()
    };
    let a = run("1", "a.csv");
    assert_eq!(a, run("1", "b.csv"));
    assert_eq!(a, run("4", "c.csv"));
}

#[test]
fn custom_config_file_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("small.toml");
    let text = "m = 16\nn = 4\nzp = 4\norder = 4\npulse_q = 1\nrolloff = 0.25\ncarrier_hz = 4e9\n\
                subcarrier_spacing_hz = 15e3\nspeed_kmh = 300.0\ndelay_spread_s = 1e-6\nsnr_db = [15.0]\n\
                detector = [\"sic-mrc\"]\ninitializer = [\"dsgi\"]\nmax_iters = 2\nframes = 3\nseed = 9\n";
    std::fs::write(&path, text).unwrap();
    let out = oddm(&["sweep", "--config", path.to_str().unwrap(), "--no-timing"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().starts_with("15.0,2,sic-mrc,dsgi,-inf,3,"));
}

#[test]
fn flops_reports_samples_and_ratios() {
    let out = oddm(&["flops", "--data-rows", "16", "--blocks", "4", "--depth", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 4);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("dsgi_init_d_doubled") && err.contains("detect_d_doubled"));
}

#[test]
fn selftest_passes() {
    let out = oddm(&["selftest"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 6);
}
