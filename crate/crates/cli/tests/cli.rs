use std::path::Path;
use std::process::{Command, Output};

fn shilnikov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shilnikov"))
        .args(args)
        .env_remove("SHILNIKOV_SCAN_JOBS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 output")
}

fn field<'a>(report: &'a str, key: &str) -> &'a str {
    report
        .lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(": ")))
        .unwrap_or_else(|| panic!("no `{key}` in report:\n{report}"))
}

#[test]
fn fixed_points_of_the_example() {
    let o = shilnikov(&["--preset", "example", "fixed-points"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let first = text.lines().next().unwrap();
    assert_eq!(first, "L* = (-1.81818181818, -1, -0.545454545455), admissible");
}

#[test]
fn parameters_from_flags_match_the_preset() {
    let flags = shilnikov(&[
        "fixed-points",
        "--tau-l",
        "1",
        "--sigma-l",
        "-0.25",
        "--delta-l",
        "0.3",
        "--tau-r",
        "0.58",
        "--sigma-r",
        "0.38",
        "--delta-r",
        "-1.27",
        "--mu",
        "1",
    ]);
    let preset = shilnikov(&["--preset", "example", "fixed-points"]);
    assert!(flags.status.success());
    assert_eq!(flags.stdout, preset.stdout);
}

#[test]
fn detect_verdict_flips_between_critical_values() {
    let before = stdout(&shilnikov(&["--preset", "example", "detect"]));
    let after = stdout(&shilnikov(&["--preset", "example", "--tau-r", "0.62", "detect"]));
    assert_eq!(field(&before, "verdict"), "CrossedButNoIntersection");
    assert_eq!(field(&after, "verdict"), "IntersectionFound");
    assert_eq!(field(&before, "crossing_index"), "4");
    assert_eq!(field(&before, "home_side"), "left");
}

#[test]
fn missing_parameter_fails_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("orbit.csv");
    let o = shilnikov(&[
        "orbit",
        "--tau-l",
        "1",
        "--sigma-l",
        "-0.25",
        "--delta-l",
        "0.3",
        "--tau-r",
        "0.58",
        "--sigma-r",
        "0.38",
        "--delta-r",
        "-1.27",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("mu"));
    assert!(!out.exists());
}

#[test]
fn computation_error_is_named_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.csv");
    // the left fixed point of the example has a one-dimensional unstable direction only
    let o = shilnikov(&[
        "--preset",
        "example",
        "manifold",
        "--kind",
        "stable",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[WrongSpectralType]"));
    assert!(!out.exists());
}

#[test]
fn usage_error_exits_nonzero() {
    let o = shilnikov(&["--preset", "example", "detect", "--mode", "sideways"]);
    assert!(!o.status.success());
    let o = shilnikov(&[]);
    assert!(!o.status.success());
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn identical_config_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (path, jobs) in [(&a, "1"), (&b, "3")] {
        let o = shilnikov(&[
            "--preset",
            "example",
            "--jobs",
            jobs,
            "basin",
            "--resolution",
            "40",
            "--iters",
            "200",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let bytes = read(&a);
    assert_eq!(bytes, read(&b));
    let text = String::from_utf8(bytes).unwrap();
    assert!(text.starts_with("# basin raster\n# z_level: 0\n"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 40);
}

#[test]
fn dump_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let first = shilnikov(&[
        "--preset",
        "example",
        "--tau-r",
        "0.6",
        "bifurcation",
        "--from",
        "-0.5",
        "--steps",
        "3",
        "--x0=-0.1,0.2,0.3",
        "--dump-config",
    ]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let text = stdout(&first);
    assert!(text.contains("tau_r = 0.6\n"));
    assert!(text.contains("[bifurcation]\n"));
    assert!(text.contains("from = -0.5\n"));
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, &text).unwrap();
    let second = shilnikov(&["--config", cfg.to_str().unwrap(), "bifurcation", "--dump-config"]);
    assert!(second.status.success(), "{}", String::from_utf8_lossy(&second.stderr));
    assert_eq!(stdout(&second), text);
}

#[test]
fn flags_override_config_and_config_overrides_preset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "[params]\ntau_r = 0.62\n\n[detect]\nmode = backward\n").unwrap();
    let c = cfg.to_str().unwrap();
    let from_config = stdout(&shilnikov(&["--preset", "example", "--config", c, "detect", "--dump-config"]));
    assert!(from_config.contains("tau_r = 0.62\n"));
    assert!(from_config.contains("mode = backward\n"));
    let overridden = stdout(&shilnikov(&[
        "--preset",
        "example",
        "--config",
        c,
        "detect",
        "--mode",
        "forward",
        "--tau-r",
        "0.6",
        "--dump-config",
    ]));
    assert!(overridden.contains("tau_r = 0.6\n"));
    assert!(overridden.contains("mode = forward\n"));
}

#[test]
fn config_drives_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    let out = dir.path().join("orbit.csv");
    std::fs::write(
        &cfg,
        format!(
            "# example parameters\n[params]\ntau_l = 1\nsigma_l = -0.25\ndelta_l = 0.3\ntau_r = 0.58\nsigma_r = 0.38\ndelta_r = -1.27\nmu = 1\n\n[orbit]\nsteps = 5\nout = {}\n",
            out.display()
        ),
    )
    .unwrap();
    let o = shilnikov(&["--config", cfg.to_str().unwrap(), "orbit"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(read(&out)).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "index,x,y,z");
    assert_eq!(lines[1], "0,0.3,-0.5,-0.5");
    assert_eq!(lines.len(), 7);
}

#[test]
fn malformed_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "[params]\ntau_l 1\n").unwrap();
    let o = shilnikov(&["--config", cfg.to_str().unwrap(), "fixed-points"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn analysis_subcommands_produce_headers() {
    let cases: [(&[&str], &str); 6] = [
        (&["orbit", "--steps", "3"], "index,x,y,z"),
        (&["interpolate", "--t-end", "1", "--dt", "0.5"], "t,re_x,re_y,re_z,im_x,im_y,im_z"),
        (&["lyapunov", "--iters", "1000", "--transient", "10"], "exponents: "),
        (&["bifurcation", "--steps", "2", "--transient", "10", "--samples", "3", "--no-detect"], "tau_r,sample,x"),
        (&["manifold", "--arc-budget", "5", "--samples", "50"], "piece,iterate,x,y,z"),
        (&["manifold", "--kind", "companion", "--t-end", "1", "--dt", "0.5"], "t,re_x"),
    ];
    for (args, header) in cases {
        let mut full = vec!["--preset", "example"];
        full.extend_from_slice(args);
        let o = shilnikov(&full);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).starts_with(header), "{args:?}");
    }
}

#[test]
fn return_time_report() {
    let o = shilnikov(&["--preset", "example", "return-time"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(field(&text, "side"), "right");
    let root: f64 = field(&text, "least_positive_root").parse().unwrap();
    assert!((root - 4.4332).abs() < 1e-3);

    // a saddle-focus far side has the canonical form and both envelopes
    let o = shilnikov(&[
        "--preset",
        "example",
        "return-time",
        "--side",
        "left",
        "--start",
        "0,0.5,-0.2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("theorem_t0: "));
    assert!(text.contains("f_plus: "));
    assert!(text.contains("  sign_changes: "));
    assert!(text.contains("  t_star: "));
}
