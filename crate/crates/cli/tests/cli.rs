use std::process::{Command, Output};

use readchain_cli::{parse_config, run_suite, Report};
use readchain_core::commutant::{series_apply, SeriesWindow};
use readchain_core::{GrowthSequence, ReadBasis, ReadWindows, Window};

fn readchain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_readchain"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn json_reports_are_byte_identical() {
    let args = [
        "run", "--d", "2,4,8,10", "--N", "20", "--cases", "10", "--seed", "3", "--format", "json",
    ];
    let (a, b) = (readchain(&args), readchain(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let report = Report::from_json(&stdout(&a)).unwrap();
    assert_eq!(report.checks.len(), 10);
    assert!(report.checks.windows(2).all(|w| w[0].check < w[1].check));
    assert!(report
        .checks
        .iter()
        .all(|c| c.duration_ms == 0 && c.config_digest == report.config_digest));
    assert!(report.scope.contains("finite windows"));
}

#[test]
fn report_json_round_trips() {
    let cfg = parse_config("d=2,4,8,10\nN=12\ncases=5").unwrap();
    let report = run_suite(&cfg).unwrap();
    let back = Report::from_json(&report.to_json()).unwrap();
    assert_eq!(back, report);
    assert_eq!(back.to_json(), report.to_json());
}

#[test]
fn exit_codes() {
    assert_eq!(
        readchain(&["validate", "--d", "2,4,8,10"]).status.code(),
        Some(0)
    );
    assert_eq!(
        readchain(&["validate", "--d", "2,4,6,10"]).status.code(),
        Some(1)
    );
    assert_eq!(readchain(&["run"]).status.code(), Some(2));
    assert_eq!(
        readchain(&["check-chain", "--d", "2,4,6,10"]).status.code(),
        Some(2)
    );
    assert_eq!(
        readchain(&["check-chain", "--d", "2,4,8,10", "--N", "40"])
            .status
            .code(),
        Some(2)
    );
    let refused = readchain(&["check-chain", "--d", "2,4,8,10", "--N", "12", "--m", "3"]);
    assert_eq!(refused.status.code(), Some(0));
    assert!(stdout(&refused).contains("refused"));
    let err = readchain(&["run"]);
    assert!(String::from_utf8_lossy(&err.stderr).contains("sequence required"));
}

#[test]
fn classify_and_validate_output() {
    let out = readchain(&["classify", "13", "--d", "2,4,8,10"]);
    assert_eq!(stdout(&out), "13: A{n=2, r=1}\n");
    let out = readchain(&["validate", "--d", "2,4,6,10"]);
    assert!(stdout(&out).contains("a_2=6 <= v_1=6"));
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    std::fs::write(&path, "d=2,4,8,10\nN=36\nsuites=ttilde-shift\n").unwrap();
    let p = path.to_str().unwrap();
    let out = readchain(&["run", "--config", p, "--N", "10", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let report = Report::from_json(&stdout(&out)).unwrap();
    assert_eq!(report.config.n, 10);
    assert_eq!(report.checks.len(), 1);
}

#[test]
fn dumped_windows_round_trip_and_solve() {
    let dir = tempfile::tempdir().unwrap();
    let basis = ReadBasis::new(GrowthSequence::from_interleaved(&[2, 4, 8, 10]).unwrap()).unwrap();
    let w = ReadWindows::new(&basis, 24).unwrap();
    for (name, expected) in [
        ("T", w.t().clone()),
        ("Qinv", w.qinv().clone()),
        ("S2", w.s2(2).unwrap()),
    ] {
        let path = dir.path().join(format!("{name}.txt"));
        let out = readchain(&[
            "dump",
            name,
            "--d",
            "2,4,8,10",
            "--N",
            "24",
            "-o",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        let text = std::fs::read_to_string(&path).unwrap();
        let parsed = Window::from_text(&text).unwrap();
        assert_eq!(parsed, expected, "{name}");
        assert_eq!(parsed.to_text(), text);
    }

    let p = SeriesWindow::from_integers(&[2, 0, 3]);
    let path = dir.path().join("r.txt");
    std::fs::write(&path, series_apply(&p, &w).to_text()).unwrap();
    let out = readchain(&[
        "solve",
        path.to_str().unwrap(),
        "--d",
        "2,4,8,10",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["residual_zero"], true);
    assert_eq!(
        v["series"],
        serde_json::json!(["2 * 2^(0)", "0", "3 * 2^(0)"])
    );

    let path = dir.path().join("k.txt");
    readchain(&[
        "dump",
        "K",
        "--d",
        "2,4,8,10",
        "--N",
        "24",
        "-o",
        path.to_str().unwrap(),
    ]);
    let out = readchain(&[
        "solve",
        path.to_str().unwrap(),
        "--d",
        "2,4,8,10",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["failure_witness"]["row"], 0);
    assert_eq!(v["failure_witness"]["col"], 1);
}
