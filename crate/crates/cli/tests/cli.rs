use std::fs;
use std::process::Command;

fn seqlam() -> Command {
    Command::new(env!("CARGO_BIN_EXE_seqlam"))
}

#[test]
fn help_exits_cleanly() {
    let out = seqlam().arg("--help").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for flag in ["--scenario", "--mode", "--levels", "--initial-level", "--steps", "--fraction", "--volume", "--lame-lambda", "--lame-mu", "--load", "--out-dir", "--config"] {
        assert!(text.contains(flag), "missing {flag}");
    }
}

#[test]
fn uniform_study_writes_rows_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let out = seqlam()
        .args(["--scenario", "carrier-plate", "--mode", "uniform", "--levels", "2..6", "--out-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("J* = ") && stdout.contains("p = "), "{stdout}");
    let csv = fs::read_to_string(dir.path().join("carrier-plate_uniform_convergence.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 6);
    let cells: Vec<usize> = rows[1..].iter().map(|r| r.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(cells, vec![16, 64, 256, 1024, 4096]);
    assert!(dir.path().join("carrier-plate_uniform_fit.txt").exists());
    assert_eq!(fs::read_dir(dir.path()).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "vtk")).count(), 5);
}

#[test]
fn adaptive_study_writes_one_snapshot_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# cantilever, short\nscenario = cantilever\nmode = adaptive\ninitial-level = 2\nsteps = 4\n").unwrap();
    let run = |out: &std::path::Path| {
        let o = seqlam().arg("--config").arg(&cfg).arg("--out-dir").arg(out).output().unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&a);
    run(&b);
    let vtk = fs::read_dir(&a).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "vtk")).count();
    assert_eq!(vtk, 5);
    let name = "cantilever_adaptive_convergence.csv";
    let first = fs::read(a.join(name)).unwrap();
    assert_eq!(first, fs::read(b.join(name)).unwrap());
    let text = String::from_utf8(first).unwrap();
    let steps: Vec<usize> = text.lines().skip(1).map(|r| r.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(steps, vec![0, 1, 2, 3, 4]);
}

#[test]
fn invalid_input_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = seqlam().args(["--scenario", "bicycle", "--out-dir"]).arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown scenario"));
    let out = seqlam().args(["--mode", "sideways"]).output().unwrap();
    assert!(!out.status.success());
    let out = seqlam().args(["--volume", "1.5", "--out-dir"]).arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
}
