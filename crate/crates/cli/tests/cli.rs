//! End-to-end tests of the command-line binary: output shapes, worked
//! examples, exit codes, and byte-level determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_leverage-smile"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Deterministic synthetic return with nonzero variance and sign changes.
fn synthetic_return(t: usize) -> f64 {
    0.01 * (0.7 * t as f64).sin() + 0.002 * (1.3 * t as f64).cos()
}

/// Write `n` days of prices driven by [`synthetic_return`]; returns the
/// price path so panels can be built from bit-identical returns.
fn write_prices(path: &Path, n: usize) -> Vec<f64> {
    let mut prices = vec![100.0f64];
    for t in 0..n - 1 {
        let p = *prices.last().unwrap() * synthetic_return(t).exp();
        prices.push(p);
    }
    let mut text = String::from("date,close\n");
    for (t, p) in prices.iter().enumerate() {
        text.push_str(&format!("d{t:06},{p:.17e}\n"));
    }
    fs::write(path, text).unwrap();
    prices
}

/// Long-format vol panel with Sigma_t = Sigma_{t-1} (1 + gamma(T) r_t),
/// exactly matching the log returns the CLI will compute from `prices`.
fn write_panel(path: &Path, prices: &[f64], gammas: &[(u32, f64)]) {
    let mut text = String::from("date,maturity_days,atm_vol\n");
    let mut vols: Vec<f64> = gammas.iter().map(|_| 0.01).collect();
    for t in 1..prices.len() {
        let r = (prices[t] / prices[t - 1]).ln();
        for (k, &(maturity, gamma)) in gammas.iter().enumerate() {
            vols[k] *= 1.0 + gamma * r;
            text.push_str(&format!("d{t:06},{maturity},{:.17e}\n", vols[k]));
        }
    }
    fs::write(path, text).unwrap();
}

fn read_csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn tmpdir() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

fn p(dir: &tempfile::TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

// ---------------------------------------------------------------------------
// estimate

#[test]
fn estimate_writes_expected_rows_and_reruns_identically() {
    let dir = tmpdir();
    let prices = p(&dir, "prices.csv");
    write_prices(&prices, 400);
    let out1 = p(&dir, "gl1.csv");
    let out2 = p(&dir, "gl2.csv");
    let args = |out: &Path| {
        vec![
            "estimate".to_string(),
            "--prices".into(),
            prices.display().to_string(),
            "--max-lag".into(),
            "10".into(),
            "--bootstrap".into(),
            "100".into(),
            "--seed".into(),
            "5".into(),
            "--out".into(),
            out.display().to_string(),
        ]
    };
    let s1 = bin().args(args(&out1)).status().unwrap();
    assert!(s1.success());
    let rows = read_csv_rows(&out1);
    assert_eq!(rows.len(), 11, "max_lag + 1 data rows");
    assert!(rows.iter().all(|r| r.len() == 5));
    // every numeric field round-trips through the printed representation
    for row in &rows {
        for field in &row[1..4] {
            let v: f64 = field.parse().unwrap();
            assert_eq!(format!("{v:.8e}"), *field);
        }
    }
    let s2 = bin().args(args(&out2)).status().unwrap();
    assert!(s2.success());
    assert_eq!(fs::read(&out1).unwrap(), fs::read(&out2).unwrap());
}

#[test]
fn estimate_rejects_max_lag_zero() {
    let dir = tmpdir();
    let prices = p(&dir, "prices.csv");
    write_prices(&prices, 100);
    let out = run(&[
        "estimate",
        "--prices",
        prices.to_str().unwrap(),
        "--max-lag",
        "0",
        "--out",
        p(&dir, "gl.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error: invalid-parameter:"));
    assert!(!p(&dir, "gl.csv").exists(), "no partial output on failure");
}

// ---------------------------------------------------------------------------
// predict

fn write_constant_gl(path: &Path, max_lag: u32, value: f64) {
    let mut text = String::from("lag,g_l,std_err,sigma,n_obs\n");
    for lag in 0..=max_lag {
        text.push_str(&format!("{lag},{value:.8e},,1.00000000e-2,1000\n"));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn predict_constant_gl_matches_worked_values() {
    let dir = tmpdir();
    let gl = p(&dir, "gl.csv");
    write_constant_gl(&gl, 20, -0.5);
    let out_path = p(&dir, "pred.csv");
    let out = run(&[
        "predict",
        "--gl",
        gl.to_str().unwrap(),
        "--maturities",
        "20",
        "--flat-vol",
        "0.01",
        "--kind",
        "both",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = read_csv_rows(&out_path);
    assert_eq!(rows.len(), 2, "kind=both gives two rows per maturity");
    let by_kind = |kind: &str| -> f64 {
        rows.iter()
            .find(|r| r[3] == kind)
            .unwrap_or_else(|| panic!("missing kind {kind}"))[1]
            .parse()
            .unwrap()
    };
    assert!((by_kind("theory_moneyness") - (-25.0)).abs() < 1e-12 * 25.0);
    assert!((by_kind("theory_strike") - (-12.5)).abs() < 1e-12 * 12.5);
}

#[test]
fn predict_rejects_maturity_beyond_max_lag() {
    let dir = tmpdir();
    let gl = p(&dir, "gl.csv");
    write_constant_gl(&gl, 20, -0.5);
    let out = run(&[
        "predict",
        "--gl",
        gl.to_str().unwrap(),
        "--maturities",
        "30",
        "--flat-vol",
        "0.01",
        "--out",
        p(&dir, "pred.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.starts_with("error: maturity-exceeds-max-lag:"), "{err}");
    assert!(err.contains("20"), "names the lag bound: {err}");
}

#[test]
fn predict_requires_a_vol_source() {
    let dir = tmpdir();
    let gl = p(&dir, "gl.csv");
    write_constant_gl(&gl, 20, -0.5);
    let out = run(&[
        "predict",
        "--gl",
        gl.to_str().unwrap(),
        "--maturities",
        "5",
        "--out",
        p(&dir, "pred.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--flat-vol"));
}

// ---------------------------------------------------------------------------
// regress

#[test]
fn regress_recovers_planted_gamma_exactly() {
    let dir = tmpdir();
    let prices_path = p(&dir, "prices.csv");
    let prices = write_prices(&prices_path, 60);
    let panel = p(&dir, "syn.csv");
    write_panel(&panel, &prices, &[(5, -4.0), (20, -1.5)]);
    let out_path = p(&dir, "reg.csv");
    let out = run(&[
        "regress",
        "--panel",
        panel.to_str().unwrap(),
        "--prices",
        prices_path.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = read_csv_rows(&out_path);
    assert_eq!(rows.len(), 2);
    for row in &rows {
        assert_eq!(row[0], "syn", "ticker from panel file stem");
        let planted = if row[1] == "5" { -4.0 } else { -1.5 };
        let slope: f64 = row[2].parse().unwrap();
        let intercept: f64 = row[3].parse().unwrap();
        assert!((slope - planted).abs() < 1e-10, "slope {slope}");
        assert!(intercept.abs() < 1e-10);
    }
}

#[test]
fn regress_tranche_average_of_two_tickers() {
    let dir = tmpdir();
    let prices_path = p(&dir, "prices.csv");
    let prices = write_prices(&prices_path, 60);
    let pa = p(&dir, "a.csv");
    let pb = p(&dir, "b.csv");
    write_panel(&pa, &prices, &[(20, -2.0)]);
    write_panel(&pb, &prices, &[(20, -4.0)]);
    let out_path = p(&dir, "reg.csv");
    let tranche = p(&dir, "tranche.csv");
    let out = run(&[
        "regress",
        "--panel",
        pa.to_str().unwrap(),
        "--panel",
        pb.to_str().unwrap(),
        "--prices",
        prices_path.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
        "--tranche-out",
        tranche.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = read_csv_rows(&tranche);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "20");
    let gamma: f64 = rows[0][1].parse().unwrap();
    let se: f64 = rows[0][2].parse().unwrap();
    assert!((gamma - (-3.0)).abs() < 1e-9, "gamma {gamma}");
    assert!((se - 1.0 / 2f64.sqrt()).abs() < 1e-9, "se {se}");
    assert_eq!(rows[0][3], "empirical");
}

#[test]
fn regress_disjoint_dates_exits_two() {
    let dir = tmpdir();
    let prices_path = p(&dir, "prices.csv");
    write_prices(&prices_path, 60);
    // panel whose dates never appear in the price file
    let mut text = String::from("date,maturity_days,atm_vol\n");
    for t in 0..40 {
        text.push_str(&format!("x{t:06},20,0.01\n"));
    }
    let panel = p(&dir, "far.csv");
    fs::write(&panel, text).unwrap();
    let out = run(&[
        "regress",
        "--panel",
        panel.to_str().unwrap(),
        "--prices",
        prices_path.to_str().unwrap(),
        "--out",
        p(&dir, "reg.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error: empty-intersection:"));
}

// ---------------------------------------------------------------------------
// simulate

#[test]
fn simulate_null_kernel_oracle_is_flat() {
    let dir = tmpdir();
    let oracle = p(&dir, "oracle.csv");
    let out = run(&[
        "simulate",
        "--amplitude",
        "0",
        "--n-days",
        "20000",
        "--oracle",
        "20",
        "--oracle-out",
        oracle.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = read_csv_rows(&oracle);
    assert_eq!(rows.len(), 1);
    let slope: f64 = rows[0][1].parse().unwrap();
    let se: f64 = rows[0][2].parse().unwrap();
    let theory: f64 = rows[0][3].parse().unwrap();
    assert_eq!(theory, 0.0);
    assert!(slope.abs() < 3.0 * se, "slope {slope} se {se}");
}

#[test]
fn simulate_unstable_kernel_exits_two() {
    let dir = tmpdir();
    let out = run(&[
        "simulate",
        "--amplitude",
        "-0.2",
        "--tau",
        "1000",
        "--out",
        p(&dir, "r.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error: unstable-kernel:"));
}

#[test]
fn simulate_requires_an_output() {
    let out = run(&["simulate", "--n-days", "1000"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--out"));
}

#[test]
fn simulate_config_file_equals_flags() {
    let dir = tmpdir();
    let config = p(&dir, "sim.cfg");
    fs::write(
        &config,
        "# documented default kernel, shorter path\n\
         kernel.form = exponential\n\
         kernel.amplitude = -0.1\n\
         kernel.tau = 10\n\
         kernel.cutoff = 60\n\
         sigma_bar = 0.01\n\
         n_days = 5000\n\
         seed = 9\n\
         vol_floor_frac = 0.1\n",
    )
    .unwrap();
    let from_config = p(&dir, "a.csv");
    let from_flags = p(&dir, "b.csv");
    let o1 = run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        from_config.to_str().unwrap(),
    ]);
    assert!(o1.status.success(), "{}", stderr(&o1));
    let o2 = run(&[
        "simulate",
        "--n-days",
        "5000",
        "--seed",
        "9",
        "--out",
        from_flags.to_str().unwrap(),
    ]);
    assert!(o2.status.success(), "{}", stderr(&o2));
    assert_eq!(
        fs::read(&from_config).unwrap(),
        fs::read(&from_flags).unwrap()
    );
}

#[test]
fn simulate_rejects_unknown_config_key() {
    let dir = tmpdir();
    let config = p(&dir, "sim.cfg");
    fs::write(&config, "kernel.shape = exponential\n").unwrap();
    let out = run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        p(&dir, "r.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("kernel.shape"));
}

// ---------------------------------------------------------------------------
// compare

#[test]
fn compare_emits_six_kinds_with_exact_benchmark_relations() {
    let dir = tmpdir();
    let prices_path = p(&dir, "prices.csv");
    let prices = write_prices(&prices_path, 400);
    let panel = p(&dir, "syn.csv");
    write_panel(&panel, &prices, &[(5, -4.0), (20, -1.5)]);
    let gl = p(&dir, "gl.csv");
    assert!(bin()
        .args([
            "estimate",
            "--prices",
            prices_path.to_str().unwrap(),
            "--max-lag",
            "30",
            "--out",
            gl.to_str().unwrap(),
        ])
        .status()
        .unwrap()
        .success());
    let out_path = p(&dir, "cmp.csv");
    let out = run(&[
        "compare",
        "--gl",
        gl.to_str().unwrap(),
        "--maturities",
        "5,20",
        "--flat-vol",
        "0.01",
        "--panel",
        panel.to_str().unwrap(),
        "--prices",
        prices_path.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = read_csv_rows(&out_path);
    let kinds: std::collections::BTreeSet<&str> = rows.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(
        kinds,
        [
            "empirical",
            "local_vol",
            "sticky_delta",
            "sticky_strike",
            "theory_moneyness",
            "theory_strike",
        ]
        .into_iter()
        .collect()
    );
    let curve = |kind: &str| -> Vec<f64> {
        rows.iter()
            .filter(|r| r[1] == kind)
            .map(|r| r[2].parse().unwrap())
            .collect()
    };
    assert!(curve("sticky_delta").iter().all(|&g| g == 0.0));
    let sticky: Vec<f64> = curve("sticky_strike");
    let local: Vec<f64> = curve("local_vol");
    assert_eq!(local.len(), sticky.len());
    for (l, s) in local.iter().zip(&sticky) {
        // factor 2 is exact in the library; the file carries 9 digits
        assert!((l - 2.0 * s).abs() <= 1e-8 * l.abs(), "{l} vs 2*{s}");
    }
    let text = fs::read_to_string(&out_path).unwrap();
    assert!(text.contains("# tickers: syn"));
    assert!(!text.contains("# absent:"));
}

#[test]
fn compare_without_panel_marks_empirical_absent() {
    let dir = tmpdir();
    let gl = p(&dir, "gl.csv");
    write_constant_gl(&gl, 30, -0.5);
    let out_path = p(&dir, "cmp.csv");
    let out = run(&[
        "compare",
        "--gl",
        gl.to_str().unwrap(),
        "--maturities",
        "5,20",
        "--flat-vol",
        "0.01",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(&out_path).unwrap();
    assert!(text.contains("# absent: empirical"));
    assert!(read_csv_rows(&out_path).iter().all(|r| r[1] != "empirical"));
}

#[test]
fn compare_missing_gl_names_the_prerequisite() {
    let out = run(&["compare", "--maturities", "5", "--out", "/tmp/x.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--gl"));
}
