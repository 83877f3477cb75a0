use std::path::PathBuf;
use std::process::Command;

use apint_harness::experiments::{averaging_error, coarse_error_vs_window, ExperimentName};
use apint_harness::output::{read_series, write_csv, ConstantsFile, SCHEMA_VERSION};
use apint_harness::params::RunParams;
use apint_harness::setup::{make_initial_condition, model, spectral_tail, TAIL_TOLERANCE};
use apint_harness::{plot_spec, run_experiment};

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("apint-harness-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

/// Cheap sweep settings: 16 modes, two slabs.
fn small(out_dir: PathBuf) -> RunParams {
    RunParams {
        nx: 16,
        dt_fine: 1e-3,
        dt_coarse: 0.1,
        t_end: 0.2,
        width: 1.0,
        out_dir,
        ..RunParams::default()
    }
}

#[test]
fn height_mean_matches_grid_quadrature() {
    let p = RunParams::default();
    let m = model(&p, 0.1).unwrap();
    let u = make_initial_condition(&m, p.width).unwrap();
    let n = m.n_modes();
    let grid_mean = (0..n)
        .map(|j| {
            let d = (m.grid_point(j) - std::f64::consts::PI) / p.width;
            (-d * d).exp()
        })
        .sum::<f64>()
        / n as f64;
    let mean = u.component(2)[0];
    assert!((mean.re - grid_mean).abs() < 1e-10);
    assert_eq!(mean.im, 0.0);
    // the periodic trapezoid rule is spectrally accurate for this profile
    let analytic = p.width * std::f64::consts::PI.sqrt() * erf(std::f64::consts::PI / p.width) / std::f64::consts::TAU;
    assert!((grid_mean - analytic).abs() < 1e-10);
}

/// `erf(x)` for arguments where `1 − erf(x) < e^{−x²}` rounds away.
fn erf(x: f64) -> f64 {
    assert!((-x * x).exp() < 1e-17);
    1.0
}

#[test]
fn default_initial_data_is_resolved() {
    let p = RunParams::default();
    let m = model(&p, 1.0).unwrap();
    assert_eq!(m.config().dealias_limit(), 21);
    let tail = spectral_tail(&m, 0.5);
    assert!(tail < TAIL_TOLERANCE, "tail {tail:e}");
    assert!(spectral_tail(&m, 0.05) > TAIL_TOLERANCE);
}

#[test]
fn csv_is_byte_identical_across_runs_and_worker_counts() {
    let p = small(scratch("repro"));
    let a = coarse_error_vs_window(&p).unwrap();
    let b = coarse_error_vs_window(&RunParams { workers: 3, ..p.clone() }).unwrap();
    let (mut x, mut y) = (Vec::new(), Vec::new());
    write_csv(&a, &p, &mut x).unwrap();
    write_csv(&b, &p, &mut y).unwrap();
    assert_eq!(x, y);
    let text = String::from_utf8(x).unwrap();
    let first = text.lines().next().unwrap();
    assert_eq!(
        first,
        format!("# schema=coarse_error_vs_window version={SCHEMA_VERSION} columns=epsilon;window;window_over_dt;coarse_error;status")
    );
    assert!(text.lines().nth(2).unwrap().starts_with("epsilon,window"));
    assert_eq!(text.lines().count(), 3 + 3 * 6);
}

#[test]
fn three_epsilon_sweep_plots_three_series() {
    let dir = scratch("svg");
    let p = small(dir.clone());
    let out = run_experiment(ExperimentName::CoarseErrorVsWindow, &p).unwrap();
    let svg = std::fs::read_to_string(&out.svg).unwrap();
    assert!(svg.starts_with("<?xml") || svg.starts_with("<svg"));
    assert!(svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches(r#"class="series""#).count(), 3);
    assert_eq!(svg.matches(r#"class="legend""#).count(), 3);
    for eps in ["0.01", "0.1", "1"] {
        assert!(svg.contains(&format!("epsilon = {eps}<")), "legend lacks {eps}");
    }
    let series = read_series(&out.csv, &plot_spec(ExperimentName::CoarseErrorVsWindow)).unwrap();
    assert_eq!(series.len(), 3);
    assert!(series.values().all(|s| s.len() == 6));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn missing_column_is_reported() {
    let dir = scratch("cols");
    std::fs::create_dir_all(&dir).unwrap();
    let csv = dir.join("t.csv");
    std::fs::write(&csv, "# schema=x\nepsilon,window\n1,0.1\n").unwrap();
    let err = read_series(&csv, &plot_spec(ExperimentName::CoarseErrorVsWindow)).unwrap_err();
    assert!(err.to_string().contains("coarse_error"), "{err}");
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn oracle_with_zero_window_is_the_plain_solver() {
    let p = RunParams::default();
    let err = averaging_error(&p, 1.0, 0.0).unwrap().unwrap();
    assert!(err < 1e-6, "{err:e}");
}

#[test]
fn halving_epsilon_at_most_halves_the_averaging_error() {
    let p = RunParams::default();
    let a = averaging_error(&p, 1.0, 0.1).unwrap().unwrap();
    let b = averaging_error(&p, 0.5, 0.1).unwrap().unwrap();
    assert!(b >= 0.5 * a * (1.0 - 0.3), "{a:e} -> {b:e}");
}

#[test]
fn prediction_writes_loadable_constants() {
    let dir = scratch("fit");
    let p = small(dir.clone());
    let out = run_experiment(ExperimentName::OptimalWindowPrediction, &p).unwrap();
    let path = out.constants.expect("constants file");
    let c = ConstantsFile::load(&path).unwrap();
    assert!(c.c1 >= 0.0 && c.c2 >= 0.0 && c.c3 >= 0.0 && c.d1 >= 0.0);
    assert_eq!(c.dt_coarse, 0.1);
    c.save(&path).unwrap();
    assert_eq!(ConstantsFile::load(&path).unwrap(), c);
    assert_eq!(out.table.rows.len(), 3);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn cli_runs_a_sweep_and_rejects_bad_flags() {
    let dir = scratch("cli");
    let bin = env!("CARGO_BIN_EXE_apint");
    let out = Command::new(bin)
        .args(["averaging_oracle", "--epsilon", "1", "--nx", "16", "--dt-fine", "1e-3", "--window", "0,0.05"])
        .arg("--out-dir")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = dir.join("averaging_oracle.csv");
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), csv.display().to_string());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.contains("\n1,0,"));
    assert!(dir.join("averaging_oracle.svg").exists());

    let bad = Command::new(bin).args(["coarse_error_vs_window", "--epsilon", "2"]).output().unwrap();
    assert!(!bad.status.success());
    let unknown = Command::new(bin).args(["coarse_error_vs_window", "--bogus"]).output().unwrap();
    assert!(!unknown.status.success());
    let help = Command::new(bin).arg("--help").output().unwrap();
    let help = String::from_utf8(help.stdout).unwrap();
    for sub in ["iterations_vs_window", "coarse_error_vs_window", "iterative_error_vs_window", "optimal_window_prediction", "averaging_oracle"] {
        assert!(help.contains(sub), "help lacks {sub}");
    }
    std::fs::remove_dir_all(dir).unwrap();
}
