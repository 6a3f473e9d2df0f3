use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use linhsic::bootstrap::{run_test, BootstrapConfig};
use linhsic::kernel::KernelSpec;
use linhsic::linreg::DesignSpec;
use linhsic::simulate::{ModelId, ModelSpec};
use linhsic_cli::data::{default_names, load_csv, write_dataset};
use linhsic_cli::CliError;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linhsic"))
        .args(args)
        .output()
        .expect("spawn cli")
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn loads_small_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "d.csv", "y,x1\n1.5,0\n2,1\n-3e-1,2\n");
    let loaded = load_csv(&path, "y", None).unwrap();
    assert_eq!(loaded.dataset.n(), 3);
    assert_eq!(loaded.dataset.dim(), 1);
    assert_eq!(loaded.dataset.response(), &[1.5, 2.0, -0.3]);
    assert_eq!(loaded.predictors, vec!["x1".to_string()]);
}

#[test]
fn load_errors_name_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let blank = write(dir.path(), "blank.csv", "y,x1,x2\n1,2,3\n4,,6\n7,8,9\n1,1,0\n");
    match load_csv(&blank, "y", None) {
        Err(CliError::Input(msg)) => {
            assert!(msg.contains("row 2") && msg.contains("'x1'"), "{msg}")
        }
        other => panic!("{other:?}"),
    }
    let text = write(dir.path(), "text.csv", "y,x1\n1,2\n4,abc\n7,8\n");
    match load_csv(&text, "y", None) {
        Err(CliError::Input(msg)) => assert!(msg.contains("row 2") && msg.contains("abc"), "{msg}"),
        other => panic!("{other:?}"),
    }
    let inf = write(dir.path(), "inf.csv", "y,x1\n1,2\n4,inf\n7,8\n");
    assert!(matches!(load_csv(&inf, "y", None), Err(CliError::Input(_))));
    let ok = write(dir.path(), "ok.csv", "y,x1\n1,2\n4,5\n7,8\n");
    match load_csv(&ok, "response", None) {
        Err(CliError::Input(msg)) => assert!(msg.contains("'response'"), "{msg}"),
        other => panic!("{other:?}"),
    }
    match load_csv(&ok, "y", Some(&["x9".to_string()])) {
        Err(CliError::Input(msg)) => assert!(msg.contains("'x9'"), "{msg}"),
        other => panic!("{other:?}"),
    }
    let short = write(dir.path(), "short.csv", "y,x1,x2\n1,2,3\n4,5,7\n7,8,1\n");
    match load_csv(&short, "y", None) {
        Err(CliError::Input(msg)) => assert!(msg.contains("insufficient"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn csv_round_trip_preserves_the_statistic() {
    let sample = ModelSpec::new(ModelId::Model1, 60).with_seed(5).sample();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m1.csv");
    let names = default_names(4);
    write_dataset(std::fs::File::create(&path).unwrap(), &sample.data, &names).unwrap();
    let reloaded = load_csv(&path, "y", None).unwrap().dataset;
    assert_eq!(reloaded, sample.data);

    let cfg = BootstrapConfig {
        replicates: 50,
        seed: 3,
        parallel_workers: 1,
    };
    let spec = DesignSpec::main_effects(4);
    let (kx, ke) = (KernelSpec::predictor_default(), KernelSpec::residual_default());
    let direct = run_test(&sample.data.standardized().unwrap().0, &spec, &kx, &ke, &cfg, 0.05).unwrap();

    let out = cli(&[
        "test",
        "--input",
        path.to_str().unwrap(),
        "--B",
        "50",
        "--seed",
        "3",
        "--workers",
        "1",
    ]);
    let v = stdout_json(&out);
    let statistic = v["result"]["statistic"].as_f64().unwrap();
    assert!((statistic - direct.statistic).abs() <= 1e-12 * direct.statistic.abs().max(1e-12));
    // serde_json parses floats to within one ulp.
    assert!((v["result"]["p_value"].as_f64().unwrap() - direct.p_value).abs() < 1e-15);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("60 rows") && stderr.contains("x1,x2,x3,x4"), "{stderr}");
}

#[test]
fn collinear_predictors_exit_with_numerical_code() {
    let dir = tempfile::tempdir().unwrap();
    let mut body = String::from("y,x1,x2\n");
    for i in 0..12 {
        let x = i as f64 * 0.7 - 1.0;
        body.push_str(&format!("{},{},{}\n", (i * 7 % 5) as f64, x, 2.0 * x));
    }
    let path = write(dir.path(), "col.csv", &body);
    let out = cli(&["test", "--input", path.to_str().unwrap(), "--B", "20"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("singular_design"));
    assert!(out.stdout.is_empty());
}

#[test]
fn configuration_errors_exit_with_code_two() {
    for args in [
        vec!["test", "--model", "model1", "--alpha", "1.5"],
        vec!["test", "--model", "model1", "--B", "0"],
        vec![
            "test",
            "--model",
            "model1",
            "--kernel-x",
            "median",
            "--bandwidth-x",
            "1",
        ],
        vec!["test", "--model", "model1", "--bandwidth-e", "-2"],
        vec!["test", "--model", "model1", "--design", "x1 + x7"],
        vec!["test", "--input", "/nonexistent/file.csv"],
        vec!["test"],
        vec!["power", "--reps", "2"],
        vec!["simulate", "--model", "model3"],
        vec!["simulate", "--model", "model1", "--d0", "2"],
    ] {
        let out = cli(&args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn completed_test_exits_zero_whatever_the_decision() {
    let v = stdout_json(&cli(&[
        "test", "--model", "model1", "--a", "10", "--B", "99", "--seed", "2",
    ]));
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["result"]["reject"], true);
    assert_eq!(v["result"]["null_draws"].as_array().unwrap().len(), 99);
    assert_eq!(v["result"]["kernel_x"]["bandwidth_rule"]["value"], 5.0);
    assert_eq!(v["design"], serde_json::json!(["1", "x1", "x2", "x3", "x4"]));
    let v = stdout_json(&cli(&["test", "--model", "model1", "--B", "99", "--seed", "2"]));
    assert_eq!(v["result"]["reject"], false);
}

#[test]
fn design_formula_reaches_the_fit() {
    // With the omitted interaction included, the model 1 alternative is no
    // longer misspecified.
    let base = ["test", "--model", "model1", "--a", "10", "--B", "99", "--seed", "2"];
    let wrong = stdout_json(&cli(&base));
    let mut args = base.to_vec();
    args.extend(["--design", "x1 + x2 + x3 + x4 + x1*x2"]);
    let right = stdout_json(&cli(&args));
    assert_eq!(right["result"]["beta_hat"].as_array().unwrap().len(), 6);
    assert!(right["result"]["p_value"].as_f64().unwrap() > wrong["result"]["p_value"].as_f64().unwrap());
}

#[test]
fn simulate_writes_the_seeded_sample() {
    let out = cli(&[
        "simulate", "--model", "model2", "--n", "5", "--seed", "8", "--format", "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[0], "y,x1,x2,x3,x4");
    let expected = ModelSpec::new(ModelId::Model2, 5).with_seed(8).sample().data;
    for (i, line) in lines[1..].iter().enumerate() {
        let values: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(values[0], expected.response()[i]);
        assert_eq!(&values[1..], expected.predictors().row(i).to_vec().as_slice());
    }
}

#[test]
fn power_table_one_has_fourteen_cells() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("power.csv");
    let out = cli(&[
        "power",
        "--table",
        "1",
        "--reps",
        "3",
        "--B",
        "19",
        "--format",
        "csv",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let mut reader = csv::Reader::from_path(&out_path).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(str::to_string).collect();
    assert_eq!(header, linhsic_cli::commands::POWER_CSV_HEADER);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 14);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(&row[0], "model1");
        assert_eq!(&row[1], if i < 7 { "100" } else { "200" });
        let se: f64 = row[7].parse().unwrap();
        let rate: f64 = row[6].parse().unwrap();
        assert!((se - (rate * (1.0 - rate) / 3.0).sqrt()).abs() < 1e-12);
        assert!(!row[9].is_empty());
    }
    assert_eq!(&rows[13][9], "88");
}

#[test]
fn power_custom_grid_is_a_cartesian_product() {
    let v = stdout_json(&cli(&[
        "power", "--model", "model2", "--n", "30,40", "--a", "0,0.5", "--lambda", "0,5,10", "--reps", "2", "--B", "9",
    ]));
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 12);
    assert!(
        rows.iter()
            .all(|r| r["published_percent"].is_null()
                && r["reps"].as_u64().unwrap() + r["aborted"].as_u64().unwrap() == 2)
    );
}

#[test]
fn contrast_reports_both_samples_and_bins() {
    let v = stdout_json(&cli(&["contrast", "--reps", "200", "--bins", "12", "--seed", "4"]));
    let res = v["residual_based"].as_array().unwrap();
    let eta = v["true_error_based"].as_array().unwrap();
    assert_eq!((res.len(), eta.len()), (200, 200));
    assert_eq!(v["histogram"]["edges"].as_array().unwrap().len(), 13);
    let total: u64 = v["histogram"]["residual_based"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_u64().unwrap())
        .sum();
    assert_eq!(total, 200);
    assert!(v["ks_distance"].as_f64().unwrap() > v["ks_critical_01"].as_f64().unwrap());
    assert!(v["mean_residual_based"].as_f64().unwrap() < v["mean_true_error_based"].as_f64().unwrap());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = ["test", "--model", "model2", "--a", "0.3", "--B", "120", "--seed", "11"];
    let a = cli(&args).stdout;
    let b = cli(&args).stdout;
    let mut eight = args.to_vec();
    eight.extend(["--workers", "8"]);
    assert_eq!(a, b);
    assert_eq!(a, cli(&eight).stdout);
    let mut other = args.to_vec();
    other[8] = "12";
    assert_ne!(a, cli(&other).stdout);
}

#[test]
fn size_holds_across_seeds() {
    // Under the null the p-value exceeds 0.05 for most seeds.
    let cfg = |seed| BootstrapConfig {
        replicates: 99,
        seed,
        parallel_workers: 1,
    };
    let spec = DesignSpec::main_effects(4);
    let (kx, ke) = (KernelSpec::predictor_default(), KernelSpec::residual_default());
    let seeds = 60;
    let accepted = (0..seeds)
        .filter(|&s| {
            let data = ModelSpec::new(ModelId::Model1, 100).with_seed(1000 + s).sample().data;
            let data = data.standardized().unwrap().0;
            run_test(&data, &spec, &kx, &ke, &cfg(s), 0.05).unwrap().p_value > 0.05
        })
        .count();
    // At a true size of 5%, P(accepted < 52) is about 0.003.
    assert!(accepted >= 52, "accepted {accepted} of {seeds}");
}
