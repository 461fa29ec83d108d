//! External-interface tests: file formats, JSON schemas, CLI behavior and
//! exit codes.

use std::fs;
use std::process::Command;

use ganinfer::estimation::{criterion_for_data, write_criterion_csv};
use ganinfer::experiment::{
    run_consistency_experiment, ExperimentConfig, ProblemSpec, SlacknessSpec, SubsamplingSpec,
};
use ganinfer::grid::ParamGrid;
use ganinfer::objective::Dataset;
use ganinfer::subsampling::{step_down_confidence_set, SubsampleConfig};
use ganinfer::testbed::{
    generate_dataset, logistic_brute_force_solutions, logistic_gan_problem, two_point_grid,
    two_point_problem, LogisticGanSpec, TwoPointSpec,
};
use ganinfer::objective::{population_mc_at, population_surface, MonteCarloFallback};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ganinfer"))
}

fn small_config_json() -> String {
    serde_json::to_string_pretty(&ExperimentConfig {
        problem: ProblemSpec::TwoPoint { mu: 1.0, sigma: 0.2 },
        grid_counts: vec![21, 21],
        sample_sizes: vec![150],
        replications: 4,
        alpha: 0.1,
        slackness: SlacknessSpec::default(),
        subsampling: SubsamplingSpec { beta: 1.0, kappa: 0.5, num_subsamples: 24 },
        master_seed: 99,
        limit_draws: 300,
        covariance_sample_size: 1_000,
        population_draws: None,
        out_dir: None,
    })
    .unwrap()
}

#[test]
fn dataset_csv_files_round_trip() {
    let spec = TwoPointSpec::new(1.0, 0.7).unwrap();
    let problem = two_point_problem(&spec);
    let data = generate_dataset(&problem, 64, 5).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.csv");
    let mut buf = Vec::new();
    data.write_csv(&mut buf).unwrap();
    fs::write(&path, &buf).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("x_0,z_0\n"));
    let back = Dataset::read_csv(text.as_bytes()).unwrap();
    assert_eq!(data, back);
}

#[test]
fn criterion_csv_has_documented_columns() {
    let spec = TwoPointSpec::new(1.0, 0.2).unwrap();
    let problem = two_point_problem(&spec);
    let grid = two_point_grid(&spec, 9).unwrap();
    let data = generate_dataset(&problem, 40, 1).unwrap();
    let bundle = criterion_for_data(&problem, &data, &grid).unwrap();
    let mut buf = Vec::new();
    write_criterion_csv(&bundle, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "flat_index,gamma_0,delta_0,f,phi,q");
    assert_eq!(lines.count(), grid.total_points());
}

#[test]
fn confidence_json_schema_is_stable() {
    let spec = TwoPointSpec::new(1.0, 0.2).unwrap();
    let problem = two_point_problem(&spec);
    let grid = two_point_grid(&spec, 13).unwrap();
    let data = generate_dataset(&problem, 120, 8).unwrap();
    let cfg = SubsampleConfig::new(1.0, 0.5, 20, 4).unwrap();
    let result = step_down_confidence_set(&problem, &data, &grid, 0.2, &cfg).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&result.to_json().unwrap()).unwrap();
    for key in ["alpha", "n", "b", "num_subsamples", "seed", "stopped_reason", "iterations", "final_set_indices"] {
        assert!(doc.get(key).is_some(), "missing key {key}");
    }
    let iterations = doc["iterations"].as_array().unwrap();
    assert!(!iterations.is_empty());
    for it in iterations {
        for key in ["cardinality", "sup_statistic", "quantile"] {
            assert!(it.get(key).is_some());
        }
    }
    let indices = doc["final_set_indices"].as_array().unwrap();
    let as_usize: Vec<usize> =
        indices.iter().map(|v| v.as_u64().unwrap() as usize).collect();
    assert!(as_usize.windows(2).all(|w| w[0] < w[1]), "indices must be sorted");
}

#[test]
fn logistic_population_cross_checks() {
    // Cached brute-force surface vs fresh Monte Carlo at a few points.
    let problem = logistic_gan_problem(0.0, 1.0, LogisticGanSpec::default_box()).unwrap();
    let grid = ParamGrid::new(problem.bounds().clone(), vec![5, 5, 5, 5]).unwrap();
    let cached = population_surface(
        &problem,
        &grid,
        Some(MonteCarloFallback { draws: 20_000, seed: 31 }),
    )
    .unwrap();
    let se = cached.standard_error.as_ref().unwrap();
    let mut rng = ganinfer::rng::rng_from(12, &[]);
    let picks: Vec<usize> = (0..20)
        .map(|_| {
            (ganinfer::rng::uniform_open(&mut rng) * grid.total_points() as f64) as usize
        })
        .collect();
    let thetas: Vec<Vec<f64>> = picks.iter().map(|&i| grid.point(i)).collect();
    let fresh = population_mc_at(&problem, &thetas, 1_000_000, 77).unwrap();
    for (k, &i) in picks.iter().enumerate() {
        let (mean, fresh_se) = fresh[k];
        // At points where the kernel is constant both standard errors vanish
        // and only float summation noise remains; the 1e-9 floor covers the
        // accumulation bound for 1e6-term sums.
        let tol = 4.0 * (se.value(i) * se.value(i) + fresh_se * fresh_se).sqrt() + 1e-9;
        assert!(
            (cached.surface.value(i) - mean).abs() <= tol,
            "point {i}: cached {} vs fresh {mean} (tol {tol})",
            cached.surface.value(i)
        );
    }
}

#[test]
fn logistic_brute_force_is_bit_reproducible() {
    let problem = logistic_gan_problem(0.0, 1.0, LogisticGanSpec::default_box()).unwrap();
    let mc = MonteCarloFallback { draws: 100, seed: 9 };
    let (a, grid_a) =
        logistic_brute_force_solutions(&problem, vec![41, 41, 41, 41], mc).unwrap();
    let (b, _) = logistic_brute_force_solutions(&problem, vec![41, 41, 41, 41], mc).unwrap();
    assert_eq!(a.indices(), b.indices());
    assert!(!a.is_empty());
    assert_eq!(grid_a.total_points(), 41usize.pow(4));
}

#[test]
fn cli_help_documents_columns_and_exit_codes() {
    let out = bin().args(["--help"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for needle in [
        "consistency_rows.csv",
        "coverage_rows.csv",
        "limit_rows.csv",
        "confset.json",
        "d_hausdorff",
        "Exit codes: 0 success, 2 configuration error, 3 numerical error",
    ] {
        assert!(text.contains(needle), "--help missing `{needle}`");
    }
}

#[test]
fn cli_solve_and_confset_produce_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    fs::write(&cfg_path, small_config_json()).unwrap();

    let out = bin()
        .args(["solve", "--config"])
        .arg(&cfg_path)
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("optimal value"));
    assert!(dir.path().join("criterion.csv").exists());
    assert!(dir.path().join("solution_set.csv").exists());

    let out = bin()
        .args(["confset", "--config"])
        .arg(&cfg_path)
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("confset.json")).unwrap())
            .unwrap();
    assert_eq!(json["alpha"], 0.1);
}

#[test]
fn cli_exit_codes_for_config_and_numerical_errors() {
    // Missing config file: configuration error.
    let out = bin().args(["solve", "--config", "/definitely/not/a/file.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Invalid field (alpha = 1.0): configuration error.
    let dir = tempfile::tempdir().unwrap();
    let bad = small_config_json().replace("\"alpha\": 0.1", "\"alpha\": 1.0");
    let bad_path = dir.path().join("bad.json");
    fs::write(&bad_path, bad).unwrap();
    let out = bin().args(["solve", "--config"]).arg(&bad_path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Constant kernel: the limit check hits degenerate solution structure.
    let constant = small_config_json().replace(
        "\"kind\": \"two_point\",\n    \"mu\": 1.0,\n    \"sigma\": 0.2",
        "\"kind\": \"constant\",\n    \"value\": 0.0",
    );
    let const_path = dir.path().join("const.json");
    fs::write(&const_path, &constant).unwrap();
    assert!(constant.contains("constant"), "substitution failed: {constant}");
    let out = bin().args(["limit-check", "--config"]).arg(&const_path).output().unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn cli_runs_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    fs::write(&cfg_path, small_config_json()).unwrap();

    let run = |threads: &str, sub: &str, out: &std::path::Path| {
        let status = bin()
            .args([sub, "--config"])
            .arg(&cfg_path)
            .arg("--threads")
            .arg(threads)
            .arg("--out-dir")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    };

    for sub in ["consistency", "coverage", "limit-check", "confset"] {
        let d1 = dir.path().join(format!("{sub}_t1"));
        let d2 = dir.path().join(format!("{sub}_t3"));
        run("1", sub, &d1);
        run("3", sub, &d2);
        let mut names: Vec<_> = fs::read_dir(&d1)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert!(!names.is_empty());
        for name in names {
            let a = fs::read(d1.join(&name)).unwrap();
            let b = fs::read(d2.join(&name)).unwrap();
            assert_eq!(a, b, "{sub}/{name} differs across thread counts");
        }
    }
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    fs::write(&cfg_path, small_config_json()).unwrap();
    let with_seed = |seed: &str| {
        let out = bin()
            .args(["solve", "--config"])
            .arg(&cfg_path)
            .args(["--seed", seed])
            .output()
            .unwrap();
        assert!(out.status.success());
        String::from_utf8(out.stdout).unwrap()
    };
    let a = with_seed("1");
    let b = with_seed("1");
    let c = with_seed("2");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn library_report_files_match_cli_files() {
    // The CLI is a thin wrapper: its files must equal the library writers'.
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    fs::write(&cfg_path, small_config_json()).unwrap();
    let cli_dir = dir.path().join("cli");
    let status = bin()
        .args(["consistency", "--config"])
        .arg(&cfg_path)
        .arg("--out-dir")
        .arg(&cli_dir)
        .status()
        .unwrap();
    assert!(status.success());

    let cfg: ExperimentConfig =
        serde_json::from_str(&fs::read_to_string(&cfg_path).unwrap()).unwrap();
    let lib_dir = dir.path().join("lib");
    run_consistency_experiment(&cfg).unwrap().write_files(&lib_dir).unwrap();
    for name in ["consistency_rows.csv", "consistency_report.json"] {
        let a = fs::read(cli_dir.join(name)).unwrap();
        let b = fs::read(lib_dir.join(name)).unwrap();
        assert_eq!(a, b);
    }
}
