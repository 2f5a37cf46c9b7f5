use std::fs;
use std::path::Path;

use hfnet::dynamics::load_matrix_csv;
use hfnet::experiments::{builtin_digits, digit_templates, run_experiment, Experiment};
use hfnet::firefly::FireflyPopulation;
use hfnet::metrics::median;
use hfnet::patterns::{load_image, save_image};
use hfnet::{Error, Shape, SwarmParams};

#[test]
fn names_round_trip() {
    for e in Experiment::ALL {
        assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        assert_eq!(e.to_string(), e.name());
    }
    assert!(matches!("evolve2d".parse::<Experiment>(), Err(Error::Config(_))));
}

#[test]
fn evolve1d_writes_the_weight_figures() {
    let dir = tempfile::tempdir().unwrap();
    let config = Experiment::Evolve1D.preset();
    let report = run_experiment(&config, Experiment::Evolve1D, dir.path()).unwrap();
    for name in ["w_matrix_initial.csv", "w_matrix_final.csv", "weight_row_12.csv", "report.txt"] {
        assert!(dir.path().join(name).is_file(), "{name} missing");
    }
    assert!(report.get("neighbor_ratio").unwrap() > 2.0);
    assert_eq!(report.get("ordering_violations"), Some(0.0));

    let row = fs::read_to_string(dir.path().join("weight_row_12.csv")).unwrap();
    let lines: Vec<&str> = row.lines().collect();
    assert_eq!(lines[0], "j,weight");
    assert_eq!(lines.len(), 26);
    let w = load_matrix_csv(dir.path().join("w_matrix_final.csv")).unwrap();
    let w12: f64 = lines[14].split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(w12, w[(12, 13)]);

    let text = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(text.starts_with("experiment = evolve1d\n"));
    assert!(text.lines().any(|l| l.starts_with("neighbor_ratio = ")));
}

fn reload(dir: &Path) -> usize {
    let mut checked = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let ext = path.extension().unwrap().to_string_lossy().into_owned();
        if name.starts_with("w_matrix") || name.starts_with("inhibition") {
            if ext == "csv" {
                let m = load_matrix_csv(&path).unwrap();
                assert_eq!(m.nrows(), m.ncols(), "{name}");
            } else {
                load_image(&path).unwrap();
            }
        } else if name.starts_with("population") {
            let pop = FireflyPopulation::load_csv(&path, SwarmParams::default()).unwrap();
            assert!(!pop.is_empty());
        } else if name.starts_with("template") || name.starts_with("cue") || name.starts_with("output") {
            let p = load_image(&path).unwrap();
            if ext == "csv" {
                // CSV patterns are exact; re-saving gives the same bytes.
                let copy = dir.join("resaved.tmp");
                let raw = hfnet::patterns::load_image_raw(&path).unwrap();
                save_image(&raw, &copy).unwrap();
                assert_eq!(fs::read(&copy).unwrap(), fs::read(&path).unwrap(), "{name}");
                fs::remove_file(copy).unwrap();
            }
            assert!((p.norm() - 1.0).abs() < 1e-12);
        } else {
            continue;
        }
        checked += 1;
    }
    checked
}

#[test]
fn emitted_files_reload() {
    let root = tempfile::tempdir().unwrap();
    for e in [Experiment::Recall2D, Experiment::Complete, Experiment::Evolve1D] {
        let dir = root.path().join(e.name());
        let report = run_experiment(&e.preset(), e, &dir).unwrap();
        for f in &report.files {
            assert!(dir.join(f).is_file(), "{} listed but missing", f.display());
        }
        assert!(reload(&dir) >= 3, "{e}: too few loadable artifacts");
    }
}

#[test]
fn builtin_digits_are_distinct_11x11_templates() {
    let digits = builtin_digits();
    assert_eq!(digits.len(), 2);
    for d in &digits {
        assert_eq!(d.shape(), Shape::Grid { rows: 11, cols: 11 });
        assert!((d.norm() - 1.0).abs() < 1e-12);
    }
    assert_eq!(digits[0].label(), Some("0"));
    assert_eq!(digits[1].label(), Some("1"));
    assert!(digits[0].cosine(&digits[1]) < 0.5);
}

#[test]
fn digit_directory_overrides_builtins() {
    let dir = tempfile::tempdir().unwrap();
    let digits = builtin_digits();
    save_image(&digits[1], dir.path().join("a_one.pgm")).unwrap();
    save_image(&digits[0], dir.path().join("b_zero.csv")).unwrap();
    fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let mut config = Experiment::Digits.preset();
    config.scenario.digits_dir = Some(dir.path().to_path_buf());
    let loaded = digit_templates(&config).unwrap();
    assert_eq!(loaded[0].label(), Some("a_one"));
    assert_eq!(loaded[1].label(), Some("b_zero"));

    config.pattern_count = 3;
    assert!(matches!(digit_templates(&config), Err(Error::Config(_))));

    config.pattern_count = 2;
    config.shape = Shape::Grid { rows: 5, cols: 5 };
    assert!(matches!(digit_templates(&config), Err(Error::Shape(_))));
}

#[test]
fn fused_cue_recalls_both_components_alike() {
    let root = tempfile::tempdir().unwrap();
    let asymmetry: Vec<f64> = (0..20u64)
        .map(|seed| {
            let mut config = Experiment::Fused.preset();
            config.master_seed = seed;
            let dir = root.path().join(seed.to_string());
            run_experiment(&config, Experiment::Fused, dir)
                .unwrap()
                .get("asymmetry")
                .unwrap()
        })
        .collect();
    let m = median(&asymmetry);
    assert!(m <= 0.15, "median |cos(a) - cos(b)| = {m}");
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let err = run_experiment(&Experiment::Evolve1D.preset(), Experiment::Evolve1D, blocker.join("out"));
    assert!(matches!(err, Err(Error::Io { .. })));
}
