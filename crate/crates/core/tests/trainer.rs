use std::collections::BTreeSet;

use hfnet::config::{InitScheme, LearnSchedule};
use hfnet::metrics::median;
use hfnet::patterns::{active_set_relative, add_noise, gaussian_1d_with, gaussian_2d};
use hfnet::{Boundary, Model, Pattern, Shape, TrainerConfig, WeightMatrix};

fn line_config(init: InitScheme) -> TrainerConfig {
    TrainerConfig {
        shape: Shape::Line(25),
        boundary: Boundary::Periodic,
        use_firefly: false,
        init,
        ..TrainerConfig::default()
    }
}

fn bump() -> Pattern {
    gaussian_2d(5, 5, 2.0, 2.0, 1.0, 1.0).unwrap().with_label("center")
}

#[test]
fn same_seed_same_model() {
    let config = TrainerConfig::default();
    let a = Model::new(config.clone()).unwrap();
    let b = Model::new(config.clone()).unwrap();
    assert_eq!(a.weights(), b.weights());
    let (pa, pb) = (a.population().unwrap(), b.population().unwrap());
    assert_eq!(pa.flies(), pb.flies());

    let other = Model::new(TrainerConfig {
        master_seed: 2,
        ..config
    })
    .unwrap();
    assert_ne!(a.weights(), other.weights());
}

#[test]
fn handwired_preset_is_one_sixth_within_reach() {
    let model = Model::new(line_config(InitScheme::Handwired { neighbors: 3 })).unwrap();
    let w = model.weights();
    for i in 0..25 {
        for j in 0..25 {
            let d = (i as i64 - j as i64).rem_euclid(25).min((j as i64 - i as i64).rem_euclid(25));
            let expected = if (1..=3).contains(&d) { 1.0 / 6.0 } else { 0.0 };
            assert!((w.get(i, j) - expected).abs() < 1e-15, "w[{i},{j}] = {}", w.get(i, j));
        }
    }
}

#[test]
fn random_init_decays_with_distance() {
    let (mut near, mut far) = (0.0, 0.0);
    for seed in 0..200 {
        let model = Model::new(TrainerConfig {
            master_seed: seed,
            ..line_config(InitScheme::Random { sigma: 1.0 })
        })
        .unwrap();
        let w = model.weights();
        for i in 0..25 {
            near += w.get(i, (i + 1) % 25);
            far += w.get(i, (i + 3) % 25);
        }
    }
    assert!(near > far, "distance-1 mass {near} vs distance-3 mass {far}");
}

#[test]
fn random_init_rows_are_normalized() {
    let model = Model::new(TrainerConfig::default()).unwrap();
    for (i, s) in model.weights().row_sums().iter().enumerate() {
        assert!((s - 1.0).abs() < 1e-12, "row {i} sums to {s}");
        assert_eq!(model.weights().get(i, i), 0.0);
    }
}

#[test]
fn zero_pattern_relaxes_to_uniform() {
    let config = TrainerConfig {
        use_firefly: false,
        ..TrainerConfig::default()
    };
    let mut model = Model::new(config).unwrap();
    let report = model.present_pattern(&Pattern::zeros(Shape::Grid { rows: 5, cols: 5 })).unwrap();
    assert!(report.converged);
    let w = model.weights();
    for i in 0..25 {
        for j in 0..25 {
            let expected = if i == j { 0.0 } else { 1.0 / 25.0 };
            assert!((w.get(i, j) - expected).abs() < 1e-4, "w[{i},{j}] = {}", w.get(i, j));
        }
    }
}

#[test]
fn second_presentation_is_a_warm_start() {
    let mut first = Vec::new();
    let mut second = Vec::new();
    for seed in 0..20 {
        let mut model = Model::new(TrainerConfig {
            master_seed: seed,
            use_firefly: false,
            ..TrainerConfig::default()
        })
        .unwrap();
        first.push(model.present_pattern(&bump()).unwrap().steps as f64);
        second.push(model.present_pattern(&bump()).unwrap().steps as f64);
    }
    assert!(
        median(&second) <= median(&first),
        "second {} vs first {}",
        median(&second),
        median(&first)
    );
}

#[test]
fn correlated_units_bind_more_strongly() {
    let p = bump();
    let mut model = Model::new(TrainerConfig {
        use_firefly: false,
        ..TrainerConfig::default()
    })
    .unwrap();
    assert!(model.present_pattern(&p).unwrap().converged);
    let active = active_set_relative(&p, model.config().theta_act);
    let w = model.weights();
    let (mut inner, mut inner_n, mut outward, mut outward_n) = (0.0, 0, 0.0, 0);
    for i in active.iter() {
        for j in 0..25 {
            if i == j {
                continue;
            }
            if active.contains(j) {
                inner += w.get(i, j);
                inner_n += 1;
            } else {
                outward += w.get(i, j);
                outward_n += 1;
            }
        }
    }
    let (inner, outward) = (inner / inner_n as f64, outward / outward_n as f64);
    assert!(inner > outward, "active-active {inner} vs active-inactive {outward}");
}

#[test]
fn untrained_zero_weights_return_the_cue() {
    let model = Model::new(TrainerConfig::default())
        .unwrap()
        .with_weights(WeightMatrix::zeros(25))
        .unwrap()
        .with_inhibition(None)
        .unwrap();
    let cue = add_noise(&bump(), 0.2, 5).unwrap();
    let r = model.recall(&cue).unwrap();
    assert!((r.metrics.cosine - 1.0).abs() < 1e-12);
    for (a, b) in r.output.values().iter().zip(cue.values()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn zero_cue_is_rejected() {
    let model = Model::new(TrainerConfig::default()).unwrap();
    let err = model.recall(&Pattern::zeros(Shape::Grid { rows: 5, cols: 5 }));
    assert!(matches!(err, Err(hfnet::Error::Annihilated)));
    let wrong = gaussian_2d(4, 4, 1.0, 1.0, 1.0, 1.0).unwrap();
    assert!(matches!(model.recall(&wrong), Err(hfnet::Error::Shape(_))));
}

#[test]
fn empty_mask_completion_is_recall() {
    let mut model = Model::new(TrainerConfig::default()).unwrap();
    model.present_pattern(&bump()).unwrap();
    let original = bump();
    let c = model.complete(&original, &BTreeSet::new()).unwrap();
    let r = model.recall(&original).unwrap();
    assert_eq!(c.output, r.output);
    assert_eq!(c.metrics, r.metrics);
    assert!(!c.low_confidence);
}

#[test]
fn masking_the_whole_active_set_is_low_confidence() {
    let mut model = Model::new(TrainerConfig::default()).unwrap();
    model.present_pattern(&bump()).unwrap();
    let original = bump();
    let masked: BTreeSet<usize> = active_set_relative(&original, model.config().theta_act)
        .iter()
        .collect();
    let c = model.complete(&original, &masked).unwrap();
    assert!(c.low_confidence);
    assert!(c.metrics.cosine.is_finite());
}

#[test]
fn best_match_names_the_nearest_template() {
    let a = gaussian_2d(5, 5, 0.5, 0.5, 1.0, 1.0).unwrap().with_label("a");
    let b = gaussian_2d(5, 5, 3.5, 3.5, 1.0, 1.0).unwrap().with_label("b");
    let model = Model::new(TrainerConfig::default())
        .unwrap()
        .with_weights(WeightMatrix::zeros(25))
        .unwrap()
        .with_templates(vec![a.clone(), b.clone()]);
    assert_eq!(model.recall(&b).unwrap().metrics.best_match_label.as_deref(), Some("b"));
    let m = model.recall(&a).unwrap().metrics;
    assert_eq!(m.best_match_label.as_deref(), Some("a"));
    assert_eq!(m.template_cosines.len(), 2);
}

#[test]
fn weights_stay_admissible_after_every_presentation() {
    let mut model = Model::new(TrainerConfig::default()).unwrap();
    let patterns = [
        bump(),
        gaussian_2d(5, 5, 0.0, 4.0, 1.0, 1.0).unwrap(),
        gaussian_2d(5, 5, 4.0, 1.0, 1.0, 1.0).unwrap(),
    ];
    for p in patterns.iter().cycle().take(6) {
        model.present_pattern(p).unwrap();
        let w = model.weights();
        for i in 0..25 {
            assert_eq!(w.get(i, i), 0.0);
            for j in 0..25 {
                assert!((0.0..=model.config().plasticity.v).contains(&w.get(i, j)));
            }
        }
    }
    assert_eq!(model.history().len(), 6);
    assert_eq!(model.templates().len(), 3);
}

#[test]
fn after_convergence_schedule_trains() {
    let mut model = Model::new(TrainerConfig {
        learn_schedule: LearnSchedule::AfterConvergence,
        ..TrainerConfig::default()
    })
    .unwrap();
    let report = model.present_pattern(&bump()).unwrap();
    assert!(report.steps > 0);
}

#[test]
fn shifted_copies_train_a_circulant_matrix() {
    let config = TrainerConfig {
        epochs: 2,
        ..line_config(InitScheme::Random { sigma: 1.0 })
    };
    let patterns: Vec<Pattern> = (0..25)
        .map(|c| gaussian_1d_with(25, c as f64, 1.0, Boundary::Periodic).unwrap())
        .collect();
    let mut model = Model::new(config).unwrap();
    model.train(&patterns).unwrap();
    let w = model.weights();
    let mut worst: f64 = 0.0;
    for i in 1..25 {
        for k in 0..25 {
            let shifted = w.get(i, (i + k) % 25);
            let reference = w.get(0, k);
            worst = worst.max((shifted - reference).abs());
        }
    }
    assert!(worst <= 0.1, "max shifted-row deviation {worst}");
}

#[test]
fn save_and_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut model = Model::new(TrainerConfig::default()).unwrap();
    model.present_pattern(&bump()).unwrap();
    model.save(dir.path()).unwrap();
    let loaded = Model::load(dir.path()).unwrap();
    assert_eq!(loaded.weights(), model.weights());
    assert_eq!(loaded.inhibition(), model.inhibition());
    assert_eq!(loaded.templates(), model.templates());
    assert_eq!(
        loaded.population().unwrap().flies(),
        model.population().unwrap().flies()
    );
    let cue = add_noise(&bump(), 0.2, 9).unwrap();
    assert_eq!(loaded.recall(&cue).unwrap(), model.recall(&cue).unwrap());
}
