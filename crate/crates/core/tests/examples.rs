use pptree::bench::{
    error_rate, holdout_indices, load_csv, run_benchmark, BenchSpec, DatasetEntry, DatasetSource,
    ModelEntry,
};
use pptree::projection::optimal_projection;
use pptree::simulate::{mixture_components, outlier_count, simulate, SimSpec};
use pptree::tree::{fit, fit_mod1, fit_original};
use pptree::{ClassId, Dataset, Execution, FitConfig, IndexConfig, TreeNode, Variant};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn training_error(data: &Dataset, variant: Variant, cfg: &FitConfig) -> f64 {
    let tree = fit(data, variant, cfg).unwrap();
    error_rate(&tree.predict_dataset(data).unwrap(), data.labels()).unwrap()
}

fn angle_deg(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    // projections are defined up to sign
    (dot.abs() / (na * nb)).min(1.0).acos().to_degrees()
}

#[test]
fn basic_three_classes_get_one_leaf_each() {
    let data = simulate(&SimSpec::basic(3, 300, 1)).unwrap();
    for variant in [Variant::Original, Variant::Mod1] {
        let tree = fit(&data, variant, &FitConfig::default()).unwrap();
        assert_eq!(tree.n_internal(), 2);
        let mut labels = tree.root.leaf_labels();
        labels.sort_unstable();
        assert_eq!(labels, [1, 2, 3]);
    }
    // the mean rule puts the first cut halfway between class 1 and the merged
    // {2, 3} group, 1.5 units from class 2; the neighbour-only cut is exact
    assert!(training_error(&data, Variant::Original, &FitConfig::default()) <= 0.03);
    let tree = fit_mod1(&data, &FitConfig::default()).unwrap();
    for (i, row) in data.rows().enumerate() {
        assert_eq!(tree.predict(row).unwrap(), data.label(i));
    }
}

#[test]
fn wider_chain_is_separated_exactly_by_original() {
    let spec = SimSpec {
        separation: 8.0,
        ..SimSpec::basic(3, 300, 1)
    };
    let data = simulate(&spec).unwrap();
    let tree = fit_original(&data, &FitConfig::default()).unwrap();
    assert_eq!(tree.n_leaves(), 3);
    assert_eq!(
        training_error(&data, Variant::Original, &FitConfig::default()),
        0.0
    );
    for (i, row) in data.rows().enumerate() {
        assert_eq!(tree.predict(row).unwrap(), data.label(i));
    }
}

#[test]
fn two_class_projection_follows_the_diagonal() {
    let data = simulate(&SimSpec::basic(2, 400, 3)).unwrap();
    let tree = fit_original(&data, &FitConfig::default()).unwrap();
    assert_eq!(tree.n_internal(), 1);
    let TreeNode::Internal { alpha, .. } = &tree.root else {
        panic!("leaf root")
    };
    let diag = [1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()];
    assert!(angle_deg(alpha, &diag) < 5.0, "alpha {alpha:?}");
}

#[test]
fn shifted_isotropic_groups_project_on_the_first_axis() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut features = vec![];
    let mut labels = vec![];
    for (g, mx) in [(1, 0.0), (2, 3.0)] {
        for _ in 0..200 {
            let e: [f64; 2] = [
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            ];
            features.extend([mx + e[0], e[1]]);
            labels.push(g);
        }
    }
    let data = Dataset::new(features, 2, labels).unwrap();
    let p = optimal_projection(&data, &IndexConfig::lda()).unwrap();
    assert!(
        angle_deg(&p.alpha, &[1.0, 0.0]) < 5.0,
        "alpha {:?}",
        p.alpha
    );
    assert!(p.alpha[0] > 0.0);
}

#[test]
fn mod1_centres_the_first_cut_between_neighbours() {
    let spec = SimSpec::basic(3, 300, 5);
    let data = simulate(&spec).unwrap();
    let cut = |variant| {
        let t = fit(&data, variant, &FitConfig::default()).unwrap();
        let TreeNode::Internal {
            alpha,
            c,
            left,
            right,
            ..
        } = t.root
        else {
            panic!()
        };
        (alpha, c, left.leaf_labels(), right.leaf_labels())
    };
    let (alpha, c, left, right) = cut(Variant::Mod1);
    // class means sit at -6, 0, 6 along the diagonal; neighbours meet at +-3
    let along = (alpha[0] + alpha[1]) / 2f64.sqrt();
    let gap = if left.len() == 1 { -3.0 } else { 3.0 };
    let mod1_miss = (c - along * gap).abs();
    let (alpha_o, c_o, _, _) = cut(Variant::Original);
    let along_o = (alpha_o[0] + alpha_o[1]) / 2f64.sqrt();
    let orig_miss = (c_o - along_o * gap).abs();
    assert_eq!(left.len() + right.len(), 3);
    assert!(
        mod1_miss < orig_miss,
        "mod1 {mod1_miss} original {orig_miss}"
    );
    assert!(mod1_miss < 0.5);
}

#[test]
fn mod1_matches_original_with_two_classes() {
    let data = simulate(&SimSpec::basic(2, 200, 11)).unwrap();
    let a = fit_original(&data, &FitConfig::default()).unwrap();
    let b = fit_mod1(&data, &FitConfig::default()).unwrap();
    assert_eq!(a.root, b.root);
}

#[test]
fn outlier_cluster_defeats_single_cuts_but_not_mod2() {
    let spec = SimSpec::outlier(2, 300, 0.15, 3);
    let data = simulate(&spec).unwrap();
    let share = outlier_count(&spec) as f64 / spec.n as f64;
    let orig = training_error(&data, Variant::Original, &FitConfig::default());
    let mod2 = training_error(&data, Variant::Mod2, &FitConfig::default());
    assert!(
        orig >= share - 0.02,
        "original {orig}, outlier share {share}"
    );
    assert!(mod2 <= 0.02, "mod2 {mod2}");
}

#[test]
fn tiny_outlier_fraction_closes_the_gap() {
    let mut gaps = vec![];
    for seed in 1..=10 {
        let data = simulate(&SimSpec::outlier(2, 300, 0.01, seed)).unwrap();
        let orig = training_error(&data, Variant::Original, &FitConfig::default());
        let mod2 = training_error(&data, Variant::Mod2, &FitConfig::default());
        gaps.push(orig - mod2);
    }
    let mean_gap = gaps.iter().sum::<f64>() / gaps.len() as f64;
    assert!(mean_gap < 0.02, "gap {mean_gap}");
}

#[test]
fn flanked_class_scenario() {
    // class 2 appears on both sides of class 1 along the first projection
    let data = simulate(&SimSpec::outlier(2, 600, 0.15, 8)).unwrap();
    assert!(training_error(&data, Variant::Mod2, &FitConfig::default()) <= 0.02);
    assert!(training_error(&data, Variant::Original, &FitConfig::default()) >= 0.05);
}

#[test]
fn axis_aligned_data_needs_one_axis_cut() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut features = vec![];
    let mut labels = vec![];
    for (g, x) in [(1, -4.0), (2, 4.0)] {
        for _ in 0..100 {
            let e: [f64; 2] = [
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            ];
            features.extend([x + e[0], 5.0 * e[1]]);
            labels.push(g);
        }
    }
    let data = Dataset::new(features, 2, labels).unwrap();
    let cfg = FitConfig {
        max_depth: 1,
        ..FitConfig::default()
    };
    assert_eq!(training_error(&data, Variant::AxisBaseline, &cfg), 0.0);
}

#[test]
fn oblique_data_favours_projection_at_depth_one() {
    let data = simulate(&SimSpec::basic(2, 400, 2)).unwrap();
    let cfg = FitConfig {
        max_depth: 1,
        ..FitConfig::default()
    };
    assert!(training_error(&data, Variant::AxisBaseline, &cfg) >= 0.10);
    assert!(training_error(&data, Variant::Original, &cfg) <= 0.02);
}

#[test]
fn mixture_overlap_raises_bayes_error() {
    let bayes = |overlap: f64| {
        let mut total = 0.0;
        for seed in 1..=20 {
            let spec = SimSpec::mixsim(3, 600, overlap, seed);
            let data = simulate(&spec).unwrap();
            let comps = mixture_components(&spec).unwrap();
            let pred: Vec<ClassId> = data.rows().map(|x| comps.most_likely(x)).collect();
            total += error_rate(&pred, data.labels()).unwrap();
        }
        total / 20.0
    };
    let low = bayes(0.05);
    let high = bayes(0.4);
    assert!(high > low, "overlap 0.4 gives {high}, 0.05 gives {low}");
}

#[test]
fn zero_overlap_mixture_is_easy() {
    let data = simulate(&SimSpec::mixsim(3, 300, 0.0, 4)).unwrap();
    let best = Variant::ALL
        .iter()
        .map(|&v| training_error(&data, v, &FitConfig::default()))
        .fold(f64::INFINITY, f64::min);
    assert!(best <= 0.05, "best training error {best}");
}

#[test]
fn simulated_csv_reloads_identically() {
    let dir = tempfile::tempdir().unwrap();
    for spec in [
        SimSpec::basic(3, 90, 1),
        SimSpec::outlier(2, 80, 0.2, 1),
        SimSpec::mixsim(4, 100, 0.1, 1),
    ] {
        let data = simulate(&spec).unwrap();
        let path = dir.path().join("d.csv");
        data.save_csv(&path).unwrap();
        let back = load_csv(&path, "label").unwrap();
        assert_eq!(back, data, "{spec:?}");
    }
}

#[test]
fn holdout_floor_convention() {
    let h = holdout_indices(&[1; 9], 2.0 / 3.0, 5, false).unwrap();
    assert_eq!((h.train.len(), h.test.len()), (6, 3));
    assert_eq!(h, holdout_indices(&[1; 9], 2.0 / 3.0, 5, false).unwrap());
}

fn basic_bench(reps: usize) -> BenchSpec {
    BenchSpec {
        datasets: vec![DatasetEntry {
            name: "basic".into(),
            source: DatasetSource::Simulate(SimSpec::basic(3, 300, 1)),
        }],
        models: Variant::ALL
            .iter()
            .map(|&v| ModelEntry::new(v, FitConfig::default()))
            .collect(),
        train_fraction: 2.0 / 3.0,
        repetitions: reps,
        seed: 17,
        stratified: false,
    }
}

#[test]
fn benchmark_on_separable_data() {
    let report = run_benchmark(&basic_bench(50), Execution::Parallel).unwrap();
    assert_eq!(report.rows.len(), 4);
    assert_eq!(report.records.len(), 200);
    for row in &report.rows {
        let e = row.mean_error.unwrap();
        assert!((0.0..=0.05).contains(&e), "{} {e}", row.model);
        assert_eq!((row.repetitions, row.failed), (50, 0));
    }
}

#[test]
fn benchmark_outlier_margin() {
    let spec = BenchSpec {
        datasets: vec![DatasetEntry {
            name: "outlier".into(),
            source: DatasetSource::Simulate(SimSpec::outlier(2, 300, 0.15, 2)),
        }],
        models: vec![
            ModelEntry::new(Variant::Original, FitConfig::default()),
            ModelEntry::new(Variant::Mod2, FitConfig::default()),
        ],
        repetitions: 50,
        ..basic_bench(1)
    };
    let report = run_benchmark(&spec, Execution::Parallel).unwrap();
    let orig = report
        .row("outlier", "original")
        .unwrap()
        .mean_error
        .unwrap();
    let mod2 = report.row("outlier", "mod2").unwrap().mean_error.unwrap();
    assert!(mod2 + 0.05 <= orig, "mod2 {mod2} original {orig}");
}

#[test]
fn single_repetition_is_reproducible() {
    let a = run_benchmark(&basic_bench(1), Execution::Sequential).unwrap();
    let b = run_benchmark(&basic_bench(1), Execution::Sequential).unwrap();
    assert_eq!(a.to_csv_string(), b.to_csv_string());
    assert_eq!(a, b);
}
