//! Acceptance suite: one test per criterion, each printing a PASS line and
//! checking its runtime budget. Run with `cargo test --test acceptance` (add
//! `-- --nocapture` to see the lines).

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use csidn::config::parse_config;
use csidn::data::{corrupt, CirclesSpec, ConfidenceMode, Dataset, NoiseSpec};
use csidn::estimate::{
    assemble_transition, diag_confident, estimate_alpha, update_beta_all, AlphaMatrix, AnchorSet,
    BetaTable, MuVector,
};
use csidn::harness::{
    run_sweep, sensitivity_sweep, small_loss_probe, SensitivityPlan, SweepPlan,
};
use csidn::nn::check::{all_params, analytic_gradient, numeric_gradient, relative_error};
use csidn::nn::loss::LossKind;
use csidn::nn::MLPModel;
use csidn::train::{
    train_ilfc, train_naive, train_noisy_reference, Method, TrainConfig,
};
use csidn::util::derive_seed;

const W: [f64; 2] = [0.0, 1.0];

fn circles() -> CirclesSpec {
    CirclesSpec {
        seed: 42,
        ..CirclesSpec::default()
    }
}

fn test_split(gen: &CirclesSpec) -> Dataset {
    gen.with_samples(500, derive_seed(gen.seed, 0x7465))
        .generate()
        .unwrap()
}

fn csidn_spec(rho_param: f64, seed: u64) -> NoiseSpec {
    NoiseSpec::csidn(W.to_vec(), rho_param, ConfidenceMode::ExactPosterior, seed)
}

/// Analytic noisy posterior `P(Y_noisy = j | x)` under the generator's law.
fn analytic_noisy_posterior(gen: &CirclesSpec, spec: &NoiseSpec, data: &Dataset) -> Array2<f64> {
    let k = gen.num_classes();
    let mut out = Array2::zeros((data.len(), k));
    for i in 0..data.len() {
        let x = data.features.row(i).to_vec();
        let post = gen.bayes_posterior(&x);
        let t = spec.true_transition(&x, k);
        for j in 0..k {
            out[(i, j)] = (0..k).map(|c| t[(c, j)] * post[c]).sum();
        }
    }
    out
}

fn analytic_clean_posterior(gen: &CirclesSpec, data: &Dataset) -> Array2<f64> {
    let k = gen.num_classes();
    let mut out = Array2::zeros((data.len(), k));
    for i in 0..data.len() {
        let post = gen.bayes_posterior(&data.features.row(i).to_vec());
        for j in 0..k {
            out[(i, j)] = post[j];
        }
    }
    out
}

/// Uncorrupted samples of each class with the highest clean posterior.
fn true_anchors(gen: &CirclesSpec, data: &Dataset, per_class: usize) -> AnchorSet {
    let clean = data.clean_labels.as_ref().unwrap();
    let k = gen.num_classes();
    let mut sets = Vec::with_capacity(k);
    for class in 0..k {
        let mut candidates: Vec<(usize, f64)> = (0..data.len())
            .filter(|&i| clean[i] == class && data.noisy_labels[i] == class)
            .map(|i| {
                let post = gen.bayes_posterior(&data.features.row(i).to_vec());
                (i, post[class])
            })
            .collect();
        candidates.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        candidates.truncate(per_class);
        sets.push(candidates.into_iter().map(|(i, _)| i).collect());
    }
    AnchorSet::from_indices(sets)
}

#[test]
fn criterion_01_gradient_correctness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2025);
    let model = MLPModel::new(&[2, 32, 32, 3], 5).unwrap();
    let batch = Array2::from_shape_fn((8, 2), |_| rng.gen_range(-2.0..2.0));
    let labels: Vec<usize> = (0..8).map(|_| rng.gen_range(0..3)).collect();
    let transitions: Vec<Array2<f64>> = (0..8)
        .map(|_| {
            let mut t = Array2::from_shape_fn((3, 3), |_| rng.gen_range(0.05..1.0));
            for mut row in t.rows_mut() {
                let s = row.sum();
                row.mapv_inplace(|v| v / s);
            }
            t
        })
        .collect();
    let kinds: [(LossKind, Option<&[Array2<f64>]>); 4] = [
        (LossKind::CrossEntropy, None),
        (LossKind::Mae, None),
        (LossKind::Lq { q: 0.7 }, None),
        (LossKind::ForwardCorrected, Some(&transitions)),
    ];
    let params = all_params(&model);
    let mut worst: f64 = 0.0;
    for (kind, trans) in kinds {
        for layer in 0..model.layers().len() {
            let layer_params: Vec<_> = params.iter().copied().filter(|p| p.layer == layer).collect();
            for _ in 0..5 {
                let p = layer_params[rng.gen_range(0..layer_params.len())];
                let a = analytic_gradient(&model, &batch, &labels, kind, trans, p).unwrap();
                let n = numeric_gradient(&model, &batch, &labels, kind, trans, p, 1e-5).unwrap();
                let rel = relative_error(a, n);
                worst = worst.max(rel);
                assert!(rel < 1e-4, "{kind:?}: relative error {rel} at {p:?}");
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "budget exceeded: {elapsed:.1}s");
    println!(
        "criterion 1 (gradient correctness, worst rel err {worst:.2e}, {elapsed:.1}s): PASS"
    );
}

#[test]
fn criterion_02_transition_assembly_invariants() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..100_000 {
        let k = rng.gen_range(2..6);
        let mut rows = Vec::with_capacity(k);
        for i in 0..k {
            let mut row: Vec<f64> = (0..k)
                .map(|j| if i == j { 0.0 } else { rng.gen_range(1e-6..1.0) })
                .collect();
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= s);
            rows.push(row);
        }
        let alpha = AlphaMatrix::from_rows(&rows).unwrap();
        let mu = MuVector((0..k).map(|_| rng.gen_range(1e-3..1.0)).collect());
        let observed = rng.gen_range(0..k);
        let diag = diag_confident(rng.gen_range(0.0..1.0), rng.gen_range(0.05..2.0));
        let t = assemble_transition(observed, diag, &mu, &alpha);
        for i in 0..k {
            let mut sum = 0.0;
            for j in 0..k {
                let v = t[(i, j)];
                assert!((0.0..=1.0).contains(&v), "entry ({i},{j}) = {v}");
                sum += v;
            }
            assert!((sum - 1.0).abs() < 1e-9, "row {i} sums to {sum}");
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "budget exceeded: {elapsed:.1}s");
    println!("criterion 2 (transition assembly, 1e5 draws, {elapsed:.1}s): PASS");
}

#[test]
fn criterion_03_alpha_symmetry_oracle() {
    let start = Instant::now();
    let gen = circles();
    let clean = gen.generate().unwrap();
    let spec = csidn_spec(0.4, 991);
    let data = corrupt(&clean, &spec, Some(&gen)).unwrap();
    // Estimator-math oracle: the generator's exact noisy posterior plays
    // h_noisy, exactly as criterion 4 injects the exact clean posterior.
    let h_noisy = analytic_noisy_posterior(&gen, &spec, &data);
    let anchors = true_anchors(&gen, &data, 50);
    let confidence = data.confidence.as_deref().unwrap();
    let (alpha, _) = estimate_alpha(&anchors, &h_noisy, confidence).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                let v = alpha.get(i, j);
                worst = worst.max((v - 0.5).abs());
                assert!(
                    (0.45..=0.55).contains(&v),
                    "alpha[{i}][{j}] = {v} outside [0.45, 0.55]"
                );
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "budget exceeded: {elapsed:.1}s");
    println!(
        "criterion 3 (alpha symmetry, worst |alpha - 0.5| = {worst:.4}, {elapsed:.1}s): PASS"
    );
}

#[test]
fn criterion_04_diagonal_recovery_oracle() {
    let start = Instant::now();
    let gen = circles();
    let clean = gen.generate().unwrap();
    let test = test_split(&gen);
    let spec = csidn_spec(0.4, 991);
    let data = corrupt(&clean, &spec, Some(&gen)).unwrap();
    let confidence = data.confidence.as_deref().unwrap();

    // Trained noisy classifier; exact clean posterior injected as h.
    let cfg = TrainConfig {
        seed: 7,
        ..TrainConfig::default()
    };
    let reference = train_noisy_reference(&data, &test, &cfg).unwrap();
    let h_exact = analytic_clean_posterior(&gen, &data);
    let mut beta = BetaTable::ones(data.len());
    update_beta_all(&mut beta, &reference.train_probs, &h_exact, &data.noisy_labels);

    let mut err_sum = 0.0;
    let mut count = 0usize;
    for i in 0..data.len() {
        if confidence[i] >= 0.5 {
            let est = diag_confident(confidence[i], beta.get(i));
            let x = data.features.row(i).to_vec();
            let truth = 1.0 - spec.flip_prob(&x).unwrap();
            err_sum += (est - truth).abs();
            count += 1;
        }
    }
    let mean_err = err_sum / count as f64;
    assert!(
        mean_err <= 0.05,
        "mean |estimated - true| diagonal = {mean_err} over {count} confident samples"
    );
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "budget exceeded: {elapsed:.1}s");
    println!(
        "criterion 4 (diagonal recovery, mean err {mean_err:.4} on {count} samples, {elapsed:.1}s): PASS"
    );
}

#[test]
fn criterion_05_noise_sweep_trends() {
    let start = Instant::now();
    let plan = SweepPlan {
        dataset: circles(),
        test_per_class: 500,
        direction: W.to_vec(),
        confidence_mode: ConfidenceMode::ExactPosterior,
        methods: vec![
            Method::Ilfc,
            Method::Fc,
            Method::Mae,
            Method::Lq,
            Method::Coteaching,
        ],
        noise_rates: vec![0.25, 0.5],
        seeds: vec![1, 2, 3, 4, 5],
        train: TrainConfig::default(), // 60 epochs
    };
    let dir = tempfile::tempdir().unwrap();
    let report = run_sweep(&plan, dir.path()).unwrap();
    assert!(report.failures.is_empty(), "{:?}", report.failures);

    // (method, rate) -> per-epoch mean accuracy
    let mut curves: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for row in &report.curves {
        curves
            .entry((row.method.clone(), format!("{}", row.rho)))
            .or_default()
            .push(row.mean_acc);
    }
    let epochs = plan.train.epochs;
    let methods = ["ilfc", "fc", "mae", "lq", "coteaching"];

    // All five methods stay healthy under the mild cell.
    for method in methods {
        let series = &curves[&(method.to_string(), "0.25".to_string())];
        assert_eq!(series.len(), epochs);
        let final_acc = *series.last().unwrap();
        assert!(
            final_acc >= 0.85,
            "{method} final accuracy {final_acc} < 0.85 at rate 0.25"
        );
    }

    // ILFC dominates every baseline by >= 5 points under the harsh cell.
    let last10 = |method: &str| -> f64 {
        let series = &curves[&(method.to_string(), "0.5".to_string())];
        series[series.len() - 10..].iter().sum::<f64>() / 10.0
    };
    let ilfc = last10("ilfc");
    let mut summary = format!("ilfc {ilfc:.3}");
    for baseline in ["fc", "mae", "lq", "coteaching"] {
        let acc = last10(baseline);
        summary.push_str(&format!(", {baseline} {acc:.3}"));
        assert!(
            ilfc >= acc + 0.05,
            "ILFC last-10 mean {ilfc} does not exceed {baseline} ({acc}) by 5 points"
        );
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 900.0, "budget exceeded: {elapsed:.1}s");
    println!("criterion 5 (sweep trends at rate 0.5: {summary}; {elapsed:.1}s): PASS");
}

#[test]
fn criterion_06_small_loss_covariate_shift() {
    let start = Instant::now();
    let gen = circles();
    let clean = gen.generate().unwrap();
    // The strongest directional law: p(x) = (cos(w, x) + 1) / 2.
    let data = corrupt(&clean, &csidn_spec(1.0, 314), Some(&gen)).unwrap();
    let cfg = TrainConfig {
        epochs: 10,
        seed: 5,
        ..TrainConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let report = small_loss_probe(&data, &W, &cfg, dir.path()).unwrap();
    let bias = report.summary.selection_bias;
    assert!(
        bias >= 0.15,
        "selected-set mean cosine only {bias} below the population mean"
    );
    assert_eq!(report.summary.selected_size, data.len().div_ceil(2));
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "budget exceeded: {elapsed:.1}s");
    println!("criterion 6 (small-loss covariate shift, bias {bias:.3}, {elapsed:.1}s): PASS");
}

#[test]
fn criterion_07_confidence_sensitivity() {
    let start = Instant::now();
    let plan = SensitivityPlan {
        base: SweepPlan {
            dataset: circles(),
            test_per_class: 500,
            direction: W.to_vec(),
            confidence_mode: ConfidenceMode::ExactPosterior,
            methods: vec![Method::Ilfc],
            noise_rates: vec![0.45],
            seeds: vec![1, 2, 3],
            train: TrainConfig::default(),
        },
        rate: 0.45,
        sigma_grid: vec![0.0, 0.6],
    };
    let dir = tempfile::tempdir().unwrap();
    let report = sensitivity_sweep(&plan, dir.path()).unwrap();
    let row_of = |sigma: f64| {
        report
            .rows
            .iter()
            .find(|r| r.sigma == sigma)
            .unwrap_or_else(|| panic!("no row for sigma {sigma}"))
    };
    let base = row_of(0.0).final_mean;
    let perturbed = row_of(0.6).final_mean;
    let delta = (base - perturbed).abs();
    assert!(
        delta <= 0.10,
        "sigma 0.6 accuracy {perturbed} departs {delta} from sigma 0 ({base})"
    );
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 600.0, "budget exceeded: {elapsed:.1}s");
    println!(
        "criterion 7 (sensitivity: {base:.3} -> {perturbed:.3}, delta {delta:.3}, {elapsed:.1}s): PASS"
    );
}

#[test]
fn criterion_08_clean_degeneracy() {
    let start = Instant::now();
    let gen = circles();
    let clean = gen.generate().unwrap();
    let test = test_split(&gen);
    let data = corrupt(&clean, &csidn_spec(0.0, 3), Some(&gen)).unwrap();
    assert!(data.confidence.as_deref().unwrap().iter().all(|&r| r == 1.0));
    let cfg = TrainConfig {
        epochs: 25,
        seed: 11,
        ..TrainConfig::default()
    };
    let (_, ce) = train_naive(&data, &test, &cfg).unwrap();
    let ilfc = train_ilfc(&data, &test, &cfg, None).unwrap();
    let gap = (ce.final_test_acc() - ilfc.result.final_test_acc()).abs();
    assert!(gap <= 0.02, "clean-degeneracy gap {gap} exceeds 2 points");
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "budget exceeded: {elapsed:.1}s");
    println!("criterion 8 (clean degeneracy, gap {gap:.4}, {elapsed:.1}s): PASS");
}

#[test]
fn criterion_09_calibration_step() {
    let start = Instant::now();
    let gen = circles();
    let clean = gen.with_samples(150, derive_seed(42, 1)).generate().unwrap();
    let valid = gen.with_samples(150, derive_seed(42, 2)).generate().unwrap();
    let pool = gen.with_samples(700, derive_seed(42, 3)).generate().unwrap();
    let cfg = TrainConfig {
        epochs: 40,
        seed: 9,
        ..TrainConfig::default()
    };
    let out = csidn::data::pseudo_label_pipeline(&clean, &valid, &pool, &cfg, false).unwrap();
    assert!(
        out.report.ece_calibrated <= out.report.ece_uncalibrated,
        "selected temperature ECE {} exceeds t=1 ECE {}",
        out.report.ece_calibrated,
        out.report.ece_uncalibrated
    );
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "budget exceeded: {elapsed:.1}s");
    println!(
        "criterion 9 (calibration: ECE {:.4} <= t=1 ECE {:.4}, t = {:.3}, {elapsed:.1}s): PASS",
        out.report.ece_calibrated, out.report.ece_uncalibrated, out.report.temperature
    );
}

#[test]
fn criterion_10_recipe_determinism() {
    let start = Instant::now();
    let recipe = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/sweep_rho025.toml");
    let text = std::fs::read_to_string(recipe).unwrap();
    // Downscale for runtime; determinism does not depend on scale.
    let overrides = [
        ("dataset.per_class".to_string(), "80".to_string()),
        ("dataset.test_per_class".to_string(), "40".to_string()),
        ("train.epochs".to_string(), "4".to_string()),
        ("experiment.seeds".to_string(), "[1, 2]".to_string()),
        (
            "experiment.methods".to_string(),
            "[\"ilfc\", \"coteaching\"]".to_string(),
        ),
    ];
    let config = parse_config(&text, &overrides).unwrap();
    let plan = config.sweep_plan().unwrap();
    let (dir_a, dir_b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_sweep(&plan, dir_a.path()).unwrap();
    run_sweep(&plan, dir_b.path()).unwrap();
    let a = std::fs::read(dir_a.path().join("curves.csv")).unwrap();
    let b = std::fs::read(dir_b.path().join("curves.csv")).unwrap();
    assert_eq!(a, b, "curves.csv differs between identical sweep runs");
    let elapsed = start.elapsed().as_secs_f64();
    println!("criterion 10 (recipe determinism, {elapsed:.1}s): PASS");
}
