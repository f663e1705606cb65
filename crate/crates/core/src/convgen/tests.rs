use super::*;
use crate::data::MAJORITY;

/// Two Gaussian blobs: `n_min` minority rows around (2, 2, ...), `n_maj`
/// majority rows around the origin.
fn blobs(seed: u64, n_min: usize, n_maj: usize, f: usize) -> Dataset {
    let mut rng = SplitMix64::new(seed);
    let n = n_min + n_maj;
    let mut values = Vec::with_capacity(n * f);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let minority = i < n_min;
        let centre = if minority { 2.0 } else { 0.0 };
        values.extend((0..f).map(|_| centre + 0.7 * rng.normal()));
        labels.push(if minority { MINORITY } else { MAJORITY });
    }
    Dataset::new("blobs", Tensor2D::new(n, f, values).unwrap(), labels).unwrap()
}

fn small_config(neb: usize) -> ConvGenConfig {
    ConvGenConfig {
        neb: NebSetting::Fixed(neb),
        neb_epochs: 2,
        disc_train_count: 1,
        seed: 7,
        ..ConvGenConfig::default()
    }
}

fn random_neighborhood(seed: u64, neb: usize, f: usize) -> Tensor2D {
    let mut rng = SplitMix64::new(seed);
    Tensor2D::new(neb, f, (0..neb * f).map(|_| rng.uniform(-3.0, 3.0)).collect()).unwrap()
}

fn zero_generator(model: &mut ConvGenModel) {
    for layer in model.generator_mut().layers_mut() {
        layer.weights_mut().fill(0.0);
        layer.bias_mut().fill(0.0);
    }
}

#[test]
fn presets() {
    let p = ConvGenConfig::preset("min,prox").unwrap();
    assert_eq!(p.neb, NebSetting::Min);
    assert!(p.maj_proximal);
    let p = ConvGenConfig::preset("5,maj").unwrap();
    assert_eq!(p.neb, NebSetting::Fixed(5));
    assert!(!p.maj_proximal);
    assert!(ConvGenConfig::preset("3,maj").is_none());
    assert_eq!(p.disc_train_count, 5);
    assert_eq!(p.neb_epochs, 10);
}

#[test]
fn neb_setting_serde() {
    let c: ConvGenConfig = serde_json::from_str(r#"{"neb": "min", "seed": 3}"#).unwrap();
    assert_eq!(c.neb, NebSetting::Min);
    let c: ConvGenConfig = serde_json::from_str(r#"{"neb": 5}"#).unwrap();
    assert_eq!(c.neb, NebSetting::Fixed(5));
    assert!(serde_json::from_str::<ConvGenConfig>(r#"{"neb": "max"}"#).is_err());
    let text = serde_json::to_string(&ConvGenConfig::default()).unwrap();
    assert!(text.contains(r#""neb":"min""#));
}

#[test]
fn neb_clamps_to_minority_size() {
    let d = blobs(1, 4, 20, 3);
    let m = ConvGenModel::for_dataset(small_config(10), &d).unwrap();
    assert_eq!(m.neb(), 4);
    assert_eq!(m.gen(), 4);
    assert_eq!(m.conv_rows(), 2);
    assert!(ConvGenModel::new(small_config(5), 3, 1).is_err());
}

#[test]
fn zero_generator_gives_uniform_centroid() {
    let mut m = ConvGenModel::new(small_config(5), 3, 12).unwrap();
    zero_generator(&mut m);
    let n = random_neighborhood(2, 5, 3);
    let (k, c) = m.generator_forward(&n).unwrap();
    assert!(k.as_tensor().values().iter().all(|&v| v == 0.2));
    let centroid = n.column_means();
    for row in c.iter_rows() {
        for (a, b) in row.iter().zip(&centroid) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn one_hot_columns_copy_neighborhood_rows() {
    let neb = 4;
    let mut m = ConvGenModel::new(small_config(neb), 2, 12).unwrap();
    zero_generator(&mut m);
    let pick = [2, 0, 3, 1];
    let bias = m.generator_mut().layers_mut()[1].bias_mut();
    for (j, &i) in pick.iter().enumerate() {
        bias[i * neb + j] = 1.5;
    }
    let n = random_neighborhood(3, neb, 2);
    let (k, c) = m.generator_forward(&n).unwrap();
    for (j, &i) in pick.iter().enumerate() {
        assert_eq!(k.as_tensor().get(i, j), 1.0);
        assert_eq!(c.row(j), n.row(i));
    }
}

#[test]
fn random_generators_stay_in_hull() {
    for seed in 0..20 {
        let config = ConvGenConfig {
            seed,
            ..small_config(6)
        };
        let m = ConvGenModel::new(config, 4, 30).unwrap();
        let n = random_neighborhood(seed + 100, 6, 4);
        let (k, c) = m.generator_forward(&n).unwrap();
        assert!(k.is_valid(1e-12), "violation {}", k.violation());
        let direct = k.as_tensor().matmul_tn(&n).unwrap();
        for (a, b) in direct.values().iter().zip(c.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn batch_mean_is_mean_coefficient_combination() {
    let m = ConvGenModel::new(small_config(5), 3, 12).unwrap();
    let n = random_neighborhood(9, 5, 3);
    let (k, c) = m.generator_forward(&n).unwrap();
    // mean_j C_j = sum_i (mean_j K_ij) N_i
    let weights: Vec<f64> = (0..5).map(|i| k.as_tensor().row(i).iter().sum::<f64>() / 5.0).collect();
    let means = c.column_means();
    for col in 0..3 {
        let expected: f64 = (0..5).map(|i| weights[i] * n.get(i, col)).sum();
        assert!((means[col] - expected).abs() < 1e-12);
    }
}

#[test]
fn generator_gradient_matches_finite_differences() {
    let d = blobs(4, 6, 20, 3);
    let mut m = ConvGenModel::for_dataset(small_config(4), &d).unwrap();
    let n = d.features().select_rows(&[0, 3, 1, 5]);
    let maj = d.features().select_rows(&[6, 9, 12, 15]);
    let (loss, _, _) = m.generator_gradient(&n, &maj).unwrap();
    assert!(loss.is_finite());
    let analytic = m.generator().gradients();

    let combined = |m: &ConvGenModel| {
        let (_, c) = m.generator_forward(&n).unwrap();
        let out = m.discriminator().predict(&c.vstack(&maj).unwrap()).unwrap();
        LossKind::Mse.value(&out, &m.labels()).unwrap()
    };
    let eps = 1e-6;
    let mut checked = 0;
    for (i, &a) in analytic.iter().enumerate() {
        let original = *m.generator_mut().parameter_mut(i).unwrap();
        *m.generator_mut().parameter_mut(i).unwrap() = original + eps;
        let up = combined(&m);
        *m.generator_mut().parameter_mut(i).unwrap() = original - eps;
        let down = combined(&m);
        *m.generator_mut().parameter_mut(i).unwrap() = original;
        let numeric = (up - down) / (2.0 * eps);
        let scale = a.abs().max(numeric.abs()).max(1e-7);
        assert!((a - numeric).abs() / scale < 1e-4, "param {i}: {a} vs {numeric}");
        checked += 1;
    }
    assert_eq!(checked, m.generator().parameter_count());
}

#[test]
fn discriminator_step_shapes_and_sources() {
    let d = blobs(5, 8, 30, 3);
    let mut m = ConvGenModel::for_dataset(small_config(5), &d).unwrap();
    let mut rng = SplitMix64::new(1);
    let step = m.discriminator_step(&d, 2, &mut rng).unwrap();
    assert_eq!(step.concat.shape(), (10, 3));
    assert_eq!(step.min_batch.shape(), (5, 3));
    let mut min_rows = step.min_rows.clone();
    min_rows.sort_unstable();
    let mut expected = knn_minority(&d, 5).unwrap().of(2).to_vec();
    expected.sort_unstable();
    assert_eq!(min_rows, expected);
    let mut maj = step.maj_rows.clone();
    maj.sort_unstable();
    maj.dedup();
    assert_eq!(maj.len(), 5, "majority rows drawn without replacement");
    assert!(step.maj_rows.iter().all(|&r| d.labels()[r] == MAJORITY));
    assert!(m.discriminator_step(&d, 20, &mut rng).is_err());
}

#[test]
fn proximal_batches_come_from_nearest_majority() {
    let d = blobs(6, 8, 40, 2);
    let config = ConvGenConfig {
        maj_proximal: true,
        ..small_config(4)
    };
    let mut m = ConvGenModel::for_dataset(config, &d).unwrap();
    let mut rng = SplitMix64::new(2);
    let step = m.discriminator_step(&d, 3, &mut rng).unwrap();
    let mut got = step.maj_rows.clone();
    got.sort_unstable();
    let mut expected = knn_majority(&d, 4).unwrap()[3].clone();
    expected.sort_unstable();
    assert_eq!(got, expected);
}

#[test]
fn zero_epochs_leave_weights_unchanged() {
    let d = blobs(7, 6, 20, 2);
    let config = ConvGenConfig {
        neb_epochs: 0,
        ..small_config(4)
    };
    let mut m = ConvGenModel::for_dataset(config, &d).unwrap();
    let before = (m.generator().parameters(), m.discriminator().parameters());
    m.train(&d).unwrap();
    assert_eq!(before, (m.generator().parameters(), m.discriminator().parameters()));
    assert!(m.history().is_empty());
}

#[test]
fn training_keeps_outputs_convex_and_lowers_combined_loss() {
    let d = blobs(8, 12, 60, 2);
    let config = ConvGenConfig {
        neb: NebSetting::Fixed(5),
        seed: 7,
        ..ConvGenConfig::default()
    };
    let mut m = ConvGenModel::for_dataset(config, &d).unwrap();
    let before = m.combined_loss(&d, 99).unwrap();
    let mut batches = 0;
    let mut worst: f64 = 0.0;
    m.train_observed(&d, &mut |b| {
        batches += 1;
        assert!(b.coefficients.is_valid(1e-12));
        worst = worst.max(b.reconstruction_error(&d).unwrap());
    })
    .unwrap();
    // per epoch: 5 discriminator passes + one combined pass (two batches)
    assert_eq!(batches, 10 * 12 * 7);
    assert!(worst < 1e-9);
    let history = m.history();
    assert_eq!(history.len(), 10);
    assert!(history.iter().all(|e| e.discriminator.is_finite() && e.combined.is_finite()));
    let (first, last) = (history[0].combined, history[9].combined);
    assert!(last < first, "combined loss {first} -> {last}");
    let after = m.combined_loss(&d, 99).unwrap();
    assert!(after < before, "held-fixed combined loss {before} -> {after}");
}

#[test]
fn discriminator_learns_a_fixed_batch() {
    let d = blobs(16, 12, 60, 2);
    let mut m = ConvGenModel::for_dataset(small_config(5), &d).unwrap();
    let step = m.discriminator_step(&d, 0, &mut SplitMix64::new(3)).unwrap();
    let labels = m.labels();
    let mut opt = Adam::new(1e-3);
    let mut losses = Vec::new();
    for _ in 0..50 {
        m.discriminator.forward(&step.concat).unwrap();
        losses.push(m.discriminator.backward(LossKind::Bce, &labels).unwrap());
        opt.step(&mut m.discriminator).unwrap();
    }
    let averages: Vec<f64> = losses.windows(10).map(|w| w.iter().sum::<f64>() / 10.0).collect();
    assert!(averages.windows(2).all(|p| p[1] < p[0]), "{averages:?}");
}

#[test]
fn proximal_pool_saturates_to_whole_majority() {
    let d = blobs(17, 8, 3, 2);
    let config = ConvGenConfig {
        maj_proximal: true,
        ..small_config(6)
    };
    let mut m = ConvGenModel::for_dataset(config, &d).unwrap();
    let step = m.discriminator_step(&d, 0, &mut SplitMix64::new(4)).unwrap();
    assert_eq!(step.maj_rows.len(), 6);
    let used: std::collections::BTreeSet<usize> = step.maj_rows.iter().copied().collect();
    assert!(used.iter().all(|r| (8..11).contains(r)));
}

#[test]
fn permuted_neighborhood_stays_in_same_hull() {
    let m = ConvGenModel::new(small_config(5), 3, 12).unwrap();
    let n = random_neighborhood(18, 5, 3);
    let permuted = n.select_rows(&[4, 2, 0, 3, 1]);
    let (k, c) = m.generator_forward(&permuted).unwrap();
    assert!(k.is_valid(1e-12));
    let rebuilt = k.as_tensor().matmul_tn(&permuted).unwrap();
    assert!(rebuilt.values().iter().zip(c.values()).all(|(a, b)| (a - b).abs() < 1e-9));
}

#[test]
fn generate_exact_count_and_deterministic() {
    let d = blobs(9, 7, 30, 3);
    let mut m = ConvGenModel::for_dataset(small_config(5), &d).unwrap();
    m.train(&d).unwrap();
    let batches = m.generate(&d, 23).unwrap();
    let sizes: Vec<usize> = batches.iter().map(|b| b.samples.rows()).collect();
    assert_eq!(sizes, vec![5, 5, 5, 5, 3]);
    assert_eq!(batches[4].coefficients.gen(), 3);
    assert_eq!(batches, m.generate(&d, 23).unwrap());
    assert!(m.generate(&d, 0).unwrap().is_empty());
    // round robin: batch r is built around the r-th minority row
    let index = knn_minority(&d, 5).unwrap();
    for (r, b) in batches.iter().enumerate() {
        let centre = d.row_ids()[index.points[r % 7]];
        assert!(b.source_neighborhood.contains(&centre));
        assert!(b.reconstruction_error(&d).unwrap() < 1e-9);
    }
}

#[test]
fn doc_beats_base_rate_on_separable_blobs() {
    let d = blobs(10, 12, 60, 2);
    let config = ConvGenConfig {
        neb_epochs: 3,
        disc_train_count: 2,
        ..small_config(5)
    };
    let mut m = ConvGenModel::for_dataset(config, &d).unwrap();
    m.train(&d).unwrap();
    let before = m.discriminator().parameters();
    let doc = m.retrain_doc(&d).unwrap();
    assert_eq!(m.discriminator().parameters(), before, "retraining works on a copy");
    let test = blobs(11, 20, 100, 2);
    let predicted = doc.predict(test.features()).unwrap();
    let accuracy = predicted.iter().zip(test.labels()).filter(|(a, b)| a == b).count() as f64 / 120.0;
    assert!(accuracy >= 100.0 / 120.0, "accuracy {accuracy}");
    assert!(predicted.iter().any(|&p| p == MINORITY));
}

#[test]
fn doc_ties_go_to_majority() {
    let d = blobs(12, 6, 20, 2);
    let m = ConvGenModel::for_dataset(small_config(4), &d).unwrap();
    let mut doc = DocClassifier {
        network: m.discriminator().clone(),
    };
    let last = doc.network.layers_mut().last_mut().unwrap();
    last.weights_mut().fill(0.0);
    last.bias_mut().fill(0.0);
    assert_eq!(doc.predict(d.features()).unwrap(), vec![MAJORITY; 26]);
}

#[test]
fn checkpoint_round_trip_is_byte_identical() {
    let d = blobs(13, 6, 20, 2);
    let mut m = ConvGenModel::for_dataset(small_config(4), &d).unwrap();
    m.train(&d).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    m.save(&path).unwrap();
    let loaded = ConvGenModel::load(&path).unwrap();
    assert_eq!(loaded.to_checkpoint().unwrap(), m.to_checkpoint().unwrap());
    assert_eq!(loaded.generate(&d, 9).unwrap(), m.generate(&d, 9).unwrap());
    // training can resume after a load
    let mut loaded = loaded;
    loaded.train(&d).unwrap();
    assert!(ConvGenModel::from_checkpoint(r#"{"format":"other","version":1}"#).is_err());
}

#[test]
fn rejects_mismatched_dataset() {
    let d = blobs(14, 6, 20, 2);
    let mut m = ConvGenModel::for_dataset(small_config(4), &d).unwrap();
    assert!(m.train(&blobs(15, 6, 20, 3)).is_err());
    assert!(m.generator_forward(&Tensor2D::zeros(3, 2)).is_err());
}
