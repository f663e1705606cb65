use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use convgen::classifiers::{fit, ClassifierSpec};
use convgen::convgen::{ConvGenConfig, ConvGenModel, NebSetting};
use convgen::data::Dataset;
use convgen::nn::{Activation, Adam, LayerSpec, LossKind, Network};
use convgen::{SplitMix64, Tensor2D};

fn random(rng: &mut SplitMix64, rows: usize, cols: usize) -> Tensor2D {
    Tensor2D::new(rows, cols, (0..rows * cols).map(|_| rng.normal()).collect()).unwrap()
}

/// abalone-sized data: 8 features, 34 minority / 550 majority rows.
fn dataset() -> Dataset {
    let mut rng = SplitMix64::new(1);
    let (n_min, n_maj) = (34, 550);
    let mut x = random(&mut rng, n_min + n_maj, 8);
    for r in 0..n_min {
        x.row_mut(r).iter_mut().for_each(|v| *v += 1.5);
    }
    let labels = (0..n_min + n_maj).map(|i| u8::from(i < n_min)).collect();
    Dataset::new("bench", x, labels).unwrap()
}

fn discriminator(c: &mut Criterion) {
    let mut rng = SplitMix64::new(2);
    let specs = [
        LayerSpec::dense(8, 250, Activation::Relu),
        LayerSpec::dense(250, 125, Activation::Relu),
        LayerSpec::dense(125, 75, Activation::Relu),
        LayerSpec::dense(75, 2, Activation::Softmax),
    ];
    let mut net = Network::new(&specs, &mut rng).unwrap();
    let x = random(&mut rng, 68, 8);
    let mut y = Tensor2D::zeros(68, 2);
    for r in 0..68 {
        y.set(r, usize::from(r >= 34), 1.0);
    }
    let mut opt = Adam::default();
    c.bench_function("discriminator step (68 x 8)", |b| {
        b.iter(|| {
            net.forward(&x).unwrap();
            net.backward(LossKind::Bce, &y).unwrap();
            opt.step(&mut net).unwrap();
        })
    });
}

fn convgen_epoch(c: &mut Criterion) {
    let d = dataset();
    let config = ConvGenConfig {
        neb: NebSetting::Min,
        neb_epochs: 1,
        ..ConvGenConfig::default()
    };
    let model = ConvGenModel::for_dataset(config, &d).unwrap();
    let mut group = c.benchmark_group("convgen");
    group.sample_size(10);
    group.bench_function("one neighbourhood epoch (neb = 34)", |b| {
        b.iter_batched(|| model.clone(), |mut m| m.train(&d).unwrap(), BatchSize::LargeInput)
    });
    group.bench_function("generate 516 rows", |b| b.iter(|| model.generate(&d, 516).unwrap()));
    group.finish();
}

fn classifiers(c: &mut Criterion) {
    let d = dataset();
    let mut rng = SplitMix64::new(3);
    let queries = random(&mut rng, 150, 8);
    let knn = fit(&ClassifierSpec::knn(), d.features(), d.labels()).unwrap();
    c.bench_function("knn predict 150 x 584", |b| b.iter(|| knn.predict(&queries).unwrap()));
    c.bench_function("logreg fit 584 rows", |b| {
        b.iter(|| fit(&ClassifierSpec::logreg(), d.features(), d.labels()).unwrap())
    });
}

criterion_group!(benches, discriminator, convgen_epoch, classifiers);
criterion_main!(benches);
