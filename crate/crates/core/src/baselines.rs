//! Comparison oversamplers: cyclic copies, a vanilla GAN trained on the
//! minority class, and SMOTE-style two-point interpolation.

use serde::{Deserialize, Serialize};

use crate::data::ScaleInfo;
use crate::error::{Error, Result};
use crate::neighborhood::nearest;
use crate::nn::{Activation, Adam, LayerSpec, LossKind, Network};
use crate::rng::{derive_seed, SplitMix64};
use crate::tensor::Tensor2D;

/// Row `i` of the output is minority row `i mod m`.
pub fn repeater_sample(minority: &Tensor2D, n_synthetic: usize) -> Result<Tensor2D> {
    if minority.rows() == 0 {
        return Err(Error::validation("repeater needs at least one minority row"));
    }
    let rows: Vec<usize> = (0..n_synthetic).map(|i| i % minority.rows()).collect();
    Ok(minority.select_rows(&rows))
}

/// Layer widths derived from the feature count `f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GanArchitecture {
    pub noise_size: usize,
    pub generator: [usize; 3],
    pub discriminator: [usize; 3],
}

impl GanArchitecture {
    pub fn for_features(f: usize) -> Self {
        let noise = 16 * f;
        Self {
            noise_size: noise,
            generator: [2 * noise, 4 * f, 2 * f],
            discriminator: [40 * f, 20 * f, 10 * f],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GanConfig {
    pub epochs: usize,
    /// Upper bound on the batch size; the minority size caps it further.
    pub batch_size: usize,
    /// Discriminator steps per generator step.
    pub d_steps: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for GanConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            batch_size: 32,
            d_steps: 1,
            learning_rate: crate::nn::DEFAULT_LEARNING_RATE,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GanEpochLoss {
    pub epoch: usize,
    pub discriminator: f64,
    pub generator: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Gan {
    pub architecture: GanArchitecture,
    pub scale: ScaleInfo,
    pub generator: Network,
    pub discriminator: Network,
    pub history: Vec<GanEpochLoss>,
    seed: u64,
}

fn noise(rng: &mut SplitMix64, rows: usize, cols: usize) -> Tensor2D {
    Tensor2D::new(rows, cols, (0..rows * cols).map(|_| rng.uniform(-1.0, 1.0)).collect())
        .expect("sized to fit")
}

impl Gan {
    pub fn new(n_features: usize, scale: ScaleInfo, seed: u64) -> Result<Self> {
        let arch = GanArchitecture::for_features(n_features);
        let [g1, g2, g3] = arch.generator;
        let [d1, d2, d3] = arch.discriminator;
        let generator = Network::new(
            &[
                LayerSpec::dense(arch.noise_size, g1, Activation::Relu),
                LayerSpec::dense(g1, g2, Activation::Relu),
                LayerSpec::dense(g2, g3, Activation::Relu),
                LayerSpec::dense(g3, n_features, Activation::Softsign),
            ],
            &mut SplitMix64::new(derive_seed(seed, &[1])),
        )?;
        let discriminator = Network::new(
            &[
                LayerSpec::dense(n_features, d1, Activation::Relu),
                LayerSpec::dense(d1, d2, Activation::Relu),
                LayerSpec::dense(d2, d3, Activation::Relu),
                LayerSpec::dense(d3, 1, Activation::Sigmoid),
            ],
            &mut SplitMix64::new(derive_seed(seed, &[2])),
        )?;
        Ok(Self {
            architecture: arch,
            scale,
            generator,
            discriminator,
            history: Vec::new(),
            seed,
        })
    }

    /// One discriminator update on scaled `real` rows against an equally
    /// sized fake batch from the current generator. Returns the BCE.
    pub fn discriminator_step(&mut self, real: &Tensor2D, opt: &mut Adam, rng: &mut SplitMix64) -> Result<f64> {
        let b = real.rows();
        let fake = self.generator.predict(&noise(rng, b, self.architecture.noise_size))?;
        let mut target = Tensor2D::zeros(2 * b, 1);
        for r in 0..b {
            target.set(r, 0, 1.0);
        }
        self.discriminator.forward(&real.vstack(&fake)?)?;
        let loss = self.discriminator.backward(LossKind::Bce, &target)?;
        opt.step(&mut self.discriminator)?;
        Ok(loss)
    }

    /// One generator update with the non-saturating objective: maximise
    /// `log D(G(z))`, i.e. BCE of the fakes against the "real" label.
    fn generator_step(&mut self, b: usize, opt: &mut Adam, rng: &mut SplitMix64) -> Result<f64> {
        let fake = self.generator.forward(&noise(rng, b, self.architecture.noise_size))?;
        let scores = self.discriminator.forward(&fake)?;
        let (loss, grad) = LossKind::Bce.evaluate(&scores, &Tensor2D::filled(b, 1, 1.0))?;
        let grad_fake = self.discriminator.input_gradient(grad)?;
        self.generator.backward_from(grad_fake)?;
        opt.step(&mut self.generator)?;
        Ok(loss)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_features(&self) -> usize {
        self.generator.specs().last().map_or(0, |s| s.output_width())
    }
}

/// Trains on the minority rows only, after dividing them by
/// `alpha = max(1, 1.1 * max |x|)`.
pub fn gan_train(minority: &Tensor2D, cfg: &GanConfig) -> Result<Gan> {
    if minority.rows() < 2 {
        return Err(Error::validation("GAN training needs at least 2 minority rows"));
    }
    let scale = ScaleInfo::from_features(minority);
    let mut gan = Gan::new(minority.cols(), scale, cfg.seed)?;
    let real = scale.scale(minority);
    let batch = cfg.batch_size.clamp(1, minority.rows());
    let mut d_opt = Adam::new(cfg.learning_rate);
    let mut g_opt = Adam::new(cfg.learning_rate);
    let mut rng = SplitMix64::new(derive_seed(cfg.seed, &[3]));
    let mut order: Vec<usize> = (0..minority.rows()).collect();
    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let (mut d_total, mut g_total, mut steps) = (0.0, 0.0, 0usize);
        for chunk in order.chunks(batch) {
            let wrap = |e: Error| match e {
                Error::Numeric { context } => Error::Numeric {
                    context: format!("{context} (GAN epoch {epoch})"),
                },
                other => other,
            };
            for _ in 0..cfg.d_steps.max(1) {
                d_total += gan
                    .discriminator_step(&real.select_rows(chunk), &mut d_opt, &mut rng)
                    .map_err(wrap)?;
            }
            g_total += gan.generator_step(chunk.len(), &mut g_opt, &mut rng).map_err(wrap)?;
            steps += 1;
        }
        gan.history.push(GanEpochLoss {
            epoch,
            discriminator: d_total / (steps * cfg.d_steps.max(1)) as f64,
            generator: g_total / steps as f64,
        });
    }
    Ok(gan)
}

/// `n_synthetic` rows of `alpha * G(z)`; the same model always yields the
/// same rows.
pub fn gan_generate(gan: &Gan, n_synthetic: usize) -> Result<Tensor2D> {
    if n_synthetic == 0 {
        return Ok(Tensor2D::zeros(0, gan.n_features()));
    }
    let mut rng = SplitMix64::new(derive_seed(gan.seed, &[4]));
    let z = noise(&mut rng, n_synthetic, gan.architecture.noise_size);
    Ok(gan.scale.unscale(&gan.generator.predict(&z)?))
}

/// Interpolated rows together with the pair and weight that produced each.
#[derive(Debug, Clone, PartialEq)]
pub struct Interpolated {
    pub samples: Tensor2D,
    /// `(x, x_nn)` as minority row indices.
    pub pairs: Vec<(usize, usize)>,
    pub weights: Vec<f64>,
}

pub fn interpolation_sample(minority: &Tensor2D, k: usize, n_synthetic: usize, rng: &mut SplitMix64) -> Result<Interpolated> {
    interpolation_sample_with(minority, k, n_synthetic, rng, &mut |r| r.next_f64())
}

/// `x + u (x_nn - x)` with `x` a uniformly drawn minority row, `x_nn` one
/// of its `k` nearest other minority rows, and `u` taken from `draw_u`.
pub fn interpolation_sample_with(
    minority: &Tensor2D,
    k: usize,
    n_synthetic: usize,
    rng: &mut SplitMix64,
    draw_u: &mut dyn FnMut(&mut SplitMix64) -> f64,
) -> Result<Interpolated> {
    let m = minority.rows();
    if m < 2 {
        return Err(Error::validation("interpolation needs at least 2 minority rows"));
    }
    if k == 0 {
        return Err(Error::validation("interpolation needs k >= 1"));
    }
    let neighbors: Vec<Vec<usize>> = (0..m)
        .map(|i| {
            let pool: Vec<usize> = (0..m).filter(|&j| j != i).collect();
            nearest(minority, minority.row(i), &pool, k)
        })
        .collect();
    let f = minority.cols();
    let mut values = Vec::with_capacity(n_synthetic * f);
    let mut pairs = Vec::with_capacity(n_synthetic);
    let mut weights = Vec::with_capacity(n_synthetic);
    for _ in 0..n_synthetic {
        let x = rng.below(m);
        let nn = neighbors[x][rng.below(neighbors[x].len())];
        let u = draw_u(rng);
        let (a, b) = (minority.row(x), minority.row(nn));
        values.extend(a.iter().zip(b).map(|(p, q)| p + u * (q - p)));
        pairs.push((x, nn));
        weights.push(u);
    }
    Ok(Interpolated {
        samples: Tensor2D::new(n_synthetic, f, values)?,
        pairs,
        weights,
    })
}
