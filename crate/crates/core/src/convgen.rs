//! ConvGeN: learned convex combinations of minority neighbourhoods.
//!
//! The generator maps a shuffled minority neighbourhood `N` (`neb x f`) to a
//! coefficient matrix `K` (`neb x gen`, every column on the probability
//! simplex) and emits `C = Kᵀ N`, so every synthetic row is a convex
//! combination of real minority rows. The discriminator classifies `C`
//! against an equally sized majority batch; the generator is trained through
//! the frozen discriminator to make that classification easy.
//!
//! Generator: conv1d over the neighbourhood rows (`neb x f` to `k' x f`,
//! ReLU), flattened, dense to `neb * gen` (ReLU), reshaped to `neb x gen`
//! and column-normalised. A column that comes out all zero is replaced by
//! the uniform column `1 / neb`.
//!
//! Discriminator: dense 250, 125, 75 (ReLU) and a 2-way softmax, where
//! `(1, 0)` means minority and `(0, 1)` majority.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, MINORITY};
use crate::error::{Error, Result};
use crate::neighborhood::{knn_majority, knn_minority, NeighborhoodIndex};
use crate::nn::{Activation, Adam, LayerSpec, LossKind, Network};
use crate::rng::{derive_seed, SplitMix64};
use crate::tensor::Tensor2D;

pub const DISCRIMINATOR_HIDDEN: [usize; 3] = [250, 125, 75];
pub const CHECKPOINT_FORMAT: &str = "convgen-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

const TAG_GENERATOR_INIT: u64 = 1;
const TAG_DISCRIMINATOR_INIT: u64 = 2;
const TAG_TRAIN: u64 = 3;
const TAG_GENERATE: u64 = 4;
const TAG_DOC: u64 = 5;

/// Neighbourhood size: a fixed count, or the whole minority class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "NebRepr", into = "NebRepr")]
pub enum NebSetting {
    Fixed(usize),
    Min,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NebRepr {
    Count(usize),
    Name(String),
}

impl TryFrom<NebRepr> for NebSetting {
    type Error = String;
    fn try_from(r: NebRepr) -> std::result::Result<Self, String> {
        match r {
            NebRepr::Count(n) => Ok(NebSetting::Fixed(n)),
            NebRepr::Name(s) if s == "min" => Ok(NebSetting::Min),
            NebRepr::Name(s) => Err(format!("neb must be a count or \"min\", got {s:?}")),
        }
    }
}

impl From<NebSetting> for NebRepr {
    fn from(n: NebSetting) -> Self {
        match n {
            NebSetting::Fixed(k) => NebRepr::Count(k),
            NebSetting::Min => NebRepr::Name("min".into()),
        }
    }
}

impl NebSetting {
    /// Effective neighbourhood size; anything above the minority size is
    /// clamped to it.
    pub fn resolve(self, n_minority: usize) -> usize {
        match self {
            NebSetting::Fixed(k) => k.min(n_minority),
            NebSetting::Min => n_minority,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvGenConfig {
    pub neb: NebSetting,
    /// Discriminator-only passes over the minority class per neighbourhood
    /// epoch.
    pub disc_train_count: usize,
    pub neb_epochs: usize,
    /// Sample majority batches from the nearest majority rows of each
    /// minority point instead of the whole majority class.
    pub maj_proximal: bool,
    pub seed: u64,
    /// Rows after the conv1d reduction (`k'`); defaults to `ceil(neb / 2)`.
    pub conv_rows: Option<usize>,
    pub learning_rate: f64,
    /// Epochs used when retraining the discriminator as a classifier.
    pub doc_epochs: usize,
    pub doc_batch_size: usize,
}

impl Default for ConvGenConfig {
    fn default() -> Self {
        Self {
            neb: NebSetting::Min,
            disc_train_count: 5,
            neb_epochs: 10,
            maj_proximal: false,
            seed: 0,
            conv_rows: None,
            learning_rate: crate::nn::DEFAULT_LEARNING_RATE,
            doc_epochs: 10,
            doc_batch_size: 32,
        }
    }
}

impl ConvGenConfig {
    /// The four named settings: `5,maj`, `min,maj`, `5,prox`, `min,prox`.
    pub fn preset(name: &str) -> Option<Self> {
        let (neb, proximal) = name.split_once(',')?;
        let neb = match neb.trim() {
            "min" => NebSetting::Min,
            "5" => NebSetting::Fixed(5),
            _ => return None,
        };
        let maj_proximal = match proximal.trim() {
            "maj" => false,
            "prox" => true,
            _ => return None,
        };
        Some(Self {
            neb,
            maj_proximal,
            ..Self::default()
        })
    }
}

/// `neb x gen` coefficients; every column is a convex weight vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexMatrix(Tensor2D);

impl SimplexMatrix {
    pub fn new(values: Tensor2D) -> Self {
        Self(values)
    }

    pub fn as_tensor(&self) -> &Tensor2D {
        &self.0
    }

    pub fn neb(&self) -> usize {
        self.0.rows()
    }

    pub fn gen(&self) -> usize {
        self.0.cols()
    }

    /// Worst violation of the simplex constraints: the larger of the most
    /// negative entry's magnitude and the largest `|column sum - 1|`.
    pub fn violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.gen() {
            let mut sum = 0.0;
            for i in 0..self.neb() {
                let v = self.0.get(i, j);
                worst = worst.max(-v);
                sum += v;
            }
            worst = worst.max((sum - 1.0).abs());
        }
        worst
    }

    pub fn is_valid(&self, tolerance: f64) -> bool {
        self.violation() <= tolerance && self.0.values().iter().all(|&v| v >= 0.0)
    }

    /// Keeps the first `n` columns.
    pub fn truncate(&self, n: usize) -> Self {
        let n = n.min(self.gen());
        let mut out = Tensor2D::zeros(self.neb(), n);
        for i in 0..self.neb() {
            out.row_mut(i).copy_from_slice(&self.0.row(i)[..n]);
        }
        Self(out)
    }
}

/// Synthetic rows with the neighbourhood and coefficients that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticBatch {
    /// `gen x f`; row `j` is `sum_i K[i][j] * N[i]`.
    pub samples: Tensor2D,
    /// Row ids (see [`Dataset::row_ids`]) of the neighbourhood rows, in the
    /// order they were fed to the generator.
    pub source_neighborhood: Vec<usize>,
    pub coefficients: SimplexMatrix,
}

impl SyntheticBatch {
    /// Recomputes `Kᵀ N` from the stored coefficients and the dataset rows
    /// named in `source_neighborhood`.
    pub fn reconstruct(&self, d: &Dataset) -> Result<Tensor2D> {
        let position: HashMap<usize, usize> =
            d.row_ids().iter().enumerate().map(|(p, &id)| (id, p)).collect();
        let rows = self
            .source_neighborhood
            .iter()
            .map(|id| {
                position.get(id).copied().ok_or_else(|| {
                    Error::validation(format!("row id {id} is not part of dataset {}", d.name()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let n = d.features().select_rows(&rows);
        self.coefficients.as_tensor().matmul_tn(&n)
    }

    /// `max |Kᵀ N - samples|` over all entries.
    pub fn reconstruction_error(&self, d: &Dataset) -> Result<f64> {
        let rebuilt = self.reconstruct(d)?;
        Ok(rebuilt
            .values()
            .iter()
            .zip(self.samples.values())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

/// Stacks batch samples into one matrix.
pub fn stack_samples(batches: &[SyntheticBatch], n_features: usize) -> Tensor2D {
    let mut values = Vec::new();
    let mut rows = 0;
    for b in batches {
        values.extend_from_slice(b.samples.values());
        rows += b.samples.rows();
    }
    Tensor2D::new(rows, n_features, values).expect("consistent batch widths")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    /// Mean discriminator BCE over every discriminator step of the epoch.
    pub discriminator: f64,
    /// Mean MSE of the combined generator steps.
    pub combined: f64,
}

/// What one discriminator step used and produced.
#[derive(Debug, Clone)]
pub struct DiscriminatorStep {
    /// Generator output stacked on the majority batch.
    pub concat: Tensor2D,
    /// The shuffled neighbourhood fed to the generator.
    pub min_batch: Tensor2D,
    pub maj_batch: Tensor2D,
    /// Dataset positions of the `min_batch` and `maj_batch` rows.
    pub min_rows: Vec<usize>,
    pub maj_rows: Vec<usize>,
    pub batch: SyntheticBatch,
    pub loss: f64,
}

/// Precomputed lookups for one training dataset.
struct TrainingContext<'a> {
    data: &'a Dataset,
    neighborhoods: NeighborhoodIndex,
    majority: Vec<usize>,
    majority_neighbors: Option<Vec<Vec<usize>>>,
    labels: Tensor2D,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvGenModel {
    config: ConvGenConfig,
    n_features: usize,
    neb: usize,
    conv_rows: usize,
    generator: Network,
    discriminator: Network,
    history: Vec<EpochLoss>,
    #[serde(skip)]
    generator_opt: Adam,
    #[serde(skip)]
    discriminator_opt: Adam,
}

impl ConvGenModel {
    pub fn new(config: ConvGenConfig, n_features: usize, n_minority: usize) -> Result<Self> {
        let neb = config.neb.resolve(n_minority);
        if neb < 2 {
            return Err(Error::validation(format!(
                "ConvGeN needs a neighbourhood of at least 2 minority rows (minority size {n_minority})"
            )));
        }
        if n_features == 0 {
            return Err(Error::validation("ConvGeN needs at least one feature"));
        }
        let conv_rows = config.conv_rows.unwrap_or(neb.div_ceil(2));
        if conv_rows == 0 || conv_rows >= neb {
            return Err(Error::Config {
                layer: 0,
                message: format!("conv rows must satisfy 0 < k' < neb = {neb}, got {conv_rows}"),
            });
        }
        let gen = neb;
        let generator = Network::new(
            &[
                LayerSpec::conv1d(neb, n_features, n_features, conv_rows, Activation::Relu),
                LayerSpec::dense(conv_rows * n_features, neb * gen, Activation::Relu),
            ],
            &mut SplitMix64::new(derive_seed(config.seed, &[TAG_GENERATOR_INIT])),
        )?;
        let [h1, h2, h3] = DISCRIMINATOR_HIDDEN;
        let discriminator = Network::new(
            &[
                LayerSpec::dense(n_features, h1, Activation::Relu),
                LayerSpec::dense(h1, h2, Activation::Relu),
                LayerSpec::dense(h2, h3, Activation::Relu),
                LayerSpec::dense(h3, 2, Activation::Softmax),
            ],
            &mut SplitMix64::new(derive_seed(config.seed, &[TAG_DISCRIMINATOR_INIT])),
        )?;
        Ok(Self {
            generator_opt: Adam::new(config.learning_rate),
            discriminator_opt: Adam::new(config.learning_rate),
            config,
            n_features,
            neb,
            conv_rows,
            generator,
            discriminator,
            history: Vec::new(),
        })
    }

    pub fn for_dataset(config: ConvGenConfig, d: &Dataset) -> Result<Self> {
        Self::new(config, d.n_features(), d.minority_count())
    }

    pub fn config(&self) -> &ConvGenConfig {
        &self.config
    }

    pub fn neb(&self) -> usize {
        self.neb
    }

    /// Synthetic rows per neighbourhood; always equal to `neb`.
    pub fn gen(&self) -> usize {
        self.neb
    }

    pub fn conv_rows(&self) -> usize {
        self.conv_rows
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn generator(&self) -> &Network {
        &self.generator
    }

    pub fn generator_mut(&mut self) -> &mut Network {
        &mut self.generator
    }

    pub fn discriminator(&self) -> &Network {
        &self.discriminator
    }

    pub fn history(&self) -> &[EpochLoss] {
        &self.history
    }

    /// `gen` copies of `(1, 0)` followed by `gen` copies of `(0, 1)`.
    pub fn labels(&self) -> Tensor2D {
        let gen = self.gen();
        let mut t = Tensor2D::zeros(2 * gen, 2);
        for r in 0..2 * gen {
            t.set(r, if r < gen { 0 } else { 1 }, 1.0);
        }
        t
    }

    fn check_neighborhood(&self, n: &Tensor2D) -> Result<()> {
        if n.shape() != (self.neb, self.n_features) {
            return Err(Error::shape(
                "generator input",
                format!("{} x {}", self.neb, self.n_features),
                format!("{} x {}", n.rows(), n.cols()),
            ));
        }
        Ok(())
    }

    /// Raw `neb x gen` generator scores into simplex columns.
    /// Returns the coefficients and the column sums used (0 marks a
    /// uniform fallback column).
    fn normalize_columns(&self, raw: &Tensor2D) -> (Tensor2D, Vec<f64>) {
        let (neb, gen) = (self.neb, self.gen());
        let raw = raw.clone().reshape(neb, gen).expect("generator width is neb * gen");
        let mut sums = vec![0.0; gen];
        for i in 0..neb {
            for (s, v) in sums.iter_mut().zip(raw.row(i)) {
                *s += v;
            }
        }
        let mut k = raw;
        for i in 0..neb {
            for (j, v) in k.row_mut(i).iter_mut().enumerate() {
                *v = if sums[j] > 0.0 { *v / sums[j] } else { 1.0 / neb as f64 };
            }
        }
        (k, sums)
    }

    /// Coefficients and synthetic rows for one neighbourhood (`neb x f`).
    pub fn generator_forward(&self, n: &Tensor2D) -> Result<(SimplexMatrix, Tensor2D)> {
        self.check_neighborhood(n)?;
        let raw = self.generator.predict(n)?;
        let (k, _) = self.normalize_columns(&raw);
        let samples = k.matmul_tn(n)?;
        Ok((SimplexMatrix(k), samples))
    }

    fn context<'a>(&self, d: &'a Dataset) -> Result<TrainingContext<'a>> {
        if d.n_features() != self.n_features {
            return Err(Error::shape("dataset features", self.n_features, d.n_features()));
        }
        let resolved = self.config.neb.resolve(d.minority_count());
        if resolved != self.neb {
            return Err(Error::validation(format!(
                "model was built for neighbourhoods of {} rows, dataset gives {resolved}",
                self.neb
            )));
        }
        let majority = d.majority_indices();
        if majority.is_empty() {
            return Err(Error::validation("majority class is empty"));
        }
        let majority_neighbors = if self.config.maj_proximal {
            Some(knn_majority(d, self.gen())?)
        } else {
            None
        };
        Ok(TrainingContext {
            data: d,
            neighborhoods: knn_minority(d, self.neb)?,
            majority,
            majority_neighbors,
            labels: self.labels(),
        })
    }

    fn sample_majority(&self, ctx: &TrainingContext<'_>, rank: usize, rng: &mut SplitMix64) -> Vec<usize> {
        let gen = self.gen();
        let pool: &[usize] = match &ctx.majority_neighbors {
            Some(per_point) => &per_point[rank],
            None => &ctx.majority,
        };
        if pool.len() >= gen {
            let mut pool = pool.to_vec();
            for i in 0..gen {
                let j = i + rng.below(pool.len() - i);
                pool.swap(i, j);
            }
            pool.truncate(gen);
            pool
        } else {
            (0..gen).map(|_| pool[rng.below(pool.len())]).collect()
        }
    }

    fn shuffled_neighborhood(
        &self,
        ctx: &TrainingContext<'_>,
        rank: usize,
        rng: &mut SplitMix64,
    ) -> (Vec<usize>, Tensor2D) {
        let mut rows = ctx.neighborhoods.of(rank).to_vec();
        rng.shuffle(&mut rows);
        let n = ctx.data.features().select_rows(&rows);
        (rows, n)
    }

    fn batch_from(&self, d: &Dataset, rows: &[usize], k: Tensor2D, samples: Tensor2D) -> SyntheticBatch {
        SyntheticBatch {
            samples,
            source_neighborhood: rows.iter().map(|&r| d.row_ids()[r]).collect(),
            coefficients: SimplexMatrix(k),
        }
    }

    /// One discriminator update for the neighbourhood of the `rank`-th
    /// minority point: generator output (label minority) against `gen`
    /// majority rows (label majority), BCE, one optimizer step on the
    /// discriminator only.
    fn discriminator_step_in(
        &mut self,
        ctx: &TrainingContext<'_>,
        rank: usize,
        rng: &mut SplitMix64,
    ) -> Result<DiscriminatorStep> {
        let (min_rows, min_batch) = self.shuffled_neighborhood(ctx, rank, rng);
        let maj_rows = self.sample_majority(ctx, rank, rng);
        let maj_batch = ctx.data.features().select_rows(&maj_rows);
        let (k, samples) = self.generator_forward(&min_batch)?;
        let concat = samples.vstack(&maj_batch)?;
        self.discriminator.forward(&concat)?;
        let loss = self.discriminator.backward(LossKind::Bce, &ctx.labels)?;
        self.discriminator_opt.step(&mut self.discriminator)?;
        let batch = self.batch_from(ctx.data, &min_rows, k.0, samples);
        Ok(DiscriminatorStep {
            concat,
            min_batch,
            maj_batch,
            min_rows,
            maj_rows,
            batch,
            loss,
        })
    }

    /// Public form of a single discriminator step for the minority point at
    /// dataset row `point`.
    pub fn discriminator_step(&mut self, d: &Dataset, point: usize, rng: &mut SplitMix64) -> Result<DiscriminatorStep> {
        let ctx = self.context(d)?;
        let rank = ctx
            .neighborhoods
            .points
            .iter()
            .position(|&p| p == point)
            .ok_or_else(|| Error::validation(format!("row {point} is not a minority row")))?;
        self.discriminator_step_in(&ctx, rank, rng)
    }

    /// Fills the generator's gradient slots with the gradient of the
    /// combined MSE (discriminator output on `G(n) ⊕ maj` against the fixed
    /// labels), holding the discriminator frozen. Returns the loss, the
    /// coefficients and the synthetic rows.
    pub fn generator_gradient(&mut self, n: &Tensor2D, maj: &Tensor2D) -> Result<(f64, Tensor2D, Tensor2D)> {
        self.check_neighborhood(n)?;
        let labels = self.labels();
        let raw = self.generator.forward(n)?;
        let (k, sums) = self.normalize_columns(&raw);
        let samples = k.matmul_tn(n)?;
        let predicted = self.discriminator.forward(&samples.vstack(maj)?)?;
        let (loss, grad) = LossKind::Mse.evaluate(&predicted, &labels)?;
        let grad_concat = self.discriminator.input_gradient(grad)?;
        let gen = self.gen();
        let grad_samples = grad_concat.slice_rows(0, gen);

        // C = Kᵀ N  =>  dK = N dCᵀ
        let grad_k = n.matmul_nt(&grad_samples)?;
        // K[:, j] = R[:, j] / s_j  =>  dR_ij = (dK_ij - <dK_j, K_j>) / s_j
        let mut grad_raw = Tensor2D::zeros(self.neb, gen);
        for (j, &s) in sums.iter().enumerate() {
            if s <= 0.0 {
                continue;
            }
            let dot: f64 = (0..self.neb).map(|i| grad_k.get(i, j) * k.get(i, j)).sum();
            for i in 0..self.neb {
                grad_raw.set(i, j, (grad_k.get(i, j) - dot) / s);
            }
        }
        self.generator.zero_grad();
        self.generator.backward_from(grad_raw.reshape(1, self.neb * gen)?)?;
        Ok((loss, k, samples))
    }

    fn generator_step(&mut self, ctx: &TrainingContext<'_>, step: &DiscriminatorStep) -> Result<(f64, SyntheticBatch)> {
        let (loss, k, samples) = self.generator_gradient(&step.min_batch, &step.maj_batch)?;
        self.generator_opt.step(&mut self.generator)?;
        Ok((loss, self.batch_from(ctx.data, &step.min_rows, k, samples)))
    }

    pub fn train(&mut self, d: &Dataset) -> Result<()> {
        self.train_observed(d, &mut |_| {})
    }

    /// Trains as [`train`](Self::train) and hands every synthetic batch the
    /// generator emits along the way to `observer`.
    pub fn train_observed(&mut self, d: &Dataset, observer: &mut dyn FnMut(&SyntheticBatch)) -> Result<()> {
        let ctx = self.context(d)?;
        let mut rng = SplitMix64::new(derive_seed(self.config.seed, &[TAG_TRAIN]));
        let n_points = ctx.neighborhoods.points.len();
        for epoch in 0..self.config.neb_epochs {
            let mut disc_total = 0.0;
            let mut disc_steps = 0usize;
            for _ in 0..self.config.disc_train_count {
                for rank in 0..n_points {
                    let step = self
                        .discriminator_step_in(&ctx, rank, &mut rng)
                        .map_err(|e| annotate(e, epoch, ctx.neighborhoods.points[rank]))?;
                    observer(&step.batch);
                    disc_total += step.loss;
                    disc_steps += 1;
                }
            }
            let mut combined_total = 0.0;
            for rank in 0..n_points {
                let point = ctx.neighborhoods.points[rank];
                let step = self
                    .discriminator_step_in(&ctx, rank, &mut rng)
                    .map_err(|e| annotate(e, epoch, point))?;
                observer(&step.batch);
                disc_total += step.loss;
                disc_steps += 1;
                let (loss, batch) = self
                    .generator_step(&ctx, &step)
                    .map_err(|e| annotate(e, epoch, point))?;
                observer(&batch);
                combined_total += loss;
            }
            let entry = EpochLoss {
                epoch,
                discriminator: disc_total / disc_steps.max(1) as f64,
                combined: combined_total / n_points.max(1) as f64,
            };
            log::debug!(
                "convgen epoch {epoch}: discriminator {:.5}, combined {:.5}",
                entry.discriminator,
                entry.combined
            );
            self.history.push(entry);
        }
        Ok(())
    }

    /// Combined-model MSE for every minority neighbourhood against fixed
    /// majority batches, without training. Used to compare loss before and
    /// after training on the same draws.
    pub fn combined_loss(&self, d: &Dataset, seed: u64) -> Result<f64> {
        let ctx = self.context(d)?;
        let mut rng = SplitMix64::new(seed);
        let mut total = 0.0;
        for rank in 0..ctx.neighborhoods.points.len() {
            let (_, n) = self.shuffled_neighborhood(&ctx, rank, &mut rng);
            let maj = ctx.data.features().select_rows(&self.sample_majority(&ctx, rank, &mut rng));
            let (_, samples) = self.generator_forward(&n)?;
            let out = self.discriminator.predict(&samples.vstack(&maj)?)?;
            total += LossKind::Mse.value(&out, &ctx.labels)?;
        }
        Ok(total / ctx.neighborhoods.points.len() as f64)
    }

    /// Generates `n_synthetic` rows, cycling over the minority points in
    /// row order and taking the generator output for each shuffled
    /// neighbourhood. The final batch is truncated.
    pub fn generate(&self, d: &Dataset, n_synthetic: usize) -> Result<Vec<SyntheticBatch>> {
        if n_synthetic == 0 {
            return Ok(Vec::new());
        }
        let ctx = self.context(d)?;
        let mut rng = SplitMix64::new(derive_seed(self.config.seed, &[TAG_GENERATE]));
        let mut batches = Vec::new();
        let mut remaining = n_synthetic;
        let n_points = ctx.neighborhoods.points.len();
        let mut rank = 0;
        while remaining > 0 {
            let (rows, n) = self.shuffled_neighborhood(&ctx, rank % n_points, &mut rng);
            let (k, samples) = self.generator_forward(&n)?;
            let take = remaining.min(self.gen());
            let (k, samples) = if take < self.gen() {
                (k.truncate(take), samples.slice_rows(0, take))
            } else {
                (k, samples)
            };
            batches.push(self.batch_from(d, &rows, k.0, samples));
            remaining -= take;
            rank += 1;
        }
        Ok(batches)
    }

    /// Balances `d` with generated rows and retrains a copy of the
    /// discriminator on the full balanced set. The model is left untouched.
    pub fn retrain_doc(&self, d: &Dataset) -> Result<DocClassifier> {
        let n_synthetic = d.majority_count().saturating_sub(d.minority_count());
        let synthetic = stack_samples(&self.generate(d, n_synthetic)?, self.n_features);
        let features = d.features().vstack(&synthetic)?;
        let mut labels = d.labels().to_vec();
        labels.extend(std::iter::repeat(MINORITY).take(n_synthetic));
        let mut doc = DocClassifier {
            network: self.discriminator.clone(),
        };
        doc.network.zero_grad();
        let mut opt = Adam::new(self.config.learning_rate);
        let mut rng = SplitMix64::new(derive_seed(self.config.seed, &[TAG_DOC]));
        let mut order: Vec<usize> = (0..labels.len()).collect();
        let batch_size = self.config.doc_batch_size.max(1);
        for _ in 0..self.config.doc_epochs {
            rng.shuffle(&mut order);
            for chunk in order.chunks(batch_size) {
                let x = features.select_rows(chunk);
                let y = one_hot(chunk.iter().map(|&i| labels[i]));
                doc.network.forward(&x)?;
                doc.network.backward(LossKind::Bce, &y)?;
                opt.step(&mut doc.network)?;
            }
        }
        Ok(doc)
    }

    pub fn to_checkpoint(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            model: self.clone(),
        })?)
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(text)?;
        if ckpt.format != CHECKPOINT_FORMAT || ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::validation(format!(
                "unsupported checkpoint {} v{}",
                ckpt.format, ckpt.version
            )));
        }
        let mut model = ckpt.model;
        model.generator.restore_slots();
        model.discriminator.restore_slots();
        model.generator_opt = Adam::new(model.config.learning_rate);
        model.discriminator_opt = Adam::new(model.config.learning_rate);
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_checkpoint()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_checkpoint(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    model: ConvGenModel,
}

fn annotate(e: Error, epoch: usize, point: usize) -> Error {
    match e {
        Error::Numeric { context } => Error::Numeric {
            context: format!("{context} (neighbourhood epoch {epoch}, minority row {point})"),
        },
        other => other,
    }
}

fn one_hot(labels: impl Iterator<Item = u8>) -> Tensor2D {
    let labels: Vec<u8> = labels.collect();
    let mut t = Tensor2D::zeros(labels.len(), 2);
    for (r, &l) in labels.iter().enumerate() {
        t.set(r, if l == MINORITY { 0 } else { 1 }, 1.0);
    }
    t
}

/// The discriminator retrained on balanced data, used as a classifier.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DocClassifier {
    network: Network,
}

impl DocClassifier {
    pub fn network(&self) -> &Network {
        &self.network
    }

    /// Minority when the minority node strictly wins the argmax.
    pub fn predict(&self, features: &Tensor2D) -> Result<Vec<u8>> {
        let out = self.network.predict(features)?;
        Ok(out
            .iter_rows()
            .map(|r| u8::from(r[0] > r[1]))
            .collect())
    }
}

#[cfg(test)]
mod tests;
