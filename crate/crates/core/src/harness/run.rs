use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{BenchmarkConfig, OversamplerKind, OversamplerSpec};
use crate::baselines::{gan_generate, gan_train, interpolation_sample, repeater_sample, GanConfig};
use crate::classifiers::{fit, Classifier, ClassifierSpec};
use crate::convgen::{stack_samples, ConvGenModel, DocClassifier};
use crate::data::{imbalance_ratio, load_csv, stratified_kfold, Dataset, FoldPlan, MINORITY};
use crate::error::{Error, Result};
use crate::metrics::{cohen_kappa, confusion, f1_minority, ConfusionMatrix};
use crate::rng::{derive_seed, SplitMix64};
use crate::tensor::Tensor2D;

const TAG_FOLDS: u64 = 0x464f4c44;
const TAG_CELL: u64 = 0x43454c4c;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    pub rows: usize,
    pub features: usize,
    pub minority: usize,
    pub majority: usize,
    pub imbalance_ratio: f64,
}

/// Train/test split of one (shuffle, fold), as dataset row ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub dataset: String,
    pub shuffle: usize,
    pub fold: usize,
    pub train_ids: Vec<usize>,
    pub test_ids: Vec<usize>,
}

/// What one oversampler did on one training fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OversamplerAudit {
    pub dataset: String,
    pub oversampler: String,
    pub shuffle: usize,
    pub fold: usize,
    pub minority_train: usize,
    pub majority_train: usize,
    pub n_synthetic: usize,
    /// Row ids of the real rows the oversampler drew on, ascending.
    pub provenance: Vec<usize>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldScore {
    pub shuffle: usize,
    pub fold: usize,
    pub f1: f64,
    pub kappa: f64,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldFailure {
    pub shuffle: usize,
    pub fold: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Complete,
    Failed,
    /// The classifier does not exist for this oversampler (DoC without
    /// ConvGeN).
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub dataset: String,
    pub oversampler: String,
    pub classifier: String,
    pub status: CellStatus,
    pub folds: Vec<FoldScore>,
    pub failures: Vec<FoldFailure>,
    pub f1_mean: Option<f64>,
    pub f1_std: Option<f64>,
    pub kappa_mean: Option<f64>,
    pub kappa_std: Option<f64>,
}

/// Mean and sample standard deviation (`n - 1`; 0 for a single value).
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Some((mean, std))
}

impl Cell {
    fn assemble(
        dataset: String,
        oversampler: String,
        classifier: String,
        outcomes: Vec<(usize, usize, Outcome)>,
    ) -> Self {
        let mut folds = Vec::new();
        let mut failures = Vec::new();
        let mut applicable = false;
        for (shuffle, fold, outcome) in outcomes {
            match outcome {
                Outcome::Score(s) => {
                    applicable = true;
                    folds.push(s);
                }
                Outcome::Failed(message) => {
                    applicable = true;
                    failures.push(FoldFailure { shuffle, fold, message });
                }
                Outcome::NotApplicable => {}
            }
        }
        let status = match (applicable, failures.is_empty()) {
            (false, _) => CellStatus::NotApplicable,
            (true, true) => CellStatus::Complete,
            (true, false) => CellStatus::Failed,
        };
        let mut cell = Self {
            dataset,
            oversampler,
            classifier,
            status,
            folds,
            failures,
            f1_mean: None,
            f1_std: None,
            kappa_mean: None,
            kappa_std: None,
        };
        cell.summarize();
        cell
    }

    /// Recomputes the summary statistics from the fold scores. Only
    /// complete cells get them.
    pub fn summarize(&mut self) {
        if self.status != CellStatus::Complete {
            return;
        }
        let f1: Vec<f64> = self.folds.iter().map(|f| f.f1).collect();
        let kappa: Vec<f64> = self.folds.iter().map(|f| f.kappa).collect();
        if let (Some((fm, fs)), Some((km, ks))) = (mean_std(&f1), mean_std(&kappa)) {
            self.f1_mean = Some(fm);
            self.f1_std = Some(fs);
            self.kappa_mean = Some(km);
            self.kappa_std = Some(ks);
        }
    }
}

/// Wall-clock time of one (dataset, oversampler, shuffle, fold) job.
/// Kept out of the report so that raw dumps are reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobTiming {
    pub dataset: String,
    pub oversampler: String,
    pub shuffle: usize,
    pub fold: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub config: BenchmarkConfig,
    pub datasets: Vec<DatasetSummary>,
    pub folds: Vec<FoldRecord>,
    pub audits: Vec<OversamplerAudit>,
    pub cells: Vec<Cell>,
    #[serde(skip)]
    pub timings: Vec<JobTiming>,
}

impl BenchmarkReport {
    pub fn cell(&self, dataset: &str, oversampler: &str, classifier: &str) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.dataset == dataset && c.oversampler == oversampler && c.classifier == classifier)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
    /// Where `export_folds` writes per-fold CSVs.
    pub export_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
enum Outcome {
    Score(FoldScore),
    Failed(String),
    NotApplicable,
}

/// External predictions keyed by (dataset, oversampler, shuffle, fold).
type ExternalTable = HashMap<(String, String, usize, usize), Vec<u8>>;

/// Reads an external predictions CSV with columns
/// `dataset,oversampler,shuffle,fold,position,prediction`, where positions
/// follow the exported test-fold order and predictions are 1 (minority) or
/// 0 (majority).
pub fn load_external_predictions(path: impl AsRef<Path>) -> Result<HashMap<(String, String, usize, usize), Vec<u8>>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let mut table: ExternalTable = HashMap::new();
    for (i, record) in reader.deserialize::<(String, String, usize, usize, usize, u8)>().enumerate() {
        let (dataset, oversampler, shuffle, fold, position, prediction) = record?;
        let parse = |message: String| Error::Parse {
            path: path.to_path_buf(),
            row: i + 1,
            column: "prediction".into(),
            message,
        };
        if prediction > 1 {
            return Err(parse(format!("prediction must be 0 or 1, got {prediction}")));
        }
        let labels = table.entry((dataset, oversampler, shuffle, fold)).or_default();
        if position != labels.len() {
            return Err(parse(format!("expected position {}, got {position}", labels.len())));
        }
        labels.push(prediction);
    }
    Ok(table)
}

/// Reads pre-generated synthetic rows: a CSV of feature columns with a
/// header and no label column.
pub fn load_synthetic(path: impl AsRef<Path>) -> Result<Tensor2D> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = reader.headers()?.clone();
    let mut values = Vec::new();
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                row: i + 1,
                column: headers.get(j).unwrap_or("?").into(),
                message: format!("not a number: {cell:?}"),
            })?;
            values.push(v);
        }
        rows += 1;
    }
    Tensor2D::new(rows, headers.len(), values)
}

struct Oversampled {
    samples: Tensor2D,
    provenance: Vec<usize>,
    doc: Option<DocClassifier>,
}

fn oversample(
    spec: &OversamplerSpec,
    train: &Dataset,
    n_synthetic: usize,
    seed: u64,
    want_doc: bool,
    from_file: Option<&std::result::Result<Tensor2D, String>>,
) -> Result<Oversampled> {
    let minority_idx = train.minority_indices();
    let minority = train.features().select_rows(&minority_idx);
    let minority_ids = || minority_idx.iter().map(|&i| train.row_ids()[i]).collect::<Vec<_>>();
    let out = match &spec.kind {
        OversamplerKind::Repeater => {
            let used = minority_idx.len().min(n_synthetic);
            let mut provenance = minority_ids();
            provenance.truncate(used);
            Oversampled {
                samples: repeater_sample(&minority, n_synthetic)?,
                provenance,
                doc: None,
            }
        }
        OversamplerKind::Gan(cfg) => {
            let gan = gan_train(&minority, &GanConfig { seed, ..cfg.clone() })?;
            Oversampled {
                samples: gan_generate(&gan, n_synthetic)?,
                provenance: minority_ids(),
                doc: None,
            }
        }
        OversamplerKind::Interpolation { k } => {
            let out = interpolation_sample(&minority, *k, n_synthetic, &mut SplitMix64::new(seed))?;
            let ids = minority_ids();
            let used: BTreeSet<usize> = out.pairs.iter().flat_map(|&(a, b)| [ids[a], ids[b]]).collect();
            Oversampled {
                samples: out.samples,
                provenance: used.into_iter().collect(),
                doc: None,
            }
        }
        OversamplerKind::Convgen(cs) => {
            let mut model = ConvGenModel::for_dataset(cs.resolve(seed)?, train)?;
            model.train(train)?;
            let batches = model.generate(train, n_synthetic)?;
            let used: BTreeSet<usize> = batches
                .iter()
                .flat_map(|b| b.source_neighborhood.iter().copied())
                .collect();
            let doc = if want_doc { Some(model.retrain_doc(train)?) } else { None };
            Oversampled {
                samples: stack_samples(&batches, train.n_features()),
                provenance: used.into_iter().collect(),
                doc,
            }
        }
        OversamplerKind::FromFile { path } => {
            let rows = match from_file {
                Some(Ok(rows)) => rows,
                Some(Err(e)) => return Err(Error::validation(e.clone())),
                None => return Err(Error::validation(format!("{} was not loaded", path.display()))),
            };
            if rows.cols() != train.n_features() {
                return Err(Error::shape("synthetic file columns", train.n_features(), rows.cols()));
            }
            if rows.rows() == 0 && n_synthetic > 0 {
                return Err(Error::validation(format!("{} has no rows", path.display())));
            }
            // Cycle through the file in order when it holds too few rows.
            let pick: Vec<usize> = (0..n_synthetic).map(|i| i % rows.rows().max(1)).collect();
            Oversampled {
                samples: rows.select_rows(&pick),
                provenance: Vec::new(),
                doc: None,
            }
        }
    };
    if out.samples.shape() != (n_synthetic, train.n_features()) {
        return Err(Error::shape(
            "synthetic rows",
            format!("{n_synthetic} x {}", train.n_features()),
            format!("{} x {}", out.samples.rows(), out.samples.cols()),
        ));
    }
    if !out.samples.all_finite() {
        return Err(Error::Numeric {
            context: format!("{} produced non-finite synthetic values", spec.label()),
        });
    }
    Ok(out)
}

struct Job {
    dataset: usize,
    shuffle: usize,
    fold: usize,
    oversampler: usize,
}

struct JobResult {
    audit: OversamplerAudit,
    outcomes: Vec<Outcome>,
    seconds: f64,
}

struct Inputs<'a> {
    cfg: &'a BenchmarkConfig,
    datasets: &'a [Dataset],
    names: &'a [String],
    plans: &'a [FoldPlan],
    synthetic_files: &'a HashMap<usize, std::result::Result<Tensor2D, String>>,
    external: &'a HashMap<usize, std::result::Result<ExternalTable, String>>,
    export_dir: Option<&'a Path>,
}

fn score(truth: &[u8], predicted: &[u8], shuffle: usize, fold: usize) -> Result<FoldScore> {
    let cm = confusion(truth, predicted)?;
    Ok(FoldScore {
        shuffle,
        fold,
        f1: f1_minority(&cm),
        kappa: cohen_kappa(&cm),
        confusion: cm,
    })
}

fn run_job(inputs: &Inputs<'_>, job: &Job) -> JobResult {
    let start = Instant::now();
    let cfg = inputs.cfg;
    let d = &inputs.datasets[job.dataset];
    let plan = &inputs.plans[job.dataset];
    let spec = &cfg.oversamplers[job.oversampler];
    let (dataset_name, oversampler_name) = (inputs.names[job.dataset].clone(), spec.label());
    let train_idx = plan.train_indices(job.shuffle, job.fold);
    let test_idx = plan.test_indices(job.shuffle, job.fold);
    let mut audit = OversamplerAudit {
        dataset: dataset_name.clone(),
        oversampler: oversampler_name.clone(),
        shuffle: job.shuffle,
        fold: job.fold,
        minority_train: 0,
        majority_train: 0,
        n_synthetic: 0,
        provenance: Vec::new(),
        error: None,
    };
    let seed = derive_seed(
        cfg.seed,
        &[TAG_CELL, job.dataset as u64, job.shuffle as u64, job.fold as u64, job.oversampler as u64],
    );
    let want_doc = spec.is_convgen() && cfg.classifiers.contains(&ClassifierSpec::Doc);

    let prepared = (|| -> Result<(Dataset, Dataset, Tensor2D, Vec<u8>, Option<DocClassifier>)> {
        let train = d.subset(&train_idx)?;
        let test = d.subset(&test_idx)?;
        audit.minority_train = train.minority_count();
        audit.majority_train = train.majority_count();
        let n_synthetic = audit.majority_train.saturating_sub(audit.minority_train);
        audit.n_synthetic = n_synthetic;
        let out = oversample(
            spec,
            &train,
            n_synthetic,
            seed,
            want_doc,
            inputs.synthetic_files.get(&job.oversampler),
        )?;
        audit.provenance = out.provenance;
        let train_ids: BTreeSet<usize> = train.row_ids().iter().copied().collect();
        if let Some(id) = audit.provenance.iter().find(|id| !train_ids.contains(id)) {
            return Err(Error::validation(format!("oversampler used row {id} outside the training fold")));
        }
        let features = train.features().vstack(&out.samples)?;
        let mut labels = train.labels().to_vec();
        labels.extend(std::iter::repeat(MINORITY).take(n_synthetic));
        if let Some(dir) = inputs.export_dir {
            export_training_set(dir, &dataset_name, &oversampler_name, job, d, &features, &labels, train.n_samples())?;
        }
        Ok((train, test, features, labels, out.doc))
    })();

    let outcomes = match prepared {
        Err(e) => {
            let message = format!("{oversampler_name}: {e}");
            log::warn!("{dataset_name} shuffle {} fold {}: {message}", job.shuffle, job.fold);
            audit.error = Some(message.clone());
            cfg.classifiers
                .iter()
                .map(|c| match c {
                    ClassifierSpec::Doc if !spec.is_convgen() => Outcome::NotApplicable,
                    _ => Outcome::Failed(message.clone()),
                })
                .collect()
        }
        Ok((_, test, features, labels, doc)) => cfg
            .classifiers
            .iter()
            .enumerate()
            .map(|(ci, c)| {
                let classifier = match c {
                    ClassifierSpec::Doc => match &doc {
                        Some(doc) => Ok(Classifier::Doc(doc.clone())),
                        None => return Outcome::NotApplicable,
                    },
                    ClassifierSpec::External { path } => match inputs.external.get(&ci) {
                        Some(Ok(table)) => table
                            .get(&(dataset_name.clone(), oversampler_name.clone(), job.shuffle, job.fold))
                            .map(|labels| Classifier::External(labels.clone()))
                            .ok_or_else(|| Error::validation(format!("{path} has no predictions for this fold"))),
                        Some(Err(e)) => Err(Error::validation(e.clone())),
                        None => Err(Error::validation(format!("{path} was not loaded"))),
                    },
                    other => fit(other, &features, &labels),
                };
                let scored = classifier
                    .and_then(|m| m.predict(test.features()))
                    .and_then(|p| score(test.labels(), &p, job.shuffle, job.fold));
                match scored {
                    Ok(s) => Outcome::Score(s),
                    Err(e) => Outcome::Failed(format!("{}: {e}", c.label())),
                }
            })
            .collect(),
    };
    let seconds = start.elapsed().as_secs_f64();
    log::info!(
        "{dataset_name} / {oversampler_name} shuffle {} fold {} done in {seconds:.1}s",
        job.shuffle,
        job.fold
    );
    JobResult {
        audit,
        outcomes,
        seconds,
    }
}

#[allow(clippy::too_many_arguments)]
fn export_training_set(
    dir: &Path,
    dataset: &str,
    oversampler: &str,
    job: &Job,
    d: &Dataset,
    features: &Tensor2D,
    labels: &[u8],
    n_real: usize,
) -> Result<()> {
    let folder = dir.join("folds").join(sanitize(dataset)).join(sanitize(oversampler));
    std::fs::create_dir_all(&folder)?;
    let mut w = csv::Writer::from_path(folder.join(format!("s{}_f{}_train.csv", job.shuffle, job.fold)))?;
    let mut header: Vec<String> = d.feature_names().to_vec();
    header.extend(["label".into(), "synthetic".into()]);
    w.write_record(&header)?;
    for (i, (row, &l)) in features.iter_rows().zip(labels).enumerate() {
        let mut record: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        record.push(l.to_string());
        record.push(u8::from(i >= n_real).to_string());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

fn export_test_sets(dir: &Path, names: &[String], datasets: &[Dataset], folds: &[FoldRecord]) -> Result<()> {
    for rec in folds {
        let di = names.iter().position(|n| *n == rec.dataset).expect("fold of a known dataset");
        let d = &datasets[di];
        let position: HashMap<usize, usize> = d.row_ids().iter().enumerate().map(|(p, &id)| (id, p)).collect();
        let folder = dir.join("folds").join(sanitize(&rec.dataset));
        std::fs::create_dir_all(&folder)?;
        let mut w = csv::Writer::from_path(folder.join(format!("s{}_f{}_test.csv", rec.shuffle, rec.fold)))?;
        let mut header = vec!["row_id".to_string()];
        header.extend(d.feature_names().iter().cloned());
        header.push("label".into());
        w.write_record(&header)?;
        for &id in &rec.test_ids {
            let p = position[&id];
            let mut record = vec![id.to_string()];
            record.extend(d.features().row(p).iter().map(|v| v.to_string()));
            record.push(d.labels()[p].to_string());
            w.write_record(&record)?;
        }
        w.flush()?;
    }
    Ok(())
}

/// File-system friendly version of a report label.
pub fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

/// Runs every (dataset, oversampler, classifier) cell over the configured
/// repeated stratified cross-validation.
///
/// Each (dataset, shuffle, fold, oversampler) job trains its oversampler
/// on the training fold only, balances it, fits every classifier on the
/// union and scores the untouched test fold. Jobs run on `opts.jobs`
/// workers; the report is assembled in a fixed order, so it does not
/// depend on scheduling. Failing jobs are recorded, never fatal.
pub fn run_benchmark(cfg: &BenchmarkConfig, opts: &RunOptions) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let mut datasets = Vec::new();
    let mut names = Vec::new();
    for spec in &cfg.datasets {
        let d = load_csv(&spec.path, &spec.label_column, &spec.minority_label)?;
        names.push(spec.display_name());
        datasets.push(d);
    }
    run_on_datasets(cfg, &names, &datasets, opts)
}

/// [`run_benchmark`] on datasets that are already in memory; `names` take
/// the place of the configured dataset names.
pub fn run_on_datasets(
    cfg: &BenchmarkConfig,
    names: &[String],
    datasets: &[Dataset],
    opts: &RunOptions,
) -> Result<BenchmarkReport> {
    if names.len() != datasets.len() {
        return Err(Error::shape("dataset names", datasets.len(), names.len()));
    }
    let summaries = names
        .iter()
        .zip(datasets)
        .map(|(name, d)| {
            Ok(DatasetSummary {
                name: name.clone(),
                rows: d.n_samples(),
                features: d.n_features(),
                minority: d.minority_count(),
                majority: d.majority_count(),
                imbalance_ratio: imbalance_ratio(d)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let plans = datasets
        .iter()
        .enumerate()
        .map(|(di, d)| stratified_kfold(d, cfg.n_folds, cfg.n_shuffles, derive_seed(cfg.seed, &[TAG_FOLDS, di as u64])))
        .collect::<Result<Vec<_>>>()?;

    let synthetic_files: HashMap<usize, std::result::Result<Tensor2D, String>> = cfg
        .oversamplers
        .iter()
        .enumerate()
        .filter_map(|(i, o)| match &o.kind {
            OversamplerKind::FromFile { path } => {
                Some((i, load_synthetic(path).map_err(|e| format!("{}: {e}", path.display()))))
            }
            _ => None,
        })
        .collect();
    let external: HashMap<usize, std::result::Result<ExternalTable, String>> = cfg
        .classifiers
        .iter()
        .enumerate()
        .filter_map(|(i, c)| match c {
            ClassifierSpec::External { path } => {
                Some((i, load_external_predictions(path).map_err(|e| format!("{path}: {e}"))))
            }
            _ => None,
        })
        .collect();

    let mut folds = Vec::new();
    let mut jobs = Vec::new();
    for (di, plan) in plans.iter().enumerate() {
        for shuffle in 0..cfg.n_shuffles {
            for fold in 0..cfg.n_folds {
                let ids = |idx: Vec<usize>| idx.into_iter().map(|i| datasets[di].row_ids()[i]).collect();
                folds.push(FoldRecord {
                    dataset: names[di].clone(),
                    shuffle,
                    fold,
                    train_ids: ids(plan.train_indices(shuffle, fold)),
                    test_ids: ids(plan.test_indices(shuffle, fold)),
                });
                for oversampler in 0..cfg.oversamplers.len() {
                    jobs.push(Job {
                        dataset: di,
                        shuffle,
                        fold,
                        oversampler,
                    });
                }
            }
        }
    }

    let export_dir = if cfg.export_folds { opts.export_dir.as_deref() } else { None };
    if let Some(dir) = export_dir {
        export_test_sets(dir, names, datasets, &folds)?;
    }
    let inputs = Inputs {
        cfg,
        datasets,
        names,
        plans: &plans,
        synthetic_files: &synthetic_files,
        external: &external,
        export_dir,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))?;
    let results: Vec<JobResult> = pool.install(|| jobs.par_iter().map(|j| run_job(&inputs, j)).collect());

    // Jobs are ordered dataset, shuffle, fold, oversampler.
    let mut cells = Vec::new();
    for (di, name) in names.iter().enumerate() {
        for (oi, o) in cfg.oversamplers.iter().enumerate() {
            for (ci, c) in cfg.classifiers.iter().enumerate() {
                let outcomes = jobs
                    .iter()
                    .zip(&results)
                    .filter(|(j, _)| j.dataset == di && j.oversampler == oi)
                    .map(|(j, r)| (j.shuffle, j.fold, r.outcomes[ci].clone()))
                    .collect();
                cells.push(Cell::assemble(name.clone(), o.label(), c.label(), outcomes));
            }
        }
    }
    let timings = results
        .iter()
        .map(|r| JobTiming {
            dataset: r.audit.dataset.clone(),
            oversampler: r.audit.oversampler.clone(),
            shuffle: r.audit.shuffle,
            fold: r.audit.fold,
            seconds: r.seconds,
        })
        .collect();
    Ok(BenchmarkReport {
        config: cfg.clone(),
        datasets: summaries,
        folds,
        audits: results.into_iter().map(|r| r.audit).collect(),
        cells,
        timings,
    })
}
