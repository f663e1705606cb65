use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use convgen::data::load_csv;
use convgen::harness::{
    emit_report, load_raw, load_synthetic, render, resolve_seed, run_benchmark, BenchmarkConfig, CellStatus,
    OversamplerKind, OversamplerSpec, ReportFormat, RunOptions, SEED_ENV,
};
use convgen::pca::pca_project;

#[derive(Parser)]
#[command(name = "bench", version, about = "ConvGeN oversampling benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the cross-validated benchmark described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: the config's output_dir, else ./bench-out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Master seed; overrides CONVGEN_SEED and the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Add an oversampler that replays synthetic rows from this CSV.
        #[arg(long = "synthetic-from")]
        synthetic_from: Vec<PathBuf>,
    },
    /// Project real and synthetic rows onto the real data's top two
    /// principal components; writes `set,x,y` CSV.
    Pca {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        synthetic: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "label-col", default_value = "Class")]
        label_col: String,
        #[arg(long = "minority-label", default_value = "positive")]
        minority_label: String,
        /// Use only the minority rows as the real set.
        #[arg(long)]
        minority_only: bool,
    },
    /// Re-render a raw JSON dump as a Markdown table or means CSV.
    Report {
        #[arg(long)]
        raw: PathBuf,
        #[arg(long, default_value = "md")]
        format: ReportFormat,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            jobs,
            synthetic_from,
        } => {
            let mut cfg = BenchmarkConfig::from_file(&config)
                .with_context(|| format!("reading config {}", config.display()))?;
            let env = std::env::var(SEED_ENV).ok();
            cfg.seed = resolve_seed(cfg.seed, env.as_deref(), seed)?;
            for path in synthetic_from {
                cfg.oversamplers.push(OversamplerSpec::new(OversamplerKind::FromFile { path }));
            }
            let out = out
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("bench-out"));
            let report = run_benchmark(
                &cfg,
                &RunOptions {
                    jobs,
                    export_dir: Some(out.clone()),
                },
            )?;
            for path in emit_report(&report, &out)? {
                println!("wrote {}", path.display());
            }
            let failed = report
                .cells
                .iter()
                .filter(|c| c.status == CellStatus::Failed)
                .count();
            if failed > 0 {
                eprintln!("{failed} cell(s) failed; see tables.md");
            }
        }
        Command::Pca {
            dataset,
            synthetic,
            out,
            label_col,
            minority_label,
            minority_only,
        } => {
            let d = load_csv(&dataset, &label_col, &minority_label)
                .with_context(|| format!("loading {}", dataset.display()))?;
            let real = if minority_only {
                d.minority_features()
            } else {
                d.features().clone()
            };
            let synthetic = load_synthetic(&synthetic)
                .with_context(|| format!("loading {}", synthetic.display()))?;
            let p = pca_project(&real, &synthetic)?;
            p.write_csv(&out)?;
            println!(
                "explained variance: {:.4}, {:.4}; wrote {}",
                p.explained_variance[0],
                p.explained_variance[1],
                out.display()
            );
        }
        Command::Report { raw, format } => {
            let report = load_raw(&raw).with_context(|| format!("reading {}", raw.display()))?;
            print!("{}", render(&report, format)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
