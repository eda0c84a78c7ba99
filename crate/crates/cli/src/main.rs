//! Benchmark CLI: scan datasets, run benchmarks and ablations, regenerate
//! reports, and record replay fixtures. All run parameters live in the TOML
//! config file; flags only locate inputs.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use vlmad::dataset::scan_layout;
use vlmad::harness::{
    emit_report, read_records, record_fixture, run_ablation, run_benchmark, ReportFormat,
    RunConfig, RunOutput,
};

#[derive(Parser)]
#[command(name = "vlmad", version, about = "Visual-language model anomaly detection benchmark")]
struct Cli {
    /// Path to the run config (TOML).
    #[arg(long, global = true, default_value = "vlmad.toml")]
    config: PathBuf,

    /// Log more (repeat for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan the dataset tree and write the manifest for audit.
    Scan,
    /// Run the benchmark described by the config file.
    Run,
    /// Run every configured strategy and emit the strategy-by-category
    /// accuracy matrix.
    Ablate,
    /// Regenerate reports from a previously written record log.
    Report {
        /// Path to a records.jsonl file.
        #[arg(long)]
        records: PathBuf,
        /// csv | markdown | both
        #[arg(long, default_value = "both")]
        format: String,
    },
    /// Run the benchmark while persisting every response to the fixture
    /// file, producing a replayable recording.
    RecordFixture,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    match cli.command {
        Command::Scan => {
            let config = RunConfig::from_file(&cli.config)?;
            let manifest = scan_layout(&config.dataset.root)?;
            let out = config.run.output_dir.join("manifest.json");
            std::fs::create_dir_all(&config.run.output_dir)?;
            std::fs::write(&out, manifest.to_json())
                .with_context(|| format!("writing {}", out.display()))?;
            println!("scanned {} categories under {}", manifest.categories.len(), config.dataset.root.display());
            for category in &manifest.categories {
                println!(
                    "  {:<16} train_normal={:<4} test={:<4} reference={}",
                    category.name,
                    category.train_normal.len(),
                    category.test_samples.len(),
                    category.reference.display()
                );
            }
            println!("manifest written to {}", out.display());
        }
        Command::Run => {
            let config = RunConfig::from_file(&cli.config)?;
            let output = run_benchmark(&config)?;
            print_summary(&output);
        }
        Command::Ablate => {
            let config = RunConfig::from_file(&cli.config)?;
            let (output, matrix) = run_ablation(&config)?;
            print_summary(&output);
            println!("\nablation matrix (ACC):");
            print!("{}", matrix.to_csv());
        }
        Command::Report { records, format } => {
            let config = RunConfig::from_file(&cli.config)?;
            let format = match format.as_str() {
                "csv" => ReportFormat::Csv,
                "markdown" | "md" => ReportFormat::Markdown,
                "both" => ReportFormat::Both,
                other => bail!("unknown report format {other:?} (expected csv | markdown | both)"),
            };
            let records = read_records(&records)?;
            let written = emit_report(
                &records,
                format,
                &config.run.output_dir,
                &config.backend.config.backend_id,
            )?;
            for path in written {
                println!("wrote {}", path.display());
            }
        }
        Command::RecordFixture => {
            let config = RunConfig::from_file(&cli.config)?;
            let fixture = config
                .backend
                .fixture_path
                .clone()
                .context("record-fixture requires backend.fixture_path in the config")?;
            let output = record_fixture(&config)?;
            print_summary(&output);
            println!("fixture written to {}", fixture.display());
        }
    }
    Ok(())
}

fn print_summary(output: &RunOutput) {
    let s = &output.summary;
    println!(
        "attempted {} | succeeded {} | excluded {} (unparseable {}, backend failures {})",
        s.attempted, s.succeeded, s.excluded, s.unparseable, s.backend_failures
    );
    println!("backend calls {} | cache hits {}", s.backend_calls, s.cache_hits);
    for (strategy, report) in &output.reports {
        let avg = &report.average;
        println!(
            "strategy {:<10} ACC {:.3} | AUROC {:.3} | AUPR {:.3} | n {}",
            strategy.id(),
            avg.acc,
            avg.auroc,
            avg.aupr,
            avg.n
        );
    }
    for path in &output.written {
        println!("wrote {}", path.display());
    }
}
