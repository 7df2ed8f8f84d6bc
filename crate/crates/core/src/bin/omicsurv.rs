use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use omicsurv::data::load_dataset;
use omicsurv::integrators::ModelKind;
use omicsurv::pipeline::{compare_models, cross_validate, stability_analysis, PipelineConfig};
use omicsurv::report::{
    comparison_csv, km_export_from_report, km_svg, load_report, pairwise_csv, report_csv, report_to_json, violin_csv,
    write_synthetic, PlantedFeature, RunManifest, SyntheticSpec,
};
use omicsurv::Error;

#[derive(Parser)]
#[command(name = "omicsurv", version, about = "Survival-supervised multi-omics integration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Repeated k-fold cross-validation of one model on one dataset.
    Run(RunArgs),
    /// Ranks and t-tests across saved reports.
    Compare(CompareArgs),
    /// Kaplan-Meier curves of the risk clusters in a saved report.
    Km(KmArgs),
    /// Top-feature frequencies over repeated fits.
    Stability(StabilityArgs),
    /// Writes a synthetic dataset with planted hazard features.
    Synth(SynthArgs),
}

/// Overrides for individual config fields.
#[derive(Args, Default)]
struct ConfigFlags {
    /// JSON config file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    k_per_layer: Option<usize>,
    #[arg(long)]
    fingerprints: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    l2_lambda: Option<f64>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    noise_std: Option<f64>,
    #[arg(long)]
    select_alpha: Option<f64>,
    /// Variance filtering on all rows instead of training rows only.
    #[arg(long)]
    selection_on_all_rows: bool,
}

impl ConfigFlags {
    fn resolve(&self) -> Result<PipelineConfig, Error> {
        let mut c = match &self.config {
            Some(p) => PipelineConfig::from_json(&fs::read_to_string(p)?)?,
            None => PipelineConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {
                $(if let Some(v) = self.$flag { c.$field = v; })*
            };
        }
        set!(folds => folds, repeats => repeats, seed => master_seed, k_per_layer => k_per_layer,
             fingerprints => n_fingerprints, hidden => hidden, epochs => epochs, learning_rate => learning_rate,
             l2_lambda => l2_lambda, dropout => dropout, noise_std => noise_std, select_alpha => select_alpha);
        if self.selection_on_all_rows {
            c.selection_on_train_only = false;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args)]
struct RunArgs {
    /// Dataset directory (one TSV per layer plus survival.tsv).
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model: ModelKind,
    #[arg(long)]
    out: PathBuf,
    /// Label stored in the report; defaults to the dataset directory name.
    #[arg(long)]
    name: Option<String>,
    #[command(flatten)]
    config: ConfigFlags,
}

#[derive(Args)]
struct CompareArgs {
    /// Report files (`.json` or `.csv`).
    #[arg(required = true, num_args = 2..)]
    reports: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct KmArgs {
    /// JSON report produced by `run`.
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    repeat: usize,
}

#[derive(Args)]
struct StabilityArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model: ModelKind,
    #[arg(long, default_value_t = 32)]
    runs: usize,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigFlags,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 300)]
    samples: usize,
    /// Comma-separated `name:width` pairs.
    #[arg(long, default_value = "rna:100,cnv:100,meth:100")]
    layers: String,
    /// Comma-separated `layer:index:weight` triples.
    #[arg(long, default_value = "")]
    planted: String,
    #[arg(long, default_value_t = 0.3)]
    censoring: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// A failure with its process exit code.
struct Failure(u8, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidConfig(_) => 2,
            Error::AllFoldsFailed => 4,
            _ => 1,
        };
        Failure(code, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure(1, e.to_string())
    }
}

fn dataset_or_exit(path: &Path) -> Result<omicsurv::data::MultiOmicsDataset, Failure> {
    load_dataset(path).map_err(|e| Failure(3, format!("cannot load dataset {}: {e}", path.display())))
}

fn config_or_exit(flags: &ConfigFlags) -> Result<PipelineConfig, Failure> {
    flags.resolve().map_err(|e| Failure(2, format!("invalid config: {e}")))
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let config = config_or_exit(&args.config)?;
    let dataset = dataset_or_exit(&args.data)?;
    let name = args.name.unwrap_or_else(|| args.data.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default());
    let mut report = cross_validate(&dataset, args.model, &config)?;
    report.dataset = name.clone();
    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("report.csv"), report_csv(&report)?)?;
    fs::write(args.out.join("report.json"), report_to_json(&report)?)?;
    let manifest = RunManifest::new(name, args.model, &config)?;
    fs::write(args.out.join("manifest.json"), serde_json::to_string_pretty(&manifest).map_err(Error::from)?)?;
    println!(
        "{}: mean C-index {:.4} (sd {:.4}) over {} folds, {} failed",
        args.model,
        report.mean_c_index,
        report.std_c_index,
        report.folds.len() - report.n_failed,
        report.n_failed
    );
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<(), Failure> {
    let reports = args.reports.iter().map(load_report).collect::<Result<Vec<_>, _>>()?;
    let cmp = compare_models(&reports)?;
    print!("{}", cmp.render());
    if let Some(out) = args.out {
        fs::create_dir_all(&out)?;
        fs::write(out.join("comparison.csv"), comparison_csv(&cmp)?)?;
        fs::write(out.join("pairwise.csv"), pairwise_csv(&cmp)?)?;
        fs::write(out.join("violin.csv"), violin_csv(&reports)?)?;
    }
    Ok(())
}

fn cmd_km(args: KmArgs) -> Result<(), Failure> {
    let report = load_report(&args.report)?;
    let dataset = dataset_or_exit(&args.data)?;
    let export = km_export_from_report(&report, &dataset, args.repeat)?;
    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("km.csv"), export.to_csv()?)?;
    fs::write(args.out.join("km.svg"), km_svg(&export))?;
    println!("logrank p = {:.4e}", export.logrank_p);
    Ok(())
}

fn cmd_stability(args: StabilityArgs) -> Result<(), Failure> {
    let config = config_or_exit(&args.config)?;
    let dataset = dataset_or_exit(&args.data)?;
    let report = stability_analysis(&dataset, args.model, args.runs, &config)?;
    fs::create_dir_all(&args.out)?;
    let mut w = csv::Writer::from_path(args.out.join("layer_counts.csv")).map_err(Error::from)?;
    w.write_record(["layer", "width", "count", "normalized"]).map_err(Error::from)?;
    for ((name, width), (count, norm)) in
        report.layers.iter().zip(report.layer_counts.iter().zip(&report.layer_counts_normalized))
    {
        w.write_record([name.clone(), width.to_string(), count.to_string(), norm.to_string()]).map_err(Error::from)?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(args.out.join("feature_frequency.csv")).map_err(Error::from)?;
    w.write_record(["layer", "feature", "global_index", "runs"]).map_err(Error::from)?;
    for (f, runs) in &report.feature_frequency {
        w.write_record([f.layer_name.clone(), f.feature_name.clone(), f.global_index.to_string(), runs.to_string()])
            .map_err(Error::from)?;
    }
    w.flush()?;
    for failure in &report.failures {
        eprintln!("warning: {failure}");
    }
    println!("{} of {} runs succeeded", report.runs_succeeded, report.runs_requested);
    Ok(())
}

fn parse_synth(args: &SynthArgs) -> Result<SyntheticSpec, String> {
    let layers = args
        .layers
        .split(',')
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (name, width) = item.split_once(':').ok_or(format!("bad layer '{item}'"))?;
            Ok((name.to_owned(), width.parse().map_err(|_| format!("bad width in '{item}'"))?))
        })
        .collect::<Result<Vec<(String, usize)>, String>>()?;
    let planted = args
        .planted
        .split(',')
        .filter(|s| !s.is_empty())
        .map(|item| {
            let parts: Vec<&str> = item.split(':').collect();
            let [layer, index, weight] = parts[..] else {
                return Err(format!("bad planted feature '{item}'"));
            };
            Ok(PlantedFeature {
                layer: layer.to_owned(),
                index: index.parse().map_err(|_| format!("bad index in '{item}'"))?,
                weight: weight.parse().map_err(|_| format!("bad weight in '{item}'"))?,
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(SyntheticSpec { n_samples: args.samples, layers, planted, censoring_rate: args.censoring, seed: args.seed })
}

fn cmd_synth(args: SynthArgs) -> Result<(), Failure> {
    let spec = parse_synth(&args).map_err(|e| Failure(2, e))?;
    let ds = write_synthetic(&spec, &args.out)?;
    println!(
        "wrote {} samples, {} layers, {} events to {}",
        ds.n_samples(),
        ds.layers().len(),
        ds.survival().n_events(),
        args.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Km(a) => cmd_km(a),
        Command::Stability(a) => cmd_stability(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
