use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use pam_bench::config::{read_settings, Settings};
use pam_bench::{emit_report, run_suite, to_csv, BenchError, ExperimentConfig};

/// Run a sequence-memory experiment and write a CSV report.
#[derive(Debug, Parser)]
#[command(name = "bench", version)]
struct Cli {
    /// capacity | correlation | forgetting | possibilities | noise | efficiency | validate-iou
    experiment: Option<String>,
    /// Base settings as `key = value` lines; flags override them.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    nc: Vec<String>,
    #[arg(long)]
    nk: Option<String>,
    #[arg(long)]
    w: Option<String>,
    /// Polynomial separation degree (AHN).
    #[arg(long)]
    d: Option<String>,
    /// Softmax separation inverse temperature (AHN).
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    sample_width: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    corr: Vec<String>,
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    noise: Vec<String>,
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    lengths: Vec<String>,
    #[arg(long)]
    sequences: Option<String>,
    #[arg(long)]
    seq_len: Option<String>,
    #[arg(long)]
    generations: Option<String>,
    #[arg(long)]
    threshold: Option<String>,
    #[arg(long)]
    max_len: Option<String>,
    /// synthetic | protein
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    fasta: Option<PathBuf>,
    #[arg(long)]
    threads: Option<String>,
    /// Record per-trial wall time in the CSV.
    #[arg(long)]
    timing: bool,
    /// CSV path; the manifest goes to `<out>.manifest`. Prints to stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Cli {
    fn overrides(self, base: &mut Settings) {
        let mut set = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                base.insert(k.to_string(), v);
            }
        };
        let list = |v: Vec<String>| (!v.is_empty()).then(|| v.join(","));
        set("experiment", self.experiment);
        set("model", self.model);
        set("nc", list(self.nc));
        set("nk", self.nk);
        set("w", self.w);
        if self.d.is_some() || self.beta.is_some() {
            // A flag picks the separation; drop whichever the file chose.
            base.remove("d");
            base.remove("beta");
        }
        let mut set = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                base.insert(k.to_string(), v);
            }
        };
        set("d", self.d);
        set("beta", self.beta);
        set("sample_width", self.sample_width);
        set("mode", self.mode);
        set("trials", self.trials);
        set("seed", self.seed);
        set("corr", list(self.corr));
        set("noise", list(self.noise));
        set("lengths", list(self.lengths));
        set("sequences", self.sequences);
        set("seq_len", self.seq_len);
        set("generations", self.generations);
        set("threshold", self.threshold);
        set("max_len", self.max_len);
        set("dataset", self.dataset);
        set("fasta", self.fasta.map(|p| p.display().to_string()));
        set("threads", self.threads);
        set("timing", self.timing.then(|| "true".to_string()));
        set("out", self.out.map(|p| p.display().to_string()));
    }
}

fn run(cli: Cli) -> Result<(), BenchError> {
    let mut settings = match &cli.config {
        Some(path) => read_settings(path)?,
        None => Settings::new(),
    };
    settings.remove("version");
    cli.overrides(&mut settings);
    let cfg = ExperimentConfig::from_settings(&settings)?;
    let records = run_suite(&cfg)?;
    match &cfg.out {
        Some(path) => emit_report(&records, &cfg, path)?,
        None => print!("{}", to_csv(&records)),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bench: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
