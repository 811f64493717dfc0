use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use modclass::harness::{
    build_models, emit_csv, run_experiment, ClassifierKind, ExperimentConfig, ModelSource,
    MODEL_DIR_ENV,
};
use modclass::num_complex::Complex64;
use modclass::signal::{Registry, SymbolBlock};
use modclass::{
    discriminant_classify, pdf_crossings, quadrature_feature, sampled_ecdf, ChannelConfig,
    DiscriminantModel, TheoreticalCdf,
};

#[derive(Parser)]
#[command(
    name = "modclass",
    version,
    about = "Sampled distribution distance modulation classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize testpoints and store classifier models for every SNR and L.
    BuildModels {
        #[command(flatten)]
        experiment: ExperimentArgs,
        /// Rewrite models that already exist.
        #[arg(long)]
        force: bool,
    },
    /// Run the Monte Carlo experiment and write CSV results.
    Run {
        #[command(flatten)]
        experiment: ExperimentArgs,
        /// Output directory for results.csv and confusion/.
        #[arg(long)]
        out: PathBuf,
        /// Fail instead of building models missing from the model directory.
        #[arg(long)]
        no_build: bool,
    },
    /// Print the pdf-crossings of two classes.
    Crossings {
        /// Two constellation names, e.g. 4QAM,16QAM.
        #[arg(long, value_delimiter = ',')]
        pair: Vec<String>,
        #[arg(long, allow_hyphen_values = true)]
        snr_db: f64,
    },
    /// Classify received symbols with a stored discriminant model.
    Classify {
        #[arg(long)]
        model: PathBuf,
        /// CSV of received symbols, one `re,im` row per symbol.
        #[arg(long)]
        iq: PathBuf,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON experiment configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model directory.
    #[arg(long, env = MODEL_DIR_ENV)]
    model_dir: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    classes: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr_db_grid: Option<Vec<f64>>,
    /// Symbols per trial.
    #[arg(long = "symbols", short = 'M')]
    m: Option<usize>,
    /// Trials per true class.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    l_grid: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    classifiers: Option<Vec<ClassifierKind>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    priors: Option<Vec<f64>>,
    /// Also use as many testpoints as the VD classifier at each SNR.
    #[arg(long)]
    match_vd_testpoints: bool,
}

impl ExperimentArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = &self.classes {
            cfg.classes = v.clone();
        }
        if let Some(v) = &self.snr_db_grid {
            cfg.snr_db_grid = v.clone();
        }
        if let Some(v) = self.m {
            cfg.m = v;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = &self.l_grid {
            cfg.l_grid = v.clone();
        }
        if let Some(v) = &self.classifiers {
            cfg.classifiers = v.clone();
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.priors {
            cfg.priors = v.clone();
        }
        cfg.match_vd_testpoints |= self.match_vd_testpoints;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::BuildModels { experiment, force } => {
            let cfg = experiment.config()?;
            let dir = experiment.model_dir.clone().with_context(|| {
                format!("no model directory: pass --model-dir or set {MODEL_DIR_ENV}")
            })?;
            let report = build_models(&cfg, &dir, force)?;
            println!(
                "{}: {} written, {} already present",
                dir.display(),
                report.written.len(),
                report.skipped.len()
            );
        }
        Command::Run {
            experiment,
            out,
            no_build,
        } => {
            let cfg = experiment.config()?;
            let source = match experiment.model_dir {
                Some(path) => ModelSource::Directory {
                    path,
                    build_missing: !no_build,
                },
                None if no_build => bail!("--no-build needs a model directory"),
                None => ModelSource::Build,
            };
            let rows = run_experiment(&cfg, &source)?;
            fs::create_dir_all(&out).with_context(|| out.display().to_string())?;
            emit_csv(&rows, &out)?;
            println!(
                "{:>8} {:>3} {:>12} {:>8} {:>8}",
                "snr_db", "L", "classifier", "pc", "stderr"
            );
            for r in &rows {
                println!(
                    "{:>8.2} {:>3} {:>12} {:>8.4} {:>8.4}",
                    r.snr_db, r.l, r.classifier, r.pc, r.stderr
                );
            }
        }
        Command::Crossings { pair, snr_db } => {
            if pair.len() != 2 {
                bail!(
                    "--pair takes exactly two constellation names, got {}",
                    pair.len()
                );
            }
            let reg = Registry::default();
            let sigma2 = ChannelConfig::from_snr_db(snr_db).noise_variance();
            let a = TheoreticalCdf::new(&reg.get(&pair[0])?, sigma2);
            let b = TheoreticalCdf::new(&reg.get(&pair[1])?, sigma2);
            for t in pdf_crossings(&a, &b) {
                println!("{t}");
            }
        }
        Command::Classify { model, iq } => {
            let text = fs::read_to_string(&model).with_context(|| model.display().to_string())?;
            let model: DiscriminantModel =
                serde_json::from_str(&text).with_context(|| model.display().to_string())?;
            let block = read_iq(&iq)?;
            let n = 2 * block.len();
            if n != model.n {
                bail!(
                    "model was built for N = {} feature samples ({} symbols) but {} holds {} symbols",
                    model.n,
                    model.n / 2,
                    iq.display(),
                    block.len()
                );
            }
            let x = sampled_ecdf(&quadrature_feature(&block), &model.testpoints);
            let decision = discriminant_classify(&model, &x)?;
            println!("{}", model.classes[decision.class].name);
            for (c, g) in model.classes.iter().zip(&decision.scores) {
                println!("  {:<8} g = {g}", c.name);
            }
        }
    }
    Ok(())
}

fn read_iq(path: &Path) -> Result<SymbolBlock> {
    let text = fs::read_to_string(path).with_context(|| path.display().to_string())?;
    let mut symbols = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = match parts.as_slice() {
            [re, im] => re.parse::<f64>().ok().zip(im.parse::<f64>().ok()),
            _ => None,
        };
        match parsed {
            Some((re, im)) => symbols.push(Complex64::new(re, im)),
            // tolerate a header line
            None if symbols.is_empty() && i == 0 => continue,
            None => bail!(
                "{}:{}: expected `re,im`, got `{line}`",
                path.display(),
                i + 1
            ),
        }
    }
    if symbols.is_empty() {
        bail!("{}: no symbols", path.display());
    }
    Ok(SymbolBlock::new(symbols)?)
}
