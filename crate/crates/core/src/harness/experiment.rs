use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::baselines::{kuiper_classify, ml_classify, rck_classify, vd_classify, VdModel};
use crate::bayes::{
    discriminant_classify, exact_bayes_classify, DiscriminantModel, RegionProbabilities,
};
use crate::distributions::{sampled_ecdf, TestpointSet, TheoreticalCdf};
use crate::error::{Error, Result};
use crate::harness::config::{ClassifierKind, ExperimentConfig};
use crate::harness::models::{
    build_models, class_cdfs, compute_snr_models, load_snr_models, SnrModels,
};
use crate::harness::report::ConfusionMatrix;
use crate::harness::seeds::trial_seed;
use crate::signal::{quadrature_feature, transmit, ChannelConfig, Constellation};

/// Where [`run_experiment`] gets its testpoint and classifier models.
#[derive(Debug, Clone)]
pub enum ModelSource {
    /// Build everything in memory.
    Build,
    /// Load from a model directory, optionally building and storing any
    /// missing SNR first.
    Directory { path: PathBuf, build_missing: bool },
}

/// Outcome of one classifier in one (SNR, L) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub snr_db: f64,
    /// Testpoints used; 0 for classifiers that use the full sample.
    pub l: usize,
    pub classifier: ClassifierKind,
    pub pc: f64,
    pub stderr: f64,
    pub confusion: ConfusionMatrix,
    /// Per-trial correctness, ordered by (true class, trial). Every row of a
    /// cell is evaluated on the same blocks, so these align across
    /// classifiers for paired comparisons.
    pub correct: Vec<bool>,
}

enum Evaluator<'a> {
    Bayes {
        set: usize,
        model: &'a DiscriminantModel,
    },
    Exact {
        set: usize,
        probs: Vec<RegionProbabilities>,
        priors: &'a [f64],
    },
    Rck {
        set: usize,
        means: Vec<Vec<f64>>,
    },
    Vd {
        set: usize,
        model: &'a VdModel,
    },
    Kuiper {
        classes: &'a [TheoreticalCdf],
    },
    Ml {
        classes: Vec<(Constellation, f64)>,
        priors: &'a [f64],
    },
}

struct Column<'a> {
    kind: ClassifierKind,
    l: usize,
    eval: Evaluator<'a>,
}

fn obtain_models(cfg: &ExperimentConfig, source: &ModelSource) -> Result<Vec<SnrModels>> {
    match source {
        ModelSource::Build => cfg
            .snr_db_grid
            .par_iter()
            .map(|&snr| compute_snr_models(cfg, snr))
            .collect(),
        ModelSource::Directory {
            path,
            build_missing,
        } => {
            let mut out = Vec::new();
            let mut missing = Vec::new();
            for &snr in &cfg.snr_db_grid {
                match load_snr_models(cfg, path, snr) {
                    Ok(m) => out.push(m),
                    Err(Error::MissingModels(_)) if *build_missing => {
                        let single = ExperimentConfig {
                            snr_db_grid: vec![snr],
                            ..cfg.clone()
                        };
                        build_models(&single, path, false)?;
                        out.push(load_snr_models(cfg, path, snr)?);
                    }
                    Err(Error::MissingModels(files)) => {
                        missing.push(format!("{snr:+.2} dB: {files}"))
                    }
                    Err(e) => return Err(e),
                }
            }
            if missing.is_empty() {
                Ok(out)
            } else {
                Err(Error::MissingModels(missing.join("; ")))
            }
        }
    }
}

/// Runs `trials` blocks per true class at every SNR and classifies each block
/// with every requested classifier. Rows come out by SNR (grid order), then
/// classifier (config order), then ascending `L`.
pub fn run_experiment(cfg: &ExperimentConfig, source: &ModelSource) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let models = obtain_models(cfg, source)?;
    let mut rows = Vec::new();
    for m in &models {
        rows.extend(run_snr(cfg, m)?);
    }
    Ok(rows)
}

fn run_snr(cfg: &ExperimentConfig, models: &SnrModels) -> Result<Vec<ResultRow>> {
    let snr = models.snr_db;
    let consts = cfg.constellations()?;
    let cdfs = class_cdfs(cfg, snr)?;
    let channel = ChannelConfig::from_snr_db(snr);
    let priors = cfg.priors();
    let names = cfg.classes.clone();

    let mut sets: Vec<&TestpointSet> = Vec::new();
    let mut columns: Vec<Column> = Vec::new();
    for &kind in &cfg.classifiers {
        match kind {
            ClassifierKind::Bayes | ClassifierKind::ExactBayes | ClassifierKind::Rck => {
                for tm in &models.testpoints {
                    let set = sets.len();
                    sets.push(&tm.model.testpoints);
                    let eval = match kind {
                        ClassifierKind::Bayes => Evaluator::Bayes {
                            set,
                            model: &tm.model,
                        },
                        ClassifierKind::ExactBayes => Evaluator::Exact {
                            set,
                            probs: cdfs
                                .iter()
                                .map(|f| RegionProbabilities::new(f, &tm.model.testpoints))
                                .collect::<Result<_>>()?,
                            priors: &priors,
                        },
                        _ => Evaluator::Rck {
                            set,
                            means: tm.model.classes.iter().map(|c| c.mu.clone()).collect(),
                        },
                    };
                    columns.push(Column {
                        kind,
                        l: tm.l,
                        eval,
                    });
                }
            }
            ClassifierKind::Vd => {
                let model = models
                    .vd
                    .as_ref()
                    .ok_or_else(|| Error::MissingModels(format!("VD model at {snr:+.2} dB")))?;
                let set = sets.len();
                sets.push(&model.testpoints);
                columns.push(Column {
                    kind,
                    l: model.testpoints.len(),
                    eval: Evaluator::Vd { set, model },
                });
            }
            ClassifierKind::Kuiper => columns.push(Column {
                kind,
                l: 0,
                eval: Evaluator::Kuiper { classes: &cdfs },
            }),
            ClassifierKind::Ml => columns.push(Column {
                kind,
                l: 0,
                eval: Evaluator::Ml {
                    classes: consts
                        .iter()
                        .map(|c| (c.clone(), channel.noise_variance()))
                        .collect(),
                    priors: &priors,
                },
            }),
        }
    }

    let k = consts.len();
    let trials = cfg.trials;
    let decisions: Vec<Vec<usize>> = (0..k * trials)
        .into_par_iter()
        .map(|idx| {
            let (class, trial) = (idx / trials, idx % trials);
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(cfg.seed, snr, class, trial));
            let block = transmit(&consts[class], &channel, cfg.m, &mut rng);
            let z = quadrature_feature(&block);
            let xs: Vec<_> = sets.iter().map(|t| sampled_ecdf(&z, t)).collect();
            columns
                .iter()
                .map(|c| {
                    let d = match &c.eval {
                        Evaluator::Bayes { set, model } => discriminant_classify(model, &xs[*set]),
                        Evaluator::Exact { set, probs, priors } => {
                            exact_bayes_classify(&xs[*set], probs, priors)
                        }
                        Evaluator::Rck { set, means } => rck_classify(&xs[*set], means),
                        Evaluator::Vd { set, model } => vd_classify(&xs[*set], model),
                        Evaluator::Kuiper { classes } => Ok(kuiper_classify(&z, classes)),
                        Evaluator::Ml { classes, priors } => ml_classify(&block, classes, priors),
                    };
                    d.map(|d| d.class)
                })
                .collect::<Result<Vec<usize>>>()
        })
        .collect::<Result<_>>()?;

    let total = (k * trials) as f64;
    let mut rows: Vec<ResultRow> = columns
        .iter()
        .enumerate()
        .map(|(ci, col)| {
            let mut confusion = ConfusionMatrix::new(names.clone());
            let correct = decisions
                .iter()
                .enumerate()
                .map(|(idx, d)| {
                    let truth = idx / trials;
                    confusion.record(truth, d[ci]);
                    d[ci] == truth
                })
                .collect();
            let pc = confusion.pc(&priors);
            ResultRow {
                snr_db: snr,
                l: col.l,
                classifier: col.kind,
                pc,
                stderr: (pc * (1.0 - pc) / total).sqrt(),
                confusion,
                correct,
            }
        })
        .collect();
    // classifier in config order, then ascending L
    let order = |k: ClassifierKind| cfg.classifiers.iter().position(|&c| c == k);
    rows.sort_by_key(|r| (order(r.classifier), r.l));
    Ok(rows)
}
