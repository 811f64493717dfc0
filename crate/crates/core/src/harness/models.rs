//! Per-SNR model tables and their JSON files.
//!
//! For a class set and SNR the directory holds one VD model and, for every
//! testpoint count `L`, the optimized testpoints and the discriminant model
//! built on them:
//!
//! ```text
//! 4QAM-16QAM__snr+0.00.vd.json
//! 4QAM-16QAM__snr+0.00__L4.testpoints.json
//! 4QAM-16QAM__snr+0.00__L4.model.json
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use crate::baselines::VdModel;
use crate::bayes::{build_discriminant_model, class_statistics, DiscriminantModel};
use crate::distributions::{TestpointSet, TheoreticalCdf};
use crate::error::{Error, Result};
use crate::harness::config::{ClassifierKind, ExperimentConfig};
use crate::signal::ChannelConfig;
use crate::testpoints::{multiclass_testpoints_from, nested_start};

/// Optimized testpoints for one `L` and the discriminant built on them.
#[derive(Debug, Clone, PartialEq)]
pub struct TestpointModel {
    pub l: usize,
    pub model: DiscriminantModel,
}

/// Everything the classifiers need at one SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrModels {
    pub snr_db: f64,
    pub vd: Option<VdModel>,
    pub testpoints: Vec<TestpointModel>,
}

impl SnrModels {
    pub fn model(&self, l: usize) -> Option<&DiscriminantModel> {
        self.testpoints.iter().find(|m| m.l == l).map(|m| &m.model)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BuildReport {
    pub written: Vec<PathBuf>,
    pub skipped: Vec<PathBuf>,
}

pub(crate) fn class_cdfs(cfg: &ExperimentConfig, snr_db: f64) -> Result<Vec<TheoreticalCdf>> {
    let sigma2 = ChannelConfig::from_snr_db(snr_db).noise_variance();
    Ok(cfg
        .constellations()?
        .iter()
        .map(|c| TheoreticalCdf::new(c, sigma2))
        .collect())
}

fn set_label(cfg: &ExperimentConfig) -> String {
    cfg.classes.join("-")
}

fn stem(cfg: &ExperimentConfig, snr_db: f64) -> String {
    format!("{}__snr{snr_db:+.2}", set_label(cfg))
}

fn vd_path(dir: &Path, cfg: &ExperimentConfig, snr_db: f64) -> PathBuf {
    dir.join(format!("{}.vd.json", stem(cfg, snr_db)))
}

fn testpoints_path(dir: &Path, cfg: &ExperimentConfig, snr_db: f64, l: usize) -> PathBuf {
    dir.join(format!("{}__L{l}.testpoints.json", stem(cfg, snr_db)))
}

fn model_path(dir: &Path, cfg: &ExperimentConfig, snr_db: f64, l: usize) -> PathBuf {
    dir.join(format!("{}__L{l}.model.json", stem(cfg, snr_db)))
}

fn needs_vd(cfg: &ExperimentConfig) -> bool {
    cfg.match_vd_testpoints || cfg.classifiers.contains(&ClassifierKind::Vd)
}

/// Testpoint counts to build at one SNR, ascending.
fn l_values(cfg: &ExperimentConfig, vd: Option<&VdModel>) -> Vec<usize> {
    let mut ls = cfg.l_grid.clone();
    if cfg.match_vd_testpoints {
        if let Some(vd) = vd {
            ls.push(vd.testpoints.len());
        }
    }
    ls.sort_unstable();
    ls.dedup();
    ls
}

/// Computes the models for one SNR. Testpoint counts are searched in
/// ascending order, each seeded with the previous optimum plus one point.
pub(crate) fn compute_snr_models(cfg: &ExperimentConfig, snr_db: f64) -> Result<SnrModels> {
    let classes = class_cdfs(cfg, snr_db)?;
    let vd = match VdModel::new(&classes) {
        Ok(vd) => Some(vd),
        Err(e) if needs_vd(cfg) => return Err(e),
        Err(_) => None,
    };
    let priors = cfg.priors();
    let n = cfg.n();
    let refs: Vec<&TheoreticalCdf> = classes.iter().collect();
    let mut testpoints = Vec::new();
    let mut previous: Option<(usize, Vec<f64>)> = None;
    for l in l_values(cfg, vd.as_ref()) {
        let extra: Vec<Vec<f64>> = match &previous {
            Some((pl, t)) if pl + 1 == l => vec![nested_start(&refs, t)],
            _ => Vec::new(),
        };
        let best = multiclass_testpoints_from(&classes, n, l, &extra).map_err(|e| match e {
            Error::Infeasible { l, cell } => Error::Infeasible {
                l,
                cell: format!("{cell} ({})", stem(cfg, snr_db)),
            },
            other => other,
        })?;
        let set = TestpointSet::new(best.testpoints.points().to_vec(), snr_db)?;
        let stats = classes
            .iter()
            .map(|f| class_statistics(f, &set, n))
            .collect::<Result<Vec<_>>>()?;
        let model = build_discriminant_model(&stats, &priors, &set, n)?;
        previous = Some((l, set.points().to_vec()));
        testpoints.push(TestpointModel { l, model });
    }
    Ok(SnrModels {
        snr_db,
        vd,
        testpoints,
    })
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

fn save(
    dir: &Path,
    cfg: &ExperimentConfig,
    models: &SnrModels,
    force: bool,
    report: &mut BuildReport,
) -> Result<()> {
    let mut put = |path: PathBuf, write: &dyn Fn(&Path) -> Result<()>| -> Result<()> {
        if !force && path.exists() {
            report.skipped.push(path);
        } else {
            write(&path)?;
            report.written.push(path);
        }
        Ok(())
    };
    if let Some(vd) = &models.vd {
        put(vd_path(dir, cfg, models.snr_db), &|p| write_json(p, vd))?;
    }
    for m in &models.testpoints {
        put(testpoints_path(dir, cfg, models.snr_db, m.l), &|p| {
            write_json(p, &m.model.testpoints)
        })?;
        put(model_path(dir, cfg, models.snr_db, m.l), &|p| {
            write_json(p, &m.model)
        })?;
    }
    Ok(())
}

/// Builds and stores the models for every SNR of `cfg`. Existing files are
/// left untouched unless `force` is set.
pub fn build_models(cfg: &ExperimentConfig, dir: &Path, force: bool) -> Result<BuildReport> {
    cfg.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut report = BuildReport::default();
    for &snr in &cfg.snr_db_grid {
        let models = compute_snr_models(cfg, snr)?;
        save(dir, cfg, &models, force, &mut report)?;
    }
    Ok(report)
}

/// Loads the stored models for one SNR. Returns the missing file names as an
/// error if any file the configuration needs is absent.
pub fn load_snr_models(cfg: &ExperimentConfig, dir: &Path, snr_db: f64) -> Result<SnrModels> {
    let mut missing = Vec::new();
    let vd_file = vd_path(dir, cfg, snr_db);
    let vd = if vd_file.exists() {
        Some(read_json::<VdModel>(&vd_file)?)
    } else {
        if needs_vd(cfg) {
            missing.push(vd_file);
        }
        None
    };
    let mut testpoints = Vec::new();
    if cfg.needs_testpoint_models() {
        for l in l_values(cfg, vd.as_ref()) {
            let path = model_path(dir, cfg, snr_db, l);
            if !path.exists() {
                missing.push(path);
                continue;
            }
            let model: DiscriminantModel = read_json(&path)?;
            check_model(cfg, &path, &model, l)?;
            testpoints.push(TestpointModel { l, model });
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingModels(
            missing
                .iter()
                .map(|p| p.display().to_string())
                .collect::<Vec<_>>()
                .join(", "),
        ));
    }
    Ok(SnrModels {
        snr_db,
        vd,
        testpoints,
    })
}

fn check_model(
    cfg: &ExperimentConfig,
    path: &Path,
    model: &DiscriminantModel,
    l: usize,
) -> Result<()> {
    let names: Vec<&str> = cfg.classes.iter().map(String::as_str).collect();
    let stale = if model.n != cfg.n() {
        Some(format!(
            "built for N = {}, config has N = {}",
            model.n,
            cfg.n()
        ))
    } else if model.class_names() != names {
        Some(format!("built for classes {:?}", model.class_names()))
    } else if model.testpoints.len() != l {
        Some(format!("holds {} testpoints", model.testpoints.len()))
    } else if model.priors != cfg.priors() {
        Some(format!("built for priors {:?}", model.priors))
    } else {
        None
    };
    match stale {
        Some(why) => Err(Error::Config(format!(
            "{}: model {why}; rebuild with --force",
            path.display()
        ))),
        None => Ok(()),
    }
}
