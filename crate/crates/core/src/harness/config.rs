use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bayes::{uniform_priors, validate_priors};
use crate::error::{Error, Result};
use crate::signal::{Constellation, Registry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassifierKind {
    /// Gaussian quadratic discriminant on the sampled ECDF.
    Bayes,
    /// Multinomial Bayes rule on the region counts.
    ExactBayes,
    Vd,
    Rck,
    Kuiper,
    Ml,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 6] = [
        ClassifierKind::Bayes,
        ClassifierKind::ExactBayes,
        ClassifierKind::Vd,
        ClassifierKind::Rck,
        ClassifierKind::Kuiper,
        ClassifierKind::Ml,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::Bayes => "bayes",
            ClassifierKind::ExactBayes => "exact-bayes",
            ClassifierKind::Vd => "vd",
            ClassifierKind::Rck => "rck",
            ClassifierKind::Kuiper => "kuiper",
            ClassifierKind::Ml => "ml",
        }
    }

    /// Classifiers evaluated on the optimized testpoints for each `L`.
    pub fn uses_optimized_testpoints(self) -> bool {
        matches!(
            self,
            ClassifierKind::Bayes | ClassifierKind::ExactBayes | ClassifierKind::Rck
        )
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown classifier `{s}` (expected one of bayes, exact-bayes, vd, rck, kuiper, ml)"
                ))
            })
    }
}

/// Monte Carlo experiment description. Field names match the JSON config
/// file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub classes: Vec<String>,
    pub snr_db_grid: Vec<f64>,
    /// Symbols per trial; the feature holds `N = 2M` samples.
    #[serde(rename = "M")]
    pub m: usize,
    /// Trials per true class.
    pub trials: usize,
    #[serde(rename = "L_grid")]
    pub l_grid: Vec<usize>,
    pub classifiers: Vec<ClassifierKind>,
    pub seed: u64,
    /// Empty means uniform.
    #[serde(default)]
    pub priors: Vec<f64>,
    /// User-defined constellations added to the built-in registry.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constellations: Vec<Constellation>,
    /// Also evaluate the testpoint classifiers with as many testpoints as
    /// the VD classifier has pdf-crossings at each SNR.
    #[serde(default)]
    pub match_vd_testpoints: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            classes: vec!["4QAM".into(), "16QAM".into()],
            snr_db_grid: (-4..=8).map(f64::from).collect(),
            m: 200,
            trials: 10_000,
            l_grid: (1..=8).collect(),
            classifiers: ClassifierKind::ALL.to_vec(),
            seed: 1,
            priors: Vec::new(),
            constellations: Vec::new(),
            match_vd_testpoints: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }

    /// Sample count of the quadrature feature.
    pub fn n(&self) -> usize {
        2 * self.m
    }

    pub fn priors(&self) -> Vec<f64> {
        if self.priors.is_empty() {
            uniform_priors(self.classes.len())
        } else {
            self.priors.clone()
        }
    }

    pub fn registry(&self) -> Registry {
        let mut reg = Registry::default();
        for c in &self.constellations {
            reg.insert(c.clone());
        }
        reg
    }

    pub fn constellations(&self) -> Result<Vec<Constellation>> {
        let reg = self.registry();
        self.classes.iter().map(|name| reg.get(name)).collect()
    }

    pub fn needs_testpoint_models(&self) -> bool {
        self.classifiers
            .iter()
            .any(|k| k.uses_optimized_testpoints())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.classes.len() < 2 {
            return bad("need at least two classes");
        }
        for (i, c) in self.classes.iter().enumerate() {
            if self.classes[..i].contains(c) {
                return Err(Error::Config(format!("class `{c}` listed twice")));
            }
        }
        self.constellations()?;
        if self.snr_db_grid.is_empty() || self.snr_db_grid.iter().any(|s| !s.is_finite()) {
            return bad("snr_db_grid must hold finite values");
        }
        if self.m == 0 {
            return bad("M must be at least 1");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.classifiers.is_empty() {
            return bad("classifiers must not be empty");
        }
        if self.l_grid.contains(&0) {
            return bad("L_grid entries must be at least 1");
        }
        if self.needs_testpoint_models() && self.l_grid.is_empty() && !self.match_vd_testpoints {
            return bad("L_grid is empty but a testpoint classifier was requested");
        }
        validate_priors(&self.priors(), self.classes.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_field_names() {
        let text = r#"{
            "classes": ["4QAM", "16QAM"],
            "snr_db_grid": [0.0, 2.0],
            "M": 200,
            "trials": 10,
            "L_grid": [1, 4],
            "classifiers": ["bayes", "exact-bayes", "vd", "rck", "kuiper", "ml"],
            "seed": 3,
            "priors": [0.5, 0.5]
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.m, 200);
        assert_eq!(cfg.n(), 400);
        assert_eq!(cfg.l_grid, vec![1, 4]);
        assert_eq!(cfg.classifiers, ClassifierKind::ALL.to_vec());
        cfg.validate().unwrap();
        let back: ExperimentConfig =
            serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn validation_errors() {
        let ok = ExperimentConfig::default();
        ok.validate().unwrap();
        type Breaker = Box<dyn Fn(&mut ExperimentConfig)>;
        let cases: Vec<Breaker> = vec![
            Box::new(|c| c.classes = vec!["4QAM".into()]),
            Box::new(|c| c.classes.push("4QAM".into())),
            Box::new(|c| c.classes.push("8PSK".into())),
            Box::new(|c| c.trials = 0),
            Box::new(|c| c.m = 0),
            Box::new(|c| c.classifiers.clear()),
            Box::new(|c| c.priors = vec![0.7, 0.7]),
            Box::new(|c| c.l_grid = vec![0]),
            Box::new(|c| c.l_grid.clear()),
            Box::new(|c| c.snr_db_grid.clear()),
        ];
        for (i, f) in cases.iter().enumerate() {
            let mut c = ok.clone();
            f(&mut c);
            assert!(c.validate().is_err(), "case {i}");
        }
        let mut c = ok;
        c.l_grid.clear();
        c.match_vd_testpoints = true;
        c.validate().unwrap();
    }

    #[test]
    fn classifier_names() {
        for k in ClassifierKind::ALL {
            assert_eq!(k.as_str().parse::<ClassifierKind>().unwrap(), k);
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{k}\""));
        }
        assert!("qda".parse::<ClassifierKind>().is_err());
    }
}
