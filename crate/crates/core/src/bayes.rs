//! Bayes classification of sampled-ECDF features.
//!
//! The `L` testpoints split the real line into `L + 1` regions. Under class
//! `k` the region counts are multinomial with probabilities
//! `p_l = F_k(t_l) - F_k(t_{l-1})`, which gives the exact class-conditional
//! likelihood of an ECDF vector ([`exact_bayes_classify`]). For large `N` the
//! ECDF vector is approximately Gaussian with mean `F_k(t_i)` and covariance
//! `F_k(t_min(i,j)) (1 - F_k(t_max(i,j))) / N`, and the Bayes rule becomes a
//! quadratic discriminant ([`DiscriminantModel`]).
//!
//! Everything here works in ECDF units (`x_i` in `[0, 1]`). Working in count
//! units instead multiplies the feature by `N` and the covariance by `N^2`,
//! which shifts every discriminant by the same `-L ln N` and leaves decisions
//! unchanged.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::distributions::{check_guard, SampledEcdf, TestpointSet, TheoreticalCdf};
use crate::error::{Error, Result};
use crate::linalg::{rows, Spd};
use crate::math::{ln_factorial, log_sum_exp, Decision};

const PRIOR_TOLERANCE: f64 = 1e-9;

pub(crate) fn validate_priors(priors: &[f64], classes: usize) -> Result<()> {
    if priors.len() != classes {
        return Err(Error::InvalidPriors(format!(
            "{} priors for {classes} classes",
            priors.len()
        )));
    }
    if priors.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidPriors(
            "priors must be finite and >= 0".into(),
        ));
    }
    let sum: f64 = priors.iter().sum();
    if (sum - 1.0).abs() > PRIOR_TOLERANCE {
        return Err(Error::InvalidPriors(format!("priors sum to {sum}, not 1")));
    }
    Ok(())
}

/// Uniform priors over `k` classes.
pub fn uniform_priors(k: usize) -> Vec<f64> {
    vec![1.0 / k as f64; k]
}

/// Probability of a sample landing in each of the `L + 1` testpoint regions.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionProbabilities {
    p: Vec<f64>,
}

impl RegionProbabilities {
    /// Fails if any region carries less than the guard mass.
    pub fn new(f: &TheoreticalCdf, t: &TestpointSet) -> Result<Self> {
        check_guard(t.points(), std::slice::from_ref(f))?;
        Ok(RegionProbabilities {
            p: region_masses(f, t.points()),
        })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }
}

/// Region masses without the guard; used by the VD baseline.
pub(crate) fn region_masses(f: &TheoreticalCdf, t: &[f64]) -> Vec<f64> {
    let mut prev = 0.0;
    t.iter()
        .map(|&ti| f.cdf_at(ti))
        .chain(std::iter::once(1.0))
        .map(|c| {
            let p = c - prev;
            prev = c;
            p
        })
        .collect()
}

/// Recovers the region counts `n_i = N (x_i - x_{i-1})` with `x_0 = 0` and
/// `x_{L+1} = 1`. The counts always sum to `N`.
pub fn region_counts(x: &SampledEcdf) -> Vec<u64> {
    let n = x.n as f64;
    let mut prev = 0i64;
    x.x.iter()
        .map(|&xi| (n * xi).round() as i64)
        .chain(std::iter::once(x.n as i64))
        .map(|c| {
            let d = c - prev;
            prev = c;
            d.max(0) as u64
        })
        .collect()
}

/// `ln(N! / prod(n_i!) * prod(p_i^n_i))`. Regions with `n_i = 0` contribute
/// nothing even when `p_i = 0`; `n_i > 0` with `p_i = 0` gives `-inf`.
pub fn multinomial_log_pmf(n: &[u64], p: &[f64]) -> Result<f64> {
    if n.len() != p.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            actual: n.len(),
        });
    }
    let total: u64 = n.iter().sum();
    let mut acc = ln_factorial(total);
    for (&ni, &pi) in n.iter().zip(p) {
        if ni == 0 {
            continue;
        }
        if pi <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        acc += ni as f64 * pi.ln() - ln_factorial(ni);
    }
    Ok(acc)
}

/// Exact Bayes rule under the multinomial region-count model. Scores are the
/// normalized log-posteriors; ties go to the lowest class index.
pub fn exact_bayes_classify(
    x: &SampledEcdf,
    classes: &[RegionProbabilities],
    priors: &[f64],
) -> Result<Decision> {
    validate_priors(priors, classes.len())?;
    let counts = region_counts(x);
    let joint = classes
        .iter()
        .zip(priors)
        .map(|(c, &prior)| Ok(multinomial_log_pmf(&counts, &c.p)? + prior.ln()))
        .collect::<Result<Vec<f64>>>()?;
    let evidence = log_sum_exp(joint.iter().copied());
    let scores = if evidence.is_finite() {
        joint.iter().map(|j| j - evidence).collect()
    } else {
        joint
    };
    Ok(Decision::maximizing(scores))
}

/// Mean and covariance of the sampled-ECDF vector under one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStatistics {
    pub name: String,
    pub mu: Vec<f64>,
    #[serde(with = "rows")]
    pub sigma: DMatrix<f64>,
}

impl ClassStatistics {
    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

/// `mu_i = F(t_i)`, `Sigma_ij = F(t_min) (1 - F(t_max)) / N`.
pub fn class_statistics(f: &TheoreticalCdf, t: &TestpointSet, n: usize) -> Result<ClassStatistics> {
    check_guard(t.points(), std::slice::from_ref(f))?;
    Ok(statistics_unchecked(f, t.points(), n))
}

pub(crate) fn statistics_unchecked(f: &TheoreticalCdf, t: &[f64], n: usize) -> ClassStatistics {
    let mu: Vec<f64> = t.iter().map(|&ti| f.cdf_at(ti)).collect();
    let l = mu.len();
    let n = n as f64;
    let sigma = DMatrix::from_fn(l, l, |i, j| mu[i.min(j)] * (1.0 - mu[i.max(j)]) / n);
    ClassStatistics {
        name: f.class_ref().to_string(),
        mu,
        sigma,
    }
}

/// Quadratic discriminant `g(x) = x' W x + w' x + w0` of one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDiscriminant {
    pub name: String,
    pub mu: Vec<f64>,
    #[serde(with = "rows")]
    pub sigma: DMatrix<f64>,
    #[serde(rename = "W", with = "rows")]
    pub quadratic: DMatrix<f64>,
    #[serde(rename = "w")]
    pub linear: Vec<f64>,
    #[serde(rename = "w0")]
    pub offset: f64,
}

impl ClassDiscriminant {
    pub fn score(&self, x: &[f64]) -> f64 {
        let v = DVector::from_column_slice(x);
        let quad = v.dot(&(&self.quadratic * &v));
        let lin: f64 = self.linear.iter().zip(x).map(|(a, b)| a * b).sum();
        quad + lin + self.offset
    }
}

/// Per-class quadratic discriminants tied to one testpoint set, sample count
/// and SNR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminantModel {
    pub snr_db: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub testpoints: TestpointSet,
    pub priors: Vec<f64>,
    pub classes: Vec<ClassDiscriminant>,
}

impl DiscriminantModel {
    pub fn class_names(&self) -> Vec<&str> {
        self.classes.iter().map(|c| c.name.as_str()).collect()
    }
}

/// Builds `W = -Sigma^-1 / 2`, `w = Sigma^-1 mu` and
/// `w0 = -mu' Sigma^-1 mu / 2 - ln|Sigma| / 2 + ln prior` from Cholesky
/// factors. Priors must be strictly positive so that `w0` stays finite.
pub fn build_discriminant_model(
    stats: &[ClassStatistics],
    priors: &[f64],
    testpoints: &TestpointSet,
    n: usize,
) -> Result<DiscriminantModel> {
    validate_priors(priors, stats.len())?;
    if stats.len() < 2 {
        return Err(Error::Config(
            "a classifier needs at least two classes".into(),
        ));
    }
    if priors.iter().any(|&p| p <= 0.0) {
        return Err(Error::InvalidPriors(
            "discriminant priors must be > 0".into(),
        ));
    }
    let classes = stats
        .iter()
        .zip(priors)
        .map(|(s, &prior)| {
            if s.dim() != testpoints.len() || s.sigma.nrows() != s.dim() {
                return Err(Error::DimensionMismatch {
                    expected: testpoints.len(),
                    actual: s.dim(),
                });
            }
            let spd =
                Spd::new(&s.sigma).ok_or_else(|| Error::NotPositiveDefinite(s.name.clone()))?;
            let mu = DVector::from_column_slice(&s.mu);
            let linear = spd.solve(&mu);
            let offset = -0.5 * mu.dot(&linear) - 0.5 * spd.log_det() + prior.ln();
            Ok(ClassDiscriminant {
                name: s.name.clone(),
                mu: s.mu.clone(),
                sigma: s.sigma.clone(),
                quadratic: spd.inverse() * -0.5,
                linear: linear.iter().copied().collect(),
                offset,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DiscriminantModel {
        snr_db: testpoints.snr_db,
        n,
        testpoints: testpoints.clone(),
        priors: priors.to_vec(),
        classes,
    })
}

/// `argmax_k g_k(x)`, ties to the lowest index.
pub fn discriminant_classify(model: &DiscriminantModel, x: &SampledEcdf) -> Result<Decision> {
    if x.len() != model.testpoints.len() {
        return Err(Error::DimensionMismatch {
            expected: model.testpoints.len(),
            actual: x.len(),
        });
    }
    Ok(Decision::maximizing(
        model.classes.iter().map(|c| c.score(&x.x)).collect(),
    ))
}
