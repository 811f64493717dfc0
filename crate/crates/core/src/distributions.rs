//! Analytic CDFs of the quadrature feature and the ECDF sampled at testpoints.

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::math::{normal_cdf, normal_pdf};
use crate::signal::Constellation;

/// Minimum probability mass every class must put between adjacent testpoints
/// (including the virtual endpoints at `-inf` and `+inf`). Keeps the ECDF
/// covariance nonsingular.
pub const GUARD_EPSILON: f64 = 1e-6;

const MERGE_TOLERANCE: f64 = 1e-12;

/// CDF of one quadrature feature sample under a class: an equal-variance
/// Gaussian mixture centred on the pooled real and imaginary parts of the
/// constellation points.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoreticalCdf {
    class_ref: String,
    sigma2: f64,
    /// `(mean, weight)`, sorted by mean, duplicates merged.
    components: Vec<(f64, f64)>,
    sd: f64,
}

impl TheoreticalCdf {
    /// # Panics
    ///
    /// If `sigma2` is not strictly positive and finite.
    pub fn new(c: &Constellation, sigma2: f64) -> Self {
        assert!(
            sigma2 > 0.0 && sigma2.is_finite(),
            "noise variance must be > 0"
        );
        let w = 1.0 / (2 * c.points().len()) as f64;
        let mut pooled: Vec<f64> = c.points().iter().flat_map(|p| [p.re, p.im]).collect();
        pooled.sort_by(f64::total_cmp);
        let mut components: Vec<(f64, f64)> = Vec::new();
        for m in pooled {
            match components.last_mut() {
                Some((mean, weight)) if (m - *mean).abs() <= MERGE_TOLERANCE => *weight += w,
                _ => components.push((m, w)),
            }
        }
        TheoreticalCdf {
            class_ref: c.name().to_string(),
            sigma2,
            components,
            sd: (sigma2 / 2.0).sqrt(),
        }
    }

    /// A class given directly by its mixture components `(mean, weight)`,
    /// each with variance `sigma2 / 2`. Weights must sum to one.
    pub fn from_components(
        class_ref: impl Into<String>,
        sigma2: f64,
        mut components: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let class_ref = class_ref.into();
        let total: f64 = components.iter().map(|c| c.1).sum();
        if !(sigma2 > 0.0 && sigma2.is_finite())
            || components.is_empty()
            || components.iter().any(|c| !c.0.is_finite() || !(c.1 >= 0.0))
            || (total - 1.0).abs() > 1e-12
        {
            return Err(Error::Config(format!(
                "class `{class_ref}` needs sigma2 > 0 and non-negative weights summing to 1"
            )));
        }
        components.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(TheoreticalCdf {
            class_ref,
            sigma2,
            components,
            sd: (sigma2 / 2.0).sqrt(),
        })
    }

    pub fn class_ref(&self) -> &str {
        &self.class_ref
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn snr_db(&self) -> f64 {
        -10.0 * self.sigma2.log10()
    }

    pub fn components(&self) -> &[(f64, f64)] {
        &self.components
    }

    /// Per-component standard deviation, `sigma / sqrt(2)`.
    pub fn component_sd(&self) -> f64 {
        self.sd
    }

    pub fn cdf_at(&self, z: f64) -> f64 {
        let s: f64 = self
            .components
            .iter()
            .map(|&(m, w)| w * normal_cdf((z - m) / self.sd))
            .sum();
        s.clamp(0.0, 1.0)
    }

    pub fn pdf_at(&self, z: f64) -> f64 {
        self.components
            .iter()
            .map(|&(m, w)| w * normal_pdf((z - m) / self.sd))
            .sum::<f64>()
            / self.sd
    }

    /// Smallest and largest component mean.
    pub fn mean_range(&self) -> (f64, f64) {
        let first = self.components.first().map_or(0.0, |c| c.0);
        let last = self.components.last().map_or(0.0, |c| c.0);
        (first, last)
    }

    /// Inverse CDF by bisection; `p` is clamped into `(0, 1)`.
    pub fn quantile(&self, p: f64) -> f64 {
        mixture_quantile(&[self], p)
    }
}

/// CDF of the equal-weight mixture of several classes.
pub fn mixture_cdf(classes: &[&TheoreticalCdf], z: f64) -> f64 {
    classes.iter().map(|f| f.cdf_at(z)).sum::<f64>() / classes.len() as f64
}

/// Quantile of the equal-weight mixture of several class CDFs.
pub fn mixture_quantile(classes: &[&TheoreticalCdf], p: f64) -> f64 {
    let (mut lo, mut hi) = classes.iter().fold((f64::MAX, f64::MIN), |(lo, hi), f| {
        let (a, b) = f.mean_range();
        (lo.min(a - 40.0 * f.sd), hi.max(b + 40.0 * f.sd))
    });
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mixture_cdf(classes, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * (1.0 + mid.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Feature map the testpoints apply to. Only the quadrature map is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMap {
    #[default]
    Quadrature,
}

/// Ordered testpoint locations together with the SNR they were chosen for.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestpointSet {
    pub snr_db: f64,
    pub feature: FeatureMap,
    t: Vec<f64>,
}

impl TestpointSet {
    pub fn new(t: Vec<f64>, snr_db: f64) -> Result<Self> {
        if t.is_empty() {
            return Err(Error::InvalidTestpoints(
                "need at least one testpoint".into(),
            ));
        }
        if t.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidTestpoints("non-finite testpoint".into()));
        }
        if let Some(w) = t.windows(2).find(|w| w[1] < w[0]) {
            return Err(Error::InvalidTestpoints(format!(
                "testpoints must be non-decreasing ({} > {})",
                w[0], w[1]
            )));
        }
        Ok(TestpointSet {
            snr_db,
            feature: FeatureMap::Quadrature,
            t,
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.t
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Checks that every class puts at least [`GUARD_EPSILON`] of mass in
    /// every region, including the outer two.
    pub fn check_guard(&self, classes: &[TheoreticalCdf]) -> Result<()> {
        check_guard(&self.t, classes)
    }
}

impl<'de> Deserialize<'de> for TestpointSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Doc {
            snr_db: f64,
            #[serde(default)]
            feature: FeatureMap,
            t: Vec<f64>,
        }
        let doc = Doc::deserialize(d)?;
        let mut set = TestpointSet::new(doc.t, doc.snr_db).map_err(serde::de::Error::custom)?;
        set.feature = doc.feature;
        Ok(set)
    }
}

pub(crate) fn check_guard(t: &[f64], classes: &[TheoreticalCdf]) -> Result<()> {
    check_min_mass(t, classes, GUARD_EPSILON)
}

/// Fails unless every class puts at least `epsilon` in every region.
pub(crate) fn check_min_mass(t: &[f64], classes: &[TheoreticalCdf], epsilon: f64) -> Result<()> {
    let label = |i: usize| match i {
        0 => "t_0=-inf".to_string(),
        i if i == t.len() + 1 => format!("t_{i}=+inf"),
        i => format!("t_{i}={}", t[i - 1]),
    };
    for f in classes {
        let mut prev = 0.0;
        for i in 0..=t.len() {
            let cur = if i < t.len() { f.cdf_at(t[i]) } else { 1.0 };
            let mass = cur - prev;
            if !(mass >= epsilon) {
                return Err(Error::DegenerateTestpoints {
                    class: f.class_ref.clone(),
                    lo: label(i),
                    hi: label(i + 1),
                    mass,
                    epsilon,
                });
            }
            prev = cur;
        }
    }
    Ok(())
}

/// ECDF of a feature vector evaluated at a testpoint set.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledEcdf {
    pub x: Vec<f64>,
    pub n: usize,
}

impl SampledEcdf {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// `x_i = #{z_n <= t_i} / N`, one binary search per sample.
///
/// # Panics
///
/// If `z` is empty.
pub fn sampled_ecdf(z: &[f64], t: &TestpointSet) -> SampledEcdf {
    assert!(!z.is_empty(), "sampled_ecdf needs at least one sample");
    let t = t.points();
    let mut bins = vec![0usize; t.len() + 1];
    for &v in z {
        // number of testpoints strictly below v: v <= t_i for every later i
        bins[t.partition_point(|&ti| ti < v)] += 1;
    }
    let n = z.len();
    let mut acc = 0usize;
    let x = bins[..t.len()]
        .iter()
        .map(|&b| {
            acc += b;
            acc as f64 / n as f64
        })
        .collect();
    SampledEcdf { x, n }
}
