//! Reference classifiers: maximum likelihood on the raw symbols, Kuiper on
//! the full ECDF, and the two testpoint-based distances (rcK and VD).
//!
//! The rcK statistic here is the Kuiper distance restricted to the testpoints,
//! `max_i (x_i - mu_i)^+ + max_i (mu_i - x_i)^+`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bayes::{region_masses, validate_priors};
use crate::distributions::{SampledEcdf, TestpointSet, TheoreticalCdf};
use crate::error::{Error, Result};
use crate::math::{log_sum_exp, Decision};
use crate::signal::{Constellation, SymbolBlock};
use crate::testpoints::pdf_crossings;

/// Maximum likelihood over the complex Gaussian mixture of each class.
pub fn ml_classify(
    block: &SymbolBlock,
    classes: &[(Constellation, f64)],
    priors: &[f64],
) -> Result<Decision> {
    validate_priors(priors, classes.len())?;
    let scores = classes
        .iter()
        .zip(priors)
        .map(|((c, sigma2), prior)| {
            let norm = -(c.points().len() as f64).ln() - (PI * sigma2).ln();
            let ll: f64 = block
                .received
                .iter()
                .map(|r| {
                    log_sum_exp(c.points().iter().map(|a| -(r - a).norm_sqr() / sigma2)) + norm
                })
                .sum();
            ll + prior.ln()
        })
        .collect();
    Ok(Decision::maximizing(scores))
}

/// Kuiper distance `D+ + D-` between the ECDF of `sorted` and `f`. Evaluated at
/// the order statistics on both sides of each jump, which is exact for a step
/// function against a continuous CDF.
pub fn kuiper_distance(sorted: &[f64], f: &TheoreticalCdf) -> f64 {
    let n = sorted.len() as f64;
    let (mut above, mut below) = (0.0f64, 0.0f64);
    for (i, &z) in sorted.iter().enumerate() {
        let c = f.cdf_at(z);
        above = above.max((i + 1) as f64 / n - c);
        below = below.max(c - i as f64 / n);
    }
    above + below
}

/// Minimum Kuiper distance over the candidate CDFs.
pub fn kuiper_classify(z: &[f64], classes: &[TheoreticalCdf]) -> Decision {
    let mut sorted = z.to_vec();
    sorted.sort_by(f64::total_cmp);
    Decision::minimizing(
        classes
            .iter()
            .map(|f| kuiper_distance(&sorted, f))
            .collect(),
    )
}

/// Kuiper distance restricted to the testpoints, against per-class expected
/// ECDF values.
pub fn rck_classify<M: AsRef<[f64]>>(x: &SampledEcdf, means: &[M]) -> Result<Decision> {
    let scores = means
        .iter()
        .map(|mu| {
            let mu = mu.as_ref();
            if mu.len() != x.len() {
                return Err(Error::DimensionMismatch {
                    expected: mu.len(),
                    actual: x.len(),
                });
            }
            let (up, down) =
                x.x.iter()
                    .zip(mu)
                    .fold((0.0f64, 0.0f64), |(u, d), (xi, mi)| {
                        (u.max(xi - mi), d.max(mi - xi))
                    });
            Ok(up + down)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Decision::minimizing(scores))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VdClass {
    pub name: String,
    /// Expected fraction of samples in each of the `L + 1` regions.
    pub p: Vec<f64>,
}

/// Variational distance classifier: testpoints at the pdf-crossings of the
/// candidate classes and the expected region masses of each class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VdModel {
    pub testpoints: TestpointSet,
    pub classes: Vec<VdClass>,
}

impl VdModel {
    /// Testpoints are the union of the pdf-crossings of every class pair.
    pub fn new(classes: &[TheoreticalCdf]) -> Result<Self> {
        let mut t: Vec<f64> = Vec::new();
        for (i, a) in classes.iter().enumerate() {
            for b in &classes[i + 1..] {
                t.extend(pdf_crossings(a, b));
            }
        }
        t.sort_by(f64::total_cmp);
        t.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        if t.is_empty() {
            return Err(Error::InvalidTestpoints(
                "candidate classes have no pdf-crossings".into(),
            ));
        }
        let snr_db = classes.first().map_or(f64::NAN, |f| f.snr_db());
        VdModel::with_testpoints(classes, TestpointSet::new(t, snr_db)?)
    }

    pub fn with_testpoints(classes: &[TheoreticalCdf], testpoints: TestpointSet) -> Result<Self> {
        let classes = classes
            .iter()
            .map(|f| VdClass {
                name: f.class_ref().to_string(),
                p: region_masses(f, testpoints.points()),
            })
            .collect();
        Ok(VdModel {
            testpoints,
            classes,
        })
    }
}

/// `argmin_k sum_i |d_i - p_i^k|` over the region fractions `d_i = x_i - x_{i-1}`.
pub fn vd_classify(x: &SampledEcdf, model: &VdModel) -> Result<Decision> {
    if x.len() != model.testpoints.len() {
        return Err(Error::DimensionMismatch {
            expected: model.testpoints.len(),
            actual: x.len(),
        });
    }
    let mut prev = 0.0;
    let d: Vec<f64> =
        x.x.iter()
            .copied()
            .chain(std::iter::once(1.0))
            .map(|xi| {
                let di = xi - prev;
                prev = xi;
                di
            })
            .collect();
    Ok(Decision::minimizing(
        model
            .classes
            .iter()
            .map(|c| c.p.iter().zip(&d).map(|(p, di)| (di - p).abs()).sum())
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::sampled_ecdf;
    use crate::signal::{quadrature_feature, standard_constellation, transmit, ChannelConfig};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cdf(name: &str, sigma2: f64) -> TheoreticalCdf {
        TheoreticalCdf::new(&standard_constellation(name).unwrap(), sigma2)
    }

    #[test]
    fn ml_noiseless_recovers_class() {
        let q4 = standard_constellation("4QAM").unwrap();
        let q16 = standard_constellation("16QAM").unwrap();
        let s2 = 1e-4;
        let classes = [(q4.clone(), s2), (q16.clone(), s2)];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (k, c) in [&q4, &q16].into_iter().enumerate() {
            let b = transmit(c, &ChannelConfig::from_snr_db(200.0), 50, &mut rng);
            assert_eq!(ml_classify(&b, &classes, &[0.5, 0.5]).unwrap().class, k);
        }
    }

    #[test]
    fn ml_shared_point_ties_low() {
        let p = |re: f64, im: f64| Complex64::new(re, im);
        let a = Constellation::normalized("a", vec![p(1.0, 0.0), p(-1.0, 0.0)]).unwrap();
        let b = Constellation::normalized("b", vec![p(1.0, 0.0), p(0.0, 1.0)]).unwrap();
        let block = SymbolBlock::new(vec![p(1.0, 0.0)]).unwrap();
        // the non-shared points are negligible at this noise level
        let d = ml_classify(&block, &[(b, 0.01), (a, 0.01)], &[0.5, 0.5]).unwrap();
        assert_eq!(d.scores[0], d.scores[1]);
        assert_eq!(d.class, 0);
    }

    #[test]
    fn kuiper_properties() {
        let f = cdf("16QAM", 0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = standard_constellation("16QAM").unwrap();
        let z = quadrature_feature(&transmit(
            &c,
            &ChannelConfig::from_snr_db(7.0),
            5000,
            &mut rng,
        ));
        let d = kuiper_classify(&z, &[cdf("4QAM", 0.2), f.clone(), cdf("64QAM", 0.2)]);
        assert_eq!(d.class, 1);
        assert!(d.scores.iter().all(|&s| s >= 0.0));
        let tie = kuiper_classify(&z, &[f.clone(), f]);
        assert_eq!(tie.class, 0);
    }

    #[test]
    fn kuiper_invariant_under_monotone_transform() {
        // F(z) = Phi(z) against the samples, and exp() applied to both
        let f = TheoreticalCdf::new(&standard_constellation("4QAM").unwrap(), 1.0);
        let z = [-1.3, -0.2, 0.05, 0.4, 0.9, 2.2];
        let mut sorted = z.to_vec();
        sorted.sort_by(f64::total_cmp);
        let base = kuiper_distance(&sorted, &f);
        let n = z.len() as f64;
        let (mut up, mut down) = (0.0f64, 0.0f64);
        for (i, v) in sorted.iter().map(|v| v.exp()).enumerate() {
            let c = f.cdf_at(v.ln());
            up = up.max((i + 1) as f64 / n - c);
            down = down.max(c - i as f64 / n);
        }
        assert!((up + down - base).abs() < 1e-12);
    }

    #[test]
    fn rck_examples() {
        let x = SampledEcdf {
            x: vec![0.2, 0.6],
            n: 10,
        };
        let d = rck_classify(&x, &[vec![0.3, 0.5], vec![0.2, 0.6]]).unwrap();
        assert_eq!(d.class, 1);
        assert_eq!(d.scores[1], 0.0);
        assert!((d.scores[0] - 0.2).abs() < 1e-15);
        let one = SampledEcdf {
            x: vec![0.4],
            n: 10,
        };
        let d = rck_classify(&one, &[vec![0.1], vec![0.9]]).unwrap();
        assert!((d.scores[0] - 0.3).abs() < 1e-15 && (d.scores[1] - 0.5).abs() < 1e-15);
        assert!(rck_classify(&one, &[vec![0.1, 0.2]]).is_err());
    }

    #[test]
    fn vd_examples() {
        let classes = [cdf("4QAM", 1.0), cdf("16QAM", 1.0)];
        let model = VdModel::new(&classes).unwrap();
        assert_eq!(model.testpoints.len(), 4);
        for (k, c) in model.classes.iter().enumerate() {
            let mut acc = 0.0;
            let x: Vec<f64> = c.p[..c.p.len() - 1]
                .iter()
                .map(|p| {
                    acc += p;
                    acc
                })
                .collect();
            let d = vd_classify(&SampledEcdf { x, n: 400 }, &model).unwrap();
            assert_eq!(d.class, k);
            assert!(d.scores[k] < 1e-12);
        }
        let same = VdModel::with_testpoints(
            &[classes[0].clone(), classes[0].clone()],
            model.testpoints.clone(),
        )
        .unwrap();
        let x = SampledEcdf {
            x: vec![0.1, 0.3, 0.6, 0.9],
            n: 400,
        };
        assert_eq!(vd_classify(&x, &same).unwrap().class, 0);
        assert!(vd_classify(&SampledEcdf { x: vec![0.5], n: 2 }, &model).is_err());
    }

    #[test]
    fn rck_tracks_kuiper_with_more_testpoints() {
        let classes = [cdf("4QAM", 1.0), cdf("16QAM", 1.0)];
        let means = |t: &TestpointSet| -> Vec<Vec<f64>> {
            classes
                .iter()
                .map(|f| t.points().iter().map(|&v| f.cdf_at(v)).collect())
                .collect()
        };
        let grids: Vec<TestpointSet> = [1usize, 4, 16, 64]
            .iter()
            .map(|&l| {
                let t = (1..=l)
                    .map(|i| -2.0 + 4.0 * i as f64 / (l + 1) as f64)
                    .collect();
                TestpointSet::new(t, 0.0).unwrap()
            })
            .collect();
        let mut agree = vec![0usize; grids.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let consts = [
            standard_constellation("4QAM").unwrap(),
            standard_constellation("16QAM").unwrap(),
        ];
        let trials = 1000;
        for trial in 0..trials {
            let b = transmit(
                &consts[trial % 2],
                &ChannelConfig::from_snr_db(0.0),
                200,
                &mut rng,
            );
            let z = quadrature_feature(&b);
            let full = kuiper_classify(&z, &classes).class;
            for (g, t) in grids.iter().enumerate() {
                let x = sampled_ecdf(&z, t);
                if rck_classify(&x, &means(t)).unwrap().class == full {
                    agree[g] += 1;
                }
            }
        }
        assert!(
            agree.windows(2).all(|w| w[1] + trials / 100 >= w[0]),
            "{agree:?}"
        );
        assert!(agree[3] > agree[0], "{agree:?}");
    }
}
