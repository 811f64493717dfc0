//! End-to-end acceptance checks. Each test prints one `criterion N: PASS|FAIL`
//! line straight to stdout so the verdicts show up even when output capture
//! is on.

use std::io::Write;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use modclass::bayes::{build_discriminant_model, uniform_priors};
use modclass::harness::significance::paired_sign_test;
use modclass::harness::{run_experiment, ClassifierKind, ExperimentConfig, ModelSource, ResultRow};
use modclass::signal::standard_constellation;
use modclass::testpoints::nested_start;
use modclass::{
    class_statistics, discriminant_classify, exact_bayes_classify, multinomial_log_pmf,
    optimize_testpoints, pdf_crossings, quadrature_feature, sampled_ecdf, transmit, ChannelConfig,
    PairContext, RegionProbabilities, TestpointSet, TheoreticalCdf,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// The runtime bounds are wall-clock, so the criteria take turns.
static SERIAL: Mutex<()> = Mutex::new(());

const LEVEL: f64 = 0.01;

fn verdict(criterion: u32, pass: bool, detail: &str) {
    let line = format!(
        "criterion {criterion}: {} | {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    std::io::stdout().lock().write_all(line.as_bytes()).unwrap();
    assert!(pass, "{line}");
}

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn cdf(name: &str, snr_db: f64) -> TheoreticalCdf {
    let ch = ChannelConfig::from_snr_db(snr_db);
    TheoreticalCdf::new(&standard_constellation(name).unwrap(), ch.noise_variance())
}

fn optimized(a: &str, b: &str, snr_db: f64, n: usize, l: usize) -> TestpointSet {
    let ctx = PairContext::new(cdf(a, snr_db), cdf(b, snr_db), n, l).unwrap();
    optimize_testpoints(&ctx, &ctx.default_starts())
        .unwrap()
        .testpoints
}

fn row(rows: &[ResultRow], snr: f64, kind: ClassifierKind, l: usize) -> &ResultRow {
    rows.iter()
        .find(|r| r.snr_db == snr && r.classifier == kind && r.l == l)
        .unwrap_or_else(|| panic!("no {kind} row at {snr} dB, L = {l}"))
}

fn vd_l(rows: &[ResultRow], snr: f64) -> usize {
    rows.iter()
        .find(|r| r.snr_db == snr && r.classifier == ClassifierKind::Vd)
        .map(|r| r.l)
        .unwrap()
}

#[test]
fn criterion_1_covariance_of_sampled_ecdf() {
    let _g = serial();
    let started = Instant::now();
    let snr = 0.0;
    let (m, blocks) = (200usize, 100_000usize);
    let f = cdf("4QAM", snr);
    let crossings = pdf_crossings(&f, &cdf("16QAM", snr));
    let t = TestpointSet::new(crossings, snr).unwrap();
    let l = t.len();
    assert_eq!(l, 4);
    let stats = class_statistics(&f, &t, 2 * m).unwrap();

    let c = standard_constellation("4QAM").unwrap();
    let ch = ChannelConfig::from_snr_db(snr);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut sum = vec![0.0; l];
    let mut cross = vec![0.0; l * l];
    for _ in 0..blocks {
        let z = quadrature_feature(&transmit(&c, &ch, m, &mut rng));
        let x = sampled_ecdf(&z, &t).x;
        for i in 0..l {
            sum[i] += x[i];
            for j in 0..l {
                cross[i * l + j] += x[i] * x[j];
            }
        }
    }
    let nb = blocks as f64;
    let mut worst: f64 = 0.0;
    for i in 0..l {
        for j in 0..l {
            let emp = (cross[i * l + j] - sum[i] * sum[j] / nb) / (nb - 1.0);
            let model = stats.sigma[(i, j)];
            worst = worst.max((emp - model).abs() / model);
        }
    }
    let elapsed = started.elapsed();
    verdict(
        1,
        worst < 0.05 && elapsed < Duration::from_secs(60),
        &format!(
            "max relative error {:.4} over {l}x{l} entries, {:.1} s",
            worst,
            elapsed.as_secs_f64()
        ),
    );
}

fn agreement(t: &TestpointSet, m: usize, trials_per_class: usize, seed: u64) -> f64 {
    let snr = t.snr_db;
    let names = ["4QAM", "16QAM"];
    let classes: Vec<TheoreticalCdf> = names.iter().map(|n| cdf(n, snr)).collect();
    let priors = uniform_priors(2);
    let stats: Vec<_> = classes
        .iter()
        .map(|f| class_statistics(f, t, 2 * m).unwrap())
        .collect();
    let model = build_discriminant_model(&stats, &priors, t, 2 * m).unwrap();
    let probs: Vec<_> = classes
        .iter()
        .map(|f| RegionProbabilities::new(f, t).unwrap())
        .collect();
    let ch = ChannelConfig::from_snr_db(snr);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agree = 0usize;
    for name in names {
        let c = standard_constellation(name).unwrap();
        for _ in 0..trials_per_class {
            let x = sampled_ecdf(&quadrature_feature(&transmit(&c, &ch, m, &mut rng)), t);
            let g = discriminant_classify(&model, &x).unwrap().class;
            let e = exact_bayes_classify(&x, &probs, &priors).unwrap().class;
            agree += usize::from(g == e);
        }
    }
    agree as f64 / (2 * trials_per_class) as f64
}

#[test]
fn criterion_2_discriminant_matches_exact_bayes() {
    let _g = serial();
    let t = optimized("4QAM", "16QAM", 0.0, 400, 4);
    let a400 = agreement(&t, 200, 5_000, 21);
    let a800 = agreement(&t, 400, 5_000, 22);
    verdict(
        2,
        a400 >= 0.95 && a800 >= a400 - 0.01,
        &format!("agreement {a400:.4} at N = 400, {a800:.4} at N = 800"),
    );
}

#[test]
fn criterion_3_accuracy_ordering_at_0_db() {
    let _g = serial();
    let started = Instant::now();
    let cfg = ExperimentConfig {
        snr_db_grid: vec![0.0],
        l_grid: vec![3, 8],
        classifiers: vec![
            ClassifierKind::Ml,
            ClassifierKind::Bayes,
            ClassifierKind::Vd,
        ],
        ..ExperimentConfig::default()
    };
    let rows = run_experiment(&cfg, &ModelSource::Build).unwrap();
    let ml = row(&rows, 0.0, ClassifierKind::Ml, 0);
    let b8 = row(&rows, 0.0, ClassifierKind::Bayes, 8);
    let b3 = row(&rows, 0.0, ClassifierKind::Bayes, 3);
    let vd = row(&rows, 0.0, ClassifierKind::Vd, 4);
    let steps = [(ml, b8), (b8, b3), (b3, vd)];
    let tests: Vec<_> = steps
        .iter()
        .map(|(a, b)| paired_sign_test(&a.correct, &b.correct))
        .collect();
    let ordered = steps
        .iter()
        .zip(&tests)
        .all(|((a, b), p)| a.pc > b.pc && p.significant(LEVEL));
    let close = ml.pc - b8.pc <= 0.02;
    let elapsed = started.elapsed();
    let p: Vec<String> = tests.iter().map(|p| format!("{:.1e}", p.p_value)).collect();
    verdict(
        3,
        ordered && close && elapsed < Duration::from_secs(300),
        &format!(
            "ML {:.4} > Bayes(8) {:.4} > Bayes(3) {:.4} > VD(4) {:.4}, paired p = [{}], ML - Bayes(8) = {:.4}, {:.1} s",
            ml.pc,
            b8.pc,
            b3.pc,
            vd.pc,
            p.join(", "),
            ml.pc - b8.pc,
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_4_optimized_testpoints_near_crossings() {
    let _g = serial();
    let crossings = pdf_crossings(&cdf("4QAM", 0.0), &cdf("16QAM", 0.0));
    let t = optimized("4QAM", "16QAM", 0.0, 400, 4);
    // Each optimized point must stay in the cell of its own extremum, i.e.
    // nearer to its matched crossing than to any other.
    let matched = t.points().len() == crossings.len()
        && t.points().iter().enumerate().all(|(i, &p)| {
            let own = (p - crossings[i]).abs();
            crossings
                .iter()
                .enumerate()
                .all(|(j, &c)| j == i || own < (p - c).abs())
        });
    let (lo, hi) = (crossings[0], crossings[crossings.len() - 1]);
    let between_outer = t.points().iter().all(|&p| (lo..=hi).contains(&p));
    let moved = t
        .points()
        .iter()
        .zip(&crossings)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    verdict(
        4,
        crossings.len() == 4 && matched && moved > 1e-3,
        &format!(
            "{} crossings {:.4?}, optimized {:.4?}, each nearest its own crossing: {matched}, \
             all between the outer crossings: {between_outer}, max shift {moved:.4}",
            crossings.len(),
            crossings,
            t.points()
        ),
    );
}

#[test]
fn criterion_5_accuracy_across_snr() {
    let _g = serial();
    let cfg = ExperimentConfig {
        l_grid: vec![4],
        match_vd_testpoints: true,
        classifiers: vec![
            ClassifierKind::Bayes,
            ClassifierKind::Vd,
            ClassifierKind::Kuiper,
            ClassifierKind::Ml,
        ],
        ..ExperimentConfig::default()
    };
    let rows = run_experiment(&cfg, &ModelSource::Build).unwrap();
    let grid = &cfg.snr_db_grid;

    let mut monotone_breaks = Vec::new();
    for kind in &cfg.classifiers {
        let series: Vec<&ResultRow> = grid
            .iter()
            .map(|&s| {
                let l = match kind {
                    ClassifierKind::Bayes | ClassifierKind::Vd => vd_l(&rows, s),
                    _ => 0,
                };
                row(&rows, s, *kind, l)
            })
            .collect();
        for w in series.windows(2) {
            let slack = 2.0 * w[0].stderr.hypot(w[1].stderr);
            if w[1].pc < w[0].pc - slack {
                monotone_breaks.push(format!("{kind} {} -> {} dB", w[0].snr_db, w[1].snr_db));
            }
        }
    }

    let mut reversals = Vec::new();
    let mut raw_reversals = Vec::new();
    let mut gaps = 0;
    for &s in grid {
        let l = vd_l(&rows, s);
        let bayes = row(&rows, s, ClassifierKind::Bayes, l);
        let vd = row(&rows, s, ClassifierKind::Vd, l);
        let kuiper = row(&rows, s, ClassifierKind::Kuiper, 0);
        for (hi, lo) in [(bayes, vd), (vd, kuiper)] {
            if hi.pc < lo.pc {
                raw_reversals.push(format!("{} < {} at {s} dB", hi.classifier, lo.classifier));
            }
            if paired_sign_test(&lo.correct, &hi.correct).significant(LEVEL) {
                reversals.push(format!("{} < {} at {s} dB", hi.classifier, lo.classifier));
            }
        }
        let gap = paired_sign_test(&bayes.correct, &vd.correct);
        if bayes.pc > vd.pc && gap.significant(LEVEL) {
            gaps += 1;
        }
    }
    verdict(
        5,
        monotone_breaks.is_empty() && reversals.is_empty() && gaps >= 10,
        &format!(
            "monotonicity breaks {monotone_breaks:?}; significant ordering reversals {reversals:?} \
             (point-estimate reversals {raw_reversals:?}); Bayes-VD gap significant at {gaps} of {} SNRs",
            grid.len()
        ),
    );
}

#[test]
fn criterion_6_testpoint_search() {
    let _g = serial();
    let (snr, n) = (0.0, 400);
    let names = ["4QAM", "16QAM", "64QAM"];
    let mut problems = Vec::new();
    let mut cells = 0;
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            let (fa, fb) = (cdf(a, snr), cdf(b, snr));
            let mut previous: Option<(Vec<f64>, f64)> = None;
            for l in 1..=8 {
                let ctx = PairContext::new(fa.clone(), fb.clone(), n, l).unwrap();
                let starts = ctx.default_starts();
                let plain = optimize_testpoints(&ctx, &starts).unwrap();
                if let Some(at_crossings) = ctx.distance(&starts[0]) {
                    if plain.distance < at_crossings {
                        problems.push(format!(
                            "{a}/{b} L={l}: {} < crossing start {at_crossings}",
                            plain.distance
                        ));
                    }
                }
                let mut with_nested = starts.clone();
                if let Some((t, _)) = &previous {
                    with_nested.push(nested_start(&[&fa, &fb], t));
                }
                let nested = optimize_testpoints(&ctx, &with_nested).unwrap();
                if let Some((_, d)) = &previous {
                    if nested.distance < *d {
                        problems.push(format!(
                            "{a}/{b} L={l}: nested {} < {d} at L={}",
                            nested.distance,
                            l - 1
                        ));
                    }
                }
                previous = Some((nested.testpoints.points().to_vec(), nested.distance));
                cells += 1;
            }

            let ctx = PairContext::new(fa.clone(), fb.clone(), n, 1).unwrap();
            let best = optimize_testpoints(&ctx, &ctx.default_starts()).unwrap();
            let (lo, hi) = (
                fa.quantile(1e-4).min(fb.quantile(1e-4)),
                fa.quantile(1.0 - 1e-4).max(fb.quantile(1.0 - 1e-4)),
            );
            let steps = 100_000;
            let grid: Vec<(f64, f64)> = (0..=steps)
                .map(|k| lo + (hi - lo) * k as f64 / steps as f64)
                .filter_map(|t| ctx.distance(&[t]).map(|d| (t, d)))
                .collect();
            let top = grid.iter().map(|g| g.1).fold(f64::NEG_INFINITY, f64::max);
            // symmetric class pairs have mirrored maxima of equal height
            let maximizers: Vec<f64> = grid
                .iter()
                .filter(|g| g.1 >= top - 1e-9 * top.abs())
                .map(|g| g.0)
                .collect();
            let found = best.testpoints.points()[0];
            if !maximizers.iter().any(|m| (found - m).abs() <= 1e-3) {
                problems.push(format!(
                    "{a}/{b} L=1: optimum {found} vs grid maximizers {maximizers:?}"
                ));
            }
        }
    }
    verdict(
        6,
        problems.is_empty(),
        &format!("{cells} (pair, L) cells and 3 grid searches checked; problems {problems:?}"),
    );
}

fn multinomial_enumeration_total() -> f64 {
    let p = [0.2, 0.3, 0.5];
    let mut total = 0.0;
    for a in 0..=5u64 {
        for b in 0..=5 - a {
            total += multinomial_log_pmf(&[a, b, 5 - a - b], &p).unwrap().exp();
        }
    }
    total
}

/// Largest deviation between the closed-form covariance and the double sum
/// of per-sample region covariances, over `instances` random problems.
fn double_sum_deviation(instances: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < instances {
        let k = rng.random_range(1..=5);
        let comps: Vec<(f64, f64)> = (0..k)
            .map(|_| (rng.random_range(-2.0..2.0), rng.random_range(0.1..1.0)))
            .collect();
        let total: f64 = comps.iter().map(|c| c.1).sum();
        let comps = comps.into_iter().map(|(m, w)| (m, w / total)).collect();
        let f = TheoreticalCdf::from_components("r", rng.random_range(0.05..2.0), comps).unwrap();
        let l = rng.random_range(1..=6);
        let mut t: Vec<f64> = (0..l).map(|_| rng.random_range(-3.0..3.0)).collect();
        t.sort_by(f64::total_cmp);
        let n = rng.random_range(1..=1000);
        let Ok(set) = TestpointSet::new(t.clone(), 0.0) else {
            continue;
        };
        let Ok(stats) = class_statistics(&f, &set, n) else {
            continue;
        };

        let mut edges = vec![0.0];
        edges.extend(t.iter().map(|&v| f.cdf_at(v)));
        let p: Vec<f64> = edges.windows(2).map(|w| w[1] - w[0]).collect();
        let per_sample = |a: usize, b: usize| {
            let delta = if a == b { p[a] } else { 0.0 };
            (delta - p[a] * p[b]) / n as f64
        };
        for i in 0..l {
            for j in 0..l {
                let mut s = 0.0;
                for a in 0..=i {
                    for b in 0..=j {
                        s += per_sample(a, b);
                    }
                }
                worst = worst.max((s - stats.sigma[(i, j)]).abs());
            }
        }
        done += 1;
    }
    worst
}

#[test]
fn criterion_7_unit_level_identities() {
    let _g = serial();
    let total = multinomial_enumeration_total();
    let deviation = double_sum_deviation(100);
    verdict(
        7,
        (total - 1.0).abs() <= 1e-12 && deviation <= 1e-12,
        &format!(
            "pmf enumeration sums to 1 {:+.1e}, double-sum covariance deviation {deviation:.1e} over 100 instances; \
             per-example checks run in the unit suite",
            total - 1.0
        ),
    );
}
