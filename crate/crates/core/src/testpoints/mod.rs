//! Testpoint selection.
//!
//! Testpoints are chosen to maximize the Bhattacharyya distance between the
//! Gaussian approximations of the sampled-ECDF feature under two classes.
//! The search runs a simplex method in the reparameterization
//! `t_1 = u_1, t_{i+1} = t_i + exp(u_{i+1})`, which keeps the testpoints
//! ordered without penalty terms. A placement is feasible when every class
//! expects at least [`MIN_EXPECTED_COUNT`] samples (and at least
//! [`GUARD_EPSILON`] of probability) in every region.

mod simplex;

use nalgebra::DVector;

use crate::bayes::{statistics_unchecked, ClassStatistics};
use crate::distributions::{
    check_min_mass, mixture_cdf, mixture_quantile, TestpointSet, TheoreticalCdf,
};
use crate::error::{Error, Result};
use crate::linalg::Spd;
use crate::GUARD_EPSILON;

const GRID_POINTS: usize = 2048;
const ROOT_TOLERANCE: f64 = 1e-10;
const WINDOW_SDS: f64 = 5.0;
/// Objective convergence threshold of the simplex search.
pub const SEARCH_TOLERANCE: f64 = 1e-9;
/// Objective evaluations allowed per start.
pub const SEARCH_BUDGET: usize = 2000;
/// Expected number of samples every class must put in every region for a
/// placement to be feasible during the search.
pub const MIN_EXPECTED_COUNT: f64 = 5.0;

fn same_distribution(a: &TheoreticalCdf, b: &TheoreticalCdf) -> bool {
    a.components() == b.components() && a.component_sd() == b.component_sd()
}

/// Points where the two class densities cross, i.e. the local extrema of
/// `F_A - F_B`. Roots are bracketed on a 2048-point grid over
/// `[min mean - 5 sd, max mean + 5 sd]` and refined by bisection to 1e-10.
/// Identical distributions have no isolated crossings and give an empty list.
pub fn pdf_crossings(a: &TheoreticalCdf, b: &TheoreticalCdf) -> Vec<f64> {
    if same_distribution(a, b) {
        return Vec::new();
    }
    let sd = a.component_sd().max(b.component_sd());
    let (lo, hi) = {
        let (a0, a1) = a.mean_range();
        let (b0, b1) = b.mean_range();
        (a0.min(b0) - WINDOW_SDS * sd, a1.max(b1) + WINDOW_SDS * sd)
    };
    let diff = |z: f64| a.pdf_at(z) - b.pdf_at(z);
    let h = (hi - lo) / (GRID_POINTS - 1) as f64;
    let grid: Vec<(f64, f64)> = (0..GRID_POINTS)
        .map(|i| {
            let z = lo + i as f64 * h;
            (z, diff(z))
        })
        .collect();
    let mut roots = Vec::new();
    for (i, &(z, d)) in grid.iter().enumerate() {
        if d == 0.0 {
            roots.push(z);
            continue;
        }
        let Some(&(z1, d1)) = grid.get(i + 1) else {
            break;
        };
        if d1 != 0.0 && d.signum() != d1.signum() {
            let (mut l, mut r) = (z, z1);
            while r - l > ROOT_TOLERANCE {
                let m = 0.5 * (l + r);
                if diff(m).signum() == d.signum() {
                    l = m;
                } else {
                    r = m;
                }
            }
            roots.push(0.5 * (l + r));
        }
    }
    roots
}

/// Bhattacharyya distance between two Gaussians,
/// `(1/8) d' S^-1 d + (1/2) ln(|S| / sqrt(|S_A| |S_B|))` with
/// `S = (S_A + S_B) / 2`.
pub fn bhattacharyya(a: &ClassStatistics, b: &ClassStatistics) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    let fa = Spd::new(&a.sigma).ok_or_else(|| Error::NotPositiveDefinite(a.name.clone()))?;
    let fb = Spd::new(&b.sigma).ok_or_else(|| Error::NotPositiveDefinite(b.name.clone()))?;
    let avg = (&a.sigma + &b.sigma) * 0.5;
    let fs = Spd::new(&avg).ok_or_else(|| Error::NotPositiveDefinite("average".into()))?;
    let d = DVector::from_iterator(a.dim(), a.mu.iter().zip(&b.mu).map(|(x, y)| x - y));
    let mahalanobis = d.dot(&fs.solve(&d));
    let mismatch = fs.log_det() - 0.5 * (fa.log_det() + fb.log_det());
    Ok(0.125 * mahalanobis + 0.5 * mismatch)
}

/// Two classes, the sample count `N` and the number of testpoints `L`.
#[derive(Debug, Clone)]
pub struct PairContext {
    pub a: TheoreticalCdf,
    pub b: TheoreticalCdf,
    pub n: usize,
    pub l: usize,
    /// Minimum expected samples per region and class for a placement to be
    /// feasible; defaults to [`MIN_EXPECTED_COUNT`]. The probability-gap
    /// guard applies regardless.
    pub min_expected_count: f64,
}

impl PairContext {
    pub fn new(a: TheoreticalCdf, b: TheoreticalCdf, n: usize, l: usize) -> Result<Self> {
        if same_distribution(&a, &b) {
            return Err(Error::Config(format!(
                "classes `{}` and `{}` have identical distributions",
                a.class_ref(),
                b.class_ref()
            )));
        }
        if n == 0 || l == 0 {
            return Err(Error::Config("N and L must be at least 1".into()));
        }
        Ok(PairContext {
            a,
            b,
            n,
            l,
            min_expected_count: MIN_EXPECTED_COUNT,
        })
    }

    /// Bhattacharyya distance at `t`, or `None` when `t` is infeasible.
    pub fn distance(&self, t: &[f64]) -> Option<f64> {
        pairwise_sum(
            [&self.a, &self.b].into_iter(),
            self.n,
            self.min_expected_count,
            t,
        )
    }

    /// Pdf-crossings resized to `L` points (first, when there are any),
    /// equally spaced quantiles of the two-class mixture, and placements
    /// reaching out to the edges of the feasible range.
    pub fn default_starts(&self) -> Vec<Vec<f64>> {
        let classes = [&self.a, &self.b];
        let mut starts = Vec::new();
        let crossings = pdf_crossings(&self.a, &self.b);
        if !crossings.is_empty() {
            starts.push(resize_crossings(&self.a, &self.b, &crossings, self.l));
        }
        starts.push(quantile_start(&classes, self.l));
        let floor = (self.min_expected_count / self.n as f64).max(GUARD_EPSILON);
        starts.extend(edge_starts(&classes, self.l, floor));
        starts
    }

    fn cell(&self) -> String {
        format!(
            "{} vs {} at {:.2} dB, N = {}",
            self.a.class_ref(),
            self.b.class_ref(),
            self.a.snr_db(),
            self.n
        )
    }
}

/// Sum of pairwise Bhattacharyya distances, `None` if any class violates the
/// guard at `t`. Terms are added in sorted order so the value does not depend
/// on class order.
fn pairwise_sum<'a>(
    classes: impl Iterator<Item = &'a TheoreticalCdf>,
    n: usize,
    min_count: f64,
    t: &[f64],
) -> Option<f64> {
    let classes: Vec<&TheoreticalCdf> = classes.collect();
    let eps = (min_count / n as f64).max(GUARD_EPSILON);
    for f in &classes {
        check_min_mass(t, std::slice::from_ref(*f), eps).ok()?;
    }
    let stats: Vec<ClassStatistics> = classes
        .iter()
        .map(|f| statistics_unchecked(f, t, n))
        .collect();
    let mut terms = Vec::new();
    for (i, a) in stats.iter().enumerate() {
        for b in &stats[i + 1..] {
            terms.push(bhattacharyya(a, b).ok()?);
        }
    }
    terms.sort_by(f64::total_cmp);
    Some(terms.into_iter().sum())
}

fn quantile_start(classes: &[&TheoreticalCdf], l: usize) -> Vec<f64> {
    (1..=l)
        .map(|i| mixture_quantile(classes, i as f64 / (l + 1) as f64))
        .collect()
}

/// Starts touching the tails: for one testpoint, each end of the range where
/// every class keeps a little more than `floor` of mass on both sides; for
/// more, points spread evenly in mixture probability across that range.
fn edge_starts(classes: &[&TheoreticalCdf], l: usize, floor: f64) -> Vec<Vec<f64>> {
    let margin = (1.5 * floor).min(0.25);
    let lo = classes
        .iter()
        .map(|f| f.quantile(margin))
        .fold(f64::MIN, f64::max);
    let hi = classes
        .iter()
        .map(|f| f.quantile(1.0 - margin))
        .fold(f64::MAX, f64::min);
    if !(lo < hi) {
        return Vec::new();
    }
    if l == 1 {
        return vec![vec![lo], vec![hi]];
    }
    let (p_lo, p_hi) = (mixture_cdf(classes, lo), mixture_cdf(classes, hi));
    let spread = (0..l)
        .map(|i| match i {
            0 => lo,
            i if i == l - 1 => hi,
            i => mixture_quantile(classes, p_lo + (p_hi - p_lo) * i as f64 / (l - 1) as f64),
        })
        .collect();
    vec![spread]
}

/// Fits the crossings to `l` points. Extra crossings are dropped in order of
/// smallest `|F_A - F_B|`; missing points are inserted at the midpoint of the
/// widest gap between the 1% and 99% mixture quantiles.
fn resize_crossings(
    a: &TheoreticalCdf,
    b: &TheoreticalCdf,
    crossings: &[f64],
    l: usize,
) -> Vec<f64> {
    let mut pts = crossings.to_vec();
    if pts.len() > l {
        let mut ranked: Vec<(usize, f64)> = pts
            .iter()
            .map(|&t| (a.cdf_at(t) - b.cdf_at(t)).abs())
            .enumerate()
            .collect();
        ranked.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
        let mut keep: Vec<usize> = ranked[..l].iter().map(|r| r.0).collect();
        keep.sort_unstable();
        pts = keep.into_iter().map(|i| pts[i]).collect();
    }
    let lo = mixture_quantile(&[a, b], 0.01);
    let hi = mixture_quantile(&[a, b], 0.99);
    while pts.len() < l {
        let mut bounded = vec![lo.min(pts.first().copied().unwrap_or(lo))];
        bounded.extend(&pts);
        bounded.push(hi.max(pts.last().copied().unwrap_or(hi)));
        let (gap, _) = bounded.windows(2).map(|w| w[1] - w[0]).enumerate().fold(
            (0, f64::MIN),
            |acc, (i, g)| if g > acc.1 { (i, g) } else { acc },
        );
        let mid = 0.5 * (bounded[gap] + bounded[gap + 1]);
        pts.insert(gap, mid);
    }
    pts
}

fn to_unconstrained(t: &[f64]) -> Vec<f64> {
    let mut u = Vec::with_capacity(t.len());
    u.push(t[0]);
    for w in t.windows(2) {
        u.push((w[1] - w[0]).max(f64::MIN_POSITIVE).ln());
    }
    u
}

fn to_testpoints(u: &[f64]) -> Vec<f64> {
    let mut t = Vec::with_capacity(u.len());
    let mut cur = u[0];
    t.push(cur);
    for g in &u[1..] {
        cur += g.exp();
        t.push(cur);
    }
    t
}

/// `previous` with one more testpoint, placed at the probability midpoint of
/// the region holding the most mass under the mixture of `classes`. Used to
/// seed a search for `L` testpoints from the optimum for `L - 1`.
pub fn nested_start(classes: &[&TheoreticalCdf], previous: &[f64]) -> Vec<f64> {
    let mut edges = vec![0.0];
    edges.extend(previous.iter().map(|&t| mixture_cdf(classes, t)));
    edges.push(1.0);
    let (region, _) =
        edges
            .windows(2)
            .map(|w| w[1] - w[0])
            .enumerate()
            .fold(
                (0, f64::MIN),
                |acc, (i, m)| if m > acc.1 { (i, m) } else { acc },
            );
    let extra = mixture_quantile(classes, 0.5 * (edges[region] + edges[region + 1]));
    let mut t = previous.to_vec();
    t.insert(region, extra);
    t
}

/// Testpoints found by the search and the objective value they achieve.
#[derive(Debug, Clone)]
pub struct OptimizedTestpoints {
    pub testpoints: TestpointSet,
    /// Bhattacharyya distance (pairwise sum for more than two classes).
    pub distance: f64,
    pub evaluations: usize,
}

/// Multi-start simplex search maximizing `objective`. Each start is scored
/// as given before being searched from, so the result is never worse than
/// any feasible start. Ties keep the earliest start.
fn search<F>(
    objective: F,
    starts: &[Vec<f64>],
    l: usize,
    scale: f64,
) -> Option<(Vec<f64>, f64, usize)>
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let settings = simplex::Settings {
        tolerance: SEARCH_TOLERANCE,
        max_evaluations: SEARCH_BUDGET,
    };
    let mut steps = vec![0.25; l];
    steps[0] = 0.25 * scale;
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut evaluations = 0;
    let offer = |t: Vec<f64>, v: f64, best: &mut Option<(Vec<f64>, f64)>| {
        if v.is_finite() && best.as_ref().is_none_or(|b| v > b.1) {
            *best = Some((t, v));
        }
    };
    for start in starts {
        if let Some(v) = objective(start) {
            evaluations += 1;
            offer(start.clone(), v, &mut best);
        }
        let u0 = to_unconstrained(start);
        let out = simplex::maximize(
            |u: &[f64]| objective(&to_testpoints(u)).unwrap_or(f64::NEG_INFINITY),
            &u0,
            &steps,
            &settings,
        );
        evaluations += out.evaluations;
        offer(to_testpoints(&out.x), out.value, &mut best);
    }
    best.map(|(t, v)| (t, v, evaluations))
}

fn check_starts(starts: &[Vec<f64>], l: usize) -> Result<()> {
    if starts.is_empty() {
        return Err(Error::InvalidTestpoints("no starting points".into()));
    }
    check_starts_len(starts, l)
}

fn check_starts_len(starts: &[Vec<f64>], l: usize) -> Result<()> {
    if let Some(s) = starts
        .iter()
        .find(|s| s.len() != l || s.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::InvalidTestpoints(format!(
            "start {s:?} does not hold {l} finite testpoints"
        )));
    }
    Ok(())
}

/// Maximizes the Bhattacharyya distance over ordered testpoint sets from
/// each of `starts` and returns the best local maximum found.
pub fn optimize_testpoints(ctx: &PairContext, starts: &[Vec<f64>]) -> Result<OptimizedTestpoints> {
    check_starts(starts, ctx.l)?;
    let scale = ctx.a.component_sd().max(ctx.b.component_sd());
    let (t, distance, evaluations) =
        search(|t| ctx.distance(t), starts, ctx.l, scale).ok_or_else(|| Error::Infeasible {
            l: ctx.l,
            cell: ctx.cell(),
        })?;
    Ok(OptimizedTestpoints {
        testpoints: TestpointSet::new(t, ctx.a.snr_db())?,
        distance,
        evaluations,
    })
}

/// Testpoints for a set of classes, maximizing the sum of pairwise
/// Bhattacharyya distances. With two classes this is
/// [`optimize_testpoints`] from the default starts. With more, the starts
/// are every pair's default starts and pair-optimal testpoints plus
/// quantiles of the full mixture; classes are put in a canonical order
/// first so the result does not depend on the order given.
pub fn multiclass_testpoints(
    classes: &[TheoreticalCdf],
    n: usize,
    l: usize,
) -> Result<OptimizedTestpoints> {
    multiclass_testpoints_from(classes, n, l, &[])
}

/// [`multiclass_testpoints`] with additional caller-supplied starts, e.g. a
/// [`nested_start`] from the optimum for one fewer testpoint.
pub fn multiclass_testpoints_from(
    classes: &[TheoreticalCdf],
    n: usize,
    l: usize,
    extra_starts: &[Vec<f64>],
) -> Result<OptimizedTestpoints> {
    check_starts_len(extra_starts, l)?;
    if classes.len() < 2 {
        return Err(Error::Config(
            "testpoint search needs at least two classes".into(),
        ));
    }
    let mut sorted: Vec<&TheoreticalCdf> = classes.iter().collect();
    sorted.sort_by(|a, b| {
        a.class_ref().cmp(b.class_ref()).then_with(|| {
            a.components()
                .iter()
                .flat_map(|c| [c.0, c.1])
                .partial_cmp(b.components().iter().flat_map(|c| [c.0, c.1]))
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    let mut pairs = Vec::new();
    for (i, a) in sorted.iter().enumerate() {
        for b in &sorted[i + 1..] {
            pairs.push(PairContext::new((*a).clone(), (*b).clone(), n, l)?);
        }
    }
    if pairs.len() == 1 {
        let ctx = &pairs[0];
        let mut starts = ctx.default_starts();
        starts.extend_from_slice(extra_starts);
        return optimize_testpoints(ctx, &starts);
    }
    let mut starts = vec![quantile_start(&sorted, l)];
    starts.extend_from_slice(extra_starts);
    for ctx in &pairs {
        let defaults = ctx.default_starts();
        if let Ok(best) = optimize_testpoints(ctx, &defaults) {
            starts.push(best.testpoints.points().to_vec());
        }
        starts.extend(defaults);
    }
    starts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    starts.dedup();
    let scale = sorted.iter().map(|f| f.component_sd()).fold(0.0, f64::max);
    let objective = |t: &[f64]| pairwise_sum(sorted.iter().copied(), n, MIN_EXPECTED_COUNT, t);
    let (t, distance, evaluations) =
        search(objective, &starts, l, scale).ok_or_else(|| Error::Infeasible {
            l,
            cell: format!(
                "{} at {:.2} dB, N = {n}",
                sorted
                    .iter()
                    .map(|f| f.class_ref())
                    .collect::<Vec<_>>()
                    .join("/"),
                sorted[0].snr_db()
            ),
        })?;
    Ok(OptimizedTestpoints {
        testpoints: TestpointSet::new(t, sorted[0].snr_db())?,
        distance,
        evaluations,
    })
}
