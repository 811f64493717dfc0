//! Nelder-Mead simplex search, maximizing. Points where the objective is
//! `-inf` or NaN are infeasible and never displace a feasible vertex.

pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

pub(crate) struct Settings {
    /// A run stops once the objective spread across the simplex is below this,
    /// and restarts stop once a restart gains less than this.
    pub tolerance: f64,
    pub max_evaluations: usize,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

struct Counted<F> {
    f: F,
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn call(&mut self, x: &[f64]) -> f64 {
        self.evaluations += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }
}

/// Runs the simplex from `start` with per-coordinate initial `steps`,
/// restarting around the incumbent after each convergence.
pub(crate) fn maximize<F>(f: F, start: &[f64], steps: &[f64], settings: &Settings) -> Outcome
where
    F: FnMut(&[f64]) -> f64,
{
    let mut obj = Counted { f, evaluations: 0 };
    let value = obj.call(start);
    let mut best = (start.to_vec(), value);
    while obj.evaluations < settings.max_evaluations {
        let before = best.1;
        let run = run_simplex(&mut obj, &best, steps, settings);
        if run.1 > best.1 {
            best = run;
        }
        if !(best.1 - before > settings.tolerance) {
            break;
        }
    }
    Outcome {
        x: best.0,
        value: best.1,
        evaluations: obj.evaluations,
    }
}

fn run_simplex<F>(
    obj: &mut Counted<F>,
    start: &(Vec<f64>, f64),
    steps: &[f64],
    settings: &Settings,
) -> (Vec<f64>, f64)
where
    F: FnMut(&[f64]) -> f64,
{
    let n = start.0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push(start.clone());
    for (i, step) in steps.iter().enumerate() {
        let mut x = start.0.clone();
        x[i] += step;
        let v = obj.call(&x);
        simplex.push((x, v));
    }
    loop {
        // best first; the sort is stable so ties keep their order
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        let spread = simplex[0].1 - simplex[n].1;
        if (spread.is_finite() && spread < settings.tolerance)
            || obj.evaluations >= settings.max_evaluations
        {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|p| p.0[j]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].0.clone();
        let along = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst)
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let xr = along(REFLECT);
        let fr = obj.call(&xr);
        if fr > simplex[0].1 {
            let xe = along(EXPAND);
            let fe = obj.call(&xe);
            simplex[n] = if fe > fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr > simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        // outside contraction when the reflection beat the worst vertex,
        // inside contraction otherwise
        let (xc, fc) = if fr > simplex[n].1 {
            let xc = along(CONTRACT * REFLECT);
            let fc = obj.call(&xc);
            (xc, fc)
        } else {
            let xc = along(-CONTRACT);
            let fc = obj.call(&xc);
            (xc, fc)
        };
        if fc > fr.max(simplex[n].1) {
            simplex[n] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            for (xj, bj) in vertex.0.iter_mut().zip(&best) {
                *xj = bj + SHRINK * (*xj - bj);
            }
            vertex.1 = obj.call(&vertex.0);
        }
    }
    simplex.swap_remove(0)
}
