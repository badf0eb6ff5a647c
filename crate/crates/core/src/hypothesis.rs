//! Random minimal-sample hypothesis generation and the residual matrix.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{fit_model, sampson_residual, ModelHypothesis, ModelKind, Point};
use crate::seed::rng_from_seed;
use crate::trajectory::TrajectorySet;

/// Hypotheses sampled per frame, per model family.
pub const HYPOTHESES_PER_FRAME: usize = 500;

/// Attempts allowed per requested hypothesis before giving up.
const ATTEMPTS_PER_HYPOTHESIS: usize = 100;

/// Residuals of every point to every hypothesis of one model family.
#[derive(Debug, Clone)]
pub struct ResidualMatrix {
    pub kind: ModelKind,
    num_points: usize,
    /// Row-major `num_points x hypotheses.len()`.
    values: Vec<f64>,
    missing: Vec<bool>,
    pub hypotheses: Vec<ModelHypothesis>,
}

impl ResidualMatrix {
    /// Build from row-major residuals; `NaN` entries are treated as missing.
    pub fn from_rows(kind: ModelKind, rows: &[Vec<f64>]) -> Self {
        let num_points = rows.len();
        let mut values = Vec::new();
        let mut missing = Vec::new();
        for row in rows {
            for &v in row {
                missing.push(v.is_nan());
                values.push(if v.is_nan() { 0.0 } else { v });
            }
        }
        let k = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == k), "ragged residual rows");
        ResidualMatrix {
            kind,
            num_points,
            values,
            missing,
            hypotheses: Vec::new(),
        }
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn num_hypotheses(&self) -> usize {
        self.values.len().checked_div(self.num_points).unwrap_or(0)
    }

    /// Residual `(point, hypothesis)`, `None` where missing.
    #[inline]
    pub fn get(&self, point: usize, hyp: usize) -> Option<f64> {
        let idx = point * self.num_hypotheses() + hyp;
        (!self.missing[idx]).then(|| self.values[idx])
    }

    pub fn row(&self, point: usize) -> (&[f64], &[bool]) {
        let k = self.num_hypotheses();
        let r = point * k..(point + 1) * k;
        (&self.values[r.clone()], &self.missing[r])
    }

    /// Apply `g` to every non-missing residual.
    pub fn map_values(&self, g: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        for (v, &m) in out.values.iter_mut().zip(&self.missing) {
            if !m {
                *v = g(*v);
            }
        }
        out
    }
}

struct Draw {
    pair: (usize, usize),
    sample: Vec<usize>,
}

fn draw_pair(rng: &mut impl Rng, frames: usize) -> (usize, usize) {
    if rng.random_bool(0.5) {
        let f = rng.random_range(0..frames - 1);
        (f, f + 1)
    } else {
        let a = rng.random_range(0..frames);
        let mut b = rng.random_range(0..frames - 1);
        if b >= a {
            b += 1;
        }
        (a.min(b), a.max(b))
    }
}

fn fit_draw(t: &TrajectorySet, kind: ModelKind, draw: &Draw) -> Option<ModelHypothesis> {
    let (f1, f2) = draw.pair;
    let src: Vec<Point> = draw.sample.iter().map(|&i| t.position(i, f1).unwrap()).collect();
    let dst: Vec<Point> = draw.sample.iter().map(|&i| t.position(i, f2).unwrap()).collect();
    let matrix = fit_model(kind, &src, &dst).ok()?;
    if !matrix.iter().all(|v| v.is_finite()) {
        return None;
    }
    Some(ModelHypothesis {
        kind,
        frame_pair: draw.pair,
        matrix,
        sample_ids: draw.sample.clone(),
    })
}

/// Sample `budget` hypotheses of one kind and fill the residual matrix.
///
/// Frame pairs are consecutive with probability one half and uniform
/// otherwise; the minimal sample is drawn uniformly among points visible in
/// both frames. Degenerate samples are redrawn. Draws are taken
/// sequentially from `seed` and fitted in parallel, so the result does not
/// depend on the thread count.
pub fn sample_hypotheses(t: &TrajectorySet, kind: ModelKind, budget: usize, seed: u64) -> Result<ResidualMatrix> {
    if budget == 0 {
        return Err(Error::Config("hypothesis budget must be positive".into()));
    }
    let frames = t.num_frames();
    let p = kind.sample_size();
    let max_attempts = ATTEMPTS_PER_HYPOTHESIS * budget;
    let exhausted = || Error::HypothesisExhaustion {
        kind,
        budget,
        attempts: max_attempts,
    };
    if frames < 2 {
        return Err(exhausted());
    }

    let mut covisible = vec![Vec::new(); frames * frames];
    for f1 in 0..frames {
        for f2 in f1 + 1..frames {
            covisible[f1 * frames + f2] = t.covisible_points(f1, f2);
        }
    }
    if covisible.iter().all(|c| c.len() < p) {
        return Err(exhausted());
    }

    let mut rng = rng_from_seed(seed);
    let mut hypotheses = Vec::with_capacity(budget);
    let mut attempts = 0;
    while hypotheses.len() < budget {
        let want = (budget - hypotheses.len()).min(max_attempts - attempts);
        if want == 0 {
            return Err(exhausted());
        }
        let mut draws = Vec::with_capacity(want);
        for _ in 0..want {
            let pair = draw_pair(&mut rng, frames);
            let pool = &covisible[pair.0 * frames + pair.1];
            if pool.len() < p {
                draws.push(None);
                continue;
            }
            let mut sample: Vec<usize> = index::sample(&mut rng, pool.len(), p)
                .into_iter()
                .map(|k| pool[k])
                .collect();
            sample.sort_unstable();
            draws.push(Some(Draw { pair, sample }));
        }
        attempts += want;
        let fitted: Vec<Option<ModelHypothesis>> = draws
            .par_iter()
            .map(|d| d.as_ref().and_then(|d| fit_draw(t, kind, d)))
            .collect();
        hypotheses.extend(fitted.into_iter().flatten());
    }
    log::debug!("{kind}: {} hypotheses from {attempts} attempts", hypotheses.len());
    Ok(fill_residuals(t, kind, hypotheses))
}

/// Evaluate every point against every hypothesis; points not visible in
/// both frames of a hypothesis are marked missing.
pub fn fill_residuals(t: &TrajectorySet, kind: ModelKind, hypotheses: Vec<ModelHypothesis>) -> ResidualMatrix {
    let n = t.num_points();
    let k = hypotheses.len();
    let rows: Vec<(Vec<f64>, Vec<bool>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut values = Vec::with_capacity(k);
            let mut missing = Vec::with_capacity(k);
            for h in &hypotheses {
                let (f1, f2) = h.frame_pair;
                match (t.position(i, f1), t.position(i, f2)) {
                    (Some(src), Some(dst)) => {
                        let r = sampson_residual(kind, &h.matrix, src, dst);
                        values.push(if r.is_finite() { r } else { f64::MAX });
                        missing.push(false);
                    }
                    _ => {
                        values.push(0.0);
                        missing.push(true);
                    }
                }
            }
            (values, missing)
        })
        .collect();
    let mut values = Vec::with_capacity(n * k);
    let mut missing = Vec::with_capacity(n * k);
    for (v, m) in rows {
        values.extend(v);
        missing.extend(m);
    }
    ResidualMatrix {
        kind,
        num_points: n,
        values,
        missing,
        hypotheses,
    }
}
