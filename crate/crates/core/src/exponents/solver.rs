//! Numerical machinery over product-of-simplices domains: the channel `V` is
//! represented by the rows used by the input distribution, each restricted to
//! the support of the corresponding row of `W` (outside it the divergence is
//! infinite).

use crate::mot::{Channel, Pmf};
use rayon::prelude::*;

/// Above this many grid points the per-row resolution is lowered.
pub(crate) const GRID_CAP: usize = 200_000;
const BISECTION_STEPS: usize = 80;
const STEP_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone)]
pub(crate) struct Problem {
    p: Vec<f64>,
    w: Channel,
    /// Inputs with positive probability.
    active: Vec<usize>,
    /// Offsets of each active row in the flat variable vector.
    offsets: Vec<usize>,
    /// Output symbols of each active row.
    supports: Vec<Vec<usize>>,
    ln_w: Vec<f64>,
    outputs: usize,
    dim: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Eval {
    pub d: f64,
    pub i: f64,
}

impl Problem {
    pub fn new(p: &Pmf, w: &Channel) -> Self {
        let active: Vec<usize> = (0..p.len()).filter(|&a| p[a] > 0.0).collect();
        let mut offsets = Vec::new();
        let mut supports = Vec::new();
        let mut ln_w = Vec::new();
        let mut dim = 0;
        for &a in &active {
            let s: Vec<usize> = (0..w.outputs()).filter(|&b| w.get(a, b) > 0.0).collect();
            offsets.push(dim);
            dim += s.len();
            ln_w.extend(s.iter().map(|&b| w.get(a, b).ln()));
            supports.push(s);
        }
        Self {
            p: p.probs().to_vec(),
            w: w.clone(),
            active,
            offsets,
            supports,
            ln_w,
            outputs: w.outputs(),
            dim,
        }
    }

    #[cfg(test)]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.active.len()
    }

    fn row_range(&self, r: usize) -> std::ops::Range<usize> {
        self.offsets[r]..self.offsets[r] + self.supports[r].len()
    }

    /// The variables of `W` itself.
    pub fn w_point(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        for (r, &a) in self.active.iter().enumerate() {
            for (k, &b) in self.supports[r].iter().enumerate() {
                x[self.offsets[r] + k] = self.w.get(a, b);
            }
        }
        x
    }

    pub fn eval(&self, x: &[f64]) -> Eval {
        let mut q = [0.0f64; 16];
        let mut q_heap;
        let q: &mut [f64] = if self.outputs <= 16 {
            &mut q[..self.outputs]
        } else {
            q_heap = vec![0.0; self.outputs];
            &mut q_heap
        };
        for (r, &a) in self.active.iter().enumerate() {
            let pa = self.p[a];
            for (k, &b) in self.supports[r].iter().enumerate() {
                q[b] += pa * x[self.offsets[r] + k];
            }
        }
        let (mut d, mut i) = (0.0, 0.0);
        for (r, &a) in self.active.iter().enumerate() {
            let pa = self.p[a];
            for (k, &b) in self.supports[r].iter().enumerate() {
                let idx = self.offsets[r] + k;
                let v = x[idx];
                if v > 0.0 {
                    let lv = v.ln();
                    d += pa * v * (lv - self.ln_w[idx]);
                    i += pa * v * (lv - q[b].ln());
                }
            }
        }
        Eval {
            d: d.max(0.0),
            i: i.max(0.0),
        }
    }

    pub fn to_channel(&self, x: &[f64]) -> Channel {
        let mut rows = self.w.to_vecs();
        for (r, &a) in self.active.iter().enumerate() {
            let row = &mut rows[a];
            row.iter_mut().for_each(|v| *v = 0.0);
            for (k, &b) in self.supports[r].iter().enumerate() {
                row[b] = x[self.offsets[r] + k];
            }
            // Renormalise away accumulated rounding.
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= s);
        }
        Channel::from_raw(rows)
    }

    /// Lattice points of the product of simplices with `res` points per
    /// dimension, lowering `res` until the total fits under [`GRID_CAP`].
    pub fn grid(&self, res: usize) -> Vec<Vec<f64>> {
        let mut res = res.max(2);
        loop {
            let total = self
                .supports
                .iter()
                .map(|s| binomial(res - 1 + s.len() - 1, s.len() - 1))
                .try_fold(1usize, |acc, c| acc.checked_mul(c));
            match total {
                Some(t) if t <= GRID_CAP || res == 2 => break,
                _ => res -= 1,
            }
        }
        let per_row: Vec<Vec<Vec<f64>>> = self
            .supports
            .iter()
            .map(|s| simplex_lattice(s.len(), res - 1))
            .collect();
        let mut out = Vec::new();
        let mut idx = vec![0usize; per_row.len()];
        loop {
            let mut x = Vec::with_capacity(self.dim);
            for (r, i) in idx.iter().enumerate() {
                x.extend_from_slice(&per_row[r][*i]);
            }
            out.push(x);
            let mut r = per_row.len();
            loop {
                if r == 0 {
                    return out;
                }
                r -= 1;
                idx[r] += 1;
                if idx[r] < per_row[r].len() {
                    break;
                }
                idx[r] = 0;
            }
        }
    }

    /// Deterministic channels (vertices of the domain).
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        let mut idx = vec![0usize; self.rows()];
        loop {
            let mut x = vec![0.0; self.dim];
            for (r, &k) in idx.iter().enumerate() {
                x[self.offsets[r] + k] = 1.0;
            }
            out.push(x);
            let mut r = self.rows();
            loop {
                if r == 0 {
                    return out;
                }
                r -= 1;
                idx[r] += 1;
                if idx[r] < self.supports[r].len() {
                    break;
                }
                idx[r] = 0;
            }
        }
    }

    /// Pairwise transfer directions `(i, j)` within each row.
    fn moves(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for r in 0..self.rows() {
            let range = self.row_range(r);
            for i in range.clone() {
                for j in range.clone() {
                    if i < j {
                        out.push((i, j));
                    }
                }
            }
        }
        out
    }
}

fn binomial(n: usize, k: usize) -> usize {
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Points of the `k`-simplex with coordinates in multiples of `1/total`.
fn simplex_lattice(k: usize, total: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; k];
    fn rec(pos: usize, left: usize, cur: &mut Vec<usize>, total: usize, out: &mut Vec<Vec<f64>>) {
        if pos + 1 == cur.len() {
            cur[pos] = left;
            out.push(cur.iter().map(|&c| c as f64 / total as f64).collect());
            return;
        }
        for c in 0..=left {
            cur[pos] = c;
            rec(pos + 1, left - c, cur, total, out);
        }
    }
    if k == 1 {
        return vec![vec![1.0]];
    }
    rec(0, total, &mut cur, total, &mut out);
    out
}

/// Result of a local search.
#[derive(Debug, Clone)]
pub(crate) struct Found {
    pub x: Vec<f64>,
    pub value: f64,
    /// Improvement achieved after the step size first fell below `1e-8`.
    pub gap: f64,
}

/// Coordinate pattern search over pairwise mass transfers within rows, with
/// step expansion along successful directions. `f` may return `+inf`; `snap`
/// maps an accepted point to its canonical representative (identity for
/// unconstrained problems, projection onto the constraint surface otherwise).
pub(crate) fn pattern_search<F, S>(prob: &Problem, x0: Vec<f64>, init_step: f64, rounds: usize, f: F, snap: S) -> Found
where
    F: Fn(&[f64]) -> f64,
    S: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let moves = prob.moves();
    let mut x = x0;
    let mut fx = f(&x);
    let mut fine_start = f64::NAN;
    for _ in 0..rounds.max(1) {
        let mut h = init_step;
        while h > STEP_FLOOR {
            if h < 1e-8 && fine_start.is_nan() {
                fine_start = fx;
            }
            let mut improved = false;
            for &(i, j) in &moves {
                for sign in [1.0, -1.0] {
                    let mut step = h;
                    loop {
                        // Transfer `sign*step` of mass from j to i, clipped to the simplex.
                        let delta = if sign > 0.0 { step.min(x[j]) } else { -step.min(x[i]) };
                        if delta == 0.0 {
                            break;
                        }
                        let mut y = x.clone();
                        y[i] += delta;
                        y[j] -= delta;
                        let Some(y) = snap(&y) else { break };
                        let fy = f(&y);
                        if fy < fx {
                            x = y;
                            fx = fy;
                            improved = true;
                            step *= 2.0;
                        } else {
                            break;
                        }
                    }
                }
            }
            if !improved {
                h *= 0.5;
            }
        }
    }
    let gap = if fine_start.is_nan() {
        0.0
    } else {
        (fine_start - fx).max(0.0)
    };
    Found { x, value: fx, gap }
}

/// Minimise `f` from the best grid point; suitable for convex objectives.
pub(crate) fn minimize_on_grid<F>(prob: &Problem, grid: &[Vec<f64>], res: usize, rounds: usize, f: F) -> Found
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let values: Vec<f64> = grid.par_iter().map(|x| f(x)).collect();
    let best = argmin(&values);
    let step = 1.0 / (res.max(2) - 1) as f64;
    pattern_search(prob, grid[best].clone(), step, rounds, &f, |y| Some(y.to_vec()))
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        if v < &values[best] {
            best = k;
        }
    }
    best
}

/// Point on the ray from `anchor` through `x` where `I` reaches `level`.
/// Requires `I(anchor) < level`; returns `None` if the ray leaves the domain
/// first.
pub(crate) fn radial_projection(prob: &Problem, anchor: &[f64], x: &[f64], level: f64) -> Option<Vec<f64>> {
    let dir: Vec<f64> = x.iter().zip(anchor).map(|(a, b)| a - b).collect();
    if dir.iter().all(|d| d.abs() < 1e-15) {
        return None;
    }
    let mut s_max = f64::INFINITY;
    for (d, a) in dir.iter().zip(anchor) {
        if *d < 0.0 {
            s_max = s_max.min(a / -d);
        }
    }
    let at = |s: f64| -> Vec<f64> { anchor.iter().zip(&dir).map(|(a, d)| (a + s * d).max(0.0)).collect() };
    if !s_max.is_finite() {
        return None;
    }
    let top = at(s_max);
    if prob.eval(&top).i < level {
        return None;
    }
    let (mut lo, mut hi) = (0.0, s_max);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if prob.eval(&at(mid)).i < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(at(hi))
}

/// Minimise `D` over the level set `{I = level}`, which bounds the convex
/// sublevel set containing `anchor`. Grid points are projected radially onto
/// the level set; the best few well-separated ones seed local searches.
pub(crate) fn minimize_d_on_level(
    prob: &Problem,
    grid: &[Vec<f64>],
    res: usize,
    rounds: usize,
    anchor: &[f64],
    level: f64,
    starts: usize,
) -> Option<Found> {
    let projected: Vec<Option<(Vec<f64>, f64)>> = grid
        .par_iter()
        .map(|x| {
            radial_projection(prob, anchor, x, level).map(|y| {
                let d = prob.eval(&y).d;
                (y, d)
            })
        })
        .collect();
    let mut cands: Vec<(Vec<f64>, f64)> = projected.into_iter().flatten().collect();
    // Vertices keep level sets near the domain's extreme points reachable.
    for v in prob.vertices() {
        if let Some(y) = radial_projection(prob, anchor, &v, level) {
            let d = prob.eval(&y).d;
            cands.push((y, d));
        }
    }
    if cands.is_empty() {
        return None;
    }
    cands.sort_by(|a, b| a.1.total_cmp(&b.1));
    let sep = 2.0 / (res.max(2) - 1) as f64;
    let mut seeds: Vec<&Vec<f64>> = Vec::new();
    for (y, _) in &cands {
        if seeds.len() >= starts {
            break;
        }
        let far = seeds
            .iter()
            .all(|s| s.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) > sep);
        if far {
            seeds.push(y);
        }
    }
    let step = 1.0 / (res.max(2) - 1) as f64;
    let results: Vec<Found> = seeds
        .par_iter()
        .map(|s| {
            pattern_search(
                prob,
                (*s).clone(),
                step,
                rounds,
                |y| prob.eval(y).d,
                |y| radial_projection(prob, anchor, y, level),
            )
        })
        .collect();
    results.into_iter().min_by(|a, b| a.value.total_cmp(&b.value))
}

/// Largest `I(P,V)` over the domain; attained at a deterministic channel
/// because `I` is convex in `V`.
pub(crate) fn max_mutual_info(prob: &Problem) -> f64 {
    prob.vertices().iter().map(|v| prob.eval(v).i).fold(0.0, f64::max)
}
