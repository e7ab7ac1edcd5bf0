//! Capacity, capacity-achieving inputs, information variance, dispersion and
//! the Gaussian tail function.

use crate::mot::{mutual_info_unchecked, Channel, Pmf};
use crate::{Error, Result};
use libm::erfc;
use std::f64::consts::SQRT_2;

/// Outcome of the capacity computation.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    pub capacity: f64,
    pub caid: Pmf,
    pub iterations: usize,
    /// Gap between the upper and lower capacity bounds at termination.
    pub residual: f64,
}

/// Information variance at the detected capacity-achieving inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionResult {
    pub v_at_caid: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub unique_caid: bool,
    /// `v_min` for `eps < 1/2`, `v_max` otherwise.
    pub v_eps: f64,
}

/// Per-input divergences `D(W(·|a) ‖ pW)`.
fn row_divergences(w: &Channel, q: &[f64]) -> Vec<f64> {
    w.rows()
        .iter()
        .map(|row| {
            row.probs()
                .iter()
                .zip(q)
                .filter(|(&v, _)| v > 0.0)
                .map(|(&v, &qb)| if qb > 0.0 { v * (v / qb).ln() } else { f64::INFINITY })
                .sum()
        })
        .collect()
}

/// Blahut–Arimoto iteration started from `start`.
pub fn blahut_arimoto_from(w: &Channel, start: &Pmf, tol: f64, max_iter: usize) -> Result<CapacityResult> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::OutOfRange(format!("tolerance must be positive, got {tol}")));
    }
    if start.len() != w.inputs() {
        return Err(Error::DimensionMismatch {
            what: "starting distribution vs channel inputs",
            left: start.len(),
            right: w.inputs(),
        });
    }
    let mut p = start.probs().to_vec();
    let mut residual = f64::INFINITY;
    for it in 0..=max_iter {
        let pm = Pmf::from_weights(&p);
        let q = w.output_marginal(&pm)?;
        let d = row_divergences(w, &q);
        let lower = mutual_info_unchecked(&pm, w);
        let upper = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        residual = (upper - lower).max(0.0);
        if residual <= tol {
            return Ok(CapacityResult {
                capacity: lower,
                caid: pm,
                iterations: it,
                residual,
            });
        }
        // Plain BA is sublinear when an input sits on the boundary of
        // optimality; a periodic Newton polish restores fast convergence and is
        // accepted only if it certifies a smaller gap.
        if it > 0 && it % POLISH_EVERY == 0 {
            if let Some(q) = newton_polish(w, &p) {
                let qm = Pmf::from_weights(&q);
                let lo = mutual_info_unchecked(&qm, w);
                let hi = row_divergences(w, &w.output_marginal(&qm)?)
                    .into_iter()
                    .fold(f64::NEG_INFINITY, f64::max);
                if hi - lo < residual {
                    p = q;
                    if hi - lo <= tol {
                        return Ok(CapacityResult {
                            capacity: lo,
                            caid: qm,
                            iterations: it,
                            residual: (hi - lo).max(0.0),
                        });
                    }
                    continue;
                }
            }
        }
        // Multiplicative update, shifted by the maximum for stability.
        let shift = d.iter().cloned().filter(|x| x.is_finite()).fold(0.0, f64::max);
        for (pa, da) in p.iter_mut().zip(&d) {
            *pa *= (da - shift).exp();
        }
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= s);
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

const POLISH_EVERY: usize = 200;

/// Newton iterations for `max I(p, W)` on the support of `p` under `Σp = 1`,
/// dropping inputs whose mass would turn negative. `None` if the reduced
/// Hessian is singular (e.g. repeated rows).
fn newton_polish(w: &Channel, start: &[f64]) -> Option<Vec<f64>> {
    let mut p = start.to_vec();
    let floor = 1e-6 * p.iter().cloned().fold(0.0, f64::max);
    p.iter_mut().for_each(|x| {
        if *x < floor {
            *x = 0.0
        }
    });
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    for _ in 0..60 {
        let support: Vec<usize> = (0..p.len()).filter(|&a| p[a] > 0.0).collect();
        let k = support.len();
        if k == 1 {
            return Some(p);
        }
        let q = w.output_marginal(&Pmf::from_weights(&p)).ok()?;
        let d = row_divergences(w, &q);
        // KKT system [H 1; 1ᵀ 0] [Δ; λ] = [-∇I; 0], with ∇I_a = D_a - 1.
        let dim = k + 1;
        let mut m = vec![vec![0.0; dim + 1]; dim];
        for (i, &a) in support.iter().enumerate() {
            for (j, &c) in support.iter().enumerate() {
                m[i][j] = -w
                    .row(a)
                    .probs()
                    .iter()
                    .zip(w.row(c).probs())
                    .zip(&q)
                    .filter(|(_, &qb)| qb > 0.0)
                    .map(|((x, y), qb)| x * y / qb)
                    .sum::<f64>();
            }
            m[i][k] = 1.0;
            m[k][i] = 1.0;
            m[i][dim] = -(d[a] - 1.0);
        }
        let step = solve(m)?;
        let mut t = 1.0f64;
        let mut drop = None;
        for (i, &a) in support.iter().enumerate() {
            if step[i] < 0.0 && p[a] + t * step[i] <= 0.0 {
                t = p[a] / -step[i];
                drop = Some(a);
            }
        }
        let mut moved = 0.0f64;
        for (i, &a) in support.iter().enumerate() {
            p[a] = (p[a] + t * step[i]).max(0.0);
            moved = moved.max((t * step[i]).abs());
        }
        if let Some(a) = drop {
            p[a] = 0.0;
        }
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= s);
        if moved < 1e-15 {
            break;
        }
    }
    Some(p)
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn solve(mut m: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = m.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, piv);
        for r in col + 1..n {
            let (top, rest) = m.split_at_mut(r);
            let pivot_row = &top[col];
            let f = rest[0][col] / pivot_row[col];
            for (dst, src) in rest[0][col..].iter_mut().zip(&pivot_row[col..]) {
                *dst -= f * src;
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let tail: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (m[r][n] - tail) / m[r][r];
    }
    Some(x)
}

/// Capacity via Blahut–Arimoto from the uniform input.
pub fn blahut_arimoto(w: &Channel, tol: f64, max_iter: usize) -> Result<CapacityResult> {
    blahut_arimoto_from(w, &Pmf::uniform(w.inputs()), tol, max_iter)
}

/// Default tolerance and iteration cap for capacity computations.
pub const CAPACITY_TOL: f64 = 1e-9;
pub const CAPACITY_MAX_ITER: usize = 10_000;

/// `V(P,W)`: expected conditional variance of the information density.
pub fn cond_info_variance(p: &Pmf, w: &Channel) -> Result<f64> {
    let q = w.output_marginal(p)?;
    let mut v = 0.0;
    for (a, row) in w.rows().iter().enumerate() {
        if p[a] == 0.0 {
            continue;
        }
        let mut mean = 0.0;
        let mut second = 0.0;
        for (b, &wb) in row.probs().iter().enumerate() {
            if wb == 0.0 {
                continue;
            }
            if q[b] == 0.0 {
                return Err(Error::UndefinedLogRatio { input: a, output: b });
            }
            let i = (wb / q[b]).ln();
            mean += wb * i;
            second += wb * i * i;
        }
        v += p[a] * (second - mean * mean).max(0.0);
    }
    Ok(v)
}

/// Deterministic spread of starting points for the uniqueness heuristic:
/// the uniform input and, for each symbol, a start putting 3/4 of the mass on it.
fn restart_points(k: usize) -> Vec<Pmf> {
    let mut out = vec![Pmf::uniform(k)];
    if k > 1 {
        for a in 0..k {
            let mut w = vec![0.25 / (k - 1) as f64; k];
            w[a] = 0.75;
            out.push(Pmf::from_weights(&w));
        }
    }
    out
}

/// Detected capacity-achieving inputs: distinct limits of restarted
/// Blahut–Arimoto runs (ℓ1 separation above `1e-4`).
pub fn detect_caids(w: &Channel, tol: f64, max_iter: usize) -> Result<Vec<Pmf>> {
    let mut found: Vec<Pmf> = Vec::new();
    for start in restart_points(w.inputs()) {
        let r = blahut_arimoto_from(w, &start, tol, max_iter)?;
        let distinct = found.iter().all(|f| {
            f.probs()
                .iter()
                .zip(r.caid.probs())
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
                > 1e-4
        });
        if distinct {
            found.push(r.caid);
        }
    }
    Ok(found)
}

/// ε-dispersion from the heuristically detected CAIDs.
pub fn dispersion(w: &Channel, eps: f64) -> Result<DispersionResult> {
    dispersion_with_candidates(w, eps, &[])
}

/// ε-dispersion, additionally minimising/maximising over user-supplied
/// candidate CAIDs (each must attain capacity within `1e-6`).
pub fn dispersion_with_candidates(w: &Channel, eps: f64, candidates: &[Pmf]) -> Result<DispersionResult> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::OutOfRange(format!("eps must lie in (0,1), got {eps}")));
    }
    let cap = blahut_arimoto(w, CAPACITY_TOL, CAPACITY_MAX_ITER)?;
    let mut caids = detect_caids(w, CAPACITY_TOL, CAPACITY_MAX_ITER)?;
    let unique_caid = caids.len() == 1 && candidates.is_empty();
    for c in candidates {
        let i = crate::mot::mutual_info(c, w)?;
        if (i - cap.capacity).abs() > 1e-6 {
            return Err(Error::NotCapacityAchieving {
                mutual_info: i,
                capacity: cap.capacity,
            });
        }
        caids.push(c.clone());
    }
    let v_at_caid = cond_info_variance(&cap.caid, w)?;
    let mut v_min = v_at_caid;
    let mut v_max = v_at_caid;
    for c in &caids {
        let v = cond_info_variance(c, w)?;
        v_min = v_min.min(v);
        v_max = v_max.max(v);
    }
    if unique_caid {
        v_min = v_at_caid;
        v_max = v_at_caid;
    }
    Ok(DispersionResult {
        v_at_caid,
        v_min,
        v_max,
        unique_caid,
        v_eps: if eps < 0.5 { v_min } else { v_max },
    })
}

/// Gaussian tail `Q(z) = P[N(0,1) > z]`.
pub fn qfunc(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

/// Inverse of [`qfunc`] by bisection.
///
/// Accuracy is limited by the resolution of `p` itself: for `p` near 1 the
/// spacing of doubles around 1 caps how well `z` is determined.
pub fn qinv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::OutOfRange(format!("qinv needs p in (0,1), got {p}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if qfunc(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
