//! Error and strong-converse exponents as constrained divergence
//! minimisations over channels `V`.
//!
//! Every exponent reduces to one of two primitives. Convex objectives
//! (`D + I`, `D - I`, `I`) are minimised directly. Constrained problems whose
//! unconstrained minimiser is infeasible are minimised over the level set
//! `{I = R}`: because the objective is convex, its minimum over either side of
//! the level set is attained on the level set itself. That set bounds the
//! convex sublevel set `{I ≤ R}`, so it is parametrised by rays from a point
//! inside it, and searched from many grid starts.

mod solver;

use crate::mot::{entropy, mutual_info, Channel, Pmf};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use solver::{max_mutual_info, minimize_d_on_level, minimize_on_grid, Found, Problem};
use std::collections::HashMap;
use std::sync::Mutex;

/// Grid and refinement settings for the exponent solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Grid points per simplex dimension.
    pub grid_resolution: usize,
    /// Local-search passes from each start.
    pub refinement_rounds: usize,
    /// Tolerance in nats.
    pub tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grid_resolution: 40,
            refinement_rounds: 3,
            tol: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_resolution < 2 {
            return Err(Error::OutOfRange("grid_resolution must be at least 2".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::OutOfRange("solver tol must be positive".into()));
        }
        Ok(())
    }
}

/// An exponent evaluated at a rate pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentPoint {
    pub rate_r_code: f64,
    pub rate_r_abandon: f64,
    pub input: Pmf,
    /// Nats; `f64::INFINITY` when no channel satisfies the constraint.
    pub value: f64,
    /// Optimising channel; `None` when the value is infinite.
    pub argmin_channel: Option<Channel>,
    /// Residual of the final refinement plus constraint violation.
    pub solver_gap: f64,
}

/// Local searches launched per level-set problem.
const STARTS: usize = 8;

#[derive(Debug, Clone)]
struct Anchor {
    x: Vec<f64>,
    d: f64,
    i: f64,
}

/// Exponent solver for a fixed input distribution and channel. Anchor points
/// are computed once; level-set solutions are memoised per level.
#[derive(Debug)]
pub struct ExponentSolver {
    prob: Problem,
    cfg: SolverConfig,
    p: Pmf,
    grid: Vec<Vec<f64>>,
    w_point: Vec<f64>,
    i_w: f64,
    h_p: f64,
    /// argmin `D + I`.
    plus: Anchor,
    /// argmin `D - I`.
    minus: Anchor,
    /// argmin `I`.
    zero: Anchor,
    i_max: f64,
    level_cache: Mutex<HashMap<(u64, bool), Option<LevelMin>>>,
}

impl ExponentSolver {
    pub fn new(p: &Pmf, w: &Channel, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let i_w = mutual_info(p, w)?;
        let prob = Problem::new(p, w);
        let grid = prob.grid(cfg.grid_resolution);
        let res = cfg.grid_resolution;
        let rounds = cfg.refinement_rounds;
        let anchor = |f: Found| {
            let e = prob.eval(&f.x);
            Anchor { x: f.x, d: e.d, i: e.i }
        };
        let plus = anchor(minimize_on_grid(&prob, &grid, res, rounds, |x| {
            let e = prob.eval(x);
            e.d + e.i
        }));
        let minus = anchor(minimize_on_grid(&prob, &grid, res, rounds, |x| {
            let e = prob.eval(x);
            e.d - e.i
        }));
        let zero = anchor(minimize_on_grid(&prob, &grid, res, rounds, |x| prob.eval(x).i));
        let i_max = max_mutual_info(&prob);
        Ok(Self {
            w_point: prob.w_point(),
            prob,
            cfg,
            p: p.clone(),
            grid,
            i_w,
            h_p: entropy(p),
            plus,
            minus,
            zero,
            i_max,
            level_cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// `I(P,W)`.
    pub fn mutual_info(&self) -> f64 {
        self.i_w
    }

    /// `H(P)`.
    pub fn input_entropy(&self) -> f64 {
        self.h_p
    }

    /// Smallest `I(P,V)` over channels absolutely continuous w.r.t. `W`.
    pub fn min_mutual_info(&self) -> f64 {
        self.zero.i
    }

    /// Largest `I(P,V)` over channels absolutely continuous w.r.t. `W`.
    pub fn max_mutual_info(&self) -> f64 {
        self.i_max
    }

    fn point(&self, r_code: f64, r_ab: f64, value: f64, x: Option<&[f64]>, gap: f64) -> ExponentPoint {
        ExponentPoint {
            rate_r_code: r_code,
            rate_r_abandon: r_ab,
            input: self.p.clone(),
            value,
            argmin_channel: x.map(|x| self.prob.to_channel(x)),
            solver_gap: gap,
        }
    }

    /// `min D` over `{I = level}`; `inner` selects the anchor (`true`: the
    /// minimiser of `I`, for sublevel problems; `false`: `W` itself).
    fn level_min(&self, level: f64, from_min_info: bool) -> Option<LevelMin> {
        let key = (level.to_bits(), from_min_info);
        if let Some(hit) = self.level_cache.lock().unwrap().get(&key) {
            return hit.clone();
        }
        let anchor = if from_min_info { &self.zero.x } else { &self.w_point };
        let found = minimize_d_on_level(
            &self.prob,
            &self.grid,
            self.cfg.grid_resolution,
            self.cfg.refinement_rounds,
            anchor,
            level,
            STARTS,
        )
        .map(|f| {
            let e = self.prob.eval(&f.x);
            let gap = f.gap + (e.i - level).abs();
            (f.x, e.d, gap)
        });
        self.level_cache.lock().unwrap().insert(key, found.clone());
        found
    }

    /// `min D` over channels with `I = R_min`, where the sublevel set has no
    /// interior. With a common output symbol this is the constant-channel case
    /// solved by the normalised geometric mean of the rows.
    fn e_sp_at_floor(&self, rate: f64) -> ExponentPoint {
        if self.zero.i == 0.0 {
            let w = self.prob.to_channel(&self.w_point);
            let k = w.outputs();
            let mut g = vec![0.0; k];
            for (b, gb) in g.iter_mut().enumerate() {
                let mut ln = 0.0;
                for a in 0..w.inputs() {
                    let pa = self.p[a];
                    if pa > 0.0 {
                        let v = w.get(a, b);
                        ln += if v > 0.0 { pa * v.ln() } else { f64::NEG_INFINITY };
                    }
                }
                *gb = ln.exp();
            }
            let s: f64 = g.iter().sum();
            let q: Vec<f64> = g.iter().map(|v| v / s).collect();
            let v = Channel::from_raw(vec![q; w.inputs()]);
            let value = (-s.ln()).max(0.0);
            return ExponentPoint {
                rate_r_code: rate,
                rate_r_abandon: 0.0,
                input: self.p.clone(),
                value,
                argmin_channel: Some(v),
                solver_gap: 0.0,
            };
        }
        // Positive floor: approach it from just above.
        let level = self.zero.i + self.cfg.tol * 1e-3;
        match self.level_min(level, true) {
            Some((x, d, gap)) => self.point(rate, 0.0, d, Some(&x), gap),
            None => self.point(rate, 0.0, f64::INFINITY, None, 0.0),
        }
    }

    /// Sphere-packing exponent `min{D(V‖W|P) : I(P,V) ≤ R}`.
    pub fn e_sp(&self, rate: f64) -> Result<ExponentPoint> {
        check_rate(rate)?;
        if rate >= self.i_w {
            return Ok(self.point(rate, 0.0, 0.0, Some(&self.w_point), 0.0));
        }
        let floor = self.zero.i;
        if rate < floor - 1e-12 {
            return Ok(self.point(rate, 0.0, f64::INFINITY, None, 0.0));
        }
        if rate <= floor + 1e-12 {
            return Ok(self.e_sp_at_floor(rate));
        }
        Ok(match self.level_min(rate, true) {
            Some((x, d, gap)) => self.point(rate, 0.0, d, Some(&x), gap),
            None => self.point(rate, 0.0, f64::INFINITY, None, 0.0),
        })
    }

    /// Random-coding exponent `min_V D(V‖W|P) + |I(P,V) - R|⁺`.
    pub fn e_r(&self, rate: f64) -> Result<ExponentPoint> {
        check_rate(rate)?;
        if rate >= self.i_w {
            return Ok(self.point(rate, 0.0, 0.0, Some(&self.w_point), 0.0));
        }
        let sp = self.e_sp(rate)?;
        if self.plus.i >= rate {
            let straight = self.plus.d + self.plus.i - rate;
            if straight <= sp.value {
                return Ok(self.point(rate, 0.0, straight, Some(&self.plus.x), 0.0));
            }
        }
        Ok(sp)
    }

    /// Abandonment exponent: the sphere-packing exponent at `H(P) - r`.
    pub fn e_a(&self, r: f64) -> Result<ExponentPoint> {
        let r = self.check_abandon_rate(r)?;
        let mut pt = self.e_sp((self.h_p - r).max(0.0))?;
        pt.rate_r_code = 0.0;
        pt.rate_r_abandon = r;
        Ok(pt)
    }

    /// Ensemble exponent `min{E_r(R), E_a(r)}`.
    pub fn e_star(&self, rate: f64, r: f64) -> Result<ExponentPoint> {
        let er = self.e_r(rate)?;
        let ea = self.e_a(r)?;
        let mut best = if ea.value < er.value { ea } else { er };
        best.rate_r_code = rate;
        best.rate_r_abandon = r;
        Ok(best)
    }

    /// Strong-converse sphere-packing exponent `min{D(V‖W|P) : I(P,V) ≥ R}`.
    pub fn k_sp(&self, rate: f64) -> Result<ExponentPoint> {
        check_rate(rate)?;
        if rate <= self.i_w {
            return Ok(self.point(rate, 0.0, 0.0, Some(&self.w_point), 0.0));
        }
        if rate > self.i_max + 1e-12 {
            return Ok(self.point(rate, 0.0, f64::INFINITY, None, 0.0));
        }
        let level = rate.min(self.i_max);
        Ok(match self.level_min(level, false) {
            Some((x, d, gap)) => self.point(rate, 0.0, d, Some(&x), gap),
            None => self.point(rate, 0.0, f64::INFINITY, None, 0.0),
        })
    }

    /// Strong-converse random-coding exponent `min_V D(V‖W|P) + |R - I(P,V)|⁺`.
    pub fn k_r(&self, rate: f64) -> Result<ExponentPoint> {
        check_rate(rate)?;
        if rate <= self.i_w {
            return Ok(self.point(rate, 0.0, 0.0, Some(&self.w_point), 0.0));
        }
        let sp = self.k_sp(rate)?;
        if self.minus.i <= rate {
            let straight = self.minus.d - self.minus.i + rate;
            if straight <= sp.value {
                return Ok(self.point(rate, 0.0, straight, Some(&self.minus.x), 0.0));
            }
        }
        Ok(sp)
    }

    /// `K_sp(max{R, H(P) - r})`.
    pub fn k_star(&self, rate: f64, r: f64) -> Result<ExponentPoint> {
        check_rate(rate)?;
        let r = self.check_abandon_rate(r)?;
        let mut pt = self.k_sp(rate.max(self.h_p - r))?;
        pt.rate_r_code = rate;
        pt.rate_r_abandon = r;
        Ok(pt)
    }

    /// Rate above which the random-coding and sphere-packing exponents agree:
    /// `I(P,V°)` with `V°` the minimiser of `D + I`. Returns 0 when the
    /// sphere-packing exponent is infinite below that rate.
    pub fn critical_rate(&self) -> f64 {
        if self.zero.i >= self.plus.i - self.cfg.tol {
            0.0
        } else {
            self.plus.i
        }
    }

    fn check_abandon_rate(&self, r: f64) -> Result<f64> {
        let slack = 1e-12;
        if !(r >= -slack && r <= self.h_p + slack) {
            return Err(Error::OutOfRange(format!(
                "abandonment rate {r} outside [0, H(P) = {}]",
                self.h_p
            )));
        }
        Ok(r.clamp(0.0, self.h_p))
    }
}

/// Level-set minimiser: point, objective value and refinement gap.
type LevelMin = (Vec<f64>, f64, f64);

fn check_rate(rate: f64) -> Result<()> {
    if !rate.is_finite() || rate < 0.0 {
        return Err(Error::OutOfRange(format!(
            "rate must be finite and nonnegative, got {rate}"
        )));
    }
    Ok(())
}

pub fn e_r(rate: f64, p: &Pmf, w: &Channel, cfg: SolverConfig) -> Result<ExponentPoint> {
    ExponentSolver::new(p, w, cfg)?.e_r(rate)
}

pub fn e_sp(rate: f64, p: &Pmf, w: &Channel, cfg: SolverConfig) -> Result<ExponentPoint> {
    ExponentSolver::new(p, w, cfg)?.e_sp(rate)
}

pub fn e_a(r: f64, p: &Pmf, w: &Channel, cfg: SolverConfig) -> Result<ExponentPoint> {
    ExponentSolver::new(p, w, cfg)?.e_a(r)
}

pub fn e_star(rate: f64, r: f64, p: &Pmf, w: &Channel, cfg: SolverConfig) -> Result<ExponentPoint> {
    ExponentSolver::new(p, w, cfg)?.e_star(rate, r)
}

pub fn k_sp(rate: f64, p: &Pmf, w: &Channel, cfg: SolverConfig) -> Result<ExponentPoint> {
    ExponentSolver::new(p, w, cfg)?.k_sp(rate)
}

pub fn k_r(rate: f64, p: &Pmf, w: &Channel, cfg: SolverConfig) -> Result<ExponentPoint> {
    ExponentSolver::new(p, w, cfg)?.k_r(rate)
}

pub fn k_star(rate: f64, r: f64, p: &Pmf, w: &Channel, cfg: SolverConfig) -> Result<ExponentPoint> {
    ExponentSolver::new(p, w, cfg)?.k_star(rate, r)
}

pub fn critical_rate(p: &Pmf, w: &Channel, cfg: SolverConfig) -> Result<f64> {
    Ok(ExponentSolver::new(p, w, cfg)?.critical_rate())
}

/// `max_P E*(R, r, P)` over a supplied list of input distributions. Since the
/// abandonment rate is capped by `H(P)`, candidates with `H(P) < r` are skipped.
pub fn e_star_over_inputs(rate: f64, r: f64, inputs: &[Pmf], w: &Channel, cfg: SolverConfig) -> Result<ExponentPoint> {
    let mut best: Option<ExponentPoint> = None;
    for p in inputs {
        if entropy(p) + 1e-12 < r {
            continue;
        }
        let pt = e_star(rate, r, p, w, cfg)?;
        if best.as_ref().is_none_or(|b| pt.value > b.value) {
            best = Some(pt);
        }
    }
    best.ok_or_else(|| Error::OutOfRange("no candidate input distribution admits this abandonment rate".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn bac() -> Channel {
        Channel::new(vec![vec![0.8, 0.2], vec![0.1, 0.9]]).unwrap()
    }

    fn hb(p: f64) -> f64 {
        -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
    }

    fn solver(w: &Channel) -> ExponentSolver {
        ExponentSolver::new(&Pmf::uniform(2), w, SolverConfig::default()).unwrap()
    }

    /// Brute-force 2x2 grid: `f(d, i)` minimised over V on an `n x n` lattice
    /// of the two free transition probabilities.
    fn brute<F: Fn(f64, f64) -> f64>(w: &Channel, n: usize, f: F) -> f64 {
        let u = Pmf::uniform(2);
        let mut best = f64::INFINITY;
        for a in 0..=n {
            for b in 0..=n {
                let (s, t) = (a as f64 / n as f64, b as f64 / n as f64);
                let v = Channel::new(vec![vec![1.0 - s, s], vec![1.0 - t, t]]).unwrap();
                let d = crate::mot::cond_kl(&v, w, &u).unwrap();
                let i = crate::mot::mutual_info(&u, &v).unwrap();
                best = best.min(f(d, i));
            }
        }
        best
    }

    #[test]
    fn boundaries_are_zero() {
        let w = bac();
        let s = solver(&w);
        let i = s.mutual_info();
        assert_eq!(s.e_r(i).unwrap().value, 0.0);
        assert_eq!(s.e_r(i + 0.1).unwrap().value, 0.0);
        assert_eq!(s.e_sp(i).unwrap().value, 0.0);
        assert_eq!(s.k_sp(i).unwrap().value, 0.0);
        assert_eq!(s.k_r(0.01).unwrap().value, 0.0);
        let hxy = s.input_entropy() - i;
        assert!(s.e_a(hxy).unwrap().value.abs() < 1e-12);
        assert_eq!(s.e_a(0.0).unwrap().value, 0.0);
        assert!(s.e_r(-0.1).is_err());
        assert!(s.e_a(LN_2 + 0.01).is_err());
    }

    #[test]
    fn e_r_matches_brute_force() {
        let w = bac();
        let s = solver(&w);
        let got = s.e_r(0.05).unwrap();
        let want = brute(&w, 2000, |d, i| d + (i - 0.05).max(0.0));
        assert!((got.value - want).abs() < 1e-3, "{} vs {want}", got.value);
        assert!(got.value <= want + 1e-9);
    }

    #[test]
    fn e_sp_at_zero_rate_is_geometric_mean() {
        let w = bac();
        let s = solver(&w);
        let got = s.e_sp(0.0).unwrap().value;
        // 1-D oracle: minimise over constant channels q.
        let mut best = f64::INFINITY;
        for k in 1..100_000 {
            let q = k as f64 / 100_000.0;
            let d = |a: f64, b: f64| (1.0 - q) * ((1.0 - q) / a).ln() + q * (q / b).ln();
            best = best.min(0.5 * d(0.8, 0.2) + 0.5 * d(0.1, 0.9));
        }
        assert!((got - best).abs() < 1e-8);
        assert!(got.is_finite());
    }

    #[test]
    fn e_sp_infinite_below_floor() {
        // With disjoint supports every V ≪ W carries full information.
        let s = solver(&Channel::identity(2));
        assert_eq!(s.e_sp(0.3).unwrap().value, f64::INFINITY);
        assert_eq!(s.e_sp(LN_2).unwrap().value, 0.0);
    }

    #[test]
    fn k_sp_infinite_above_ceiling() {
        let s = solver(&bac());
        assert_eq!(s.k_sp(LN_2 + 1e-6).unwrap().value, f64::INFINITY);
        assert!(s.k_sp(LN_2 - 1e-3).unwrap().value.is_finite());
    }

    #[test]
    fn k_sp_matches_brute_force() {
        let w = bac();
        let s = solver(&w);
        let r = 0.8 * LN_2;
        let got = s.k_sp(r).unwrap().value;
        let want = brute(&w, 2000, |d, i| if i >= r { d } else { f64::INFINITY });
        assert!((got - want).abs() < 2e-3, "{got} vs {want}");
        assert!(got <= want + 1e-9);
    }

    #[test]
    fn identities_hold() {
        let w = bac();
        let s = solver(&w);
        let h = s.input_entropy();
        for k in 0..12 {
            let r = h * k as f64 / 11.0;
            let a = s.e_a(r).unwrap().value;
            let b = s.e_sp(h - r).unwrap().value;
            assert!(a == b || (a - b).abs() < 1e-6);
            let rate = 0.6 * k as f64 / 11.0;
            let es = s.e_star(rate, h - rate).unwrap().value;
            let er = s.e_r(rate).unwrap().value;
            assert!((es - er).abs() < 1e-6);
            assert!(er <= s.e_sp(rate).unwrap().value);
            assert!(s.k_r(rate).unwrap().value <= s.k_sp(rate).unwrap().value);
        }
    }

    #[test]
    fn critical_rate_bsc_closed_form() {
        for p in [0.1, 0.2] {
            let s = solver(&Channel::bsc(p).unwrap());
            let delta = p.sqrt() / (p.sqrt() + (1.0 - p).sqrt());
            let want = LN_2 - hb(delta);
            assert!(
                (s.critical_rate() - want).abs() < 1e-4,
                "{} vs {want}",
                s.critical_rate()
            );
        }
    }

    #[test]
    fn critical_rate_noiseless_is_zero() {
        assert_eq!(solver(&Channel::identity(2)).critical_rate(), 0.0);
    }

    #[test]
    fn critical_rate_self_consistent() {
        let s = solver(&bac());
        let rc = s.critical_rate();
        let er = s.e_r(rc).unwrap().value;
        let esp = s.e_sp(rc).unwrap().value;
        assert!((er - esp).abs() < 1e-6);
        let er = s.e_r(rc - 0.05).unwrap().value;
        let esp = s.e_sp(rc - 0.05).unwrap().value;
        assert!(er < esp - 1e-6);
    }

    #[test]
    fn argmin_reproduces_value() {
        let w = bac();
        let s = solver(&w);
        let u = Pmf::uniform(2);
        for rate in [0.05, 0.15, 0.25] {
            let pt = s.e_sp(rate).unwrap();
            let v = pt.argmin_channel.unwrap();
            assert!(crate::mot::mutual_info(&u, &v).unwrap() <= rate + 1e-6);
            assert!((crate::mot::cond_kl(&v, &w, &u).unwrap() - pt.value).abs() < 1e-9);
        }
        let pt = s.k_sp(0.6).unwrap();
        let v = pt.argmin_channel.unwrap();
        assert!(crate::mot::mutual_info(&u, &v).unwrap() >= 0.6 - 1e-6);
    }

    #[test]
    fn outer_max_over_inputs() {
        let w = bac();
        let cands = [Pmf::uniform(2), Pmf::new(vec![0.45, 0.55]).unwrap()];
        let best = e_star_over_inputs(0.1, 0.6, &cands, &w, SolverConfig::default()).unwrap();
        for p in &cands {
            let v = e_star(0.1, 0.6, p, &w, SolverConfig::default()).unwrap().value;
            assert!(best.value >= v);
        }
        let skewed = [Pmf::new(vec![0.99, 0.01]).unwrap()];
        assert!(e_star_over_inputs(0.1, 0.6, &skewed, &w, SolverConfig::default()).is_err());
    }
}
