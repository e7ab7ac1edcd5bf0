//! The `capacity`, `exponents` and `simulate` subcommands.

use crate::config::{strictly_increasing, RunConfig, Units};
use crate::error::{CliError, CliResult};
use crate::output::{num, Csv};
use grandab_core::asymptotics::{predicted_error_with, rate_schedule, schedule_from_rates};
use grandab_core::channel_info::{blahut_arimoto, dispersion_with_candidates};
use grandab_core::exponents::ExponentSolver;
use grandab_core::mot::{entropy, mutual_info};
use grandab_core::simulator::estimate;
use grandab_core::{Channel, DispersionResult, EnsembleSpec, Pmf, RateSchedule};
use rayon::prelude::*;
use serde::Serialize;

/// Shared header fields for every CSV.
pub struct Meta {
    pub command: &'static str,
    pub config_hash: String,
    pub seed: u64,
    pub units: Units,
}

impl Meta {
    fn lines(&self) -> Vec<(&'static str, String)> {
        vec![
            ("command", self.command.to_string()),
            ("config_sha256", self.config_hash.clone()),
            ("seed", self.seed.to_string()),
            ("units", self.units.name().to_string()),
        ]
    }
}

/// Input distribution: the configured one, else the Blahut–Arimoto CAID.
fn input_or_caid(cfg: &RunConfig, w: &Channel) -> CliResult<Pmf> {
    match cfg.input(w)? {
        Some(p) => Ok(p),
        None => Ok(blahut_arimoto(w, cfg.capacity.tol, cfg.capacity.max_iter)?.caid),
    }
}

fn user_caids(cfg: &RunConfig, w: &Channel) -> CliResult<Vec<Pmf>> {
    cfg.capacity
        .caids
        .iter()
        .map(|c| {
            if c.len() != w.inputs() {
                return Err(CliError::Validation("field `capacity.caids`: wrong length".into()));
            }
            Pmf::new(c.clone()).map_err(|e| CliError::Validation(format!("field `capacity.caids`: {e}")))
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct CapacityReport {
    pub units: &'static str,
    pub capacity: f64,
    pub caid: Vec<f64>,
    pub input_entropy: f64,
    /// `H(X|Y)` at the CAID.
    pub equivocation: f64,
    /// Dispersions in squared units.
    pub dispersion: f64,
    pub dispersion_min: f64,
    pub dispersion_max: f64,
    pub unique_caid: bool,
    pub guessing_beats_testing: bool,
    pub iterations: usize,
    pub residual: f64,
}

pub fn capacity(cfg: &RunConfig, units: Units) -> CliResult<CapacityReport> {
    let w = cfg.channel()?;
    let c = &cfg.capacity;
    if !(c.eps > 0.0 && c.eps < 1.0) {
        return Err(CliError::Validation("field `capacity.eps` must lie in (0,1)".into()));
    }
    let cap = blahut_arimoto(&w, c.tol, c.max_iter)?;
    let d = dispersion_with_candidates(&w, c.eps, &user_caids(cfg, &w)?)?;
    let h = entropy(&cap.caid);
    let k = units.scale();
    Ok(CapacityReport {
        units: units.name(),
        capacity: cap.capacity * k,
        caid: cap.caid.probs().to_vec(),
        input_entropy: h * k,
        equivocation: (h - cap.capacity).max(0.0) * k,
        dispersion: d.v_eps * k * k,
        dispersion_min: d.v_min * k * k,
        dispersion_max: d.v_max * k * k,
        unique_caid: d.unique_caid,
        guessing_beats_testing: cap.capacity > h / 2.0,
        iterations: cap.iterations,
        residual: cap.residual * k,
    })
}

pub const EXPONENT_COLUMNS: [&str; 12] = [
    "R",
    "r",
    "E_r",
    "E_a",
    "E_sp",
    "E_star",
    "K_r",
    "K_sp",
    "K_star",
    "R_cr",
    "solver_gap",
    "flags",
];

pub fn exponents(cfg: &RunConfig, meta: &Meta) -> CliResult<String> {
    let sec = cfg
        .exponents
        .as_ref()
        .ok_or_else(|| CliError::Config("missing field `exponents`".into()))?;
    let w = cfg.channel()?;
    let p = input_or_caid(cfg, &w)?;
    let solver = ExponentSolver::new(&p, &w, sec.solver)?;
    let h = solver.input_entropy();
    strictly_increasing("exponents.rates", &sec.rates)?;
    let rates: Vec<f64> = sec.rates.iter().map(|&v| cfg.to_nats(v)).collect();
    let abandon: Vec<f64> = match &sec.abandon_rates {
        Some(rs) => {
            strictly_increasing("exponents.abandon_rates", rs)?;
            rs.iter().map(|&v| cfg.to_nats(v)).collect()
        }
        None => vec![h],
    };
    let r_max = (w.inputs().min(w.outputs()) as f64).ln();
    let r_cr = solver.critical_rate();
    let grid: Vec<(f64, f64)> = rates
        .iter()
        .flat_map(|&big| abandon.iter().map(move |&small| (big, small)))
        .collect();
    let k = meta.units.scale();
    let rows: Vec<CliResult<Vec<String>>> = grid
        .par_iter()
        .map(|&(big, small)| {
            let mut flags = Vec::new();
            let mut cells = vec![num(big * k), num(small * k)];
            let code_ok = (0.0..=r_max + 1e-12).contains(&big);
            let ab_ok = (-1e-12..=h + 1e-12).contains(&small);
            if !code_ok {
                flags.push("R_infeasible");
            }
            if !ab_ok {
                flags.push("r_infeasible");
            }
            let mut gap = 0.0f64;
            let mut val = |v: grandab_core::Result<grandab_core::ExponentPoint>| -> CliResult<String> {
                let v = v?;
                gap = gap.max(v.solver_gap);
                Ok(num(v.value * k))
            };
            let blank = String::new;
            let (er, esp, kr, ksp) = if code_ok {
                (
                    val(solver.e_r(big))?,
                    val(solver.e_sp(big))?,
                    val(solver.k_r(big))?,
                    val(solver.k_sp(big))?,
                )
            } else {
                (blank(), blank(), blank(), blank())
            };
            let ea = if ab_ok { val(solver.e_a(small))? } else { blank() };
            let (es, ks) = if code_ok && ab_ok {
                (val(solver.e_star(big, small))?, val(solver.k_star(big, small))?)
            } else {
                (blank(), blank())
            };
            cells.extend([
                er,
                ea,
                esp,
                es,
                kr,
                ksp,
                ks,
                num(r_cr * k),
                num(gap * k),
                flags.join(";"),
            ]);
            Ok(cells)
        })
        .collect();
    let mut csv = Csv::new(&meta.lines(), &EXPONENT_COLUMNS);
    for r in rows {
        csv.row(r?);
    }
    Ok(csv.finish())
}

pub const SIMULATE_COLUMNS: [&str; 18] = [
    "n",
    "s",
    "t",
    "R",
    "r",
    "M",
    "m",
    "composition",
    "trials",
    "eps_hat",
    "stderr",
    "p_E1_hat",
    "p_A1_hat",
    "predicted",
    "union_upper",
    "max_lower",
    "flags",
    "seed",
];

/// One requested simulation point, with all rates in nats.
#[derive(Debug, Clone, Copy)]
enum Target {
    Deviation { s: f64, t: f64 },
    Rates { code: f64, abandon: f64 },
}

/// Seed for row `i`: rows are decorrelated but fixed by the base seed.
pub fn row_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add((i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

pub fn simulate(cfg: &RunConfig, meta: &Meta) -> CliResult<String> {
    let sec = cfg
        .simulate
        .as_ref()
        .ok_or_else(|| CliError::Config("missing field `simulate`".into()))?;
    if sec.trials == 0 {
        return Err(CliError::Validation(
            "field `simulate.trials` must be at least 1".into(),
        ));
    }
    if sec.n.is_empty() || (sec.points.is_empty() && sec.rates.is_empty()) {
        return Err(CliError::Validation(
            "field `simulate` needs `n` and at least one of `points` or `rates`".into(),
        ));
    }
    if !(sec.eps > 0.0 && sec.eps < 1.0) {
        return Err(CliError::Validation("field `simulate.eps` must lie in (0,1)".into()));
    }
    let w = cfg.channel()?;
    let p = input_or_caid(cfg, &w)?;
    let cap = blahut_arimoto(&w, cfg.capacity.tol, cfg.capacity.max_iter)?.capacity;
    let h_cond = (entropy(&p) - mutual_info(&p, &w)?).max(0.0);
    let disp = dispersion_with_candidates(&w, sec.eps, &user_caids(cfg, &w)?)?;
    let targets: Vec<Target> = sec
        .points
        .iter()
        .map(|pt| Target::Deviation {
            s: cfg.to_nats(pt.s),
            t: cfg.to_nats(pt.t),
        })
        .chain(sec.rates.iter().map(|r| Target::Rates {
            code: cfg.to_nats(r.code),
            abandon: cfg.to_nats(r.abandon),
        }))
        .collect();
    let k = meta.units.scale();
    let mut csv = Csv::new(&meta.lines(), &SIMULATE_COLUMNS);
    let mut row_index = 0usize;
    for &n in &sec.n {
        let sq = (n as f64).sqrt();
        for target in &targets {
            let (s, t, code, abandon, schedule) = match *target {
                Target::Deviation { s, t } => (s, t, cap - s / sq, h_cond + t / sq, rate_schedule(n, s, t, &p, &w)),
                Target::Rates { code, abandon } => (
                    (cap - code) * sq,
                    (abandon - h_cond) * sq,
                    code,
                    abandon,
                    schedule_from_rates(n, code, abandon, &p),
                ),
            };
            let seed = row_seed(meta.seed, row_index);
            row_index += 1;
            let predicted = predicted(s, t, &disp);
            let head = vec![n.to_string(), num(s * k), num(t * k), num(code * k), num(abandon * k)];
            csv.row(simulate_row(head, schedule, &w, sec.trials, seed, predicted)?);
        }
    }
    Ok(csv.finish())
}

fn predicted(s: f64, t: f64, d: &DispersionResult) -> String {
    match predicted_error_with(s, t, d) {
        Ok(v) => num(v),
        Err(_) => String::new(),
    }
}

fn simulate_row(
    mut cells: Vec<String>,
    schedule: grandab_core::Result<RateSchedule>,
    w: &Channel,
    trials: u64,
    seed: u64,
    predicted: String,
) -> CliResult<Vec<String>> {
    let sched = match schedule {
        Ok(s) => s,
        Err(grandab_core::Error::InvalidSchedule(_)) => {
            cells.extend(std::iter::repeat_n(String::new(), 8));
            cells.extend([
                predicted,
                String::new(),
                String::new(),
                "invalid_schedule".into(),
                seed.to_string(),
            ]);
            return Ok(cells);
        }
        Err(e) => return Err(e.into()),
    };
    let spec = EnsembleSpec::from_schedule(&sched)?;
    let est = estimate(&spec, w, trials, seed)?;
    let comp = spec
        .composition
        .counts()
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(":");
    cells.extend([
        spec.codebook_size.to_string(),
        spec.budget.to_string(),
        comp,
        trials.to_string(),
        num(est.eps_hat),
        num(est.stderr),
        num(est.p_e1_hat),
        num(est.p_a1_hat),
        predicted,
        num(est.union_upper),
        num(est.max_lower),
        if spec.clamped { "clamped".into() } else { String::new() },
        seed.to_string(),
    ]);
    Ok(cells)
}
