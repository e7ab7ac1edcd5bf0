//! First- and second-order achievable regions and finite-n rate schedules.

use crate::bignum::{exp_round, ln_biguint};
use crate::channel_info::{blahut_arimoto, dispersion, qfunc, qinv, DispersionResult, CAPACITY_MAX_ITER, CAPACITY_TOL};
use crate::mot::{entropy, mutual_info, type_class_size, Channel, NType, Pmf};
use crate::{Error, Result};
use num_bigint::BigUint;
use num_traits::One;

/// Tolerance for accepting `p` as capacity-achieving.
pub const CAID_TOL: f64 = 1e-6;

/// The rectangle `[0, C] × [H(X|Y), H(P)]` of achievable `(R, r)` pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrderRegion {
    pub r_code_max: f64,
    pub r_abandon_min: f64,
    pub r_abandon_max: f64,
}

impl FirstOrderRegion {
    /// Guessing needs fewer queries than testing every codeword when `C > H(P)/2`.
    pub fn guessing_beats_testing(&self) -> bool {
        self.r_code_max > self.r_abandon_max / 2.0
    }

    pub fn contains(&self, rate: f64, r: f64) -> bool {
        (0.0..=self.r_code_max).contains(&rate) && r >= self.r_abandon_min && r <= self.r_abandon_max
    }
}

/// Second-order region `{(s,t) : min(s,t) ≥ threshold}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderRegion {
    pub threshold: f64,
    pub eps: f64,
    pub dispersion_used: f64,
}

impl SecondOrderRegion {
    pub fn contains(&self, s: f64, t: f64) -> bool {
        s.min(t) >= self.threshold
    }
}

/// Finite-n code parameters for second-order deviations `(s, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSchedule {
    pub n: u32,
    /// `C - s/√n` before quantisation.
    pub code_rate: f64,
    /// `H(X|Y) + t/√n` before quantisation.
    pub abandon_rate: f64,
    /// Codebook size `M`.
    pub codebook_size: BigUint,
    /// Guess budget `m`.
    pub budget: BigUint,
    pub composition: NType,
    /// Set when `m` was clamped to the type-class size (no abandonment).
    pub clamped: bool,
}

impl RateSchedule {
    /// `ln M / n`.
    pub fn realized_code_rate(&self) -> f64 {
        ln_biguint(&self.codebook_size) / self.n as f64
    }

    /// `ln m / n`.
    pub fn realized_abandon_rate(&self) -> f64 {
        ln_biguint(&self.budget) / self.n as f64
    }
}

/// The first-order region for a capacity-achieving `p`.
pub fn first_order_region(p: &Pmf, w: &Channel) -> Result<FirstOrderRegion> {
    let cap = blahut_arimoto(w, CAPACITY_TOL, CAPACITY_MAX_ITER)?;
    let i = mutual_info(p, w)?;
    if (i - cap.capacity).abs() > CAID_TOL {
        return Err(Error::NotCapacityAchieving {
            mutual_info: i,
            capacity: cap.capacity,
        });
    }
    let h = entropy(p);
    Ok(FirstOrderRegion {
        r_code_max: i,
        r_abandon_min: (h - i).max(0.0),
        r_abandon_max: h,
    })
}

/// Second-order region at error level `eps`.
pub fn second_order_region(eps: f64, w: &Channel) -> Result<SecondOrderRegion> {
    let d = dispersion(w, eps)?;
    if d.v_eps <= 0.0 {
        return Err(Error::ZeroDispersion);
    }
    Ok(SecondOrderRegion {
        threshold: d.v_eps.sqrt() * qinv(eps)?,
        eps,
        dispersion_used: d.v_eps,
    })
}

/// Predicted asymptotic error probability `Q(min(s,t)/√V)`.
pub fn predicted_error(s: f64, t: f64, w: &Channel) -> Result<f64> {
    // The eps argument only selects between v_min and v_max, done below.
    predicted_error_with(s, t, &dispersion(w, 0.25)?)
}

/// [`predicted_error`] with a precomputed dispersion.
pub fn predicted_error_with(s: f64, t: f64, d: &DispersionResult) -> Result<f64> {
    let m = s.min(t);
    let v = if m >= 0.0 { d.v_min } else { d.v_max };
    if v <= 0.0 {
        return Err(Error::ZeroDispersion);
    }
    Ok(qfunc(m / v.sqrt()))
}

/// Rates `C - s/√n` and `H(X|Y) + t/√n` quantised to integers `M` and `m`,
/// with the codebook composition the nearest n-type to `p`.
pub fn rate_schedule(n: u32, s: f64, t: f64, p: &Pmf, w: &Channel) -> Result<RateSchedule> {
    let cap = blahut_arimoto(w, CAPACITY_TOL, CAPACITY_MAX_ITER)?.capacity;
    let h_cond = (entropy(p) - mutual_info(p, w)?).max(0.0);
    let sq = (n as f64).sqrt();
    schedule_from_rates(n, cap - s / sq, h_cond + t / sq, p)
}

/// Quantise explicit rates `(R, r)` at blocklength `n`.
pub fn schedule_from_rates(n: u32, code_rate: f64, abandon_rate: f64, p: &Pmf) -> Result<RateSchedule> {
    if n < 2 {
        return Err(Error::InvalidSchedule(format!("blocklength {n} is below 2")));
    }
    if !code_rate.is_finite() || !abandon_rate.is_finite() {
        return Err(Error::InvalidSchedule("rates must be finite".into()));
    }
    let composition = NType::nearest(n, p)?;
    let nf = n as f64;
    let codebook_size = exp_round(nf * code_rate);
    if codebook_size < BigUint::from(2u32) {
        return Err(Error::InvalidSchedule(format!(
            "rate {code_rate} gives fewer than two codewords at n = {n}"
        )));
    }
    let mut budget = exp_round(nf * abandon_rate);
    if budget < BigUint::one() {
        return Err(Error::InvalidSchedule(format!(
            "abandonment rate {abandon_rate} gives an empty guess budget at n = {n}"
        )));
    }
    let class = type_class_size(&composition);
    let clamped = budget > class;
    if clamped {
        budget = class;
    }
    Ok(RateSchedule {
        n,
        code_rate,
        abandon_rate,
        codebook_size,
        budget,
        composition,
        clamped,
    })
}
