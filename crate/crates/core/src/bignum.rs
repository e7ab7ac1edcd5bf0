//! Exact-integer helpers: factorial tables, multinomials, logarithms of big
//! integers and correctly rounded `round(e^x)`.

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, ToPrimitive, Zero};
use std::f64::consts::LN_2;

/// Table of exact factorials `0!, 1!, ..., n!`.
#[derive(Debug, Clone)]
pub struct Factorials {
    table: Vec<BigUint>,
}

impl Factorials {
    pub fn new(n: usize) -> Self {
        let mut table = Vec::with_capacity(n + 1);
        table.push(BigUint::one());
        for k in 1..=n {
            let next = &table[k - 1] * BigUint::from(k);
            table.push(next);
        }
        Self { table }
    }

    pub fn max(&self) -> usize {
        self.table.len() - 1
    }

    pub fn get(&self, k: usize) -> &BigUint {
        &self.table[k]
    }

    /// `(Σ counts)! / Π counts!`.
    pub fn multinomial(&self, counts: &[u32]) -> BigUint {
        let total: usize = counts.iter().map(|&c| c as usize).sum();
        let mut denom = BigUint::one();
        for &c in counts {
            if c > 1 {
                denom *= &self.table[c as usize];
            }
        }
        &self.table[total] / denom
    }
}

/// Table of `ln k!` for `k = 0..=n`.
#[derive(Debug, Clone)]
pub struct LnFactorials {
    table: Vec<f64>,
}

impl LnFactorials {
    pub fn new(n: usize) -> Self {
        let mut table = Vec::with_capacity(n + 1);
        table.push(0.0);
        let mut acc = 0.0f64;
        for k in 1..=n {
            acc += (k as f64).ln();
            table.push(acc);
        }
        Self { table }
    }

    pub fn get(&self, k: usize) -> f64 {
        self.table[k]
    }

    pub fn ln_multinomial(&self, counts: &[u32]) -> f64 {
        let total: usize = counts.iter().map(|&c| c as usize).sum();
        self.table[total] - counts.iter().map(|&c| self.table[c as usize]).sum::<f64>()
    }
}

/// Natural logarithm of a big integer (`-inf` for zero), to double precision.
pub fn ln_biguint(v: &BigUint) -> f64 {
    if v.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = v.bits();
    if bits <= 64 {
        return (v.to_u64().unwrap() as f64).ln();
    }
    let shift = bits - 64;
    let top: u64 = (v >> shift).to_u64().unwrap();
    (top as f64).ln() + shift as f64 * LN_2
}

/// `ln(a / b)` without the cancellation of subtracting two large logarithms.
pub fn ln_ratio(a: &BigUint, b: &BigUint) -> f64 {
    if a.is_zero() {
        return f64::NEG_INFINITY;
    }
    let (ta, sa) = top_bits(a);
    let (tb, sb) = top_bits(b);
    (ta as f64 / tb as f64).ln() + (sa as f64 - sb as f64) * LN_2
}

fn top_bits(v: &BigUint) -> (u64, u64) {
    let bits = v.bits();
    if bits <= 64 {
        (v.to_u64().unwrap(), 0)
    } else {
        let shift = bits - 64;
        ((v >> shift).to_u64().unwrap(), shift)
    }
}

/// Big integer to `f64`, saturating to `+inf` above the float range.
pub fn biguint_to_f64(v: &BigUint) -> f64 {
    v.to_f64().unwrap_or(f64::INFINITY)
}

/// `round(e^x)` with ties rounded up, computed exactly in fixed point.
///
/// `x` is taken as the exact binary value of the float. Results are exact
/// except when `e^x` lies within about `2^-60` of a half-integer.
pub fn exp_round(x: f64) -> BigUint {
    assert!(x.is_finite(), "exp_round needs a finite exponent");
    if x < 0.0 {
        // e^x < 1: round to 1 iff e^x >= 1/2.
        return if x >= -LN_2 { BigUint::one() } else { BigUint::zero() };
    }
    let result_bits = (x / LN_2).ceil() as u64 + 2;
    let prec = result_bits + 96;

    let x_fixed = float_to_fixed(x, prec);
    let ln2 = ln2_fixed(prec);
    let k = (x / LN_2).floor() as u64;
    let f = x_fixed - &ln2 * BigInt::from(k);

    let one = BigInt::one() << prec;
    let mut term = one.clone();
    let mut sum = one;
    let mut i: u64 = 1;
    loop {
        term = (&term * &f) >> prec;
        term /= BigInt::from(i);
        if term.is_zero() {
            break;
        }
        sum += &term;
        i += 1;
    }
    // sum ≈ e^f · 2^prec; result = sum · 2^k / 2^prec, rounded half up.
    let scaled = sum << k;
    let half = BigInt::one() << (prec - 1);
    let rounded: BigInt = (scaled + half) >> prec;
    match rounded.sign() {
        Sign::Minus => BigUint::zero(),
        _ => rounded.magnitude().clone(),
    }
}

fn float_to_fixed(x: f64, prec: u64) -> BigInt {
    let bits = x.to_bits();
    let exponent = ((bits >> 52) & 0x7ff) as i64;
    let mantissa = if exponent == 0 {
        (bits & 0xf_ffff_ffff_ffff) << 1
    } else {
        (bits & 0xf_ffff_ffff_ffff) | 0x10_0000_0000_0000
    };
    let e = exponent - 1075;
    let shift = prec as i64 + e;
    let m = BigInt::from(mantissa);
    if shift >= 0 {
        m << shift as u64
    } else {
        m >> (-shift) as u64
    }
}

/// `ln 2 · 2^prec` via `ln 2 = 2 atanh(1/3)`.
fn ln2_fixed(prec: u64) -> BigInt {
    let guard = 32;
    let p = prec + guard;
    let one = BigInt::one() << p;
    let mut power = &one / BigInt::from(3u32);
    let nine = BigInt::from(9u32);
    let mut sum = BigInt::zero();
    let mut k: u64 = 0;
    while !power.is_zero() {
        sum += &power / BigInt::from(2 * k + 1);
        power /= &nine;
        k += 1;
    }
    (sum << 1u32) >> guard
}
