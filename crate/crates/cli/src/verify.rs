//! Exhaustive and randomized verification suites behind `grandab verify`.

use crate::config::VerifySection;
use grandab_core::mot::{
    all_sequences, empirical_cond_entropy, enumerate_reverse_cond_types, enumerate_types, joint_type, shell_size,
    type_class_members, type_class_size,
};
use grandab_core::ranking::{
    ln_psi_bounds, ln_rank_bounds, ln_rank_lower_bound_finite, psi, rank_g, strict_rank_ghat, ShellProfile,
};
use grandab_core::simulator::{exact_error_probability, trial_rng};
use grandab_core::{Channel, EnsembleSpec, NType, RankScope, Sequence};
use num_bigint::BigUint;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

/// Slack for comparisons in log space.
const LN_SLACK: f64 = 1e-9;
/// Ties in `Ĥ` for the brute-force oracle.
const TIE_TOL: f64 = 1e-9;
/// Agreement required between the exact estimator expectation and the oracle.
const ESTIMATOR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub checked: u64,
    pub violations: u64,
    /// First violation found, if any.
    pub witness: Option<Value>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    fn merge(name: &str, parts: Vec<SuiteResult>) -> Self {
        let mut out = SuiteResult {
            name: name.into(),
            checked: 0,
            violations: 0,
            witness: None,
        };
        for p in parts {
            out.checked += p.checked;
            out.violations += p.violations;
            if out.witness.is_none() {
                out.witness = p.witness;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub suites: Vec<SuiteResult>,
}

struct Tally {
    checked: u64,
    violations: u64,
    witness: Option<Value>,
}

impl Tally {
    fn new() -> Self {
        Self {
            checked: 0,
            violations: 0,
            witness: None,
        }
    }

    fn check(&mut self, ok: bool, witness: impl FnOnce() -> Value) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
            if self.witness.is_none() {
                self.witness = Some(witness());
            }
        }
    }

    fn finish(self, name: &str) -> SuiteResult {
        SuiteResult {
            name: name.into(),
            checked: self.checked,
            violations: self.violations,
            witness: self.witness,
        }
    }
}

fn pair_witness(x: &Sequence, y: &Sequence, comp: &NType, extra: Value) -> Value {
    json!({
        "x": x.symbols(),
        "y": y.symbols(),
        "composition": comp.counts(),
        "joint_type": joint_counts(x, y),
        "detail": extra,
    })
}

/// Every `(composition, x, y)` with binary alphabets at blocklength `n`.
fn binary_instances(n: u32) -> Vec<(NType, Sequence)> {
    let ys = all_sequences(n as usize, 2);
    enumerate_types(n, 2)
        .into_iter()
        .flat_map(|c| ys.iter().map(move |y| (c.clone(), y.clone())))
        .collect()
}

fn psi_check(t: &mut Tally, x: &Sequence, y: &Sequence, comp: &NType, fault: bool) {
    let p = psi(x, y, comp).expect("x belongs to its own type class");
    let (lo, hi) = ln_psi_bounds(x, y).expect("matching lengths");
    // The injected fault drops the polynomial factor from the upper bound.
    let hi = if fault {
        hi - 3.0 * (x.alphabet_size() * y.alphabet_size()) as f64 * ((x.len() + 1) as f64).ln()
    } else {
        hi
    };
    let ok = p.ln_value >= lo - LN_SLACK && p.ln_value <= hi + LN_SLACK;
    t.check(ok, || {
        pair_witness(
            x,
            y,
            comp,
            json!({"ln_psi": p.ln_value, "ln_lower": lo, "ln_upper": hi}),
        )
    });
}

fn rank_check(t: &mut Tally, x: &Sequence, y: &Sequence, comp: &NType, literal: bool) {
    let g = rank_g(x, y, comp).expect("x belongs to its own type class");
    let n = x.len() as u32;
    let (k, l) = (x.alphabet_size(), y.alphabet_size());
    let (lit_lo, hi) = ln_rank_bounds(n, k, l, g.class_entropy);
    let lo = if literal {
        lit_lo
    } else {
        ln_rank_lower_bound_finite(n, k, l, g.class_entropy)
    };
    let ln_g = grandab_core::bignum::ln_biguint(&g.rank);
    let ok = ln_g >= lo - LN_SLACK && ln_g <= hi + LN_SLACK;
    t.check(ok, || {
        pair_witness(
            x,
            y,
            comp,
            json!({"rank": g.rank.to_string(), "ln_rank": ln_g, "ln_lower": lo, "ln_upper": hi}),
        )
    });
}

/// Exhaustive two-sided `Ψ` bounds over binary alphabets, `n ≤ max_n`.
pub fn psi_bounds_exhaustive(max_n: u32, fault: bool) -> SuiteResult {
    exhaustive("psi_bounds", max_n, |t, x, y, c| psi_check(t, x, y, c, fault))
}

/// Exhaustive rank sandwich over binary alphabets, `n ≤ max_n`.
pub fn rank_bounds_exhaustive(max_n: u32, literal: bool) -> SuiteResult {
    let name = if literal { "rank_bounds_literal" } else { "rank_bounds" };
    exhaustive(name, max_n, |t, x, y, c| rank_check(t, x, y, c, literal))
}

fn exhaustive<F>(name: &str, max_n: u32, f: F) -> SuiteResult
where
    F: Fn(&mut Tally, &Sequence, &Sequence, &NType) + Sync,
{
    let parts: Vec<SuiteResult> = (1..=max_n)
        .flat_map(binary_instances)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|(comp, y)| {
            let mut t = Tally::new();
            for x in type_class_members(comp) {
                f(&mut t, &x, y, comp);
            }
            t.finish(name)
        })
        .collect();
    SuiteResult::merge(name, parts)
}

/// Random ternary `(x, y)` pairs with `n ≤ max_n`, checking both sandwiches.
pub fn ternary_spot_check(max_n: u32, samples: u64, seed: u64, fault: bool, literal: bool) -> SuiteResult {
    let parts: Vec<SuiteResult> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let n = rng.random_range(1..=max_n) as usize;
            let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
                Sequence::new((0..n).map(|_| rng.random_range(0..3)).collect(), 3).expect("symbols below 3")
            };
            let x = draw(&mut rng);
            let y = draw(&mut rng);
            let comp = x.composition();
            let mut t = Tally::new();
            psi_check(&mut t, &x, &y, &comp, fault);
            rank_check(&mut t, &x, &y, &comp, literal);
            t.finish("ternary")
        })
        .collect();
    SuiteResult::merge("ternary_spot_check", parts)
}

/// Shell masses partition the type class, and `Ĝ` is a bijection onto
/// `1..=|T|` dominated by `G`.
pub fn partition_identity(max_n: u32) -> SuiteResult {
    let parts: Vec<SuiteResult> = (1..=max_n)
        .flat_map(binary_instances)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|(comp, y)| {
            let mut t = Tally::new();
            let total = type_class_size(comp);
            let shells: BigUint = enumerate_reverse_cond_types(&y.composition(), comp)
                .expect("shared blocklength")
                .iter()
                .map(shell_size)
                .sum();
            t.check(shells == total, || {
                json!({"y": y.symbols(), "composition": comp.counts(), "shell_total": shells.to_string()})
            });
            let profile = ShellProfile::new(&y.composition(), comp, RankScope::Compatible).expect("valid");
            let last = profile.classes().last().map(|c| c.cumulative.clone()).unwrap_or_default();
            t.check(last == total, || {
                json!({"y": y.symbols(), "composition": comp.counts(), "top_rank": last.to_string()})
            });
            let mut seen = Vec::new();
            for x in type_class_members(comp) {
                let ghat = strict_rank_ghat(&x, y, comp).expect("member");
                let g = rank_g(&x, y, comp).expect("member").rank;
                t.check(ghat <= g, || pair_witness(&x, y, comp, json!({"ghat": ghat.to_string()})));
                seen.push(ghat);
            }
            seen.sort();
            let bijective = seen.iter().enumerate().all(|(i, g)| *g == BigUint::from(i + 1));
            t.check(bijective, || {
                json!({"y": y.symbols(), "composition": comp.counts(), "ranks": seen.iter().map(|g| g.to_string()).collect::<Vec<_>>()})
            });
            t.finish("partition")
        })
        .collect();
    SuiteResult::merge("partition_identity", parts)
}

/// Shell-counting `Ψ` against the brute-force fraction of the type class
/// with no larger `Ĥ(·|y)`, compared as exact rationals.
pub fn psi_bruteforce(max_n: u32) -> SuiteResult {
    let parts: Vec<SuiteResult> = (1..=max_n)
        .flat_map(binary_instances)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|(comp, y)| {
            let mut t = Tally::new();
            let members = type_class_members(comp);
            let h: Vec<f64> = members
                .iter()
                .map(|x| empirical_cond_entropy(x, y).expect("same length"))
                .collect();
            let total = BigUint::from(members.len());
            for (i, x) in members.iter().enumerate() {
                let count = BigUint::from(h.iter().filter(|&&v| v <= h[i] + TIE_TOL).count());
                let p = psi(x, y, comp).expect("member");
                let ok = p.numerator == count && p.denominator == total;
                t.check(ok, || {
                    pair_witness(
                        x,
                        y,
                        comp,
                        json!({"psi": format!("{}/{}", p.numerator, p.denominator), "brute": format!("{count}/{total}")}),
                    )
                });
            }
            t.finish("psi_oracle")
        })
        .collect();
    SuiteResult::merge("psi_bruteforce", parts)
}

/// Failure probability of the transmitted codeword averaged over every
/// codebook drawn from the type class and every channel output, with ranks
/// computed by direct comparison of `Ĥ`.
pub fn ensemble_failure_oracle(comp: &NType, codebook: usize, budget: usize, w: &Channel) -> f64 {
    let class = type_class_members(comp);
    let ys = all_sequences(comp.n() as usize, w.outputs());
    let t = class.len();
    let mut total = 0.0;
    for y in &ys {
        let h: Vec<f64> = class
            .iter()
            .map(|x| empirical_cond_entropy(x, y).expect("same length"))
            .collect();
        for (i1, x1) in class.iter().enumerate() {
            let py: f64 = x1
                .symbols()
                .iter()
                .zip(y.symbols())
                .map(|(&a, &b)| w.get(a, b))
                .product();
            if py == 0.0 {
                continue;
            }
            let no_worse = |j: usize| h[j] <= h[i1] + TIE_TOL;
            let rank = (0..t).filter(|&j| no_worse(j)).count();
            let fail = if rank > budget {
                1.0
            } else {
                let others = (t as u64).pow((codebook - 1) as u32);
                let mut bad = 0u64;
                for code in 0..others {
                    let mut c = code;
                    let mut hit = false;
                    for _ in 1..codebook {
                        hit |= no_worse((c % t as u64) as usize);
                        c /= t as u64;
                    }
                    bad += hit as u64;
                }
                bad as f64 / others as f64
            };
            total += py * fail / t as f64;
        }
    }
    total
}

/// The exact-conditional expectation against the all-codebook oracle for
/// binary compositions with `n ≤ max_n`.
pub fn estimator_equivalence(max_n: u32) -> SuiteResult {
    let channels = [
        ("bsc(0.2)", Channel::bsc(0.2).expect("valid")),
        (
            "bac",
            Channel::new(vec![vec![0.8, 0.2], vec![0.1, 0.9]]).expect("valid"),
        ),
    ];
    let mut t = Tally::new();
    for n in 2..=max_n {
        for comp in enumerate_types(n, 2) {
            let size = type_class_members(&comp).len();
            for (name, w) in &channels {
                for codebook in [2usize, 3] {
                    for budget in [1, size.div_ceil(2), size] {
                        let spec = EnsembleSpec::new(comp.clone(), BigUint::from(codebook), BigUint::from(budget))
                            .expect("valid spec");
                        let exact = exact_error_probability(&spec, w).expect("small instance");
                        let oracle = ensemble_failure_oracle(&comp, codebook, budget, w);
                        t.check((exact - oracle).abs() <= ESTIMATOR_TOL, || {
                            json!({"channel": name, "composition": comp.counts(), "M": codebook, "m": budget, "exact": exact, "oracle": oracle})
                        });
                    }
                }
            }
        }
    }
    t.finish("estimator_equivalence")
}

pub fn run(sec: &VerifySection, seed: u64) -> VerifyReport {
    let mut suites = vec![
        psi_bounds_exhaustive(sec.max_n, sec.fault),
        rank_bounds_exhaustive(sec.max_n, sec.literal_rank_lower_bound),
        partition_identity(sec.max_n),
        psi_bruteforce(sec.oracle_max_n),
        estimator_equivalence(sec.estimator_max_n),
    ];
    if sec.ternary_samples > 0 {
        suites.push(ternary_spot_check(
            sec.ternary_max_n,
            sec.ternary_samples,
            seed,
            sec.fault,
            sec.literal_rank_lower_bound,
        ));
    }
    VerifyReport {
        passed: suites.iter().all(SuiteResult::passed),
        suites,
    }
}

/// Joint type of a pair as nested counts, for witnesses.
pub fn joint_counts(x: &Sequence, y: &Sequence) -> Vec<Vec<u32>> {
    joint_type(x, y).expect("same length").to_matrix()
}
