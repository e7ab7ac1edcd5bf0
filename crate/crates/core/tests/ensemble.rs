//! Simulator checks against a first-principles ensemble enumeration and
//! statistical probes of the two estimators.

use grandab_core::mot::{all_sequences, type_class_members, type_class_size};
use grandab_core::simulator::{
    estimate, exact_conditional_samples, exact_error_probability, naive_estimate, sample_variance,
};
use grandab_core::{Channel, EnsembleSpec, NType, Sequence};
use num_bigint::BigUint;

fn ty(c: &[u32]) -> NType {
    NType::new(c.to_vec()).unwrap()
}

fn spec(c: &[u32], m_code: u32, budget: u64) -> EnsembleSpec {
    EnsembleSpec::new(ty(c), BigUint::from(m_code), BigUint::from(budget)).unwrap()
}

/// `Ĥ(x|y)` straight from the pair counts, with no shared code path.
fn cond_entropy(x: &Sequence, y: &Sequence, k: usize, l: usize) -> f64 {
    let n = x.len() as f64;
    let mut joint = vec![0.0; k * l];
    let mut out = vec![0.0; l];
    for (&a, &b) in x.symbols().iter().zip(y.symbols()) {
        joint[a * l + b] += 1.0;
        out[b] += 1.0;
    }
    let mut h = 0.0;
    for a in 0..k {
        for b in 0..l {
            let c = joint[a * l + b];
            if c > 0.0 {
                h -= c / n * (c / out[b]).ln();
            }
        }
    }
    h
}

/// Failure probability averaged over every codebook `(x_1, ..., x_M)` drawn
/// from the type class and every output: the transmitted codeword fails if
/// another codeword is no worse, or if more than `budget` sequences of the
/// class are no worse than it.
fn ensemble_oracle(comp: &NType, m_code: usize, budget: usize, w: &Channel) -> f64 {
    let class = type_class_members(comp);
    let ys = all_sequences(comp.n() as usize, w.outputs());
    let (k, l) = (w.inputs(), w.outputs());
    let t = class.len();
    let mut total = 0.0;
    for y in &ys {
        let h: Vec<f64> = class.iter().map(|x| cond_entropy(x, y, k, l)).collect();
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
            let no_worse = |j: usize| h[j] <= h[i1] + 1e-9;
            let rank = (0..t).filter(|&j| no_worse(j)).count();
            let fail = if rank > budget {
                1.0
            } else {
                // Enumerate the other M-1 codewords as base-|T| digits.
                let others = (t as u64).pow((m_code - 1) as u32);
                let mut bad = 0u64;
                for code in 0..others {
                    let mut c = code;
                    let mut hit = false;
                    for _ in 1..m_code {
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

#[test]
fn exact_expectation_matches_codebook_enumeration() {
    let bsc = Channel::bsc(0.2).unwrap();
    let bac = Channel::new(vec![vec![0.8, 0.2], vec![0.1, 0.9]]).unwrap();
    let id = Channel::identity(2);
    let cases: Vec<(&[u32], u32, u64, &Channel)> = vec![
        (&[2, 2], 2, 6, &bsc),
        (&[2, 2], 3, 2, &bsc),
        (&[3, 1], 3, 1, &bac),
        (&[3, 2], 2, 4, &bac),
        (&[3, 3], 2, 20, &bsc),
        (&[3, 3], 3, 5, &bac),
        (&[4, 2], 2, 3, &bsc),
        (&[2, 2], 2, 6, &id),
    ];
    for (c, m_code, budget, w) in cases {
        let s = spec(c, m_code, budget);
        let got = exact_error_probability(&s, w).unwrap();
        let want = ensemble_oracle(&s.composition, m_code as usize, budget as usize, w);
        assert!(
            (got - want).abs() < 1e-10,
            "{c:?} M={m_code} m={budget}: {got} vs {want}"
        );
    }
}

#[test]
fn noiseless_floor_matches_exhaustive() {
    // Identity channel, composition (3,3), full budget: only tie collisions.
    let s = spec(&[3, 3], 4, 20);
    let got = exact_error_probability(&s, &Channel::identity(2)).unwrap();
    let want = ensemble_oracle(&s.composition, 4, 20, &Channel::identity(2));
    assert!((got - want).abs() < 1e-10);
    let est = estimate(&s, &Channel::identity(2), 20_000, 3).unwrap();
    assert!((est.eps_hat - want).abs() < 1e-12, "every draw has the same Ψ");
}

#[test]
fn estimate_centres_on_exact_value() {
    let w = Channel::bsc(0.15).unwrap();
    let s = spec(&[3, 3], 3, 6);
    let exact = exact_error_probability(&s, &w).unwrap();
    let est = estimate(&s, &w, 40_000, 11).unwrap();
    assert!((est.eps_hat - exact).abs() < 4.0 * est.stderr);
    let tol = 3.0 * (est.stderr + est.p_e1_stderr + est.p_a1_stderr);
    assert!(est.max_lower <= est.eps_hat + tol);
    assert!(est.eps_hat <= est.union_upper + tol);
}

#[test]
fn estimate_is_thread_count_invariant() {
    let w = Channel::bsc(0.2).unwrap();
    let s = spec(&[5, 5], 8, 40);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate(&s, &w, 5_000, 99).unwrap())
    };
    let a = run(1);
    assert_eq!(a, run(3));
    assert_eq!(a, run(8));
}

#[test]
fn larger_budget_never_raises_abandonment() {
    let w = Channel::bsc(0.2).unwrap();
    let mut prev: Option<(f64, f64)> = None;
    for budget in [1u64, 4, 16, 64, 252] {
        let e = estimate(&spec(&[5, 5], 16, budget), &w, 20_000, 5).unwrap();
        if let Some((p, se)) = prev {
            assert!(e.p_a1_hat <= p + 3.0 * (se + e.p_a1_stderr), "budget {budget}");
        }
        prev = Some((e.p_a1_hat, e.p_a1_stderr));
    }
}

#[test]
fn larger_codebook_never_lowers_collisions() {
    let w = Channel::bsc(0.2).unwrap();
    let mut prev: Option<(f64, f64)> = None;
    for m_code in [2u32, 4, 16, 64, 256] {
        let e = estimate(&spec(&[5, 5], m_code, 30), &w, 20_000, 6).unwrap();
        if let Some((p, se)) = prev {
            assert!(e.p_e1_hat + 3.0 * (se + e.p_e1_stderr) >= p, "M = {m_code}");
        }
        prev = Some((e.p_e1_hat, e.p_e1_stderr));
    }
}

#[test]
fn conditional_estimator_has_smaller_variance() {
    let w = Channel::bsc(0.2).unwrap();
    let s = spec(&[4, 4], 8, 32);
    let trials = 20_000;
    let cond = exact_conditional_samples(&s, &w, trials, 21).unwrap();
    let (naive_mean, naive_se) = naive_estimate(&s, &w, trials, 22).unwrap();
    let naive_var = naive_se * naive_se * trials as f64;
    assert!(sample_variance(&cond) < naive_var);
    let exact = exact_error_probability(&s, &w).unwrap();
    assert!((naive_mean - exact).abs() < 4.0 * naive_se);
}

#[test]
fn clamped_budget_never_abandons() {
    let w = Channel::bsc(0.3).unwrap();
    let c = ty(&[3, 3]);
    let full = type_class_size(&c);
    let s = EnsembleSpec::new(c, BigUint::from(4u32), full * 2u32).unwrap();
    assert!(s.clamped);
    let e = estimate(&s, &w, 2_000, 1).unwrap();
    assert_eq!(e.p_a1_hat, 0.0);
    assert_eq!(e.eps_hat, e.p_e1_hat);
}
