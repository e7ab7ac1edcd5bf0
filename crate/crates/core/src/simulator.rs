//! Monte Carlo estimation of the ensemble error probability of guessing-based
//! decoding with abandonment.
//!
//! The default estimator draws the transmitted codeword and the channel
//! output, then integrates out the `M - 1` competing codewords exactly through
//! `Ψ`. A full-codebook simulation is kept as a test oracle.

use crate::bignum::{biguint_to_f64, ln_biguint, Factorials};
use crate::mot::{type_class_size, Channel, NType, Sequence};
use crate::ranking::{RankScope, ShellProfile};
use crate::{Error, Result};
use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::HashMap;
use std::sync::{Arc, RwLock};

/// Guard for full-codebook simulation.
pub const NAIVE_MAX_CODEBOOK: u64 = 1 << 16;
pub const NAIVE_MAX_CLASS: u64 = 1 << 24;

/// A constant-composition random code with a guess budget.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub n: u32,
    pub composition: NType,
    /// Codebook size `M`.
    pub codebook_size: BigUint,
    /// Guess budget `m`, at most the type-class size.
    pub budget: BigUint,
    /// Set when the requested budget exceeded the class size.
    pub clamped: bool,
}

impl EnsembleSpec {
    pub fn new(composition: NType, codebook_size: BigUint, budget: BigUint) -> Result<Self> {
        if codebook_size < BigUint::from(2u32) {
            return Err(Error::OutOfRange("codebook size must be at least 2".into()));
        }
        if budget.is_zero() {
            return Err(Error::OutOfRange("guess budget must be at least 1".into()));
        }
        let class = type_class_size(&composition);
        let clamped = budget > class;
        Ok(Self {
            n: composition.n(),
            composition,
            codebook_size,
            budget: if clamped { class } else { budget },
            clamped,
        })
    }

    pub fn from_schedule(s: &crate::asymptotics::RateSchedule) -> Result<Self> {
        let mut spec = Self::new(s.composition.clone(), s.codebook_size.clone(), s.budget.clone())?;
        spec.clamped |= s.clamped;
        Ok(spec)
    }

    /// `ln M / n`.
    pub fn code_rate(&self) -> f64 {
        ln_biguint(&self.codebook_size) / self.n as f64
    }

    /// `ln m / n`.
    pub fn abandon_rate(&self) -> f64 {
        ln_biguint(&self.budget) / self.n as f64
    }
}

/// Monte Carlo estimate of the ensemble error probability.
#[derive(Debug, Clone, PartialEq)]
pub struct MCEstimate {
    pub eps_hat: f64,
    pub stderr: f64,
    pub trials: u64,
    /// Collision probability estimate, ignoring the budget.
    pub p_e1_hat: f64,
    pub p_e1_stderr: f64,
    /// Abandonment probability estimate.
    pub p_a1_hat: f64,
    pub p_a1_stderr: f64,
    pub union_upper: f64,
    pub max_lower: f64,
    pub seed: u64,
}

/// Outcome of one full-codebook decoding run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Correct,
    Error,
    Abandon,
}

/// Uniform draw from the type class of `t` (a shuffle of its multiset).
pub fn sample_type_sequence<R: Rng + ?Sized>(rng: &mut R, t: &NType) -> Sequence {
    let mut s: Vec<usize> = t
        .counts()
        .iter()
        .enumerate()
        .flat_map(|(a, &c)| std::iter::repeat_n(a, c as usize))
        .collect();
    s.shuffle(rng);
    Sequence::from_raw(s, t.alphabet_size())
}

/// Cumulative rows of a channel for inverse-CDF sampling.
#[derive(Debug, Clone)]
struct Sampler {
    cdf: Vec<Vec<f64>>,
    outputs: usize,
}

impl Sampler {
    fn new(w: &Channel) -> Self {
        let cdf = w
            .rows()
            .iter()
            .map(|r| {
                let mut acc = 0.0;
                r.probs()
                    .iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect()
            })
            .collect();
        Self {
            cdf,
            outputs: w.outputs(),
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, a: usize) -> usize {
        let u: f64 = rng.random();
        let row = &self.cdf[a];
        // Skip zero-probability symbols so they can never be emitted.
        let mut last = 0;
        for (b, &c) in row.iter().enumerate() {
            if b == 0 || c > row[b - 1] {
                last = b;
                if u < c {
                    return b;
                }
            }
        }
        last
    }

    fn transmit<R: Rng + ?Sized>(&self, rng: &mut R, x: &Sequence) -> Sequence {
        let y = x.symbols().iter().map(|&a| self.draw(rng, a)).collect();
        Sequence::from_raw(y, self.outputs)
    }
}

/// Passes `x` through the memoryless channel `w`.
pub fn channel_transition<R: Rng + ?Sized>(rng: &mut R, w: &Channel, x: &Sequence) -> Result<Sequence> {
    if x.alphabet_size() > w.inputs() {
        return Err(Error::DimensionMismatch {
            what: "sequence alphabet vs channel inputs",
            left: x.alphabet_size(),
            right: w.inputs(),
        });
    }
    Ok(Sampler::new(w).transmit(rng, x))
}

/// Per-estimate state shared by all trials: the channel sampler, factorials and
/// a cache of shell profiles keyed by output type.
struct Context {
    spec: EnsembleSpec,
    sampler: Sampler,
    factorials: Factorials,
    profiles: RwLock<HashMap<Vec<u32>, Arc<ShellProfile>>>,
    /// `M - 1` as a float.
    competitors: f64,
    inputs: usize,
    outputs: usize,
}

/// What one exact-conditional trial contributes.
#[derive(Debug, Clone, Copy)]
struct TrialValue {
    phi: f64,
    collision: f64,
    abandon: f64,
}

impl Context {
    fn new(spec: &EnsembleSpec, w: &Channel) -> Result<Self> {
        if spec.composition.alphabet_size() != w.inputs() {
            return Err(Error::DimensionMismatch {
                what: "composition alphabet vs channel inputs",
                left: spec.composition.alphabet_size(),
                right: w.inputs(),
            });
        }
        Ok(Self {
            spec: spec.clone(),
            sampler: Sampler::new(w),
            factorials: Factorials::new(spec.n as usize),
            profiles: RwLock::new(HashMap::new()),
            competitors: biguint_to_f64(&(&spec.codebook_size - 1u32)),
            inputs: w.inputs(),
            outputs: w.outputs(),
        })
    }

    fn profile(&self, y: &Sequence) -> Arc<ShellProfile> {
        let y_type = y.composition();
        if let Some(p) = self.profiles.read().unwrap().get(y_type.counts()) {
            return p.clone();
        }
        let built = Arc::new(
            ShellProfile::with_factorials(&y_type, &self.spec.composition, RankScope::Compatible, &self.factorials)
                .expect("output and composition share the blocklength"),
        );
        self.profiles
            .write()
            .unwrap()
            .entry(y_type.counts().to_vec())
            .or_insert(built)
            .clone()
    }

    fn class_of(&self, profile: &ShellProfile, x: &Sequence, y: &Sequence) -> usize {
        let mut counts = vec![0u32; self.inputs * self.outputs];
        for (&a, &b) in x.symbols().iter().zip(y.symbols()) {
            counts[a * self.outputs + b] += 1;
        }
        profile.class_of_flat(&counts).expect("x has the codebook composition")
    }

    /// `φ` for a given pair, split into the collision and abandonment parts.
    fn evaluate(&self, x: &Sequence, y: &Sequence) -> TrialValue {
        let profile = self.profile(y);
        let c = self.class_of(&profile, x, y);
        let abandon = profile.classes()[c].cumulative > self.spec.budget;
        let (_, ln_miss) = profile.psi_of_class(c);
        // 1 - (1-Ψ)^{M-1}, evaluated as -expm1((M-1) ln(1-Ψ)).
        let collision = if ln_miss == f64::NEG_INFINITY {
            1.0
        } else {
            -(self.competitors * ln_miss).exp_m1()
        };
        TrialValue {
            phi: if abandon { 1.0 } else { collision },
            collision,
            abandon: if abandon { 1.0 } else { 0.0 },
        }
    }

    fn trial(&self, seed: u64, index: u64) -> TrialValue {
        let mut rng = trial_rng(seed, index);
        let x = sample_type_sequence(&mut rng, &self.spec.composition);
        let y = self.sampler.transmit(&mut rng, &x);
        self.evaluate(&x, &y)
    }
}

/// Generator for trial `index` under `seed`: one ChaCha8 stream per trial, so
/// results do not depend on how trials are spread over threads.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One exact-conditional draw: 1 on abandonment, else `1 - (1-Ψ)^{M-1}`.
pub fn trial_exact_conditional<R: Rng + ?Sized>(rng: &mut R, spec: &EnsembleSpec, w: &Channel) -> Result<f64> {
    let ctx = Context::new(spec, w)?;
    let x = sample_type_sequence(rng, &spec.composition);
    let y = ctx.sampler.transmit(rng, &x);
    Ok(ctx.evaluate(&x, &y).phi)
}

/// One full-codebook decoding run with codeword 1 transmitted. Duplicate
/// codewords count as distinct competitors.
pub fn naive_trial<R: Rng + ?Sized>(rng: &mut R, spec: &EnsembleSpec, w: &Channel) -> Result<Outcome> {
    let ctx = Context::new(spec, w)?;
    naive_with(&ctx, rng)
}

fn naive_guard(spec: &EnsembleSpec) -> Result<u64> {
    let m = spec
        .codebook_size
        .to_u64()
        .filter(|&m| m <= NAIVE_MAX_CODEBOOK)
        .ok_or_else(|| Error::TooLarge(format!("codebook size {} exceeds 2^16", spec.codebook_size)))?;
    if type_class_size(&spec.composition) > BigUint::from(NAIVE_MAX_CLASS) {
        return Err(Error::TooLarge("type class exceeds 2^24 sequences".into()));
    }
    Ok(m)
}

fn naive_with<R: Rng + ?Sized>(ctx: &Context, rng: &mut R) -> Result<Outcome> {
    let m = naive_guard(&ctx.spec)?;
    let x1 = sample_type_sequence(rng, &ctx.spec.composition);
    let y = ctx.sampler.transmit(rng, &x1);
    let profile = ctx.profile(&y);
    let own = ctx.class_of(&profile, &x1, &y);
    // Lowest class index reached by any other codeword.
    let mut best_other = usize::MAX;
    for _ in 1..m {
        let x = sample_type_sequence(rng, &ctx.spec.composition);
        best_other = best_other.min(ctx.class_of(&profile, &x, &y));
    }
    let first = own.min(best_other);
    let classes = profile.classes();
    Ok(if best_other > own && classes[own].cumulative <= ctx.spec.budget {
        Outcome::Correct
    } else if classes[first].cumulative > ctx.spec.budget {
        Outcome::Abandon
    } else {
        Outcome::Error
    })
}

/// Full-codebook estimate of the failure probability (error or abandon),
/// returned with its standard error. Test oracle only.
pub fn naive_estimate(spec: &EnsembleSpec, w: &Channel, trials: u64, seed: u64) -> Result<(f64, f64)> {
    let ctx = Context::new(spec, w)?;
    naive_guard(spec)?;
    let hits: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            match naive_with(&ctx, &mut rng).expect("guard checked") {
                Outcome::Correct => 0.0,
                _ => 1.0,
            }
        })
        .collect();
    let (mean, se) = mean_and_stderr(&hits);
    Ok((mean, se))
}

/// Exact-conditional estimate of the ensemble error probability.
pub fn estimate(spec: &EnsembleSpec, w: &Channel, trials: u64, seed: u64) -> Result<MCEstimate> {
    if trials == 0 {
        return Err(Error::OutOfRange("at least one trial is required".into()));
    }
    let ctx = Context::new(spec, w)?;
    let values: Vec<TrialValue> = (0..trials).into_par_iter().map(|i| ctx.trial(seed, i)).collect();
    let phi: Vec<f64> = values.iter().map(|v| v.phi).collect();
    let col: Vec<f64> = values.iter().map(|v| v.collision).collect();
    let ab: Vec<f64> = values.iter().map(|v| v.abandon).collect();
    let (eps_hat, stderr) = mean_and_stderr(&phi);
    let (p_e1_hat, p_e1_stderr) = mean_and_stderr(&col);
    let (p_a1_hat, p_a1_stderr) = mean_and_stderr(&ab);
    Ok(MCEstimate {
        eps_hat,
        stderr,
        trials,
        p_e1_hat,
        p_e1_stderr,
        p_a1_hat,
        p_a1_stderr,
        union_upper: (p_e1_hat + p_a1_hat).min(1.0),
        max_lower: p_e1_hat.max(p_a1_hat),
        seed,
    })
}

/// Per-trial samples of the exact-conditional estimator, in trial order.
pub fn exact_conditional_samples(spec: &EnsembleSpec, w: &Channel, trials: u64, seed: u64) -> Result<Vec<f64>> {
    let ctx = Context::new(spec, w)?;
    Ok((0..trials).into_par_iter().map(|i| ctx.trial(seed, i).phi).collect())
}

/// Exact `E[φ(X,Y)]` by summing over every codeword and output sequence.
/// Exponential in `n`.
pub fn exact_error_probability(spec: &EnsembleSpec, w: &Channel) -> Result<f64> {
    let class = type_class_size(&spec.composition);
    if class > BigUint::from(1u32 << 16) || (w.outputs() as f64).powi(spec.n as i32) > 1e7 {
        return Err(Error::TooLarge(
            "exhaustive expectation needs a small blocklength".into(),
        ));
    }
    let ctx = Context::new(spec, w)?;
    let xs = crate::mot::type_class_members(&spec.composition);
    let ys = crate::mot::all_sequences(spec.n as usize, w.outputs());
    let weight = 1.0 / xs.len() as f64;
    let mut acc = Neumaier::default();
    for x in &xs {
        for y in &ys {
            let mut pr = 1.0;
            for (&a, &b) in x.symbols().iter().zip(y.symbols()) {
                pr *= w.get(a, b);
            }
            if pr > 0.0 {
                acc.add(weight * pr * ctx.evaluate(x, y).phi);
            }
        }
    }
    Ok(acc.sum())
}

/// Compensated (Neumaier) summation.
#[derive(Debug, Default, Clone, Copy)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn sum(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sample mean and its standard error, summed in a fixed order.
fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mut s = Neumaier::default();
    for &x in xs {
        s.add(x);
    }
    let mean = s.sum() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let mut ss = Neumaier::default();
    for &x in xs {
        ss.add((x - mean) * (x - mean));
    }
    let var = ss.sum() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Sample variance, for comparing estimators.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let (_, se) = mean_and_stderr(xs);
    se * se * xs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mot::Pmf;
    use num_traits::One;

    fn ty(c: &[u32]) -> NType {
        NType::new(c.to_vec()).unwrap()
    }

    fn spec(comp: &[u32], m_code: u32, budget: u32) -> EnsembleSpec {
        EnsembleSpec::new(ty(comp), BigUint::from(m_code), BigUint::from(budget)).unwrap()
    }

    #[test]
    fn singleton_class_sample() {
        let mut rng = trial_rng(1, 0);
        for _ in 0..10 {
            assert_eq!(sample_type_sequence(&mut rng, &ty(&[5, 0])).symbols(), &[0; 5]);
        }
    }

    #[test]
    fn type_sampling_is_uniform() {
        let mut rng = trial_rng(7, 0);
        let draws = 100_000;
        let ones = (0..draws)
            .filter(|_| sample_type_sequence(&mut rng, &ty(&[1, 1])).symbols()[0] == 0)
            .count() as f64;
        let sigma = (draws as f64 * 0.25).sqrt();
        assert!((ones - draws as f64 / 2.0).abs() < 3.0 * sigma);
        // Chi-square over the 6 members of the (2,2) class, 5 dof, 99.9% point 20.5.
        let mut counts = HashMap::new();
        for _ in 0..60_000 {
            *counts
                .entry(sample_type_sequence(&mut rng, &ty(&[2, 2])))
                .or_insert(0.0) += 1.0;
        }
        assert_eq!(counts.len(), 6);
        let chi: f64 = counts.values().map(|c| (c - 10_000.0f64).powi(2) / 10_000.0).sum();
        assert!(chi < 20.5, "chi-square {chi}");
        let t = ty(&[3, 4, 2]);
        for _ in 0..50 {
            assert_eq!(sample_type_sequence(&mut rng, &t).composition(), t);
        }
    }

    #[test]
    fn transition_examples() {
        let mut rng = trial_rng(3, 0);
        let x = sample_type_sequence(&mut rng, &ty(&[30, 30]));
        assert_eq!(channel_transition(&mut rng, &Channel::identity(2), &x).unwrap(), x);
        assert_eq!(
            channel_transition(&mut rng, &Channel::bsc(0.0).unwrap(), &x).unwrap(),
            x
        );
        let n = 100_000;
        let x = Sequence::new(vec![0; n], 2).unwrap();
        let y = channel_transition(&mut rng, &Channel::bsc(0.2).unwrap(), &x).unwrap();
        let flips = y.symbols().iter().filter(|&&b| b == 1).count() as f64;
        let sigma = (n as f64 * 0.2 * 0.8).sqrt();
        assert!((flips - 0.2 * n as f64).abs() < 3.0 * sigma);
    }

    #[test]
    fn exact_conditional_examples() {
        // Maximal-entropy x (Ψ = 1): certain collision.
        let s = spec(&[1, 1], 2, 2);
        let mut rng = trial_rng(5, 0);
        let w = Channel::bsc(0.5).unwrap();
        // Identity channel, n = 2: y = x, and both members of the class have
        // zero conditional entropy given y, so Ψ = 1 and φ = 1.
        let id = Channel::identity(2);
        for _ in 0..10 {
            assert_eq!(trial_exact_conditional(&mut rng, &s, &id).unwrap(), 1.0);
        }
        // Constant output: every member is in the single class, Ψ = 1.
        let c = Channel::new(vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(trial_exact_conditional(&mut rng, &s, &c).unwrap(), 1.0);
        // Budget 1 with x outside the lowest class forces abandonment.
        let s1 = spec(&[2, 2], 2, 1);
        let x = Sequence::new(vec![0, 1, 0, 1], 2).unwrap();
        let y = Sequence::new(vec![0, 0, 1, 1], 2).unwrap();
        let ctx = Context::new(&s1, &w).unwrap();
        assert_eq!(ctx.evaluate(&x, &y).phi, 1.0);
    }

    #[test]
    fn exhaustive_noiseless_floor() {
        // Full budget, identity channel: errors only through ties with x itself.
        let s = spec(&[2, 2], 3, 6);
        let got = exact_error_probability(&s, &Channel::identity(2)).unwrap();
        // x and its complement tie at zero entropy: Ψ = 2/6, so 1 - (2/3)^2.
        assert!((got - (1.0 - (2.0f64 / 3.0).powi(2))).abs() < 1e-14);
        let est = estimate(&s, &Channel::identity(2), 2000, 9).unwrap();
        assert!((est.eps_hat - got).abs() < 1e-12);
    }

    #[test]
    fn naive_examples() {
        let w = Channel::bsc(0.2).unwrap();
        // A singleton class forces a duplicate codeword: always an error.
        let s = spec(&[4, 0], 2, 1);
        let mut rng = trial_rng(11, 0);
        assert_eq!(naive_trial(&mut rng, &s, &w).unwrap(), Outcome::Error);
        let full = spec(&[3, 3], 4, 20);
        for i in 0..200 {
            let mut rng = trial_rng(12, i);
            assert_ne!(naive_trial(&mut rng, &full, &w).unwrap(), Outcome::Abandon);
        }
        let big = EnsembleSpec::new(ty(&[10, 10]), BigUint::from(1u32 << 20), BigUint::one()).unwrap();
        assert!(matches!(naive_trial(&mut rng, &big, &w), Err(Error::TooLarge(_))));
    }

    #[test]
    fn estimate_is_deterministic_and_sandwiched() {
        let s = spec(&[6, 6], 16, 40);
        let w = Channel::bsc(0.15).unwrap();
        let a = estimate(&s, &w, 5000, 42).unwrap();
        let b = estimate(&s, &w, 5000, 42).unwrap();
        assert_eq!(a, b);
        let c = estimate(&s, &w, 5000, 43).unwrap();
        assert_ne!(a.eps_hat, c.eps_hat);
        let tol = 3.0 * (a.stderr + a.p_e1_stderr + a.p_a1_stderr);
        assert!(a.max_lower <= a.eps_hat + tol);
        assert!(a.eps_hat <= a.union_upper + tol);
        assert!(estimate(&s, &w, 0, 1).is_err());
    }

    #[test]
    fn thread_count_does_not_matter() {
        let s = spec(&[8, 8], 64, 300);
        let w = Channel::bsc(0.1).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| estimate(&s, &w, 3000, 5).unwrap());
        let b = four.install(|| estimate(&s, &w, 3000, 5).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn spec_clamps_budget() {
        let s = EnsembleSpec::new(ty(&[2, 2]), BigUint::from(4u32), BigUint::from(100u32)).unwrap();
        assert!(s.clamped);
        assert_eq!(s.budget, BigUint::from(6u32));
        assert!(EnsembleSpec::new(ty(&[2, 2]), BigUint::one(), BigUint::one()).is_err());
        let _ = Pmf::uniform(2);
    }
}
