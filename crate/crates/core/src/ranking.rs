//! Rank functions over conditional type classes and the competitor
//! probability `Ψ`.
//!
//! Classes of equal empirical conditional entropy are detected exactly: for
//! joint types sharing the output marginal, `H(V_{X|Y}|P̂_y)` is ordered
//! opposite to the integer `Π N_ab^{N_ab}`, which is compared as a big integer.

use crate::bignum::{ln_ratio, Factorials};
use crate::mot::{
    enumerate_joint_types_with_output, enumerate_reverse_cond_types, joint_type, shell_size_with, JointType, NType,
    Sequence,
};
use crate::{Error, Result};
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::HashMap;

/// Which shells enter the cumulative rank sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum RankScope {
    /// Only shells meeting the codebook's type class (the decoder's view).
    #[default]
    Compatible,
    /// Every shell of `y`, whatever its input marginal.
    Unrestricted,
}

/// Value of the rank function `G(x|y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankResult {
    pub rank: BigUint,
    /// `Ĥ(x|y)` in nats.
    pub class_entropy: f64,
    /// `|T_{x_comp}|`.
    pub type_class_size: BigUint,
}

impl RankResult {
    /// Whether a guess budget of `m` is exhausted before reaching `x`'s class.
    pub fn abandoned(&self, m: &BigUint) -> bool {
        &self.rank > m
    }
}

/// Exact `Ψ(x,y)` with its floating rendering and the two-sided bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiValue {
    /// Cumulative count of competitors ranked no higher than `x`.
    pub numerator: BigUint,
    /// `|T_{x_comp}|`.
    pub denominator: BigUint,
    pub value: f64,
    pub ln_value: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
}

impl PsiValue {
    /// The value as a reduced rational.
    pub fn ratio(&self) -> BigRational {
        BigRational::new(self.numerator.clone().into(), self.denominator.clone().into())
    }

    /// Sandwich check in log space, so deep tails do not underflow.
    pub fn within_bounds(&self) -> bool {
        let slack = 1e-9;
        self.ln_value >= self.lower_bound.ln() - slack && self.ln_value <= self.upper_bound.ln() + slack
    }
}

/// One equal-entropy class of shells for a fixed output type.
#[derive(Debug, Clone)]
pub struct ShellClass {
    key: BigUint,
    pub entropy: f64,
    /// Number of sequences in the class.
    pub mass: BigUint,
    /// Sequences in this class or any lower-entropy class.
    pub cumulative: BigUint,
    members: Vec<usize>,
}

/// Precomputed ranking data for one output type and one codebook composition:
/// the shells sorted by conditional entropy and grouped into tie classes.
#[derive(Debug, Clone)]
pub struct ShellProfile {
    n: u32,
    scope: RankScope,
    tables: Vec<JointType>,
    classes: Vec<ShellClass>,
    index: HashMap<Vec<u32>, usize>,
    type_class_size: BigUint,
    /// Per class: `Ψ` (compatible shells only) and `ln(1-Ψ)`.
    psi: Vec<(f64, f64)>,
}

impl ShellProfile {
    pub fn new(y_type: &NType, x_comp: &NType, scope: RankScope) -> Result<Self> {
        let f = Factorials::new(x_comp.n() as usize);
        Self::with_factorials(y_type, x_comp, scope, &f)
    }

    pub fn with_factorials(y_type: &NType, x_comp: &NType, scope: RankScope, f: &Factorials) -> Result<Self> {
        let compatible = enumerate_reverse_cond_types(y_type, x_comp)?;
        let tables = match scope {
            RankScope::Compatible => compatible,
            RankScope::Unrestricted => enumerate_joint_types_with_output(y_type, x_comp.alphabet_size()),
        };
        let type_class_size = f.multinomial(x_comp.counts());

        let keyed: Vec<(BigUint, BigUint, bool)> = tables
            .iter()
            .map(|j| {
                let compat = j.input_type().counts() == x_comp.counts();
                (entropy_key(j), shell_size_with(j, f), compat)
            })
            .collect();
        let mut order: Vec<usize> = (0..tables.len()).collect();
        // Larger key means smaller entropy.
        order.sort_by(|&a, &b| keyed[b].0.cmp(&keyed[a].0));

        let mut classes: Vec<ShellClass> = Vec::new();
        let mut compat_mass: Vec<BigUint> = Vec::new();
        for &t in &order {
            let (key, size, compat) = &keyed[t];
            let same = classes.last().is_some_and(|c| &c.key == key);
            if !same {
                classes.push(ShellClass {
                    key: key.clone(),
                    entropy: tables[t].input_given_output_entropy(),
                    mass: BigUint::zero(),
                    cumulative: BigUint::zero(),
                    members: Vec::new(),
                });
                compat_mass.push(BigUint::zero());
            }
            let c = classes.last_mut().unwrap();
            c.mass += size;
            c.members.push(t);
            if *compat {
                *compat_mass.last_mut().unwrap() += size;
            }
        }
        let mut acc = BigUint::zero();
        let mut compat_acc = BigUint::zero();
        let mut psi = Vec::with_capacity(classes.len());
        for (c, cm) in classes.iter_mut().zip(&compat_mass) {
            acc += &c.mass;
            c.cumulative = acc.clone();
            compat_acc += cm;
            psi.push(psi_parts(&compat_acc, &type_class_size));
        }
        let mut index = HashMap::with_capacity(tables.len());
        for (ci, c) in classes.iter().enumerate() {
            for &t in &c.members {
                index.insert(tables[t].flat().to_vec(), ci);
            }
        }
        Ok(Self {
            n: x_comp.n(),
            scope,
            tables,
            classes,
            index,
            type_class_size,
            psi,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn scope(&self) -> RankScope {
        self.scope
    }

    pub fn classes(&self) -> &[ShellClass] {
        &self.classes
    }

    pub fn type_class_size(&self) -> &BigUint {
        &self.type_class_size
    }

    /// Class index of a joint type, or `None` if the table is not in scope.
    pub fn class_of(&self, j: &JointType) -> Option<usize> {
        self.index.get(j.flat()).copied()
    }

    pub(crate) fn class_of_flat(&self, counts: &[u32]) -> Option<usize> {
        self.index.get(counts).copied()
    }

    /// `(Ψ, ln(1-Ψ))` for a sequence in class `c`, from exact counts.
    pub fn psi_of_class(&self, c: usize) -> (f64, f64) {
        self.psi[c]
    }

    pub fn class_members(&self, c: usize) -> impl Iterator<Item = &JointType> {
        self.classes[c].members.iter().map(move |&t| &self.tables[t])
    }
}

fn psi_parts(g: &BigUint, total: &BigUint) -> (f64, f64) {
    let ln_psi = ln_ratio(g, total);
    let psi = ln_psi.exp();
    let ln_comp = if psi < 0.5 {
        (-psi).ln_1p()
    } else {
        ln_ratio(&(total - g), total)
    };
    (psi, ln_comp)
}

/// `Π N_ab^{N_ab}`; among tables with a common output marginal, a larger key
/// means strictly smaller conditional entropy and equal keys mean a tie.
pub fn entropy_key(j: &JointType) -> BigUint {
    let mut acc = BigUint::one();
    for &c in j.flat() {
        if c > 1 {
            acc *= BigUint::from(c).pow(c);
        }
    }
    acc
}

fn check_pair(x: &Sequence, y: &Sequence, x_comp: &NType) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x_comp.alphabet_size() != x.alphabet_size() || x.composition() != *x_comp {
        return Err(Error::CompositionMismatch);
    }
    Ok(())
}

struct Located {
    profile: ShellProfile,
    class: usize,
    joint: JointType,
}

fn locate(x: &Sequence, y: &Sequence, x_comp: &NType, scope: RankScope) -> Result<Located> {
    check_pair(x, y, x_comp)?;
    let profile = ShellProfile::new(&y.composition(), x_comp, scope)?;
    let joint = joint_type(x, y)?;
    let class = profile
        .class_of(&joint)
        .expect("joint type of a member sequence is always in scope");
    Ok(Located { profile, class, joint })
}

/// The rank function `G(x|y)` over compatible shells.
pub fn rank_g(x: &Sequence, y: &Sequence, x_comp: &NType) -> Result<RankResult> {
    rank_g_scoped(x, y, x_comp, RankScope::Compatible)
}

/// [`rank_g`] with an explicit choice of shells.
pub fn rank_g_scoped(x: &Sequence, y: &Sequence, x_comp: &NType, scope: RankScope) -> Result<RankResult> {
    let loc = locate(x, y, x_comp, scope)?;
    let c = &loc.profile.classes[loc.class];
    Ok(RankResult {
        rank: c.cumulative.clone(),
        class_entropy: loc.joint.input_given_output_entropy(),
        type_class_size: loc.profile.type_class_size.clone(),
    })
}

/// Strict rank `Ĝ(x|y)`: entropy order with lexicographic tie-breaking, a
/// bijection from the type class onto `1..=|T|`.
pub fn strict_rank_ghat(x: &Sequence, y: &Sequence, x_comp: &NType) -> Result<BigUint> {
    let loc = locate(x, y, x_comp, RankScope::Compatible)?;
    let class = &loc.profile.classes[loc.class];
    let below = &class.cumulative - &class.mass;
    let members: Vec<&JointType> = loc.profile.class_members(loc.class).collect();
    let lex = count_lex_smaller(x, y, &members, loc.profile.n as usize);
    Ok(below + lex + 1u32)
}

/// Number of `x' <lex x` of the right length whose joint type with `y` is one
/// of `tables`.
fn count_lex_smaller(x: &Sequence, y: &Sequence, tables: &[&JointType], n: usize) -> BigUint {
    let f = Factorials::new(n);
    let rows = x.alphabet_size();
    let cols = y.alphabet_size();
    let mut prefix = vec![0u32; rows * cols];
    let mut total = BigUint::zero();
    let mut rem = vec![0u32; rows];
    for (&xi, &b) in x.symbols().iter().zip(y.symbols()) {
        for a in 0..xi {
            prefix[a * cols + b] += 1;
            'table: for j in tables {
                let mut count = BigUint::one();
                for col in 0..cols {
                    for (r, slot) in rem.iter_mut().enumerate() {
                        let (have, used) = (j.get(r, col), prefix[r * cols + col]);
                        if used > have {
                            continue 'table;
                        }
                        *slot = have - used;
                    }
                    count *= f.multinomial(&rem);
                }
                total += count;
            }
            prefix[a * cols + b] -= 1;
        }
        prefix[xi * cols + b] += 1;
    }
    total
}

/// `Ψ(x,y)`: the fraction of the type class ranked no higher than `x`.
pub fn psi(x: &Sequence, y: &Sequence, x_comp: &NType) -> Result<PsiValue> {
    let loc = locate(x, y, x_comp, RankScope::Compatible)?;
    let (lower, upper) = psi_bounds(x, y)?;
    let g = loc.profile.classes[loc.class].cumulative.clone();
    let t = loc.profile.type_class_size.clone();
    let ln_value = ln_ratio(&g, &t);
    Ok(PsiValue {
        numerator: g,
        denominator: t,
        value: ln_value.exp(),
        ln_value,
        lower_bound: lower,
        upper_bound: upper,
    })
}

/// The bounds `(n+1)^{-2|X||Y|} e^{-nÎ}` and `(n+1)^{3|X||Y|} e^{-nÎ}` on `Ψ`.
pub fn psi_bounds(x: &Sequence, y: &Sequence) -> Result<(f64, f64)> {
    let (lo, hi) = ln_psi_bounds(x, y)?;
    Ok((lo.exp(), hi.exp()))
}

/// Natural logarithms of [`psi_bounds`].
pub fn ln_psi_bounds(x: &Sequence, y: &Sequence) -> Result<(f64, f64)> {
    let mi = crate::mot::empirical_mi(x, y)?;
    let n = x.len() as f64;
    let xy = (x.alphabet_size() * y.alphabet_size()) as f64;
    let ln_poly = (n + 1.0).ln();
    Ok((-2.0 * xy * ln_poly - n * mi, 3.0 * xy * ln_poly - n * mi))
}

/// Natural logarithms of the two-sided rank sandwich
/// `e^{nĤ} ≤ G ≤ (n+1)^{|X||Y|} e^{nĤ}`.
pub fn ln_rank_bounds(n: u32, inputs: usize, outputs: usize, class_entropy: f64) -> (f64, f64) {
    let nh = n as f64 * class_entropy;
    let poly = (inputs * outputs) as f64 * ((n + 1) as f64).ln();
    (nh, nh + poly)
}

/// A lower bound on `G` that holds at every blocklength: the sequence's own
/// shell already has at least `(n+1)^{-|X||Y|} e^{nĤ}` members.
pub fn ln_rank_lower_bound_finite(n: u32, inputs: usize, outputs: usize, class_entropy: f64) -> f64 {
    let nh = n as f64 * class_entropy;
    nh - (inputs * outputs) as f64 * ((n + 1) as f64).ln()
}

/// Whether a budget of `m` guesses runs out before `x`'s class is reached.
pub fn abandoned(x: &Sequence, y: &Sequence, x_comp: &NType, m: &BigUint) -> Result<bool> {
    if m.is_zero() {
        return Err(Error::OutOfRange("guess budget must be at least 1".into()));
    }
    Ok(rank_g(x, y, x_comp)?.abandoned(m))
}
