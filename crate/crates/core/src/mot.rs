//! Method of types: distributions, channels, types, joint types and shells,
//! together with distributional and empirical information measures.
//!
//! Symbols are dense indices `0..k`. Joint types are stored row-major with
//! rows indexed by the input symbol and columns by the output symbol.

use crate::bignum::{Factorials, LnFactorials};
use crate::{Error, Result};
use num_bigint::BigUint;
use serde::Serialize;

const SUM_TOL: f64 = 1e-12;

/// Probability mass function over `0..len`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidPmf("empty alphabet".into()));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidPmf(format!("entry {i} = {p} is not in [0,1]")));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidPmf(format!("entries sum to {sum}")));
        }
        Ok(Self { probs })
    }

    pub fn uniform(k: usize) -> Self {
        assert!(k > 0);
        Self {
            probs: vec![1.0 / k as f64; k],
        }
    }

    pub fn point_mass(k: usize, at: usize) -> Self {
        let mut probs = vec![0.0; k];
        probs[at] = 1.0;
        Self { probs }
    }

    /// Bernoulli distribution `(1-p, p)`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::new(vec![1.0 - p, p])
    }

    /// Builds a distribution from nonnegative weights, normalising them.
    pub(crate) fn from_weights(weights: &[f64]) -> Self {
        let sum: f64 = weights.iter().sum();
        Self {
            probs: weights.iter().map(|w| w / sum).collect(),
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn support_size(&self) -> usize {
        self.probs.iter().filter(|&&p| p > 0.0).count()
    }
}

impl std::ops::Index<usize> for Pmf {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.probs[i]
    }
}

/// Discrete memoryless channel: one output distribution per input symbol.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Channel {
    rows: Vec<Pmf>,
}

impl Channel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidChannel("no input symbols".into()));
        }
        let outputs = rows[0].len();
        let mut pmfs = Vec::with_capacity(rows.len());
        for (a, row) in rows.into_iter().enumerate() {
            if row.len() != outputs {
                return Err(Error::InvalidChannel(format!(
                    "row {a} has {} entries, expected {outputs}",
                    row.len()
                )));
            }
            pmfs.push(Pmf::new(row).map_err(|e| Error::InvalidChannel(format!("row {a}: {e}")))?);
        }
        Ok(Self { rows: pmfs })
    }

    pub fn from_rows(rows: Vec<Pmf>) -> Result<Self> {
        Self::new(rows.into_iter().map(|p| p.probs).collect())
    }

    /// Rows are trusted to be valid; used by solvers that stay on the simplex.
    pub(crate) fn from_raw(rows: Vec<Vec<f64>>) -> Self {
        Self {
            rows: rows.into_iter().map(|probs| Pmf { probs }).collect(),
        }
    }

    pub fn identity(k: usize) -> Self {
        Self {
            rows: (0..k).map(|a| Pmf::point_mass(k, a)).collect(),
        }
    }

    /// Binary symmetric channel with crossover probability `p`.
    pub fn bsc(p: f64) -> Result<Self> {
        Self::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    /// Channel whose rows all equal `q`.
    pub fn constant(inputs: usize, q: &Pmf) -> Self {
        Self {
            rows: vec![q.clone(); inputs],
        }
    }

    pub fn inputs(&self) -> usize {
        self.rows.len()
    }

    pub fn outputs(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, a: usize) -> &Pmf {
        &self.rows[a]
    }

    pub fn rows(&self) -> &[Pmf] {
        &self.rows
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.rows[a].probs[b]
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.probs.clone()).collect()
    }

    /// Output distribution `pV`.
    pub fn output_marginal(&self, p: &Pmf) -> Result<Vec<f64>> {
        check_inputs(p, self)?;
        let mut q = vec![0.0; self.outputs()];
        for (a, row) in self.rows.iter().enumerate() {
            for (b, &v) in row.probs.iter().enumerate() {
                q[b] += p[a] * v;
            }
        }
        Ok(q)
    }
}

fn check_inputs(p: &Pmf, v: &Channel) -> Result<()> {
    if p.len() != v.inputs() {
        return Err(Error::DimensionMismatch {
            what: "input distribution vs channel inputs",
            left: p.len(),
            right: v.inputs(),
        });
    }
    Ok(())
}

fn check_same_shape(v: &Channel, w: &Channel) -> Result<()> {
    if v.inputs() != w.inputs() {
        return Err(Error::DimensionMismatch {
            what: "channel inputs",
            left: v.inputs(),
            right: w.inputs(),
        });
    }
    if v.outputs() != w.outputs() {
        return Err(Error::DimensionMismatch {
            what: "channel outputs",
            left: v.outputs(),
            right: w.outputs(),
        });
    }
    Ok(())
}

/// `x ln x` with `0 ln 0 = 0`.
#[inline]
pub(crate) fn xlnx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Shannon entropy in nats.
pub fn entropy(p: &Pmf) -> f64 {
    entropy_of(p.probs())
}

pub(crate) fn entropy_of(p: &[f64]) -> f64 {
    let h = -p.iter().map(|&x| xlnx(x)).sum::<f64>();
    h.max(0.0)
}

/// Conditional entropy `H(V|P) = Σ_a P(a) H(V(·|a))`.
pub fn cond_entropy(v: &Channel, p: &Pmf) -> Result<f64> {
    check_inputs(p, v)?;
    Ok(cond_entropy_unchecked(v, p))
}

pub(crate) fn cond_entropy_unchecked(v: &Channel, p: &Pmf) -> f64 {
    v.rows
        .iter()
        .zip(p.probs())
        .filter(|(_, &pa)| pa > 0.0)
        .map(|(row, &pa)| pa * entropy(row))
        .sum()
}

/// Mutual information `I(P,V)` in nats.
pub fn mutual_info(p: &Pmf, v: &Channel) -> Result<f64> {
    check_inputs(p, v)?;
    Ok(mutual_info_unchecked(p, v))
}

pub(crate) fn mutual_info_unchecked(p: &Pmf, v: &Channel) -> f64 {
    let k = v.outputs();
    let mut q = vec![0.0; k];
    for (a, row) in v.rows.iter().enumerate() {
        for (qb, vb) in q.iter_mut().zip(&row.probs) {
            *qb += p[a] * vb;
        }
    }
    let mut acc = 0.0;
    for (a, row) in v.rows.iter().enumerate() {
        let pa = p[a];
        if pa == 0.0 {
            continue;
        }
        for (&vb, &qb) in row.probs.iter().zip(&q) {
            if vb > 0.0 {
                acc += pa * vb * (vb / qb).ln();
            }
        }
    }
    acc.max(0.0)
}

/// Conditional divergence `D(V‖W|P)`; `+inf` on absolute-continuity failure.
pub fn cond_kl(v: &Channel, w: &Channel, p: &Pmf) -> Result<f64> {
    check_same_shape(v, w)?;
    check_inputs(p, v)?;
    Ok(cond_kl_unchecked(v, w, p))
}

pub(crate) fn cond_kl_unchecked(v: &Channel, w: &Channel, p: &Pmf) -> f64 {
    let mut acc = 0.0;
    for (a, (vr, wr)) in v.rows.iter().zip(&w.rows).enumerate() {
        let pa = p[a];
        if pa == 0.0 {
            continue;
        }
        for (&vb, &wb) in vr.probs.iter().zip(&wr.probs) {
            if vb > 0.0 {
                if wb == 0.0 {
                    return f64::INFINITY;
                }
                acc += pa * vb * (vb / wb).ln();
            }
        }
    }
    acc.max(0.0)
}

/// Length-n sequence of dense symbol indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sequence {
    symbols: Vec<usize>,
    alphabet_size: usize,
}

impl Sequence {
    pub fn new(symbols: Vec<usize>, alphabet_size: usize) -> Result<Self> {
        if alphabet_size == 0 {
            return Err(Error::InvalidSequence("alphabet size must be positive".into()));
        }
        if symbols.is_empty() {
            return Err(Error::InvalidSequence("empty sequence".into()));
        }
        if let Some(&s) = symbols.iter().find(|&&s| s >= alphabet_size) {
            return Err(Error::InvalidSequence(format!(
                "symbol {s} outside alphabet of size {alphabet_size}"
            )));
        }
        Ok(Self { symbols, alphabet_size })
    }

    pub(crate) fn from_raw(symbols: Vec<usize>, alphabet_size: usize) -> Self {
        Self { symbols, alphabet_size }
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    /// The type (composition) of the sequence.
    pub fn composition(&self) -> NType {
        let mut counts = vec![0u32; self.alphabet_size];
        for &s in &self.symbols {
            counts[s] += 1;
        }
        NType {
            n: self.symbols.len() as u32,
            counts,
        }
    }
}

/// An n-type: exact symbol counts summing to `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct NType {
    n: u32,
    counts: Vec<u32>,
}

impl NType {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidType("empty alphabet".into()));
        }
        let n: u32 = counts.iter().sum();
        if n == 0 {
            return Err(Error::InvalidType("blocklength must be positive".into()));
        }
        Ok(Self { n, counts })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn alphabet_size(&self) -> usize {
        self.counts.len()
    }

    pub fn to_pmf(&self) -> Pmf {
        let n = self.n as f64;
        Pmf {
            probs: self.counts.iter().map(|&c| c as f64 / n).collect(),
        }
    }

    pub fn entropy(&self) -> f64 {
        entropy(&self.to_pmf())
    }

    /// Nearest n-type to `p` in ℓ1: largest-remainder rounding, remaining
    /// units to the largest fractional parts, ties to the lower symbol.
    pub fn nearest(n: u32, p: &Pmf) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidType("blocklength must be positive".into()));
        }
        let scaled: Vec<f64> = p.probs().iter().map(|&x| x * n as f64).collect();
        let mut counts: Vec<u32> = scaled.iter().map(|&s| s.floor() as u32).collect();
        let assigned: u32 = counts.iter().sum();
        let mut order: Vec<usize> = (0..counts.len()).collect();
        order.sort_by(|&i, &j| {
            let fi = scaled[i] - scaled[i].floor();
            let fj = scaled[j] - scaled[j].floor();
            fj.total_cmp(&fi).then(i.cmp(&j))
        });
        let remaining = n.saturating_sub(assigned) as usize;
        for &i in order.iter().take(remaining) {
            counts[i] += 1;
        }
        Self::new(counts)
    }
}

/// Joint type of an (input, output) sequence pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JointType {
    n: u32,
    rows: usize,
    cols: usize,
    counts: Vec<u32>,
}

impl JointType {
    pub fn new(counts: Vec<Vec<u32>>) -> Result<Self> {
        let rows = counts.len();
        if rows == 0 || counts[0].is_empty() {
            return Err(Error::InvalidType("empty joint alphabet".into()));
        }
        let cols = counts[0].len();
        if counts.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidType("ragged joint count matrix".into()));
        }
        let flat: Vec<u32> = counts.into_iter().flatten().collect();
        let n: u32 = flat.iter().sum();
        if n == 0 {
            return Err(Error::InvalidType("blocklength must be positive".into()));
        }
        Ok(Self {
            n,
            rows,
            cols,
            counts: flat,
        })
    }

    pub(crate) fn from_flat(rows: usize, cols: usize, counts: Vec<u32>) -> Self {
        let n = counts.iter().sum();
        Self { n, rows, cols, counts }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn inputs(&self) -> usize {
        self.rows
    }

    pub fn outputs(&self) -> usize {
        self.cols
    }

    pub fn get(&self, a: usize, b: usize) -> u32 {
        self.counts[a * self.cols + b]
    }

    pub fn flat(&self) -> &[u32] {
        &self.counts
    }

    pub fn to_matrix(&self) -> Vec<Vec<u32>> {
        self.counts.chunks(self.cols).map(|r| r.to_vec()).collect()
    }

    pub fn column(&self, b: usize) -> Vec<u32> {
        (0..self.rows).map(|a| self.get(a, b)).collect()
    }

    /// Input marginal (type of the x sequence).
    pub fn input_type(&self) -> NType {
        let counts = (0..self.rows)
            .map(|a| (0..self.cols).map(|b| self.get(a, b)).sum())
            .collect();
        NType { n: self.n, counts }
    }

    /// Output marginal (type of the y sequence).
    pub fn output_type(&self) -> NType {
        let counts = (0..self.cols).map(|b| self.column(b).iter().sum()).collect();
        NType { n: self.n, counts }
    }

    /// Reverse conditional type `V_{X|Y}` as a channel from outputs to
    /// inputs. Rows for unused outputs are uniform (they carry zero weight).
    pub fn reverse_conditional(&self) -> Channel {
        let rows = (0..self.cols)
            .map(|b| {
                let col = self.column(b);
                let nb: u32 = col.iter().sum();
                if nb == 0 {
                    vec![1.0 / self.rows as f64; self.rows]
                } else {
                    col.iter().map(|&c| c as f64 / nb as f64).collect()
                }
            })
            .collect();
        Channel::from_raw(rows)
    }

    /// Forward conditional type `V_{Y|X}`; rows for unused inputs are uniform.
    pub fn forward_conditional(&self) -> Channel {
        let rows = (0..self.rows)
            .map(|a| {
                let row = &self.counts[a * self.cols..(a + 1) * self.cols];
                let na: u32 = row.iter().sum();
                if na == 0 {
                    vec![1.0 / self.cols as f64; self.cols]
                } else {
                    row.iter().map(|&c| c as f64 / na as f64).collect()
                }
            })
            .collect();
        Channel::from_raw(rows)
    }

    /// `H(V_{X|Y} | P̂_y)`: conditional entropy of the input given the output.
    pub fn input_given_output_entropy(&self) -> f64 {
        let n = self.n as f64;
        let mut acc = 0.0;
        for b in 0..self.cols {
            let col = self.column(b);
            let nb: u32 = col.iter().sum();
            acc += xlnx(nb as f64) - col.iter().map(|&c| xlnx(c as f64)).sum::<f64>();
        }
        (acc / n).max(0.0)
    }

    /// Empirical mutual information of the joint type.
    pub fn mutual_info(&self) -> f64 {
        let n = self.n as f64;
        let px = self.input_type();
        let py = self.output_type();
        let mut acc = 0.0;
        for a in 0..self.rows {
            for b in 0..self.cols {
                let c = self.get(a, b) as f64;
                if c > 0.0 {
                    acc += c * (c * n / (px.counts[a] as f64 * py.counts[b] as f64)).ln();
                }
            }
        }
        (acc / n).max(0.0)
    }
}

/// Joint type of two equal-length sequences.
pub fn joint_type(x: &Sequence, y: &Sequence) -> Result<JointType> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let (rows, cols) = (x.alphabet_size, y.alphabet_size);
    let mut counts = vec![0u32; rows * cols];
    for (&a, &b) in x.symbols.iter().zip(&y.symbols) {
        counts[a * cols + b] += 1;
    }
    Ok(JointType::from_flat(rows, cols, counts))
}

/// Empirical conditional entropy `Ĥ(x|y)`.
pub fn empirical_cond_entropy(x: &Sequence, y: &Sequence) -> Result<f64> {
    Ok(joint_type(x, y)?.input_given_output_entropy())
}

/// Empirical mutual information `Î(x∧y)`.
pub fn empirical_mi(x: &Sequence, y: &Sequence) -> Result<f64> {
    Ok(joint_type(x, y)?.mutual_info())
}

/// All n-types over an alphabet of size `k`, in lexicographically decreasing
/// order of the count vector.
pub fn enumerate_types(n: u32, k: usize) -> Vec<NType> {
    assert!(n >= 1 && k >= 1);
    let mut out = Vec::new();
    let mut counts = vec![0u32; k];
    fn rec(pos: usize, left: u32, counts: &mut Vec<u32>, out: &mut Vec<NType>, n: u32) {
        if pos + 1 == counts.len() {
            counts[pos] = left;
            out.push(NType {
                n,
                counts: counts.clone(),
            });
            return;
        }
        for c in (0..=left).rev() {
            counts[pos] = c;
            rec(pos + 1, left - c, counts, out, n);
        }
    }
    rec(0, n, &mut counts, &mut out, n);
    out
}

/// All joint types with output marginal `y_type` and input marginal
/// `x_comp`; these index the shells of `y` that meet the class of `x_comp`.
pub fn enumerate_reverse_cond_types(y_type: &NType, x_comp: &NType) -> Result<Vec<JointType>> {
    if y_type.n != x_comp.n {
        return Err(Error::DimensionMismatch {
            what: "blocklength of output type vs input composition",
            left: y_type.n as usize,
            right: x_comp.n as usize,
        });
    }
    Ok(contingency_tables(&x_comp.counts, &y_type.counts))
}

/// All joint types with output marginal `y_type` and any input marginal over
/// `inputs` symbols.
pub fn enumerate_joint_types_with_output(y_type: &NType, inputs: usize) -> Vec<JointType> {
    let cols = y_type.counts.len();
    let per_column: Vec<Vec<NType>> = y_type
        .counts
        .iter()
        .map(|&nb| {
            if nb == 0 {
                vec![NType {
                    n: 0,
                    counts: vec![0; inputs],
                }]
            } else {
                enumerate_types(nb, inputs)
            }
        })
        .collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; cols];
    loop {
        let mut counts = vec![0u32; inputs * cols];
        for b in 0..cols {
            for (a, &c) in per_column[b][idx[b]].counts.iter().enumerate() {
                counts[a * cols + b] = c;
            }
        }
        out.push(JointType::from_flat(inputs, cols, counts));
        let mut b = cols;
        loop {
            if b == 0 {
                return out;
            }
            b -= 1;
            idx[b] += 1;
            if idx[b] < per_column[b].len() {
                break;
            }
            idx[b] = 0;
        }
    }
}

/// Nonnegative integer matrices with the given row and column sums.
fn contingency_tables(row_sums: &[u32], col_sums: &[u32]) -> Vec<JointType> {
    let rows = row_sums.len();
    let cols = col_sums.len();
    let mut out = Vec::new();
    let mut cells = vec![0u32; rows * cols];
    let mut row_left = row_sums.to_vec();
    let mut col_left = col_sums.to_vec();

    // Fill cell by cell in row-major order; the last row and last column are
    // forced by the margins.
    #[allow(clippy::too_many_arguments)]
    fn rec(
        idx: usize,
        rows: usize,
        cols: usize,
        cells: &mut Vec<u32>,
        row_left: &mut Vec<u32>,
        col_left: &mut Vec<u32>,
        out: &mut Vec<JointType>,
    ) {
        if idx == rows * cols {
            if row_left.iter().all(|&r| r == 0) && col_left.iter().all(|&c| c == 0) {
                out.push(JointType::from_flat(rows, cols, cells.clone()));
            }
            return;
        }
        let (a, b) = (idx / cols, idx % cols);
        let (lo, hi) = if a + 1 == rows || b + 1 == cols {
            // Forced cell.
            let v = if b + 1 == cols { row_left[a] } else { col_left[b] };
            if v > row_left[a] || v > col_left[b] {
                return;
            }
            (v, v)
        } else {
            // Remaining rows below must be able to absorb what is left.
            let hi = row_left[a].min(col_left[b]);
            let rest_cols: u32 = col_left[b + 1..].iter().sum();
            let lo = row_left[a].saturating_sub(rest_cols);
            if lo > hi {
                return;
            }
            (lo, hi)
        };
        for v in lo..=hi {
            cells[idx] = v;
            row_left[a] -= v;
            col_left[b] -= v;
            rec(idx + 1, rows, cols, cells, row_left, col_left, out);
            row_left[a] += v;
            col_left[b] += v;
        }
        cells[idx] = 0;
    }
    rec(0, rows, cols, &mut cells, &mut row_left, &mut col_left, &mut out);
    out
}

/// Every sequence of type `t`, in lexicographic order. Exponential in `n`;
/// intended for exhaustive checks at small blocklengths.
pub fn type_class_members(t: &NType) -> Vec<Sequence> {
    let k = t.counts.len();
    let n = t.n as usize;
    let mut out = Vec::new();
    let mut left = t.counts.clone();
    let mut cur = Vec::with_capacity(n);
    fn rec(left: &mut Vec<u32>, cur: &mut Vec<usize>, n: usize, k: usize, out: &mut Vec<Sequence>) {
        if cur.len() == n {
            out.push(Sequence::from_raw(cur.clone(), k));
            return;
        }
        for a in 0..k {
            if left[a] > 0 {
                left[a] -= 1;
                cur.push(a);
                rec(left, cur, n, k, out);
                cur.pop();
                left[a] += 1;
            }
        }
    }
    rec(&mut left, &mut cur, n, k, &mut out);
    out
}

/// Every sequence of length `n` over `k` symbols, in lexicographic order.
pub fn all_sequences(n: usize, k: usize) -> Vec<Sequence> {
    let total = k.pow(n as u32);
    (0..total)
        .map(|mut idx| {
            let mut s = vec![0usize; n];
            for pos in (0..n).rev() {
                s[pos] = idx % k;
                idx /= k;
            }
            Sequence::from_raw(s, k)
        })
        .collect()
}

/// `|T_t| = n! / Π counts!`.
pub fn type_class_size(t: &NType) -> BigUint {
    Factorials::new(t.n as usize).multinomial(&t.counts)
}

/// Size of the shell of sequences x whose joint type with a fixed y is `j`:
/// the product over output symbols of the multinomial of each column.
pub fn shell_size(j: &JointType) -> BigUint {
    shell_size_with(j, &Factorials::new(j.n as usize))
}

pub(crate) fn shell_size_with(j: &JointType, f: &Factorials) -> BigUint {
    let mut acc = BigUint::from(1u32);
    for b in 0..j.cols {
        acc *= f.multinomial(&j.column(b));
    }
    acc
}

/// `ln |T_t|` in floating point.
pub fn ln_type_class_size(t: &NType) -> f64 {
    LnFactorials::new(t.n as usize).ln_multinomial(&t.counts)
}

/// `ln` of [`shell_size`] in floating point.
pub fn ln_shell_size(j: &JointType) -> f64 {
    ln_shell_size_with(j, &LnFactorials::new(j.n as usize))
}

pub(crate) fn ln_shell_size_with(j: &JointType, lf: &LnFactorials) -> f64 {
    (0..j.cols).map(|b| lf.ln_multinomial(&j.column(b))).sum()
}
