//! Tester for monotone decision lists under an unknown distribution.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;

use crate::bits::{ceil_count, ceil_log2, log2c, BitString};
use crate::error::TestError;
use crate::oracle::{BooleanOracle, Sampler};
use crate::verdict::{Verdict, Witness};

/// Constants of the monotone tester. Every count is rounded up.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MdlParams {
    /// Big/small block trade-off exponent.
    pub delta: f64,
    /// Preprocessing draws `c_pre·n^{1−δ/2}/ε`.
    pub c_pre: f64,
    /// MaxIndex nil-probes `c_nil/ε`.
    pub c_nil: f64,
    /// Sample constant for the cycle-type tests 1, 3, 4 and 5.
    pub c_type: f64,
    /// A block is big when it collects `c_big·log n/ε` of the `n^{1−δ}` singleton probes.
    pub c_big: f64,
    /// Neighbour-absorption rounds `c_rounds/ε`.
    pub c_rounds: f64,
    /// Draws per absorption round `c_round_draws·log(n/ε)/ε`.
    pub c_round_draws: f64,
    /// Absorption stops when fewer than `c_round_thresh·log(n/ε)` draws land next to `L`.
    pub c_round_thresh: f64,
    /// Small blocks hold at most `c_small·n^δ·log n/ε` indices.
    pub c_small: f64,
}

impl Default for MdlParams {
    fn default() -> Self {
        MdlParams {
            delta: 1.0 / 6.0,
            c_pre: 1.0,
            c_nil: 8.0,
            c_type: 8.0,
            c_big: 4.0,
            c_rounds: 200.0,
            c_round_draws: 100.0,
            c_round_thresh: 5.0,
            c_small: 16.0,
        }
    }
}

/// All sample sizes and thresholds for one `(n, ε)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MdlSizes {
    pub pre: u64,
    pub probes: u64,
    pub big_threshold: u64,
    pub rounds: u64,
    pub round_draws: u64,
    pub round_threshold: u64,
    pub small_limit: u64,
    pub nil_probes: u64,
    pub t1: u64,
    pub t2p: u64,
    pub t2q: u64,
    pub t3: u64,
    pub t4: u64,
    pub t5: u64,
    pub pair_cap: u64,
}

impl MdlParams {
    pub fn sizes(&self, n: usize, eps: f64) -> MdlSizes {
        let nf = n as f64;
        let d = self.delta;
        let logn = log2c(nf);
        let logne = log2c(nf / eps);
        let small_limit = ceil_count(self.c_small * nf.powf(d) * logn / eps);
        MdlSizes {
            pre: ceil_count(self.c_pre * nf.powf(1.0 - d / 2.0) / eps),
            probes: ceil_count(nf.powf(1.0 - d)),
            big_threshold: ceil_count(self.c_big * logn / eps),
            rounds: ceil_count(self.c_rounds / eps),
            round_draws: ceil_count(self.c_round_draws * logne / eps),
            round_threshold: ceil_count(self.c_round_thresh * logne),
            small_limit,
            nil_probes: ceil_count(self.c_nil / eps),
            t1: ceil_count(self.c_type * nf.sqrt() / eps),
            t2p: ceil_count(nf.powf(d / 2.0) / (eps * logn * logn)),
            t2q: ceil_count(nf.powf(1.0 - d / 2.0) * logn.powi(3) / eps),
            t3: ceil_count(self.c_type * nf.sqrt() / eps),
            t4: ceil_count(self.c_type * nf.powf(2.0 / 3.0) / eps),
            t5: ceil_count(self.c_type * nf.powf(0.75) / eps),
            pair_cap: 2 * small_limit,
        }
    }
}

/// A chain `s^(1) ≻ … ≻ s^(k)` of strings with alternating values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MdlSketch {
    strings: Vec<BitString>,
    values: Vec<bool>,
}

impl MdlSketch {
    /// Wraps strings and their values without verification.
    pub fn from_parts(strings: Vec<BitString>, values: Vec<bool>) -> Self {
        assert_eq!(strings.len(), values.len());
        MdlSketch { strings, values }
    }

    pub fn k(&self) -> usize {
        self.strings.len()
    }

    /// `s^(ℓ)` for `1 <= ℓ <= k`.
    pub fn s(&self, l: usize) -> &BitString {
        &self.strings[l - 1]
    }

    /// Cached `f(s^(ℓ))`.
    pub fn value(&self, l: usize) -> bool {
        self.values[l - 1]
    }

    pub fn strings(&self) -> &[BitString] {
        &self.strings
    }

    /// Re-checks the consistency conditions with fresh queries.
    pub fn verify<O: BooleanOracle + ?Sized>(&self, f: &O) -> Result<bool, TestError> {
        if self.k() < 2 {
            return Ok(false);
        }
        for l in 1..=self.k() {
            if self.s(l).is_zero() || f.query(self.s(l))? != self.value(l) {
                return Ok(false);
            }
        }
        for l in 1..self.k() {
            if self.value(l) == self.value(l + 1)
                || f.query(&(self.s(l) | self.s(l + 1)))? != self.value(l)
            {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// The set `L` of big blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BigBlockSet {
    k: usize,
    member: Vec<bool>,
}

impl BigBlockSet {
    pub fn empty(k: usize) -> Self {
        BigBlockSet {
            k,
            member: vec![false; k + 2],
        }
    }

    pub fn from_members(k: usize, members: &[usize]) -> Self {
        let mut s = Self::empty(k);
        for &l in members {
            s.member[l] = true;
        }
        s
    }

    pub fn contains(&self, l: usize) -> bool {
        self.member.get(l).copied().unwrap_or(false)
    }

    pub fn members(&self) -> Vec<usize> {
        (0..self.member.len()).filter(|&l| self.member[l]).collect()
    }

    pub fn is_empty(&self) -> bool {
        !self.member.iter().any(|&b| b)
    }

    /// `N(L)`: blocks outside `L` adjacent to some block of `L`.
    pub fn neighbors(&self) -> Vec<usize> {
        (0..=self.k + 1)
            .filter(|&l| {
                !self.member[l]
                    && ((l > 0 && self.member[l - 1]) || (l < self.k + 1 && self.member[l + 1]))
            })
            .collect()
    }

    /// Membership in `L ∪ N(L)`.
    pub fn closure_mask(&self) -> Vec<bool> {
        let mut mask = self.member.clone();
        for l in self.neighbors() {
            mask[l] = true;
        }
        mask
    }
}

fn with_units(base: &BitString, indices: &[usize]) -> BitString {
    let mut q = base.clone();
    for &i in indices {
        q.set(i, true);
    }
    q
}

fn or_all<'a>(width: usize, items: impl IntoIterator<Item = &'a BitString>) -> BitString {
    let mut acc = BitString::zeros(width);
    for x in items {
        acc.or_assign(x);
    }
    acc
}

/// Halving search for a representative of `X` against `Y`; returns its position in `X`.
///
/// `R` keeps its first `⌊|R|/2⌋` elements when their OR with `Y` preserves
/// `b = f(⋁(X ∪ Y))`, and the rest otherwise.
pub fn find_rep<O: BooleanOracle + ?Sized>(
    f: &O,
    x: &[&BitString],
    y: &[&BitString],
) -> Result<usize, TestError> {
    if x.is_empty() {
        return Err(TestError::PreconditionViolated(
            "find_rep needs a nonempty X".into(),
        ));
    }
    let width = f.width();
    let y_or = or_all(width, y.iter().copied());
    let mut all = y_or.clone();
    for s in x {
        all.or_assign(s);
    }
    let b = f.query(&all)?;
    let (mut lo, mut len) = (0usize, x.len());
    while len > 1 {
        let h = len / 2;
        let mut q = y_or.clone();
        for s in &x[lo..lo + h] {
            q.or_assign(s);
        }
        if f.query(&q)? == b {
            len = h;
        } else {
            lo += h;
            len -= h;
        }
    }
    Ok(lo)
}

/// [`find_rep`] over unit vectors `{e_j : j ∈ indices}` with `Y = {base}`.
fn find_rep_units<O: BooleanOracle + ?Sized>(
    f: &O,
    indices: &[usize],
    base: &BitString,
) -> Result<usize, TestError> {
    let b = f.query(&with_units(base, indices))?;
    let (mut lo, mut len) = (0usize, indices.len());
    while len > 1 {
        let h = len / 2;
        if f.query(&with_units(base, &indices[lo..lo + h]))? == b {
            len = h;
        } else {
            lo += h;
            len -= h;
        }
    }
    Ok(lo)
}

/// OR segment tree over a fixed list of strings with deletions.
struct OrTree {
    words: usize,
    leaves: usize,
    count: Vec<u32>,
    bits: Vec<u64>,
}

impl OrTree {
    fn new(width: usize, items: &[&BitString]) -> Self {
        let words = width.div_ceil(64).max(1);
        let leaves = items.len().next_power_of_two().max(1);
        let mut t = OrTree {
            words,
            leaves,
            count: vec![0; 2 * leaves],
            bits: vec![0; 2 * leaves * words],
        };
        for (p, x) in items.iter().enumerate() {
            let node = leaves + p;
            t.count[node] = 1;
            t.bits[node * words..node * words + x.words().len()].copy_from_slice(x.words());
        }
        for node in (1..leaves).rev() {
            t.pull(node);
        }
        t
    }

    fn pull(&mut self, node: usize) {
        let w = self.words;
        self.count[node] = self.count[2 * node] + self.count[2 * node + 1];
        for j in 0..w {
            self.bits[node * w + j] =
                self.bits[2 * node * w + j] | self.bits[(2 * node + 1) * w + j];
        }
    }

    fn alive(&self) -> usize {
        self.count[1] as usize
    }

    fn remove(&mut self, pos: usize) {
        let w = self.words;
        let mut node = self.leaves + pos;
        self.count[node] = 0;
        self.bits[node * w..(node + 1) * w].fill(0);
        while node > 1 {
            node /= 2;
            self.pull(node);
        }
    }

    /// Position of the alive element with the given 0-based rank.
    fn position_of_rank(&self, mut rank: usize) -> usize {
        let mut node = 1;
        while node < self.leaves {
            let left = self.count[2 * node] as usize;
            if rank < left {
                node *= 2;
            } else {
                rank -= left;
                node = 2 * node + 1;
            }
        }
        node - self.leaves
    }

    fn or_node_into(&self, node: usize, acc: &mut [u64]) {
        let w = self.words;
        for (a, b) in acc.iter_mut().zip(&self.bits[node * w..(node + 1) * w]) {
            *a |= *b;
        }
    }

    /// ORs the alive elements with positions in `[lo, hi)` into `acc`.
    fn or_range_into(&self, lo: usize, hi: usize, acc: &mut [u64]) {
        let (mut l, mut r) = (lo + self.leaves, hi + self.leaves);
        while l < r {
            if l & 1 == 1 {
                self.or_node_into(l, acc);
                l += 1;
            }
            if r & 1 == 1 {
                r -= 1;
                self.or_node_into(r, acc);
            }
            l /= 2;
            r /= 2;
        }
    }

    /// OR of alive elements with ranks in `[lo_rank, hi_rank)`.
    fn or_ranks_into(&self, lo_rank: usize, hi_rank: usize, acc: &mut [u64]) {
        if lo_rank >= hi_rank {
            return;
        }
        let lo = self.position_of_rank(lo_rank);
        let hi = if hi_rank >= self.alive() {
            self.leaves
        } else {
            self.position_of_rank(hi_rank)
        };
        self.or_range_into(lo, hi, acc);
    }

    fn or_all_into(&self, acc: &mut [u64]) {
        self.or_node_into(1, acc);
    }
}

fn bits_from_words(width: usize, words: &[u64]) -> BitString {
    BitString::from_words(width, words.to_vec())
}

/// The extraction order and value intervals produced before the consistency check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Extraction {
    /// Positions into the input list, in extraction order.
    pub order: Vec<usize>,
    /// Maximal same-value runs of `order`, as `(start, end)` half-open ranges with their value.
    pub intervals: Vec<(usize, usize, bool)>,
}

/// Repeated representative extraction and interval grouping over pre-evaluated strings.
pub fn extract_intervals<O: BooleanOracle + ?Sized>(
    f: &O,
    items: &[(&BitString, bool)],
) -> Result<Extraction, TestError> {
    let width = f.width();
    let words = width.div_ceil(64).max(1);
    let mut pos = [Vec::new(), Vec::new()];
    for (p, &(_, v)) in items.iter().enumerate() {
        pos[v as usize].push(p);
    }
    let lists: [Vec<&BitString>; 2] = [
        pos[0].iter().map(|&p| items[p].0).collect(),
        pos[1].iter().map(|&p| items[p].0).collect(),
    ];
    let mut trees = [OrTree::new(width, &lists[0]), OrTree::new(width, &lists[1])];
    let mut order = Vec::with_capacity(items.len());
    let mut values = Vec::with_capacity(items.len());
    for _ in 0..items.len() {
        let (b, rank) = if trees[0].alive() > 0 && trees[1].alive() > 0 {
            let mut acc = vec![0u64; words];
            trees[0].or_all_into(&mut acc);
            trees[1].or_all_into(&mut acc);
            let b = f.query(&bits_from_words(width, &acc))?;
            let (tb, tnb) = (&trees[b as usize], &trees[!b as usize]);
            // FindRep(T_b, T_b̄); its target value is b itself.
            let target = b;
            let mut y = vec![0u64; words];
            tnb.or_all_into(&mut y);
            let (mut lo, mut len) = (0usize, tb.alive());
            while len > 1 {
                let h = len / 2;
                let mut q = y.clone();
                tb.or_ranks_into(lo, lo + h, &mut q);
                if f.query(&bits_from_words(width, &q))? == target {
                    len = h;
                } else {
                    lo += h;
                    len -= h;
                }
            }
            (b, lo)
        } else {
            (trees[1].alive() > 0, 0)
        };
        let t = &mut trees[b as usize];
        let p = t.position_of_rank(rank);
        t.remove(p);
        order.push(pos[b as usize][p]);
        values.push(b);
    }
    let mut intervals = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] != values[start] {
            intervals.push((start, i, values[start]));
            start = i;
        }
    }
    Ok(Extraction { order, intervals })
}

/// Builds a sketch from strings whose values are already known; `None` when verification fails.
pub fn sketch_from_values<O: BooleanOracle + ?Sized>(
    f: &O,
    items: &[(&BitString, bool)],
) -> Result<Option<MdlSketch>, TestError> {
    let ex = extract_intervals(f, items)?;
    if ex.intervals.len() < 2 {
        return Ok(None);
    }
    let strings: Vec<BitString> = ex
        .intervals
        .iter()
        .map(|&(a, b, _)| or_all(f.width(), ex.order[a..b].iter().map(|&p| items[p].0)))
        .collect();
    let mut values = Vec::with_capacity(strings.len());
    for s in &strings {
        if s.is_zero() {
            return Ok(None);
        }
        values.push(f.query(s)?);
    }
    for l in 0..strings.len() - 1 {
        if values[l] == values[l + 1] || f.query(&(&strings[l] | &strings[l + 1]))? != values[l] {
            return Ok(None);
        }
    }
    Ok(Some(MdlSketch { strings, values }))
}

/// Queries `f` on every string of `t` and builds a sketch.
pub fn sketch_mdl<O: BooleanOracle + ?Sized>(
    f: &O,
    t: &[&BitString],
) -> Result<Option<MdlSketch>, TestError> {
    let mut items = Vec::with_capacity(t.len());
    for &x in t {
        if x.is_zero() {
            return Err(TestError::PreconditionViolated(
                "sketch input contains 0^n".into(),
            ));
        }
        items.push((x, f.query(x)?));
    }
    if !(items.iter().any(|p| p.1) && items.iter().any(|p| !p.1)) {
        return Err(TestError::PreconditionViolated(
            "sketch input needs both values".into(),
        ));
    }
    sketch_from_values(f, &items)
}

/// A string located against the sketch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Located {
    pub value: bool,
    pub block: usize,
}

/// Block index in `[0, k+1]` of `x`, together with `f(x)`.
///
/// With `f(x) = f(s^(1))` the result is odd (or `k` / `k+1` at the top end);
/// otherwise it is even, with `0` when `x ≻ s^(1)`.
pub fn find_block_mdl<O: BooleanOracle + ?Sized>(
    f: &O,
    sk: &MdlSketch,
    x: &BitString,
) -> Result<Located, TestError> {
    let fx = f.query(x)?;
    let k = sk.k();
    let (first, last) = if sk.value(1) == fx {
        (2, 2 * (k / 2))
    } else {
        (1, 2 * k.div_ceil(2) - 1)
    };
    // dom(j): x ≻ s^(j) for an opposite-valued s^(j).
    let dom = |j: usize| -> Result<bool, TestError> { Ok(f.query(&(sk.s(j) | x))? == fx) };
    let block = if dom(first)? {
        first - 1
    } else if first == last || !dom(last)? {
        last + 1
    } else {
        let (mut a, mut b) = (0usize, (last - first) / 2);
        while b - a > 1 {
            let mid = (a + b) / 2;
            if dom(first + 2 * mid)? {
                b = mid;
            } else {
                a = mid;
            }
        }
        first + 2 * a + 1
    };
    Ok(Located { value: fx, block })
}

/// The index of `x` whose rule decides `f(x)`, or `None` when the checks fail.
///
/// `loc` must be the result of [`find_block_mdl`] on `x`.
pub fn max_index_located<O: BooleanOracle + ?Sized>(
    f: &O,
    sk: &MdlSketch,
    big: &BigBlockSet,
    small_limit: u64,
    x: &BitString,
    loc: Located,
) -> Result<Option<usize>, TestError> {
    let l = loc.block;
    let k = sk.k();
    let zero = BitString::zeros(f.width());
    let next = if l >= k { &zero } else { sk.s(l + 1) };
    let support = x.support_vec();
    if support.is_empty() {
        return Err(TestError::PreconditionViolated("max_index on 0^n".into()));
    }
    if big.contains(l) {
        let p = find_rep_units(f, &support, next)?;
        let i = support[p];
        let li = find_block_mdl(f, sk, &BitString::unit(i, f.width())?)?;
        return Ok((li.block == l && li.value == loc.value).then_some(i));
    }
    let mut rest = support;
    let mut picked = Vec::new();
    while (picked.len() as u64) < small_limit
        && !rest.is_empty()
        && f.query(&with_units(next, &rest))? == loc.value
    {
        let p = find_rep_units(f, &rest, next)?;
        picked.push(rest.remove(p));
    }
    let rest_or = with_units(&zero, &rest);
    for i in picked {
        let ei = BitString::unit(i, f.width())?;
        let li = find_block_mdl(f, sk, &ei)?;
        if li.block == l && li.value == loc.value && f.query(&(&ei | &rest_or))? == loc.value {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// [`max_index_located`] preceded by locating `x`.
pub fn max_index<O: BooleanOracle + ?Sized>(
    f: &O,
    sk: &MdlSketch,
    big: &BigBlockSet,
    small_limit: u64,
    x: &BitString,
) -> Result<Option<usize>, TestError> {
    let loc = find_block_mdl(f, sk, x)?;
    max_index_located(f, sk, big, small_limit, x, loc)
}

/// Identifies big blocks by singleton probes, then absorbs heavy neighbours.
///
/// When `N(L)` is empty no draw can land in it, so the round ends without sampling.
pub fn find_big_blocks<O: BooleanOracle + ?Sized, R: Rng + ?Sized>(
    f: &O,
    d: &Sampler<'_>,
    sk: &MdlSketch,
    sizes: &MdlSizes,
    rng: &mut R,
) -> Result<BigBlockSet, TestError> {
    let n = f.width();
    let k = sk.k();
    let mut counts = vec![0u64; k + 2];
    for _ in 0..sizes.probes {
        let i = rng.random_range(1..=n);
        let loc = find_block_mdl(f, sk, &BitString::unit(i, n)?)?;
        counts[loc.block] += 1;
    }
    let members: Vec<usize> = (0..k + 2)
        .filter(|&l| counts[l] >= sizes.big_threshold)
        .collect();
    let mut big = BigBlockSet::from_members(k, &members);
    for _ in 0..sizes.rounds {
        let neighbors = big.neighbors();
        if neighbors.is_empty() {
            return Ok(big);
        }
        let mut is_neighbor = vec![false; k + 2];
        for &l in &neighbors {
            is_neighbor[l] = true;
        }
        let mut c = 0u64;
        for _ in 0..sizes.round_draws {
            let x = d.atom(d.draw(rng)?);
            if is_neighbor[find_block_mdl(f, sk, x)?.block] {
                c += 1;
            }
        }
        if c < sizes.round_threshold {
            return Ok(big);
        }
        for l in neighbors {
            big.member[l] = true;
        }
    }
    Ok(big)
}

/// Outcome of preprocessing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Preprocessed {
    Accept,
    Reject,
    Ready(MdlSketch, BigBlockSet),
}

/// Draws the preprocessing sample, builds the sketch and finds big blocks.
pub fn preprocess<O: BooleanOracle + ?Sized, R: Rng + ?Sized>(
    f: &O,
    d: &Sampler<'_>,
    sizes: &MdlSizes,
    rng: &mut R,
) -> Result<Preprocessed, TestError> {
    let set = d.draw_set(sizes.pre, rng)?;
    let mut items = Vec::with_capacity(set.len());
    for i in set {
        let x = d.atom(i);
        if !x.is_zero() {
            items.push((x, f.query(x)?));
        }
    }
    if items.iter().all(|p| p.1) || items.iter().all(|p| !p.1) {
        return Ok(Preprocessed::Accept);
    }
    match sketch_from_values(f, &items)? {
        None => Ok(Preprocessed::Reject),
        Some(sk) => {
            let big = find_big_blocks(f, d, &sk, sizes, rng)?;
            Ok(Preprocessed::Ready(sk, big))
        }
    }
}

/// A sampled nonzero string with its block and MaxIndex.
#[derive(Clone, Copy, Debug)]
struct Point {
    atom: usize,
    loc: Located,
    max: Option<usize>,
}

struct Ctx<'a, 'd, O: BooleanOracle + ?Sized> {
    f: &'a O,
    d: &'a Sampler<'d>,
    sk: &'a MdlSketch,
    big: &'a BigBlockSet,
    sizes: &'a MdlSizes,
}

impl<O: BooleanOracle + ?Sized> Ctx<'_, '_, O> {
    fn x(&self, p: &Point) -> &BitString {
        self.d.atom(p.atom)
    }

    /// Locates (and optionally computes MaxIndex of) each distinct nonzero atom.
    fn locate(
        &self,
        atoms: &[usize],
        cache: &mut HashMap<usize, Point>,
        want_max: impl Fn(&Located) -> bool,
    ) -> Result<Vec<Point>, TestError> {
        let mut out = Vec::with_capacity(atoms.len());
        for &a in atoms {
            let x = self.d.atom(a);
            if x.is_zero() {
                continue;
            }
            if let Some(p) = cache.get(&a) {
                out.push(*p);
                continue;
            }
            let loc = find_block_mdl(self.f, self.sk, x)?;
            let max = if want_max(&loc) {
                max_index_located(self.f, self.sk, self.big, self.sizes.small_limit, x, loc)?
            } else {
                None
            };
            let p = Point { atom: a, loc, max };
            cache.insert(a, p);
            out.push(p);
        }
        Ok(out)
    }

    fn report(&self) -> crate::oracle::LedgerReport {
        self.d.ledger().report()
    }
}

/// Memoized `f(e_u ∨ e_v)` for one test.
struct PairValues<'a, O: BooleanOracle + ?Sized> {
    f: &'a O,
    cache: HashMap<(usize, usize), bool>,
}

impl<O: BooleanOracle + ?Sized> PairValues<'_, O> {
    fn get(&mut self, u: usize, v: usize) -> Result<bool, TestError> {
        let key = (u.min(v), u.max(v));
        if let Some(&b) = self.cache.get(&key) {
            return Ok(b);
        }
        let n = self.f.width();
        let q = BitString::from_indices(n, &[u, v])?;
        let b = self.f.query(&q)?;
        self.cache.insert(key, b);
        Ok(b)
    }
}

fn test_type1<O: BooleanOracle + ?Sized, R: Rng + ?Sized>(
    ctx: &Ctx<'_, '_, O>,
    rng: &mut R,
) -> Result<Option<Witness>, TestError> {
    let p_atoms = ctx.d.draw_set(ctx.sizes.t1, rng)?;
    let q_atoms = ctx.d.draw_set(ctx.sizes.t1, rng)?;
    let mut cache = HashMap::new();
    let p = ctx.locate(&p_atoms, &mut cache, |_| true)?;
    let q = ctx.locate(&q_atoms, &mut cache, |_| true)?;
    for y in &q {
        let Some(v) = y.max else { continue };
        for x in &p {
            if x.loc.value != y.loc.value && y.loc.block + 2 <= x.loc.block && ctx.x(x).get(v) {
                return Ok(Some(Witness::BlockGap {
                    kind: 1,
                    x: ctx.x(x).clone(),
                    y: ctx.x(y).clone(),
                    v,
                }));
            }
        }
    }
    Ok(None)
}

fn test_type2<O: BooleanOracle + ?Sized, R: Rng + ?Sized>(
    ctx: &Ctx<'_, '_, O>,
    rng: &mut R,
) -> Result<Option<Witness>, TestError> {
    let p_atoms = ctx.d.draw_set(ctx.sizes.t2p, rng)?;
    let q_atoms = ctx.d.draw_set(ctx.sizes.t2q, rng)?;
    let mut cache = HashMap::new();
    let big = ctx.big;
    let p = ctx.locate(&p_atoms, &mut cache, |l| big.contains(l.block))?;
    let q = ctx.locate(&q_atoms, &mut cache, |l| big.contains(l.block))?;
    for y in &q {
        let Some(v) = y.max else { continue };
        if !big.contains(y.loc.block) {
            continue;
        }
        for x in &p {
            if big.contains(x.loc.block) && y.loc.block + 1 == x.loc.block && ctx.x(x).get(v) {
                return Ok(Some(Witness::BlockGap {
                    kind: 2,
                    x: ctx.x(x).clone(),
                    y: ctx.x(y).clone(),
                    v,
                }));
            }
        }
    }
    Ok(None)
}

fn test_type3<O: BooleanOracle + ?Sized, R: Rng + ?Sized>(
    ctx: &Ctx<'_, '_, O>,
    rng: &mut R,
) -> Result<Option<Witness>, TestError> {
    let p_atoms = ctx.d.draw_set(ctx.sizes.t3, rng)?;
    let q_atoms = ctx.d.draw_set(ctx.sizes.t3, rng)?;
    let mut cache = HashMap::new();
    let p = ctx.locate(&p_atoms, &mut cache, |_| true)?;
    let q = ctx.locate(&q_atoms, &mut cache, |_| true)?;
    let closed = ctx.big.closure_mask();
    let mut pairs = PairValues {
        f: ctx.f,
        cache: HashMap::new(),
    };
    for x in &p {
        let Some(u) = x.max else { continue };
        if closed[x.loc.block] {
            continue;
        }
        let mut partners = 0u64;
        for y in &q {
            let Some(v) = y.max else { continue };
            if closed[y.loc.block]
                || x.loc.block.abs_diff(y.loc.block) != 1
                || u == v
                || !ctx.x(x).get(v)
            {
                continue;
            }
            if !pairs.cache.contains_key(&(u.min(v), u.max(v))) {
                if partners >= ctx.sizes.pair_cap {
                    continue;
                }
                partners += 1;
            }
            if pairs.get(u, v)? != x.loc.value {
                return Ok(Some(Witness::PairConflict {
                    x: ctx.x(x).clone(),
                    y: ctx.x(y).clone(),
                    u,
                    v,
                }));
            }
        }
    }
    Ok(None)
}

/// Distinct MaxIndex values (with `f(e_u)`) per block outside `L ∪ N(L)`.
fn small_block_groups(points: &[Point], closed: &[bool]) -> BTreeMap<usize, Vec<(usize, bool)>> {
    let mut groups: BTreeMap<usize, Vec<(usize, bool)>> = BTreeMap::new();
    for p in points {
        if let Some(u) = p.max {
            if !closed[p.loc.block] {
                let g = groups.entry(p.loc.block).or_default();
                if !g.iter().any(|&(w, _)| w == u) {
                    g.push((u, p.loc.value));
                }
            }
        }
    }
    groups
}

fn test_type4<O: BooleanOracle + ?Sized, R: Rng + ?Sized>(
    ctx: &Ctx<'_, '_, O>,
    rng: &mut R,
) -> Result<Option<Witness>, TestError> {
    let atoms = ctx.d.draw_set(ctx.sizes.t4, rng)?;
    let mut cache = HashMap::new();
    let p = ctx.locate(&atoms, &mut cache, |_| true)?;
    let closed = ctx.big.closure_mask();
    let groups = small_block_groups(&p, &closed);
    let cap = ctx.sizes.pair_cap as usize;
    let mut pairs = PairValues {
        f: ctx.f,
        cache: HashMap::new(),
    };
    for (&b, top) in &groups {
        if b < 2 {
            continue;
        }
        let (Some(mid), Some(low)) = (groups.get(&(b - 1)), groups.get(&(b - 2))) else {
            continue;
        };
        for &(v, fv) in mid {
            let mut above = None;
            for &(u, fu) in top.iter().take(cap) {
                if pairs.get(u, v)? == fu {
                    above = Some(u);
                    break;
                }
            }
            let Some(u) = above else { continue };
            for &(w, _) in low.iter().take(cap) {
                if pairs.get(v, w)? == fv {
                    return Ok(Some(Witness::Chain { u, v, w }));
                }
            }
        }
    }
    Ok(None)
}

fn test_type5<O: BooleanOracle + ?Sized, R: Rng + ?Sized>(
    ctx: &Ctx<'_, '_, O>,
    rng: &mut R,
) -> Result<Option<Witness>, TestError> {
    let atoms = ctx.d.draw_set(ctx.sizes.t5, rng)?;
    let mut cache = HashMap::new();
    let p = ctx.locate(&atoms, &mut cache, |_| true)?;
    let closed = ctx.big.closure_mask();
    let groups = small_block_groups(&p, &closed);
    let cap = ctx.sizes.pair_cap as usize;
    let mut pairs = PairValues {
        f: ctx.f,
        cache: HashMap::new(),
    };
    for (&b, cols) in &groups {
        let Some(rows) = groups.get(&(b + 1)) else {
            continue;
        };
        let cols: Vec<usize> = cols.iter().take(cap).map(|&(c, _)| c).collect();
        let mut table = Vec::with_capacity(rows.len());
        for &(a, _) in rows {
            let mut row = Vec::with_capacity(cols.len());
            for &c in &cols {
                row.push(pairs.get(a, c)?);
            }
            table.push(row);
        }
        for i in 0..rows.len() {
            for j in 0..rows.len() {
                if i == j {
                    continue;
                }
                let c2 = (0..cols.len()).find(|&c| !table[i][c] && table[j][c]);
                let c4 = (0..cols.len()).find(|&c| table[i][c] && !table[j][c]);
                if let (Some(c2), Some(c4)) = (c2, c4) {
                    return Ok(Some(Witness::Alternating {
                        u1: rows[i].0,
                        u2: cols[c2],
                        u3: rows[j].0,
                        u4: cols[c4],
                    }));
                }
            }
        }
    }
    Ok(None)
}

/// Runs cycle-type test `kind` (1 to 5) against a prepared sketch and big-block set.
pub fn test_type<O: BooleanOracle + ?Sized, R: Rng + ?Sized>(
    kind: u8,
    f: &O,
    d: &Sampler<'_>,
    sk: &MdlSketch,
    big: &BigBlockSet,
    sizes: &MdlSizes,
    rng: &mut R,
) -> Result<Verdict, TestError> {
    let ctx = Ctx {
        f,
        d,
        sk,
        big,
        sizes,
    };
    let w = match kind {
        1 => test_type1(&ctx, rng)?,
        2 => test_type2(&ctx, rng)?,
        3 => test_type3(&ctx, rng)?,
        4 => test_type4(&ctx, rng)?,
        5 => test_type5(&ctx, rng)?,
        _ => {
            return Err(TestError::PreconditionViolated(format!(
                "no cycle type {kind}"
            )))
        }
    };
    Ok(match w {
        Some(w) => Verdict::reject(w, ctx.report()),
        None => Verdict::accept(ctx.report()),
    })
}

/// The monotone decision-list tester.
pub fn monotone_dl_tester<O: BooleanOracle + ?Sized, R: Rng + ?Sized>(
    f: &O,
    d: &Sampler<'_>,
    eps: f64,
    params: &MdlParams,
    rng: &mut R,
) -> Result<Verdict, TestError> {
    let sizes = params.sizes(f.width(), eps);
    let (sk, big) = match preprocess(f, d, &sizes, rng)? {
        Preprocessed::Accept => return Ok(Verdict::accept(d.ledger().report())),
        Preprocessed::Reject => {
            return Ok(Verdict::reject(Witness::SketchNil, d.ledger().report()))
        }
        Preprocessed::Ready(sk, big) => (sk, big),
    };
    for _ in 0..sizes.nil_probes {
        let x = d.atom(d.draw(rng)?);
        if x.is_zero() {
            continue;
        }
        if max_index(f, &sk, &big, sizes.small_limit, x)?.is_none() {
            return Ok(Verdict::reject(
                Witness::NilMaxIndex { x: x.clone() },
                d.ledger().report(),
            ));
        }
    }
    for kind in 1..=5 {
        let v = test_type(kind, f, d, &sk, &big, &sizes, rng)?;
        if !v.is_accept() {
            return Ok(v);
        }
    }
    Ok(Verdict::accept(d.ledger().report()))
}

/// Re-checks a type-5 witness: the four pair values contradict every monotone list.
pub fn verify_alternating<O: BooleanOracle + ?Sized>(
    f: &O,
    w: &Witness,
) -> Result<bool, TestError> {
    let Witness::Alternating { u1, u2, u3, u4 } = *w else {
        return Ok(false);
    };
    let n = f.width();
    let q = |a: usize, b: usize| -> Result<bool, TestError> {
        f.query(&BitString::from_indices(n, &[a, b])?)
    };
    Ok(!q(u1, u2)? && !q(u3, u4)? && q(u2, u3)? && q(u4, u1)?)
}

/// Ceiling on function queries of one [`monotone_dl_tester`] run.
pub fn mdl_query_budget(n: usize, eps: f64, params: &MdlParams) -> u64 {
    let s = params.sizes(n, eps);
    let lgn = ceil_log2(n as u64);
    let find = 3 + ceil_log2(s.pre);
    let sketch = s.pre * (5 + ceil_log2(s.pre));
    let c = s.small_limit.min(n as u64);
    let in_big = 1 + lgn + find;
    let small = c * (2 + lgn) + 1 + c * (find + 1);
    let point = find + in_big.max(small);
    let big = s.probes * find + s.rounds * s.round_draws * find;
    sketch
        + big
        + s.nil_probes * point
        + 2 * s.t1 * point
        + (s.t2p + s.t2q) * point
        + 2 * s.t3 * point
        + s.t3 * s.pair_cap
        + s.t4 * (point + 2 * s.pair_cap)
        + s.t5 * (point + s.pair_cap)
}

/// Ceiling on samples drawn by one [`monotone_dl_tester`] run.
pub fn mdl_sample_budget(n: usize, eps: f64, params: &MdlParams) -> u64 {
    let s = params.sizes(n, eps);
    s.pre
        + s.rounds * s.round_draws
        + s.nil_probes
        + 2 * s.t1
        + s.t2p
        + s.t2q
        + 2 * s.t3
        + s.t4
        + s.t5
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dl_model::{MonotoneDLRep, TruthTable};
    use crate::oracle::{FunctionOracle, QueryLedger};
    use crate::rng::SeededRng;

    fn bs(s: &str) -> BitString {
        BitString::from_bit_str(s).unwrap()
    }

    fn example() -> MonotoneDLRep {
        MonotoneDLRep::new(vec![2, 1, 3], vec![true, false, true, false]).unwrap()
    }

    #[test]
    fn find_rep_examples() {
        let f = example();
        let ledger = QueryLedger::unlimited();
        let o = FunctionOracle::new(&f, &ledger);
        let x = bs("101");
        assert_eq!(find_rep(&o, &[&x], &[&bs("010")]).unwrap(), 0);
        let units = [bs("100"), bs("010"), bs("001")];
        let refs: Vec<&BitString> = units.iter().collect();
        assert_eq!(find_rep(&o, &refs, &[]).unwrap(), 1);
        assert!(find_rep(&o, &[], &[]).is_err());
    }

    #[test]
    fn xor_has_no_consistent_sketch() {
        // f = x1 ⊕ x2 on two variables; T = {10, 01, 11}.
        let t = TruthTable::new(2, vec![false, true, true, false]).unwrap();
        let ledger = QueryLedger::unlimited();
        let o = FunctionOracle::new(&t, &ledger);
        let strings = [bs("10"), bs("01"), bs("11")];
        let refs: Vec<&BitString> = strings.iter().collect();
        assert_eq!(sketch_mdl(&o, &refs).unwrap(), None);
    }

    #[test]
    fn sketch_of_mdl_is_consistent_and_blocks_match_members() {
        let mut rng = SeededRng::new(8, 0);
        for _ in 0..200 {
            let f = MonotoneDLRep::random(10, &mut rng);
            let strings: Vec<BitString> = (0..30)
                .map(|_| BitString::from_u64(10, rng.random_range(1..1024u64)))
                .collect();
            let refs: Vec<&BitString> = strings.iter().collect();
            let ledger = QueryLedger::unlimited();
            let o = FunctionOracle::new(&f, &ledger);
            if !(refs.iter().any(|x| f.eval(x)) && refs.iter().any(|x| !f.eval(x))) {
                continue;
            }
            let sk = sketch_mdl(&o, &refs)
                .unwrap()
                .expect("monotone lists always sketch");
            assert!(sk.verify(&o).unwrap());
            for l in 1..=sk.k() {
                assert_eq!(find_block_mdl(&o, &sk, sk.s(l)).unwrap().block, l);
            }
        }
    }

    #[test]
    fn big_block_set_neighbors() {
        let b = BigBlockSet::from_members(5, &[0, 3]);
        assert_eq!(b.neighbors(), vec![1, 2, 4]);
        assert!(b.neighbors().iter().all(|&l| !b.contains(l)));
        assert_eq!(
            b.closure_mask(),
            vec![true, true, true, true, true, false, false]
        );
    }

    #[test]
    fn max_index_of_unit_vector() {
        let f = example();
        let ledger = QueryLedger::unlimited();
        let o = FunctionOracle::new(&f, &ledger);
        let strings = [bs("010"), bs("100"), bs("001")];
        let refs: Vec<&BitString> = strings.iter().collect();
        let sk = sketch_mdl(&o, &refs).unwrap().unwrap();
        let big = BigBlockSet::empty(sk.k());
        for i in 1..=3 {
            let e = BitString::unit(i, 3).unwrap();
            assert_eq!(max_index(&o, &sk, &big, 100, &e).unwrap(), Some(i));
        }
    }

    #[test]
    fn preprocess_trivial_cases() {
        let f = example();
        let ledger = QueryLedger::unlimited();
        let o = FunctionOracle::new(&f, &ledger);
        let sizes = MdlParams::default().sizes(3, 0.5);
        let d = crate::dist::FiniteDistribution::point_mass(BitString::zeros(3));
        let s = Sampler::new(&d, &ledger);
        assert_eq!(
            preprocess(&o, &s, &sizes, &mut SeededRng::new(0, 0)).unwrap(),
            Preprocessed::Accept
        );
        let d = crate::dist::FiniteDistribution::uniform(3, vec![bs("010"), bs("011")]).unwrap();
        let s = Sampler::new(&d, &ledger);
        assert_eq!(
            preprocess(&o, &s, &sizes, &mut SeededRng::new(0, 0)).unwrap(),
            Preprocessed::Accept
        );
    }
}
