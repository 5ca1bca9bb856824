//! Tester for general decision lists, by reduction to the monotone tester.

use std::cell::RefCell;
use std::collections::HashMap;

use rand::Rng;

use crate::bits::{ceil_count, ceil_log2, log2c, BitString};
use crate::error::TestError;
use crate::mdl::{
    extract_intervals, mdl_query_budget, mdl_sample_budget, monotone_dl_tester, MdlParams,
};
use crate::oracle::{BooleanOracle, Sampler};
use crate::verdict::{Verdict, Witness};

/// Constants of the general tester. Every count is rounded up.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DlParams {
    pub mdl: MdlParams,
    /// Independent runs in the amplified monotone tester; `None` means `6·log n`.
    pub t_amplify: Option<u64>,
    /// Outer rounds `c_rounds/ε`.
    pub c_rounds: f64,
    /// Checks per round `c_reps·log(n/ε)`.
    pub c_reps: f64,
    /// A round accepts after `c_accept·log(n/ε)` accepting checks.
    pub c_accept: f64,
    /// Distance-estimation draws `c_est·log n/ε`.
    pub c_est: f64,
    /// Estimation rejects at `c_est_reject·log n` disagreements.
    pub c_est_reject: f64,
}

impl Default for DlParams {
    fn default() -> Self {
        DlParams {
            mdl: MdlParams::default(),
            t_amplify: None,
            c_rounds: 100.0,
            c_reps: 100.0,
            c_accept: 1.0,
            c_est: 10.0,
            c_est_reject: 2.0,
        }
    }
}

impl DlParams {
    pub fn amplify_runs(&self, n: usize) -> u64 {
        self.t_amplify
            .unwrap_or_else(|| ceil_count(6.0 * log2c(n as f64)))
            .max(1)
    }

    pub fn rounds(&self, eps: f64) -> u64 {
        ceil_count(self.c_rounds / eps)
    }

    pub fn reps(&self, n: usize, eps: f64) -> u64 {
        ceil_count(self.c_reps * log2c(n as f64 / eps))
    }

    pub fn accept_threshold(&self, n: usize, eps: f64) -> u64 {
        ceil_count(self.c_accept * log2c(n as f64 / eps))
    }

    pub fn est_draws(&self, n: usize, eps: f64) -> u64 {
        ceil_count(self.c_est * log2c(n as f64) / eps)
    }

    pub fn est_reject(&self, n: usize) -> u64 {
        ceil_count(self.c_est_reject * log2c(n as f64))
    }
}

/// `x ↦ f(x ⊕ shift)`.
pub struct ShiftedOracle<O> {
    inner: O,
    shift: BitString,
}

impl<O: BooleanOracle> ShiftedOracle<O> {
    pub fn new(inner: O, shift: BitString) -> Self {
        ShiftedOracle { inner, shift }
    }
}

impl<O: BooleanOracle> BooleanOracle for ShiftedOracle<O> {
    fn width(&self) -> usize {
        self.inner.width()
    }

    fn query(&self, x: &BitString) -> Result<bool, TestError> {
        self.inner.query(&x.try_xor(&self.shift)?)
    }
}

/// Passes queries through and remembers each distinct string with its answer, in first-query order.
pub struct RecordingOracle<O> {
    inner: O,
    seen: RefCell<HashMap<BitString, bool>>,
    order: RefCell<Vec<BitString>>,
}

impl<O: BooleanOracle> RecordingOracle<O> {
    pub fn new(inner: O) -> Self {
        RecordingOracle {
            inner,
            seen: RefCell::new(HashMap::new()),
            order: RefCell::new(Vec::new()),
        }
    }

    /// Recorded `(string, value)` pairs in first-query order.
    pub fn transcript(&self) -> Vec<(BitString, bool)> {
        let seen = self.seen.borrow();
        self.order
            .borrow()
            .iter()
            .map(|x| (x.clone(), seen[x]))
            .collect()
    }
}

impl<O: BooleanOracle> BooleanOracle for RecordingOracle<O> {
    fn width(&self) -> usize {
        self.inner.width()
    }

    fn query(&self, x: &BitString) -> Result<bool, TestError> {
        let v = self.inner.query(x)?;
        if self.seen.borrow_mut().insert(x.clone(), v).is_none() {
            self.order.borrow_mut().push(x.clone());
        }
        Ok(v)
    }
}

/// Rewrites `g` to `b` on every `b̄`-string that does not dominate `pivot`.
///
/// `g(pivot)` must equal `b`. Each evaluation costs at most two queries of `g`.
pub struct HybridOracle<O> {
    g: O,
    pivot: BitString,
    b: bool,
}

impl<O: BooleanOracle> HybridOracle<O> {
    pub fn new(g: O, pivot: BitString, b: bool) -> Self {
        HybridOracle { g, pivot, b }
    }

    /// `(g(x), h(x))`.
    pub fn both(&self, x: &BitString) -> Result<(bool, bool), TestError> {
        let gx = self.g.query(x)?;
        if gx == self.b {
            return Ok((gx, gx));
        }
        let dominates = self.g.query(&x.try_or(&self.pivot)?)? == gx;
        Ok((gx, if dominates { gx } else { self.b }))
    }
}

impl<O: BooleanOracle> BooleanOracle for HybridOracle<O> {
    fn width(&self) -> usize {
        self.g.width()
    }

    fn query(&self, x: &BitString) -> Result<bool, TestError> {
        Ok(self.both(x)?.1)
    }
}

/// Majority vote over `t` independent runs of the monotone tester; ties reject.
///
/// Stops as soon as the majority is decided.
pub fn monotone_dl_amplified<O: BooleanOracle + ?Sized, R: Rng + ?Sized>(
    f: &O,
    d: &Sampler<'_>,
    eps: f64,
    params: &MdlParams,
    t: u64,
    rng: &mut R,
) -> Result<Verdict, TestError> {
    let (mut accepts, mut rejects) = (0u64, 0u64);
    while 2 * accepts <= t && 2 * rejects < t {
        if monotone_dl_tester(f, d, eps, params, rng)?.is_accept() {
            accepts += 1;
        } else {
            rejects += 1;
        }
    }
    let report = d.ledger().report();
    Ok(if 2 * accepts > t {
        Verdict::accept(report)
    } else {
        Verdict::reject(
            Witness::Majority {
                rejects: rejects as usize,
                runs: (accepts + rejects) as usize,
            },
            report,
        )
    })
}

/// Queries needed by [`index_search`] in the worst case.
pub fn index_search_bound(n: usize) -> u64 {
    4 * ceil_log2(n as u64) + 6
}

/// Finds `i ∈ supp(y ⊕ r)` with `f(r ⊕ e_i) ≠ f(r)`, or `None`.
pub fn index_search<O: BooleanOracle + ?Sized>(
    f: &O,
    r: &BitString,
    y: &BitString,
) -> Result<Option<usize>, TestError> {
    let b = f.query(r)?;
    let fy = f.query(y)?;
    if b == fy {
        return Err(TestError::PreconditionViolated(
            "index_search needs f(r) != f(y)".into(),
        ));
    }
    index_search_known(f, r, b, y)
}

/// [`index_search`] with `f(r) = b` already known and `f(y) = b̄` assumed.
pub fn index_search_known<O: BooleanOracle + ?Sized>(
    f: &O,
    r: &BitString,
    b: bool,
    y: &BitString,
) -> Result<Option<usize>, TestError> {
    // g(T) = f(r ⊕ Σ_{i∈T} e_i).
    let g = |t: &[usize]| -> Result<bool, TestError> {
        let mut q = r.clone();
        for &i in t {
            q.flip(i);
        }
        f.query(&q)
    };
    let t0 = y.try_xor(r)?.support_vec();
    if t0.is_empty() {
        return Ok(None);
    }
    // Removed halves, with their value when known.
    let mut gaps: Vec<(Vec<usize>, Option<bool>)> = Vec::new();
    let mut cur = t0;
    loop {
        if cur.len() == 1 {
            return Ok(Some(cur[0]));
        }
        let h = cur.len().div_ceil(2);
        let (left, right) = (cur[..h].to_vec(), cur[h..].to_vec());
        if g(&left)? != b {
            gaps.push((right, None));
            cur = left;
        } else if g(&right)? != b {
            gaps.push((left, Some(b)));
            cur = right;
        } else {
            break;
        }
    }
    let mut star = None;
    for (t, known) in gaps {
        let v = match known {
            Some(v) => v,
            None => g(&t)?,
        };
        if v != b {
            star = Some(t);
            break;
        }
    }
    let Some(mut cur) = star else { return Ok(None) };
    while cur.len() > 1 {
        let h = cur.len().div_ceil(2);
        if g(&cur[..h])? != b {
            cur.truncate(h);
        } else if g(&cur[h..])? != b {
            cur.drain(..h);
        } else {
            return Ok(None);
        }
    }
    Ok(Some(cur[0]))
}

/// Estimates the distance between `g = f(· ⊕ z)` and its hybrid, then tests the hybrid for monotonicity.
pub fn test_dl<O: BooleanOracle + ?Sized, R: Rng + ?Sized>(
    f: &O,
    d: &Sampler<'_>,
    eps: f64,
    r: &BitString,
    z: &BitString,
    params: &DlParams,
    rng: &mut R,
) -> Result<Verdict, TestError> {
    let b = f.query(r)?;
    test_dl_known(f, d, eps, r, b, z, params, rng)
}

#[allow(clippy::too_many_arguments)]
fn test_dl_known<O: BooleanOracle + ?Sized, R: Rng + ?Sized>(
    f: &O,
    d: &Sampler<'_>,
    eps: f64,
    r: &BitString,
    b: bool,
    z: &BitString,
    params: &DlParams,
    rng: &mut R,
) -> Result<Verdict, TestError> {
    let n = f.width();
    let dz = d.dist().xor_shift(z)?;
    let sz = Sampler::new(&dz, d.ledger());
    let h = HybridOracle::new(ShiftedOracle::new(f, z.clone()), r.try_xor(z)?, b);
    let threshold = params.est_reject(n);
    let mut count = 0u64;
    for _ in 0..params.est_draws(n, eps) {
        let (gx, hx) = h.both(sz.atom(sz.draw(rng)?))?;
        if gx != hx {
            count += 1;
            if count >= threshold {
                return Ok(Verdict::reject(
                    Witness::HybridDistance { count, threshold },
                    d.ledger().report(),
                ));
            }
        }
    }
    monotone_dl_amplified(&h, &sz, eps / 2.0, &params.mdl, params.amplify_runs(n), rng)
}

/// One default-string check for a fixed candidate `r`.
pub fn check_dl<O: BooleanOracle + ?Sized, R: Rng + ?Sized>(
    f: &O,
    d: &Sampler<'_>,
    eps: f64,
    r: &BitString,
    params: &DlParams,
    rng: &mut R,
) -> Result<Verdict, TestError> {
    let n = f.width();
    let ledger = d.ledger();
    let b = f.query(r)?;
    let dr = d.dist().xor_shift(r)?;
    let sr = Sampler::new(&dr, ledger);
    let g = ShiftedOracle::new(f, r.clone());
    let rec = RecordingOracle::new(&g);
    let first = monotone_dl_amplified(&rec, &sr, eps, &params.mdl, params.amplify_runs(n), rng)?;
    if first.is_accept() {
        return Ok(first);
    }
    let transcript: Vec<(BitString, bool)> = rec
        .transcript()
        .into_iter()
        .filter(|(x, _)| !x.is_zero())
        .collect();
    let items: Vec<(&BitString, bool)> = transcript.iter().map(|(x, v)| (x, *v)).collect();
    let ex = extract_intervals(&g, &items)?;
    let Some(&x_star) = ex.order.iter().rev().find(|&&p| items[p].1 != b) else {
        return Ok(Verdict::reject(Witness::CheckExhausted, ledger.report()));
    };
    let v = test_dl_known(f, d, eps, r, b, &items[x_star].0.try_xor(r)?, params, rng)?;
    if v.is_accept() {
        return Ok(v);
    }
    let last_interval = |value: bool| ex.intervals.iter().rev().find(|iv| iv.2 == value).copied();
    let a_set: Vec<&BitString> = match last_interval(!b) {
        Some((s, e, _)) => ex.order[s..e].iter().map(|&p| items[p].0).collect(),
        None => Vec::new(),
    };
    let b_set: Vec<&BitString> = match last_interval(b) {
        Some((s, e, _)) => ex.order[s..e].iter().map(|&p| items[p].0).collect(),
        None => Vec::new(),
    };
    let mut found = Vec::with_capacity(a_set.len());
    for x in &a_set {
        found.push((x, index_search_known(f, r, b, &x.try_xor(r)?)?));
    }
    if let Some((z, _)) = found.iter().find(|(_, i)| i.is_none()) {
        return test_dl_known(f, d, eps, r, b, &z.try_xor(r)?, params, rng);
    }
    let hit = found
        .iter()
        .filter_map(|&(_, i)| i)
        .find(|&i| b_set.iter().any(|y| y.get(i)));
    match hit {
        Some(i) => {
            let mut ri = r.clone();
            ri.flip(i);
            test_dl_known(f, d, eps, r, b, &ri, params, rng)
        }
        None => Ok(Verdict::reject(Witness::CheckExhausted, ledger.report())),
    }
}

/// The decision-list tester.
///
/// A round stops early once its outcome can no longer change.
pub fn decision_list_tester<O: BooleanOracle + ?Sized, R: Rng + ?Sized>(
    f: &O,
    d: &Sampler<'_>,
    eps: f64,
    params: &DlParams,
    rng: &mut R,
) -> Result<Verdict, TestError> {
    let n = f.width();
    let rounds = params.rounds(eps);
    let reps = params.reps(n, eps);
    let need = params.accept_threshold(n, eps);
    for _ in 0..rounds {
        let r = d.atom(d.draw(rng)?).clone();
        let mut c = 0u64;
        for done in 0..reps {
            if c + (reps - done) < need {
                break;
            }
            if check_dl(f, d, eps, &r, params, rng)?.is_accept() {
                c += 1;
                if c >= need {
                    return Ok(Verdict::accept(d.ledger().report()));
                }
            }
        }
    }
    Ok(Verdict::reject(
        Witness::NoGoodRound { rounds },
        d.ledger().report(),
    ))
}

fn sketch_replay_bound(m: u64) -> u64 {
    m * (3 + ceil_log2(m.max(1)))
}

fn amplified_query_budget(n: usize, eps: f64, params: &DlParams) -> u64 {
    params.amplify_runs(n) * mdl_query_budget(n, eps, &params.mdl)
}

fn test_dl_budget(n: usize, eps: f64, params: &DlParams) -> (u64, u64) {
    let draws = params.est_draws(n, eps);
    let t = params.amplify_runs(n);
    let q = 2 * draws + 2 * t * mdl_query_budget(n, eps / 2.0, &params.mdl);
    let s = draws + t * mdl_sample_budget(n, eps / 2.0, &params.mdl);
    (q, s)
}

/// Ceiling on `(queries, samples)` of one [`check_dl`] call.
pub fn check_dl_budget(n: usize, eps: f64, params: &DlParams) -> (u64, u64) {
    let first = amplified_query_budget(n, eps, params);
    let (tq, ts) = test_dl_budget(n, eps, params);
    let q = 1 + first + sketch_replay_bound(first) + first * index_search_bound(n) + 2 * tq;
    let s = params.amplify_runs(n) * mdl_sample_budget(n, eps, &params.mdl) + 2 * ts;
    (q, s)
}

/// Ceiling on `(queries, samples)` of one [`decision_list_tester`] run.
pub fn dl_budget(n: usize, eps: f64, params: &DlParams) -> (u64, u64) {
    let (q, s) = check_dl_budget(n, eps, params);
    let rounds = params.rounds(eps);
    let calls = rounds * params.reps(n, eps);
    (calls * q, rounds + calls * s)
}
