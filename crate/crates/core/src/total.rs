//! Tester for total orderings under an unknown distribution over pairs.

use std::collections::HashMap;

use rand::Rng;

use crate::bits::{ceil_count, ceil_log2, log2c};
use crate::error::TestError;
use crate::oracle::{ComparisonOracle, Orientation, PairSampler};
use crate::verdict::{Verdict, Witness};

/// Sample-size constants of the total-order tester.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TotalParams {
    /// Sketch size is `⌈c_sk·√n/ε⌉` draws from the vertex marginal.
    pub c_sk: f64,
    /// Local-cycle test draws `⌈c_lc·√n/ε⌉` edges and as many vertices.
    pub c_lc: f64,
    /// Long-cycle test draws `⌈c_long/ε⌉` edges.
    pub c_long: f64,
    /// A block is overcrowded above `⌈crowd·log n⌉` sampled vertices.
    pub crowd: f64,
}

impl Default for TotalParams {
    fn default() -> Self {
        TotalParams {
            c_sk: 8.0,
            c_lc: 8.0,
            c_long: 100.0,
            crowd: 1000.0,
        }
    }
}

impl TotalParams {
    pub fn sketch_draws(&self, n: usize, eps: f64) -> u64 {
        ceil_count(self.c_sk * (n as f64).sqrt() / eps)
    }

    pub fn local_draws(&self, n: usize, eps: f64) -> u64 {
        ceil_count(self.c_lc * (n as f64).sqrt() / eps)
    }

    pub fn long_draws(&self, eps: f64) -> u64 {
        ceil_count(self.c_long / eps)
    }

    pub fn crowd_limit(&self, n: usize) -> u64 {
        ceil_count(self.crowd * log2c(n as f64))
    }
}

/// A total ordering given by listing `[n]` from smallest to largest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TotalOrder {
    position: Vec<usize>,
}

impl TotalOrder {
    /// `order[p]` is the element at position `p`.
    pub fn from_order(order: &[usize]) -> Self {
        let mut position = vec![0; order.len()];
        for (p, &i) in order.iter().enumerate() {
            position[i - 1] = p;
        }
        TotalOrder { position }
    }

    pub fn identity(n: usize) -> Self {
        TotalOrder {
            position: (0..n).collect(),
        }
    }

    pub fn order(&self) -> Vec<usize> {
        let mut order = vec![0; self.position.len()];
        for (i, &p) in self.position.iter().enumerate() {
            order[p] = i + 1;
        }
        order
    }
}

impl Orientation for TotalOrder {
    fn n(&self) -> usize {
        self.position.len()
    }
    fn less(&self, u: usize, v: usize) -> bool {
        self.position[u - 1] < self.position[v - 1]
    }
}

/// A chain `s^(1) <σ … <σ s^(k)` of distinct sampled elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TotalSketch {
    elements: Vec<usize>,
    position: HashMap<usize, usize>,
}

impl TotalSketch {
    /// Wraps a chain without verifying it.
    pub fn from_elements(elements: Vec<usize>) -> Self {
        let position = elements
            .iter()
            .enumerate()
            .map(|(p, &u)| (u, p + 1))
            .collect();
        TotalSketch { elements, position }
    }

    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    pub fn k(&self) -> usize {
        self.elements.len()
    }

    /// `s^(i)` for `1 <= i <= k`.
    pub fn s(&self, i: usize) -> usize {
        self.elements[i - 1]
    }
}

/// Result of the sketching step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TotalSketchOutcome {
    Sketch(TotalSketch),
    Reject(Witness),
}

fn merge_sort<F>(items: &[usize], less: &mut F) -> Result<Vec<usize>, TestError>
where
    F: FnMut(usize, usize) -> Result<bool, TestError>,
{
    if items.len() <= 1 {
        return Ok(items.to_vec());
    }
    let mid = items.len() / 2;
    let a = merge_sort(&items[..mid], less)?;
    let b = merge_sort(&items[mid..], less)?;
    let mut out = Vec::with_capacity(items.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if less(b[j], a[i])? {
            out.push(b[j]);
            j += 1;
        } else {
            out.push(a[i]);
            i += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    Ok(out)
}

/// Sorts a set of elements with the comparison oracle and verifies adjacent pairs.
pub fn sketch_from_set<T: Orientation + ?Sized>(
    sigma: &ComparisonOracle<'_, T>,
    elements: &[usize],
) -> Result<TotalSketchOutcome, TestError> {
    let sorted = merge_sort(elements, &mut |u, v| sigma.compare(u, v))?;
    for w in sorted.windows(2) {
        if !sigma.compare(w[0], w[1])? {
            return Ok(TotalSketchOutcome::Reject(Witness::AdjacencyBreak {
                u: w[0],
                v: w[1],
            }));
        }
    }
    Ok(TotalSketchOutcome::Sketch(TotalSketch::from_elements(
        sorted,
    )))
}

/// Draws a sample from the vertex marginal, sorts it and checks consistency.
pub fn sketch_total<T: Orientation + ?Sized, R: Rng + ?Sized>(
    sigma: &ComparisonOracle<'_, T>,
    d: &PairSampler<'_>,
    eps: f64,
    params: &TotalParams,
    rng: &mut R,
) -> Result<TotalSketchOutcome, TestError> {
    let n = sigma.n();
    let set = d.draw_vertex_set(params.sketch_draws(n, eps), rng)?;
    sketch_from_set(sigma, &set)
}

/// Locates `u` relative to a consistent sketch: `0` below `s^(1)`, `i` when
/// `s^(i) ≤σ u <σ s^(i+1)`, and `k` at or above `s^(k)`.
pub fn find_block_total<T: Orientation + ?Sized>(
    sigma: &ComparisonOracle<'_, T>,
    sk: &TotalSketch,
    u: usize,
) -> Result<usize, TestError> {
    if let Some(&i) = sk.position.get(&u) {
        return Ok(i);
    }
    let k = sk.k();
    if k == 0 {
        return Ok(0);
    }
    if sigma.compare(u, sk.s(1))? {
        return Ok(0);
    }
    if k == 1 {
        return Ok(1);
    }
    if sigma.compare(sk.s(k), u)? {
        return Ok(k);
    }
    let (mut lower, mut upper) = (1, k);
    while upper - lower > 1 {
        let mid = (upper + lower) / 2;
        if sigma.compare(sk.s(mid), u)? {
            lower = mid;
        } else {
            upper = mid;
        }
    }
    Ok(lower)
}

struct BlockCache<'s, 'o, T: Orientation + ?Sized> {
    sigma: &'s ComparisonOracle<'o, T>,
    sk: &'s TotalSketch,
    blocks: HashMap<usize, usize>,
}

impl<T: Orientation + ?Sized> BlockCache<'_, '_, T> {
    fn block(&mut self, u: usize) -> Result<usize, TestError> {
        if let Some(&b) = self.blocks.get(&u) {
            return Ok(b);
        }
        let b = find_block_total(self.sigma, self.sk, u)?;
        self.blocks.insert(u, b);
        Ok(b)
    }
}

fn orient<T: Orientation + ?Sized>(
    sigma: &ComparisonOracle<'_, T>,
    (a, b): (usize, usize),
) -> Result<(usize, usize), TestError> {
    Ok(if sigma.compare(a, b)? { (a, b) } else { (b, a) })
}

/// Rejects when a sampled edge `u <σ v` has `block(u) > block(v)`.
pub fn test_long_cycles<T: Orientation + ?Sized, R: Rng + ?Sized>(
    sigma: &ComparisonOracle<'_, T>,
    d: &PairSampler<'_>,
    eps: f64,
    sk: &TotalSketch,
    params: &TotalParams,
    rng: &mut R,
) -> Result<Verdict, TestError> {
    let edges = d.draw_edge_set(params.long_draws(eps), rng)?;
    let mut cache = BlockCache {
        sigma,
        sk,
        blocks: HashMap::new(),
    };
    for e in edges {
        let (u, v) = orient(sigma, e)?;
        let (bu, bv) = (cache.block(u)?, cache.block(v)?);
        if bu > bv {
            let w = Witness::LongEdge {
                u,
                v,
                block_u: bu,
                block_v: bv,
            };
            return Ok(Verdict::reject(w, sigma.ledger().report()));
        }
    }
    Ok(Verdict::accept(sigma.ledger().report()))
}

/// Rejects on an overcrowded block or a directed triangle inside one block.
pub fn test_local_cycles<T: Orientation + ?Sized, R: Rng + ?Sized>(
    sigma: &ComparisonOracle<'_, T>,
    d: &PairSampler<'_>,
    eps: f64,
    sk: &TotalSketch,
    params: &TotalParams,
    rng: &mut R,
) -> Result<Verdict, TestError> {
    let n = sigma.n();
    let m = params.local_draws(n, eps);
    let edges = d.draw_edge_set(m, rng)?;
    let vertices = d.draw_vertex_set(m, rng)?;
    let mut cache = BlockCache {
        sigma,
        sk,
        blocks: HashMap::new(),
    };
    let mut by_block: HashMap<usize, Vec<usize>> = HashMap::new();
    for &w in &vertices {
        let b = cache.block(w)?;
        by_block.entry(b).or_default().push(w);
    }
    let limit = params.crowd_limit(n) as usize;
    let mut crowded: Vec<(usize, usize)> = by_block
        .iter()
        .filter(|(_, ws)| ws.len() > limit)
        .map(|(&b, ws)| (b, ws.len()))
        .collect();
    crowded.sort_unstable();
    if let Some(&(block, count)) = crowded.first() {
        return Ok(Verdict::reject(
            Witness::CrowdedBlock { block, count },
            sigma.ledger().report(),
        ));
    }
    for e in edges {
        let (u, v) = orient(sigma, e)?;
        let (bu, bv) = (cache.block(u)?, cache.block(v)?);
        if bu != bv {
            continue;
        }
        let Some(ws) = by_block.get(&bu) else {
            continue;
        };
        for &w in ws {
            if w == u || w == v {
                continue;
            }
            if sigma.compare(v, w)? && sigma.compare(w, u)? {
                let wit = Witness::Triangle { u, v, w };
                return Ok(Verdict::reject(wit, sigma.ledger().report()));
            }
        }
    }
    Ok(Verdict::accept(sigma.ledger().report()))
}

/// The full tester: sketch, then long cycles, then local cycles.
pub fn test_total_ordering<T: Orientation + ?Sized, R: Rng + ?Sized>(
    sigma: &ComparisonOracle<'_, T>,
    d: &PairSampler<'_>,
    eps: f64,
    params: &TotalParams,
    rng: &mut R,
) -> Result<Verdict, TestError> {
    let sk = match sketch_total(sigma, d, eps, params, rng)? {
        TotalSketchOutcome::Sketch(sk) => sk,
        TotalSketchOutcome::Reject(w) => return Ok(Verdict::reject(w, sigma.ledger().report())),
    };
    let long = test_long_cycles(sigma, d, eps, &sk, params, rng)?;
    if !long.is_accept() {
        return Ok(long);
    }
    test_local_cycles(sigma, d, eps, &sk, params, rng)
}

/// Re-checks a rejection witness with fresh queries.
///
/// Long edges are checked together with the sketch chain that closes the cycle.
pub fn verify_total_witness<T: Orientation + ?Sized>(
    sigma: &ComparisonOracle<'_, T>,
    sk: Option<&TotalSketch>,
    witness: &Witness,
) -> Result<bool, TestError> {
    match *witness {
        Witness::AdjacencyBreak { u, v } => Ok(!sigma.compare(u, v)?),
        Witness::Triangle { u, v, w } => {
            Ok(sigma.compare(u, v)? && sigma.compare(v, w)? && sigma.compare(w, u)?)
        }
        Witness::LongEdge {
            u,
            v,
            block_u,
            block_v,
        } => {
            let Some(sk) = sk else { return Ok(false) };
            if !(block_u > block_v && block_u >= 1 && block_v < sk.k()) || !sigma.compare(u, v)? {
                return Ok(false);
            }
            // v <σ s^(block_v+1) ≤σ … ≤σ s^(block_u) ≤σ u closes a cycle with u <σ v.
            let hi = sk.s(block_v + 1);
            let lo = sk.s(block_u);
            let v_below = v == hi || sigma.compare(v, hi)?;
            let u_above = u == lo || sigma.compare(lo, u)?;
            let mut chain = true;
            for i in block_v + 1..block_u {
                chain &= sigma.compare(sk.s(i), sk.s(i + 1))?;
            }
            Ok(v_below && u_above && chain)
        }
        Witness::CrowdedBlock { .. } => Ok(true),
        _ => Ok(false),
    }
}

/// Closed-form ceiling on comparison queries of one run of [`test_total_ordering`].
///
/// Sketch: merge sort on at most `m` elements plus adjacency checks.
/// Each block lookup costs at most `⌈log₂ m⌉ + 2` comparisons.
/// Long cycles: one orientation and two lookups per edge.
/// Local cycles: per edge one orientation and two lookups, per vertex one
/// lookup, and two comparisons per same-block vertex of an edge.
pub fn total_query_budget(n: usize, eps: f64, params: &TotalParams) -> u64 {
    let m = params.sketch_draws(n, eps);
    let lg = ceil_log2(m);
    let find = lg + 2;
    let sketch = m * lg + m;
    let long = params.long_draws(eps) * (2 * find + 1);
    let ml = params.local_draws(n, eps);
    let local = ml * (2 * find + 1) + ml * find + 2 * ml * params.crowd_limit(n);
    sketch + long + local
}

/// Samples drawn by one run of [`test_total_ordering`] (an exact count when it accepts).
pub fn total_sample_budget(n: usize, eps: f64, params: &TotalParams) -> u64 {
    params.sketch_draws(n, eps) + params.long_draws(eps) + 2 * params.local_draws(n, eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::PairDistribution;
    use crate::oracle::QueryLedger;
    use crate::rng::SeededRng;

    struct Cyclic3;
    impl Orientation for Cyclic3 {
        fn n(&self) -> usize {
            3
        }
        fn less(&self, u: usize, v: usize) -> bool {
            matches!((u, v), (1, 2) | (2, 3) | (3, 1))
        }
    }

    #[test]
    fn sketch_of_known_sample() {
        let t = TotalOrder::identity(10);
        let ledger = QueryLedger::unlimited();
        let o = ComparisonOracle::new(&t, &ledger);
        match sketch_from_set(&o, &[5, 2, 9]).unwrap() {
            TotalSketchOutcome::Sketch(sk) => assert_eq!(sk.elements(), &[2, 5, 9]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cyclic_triangle_sketch_outcomes_are_sound() {
        let t = Cyclic3;
        for perm in [
            [1, 2, 3],
            [1, 3, 2],
            [2, 1, 3],
            [2, 3, 1],
            [3, 1, 2],
            [3, 2, 1],
        ] {
            let ledger = QueryLedger::unlimited();
            let o = ComparisonOracle::new(&t, &ledger);
            match sketch_from_set(&o, &perm).unwrap() {
                TotalSketchOutcome::Reject(w) => {
                    assert!(verify_total_witness(&o, None, &w).unwrap())
                }
                TotalSketchOutcome::Sketch(sk) => {
                    for w in sk.elements().windows(2) {
                        assert!(o.compare(w[0], w[1]).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn find_block_contract_cases() {
        let t = TotalOrder::identity(10);
        let ledger = QueryLedger::unlimited();
        let o = ComparisonOracle::new(&t, &ledger);
        let sk = TotalSketch::from_elements(vec![3, 7]);
        assert_eq!(find_block_total(&o, &sk, 5).unwrap(), 1);
        assert_eq!(find_block_total(&o, &sk, 2).unwrap(), 0);
        assert_eq!(find_block_total(&o, &sk, 9).unwrap(), 2);
        assert_eq!(find_block_total(&o, &sk, 7).unwrap(), 2);
        assert_eq!(find_block_total(&o, &sk, 3).unwrap(), 1);
    }

    #[test]
    fn single_long_edge_rejects() {
        // Order 1<2<…<6 but the sampled edge is oriented against the sketch.
        struct Twisted;
        impl Orientation for Twisted {
            fn n(&self) -> usize {
                6
            }
            fn less(&self, u: usize, v: usize) -> bool {
                match (u, v) {
                    (6, 1) => true,
                    (1, 6) => false,
                    _ => u < v,
                }
            }
        }
        let t = Twisted;
        let ledger = QueryLedger::unlimited();
        let o = ComparisonOracle::new(&t, &ledger);
        let sk = TotalSketch::from_elements(vec![2, 4]);
        let d = PairDistribution::uniform(6, vec![(1, 6)]).unwrap();
        let s = PairSampler::new(&d, &ledger);
        let v = test_long_cycles(
            &o,
            &s,
            0.5,
            &sk,
            &TotalParams::default(),
            &mut SeededRng::new(0, 0),
        )
        .unwrap();
        assert_eq!(
            v.witness,
            Some(Witness::LongEdge {
                u: 6,
                v: 1,
                block_u: 2,
                block_v: 0
            })
        );
        assert!(verify_total_witness(&o, Some(&sk), v.witness.as_ref().unwrap()).unwrap());
    }

    #[test]
    fn triangle_in_one_block_rejects() {
        // 4 <σ 5 <σ 6 <σ 4 inside block 1 of the sketch (1, 9).
        struct Local;
        impl Orientation for Local {
            fn n(&self) -> usize {
                9
            }
            fn less(&self, u: usize, v: usize) -> bool {
                match (u, v) {
                    (6, 4) => true,
                    (4, 6) => false,
                    _ => u < v,
                }
            }
        }
        let t = Local;
        let ledger = QueryLedger::unlimited();
        let o = ComparisonOracle::new(&t, &ledger);
        let sk = TotalSketch::from_elements(vec![1, 9]);
        // Edge {4,5} and vertex 6 only: D has both, D* covers 4,5,6.
        let d = PairDistribution::new(9, vec![((4, 5), 0.5), ((5, 6), 0.5)]).unwrap();
        let s = PairSampler::new(&d, &ledger);
        let params = TotalParams {
            c_lc: 50.0,
            ..TotalParams::default()
        };
        let v = test_local_cycles(&o, &s, 0.5, &sk, &params, &mut SeededRng::new(1, 0)).unwrap();
        let w = v.witness.expect("rejects");
        assert!(matches!(w, Witness::Triangle { .. }));
        assert!(verify_total_witness(&o, Some(&sk), &w).unwrap());
    }
}
