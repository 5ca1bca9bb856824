//! Brute-force distances to the tested classes and exact weighted vertex covers.

use rayon::prelude::*;

use crate::bits::BitString;
use crate::dist::{FiniteDistribution, PairDistribution};
use crate::dl_model::{GeneralDLRep, MonotoneDLRep};
use crate::error::CoreError;
use crate::oracle::{BooleanFunction, Orientation};
use crate::total::TotalOrder;

pub const MAX_TOTAL_N: usize = 10;
pub const MAX_DL_N: usize = 6;
pub const MAX_COVER_VERTICES: usize = 24;
const TOL: f64 = 1e-12;

/// Exact distance, a nearest member of the class, and how many candidates were examined.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceReport<W> {
    pub distance: f64,
    pub witness: W,
    pub enumeration_size: u64,
}

/// `(u, v, w, u <σ v)` for each supported pair.
fn oriented_pairs<T: Orientation + ?Sized>(
    sigma: &T,
    d: &PairDistribution,
) -> Vec<(usize, usize, f64)> {
    d.pairs()
        .iter()
        .zip(d.weights())
        .map(|(&(u, v), &w)| {
            if sigma.less(u, v) {
                (u, v, w)
            } else {
                (v, u, w)
            }
        })
        .collect()
}

/// Minimum `D`-mass of pairs on which a total order disagrees with `σ`, by enumerating all orders.
pub fn dist_total_orderings<T: Orientation + Sync + ?Sized>(
    sigma: &T,
    d: &PairDistribution,
) -> Result<DistanceReport<TotalOrder>, CoreError> {
    let n = sigma.n();
    if n > MAX_TOTAL_N {
        return Err(CoreError::TooLarge(format!(
            "total-order enumeration needs n <= {MAX_TOTAL_N}, got {n}"
        )));
    }
    if d.n() != n {
        return Err(CoreError::WidthMismatch {
            left: n,
            right: d.n(),
        });
    }
    // before[v] lists (u, w) for supported u <σ v: placing v ahead of u costs w.
    let mut after = vec![Vec::new(); n + 1];
    for (u, v, w) in oriented_pairs(sigma, d) {
        after[u].push((v, w));
    }
    let results: Vec<(f64, Vec<usize>, u64)> = (1..=n)
        .into_par_iter()
        .map(|first| {
            let mut best = (f64::INFINITY, Vec::new(), 0u64);
            let mut placed = vec![false; n + 1];
            let mut prefix = vec![first];
            placed[first] = true;
            let cost = placement_cost(&after, &placed, first);
            enumerate_orders(n, &after, &mut placed, &mut prefix, cost, &mut best);
            best
        })
        .collect();
    let total: u64 = results.iter().map(|r| r.2).sum();
    let (distance, order, _) = results
        .into_iter()
        .fold((f64::INFINITY, Vec::new(), 0), |a, b| {
            if b.0 < a.0 - TOL {
                b
            } else {
                a
            }
        });
    Ok(DistanceReport {
        distance,
        witness: TotalOrder::from_order(&order),
        enumeration_size: total,
    })
}

/// Mass of pairs `(u, v)` with `u <σ v` where `v` is already placed and `u` is placed now.
fn placement_cost(after: &[Vec<(usize, f64)>], placed: &[bool], u: usize) -> f64 {
    after[u]
        .iter()
        .filter(|&&(v, _)| placed[v])
        .map(|&(_, w)| w)
        .sum()
}

fn enumerate_orders(
    n: usize,
    after: &[Vec<(usize, f64)>],
    placed: &mut [bool],
    prefix: &mut Vec<usize>,
    cost: f64,
    best: &mut (f64, Vec<usize>, u64),
) {
    if cost >= best.0 - TOL {
        best.2 += 1;
        return;
    }
    if prefix.len() == n {
        best.2 += 1;
        *best = (cost, prefix.clone(), best.2);
        return;
    }
    for u in 1..=n {
        if !placed[u] {
            let c = placement_cost(after, placed, u);
            placed[u] = true;
            prefix.push(u);
            enumerate_orders(n, after, placed, prefix, cost + c, best);
            prefix.pop();
            placed[u] = false;
        }
    }
}

/// The same minimum by dynamic programming over subsets of `[n]`, for `n <= 20`.
pub fn dist_total_orderings_dp<T: Orientation + ?Sized>(
    sigma: &T,
    d: &PairDistribution,
) -> Result<f64, CoreError> {
    let n = sigma.n();
    if n > 20 {
        return Err(CoreError::TooLarge(format!(
            "subset DP needs n <= 20, got {n}"
        )));
    }
    let mut after = vec![Vec::new(); n + 1];
    for (u, v, w) in oriented_pairs(sigma, d) {
        after[u].push((v, w));
    }
    let full = 1usize << n;
    let mut dp = vec![f64::INFINITY; full];
    dp[0] = 0.0;
    for s in 0..full {
        if dp[s].is_infinite() {
            continue;
        }
        for (u, succ) in after.iter().enumerate().skip(1) {
            let bit = 1 << (u - 1);
            if s & bit == 0 {
                let c: f64 = succ
                    .iter()
                    .filter(|&&(v, _)| s & (1 << (v - 1)) != 0)
                    .map(|&(_, w)| w)
                    .sum();
                let t = s | bit;
                if dp[s] + c < dp[t] {
                    dp[t] = dp[s] + c;
                }
            }
        }
    }
    Ok(dp[full - 1])
}

fn for_each_permutation(n: usize, mut visit: impl FnMut(&[usize])) {
    let mut p: Vec<usize> = (1..=n).collect();
    let mut c = vec![0usize; n];
    visit(&p);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                p.swap(0, i);
            } else {
                p.swap(c[i], i);
            }
            visit(&p);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Best `ν` for fixed firing positions: weighted majority per position.
fn best_nu(n: usize, firing: &[(usize, bool, f64)]) -> (f64, Vec<bool>) {
    let mut mass = vec![[0.0f64; 2]; n + 1];
    for &(j, v, w) in firing {
        mass[j - 1][v as usize] += w;
    }
    let nu: Vec<bool> = mass.iter().map(|m| m[1] > m[0]).collect();
    let err = mass.iter().map(|m| m[0].min(m[1])).sum();
    (err, nu)
}

fn check_small<F: BooleanFunction + ?Sized>(
    f: &F,
    d: &FiniteDistribution,
) -> Result<usize, CoreError> {
    let n = f.width();
    if n > MAX_DL_N {
        return Err(CoreError::TooLarge(format!(
            "decision-list enumeration needs n <= {MAX_DL_N}, got {n}"
        )));
    }
    if d.width() != n {
        return Err(CoreError::WidthMismatch {
            left: n,
            right: d.width(),
        });
    }
    Ok(n)
}

/// Exact distance to monotone decision lists.
pub fn dist_mdl<F: BooleanFunction + ?Sized>(
    f: &F,
    d: &FiniteDistribution,
) -> Result<DistanceReport<MonotoneDLRep>, CoreError> {
    let n = check_small(f, d)?;
    let points: Vec<(&BitString, bool, f64)> = d
        .atoms()
        .iter()
        .zip(d.weights())
        .map(|(x, &w)| (x, f.eval(x), w))
        .collect();
    let mut best: Option<(f64, Vec<usize>, Vec<bool>)> = None;
    let mut count = 0u64;
    for_each_permutation(n, |pi| {
        count += 1;
        let mut rank = vec![0; n];
        for (j, &i) in pi.iter().enumerate() {
            rank[i - 1] = j + 1;
        }
        let firing: Vec<(usize, bool, f64)> = points
            .iter()
            .map(|&(x, v, w)| {
                (
                    x.support().map(|i| rank[i - 1]).min().unwrap_or(n + 1),
                    v,
                    w,
                )
            })
            .collect();
        let (err, nu) = best_nu(n, &firing);
        if best.as_ref().is_none_or(|b| err < b.0 - TOL) {
            best = Some((err, pi.to_vec(), nu));
        }
    });
    let (distance, pi, nu) = best.expect("at least one permutation");
    Ok(DistanceReport {
        distance,
        witness: MonotoneDLRep::new(pi, nu)?,
        enumeration_size: count,
    })
}

/// Exact distance to decision lists.
pub fn dist_dl<F: BooleanFunction + ?Sized>(
    f: &F,
    d: &FiniteDistribution,
) -> Result<DistanceReport<GeneralDLRep>, CoreError> {
    let n = check_small(f, d)?;
    let points: Vec<(u64, bool, f64)> = d
        .atoms()
        .iter()
        .zip(d.weights())
        .map(|(x, &w)| (x.to_u64(), f.eval(x), w))
        .collect();
    let mut best: Option<(f64, Vec<usize>, u64, Vec<bool>)> = None;
    let mut count = 0u64;
    for_each_permutation(n, |pi| {
        for mu in 0..1u64 << n {
            count += 1;
            let firing: Vec<(usize, bool, f64)> = points
                .iter()
                .map(|&(x, v, w)| {
                    let hit = !(x ^ mu) & ((1u64 << n) - 1);
                    let j = pi
                        .iter()
                        .position(|&i| hit >> (i - 1) & 1 == 1)
                        .map_or(n + 1, |p| p + 1);
                    (j, v, w)
                })
                .collect();
            let (err, nu) = best_nu(n, &firing);
            if best.as_ref().is_none_or(|b| err < b.0 - TOL) {
                best = Some((err, pi.to_vec(), mu, nu));
            }
        }
    });
    let (distance, pi, mu, nu) = best.expect("at least one representation");
    let mu: Vec<bool> = (0..n).map(|i| mu >> i & 1 == 1).collect();
    Ok(DistanceReport {
        distance,
        witness: GeneralDLRep::new(pi, mu, nu)?,
        enumeration_size: count,
    })
}

/// A hypergraph on vertices `0..vertices`; a bipartite graph is the 2-uniform case.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypergraph {
    pub vertices: usize,
    pub edges: Vec<Vec<usize>>,
}

impl Hypergraph {
    pub fn new(vertices: usize, edges: Vec<Vec<usize>>) -> Result<Self, CoreError> {
        for e in &edges {
            if e.is_empty() || e.iter().any(|&v| v >= vertices) {
                return Err(CoreError::InvalidParameter(format!("bad edge {e:?}")));
            }
        }
        Ok(Hypergraph { vertices, edges })
    }

    fn masks(&self) -> Vec<u32> {
        self.edges
            .iter()
            .map(|e| e.iter().fold(0u32, |m, &v| m | 1 << v))
            .collect()
    }
}

/// Minimum total weight of a vertex set meeting every edge, by branching on uncovered edges.
pub fn min_vertex_cover_weight(g: &Hypergraph, weights: &[f64]) -> Result<f64, CoreError> {
    if g.vertices > MAX_COVER_VERTICES {
        return Err(CoreError::TooLarge(format!(
            "vertex cover needs at most {MAX_COVER_VERTICES} vertices"
        )));
    }
    if weights.len() != g.vertices {
        return Err(CoreError::InvalidParameter("one weight per vertex".into()));
    }
    let masks = g.masks();
    let mut best = f64::INFINITY;
    cover_branch(&masks, weights, 0, 0.0, &mut best);
    Ok(best)
}

fn cover_branch(masks: &[u32], weights: &[f64], chosen: u32, cost: f64, best: &mut f64) {
    if cost >= *best {
        return;
    }
    let Some(&e) = masks.iter().find(|&&m| m & chosen == 0) else {
        *best = cost;
        return;
    };
    let mut rest = e;
    while rest != 0 {
        let v = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        cover_branch(masks, weights, chosen | 1 << v, cost + weights[v], best);
    }
}

/// The same minimum by checking every vertex subset.
pub fn min_vertex_cover_exhaustive(g: &Hypergraph, weights: &[f64]) -> Result<f64, CoreError> {
    if g.vertices > MAX_COVER_VERTICES {
        return Err(CoreError::TooLarge(format!(
            "vertex cover needs at most {MAX_COVER_VERTICES} vertices"
        )));
    }
    let masks = g.masks();
    let mut best = f64::INFINITY;
    for s in 0u32..1 << g.vertices {
        if masks.iter().all(|&m| m & s != 0) {
            let w: f64 = (0..g.vertices)
                .filter(|&v| s >> v & 1 == 1)
                .map(|v| weights[v])
                .sum();
            best = best.min(w);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dl_model::TruthTable;

    struct Cyclic3;
    impl Orientation for Cyclic3 {
        fn n(&self) -> usize {
            3
        }
        fn less(&self, u: usize, v: usize) -> bool {
            (v + 3 - u) % 3 == 1
        }
    }

    #[test]
    fn triangle_distance_is_one_third() {
        let d = PairDistribution::uniform(3, vec![(1, 2), (2, 3), (1, 3)]).unwrap();
        let r = dist_total_orderings(&Cyclic3, &d).unwrap();
        assert!((r.distance - 1.0 / 3.0).abs() < 1e-12);
        assert!((dist_total_orderings_dp(&Cyclic3, &d).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn xor_is_quarter_from_mdl() {
        let t = TruthTable::new(2, vec![false, true, true, false]).unwrap();
        let d = FiniteDistribution::uniform(2, (0..4).map(|v| BitString::from_u64(2, v)).collect())
            .unwrap();
        assert!((dist_mdl(&t, &d).unwrap().distance - 0.25).abs() < 1e-12);
        assert!((dist_dl(&t, &d).unwrap().distance - 0.25).abs() < 1e-12);
    }

    #[test]
    fn complete_bipartite_cover() {
        let edges = (0..3)
            .flat_map(|u| (3..6).map(move |v| vec![u, v]))
            .collect();
        let g = Hypergraph::new(6, edges).unwrap();
        let w = vec![1.0 / 6.0; 6];
        assert!((min_vertex_cover_weight(&g, &w).unwrap() - 0.5).abs() < 1e-12);
        assert!((min_vertex_cover_exhaustive(&g, &w).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn trivial_covers() {
        let g = Hypergraph::new(2, vec![vec![0, 1]]).unwrap();
        assert!((min_vertex_cover_weight(&g, &[0.3, 0.5]).unwrap() - 0.3).abs() < 1e-12);
        let empty = Hypergraph::new(4, vec![]).unwrap();
        assert_eq!(min_vertex_cover_weight(&empty, &[1.0; 4]).unwrap(), 0.0);
    }

    #[test]
    fn size_refusals() {
        let g = Hypergraph::new(25, vec![]).unwrap();
        assert!(min_vertex_cover_weight(&g, &[0.0; 25]).is_err());
        let t = TotalOrder::identity(11);
        let d = PairDistribution::uniform(11, vec![(1, 2)]).unwrap();
        assert!(dist_total_orderings(&t, &d).is_err());
    }
}
