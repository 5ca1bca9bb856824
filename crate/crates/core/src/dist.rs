//! Finite-support distributions over bitstrings and over unordered index pairs.

use std::collections::HashSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Binomial;

use crate::bits::BitString;
use crate::error::CoreError;

const WEIGHT_TOLERANCE: f64 = 1e-9;

fn validate_weights(weights: &[f64]) -> Result<(), CoreError> {
    if weights.is_empty() {
        return Err(CoreError::InvalidDistribution("no atoms".into()));
    }
    if let Some(w) = weights
        .iter()
        .find(|w| !(w.is_finite() && **w > 0.0 && **w <= 1.0 + WEIGHT_TOLERANCE))
    {
        return Err(CoreError::InvalidDistribution(format!(
            "weight {w} outside (0,1]"
        )));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_TOLERANCE {
        return Err(CoreError::InvalidDistribution(format!(
            "weights sum to {total}"
        )));
    }
    Ok(())
}

/// Draws `m` independent indices from `weights` and returns the distinct ones in ascending order.
///
/// When `m` greatly exceeds the number of atoms the draw counts are generated
/// as a multinomial vector through sequential binomials, which has the same
/// distribution as `m` separate draws.
fn draw_index_set<R: Rng + ?Sized>(
    weights: &[f64],
    sampler: &WeightedIndex<f64>,
    m: u64,
    rng: &mut R,
) -> Vec<usize> {
    let k = weights.len();
    if m > 4 * k as u64 && m > 4096 {
        let mut out = Vec::new();
        let mut remaining = m;
        let mut remaining_mass = 1.0f64;
        for (i, &w) in weights.iter().enumerate() {
            if remaining == 0 {
                break;
            }
            let count = if i + 1 == k || remaining_mass <= w {
                remaining
            } else {
                let p = (w / remaining_mass).clamp(0.0, 1.0);
                Binomial::new(remaining, p)
                    .map(|b| b.sample(rng))
                    .unwrap_or(remaining)
            };
            if count > 0 {
                out.push(i);
            }
            remaining -= count;
            remaining_mass -= w;
        }
        out
    } else {
        let mut out: Vec<usize> = (0..m).map(|_| sampler.sample(rng)).collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// An explicit distribution over `{0,1}^n` with finitely many atoms.
#[derive(Clone, Debug)]
pub struct FiniteDistribution {
    width: usize,
    atoms: Vec<BitString>,
    weights: Vec<f64>,
    sampler: WeightedIndex<f64>,
}

impl FiniteDistribution {
    pub fn new(width: usize, atoms: Vec<(BitString, f64)>) -> Result<Self, CoreError> {
        let (atoms, weights): (Vec<BitString>, Vec<f64>) = atoms.into_iter().unzip();
        validate_weights(&weights)?;
        if let Some(x) = atoms.iter().find(|x| x.width() != width) {
            return Err(CoreError::WidthMismatch {
                left: width,
                right: x.width(),
            });
        }
        let mut seen = HashSet::with_capacity(atoms.len());
        if atoms.iter().any(|x| !seen.insert(x)) {
            return Err(CoreError::InvalidDistribution("duplicate atom".into()));
        }
        let sampler = WeightedIndex::new(&weights)
            .map_err(|e| CoreError::InvalidDistribution(e.to_string()))?;
        Ok(FiniteDistribution {
            width,
            atoms,
            weights,
            sampler,
        })
    }

    /// Uniform distribution over distinct atoms.
    pub fn uniform(width: usize, atoms: Vec<BitString>) -> Result<Self, CoreError> {
        let k = atoms.len();
        if k == 0 {
            return Err(CoreError::InvalidDistribution("no atoms".into()));
        }
        let w = 1.0 / k as f64;
        Self::new(width, atoms.into_iter().map(|x| (x, w)).collect())
    }

    /// Builds a distribution from unnormalized positive weights.
    pub fn normalized(width: usize, atoms: Vec<(BitString, f64)>) -> Result<Self, CoreError> {
        let total: f64 = atoms.iter().map(|(_, w)| *w).sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(CoreError::InvalidDistribution(
                "total weight not positive".into(),
            ));
        }
        Self::new(
            width,
            atoms.into_iter().map(|(x, w)| (x, w / total)).collect(),
        )
    }

    pub fn point_mass(x: BitString) -> Self {
        let width = x.width();
        Self::new(width, vec![(x, 1.0)]).expect("point mass is valid")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[BitString] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atom(&self, i: usize) -> &BitString {
        &self.atoms[i]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// `D(x)`, zero outside the support.
    pub fn probability(&self, x: &BitString) -> f64 {
        self.atoms
            .iter()
            .position(|a| a == x)
            .map(|i| self.weights[i])
            .unwrap_or(0.0)
    }

    /// Index of one atom drawn with probability equal to its weight.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.sampler.sample(rng)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &BitString {
        &self.atoms[self.sample_index(rng)]
    }

    /// Distinct atom indices among `m` independent draws, ascending.
    pub fn sample_index_set<R: Rng + ?Sized>(&self, m: u64, rng: &mut R) -> Vec<usize> {
        draw_index_set(&self.weights, &self.sampler, m, rng)
    }

    /// `D ⊕ r`: atom `x` with weight `w` becomes atom `x ⊕ r` with weight `w`.
    pub fn xor_shift(&self, r: &BitString) -> Result<FiniteDistribution, CoreError> {
        if r.width() != self.width {
            return Err(CoreError::WidthMismatch {
                left: self.width,
                right: r.width(),
            });
        }
        Ok(FiniteDistribution {
            width: self.width,
            atoms: self.atoms.iter().map(|x| x ^ r).collect(),
            weights: self.weights.clone(),
            sampler: self.sampler.clone(),
        })
    }
}

/// A distribution over unordered pairs `{u,v}` of distinct indices in `[n]`.
#[derive(Clone, Debug)]
pub struct PairDistribution {
    n: usize,
    pairs: Vec<(usize, usize)>,
    weights: Vec<f64>,
    sampler: WeightedIndex<f64>,
}

impl PairDistribution {
    /// Pairs may be given in either order; they are stored with `u < v`.
    pub fn new(n: usize, atoms: Vec<((usize, usize), f64)>) -> Result<Self, CoreError> {
        let mut pairs = Vec::with_capacity(atoms.len());
        let mut weights = Vec::with_capacity(atoms.len());
        let mut seen = HashSet::new();
        for ((a, b), w) in atoms {
            if a == b {
                return Err(CoreError::InvalidDistribution(format!(
                    "pair {{{a},{a}}} is not a pair"
                )));
            }
            let (u, v) = (a.min(b), a.max(b));
            if u == 0 || v > n {
                return Err(CoreError::IndexOutOfRange {
                    index: if u == 0 { u } else { v },
                    width: n,
                });
            }
            if !seen.insert((u, v)) {
                return Err(CoreError::InvalidDistribution(format!(
                    "duplicate pair {{{u},{v}}}"
                )));
            }
            pairs.push((u, v));
            weights.push(w);
        }
        validate_weights(&weights)?;
        let sampler = WeightedIndex::new(&weights)
            .map_err(|e| CoreError::InvalidDistribution(e.to_string()))?;
        Ok(PairDistribution {
            n,
            pairs,
            weights,
            sampler,
        })
    }

    pub fn uniform(n: usize, pairs: Vec<(usize, usize)>) -> Result<Self, CoreError> {
        let k = pairs.len().max(1);
        let w = 1.0 / k as f64;
        Self::new(n, pairs.into_iter().map(|p| (p, w)).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `D*(i) = ½ Σ_j D({i,j})`, indexed by `i - 1`.
    pub fn vertex_marginal(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n];
        for (&(u, v), &w) in self.pairs.iter().zip(&self.weights) {
            m[u - 1] += w / 2.0;
            m[v - 1] += w / 2.0;
        }
        m
    }

    pub fn sample_edge_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.sampler.sample(rng)
    }

    pub fn sample_edge<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        self.pairs[self.sample_edge_index(rng)]
    }

    /// A draw from `D*`: an edge from `D`, then one endpoint uniformly.
    pub fn sample_vertex<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let (u, v) = self.sample_edge(rng);
        if rng.random_bool(0.5) {
            u
        } else {
            v
        }
    }

    /// Distinct edge indices among `m` independent draws, ascending.
    pub fn sample_edge_set<R: Rng + ?Sized>(&self, m: u64, rng: &mut R) -> Vec<usize> {
        draw_index_set(&self.weights, &self.sampler, m, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn bs(s: &str) -> BitString {
        BitString::from_bit_str(s).unwrap()
    }

    #[test]
    fn validation() {
        assert!(FiniteDistribution::new(2, vec![(bs("00"), 0.5), (bs("11"), 0.4)]).is_err());
        assert!(FiniteDistribution::new(2, vec![(bs("00"), 0.5), (bs("00"), 0.5)]).is_err());
        assert!(FiniteDistribution::new(3, vec![(bs("00"), 1.0)]).is_err());
        assert!(PairDistribution::new(3, vec![((1, 1), 1.0)]).is_err());
        assert!(PairDistribution::new(3, vec![((1, 4), 1.0)]).is_err());
        assert!(PairDistribution::new(3, vec![((1, 2), 0.5), ((2, 1), 0.5)]).is_err());
    }

    #[test]
    fn point_mass_always_returns_atom() {
        let d = FiniteDistribution::point_mass(bs("0110"));
        let mut rng = SeededRng::new(1, 0);
        for _ in 0..100 {
            assert_eq!(d.sample(&mut rng), &bs("0110"));
        }
    }

    #[test]
    fn uniform_two_atoms_frequency() {
        let d = FiniteDistribution::uniform(2, vec![bs("00"), bs("11")]).unwrap();
        let mut rng = SeededRng::new(11, 0);
        let hits = (0..100_000)
            .filter(|_| d.sample(&mut rng) == &bs("00"))
            .count();
        let freq = hits as f64 / 100_000.0;
        assert!((freq - 0.5).abs() < 0.01, "frequency {freq}");
    }

    #[test]
    fn xor_shift_examples() {
        let d = FiniteDistribution::point_mass(bs("0101"));
        let s = d.xor_shift(&bs("1111")).unwrap();
        assert_eq!(s.atoms(), &[bs("1010")]);
        let back = s.xor_shift(&bs("1111")).unwrap();
        assert_eq!(back.atoms(), d.atoms());
        let id = d.xor_shift(&BitString::zeros(4)).unwrap();
        assert_eq!(id.atoms(), d.atoms());
        assert!(d.xor_shift(&BitString::zeros(3)).is_err());
    }

    #[test]
    fn vertex_marginal_examples() {
        let d = PairDistribution::uniform(3, vec![(1, 2)]).unwrap();
        assert_eq!(d.vertex_marginal(), vec![0.5, 0.5, 0.0]);
        let d = PairDistribution::uniform(3, vec![(1, 2), (1, 3)]).unwrap();
        assert_eq!(d.vertex_marginal(), vec![0.5, 0.25, 0.25]);
    }

    #[test]
    fn endpoint_sampler_matches_marginal() {
        let d =
            PairDistribution::new(4, vec![((1, 2), 0.5), ((2, 3), 0.3), ((1, 4), 0.2)]).unwrap();
        let marginal = d.vertex_marginal();
        assert!((marginal.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mut rng = SeededRng::new(5, 1);
        let trials = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..trials {
            counts[d.sample_vertex(&mut rng) - 1] += 1;
        }
        for (c, p) in counts.iter().zip(&marginal) {
            let sd = (p * (1.0 - p) / trials as f64).sqrt();
            assert!((*c as f64 / trials as f64 - p).abs() <= 3.0 * sd + 1e-12);
        }
    }

    #[test]
    fn set_draws_are_sorted_distinct_and_in_support() {
        let atoms: Vec<BitString> = (0..16u64).map(|v| BitString::from_u64(4, v)).collect();
        let d = FiniteDistribution::uniform(4, atoms).unwrap();
        let mut rng = SeededRng::new(3, 0);
        let small = d.sample_index_set(10, &mut rng);
        assert!(small.windows(2).all(|w| w[0] < w[1]));
        let big = d.sample_index_set(1_000_000, &mut rng);
        assert_eq!(big, (0..16).collect::<Vec<_>>());
    }

    #[test]
    fn multinomial_path_matches_direct_inclusion_rates() {
        // Inclusion probability of an atom of weight p in m draws is 1-(1-p)^m.
        let mut atoms = vec![(BitString::from_u64(8, 0), 1.0 - 1e-4)];
        atoms.push((BitString::from_u64(8, 1), 1e-4));
        let d = FiniteDistribution::new(8, atoms).unwrap();
        let mut rng = SeededRng::new(9, 0);
        let m = 10_000u64;
        let trials = 2000;
        let hits = (0..trials)
            .filter(|_| d.sample_index_set(m, &mut rng).contains(&1))
            .count();
        let expect = 1.0 - (1.0f64 - 1e-4).powi(m as i32);
        let rate = hits as f64 / trials as f64;
        let sd = (expect * (1.0 - expect) / trials as f64).sqrt();
        assert!(
            (rate - expect).abs() < 4.0 * sd,
            "rate {rate} expect {expect}"
        );
    }
}
