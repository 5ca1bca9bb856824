//! Monte-Carlo collision experiments for the bipartite and hypergraph birthday bounds.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::exact::{min_vertex_cover_weight, Hypergraph, MAX_COVER_VERTICES};
use crate::rng::SeededRng;
use crate::stats::{wilson, Z_ONE_SIDED_99};

/// How the cover-weight lower bound `ε` of an experiment was obtained.
#[derive(Clone, Debug, PartialEq)]
pub enum Certificate {
    /// Computed by exhaustive vertex-cover search.
    Exact(f64),
    /// Supplied with a written argument, for graphs too large to search.
    Analytic { eps: f64, justification: String },
}

impl Certificate {
    pub fn eps(&self) -> f64 {
        match self {
            Certificate::Exact(e) => *e,
            Certificate::Analytic { eps, .. } => *eps,
        }
    }
}

fn weighted(weights: &[f64]) -> Result<WeightedIndex<f64>, CoreError> {
    WeightedIndex::new(weights).map_err(|e| CoreError::InvalidDistribution(e.to_string()))
}

/// `G = (U, V, E)` with `μ` on `U ∪ {#}` and `ν` on `V ∪ {#}`; the last weight of each is `#`.
#[derive(Clone, Debug)]
pub struct BipartiteExperiment {
    pub left: usize,
    pub right: usize,
    pub edges: Vec<(usize, usize)>,
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
    pub m: u64,
    pub m_prime: u64,
}

impl BipartiteExperiment {
    pub fn new(
        left: usize,
        right: usize,
        edges: Vec<(usize, usize)>,
        mu: Vec<f64>,
        nu: Vec<f64>,
        m: u64,
        m_prime: u64,
    ) -> Result<Self, CoreError> {
        if mu.len() != left + 1 || nu.len() != right + 1 {
            return Err(CoreError::InvalidParameter(
                "mu and nu need one extra weight for #".into(),
            ));
        }
        if edges.iter().any(|&(u, v)| u >= left || v >= right) {
            return Err(CoreError::InvalidParameter(
                "edge endpoint out of range".into(),
            ));
        }
        weighted(&mu)?;
        weighted(&nu)?;
        Ok(BipartiteExperiment {
            left,
            right,
            edges,
            mu,
            nu,
            m,
            m_prime,
        })
    }

    /// Minimum `μ(C₁) + ν(C₂)` over vertex covers.
    pub fn certify(&self) -> Result<Certificate, CoreError> {
        if self.left + self.right > MAX_COVER_VERTICES {
            return Err(CoreError::TooLarge(
                "graph too large for exact certification".into(),
            ));
        }
        let g = Hypergraph::new(
            self.left + self.right,
            self.edges
                .iter()
                .map(|&(u, v)| vec![u, self.left + v])
                .collect(),
        )?;
        let w: Vec<f64> = self.mu[..self.left]
            .iter()
            .chain(&self.nu[..self.right])
            .copied()
            .collect();
        Ok(Certificate::Exact(min_vertex_cover_weight(&g, &w)?))
    }

    /// `m·m′ ≥ 100|U|/ε²` and `m, m′ ≥ 100/ε`.
    pub fn in_regime(&self, eps: f64) -> bool {
        let (m, mp) = (self.m as f64, self.m_prime as f64);
        eps > 0.0 && m * mp >= 100.0 * self.left as f64 / (eps * eps) && m.min(mp) >= 100.0 / eps
    }

    fn trial<R: Rng + ?Sized>(
        &self,
        mu: &WeightedIndex<f64>,
        nu: &WeightedIndex<f64>,
        rng: &mut R,
    ) -> bool {
        let mut in_s = vec![false; self.left + 1];
        for _ in 0..self.m {
            in_s[mu.sample(rng)] = true;
        }
        let mut in_t = vec![false; self.right + 1];
        for _ in 0..self.m_prime {
            in_t[nu.sample(rng)] = true;
        }
        self.edges.iter().any(|&(u, v)| in_s[u] && in_t[v])
    }
}

/// A `k`-uniform hypergraph with `μ` on `V ∪ {#}`; the last weight is `#`.
#[derive(Clone, Debug)]
pub struct HypergraphExperiment {
    pub graph: Hypergraph,
    pub k: usize,
    pub mu: Vec<f64>,
    pub m: u64,
}

impl HypergraphExperiment {
    pub fn new(graph: Hypergraph, mu: Vec<f64>, m: u64) -> Result<Self, CoreError> {
        if mu.len() != graph.vertices + 1 {
            return Err(CoreError::InvalidParameter(
                "mu needs one extra weight for #".into(),
            ));
        }
        let k = graph.edges.first().map_or(0, |e| e.len());
        if graph.edges.iter().any(|e| e.len() != k) {
            return Err(CoreError::InvalidParameter(
                "hypergraph must be uniform".into(),
            ));
        }
        weighted(&mu)?;
        Ok(HypergraphExperiment { graph, k, mu, m })
    }

    pub fn certify(&self) -> Result<Certificate, CoreError> {
        Ok(Certificate::Exact(min_vertex_cover_weight(
            &self.graph,
            &self.mu[..self.graph.vertices],
        )?))
    }

    /// `m ≥ 10k²|V|^{(k−1)/k}/ε`.
    pub fn in_regime(&self, eps: f64) -> bool {
        let k = self.k as f64;
        eps > 0.0
            && self.m as f64
                >= 10.0 * k * k * (self.graph.vertices as f64).powf((k - 1.0) / k) / eps
    }

    fn trial<R: Rng + ?Sized>(&self, mu: &WeightedIndex<f64>, rng: &mut R) -> bool {
        let mut in_s = vec![false; self.graph.vertices + 1];
        for _ in 0..self.m {
            in_s[mu.sample(rng)] = true;
        }
        self.graph.edges.iter().any(|e| e.iter().all(|&v| in_s[v]))
    }
}

fn frequency(trials: u64, seed: u64, run: impl Fn(&mut SeededRng) -> bool + Sync) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    let hits = (0..trials)
        .into_par_iter()
        .filter(|&t| run(&mut SeededRng::new(seed, t)))
        .count();
    hits as f64 / trials as f64
}

/// Fraction of trials in which the two samples contain both endpoints of an edge.
pub fn run_bipartite_birthday(
    exp: &BipartiteExperiment,
    trials: u64,
    seed: u64,
) -> Result<f64, CoreError> {
    let (mu, nu) = (weighted(&exp.mu)?, weighted(&exp.nu)?);
    Ok(frequency(trials, seed, |rng| exp.trial(&mu, &nu, rng)))
}

/// Fraction of trials in which the sample contains every vertex of some edge.
pub fn run_hypergraph_birthday(
    exp: &HypergraphExperiment,
    trials: u64,
    seed: u64,
) -> Result<f64, CoreError> {
    let mu = weighted(&exp.mu)?;
    Ok(frequency(trials, seed, |rng| exp.trial(&mu, rng)))
}

/// Variants of the classical collision event.
#[derive(Clone, Debug, PartialEq)]
pub enum ClassicalVariant {
    /// `p` over `[n+1]`; event: some `i ≤ n` is drawn in both samples of sizes `m` and `m_prime`.
    Bipartite { p: Vec<f64>, m: u64, m_prime: u64 },
    /// `p` over `[n+1]`, each point split into `k` equally likely copies; event: all `k`
    /// copies of some `i ≤ n` are drawn among `m` samples.
    Hypergraph { p: Vec<f64>, k: usize, m: u64 },
}

pub fn run_classical_birthday(
    variant: &ClassicalVariant,
    trials: u64,
    seed: u64,
) -> Result<f64, CoreError> {
    match variant {
        ClassicalVariant::Bipartite { p, m, m_prime } => {
            let w = weighted(p)?;
            let n = p.len() - 1;
            Ok(frequency(trials, seed, |rng| {
                let mut seen = vec![false; n + 1];
                for _ in 0..*m {
                    seen[w.sample(rng)] = true;
                }
                (0..*m_prime).any(|_| {
                    let i = w.sample(rng);
                    i < n && seen[i]
                })
            }))
        }
        ClassicalVariant::Hypergraph { p, k, m } => {
            let (k, n) = (*k, p.len() - 1);
            if k == 0 || k > 64 {
                return Err(CoreError::InvalidParameter("k must be in 1..=64".into()));
            }
            let w = weighted(p)?;
            let full = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
            Ok(frequency(trials, seed, |rng| {
                let mut copies = vec![0u64; n + 1];
                for _ in 0..*m {
                    let i = w.sample(rng);
                    copies[i] |= 1 << rng.random_range(0..k);
                }
                copies[..n].contains(&full)
            }))
        }
    }
}

/// A lower bound on the cover weight with its written argument, for graphs too large to search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticBound {
    pub eps: f64,
    pub justification: String,
}

/// An experiment definition; weights list the vertices in order and end with `#`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ExperimentSpec {
    Bipartite {
        left: usize,
        right: usize,
        edges: Vec<(usize, usize)>,
        mu: Vec<f64>,
        nu: Vec<f64>,
        m: u64,
        m_prime: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        analytic: Option<AnalyticBound>,
    },
    Hypergraph {
        vertices: usize,
        edges: Vec<Vec<usize>>,
        mu: Vec<f64>,
        m: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        analytic: Option<AnalyticBound>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BirthdayReport {
    pub kind: String,
    /// Edge size: 2 for bipartite experiments.
    pub k: usize,
    pub eps: f64,
    pub certified_exactly: bool,
    pub in_regime: bool,
    pub trials: u64,
    pub seed: u64,
    pub collision_rate: f64,
    /// One-sided 99% Wilson interval on the collision rate.
    pub interval: (f64, f64),
}

/// Exact search when the graph is small enough; a supplied bound is used only otherwise.
fn certificate(
    exact: impl FnOnce() -> Result<Certificate, CoreError>,
    vertices: usize,
    analytic: &Option<AnalyticBound>,
) -> Result<Certificate, CoreError> {
    if vertices <= MAX_COVER_VERTICES {
        return exact();
    }
    match analytic {
        Some(a) if a.eps > 0.0 && !a.justification.trim().is_empty() => Ok(Certificate::Analytic {
            eps: a.eps,
            justification: a.justification.clone(),
        }),
        _ => Err(CoreError::TooLarge(format!(
            "more than {MAX_COVER_VERTICES} vertices needs an analytic bound with a justification"
        ))),
    }
}

impl ExperimentSpec {
    /// Certifies `ε`, checks the regime and runs `trials` experiments.
    pub fn run(&self, trials: u64, seed: u64) -> Result<BirthdayReport, CoreError> {
        let (kind, k, cert, in_regime, rate) = match self {
            ExperimentSpec::Bipartite {
                left,
                right,
                edges,
                mu,
                nu,
                m,
                m_prime,
                analytic,
            } => {
                let exp = BipartiteExperiment::new(
                    *left,
                    *right,
                    edges.clone(),
                    mu.clone(),
                    nu.clone(),
                    *m,
                    *m_prime,
                )?;
                let cert = certificate(|| exp.certify(), left + right, analytic)?;
                let in_regime = exp.in_regime(cert.eps());
                (
                    "bipartite",
                    2,
                    cert,
                    in_regime,
                    run_bipartite_birthday(&exp, trials, seed)?,
                )
            }
            ExperimentSpec::Hypergraph {
                vertices,
                edges,
                mu,
                m,
                analytic,
            } => {
                let exp = HypergraphExperiment::new(
                    Hypergraph::new(*vertices, edges.clone())?,
                    mu.clone(),
                    *m,
                )?;
                let cert = certificate(|| exp.certify(), *vertices, analytic)?;
                let in_regime = exp.in_regime(cert.eps());
                (
                    "hypergraph",
                    exp.k,
                    cert,
                    in_regime,
                    run_hypergraph_birthday(&exp, trials, seed)?,
                )
            }
        };
        let hits = (rate * trials as f64).round() as u64;
        Ok(BirthdayReport {
            kind: kind.into(),
            k,
            eps: cert.eps(),
            certified_exactly: matches!(cert, Certificate::Exact(_)),
            in_regime,
            trials,
            seed,
            collision_rate: rate,
            interval: wilson(hits, trials, Z_ONE_SIDED_99),
        })
    }
}

fn random_weights<R: Rng + ?Sized>(count: usize, null_mass: f64, rng: &mut R) -> Vec<f64> {
    let mut w: Vec<f64> = (0..count).map(|_| rng.random_range(0.1..1.0)).collect();
    let s: f64 = w.iter().sum();
    for x in &mut w {
        *x *= (1.0 - null_mass) / s;
    }
    w.push(null_mass);
    w
}

/// A random bipartite experiment with `m = m′` at the smallest in-regime size for its exact `ε`.
pub fn random_bipartite_in_regime(
    left: usize,
    right: usize,
    edge_prob: f64,
    null_mass: f64,
    seed: u64,
) -> Result<ExperimentSpec, CoreError> {
    if left == 0 || right == 0 || !(0.0..1.0).contains(&null_mass) {
        return Err(CoreError::InvalidParameter(
            "need vertices on both sides and null mass in [0,1)".into(),
        ));
    }
    let mut rng = SeededRng::new(seed, 0);
    let mut edges: Vec<(usize, usize)> = (0..left)
        .flat_map(|u| (0..right).map(move |v| (u, v)))
        .filter(|_| rng.random_bool(edge_prob))
        .collect();
    if edges.is_empty() {
        edges.push((0, 0));
    }
    let mu = random_weights(left, null_mass, &mut rng);
    let nu = random_weights(right, null_mass, &mut rng);
    let exp = BipartiteExperiment::new(left, right, edges.clone(), mu.clone(), nu.clone(), 1, 1)?;
    let eps = exp.certify()?.eps();
    let m = (100.0 / eps).max((100.0 * left as f64).sqrt() / eps).ceil() as u64;
    Ok(ExperimentSpec::Bipartite {
        left,
        right,
        edges,
        mu,
        nu,
        m,
        m_prime: m,
        analytic: None,
    })
}

/// A random `k`-uniform experiment with the smallest in-regime `m` for its exact `ε`.
pub fn random_hypergraph_in_regime(
    k: usize,
    vertices: usize,
    edge_count: usize,
    null_mass: f64,
    seed: u64,
) -> Result<ExperimentSpec, CoreError> {
    if k == 0 || k > vertices || edge_count == 0 || !(0.0..1.0).contains(&null_mass) {
        return Err(CoreError::InvalidParameter(
            "need 1 <= k <= vertices, an edge and null mass in [0,1)".into(),
        ));
    }
    let mut rng = SeededRng::new(seed, 0);
    let edges: Vec<Vec<usize>> = (0..edge_count)
        .map(|_| {
            let mut e = rand::seq::index::sample(&mut rng, vertices, k).into_vec();
            e.sort_unstable();
            e
        })
        .collect();
    let mu = random_weights(vertices, null_mass, &mut rng);
    let exp = HypergraphExperiment::new(Hypergraph::new(vertices, edges.clone())?, mu.clone(), 1)?;
    let eps = exp.certify()?.eps();
    let kf = k as f64;
    let m = (10.0 * kf * kf * (vertices as f64).powf((kf - 1.0) / kf) / eps).ceil() as u64;
    Ok(ExperimentSpec::Hypergraph {
        vertices,
        edges,
        mu,
        m,
        analytic: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_edge_point_masses_always_collide() {
        let exp =
            BipartiteExperiment::new(1, 1, vec![(0, 0)], vec![1.0, 0.0], vec![1.0, 0.0], 1, 1)
                .unwrap();
        assert_eq!(run_bipartite_birthday(&exp, 50, 1).unwrap(), 1.0);
        assert_eq!(exp.certify().unwrap(), Certificate::Exact(1.0));
    }

    #[test]
    fn null_mass_never_collides() {
        let exp = BipartiteExperiment::new(
            2,
            2,
            vec![(0, 0), (1, 1)],
            vec![0.0, 0.0, 1.0],
            vec![0.5, 0.5, 0.0],
            10,
            10,
        )
        .unwrap();
        assert_eq!(run_bipartite_birthday(&exp, 50, 1).unwrap(), 0.0);
    }

    #[test]
    fn edgeless_hypergraph_never_collides() {
        let g = Hypergraph::new(5, vec![]).unwrap();
        let exp = HypergraphExperiment::new(g, [0.2; 6].iter().map(|w| w / 1.2).collect(), 100)
            .unwrap();
        assert_eq!(run_hypergraph_birthday(&exp, 50, 1).unwrap(), 0.0);
    }

    #[test]
    fn classical_single_point() {
        let v = ClassicalVariant::Bipartite {
            p: vec![1.0, 0.0],
            m: 1,
            m_prime: 1,
        };
        assert_eq!(run_classical_birthday(&v, 20, 0).unwrap(), 1.0);
    }

    #[test]
    fn generated_experiments_are_in_regime() {
        let b = random_bipartite_in_regime(6, 6, 0.4, 0.2, 3).unwrap();
        let r = b.run(20, 1).unwrap();
        assert!(r.in_regime && r.certified_exactly && r.eps > 0.0);
        let h = random_hypergraph_in_regime(3, 8, 6, 0.2, 3).unwrap();
        let r = h.run(20, 1).unwrap();
        assert!(r.in_regime && r.k == 3);
    }

    #[test]
    fn large_graphs_need_an_analytic_bound() {
        let spec = ExperimentSpec::Hypergraph {
            vertices: 30,
            edges: vec![vec![0, 1]],
            mu: vec![1.0 / 31.0; 31],
            m: 10,
            analytic: None,
        };
        assert!(matches!(spec.run(5, 0), Err(CoreError::TooLarge(_))));
        let ExperimentSpec::Hypergraph {
            vertices,
            edges,
            mu,
            m,
            ..
        } = spec
        else {
            unreachable!()
        };
        let bound = AnalyticBound {
            eps: 2.0 / 31.0,
            justification: "the only edge has two vertices of mass 1/31".into(),
        };
        let spec = ExperimentSpec::Hypergraph {
            vertices,
            edges,
            mu,
            m,
            analytic: Some(bound),
        };
        let r = spec.run(5, 0).unwrap();
        assert!(!r.certified_exactly);
    }

    #[test]
    fn specs_round_trip_through_json() {
        let b = random_bipartite_in_regime(3, 4, 0.5, 0.1, 2).unwrap();
        let s = serde_json::to_string(&b).unwrap();
        assert!(s.contains("\"type\":\"bipartite\""));
        assert_eq!(serde_json::from_str::<ExperimentSpec>(&s).unwrap(), b);
    }

    #[test]
    fn seeded_runs_repeat() {
        let exp = BipartiteExperiment::new(
            3,
            3,
            vec![(0, 1), (2, 2)],
            vec![0.2, 0.2, 0.2, 0.4],
            [0.3; 4].iter().map(|w| w / 1.2).collect(),
            3,
            3,
        )
        .unwrap();
        assert_eq!(
            run_bipartite_birthday(&exp, 200, 9).unwrap(),
            run_bipartite_birthday(&exp, 200, 9).unwrap()
        );
    }
}
