//! Generators for yes-instances and certified far instances.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::bits::BitString;
use crate::dist::{FiniteDistribution, PairDistribution};
use crate::dl_model::{GeneralDLRep, MonotoneDLRep, TruthTable};
use crate::error::CoreError;
use crate::oracle::{BooleanFunction, Orientation};
use crate::total::TotalOrder;

/// What is known about an instance's distance to the tested class.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GroundTruth {
    Yes,
    /// At least this far.
    Far(f64),
    Unknown,
}

/// Family name, seed and a free-form parameter summary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub family: String,
    pub seed: u64,
    pub params: String,
}

/// The four-rule groups of the lower-bound construction, on positions `n/2+1..=n` of `π`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Groups4 {
    pub no_side: bool,
    rep: MonotoneDLRep,
}

impl Groups4 {
    pub fn new(pi: Vec<usize>, no_side: bool) -> Result<Self, CoreError> {
        let n = pi.len();
        if n == 0 || !n.is_multiple_of(16) {
            return Err(CoreError::InvalidParameter(format!(
                "groups-of-4 needs n divisible by 16, got {n}"
            )));
        }
        let mut nu = vec![true; n + 1];
        for k in n / 8..n / 4 {
            let p = 4 * k;
            if no_side {
                nu[p] = false;
                nu[p + 2] = false;
            } else {
                nu[p] = false;
                nu[p + 3] = false;
            }
        }
        Ok(Groups4 {
            no_side,
            rep: MonotoneDLRep::new(pi, nu)?,
        })
    }

    pub fn pi(&self) -> &[usize] {
        self.rep.pi()
    }

    /// The underlying monotone list; equals the function on the yes side.
    pub fn list(&self) -> &MonotoneDLRep {
        &self.rep
    }

    /// Group indices `k` and the four indices `π(4k+1..4k+4)`.
    pub fn groups(&self) -> Vec<[usize; 4]> {
        let n = self.rep.n();
        let pi = self.rep.pi();
        (n / 8..n / 4)
            .map(|k| [pi[4 * k], pi[4 * k + 1], pi[4 * k + 2], pi[4 * k + 3]])
            .collect()
    }

    /// The supported pair strings of one group.
    pub fn group_strings(&self, g: [usize; 4]) -> [[usize; 2]; 4] {
        if self.no_side {
            [[g[0], g[1]], [g[1], g[2]], [g[2], g[3]], [g[3], g[0]]]
        } else {
            [[g[0], g[1]], [g[0], g[2]], [g[1], g[3]], [g[2], g[3]]]
        }
    }
}

impl BooleanFunction for Groups4 {
    fn width(&self) -> usize {
        self.rep.n()
    }

    fn eval(&self, x: &BitString) -> bool {
        let n = self.rep.n();
        let i = self.rep.min_index(x);
        if self.no_side && i > n / 2 && i <= n && (i - 1).is_multiple_of(4) {
            let pi = self.rep.pi();
            if !x.get(pi[i]) && !x.get(pi[i + 1]) && x.get(pi[i + 2]) {
                return true;
            }
        }
        self.rep.eval(x)
    }
}

/// A Boolean target in one of the serializable shapes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FunctionSpec {
    Mdl(MonotoneDLRep),
    Dl(GeneralDLRep),
    Table(TruthTable),
    Groups4(Groups4),
    /// A base function with some values overridden.
    Patched {
        base: Box<FunctionSpec>,
        overrides: BTreeMap<BitString, bool>,
    },
}

impl BooleanFunction for FunctionSpec {
    fn width(&self) -> usize {
        match self {
            FunctionSpec::Mdl(f) => f.n(),
            FunctionSpec::Dl(f) => f.n(),
            FunctionSpec::Table(f) => f.n(),
            FunctionSpec::Groups4(f) => f.width(),
            FunctionSpec::Patched { base, .. } => base.width(),
        }
    }

    fn eval(&self, x: &BitString) -> bool {
        match self {
            FunctionSpec::Mdl(f) => f.eval(x),
            FunctionSpec::Dl(f) => f.eval(x),
            FunctionSpec::Table(f) => BooleanFunction::eval(f, x),
            FunctionSpec::Groups4(f) => f.eval(x),
            FunctionSpec::Patched { base, overrides } => {
                overrides.get(x).copied().unwrap_or_else(|| base.eval(x))
            }
        }
    }
}

/// The five-cycle tournament: groups of five consecutive positions of `π`.
///
/// Inside a group, position `p` precedes `q` iff `q − p ≡ 1` or `2 (mod 5)`;
/// across groups the lower group comes first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pentagon {
    pi: Vec<usize>,
    position: Vec<usize>,
}

impl Pentagon {
    pub fn new(pi: Vec<usize>) -> Result<Self, CoreError> {
        let n = pi.len();
        if n == 0 || !n.is_multiple_of(5) {
            return Err(CoreError::InvalidParameter(format!(
                "pentagon needs n divisible by 5, got {n}"
            )));
        }
        let mut position = vec![usize::MAX; n];
        for (p, &i) in pi.iter().enumerate() {
            if i == 0 || i > n || position[i - 1] != usize::MAX {
                return Err(CoreError::InvalidParameter(
                    "pi is not a permutation".into(),
                ));
            }
            position[i - 1] = p;
        }
        Ok(Pentagon { pi, position })
    }

    pub fn pi(&self) -> &[usize] {
        &self.pi
    }

    /// The five cycle edges of each group as `(smaller, larger)` pairs.
    pub fn cycle_edges(&self) -> Vec<(usize, usize)> {
        self.pi
            .chunks(5)
            .flat_map(|g| (0..5).map(move |a| (g[a], g[(a + 1) % 5])))
            .collect()
    }
}

impl Orientation for Pentagon {
    fn n(&self) -> usize {
        self.pi.len()
    }

    fn less(&self, u: usize, v: usize) -> bool {
        let (p, q) = (self.position[u - 1], self.position[v - 1]);
        if p / 5 != q / 5 {
            return p / 5 < q / 5;
        }
        matches!((q % 5 + 5 - p % 5) % 5, 1 | 2)
    }
}

/// A comparison target in one of the serializable shapes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OrientationSpec {
    Total(TotalOrder),
    Pentagon(Pentagon),
}

impl Orientation for OrientationSpec {
    fn n(&self) -> usize {
        match self {
            OrientationSpec::Total(t) => t.n(),
            OrientationSpec::Pentagon(p) => p.n(),
        }
    }

    fn less(&self, u: usize, v: usize) -> bool {
        match self {
            OrientationSpec::Total(t) => t.less(u, v),
            OrientationSpec::Pentagon(p) => p.less(u, v),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BooleanInstance {
    pub function: FunctionSpec,
    pub dist: FiniteDistribution,
    pub truth: GroundTruth,
    pub provenance: Provenance,
}

#[derive(Clone, Debug)]
pub struct ComparisonInstance {
    pub orientation: OrientationSpec,
    pub dist: PairDistribution,
    pub truth: GroundTruth,
    pub provenance: Provenance,
}

#[derive(Clone, Debug)]
pub enum InstanceBundle {
    Boolean(BooleanInstance),
    Comparison(ComparisonInstance),
}

impl InstanceBundle {
    pub fn n(&self) -> usize {
        match self {
            InstanceBundle::Boolean(b) => b.function.width(),
            InstanceBundle::Comparison(c) => c.orientation.n(),
        }
    }

    pub fn truth(&self) -> GroundTruth {
        match self {
            InstanceBundle::Boolean(b) => b.truth,
            InstanceBundle::Comparison(c) => c.truth,
        }
    }

    pub fn provenance(&self) -> &Provenance {
        match self {
            InstanceBundle::Boolean(b) => &b.provenance,
            InstanceBundle::Comparison(c) => &c.provenance,
        }
    }
}

fn permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut pi: Vec<usize> = (1..=n).collect();
    pi.shuffle(rng);
    pi
}

fn provenance(family: &str, seed: u64, params: String) -> Provenance {
    Provenance {
        family: family.into(),
        seed,
        params,
    }
}

/// `count` distinct unordered pairs of `[n]`, uniformly at random.
pub fn random_pairs<R: Rng + ?Sized>(
    n: usize,
    count: usize,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>, CoreError> {
    let total = n * (n - 1) / 2;
    if count == 0 || count > total {
        return Err(CoreError::InvalidParameter(format!(
            "need 1..={total} pairs, got {count}"
        )));
    }
    if 2 * count > total {
        let mut all: Vec<(usize, usize)> = (1..=n)
            .flat_map(|u| (u + 1..=n).map(move |v| (u, v)))
            .collect();
        all.shuffle(rng);
        all.truncate(count);
        return Ok(all);
    }
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u = rng.random_range(1..=n);
        let v = rng.random_range(1..=n);
        if u != v && seen.insert((u.min(v), u.max(v))) {
            out.push((u.min(v), u.max(v)));
        }
    }
    Ok(out)
}

fn random_weights<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = (0..count).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Pentagon groups with the distribution uniform on the cycle edges; `1/5`-far from total orders.
pub fn gen_pentagon<R: Rng + ?Sized>(
    n: usize,
    seed: u64,
    rng: &mut R,
) -> Result<InstanceBundle, CoreError> {
    let p = Pentagon::new(permutation(n, rng))?;
    let dist = PairDistribution::uniform(n, p.cycle_edges())?;
    Ok(InstanceBundle::Comparison(ComparisonInstance {
        orientation: OrientationSpec::Pentagon(p),
        dist,
        truth: GroundTruth::Far(0.2),
        provenance: provenance("pentagon", seed, format!("n={n}")),
    }))
}

/// A random total order with random weights on `support` random pairs.
pub fn gen_total_yes<R: Rng + ?Sized>(
    n: usize,
    support: usize,
    seed: u64,
    rng: &mut R,
) -> Result<InstanceBundle, CoreError> {
    if n < 2 {
        return Err(CoreError::InvalidParameter("n must be at least 2".into()));
    }
    let order = TotalOrder::from_order(&permutation(n, rng));
    let pairs = random_pairs(n, support, rng)?;
    let weights = random_weights(pairs.len(), rng);
    let dist = PairDistribution::new(n, pairs.into_iter().zip(weights).collect())?;
    Ok(InstanceBundle::Comparison(ComparisonInstance {
        orientation: OrientationSpec::Total(order),
        dist,
        truth: GroundTruth::Yes,
        provenance: provenance("total-yes", seed, format!("n={n},support={support}")),
    }))
}

/// The groups-of-4 construction; the no side is `1/4`-far from decision lists.
pub fn gen_groups4<R: Rng + ?Sized>(
    n: usize,
    no_side: bool,
    seed: u64,
    rng: &mut R,
) -> Result<InstanceBundle, CoreError> {
    let f = Groups4::new(permutation(n, rng), no_side)?;
    let mut atoms = Vec::with_capacity(n / 2);
    for g in f.groups() {
        for s in f.group_strings(g) {
            atoms.push(BitString::from_indices(n, &s)?);
        }
    }
    let dist = FiniteDistribution::uniform(n, atoms)?;
    let (family, truth) = if no_side {
        ("groups4-no", GroundTruth::Far(0.25))
    } else {
        ("groups4-yes", GroundTruth::Yes)
    };
    Ok(InstanceBundle::Boolean(BooleanInstance {
        function: FunctionSpec::Groups4(f),
        dist,
        truth,
        provenance: provenance(family, seed, format!("n={n}")),
    }))
}

/// Random weight-2 strings, each XORed with `shift`, with random weights.
fn pair_string_distribution<R: Rng + ?Sized>(
    n: usize,
    support: usize,
    shift: &BitString,
    rng: &mut R,
) -> Result<FiniteDistribution, CoreError> {
    let pairs = random_pairs(n, support, rng)?;
    let weights = random_weights(pairs.len(), rng);
    let mut atoms = Vec::with_capacity(pairs.len());
    for ((u, v), w) in pairs.into_iter().zip(weights) {
        let mut x = BitString::from_indices(n, &[u, v])?;
        x.xor_assign(shift);
        atoms.push((x, w));
    }
    FiniteDistribution::new(n, atoms)
}

/// A random monotone list under a random distribution on weight-2 strings.
pub fn gen_mdl_yes<R: Rng + ?Sized>(
    n: usize,
    support: usize,
    seed: u64,
    rng: &mut R,
) -> Result<InstanceBundle, CoreError> {
    let f = MonotoneDLRep::random(n, rng);
    let dist = pair_string_distribution(n, support, &BitString::zeros(n), rng)?;
    Ok(InstanceBundle::Boolean(BooleanInstance {
        function: FunctionSpec::Mdl(f),
        dist,
        truth: GroundTruth::Yes,
        provenance: provenance("mdl-yes", seed, format!("n={n},support={support}")),
    }))
}

/// A random decision list under a distribution on weight-2 strings shifted by its default string.
pub fn gen_dl_yes<R: Rng + ?Sized>(
    n: usize,
    support: usize,
    seed: u64,
    rng: &mut R,
) -> Result<InstanceBundle, CoreError> {
    let f = GeneralDLRep::random(n, rng);
    let dist = pair_string_distribution(n, support, f.default_string(), rng)?;
    Ok(InstanceBundle::Boolean(BooleanInstance {
        function: FunctionSpec::Dl(f),
        dist,
        truth: GroundTruth::Yes,
        provenance: provenance("dl-yes", seed, format!("n={n},support={support}")),
    }))
}

/// Why a violation could not be planted.
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PlantError {
    #[error("base bundle must be a yes monotone list")]
    BadBase,
    #[error("violation type must be in 1..=5")]
    BadType,
    #[error("mass must be in (0,1)")]
    BadMass,
    #[error("no room for the requested gadget: {0}")]
    Infeasible(String),
}

/// Maximal runs of equal `ν` values along `π`, as position ranges `[start, end)` (0-based).
fn value_runs(f: &MonotoneDLRep) -> Vec<(usize, usize)> {
    let nu = f.nu();
    let n = f.n();
    let mut runs = Vec::new();
    let mut start = 0;
    for p in 1..=n {
        if p == n || nu[p] != nu[start] {
            runs.push((start, p));
            start = p;
        }
    }
    runs
}

/// Plants an unfixable gadget on fresh indices of a yes monotone-list bundle.
///
/// Type 5 plants alternating four-cycles on positions valued `0,1,0,1`; every
/// monotone list errs on one of the four pair strings. Types 1 to 4 plant triples
/// `(a, b, c)` with `a` before `b` before `c` along `π`, `ν_a ≠ ν_b = ν_c`, and
/// flip `f(e_a ∨ e_b)` to `ν_b`; together with `e_c` and `e_a ∨ e_b ∨ e_c` every
/// monotone list errs on one of the three strings. The type picks the value-run
/// distance between `a` and `b`: at least 2 for types 1 and 2, exactly 1 for type 3,
/// exactly 2 for type 4; type 2 further needs both runs to hold `n^{5/6}` indices.
/// The gadget mass `mass` is spread uniformly; the base distribution keeps `1 − mass`.
pub fn gen_planted_violation<R: Rng + ?Sized>(
    base: &InstanceBundle,
    kind: u8,
    mass: f64,
    gadgets: usize,
    rng: &mut R,
) -> Result<InstanceBundle, PlantError> {
    let InstanceBundle::Boolean(b) = base else {
        return Err(PlantError::BadBase);
    };
    let (FunctionSpec::Mdl(f), GroundTruth::Yes) = (&b.function, b.truth) else {
        return Err(PlantError::BadBase);
    };
    if !(1..=5).contains(&kind) {
        return Err(PlantError::BadType);
    }
    if !(mass > 0.0 && mass < 1.0) {
        return Err(PlantError::BadMass);
    }
    let n = f.n();
    let pi = f.pi();
    let nu = f.nu();
    let mut used = BTreeSet::new();
    let mut strings: Vec<BitString> = Vec::new();
    let mut overrides = BTreeMap::new();
    let per_gadget_far;
    if kind == 5 {
        per_gadget_far = 1.0 / 4.0;
        let mut starts: Vec<usize> = (0..n.saturating_sub(3))
            .filter(|&p| !nu[p] && nu[p + 1] && !nu[p + 2] && nu[p + 3])
            .collect();
        starts.shuffle(rng);
        for p in starts {
            if strings.len() / 4 == gadgets {
                break;
            }
            if (p..p + 4).any(|q| used.contains(&q)) {
                continue;
            }
            used.extend(p..p + 4);
            let g = [pi[p], pi[p + 1], pi[p + 2], pi[p + 3]];
            let pairs = [[g[0], g[1]], [g[1], g[2]], [g[2], g[3]], [g[3], g[0]]];
            for s in pairs {
                strings.push(BitString::from_indices(n, &s).expect("valid indices"));
            }
            overrides.insert(
                BitString::from_indices(n, &[g[0], g[3]]).expect("valid indices"),
                true,
            );
        }
    } else {
        per_gadget_far = 1.0 / 3.0;
        let runs = value_runs(f);
        let run_of: Vec<usize> = runs
            .iter()
            .enumerate()
            .flat_map(|(r, &(s, e))| std::iter::repeat_n(r, e - s))
            .collect();
        let big = (n as f64).powf(5.0 / 6.0).ceil() as usize;
        let mut firsts: Vec<usize> = (0..n).collect();
        firsts.shuffle(rng);
        for pa in firsts {
            if strings.len() / 3 == gadgets {
                break;
            }
            if used.contains(&pa) {
                continue;
            }
            let ra = run_of[pa];
            let gap_ok = |rb: usize| match kind {
                1 => rb >= ra + 2,
                2 => {
                    rb >= ra + 2 && runs[ra].1 - runs[ra].0 >= big && runs[rb].1 - runs[rb].0 >= big
                }
                3 => rb == ra + 1,
                _ => rb == ra + 2,
            };
            let Some(pb) = (pa + 1..n).find(|&q| !used.contains(&q) && gap_ok(run_of[q])) else {
                continue;
            };
            let Some(pc) = (pb + 1..n).find(|&q| !used.contains(&q) && nu[q] == nu[pb]) else {
                continue;
            };
            used.extend([pa, pb, pc]);
            let (a, bb, c) = (pi[pa], pi[pb], pi[pc]);
            let ab = BitString::from_indices(n, &[a, bb]).expect("valid indices");
            overrides.insert(ab.clone(), nu[pb]);
            strings.push(ab);
            strings.push(BitString::unit(c, n).expect("valid index"));
            strings.push(BitString::from_indices(n, &[a, bb, c]).expect("valid indices"));
        }
    }
    if strings.is_empty() {
        return Err(PlantError::Infeasible(format!(
            "no gadget of type {kind} fits this list"
        )));
    }
    let planted: HashSet<&BitString> = strings.iter().collect();
    let each = mass / strings.len() as f64;
    let mut atoms: Vec<(BitString, f64)> = strings.iter().map(|x| (x.clone(), each)).collect();
    for (x, &w) in b.dist.atoms().iter().zip(b.dist.weights()) {
        if planted.contains(x) {
            let slot = atoms
                .iter_mut()
                .find(|(y, _)| y == x)
                .expect("planted atom present");
            slot.1 += w * (1.0 - mass);
        } else {
            atoms.push((x.clone(), w * (1.0 - mass)));
        }
    }
    let dist = FiniteDistribution::normalized(n, atoms)
        .map_err(|e| PlantError::Infeasible(e.to_string()))?;
    let gadget_count = strings.len() as f64 * per_gadget_far;
    let function = FunctionSpec::Patched {
        base: Box::new(b.function.clone()),
        overrides,
    };
    Ok(InstanceBundle::Boolean(BooleanInstance {
        function,
        dist,
        truth: GroundTruth::Far(each * gadget_count),
        provenance: provenance(
            &format!("planted-{kind}"),
            b.provenance.seed,
            format!(
                "{},mass={mass},gadgets={}",
                b.provenance.params,
                strings.len() / if kind == 5 { 4 } else { 3 }
            ),
        ),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    #[test]
    fn pentagon_orientation_matches_figure() {
        let p = Pentagon::new((1..=10).collect()).unwrap();
        assert!(p.less(5, 1));
        assert!(p.less(1, 2) && p.less(1, 3) && !p.less(1, 4));
        assert!(p.less(3, 7) && !p.less(7, 3));
        for u in 1..=10 {
            for v in 1..=10 {
                if u != v {
                    assert_ne!(p.less(u, v), p.less(v, u));
                }
            }
        }
    }

    #[test]
    fn groups4_no_side_pair_values() {
        let mut rng = SeededRng::new(1, 0);
        for n in [16, 32, 64] {
            let InstanceBundle::Boolean(b) = gen_groups4(n, true, 1, &mut rng).unwrap() else {
                panic!()
            };
            let FunctionSpec::Groups4(g) = &b.function else {
                panic!()
            };
            for q in g.groups() {
                let e = |i: usize, j: usize| BitString::from_indices(n, &[q[i], q[j]]).unwrap();
                assert!(g.eval(&e(3, 0)) && g.eval(&e(1, 2)));
                assert!(!g.eval(&e(0, 1)) && !g.eval(&e(2, 3)));
            }
            assert_eq!(b.dist.len(), n / 2);
        }
    }

    #[test]
    fn groups4_yes_side_is_its_list() {
        let mut rng = SeededRng::new(2, 0);
        let InstanceBundle::Boolean(b) = gen_groups4(32, false, 2, &mut rng).unwrap() else {
            panic!()
        };
        let FunctionSpec::Groups4(g) = &b.function else {
            panic!()
        };
        for x in b.dist.atoms() {
            assert_eq!(g.eval(x), g.list().eval(x));
        }
    }

    #[test]
    fn generators_reject_bad_sizes() {
        let mut rng = SeededRng::new(0, 0);
        assert!(gen_pentagon(12, 0, &mut rng).is_err());
        assert!(gen_groups4(24, true, 0, &mut rng).is_err());
        assert!(random_pairs(4, 7, &mut rng).is_err());
    }

    #[test]
    fn dl_yes_support_sits_above_default_string() {
        let mut rng = SeededRng::new(3, 0);
        let InstanceBundle::Boolean(b) = gen_dl_yes(20, 30, 3, &mut rng).unwrap() else {
            panic!()
        };
        let FunctionSpec::Dl(f) = &b.function else {
            panic!()
        };
        for x in b.dist.atoms() {
            assert_eq!(x.try_xor(f.default_string()).unwrap().count_ones(), 2);
        }
    }

    #[test]
    fn planted_changes_only_overridden_points() {
        let mut rng = SeededRng::new(4, 0);
        let base = gen_mdl_yes(64, 100, 4, &mut rng).unwrap();
        for kind in [1, 3, 4, 5] {
            let planted = gen_planted_violation(&base, kind, 0.3, 4, &mut rng).unwrap();
            let (InstanceBundle::Boolean(p), InstanceBundle::Boolean(b)) = (&planted, &base) else {
                panic!()
            };
            let FunctionSpec::Patched { overrides, .. } = &p.function else {
                panic!()
            };
            for x in b.dist.atoms() {
                if !overrides.contains_key(x) {
                    assert_eq!(p.function.eval(x), b.function.eval(x));
                }
            }
            assert!(matches!(p.truth, GroundTruth::Far(e) if e > 0.0));
        }
        assert_eq!(
            gen_planted_violation(&base, 2, 0.3, 4, &mut rng).unwrap_err(),
            PlantError::Infeasible("no gadget of type 2 fits this list".into())
        );
    }
}
