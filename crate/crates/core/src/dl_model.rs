//! Monotone and general decision lists, truth tables and the dominance relation.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::bits::BitString;
use crate::error::{CoreError, TestError};
use crate::oracle::{BooleanFunction, BooleanOracle};

fn validate_permutation(n: usize, pi: &[usize]) -> Result<Vec<usize>, CoreError> {
    if pi.len() != n {
        return Err(CoreError::InvalidParameter(format!(
            "permutation has length {} not {n}",
            pi.len()
        )));
    }
    let mut rank = vec![0usize; n];
    for (j, &i) in pi.iter().enumerate() {
        if i == 0 || i > n || rank[i - 1] != 0 {
            return Err(CoreError::InvalidParameter(format!(
                "not a permutation of 1..={n}"
            )));
        }
        rank[i - 1] = j + 1;
    }
    Ok(rank)
}

/// Smallest rank over the set bits of `words` (n+1 when none).
#[inline]
fn min_rank_of_words(rank: &[usize], n: usize, words: impl Iterator<Item = u64>) -> usize {
    let mut best = n + 1;
    for (wi, mut w) in words.enumerate() {
        while w != 0 {
            let t = w.trailing_zeros() as usize;
            w &= w - 1;
            let r = rank[wi * 64 + t];
            if r < best {
                best = r;
                if best == 1 {
                    return 1;
                }
            }
        }
    }
    best
}

/// A monotone decision list `(π, ν)`: rule `j` fires when `x_{π(j)} = 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonotoneDLRep {
    n: usize,
    pi: Vec<usize>,
    nu: Vec<bool>,
    rank: Vec<usize>,
}

impl MonotoneDLRep {
    /// `pi[j-1] = π(j)` (values in `1..=n`); `nu[j-1] = ν_j` for `j in 1..=n+1`.
    pub fn new(pi: Vec<usize>, nu: Vec<bool>) -> Result<Self, CoreError> {
        let n = pi.len();
        if nu.len() != n + 1 {
            return Err(CoreError::InvalidParameter(format!(
                "nu must have length {}",
                n + 1
            )));
        }
        let rank = validate_permutation(n, &pi)?;
        Ok(MonotoneDLRep { n, pi, nu, rank })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pi(&self) -> &[usize] {
        &self.pi
    }

    pub fn nu(&self) -> &[bool] {
        &self.nu
    }

    /// `π⁻¹(i)`.
    pub fn rank(&self, i: usize) -> usize {
        self.rank[i - 1]
    }

    /// `min_π(x)`: the firing position, `n+1` when `x = 0^n`.
    pub fn min_index(&self, x: &BitString) -> usize {
        assert_eq!(x.width(), self.n, "width mismatch");
        min_rank_of_words(&self.rank, self.n, x.words().iter().copied())
    }

    pub fn eval(&self, x: &BitString) -> bool {
        self.nu[self.min_index(x) - 1]
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut pi: Vec<usize> = (1..=n).collect();
        pi.shuffle(rng);
        let nu = (0..=n).map(|_| rng.random_bool(0.5)).collect();
        Self::new(pi, nu).expect("random permutation is valid")
    }
}

impl BooleanFunction for MonotoneDLRep {
    fn width(&self) -> usize {
        self.n
    }
    fn eval(&self, x: &BitString) -> bool {
        MonotoneDLRep::eval(self, x)
    }
}

/// A general decision list `(π, μ, ν)`: rule `j` fires when `x_{π(j)} = μ_{π(j)}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneralDLRep {
    n: usize,
    pi: Vec<usize>,
    mu: Vec<bool>,
    nu: Vec<bool>,
    rank: Vec<usize>,
    default_string: BitString,
}

impl GeneralDLRep {
    /// `mu[i-1] = μ_i` for `i in 1..=n`.
    pub fn new(pi: Vec<usize>, mu: Vec<bool>, nu: Vec<bool>) -> Result<Self, CoreError> {
        let n = pi.len();
        if mu.len() != n || nu.len() != n + 1 {
            return Err(CoreError::InvalidParameter(format!(
                "mu must have length {n} and nu length {}",
                n + 1
            )));
        }
        let rank = validate_permutation(n, &pi)?;
        let mut default_string = BitString::zeros(n);
        for (i, &m) in mu.iter().enumerate() {
            default_string.set(i + 1, !m);
        }
        Ok(GeneralDLRep {
            n,
            pi,
            mu,
            nu,
            rank,
            default_string,
        })
    }

    /// The list viewed as a general list with `μ = 1^n`.
    pub fn from_monotone(m: &MonotoneDLRep) -> Self {
        Self::new(m.pi.clone(), vec![true; m.n], m.nu.clone()).expect("valid monotone list")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pi(&self) -> &[usize] {
        &self.pi
    }

    pub fn mu(&self) -> &[bool] {
        &self.mu
    }

    pub fn nu(&self) -> &[bool] {
        &self.nu
    }

    pub fn rank(&self, i: usize) -> usize {
        self.rank[i - 1]
    }

    /// The string on which no rule fires (`r_i ≠ μ_i` for all `i`).
    pub fn default_string(&self) -> &BitString {
        &self.default_string
    }

    /// `min_{π,μ}(x)`: the firing position, `n+1` when nothing fires.
    pub fn min_index(&self, x: &BitString) -> usize {
        assert_eq!(x.width(), self.n, "width mismatch");
        let words = x
            .words()
            .iter()
            .zip(self.default_string.words())
            .map(|(a, b)| a ^ b);
        min_rank_of_words(&self.rank, self.n, words)
    }

    pub fn eval(&self, x: &BitString) -> bool {
        self.nu[self.min_index(x) - 1]
    }

    /// The monotone list `g` with `g(x ⊕ r) = f(x)` for the default string `r`.
    pub fn monotonized(&self) -> MonotoneDLRep {
        MonotoneDLRep::new(self.pi.clone(), self.nu.clone()).expect("valid list")
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut pi: Vec<usize> = (1..=n).collect();
        pi.shuffle(rng);
        let mu = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let nu = (0..=n).map(|_| rng.random_bool(0.5)).collect();
        Self::new(pi, mu, nu).expect("random permutation is valid")
    }
}

impl BooleanFunction for GeneralDLRep {
    fn width(&self) -> usize {
        self.n
    }
    fn eval(&self, x: &BitString) -> bool {
        GeneralDLRep::eval(self, x)
    }
}

/// An explicit truth table for `n <= 24`; entry `v` holds `f(x)` where bit `i` of `x` is bit `i-1` of `v`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruthTable {
    n: usize,
    table: Vec<bool>,
}

impl TruthTable {
    pub const MAX_WIDTH: usize = 24;

    pub fn new(n: usize, table: Vec<bool>) -> Result<Self, CoreError> {
        if n > Self::MAX_WIDTH {
            return Err(CoreError::TooLarge(format!("truth table width {n}")));
        }
        if table.len() != 1usize << n {
            return Err(CoreError::InvalidParameter(format!(
                "table needs {} entries",
                1usize << n
            )));
        }
        Ok(TruthTable { n, table })
    }

    pub fn from_function<F: BooleanFunction + ?Sized>(f: &F) -> Result<Self, CoreError> {
        let n = f.width();
        if n > Self::MAX_WIDTH {
            return Err(CoreError::TooLarge(format!("truth table width {n}")));
        }
        let table = (0..1u64 << n)
            .map(|v| f.eval(&BitString::from_u64(n, v)))
            .collect();
        Ok(TruthTable { n, table })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn table(&self) -> &[bool] {
        &self.table
    }

    pub fn get(&self, v: u64) -> bool {
        self.table[v as usize]
    }

    pub fn set(&mut self, v: u64, value: bool) {
        self.table[v as usize] = value;
    }
}

impl BooleanFunction for TruthTable {
    fn width(&self) -> usize {
        self.n
    }
    fn eval(&self, x: &BitString) -> bool {
        self.table[x.to_u64() as usize]
    }
}

/// `x ≻_f y`, re-verifying `f(x) ≠ f(y)`; costs 3 queries.
pub fn dominates<O: BooleanOracle + ?Sized>(
    f: &O,
    x: &BitString,
    y: &BitString,
) -> Result<bool, TestError> {
    let fx = f.query(x)?;
    let fy = f.query(y)?;
    if fx == fy {
        return Err(TestError::PreconditionViolated(
            "dominance needs f(x) != f(y)".into(),
        ));
    }
    dominates_cached(f, x, fx, y)
}

/// `x ≻_f y` given the already known value `f(x)`; costs 1 query.
pub fn dominates_cached<O: BooleanOracle + ?Sized>(
    f: &O,
    x: &BitString,
    fx: bool,
    y: &BitString,
) -> Result<bool, TestError> {
    Ok(f.query(&(x | y))? == fx)
}
