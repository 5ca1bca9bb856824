//! Query-counted access to functions, comparison relations and distributions.

use std::cell::{Cell, RefCell};
use std::collections::HashMap;
use std::ops::{Add, AddAssign};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::dist::{FiniteDistribution, PairDistribution};
use crate::error::{CoreError, Counter, TestError};

/// Optional ceilings on the two ledger counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Budget {
    pub queries: Option<u64>,
    pub samples: Option<u64>,
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget::default()
    }

    pub fn queries(limit: u64) -> Self {
        Budget {
            queries: Some(limit),
            samples: None,
        }
    }
}

/// A snapshot of the two counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerReport {
    pub function_queries: u64,
    pub samples_drawn: u64,
}

impl LedgerReport {
    pub fn total(&self) -> u64 {
        self.function_queries + self.samples_drawn
    }
}

impl Add for LedgerReport {
    type Output = LedgerReport;
    fn add(self, rhs: LedgerReport) -> LedgerReport {
        LedgerReport {
            function_queries: self.function_queries + rhs.function_queries,
            samples_drawn: self.samples_drawn + rhs.samples_drawn,
        }
    }
}

impl AddAssign for LedgerReport {
    fn add_assign(&mut self, rhs: LedgerReport) {
        *self = *self + rhs;
    }
}

impl std::iter::Sum for LedgerReport {
    fn sum<I: Iterator<Item = LedgerReport>>(iter: I) -> Self {
        iter.fold(LedgerReport::default(), Add::add)
    }
}

/// Per-trial counters of function queries and samples.
///
/// Counters use interior mutability so that several oracle views of one
/// trial can share a ledger by reference.
#[derive(Debug, Default)]
pub struct QueryLedger {
    queries: Cell<u64>,
    samples: Cell<u64>,
    budget: Budget,
}

impl QueryLedger {
    pub fn new(budget: Budget) -> Self {
        QueryLedger {
            queries: Cell::new(0),
            samples: Cell::new(0),
            budget,
        }
    }

    pub fn unlimited() -> Self {
        Self::new(Budget::unlimited())
    }

    pub fn budget(&self) -> Budget {
        self.budget
    }

    fn charge(
        cell: &Cell<u64>,
        amount: u64,
        limit: Option<u64>,
        counter: Counter,
    ) -> Result<(), TestError> {
        let next = cell.get() + amount;
        match limit {
            Some(b) if next > b => {
                cell.set(b);
                Err(TestError::BudgetExhausted { counter, limit: b })
            }
            _ => {
                cell.set(next);
                Ok(())
            }
        }
    }

    pub fn charge_queries(&self, amount: u64) -> Result<(), TestError> {
        Self::charge(&self.queries, amount, self.budget.queries, Counter::Queries)
    }

    pub fn charge_samples(&self, amount: u64) -> Result<(), TestError> {
        Self::charge(&self.samples, amount, self.budget.samples, Counter::Samples)
    }

    pub fn report(&self) -> LedgerReport {
        LedgerReport {
            function_queries: self.queries.get(),
            samples_drawn: self.samples.get(),
        }
    }
}

/// A Boolean function over `{0,1}^n` that can be evaluated for free.
pub trait BooleanFunction {
    fn width(&self) -> usize;
    fn eval(&self, x: &BitString) -> bool;
}

impl<F: BooleanFunction + ?Sized> BooleanFunction for &F {
    fn width(&self) -> usize {
        (**self).width()
    }
    fn eval(&self, x: &BitString) -> bool {
        (**self).eval(x)
    }
}

/// A closure-backed Boolean function.
pub struct FnFunction<F: Fn(&BitString) -> bool> {
    width: usize,
    f: F,
}

impl<F: Fn(&BitString) -> bool> FnFunction<F> {
    pub fn new(width: usize, f: F) -> Self {
        FnFunction { width, f }
    }
}

impl<F: Fn(&BitString) -> bool> BooleanFunction for FnFunction<F> {
    fn width(&self) -> usize {
        self.width
    }
    fn eval(&self, x: &BitString) -> bool {
        (self.f)(x)
    }
}

/// Charged black-box access to a Boolean function.
pub trait BooleanOracle {
    fn width(&self) -> usize;
    fn query(&self, x: &BitString) -> Result<bool, TestError>;
}

impl<O: BooleanOracle + ?Sized> BooleanOracle for &O {
    fn width(&self) -> usize {
        (**self).width()
    }
    fn query(&self, x: &BitString) -> Result<bool, TestError> {
        (**self).query(x)
    }
}

/// Charges one query per evaluation of the target.
pub struct FunctionOracle<'a, F: BooleanFunction + ?Sized> {
    target: &'a F,
    ledger: &'a QueryLedger,
}

impl<'a, F: BooleanFunction + ?Sized> FunctionOracle<'a, F> {
    pub fn new(target: &'a F, ledger: &'a QueryLedger) -> Self {
        FunctionOracle { target, ledger }
    }

    pub fn ledger(&self) -> &QueryLedger {
        self.ledger
    }
}

impl<F: BooleanFunction + ?Sized> BooleanOracle for FunctionOracle<'_, F> {
    fn width(&self) -> usize {
        self.target.width()
    }

    fn query(&self, x: &BitString) -> Result<bool, TestError> {
        if x.width() != self.target.width() {
            return Err(CoreError::WidthMismatch {
                left: self.target.width(),
                right: x.width(),
            }
            .into());
        }
        self.ledger.charge_queries(1)?;
        Ok(self.target.eval(x))
    }
}

/// Caches answers of an inner oracle so repeated points are charged once.
///
/// Not used by the testers; available for experiments.
pub struct MemoOracle<O: BooleanOracle> {
    inner: O,
    cache: RefCell<HashMap<BitString, bool>>,
}

impl<O: BooleanOracle> MemoOracle<O> {
    pub fn new(inner: O) -> Self {
        MemoOracle {
            inner,
            cache: RefCell::new(HashMap::new()),
        }
    }
}

impl<O: BooleanOracle> BooleanOracle for MemoOracle<O> {
    fn width(&self) -> usize {
        self.inner.width()
    }

    fn query(&self, x: &BitString) -> Result<bool, TestError> {
        if let Some(&v) = self.cache.borrow().get(x) {
            return Ok(v);
        }
        let v = self.inner.query(x)?;
        self.cache.borrow_mut().insert(x.clone(), v);
        Ok(v)
    }
}

/// An orientation of every unordered pair of `[n]`.
pub trait Orientation {
    fn n(&self) -> usize;
    /// True iff `u <_σ v`. Must satisfy `less(u,v) != less(v,u)` for `u != v`.
    fn less(&self, u: usize, v: usize) -> bool;
}

/// Charged access to an orientation.
pub struct ComparisonOracle<'a, T: Orientation + ?Sized> {
    target: &'a T,
    ledger: &'a QueryLedger,
}

impl<'a, T: Orientation + ?Sized> ComparisonOracle<'a, T> {
    pub fn new(target: &'a T, ledger: &'a QueryLedger) -> Self {
        ComparisonOracle { target, ledger }
    }

    pub fn n(&self) -> usize {
        self.target.n()
    }

    pub fn ledger(&self) -> &QueryLedger {
        self.ledger
    }

    /// True iff `u <_σ v`; one query.
    pub fn compare(&self, u: usize, v: usize) -> Result<bool, TestError> {
        let n = self.target.n();
        if u == v {
            return Err(TestError::PreconditionViolated(format!("compare({u},{u})")));
        }
        for i in [u, v] {
            if i == 0 || i > n {
                return Err(CoreError::IndexOutOfRange { index: i, width: n }.into());
            }
        }
        self.ledger.charge_queries(1)?;
        Ok(self.target.less(u, v))
    }
}

/// Charged sampling access to a [`FiniteDistribution`].
pub struct Sampler<'a> {
    dist: &'a FiniteDistribution,
    ledger: &'a QueryLedger,
}

impl<'a> Sampler<'a> {
    pub fn new(dist: &'a FiniteDistribution, ledger: &'a QueryLedger) -> Self {
        Sampler { dist, ledger }
    }

    pub fn dist(&self) -> &'a FiniteDistribution {
        self.dist
    }

    pub fn ledger(&self) -> &'a QueryLedger {
        self.ledger
    }

    pub fn width(&self) -> usize {
        self.dist.width()
    }

    pub fn atom(&self, i: usize) -> &'a BitString {
        self.dist.atom(i)
    }

    /// One draw; returns the atom index.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize, TestError> {
        self.ledger.charge_samples(1)?;
        Ok(self.dist.sample_index(rng))
    }

    /// `m` draws kept as a set of atom indices (ascending); all `m` are charged.
    pub fn draw_set<R: Rng + ?Sized>(&self, m: u64, rng: &mut R) -> Result<Vec<usize>, TestError> {
        self.ledger.charge_samples(m)?;
        Ok(self.dist.sample_index_set(m, rng))
    }
}

/// Charged sampling access to a [`PairDistribution`] and its vertex marginal.
pub struct PairSampler<'a> {
    dist: &'a PairDistribution,
    ledger: &'a QueryLedger,
}

impl<'a> PairSampler<'a> {
    pub fn new(dist: &'a PairDistribution, ledger: &'a QueryLedger) -> Self {
        PairSampler { dist, ledger }
    }

    pub fn dist(&self) -> &'a PairDistribution {
        self.dist
    }

    pub fn draw_edge<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(usize, usize), TestError> {
        self.ledger.charge_samples(1)?;
        Ok(self.dist.sample_edge(rng))
    }

    pub fn draw_vertex<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize, TestError> {
        self.ledger.charge_samples(1)?;
        Ok(self.dist.sample_vertex(rng))
    }

    /// `m` edge draws kept as a set, in order of pair index.
    pub fn draw_edge_set<R: Rng + ?Sized>(
        &self,
        m: u64,
        rng: &mut R,
    ) -> Result<Vec<(usize, usize)>, TestError> {
        self.ledger.charge_samples(m)?;
        Ok(self
            .dist
            .sample_edge_set(m, rng)
            .into_iter()
            .map(|i| self.dist.pairs()[i])
            .collect())
    }

    /// `m` draws from the vertex marginal kept as a set, ascending.
    pub fn draw_vertex_set<R: Rng + ?Sized>(
        &self,
        m: u64,
        rng: &mut R,
    ) -> Result<Vec<usize>, TestError> {
        self.ledger.charge_samples(m)?;
        let mut out: Vec<usize> = (0..m).map(|_| self.dist.sample_vertex(rng)).collect();
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    struct Const(bool, usize);
    impl BooleanFunction for Const {
        fn width(&self) -> usize {
            self.1
        }
        fn eval(&self, _: &BitString) -> bool {
            self.0
        }
    }

    struct Natural(usize);
    impl Orientation for Natural {
        fn n(&self) -> usize {
            self.0
        }
        fn less(&self, u: usize, v: usize) -> bool {
            u < v
        }
    }

    #[test]
    fn counting_and_reports() {
        let ledger = QueryLedger::unlimited();
        assert_eq!(ledger.report(), LedgerReport::default());
        let f = Const(true, 3);
        let o = FunctionOracle::new(&f, &ledger);
        for _ in 0..5 {
            assert!(o.query(&BitString::zeros(3)).unwrap());
        }
        let d = FiniteDistribution::point_mass(BitString::zeros(3));
        let s = Sampler::new(&d, &ledger);
        let mut rng = SeededRng::new(0, 0);
        s.draw(&mut rng).unwrap();
        s.draw(&mut rng).unwrap();
        assert_eq!(
            ledger.report(),
            LedgerReport {
                function_queries: 5,
                samples_drawn: 2
            }
        );
        let sum = ledger.report() + ledger.report();
        assert_eq!(
            sum,
            LedgerReport {
                function_queries: 10,
                samples_drawn: 4
            }
        );
    }

    #[test]
    fn set_draw_charges_every_draw() {
        let ledger = QueryLedger::unlimited();
        let d = FiniteDistribution::point_mass(BitString::zeros(2));
        let s = Sampler::new(&d, &ledger);
        let set = s.draw_set(7, &mut SeededRng::new(0, 0)).unwrap();
        assert_eq!(set, vec![0]);
        assert_eq!(ledger.report().samples_drawn, 7);
    }

    #[test]
    fn budget_stops_at_limit() {
        let ledger = QueryLedger::new(Budget::queries(3));
        let f = Const(false, 2);
        let o = FunctionOracle::new(&f, &ledger);
        for _ in 0..3 {
            o.query(&BitString::zeros(2)).unwrap();
        }
        let err = o.query(&BitString::zeros(2)).unwrap_err();
        assert!(matches!(
            err,
            TestError::BudgetExhausted {
                counter: Counter::Queries,
                limit: 3
            }
        ));
        assert_eq!(ledger.report().function_queries, 3);
    }

    #[test]
    fn comparison_contract() {
        let ledger = QueryLedger::unlimited();
        let t = Natural(10);
        let c = ComparisonOracle::new(&t, &ledger);
        assert!(c.compare(3, 7).unwrap());
        assert!(!c.compare(7, 3).unwrap());
        assert!(c.compare(3, 3).is_err());
        assert_eq!(ledger.report().function_queries, 2);
    }

    #[test]
    fn memo_charges_once() {
        let ledger = QueryLedger::unlimited();
        let f = Const(true, 2);
        let o = MemoOracle::new(FunctionOracle::new(&f, &ledger));
        for _ in 0..10 {
            o.query(&BitString::zeros(2)).unwrap();
        }
        assert_eq!(ledger.report().function_queries, 1);
    }
}
