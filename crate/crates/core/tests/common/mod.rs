//! Randomized postcondition checks shared by the property and acceptance tests.
//! Each check draws one case from `seed` and returns a description of any violation.

#![allow(dead_code)]

use rand::Rng;
use sublintest::bits::BitString;
use sublintest::dl::{index_search, index_search_bound};
use sublintest::dl_model::{GeneralDLRep, MonotoneDLRep};
use sublintest::mdl::{find_block_mdl, find_rep, max_index, sketch_mdl, BigBlockSet, MdlSketch};
use sublintest::oracle::{FunctionOracle, QueryLedger};
use sublintest::SeededRng;

pub type Check = Result<(), String>;

/// A nonzero string with between 1 and `max_weight` set bits.
pub fn low_weight(n: usize, max_weight: usize, rng: &mut SeededRng) -> BitString {
    let w = rng.random_range(1..=max_weight.min(n));
    let idx: Vec<usize> = rand::seq::index::sample(rng, n, w)
        .into_iter()
        .map(|i| i + 1)
        .collect();
    BitString::from_indices(n, &idx).unwrap()
}

pub fn random_string(n: usize, rng: &mut SeededRng) -> BitString {
    let mut x = BitString::zeros(n);
    for i in 1..=n {
        if rng.random_bool(0.5) {
            x.set(i, true);
        }
    }
    x
}

fn random_n(rng: &mut SeededRng) -> usize {
    if rng.random_bool(0.5) {
        rng.random_range(2..=16)
    } else {
        rng.random_range(17..=1024)
    }
}

/// `f(x* ∨ ⋁Y) = f(⋁(X ∪ Y))` on a random monotone list.
pub fn check_find_rep(seed: u64) -> Check {
    let mut rng = SeededRng::new(seed, 1);
    let n = random_n(&mut rng);
    let f = MonotoneDLRep::random(n, &mut rng);
    let xs: Vec<BitString> = (0..rng.random_range(1..=24))
        .map(|_| low_weight(n, 4, &mut rng))
        .collect();
    let ys: Vec<BitString> = (0..rng.random_range(0..=4))
        .map(|_| low_weight(n, 4, &mut rng))
        .collect();
    let ledger = QueryLedger::unlimited();
    let o = FunctionOracle::new(&f, &ledger);
    let xr: Vec<&BitString> = xs.iter().collect();
    let yr: Vec<&BitString> = ys.iter().collect();
    let p = find_rep(&o, &xr, &yr).map_err(|e| e.to_string())?;
    let mut y_or = BitString::zeros(n);
    for y in &ys {
        y_or.or_assign(y);
    }
    let mut all = y_or.clone();
    for x in &xs {
        all.or_assign(x);
    }
    if f.eval(&(&xs[p] | &y_or)) != f.eval(&all) {
        return Err(format!(
            "seed {seed}: goal equation fails for n={n}, x*={}",
            xs[p]
        ));
    }
    Ok(())
}

/// A random monotone list with a consistent sketch built from low-weight strings.
pub fn mdl_with_sketch(rng: &mut SeededRng) -> (MonotoneDLRep, MdlSketch) {
    loop {
        let n = random_n(rng);
        let f = MonotoneDLRep::random(n, rng);
        let t: Vec<BitString> = (0..rng.random_range(4..=60))
            .map(|_| low_weight(n, 3, rng))
            .collect();
        let tr: Vec<&BitString> = t.iter().collect();
        let values: Vec<bool> = t.iter().map(|x| f.eval(x)).collect();
        if !values.contains(&true) || !values.contains(&false) {
            continue;
        }
        let ledger = QueryLedger::unlimited();
        let o = FunctionOracle::new(&f, &ledger);
        let sk = sketch_mdl(&o, &tr)
            .unwrap()
            .expect("a monotone list always has a consistent sketch");
        return (f, sk);
    }
}

/// The block a monotone list assigns to `x`, by scanning the sketch with `min_π`.
pub fn scan_block(f: &MonotoneDLRep, sk: &MdlSketch, x: &BitString) -> usize {
    let fx = f.eval(x);
    let m = f.min_index(x);
    let opposite: Vec<usize> = (1..=sk.k()).filter(|&j| sk.value(j) != fx).collect();
    match opposite.iter().find(|&&j| m < f.min_index(sk.s(j))) {
        Some(&j) => j - 1,
        None => opposite.last().unwrap() + 1,
    }
}

/// FindBlock agrees with the linear scan and with the parity rule.
pub fn check_find_block(seed: u64) -> Check {
    let mut rng = SeededRng::new(seed, 2);
    let (f, sk) = mdl_with_sketch(&mut rng);
    let n = f.n();
    let ledger = QueryLedger::unlimited();
    let o = FunctionOracle::new(&f, &ledger);
    for _ in 0..8 {
        let x = if rng.random_bool(0.3) {
            sk.s(rng.random_range(1..=sk.k())).clone()
        } else {
            low_weight(n, 5, &mut rng)
        };
        let loc = find_block_mdl(&o, &sk, &x).map_err(|e| e.to_string())?;
        let expect = scan_block(&f, &sk, &x);
        if loc.block != expect || loc.value != f.eval(&x) {
            return Err(format!(
                "seed {seed}: block {} but scan gives {expect} for {x}",
                loc.block
            ));
        }
        let odd = loc.block % 2 == 1;
        if loc.block >= 1 && loc.block <= sk.k() && (loc.value == sk.value(1)) != odd {
            return Err(format!(
                "seed {seed}: parity of block {} disagrees with value",
                loc.block
            ));
        }
        if let Some(l) = (1..=sk.k()).find(|&l| sk.s(l) == &x) {
            if loc.block != l {
                return Err(format!(
                    "seed {seed}: s^({l}) located in block {}",
                    loc.block
                ));
            }
        }
    }
    Ok(())
}

/// Every MaxIndex answer passes the block and value checks; with the block outside `L`
/// it also dominates the rest of `supp(x)`.
pub fn check_max_index(seed: u64) -> Check {
    let mut rng = SeededRng::new(seed, 3);
    let (f, sk) = mdl_with_sketch(&mut rng);
    let n = f.n();
    let ledger = QueryLedger::unlimited();
    let o = FunctionOracle::new(&f, &ledger);
    for _ in 0..6 {
        let x = low_weight(n, 6, &mut rng);
        let block = scan_block(&f, &sk, &x);
        let in_l = rng.random_bool(0.3) && block >= 1 && block <= sk.k();
        let big = if in_l {
            BigBlockSet::from_members(sk.k(), &[block])
        } else {
            BigBlockSet::empty(sk.k())
        };
        let Some(i) = max_index(&o, &sk, &big, n as u64, &x).map_err(|e| e.to_string())? else {
            if !in_l {
                return Err(format!("seed {seed}: nil on a monotone list for {x}"));
            }
            continue;
        };
        let ei = BitString::unit(i, n).unwrap();
        if !x.get(i) || f.eval(&ei) != f.eval(&x) || scan_block(&f, &sk, &ei) != block {
            return Err(format!("seed {seed}: index {i} fails the checks for {x}"));
        }
        if !in_l {
            for j in x.support() {
                let ej = BitString::unit(j, n).unwrap();
                if f.eval(&(&ei | &ej)) != f.eval(&ei) {
                    return Err(format!("seed {seed}: index {i} does not dominate {j}"));
                }
            }
        }
    }
    Ok(())
}

/// The IndexSearch contract on random decision lists, and its query bound.
pub fn check_index_search(seed: u64) -> Check {
    let mut rng = SeededRng::new(seed, 4);
    let n = random_n(&mut rng);
    let f = GeneralDLRep::random(n, &mut rng);
    let pi = f.pi().to_vec();
    for _ in 0..20 {
        // Strings near the default string fire late; flipping a few bits moves the firing rule.
        let mut r = f.default_string().clone();
        let mut y = f.default_string().clone();
        for _ in 0..rng.random_range(0..=3) {
            r.flip(rng.random_range(1..=n));
        }
        for _ in 0..rng.random_range(1..=4) {
            y.flip(rng.random_range(1..=n));
        }
        if rng.random_bool(0.2) {
            y = random_string(n, &mut rng);
        }
        if f.eval(&r) == f.eval(&y) {
            continue;
        }
        let ledger = QueryLedger::unlimited();
        let o = FunctionOracle::new(&f, &ledger);
        let got = index_search(&o, &r, &y).map_err(|e| e.to_string())?;
        let q = ledger.report().function_queries;
        if q > index_search_bound(n) {
            return Err(format!("seed {seed}: {q} queries exceed the bound"));
        }
        let (mr, my) = (f.min_index(&r), f.min_index(&y));
        if mr > my {
            let Some(i) = got else {
                return Err(format!("seed {seed}: nil although min(r) > min(y)"));
            };
            let mut ri = r.clone();
            ri.flip(i);
            if f.rank(i) > mr || f.eval(&ri) == f.eval(&r) || r.get(i) == y.get(i) {
                return Err(format!("seed {seed}: index {i} violates the contract"));
            }
        } else if mr < my && got.is_some_and(|i| i != pi[mr - 1]) {
            return Err(format!(
                "seed {seed}: returned {got:?}, expected π(min(r)) = {} or nil",
                pi[mr - 1]
            ));
        }
    }
    Ok(())
}

/// Runs `check` on `count` consecutive seeds and collects failures.
pub fn run_checks(check: fn(u64) -> Check, count: u64, base: u64) -> Vec<String> {
    (base..base + count)
        .filter_map(|s| check(s).err())
        .collect()
}
