//! Frozen reference values for closed-form sizes, budgets and intervals.
//! Each constant was computed outside the crate and is rechecked here against a
//! second, straight-line evaluation of the same formula.

use sublintest::dl::index_search_bound;
use sublintest::mdl::MdlParams;
use sublintest::stats::{wilson, Z_ONE_SIDED_99};
use sublintest::total::{total_query_budget, total_sample_budget, TotalParams};

fn lg(x: f64) -> f64 {
    x.log2().max(1.0)
}

fn up(x: f64) -> u64 {
    x.ceil() as u64
}

#[test]
fn total_budgets_at_1024() {
    let (n, eps) = (1024usize, 0.1);
    let p = TotalParams::default();
    // Recomputed from the component counts.
    let m = up(8.0 * 32.0 / eps);
    let find = 12 + 2;
    let crowd = up(1000.0 * lg(n as f64));
    let q = m * 12
        + m
        + up(100.0 / eps) * (2 * find + 1)
        + m * (2 * find + 1)
        + m * find
        + 2 * m * crowd;
    assert_eq!(q, 51_372_360);
    assert_eq!(total_query_budget(n, eps, &p), 51_372_360);
    assert_eq!(total_sample_budget(n, eps, &p), 8_680);
    assert_eq!(m + up(100.0 / eps) + 2 * m, 8_680);
}

#[test]
fn monotone_list_sizes_at_1000() {
    let (n, eps) = (1000usize, 0.1);
    let s = MdlParams::default().sizes(n, eps);
    let nf = n as f64;
    let d = 1.0 / 6.0;
    let expected = [
        ("pre", s.pre, 5_624, up(nf.powf(1.0 - d / 2.0) / eps)),
        ("probes", s.probes, 317, up(nf.powf(1.0 - d))),
        (
            "big_threshold",
            s.big_threshold,
            399,
            up(4.0 * lg(nf) / eps),
        ),
        (
            "round_draws",
            s.round_draws,
            13_288,
            up(100.0 * lg(nf / eps) / eps),
        ),
        (
            "round_threshold",
            s.round_threshold,
            67,
            up(5.0 * lg(nf / eps)),
        ),
        (
            "small_limit",
            s.small_limit,
            5_043,
            up(16.0 * nf.powf(d) * lg(nf) / eps),
        ),
        ("t1", s.t1, 2_530, up(8.0 * nf.sqrt() / eps)),
        (
            "t2p",
            s.t2p,
            1,
            up(nf.powf(d / 2.0) / (eps * lg(nf) * lg(nf))).max(1),
        ),
        (
            "t2q",
            s.t2q,
            5_565_888,
            up(nf.powf(1.0 - d / 2.0) * lg(nf).powi(3) / eps),
        ),
        ("t5", s.t5, 14_227, up(8.0 * nf.powf(0.75) / eps)),
    ];
    for (name, got, frozen, recomputed) in expected {
        assert_eq!(got, frozen, "{name}");
        assert_eq!(recomputed, frozen, "{name} recomputation");
    }
    assert_eq!(s.pair_cap, 2 * s.small_limit);
}

#[test]
fn index_search_bound_values() {
    assert_eq!(index_search_bound(1024), 46);
    assert_eq!(index_search_bound(1000), 46);
    assert_eq!(index_search_bound(2), 10);
}

#[test]
fn wilson_reference_intervals() {
    let cases = [
        (150, 200, 0.672_833, 0.813_998),
        (190, 200, 0.900_844, 0.975_451),
    ];
    for (s, t, lo, hi) in cases {
        let (l, h) = wilson(s, t, Z_ONE_SIDED_99);
        assert!(
            (l - lo).abs() < 1e-5 && (h - hi).abs() < 1e-5,
            "{s}/{t}: ({l}, {h})"
        );
    }
}
