//! Shared fixtures for the integration suites: the walk-through instance,
//! its named matchings and a deterministic instance sampler.

use ia_core::model::{Activity, IAProblem, Individual, Matching};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const A: Activity = Activity(0);
pub const B: Activity = Activity(1);

/// Individual with 1-based id `k`.
pub fn ind(k: usize) -> Individual {
    Individual(k - 1)
}

/// The four-juggler walk-through instance: two activities (clubs `a`,
/// balls `b`) of capacity two each.
pub fn toy() -> IAProblem {
    IAProblem::new(
        vec![("a".into(), 2), ("b".into(), 2)],
        vec!["1".into(), "2".into(), "3".into(), "4".into()],
        vec![
            vec![0.50, 0.25],
            vec![0.50, 0.25],
            vec![0.50, 0.25],
            vec![0.50, 0.25],
        ],
        vec![
            vec![0.0, 1.0, -0.5, -1.0],
            vec![1.0, 0.0, 0.5, -1.0],
            vec![1.0, 0.5, 0.0, -1.0],
            vec![1.0, 1.0, -1.0, 0.0],
        ],
    )
    .unwrap()
}

/// `{a: {1,2}, b: {4}, void: {3}}`
pub fn toy_m1() -> Matching {
    Matching::new(vec![Some(A), Some(A), None, Some(B)])
}

/// `{a: {1,2}, b: {3}, void: {4}}`
pub fn toy_m1_prime() -> Matching {
    Matching::new(vec![Some(A), Some(A), Some(B), None])
}

/// `{a: {1,2}, b: {3,4}}`
pub fn toy_m2() -> Matching {
    Matching::new(vec![Some(A), Some(A), Some(B), Some(B)])
}

/// `{a: {1,4}, b: {2,3}}`
pub fn toy_m3() -> Matching {
    Matching::new(vec![Some(A), Some(B), Some(B), Some(A)])
}

/// `{a: {3,4}, b: {1,2}}`
pub fn toy_m3_prime() -> Matching {
    Matching::new(vec![Some(B), Some(B), Some(A), Some(A)])
}

/// Sizes and seeds for a reproducible batch of random instances with
/// `m` in `m_range` and `n` in `n_range` (both inclusive).
pub fn instance_specs(
    count: usize,
    m_range: (usize, usize),
    n_range: (usize, usize),
    sampler_seed: u64,
) -> Vec<(usize, usize, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(sampler_seed);
    (0..count)
        .map(|_| {
            let m = rng.gen_range(m_range.0..=m_range.1);
            let n = rng.gen_range(n_range.0..=n_range.1);
            (m, n, rng.gen())
        })
        .collect()
}

/// Asserts the termination variant strictly decreases along a trace.
pub fn assert_variant_decreases(problem: &IAProblem, trace: &ia_core::engine::Trace) {
    let series = ia_core::engine::loop_variant_series(problem, trace);
    for pair in series.windows(2) {
        assert!(
            pair[1] < pair[0],
            "loop variant failed to decrease: {series:?}"
        );
    }
}
