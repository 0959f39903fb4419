//! Property-based invariants: normalization, separability, soundness
//! characterization, welfare bounds and format round-trips.

mod common;

use ia_core::criteria;
use ia_core::generate::{generate_random, CapacityRule};
use ia_core::io;
use ia_core::model::{validate_matching, Activity, IAProblem, Individual, Matching};
use proptest::prelude::*;

fn arb_problem() -> impl Strategy<Value = IAProblem> {
    (2usize..9, 1usize..4, any::<u64>()).prop_map(|(m, n, seed)| {
        generate_random(m, n, seed, CapacityRule::EvenSplit).unwrap()
    })
}

/// A problem together with an arbitrary total assignment (not necessarily
/// sound).
fn arb_problem_and_assignment() -> impl Strategy<Value = (IAProblem, Matching)> {
    arb_problem().prop_flat_map(|p| {
        let m = p.m();
        let n = p.n();
        (
            Just(p),
            proptest::collection::vec(0usize..=n, m).prop_map(move |digits| {
                Matching::new(
                    digits
                        .into_iter()
                        .map(|d| if d == 0 { None } else { Some(Activity(d - 1)) })
                        .collect(),
                )
            }),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn group_affinity_and_utility_stay_normalized((p, matching) in arb_problem_and_assignment()) {
        for i in p.individuals() {
            let group = matching.group(i);
            let w = p.group_affinity(i, &group).unwrap();
            prop_assert!((-1.0..=1.0).contains(&w));
            if matching.target(i).is_some() || group.len() == 1 {
                let u = p.utility(i, &group, matching.target(i)).unwrap();
                prop_assert!((-1.0..=1.0).contains(&u));
            }
        }
    }

    #[test]
    fn group_affinity_is_additively_separable(p in arb_problem(), picks in proptest::collection::vec(any::<u32>(), 3)) {
        let m = p.m();
        let i = Individual(picks[0] as usize % m);
        let k = Individual(picks[1] as usize % m);
        prop_assume!(i != k);
        // A group containing i but not k.
        let mut group: Vec<Individual> = p
            .individuals()
            .filter(|&j| j != k && (j == i || (picks[2] >> j.0) & 1 == 1))
            .collect();
        let without = p.group_affinity(i, &group).unwrap();
        group.push(k);
        let with = p.group_affinity(i, &group).unwrap();
        let expected = p.affinity(i, k) / (m as f64 - 1.0);
        prop_assert!((with - without - expected).abs() < 1e-12);
    }

    #[test]
    fn staying_alone_is_worth_exactly_zero(p in arb_problem()) {
        for i in p.individuals() {
            prop_assert_eq!(p.utility(i, &[i], None).unwrap(), 0.0);
        }
    }

    #[test]
    fn validation_accepts_exactly_capacity_respecting_assignments((p, matching) in arb_problem_and_assignment()) {
        let report = validate_matching(&p, &matching).unwrap();
        let fits = p
            .activities()
            .all(|a| matching.participants(a).len() <= p.capacity(a) as usize);
        prop_assert_eq!(report.is_sound(), fits);
    }

    #[test]
    fn welfares_are_bounded_and_ordered((p, matching) in arb_problem_and_assignment()) {
        prop_assume!(validate_matching(&p, &matching).unwrap().is_sound());
        let u = criteria::utilitarian_welfare(&p, &matching).unwrap();
        let e = criteria::egalitarian_welfare(&p, &matching).unwrap();
        prop_assert!((-1.0..=1.0).contains(&u));
        prop_assert!((-1.0..=1.0).contains(&e));
        prop_assert!(e <= u + 1e-12);
    }

    #[test]
    fn problem_files_round_trip(p in arb_problem()) {
        let text = io::serialize_problem(&p);
        let back = io::parse_problem(&text).unwrap();
        prop_assert_eq!(p, back);
    }

    #[test]
    fn matching_files_round_trip((p, matching) in arb_problem_and_assignment()) {
        let text = io::serialize_matching(&p, &matching);
        let back = io::parse_matching(&text, &p).unwrap();
        prop_assert_eq!(matching, back);
    }
}
