//! Seeded random instance generation.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{IAProblem, ModelError};

/// How per-activity capacities are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapacityRule {
    /// Every activity gets capacity `ceil(m / n)`.
    EvenSplit,
    /// Every activity gets the given capacity.
    Fixed(u32),
}

impl Default for CapacityRule {
    fn default() -> Self {
        CapacityRule::EvenSplit
    }
}

/// Generates a random instance of size `(m, n)`: interests and affinities
/// are drawn independently and uniformly from `[-1, 1]` by a deterministic
/// generator seeded with `seed`. The seed is recorded in the instance.
///
/// Activities are named `a1..an`, individuals `1..m`.
pub fn generate_random(
    m: usize,
    n: usize,
    seed: u64,
    rule: CapacityRule,
) -> Result<IAProblem, ModelError> {
    if m < 2 {
        return Err(ModelError::TooFewIndividuals(m));
    }
    if n == 0 {
        return Err(ModelError::NoActivity(n));
    }
    let capacity = match rule {
        CapacityRule::EvenSplit => (m as u32).div_ceil(n as u32),
        CapacityRule::Fixed(c) => c,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Uniform::new_inclusive(-1.0f64, 1.0f64);

    let activities = (1..=n).map(|k| (format!("a{k}"), capacity)).collect();
    let individuals = (1..=m).map(|k| k.to_string()).collect();
    let interest = (0..m)
        .map(|_| (0..n).map(|_| unit.sample(&mut rng)).collect())
        .collect();
    let affinity = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| if i == j { 0.0 } else { unit.sample(&mut rng) })
                .collect()
        })
        .collect();
    Ok(IAProblem::new(activities, individuals, interest, affinity)?.with_seed(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Activity;

    #[test]
    fn deterministic_under_fixed_seed() {
        let p1 = generate_random(4, 2, 42, CapacityRule::EvenSplit).unwrap();
        let p2 = generate_random(4, 2, 42, CapacityRule::EvenSplit).unwrap();
        assert_eq!(p1, p2);
        let p3 = generate_random(4, 2, 43, CapacityRule::EvenSplit).unwrap();
        assert_ne!(p1, p3);
    }

    #[test]
    fn even_split_capacities() {
        let p = generate_random(10, 2, 1, CapacityRule::EvenSplit).unwrap();
        assert!(p.activities().all(|a| p.capacity(a) == 5));
        let p = generate_random(100, 10, 1, CapacityRule::EvenSplit).unwrap();
        assert!(p.activities().all(|a| p.capacity(a) == 10));
        let p = generate_random(7, 3, 1, CapacityRule::EvenSplit).unwrap();
        assert!(p.activities().all(|a| p.capacity(a) == 3));
    }

    #[test]
    fn values_in_range_and_seed_recorded() {
        let p = generate_random(12, 3, 9, CapacityRule::Fixed(4)).unwrap();
        assert_eq!(p.seed(), Some(9));
        assert_eq!(p.capacity(Activity(0)), 4);
        for i in p.individuals() {
            for a in p.activities() {
                let v = p.interest(i, Some(a));
                assert!((-1.0..=1.0).contains(&v));
            }
            for j in p.individuals() {
                if i != j {
                    let w = p.affinity(i, j);
                    assert!((-1.0..=1.0).contains(&w));
                }
            }
        }
    }

    #[test]
    fn invalid_sizes_rejected() {
        assert!(generate_random(1, 1, 0, CapacityRule::EvenSplit).is_err());
        assert!(generate_random(4, 0, 0, CapacityRule::EvenSplit).is_err());
    }
}
