//! Problem instances, coalitions, matchings and the utility model.
//!
//! An individuals/activities (IA) problem pairs `m >= 2` individuals with
//! `n >= 1` capacitated activities. Each individual carries an interest in
//! `[-1, 1]` for every activity and an affinity in `[-1, 1]` for every peer.
//! The void activity (staying alone) is implicit: it has unbounded capacity,
//! neutral interest and singleton groups.

use thiserror::Error;

/// Tolerance used for every preference comparison on utilities, interests
/// and welfare values. Values closer than this are treated as indifferent,
/// which keeps tie sets (and hence census counts and solver decisions)
/// reproducible under floating-point evaluation order differences.
pub const PREFERENCE_TOLERANCE: f64 = 1e-12;

/// `x` and `y` are indifferent.
#[inline]
pub fn approx_eq(x: f64, y: f64) -> bool {
    (x - y).abs() <= PREFERENCE_TOLERANCE
}

/// `x` is weakly preferred to `y`.
#[inline]
pub fn approx_ge(x: f64, y: f64) -> bool {
    x >= y - PREFERENCE_TOLERANCE
}

/// `x` is strictly preferred to `y`.
#[inline]
pub fn approx_gt(x: f64, y: f64) -> bool {
    x > y + PREFERENCE_TOLERANCE
}

/// Index of an individual in its problem (position in declaration order).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Individual(pub usize);

/// Index of a real activity in its problem (position in declaration order).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Activity(pub usize);

/// An assignment target: a real activity, or `None` for the void activity.
pub type Target = Option<Activity>;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("an IA problem needs at least two individuals, got {0}")]
    TooFewIndividuals(usize),
    #[error("an IA problem needs at least one activity, got {0}")]
    NoActivity(usize),
    #[error("activity {id:?} has zero capacity")]
    ZeroCapacity { id: String },
    #[error("duplicate {kind} id {id:?}")]
    DuplicateId { kind: &'static str, id: String },
    #[error("{what} for individual {id:?} is {value} (outside [-1, 1])")]
    ValueOutOfRange {
        what: &'static str,
        id: String,
        value: f64,
    },
    #[error("interest table has wrong shape (expected {m} x {n})")]
    BadInterestShape { m: usize, n: usize },
    #[error("affinity table has wrong shape (expected {m} x {m})")]
    BadAffinityShape { m: usize },
    #[error("individual {individual} is not a member of the given group")]
    NotAMember { individual: String },
    #[error("a void coalition must be a singleton, got a group of {size}")]
    VoidGroupNotSingleton { size: usize },
    #[error("matching assigns {got} individuals, problem has {expected}")]
    AssignmentSizeMismatch { got: usize, expected: usize },
    #[error("matching references unknown activity index {index}")]
    UnknownActivityIndex { index: usize },
}

/// An individuals/activities problem instance.
///
/// Interests and affinities are stored densely and indexed by declaration
/// order. The affinity function is total over ordered pairs of distinct
/// individuals and is not assumed symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct IAProblem {
    activity_ids: Vec<String>,
    capacities: Vec<u32>,
    individual_ids: Vec<String>,
    /// `interest[i][a]`, in [-1, 1]. Interest in the void activity is 0 and
    /// never stored.
    interest: Vec<Vec<f64>>,
    /// `affinity[i][j]`, in [-1, 1]; the diagonal is unused and kept at 0.
    affinity: Vec<Vec<f64>>,
    seed: Option<u64>,
}

impl IAProblem {
    pub fn new(
        activities: Vec<(String, u32)>,
        individuals: Vec<String>,
        interest: Vec<Vec<f64>>,
        affinity: Vec<Vec<f64>>,
    ) -> Result<Self, ModelError> {
        let m = individuals.len();
        let n = activities.len();
        if m < 2 {
            return Err(ModelError::TooFewIndividuals(m));
        }
        if n == 0 {
            return Err(ModelError::NoActivity(n));
        }
        for (id, c) in &activities {
            if *c == 0 {
                return Err(ModelError::ZeroCapacity { id: id.clone() });
            }
        }
        check_unique("activity", activities.iter().map(|(id, _)| id.as_str()))?;
        check_unique("individual", individuals.iter().map(|s| s.as_str()))?;
        if interest.len() != m || interest.iter().any(|row| row.len() != n) {
            return Err(ModelError::BadInterestShape { m, n });
        }
        if affinity.len() != m || affinity.iter().any(|row| row.len() != m) {
            return Err(ModelError::BadAffinityShape { m });
        }
        for (i, row) in interest.iter().enumerate() {
            for &v in row {
                if !(-1.0..=1.0).contains(&v) {
                    return Err(ModelError::ValueOutOfRange {
                        what: "interest",
                        id: individuals[i].clone(),
                        value: v,
                    });
                }
            }
        }
        for (i, row) in affinity.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                if i != j && !(-1.0..=1.0).contains(&w) {
                    return Err(ModelError::ValueOutOfRange {
                        what: "affinity",
                        id: individuals[i].clone(),
                        value: w,
                    });
                }
            }
        }
        let (activity_ids, capacities) = activities.into_iter().unzip();
        Ok(Self {
            activity_ids,
            capacities,
            individual_ids: individuals,
            interest,
            affinity,
            seed: None,
        })
    }

    /// Records the seed an instance was generated from (kept through
    /// serialization so benchmark runs stay reproducible).
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Number of individuals.
    pub fn m(&self) -> usize {
        self.individual_ids.len()
    }

    /// Number of real activities.
    pub fn n(&self) -> usize {
        self.activity_ids.len()
    }

    pub fn individuals(&self) -> impl Iterator<Item = Individual> {
        (0..self.m()).map(Individual)
    }

    pub fn activities(&self) -> impl Iterator<Item = Activity> {
        (0..self.n()).map(Activity)
    }

    pub fn capacity(&self, a: Activity) -> u32 {
        self.capacities[a.0]
    }

    /// Capacity of a target: real activities have their declared capacity,
    /// the void activity is unbounded.
    pub fn target_capacity(&self, target: Target) -> Option<u32> {
        target.map(|a| self.capacity(a))
    }

    pub fn individual_id(&self, i: Individual) -> &str {
        &self.individual_ids[i.0]
    }

    pub fn activity_id(&self, a: Activity) -> &str {
        &self.activity_ids[a.0]
    }

    /// Interest of `i` in a target; the void activity is neutral.
    pub fn interest(&self, i: Individual, target: Target) -> f64 {
        match target {
            Some(a) => self.interest[i.0][a.0],
            None => 0.0,
        }
    }

    /// Affinity of `i` for peer `j` (`i != j`).
    pub fn affinity(&self, i: Individual, j: Individual) -> f64 {
        debug_assert_ne!(i, j, "affinity is only defined for distinct pairs");
        self.affinity[i.0][j.0]
    }

    /// Sum of `i`'s affinities over the peers in `group`, ignoring `i`.
    pub(crate) fn affinity_sum<I: IntoIterator<Item = Individual>>(
        &self,
        i: Individual,
        group: I,
    ) -> f64 {
        group
            .into_iter()
            .filter(|&j| j != i)
            .map(|j| self.affinity[i.0][j.0])
            .sum()
    }

    /// Group affinity of `i` for a group containing `i`: the affinity sum
    /// over `i`'s peers scaled by `1 / (m - 1)`. An empty peer set yields 0.
    pub fn group_affinity(&self, i: Individual, group: &[Individual]) -> Result<f64, ModelError> {
        if !group.contains(&i) {
            return Err(ModelError::NotAMember {
                individual: self.individual_id(i).to_owned(),
            });
        }
        Ok(self.group_affinity_unchecked(i, group.iter().copied()))
    }

    pub(crate) fn group_affinity_unchecked<I: IntoIterator<Item = Individual>>(
        &self,
        i: Individual,
        group: I,
    ) -> f64 {
        self.affinity_sum(i, group) / (self.m() as f64 - 1.0)
    }

    /// Utility of `i` for practicing `target` with `group`: the mean of the
    /// group affinity and the interest in the target.
    ///
    /// Requires `i` in `group`; a void target additionally requires the
    /// group to be the singleton `{i}`.
    pub fn utility(
        &self,
        i: Individual,
        group: &[Individual],
        target: Target,
    ) -> Result<f64, ModelError> {
        if !group.contains(&i) {
            return Err(ModelError::NotAMember {
                individual: self.individual_id(i).to_owned(),
            });
        }
        if target.is_none() && group.len() != 1 {
            return Err(ModelError::VoidGroupNotSingleton { size: group.len() });
        }
        Ok(self.utility_unchecked(i, group.iter().copied(), target))
    }

    pub(crate) fn utility_unchecked<I: IntoIterator<Item = Individual>>(
        &self,
        i: Individual,
        group: I,
        target: Target,
    ) -> f64 {
        (self.group_affinity_unchecked(i, group) + self.interest(i, target)) / 2.0
    }
}

fn check_unique<'a>(
    kind: &'static str,
    ids: impl Iterator<Item = &'a str>,
) -> Result<(), ModelError> {
    let mut seen = std::collections::HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(ModelError::DuplicateId {
                kind,
                id: id.to_owned(),
            });
        }
    }
    Ok(())
}

/// A coalition: a target activity together with the group practicing it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coalition {
    pub target: Target,
    /// Members in ascending index order.
    pub group: Vec<Individual>,
}

impl Coalition {
    pub fn new(target: Target, mut group: Vec<Individual>) -> Self {
        group.sort_unstable();
        group.dedup();
        Self { target, group }
    }

    /// Capacity of the coalition: the activity's capacity, or 1 for void.
    pub fn capacity(&self, problem: &IAProblem) -> u32 {
        match self.target {
            Some(a) => problem.capacity(a),
            None => 1,
        }
    }

    /// Sound iff the group fits the capacity.
    pub fn is_sound(&self, problem: &IAProblem) -> bool {
        self.group.len() <= self.capacity(problem) as usize
    }
}

/// Occupancy of an activity under a matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActivityStatus {
    Oversubscribed,
    Undersubscribed,
    Full,
}

/// A matching, stored as the total assignment of individuals to targets.
///
/// Groups and participation are derived from the assignment, so the
/// partition laws hold by construction; only capacity soundness remains to
/// be checked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    assignment: Vec<Target>,
}

impl Matching {
    pub fn new(assignment: Vec<Target>) -> Self {
        Self { assignment }
    }

    /// The trivial matching: everybody on the void activity.
    pub fn trivial(m: usize) -> Self {
        Self {
            assignment: vec![None; m],
        }
    }

    /// Number of individuals covered by the assignment.
    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn target(&self, i: Individual) -> Target {
        self.assignment[i.0]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Individual, Target)> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .map(|(i, &t)| (Individual(i), t))
    }

    pub fn as_slice(&self) -> &[Target] {
        &self.assignment
    }

    /// Participation: the individuals assigned to `a`, ascending.
    pub fn participants(&self, a: Activity) -> Vec<Individual> {
        self.iter()
            .filter(|&(_, t)| t == Some(a))
            .map(|(i, _)| i)
            .collect()
    }

    /// The individuals on the void activity, ascending.
    pub fn inactive(&self) -> Vec<Individual> {
        self.iter()
            .filter(|&(_, t)| t.is_none())
            .map(|(i, _)| i)
            .collect()
    }

    /// The group of `i`: the participants of its activity, or `{i}` when
    /// `i` is on the void activity.
    pub fn group(&self, i: Individual) -> Vec<Individual> {
        match self.target(i) {
            Some(a) => self.participants(a),
            None => vec![i],
        }
    }

    /// The coalition containing `i`.
    pub fn coalition(&self, i: Individual) -> Coalition {
        Coalition {
            target: self.target(i),
            group: self.group(i),
        }
    }

    /// Newcomers reached by deviating to a target: the current participants
    /// for a real activity, nobody for the void activity.
    pub fn newcomers(&self, target: Target) -> Vec<Individual> {
        match target {
            Some(a) => self.participants(a),
            None => Vec::new(),
        }
    }

    /// Participant groups for all real activities, one per activity.
    pub fn groups_by_activity(&self, n: usize) -> Vec<Vec<Individual>> {
        let mut groups = vec![Vec::new(); n];
        for (i, t) in self.iter() {
            if let Some(a) = t {
                groups[a.0].push(i);
            }
        }
        groups
    }
}

/// Classifies the occupancy of a target. The void activity is always
/// undersubscribed.
pub fn activity_status(problem: &IAProblem, matching: &Matching, target: Target) -> ActivityStatus {
    match target {
        None => ActivityStatus::Undersubscribed,
        Some(a) => {
            let count = matching.participants(a).len();
            let cap = problem.capacity(a) as usize;
            if count > cap {
                ActivityStatus::Oversubscribed
            } else if count < cap {
                ActivityStatus::Undersubscribed
            } else {
                ActivityStatus::Full
            }
        }
    }
}

/// Soundness report for a matching: which activities are oversubscribed,
/// and by how much. An empty report means the matching is sound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    /// `(activity, participant count)` for every oversubscribed activity.
    pub oversubscribed: Vec<(Activity, usize)>,
}

impl ValidationReport {
    pub fn is_sound(&self) -> bool {
        self.oversubscribed.is_empty()
    }
}

/// Checks a matching against a problem. Structural defects (wrong number of
/// individuals, out-of-range activity index) are errors; capacity violations
/// are reported, not errors.
pub fn validate_matching(
    problem: &IAProblem,
    matching: &Matching,
) -> Result<ValidationReport, ModelError> {
    if matching.len() != problem.m() {
        return Err(ModelError::AssignmentSizeMismatch {
            got: matching.len(),
            expected: problem.m(),
        });
    }
    for (_, t) in matching.iter() {
        if let Some(a) = t {
            if a.0 >= problem.n() {
                return Err(ModelError::UnknownActivityIndex { index: a.0 });
            }
        }
    }
    let mut counts = vec![0usize; problem.n()];
    for (_, t) in matching.iter() {
        if let Some(a) = t {
            counts[a.0] += 1;
        }
    }
    let oversubscribed = counts
        .iter()
        .enumerate()
        .filter(|&(a, &c)| c > problem.capacity(Activity(a)) as usize)
        .map(|(a, &c)| (Activity(a), c))
        .collect();
    Ok(ValidationReport { oversubscribed })
}
