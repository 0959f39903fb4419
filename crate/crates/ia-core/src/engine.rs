//! Centralized clearing-house mechanisms and the hill-climbing baseline.
//!
//! Both mechanisms run the same deferred-acceptance loop: free individuals,
//! processed first-in-first-out in id order, propose themselves down their
//! concession lists; each host activity resolves the proposal under a social
//! decision rule; rejected and ejected individuals concede and re-enter the
//! queue. The selective host re-optimizes its group on every proposal
//! (exactly over all subgroups, or approximately by excluding at most one
//! member); the inclusive host accepts unconditionally until full and then
//! considers swapping exactly one member out.

use std::collections::VecDeque;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::criteria::SocialRule;
use crate::model::{approx_gt, Activity, IAProblem, Individual, Matching, Target};

/// Ceiling on `group + proposer` size for the exact selective variant,
/// which enumerates all subgroups.
pub const MAX_EXACT_GROUP: usize = 20;

/// The two clearing-house mechanisms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mechanism {
    Selective { approximation: bool },
    Inclusive,
}

impl std::fmt::Display for Mechanism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mechanism::Selective {
                approximation: false,
            } => write!(f, "selective"),
            Mechanism::Selective {
                approximation: true,
            } => write!(f, "selective-approx"),
            Mechanism::Inclusive => write!(f, "inclusive"),
        }
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("no candidate group to decide between")]
    NoCandidates,
    #[error("candidate group of {size} exceeds the capacity {capacity}")]
    UnsoundCandidate { size: usize, capacity: u32 },
    #[error("group of {size} exceeds the exact-variant limit {limit}; use the approximation")]
    GroupTooLarge { size: usize, limit: usize },
    #[error("{m} individuals cannot all be active: total capacity is {total_capacity}")]
    CannotStartAllActive { m: usize, total_capacity: usize },
}

/// An individual's attractive activities, most interesting first, ties
/// broken by declaration order. Consumed monotonically: once an activity
/// has rejected or ejected the individual it is never proposed to again.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcessionList {
    activities: Vec<Activity>,
}

impl ConcessionList {
    pub fn as_slice(&self) -> &[Activity] {
        &self.activities
    }

    pub fn len(&self) -> usize {
        self.activities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.activities.is_empty()
    }
}

/// The activities with non-negative interest for `i`, in non-increasing
/// interest order (declaration order within ties).
pub fn concession_list(problem: &IAProblem, i: Individual) -> ConcessionList {
    let mut activities: Vec<Activity> = problem
        .activities()
        .filter(|&a| problem.interest(i, Some(a)) >= 0.0)
        .collect();
    activities.sort_by(|&x, &y| {
        problem
            .interest(i, Some(y))
            .total_cmp(&problem.interest(i, Some(x)))
            .then(x.0.cmp(&y.0))
    });
    ConcessionList { activities }
}

/// Score of a group under a social decision rule: the sum (utilitarian) or
/// minimum (egalitarian) of its members' utilities for the activity.
pub(crate) fn group_score(
    problem: &IAProblem,
    rule: SocialRule,
    activity: Activity,
    group: &[Individual],
) -> f64 {
    let utilities = group
        .iter()
        .map(|&j| problem.utility_unchecked(j, group.iter().copied(), Some(activity)));
    match rule {
        SocialRule::Utilitarian => utilities.sum(),
        SocialRule::Egalitarian => utilities.fold(f64::INFINITY, f64::min),
    }
}

/// Picks the best-scored candidate. Ties (within the preference tolerance)
/// are broken by: contains the proposer, then larger cardinality, then
/// lexicographically smallest member sequence. The winner is independent of
/// candidate order.
pub(crate) fn pick_best(
    candidates: &[(Vec<Individual>, f64)],
    proposer: Option<Individual>,
) -> usize {
    let beats = |cand: &(Vec<Individual>, f64), best: &(Vec<Individual>, f64)| -> bool {
        if approx_gt(cand.1, best.1) {
            return true;
        }
        if approx_gt(best.1, cand.1) {
            return false;
        }
        if let Some(p) = proposer {
            let (cp, bp) = (cand.0.contains(&p), best.0.contains(&p));
            if cp != bp {
                return cp;
            }
        }
        if cand.0.len() != best.0.len() {
            return cand.0.len() > best.0.len();
        }
        cand.0 < best.0
    };
    let mut best = 0;
    for idx in 1..candidates.len() {
        if beats(&candidates[idx], &candidates[best]) {
            best = idx;
        }
    }
    best
}

/// Applies a social decision rule to a non-empty set of candidate groups
/// for an activity, returning the chosen group.
pub fn decide_group(
    problem: &IAProblem,
    rule: SocialRule,
    activity: Activity,
    candidates: &[Vec<Individual>],
    proposer: Option<Individual>,
) -> Result<Vec<Individual>, EngineError> {
    if candidates.is_empty() {
        return Err(EngineError::NoCandidates);
    }
    let cap = problem.capacity(activity);
    let mut scored = Vec::with_capacity(candidates.len());
    for group in candidates {
        let mut group = group.clone();
        group.sort_unstable();
        group.dedup();
        if group.len() > cap as usize {
            return Err(EngineError::UnsoundCandidate {
                size: group.len(),
                capacity: cap,
            });
        }
        let score = group_score(problem, rule, activity, &group);
        scored.push((group, score));
    }
    let best = pick_best(&scored, proposer);
    Ok(scored.swap_remove(best).0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    Propose,
    Accept,
    Reject,
    Eject,
    Giveup,
}

/// One trace record. `activity` is `None` only for `Giveup`; `group_after`
/// is the host group right after the event applied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub step: usize,
    pub kind: EventKind,
    pub individual: Individual,
    pub activity: Target,
    pub group_after: Vec<Individual>,
}

/// Step-by-step record of a mechanism run. One step per processed free
/// individual: a proposal with its consequences, or a give-up.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
}

impl Trace {
    /// Serializes the trace as JSON lines with public ids.
    pub fn to_json_lines(&self, problem: &IAProblem) -> String {
        use serde_json::json;
        let mut out = String::new();
        for e in &self.events {
            let record = json!({
                "step": e.step,
                "event": e.kind,
                "individual": problem.individual_id(e.individual),
                "activity": e.activity.map(|a| problem.activity_id(a).to_owned()),
                "group_after": e.group_after
                    .iter()
                    .map(|&j| problem.individual_id(j).to_owned())
                    .collect::<Vec<_>>(),
            });
            out.push_str(&record.to_string());
            out.push('\n');
        }
        out
    }
}

/// Replays a trace and returns the termination variant
/// `sum of remaining concessions + number of free individuals` after each
/// step, starting with its initial value. The mechanisms strictly decrease
/// it at every step.
pub fn loop_variant_series(problem: &IAProblem, trace: &Trace) -> Vec<i64> {
    let mut remaining_total: i64 = problem
        .individuals()
        .map(|i| concession_list(problem, i).len() as i64)
        .sum();
    let mut free = problem.m() as i64;
    let mut series = vec![remaining_total + free];
    let mut events = trace.events.iter().peekable();
    while let Some(first) = events.next() {
        let step = first.step;
        let mut apply = |e: &TraceEvent| match e.kind {
            EventKind::Propose => {}
            EventKind::Accept => free -= 1,
            EventKind::Reject => remaining_total -= 1,
            EventKind::Eject => {
                remaining_total -= 1;
                free += 1;
            }
            EventKind::Giveup => free -= 1,
        };
        apply(first);
        while let Some(&next) = events.peek() {
            if next.step != step {
                break;
            }
            apply(next);
            events.next();
        }
        series.push(remaining_total + free);
    }
    series
}

/// Result of a mechanism run: the sound matching and its trace.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub matching: Matching,
    pub trace: Trace,
}

/// Runs the selective mechanism (exact or with the one-exclusion
/// approximation).
pub fn solve_selective(
    problem: &IAProblem,
    rule: SocialRule,
    approximation: bool,
) -> Result<SolveResult, EngineError> {
    solve(problem, Mechanism::Selective { approximation }, rule)
}

/// Runs the inclusive mechanism; its outcome is always socially cohesive.
pub fn solve_inclusive(problem: &IAProblem, rule: SocialRule) -> Result<SolveResult, EngineError> {
    solve(problem, Mechanism::Inclusive, rule)
}

/// Candidate groups a host considers for a proposal, given its current
/// group (sorted, sound) and the proposer (not a member). `None` means the
/// proposer is accepted unconditionally.
pub(crate) fn host_candidates(
    problem: &IAProblem,
    mechanism: Mechanism,
    activity: Activity,
    group: &[Individual],
    proposer: Individual,
) -> Result<Option<Vec<Vec<Individual>>>, EngineError> {
    let cap = problem.capacity(activity) as usize;
    let mut base = group.to_vec();
    base.push(proposer);
    base.sort_unstable();
    match mechanism {
        // Below capacity the inclusive host accepts unconditionally.
        Mechanism::Inclusive if group.len() < cap => Ok(None),
        // At capacity: the base minus exactly one member, each choice.
        Mechanism::Inclusive => Ok(Some(remove_one(&base))),
        Mechanism::Selective { .. } if group.is_empty() => Ok(None),
        Mechanism::Selective {
            approximation: true,
        } => {
            let mut candidates = remove_one(&base);
            if base.len() <= cap {
                candidates.push(base);
            }
            Ok(Some(candidates))
        }
        Mechanism::Selective {
            approximation: false,
        } => {
            if base.len() > MAX_EXACT_GROUP {
                return Err(EngineError::GroupTooLarge {
                    size: base.len(),
                    limit: MAX_EXACT_GROUP,
                });
            }
            let limit = (group.len() + 1).min(cap);
            Ok(Some(subgroups_up_to(&base, limit)))
        }
    }
}

/// All copies of `base` with exactly one member removed.
fn remove_one(base: &[Individual]) -> Vec<Vec<Individual>> {
    base.iter()
        .map(|&out| base.iter().copied().filter(|&k| k != out).collect())
        .collect()
}

/// All non-empty subsets of `base` of size at most `limit`.
fn subgroups_up_to(base: &[Individual], limit: usize) -> Vec<Vec<Individual>> {
    let mut subsets = Vec::new();
    for mask in 1u32..(1 << base.len()) {
        if (mask.count_ones() as usize) <= limit {
            subsets.push(
                base.iter()
                    .enumerate()
                    .filter(|(k, _)| mask & (1 << k) != 0)
                    .map(|(_, &j)| j)
                    .collect(),
            );
        }
    }
    subsets
}

/// Runs a clearing-house mechanism to completion.
pub fn solve(
    problem: &IAProblem,
    mechanism: Mechanism,
    rule: SocialRule,
) -> Result<SolveResult, EngineError> {
    let m = problem.m();
    let lists: Vec<ConcessionList> = problem
        .individuals()
        .map(|i| concession_list(problem, i))
        .collect();
    let mut pos = vec![0usize; m];
    let mut free: VecDeque<Individual> = problem.individuals().collect();
    let mut groups: Vec<Vec<Individual>> = vec![Vec::new(); problem.n()];
    let mut assignment: Vec<Target> = vec![None; m];
    let mut trace = Trace::default();
    let mut step = 0usize;

    while let Some(i) = free.pop_front() {
        if pos[i.0] >= lists[i.0].len() {
            // Concessions exhausted: definitively on the void activity.
            trace.events.push(TraceEvent {
                step,
                kind: EventKind::Giveup,
                individual: i,
                activity: None,
                group_after: Vec::new(),
            });
            step += 1;
            continue;
        }
        let a = lists[i.0].as_slice()[pos[i.0]];
        trace.events.push(TraceEvent {
            step,
            kind: EventKind::Propose,
            individual: i,
            activity: Some(a),
            group_after: groups[a.0].clone(),
        });

        let accepted_group = match host_candidates(problem, mechanism, a, &groups[a.0], i)? {
            None => {
                let mut g = groups[a.0].clone();
                g.push(i);
                g.sort_unstable();
                Some(g)
            }
            Some(candidates) => {
                let best = decide_group(problem, rule, a, &candidates, Some(i))?;
                best.contains(&i).then_some(best)
            }
        };

        match accepted_group {
            None => {
                pos[i.0] += 1;
                free.push_back(i);
                trace.events.push(TraceEvent {
                    step,
                    kind: EventKind::Reject,
                    individual: i,
                    activity: Some(a),
                    group_after: groups[a.0].clone(),
                });
            }
            Some(new_group) => {
                let old = std::mem::take(&mut groups[a.0]);
                let mut intermediate = old.clone();
                for &j in old.iter().filter(|j| !new_group.contains(j)) {
                    intermediate.retain(|&k| k != j);
                    pos[j.0] += 1;
                    assignment[j.0] = None;
                    free.push_back(j);
                    trace.events.push(TraceEvent {
                        step,
                        kind: EventKind::Eject,
                        individual: j,
                        activity: Some(a),
                        group_after: intermediate.clone(),
                    });
                }
                assignment[i.0] = Some(a);
                groups[a.0] = new_group;
                trace.events.push(TraceEvent {
                    step,
                    kind: EventKind::Accept,
                    individual: i,
                    activity: Some(a),
                    group_after: groups[a.0].clone(),
                });
            }
        }
        step += 1;
    }

    Ok(SolveResult {
        matching: Matching::new(assignment),
        trace,
    })
}

/// Outcome of the hill-climbing baseline.
#[derive(Debug, Clone)]
pub struct HillClimbOutcome {
    pub matching: Matching,
    /// Number of committed improvement steps.
    pub steps: usize,
    /// Whether a local optimum was reached (as opposed to the step cap).
    pub converged: bool,
    /// Objective value after each committed step, starting with the seeded
    /// initial matching.
    pub objective_trace: Vec<f64>,
}

/// Steepest-ascent local search over all-active matchings: one individual
/// moves to an undersubscribed activity, or swaps with a member of a full
/// one. Starts from a seeded random sound matching with everybody assigned
/// to a real activity; the void activity is never a move target.
pub fn hill_climb(
    problem: &IAProblem,
    objective: SocialRule,
    seed: u64,
    max_steps: usize,
) -> Result<HillClimbOutcome, EngineError> {
    let m = problem.m();
    let total_capacity: usize = problem
        .activities()
        .map(|a| problem.capacity(a) as usize)
        .sum();
    if m > total_capacity {
        return Err(EngineError::CannotStartAllActive { m, total_capacity });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut remaining: Vec<u32> = problem.activities().map(|a| problem.capacity(a)).collect();
    let mut assignment: Vec<Activity> = Vec::with_capacity(m);
    for _ in 0..m {
        let open: Vec<usize> = (0..problem.n()).filter(|&a| remaining[a] > 0).collect();
        let pick = open[rng.gen_range(0..open.len())];
        remaining[pick] -= 1;
        assignment.push(Activity(pick));
    }

    let mut state = ClimbState::new(problem, assignment);
    let mut objective_trace = vec![state.objective(objective)];
    let mut steps = 0;
    let mut converged = false;
    while steps < max_steps {
        let current = state.objective(objective);
        match state.best_neighbour(objective) {
            Some((neighbour, value)) if approx_gt(value, current) => {
                state.apply(neighbour);
                objective_trace.push(state.objective(objective));
                steps += 1;
            }
            _ => {
                converged = true;
                break;
            }
        }
    }

    Ok(HillClimbOutcome {
        matching: Matching::new(state.assignment.iter().map(|&a| Some(a)).collect()),
        steps,
        converged,
        objective_trace,
    })
}

#[derive(Debug, Clone, Copy)]
enum Neighbour {
    Move { i: Individual, to: Activity },
    Swap { i: Individual, k: Individual },
}

struct ClimbState<'p> {
    problem: &'p IAProblem,
    assignment: Vec<Activity>,
    groups: Vec<Vec<Individual>>,
    utilities: Vec<f64>,
}

impl<'p> ClimbState<'p> {
    fn new(problem: &'p IAProblem, assignment: Vec<Activity>) -> Self {
        let mut groups = vec![Vec::new(); problem.n()];
        for (i, &a) in assignment.iter().enumerate() {
            groups[a.0].push(Individual(i));
        }
        let mut state = Self {
            problem,
            assignment,
            groups,
            utilities: vec![0.0; problem.m()],
        };
        for i in problem.individuals() {
            state.utilities[i.0] = state.utility_of(i, state.assignment[i.0]);
        }
        state
    }

    fn utility_of(&self, i: Individual, a: Activity) -> f64 {
        self.problem
            .utility_unchecked(i, self.groups[a.0].iter().copied(), Some(a))
    }

    fn objective(&self, objective: SocialRule) -> f64 {
        match objective {
            SocialRule::Utilitarian => crate::criteria::mean(&self.utilities),
            SocialRule::Egalitarian => crate::criteria::min(&self.utilities),
        }
    }

    /// Best neighbour and its objective value, or `None` when the
    /// neighbourhood is empty. Ties keep the first candidate found, so the
    /// search is deterministic.
    fn best_neighbour(&self, objective: SocialRule) -> Option<(Neighbour, f64)> {
        let mut best: Option<(Neighbour, f64)> = None;
        for i in self.problem.individuals() {
            let from = self.assignment[i.0];
            for to in self.problem.activities() {
                if to == from {
                    continue;
                }
                if self.groups[to.0].len() < self.problem.capacity(to) as usize {
                    let value = self.evaluate(objective, i, to, None);
                    if best.is_none() || value > best.unwrap().1 {
                        best = Some((Neighbour::Move { i, to }, value));
                    }
                } else {
                    for &k in &self.groups[to.0] {
                        let value = self.evaluate(objective, i, to, Some(k));
                        if best.is_none() || value > best.unwrap().1 {
                            best = Some((Neighbour::Swap { i, k }, value));
                        }
                    }
                }
            }
        }
        best
    }

    /// Objective value after moving `i` to `to`, displacing `swap` back to
    /// `i`'s activity when given. Touches only the two affected groups
    /// (plus, for the egalitarian minimum, one pass over the rest).
    fn evaluate(
        &self,
        objective: SocialRule,
        i: Individual,
        to: Activity,
        swap: Option<Individual>,
    ) -> f64 {
        let problem = self.problem;
        let from = self.assignment[i.0];
        let shift = 2.0 * (problem.m() as f64 - 1.0);
        let from_group = &self.groups[from.0];
        let to_group = &self.groups[to.0];

        let new_u_i = (problem
            .affinity_sum(i, to_group.iter().copied().filter(|&j| Some(j) != swap))
            / (problem.m() as f64 - 1.0)
            + problem.interest(i, Some(to)))
            / 2.0;
        let new_u_k = swap.map(|k| {
            (problem.affinity_sum(k, from_group.iter().copied().filter(|&j| j != i))
                / (problem.m() as f64 - 1.0)
                + problem.interest(k, Some(from)))
                / 2.0
        });

        match objective {
            SocialRule::Utilitarian => {
                let mut delta = new_u_i - self.utilities[i.0];
                if let (Some(k), Some(u)) = (swap, new_u_k) {
                    delta += u - self.utilities[k.0];
                }
                for &j in from_group.iter().filter(|&&j| j != i) {
                    delta -= problem.affinity(j, i) / shift;
                    if let Some(k) = swap {
                        delta += problem.affinity(j, k) / shift;
                    }
                }
                for &j in to_group.iter().filter(|&&j| Some(j) != swap) {
                    delta += problem.affinity(j, i) / shift;
                    if let Some(k) = swap {
                        delta -= problem.affinity(j, k) / shift;
                    }
                }
                crate::criteria::mean(&self.utilities) + delta / problem.m() as f64
            }
            SocialRule::Egalitarian => {
                let mut lowest = new_u_i;
                if let Some(u) = new_u_k {
                    lowest = lowest.min(u);
                }
                for &j in from_group.iter().filter(|&&j| j != i) {
                    let mut u = self.utilities[j.0] - problem.affinity(j, i) / shift;
                    if let Some(k) = swap {
                        u += problem.affinity(j, k) / shift;
                    }
                    lowest = lowest.min(u);
                }
                for &j in to_group.iter().filter(|&&j| Some(j) != swap) {
                    let mut u = self.utilities[j.0] + problem.affinity(j, i) / shift;
                    if let Some(k) = swap {
                        u -= problem.affinity(j, k) / shift;
                    }
                    lowest = lowest.min(u);
                }
                // Individuals in untouched activities keep their utilities.
                for (a, group) in self.groups.iter().enumerate() {
                    if a == from.0 || a == to.0 {
                        continue;
                    }
                    for &j in group {
                        lowest = lowest.min(self.utilities[j.0]);
                    }
                }
                lowest
            }
        }
    }

    fn apply(&mut self, neighbour: Neighbour) {
        let (i, to, swap) = match neighbour {
            Neighbour::Move { i, to } => (i, to, None),
            Neighbour::Swap { i, k } => (i, self.assignment[k.0], Some(k)),
        };
        let from = self.assignment[i.0];
        self.groups[from.0].retain(|&j| j != i);
        self.groups[to.0].push(i);
        self.groups[to.0].sort_unstable();
        self.assignment[i.0] = to;
        if let Some(k) = swap {
            self.groups[to.0].retain(|&j| j != k);
            self.groups[from.0].push(k);
            self.groups[from.0].sort_unstable();
            self.assignment[k.0] = from;
        }
        // Recompute the touched groups' utilities from scratch so float
        // error cannot accumulate across steps.
        for a in [from, to] {
            for j in self.groups[a.0].clone() {
                self.utilities[j.0] = self.utility_of(j, a);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::*;

    fn assert_strictly_decreasing(series: &[i64]) {
        for pair in series.windows(2) {
            assert!(pair[1] < pair[0], "variant did not decrease: {series:?}");
        }
    }

    #[test]
    fn concession_lists_toy() {
        let p = toy();
        let list = concession_list(&p, ind(1));
        assert_eq!(list.as_slice(), &[A, B]);
    }

    #[test]
    fn concession_list_empty_when_repelled() {
        let p = all_repulsive();
        assert!(concession_list(&p, ind(1)).is_empty());
    }

    #[test]
    fn concession_list_tie_breaks_by_declaration() {
        let p = crate::IAProblem::new(
            vec![("a".into(), 1), ("b".into(), 1)],
            vec!["1".into(), "2".into()],
            vec![vec![0.3, 0.3], vec![-0.1, 0.2]],
            vec![vec![0.0, 0.1], vec![0.1, 0.0]],
        )
        .unwrap();
        assert_eq!(concession_list(&p, ind(1)).as_slice(), &[A, B]);
        assert_eq!(concession_list(&p, ind(2)).as_slice(), &[B]);
    }

    #[test]
    fn decide_group_toy_examples() {
        let p = toy();
        // All non-empty subsets of {1,2,3} of size <= 2, on the clubs.
        let candidates: Vec<Vec<Individual>> = vec![
            vec![ind(1)],
            vec![ind(2)],
            vec![ind(3)],
            vec![ind(1), ind(2)],
            vec![ind(1), ind(3)],
            vec![ind(2), ind(3)],
        ];
        let best = decide_group(&p, SocialRule::Utilitarian, A, &candidates, Some(ind(3))).unwrap();
        assert_eq!(best, vec![ind(1), ind(2)]);

        // Single candidate.
        let best = decide_group(&p, SocialRule::Utilitarian, A, &[vec![ind(2)]], None).unwrap();
        assert_eq!(best, vec![ind(2)]);

        // Proposer retention breaks the {3} vs {4} tie on the balls.
        let candidates = vec![vec![ind(3)], vec![ind(4)], vec![ind(3), ind(4)]];
        let best = decide_group(&p, SocialRule::Utilitarian, B, &candidates, Some(ind(4))).unwrap();
        assert_eq!(best, vec![ind(4)]);

        assert!(matches!(
            decide_group(&p, SocialRule::Utilitarian, A, &[], None),
            Err(EngineError::NoCandidates)
        ));
    }

    #[test]
    fn selective_reaches_m1_under_both_rules_and_variants() {
        let p = toy();
        for rule in [SocialRule::Utilitarian, SocialRule::Egalitarian] {
            for approximation in [false, true] {
                let result = solve_selective(&p, rule, approximation).unwrap();
                assert_eq!(result.matching, toy_m1(), "{rule} approx={approximation}");
            }
        }
    }

    #[test]
    fn inclusive_reaches_m2_under_both_rules() {
        let p = toy();
        for rule in [SocialRule::Utilitarian, SocialRule::Egalitarian] {
            let result = solve_inclusive(&p, rule).unwrap();
            assert_eq!(result.matching, toy_m2(), "{rule}");
        }
    }

    #[test]
    fn all_repulsive_yields_trivial_matching() {
        let p = all_repulsive();
        for mechanism in [
            Mechanism::Selective {
                approximation: false,
            },
            Mechanism::Selective {
                approximation: true,
            },
            Mechanism::Inclusive,
        ] {
            let result = solve(&p, mechanism, SocialRule::Utilitarian).unwrap();
            assert_eq!(result.matching, Matching::trivial(2));
            // Two give-ups, nothing else.
            assert_eq!(result.trace.events.len(), 2);
        }
    }

    #[test]
    fn traces_decrease_the_loop_variant() {
        let p = toy();
        for mechanism in [
            Mechanism::Selective {
                approximation: false,
            },
            Mechanism::Selective {
                approximation: true,
            },
            Mechanism::Inclusive,
        ] {
            for rule in [SocialRule::Utilitarian, SocialRule::Egalitarian] {
                let result = solve(&p, mechanism, rule).unwrap();
                let series = loop_variant_series(&p, &result.trace);
                assert_strictly_decreasing(&series);
            }
        }
    }

    #[test]
    fn intermediate_groups_stay_sound() {
        let p = crate::generate::generate_random(20, 3, 5, Default::default()).unwrap();
        for mechanism in [
            Mechanism::Selective {
                approximation: true,
            },
            Mechanism::Inclusive,
        ] {
            let result = solve(&p, mechanism, SocialRule::Egalitarian).unwrap();
            for e in &result.trace.events {
                if let Some(a) = e.activity {
                    assert!(e.group_after.len() <= p.capacity(a) as usize);
                }
            }
            assert!(crate::model::validate_matching(&p, &result.matching)
                .unwrap()
                .is_sound());
        }
    }

    #[test]
    fn inclusive_outcome_is_socially_cohesive_on_random_instances() {
        for seed in 0..20 {
            let p = crate::generate::generate_random(15, 4, seed, Default::default()).unwrap();
            for rule in [SocialRule::Utilitarian, SocialRule::Egalitarian] {
                let result = solve_inclusive(&p, rule).unwrap();
                assert!(
                    crate::criteria::is_socially_cohesive(&p, &result.matching)
                        .unwrap()
                        .holds,
                    "seed {seed} rule {rule}"
                );
            }
        }
    }

    #[test]
    fn solve_is_deterministic() {
        let p = crate::generate::generate_random(30, 4, 77, Default::default()).unwrap();
        let a = solve_selective(&p, SocialRule::Utilitarian, true).unwrap();
        let b = solve_selective(&p, SocialRule::Utilitarian, true).unwrap();
        assert_eq!(a.matching, b.matching);
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn exact_selective_hosts_pick_rule_optimal_groups() {
        // Re-derive every accept decision of the exact run from its trace.
        let p = toy();
        let result = solve_selective(&p, SocialRule::Utilitarian, false).unwrap();
        let mut by_step: std::collections::BTreeMap<usize, Vec<&TraceEvent>> = Default::default();
        for e in &result.trace.events {
            by_step.entry(e.step).or_default().push(e);
        }
        for events in by_step.values() {
            let propose = events[0];
            if propose.kind != EventKind::Propose || events.len() < 2 {
                continue;
            }
            let accept = events.last().unwrap();
            if accept.kind != EventKind::Accept {
                continue;
            }
            let a = propose.activity.unwrap();
            let candidates = host_candidates(
                &p,
                Mechanism::Selective {
                    approximation: false,
                },
                a,
                &propose.group_after,
                propose.individual,
            )
            .unwrap();
            if let Some(candidates) = candidates {
                let best = decide_group(
                    &p,
                    SocialRule::Utilitarian,
                    a,
                    &candidates,
                    Some(propose.individual),
                )
                .unwrap();
                assert_eq!(best, accept.group_after);
            }
        }
    }

    #[test]
    fn hill_climb_zero_steps_returns_seeded_start() {
        let p = toy();
        let out = hill_climb(&p, SocialRule::Utilitarian, 3, 0).unwrap();
        assert_eq!(out.steps, 0);
        assert!(out.matching.iter().all(|(_, t)| t.is_some()));
        let again = hill_climb(&p, SocialRule::Utilitarian, 3, 0).unwrap();
        assert_eq!(out.matching, again.matching);
    }

    #[test]
    fn hill_climb_stays_below_oracle_optimum_on_toy() {
        let p = toy();
        for seed in 0..10 {
            let out = hill_climb(&p, SocialRule::Utilitarian, seed, 1000).unwrap();
            let u = crate::criteria::utilitarian_welfare(&p, &out.matching).unwrap();
            assert!(u <= 23.0 / 96.0 + 1e-12, "seed {seed}: {u}");
            assert!(out.converged);
        }
    }

    #[test]
    fn hill_climb_reaches_a_local_optimum() {
        let p = crate::generate::generate_random(12, 3, 5, Default::default()).unwrap();
        for objective in [SocialRule::Utilitarian, SocialRule::Egalitarian] {
            let out = hill_climb(&p, objective, 11, 10_000).unwrap();
            assert!(out.converged);
            // No neighbour strictly improves: re-verify exhaustively.
            let state =
                ClimbState::new(&p, out.matching.iter().map(|(_, t)| t.unwrap()).collect());
            let current = state.objective(objective);
            if let Some((_, value)) = state.best_neighbour(objective) {
                assert!(!approx_gt(value, current));
            }
            // The objective strictly improves at every committed step.
            for w in out.objective_trace.windows(2) {
                assert!(approx_gt(w[1], w[0]));
            }
        }
    }

    #[test]
    fn hill_climb_requires_enough_capacity() {
        let p = crate::IAProblem::new(
            vec![("a".into(), 1)],
            vec!["1".into(), "2".into()],
            vec![vec![0.1], vec![0.1]],
            vec![vec![0.0; 2]; 2],
        )
        .unwrap();
        assert!(matches!(
            hill_climb(&p, SocialRule::Utilitarian, 0, 10),
            Err(EngineError::CannotStartAllActive { .. })
        ));
    }
}
