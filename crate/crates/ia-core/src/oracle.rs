//! Exhaustive ground truth at desk scale: enumeration of every sound
//! matching, exact welfare optima, Pareto optimality and the per-property
//! census.
//!
//! Enumeration is a deterministic capacity-pruned odometer: individuals in
//! id order are the digits (most significant first) and each digit counts
//! through void, then the activities in declaration order. Everything here
//! is exponential in `m` and refuses instances above the guard.

use thiserror::Error;

use crate::criteria::{self, CriteriaError, SocialRule};
use crate::model::{
    approx_ge, approx_gt, Activity, IAProblem, Individual, Matching, ModelError, Target,
    PREFERENCE_TOLERANCE,
};

/// Default ceiling on `m` for full enumeration.
pub const DEFAULT_ENUMERATION_GUARD: usize = 12;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance has {m} individuals, above the enumeration guard {guard}")]
    GuardExceeded { m: usize, guard: usize },
    #[error(transparent)]
    Criteria(#[from] CriteriaError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Iterator over every sound matching of a problem, each exactly once, in
/// deterministic order.
pub struct SoundMatchings<'p> {
    problem: &'p IAProblem,
    /// Per individual: 0 for void, `k` for activity `k - 1`.
    digits: Vec<u8>,
    counts: Vec<u32>,
    started: bool,
    done: bool,
}

impl<'p> SoundMatchings<'p> {
    fn new(problem: &'p IAProblem) -> Self {
        Self {
            problem,
            digits: vec![0; problem.m()],
            counts: vec![0; problem.n()],
            started: false,
            done: false,
        }
    }

    fn current(&self) -> Matching {
        Matching::new(self.digits.iter().map(|&d| decode(d)).collect())
    }

    /// Steps the odometer to the next capacity-respecting assignment.
    fn advance(&mut self) -> bool {
        let n = self.problem.n() as u8;
        let mut pos = self.digits.len();
        while pos > 0 {
            pos -= 1;
            let cur = self.digits[pos];
            if cur > 0 {
                self.counts[cur as usize - 1] -= 1;
            }
            let mut next = cur + 1;
            while next <= n
                && self.counts[next as usize - 1]
                    >= self.problem.capacity(Activity(next as usize - 1))
            {
                next += 1;
            }
            if next <= n {
                self.digits[pos] = next;
                self.counts[next as usize - 1] += 1;
                return true;
            }
            // Exhausted this digit: park it on void and carry leftwards.
            self.digits[pos] = 0;
        }
        false
    }

    /// Steps to the next assignment without materializing a `Matching`;
    /// `None` when the stream is exhausted.
    fn step(&mut self) -> Option<&[u8]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
        } else if !self.advance() {
            self.done = true;
            return None;
        }
        Some(&self.digits)
    }
}

fn decode(digit: u8) -> Target {
    match digit {
        0 => None,
        k => Some(Activity(k as usize - 1)),
    }
}

impl Iterator for SoundMatchings<'_> {
    type Item = Matching;

    fn next(&mut self) -> Option<Matching> {
        self.step();
        if self.done {
            None
        } else {
            Some(self.current())
        }
    }
}

fn check_guard(problem: &IAProblem, guard: usize) -> Result<(), OracleError> {
    if problem.m() > guard {
        return Err(OracleError::GuardExceeded {
            m: problem.m(),
            guard,
        });
    }
    Ok(())
}

/// Streams every sound matching of the problem.
pub fn enumerate_sound_matchings(
    problem: &IAProblem,
    guard: usize,
) -> Result<SoundMatchings<'_>, OracleError> {
    check_guard(problem, guard)?;
    Ok(SoundMatchings::new(problem))
}

fn welfare_of(problem: &IAProblem, matching: &Matching, rule: SocialRule) -> f64 {
    let profile = criteria::utility_profile_unchecked(problem, matching);
    match rule {
        SocialRule::Utilitarian => criteria::mean(&profile),
        SocialRule::Egalitarian => criteria::min(&profile),
    }
}

/// Exact optimum of a welfare objective over all sound matchings: the
/// optimal value together with every matching attaining it (ties included).
pub fn exact_optimum(
    problem: &IAProblem,
    rule: SocialRule,
    guard: usize,
) -> Result<(f64, Vec<Matching>), OracleError> {
    check_guard(problem, guard)?;
    let mut best = f64::NEG_INFINITY;
    for m in SoundMatchings::new(problem) {
        best = best.max(welfare_of(problem, &m, rule));
    }
    let optima = SoundMatchings::new(problem)
        .filter(|m| approx_ge(welfare_of(problem, m, rule), best))
        .collect();
    Ok((best, optima))
}

/// Pareto optimality by exhaustive comparison; the witness is a dominating
/// matching when one exists. Candidate utilities are computed lazily with
/// an early exit on the first individual who loses.
pub fn is_pareto_optimal(
    problem: &IAProblem,
    matching: &Matching,
    guard: usize,
) -> Result<criteria::Check<Matching>, OracleError> {
    check_guard(problem, guard)?;
    let base = criteria::utility_profile(problem, matching)?;
    let m = problem.m();
    let mut groups: Vec<Vec<Individual>> = vec![Vec::new(); problem.n()];
    let mut digits: Vec<u8> = Vec::with_capacity(m);
    let mut stream = SoundMatchings::new(problem);
    loop {
        match stream.step() {
            None => return Ok(criteria::Check::passed()),
            Some(current) => {
                digits.clear();
                digits.extend_from_slice(current);
            }
        }
        for group in &mut groups {
            group.clear();
        }
        for (i, &d) in digits.iter().enumerate() {
            if d > 0 {
                groups[d as usize - 1].push(Individual(i));
            }
        }
        let mut some_strict = false;
        let mut dominated = true;
        for i in 0..m {
            let u = match digits[i] {
                0 => 0.0,
                d => problem.utility_unchecked(
                    Individual(i),
                    groups[d as usize - 1].iter().copied(),
                    Some(Activity(d as usize - 1)),
                ),
            };
            if !approx_ge(u, base[i]) {
                dominated = false;
                break;
            }
            if approx_gt(u, base[i]) {
                some_strict = true;
            }
        }
        if dominated && some_strict {
            return Ok(criteria::Check::failed(Matching::new(
                digits.iter().map(|&d| decode(d)).collect(),
            )));
        }
    }
}

/// Property flags of one enumerated matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PropertyFlags {
    pub individually_rational: bool,
    pub contractually_stable: bool,
    pub pareto_optimal: bool,
    pub individually_stable: bool,
    pub nash_stable: bool,
    pub socially_cohesive: bool,
    pub max_egalitarian: bool,
    pub max_utilitarian: bool,
    pub perfect: bool,
    pub core_stable: bool,
    pub strict_core_stable: bool,
}

/// Every sound matching of an instance together with its utility profile,
/// welfare values and property flags, in enumeration order.
pub struct PropertyTable {
    digits: Vec<Vec<u8>>,
    pub profiles: Vec<Vec<f64>>,
    pub utilitarian: Vec<f64>,
    pub egalitarian: Vec<f64>,
    pub flags: Vec<PropertyFlags>,
    pub max_utilitarian: f64,
    pub max_egalitarian: f64,
}

impl PropertyTable {
    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn matching(&self, idx: usize) -> Matching {
        Matching::new(self.digits[idx].iter().map(|&d| decode(d)).collect())
    }
}

/// Utilities of the members of every non-empty sound coalition on a real
/// activity, for the core-stability and perfection sweeps. Void singletons
/// are folded in analytically: they carry utility 0 for their only member.
struct CoalitionTable {
    /// `(member indices ascending, member utilities)`.
    entries: Vec<(Vec<u32>, Vec<f64>)>,
    /// Per individual: the maximum utility over sound coalitions containing
    /// it (at least 0, from the void singleton).
    best: Vec<f64>,
}

impl CoalitionTable {
    fn build(problem: &IAProblem) -> Self {
        let m = problem.m();
        let mut entries = Vec::new();
        let mut best = vec![0.0f64; m];
        let mut members: Vec<u32> = Vec::with_capacity(m);
        for mask in 1u64..(1 << m) {
            members.clear();
            members.extend((0..m as u32).filter(|k| mask & (1 << k) != 0));
            let size = members.len();
            for a in problem.activities() {
                if size > problem.capacity(a) as usize {
                    continue;
                }
                let utils: Vec<f64> = members
                    .iter()
                    .map(|&k| {
                        problem.utility_unchecked(
                            Individual(k as usize),
                            members.iter().map(|&j| Individual(j as usize)),
                            Some(a),
                        )
                    })
                    .collect();
                for (&k, &u) in members.iter().zip(&utils) {
                    if u > best[k as usize] {
                        best[k as usize] = u;
                    }
                }
                entries.push((members.clone(), utils));
            }
        }
        Self { entries, best }
    }

    /// A void singleton blocks (strongly and weakly alike) exactly when its
    /// individual sits strictly below utility 0.
    fn void_blocked(profile: &[f64]) -> bool {
        profile.iter().any(|&u| approx_gt(0.0, u))
    }

    fn strongly_blocked(&self, profile: &[f64]) -> bool {
        Self::void_blocked(profile)
            || self.entries.iter().any(|(members, utils)| {
                members
                    .iter()
                    .zip(utils)
                    .all(|(&k, &u)| approx_gt(u, profile[k as usize]))
            })
    }

    fn weakly_blocked(&self, profile: &[f64]) -> bool {
        Self::void_blocked(profile)
            || self.entries.iter().any(|(members, utils)| {
                let mut strict = false;
                for (&k, &u) in members.iter().zip(utils) {
                    if !approx_ge(u, profile[k as usize]) {
                        return false;
                    }
                    if approx_gt(u, profile[k as usize]) {
                        strict = true;
                    }
                }
                strict
            })
    }

    fn perfect(&self, profile: &[f64]) -> bool {
        profile
            .iter()
            .zip(&self.best)
            .all(|(&u, &b)| approx_ge(u, b))
    }
}

/// Evaluates every property on every sound matching of the instance.
pub fn property_table(problem: &IAProblem, guard: usize) -> Result<PropertyTable, OracleError> {
    check_guard(problem, guard)?;
    let mut digits: Vec<Vec<u8>> = Vec::new();
    let mut profiles: Vec<Vec<f64>> = Vec::new();
    {
        let mut stream = SoundMatchings::new(problem);
        while stream.step().is_some() {
            digits.push(stream.digits.clone());
            profiles.push(criteria::utility_profile_unchecked(
                problem,
                &stream.current(),
            ));
        }
    }
    let utilitarian: Vec<f64> = profiles.iter().map(|p| criteria::mean(p)).collect();
    let egalitarian: Vec<f64> = profiles.iter().map(|p| criteria::min(p)).collect();
    let max_utilitarian = utilitarian
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let max_egalitarian = egalitarian
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);

    let coalitions = CoalitionTable::build(problem);

    // Pareto optimality: a dominating matching has mean utility within one
    // tolerance below (or above) the dominated one, so scanning a sorted
    // prefix suffices.
    let mut by_utilitarian: Vec<usize> = (0..digits.len()).collect();
    by_utilitarian.sort_by(|&x, &y| utilitarian[y].total_cmp(&utilitarian[x]));
    let pareto: Vec<bool> = (0..digits.len())
        .map(|idx| {
            let floor = utilitarian[idx] - 2.0 * PREFERENCE_TOLERANCE;
            !by_utilitarian
                .iter()
                .take_while(|&&cand| utilitarian[cand] >= floor)
                .any(|&cand| {
                    cand != idx && criteria::profile_dominates(&profiles[cand], &profiles[idx])
                })
        })
        .collect();

    let mut flags = Vec::with_capacity(digits.len());
    for idx in 0..digits.len() {
        let matching = Matching::new(digits[idx].iter().map(|&d| decode(d)).collect());
        let groups = matching.groups_by_activity(problem.n());
        let profile = &profiles[idx];
        let (nash, individually, contractually) =
            criteria::stability_flags(problem, &matching, &groups, profile);
        flags.push(PropertyFlags {
            individually_rational: profile.iter().all(|&u| approx_ge(u, 0.0)),
            contractually_stable: contractually,
            pareto_optimal: pareto[idx],
            individually_stable: individually,
            nash_stable: nash,
            socially_cohesive: criteria::cohesion_flag(problem, &matching, &groups),
            max_egalitarian: approx_ge(egalitarian[idx], max_egalitarian),
            max_utilitarian: approx_ge(utilitarian[idx], max_utilitarian),
            perfect: coalitions.perfect(profile),
            core_stable: !coalitions.strongly_blocked(profile),
            strict_core_stable: !coalitions.weakly_blocked(profile),
        });
    }

    Ok(PropertyTable {
        digits,
        profiles,
        utilitarian,
        egalitarian,
        flags,
        max_utilitarian,
        max_egalitarian,
    })
}

/// Census of an instance: how many sound matchings satisfy each property,
/// plus the exact welfare optima.
#[derive(Debug, Clone, PartialEq)]
pub struct Census {
    pub total: u64,
    pub individually_rational: u64,
    pub contractually_stable: u64,
    pub pareto_optimal: u64,
    pub individually_stable: u64,
    pub nash_stable: u64,
    pub socially_cohesive: u64,
    pub max_egalitarian: u64,
    pub max_utilitarian: u64,
    pub perfect: u64,
    pub core_stable: u64,
    pub strict_core_stable: u64,
    pub max_utilitarian_value: f64,
    pub max_egalitarian_value: f64,
    pub utilitarian_optima: Vec<Matching>,
    pub egalitarian_optima: Vec<Matching>,
}

impl Census {
    /// `(tag, count)` pairs in the fixed census column order.
    pub fn counts(&self) -> [(&'static str, u64); 11] {
        [
            ("ir", self.individually_rational),
            ("cis", self.contractually_stable),
            ("po", self.pareto_optimal),
            ("is", self.individually_stable),
            ("ns", self.nash_stable),
            ("sc", self.socially_cohesive),
            ("maxegal", self.max_egalitarian),
            ("maxutil", self.max_utilitarian),
            ("p", self.perfect),
            ("cs", self.core_stable),
            ("scs", self.strict_core_stable),
        ]
    }

    /// Property tags whose counts differ from an expected reference.
    pub fn divergences(&self, expected: &[(&str, u64)]) -> Vec<String> {
        let counts = self.counts();
        expected
            .iter()
            .filter_map(|&(tag, want)| {
                counts
                    .iter()
                    .find(|(t, _)| *t == tag)
                    .filter(|&&(_, got)| got != want)
                    .map(|&(t, got)| format!("{t}: expected {want}, got {got}"))
            })
            .collect()
    }

    pub fn csv_header() -> String {
        let mut cols = vec!["total"];
        cols.extend(Self::tags());
        cols.join(",")
    }

    pub fn csv_row(&self) -> String {
        let mut cols = vec![self.total.to_string()];
        cols.extend(self.counts().iter().map(|(_, c)| c.to_string()));
        cols.join(",")
    }

    fn tags() -> [&'static str; 11] {
        [
            "ir", "cis", "po", "is", "ns", "sc", "maxegal", "maxutil", "p", "cs", "scs",
        ]
    }

    pub fn to_json(&self, problem: &IAProblem) -> serde_json::Value {
        use serde_json::json;
        let matching_json = |m: &Matching| {
            m.iter()
                .map(|(i, t)| {
                    (
                        problem.individual_id(i).to_owned(),
                        t.map(|a| problem.activity_id(a).to_owned()),
                    )
                })
                .collect::<std::collections::BTreeMap<_, _>>()
        };
        let mut counts = serde_json::Map::new();
        for (tag, c) in self.counts() {
            counts.insert(tag.to_owned(), json!(c));
        }
        json!({
            "total": self.total,
            "counts": counts,
            "max_utilitarian": self.max_utilitarian_value,
            "max_egalitarian": self.max_egalitarian_value,
            "utilitarian_optima": self.utilitarian_optima.iter().map(&matching_json).collect::<Vec<_>>(),
            "egalitarian_optima": self.egalitarian_optima.iter().map(&matching_json).collect::<Vec<_>>(),
        })
    }
}

/// Runs the full census on an instance within the guard.
pub fn census(problem: &IAProblem, guard: usize) -> Result<Census, OracleError> {
    let table = property_table(problem, guard)?;
    let count =
        |f: fn(&PropertyFlags) -> bool| table.flags.iter().filter(|&fl| f(fl)).count() as u64;
    let optima = |values: &[f64], max: f64| {
        (0..table.len())
            .filter(|&idx| approx_ge(values[idx], max))
            .map(|idx| table.matching(idx))
            .collect::<Vec<_>>()
    };
    Ok(Census {
        total: table.len() as u64,
        individually_rational: count(|f| f.individually_rational),
        contractually_stable: count(|f| f.contractually_stable),
        pareto_optimal: count(|f| f.pareto_optimal),
        individually_stable: count(|f| f.individually_stable),
        nash_stable: count(|f| f.nash_stable),
        socially_cohesive: count(|f| f.socially_cohesive),
        max_egalitarian: count(|f| f.max_egalitarian),
        max_utilitarian: count(|f| f.max_utilitarian),
        perfect: count(|f| f.perfect),
        core_stable: count(|f| f.core_stable),
        strict_core_stable: count(|f| f.strict_core_stable),
        max_utilitarian_value: table.max_utilitarian,
        max_egalitarian_value: table.max_egalitarian,
        utilitarian_optima: optima(&table.utilitarian, table.max_utilitarian),
        egalitarian_optima: optima(&table.egalitarian, table.max_egalitarian),
    })
}

/// Independent route to the sound-matching count: the closed-form sum of
/// multinomial coefficients over feasible per-activity occupancies.
pub fn closed_form_count(problem: &IAProblem) -> u128 {
    fn binomial(n: u128, k: u128) -> u128 {
        if k > n {
            return 0;
        }
        let mut result = 1u128;
        for i in 0..k {
            result = result * (n - i) / (i + 1);
        }
        result
    }
    fn rec(caps: &[u32], remaining: u128) -> u128 {
        match caps.split_first() {
            None => 1,
            Some((&cap, rest)) => (0..=(cap as u128).min(remaining))
                .map(|k| binomial(remaining, k) * rec(rest, remaining - k))
                .sum(),
        }
    }
    let caps: Vec<u32> = problem.activities().map(|a| problem.capacity(a)).collect();
    rec(&caps, problem.m() as u128)
}
