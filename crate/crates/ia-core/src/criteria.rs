//! Evaluation of sound matchings: individual rationality, blocking and core
//! stability, unilateral-deviation stability, perfection, Pareto dominance,
//! welfare and social cohesion.
//!
//! Every check compares utilities through the crate-wide preference
//! tolerance, so indifference is detected reproducibly. Checks that fail
//! return a witness that can be re-verified independently.

use thiserror::Error;

use crate::model::{
    activity_status, approx_ge, approx_gt, validate_matching, Activity, ActivityStatus, Coalition,
    IAProblem, Individual, Matching, ModelError, Target,
};

/// Maximum number of individuals for which the exponential checkers
/// (core stability, strict core stability, perfection) run by default.
pub const DEFAULT_STABILITY_GUARD: usize = 20;

/// The social decision rules used by hosts and by welfare optimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SocialRule {
    Utilitarian,
    Egalitarian,
}

impl std::fmt::Display for SocialRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SocialRule::Utilitarian => write!(f, "utilitarian"),
            SocialRule::Egalitarian => write!(f, "egalitarian"),
        }
    }
}

#[derive(Debug, Error)]
pub enum CriteriaError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("matching is unsound: activity index {activity} holds {count} participants")]
    Unsound { activity: usize, count: usize },
    #[error("instance has {m} individuals, above the enumeration guard {guard}")]
    GuardExceeded { m: usize, guard: usize },
    #[error("coalition is empty")]
    EmptyCoalition,
    #[error("coalition of {size} exceeds the capacity {capacity}")]
    UnsoundCoalition { size: usize, capacity: u32 },
}

/// Outcome of a property check: either the property holds, or a witness of
/// its violation is provided.
#[derive(Debug, Clone, PartialEq)]
pub struct Check<W> {
    pub holds: bool,
    pub witness: Option<W>,
}

impl<W> Check<W> {
    pub fn passed() -> Self {
        Self {
            holds: true,
            witness: None,
        }
    }

    pub fn failed(witness: W) -> Self {
        Self {
            holds: false,
            witness: Some(witness),
        }
    }
}

/// A profitable unilateral deviation: `individual` moving to `target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Deviation {
    pub individual: Individual,
    pub target: Target,
}

fn ensure_sound(problem: &IAProblem, matching: &Matching) -> Result<(), CriteriaError> {
    let report = validate_matching(problem, matching)?;
    if let Some(&(a, count)) = report.oversubscribed.first() {
        return Err(CriteriaError::Unsound {
            activity: a.0,
            count,
        });
    }
    Ok(())
}

/// Utility of every individual under a sound matching, in id order.
pub fn utility_profile(
    problem: &IAProblem,
    matching: &Matching,
) -> Result<Vec<f64>, CriteriaError> {
    ensure_sound(problem, matching)?;
    Ok(utility_profile_unchecked(problem, matching))
}

pub(crate) fn utility_profile_unchecked(problem: &IAProblem, matching: &Matching) -> Vec<f64> {
    let groups = matching.groups_by_activity(problem.n());
    matching
        .iter()
        .map(|(i, t)| match t {
            Some(a) => problem.utility_unchecked(i, groups[a.0].iter().copied(), Some(a)),
            None => 0.0,
        })
        .collect()
}

/// Mean utility of a sound matching.
pub fn utilitarian_welfare(
    problem: &IAProblem,
    matching: &Matching,
) -> Result<f64, CriteriaError> {
    let profile = utility_profile(problem, matching)?;
    Ok(mean(&profile))
}

/// Minimum utility of a sound matching.
pub fn egalitarian_welfare(
    problem: &IAProblem,
    matching: &Matching,
) -> Result<f64, CriteriaError> {
    let profile = utility_profile(problem, matching)?;
    Ok(min(&profile))
}

pub(crate) fn mean(profile: &[f64]) -> f64 {
    profile.iter().sum::<f64>() / profile.len() as f64
}

pub(crate) fn min(profile: &[f64]) -> f64 {
    profile.iter().copied().fold(f64::INFINITY, f64::min)
}

/// A matching is individually rational when nobody would rather stay alone.
pub fn is_individually_rational(
    problem: &IAProblem,
    matching: &Matching,
) -> Result<Check<Individual>, CriteriaError> {
    let profile = utility_profile(problem, matching)?;
    Ok(ir_check(&profile))
}

pub(crate) fn ir_check(profile: &[f64]) -> Check<Individual> {
    match profile.iter().position(|&u| !approx_ge(u, 0.0)) {
        Some(i) => Check::failed(Individual(i)),
        None => Check::passed(),
    }
}

/// Blocking strength for coalition checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockingMode {
    /// Every member strictly prefers the coalition.
    Strong,
    /// Every member weakly prefers it and at least one strictly.
    Weak,
}

/// Whether a non-empty sound coalition blocks the matching.
pub fn blocks(
    problem: &IAProblem,
    matching: &Matching,
    coalition: &Coalition,
    mode: BlockingMode,
) -> Result<bool, CriteriaError> {
    ensure_sound(problem, matching)?;
    if coalition.group.is_empty() {
        return Err(CriteriaError::EmptyCoalition);
    }
    if !coalition.is_sound(problem) {
        return Err(CriteriaError::UnsoundCoalition {
            size: coalition.group.len(),
            capacity: coalition.capacity(problem),
        });
    }
    let profile = utility_profile_unchecked(problem, matching);
    Ok(coalition_blocks(problem, &profile, coalition, mode))
}

fn coalition_blocks(
    problem: &IAProblem,
    profile: &[f64],
    coalition: &Coalition,
    mode: BlockingMode,
) -> bool {
    let mut some_strict = false;
    for &k in &coalition.group {
        let u = problem.utility_unchecked(k, coalition.group.iter().copied(), coalition.target);
        let current = profile[k.0];
        match mode {
            BlockingMode::Strong => {
                if !approx_gt(u, current) {
                    return false;
                }
            }
            BlockingMode::Weak => {
                if !approx_ge(u, current) {
                    return false;
                }
                if approx_gt(u, current) {
                    some_strict = true;
                }
            }
        }
    }
    mode == BlockingMode::Strong || some_strict
}

/// Enumerates every non-empty sound coalition: each group of individuals
/// paired with each activity that can hold it, plus void singletons.
/// Calls `f` until it returns `true` (a hit); returns the hit.
fn scan_coalitions(
    problem: &IAProblem,
    mut f: impl FnMut(&Coalition) -> bool,
) -> Option<Coalition> {
    let m = problem.m();
    for mask in 1u64..(1 << m) {
        let size = mask.count_ones() as usize;
        let group: Vec<Individual> = (0..m)
            .filter(|k| mask & (1 << k) != 0)
            .map(Individual)
            .collect();
        for a in problem.activities() {
            if size <= problem.capacity(a) as usize {
                let c = Coalition {
                    target: Some(a),
                    group: group.clone(),
                };
                if f(&c) {
                    return Some(c);
                }
            }
        }
        if size == 1 {
            let c = Coalition {
                target: None,
                group: group.clone(),
            };
            if f(&c) {
                return Some(c);
            }
        }
    }
    None
}

fn check_guard(problem: &IAProblem, guard: usize) -> Result<(), CriteriaError> {
    if problem.m() > guard {
        return Err(CriteriaError::GuardExceeded {
            m: problem.m(),
            guard,
        });
    }
    Ok(())
}

/// Core stability: no non-empty sound coalition strongly blocks the
/// matching. Exponential in `m`; refuses instances above `guard`.
pub fn is_core_stable(
    problem: &IAProblem,
    matching: &Matching,
    guard: usize,
) -> Result<Check<Coalition>, CriteriaError> {
    check_guard(problem, guard)?;
    ensure_sound(problem, matching)?;
    let profile = utility_profile_unchecked(problem, matching);
    Ok(
        match scan_coalitions(problem, |c| {
            coalition_blocks(problem, &profile, c, BlockingMode::Strong)
        }) {
            Some(c) => Check::failed(c),
            None => Check::passed(),
        },
    )
}

/// Strict core stability: no non-empty sound coalition weakly blocks the
/// matching (so every strict-core-stable matching is core stable).
pub fn is_strict_core_stable(
    problem: &IAProblem,
    matching: &Matching,
    guard: usize,
) -> Result<Check<Coalition>, CriteriaError> {
    check_guard(problem, guard)?;
    ensure_sound(problem, matching)?;
    let profile = utility_profile_unchecked(problem, matching);
    Ok(
        match scan_coalitions(problem, |c| {
            coalition_blocks(problem, &profile, c, BlockingMode::Weak)
        }) {
            Some(c) => Check::failed(c),
            None => Check::passed(),
        },
    )
}

/// How demanding a unilateral-deviation stability notion is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DeviationVeto {
    /// Nash stability: any profitable move is a violation.
    Nobody,
    /// Individual stability: the newcomers' hosts may veto the move.
    Newcomers,
    /// Contractual individual stability: the abandoned group may also veto.
    BothSides,
}

fn deviation_check(
    problem: &IAProblem,
    matching: &Matching,
    veto: DeviationVeto,
) -> Result<Check<Deviation>, CriteriaError> {
    ensure_sound(problem, matching)?;
    let profile = utility_profile_unchecked(problem, matching);
    let groups = matching.groups_by_activity(problem.n());
    let scale = 2.0 * (problem.m() as f64 - 1.0);

    let targets: Vec<Target> = problem.activities().map(Some).chain([None]).collect();
    for i in problem.individuals() {
        let current = profile[i.0];
        for &target in &targets {
            if target == matching.target(i) {
                continue;
            }
            if activity_status(problem, matching, target) == ActivityStatus::Full {
                continue;
            }
            // Utility of i inside the newcomers' coalition after the move.
            let newcomers: &[Individual] = match target {
                Some(a) => &groups[a.0],
                None => &[],
            };
            let gained = (problem.affinity_sum(i, newcomers.iter().copied())
                / (problem.m() as f64 - 1.0)
                + problem.interest(i, target))
                / 2.0;
            if !approx_gt(gained, current) {
                continue;
            }
            if veto == DeviationVeto::Nobody {
                return Ok(Check::failed(Deviation {
                    individual: i,
                    target,
                }));
            }
            // Adding i shifts each newcomer j's utility by w_j(i) / (2(m-1)).
            let newcomer_veto = newcomers.iter().any(|&j| {
                let after = profile[j.0] + problem.affinity(j, i) / scale;
                approx_gt(profile[j.0], after)
            });
            if newcomer_veto {
                continue;
            }
            if veto == DeviationVeto::BothSides {
                let own_group = match matching.target(i) {
                    Some(a) => &groups[a.0],
                    None => &[] as &[Individual],
                };
                let leaver_veto = own_group.iter().filter(|&&j| j != i).any(|&j| {
                    let after = profile[j.0] - problem.affinity(j, i) / scale;
                    approx_gt(profile[j.0], after)
                });
                if leaver_veto {
                    continue;
                }
            }
            return Ok(Check::failed(Deviation {
                individual: i,
                target,
            }));
        }
    }
    Ok(Check::passed())
}

/// Nash stability: nobody gains by unilaterally moving to a non-full
/// activity (or to the void activity).
pub fn is_nash_stable(
    problem: &IAProblem,
    matching: &Matching,
) -> Result<Check<Deviation>, CriteriaError> {
    deviation_check(problem, matching, DeviationVeto::Nobody)
}

/// Individual stability: any profitable unilateral move is vetoed by some
/// current participant of the target activity.
pub fn is_individually_stable(
    problem: &IAProblem,
    matching: &Matching,
) -> Result<Check<Deviation>, CriteriaError> {
    deviation_check(problem, matching, DeviationVeto::Newcomers)
}

/// Contractual individual stability: any profitable unilateral move is
/// vetoed by the target's participants or by the abandoned group.
pub fn is_contractually_individually_stable(
    problem: &IAProblem,
    matching: &Matching,
) -> Result<Check<Deviation>, CriteriaError> {
    deviation_check(problem, matching, DeviationVeto::BothSides)
}

/// Perfection: every individual sits in one of their most preferred sound
/// coalitions. Exponential in `m`; refuses instances above `guard`.
pub fn is_perfect(
    problem: &IAProblem,
    matching: &Matching,
    guard: usize,
) -> Result<Check<(Individual, Coalition)>, CriteriaError> {
    check_guard(problem, guard)?;
    ensure_sound(problem, matching)?;
    let profile = utility_profile_unchecked(problem, matching);
    let mut witness = None;
    scan_coalitions(problem, |c| {
        for &k in &c.group {
            let u = problem.utility_unchecked(k, c.group.iter().copied(), c.target);
            if approx_gt(u, profile[k.0]) {
                witness = Some((k, c.clone()));
                return true;
            }
        }
        false
    });
    Ok(match witness {
        Some(w) => Check::failed(w),
        None => Check::passed(),
    })
}

/// Whether `candidate` Pareto-dominates `matching`: someone strictly gains
/// and nobody strictly loses.
pub fn pareto_dominates(
    problem: &IAProblem,
    candidate: &Matching,
    matching: &Matching,
) -> Result<bool, CriteriaError> {
    let cand = utility_profile(problem, candidate)?;
    let base = utility_profile(problem, matching)?;
    Ok(profile_dominates(&cand, &base))
}

pub(crate) fn profile_dominates(candidate: &[f64], base: &[f64]) -> bool {
    let mut some_strict = false;
    for (&c, &b) in candidate.iter().zip(base) {
        if !approx_ge(c, b) {
            return false;
        }
        if approx_gt(c, b) {
            some_strict = true;
        }
    }
    some_strict
}

/// Social cohesion: every strictly better attractive activity of every
/// individual is full.
pub fn is_socially_cohesive(
    problem: &IAProblem,
    matching: &Matching,
) -> Result<Check<(Individual, Activity)>, CriteriaError> {
    ensure_sound(problem, matching)?;
    for i in problem.individuals() {
        let current = problem.interest(i, matching.target(i));
        for a in problem.activities() {
            if Some(a) == matching.target(i) {
                continue;
            }
            let v = problem.interest(i, Some(a));
            if v >= 0.0
                && approx_gt(v, current)
                && activity_status(problem, matching, Some(a)) != ActivityStatus::Full
            {
                return Ok(Check::failed((i, a)));
            }
        }
    }
    Ok(Check::passed())
}

/// Nash / individual / contractual stability flags of an already-validated
/// sound matching, computed in a single deviation scan.
pub(crate) fn stability_flags(
    problem: &IAProblem,
    matching: &Matching,
    groups: &[Vec<Individual>],
    profile: &[f64],
) -> (bool, bool, bool) {
    let scale = 2.0 * (problem.m() as f64 - 1.0);
    let full: Vec<bool> = groups
        .iter()
        .enumerate()
        .map(|(a, g)| g.len() == problem.capacity(Activity(a)) as usize)
        .collect();
    let mut nash = true;
    let mut individually = true;
    let mut contractually = true;
    let targets: Vec<Target> = problem.activities().map(Some).chain([None]).collect();
    'individuals: for i in problem.individuals() {
        let current = profile[i.0];
        for &target in &targets {
            if target == matching.target(i) {
                continue;
            }
            if let Some(a) = target {
                if full[a.0] {
                    continue;
                }
            }
            let newcomers: &[Individual] = match target {
                Some(a) => &groups[a.0],
                None => &[],
            };
            let gained = (problem.affinity_sum(i, newcomers.iter().copied())
                / (problem.m() as f64 - 1.0)
                + problem.interest(i, target))
                / 2.0;
            if !approx_gt(gained, current) {
                continue;
            }
            nash = false;
            let newcomer_veto = newcomers
                .iter()
                .any(|&j| approx_gt(profile[j.0], profile[j.0] + problem.affinity(j, i) / scale));
            if newcomer_veto {
                continue;
            }
            individually = false;
            let own: &[Individual] = match matching.target(i) {
                Some(a) => &groups[a.0],
                None => &[],
            };
            let leaver_veto = own
                .iter()
                .filter(|&&j| j != i)
                .any(|&j| approx_gt(profile[j.0], profile[j.0] - problem.affinity(j, i) / scale));
            if !leaver_veto {
                contractually = false;
                break 'individuals;
            }
        }
    }
    (nash, individually, contractually)
}

/// Social-cohesion flag of an already-validated sound matching.
pub(crate) fn cohesion_flag(
    problem: &IAProblem,
    matching: &Matching,
    groups: &[Vec<Individual>],
) -> bool {
    let full: Vec<bool> = groups
        .iter()
        .enumerate()
        .map(|(a, g)| g.len() == problem.capacity(Activity(a)) as usize)
        .collect();
    for i in problem.individuals() {
        let current = problem.interest(i, matching.target(i));
        for a in problem.activities() {
            if Some(a) == matching.target(i) {
                continue;
            }
            let v = problem.interest(i, Some(a));
            if v >= 0.0 && approx_gt(v, current) && !full[a.0] {
                return false;
            }
        }
    }
    true
}

/// Report of one matching against the property lattice. `None` marks a
/// property that was not evaluated (not requested, or above its guard).
/// Pareto optimality is filled in by the enumeration oracle.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PropertyReport {
    pub utilitarian: f64,
    pub egalitarian: f64,
    pub individually_rational: Option<Check<Individual>>,
    pub nash_stable: Option<Check<Deviation>>,
    pub individually_stable: Option<Check<Deviation>>,
    pub contractually_stable: Option<Check<Deviation>>,
    pub socially_cohesive: Option<Check<(Individual, Activity)>>,
    pub core_stable: Option<Check<Coalition>>,
    pub strict_core_stable: Option<Check<Coalition>>,
    pub perfect: Option<Check<(Individual, Coalition)>>,
    pub pareto_optimal: Option<Check<Matching>>,
}

/// Property selectors for report evaluation, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Property {
    Ir,
    Ns,
    Is,
    Cis,
    Sc,
    Cs,
    Scs,
    P,
    Po,
}

impl Property {
    pub const ALL: [Property; 9] = [
        Property::Ir,
        Property::Ns,
        Property::Is,
        Property::Cis,
        Property::Sc,
        Property::Cs,
        Property::Scs,
        Property::P,
        Property::Po,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Property::Ir => "ir",
            Property::Ns => "ns",
            Property::Is => "is",
            Property::Cis => "cis",
            Property::Sc => "sc",
            Property::Cs => "cs",
            Property::Scs => "scs",
            Property::P => "p",
            Property::Po => "po",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Property::ALL.into_iter().find(|p| p.tag() == tag)
    }
}

/// Evaluates the requested properties on a sound matching. `Po` is skipped
/// here (it needs the enumeration oracle); welfare is always computed.
pub fn evaluate(
    problem: &IAProblem,
    matching: &Matching,
    properties: &[Property],
    guard: usize,
) -> Result<PropertyReport, CriteriaError> {
    let profile = utility_profile(problem, matching)?;
    let mut report = PropertyReport {
        utilitarian: mean(&profile),
        egalitarian: min(&profile),
        ..PropertyReport::default()
    };
    for &prop in properties {
        match prop {
            Property::Ir => report.individually_rational = Some(ir_check(&profile)),
            Property::Ns => report.nash_stable = Some(is_nash_stable(problem, matching)?),
            Property::Is => {
                report.individually_stable = Some(is_individually_stable(problem, matching)?)
            }
            Property::Cis => {
                report.contractually_stable =
                    Some(is_contractually_individually_stable(problem, matching)?)
            }
            Property::Sc => {
                report.socially_cohesive = Some(is_socially_cohesive(problem, matching)?)
            }
            Property::Cs => report.core_stable = Some(is_core_stable(problem, matching, guard)?),
            Property::Scs => {
                report.strict_core_stable = Some(is_strict_core_stable(problem, matching, guard)?)
            }
            Property::P => report.perfect = Some(is_perfect(problem, matching, guard)?),
            Property::Po => {}
        }
    }
    Ok(report)
}

impl PropertyReport {
    /// Serializes the report: one key per evaluated property flag, the two
    /// welfare values, and a `witness` list with one entry per false flag.
    pub fn to_json(&self, problem: &IAProblem) -> serde_json::Value {
        use serde_json::{json, Map, Value};
        let mut obj = Map::new();
        let mut witnesses = Vec::new();

        let ind = |i: &Individual| problem.individual_id(*i).to_owned();
        let tgt = |t: &Target| -> Value {
            match t {
                Some(a) => json!(problem.activity_id(*a)),
                None => Value::Null,
            }
        };
        let coal = |c: &Coalition| {
            json!({
                "activity": tgt(&c.target),
                "group": c.group.iter().map(ind).collect::<Vec<_>>(),
            })
        };

        let mut flag = |tag: &str, holds: bool, witness: Value| {
            obj.insert(tag.to_owned(), json!(holds));
            if !holds {
                witnesses.push(witness);
            }
        };
        if let Some(c) = &self.individually_rational {
            flag(
                "ir",
                c.holds,
                json!({"property": "ir", "individual": c.witness.as_ref().map(ind)}),
            );
        }
        if let Some(c) = &self.nash_stable {
            let w = c.witness.as_ref();
            flag(
                "ns",
                c.holds,
                json!({"property": "ns",
                       "individual": w.map(|d| ind(&d.individual)),
                       "activity": w.map(|d| tgt(&d.target))}),
            );
        }
        if let Some(c) = &self.individually_stable {
            let w = c.witness.as_ref();
            flag(
                "is",
                c.holds,
                json!({"property": "is",
                       "individual": w.map(|d| ind(&d.individual)),
                       "activity": w.map(|d| tgt(&d.target))}),
            );
        }
        if let Some(c) = &self.contractually_stable {
            let w = c.witness.as_ref();
            flag(
                "cis",
                c.holds,
                json!({"property": "cis",
                       "individual": w.map(|d| ind(&d.individual)),
                       "activity": w.map(|d| tgt(&d.target))}),
            );
        }
        if let Some(c) = &self.socially_cohesive {
            let w = c.witness.as_ref();
            flag(
                "sc",
                c.holds,
                json!({"property": "sc",
                       "individual": w.map(|(i, _)| ind(i)),
                       "activity": w.map(|(_, a)| problem.activity_id(*a))}),
            );
        }
        if let Some(c) = &self.core_stable {
            flag(
                "cs",
                c.holds,
                json!({"property": "cs", "coalition": c.witness.as_ref().map(coal)}),
            );
        }
        if let Some(c) = &self.strict_core_stable {
            flag(
                "scs",
                c.holds,
                json!({"property": "scs", "coalition": c.witness.as_ref().map(coal)}),
            );
        }
        if let Some(c) = &self.perfect {
            flag(
                "p",
                c.holds,
                json!({"property": "p",
                       "individual": c.witness.as_ref().map(|(i, _)| ind(i)),
                       "coalition": c.witness.as_ref().map(|(_, c)| coal(c))}),
            );
        }
        if let Some(c) = &self.pareto_optimal {
            let dominating = c.witness.as_ref().map(|m| {
                m.iter()
                    .map(|(i, t)| (problem.individual_id(i).to_owned(), tgt(&t)))
                    .collect::<Map<_, _>>()
            });
            flag(
                "po",
                c.holds,
                json!({"property": "po", "dominated_by": dominating}),
            );
        }
        obj.insert("utilitarian".into(), json!(self.utilitarian));
        obj.insert("egalitarian".into(), json!(self.egalitarian));
        obj.insert("witness".into(), Value::Array(witnesses));
        Value::Object(obj)
    }
}
