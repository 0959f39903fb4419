//! JSON file formats for problems and matchings.
//!
//! A problem file is an object with `activities` (array of `{id, capacity}`
//! in declaration order), `individuals` (array of `{id, interests,
//! affinities}` where `interests` maps every activity id to a number in
//! `[-1, 1]` and `affinities` maps every other individual id likewise) and
//! an optional `seed`. A matching file is `{"assignments": {individual id ->
//! activity id or null}}` where `null` stands for the void activity.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Activity, IAProblem, Individual, Matching, ModelError};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("individual {individual:?}: interest references unknown activity {activity:?}")]
    UnknownInterestActivity { individual: String, activity: String },
    #[error("individual {individual:?}: missing interest for activity {activity:?}")]
    MissingInterest { individual: String, activity: String },
    #[error("individual {individual:?}: affinity references unknown peer {peer:?}")]
    UnknownPeer { individual: String, peer: String },
    #[error("individual {individual:?}: affinity for itself is not allowed")]
    SelfAffinity { individual: String },
    #[error("individual {individual:?}: missing affinity for peer {peer:?}")]
    MissingAffinity { individual: String, peer: String },
    #[error("assignment references unknown individual {individual:?}")]
    UnknownIndividual { individual: String },
    #[error("assignment references unknown activity {activity:?}")]
    UnknownActivity { activity: String },
    #[error("assignment is missing individual {individual:?}")]
    MissingAssignment { individual: String },
}

#[derive(Debug, Serialize, Deserialize)]
struct ProblemFile {
    activities: Vec<ActivityEntry>,
    individuals: Vec<IndividualEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ActivityEntry {
    id: String,
    capacity: u32,
}

#[derive(Debug, Serialize, Deserialize)]
struct IndividualEntry {
    id: String,
    interests: BTreeMap<String, f64>,
    affinities: BTreeMap<String, f64>,
}

/// Parses a problem file, requiring total interest and affinity functions.
pub fn parse_problem(text: &str) -> Result<IAProblem, ParseError> {
    let file: ProblemFile = serde_json::from_str(text)?;
    let activity_index: BTreeMap<&str, usize> = file
        .activities
        .iter()
        .enumerate()
        .map(|(k, a)| (a.id.as_str(), k))
        .collect();
    let individual_index: BTreeMap<&str, usize> = file
        .individuals
        .iter()
        .enumerate()
        .map(|(k, e)| (e.id.as_str(), k))
        .collect();
    let m = file.individuals.len();
    let n = file.activities.len();

    let mut interest = vec![vec![0.0; n]; m];
    let mut affinity = vec![vec![0.0; m]; m];
    for (i, entry) in file.individuals.iter().enumerate() {
        for (aid, &v) in &entry.interests {
            match activity_index.get(aid.as_str()) {
                Some(&k) => interest[i][k] = v,
                None => {
                    return Err(ParseError::UnknownInterestActivity {
                        individual: entry.id.clone(),
                        activity: aid.clone(),
                    })
                }
            }
        }
        for a in &file.activities {
            if !entry.interests.contains_key(&a.id) {
                return Err(ParseError::MissingInterest {
                    individual: entry.id.clone(),
                    activity: a.id.clone(),
                });
            }
        }
        for (pid, &w) in &entry.affinities {
            if pid == &entry.id {
                return Err(ParseError::SelfAffinity {
                    individual: entry.id.clone(),
                });
            }
            match individual_index.get(pid.as_str()) {
                Some(&j) => affinity[i][j] = w,
                None => {
                    return Err(ParseError::UnknownPeer {
                        individual: entry.id.clone(),
                        peer: pid.clone(),
                    })
                }
            }
        }
        // The affinity function is total over ordered pairs of distinct
        // individuals; absent pairs are rejected rather than defaulted.
        for peer in &file.individuals {
            if peer.id != entry.id && !entry.affinities.contains_key(&peer.id) {
                return Err(ParseError::MissingAffinity {
                    individual: entry.id.clone(),
                    peer: peer.id.clone(),
                });
            }
        }
    }

    let activities = file
        .activities
        .into_iter()
        .map(|a| (a.id, a.capacity))
        .collect();
    let individuals = file.individuals.into_iter().map(|e| e.id).collect();
    let mut problem = IAProblem::new(activities, individuals, interest, affinity)?;
    if let Some(seed) = file.seed {
        problem = problem.with_seed(seed);
    }
    Ok(problem)
}

/// Serializes a problem to pretty-printed JSON with a trailing newline.
/// Maps are emitted in sorted key order, so equal problems serialize to
/// identical bytes.
pub fn serialize_problem(problem: &IAProblem) -> String {
    let file = ProblemFile {
        activities: problem
            .activities()
            .map(|a| ActivityEntry {
                id: problem.activity_id(a).to_owned(),
                capacity: problem.capacity(a),
            })
            .collect(),
        individuals: problem
            .individuals()
            .map(|i| IndividualEntry {
                id: problem.individual_id(i).to_owned(),
                interests: problem
                    .activities()
                    .map(|a| (problem.activity_id(a).to_owned(), problem.interest(i, Some(a))))
                    .collect(),
                affinities: problem
                    .individuals()
                    .filter(|&j| j != i)
                    .map(|j| (problem.individual_id(j).to_owned(), problem.affinity(i, j)))
                    .collect(),
            })
            .collect(),
        seed: problem.seed(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("problem serialization");
    text.push('\n');
    text
}

#[derive(Debug, Serialize, Deserialize)]
struct MatchingFile {
    assignments: BTreeMap<String, Option<String>>,
}

/// Parses a matching file against a problem. The assignment must cover
/// exactly the problem's individuals and reference only known activities.
pub fn parse_matching(text: &str, problem: &IAProblem) -> Result<Matching, ParseError> {
    let file: MatchingFile = serde_json::from_str(text)?;
    let activity_index: BTreeMap<&str, usize> = problem
        .activities()
        .map(|a| (problem.activity_id(a), a.0))
        .collect();
    let individual_index: BTreeMap<&str, usize> = problem
        .individuals()
        .map(|i| (problem.individual_id(i), i.0))
        .collect();

    let mut assignment = vec![None; problem.m()];
    let mut covered = vec![false; problem.m()];
    for (iid, target) in &file.assignments {
        let &i = individual_index
            .get(iid.as_str())
            .ok_or_else(|| ParseError::UnknownIndividual {
                individual: iid.clone(),
            })?;
        assignment[i] = match target {
            None => None,
            Some(aid) => Some(Activity(*activity_index.get(aid.as_str()).ok_or_else(
                || ParseError::UnknownActivity {
                    activity: aid.clone(),
                },
            )?)),
        };
        covered[i] = true;
    }
    if let Some(i) = covered.iter().position(|&c| !c) {
        return Err(ParseError::MissingAssignment {
            individual: problem.individual_id(Individual(i)).to_owned(),
        });
    }
    Ok(Matching::new(assignment))
}

/// Serializes a matching to pretty-printed JSON with a trailing newline.
pub fn serialize_matching(problem: &IAProblem, matching: &Matching) -> String {
    let file = MatchingFile {
        assignments: matching
            .iter()
            .map(|(i, t)| {
                (
                    problem.individual_id(i).to_owned(),
                    t.map(|a| problem.activity_id(a).to_owned()),
                )
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("matching serialization");
    text.push('\n');
    text
}
