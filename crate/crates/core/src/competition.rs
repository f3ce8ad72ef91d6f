//! Competition outcomes, scoring and ground-truth rankings per task.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::ranking::{Ranking, RankingError, ToolSet};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompetitionError {
    #[error("unknown answer {0:?} (expected TRUE, FALSE or UNKNOWN)")]
    UnknownAnswer(String),
    #[error("unknown verdict {0:?} (expected TRUE or FALSE)")]
    UnknownVerdict(String),
    #[error("negative or non-finite time {time} for task {task:?}, tool {tool:?}")]
    BadTime { task: String, tool: String, time: f64 },
    #[error("duplicate record for task {task:?}, tool {tool:?}")]
    Duplicate { task: String, tool: String },
    #[error("conflicting expected verdicts for task {0:?}")]
    ConflictingVerdict(String),
    #[error("aggregation unit has no outcomes")]
    EmptyUnit,
    #[error("scoring schema fails the sign check: {0}")]
    SuspiciousSchema(&'static str),
    #[error("tasks without outcomes: {without_outcomes:?}; outcomes without graphs: {without_graphs:?}")]
    Mismatch { without_outcomes: Vec<String>, without_graphs: Vec<String> },
    #[error(transparent)]
    Ranking(#[from] RankingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "UPPERCASE"))]
pub enum Answer {
    True,
    False,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "UPPERCASE"))]
pub enum Verdict {
    True,
    False,
}

impl FromStr for Answer {
    type Err = CompetitionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "TRUE" => Ok(Answer::True),
            "FALSE" => Ok(Answer::False),
            "UNKNOWN" => Ok(Answer::Unknown),
            other => Err(CompetitionError::UnknownAnswer(other.into())),
        }
    }
}

impl FromStr for Verdict {
    type Err = CompetitionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "TRUE" => Ok(Verdict::True),
            "FALSE" => Ok(Verdict::False),
            other => Err(CompetitionError::UnknownVerdict(other.into())),
        }
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Answer::True => "TRUE",
            Answer::False => "FALSE",
            Answer::Unknown => "UNKNOWN",
        })
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::True => "TRUE",
            Verdict::False => "FALSE",
        })
    }
}

/// One verification run of `tool` on `task`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TaskOutcome {
    pub task: String,
    pub tool: String,
    pub time_s: f64,
    pub answer: Answer,
    pub expected: Verdict,
}

impl TaskOutcome {
    pub fn is_correct(&self) -> bool {
        matches!(
            (self.answer, self.expected),
            (Answer::True, Verdict::True) | (Answer::False, Verdict::False)
        )
    }

    fn validate(&self) -> Result<(), CompetitionError> {
        if self.time_s.is_finite() && self.time_s >= 0.0 {
            Ok(())
        } else {
            Err(CompetitionError::BadTime { task: self.task.clone(), tool: self.tool.clone(), time: self.time_s })
        }
    }
}

/// Points per outcome class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ScoringSchema {
    pub correct_true: i64,
    pub correct_false: i64,
    pub incorrect_true: i64,
    pub incorrect_false: i64,
    pub unknown: i64,
}

impl ScoringSchema {
    /// Placeholder values shipped with the repository. Not an official
    /// competition schema.
    pub const EXAMPLE: ScoringSchema =
        ScoringSchema { correct_true: 2, correct_false: 1, incorrect_true: -8, incorrect_false: -4, unknown: 0 };

    /// Correct answers must not score below zero, incorrect ones not above.
    pub fn check(&self) -> Result<(), CompetitionError> {
        if self.correct_true < 0 || self.correct_false < 0 {
            return Err(CompetitionError::SuspiciousSchema("correct answers score below zero"));
        }
        if self.incorrect_true > 0 || self.incorrect_false > 0 {
            return Err(CompetitionError::SuspiciousSchema("incorrect answers score above zero"));
        }
        Ok(())
    }
}

pub fn score(outcome: &TaskOutcome, schema: &ScoringSchema) -> i64 {
    match (outcome.answer, outcome.expected) {
        (Answer::Unknown, _) => schema.unknown,
        (Answer::True, Verdict::True) => schema.correct_true,
        (Answer::False, Verdict::False) => schema.correct_false,
        (Answer::True, Verdict::False) => schema.incorrect_true,
        (Answer::False, Verdict::True) => schema.incorrect_false,
    }
}

/// Ranking of one aggregation unit, with the `(task, tool)` pairs that had no
/// record and were scored as UNKNOWN in zero time.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitRanking {
    pub ranking: Ranking,
    pub missing: Vec<(String, String)>,
}

/// Rank `tools` on the outcomes of one aggregation unit: total score
/// descending, then total time of correct runs ascending, then name.
/// Records of tools outside `tools` are ignored.
pub fn rank_tools(
    outcomes: &[TaskOutcome],
    tools: &ToolSet,
    schema: &ScoringSchema,
) -> Result<UnitRanking, CompetitionError> {
    if outcomes.is_empty() {
        return Err(CompetitionError::EmptyUnit);
    }
    let k = tools.len();
    let mut totals = alloc::vec![(0i64, 0.0f64); k];
    let mut seen = BTreeSet::new();
    for o in outcomes {
        o.validate()?;
        let Some(t) = tools.index_of(&o.tool) else { continue };
        if !seen.insert((o.task.as_str(), t)) {
            return Err(CompetitionError::Duplicate { task: o.task.clone(), tool: o.tool.clone() });
        }
        totals[t].0 += score(o, schema);
        if o.is_correct() {
            totals[t].1 += o.time_s;
        }
    }
    let tasks: BTreeSet<&str> = outcomes.iter().map(|o| o.task.as_str()).collect();
    let mut missing = Vec::new();
    for task in &tasks {
        for (t, name) in tools.names().iter().enumerate() {
            if !seen.contains(&(*task, t)) {
                log::warn!("no record for task {task:?}, tool {name:?}; treating as UNKNOWN");
                totals[t].0 += schema.unknown;
                missing.push((task.to_string(), name.clone()));
            }
        }
    }
    let names = tools.names();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        totals[b]
            .0
            .cmp(&totals[a].0)
            .then(totals[a].1.total_cmp(&totals[b].1))
            .then(names[a].cmp(&names[b]))
    });
    Ok(UnitRanking { ranking: Ranking::from_order(&order)?, missing })
}

/// Tasks aligned with their ground-truth rankings.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub tasks: Vec<String>,
    pub rankings: Vec<Ranking>,
    pub tools: ToolSet,
    /// Tools dropped by the filter.
    pub excluded: Vec<String>,
    pub missing: Vec<(String, String)>,
}

/// Build one ranking per task. `graph_tasks` names the tasks that have a
/// graph; every one of them needs outcomes and vice versa. Tools are ordered
/// by name; with `filter_tools`, tools without any correct outcome are
/// dropped.
pub fn assemble_dataset(
    graph_tasks: &[String],
    outcomes: &[TaskOutcome],
    schema: &ScoringSchema,
    filter_tools: bool,
) -> Result<Dataset, CompetitionError> {
    let mut by_task: BTreeMap<&str, Vec<TaskOutcome>> = BTreeMap::new();
    let mut expected: BTreeMap<&str, Verdict> = BTreeMap::new();
    for o in outcomes {
        o.validate()?;
        if *expected.entry(&o.task).or_insert(o.expected) != o.expected {
            return Err(CompetitionError::ConflictingVerdict(o.task.clone()));
        }
        by_task.entry(&o.task).or_default().push(o.clone());
    }
    let graphs: BTreeSet<&str> = graph_tasks.iter().map(String::as_str).collect();
    let without_outcomes: Vec<String> = graphs.iter().filter(|t| !by_task.contains_key(*t)).map(|t| t.to_string()).collect();
    let without_graphs: Vec<String> = by_task.keys().filter(|t| !graphs.contains(*t)).map(|t| t.to_string()).collect();
    if !without_outcomes.is_empty() || !without_graphs.is_empty() {
        return Err(CompetitionError::Mismatch { without_outcomes, without_graphs });
    }

    let all: BTreeSet<&str> = outcomes.iter().map(|o| o.tool.as_str()).collect();
    let correct: BTreeSet<&str> = outcomes.iter().filter(|o| o.is_correct()).map(|o| o.tool.as_str()).collect();
    let (kept, excluded): (Vec<&str>, Vec<&str>) = all.iter().partition(|t| !filter_tools || correct.contains(*t));
    let tools = ToolSet::new(kept.iter().map(|t| t.to_string()).collect())?;

    let mut dataset = Dataset {
        tasks: Vec::new(),
        rankings: Vec::new(),
        tools,
        excluded: excluded.iter().map(|t| t.to_string()).collect(),
        missing: Vec::new(),
    };
    for (task, unit) in by_task {
        let r = rank_tools(&unit, &dataset.tools, schema)?;
        dataset.tasks.push(task.into());
        dataset.rankings.push(r.ranking);
        dataset.missing.extend(r.missing);
    }
    Ok(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn o(task: &str, tool: &str, time_s: f64, answer: Answer, expected: Verdict) -> TaskOutcome {
        TaskOutcome { task: task.into(), tool: tool.into(), time_s, answer, expected }
    }

    fn tools(names: &[&str]) -> ToolSet {
        ToolSet::new(names.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn score_table() {
        let s = ScoringSchema::EXAMPLE;
        assert_eq!(score(&o("t", "a", 1.0, Answer::Unknown, Verdict::True), &s), 0);
        assert_eq!(score(&o("t", "a", 1.0, Answer::True, Verdict::True), &s), 2);
        assert_eq!(score(&o("t", "a", 1.0, Answer::False, Verdict::False), &s), 1);
        assert_eq!(score(&o("t", "a", 1.0, Answer::True, Verdict::False), &s), -8);
        assert_eq!(score(&o("t", "a", 1.0, Answer::False, Verdict::True), &s), -4);
        assert!(s.check().is_ok());
        assert!(ScoringSchema { unknown: 0, incorrect_true: 3, ..s }.check().is_err());
    }

    #[test]
    fn highest_score_first() {
        let outs = [
            o("t", "a", 5.0, Answer::Unknown, Verdict::True),
            o("t", "b", 5.0, Answer::True, Verdict::True),
            o("t", "c", 5.0, Answer::False, Verdict::True),
        ];
        let r = rank_tools(&outs, &tools(&["a", "b", "c"]), &ScoringSchema::EXAMPLE).unwrap();
        assert_eq!(r.ranking.positions(), [2, 1, 3]);
        assert!(r.missing.is_empty());
    }

    #[test]
    fn time_breaks_score_ties() {
        let outs = [o("t", "a", 20.0, Answer::True, Verdict::True), o("t", "b", 10.0, Answer::True, Verdict::True)];
        let r = rank_tools(&outs, &tools(&["a", "b"]), &ScoringSchema::EXAMPLE).unwrap();
        assert_eq!(r.ranking.positions(), [2, 1]);
    }

    #[test]
    fn all_unknown_ranks_by_name() {
        let outs = [
            o("t", "zeta", 3.0, Answer::Unknown, Verdict::True),
            o("t", "alpha", 9.0, Answer::Unknown, Verdict::True),
            o("t", "mid", 1.0, Answer::Unknown, Verdict::True),
        ];
        let r = rank_tools(&outs, &tools(&["zeta", "alpha", "mid"]), &ScoringSchema::EXAMPLE).unwrap();
        assert_eq!(r.ranking.positions(), [3, 1, 2]);
    }

    #[test]
    fn missing_records_are_flagged() {
        let outs = [o("t", "a", 1.0, Answer::True, Verdict::True)];
        let r = rank_tools(&outs, &tools(&["a", "b"]), &ScoringSchema::EXAMPLE).unwrap();
        assert_eq!(r.missing, [("t".to_string(), "b".to_string())]);
        assert_eq!(r.ranking.positions(), [1, 2]);
    }

    #[test]
    fn unit_errors() {
        let t = tools(&["a", "b"]);
        assert_eq!(rank_tools(&[], &t, &ScoringSchema::EXAMPLE), Err(CompetitionError::EmptyUnit));
        let dup = [o("t", "a", 1.0, Answer::True, Verdict::True), o("t", "a", 2.0, Answer::True, Verdict::True)];
        assert!(matches!(rank_tools(&dup, &t, &ScoringSchema::EXAMPLE), Err(CompetitionError::Duplicate { .. })));
        let neg = [o("t", "a", -1.0, Answer::True, Verdict::True)];
        assert!(matches!(rank_tools(&neg, &t, &ScoringSchema::EXAMPLE), Err(CompetitionError::BadTime { .. })));
    }

    fn fixture() -> Vec<TaskOutcome> {
        use Answer::*;
        vec![
            o("t1", "a", 1.0, True, Verdict::True),
            o("t1", "b", 2.0, True, Verdict::True),
            o("t1", "c", 1.0, Unknown, Verdict::True),
            o("t1", "never", 1.0, Unknown, Verdict::True),
            o("t2", "a", 1.0, Unknown, Verdict::False),
            o("t2", "b", 4.0, False, Verdict::False),
            o("t2", "c", 3.0, False, Verdict::False),
            o("t2", "never", 1.0, True, Verdict::False),
            o("t3", "a", 1.0, True, Verdict::False),
            o("t3", "b", 1.0, Unknown, Verdict::False),
            o("t3", "c", 9.0, False, Verdict::False),
            o("t3", "never", 1.0, Unknown, Verdict::False),
        ]
    }

    #[test]
    fn assemble_filters_tools() {
        let tasks = vec!["t1".into(), "t2".into(), "t3".into()];
        let d = assemble_dataset(&tasks, &fixture(), &ScoringSchema::EXAMPLE, true).unwrap();
        assert_eq!(d.tools.names(), ["a", "b", "c"]);
        assert_eq!(d.excluded, ["never"]);
        assert_eq!(d.tasks, tasks);
        let positions: Vec<&[usize]> = d.rankings.iter().map(|r| r.positions()).collect();
        assert_eq!(positions, [&[1, 2, 3][..], &[3, 2, 1], &[3, 2, 1]]);

        let d = assemble_dataset(&tasks, &fixture(), &ScoringSchema::EXAMPLE, false).unwrap();
        assert_eq!(d.tools.names(), ["a", "b", "c", "never"]);
    }

    #[test]
    fn assemble_reports_mismatch() {
        let tasks = vec!["t1".into(), "t2".into(), "t9".into()];
        match assemble_dataset(&tasks, &fixture(), &ScoringSchema::EXAMPLE, true) {
            Err(CompetitionError::Mismatch { without_outcomes, without_graphs }) => {
                assert_eq!(without_outcomes, ["t9"]);
                assert_eq!(without_graphs, ["t3"]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn answers_parse() {
        assert_eq!("TRUE".parse::<Answer>().unwrap(), Answer::True);
        assert_eq!("UNKNOWN".parse::<Answer>().unwrap(), Answer::Unknown);
        assert!("UNKNOWN".parse::<Verdict>().is_err());
        assert!("maybe".parse::<Answer>().is_err());
    }
}
