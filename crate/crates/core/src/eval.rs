//! Evaluation harness: a windowed baseline extractor and the accuracy,
//! redundancy, rank-shift and win-loss experiments.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::corpus::{AnnotatedSentence, GroundTruth, LemmaLexicon, LocationId, LocationRecord};
use crate::extract::{is_copula, ActivityName, ActivityRecord, ActivitySet};
use crate::merge::{redundancy_count, SenseIndex};
use crate::network::LanetGraph;
use crate::query::recommend_location;
use crate::scalar::Scalar;

/// Tokens after a verb searched for its noun.
pub const BASELINE_WINDOW: usize = 5;

/// `(verb index, noun index)` pairs: each non-copula verb with the nearest
/// noun among the following tokens.
pub fn baseline_pairs(sentence: &AnnotatedSentence) -> Vec<(usize, usize)> {
    let tokens = &sentence.tokens;
    let mut out = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        if !t.is_verb() || is_copula(&t.surface, &t.lemma) {
            continue;
        }
        let end = (i + 1 + BASELINE_WINDOW).min(tokens.len());
        if let Some(j) = (i + 1..end).find(|&j| tokens[j].is_noun()) {
            out.push((i, j));
        }
    }
    out
}

/// Windowed extraction over every review of a location. No relevance filter
/// or merge applies.
pub fn baseline_extract(location: &LocationRecord, lexicon: &LemmaLexicon) -> ActivitySet {
    let mut set = ActivitySet::new(location.location_id.clone());
    for review in &location.reviews {
        for sentence in &review.sentences {
            for (v, n) in baseline_pairs(sentence) {
                let verb = lexicon.lemmatize_token(&sentence.tokens[v]);
                let noun = lexicon.lemmatize_token(&sentence.tokens[n]);
                set.add_occurrence(&verb, &noun, &review.review_id);
            }
        }
    }
    set
}

fn member_hit(name: &ActivityName, gt: &BTreeSet<(String, String)>) -> bool {
    name.verbs.iter().any(|v| gt.contains(&(v.clone(), name.concept.clone())))
}

/// Matching activities and total, or `None` for an empty set.
pub fn accuracy_counts<'a>(
    names: impl IntoIterator<Item = &'a ActivityName>,
    gt: &BTreeSet<(String, String)>,
) -> Option<(usize, usize)> {
    let (mut hit, mut total) = (0, 0);
    for n in names {
        total += 1;
        hit += usize::from(member_hit(n, gt));
    }
    (total > 0).then_some((hit, total))
}

/// Fraction of activities found in the ground truth; merged verb groups match
/// through any member.
pub fn accuracy<'a>(names: impl IntoIterator<Item = &'a ActivityName>, gt: &BTreeSet<(String, String)>) -> Option<f64> {
    accuracy_counts(names, gt).map(|(h, t)| h as f64 / t as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AccuracyRow {
    pub location: LocationId,
    pub matched: usize,
    pub total: usize,
    pub accuracy: Option<f64>,
}

fn graph_names<S: Scalar>(graph: &LanetGraph<S>, id: &LocationId) -> Vec<ActivityName> {
    graph.activity_names_at(id).into_iter().filter_map(ActivityName::parse).collect()
}

/// Accuracy for every location the ground truth covers.
pub fn accuracy_by_location<S: Scalar>(graph: &LanetGraph<S>, gt: &GroundTruth) -> Vec<AccuracyRow> {
    gt.per_location
        .iter()
        .map(|(id, truth)| {
            let names = graph_names(graph, id);
            let counts = accuracy_counts(&names, truth);
            AccuracyRow {
                location: id.clone(),
                matched: counts.map_or(0, |c| c.0),
                total: counts.map_or(0, |c| c.1),
                accuracy: counts.map(|(h, t)| h as f64 / t as f64),
            }
        })
        .collect()
}

/// Activity sets carrying only names, as needed by the redundancy counter.
pub fn name_sets<S: Scalar>(graph: &LanetGraph<S>) -> BTreeMap<LocationId, ActivitySet> {
    graph
        .locations()
        .iter()
        .map(|l| {
            let mut set = ActivitySet::new(l.location_id.clone());
            for n in graph_names(graph, &l.location_id) {
                set.insert(ActivityRecord { verbs: n.verbs, concept: n.concept, supporting_reviews: BTreeSet::new() });
            }
            (l.location_id.clone(), set)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RedundancyRow {
    pub location: LocationId,
    pub before: usize,
    pub after: usize,
    /// Activities absorbed into another one.
    pub eliminated: usize,
    /// Same-concept pairs still sharing a sense.
    pub remaining: usize,
}

pub fn redundancy_by_location<S: Scalar>(
    before: &LanetGraph<S>,
    after: &LanetGraph<S>,
    senses: &SenseIndex,
) -> Vec<RedundancyRow> {
    let (b, a) = (name_sets(before), name_sets(after));
    b.iter()
        .map(|(id, pre)| {
            let empty = ActivitySet::new(id.clone());
            let post = a.get(id).unwrap_or(&empty);
            let (eliminated, remaining) = redundancy_count(pre, post, senses);
            RedundancyRow { location: id.clone(), before: pre.len(), after: post.len(), eliminated, remaining }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RankShift {
    pub activity: String,
    pub subject_rank: usize,
    pub baseline_rank: Option<usize>,
}

impl RankShift {
    /// Baseline rank minus subject rank; positive when the subject ranks the
    /// activity higher.
    pub fn shift(&self) -> Option<i64> {
        self.baseline_rank.map(|b| b as i64 - self.subject_rank as i64)
    }
}

/// Marker for an activity missing from the baseline ranking.
pub const ABSENT: &str = "ABSENT";

/// 1-based baseline rank of every subject entry; merged groups match a
/// baseline entry through any shared member.
pub fn rank_shift(subject: &[String], baseline: &[String]) -> Vec<RankShift> {
    let parsed: Vec<Option<ActivityName>> = baseline.iter().map(|b| ActivityName::parse(b)).collect();
    subject
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let exact = baseline.iter().position(|b| b == s);
            let by_member = || {
                let name = ActivityName::parse(s)?;
                parsed.iter().position(|p| p.as_ref().is_some_and(|p| p.matches(&name)))
            };
            RankShift {
                activity: s.clone(),
                subject_rank: i + 1,
                baseline_rank: exact.or_else(by_member).map(|r| r + 1),
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct WinLossTally {
    pub wins: usize,
    pub losses: usize,
    pub draws: usize,
}

impl WinLossTally {
    pub fn total(&self) -> usize {
        self.wins + self.losses + self.draws
    }

    fn pct(&self, n: usize) -> f64 {
        if self.total() == 0 {
            0.0
        } else {
            100.0 * n as f64 / self.total() as f64
        }
    }

    pub fn win_pct(&self) -> f64 {
        self.pct(self.wins)
    }

    pub fn loss_pct(&self) -> f64 {
        self.pct(self.losses)
    }

    pub fn draw_pct(&self) -> f64 {
        self.pct(self.draws)
    }
}

impl fmt::Display for WinLossTally {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} wins ({:.1}%), {} losses ({:.1}%), {} draws ({:.1}%)",
            self.wins,
            self.win_pct(),
            self.losses,
            self.loss_pct(),
            self.draws,
            self.draw_pct()
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Win,
    Loss,
    Draw,
}

/// Compares the recommendation of each system, judged by each system's own
/// frequency. `None` when neither system supports the activity.
pub fn compare_recommendations(a: Option<(LocationId, usize)>, b: Option<(LocationId, usize)>) -> Option<Outcome> {
    match (&a, &b) {
        (None, None) => None,
        (Some((la, _)), Some((lb, _))) if la == lb => Some(Outcome::Draw),
        _ => {
            let fa = a.map_or(0, |x| x.1);
            let fb = b.map_or(0, |x| x.1);
            Some(match fa.cmp(&fb) {
                std::cmp::Ordering::Greater => Outcome::Win,
                std::cmp::Ordering::Less => Outcome::Loss,
                std::cmp::Ordering::Equal => Outcome::Draw,
            })
        }
    }
}

/// Tally of system A against system B over the query activities.
pub fn win_loss<S: Scalar>(
    activities: &[String],
    candidates: &[LocationId],
    a: &LanetGraph<S>,
    b: &LanetGraph<S>,
) -> WinLossTally {
    let mut tally = WinLossTally::default();
    for act in activities {
        match compare_recommendations(recommend_location(a, act, candidates), recommend_location(b, act, candidates)) {
            Some(Outcome::Win) => tally.wins += 1,
            Some(Outcome::Loss) => tally.losses += 1,
            Some(Outcome::Draw) => tally.draws += 1,
            None => {}
        }
    }
    tally
}

fn csv_text(rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv output is utf-8")
}

pub fn accuracy_csv(rows: &[AccuracyRow]) -> String {
    let mut out = vec![vec!["location_id".into(), "matched".into(), "activities".into(), "accuracy".into()]];
    for r in rows {
        out.push(vec![
            r.location.to_string(),
            r.matched.to_string(),
            r.total.to_string(),
            r.accuracy.map_or_else(String::new, |a| format!("{a:.6}")),
        ]);
    }
    csv_text(out)
}

pub fn redundancy_csv(rows: &[RedundancyRow]) -> String {
    let mut out = vec![["location_id", "before", "after", "eliminated", "remaining"].map(String::from).to_vec()];
    for r in rows {
        out.push(vec![
            r.location.to_string(),
            r.before.to_string(),
            r.after.to_string(),
            r.eliminated.to_string(),
            r.remaining.to_string(),
        ]);
    }
    csv_text(out)
}

/// Rows are subject ranks `1..=k`, columns locations; cells hold the shift or
/// the absent marker, empty when a location has fewer than `rank` entries.
pub fn rankshift_csv(k: usize, shifts: &BTreeMap<LocationId, Vec<RankShift>>) -> String {
    let mut header = vec!["rank".to_owned()];
    header.extend(shifts.keys().map(LocationId::to_string));
    let mut out = vec![header];
    for rank in 1..=k {
        let mut row = vec![rank.to_string()];
        for list in shifts.values() {
            row.push(list.get(rank - 1).map_or_else(String::new, |s| {
                s.shift().map_or_else(|| ABSENT.to_owned(), |v| v.to_string())
            }));
        }
        out.push(row);
    }
    csv_text(out)
}

pub fn winloss_csv(tally: &WinLossTally) -> String {
    csv_text(vec![
        ["wins", "losses", "draws", "total", "win_pct", "loss_pct", "draw_pct"].map(String::from).to_vec(),
        vec![
            tally.wins.to_string(),
            tally.losses.to_string(),
            tally.draws.to_string(),
            tally.total().to_string(),
            format!("{:.2}", tally.win_pct()),
            format!("{:.2}", tally.loss_pct()),
            format!("{:.2}", tally.draw_pct()),
        ],
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gt(pairs: &[(&str, &str)]) -> BTreeSet<(String, String)> {
        pairs.iter().map(|(v, c)| (v.to_string(), c.to_string())).collect()
    }

    #[test]
    fn window_picks_nearest_noun() {
        let s = AnnotatedSentence::parse_compact(
            "We/PRP ordered/VBD/order a/DT large/JJ pizza/NN and/CC beer/NN",
            "",
        )
        .unwrap();
        assert_eq!(baseline_pairs(&s), vec![(1, 4)]);
        let far = AnnotatedSentence::parse_compact("Go/VB/go a/DT b/DT c/DT d/DT e/DT food/NN", "").unwrap();
        assert!(baseline_pairs(&far).is_empty());
    }

    #[test]
    fn noun_never_precedes_verb() {
        let s = AnnotatedSentence::parse_compact("Food/NN served/VBN/serve late/RB", "").unwrap();
        assert!(baseline_pairs(&s).is_empty());
    }

    #[test]
    fn accuracy_arithmetic() {
        let names: Vec<ActivityName> = (0..10).map(|i| ActivityName::new("eat", &format!("c{i}"))).collect();
        let truth = gt(&[("eat", "c0"), ("eat", "c1"), ("eat", "c2"), ("eat", "c3"), ("eat", "c4"), ("eat", "c5"), ("eat", "c6"), ("eat", "x")]);
        assert_eq!(accuracy(&names, &truth), Some(0.7));
        assert_eq!(accuracy(&[], &truth), None);
    }

    #[test]
    fn merged_group_matches_member() {
        let merged = ActivityName::parse("(have/take, food)").unwrap();
        assert_eq!(accuracy([&merged], &gt(&[("take", "food")])), Some(1.0));
        assert_eq!(accuracy([&merged], &gt(&[("eat", "food")])), Some(0.0));
    }

    #[test]
    fn shift_sign() {
        let mut baseline: Vec<String> = (0..10).map(|i| format!("(v{i}, c{i})")).collect();
        baseline[8] = "(have, food)".into();
        let subject = vec!["(v0, c0)".into(), "(v1, c1)".into(), "(v2, c2)".into(), "(have/take, food)".into(), "(new, thing)".into()];
        let shifts = rank_shift(&subject, &baseline);
        assert_eq!(shifts[0].shift(), Some(0));
        assert_eq!(shifts[3].shift(), Some(5));
        assert_eq!(shifts[4].shift(), None);
    }

    #[test]
    fn outcome_rules() {
        let l = |i: &str, f| Some((LocationId::from(i), f));
        assert_eq!(compare_recommendations(l("1", 3), l("1", 9)), Some(Outcome::Draw));
        assert_eq!(compare_recommendations(l("1", 6), l("2", 4)), Some(Outcome::Win));
        assert_eq!(compare_recommendations(None, l("2", 4)), Some(Outcome::Loss));
        assert_eq!(compare_recommendations(None, None), None);
    }
}
