//! Sense-aware merging of redundant activities.
//!
//! Two activities are redundant when they share a concept and a hidden
//! sense. Hidden senses come from associative snapshot relations touching
//! either the `"verb concept"` phrase or the bare verb. Merges recorded on a
//! general concept propagate to the same verbs on its specializations.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::concepts::ConceptHierarchy;
use crate::corpus::{Relation, RelationSnapshot};
use crate::extract::{ActivityRecord, ActivitySet};

const SENSE_RELATIONS: [Relation; 3] = [Relation::RelatedTo, Relation::IsA, Relation::UsedFor];

#[derive(Clone, Debug, Default)]
pub struct SenseIndex {
    senses: HashMap<String, BTreeSet<String>>,
}

impl SenseIndex {
    pub fn from_snapshot(snapshot: &RelationSnapshot) -> Self {
        let mut senses: HashMap<String, BTreeSet<String>> = HashMap::new();
        for t in snapshot.triples() {
            if !SENSE_RELATIONS.contains(&t.relation) {
                continue;
            }
            senses.entry(t.head.clone()).or_default().insert(t.tail.clone());
            senses.entry(t.tail.clone()).or_default().insert(t.head.clone());
        }
        SenseIndex { senses }
    }

    fn lookup(&self, key: &str) -> impl Iterator<Item = &String> {
        self.senses.get(key).into_iter().flatten()
    }

    pub fn hidden_senses(&self, verb: &str, concept: &str) -> BTreeSet<String> {
        let phrase = format!("{verb} {concept}");
        self.lookup(&phrase).chain(self.lookup(verb)).cloned().collect()
    }

    fn activity_senses(&self, activity: &ActivityRecord) -> BTreeSet<String> {
        activity
            .verbs
            .iter()
            .flat_map(|v| self.hidden_senses(v, &activity.concept))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct MergeGroup {
    pub concept: String,
    pub verbs: BTreeSet<String>,
    /// Shared hidden sense that justified the merge.
    pub sense: String,
    pub af_after: usize,
}

impl MergeGroup {
    pub fn verb_group(&self) -> String {
        self.verbs.iter().cloned().collect::<Vec<_>>().join("/")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MergeOutcome {
    pub activities: ActivitySet,
    pub groups: Vec<MergeGroup>,
}

impl MergeOutcome {
    /// `concept<TAB>sense<TAB>v1/v2/...<TAB>af_after` lines.
    pub fn audit_log(&self) -> String {
        self.groups
            .iter()
            .map(|g| format!("{}\t{}\t{}\t{}\n", g.concept, g.sense, g.verb_group(), g.af_after))
            .collect()
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Joins the two sets under the smaller root; false if already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }
}

/// Merges redundant activities to a fixpoint.
///
/// Each round runs a direct pass (same concept, intersecting hidden senses)
/// and a propagation pass (verbs merged on the nearest ancestor concept with
/// a recorded merge are merged on the descendant as well).
pub fn merge_redundant(aset: &ActivitySet, cch: &ConceptHierarchy, senses: &SenseIndex) -> MergeOutcome {
    let mut current: Vec<ActivityRecord> = aset.iter().cloned().collect();
    // Sense of every activity produced by a merge in this call, by (concept, verbs).
    let mut merged: BTreeMap<(String, BTreeSet<String>), String> = BTreeMap::new();

    loop {
        current.sort_by(|a, b| (&a.concept, &a.verbs).cmp(&(&b.concept, &b.verbs)));
        let mut by_concept: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, a) in current.iter().enumerate() {
            by_concept.entry(a.concept.as_str()).or_default().push(i);
        }
        let mut records: BTreeMap<&str, Vec<(&BTreeSet<String>, &str)>> = BTreeMap::new();
        for ((concept, verbs), sense) in &merged {
            records.entry(concept.as_str()).or_default().push((verbs, sense.as_str()));
        }

        let mut dsu = DisjointSet::new(current.len());
        // First justifying sense per union, in scan order.
        let mut justification: Vec<(usize, usize, String)> = Vec::new();
        let sense_sets: Vec<BTreeSet<String>> = current.iter().map(|a| senses.activity_senses(a)).collect();

        for (concept, members) in &by_concept {
            for (x, &i) in members.iter().enumerate() {
                for &j in &members[x + 1..] {
                    if let Some(shared) = sense_sets[i].intersection(&sense_sets[j]).next() {
                        if dsu.union(i, j) {
                            justification.push((i, j, shared.clone()));
                        }
                    }
                }
            }
            let nearest = cch
                .ancestors(concept)
                .into_iter()
                .find_map(|anc| records.get(anc));
            if let Some(groups) = nearest {
                for (verbs, sense) in groups {
                    let touching: Vec<usize> = members
                        .iter()
                        .copied()
                        .filter(|&i| current[i].verbs.iter().any(|v| verbs.contains(v)))
                        .collect();
                    for w in touching.windows(2) {
                        if dsu.union(w[0], w[1]) {
                            justification.push((w[0], w[1], (*sense).to_owned()));
                        }
                    }
                }
            }
        }

        if justification.is_empty() {
            break;
        }

        let mut clusters: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..current.len() {
            clusters.entry(dsu.find(i)).or_default().push(i);
        }
        let mut cluster_sense: BTreeMap<usize, String> = BTreeMap::new();
        for (i, _, sense) in &justification {
            cluster_sense.entry(dsu.find(*i)).or_insert_with(|| sense.clone());
        }

        let mut next = Vec::with_capacity(clusters.len());
        for (root, members) in clusters {
            if members.len() == 1 {
                next.push(current[members[0]].clone());
                continue;
            }
            let mut combined = current[members[0]].clone();
            for &m in &members[1..] {
                combined.verbs.extend(current[m].verbs.iter().cloned());
                combined
                    .supporting_reviews
                    .extend(current[m].supporting_reviews.iter().cloned());
            }
            for &m in &members {
                merged.remove(&(current[m].concept.clone(), current[m].verbs.clone()));
            }
            let sense = cluster_sense.get(&root).cloned().unwrap_or_default();
            merged.insert((combined.concept.clone(), combined.verbs.clone()), sense);
            next.push(combined);
        }
        current = next;
    }

    let mut activities = ActivitySet::new(aset.location_id.clone());
    for a in current {
        activities.insert(a);
    }
    let mut groups: Vec<MergeGroup> = merged
        .into_iter()
        .map(|((concept, verbs), sense)| {
            let af_after = activities
                .iter()
                .find(|a| a.concept == concept && a.verbs == verbs)
                .map(ActivityRecord::af)
                .unwrap_or_default();
            MergeGroup { concept, verbs, sense, af_after }
        })
        .collect();
    groups.sort();
    MergeOutcome { activities, groups }
}

/// Redundant activities before merging (members absorbed into another
/// activity) and redundant pairs still left after it.
pub fn redundancy_count(before: &ActivitySet, after: &ActivitySet, senses: &SenseIndex) -> (usize, usize) {
    let mut absorbed = 0;
    for a in after.iter() {
        let members = before
            .iter()
            .filter(|b| b.concept == a.concept && b.verbs.is_subset(&a.verbs))
            .count();
        absorbed += members.saturating_sub(1);
    }
    let rest: Vec<(&ActivityRecord, BTreeSet<String>)> =
        after.iter().map(|a| (a, senses.activity_senses(a))).collect();
    let mut remaining = 0;
    for (x, (a, sa)) in rest.iter().enumerate() {
        for (b, sb) in &rest[x + 1..] {
            if a.concept == b.concept && !sa.is_disjoint(sb) {
                remaining += 1;
            }
        }
    }
    (absorbed, remaining)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concepts::{build_cch, ConceptEntry};
    use crate::corpus::Triple;

    fn snapshot() -> RelationSnapshot {
        let t = |h: &str, r, tl: &str| Triple::new(h, r, tl);
        RelationSnapshot::from_triples([
            t("eat", Relation::RelatedTo, "take food"),
            t("have food", Relation::UsedFor, "eat"),
            t("get food", Relation::UsedFor, "eat"),
            t("food", Relation::AtLocation, "restaurant"),
            t("burger", Relation::IsA, "food"),
            t("chicken", Relation::IsA, "food"),
        ])
    }

    fn record(verb: &str, concept: &str, reviews: &[&str]) -> ActivityRecord {
        let mut r = ActivityRecord::new(verb, concept);
        r.supporting_reviews = reviews.iter().map(|s| s.to_string()).collect();
        r
    }

    fn cch(snap: &RelationSnapshot) -> ConceptHierarchy {
        let cset: Vec<ConceptEntry> = ["food", "burger", "chicken"]
            .iter()
            .map(|c| ConceptEntry { concept: (*c).into(), cf: 1 })
            .collect();
        build_cch(&["restaurant".into()], &cset, snap)
    }

    #[test]
    fn senses_from_phrase_and_verb() {
        let idx = SenseIndex::from_snapshot(&snapshot());
        assert_eq!(idx.hidden_senses("take", "food"), BTreeSet::from(["eat".to_string()]));
        assert_eq!(idx.hidden_senses("have", "food"), BTreeSet::from(["eat".to_string()]));
        assert!(idx.hidden_senses("watch", "movie").is_empty());
    }

    #[test]
    fn direct_cluster_unions_reviews() {
        let snap = snapshot();
        let mut set = ActivitySet::new("1".into());
        set.insert(record("take", "food", &["r1", "r2"]));
        set.insert(record("get", "food", &["r2"]));
        set.insert(record("have", "food", &["r3"]));
        let out = merge_redundant(&set, &cch(&snap), &SenseIndex::from_snapshot(&snap));
        assert_eq!(out.activities.len(), 1);
        let merged = out.activities.get("(get/have/take, food)").unwrap();
        assert_eq!(merged.af(), 3);
        assert_eq!(out.audit_log(), "food\teat\tget/have/take\t3\n");
    }

    #[test]
    fn different_concepts_stay_apart() {
        let snap = snapshot();
        let mut set = ActivitySet::new("1".into());
        set.insert(record("have", "chicken", &["r1"]));
        set.insert(record("have", "food", &["r2"]));
        let out = merge_redundant(&set, &cch(&snap), &SenseIndex::from_snapshot(&snap));
        assert_eq!(out.activities.len(), 2);
        assert!(out.groups.is_empty());
    }

    #[test]
    fn no_senses_no_redundancy() {
        let mut set = ActivitySet::new("1".into());
        set.insert(record("have", "food", &["r1"]));
        set.insert(record("take", "food", &["r2"]));
        let idx = SenseIndex::default();
        let out = merge_redundant(&set, &ConceptHierarchy::default(), &idx);
        assert_eq!(redundancy_count(&set, &out.activities, &idx), (0, 0));
    }

    #[test]
    fn redundancy_of_two_clusters() {
        let snap = RelationSnapshot::from_triples([
            Triple::new("eat", Relation::RelatedTo, "take food"),
            Triple::new("have food", Relation::UsedFor, "eat"),
            Triple::new("cook", Relation::RelatedTo, "make food"),
            Triple::new("prepare food", Relation::UsedFor, "cook"),
        ]);
        let idx = SenseIndex::from_snapshot(&snap);
        let mut set = ActivitySet::new("1".into());
        for v in ["take", "have", "make", "prepare"] {
            set.insert(record(v, "food", &[v]));
        }
        let out = merge_redundant(&set, &ConceptHierarchy::default(), &idx);
        assert_eq!(out.activities.len(), 2);
        assert_eq!(redundancy_count(&set, &out.activities, &idx), (2, 0));
        assert_eq!(redundancy_count(&set, &set, &idx), (0, 2));
    }
}
