//! Concept extraction, the category-aware concept hierarchy, relevance
//! filtering and concept scores.
//!
//! The hierarchy starts with the location's categories at level 1 and grows
//! one level per iteration: *expand* pulls concepts associated with the
//! deepest level into that level (`RelatedTo`/`UsedFor`, either direction),
//! then *extend* hangs concepts specializing it below as a new level
//! (`IsA`/`AtLocation`/`DerivedFrom`, child to parent). Growth stops with the
//! first iteration that adds nothing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::corpus::{normalize_concept, Relation, RelationSnapshot};
use crate::error::{Error, Result};
use crate::extract::ActivitySet;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ConceptEntry {
    pub concept: String,
    /// Distinct reviews referring to the concept.
    pub cf: usize,
}

/// One entry per distinct concept; CF is the size of the union of the
/// supporting reviews of every activity sharing it.
pub fn extract_concepts(aset: &ActivitySet) -> Vec<ConceptEntry> {
    let mut reviews: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for activity in aset.iter() {
        reviews
            .entry(activity.concept.as_str())
            .or_default()
            .extend(activity.supporting_reviews.iter().map(String::as_str));
    }
    reviews
        .into_iter()
        .map(|(concept, ids)| ConceptEntry { concept: concept.to_owned(), cf: ids.len() })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct CchArc {
    pub from: String,
    pub relation: Relation,
    pub to: String,
    /// Level of `from`.
    pub level: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConceptHierarchy {
    levels: Vec<BTreeSet<String>>,
    level_of: BTreeMap<String, usize>,
    arcs: Vec<CchArc>,
    /// Specialization parent (extend arc target).
    parent: BTreeMap<String, String>,
    /// Same-level node an expanded concept attached to.
    attached_to: BTreeMap<String, String>,
    iterations: usize,
}

/// Snapshot key for a concept: the concept itself, or the head (last) word of
/// a multi-word concept the snapshot never mentions.
fn snapshot_key<'a>(concept: &'a str, snapshot: &RelationSnapshot) -> &'a str {
    if snapshot.mentions(concept) {
        return concept;
    }
    concept.rsplit(' ').next().unwrap_or(concept)
}

impl ConceptHierarchy {
    /// Number of levels (root level counts as 1).
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Concepts at a 1-based level.
    pub fn level(&self, level: usize) -> Option<&BTreeSet<String>> {
        level.checked_sub(1).and_then(|i| self.levels.get(i))
    }

    pub fn levels(&self) -> &[BTreeSet<String>] {
        &self.levels
    }

    /// Concept level index (root = 1).
    pub fn level_of(&self, concept: &str) -> Option<usize> {
        self.level_of.get(concept).copied()
    }

    pub fn contains(&self, concept: &str) -> bool {
        self.level_of.contains_key(concept)
    }

    pub fn arcs(&self) -> &[CchArc] {
        &self.arcs
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&str, usize)> {
        self.level_of.iter().map(|(c, &l)| (c.as_str(), l))
    }

    pub fn parent(&self, concept: &str) -> Option<&str> {
        self.parent.get(concept).map(String::as_str)
    }

    /// Strictly more general concepts, nearest first. Expanded concepts
    /// without a specialization parent inherit the ancestors of the node
    /// they attached to.
    pub fn ancestors(&self, concept: &str) -> Vec<&str> {
        let mut out = Vec::new();
        let mut current = concept;
        let mut guard = BTreeSet::new();
        loop {
            if !guard.insert(current) {
                break;
            }
            if let Some(p) = self.parent.get(current) {
                out.push(p.as_str());
                current = p;
            } else if let Some(a) = self.attached_to.get(current) {
                current = a;
            } else {
                break;
            }
        }
        out
    }

    /// Checks the structural properties of the hierarchy: level 1 equals the
    /// categories, deeper levels draw only from `cset`, associative arcs stay
    /// within a level, specializing arcs span exactly one level, and every
    /// concept sits on exactly one level.
    pub fn validate(&self, categories: &[String], cset: &BTreeSet<String>) -> std::result::Result<(), String> {
        let cats: BTreeSet<String> = categories.iter().map(|c| normalize_concept(c)).collect();
        match self.levels.first() {
            Some(first) => {
                let extra: Vec<_> = first.difference(&cats).filter(|c| !cset.contains(*c)).collect();
                if !cats.is_subset(first) || !extra.is_empty() {
                    return Err(format!("level 1 {first:?} does not match categories {cats:?}"));
                }
            }
            None => return Err("hierarchy has no levels".into()),
        }
        let mut seen = BTreeSet::new();
        for (i, level) in self.levels.iter().enumerate() {
            for c in level {
                if !seen.insert(c) {
                    return Err(format!("`{c}` placed on more than one level"));
                }
                if i > 0 && !cset.contains(c) {
                    return Err(format!("`{c}` at level {} is not an extracted concept", i + 1));
                }
                if self.level_of.get(c) != Some(&(i + 1)) {
                    return Err(format!("level index of `{c}` is inconsistent"));
                }
            }
        }
        for arc in &self.arcs {
            let (Some(lf), Some(lt)) = (self.level_of(&arc.from), self.level_of(&arc.to)) else {
                return Err(format!("arc {arc:?} references a concept outside the hierarchy"));
            };
            if arc.relation.is_associative() && lf != lt {
                return Err(format!("associative arc {arc:?} crosses levels"));
            }
            if arc.relation.is_specializing() && lf != lt + 1 {
                return Err(format!("specializing arc {arc:?} does not span exactly one level"));
            }
            if arc.level != lf {
                return Err(format!("arc {arc:?} carries the wrong level"));
            }
        }
        Ok(())
    }

    /// Indented tree: each concept under its parent (or, for expanded
    /// concepts, under the node it attached to) with the linking relation.
    pub fn render_tree(&self) -> String {
        let mut children: BTreeMap<&str, Vec<(&str, Relation)>> = BTreeMap::new();
        for arc in &self.arcs {
            let is_tree_edge = self.parent.get(&arc.from) == Some(&arc.to)
                || self.attached_to.get(&arc.from) == Some(&arc.to)
                || self.attached_to.get(&arc.to) == Some(&arc.from);
            if !is_tree_edge {
                continue;
            }
            let (child, parent) = if self.attached_to.get(&arc.to) == Some(&arc.from) {
                (arc.to.as_str(), arc.from.as_str())
            } else {
                (arc.from.as_str(), arc.to.as_str())
            };
            children.entry(parent).or_default().push((child, arc.relation));
        }
        let mut out = String::new();
        fn walk(
            node: &str,
            rel: Option<Relation>,
            depth: usize,
            children: &BTreeMap<&str, Vec<(&str, Relation)>>,
            out: &mut String,
        ) {
            let _ = match rel {
                Some(r) => writeln!(out, "{}{} [{}]", "  ".repeat(depth), node, r),
                None => writeln!(out, "{node}"),
            };
            for (child, r) in children.get(node).into_iter().flatten() {
                walk(child, Some(*r), depth + 1, children, out);
            }
        }
        if let Some(roots) = self.levels.first() {
            for root in roots {
                if self.attached_to.contains_key(root) {
                    continue;
                }
                walk(root, None, 0, &children, &mut out);
            }
        }
        out
    }

    /// `from<TAB>relation<TAB>to<TAB>level` lines.
    pub fn render_arcs(&self) -> String {
        self.arcs
            .iter()
            .map(|a| format!("{}\t{}\t{}\t{}\n", a.from, a.relation, a.to, a.level))
            .collect()
    }
}

/// Builds the hierarchy for one location.
pub fn build_cch(categories: &[String], concepts: &[ConceptEntry], snapshot: &RelationSnapshot) -> ConceptHierarchy {
    let mut cch = ConceptHierarchy::default();
    let first: BTreeSet<String> = categories.iter().map(|c| normalize_concept(c)).collect();
    for c in &first {
        cch.level_of.insert(c.clone(), 1);
    }
    cch.levels.push(first);
    let mut remaining: BTreeSet<String> = concepts
        .iter()
        .map(|e| e.concept.clone())
        .filter(|c| !cch.level_of.contains_key(c))
        .collect();

    loop {
        cch.iterations += 1;
        let deepest = cch.levels.len();
        let expanded = expand(&mut cch, deepest, &mut remaining, snapshot);
        let extended = extend(&mut cch, deepest, &mut remaining, snapshot);
        if !expanded && !extended {
            break;
        }
    }
    cch.arcs.sort();
    cch.arcs.dedup();
    cch
}

/// Level nodes grouped by their snapshot key.
fn keyed_level<'a>(level: &'a BTreeSet<String>, snapshot: &RelationSnapshot) -> BTreeMap<&'a str, Vec<&'a str>> {
    let mut keyed: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for node in level {
        keyed.entry(snapshot_key(node, snapshot)).or_default().push(node.as_str());
    }
    keyed
}

/// Associative links of `key` to level members: `(member, relation, key_is_head)`.
fn associative_links<'a>(
    key: &str,
    keyed: &BTreeMap<&str, Vec<&'a str>>,
    snapshot: &RelationSnapshot,
) -> Vec<(&'a str, Relation, bool)> {
    let mut out = Vec::new();
    for t in snapshot.with_head(key).filter(|t| t.relation.is_associative()) {
        for &m in keyed.get(t.tail.as_str()).into_iter().flatten() {
            out.push((m, t.relation, true));
        }
    }
    for t in snapshot.with_tail(key).filter(|t| t.relation.is_associative()) {
        for &m in keyed.get(t.head.as_str()).into_iter().flatten() {
            out.push((m, t.relation, false));
        }
    }
    out.sort();
    out
}

fn expand(
    cch: &mut ConceptHierarchy,
    level: usize,
    remaining: &mut BTreeSet<String>,
    snapshot: &RelationSnapshot,
) -> bool {
    let idx = level - 1;
    // Associations among nodes already present before expansion.
    let initial: Vec<String> = cch.levels[idx].iter().cloned().collect();
    {
        let keyed = keyed_level(&cch.levels[idx], snapshot);
        for node in &initial {
            for (member, relation, node_is_head) in associative_links(snapshot_key(node, snapshot), &keyed, snapshot) {
                if member == node || !node_is_head {
                    continue;
                }
                cch.arcs.push(CchArc {
                    from: node.clone(),
                    relation,
                    to: member.to_owned(),
                    level,
                });
            }
        }
    }
    let mut grew = false;
    loop {
        let keyed = keyed_level(&cch.levels[idx], snapshot);
        let mut added = Vec::new();
        for c in remaining.iter() {
            let links = associative_links(snapshot_key(c, snapshot), &keyed, snapshot);
            if let Some(&(member, relation, c_is_head)) = links.first() {
                let (from, to) = if c_is_head { (c.clone(), member.to_owned()) } else { (member.to_owned(), c.clone()) };
                added.push((c.clone(), member.to_owned(), CchArc { from, relation, to, level }));
            }
        }
        if added.is_empty() {
            break;
        }
        for (c, member, arc) in added {
            remaining.remove(&c);
            cch.level_of.insert(c.clone(), level);
            cch.levels[idx].insert(c.clone());
            cch.attached_to.insert(c, member);
            cch.arcs.push(arc);
        }
        grew = true;
    }
    grew
}

fn extend(
    cch: &mut ConceptHierarchy,
    level: usize,
    remaining: &mut BTreeSet<String>,
    snapshot: &RelationSnapshot,
) -> bool {
    let keyed = keyed_level(&cch.levels[level - 1], snapshot);
    let mut added: Vec<(String, String, Relation)> = Vec::new();
    for c in remaining.iter() {
        let key = snapshot_key(c, snapshot);
        let best = snapshot
            .with_head(key)
            .filter(|t| t.relation.is_specializing())
            .flat_map(|t| {
                keyed
                    .get(t.tail.as_str())
                    .into_iter()
                    .flatten()
                    .map(move |&m| (m, t.relation))
            })
            .min();
        if let Some((parent, relation)) = best {
            added.push((c.clone(), parent.to_owned(), relation));
        }
    }
    if added.is_empty() {
        return false;
    }
    let next = level + 1;
    let mut new_level = BTreeSet::new();
    for (c, parent, relation) in added {
        remaining.remove(&c);
        cch.level_of.insert(c.clone(), next);
        new_level.insert(c.clone());
        cch.arcs.push(CchArc {
            from: c.clone(),
            relation,
            to: parent.clone(),
            level: next,
        });
        cch.parent.insert(c, parent);
    }
    cch.levels.push(new_level);
    true
}

/// Whether the activity's concept is a hierarchy node.
pub fn is_relevant(concept: &str, cch: &ConceptHierarchy) -> bool {
    cch.contains(concept)
}

/// Keeps only activities whose concept is in the hierarchy.
pub fn filter_relevant(aset: &ActivitySet, cch: &ConceptHierarchy) -> ActivitySet {
    let mut out = ActivitySet::new(aset.location_id.clone());
    for (name, record) in &aset.activities {
        if is_relevant(&record.concept, cch) {
            out.activities.insert(name.clone(), record.clone());
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConceptScore<S> {
    pub gc_score: S,
    pub sc_score: S,
    pub cli: usize,
}

/// Generalized (`log10(cf) / cli`) and specialized (`log10(cf) * cli`)
/// concept scores.
pub fn concept_scores<S: Scalar>(concept: &str, cf: usize, cch: &ConceptHierarchy) -> Result<ConceptScore<S>> {
    let cli = cch
        .level_of(concept)
        .ok_or_else(|| Error::ConceptNotInHierarchy(concept.to_owned()))?;
    if cf == 0 {
        return Err(Error::InvalidArgument(format!("concept `{concept}` has zero frequency")));
    }
    let log_cf = S::from_count(cf).log10();
    let weight = S::from_count(cli);
    Ok(ConceptScore {
        gc_score: log_cf / weight,
        sc_score: log_cf * weight,
        cli,
    })
}
