use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{LocationId, LocationRecord};
use crate::error::{Error, Result};
use crate::extract::ActivitySet;
use crate::scalar::Scalar;

use super::bou::{BouAssignment, Boundary};
use super::geo::haversine;
use super::matrix::{popularity_index, ActivityLocationMatrix, SimilarityMatrix};

pub const IS_PERFORMED_AT: &str = "Is_Performed_At";
pub const IS_SIMILAR_TO: &str = "Is_Similar_To";

const API_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocationNode {
    #[serde(rename = "id")]
    pub location_id: LocationId,
    #[serde(rename = "Name_of_Location")]
    pub name: String,
    #[serde(rename = "Formatted_Address")]
    pub formatted_address: String,
    #[serde(rename = "Latitude")]
    pub latitude: f64,
    #[serde(rename = "Longitude")]
    pub longitude: f64,
    #[serde(rename = "Category")]
    pub categories: Vec<String>,
    #[serde(rename = "No_of_Reviews")]
    pub review_count: usize,
}

impl LocationNode {
    pub fn from_record(record: &LocationRecord) -> Self {
        LocationNode {
            location_id: record.location_id.clone(),
            name: record.name.clone(),
            formatted_address: record.formatted_address.clone(),
            latitude: record.latitude,
            longitude: record.longitude,
            categories: record.categories.clone(),
            review_count: record.reviews.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityNode {
    #[serde(rename = "Activity_Name")]
    pub name: String,
}

/// Activity-to-location link.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct PerformedAt<S> {
    #[serde(rename = "from")]
    pub activity: String,
    #[serde(rename = "to")]
    pub location: LocationId,
    #[serde(rename = "Activity_Frequency")]
    pub frequency: usize,
    #[serde(rename = "Activity_Popularity_Index")]
    pub popularity: S,
    #[serde(rename = "Generalized_Concept_Score")]
    pub gc_score: Option<S>,
    #[serde(rename = "Specialized_Concept_Score")]
    pub sc_score: Option<S>,
    #[serde(rename = "Boundary_of_Uniqueness")]
    pub boundary: Boundary<S>,
    #[serde(rename = "Nearest_Alternative")]
    pub nearest_alternative: Option<LocationId>,
}

/// Undirected location-to-location link, stored with `from < to`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct SimilarTo<S> {
    pub from: LocationId,
    pub to: LocationId,
    #[serde(rename = "Similarity_Index")]
    pub similarity: S,
    #[serde(rename = "Common_Activity_List")]
    pub common_activities: Vec<String>,
    #[serde(rename = "Distance")]
    pub distance: S,
}

impl<S> SimilarTo<S> {
    pub fn other(&self, id: &LocationId) -> &LocationId {
        if &self.from == id {
            &self.to
        } else {
            &self.from
        }
    }
}

/// Concept scores attached to a link; absent when the concept lies outside
/// the location's hierarchy.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ConceptScores<S> {
    pub generalized: Option<S>,
    pub specialized: Option<S>,
}

/// Per location, per concept.
pub type ScoreTable<S> = BTreeMap<LocationId, BTreeMap<String, ConceptScores<S>>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GraphStats {
    pub location_nodes: usize,
    pub activity_nodes: usize,
    pub performed_at_links: usize,
    pub similar_to_links: usize,
}

impl GraphStats {
    pub fn nodes(&self) -> usize {
        self.location_nodes + self.activity_nodes
    }

    pub fn links(&self) -> usize {
        self.performed_at_links + self.similar_to_links
    }
}

impl fmt::Display for GraphStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} location nodes, {} activity nodes, {} {IS_PERFORMED_AT} links, {} {IS_SIMILAR_TO} links, total {} nodes and {} links",
            self.location_nodes,
            self.activity_nodes,
            self.performed_at_links,
            self.similar_to_links,
            self.nodes(),
            self.links()
        )
    }
}

/// The location-activity property graph.
#[derive(Clone, Debug, PartialEq)]
pub struct LanetGraph<S> {
    locations: Vec<LocationNode>,
    activities: Vec<ActivityNode>,
    performed_at: Vec<PerformedAt<S>>,
    similar_to: Vec<SimilarTo<S>>,
    location_index: BTreeMap<LocationId, usize>,
    activity_index: BTreeMap<String, usize>,
    by_location: Vec<Vec<usize>>,
    by_activity: Vec<Vec<usize>>,
    neighbors: Vec<Vec<usize>>,
}

impl<S: Scalar> LanetGraph<S> {
    /// Sorts, indexes and validates the parts.
    pub fn from_parts(
        mut locations: Vec<LocationNode>,
        mut activities: Vec<ActivityNode>,
        mut performed_at: Vec<PerformedAt<S>>,
        mut similar_to: Vec<SimilarTo<S>>,
    ) -> Result<Self> {
        locations.sort_by(|a, b| a.location_id.cmp(&b.location_id));
        activities.sort_by(|a, b| a.name.cmp(&b.name));
        performed_at.sort_by(|a, b| a.location.cmp(&b.location).then_with(|| a.activity.cmp(&b.activity)));
        for link in &mut similar_to {
            if link.to < link.from {
                std::mem::swap(&mut link.from, &mut link.to);
            }
            link.common_activities.sort();
        }
        similar_to.sort_by(|a, b| a.from.cmp(&b.from).then_with(|| a.to.cmp(&b.to)));

        let mut location_index = BTreeMap::new();
        for (i, node) in locations.iter().enumerate() {
            if location_index.insert(node.location_id.clone(), i).is_some() {
                return Err(Error::Assembly(format!("duplicate location node `{}`", node.location_id)));
            }
        }
        let mut activity_index = BTreeMap::new();
        for (i, node) in activities.iter().enumerate() {
            if activity_index.insert(node.name.clone(), i).is_some() {
                return Err(Error::Assembly(format!("duplicate activity node `{}`", node.name)));
            }
        }
        let mut by_location = vec![Vec::new(); locations.len()];
        let mut by_activity = vec![Vec::new(); activities.len()];
        for (k, link) in performed_at.iter().enumerate() {
            let j = *location_index
                .get(&link.location)
                .ok_or_else(|| Error::Assembly(format!("link to unknown location `{}`", link.location)))?;
            let i = *activity_index
                .get(&link.activity)
                .ok_or_else(|| Error::Assembly(format!("link from unknown activity `{}`", link.activity)))?;
            by_location[j].push(k);
            by_activity[i].push(k);
        }
        let mut neighbors = vec![Vec::new(); locations.len()];
        for (k, link) in similar_to.iter().enumerate() {
            for end in [&link.from, &link.to] {
                let j = *location_index
                    .get(end)
                    .ok_or_else(|| Error::Assembly(format!("similarity link to unknown location `{end}`")))?;
                neighbors[j].push(k);
            }
        }
        let graph = LanetGraph {
            locations,
            activities,
            performed_at,
            similar_to,
            location_index,
            activity_index,
            by_location,
            by_activity,
            neighbors,
        };
        graph.validate()?;
        Ok(graph)
    }

    /// Structural invariants that hold for every graph.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Assembly(m));
        for w in self.performed_at.windows(2) {
            if w[0].location == w[1].location && w[0].activity == w[1].activity {
                return fail(format!("duplicate link `{}` -> `{}`", w[0].activity, w[0].location));
            }
        }
        for (i, links) in self.by_activity.iter().enumerate() {
            let name = &self.activities[i].name;
            if links.is_empty() {
                return fail(format!("activity `{name}` has no {IS_PERFORMED_AT} link"));
            }
            let sum: f64 = links.iter().map(|&k| self.performed_at[k].popularity.to_f64_lossy()).sum();
            let tol = if std::mem::size_of::<S>() < 8 { 1e-5 } else { API_TOLERANCE };
            if (sum - 1.0).abs() > tol {
                return fail(format!("popularity of `{name}` sums to {sum}"));
            }
            if links.iter().any(|&k| self.performed_at[k].frequency == 0) {
                return fail(format!("activity `{name}` has a zero-frequency link"));
            }
        }
        for w in self.similar_to.windows(2) {
            if w[0].from == w[1].from && w[0].to == w[1].to {
                return fail(format!("duplicate similarity link {} - {}", w[0].from, w[0].to));
            }
        }
        for link in &self.similar_to {
            if link.from == link.to {
                return fail(format!("self similarity link at `{}`", link.from));
            }
            if link.similarity <= S::zero() || link.similarity > S::one() {
                return fail(format!("similarity {} out of range on {} - {}", link.similarity, link.from, link.to));
            }
            let a = self.activity_names_at(&link.from);
            let b = self.activity_names_at(&link.to);
            let common: Vec<&str> = a.intersection(&b).copied().collect();
            if common.is_empty() || common != link.common_activities.iter().map(String::as_str).collect::<Vec<_>>() {
                return fail(format!("common activity list of {} - {} is not the intersection", link.from, link.to));
            }
        }
        Ok(())
    }

    pub fn locations(&self) -> &[LocationNode] {
        &self.locations
    }

    pub fn activities(&self) -> &[ActivityNode] {
        &self.activities
    }

    pub fn performed_at(&self) -> &[PerformedAt<S>] {
        &self.performed_at
    }

    pub fn similar_to(&self) -> &[SimilarTo<S>] {
        &self.similar_to
    }

    pub fn location(&self, id: &LocationId) -> Option<&LocationNode> {
        self.location_index.get(id).map(|&j| &self.locations[j])
    }

    pub fn has_activity(&self, name: &str) -> bool {
        self.activity_index.contains_key(name)
    }

    /// Activity-to-location links of a location.
    pub fn links_at(&self, id: &LocationId) -> impl Iterator<Item = &PerformedAt<S>> + '_ {
        let ks = self.location_index.get(id).map(|&j| self.by_location[j].as_slice()).unwrap_or(&[]);
        ks.iter().map(move |&k| &self.performed_at[k])
    }

    /// Activity-to-location links of an activity.
    pub fn links_of(&self, activity: &str) -> impl Iterator<Item = &PerformedAt<S>> + '_ {
        let ks = self.activity_index.get(activity).map(|&i| self.by_activity[i].as_slice()).unwrap_or(&[]);
        ks.iter().map(move |&k| &self.performed_at[k])
    }

    pub fn link(&self, activity: &str, location: &LocationId) -> Option<&PerformedAt<S>> {
        self.links_of(activity).find(|l| &l.location == location)
    }

    /// Similarity links touching a location.
    pub fn neighbors(&self, id: &LocationId) -> impl Iterator<Item = &SimilarTo<S>> + '_ {
        let ks = self.location_index.get(id).map(|&j| self.neighbors[j].as_slice()).unwrap_or(&[]);
        ks.iter().map(move |&k| &self.similar_to[k])
    }

    pub fn activity_names_at(&self, id: &LocationId) -> BTreeSet<&str> {
        self.links_at(id).map(|l| l.activity.as_str()).collect()
    }

    /// Great-circle distance between two location nodes.
    pub fn distance(&self, a: &LocationId, b: &LocationId) -> Option<S> {
        let (p, q) = (self.location(a)?, self.location(b)?);
        Some(haversine(p.latitude, p.longitude, q.latitude, q.longitude))
    }

    /// Activity-location matrix recovered from the link frequencies.
    pub fn alm(&self) -> Result<ActivityLocationMatrix> {
        let ids: Vec<LocationId> = self.locations.iter().map(|l| l.location_id.clone()).collect();
        let names: Vec<String> = self.activities.iter().map(|a| a.name.clone()).collect();
        let rows = self
            .by_activity
            .iter()
            .map(|links| {
                let mut row = vec![0u32; ids.len()];
                for &k in links {
                    let l = &self.performed_at[k];
                    row[self.location_index[&l.location]] = u32::try_from(l.frequency).unwrap_or(u32::MAX);
                }
                row
            })
            .collect();
        ActivityLocationMatrix::from_rows(names, ids, rows)
    }

    pub fn stats(&self) -> GraphStats {
        GraphStats {
            location_nodes: self.locations.len(),
            activity_nodes: self.activities.len(),
            performed_at_links: self.performed_at.len(),
            similar_to_links: self.similar_to.len(),
        }
    }
}

/// Builds the graph and checks it against the matrix and similarity inputs.
pub fn assemble_graph<S: Scalar>(
    corpus: &[LocationRecord],
    sets: &[ActivitySet],
    alm: &ActivityLocationMatrix,
    scores: &ScoreTable<S>,
    si: &SimilarityMatrix<S>,
    bou: &[BouAssignment<S>],
) -> Result<LanetGraph<S>> {
    let fail = |m: String| Err(Error::Assembly(m));
    let columns = alm.location_ids();
    if si.location_ids() != columns {
        return fail("similarity matrix and activity-location matrix disagree on locations".into());
    }
    let corpus_ids: BTreeSet<&LocationId> = corpus.iter().map(|l| &l.location_id).collect();
    if corpus_ids.len() != columns.len() || columns.iter().any(|c| !corpus_ids.contains(c)) {
        return fail("activity-location matrix columns do not match the corpus".into());
    }
    let set_of: BTreeMap<&LocationId, &ActivitySet> = sets.iter().map(|s| (&s.location_id, s)).collect();
    let bou_of: BTreeMap<&LocationId, &BouAssignment<S>> = bou.iter().map(|b| (&b.location_id, b)).collect();

    let locations: Vec<LocationNode> = corpus.iter().map(LocationNode::from_record).collect();
    let activities: Vec<ActivityNode> = alm.activity_names().iter().map(|n| ActivityNode { name: n.clone() }).collect();

    let mut performed_at = Vec::new();
    for (j, id) in columns.iter().enumerate() {
        let set = set_of.get(id).copied();
        let listed = set.map_or(0, |s| s.activities.len());
        let mut seen = 0;
        for (i, name) in alm.activity_names().iter().enumerate() {
            let cell = alm.get(i, j);
            if cell == 0 {
                continue;
            }
            seen += 1;
            let record = set
                .and_then(|s| s.get(name))
                .ok_or_else(|| Error::Assembly(format!("matrix cell `{name}` at `{id}` has no activity record")))?;
            if record.af() != cell as usize {
                return fail(format!("frequency of `{name}` at `{id}` disagrees: {} vs {cell}", record.af()));
            }
            let concept = scores.get(id).and_then(|m| m.get(&record.concept)).copied().unwrap_or_default();
            let uniq = bou_of
                .get(id)
                .and_then(|b| b.activities.get(name))
                .ok_or_else(|| Error::Assembly(format!("no boundary for `{name}` at `{id}`")))?;
            performed_at.push(PerformedAt {
                activity: name.clone(),
                location: id.clone(),
                frequency: cell as usize,
                popularity: popularity_index(alm, i, j),
                gc_score: concept.generalized,
                sc_score: concept.specialized,
                boundary: uniq.boundary,
                nearest_alternative: uniq.nearest_alternative.clone(),
            });
        }
        if seen != listed {
            return fail(format!("activity set of `{id}` has {listed} activities but the matrix column has {seen}"));
        }
    }

    let record_of: BTreeMap<&LocationId, &LocationRecord> = corpus.iter().map(|l| (&l.location_id, l)).collect();
    let mut similar_to = Vec::new();
    for p in 0..columns.len() {
        for q in p + 1..columns.len() {
            let s = si.get(p, q);
            if s <= S::zero() {
                continue;
            }
            let (a, b) = (alm.activities_at(p), alm.activities_at(q));
            let common: Vec<String> = a.intersection(&b).map(|s| s.to_string()).collect();
            let (la, lb) = (record_of[&columns[p]], record_of[&columns[q]]);
            similar_to.push(SimilarTo {
                from: columns[p].clone(),
                to: columns[q].clone(),
                similarity: s,
                common_activities: common,
                distance: haversine(la.latitude, la.longitude, lb.latitude, lb.longitude),
            });
        }
    }
    LanetGraph::from_parts(locations, activities, performed_at, similar_to)
}
