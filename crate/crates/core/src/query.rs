//! Read-only queries over a built graph.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::corpus::LocationId;
use crate::error::{Error, Result};
use crate::extract::ActivityName;
use crate::network::{haversine, Boundary, LanetGraph, PerformedAt};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ranked<T> {
    pub item: T,
    pub score: f64,
    /// Secondary ascending key for equal scores.
    pub tie_key: String,
}

/// Entries in non-increasing score order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankedList<T> {
    pub entries: Vec<Ranked<T>>,
}

impl<T> RankedList<T> {
    fn from_unsorted(mut entries: Vec<Ranked<T>>, k: usize, tie: impl Fn(&Ranked<T>, &Ranked<T>) -> Ordering) -> Self {
        entries.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap_or(Ordering::Equal).then_with(|| tie(a, b)));
        entries.truncate(k);
        RankedList { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn items(&self) -> impl Iterator<Item = &T> {
        self.entries.iter().map(|e| &e.item)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConceptFilter {
    None,
    /// Top-m concepts by generalized score.
    Generalized(usize),
    /// Top-m concepts by specialized score.
    Specialized(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ActivityHit {
    pub activity: String,
    pub frequency: usize,
    pub popularity: f64,
    pub gc_score: Option<f64>,
    pub sc_score: Option<f64>,
    pub boundary: Option<f64>,
}

impl ActivityHit {
    fn from_link<S: Scalar>(l: &PerformedAt<S>) -> Self {
        ActivityHit {
            activity: l.activity.clone(),
            frequency: l.frequency,
            popularity: l.popularity.to_f64_lossy(),
            gc_score: l.gc_score.map(Scalar::to_f64_lossy),
            sc_score: l.sc_score.map(Scalar::to_f64_lossy),
            boundary: l.boundary.meters().map(Scalar::to_f64_lossy),
        }
    }
}

fn concept_of(activity: &str) -> String {
    ActivityName::parse(activity).map(|n| n.concept).unwrap_or_default()
}

fn require_location<S: Scalar>(graph: &LanetGraph<S>, id: &LocationId) -> Result<()> {
    graph.location(id).map(|_| ()).ok_or_else(|| Error::not_found("location", id.as_str()))
}

/// Activities of a location by AF, optionally restricted to the top-m
/// concepts by one of the concept scores.
pub fn top_k_activities<S: Scalar>(
    graph: &LanetGraph<S>,
    location: &LocationId,
    k: usize,
    filter: ConceptFilter,
) -> Result<RankedList<ActivityHit>> {
    require_location(graph, location)?;
    let links: Vec<&PerformedAt<S>> = graph.links_at(location).collect();
    let keep: Option<BTreeSet<String>> = match filter {
        ConceptFilter::None => None,
        ConceptFilter::Generalized(m) => Some(top_concepts(&links, m, |l| l.gc_score)),
        ConceptFilter::Specialized(m) => Some(top_concepts(&links, m, |l| l.sc_score)),
    };
    let entries = links
        .into_iter()
        .filter(|l| keep.as_ref().is_none_or(|k| k.contains(&concept_of(&l.activity))))
        .map(|l| Ranked { item: ActivityHit::from_link(l), score: l.frequency as f64, tie_key: l.activity.clone() })
        .collect();
    Ok(RankedList::from_unsorted(entries, k, |a, b| a.tie_key.cmp(&b.tie_key)))
}

fn top_concepts<S: Scalar>(
    links: &[&PerformedAt<S>],
    m: usize,
    score: impl Fn(&PerformedAt<S>) -> Option<S>,
) -> BTreeSet<String> {
    let mut by_concept: BTreeMap<String, S> = BTreeMap::new();
    for l in links {
        if let Some(s) = score(l) {
            by_concept.insert(concept_of(&l.activity), s);
        }
    }
    let mut ranked: Vec<(String, S)> = by_concept.into_iter().collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then_with(|| a.0.cmp(&b.0)));
    ranked.into_iter().take(m).map(|(c, _)| c).collect()
}

/// Graph activity names matching a query name: every name with the same
/// concept and a shared verb.
pub fn resolve_activity<S: Scalar>(graph: &LanetGraph<S>, query: &str) -> Result<Vec<String>> {
    let Some(wanted) = ActivityName::parse(query) else {
        if graph.has_activity(query) {
            return Ok(vec![query.to_owned()]);
        }
        return Err(Error::InvalidArgument(format!("cannot parse activity `{query}`")));
    };
    let found: Vec<String> = graph
        .activities()
        .iter()
        .filter(|a| ActivityName::parse(&a.name).is_some_and(|n| n.matches(&wanted)))
        .map(|a| a.name.clone())
        .collect();
    if found.is_empty() {
        return Err(Error::not_found("activity", query));
    }
    Ok(found)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RankBy {
    Frequency,
    Popularity,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocationHit {
    pub location: LocationId,
    pub name: String,
    pub activity: String,
    pub frequency: usize,
    pub popularity: f64,
}

/// Best link per location among the matching activity names.
fn supporting_links<'g, S: Scalar>(graph: &'g LanetGraph<S>, names: &[String]) -> BTreeMap<LocationId, &'g PerformedAt<S>> {
    let mut best: BTreeMap<LocationId, &PerformedAt<S>> = BTreeMap::new();
    for name in names {
        for l in graph.links_of(name) {
            let slot = best.entry(l.location.clone()).or_insert(l);
            if l.frequency > slot.frequency {
                *slot = l;
            }
        }
    }
    best
}

pub fn top_k_locations<S: Scalar>(
    graph: &LanetGraph<S>,
    activity: &str,
    k: usize,
    rank_by: RankBy,
) -> Result<RankedList<LocationHit>> {
    let names = resolve_activity(graph, activity)?;
    let entries = supporting_links(graph, &names)
        .into_iter()
        .map(|(id, l)| {
            let popularity = l.popularity.to_f64_lossy();
            let score = match rank_by {
                RankBy::Frequency => l.frequency as f64,
                RankBy::Popularity => popularity,
            };
            let name = graph.location(&id).map(|n| n.name.clone()).unwrap_or_default();
            Ranked {
                tie_key: id.to_string(),
                item: LocationHit { location: id, name, activity: l.activity.clone(), frequency: l.frequency, popularity },
                score,
            }
        })
        .collect();
    Ok(RankedList::from_unsorted(entries, k, |a, b| a.item.location.cmp(&b.item.location)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Alternate {
    pub location: LocationId,
    pub name: String,
    pub similarity: f64,
    pub common_activities: Vec<String>,
    pub distance: f64,
}

/// Similar locations by SI, nearer first on equal SI.
pub fn alternate_locations<S: Scalar>(graph: &LanetGraph<S>, location: &LocationId, k: usize) -> Result<RankedList<Alternate>> {
    require_location(graph, location)?;
    let entries = graph
        .neighbors(location)
        .map(|l| {
            let other = l.other(location).clone();
            let name = graph.location(&other).map(|n| n.name.clone()).unwrap_or_default();
            Ranked {
                score: l.similarity.to_f64_lossy(),
                tie_key: other.to_string(),
                item: Alternate {
                    location: other,
                    name,
                    similarity: l.similarity.to_f64_lossy(),
                    common_activities: l.common_activities.clone(),
                    distance: l.distance.to_f64_lossy(),
                },
            }
        })
        .collect();
    Ok(RankedList::from_unsorted(entries, k, |a, b| {
        a.item
            .distance
            .partial_cmp(&b.item.distance)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.item.location.cmp(&b.item.location))
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub location: LocationId,
    pub activity: String,
    pub boundary: Boundary<f64>,
    pub nearest_alternative: Option<LocationId>,
    /// Other supporting locations, nearest first.
    pub alternatives: Vec<(LocationId, f64)>,
}

pub fn uniqueness_report<S: Scalar>(graph: &LanetGraph<S>, location: &LocationId, activity: &str) -> Result<UniquenessReport> {
    require_location(graph, location)?;
    let names = resolve_activity(graph, activity)?;
    let link = names
        .iter()
        .find_map(|n| graph.link(n, location))
        .ok_or_else(|| Error::not_found("activity at location", format!("{activity} @ {location}")))?;
    let mut alternatives: Vec<(LocationId, f64)> = graph
        .links_of(&link.activity)
        .filter(|l| &l.location != location)
        .filter_map(|l| graph.distance(location, &l.location).map(|d: S| (l.location.clone(), d.to_f64_lossy())))
        .collect();
    alternatives.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal).then_with(|| a.0.cmp(&b.0)));
    Ok(UniquenessReport {
        location: location.clone(),
        activity: link.activity.clone(),
        boundary: match link.boundary {
            Boundary::Meters(m) => Boundary::Meters(m.to_f64_lossy()),
            Boundary::Unbounded => Boundary::Unbounded,
        },
        nearest_alternative: link.nearest_alternative.clone(),
        alternatives,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DigestEntry {
    pub location: LocationId,
    pub name: String,
    pub distance: f64,
    pub activities: Vec<ActivityHit>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BroadcastDigest {
    pub center: (f64, f64),
    pub radius: f64,
    pub entries: Vec<DigestEntry>,
}

impl BroadcastDigest {
    /// One JSON object per location.
    pub fn to_records(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            center: (f64, f64),
            radius: f64,
            #[serde(flatten)]
            entry: &'a DigestEntry,
        }
        let mut out = String::new();
        for entry in &self.entries {
            let line = Line { center: self.center, radius: self.radius, entry };
            out.push_str(&serde_json::to_string(&line).expect("digest serializes"));
            out.push('\n');
        }
        out
    }
}

/// Top-k activities of every location within `radius` meters of the center,
/// nearest location first.
pub fn broadcast_digest<S: Scalar>(graph: &LanetGraph<S>, center: (f64, f64), radius: f64, k: usize) -> Result<BroadcastDigest> {
    if radius.is_nan() || radius <= 0.0 {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    let mut entries = Vec::new();
    for node in graph.locations() {
        let d: f64 = haversine(center.0, center.1, node.latitude, node.longitude);
        if d <= radius {
            let top = top_k_activities(graph, &node.location_id, k, ConceptFilter::None)?;
            entries.push(DigestEntry {
                location: node.location_id.clone(),
                name: node.name.clone(),
                distance: d,
                activities: top.entries.into_iter().map(|e| e.item).collect(),
            });
        }
    }
    entries.sort_by(|a, b| a.distance.partial_cmp(&b.distance).unwrap_or(Ordering::Equal).then_with(|| a.location.cmp(&b.location)));
    Ok(BroadcastDigest { center, radius, entries })
}

/// Argmax of frequency, smallest location id on ties; `None` when nothing
/// has positive frequency.
pub fn argmax_location<F: PartialOrd + Default + Copy>(candidates: impl IntoIterator<Item = (LocationId, F)>) -> Option<(LocationId, F)> {
    let mut best: Option<(LocationId, F)> = None;
    for (id, f) in candidates {
        if f.partial_cmp(&F::default()) != Some(Ordering::Greater) {
            continue;
        }
        best = match best {
            None => Some((id, f)),
            Some((bid, bf)) if f > bf || (f == bf && id < bid) => Some((id, f)),
            keep => keep,
        };
    }
    best
}

/// The candidate where the activity is most frequent.
pub fn recommend_location<S: Scalar>(
    graph: &LanetGraph<S>,
    activity: &str,
    candidates: &[LocationId],
) -> Option<(LocationId, usize)> {
    let names = resolve_activity(graph, activity).ok()?;
    let support = supporting_links(graph, &names);
    argmax_location(candidates.iter().filter_map(|c| support.get(c).map(|l| (c.clone(), l.frequency))))
}

/// Rows and headers for text or CSV rendering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table { headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    /// Space-aligned columns.
    pub fn to_text(&self) -> String {
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.chars().count()).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, &w)| format!("{c:<w$}")).collect();
            parts.join("  ").trim_end().to_owned()
        };
        let mut out = line(&self.headers);
        out.push('\n');
        out.push_str(&widths.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>().join("  "));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&line(row));
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers).expect("in-memory csv write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory csv write");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv output is utf-8")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.4}"))
}

fn meters(m: Option<f64>) -> String {
    m.map_or_else(|| "unbounded".to_owned(), |m| Boundary::Meters(m).to_string())
}

pub fn activities_table(list: &RankedList<ActivityHit>) -> Table {
    let mut t = Table::new(&["rank", "activity", "af", "api", "gc_score", "sc_score", "bou"]);
    for (i, e) in list.entries.iter().enumerate() {
        let h = &e.item;
        t.push(vec![
            (i + 1).to_string(),
            h.activity.clone(),
            h.frequency.to_string(),
            format!("{:.4}", h.popularity),
            opt(h.gc_score),
            opt(h.sc_score),
            meters(h.boundary),
        ]);
    }
    t
}

pub fn locations_table(list: &RankedList<LocationHit>) -> Table {
    let mut t = Table::new(&["rank", "location_id", "name", "activity", "af", "api"]);
    for (i, e) in list.entries.iter().enumerate() {
        let h = &e.item;
        t.push(vec![
            (i + 1).to_string(),
            h.location.to_string(),
            h.name.clone(),
            h.activity.clone(),
            h.frequency.to_string(),
            format!("{:.4}", h.popularity),
        ]);
    }
    t
}

pub fn alternates_table(list: &RankedList<Alternate>) -> Table {
    let mut t = Table::new(&["rank", "location_id", "name", "si", "distance", "common_activities"]);
    for (i, e) in list.entries.iter().enumerate() {
        let h = &e.item;
        t.push(vec![
            (i + 1).to_string(),
            h.location.to_string(),
            h.name.clone(),
            format!("{:.4}", h.similarity),
            meters(Some(h.distance)),
            h.common_activities.join("; "),
        ]);
    }
    t
}

/// One row: activity, alternatives by distance, BoU, nearest alternative.
pub fn uniqueness_table(reports: &[UniquenessReport]) -> Table {
    let mut t = Table::new(&["activity", "alternatives_by_distance", "bou", "nearest_alternative"]);
    for r in reports {
        let alts: Vec<String> = r.alternatives.iter().map(|(id, _)| id.to_string()).collect();
        t.push(vec![
            r.activity.clone(),
            alts.join(", "),
            r.boundary.to_string(),
            r.nearest_alternative.as_ref().map_or_else(|| "none".to_owned(), LocationId::to_string),
        ]);
    }
    t
}

pub fn digest_table(digest: &BroadcastDigest) -> Table {
    let mut t = Table::new(&["location_id", "name", "distance", "rank", "activity", "af", "bou"]);
    for e in &digest.entries {
        for (i, a) in e.activities.iter().enumerate() {
            t.push(vec![
                e.location.to_string(),
                e.name.clone(),
                meters(Some(e.distance)),
                (i + 1).to_string(),
                a.activity.clone(),
                a.frequency.to_string(),
                meters(a.boundary),
            ]);
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_ties_and_empty() {
        let c = |v: &[(&str, usize)]| v.iter().map(|(i, f)| (LocationId::from(*i), *f)).collect::<Vec<_>>();
        assert_eq!(argmax_location(c(&[("9", 7), ("2", 7)])).unwrap().0, "2".into());
        assert_eq!(argmax_location(c(&[("1", 3), ("2", 8), ("3", 5)])).unwrap().0, "2".into());
        assert_eq!(argmax_location(c(&[("1", 0)])), None);
        assert_eq!(argmax_location(c(&[])), None);
    }

    #[test]
    fn table_alignment() {
        let mut t = Table::new(&["a", "long header"]);
        t.push(vec!["value".into(), "x".into()]);
        assert_eq!(t.to_text(), "a      long header\n-----  -----------\nvalue  x\n");
        assert_eq!(t.to_csv(), "a,long header\nvalue,x\n");
    }
}
