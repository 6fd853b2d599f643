//! End-to-end construction of the location-activity network from a corpus.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use log::{debug, info};

use crate::concepts::{build_cch, concept_scores, extract_concepts, filter_relevant, ConceptHierarchy};
use crate::corpus::{LemmaLexicon, LocationRecord, RelationSnapshot};
use crate::error::{Error, Result};
use crate::eval::baseline_extract;
use crate::extract::{build_activity_set, ActivitySet};
use crate::merge::{merge_redundant, MergeGroup, SenseIndex};
use crate::network::{
    af_ilf, assemble_graph, build_alm, compute_bou, ActivityLocationMatrix, AfIlf, ConceptScores, GraphStats,
    LanetGraph, ScoreTable, SimilarityMatrix, SpatialView,
};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Extractor {
    /// Typed-dependency patterns.
    #[default]
    Dependency,
    /// Nearest noun within a fixed window after each verb.
    Baseline,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PipelineOptions {
    pub extractor: Extractor,
    pub relevance_filter: bool,
    pub merge: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions { extractor: Extractor::Dependency, relevance_filter: true, merge: true }
    }
}

impl PipelineOptions {
    /// Extraction only.
    pub fn extraction_only() -> Self {
        PipelineOptions { relevance_filter: false, merge: false, ..Self::default() }
    }
}

/// Intermediate results for one location.
#[derive(Clone, Debug)]
pub struct LocationStages {
    pub extracted: ActivitySet,
    pub filtered: ActivitySet,
    pub merged: ActivitySet,
    pub merge_groups: Vec<MergeGroup>,
    pub hierarchy: ConceptHierarchy,
}

#[derive(Clone, Debug, Default)]
pub struct BuildReport {
    pub stats: Option<GraphStats>,
    pub timings: Vec<(&'static str, Duration)>,
    pub extracted: usize,
    pub filtered: usize,
    pub merged: usize,
}

impl BuildReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        if let Some(s) = &self.stats {
            let _ = writeln!(out, "{s}");
        }
        let _ = writeln!(
            out,
            "activities: {} extracted, {} after relevance filter, {} after merge",
            self.extracted, self.filtered, self.merged
        );
        for (stage, t) in &self.timings {
            let _ = writeln!(out, "stage {stage}: {:.3} ms", t.as_secs_f64() * 1e3);
        }
        out
    }
}

pub struct BuildOutput<S> {
    pub graph: LanetGraph<S>,
    pub alm: ActivityLocationMatrix,
    pub weights: AfIlf<S>,
    pub similarity: SimilarityMatrix<S>,
    pub stages: BTreeMap<crate::corpus::LocationId, LocationStages>,
    pub report: BuildReport,
}

impl<S> BuildOutput<S> {
    /// Merge audit log over every location: a `# location <id>` line, then
    /// `concept<TAB>sense<TAB>v1/v2/...<TAB>af_after` per group.
    pub fn merge_log(&self) -> String {
        let mut out = String::new();
        for (id, st) in &self.stages {
            if st.merge_groups.is_empty() {
                continue;
            }
            let _ = writeln!(out, "# location {id}");
            for g in &st.merge_groups {
                let _ = writeln!(out, "{}\t{}\t{}\t{}", g.concept, g.sense, g.verb_group(), g.af_after);
            }
        }
        out
    }
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage { stage: name, source: Box::new(e) })
}

struct Timer<'a> {
    report: &'a mut BuildReport,
}

impl Timer<'_> {
    fn run<T>(&mut self, name: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = stage(name, f());
        let took = start.elapsed();
        debug!("stage {name} took {took:?}");
        self.report.timings.push((name, took));
        out
    }
}

/// Runs every stage over the corpus and assembles the graph.
pub fn build_lanet<S: Scalar>(
    corpus: &[LocationRecord],
    snapshot: &RelationSnapshot,
    lexicon: &LemmaLexicon,
    options: PipelineOptions,
) -> Result<BuildOutput<S>> {
    let mut report = BuildReport::default();
    let mut timer = Timer { report: &mut report };

    let corpus: Vec<LocationRecord> = timer.run("initialize", || {
        let mut seen = BTreeSet::new();
        for l in corpus {
            if !seen.insert(&l.location_id) {
                return Err(Error::validation(format!("location {}", l.location_id), "location_id", "is duplicated"));
            }
        }
        let mut sorted = corpus.to_vec();
        sorted.sort_by(|a, b| a.location_id.cmp(&b.location_id));
        Ok(sorted)
    })?;

    let extracted: Vec<ActivitySet> = timer.run("extract", || {
        Ok(corpus
            .iter()
            .map(|l| match options.extractor {
                Extractor::Dependency => build_activity_set(l, lexicon),
                Extractor::Baseline => baseline_extract(l, lexicon),
            })
            .collect())
    })?;

    let hierarchies: Vec<ConceptHierarchy> = timer.run("filter", || {
        Ok(corpus
            .iter()
            .zip(&extracted)
            .map(|(l, a)| build_cch(&l.categories, &extract_concepts(a), snapshot))
            .collect())
    })?;
    let filtered: Vec<ActivitySet> = extracted
        .iter()
        .zip(&hierarchies)
        .map(|(a, h)| if options.relevance_filter { filter_relevant(a, h) } else { a.clone() })
        .collect();

    let senses = SenseIndex::from_snapshot(snapshot);
    let merged: Vec<(ActivitySet, Vec<MergeGroup>)> = timer.run("merge", || {
        Ok(filtered
            .iter()
            .zip(&hierarchies)
            .map(|(a, h)| {
                if options.merge {
                    let out = merge_redundant(a, h, &senses);
                    (out.activities, out.groups)
                } else {
                    (a.clone(), Vec::new())
                }
            })
            .collect())
    })?;
    let final_sets: Vec<ActivitySet> = merged.iter().map(|(a, _)| a.clone()).collect();

    let alm = timer.run("activity links", || build_alm(&final_sets))?;
    let weights: AfIlf<S> = af_ilf(&alm);
    let similarity = timer.run("similarity", || Ok(SimilarityMatrix::compute(alm.location_ids(), &weights)))?;

    let (scores, bou) = timer.run("augment", || {
        let mut scores: ScoreTable<S> = BTreeMap::new();
        for ((l, h), (pre, post)) in corpus.iter().zip(&hierarchies).zip(extracted.iter().zip(&final_sets)) {
            let cf: BTreeMap<String, usize> =
                extract_concepts(pre).into_iter().map(|e| (e.concept, e.cf)).collect();
            let post_cf: BTreeMap<String, usize> =
                extract_concepts(post).into_iter().map(|e| (e.concept, e.cf)).collect();
            let table = scores.entry(l.location_id.clone()).or_default();
            for (concept, fallback) in post_cf {
                let freq = cf.get(&concept).copied().unwrap_or(fallback);
                let s = concept_scores::<S>(&concept, freq, h).ok();
                table.insert(
                    concept,
                    ConceptScores { generalized: s.map(|s| s.gc_score), specialized: s.map(|s| s.sc_score) },
                );
            }
        }
        let mut view = SpatialView::default();
        for (l, a) in corpus.iter().zip(&final_sets) {
            view.push(l.location_id.clone(), l.latitude, l.longitude, a.activities.keys().cloned().collect());
        }
        let bou: Vec<_> = (0..view.len()).map(|j| compute_bou::<S>(&view, j)).collect();
        Ok((scores, bou))
    })?;

    let graph = timer.run("assemble", || assemble_graph(&corpus, &final_sets, &alm, &scores, &similarity, &bou))?;

    report.extracted = extracted.iter().map(ActivitySet::len).sum();
    report.filtered = filtered.iter().map(ActivitySet::len).sum();
    report.merged = final_sets.iter().map(ActivitySet::len).sum();
    report.stats = Some(graph.stats());
    info!("built graph: {}", graph.stats());

    let stages = corpus
        .iter()
        .zip(extracted)
        .zip(filtered)
        .zip(merged)
        .zip(hierarchies)
        .map(|((((l, extracted), filtered), (merged, merge_groups)), hierarchy)| {
            (l.location_id.clone(), LocationStages { extracted, filtered, merged, merge_groups, hierarchy })
        })
        .collect();

    Ok(BuildOutput { graph, alm, weights, similarity, stages, report })
}
