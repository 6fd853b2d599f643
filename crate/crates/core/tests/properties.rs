use std::collections::{BTreeMap, BTreeSet, VecDeque};

use lanet_core::concepts::{build_cch, extract_concepts, ConceptEntry};
use lanet_core::corpus::{
    parse_corpus, write_corpus, AnnotatedSentence, LemmaLexicon, LocationId, LocationRecord, Relation,
    RelationSnapshot, ReviewRecord, Triple,
};
use lanet_core::extract::{build_activity_set, ActivitySet};
use lanet_core::merge::{merge_redundant, SenseIndex};
use lanet_core::network::{
    af_ilf, compute_bou, parse_records, to_records, ActivityLocationMatrix, Boundary, SimilarityMatrix, SpatialView,
};
use lanet_core::pipeline::{build_lanet, PipelineOptions};
use lanet_core::query::{argmax_location, top_k_activities, top_k_locations, ConceptFilter, RankBy};
use proptest::prelude::*;

const WORDS: [&str; 8] = ["apple", "bread", "cake", "dal", "egg", "fish", "gulab", "halwa"];

fn cch_oracle(categories: &[String], cset: &BTreeSet<String>, triples: &[Triple]) -> BTreeMap<String, usize> {
    let nodes: BTreeSet<&str> = categories.iter().map(String::as_str).chain(cset.iter().map(String::as_str)).collect();
    let mut dist: BTreeMap<&str, usize> = BTreeMap::new();
    let mut queue = VecDeque::new();
    for c in categories {
        dist.insert(c, 0);
        queue.push_back(c.as_str());
    }
    while let Some(u) = queue.pop_front() {
        let d = dist[u];
        for t in triples {
            if !nodes.contains(t.head.as_str()) || !nodes.contains(t.tail.as_str()) {
                continue;
            }
            let (v, w) = if t.relation.is_associative() && t.head == u {
                (t.tail.as_str(), 0)
            } else if t.relation.is_associative() && t.tail == u {
                (t.head.as_str(), 0)
            } else if t.relation.is_specializing() && t.tail == u {
                (t.head.as_str(), 1)
            } else {
                continue;
            };
            if dist.get(v).is_none_or(|&old| d + w < old) {
                dist.insert(v, d + w);
                if w == 0 {
                    queue.push_front(v);
                } else {
                    queue.push_back(v);
                }
            }
        }
    }
    dist.into_iter().map(|(k, d)| (k.to_owned(), d + 1)).collect()
}

fn triple_strategy() -> impl Strategy<Value = Vec<Triple>> {
    let node = prop::sample::select(vec!["root", "shop", "apple", "bread", "cake", "dal", "egg", "fish"]);
    let rel = prop::sample::select(Relation::ALL.to_vec());
    prop::collection::vec((node.clone(), rel, node), 0..24)
        .prop_map(|v| v.into_iter().filter(|(h, _, t)| h != t).map(|(h, r, t)| Triple::new(h, r, t)).collect())
}

fn sentence(verb: &str, noun: &str) -> AnnotatedSentence {
    AnnotatedSentence::parse_compact(&format!("I/PRP {verb}/VBD {noun}/NN"), "nsubj(1,0) dobj(1,2)").unwrap()
}

fn location(id: usize, reviews: &[Vec<(usize, usize)>]) -> LocationRecord {
    LocationRecord {
        location_id: LocationId::new(id.to_string()),
        name: format!("Place {id}"),
        formatted_address: format!("{id} Road"),
        latitude: 29.86 + id as f64 * 1e-3,
        longitude: 77.88 - id as f64 * 7e-4,
        categories: vec!["root".into()],
        reviews: reviews
            .iter()
            .enumerate()
            .map(|(k, sents)| ReviewRecord {
                review_id: format!("{id}-{k}"),
                sentences: sents.iter().map(|&(v, n)| sentence(&format!("v{v}"), WORDS[n])).collect(),
            })
            .collect(),
    }
}

fn reviews_strategy() -> impl Strategy<Value = Vec<Vec<(usize, usize)>>> {
    prop::collection::vec(prop::collection::vec((0..3usize, 0..8usize), 1..4), 1..6)
}

fn alm_strategy() -> impl Strategy<Value = ActivityLocationMatrix> {
    (1..6usize, 2..9usize)
        .prop_flat_map(|(n, m)| prop::collection::vec(prop::collection::vec(0..4u32, m), n))
        .prop_filter("rows need support", |rows| rows.iter().all(|r| r.iter().any(|&x| x > 0)))
        .prop_map(|rows| {
            let names = (0..rows.len()).map(|i| format!("(v, c{i})")).collect();
            let ids = (0..rows[0].len()).map(|j| LocationId::new(j.to_string())).collect();
            ActivityLocationMatrix::from_rows(names, ids, rows).unwrap()
        })
}

fn fixture_output() -> lanet_core::Build {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/roorkee_mini");
    let corpus = lanet_core::corpus::load_corpus(dir.join("corpus.jsonl")).unwrap();
    let snapshot = RelationSnapshot::load(dir.join("snapshot.tsv")).unwrap();
    let lexicon = LemmaLexicon::load(dir.join("lexicon.txt")).unwrap();
    build_lanet(&corpus, &snapshot, &lexicon, PipelineOptions::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn cch_levels_are_zero_one_distances(triples in triple_strategy(), picks in prop::collection::btree_set(0..6usize, 0..6)) {
        let pool = ["apple", "bread", "cake", "dal", "egg", "fish"];
        let cset: BTreeSet<String> = picks.iter().map(|&i| pool[i].to_string()).collect();
        let categories = vec!["root".to_string(), "shop".to_string()];
        let entries: Vec<ConceptEntry> = cset.iter().map(|c| ConceptEntry { concept: c.clone(), cf: 1 }).collect();
        let cch = build_cch(&categories, &entries, &RelationSnapshot::from_triples(triples.clone()));
        let oracle = cch_oracle(&categories, &cset, &triples);
        let got: BTreeMap<String, usize> = cch.nodes().map(|(c, l)| (c.to_owned(), l)).collect();
        prop_assert_eq!(got, oracle);
        prop_assert!(cch.validate(&categories, &cset).is_ok());
    }

    #[test]
    fn af_counts_distinct_reviews(reviews in reviews_strategy()) {
        let loc = location(1, &reviews);
        let aset = build_activity_set(&loc, &LemmaLexicon::new());
        let mut oracle: BTreeMap<(String, String), BTreeSet<usize>> = BTreeMap::new();
        for (k, sents) in reviews.iter().enumerate() {
            for &(v, n) in sents {
                oracle.entry((format!("v{v}"), WORDS[n].to_string())).or_default().insert(k);
            }
        }
        prop_assert_eq!(aset.len(), oracle.len());
        for ((v, c), revs) in oracle {
            let rec = aset.get(&format!("({v}, {c})")).expect("activity present");
            prop_assert_eq!(rec.af(), revs.len());
        }
    }

    #[test]
    fn merge_is_idempotent_and_keeps_reviews(
        occurrences in prop::collection::vec((0..4usize, 0..3usize, 0..6usize), 1..20),
        senses in prop::collection::vec((0..4usize, 0..3usize, 0..3usize), 0..10),
    ) {
        let verbs = ["eat", "have", "take", "get"];
        let concepts = ["food", "burger", "pie"];
        let mut aset = ActivitySet::new("1".into());
        for &(v, c, r) in &occurrences {
            aset.add_occurrence(verbs[v], concepts[c], &r.to_string());
        }
        let mut triples = vec![
            Triple::new("food", Relation::AtLocation, "root"),
            Triple::new("burger", Relation::IsA, "food"),
            Triple::new("pie", Relation::IsA, "food"),
        ];
        for &(v, c, s) in &senses {
            triples.push(Triple::new(&format!("{} {}", verbs[v], concepts[c]), Relation::RelatedTo, &format!("sense{s}")));
        }
        let snapshot = RelationSnapshot::from_triples(triples);
        let index = SenseIndex::from_snapshot(&snapshot);
        let cch = build_cch(&["root".into()], &extract_concepts(&aset), &snapshot);
        let once = merge_redundant(&aset, &cch, &index).activities;
        let twice = merge_redundant(&once, &cch, &index).activities;
        prop_assert_eq!(&once.activities, &twice.activities);
        let reviews = |a: &ActivitySet| -> BTreeMap<String, BTreeSet<String>> {
            let mut m: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
            for r in a.iter() {
                m.entry(r.concept.clone()).or_default().extend(r.supporting_reviews.iter().cloned());
            }
            m
        };
        prop_assert_eq!(reviews(&aset), reviews(&once));
        prop_assert!(once.len() <= aset.len());
    }

    #[test]
    fn similarity_properties(alm in alm_strategy()) {
        let w = af_ilf::<f64>(&alm);
        let si = SimilarityMatrix::compute(alm.location_ids(), &w);
        let m = alm.n_locations();
        for p in 0..m {
            for q in 0..m {
                if p == q {
                    continue;
                }
                let v = si.get(p, q);
                prop_assert_eq!(v, si.get(q, p));
                prop_assert!((0.0..=1.0).contains(&v));
                let (ap, aq) = (alm.activities_at(p), alm.activities_at(q));
                if v > 0.0 {
                    prop_assert!(!ap.is_disjoint(&aq));
                }
                let informative = ap.intersection(&aq).any(|a| alm.support(alm.activity_index(a).unwrap()) < m);
                if informative {
                    prop_assert!(v > 0.0);
                }
            }
        }
    }

    #[test]
    fn bou_sweep_matches_brute_force(
        points in prop::collection::vec((-0.01f64..0.01, -0.01f64..0.01, prop::collection::btree_set(0..5usize, 0..4)), 1..12)
    ) {
        let mut view = SpatialView::default();
        for (j, (dlat, dlon, acts)) in points.iter().enumerate() {
            view.push(LocationId::new(j.to_string()), 29.86 + dlat, 77.88 + dlon, acts.iter().map(|a| format!("a{a}")).collect());
        }
        for j in 0..view.len() {
            let bou = compute_bou::<f64>(&view, j);
            for a in &view.locations[j].activities {
                let best = (0..view.len())
                    .filter(|&k| k != j && view.locations[k].activities.contains(a))
                    .map(|k| (view.distance::<f64>(j, k), view.locations[k].id.clone()))
                    .min_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then_with(|| x.1.cmp(&y.1)));
                let got = &bou.activities[a];
                match best {
                    None => prop_assert!(got.boundary.is_unbounded() && got.nearest_alternative.is_none()),
                    Some((d, id)) => {
                        prop_assert_eq!(got.boundary, Boundary::Meters(d));
                        prop_assert_eq!(got.nearest_alternative.as_ref(), Some(&id));
                    }
                }
            }
        }
    }

    #[test]
    fn argmax_ignores_candidate_order(scores in prop::collection::vec(0..5usize, 1..10), seed in any::<u64>()) {
        let cands: Vec<(LocationId, usize)> = scores.iter().enumerate().map(|(j, &s)| (LocationId::new(j.to_string()), s)).collect();
        let mut shuffled = cands.clone();
        let len = shuffled.len();
        let mut state = seed;
        for i in (1..len).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (state >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(argmax_location(cands), argmax_location(shuffled));
    }

    #[test]
    fn corpus_round_trip(locs in prop::collection::vec(reviews_strategy(), 1..4)) {
        let corpus: Vec<LocationRecord> = locs.iter().enumerate().map(|(j, r)| location(j + 1, r)).collect();
        let text = write_corpus(&corpus);
        let back = parse_corpus(&text, "<mem>").unwrap();
        prop_assert_eq!(&back, &corpus);
        prop_assert_eq!(write_corpus(&back), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn queries_are_prefix_stable_and_read_only(k in 0..8usize, loc in 1..8usize) {
        let out = fixture_output();
        let before = to_records(&out.graph);
        let id = LocationId::new(loc.to_string());
        let short = top_k_activities(&out.graph, &id, k, ConceptFilter::None).unwrap();
        let long = top_k_activities(&out.graph, &id, k + 1, ConceptFilter::None).unwrap();
        prop_assert!(short.len() <= k);
        let a: Vec<_> = short.items().map(|h| h.activity.clone()).collect();
        let b: Vec<_> = long.items().map(|h| h.activity.clone()).take(a.len()).collect();
        prop_assert_eq!(a, b);
        for rank in [RankBy::Frequency, RankBy::Popularity] {
            let s = top_k_locations(&out.graph, "have dinner", k, rank).unwrap();
            let l = top_k_locations(&out.graph, "have dinner", k + 1, rank).unwrap();
            let a: Vec<_> = s.items().map(|h| h.location.clone()).collect();
            let b: Vec<_> = l.items().map(|h| h.location.clone()).take(a.len()).collect();
            prop_assert_eq!(a, b);
        }
        prop_assert_eq!(to_records(&out.graph), before.clone());
        let reparsed = parse_records::<f64>(&before, "<records>").unwrap();
        prop_assert_eq!(to_records(&reparsed), before);
    }
}
