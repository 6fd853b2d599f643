//! Dependency-aware activity extraction.
//!
//! A candidate activity is a `(verb, noun)` pair joined by one of the
//! activity-bearing dependency labels, widened to the surrounding noun phrase
//! and reduced to base forms. Nouns ending in `-ing` with a known base verb
//! act as verbs themselves and pair with the nearest noun.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::corpus::{AnnotatedSentence, LemmaLexicon, LocationId, LocationRecord};

const COPULA_FORMS: [&str; 10] = ["be", "am", "is", "are", "was", "were", "been", "being", "'s", "'re"];

const DIRECT_LABELS: [&str; 3] = ["dobj", "ccomp", "nsubjpass"];

/// Whether a dependency label can carry an activity.
pub fn is_activity_label(label: &str) -> bool {
    DIRECT_LABELS.contains(&label) || label.starts_with("prep_")
}

/// Whether a token is a form of *be*.
pub fn is_copula(surface: &str, lemma: &str) -> bool {
    lemma.eq_ignore_ascii_case("be") || COPULA_FORMS.contains(&surface.to_lowercase().as_str())
}

/// Verb-tagged tokens that are neither a form of *be* nor the dependent of
/// an `aux`/`auxpass` arc.
pub fn potential_verbs(sentence: &AnnotatedSentence) -> BTreeSet<usize> {
    let auxiliaries: BTreeSet<usize> = sentence
        .arcs
        .iter()
        .filter(|a| a.label == "aux" || a.label == "auxpass")
        .map(|a| a.dependent)
        .collect();
    sentence
        .tokens
        .iter()
        .filter(|t| t.is_verb() && !is_copula(&t.surface, &t.lemma) && !auxiliaries.contains(&t.index))
        .map(|t| t.index)
        .collect()
}

/// Maximal runs of at least two consecutive noun-tagged tokens.
pub fn noun_phrases(sentence: &AnnotatedSentence) -> Vec<Range<usize>> {
    noun_phrases_excluding(sentence, &BTreeSet::new())
}

/// Like [`noun_phrases`], treating the `excluded` tokens as non-nouns.
pub fn noun_phrases_excluding(sentence: &AnnotatedSentence, excluded: &BTreeSet<usize>) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    let is_np = |i: usize| sentence.tokens[i].is_noun() && !excluded.contains(&i);
    for i in 0..=sentence.tokens.len() {
        let inside = i < sentence.tokens.len() && is_np(i);
        match (inside, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if i - s >= 2 {
                    spans.push(s..i);
                }
                start = None;
            }
            _ => {}
        }
    }
    spans
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum PairSource {
    /// Joined by a typed dependency with this label.
    Dependency(String),
    /// An `-ing` noun promoted to the given base verb.
    IngNoun(String),
}

/// A verb (or promoted noun) token paired with a noun token.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct TokenPair {
    pub verb: usize,
    pub noun: usize,
    pub source: PairSource,
}

/// Pairs governed by a potential verb through an activity-bearing label and
/// whose dependent is a noun. At most one pair per `(verb, noun)`.
pub fn extract_pairs(sentence: &AnnotatedSentence) -> Vec<TokenPair> {
    let verbs = potential_verbs(sentence);
    let mut pairs: BTreeMap<(usize, usize), String> = BTreeMap::new();
    for arc in &sentence.arcs {
        if !is_activity_label(&arc.label) || !verbs.contains(&arc.head) {
            continue;
        }
        if !sentence.tokens[arc.dependent].is_noun() {
            continue;
        }
        pairs
            .entry((arc.head, arc.dependent))
            .or_insert_with(|| arc.label.clone());
    }
    pairs
        .into_iter()
        .map(|((verb, noun), label)| TokenPair {
            verb,
            noun,
            source: PairSource::Dependency(label),
        })
        .collect()
}

fn ing_nouns(sentence: &AnnotatedSentence, lexicon: &LemmaLexicon) -> BTreeMap<usize, String> {
    sentence
        .tokens
        .iter()
        .filter(|t| t.is_noun() && t.surface.to_lowercase().ends_with("ing"))
        .filter_map(|t| lexicon.base_verb_of_ing(&t.surface).map(|v| (t.index, v.to_owned())))
        .collect()
}

/// Promotes `-ing` nouns with a known base verb and pairs each with the
/// nearest other noun (ties go to the earlier token).
pub fn promote_ing_nouns(sentence: &AnnotatedSentence, lexicon: &LemmaLexicon) -> Vec<TokenPair> {
    let promoted = ing_nouns(sentence, lexicon);
    let candidates: Vec<usize> = sentence
        .tokens
        .iter()
        .filter(|t| t.is_noun() && !promoted.contains_key(&t.index))
        .map(|t| t.index)
        .collect();
    promoted
        .into_iter()
        .filter_map(|(idx, base)| {
            candidates
                .iter()
                .copied()
                .min_by_key(|&j| (idx.abs_diff(j), j))
                .map(|noun| TokenPair {
                    verb: idx,
                    noun,
                    source: PairSource::IngNoun(base),
                })
        })
        .collect()
}

/// Token range forming the pair's concept: the enclosing phrase span if the
/// noun lies in one, otherwise the noun alone.
pub fn substitute_phrase(pair: &TokenPair, spans: &[Range<usize>]) -> Range<usize> {
    spans
        .iter()
        .find(|s| s.contains(&pair.noun))
        .cloned()
        .unwrap_or(pair.noun..pair.noun + 1)
}

/// Activity name: a sorted verb group and a concept, rendered
/// `(v1/v2, concept)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActivityName {
    pub verbs: BTreeSet<String>,
    pub concept: String,
}

impl ActivityName {
    pub fn new(verb: &str, concept: &str) -> Self {
        ActivityName {
            verbs: BTreeSet::from([verb.to_owned()]),
            concept: concept.to_owned(),
        }
    }

    pub fn verb_group(&self) -> String {
        self.verbs.iter().cloned().collect::<Vec<_>>().join("/")
    }

    /// Same concept and at least one verb in common.
    pub fn matches(&self, other: &ActivityName) -> bool {
        self.concept == other.concept && self.verbs.iter().any(|v| other.verbs.contains(v))
    }

    /// Single-verb members of a (possibly merged) name.
    pub fn members(&self) -> impl Iterator<Item = ActivityName> + '_ {
        self.verbs.iter().map(|v| ActivityName::new(v, &self.concept))
    }

    /// Parses `(v1/v2, concept)` or the query shorthand `verb concept words`.
    pub fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        let (verbs, concept) = if let Some(inner) = text.strip_prefix('(').and_then(|t| t.strip_suffix(')')) {
            let (v, c) = inner.split_once(',')?;
            (v.trim().to_owned(), c.trim().to_owned())
        } else {
            let (v, c) = text.split_once(char::is_whitespace)?;
            (v.trim().to_owned(), c.trim().to_owned())
        };
        let verbs: BTreeSet<String> = verbs
            .split('/')
            .map(|v| v.trim().to_lowercase())
            .filter(|v| !v.is_empty())
            .collect();
        let concept = concept.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
        if verbs.is_empty() || concept.is_empty() {
            return None;
        }
        Some(ActivityName { verbs, concept })
    }
}

impl fmt::Display for ActivityName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.verb_group(), self.concept)
    }
}

impl FromStr for ActivityName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ActivityName::parse(s).ok_or_else(|| format!("cannot parse activity `{s}`"))
    }
}

/// One activity at one location and the reviews supporting it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActivityRecord {
    pub verbs: BTreeSet<String>,
    pub concept: String,
    pub supporting_reviews: BTreeSet<String>,
}

impl ActivityRecord {
    pub fn new(verb: &str, concept: &str) -> Self {
        ActivityRecord {
            verbs: BTreeSet::from([verb.to_owned()]),
            concept: concept.to_owned(),
            supporting_reviews: BTreeSet::new(),
        }
    }

    /// Activity frequency: the number of distinct supporting reviews.
    pub fn af(&self) -> usize {
        self.supporting_reviews.len()
    }

    pub fn activity_name(&self) -> ActivityName {
        ActivityName {
            verbs: self.verbs.clone(),
            concept: self.concept.clone(),
        }
    }

    pub fn name(&self) -> String {
        self.activity_name().to_string()
    }
}

/// All activities of one location keyed by rendered name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActivitySet {
    pub location_id: LocationId,
    pub activities: BTreeMap<String, ActivityRecord>,
}

impl ActivitySet {
    pub fn new(location_id: LocationId) -> Self {
        ActivitySet { location_id, activities: BTreeMap::new() }
    }

    pub fn len(&self) -> usize {
        self.activities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.activities.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&ActivityRecord> {
        self.activities.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ActivityRecord> {
        self.activities.values()
    }

    /// Records one review mentioning `(verb, concept)`.
    pub fn add_occurrence(&mut self, verb: &str, concept: &str, review_id: &str) {
        let record = ActivityRecord::new(verb, concept);
        self.activities
            .entry(record.name())
            .or_insert(record)
            .supporting_reviews
            .insert(review_id.to_owned());
    }

    pub fn insert(&mut self, record: ActivityRecord) {
        self.activities.insert(record.name(), record);
    }

    /// Activities by AF descending, then name ascending.
    pub fn ranked(&self) -> Vec<&ActivityRecord> {
        let mut out: Vec<(&String, &ActivityRecord)> = self.activities.iter().collect();
        out.sort_by(|(na, a), (nb, b)| b.af().cmp(&a.af()).then_with(|| na.cmp(nb)));
        out.into_iter().map(|(_, r)| r).collect()
    }

    /// `location_id<TAB>verb-group<TAB>concept<TAB>af<TAB>review-ids` lines.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for r in self.ranked() {
            let ids: Vec<&str> = r.supporting_reviews.iter().map(String::as_str).collect();
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                self.location_id,
                r.activity_name().verb_group(),
                r.concept,
                r.af(),
                ids.join(",")
            ));
        }
        out
    }
}

/// The concept string (lemmas joined by spaces) for a token range.
fn concept_text(sentence: &AnnotatedSentence, span: Range<usize>, lexicon: &LemmaLexicon) -> String {
    sentence.tokens[span]
        .iter()
        .map(|t| lexicon.lemmatize_token(t))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Base-form `(verb, concept)` pairs found in one sentence.
pub fn sentence_activities(sentence: &AnnotatedSentence, lexicon: &LemmaLexicon) -> BTreeSet<(String, String)> {
    let ing_pairs = promote_ing_nouns(sentence, lexicon);
    let promoted: BTreeSet<usize> = ing_nouns(sentence, lexicon).into_keys().collect();
    let spans = noun_phrases_excluding(sentence, &promoted);
    let mut seen = BTreeSet::new();
    let mut out = BTreeSet::new();
    for pair in extract_pairs(sentence).into_iter().chain(ing_pairs) {
        if !seen.insert((pair.verb, pair.noun)) {
            continue;
        }
        let verb = match &pair.source {
            PairSource::Dependency(_) => lexicon.lemmatize_token(&sentence.tokens[pair.verb]),
            PairSource::IngNoun(base) => base.clone(),
        };
        let concept = concept_text(sentence, substitute_phrase(&pair, &spans), lexicon);
        out.insert((verb, concept));
    }
    out
}

/// Runs extraction over every review of a location and aggregates by
/// activity name, counting each review at most once per activity.
pub fn build_activity_set(location: &LocationRecord, lexicon: &LemmaLexicon) -> ActivitySet {
    let mut set = ActivitySet::new(location.location_id.clone());
    for review in &location.reviews {
        for sentence in &review.sentences {
            for (verb, concept) in sentence_activities(sentence, lexicon) {
                set.add_occurrence(&verb, &concept, &review.review_id);
            }
        }
    }
    set
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sent(tokens: &str, arcs: &str) -> AnnotatedSentence {
        AnnotatedSentence::parse_compact(tokens, arcs).unwrap()
    }

    fn lexicon() -> LemmaLexicon {
        let mut lex = LemmaLexicon::new();
        lex.insert_ing_verb("driving", "drive");
        lex.insert_ing_verb("cooking", "cook");
        lex
    }

    #[test]
    fn auxiliary_excluded() {
        let s = sent(
            "He/PRP has/VBZ/have played/VBN/play the/DT game/NN",
            "nsubj(2,0) aux(2,1) dobj(2,4) det(4,3)",
        );
        assert_eq!(potential_verbs(&s), BTreeSet::from([2]));
    }

    #[test]
    fn main_verb_have_kept() {
        let s = sent(
            "Had/VBD/have dinner/NN with/IN my/PRP$ old/JJ friends/NNS/friend",
            "dobj(0,1) prep_with(0,5)",
        );
        assert_eq!(potential_verbs(&s), BTreeSet::from([0]));
    }

    #[test]
    fn copulas_excluded() {
        let s = sent("It/PRP was/VBD/be great/JJ", "nsubj(2,0) cop(2,1)");
        assert!(potential_verbs(&s).is_empty());
        let nouns = sent("Great/JJ food/NN", "amod(1,0)");
        assert!(potential_verbs(&nouns).is_empty());
    }

    #[test]
    fn phrases_need_two_nouns() {
        let s = sent("I/PRP visited/VBD/visit the/DT food/NN court/NN", "dobj(1,4)");
        assert_eq!(noun_phrases(&s), vec![3..5]);
        let single = sent("I/PRP ate/VBD/eat food/NN", "dobj(1,2)");
        assert!(noun_phrases(&single).is_empty());
    }

    #[test]
    fn phrase_at_sentence_end() {
        let s = sent("enjoyed/VBD/enjoy chicken/NN tikka/NN masala/NN", "dobj(0,3)");
        assert_eq!(noun_phrases(&s), vec![1..4]);
    }

    #[test]
    fn pair_labels() {
        let s = sent(
            "I/PRP watched/VBD/watch the/DT movie/NN yesterday/NN with/IN my/PRP$ friends/NNS/friend",
            "nsubj(1,0) dobj(1,3) det(3,2) tmod(1,4) prep_with(1,7)",
        );
        let pairs = extract_pairs(&s);
        assert_eq!(
            pairs,
            vec![
                TokenPair { verb: 1, noun: 3, source: PairSource::Dependency("dobj".into()) },
                TokenPair { verb: 1, noun: 7, source: PairSource::Dependency("prep_with".into()) },
            ]
        );
    }

    #[test]
    fn ccomp_requires_noun_dependent() {
        let s = sent("I/PRP said/VBD/say he/PRP left/VBD/leave", "nsubj(1,0) ccomp(1,3) nsubj(3,2)");
        assert!(extract_pairs(&s).is_empty());
    }

    #[test]
    fn one_pair_per_token_pair() {
        let s = sent("ate/VBD/eat food/NN", "dobj(0,1) prep_of(0,1)");
        assert_eq!(extract_pairs(&s).len(), 1);
    }

    #[test]
    fn ing_promotion_missing_entry() {
        let s = sent("Swimming/NN pool/NN", "nn(1,0)");
        assert!(promote_ing_nouns(&s, &lexicon()).is_empty());
    }

    #[test]
    fn ing_promotion_tie_goes_earlier() {
        // coffee(0) and tea(4) are both two tokens away from cooking(2).
        let s = sent("coffee/NN and/CC cooking/NN and/CC tea/NN", "");
        let pairs = promote_ing_nouns(&s, &lexicon());
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].noun, 0);
    }

    #[test]
    fn substitution() {
        let spans = [1..4, 7..9];
        let inside = TokenPair { verb: 0, noun: 3, source: PairSource::Dependency("dobj".into()) };
        assert_eq!(substitute_phrase(&inside, &spans), 1..4);
        let outside = TokenPair { verb: 0, noun: 5, ..inside };
        assert_eq!(substitute_phrase(&outside, &spans), 5..6);
    }

    #[test]
    fn distinct_review_counting() {
        let mut loc = LocationRecord {
            location_id: "1".into(),
            name: "x".into(),
            formatted_address: String::new(),
            latitude: 0.0,
            longitude: 0.0,
            categories: vec!["restaurant".into()],
            reviews: Vec::new(),
        };
        let ate = sent("I/PRP ate/VBD/eat food/NN", "nsubj(1,0) dobj(1,2)");
        for r in 0..5 {
            loc.reviews.push(crate::corpus::ReviewRecord {
                review_id: format!("r{r}"),
                sentences: vec![ate.clone(), ate.clone()],
            });
        }
        let set = build_activity_set(&loc, &LemmaLexicon::new());
        assert_eq!(set.len(), 1);
        assert_eq!(set.get("(eat, food)").unwrap().af(), 5);
        assert_eq!(set.to_tsv(), "1\teat\tfood\t5\tr0,r1,r2,r3,r4\n");
    }

    #[test]
    fn activity_name_parsing() {
        let n = ActivityName::parse("(get/have/take, food)").unwrap();
        assert_eq!(n.verb_group(), "get/have/take");
        assert_eq!(n.to_string(), "(get/have/take, food)");
        let q = ActivityName::parse("have chicken tikka").unwrap();
        assert_eq!(q.to_string(), "(have, chicken tikka)");
        assert!(q.matches(&ActivityName::parse("(eat/have, chicken tikka)").unwrap()));
        assert!(!q.matches(&ActivityName::parse("(have, chicken)").unwrap()));
        assert!(ActivityName::parse("have").is_none());
    }
}
