//! Review corpus, concept-relation snapshot, lemma lexicon and ground truth.
//!
//! All inputs are consumed pre-annotated: every review sentence carries its
//! tokens (surface, lemma, Penn-Treebank tag) and typed dependency arcs. The
//! loaders validate the structural invariants once so that downstream stages
//! can index tokens without bounds checks failing.

use std::borrow::Cow;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowercase, replace every non-alphanumeric character by a space and
/// collapse runs of whitespace.
pub fn normalize_concept(raw: &str) -> String {
    let mapped: String = raw
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .flat_map(char::to_lowercase)
        .collect();
    mapped.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Location identifier.
///
/// Ordering is natural: two purely numeric ids compare by value, so `"2"`
/// sorts before `"10"`; numeric ids sort before non-numeric ones.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LocationId(String);

impl LocationId {
    pub fn new(id: impl Into<String>) -> Self {
        LocationId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn numeric(&self) -> Option<u64> {
        if self.0.is_empty() || !self.0.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        self.0.parse().ok()
    }
}

impl Ord for LocationId {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.numeric(), other.numeric()) {
            (Some(a), Some(b)) => a.cmp(&b).then_with(|| self.0.cmp(&other.0)),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => self.0.cmp(&other.0),
        }
    }
}

impl PartialOrd for LocationId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for LocationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for LocationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<&str> for LocationId {
    fn from(s: &str) -> Self {
        LocationId(s.to_owned())
    }
}

impl From<String> for LocationId {
    fn from(s: String) -> Self {
        LocationId(s)
    }
}

/// Coarse word class used by the lexicon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PosClass {
    Verb,
    Noun,
    Adjective,
    Adverb,
    Other,
}

impl PosClass {
    pub fn from_tag(tag: &str) -> Self {
        if tag.starts_with("VB") {
            PosClass::Verb
        } else if tag.starts_with("NN") {
            PosClass::Noun
        } else if tag.starts_with("JJ") {
            PosClass::Adjective
        } else if tag.starts_with("RB") {
            PosClass::Adverb
        } else {
            PosClass::Other
        }
    }
}

impl FromStr for PosClass {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "verb" | "v" => Ok(PosClass::Verb),
            "noun" | "n" => Ok(PosClass::Noun),
            "adj" | "a" => Ok(PosClass::Adjective),
            "adv" | "r" => Ok(PosClass::Adverb),
            "other" => Ok(PosClass::Other),
            _ => Err(format!("unknown pos-class `{s}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Token {
    #[serde(rename = "i")]
    pub index: usize,
    pub surface: String,
    pub lemma: String,
    pub pos: String,
}

impl Token {
    pub fn is_noun(&self) -> bool {
        self.pos.starts_with("NN")
    }

    pub fn is_verb(&self) -> bool {
        self.pos.starts_with("VB")
    }

    pub fn class(&self) -> PosClass {
        PosClass::from_tag(&self.pos)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DependencyArc {
    pub head: usize,
    #[serde(rename = "dep")]
    pub dependent: usize,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotatedSentence {
    pub tokens: Vec<Token>,
    #[serde(default)]
    pub arcs: Vec<DependencyArc>,
}

impl AnnotatedSentence {
    /// Builds a sentence from a compact annotation.
    ///
    /// `tokens` is whitespace separated `surface/TAG` or `surface/TAG/lemma`
    /// (lemma defaults to the lowercased surface); `arcs` is whitespace
    /// separated `label(head,dep)` with 0-based token indices.
    ///
    /// ```
    /// use lanet_core::corpus::AnnotatedSentence;
    /// let s = AnnotatedSentence::parse_compact(
    ///     "I/PRP watched/VBD/watch the/DT movie/NN",
    ///     "nsubj(1,0) dobj(1,3) det(3,2)",
    /// ).unwrap();
    /// assert_eq!(s.tokens[1].lemma, "watch");
    /// assert_eq!(s.arcs.len(), 3);
    /// ```
    pub fn parse_compact(tokens: &str, arcs: &str) -> Result<Self> {
        let bad = |msg: String| Error::Parse {
            file: "<compact>".into(),
            line: 1,
            record: "sentence".into(),
            message: msg,
        };
        let mut out = Vec::new();
        for (index, tok) in tokens.split_whitespace().enumerate() {
            let mut parts = tok.splitn(3, '/');
            let surface = parts.next().unwrap_or_default();
            let pos = parts
                .next()
                .ok_or_else(|| bad(format!("token `{tok}` lacks a tag")))?;
            let lemma = parts
                .next()
                .map(str::to_owned)
                .unwrap_or_else(|| surface.to_lowercase());
            out.push(Token {
                index,
                surface: surface.to_owned(),
                lemma,
                pos: pos.to_owned(),
            });
        }
        let mut parsed_arcs = Vec::new();
        for arc in arcs.split_whitespace() {
            let (label, rest) = arc
                .split_once('(')
                .ok_or_else(|| bad(format!("arc `{arc}` is not label(head,dep)")))?;
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| bad(format!("arc `{arc}` is not closed")))?;
            let (h, d) = inner
                .split_once(',')
                .ok_or_else(|| bad(format!("arc `{arc}` needs two indices")))?;
            let head = h.trim().parse().map_err(|_| bad(format!("bad head in `{arc}`")))?;
            let dependent = d.trim().parse().map_err(|_| bad(format!("bad dep in `{arc}`")))?;
            parsed_arcs.push(DependencyArc {
                head,
                dependent,
                label: label.to_owned(),
            });
        }
        let sentence = AnnotatedSentence { tokens: out, arcs: parsed_arcs };
        sentence.validate("compact sentence")?;
        Ok(sentence)
    }

    pub fn validate(&self, record: &str) -> Result<()> {
        for (k, tok) in self.tokens.iter().enumerate() {
            if tok.index != k {
                return Err(Error::validation(
                    record,
                    "tokens.i",
                    format!("expected consecutive index {k}, found {}", tok.index),
                ));
            }
            if tok.lemma.trim().is_empty() {
                return Err(Error::validation(record, "tokens.lemma", format!("empty at token {k}")));
            }
        }
        let n = self.tokens.len();
        let mut seen = BTreeSet::new();
        for arc in &self.arcs {
            if arc.head >= n || arc.dependent >= n {
                return Err(Error::validation(
                    record,
                    "arcs",
                    format!(
                        "{}({},{}) references a token outside 0..{n}",
                        arc.label, arc.head, arc.dependent
                    ),
                ));
            }
            if arc.head == arc.dependent {
                return Err(Error::validation(
                    record,
                    "arcs",
                    format!("{}({},{}) is a self-loop", arc.label, arc.head, arc.dependent),
                ));
            }
            if !seen.insert((arc.head, arc.dependent, arc.label.as_str())) {
                return Err(Error::validation(
                    record,
                    "arcs",
                    format!("duplicate arc {}({},{})", arc.label, arc.head, arc.dependent),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReviewRecord {
    pub review_id: String,
    pub sentences: Vec<AnnotatedSentence>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocationRecord {
    pub location_id: LocationId,
    pub name: String,
    pub formatted_address: String,
    pub latitude: f64,
    pub longitude: f64,
    pub categories: Vec<String>,
    pub reviews: Vec<ReviewRecord>,
}

impl LocationRecord {
    fn validate(&self) -> Result<()> {
        let record = format!("location {}", self.location_id);
        if self.location_id.as_str().is_empty() {
            return Err(Error::validation(record, "location_id", "must not be empty"));
        }
        if !self.latitude.is_finite() || !(-90.0..=90.0).contains(&self.latitude) {
            return Err(Error::validation(
                record,
                "latitude",
                format!("{} outside [-90, 90]", self.latitude),
            ));
        }
        if !self.longitude.is_finite() || !(-180.0..=180.0).contains(&self.longitude) {
            return Err(Error::validation(
                record,
                "longitude",
                format!("{} outside [-180, 180]", self.longitude),
            ));
        }
        if self.categories.is_empty() || self.categories.iter().any(String::is_empty) {
            return Err(Error::validation(record, "categories", "must be a non-empty list of concepts"));
        }
        let mut ids = BTreeSet::new();
        for review in &self.reviews {
            let rrec = format!("review {}/{}", self.location_id, review.review_id);
            if !ids.insert(review.review_id.as_str()) {
                return Err(Error::validation(rrec, "review_id", "duplicated within location"));
            }
            if review.sentences.is_empty() {
                return Err(Error::validation(rrec, "sentences", "must not be empty"));
            }
            for sentence in &review.sentences {
                sentence.validate(&rrec)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LocationHeader {
    location_id: LocationId,
    name: String,
    #[serde(default)]
    formatted_address: String,
    latitude: f64,
    longitude: f64,
    categories: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReviewLine {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    location_id: Option<LocationId>,
    review_id: String,
    sentences: Vec<AnnotatedSentence>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum CorpusLine {
    Location(LocationHeader),
    Review(ReviewLine),
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn is_skippable(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

/// Loads a line-delimited JSON corpus file.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<LocationRecord>> {
    let path = path.as_ref();
    parse_corpus(&read_text(path)?, &path.display().to_string())
}

/// Parses corpus text. `file` only labels error messages.
pub fn parse_corpus(text: &str, file: &str) -> Result<Vec<LocationRecord>> {
    let mut locations: Vec<LocationRecord> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if is_skippable(line) {
            continue;
        }
        let parse_err = |record: String, message: String| Error::Parse {
            file: file.to_owned(),
            line: lineno,
            record,
            message,
        };
        let value: serde_json::Value =
            serde_json::from_str(line).map_err(|e| parse_err("json".into(), e.to_string()))?;
        let kind = value.get("type").and_then(|t| t.as_str()).unwrap_or("<untyped>").to_owned();
        let label = match value.get("location_id").and_then(|v| v.as_str()) {
            Some(id) => format!("{kind} {id}"),
            None => kind.clone(),
        };
        let label = match value.get("review_id").and_then(|v| v.as_str()) {
            Some(r) => format!("{label}/{r}"),
            None => label,
        };
        let parsed: CorpusLine =
            serde_json::from_value(value).map_err(|e| parse_err(label.clone(), e.to_string()))?;
        match parsed {
            CorpusLine::Location(h) => {
                let categories = h.categories.iter().map(|c| normalize_concept(c)).collect();
                locations.push(LocationRecord {
                    location_id: h.location_id,
                    name: h.name,
                    formatted_address: h.formatted_address,
                    latitude: h.latitude,
                    longitude: h.longitude,
                    categories,
                    reviews: Vec::new(),
                });
            }
            CorpusLine::Review(r) => {
                let current = locations.last_mut().ok_or_else(|| {
                    parse_err(label.clone(), "review precedes any location header".into())
                })?;
                if let Some(id) = &r.location_id {
                    if *id != current.location_id {
                        return Err(parse_err(
                            label,
                            format!(
                                "field `location_id` is {id} but the enclosing location is {}",
                                current.location_id
                            ),
                        ));
                    }
                }
                current.reviews.push(ReviewRecord {
                    review_id: r.review_id,
                    sentences: r.sentences,
                });
            }
        }
    }
    let mut seen = BTreeSet::new();
    for loc in &locations {
        if !seen.insert(loc.location_id.clone()) {
            return Err(Error::validation(
                format!("location {}", loc.location_id),
                "location_id",
                "duplicated in corpus",
            ));
        }
        loc.validate()?;
    }
    locations.sort_by(|a, b| a.location_id.cmp(&b.location_id));
    Ok(locations)
}

/// Serializes a corpus back into the line-delimited format accepted by
/// [`parse_corpus`].
pub fn write_corpus(locations: &[LocationRecord]) -> String {
    let mut out = String::new();
    for loc in locations {
        let header = CorpusLine::Location(LocationHeader {
            location_id: loc.location_id.clone(),
            name: loc.name.clone(),
            formatted_address: loc.formatted_address.clone(),
            latitude: loc.latitude,
            longitude: loc.longitude,
            categories: loc.categories.clone(),
        });
        out.push_str(&serde_json::to_string(&header).expect("header serializes"));
        out.push('\n');
        for review in &loc.reviews {
            let line = CorpusLine::Review(ReviewLine {
                location_id: Some(loc.location_id.clone()),
                review_id: review.review_id.clone(),
                sentences: review.sentences.clone(),
            });
            out.push_str(&serde_json::to_string(&line).expect("review serializes"));
            out.push('\n');
        }
    }
    out
}

/// Relations retained from the concept knowledgebase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Relation {
    IsA,
    AtLocation,
    DerivedFrom,
    UsedFor,
    RelatedTo,
}

impl Relation {
    pub const ALL: [Relation; 5] = [
        Relation::IsA,
        Relation::AtLocation,
        Relation::DerivedFrom,
        Relation::UsedFor,
        Relation::RelatedTo,
    ];

    /// Relations that link concepts within one hierarchy level.
    pub fn is_associative(self) -> bool {
        matches!(self, Relation::RelatedTo | Relation::UsedFor)
    }

    /// Relations that link a concept to a more general one.
    pub fn is_specializing(self) -> bool {
        matches!(self, Relation::IsA | Relation::AtLocation | Relation::DerivedFrom)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::IsA => "IsA",
            Relation::AtLocation => "AtLocation",
            Relation::DerivedFrom => "DerivedFrom",
            Relation::UsedFor => "UsedFor",
            Relation::RelatedTo => "RelatedTo",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Relation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Relation::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown relation `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub head: String,
    pub relation: Relation,
    pub tail: String,
}

impl Triple {
    pub fn new(head: &str, relation: Relation, tail: &str) -> Self {
        Triple {
            head: normalize_concept(head),
            relation,
            tail: normalize_concept(tail),
        }
    }
}

/// Deduplicated triple set with head and tail indexes.
#[derive(Clone, Debug, Default)]
pub struct RelationSnapshot {
    triples: Vec<Triple>,
    by_head: HashMap<String, Vec<usize>>,
    by_tail: HashMap<String, Vec<usize>>,
}

impl RelationSnapshot {
    pub fn from_triples(triples: impl IntoIterator<Item = Triple>) -> Self {
        let set: BTreeSet<Triple> = triples.into_iter().collect();
        let triples: Vec<Triple> = set.into_iter().collect();
        let mut by_head: HashMap<String, Vec<usize>> = HashMap::new();
        let mut by_tail: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, t) in triples.iter().enumerate() {
            by_head.entry(t.head.clone()).or_default().push(i);
            by_tail.entry(t.tail.clone()).or_default().push(i);
        }
        RelationSnapshot { triples, by_head, by_tail }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&read_text(path)?, &path.display().to_string())
    }

    pub fn parse(text: &str, file: &str) -> Result<Self> {
        let mut triples = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if is_skippable(line) {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    file: file.to_owned(),
                    line: lineno + 1,
                    record: "triple".into(),
                    message: format!("expected head<TAB>relation<TAB>tail, got `{line}`"),
                });
            }
            let relation: Relation = fields[1].trim().parse().map_err(|_| Error::UnknownRelation {
                file: file.to_owned(),
                line: lineno + 1,
                tag: fields[1].trim().to_owned(),
                text: line.to_owned(),
            })?;
            triples.push(Triple::new(fields[0], relation, fields[2]));
        }
        Ok(Self::from_triples(triples))
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn with_head<'a>(&'a self, concept: &str) -> impl Iterator<Item = &'a Triple> + 'a {
        self.by_head
            .get(concept)
            .into_iter()
            .flatten()
            .map(move |&i| &self.triples[i])
    }

    pub fn with_tail<'a>(&'a self, concept: &str) -> impl Iterator<Item = &'a Triple> + 'a {
        self.by_tail
            .get(concept)
            .into_iter()
            .flatten()
            .map(move |&i| &self.triples[i])
    }

    /// Whether the concept occurs as head or tail of any triple.
    pub fn mentions(&self, concept: &str) -> bool {
        self.by_head.contains_key(concept) || self.by_tail.contains_key(concept)
    }
}

/// Surface-to-lemma lookups plus the noun-to-verb map for `-ing` nouns.
#[derive(Clone, Debug, Default)]
pub struct LemmaLexicon {
    entries: HashMap<(String, PosClass), String>,
    ing_verbs: HashMap<String, String>,
}

impl LemmaLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, surface: &str, class: PosClass, lemma: &str) {
        self.entries
            .insert((surface.to_lowercase(), class), lemma.to_lowercase());
    }

    pub fn insert_ing_verb(&mut self, noun: &str, verb: &str) {
        self.ing_verbs.insert(noun.to_lowercase(), verb.to_lowercase());
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&read_text(path)?, &path.display().to_string())
    }

    /// Parses the tab-separated lexicon. Lines before any section marker, or
    /// under `[lemmas]`, are `surface<TAB>pos-class<TAB>lemma`; lines under
    /// `[ing-verbs]` are `noun<TAB>base-verb`.
    pub fn parse(text: &str, file: &str) -> Result<Self> {
        #[derive(PartialEq)]
        enum Section {
            Lemmas,
            IngVerbs,
        }
        let mut lexicon = LemmaLexicon::new();
        let mut section = Section::Lemmas;
        for (lineno, line) in text.lines().enumerate() {
            if is_skippable(line) {
                continue;
            }
            let err = |message: String| Error::Parse {
                file: file.to_owned(),
                line: lineno + 1,
                record: "lexicon".into(),
                message,
            };
            match line.trim() {
                "[lemmas]" => {
                    section = Section::Lemmas;
                    continue;
                }
                "[ing-verbs]" => {
                    section = Section::IngVerbs;
                    continue;
                }
                _ => {}
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            match section {
                Section::Lemmas => {
                    if fields.len() != 3 {
                        return Err(err(format!("expected surface<TAB>pos-class<TAB>lemma, got `{line}`")));
                    }
                    let class: PosClass = fields[1].parse().map_err(err)?;
                    lexicon.insert(fields[0], class, fields[2]);
                }
                Section::IngVerbs => {
                    if fields.len() != 2 {
                        return Err(err(format!("expected noun<TAB>base-verb, got `{line}`")));
                    }
                    lexicon.insert_ing_verb(fields[0], fields[1]);
                }
            }
        }
        Ok(lexicon)
    }

    /// Lemma for a surface form; unknown surfaces map to their lowercase self.
    pub fn lemma<'a>(&'a self, surface: &'a str, class: PosClass) -> Cow<'a, str> {
        let key = (surface.to_lowercase(), class);
        match self.entries.get(&key) {
            Some(l) => Cow::Borrowed(l.as_str()),
            None => Cow::Owned(key.0),
        }
    }

    /// Base form of an annotated token: a lexicon entry wins over the
    /// annotation's own lemma.
    pub fn lemmatize_token(&self, token: &Token) -> String {
        let key = (token.surface.to_lowercase(), token.class());
        match self.entries.get(&key) {
            Some(l) => l.clone(),
            None => token.lemma.to_lowercase(),
        }
    }

    pub fn base_verb_of_ing(&self, noun: &str) -> Option<&str> {
        self.ing_verbs.get(&noun.to_lowercase()).map(String::as_str)
    }

    /// Lemmatizes a space-separated noun phrase word by word.
    pub fn lemmatize_phrase(&self, phrase: &str) -> String {
        normalize_concept(phrase)
            .split(' ')
            .filter(|w| !w.is_empty())
            .map(|w| self.lemma(w, PosClass::Noun).into_owned())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Human-annotated `(verb, concept)` lists per location.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroundTruth {
    pub per_location: BTreeMap<LocationId, BTreeSet<(String, String)>>,
}

impl GroundTruth {
    pub fn get(&self, id: &LocationId) -> Option<&BTreeSet<(String, String)>> {
        self.per_location.get(id)
    }

    pub fn is_empty(&self) -> bool {
        self.per_location.is_empty()
    }

    /// Rendered activity names for one location, `"(verb, concept)"`.
    pub fn names(&self, id: &LocationId) -> BTreeSet<String> {
        self.get(id)
            .map(|set| set.iter().map(|(v, c)| format!("({v}, {c})")).collect())
            .unwrap_or_default()
    }
}

pub fn load_ground_truth<'a>(
    path: impl AsRef<Path>,
    lexicon: &LemmaLexicon,
    known: impl IntoIterator<Item = &'a LocationId>,
) -> Result<GroundTruth> {
    let path = path.as_ref();
    parse_ground_truth(&read_text(path)?, &path.display().to_string(), lexicon, known)
}

pub fn parse_ground_truth<'a>(
    text: &str,
    file: &str,
    lexicon: &LemmaLexicon,
    known: impl IntoIterator<Item = &'a LocationId>,
) -> Result<GroundTruth> {
    let known: BTreeSet<&LocationId> = known.into_iter().collect();
    let mut gt = GroundTruth::default();
    for (lineno, line) in text.lines().enumerate() {
        if is_skippable(line) {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != 3 || fields.iter().any(|f| f.is_empty()) {
            return Err(Error::Parse {
                file: file.to_owned(),
                line: lineno + 1,
                record: "ground truth".into(),
                message: format!("expected location_id<TAB>verb<TAB>concept, got `{line}`"),
            });
        }
        let id = LocationId::new(fields[0]);
        if !known.contains(&id) {
            return Err(Error::validation(
                format!("ground truth line {}", lineno + 1),
                "location_id",
                format!("`{id}` is not a corpus location"),
            ));
        }
        let verb = lexicon.lemma(&normalize_concept(fields[1]), PosClass::Verb).into_owned();
        let concept = lexicon.lemmatize_phrase(fields[2]);
        gt.per_location.entry(id).or_default().insert((verb, concept));
    }
    Ok(gt)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(id: &str, lat: f64) -> String {
        format!(
            r#"{{"type":"location","location_id":"{id}","name":"Place {id}","formatted_address":"1 Road, Roorkee, Uttarakhand, 247667, India","latitude":{lat},"longitude":77.89,"categories":["Hotel","Restaurant"]}}"#
        )
    }

    fn review(rid: &str) -> String {
        format!(
            r#"{{"type":"review","review_id":"{rid}","sentences":[{{"tokens":[{{"i":0,"surface":"I","lemma":"i","pos":"PRP"}},{{"i":1,"surface":"ate","lemma":"eat","pos":"VBD"}},{{"i":2,"surface":"food","lemma":"food","pos":"NN"}}],"arcs":[{{"head":1,"dep":0,"label":"nsubj"}},{{"head":1,"dep":2,"label":"dobj"}}]}}]}}"#
        )
    }

    #[test]
    fn natural_location_order() {
        let mut ids: Vec<LocationId> = ["10", "2", "b", "1", "a"].into_iter().map(LocationId::from).collect();
        ids.sort();
        let got: Vec<&str> = ids.iter().map(|i| i.as_str()).collect();
        assert_eq!(got, ["1", "2", "10", "a", "b"]);
    }

    #[test]
    fn normalizes_categories() {
        assert_eq!(normalize_concept("Stadiums & Arenas"), "stadiums arenas");
        assert_eq!(normalize_concept("  Dessert   Shop "), "dessert shop");
    }

    #[test]
    fn empty_corpus() {
        assert!(parse_corpus("", "empty").unwrap().is_empty());
    }

    #[test]
    fn sorts_and_normalizes() {
        let text = [header("2", 29.0), review("a"), header("1", 29.1), review("x"), review("y")].join("\n");
        let corpus = parse_corpus(&text, "t").unwrap();
        assert_eq!(corpus[0].location_id.as_str(), "1");
        assert_eq!(corpus[0].reviews.len(), 2);
        assert_eq!(corpus[1].categories, ["hotel", "restaurant"]);
    }

    #[test]
    fn latitude_out_of_range() {
        let err = parse_corpus(&header("1", 95.0), "t").unwrap_err();
        assert!(err.to_string().contains("latitude"), "{err}");
    }

    #[test]
    fn duplicate_location() {
        let text = [header("1", 1.0), header("1", 2.0)].join("\n");
        let err = parse_corpus(&text, "t").unwrap_err();
        assert!(matches!(err, Error::Validation { ref field, .. } if field == "location_id"));
    }

    #[test]
    fn missing_field_names_record_and_field() {
        let text = r#"{"type":"location","location_id":"7","name":"x","longitude":1.0,"categories":["bar"]}"#;
        let err = parse_corpus(text, "c.jsonl").unwrap_err().to_string();
        assert!(err.contains("location 7") && err.contains("latitude"), "{err}");
    }

    #[test]
    fn arc_out_of_range() {
        let bad = review("r").replace(r#""dep":2"#, r#""dep":9"#);
        let text = [header("1", 1.0), bad].join("\n");
        assert!(parse_corpus(&text, "t").is_err());
    }

    #[test]
    fn duplicate_review_id() {
        let text = [header("1", 1.0), review("r"), review("r")].join("\n");
        assert!(parse_corpus(&text, "t").is_err());
    }

    #[test]
    fn round_trip() {
        let text = [header("3", 29.0), review("a"), review("b"), header("1", 29.1), review("x")].join("\n");
        let corpus = parse_corpus(&text, "t").unwrap();
        let again = parse_corpus(&write_corpus(&corpus), "t2").unwrap();
        assert_eq!(corpus, again);
    }

    #[test]
    fn snapshot_indexes_and_dedup() {
        let text = "food\tAtLocation\trestaurant\nfood\tAtLocation\trestaurant\n# c\nbeer\tIsA\tdrink\n";
        let snap = RelationSnapshot::parse(text, "s").unwrap();
        assert_eq!(snap.len(), 2);
        let hits: Vec<_> = snap.with_tail("restaurant").collect();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].head, "food");
        assert_eq!(hits[0].relation, Relation::AtLocation);
    }

    #[test]
    fn snapshot_unknown_relation() {
        let err = RelationSnapshot::parse("car\tHasA\twheel\n", "s").unwrap_err();
        match err {
            Error::UnknownRelation { tag, text, .. } => {
                assert_eq!(tag, "HasA");
                assert_eq!(text, "car\tHasA\twheel");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn lexicon_sections_and_fallback() {
        let text = "ate\tverb\teat\nfoods\tnoun\tfood\n[ing-verbs]\ndriving\tdrive\n";
        let lex = LemmaLexicon::parse(text, "l").unwrap();
        assert_eq!(lex.lemma("ate", PosClass::Verb), "eat");
        assert_eq!(lex.lemma("Unknown", PosClass::Verb), "unknown");
        assert_eq!(lex.base_verb_of_ing("Driving"), Some("drive"));
        assert_eq!(lex.base_verb_of_ing("ceiling"), None);
        assert_eq!(lex.lemmatize_phrase("Foods"), "food");
    }

    #[test]
    fn ground_truth_lemmatized() {
        let lex = LemmaLexicon::parse("ate\tverb\teat\n", "l").unwrap();
        let ids = [LocationId::from("1")];
        let gt = parse_ground_truth("1\tate\tfood\n", "g", &lex, &ids).unwrap();
        assert_eq!(gt.names(&ids[0]).into_iter().collect::<Vec<_>>(), ["(eat, food)"]);
        assert!(parse_ground_truth("", "g", &lex, &ids).unwrap().is_empty());
        let err = parse_ground_truth("zzz\tate\tfood\n", "g", &lex, &ids).unwrap_err();
        assert!(err.to_string().contains("zzz"));
    }

    #[test]
    fn compact_sentence_rejects_self_loop() {
        assert!(AnnotatedSentence::parse_compact("a/NN b/VB", "dobj(1,1)").is_err());
    }
}
