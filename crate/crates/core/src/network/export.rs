use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::graph::{ActivityNode, LanetGraph, LocationNode, PerformedAt, SimilarTo};
use super::matrix::SimilarityMatrix;

/// One line of the record format.
#[derive(Serialize, Deserialize)]
#[serde(tag = "label", bound = "S: Scalar")]
enum Record<S> {
    Location(LocationNode),
    Activity(ActivityNode),
    #[serde(rename = "Is_Performed_At")]
    PerformedAt(PerformedAt<S>),
    #[serde(rename = "Is_Similar_To")]
    SimilarTo(SimilarTo<S>),
}

/// Line-delimited JSON: location nodes, activity nodes, then both link kinds,
/// each in canonical order.
pub fn to_records<S: Scalar>(graph: &LanetGraph<S>) -> String {
    fn line<S: Scalar>(out: &mut String, record: &Record<S>) {
        out.push_str(&serde_json::to_string(record).expect("graph records always serialize"));
        out.push('\n');
    }
    let mut out = String::new();
    for n in graph.locations() {
        line::<S>(&mut out, &Record::Location(n.clone()));
    }
    for n in graph.activities() {
        line::<S>(&mut out, &Record::Activity(n.clone()));
    }
    for l in graph.performed_at() {
        line(&mut out, &Record::PerformedAt(l.clone()));
    }
    for l in graph.similar_to() {
        line(&mut out, &Record::SimilarTo(l.clone()));
    }
    out
}

pub fn parse_records<S: Scalar>(text: &str, file: &str) -> Result<LanetGraph<S>> {
    let (mut locations, mut activities, mut performed, mut similar) = (vec![], vec![], vec![], vec![]);
    for (n, raw) in text.lines().enumerate() {
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let record: Record<S> = serde_json::from_str(raw).map_err(|e| Error::Parse {
            file: file.to_owned(),
            line: n + 1,
            record: "graph".into(),
            message: e.to_string(),
        })?;
        match record {
            Record::Location(x) => locations.push(x),
            Record::Activity(x) => activities.push(x),
            Record::PerformedAt(x) => performed.push(x),
            Record::SimilarTo(x) => similar.push(x),
        }
    }
    LanetGraph::from_parts(locations, activities, performed, similar)
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

const NODE_KEYS: &[(&str, &str)] = &[
    ("label", "string"),
    ("Name_of_Location", "string"),
    ("Formatted_Address", "string"),
    ("Latitude", "double"),
    ("Longitude", "double"),
    ("Category", "string"),
    ("No_of_Reviews", "int"),
    ("Activity_Name", "string"),
];

const EDGE_KEYS: &[(&str, &str)] = &[
    ("label", "string"),
    ("Activity_Frequency", "int"),
    ("Activity_Popularity_Index", "double"),
    ("Generalized_Concept_Score", "double"),
    ("Specialized_Concept_Score", "double"),
    ("Boundary_of_Uniqueness", "string"),
    ("Nearest_Alternative", "string"),
    ("Similarity_Index", "double"),
    ("Common_Activity_List", "string"),
    ("Distance", "double"),
];

fn data(out: &mut String, scope: &str, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "      <data key=\"{scope}_{key}\">{}</data>", escape(&value.to_string()));
}

/// GraphML with typed attributes. Location nodes are `L:<id>`, activity
/// nodes `A:<name>`. List properties are joined with `"; "`.
pub fn to_graphml<S: Scalar>(graph: &LanetGraph<S>) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    for (scope, keys) in [("node", NODE_KEYS), ("edge", EDGE_KEYS)] {
        for (name, ty) in keys {
            let _ = writeln!(
                out,
                "  <key id=\"{scope}_{name}\" for=\"{scope}\" attr.name=\"{name}\" attr.type=\"{ty}\"/>"
            );
        }
    }
    out.push_str("  <graph id=\"lanet\" edgedefault=\"directed\">\n");
    for n in graph.locations() {
        let _ = writeln!(out, "    <node id=\"{}\">", escape(&format!("L:{}", n.location_id)));
        data(&mut out, "node", "label", "Location");
        data(&mut out, "node", "Name_of_Location", &n.name);
        data(&mut out, "node", "Formatted_Address", &n.formatted_address);
        data(&mut out, "node", "Latitude", n.latitude);
        data(&mut out, "node", "Longitude", n.longitude);
        data(&mut out, "node", "Category", n.categories.join("; "));
        data(&mut out, "node", "No_of_Reviews", n.review_count);
        out.push_str("    </node>\n");
    }
    for n in graph.activities() {
        let _ = writeln!(out, "    <node id=\"{}\">", escape(&format!("A:{}", n.name)));
        data(&mut out, "node", "label", "Activity");
        data(&mut out, "node", "Activity_Name", &n.name);
        out.push_str("    </node>\n");
    }
    for (k, l) in graph.performed_at().iter().enumerate() {
        let _ = writeln!(
            out,
            "    <edge id=\"p{k}\" source=\"{}\" target=\"{}\">",
            escape(&format!("A:{}", l.activity)),
            escape(&format!("L:{}", l.location))
        );
        data(&mut out, "edge", "label", super::IS_PERFORMED_AT);
        data(&mut out, "edge", "Activity_Frequency", l.frequency);
        data(&mut out, "edge", "Activity_Popularity_Index", l.popularity);
        if let Some(v) = l.gc_score {
            data(&mut out, "edge", "Generalized_Concept_Score", v);
        }
        if let Some(v) = l.sc_score {
            data(&mut out, "edge", "Specialized_Concept_Score", v);
        }
        let bou = l.boundary.meters().map_or_else(|| "unbounded".to_owned(), |m| m.to_string());
        data(&mut out, "edge", "Boundary_of_Uniqueness", bou);
        if let Some(id) = &l.nearest_alternative {
            data(&mut out, "edge", "Nearest_Alternative", id);
        }
        out.push_str("    </edge>\n");
    }
    for (k, l) in graph.similar_to().iter().enumerate() {
        let _ = writeln!(
            out,
            "    <edge id=\"s{k}\" source=\"{}\" target=\"{}\">",
            escape(&format!("L:{}", l.from)),
            escape(&format!("L:{}", l.to))
        );
        data(&mut out, "edge", "label", super::IS_SIMILAR_TO);
        data(&mut out, "edge", "Similarity_Index", l.similarity);
        data(&mut out, "edge", "Common_Activity_List", l.common_activities.join("; "));
        data(&mut out, "edge", "Distance", l.distance);
        out.push_str("    </edge>\n");
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

/// Square CSV with a header row and a leading id column.
pub fn to_si_csv<S: Scalar>(si: &SimilarityMatrix<S>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let ids = si.location_ids();
    let header: Vec<String> = std::iter::once("location_id".to_owned()).chain(ids.iter().map(|i| i.to_string())).collect();
    let mut rows = vec![header];
    for (p, id) in ids.iter().enumerate() {
        rows.push(std::iter::once(id.to_string()).chain((0..ids.len()).map(|q| si.get(p, q).to_string())).collect());
    }
    for row in rows {
        w.write_record(&row).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv output is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Boundary;

    fn tiny() -> LanetGraph<f64> {
        let loc = |id: &str, lon: f64| LocationNode {
            location_id: id.into(),
            name: format!("Place <{id}> & co"),
            formatted_address: "Main \"St\"".into(),
            latitude: 0.0,
            longitude: lon,
            categories: vec!["restaurant".into(), "bar".into()],
            review_count: 2,
        };
        let link = |a: &str, l: &str, p: f64| PerformedAt {
            activity: a.into(),
            location: l.into(),
            frequency: 1,
            popularity: p,
            gc_score: Some(0.5),
            sc_score: None,
            boundary: Boundary::Unbounded,
            nearest_alternative: None,
        };
        LanetGraph::from_parts(
            vec![loc("2", 0.001), loc("1", 0.0)],
            vec![ActivityNode { name: "(eat, food)".into() }, ActivityNode { name: "(get, beer)".into() }],
            vec![link("(eat, food)", "1", 0.5), link("(eat, food)", "2", 0.5), link("(get, beer)", "1", 1.0)],
            vec![SimilarTo {
                from: "2".into(),
                to: "1".into(),
                similarity: 0.4,
                common_activities: vec!["(eat, food)".into()],
                distance: 111.0,
            }],
        )
        .unwrap()
    }

    #[test]
    fn records_round_trip() {
        let g = tiny();
        let text = to_records(&g);
        assert_eq!(text.lines().count(), 2 + 2 + 3 + 1);
        assert!(text.lines().next().unwrap().contains("\"label\":\"Location\""));
        let back: LanetGraph<f64> = parse_records(&text, "mem").unwrap();
        assert_eq!(back, g);
        assert_eq!(to_records(&back), text);
    }

    #[test]
    fn bad_record_names_line() {
        let err = parse_records::<f64>("\n{\"label\":\"Nope\"}\n", "g.jsonl").unwrap_err();
        assert!(err.to_string().starts_with("g.jsonl:2:"), "{err}");
    }

    #[test]
    fn graphml_is_escaped_and_typed() {
        let xml = to_graphml(&tiny());
        assert!(xml.contains("Place &lt;1&gt; &amp; co"));
        assert!(xml.contains("attr.name=\"Distance\" attr.type=\"double\""));
        assert_eq!(xml.matches("<edge ").count(), 4);
        assert!(xml.contains(">unbounded</data>"));
    }
}
