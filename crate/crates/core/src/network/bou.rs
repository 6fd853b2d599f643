use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::corpus::LocationId;
use crate::scalar::Scalar;

use super::geo::haversine;

/// Boundary of uniqueness of one activity at one location.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Boundary<S> {
    Meters(S),
    /// No other location performs the activity.
    Unbounded,
}

impl<S: Copy> Boundary<S> {
    pub fn meters(&self) -> Option<S> {
        match self {
            Boundary::Meters(m) => Some(*m),
            Boundary::Unbounded => None,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, Boundary::Unbounded)
    }
}

impl<S: Scalar> fmt::Display for Boundary<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Unbounded => f.write_str("unbounded"),
            Boundary::Meters(m) => {
                let m = m.to_f64_lossy();
                if m >= 1000.0 {
                    write!(f, "{:.2} km", m / 1000.0)
                } else {
                    write!(f, "{m:.2} m")
                }
            }
        }
    }
}

impl<S: Serialize> Serialize for Boundary<S> {
    fn serialize<Z: Serializer>(&self, serializer: Z) -> Result<Z::Ok, Z::Error> {
        match self {
            Boundary::Meters(m) => m.serialize(serializer),
            Boundary::Unbounded => serializer.serialize_str("unbounded"),
        }
    }
}

impl<'de, S: Deserialize<'de>> Deserialize<'de> for Boundary<S> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw<S> {
            Meters(S),
            Token(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Meters(m) => Ok(Boundary::Meters(m)),
            Raw::Token(t) if t == "unbounded" => Ok(Boundary::Unbounded),
            Raw::Token(t) => Err(serde::de::Error::custom(format!(
                "expected meters or \"unbounded\", got `{t}`"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Uniqueness<S> {
    pub boundary: Boundary<S>,
    pub nearest_alternative: Option<LocationId>,
}

impl<S> Uniqueness<S> {
    pub fn unbounded() -> Self {
        Uniqueness { boundary: Boundary::Unbounded, nearest_alternative: None }
    }
}

/// Boundaries for every activity of one location.
#[derive(Clone, Debug, PartialEq)]
pub struct BouAssignment<S> {
    pub location_id: LocationId,
    pub activities: BTreeMap<String, Uniqueness<S>>,
}

#[derive(Clone, Debug)]
pub struct SpatialLocation {
    pub id: LocationId,
    pub latitude: f64,
    pub longitude: f64,
    pub activities: BTreeSet<String>,
}

/// Positions and activity-name sets of every location.
#[derive(Clone, Debug, Default)]
pub struct SpatialView {
    pub locations: Vec<SpatialLocation>,
}

impl SpatialView {
    pub fn push(&mut self, id: LocationId, latitude: f64, longitude: f64, activities: BTreeSet<String>) {
        self.locations.push(SpatialLocation { id, latitude, longitude, activities });
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn index_of(&self, id: &LocationId) -> Option<usize> {
        self.locations.iter().position(|l| &l.id == id)
    }

    pub fn distance<S: Scalar>(&self, a: usize, b: usize) -> S {
        let (p, q) = (&self.locations[a], &self.locations[b]);
        haversine(p.latitude, p.longitude, q.latitude, q.longitude)
    }

    /// Other locations sharing at least one activity with `index`, nearest
    /// first, equidistant ones by id.
    pub fn similarity_set<S: Scalar>(&self, index: usize) -> Vec<(usize, S)> {
        let own = &self.locations[index].activities;
        let mut out: Vec<(usize, S)> = (0..self.locations.len())
            .filter(|&j| j != index)
            .filter(|&j| !own.is_disjoint(&self.locations[j].activities))
            .map(|j| (j, self.distance(index, j)))
            .collect();
        out.sort_by(|a, b| {
            a.1.partial_cmp(&b.1)
                .unwrap_or(Ordering::Equal)
                .then_with(|| self.locations[a.0].id.cmp(&self.locations[b.0].id))
        });
        out
    }
}

/// Nearest-first sweep over the similarity set of one location.
pub fn compute_bou<S: Scalar>(view: &SpatialView, index: usize) -> BouAssignment<S> {
    let here = &view.locations[index];
    let mut pending: BTreeSet<&str> = here.activities.iter().map(String::as_str).collect();
    let mut activities = BTreeMap::new();
    for (j, dist) in view.similarity_set::<S>(index) {
        if pending.is_empty() {
            break;
        }
        let other = &view.locations[j];
        let shared: Vec<&str> = pending.iter().copied().filter(|a| other.activities.contains(*a)).collect();
        for a in shared {
            pending.remove(a);
            activities.insert(
                a.to_owned(),
                Uniqueness { boundary: Boundary::Meters(dist), nearest_alternative: Some(other.id.clone()) },
            );
        }
    }
    for a in pending {
        activities.insert(a.to_owned(), Uniqueness::unbounded());
    }
    BouAssignment { location_id: here.id.clone(), activities }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn empty_similarity_set_is_unbounded() {
        let mut view = SpatialView::default();
        view.push("1".into(), 0.0, 0.0, set(&["a", "b"]));
        view.push("2".into(), 0.0, 0.001, set(&["c"]));
        let bou: BouAssignment<f64> = compute_bou(&view, 0);
        assert!(bou.activities.values().all(|u| u.boundary.is_unbounded() && u.nearest_alternative.is_none()));
    }

    #[test]
    fn equidistant_ties_go_to_smaller_id() {
        let mut view = SpatialView::default();
        view.push("1".into(), 0.0, 0.0, set(&["a"]));
        view.push("9".into(), 0.0, 0.001, set(&["a"]));
        view.push("3".into(), 0.0, -0.001, set(&["a"]));
        let bou: BouAssignment<f64> = compute_bou(&view, 0);
        assert_eq!(bou.activities["a"].nearest_alternative, Some("3".into()));
    }

    #[test]
    fn boundary_serde() {
        let b: Vec<Boundary<f64>> = vec![Boundary::Meters(40.5), Boundary::Unbounded];
        let text = serde_json::to_string(&b).unwrap();
        assert_eq!(text, r#"[40.5,"unbounded"]"#);
        let back: Vec<Boundary<f64>> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, b);
        assert!(serde_json::from_str::<Boundary<f64>>(r#""far""#).is_err());
    }

    #[test]
    fn display() {
        assert_eq!(Boundary::Meters(5240.0_f64).to_string(), "5.24 km");
        assert_eq!(Boundary::Meters(40.0_f64).to_string(), "40.00 m");
        assert_eq!(Boundary::<f64>::Unbounded.to_string(), "unbounded");
    }
}
