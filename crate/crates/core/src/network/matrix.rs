use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::LocationId;
use crate::error::{Error, Result};
use crate::extract::ActivitySet;
use crate::scalar::Scalar;

/// Activity frequency per (distinct activity name, location).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActivityLocationMatrix {
    activity_names: Vec<String>,
    location_ids: Vec<LocationId>,
    /// Row-major, `activity_names.len() x location_ids.len()`.
    cells: Vec<u32>,
}

impl ActivityLocationMatrix {
    /// Builds a matrix from explicit rows. Every row needs a nonzero cell.
    pub fn from_rows(activity_names: Vec<String>, location_ids: Vec<LocationId>, rows: Vec<Vec<u32>>) -> Result<Self> {
        if activity_names.is_empty() {
            return Err(Error::NoActivities);
        }
        if rows.len() != activity_names.len() || rows.iter().any(|r| r.len() != location_ids.len()) {
            return Err(Error::InvalidArgument("matrix shape does not match its labels".into()));
        }
        if let Some(i) = rows.iter().position(|r| r.iter().all(|&c| c == 0)) {
            return Err(Error::InvalidArgument(format!(
                "activity `{}` has no supporting location",
                activity_names[i]
            )));
        }
        Ok(ActivityLocationMatrix {
            activity_names,
            location_ids,
            cells: rows.into_iter().flatten().collect(),
        })
    }

    pub fn n_activities(&self) -> usize {
        self.activity_names.len()
    }

    pub fn n_locations(&self) -> usize {
        self.location_ids.len()
    }

    pub fn activity_names(&self) -> &[String] {
        &self.activity_names
    }

    pub fn location_ids(&self) -> &[LocationId] {
        &self.location_ids
    }

    pub fn get(&self, activity: usize, location: usize) -> u32 {
        self.cells[activity * self.location_ids.len() + location]
    }

    pub fn row(&self, activity: usize) -> &[u32] {
        let m = self.location_ids.len();
        &self.cells[activity * m..(activity + 1) * m]
    }

    pub fn activity_index(&self, name: &str) -> Option<usize> {
        self.activity_names.binary_search_by(|n| n.as_str().cmp(name)).ok()
    }

    pub fn location_index(&self, id: &LocationId) -> Option<usize> {
        self.location_ids.iter().position(|l| l == id)
    }

    /// Number of locations supporting the activity.
    pub fn support(&self, activity: usize) -> usize {
        self.row(activity).iter().filter(|&&c| c > 0).count()
    }

    pub fn row_sum(&self, activity: usize) -> u64 {
        self.row(activity).iter().map(|&c| u64::from(c)).sum()
    }

    /// Activity names with a nonzero cell in the column.
    pub fn activities_at(&self, location: usize) -> BTreeSet<&str> {
        (0..self.n_activities())
            .filter(|&i| self.get(i, location) > 0)
            .map(|i| self.activity_names[i].as_str())
            .collect()
    }
}

/// Matrix over every location in `sets` (columns sorted by location id) and
/// every distinct activity name (rows sorted by name).
pub fn build_alm(sets: &[ActivitySet]) -> Result<ActivityLocationMatrix> {
    let mut columns: Vec<&ActivitySet> = sets.iter().collect();
    columns.sort_by(|a, b| a.location_id.cmp(&b.location_id));
    let mut rows: BTreeMap<&str, Vec<u32>> = BTreeMap::new();
    for (j, set) in columns.iter().enumerate() {
        for (name, record) in &set.activities {
            let row = rows.entry(name.as_str()).or_insert_with(|| vec![0; columns.len()]);
            row[j] = u32::try_from(record.af()).unwrap_or(u32::MAX);
        }
    }
    if rows.is_empty() {
        return Err(Error::NoActivities);
    }
    let names = rows.keys().map(|s| s.to_string()).collect();
    let ids = columns.iter().map(|s| s.location_id.clone()).collect();
    ActivityLocationMatrix::from_rows(names, ids, rows.into_values().collect())
}

/// Log-scaled activity frequency times inverse location frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct AfIlf<S> {
    n: usize,
    m: usize,
    /// `log10(1 + ALM[i][j])`, row-major.
    pub af: Vec<S>,
    /// `log10(m / support_i)` per activity.
    pub ilf: Vec<S>,
    /// `af * ilf`, row-major.
    pub weights: Vec<S>,
}

impl<S: Scalar> AfIlf<S> {
    pub fn weight(&self, activity: usize, location: usize) -> S {
        self.weights[activity * self.m + location]
    }

    /// AF-ILF vector of one location (one entry per activity row).
    pub fn location_vector(&self, location: usize) -> Vec<S> {
        (0..self.n).map(|i| self.weight(i, location)).collect()
    }

    pub fn n_locations(&self) -> usize {
        self.m
    }
}

pub fn af_ilf<S: Scalar>(alm: &ActivityLocationMatrix) -> AfIlf<S> {
    let (n, m) = (alm.n_activities(), alm.n_locations());
    let total = S::from_count(m);
    let mut af = Vec::with_capacity(n * m);
    let mut ilf = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n * m);
    for i in 0..n {
        let row_ilf = (total / S::from_count(alm.support(i))).log10();
        ilf.push(row_ilf);
        for &cell in alm.row(i) {
            let a = (S::one() + S::from_count(cell as usize)).log10();
            af.push(a);
            weights.push(a * row_ilf);
        }
    }
    AfIlf { n, m, af, ilf, weights }
}

/// Cosine of two vectors, 0 when either has zero norm, clamped to [0, 1].
pub fn similarity_index<S: Scalar>(p: &[S], q: &[S]) -> S {
    let mut dot = S::zero();
    let mut np = S::zero();
    let mut nq = S::zero();
    for (&a, &b) in p.iter().zip(q) {
        dot = dot + a * b;
        np = np + a * a;
        nq = nq + b * b;
    }
    if np == S::zero() || nq == S::zero() {
        return S::zero();
    }
    (dot / (np.sqrt() * nq.sqrt())).max(S::zero()).min(S::one())
}

/// Share of the activity's total frequency found at `location`.
pub fn popularity_index<S: Scalar>(alm: &ActivityLocationMatrix, activity: usize, location: usize) -> S {
    let sum = alm.row_sum(activity);
    if sum == 0 {
        return S::zero();
    }
    S::from_count(alm.get(activity, location) as usize) / S::from_count(sum as usize)
}

/// Pairwise similarity indexes between locations.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrix<S> {
    location_ids: Vec<LocationId>,
    values: Vec<S>,
}

impl<S: Scalar> SimilarityMatrix<S> {
    pub fn compute(ids: &[LocationId], weights: &AfIlf<S>) -> Self {
        let m = weights.n_locations();
        let vectors: Vec<Vec<S>> = (0..m).map(|j| weights.location_vector(j)).collect();
        let mut values = vec![S::zero(); m * m];
        for p in 0..m {
            for q in p..m {
                let si = similarity_index(&vectors[p], &vectors[q]);
                values[p * m + q] = si;
                values[q * m + p] = si;
            }
        }
        SimilarityMatrix { location_ids: ids.to_vec(), values }
    }

    pub fn get(&self, p: usize, q: usize) -> S {
        self.values[p * self.location_ids.len() + q]
    }

    pub fn location_ids(&self) -> &[LocationId] {
        &self.location_ids
    }

    pub fn len(&self) -> usize {
        self.location_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.location_ids.is_empty()
    }
}
