//! Exact nearest-neighbour retrieval over labelled feature vectors and
//! precision@m evaluation.
//!
//! Each dimension is min-max normalised with statistics captured when the
//! index is built; dimensions whose min equals max carry no information and are
//! skipped. Distances are Euclidean in the normalised space and ties are
//! broken by id.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureRecord, FeatureSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub id: String,
    #[serde(rename = "class")]
    pub class_label: String,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalIndex {
    schema: Vec<String>,
    norm_stats: Vec<(f64, f64)>,
    entries: Vec<CorpusEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub id: String,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryPrecision {
    pub query_id: String,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionReport {
    /// Sorted by query id.
    pub per_query: Vec<QueryPrecision>,
    pub average_precision: f64,
    pub m: usize,
    pub include_self: bool,
}

impl RetrievalIndex {
    /// Captures per-dimension `(min, max)` over `entries`.
    pub fn build(schema: Vec<String>, entries: Vec<CorpusEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Domain("an index needs at least one entry".into()));
        }
        let dim = schema.len();
        let mut seen = HashSet::new();
        for e in &entries {
            if e.features.len() != dim {
                return Err(Error::Schema(format!(
                    "entry `{}` has {} features, schema has {dim}",
                    e.id,
                    e.features.len()
                )));
            }
            if e.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("entry `{}` has a non-finite feature", e.id)));
            }
            if !seen.insert(e.id.as_str()) {
                return Err(Error::DuplicateId(e.id.clone()));
            }
        }
        let norm_stats = (0..dim)
            .map(|d| {
                entries.iter().map(|e| e.features[d]).fold(
                    (f64::INFINITY, f64::NEG_INFINITY),
                    |(lo, hi), v| (lo.min(v), hi.max(v)),
                )
            })
            .collect();
        Ok(Self {
            schema,
            norm_stats,
            entries,
        })
    }

    /// Index over one feature subset of extracted records.
    pub fn from_records(records: &[FeatureRecord], set: FeatureSet) -> Result<Self> {
        let entries = records
            .iter()
            .map(|r| {
                Ok(CorpusEntry {
                    id: r.id.clone(),
                    class_label: r.class.clone(),
                    features: set.select(&r.features)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::build(set.names().into_iter().map(String::from).collect(), entries)
    }

    pub fn schema(&self) -> &[String] {
        &self.schema
    }

    pub fn norm_stats(&self) -> &[(f64, f64)] {
        &self.norm_stats
    }

    pub fn entries(&self) -> &[CorpusEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, id: &str) -> Option<&CorpusEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// Dimensions with `max == min`; they never contribute to a distance.
    pub fn constant_dims(&self) -> Vec<bool> {
        self.norm_stats.iter().map(|(lo, hi)| hi <= lo).collect()
    }

    /// Maps a raw vector into the index's normalised space (constant dims dropped).
    pub fn normalize(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(&self.norm_stats)
            .filter(|(_, (lo, hi))| hi > lo)
            .map(|(x, (lo, hi))| (x - lo) / (hi - lo))
            .collect()
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.normalize(a)
            .iter()
            .zip(self.normalize(b))
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    /// The `m` nearest entries to `probe`, nearest first.
    pub fn query(&self, probe: &[f64], m: usize, exclude_id: Option<&str>) -> Result<Vec<Hit>> {
        if probe.len() != self.schema.len() {
            return Err(Error::Schema(format!(
                "probe has {} features, schema has {}",
                probe.len(),
                self.schema.len()
            )));
        }
        if m == 0 {
            return Err(Error::Domain("m must be at least 1".into()));
        }
        let p = self.normalize(probe);
        let mut hits: Vec<Hit> = self
            .entries
            .iter()
            .filter(|e| Some(e.id.as_str()) != exclude_id)
            .map(|e| Hit {
                id: e.id.clone(),
                distance: self
                    .normalize(&e.features)
                    .iter()
                    .zip(&p)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt(),
            })
            .collect();
        hits.sort_by(|a, b| a.distance.total_cmp(&b.distance).then_with(|| a.id.cmp(&b.id)));
        hits.truncate(m);
        Ok(hits)
    }

    /// Precision@m for each query id, using the stored entry as the probe.
    ///
    /// Precision divides by `m` even when fewer than `m` candidates exist.
    pub fn evaluate(&self, query_ids: &[String], m: usize, include_self: bool) -> Result<PrecisionReport> {
        if query_ids.is_empty() {
            return Err(Error::Domain("no queries to evaluate".into()));
        }
        let mut per_query = query_ids
            .par_iter()
            .map(|qid| {
                let entry = self.entry(qid).ok_or_else(|| Error::UnknownId(qid.clone()))?;
                let exclude = (!include_self).then_some(qid.as_str());
                let hits = self.query(&entry.features, m, exclude)?;
                let relevant = hits
                    .iter()
                    .filter(|h| {
                        self.entry(&h.id)
                            .is_some_and(|e| e.class_label == entry.class_label)
                    })
                    .count();
                Ok(QueryPrecision {
                    query_id: qid.clone(),
                    precision: relevant as f64 / m as f64,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        per_query.sort_by(|a, b| a.query_id.cmp(&b.query_id));
        let average_precision =
            per_query.iter().map(|q| q.precision).sum::<f64>() / per_query.len() as f64;
        Ok(PrecisionReport {
            per_query,
            average_precision,
            m,
            include_self,
        })
    }

    /// Ids grouped by class (in class order), each group sorted lexicographically.
    pub fn classes(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut classes: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for e in &self.entries {
            classes.entry(&e.class_label).or_default().push(&e.id);
        }
        classes.values_mut().for_each(|ids| ids.sort_unstable());
        classes
    }

    /// Picks the ids at 0-based `positions` within every class; classes too
    /// small for a position contribute nothing for it.
    pub fn protocol_queries(&self, positions: &[usize]) -> Vec<String> {
        self.classes()
            .values()
            .flat_map(|ids| positions.iter().filter_map(|&p| ids.get(p).map(|s| s.to_string())))
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    /// Loads an index and re-derives its statistics from the stored entries.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let raw: RetrievalIndex = serde_json::from_str(&text)?;
        let rebuilt = Self::build(raw.schema, raw.entries)?;
        if rebuilt.norm_stats != raw.norm_stats {
            return Err(Error::format(path, "norm_stats do not match the stored entries"));
        }
        Ok(rebuilt)
    }
}

impl PrecisionReport {
    /// `query_id,precision` rows followed by an `average_precision` summary row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("query_id,precision\n");
        for q in &self.per_query {
            out.push_str(&format!("{},{}\n", q.query_id, q.precision));
        }
        out.push_str(&format!("average_precision,{}\n", self.average_precision));
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn entry(id: &str, class: &str, f: &[f64]) -> CorpusEntry {
        CorpusEntry {
            id: id.into(),
            class_label: class.into(),
            features: f.to_vec(),
        }
    }

    fn schema(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn build_captures_min_max() {
        let idx = RetrievalIndex::build(
            schema(2),
            vec![entry("a", "x", &[0.0, 1.0]), entry("b", "x", &[2.0, 3.0])],
        )
        .unwrap();
        assert_eq!(idx.norm_stats(), &[(0.0, 2.0), (1.0, 3.0)]);
        assert_eq!(idx.constant_dims(), vec![false, false]);

        let one = RetrievalIndex::build(schema(2), vec![entry("a", "x", &[4.0, 5.0])]).unwrap();
        assert_eq!(one.norm_stats(), &[(4.0, 4.0), (5.0, 5.0)]);
        assert_eq!(one.constant_dims(), vec![true, true]);
    }

    #[test]
    fn build_errors() {
        let dup = RetrievalIndex::build(schema(1), vec![entry("a", "x", &[0.0]), entry("a", "y", &[1.0])]);
        assert!(matches!(dup, Err(Error::DuplicateId(_))));
        let mismatch = RetrievalIndex::build(schema(2), vec![entry("a", "x", &[0.0])]);
        assert!(matches!(mismatch, Err(Error::Schema(_))));
        assert!(RetrievalIndex::build(schema(1), vec![]).is_err());
    }

    #[test]
    fn query_examples() {
        let idx = RetrievalIndex::build(
            schema(2),
            vec![
                entry("c", "x", &[0.0, 0.0]),
                entry("a", "y", &[2.0, 0.0]),
                entry("b", "y", &[1.0, 4.0]),
            ],
        )
        .unwrap();
        let hits = idx.query(&[1.0, 4.0], 1, None).unwrap();
        assert_eq!(hits[0].id, "b");
        assert_eq!(hits[0].distance, 0.0);
        assert_eq!(idx.query(&[0.0, 0.0], 8, None).unwrap().len(), 3);
        // (1, 0) is equidistant from a and c.
        let tie = idx.query(&[1.0, 0.0], 2, None).unwrap();
        assert_eq!(tie[0].distance, tie[1].distance);
        assert_eq!((tie[0].id.as_str(), tie[1].id.as_str()), ("a", "c"));
        let excl = idx.query(&[1.0, 4.0], 3, Some("b")).unwrap();
        assert!(excl.iter().all(|h| h.id != "b"));
        assert!(matches!(idx.query(&[1.0], 1, None), Err(Error::Schema(_))));
    }

    #[test]
    fn constant_dims_are_ignored() {
        let idx = RetrievalIndex::build(
            schema(2),
            vec![entry("a", "x", &[1.0, 7.0]), entry("b", "x", &[3.0, 7.0])],
        )
        .unwrap();
        let hits = idx.query(&[1.0, 1000.0], 2, None).unwrap();
        assert_eq!(hits[0].id, "a");
        assert_eq!(hits[0].distance, 0.0);
    }

    #[test]
    fn evaluate_examples() {
        let entries = (0..9).map(|i| entry(&format!("i{i}"), "only", &[i as f64])).collect();
        let idx = RetrievalIndex::build(schema(1), entries).unwrap();
        let report = idx.evaluate(&["i0".into(), "i3".into()], 8, true).unwrap();
        assert_eq!(report.average_precision, 1.0);
        assert!(matches!(idx.evaluate(&["nope".into()], 8, true), Err(Error::UnknownId(_))));
    }

    #[test]
    fn evaluate_counts_only_same_class() {
        let idx = RetrievalIndex::build(
            schema(1),
            vec![
                entry("a1", "a", &[0.0]),
                entry("a2", "a", &[0.1]),
                entry("b1", "b", &[0.2]),
                entry("b2", "b", &[1.0]),
            ],
        )
        .unwrap();
        let with_self = idx.evaluate(&["a1".into()], 2, true).unwrap();
        assert_eq!(with_self.per_query[0].precision, 1.0);
        let without = idx.evaluate(&["a1".into()], 2, false).unwrap();
        assert_eq!(without.per_query[0].precision, 0.5);
        assert!(!without.include_self);
    }

    #[test]
    fn protocol_queries_pick_first_and_fourth() {
        let mut entries = Vec::new();
        for class in ["b", "a"] {
            for i in (0..5).rev() {
                entries.push(entry(&format!("{class}/{i}"), class, &[i as f64]));
            }
        }
        entries.push(entry("c/0", "c", &[0.0]));
        let idx = RetrievalIndex::build(schema(1), entries).unwrap();
        assert_eq!(idx.protocol_queries(&[0, 3]), vec!["a/0", "a/3", "b/0", "b/3", "c/0"]);
    }

    #[test]
    fn report_formats() {
        let entries = (0..4).map(|i| entry(&format!("i{i}"), "k", &[i as f64])).collect();
        let idx = RetrievalIndex::build(schema(1), entries).unwrap();
        let r = idx.evaluate(&["i1".into(), "i0".into()], 2, true).unwrap();
        assert_eq!(r.per_query[0].query_id, "i0");
        let csv = r.to_csv();
        assert!(csv.starts_with("query_id,precision\ni0,1\n"));
        assert!(csv.ends_with("average_precision,1\n"));
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(v["m"], 2);
    }

    fn index_strategy() -> impl Strategy<Value = RetrievalIndex> {
        (1usize..4, 2usize..20).prop_flat_map(|(dim, n)| {
            prop::collection::vec(prop::collection::vec(-100.0f64..100.0, dim), n).prop_map(move |vs| {
                let entries = vs
                    .into_iter()
                    .enumerate()
                    .map(|(i, f)| entry(&format!("e{i:02}"), if i % 2 == 0 { "x" } else { "y" }, &f))
                    .collect();
                RetrievalIndex::build(schema(dim), entries).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn full_query_is_a_permutation(idx in index_strategy()) {
            let probe = idx.entries()[0].features.clone();
            let mut ids: Vec<String> = idx.query(&probe, idx.len(), Some("e00")).unwrap().into_iter().map(|h| h.id).collect();
            ids.sort();
            let mut expected: Vec<String> = idx.entries().iter().map(|e| e.id.clone()).filter(|id| id != "e00").collect();
            expected.sort();
            prop_assert_eq!(ids, expected);
        }

        #[test]
        fn distances_non_negative_and_zero_on_equal(idx in index_strategy()) {
            let probe = idx.entries()[1].features.clone();
            for h in idx.query(&probe, idx.len(), None).unwrap() {
                prop_assert!(h.distance >= 0.0);
                let e = idx.entry(&h.id).unwrap();
                let same = idx.normalize(&e.features) == idx.normalize(&probe);
                prop_assert_eq!(h.distance == 0.0, same);
            }
        }

        #[test]
        fn precision_is_multiple_of_one_over_m(idx in index_strategy(), m in 1usize..10) {
            let ids: Vec<String> = idx.entries().iter().map(|e| e.id.clone()).collect();
            let r = idx.evaluate(&ids, m, false).unwrap();
            for q in &r.per_query {
                let scaled = q.precision * m as f64;
                prop_assert!((scaled - scaled.round()).abs() < 1e-9);
            }
        }

        #[test]
        fn positive_rescaling_keeps_rankings(
            idx in index_strategy(),
            scale in prop::collection::vec(0.01f64..100.0, 3),
            shift in prop::collection::vec(-50.0f64..50.0, 3),
        ) {
            let transform = |f: &[f64]| -> Vec<f64> {
                f.iter().enumerate().map(|(d, v)| v * scale[d] + shift[d]).collect()
            };
            let scaled_entries = idx.entries().iter().map(|e| CorpusEntry {
                features: transform(&e.features),
                ..e.clone()
            }).collect();
            let scaled = RetrievalIndex::build(idx.schema().to_vec(), scaled_entries).unwrap();
            let probe = &idx.entries()[0].features;
            let a = idx.query(probe, idx.len(), None).unwrap();
            let b = scaled.query(&transform(probe), idx.len(), None).unwrap();
            // Rankings agree up to floating-point near-ties.
            for (x, y) in a.iter().zip(&b) {
                if x.id != y.id {
                    let dx = a.iter().find(|h| h.id == y.id).unwrap().distance;
                    prop_assert!((dx - x.distance).abs() < 1e-9);
                }
            }
        }
    }
}
