//! Matching datasets to pre-trained models by topological complexity.
//!
//! A catalog holds one total-lifetime score pair per model. Ranking a
//! dataset against the catalog picks the m closest and m farthest models by
//! absolute score difference; the accuracy-gap report then averages, over
//! many datasets, the accuracy advantage of close models over far ones and
//! attaches a 95% confidence interval.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which total-lifetime score drives ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    Combined,
    H0,
    H1,
}

/// Catalog subset to rank within, relative to the dataset score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subgroup {
    All,
    /// Models with score strictly below the dataset score.
    Lower,
    /// Models with score at or above the dataset score.
    Higher,
}

/// How the 95% confidence interval is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CiMethod {
    /// mean +/- 1.96 * stderr
    Normal,
    /// mean +/- t(0.975, n-1) * stderr
    Student,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub model_id: String,
    pub h0_total: f64,
    pub h1_total: f64,
}

impl CatalogEntry {
    pub fn score(&self, measure: Measure) -> f64 {
        match measure {
            Measure::Combined => self.h0_total + self.h1_total,
            Measure::H0 => self.h0_total,
            Measure::H1 => self.h1_total,
        }
    }
}

/// Scores for a set of models (or datasets; the table shape is the same).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCatalog {
    entries: Vec<CatalogEntry>,
}

impl ModelCatalog {
    pub fn new(entries: Vec<CatalogEntry>) -> Result<Self> {
        let mut seen = BTreeMap::new();
        for (idx, e) in entries.iter().enumerate() {
            if let Some(prev) = seen.insert(e.model_id.clone(), idx) {
                return Err(Error::invalid(
                    "model_id",
                    format!("duplicate id {:?} (entries {prev} and {idx})", e.model_id),
                ));
            }
            if !(e.h0_total >= 0.0) || !(e.h1_total >= 0.0) {
                return Err(Error::invalid(
                    "scores",
                    format!("negative or NaN score for {:?}", e.model_id),
                ));
            }
        }
        Ok(ModelCatalog { entries })
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn get(&self, model_id: &str) -> Option<&CatalogEntry> {
        self.entries.iter().find(|e| e.model_id == model_id)
    }

    /// Reads `(model_id, h0_total, h1_total)` CSV with a header.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut entries = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            if record.len() != 3 {
                return Err(Error::Parse {
                    line,
                    reason: format!("expected 3 fields (model_id, h0_total, h1_total), got {}", record.len()),
                });
            }
            entries.push(CatalogEntry {
                model_id: record[0].trim().to_string(),
                h0_total: parse_score(&record[1], line)?,
                h1_total: parse_score(&record[2], line)?,
            });
        }
        Self::new(entries)
    }

    /// Reads a pairwise table `(class_a, class_b, h0_total, h1_total)` and
    /// synthesizes ids of the form `{a}v{b}` (one model per class pair).
    pub fn read_pair_table_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut entries = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            if record.len() != 4 {
                return Err(Error::Parse {
                    line,
                    reason: format!(
                        "expected 4 fields (class_a, class_b, h0_total, h1_total), got {}",
                        record.len()
                    ),
                });
            }
            entries.push(CatalogEntry {
                model_id: format!("{}v{}", record[0].trim(), record[1].trim()),
                h0_total: parse_score(&record[2], line)?,
                h1_total: parse_score(&record[3], line)?,
            });
        }
        Self::new(entries)
    }

    pub fn read_csv_path(path: &Path, pair_table: bool) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        if pair_table {
            Self::read_pair_table_csv(reader)
        } else {
            Self::read_csv(reader)
        }
    }
}

fn parse_score(field: &str, line: usize) -> Result<f64> {
    field.trim().parse().map_err(|_| Error::Parse {
        line,
        reason: format!("non-numeric score {field:?}"),
    })
}

/// Accuracies of models evaluated on datasets, all in [0, 1].
#[derive(Debug, Clone, Default)]
pub struct AccuracyMatrix {
    acc: BTreeMap<(String, String), f64>,
}

impl AccuracyMatrix {
    pub fn insert(&mut self, model_id: &str, dataset_id: &str, accuracy: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(Error::invalid(
                "accuracy",
                format!("{accuracy} for ({model_id}, {dataset_id}) is outside [0, 1]"),
            ));
        }
        self.acc.insert((model_id.to_string(), dataset_id.to_string()), accuracy);
        Ok(())
    }

    pub fn get(&self, model_id: &str, dataset_id: &str) -> Option<f64> {
        self.acc.get(&(model_id.to_string(), dataset_id.to_string())).copied()
    }

    pub fn len(&self) -> usize {
        self.acc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.acc.is_empty()
    }

    /// Reads `(model_id, dataset_id, accuracy)` CSV with a header.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut matrix = AccuracyMatrix::default();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            if record.len() != 3 {
                return Err(Error::Parse {
                    line,
                    reason: format!(
                        "expected 3 fields (model_id, dataset_id, accuracy), got {}",
                        record.len()
                    ),
                });
            }
            matrix.insert(record[0].trim(), record[1].trim(), parse_score(&record[2], line)?)?;
        }
        Ok(matrix)
    }

    pub fn read_csv_path(path: &Path) -> Result<Self> {
        Self::read_csv(BufReader::new(File::open(path)?))
    }
}

/// Closest/farthest model ids for one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub closest: Vec<String>,
    pub farthest: Vec<String>,
    /// Set when fewer than m models survived filtering; both lists then
    /// contain everything available.
    pub shortfall: bool,
}

/// Ranks catalog models by |score - dataset_score| under `measure`.
/// Ties break by model id ascending. `exclude` removes one model (e.g. the
/// dataset's own) before ranking.
pub fn rank_models(
    catalog: &ModelCatalog,
    dataset_score: f64,
    measure: Measure,
    m: usize,
    subgroup: Subgroup,
    exclude: Option<&str>,
) -> Result<Ranking> {
    if m == 0 {
        return Err(Error::invalid("m", "must be >= 1"));
    }
    let mut scored: Vec<(f64, &str)> = catalog
        .entries()
        .iter()
        .filter(|e| exclude != Some(e.model_id.as_str()))
        .filter(|e| match subgroup {
            Subgroup::All => true,
            Subgroup::Lower => e.score(measure) < dataset_score,
            Subgroup::Higher => e.score(measure) >= dataset_score,
        })
        .map(|e| ((e.score(measure) - dataset_score).abs(), e.model_id.as_str()))
        .collect();
    if scored.is_empty() {
        return Err(Error::invalid(
            "catalog",
            "no models left after subgroup filtering and exclusion",
        ));
    }
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then_with(|| a.1.cmp(b.1)));
    let take = m.min(scored.len());
    let closest: Vec<String> = scored[..take].iter().map(|&(_, id)| id.to_string()).collect();
    let mut by_far = scored;
    by_far.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then_with(|| a.1.cmp(b.1)));
    let farthest: Vec<String> = by_far[..take].iter().map(|&(_, id)| id.to_string()).collect();
    Ok(Ranking { closest, farthest, shortfall: take < m })
}

/// Per-dataset slice of a selection report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSelection {
    pub dataset_id: String,
    pub dataset_score: f64,
    #[serde(flatten)]
    pub ranking: Ranking,
    /// mean accuracy of closest minus mean accuracy of farthest; absent when
    /// no accuracy matrix was supplied.
    pub gap: Option<f64>,
}

/// Aggregated accuracy-gap report across datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub measure: Measure,
    pub subgroup: Subgroup,
    pub m: usize,
    pub ci_method: CiMethod,
    pub datasets: Vec<DatasetSelection>,
    pub mean_gap: Option<f64>,
    pub ci_lower: Option<f64>,
    pub ci_upper: Option<f64>,
}

impl SelectionReport {
    pub fn write_json<W: Write>(&self, mut writer: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut writer, self)?;
        writer.write_all(b"\n")?;
        Ok(())
    }

    pub fn write_json_path(&self, path: &Path) -> Result<()> {
        self.write_json(BufWriter::new(File::create(path)?))
    }
}

fn quantile_975(ci: CiMethod, n: usize) -> f64 {
    match ci {
        CiMethod::Normal => 1.96,
        CiMethod::Student => {
            use statrs::distribution::{ContinuousCDF, StudentsT};
            let df = (n - 1).max(1) as f64;
            StudentsT::new(0.0, 1.0, df).expect("valid dof").inverse_cdf(0.975)
        }
    }
}

/// Ranks every dataset against the catalog and, when `accuracy` is given,
/// reports the mean closest-minus-farthest accuracy gap with a 95% CI.
#[allow(clippy::too_many_arguments)]
pub fn accuracy_gap(
    catalog: &ModelCatalog,
    datasets: &ModelCatalog,
    accuracy: Option<&AccuracyMatrix>,
    measure: Measure,
    m: usize,
    subgroup: Subgroup,
    exclude_self: bool,
    ci_method: CiMethod,
) -> Result<SelectionReport> {
    if datasets.entries().is_empty() {
        return Err(Error::invalid("datasets", "need at least one dataset"));
    }
    let mut selections = Vec::with_capacity(datasets.entries().len());
    let mut missing = Vec::new();
    for ds in datasets.entries() {
        let score = ds.score(measure);
        let exclude = exclude_self.then_some(ds.model_id.as_str());
        let ranking = rank_models(catalog, score, measure, m, subgroup, exclude)?;
        let gap = accuracy.map(|acc| {
            let mut mean_of = |ids: &[String]| -> f64 {
                let mut sum = 0.0;
                for id in ids {
                    match acc.get(id, &ds.model_id) {
                        Some(a) => sum += a,
                        None => missing.push(format!("({id}, {})", ds.model_id)),
                    }
                }
                sum / ids.len() as f64
            };
            mean_of(&ranking.closest) - mean_of(&ranking.farthest)
        });
        selections.push(DatasetSelection {
            dataset_id: ds.model_id.clone(),
            dataset_score: score,
            ranking,
            gap,
        });
    }
    if !missing.is_empty() {
        missing.sort();
        missing.dedup();
        return Err(Error::MissingAccuracy { pairs: missing });
    }

    let (mean_gap, ci_lower, ci_upper) = if accuracy.is_some() {
        let gaps: Vec<f64> = selections.iter().filter_map(|s| s.gap).collect();
        let n = gaps.len();
        let mean = gaps.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = gaps.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        let half = quantile_975(ci_method, n) * stderr;
        (Some(mean), Some(mean - half), Some(mean + half))
    } else {
        (None, None, None)
    };

    Ok(SelectionReport {
        measure,
        subgroup,
        m,
        ci_method,
        datasets: selections,
        mean_gap,
        ci_lower,
        ci_upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn catalog(scores: &[(&str, f64, f64)]) -> ModelCatalog {
        ModelCatalog::new(
            scores
                .iter()
                .map(|&(id, h0, h1)| CatalogEntry {
                    model_id: id.to_string(),
                    h0_total: h0,
                    h1_total: h1,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn degenerate_catalog_flags_shortfall() {
        let cat = catalog(&[("only", 10.0, 2.0)]);
        let r = rank_models(&cat, 5.0, Measure::Combined, 5, Subgroup::All, None).unwrap();
        assert!(r.shortfall);
        assert_eq!(r.closest, vec!["only"]);
        assert_eq!(r.farthest, vec!["only"]);
    }

    #[test]
    fn ranking_matches_full_sort() {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let entries: Vec<(String, f64)> =
            (0..20).map(|i| (format!("m{i:02}"), (rng.random::<f64>() * 100.0).round())).collect();
        let cat = ModelCatalog::new(
            entries
                .iter()
                .map(|(id, s)| CatalogEntry { model_id: id.clone(), h0_total: *s, h1_total: 0.0 })
                .collect(),
        )
        .unwrap();
        let ds = 42.0;
        let r = rank_models(&cat, ds, Measure::H0, 4, Subgroup::All, None).unwrap();
        let mut brute: Vec<(f64, String)> =
            entries.iter().map(|(id, s)| ((s - ds).abs(), id.clone())).collect();
        brute.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let closest: Vec<String> = brute[..4].iter().map(|(_, id)| id.clone()).collect();
        assert_eq!(r.closest, closest);
        brute.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let farthest: Vec<String> = brute[..4].iter().map(|(_, id)| id.clone()).collect();
        assert_eq!(r.farthest, farthest);
    }

    #[test]
    fn ranking_invariant_under_catalog_permutation_and_shift() {
        let base = &[("a", 10.0, 0.0), ("b", 20.0, 0.0), ("c", 30.0, 0.0), ("d", 40.0, 0.0)];
        let cat = catalog(base);
        let mut reversed: Vec<(&str, f64, f64)> = base.to_vec();
        reversed.reverse();
        let cat_rev = catalog(&reversed);
        let r1 = rank_models(&cat, 22.0, Measure::Combined, 2, Subgroup::All, None).unwrap();
        let r2 = rank_models(&cat_rev, 22.0, Measure::Combined, 2, Subgroup::All, None).unwrap();
        assert_eq!(r1, r2);
        // affine shift of every score including the dataset's
        let shifted: Vec<(&str, f64, f64)> =
            base.iter().map(|&(id, h0, h1)| (id, h0 + 7.0, h1)).collect();
        let cat_shift = catalog(&shifted);
        let r3 = rank_models(&cat_shift, 29.0, Measure::Combined, 2, Subgroup::All, None).unwrap();
        assert_eq!(r1.closest, r3.closest);
        assert_eq!(r1.farthest, r3.farthest);
    }

    #[test]
    fn subgroup_boundaries_are_strict_below() {
        let cat = catalog(&[("lo", 10.0, 0.0), ("eq", 20.0, 0.0), ("hi", 30.0, 0.0)]);
        let lower = rank_models(&cat, 20.0, Measure::Combined, 3, Subgroup::Lower, None).unwrap();
        assert_eq!(lower.closest, vec!["lo"]);
        let higher = rank_models(&cat, 20.0, Measure::Combined, 3, Subgroup::Higher, None).unwrap();
        assert_eq!(higher.closest, vec!["eq", "hi"]);
    }

    #[test]
    fn self_exclusion() {
        let cat = catalog(&[("a", 10.0, 0.0), ("b", 12.0, 0.0), ("c", 30.0, 0.0)]);
        let r = rank_models(&cat, 10.0, Measure::Combined, 2, Subgroup::All, Some("a")).unwrap();
        assert!(!r.closest.contains(&"a".to_string()));
        assert!(!r.farthest.contains(&"a".to_string()));
    }

    #[test]
    fn identical_accuracies_give_zero_gap() {
        let cat = catalog(&[("a", 1.0, 0.0), ("b", 2.0, 0.0), ("c", 3.0, 0.0), ("d", 9.0, 0.0)]);
        let mut acc = AccuracyMatrix::default();
        for model in ["a", "b", "c", "d"] {
            for ds in ["a", "b", "c", "d"] {
                acc.insert(model, ds, 0.8).unwrap();
            }
        }
        let report = accuracy_gap(
            &cat,
            &cat,
            Some(&acc),
            Measure::Combined,
            2,
            Subgroup::All,
            false,
            CiMethod::Normal,
        )
        .unwrap();
        assert_eq!(report.mean_gap, Some(0.0));
        assert!(report.ci_lower.unwrap() <= 0.0 && 0.0 <= report.ci_upper.unwrap());
    }

    #[test]
    fn swapping_closest_and_farthest_negates_gap() {
        let cat = catalog(&[("a", 1.0, 0.0), ("b", 2.0, 0.0), ("c", 8.0, 0.0), ("d", 9.0, 0.0)]);
        let mut acc = AccuracyMatrix::default();
        let table = [("a", 0.9), ("b", 0.85), ("c", 0.4), ("d", 0.3)];
        for (model, a) in table {
            acc.insert(model, "a", a).unwrap();
        }
        let r = rank_models(&cat, 1.0, Measure::Combined, 2, Subgroup::All, None).unwrap();
        let mean = |ids: &[String]| {
            ids.iter().map(|id| acc.get(id, "a").unwrap()).sum::<f64>() / ids.len() as f64
        };
        let gap = mean(&r.closest) - mean(&r.farthest);
        let swapped = mean(&r.farthest) - mean(&r.closest);
        assert_eq!(gap, -swapped);
        assert!(gap > 0.0);
    }

    #[test]
    fn missing_accuracy_lists_pairs() {
        let cat = catalog(&[("a", 1.0, 0.0), ("b", 2.0, 0.0)]);
        let mut acc = AccuracyMatrix::default();
        acc.insert("a", "a", 0.9).unwrap();
        let err = accuracy_gap(
            &cat,
            &cat,
            Some(&acc),
            Measure::Combined,
            1,
            Subgroup::All,
            false,
            CiMethod::Normal,
        )
        .unwrap_err();
        match err {
            Error::MissingAccuracy { pairs } => {
                assert!(pairs.iter().any(|p| p.contains("b")), "{pairs:?}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn accuracy_bounds_validated() {
        let mut acc = AccuracyMatrix::default();
        assert!(acc.insert("m", "d", 1.2).is_err());
        assert!(acc.insert("m", "d", -0.1).is_err());
        assert!(acc.insert("m", "d", 1.0).is_ok());
    }

    #[test]
    fn catalog_rejects_duplicates() {
        let err = ModelCatalog::new(vec![
            CatalogEntry { model_id: "x".into(), h0_total: 1.0, h1_total: 0.0 },
            CatalogEntry { model_id: "x".into(), h0_total: 2.0, h1_total: 0.0 },
        ])
        .unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { .. }));
    }

    #[test]
    fn pair_table_ids() {
        let csv = "class_a,class_b,h0_total,h1_total\n0,4,388,91\n0,9,413,112\n";
        let cat = ModelCatalog::read_pair_table_csv(csv.as_bytes()).unwrap();
        assert_eq!(cat.entries()[0].model_id, "0v4");
        assert_eq!(cat.entries()[0].score(Measure::Combined), 479.0);
        assert_eq!(cat.entries()[1].score(Measure::Combined), 525.0);
    }
}
