use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::{BufRead, Read};

use serde::{Deserialize, Serialize};

use super::{CollectionError, DiseaseEntry, DsrCollection, Grade, GradedJudgment};

/// One annotator's primary/not-primary decision for a disease-symptom pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub disease_id: String,
    pub symptom_id: String,
    pub annotator_id: String,
    #[serde(deserialize_with = "parse_bool")]
    pub is_primary: bool,
}

fn parse_bool<'de, D: serde::Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
    let s = String::deserialize(d)?;
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "y" | "t" => Ok(true),
        "0" | "false" | "no" | "n" | "f" => Ok(false),
        other => Err(serde::de::Error::custom(format!("not a boolean: `{other}`"))),
    }
}

/// Reads `disease_id,symptom_id,annotator_id,is_primary` CSV (with header).
pub fn read_annotations(reader: impl Read) -> Result<Vec<AnnotationRecord>, CollectionError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<AnnotationRecord>().enumerate() {
        let rec = rec.map_err(|e| CollectionError::MalformedAnnotations(format!("record {}: {e}", i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

/// Reads a `disease_id<TAB>symptom_id` pair list; `#` lines are comments.
pub fn read_pair_list(reader: impl BufRead) -> Result<Vec<(String, String)>, CollectionError> {
    let mut pairs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != 2 || fields.iter().any(|f| f.is_empty()) {
            return Err(CollectionError::MalformedAnnotations(format!(
                "pair list line {}: expected disease_id<TAB>symptom_id",
                i + 1
            )));
        }
        pairs.push((fields[0].to_string(), fields[1].to_string()));
    }
    Ok(pairs)
}

/// Grades the annotated symptoms of one disease by strict majority.
///
/// Every pair must be rated by the whole panel (all annotators seen for this
/// disease), and the panel must be odd with at least three members. The
/// output is sorted by symptom id.
pub fn majority_vote(records: &[AnnotationRecord]) -> Result<Vec<GradedJudgment>, CollectionError> {
    let Some(first) = records.first() else {
        return Ok(Vec::new());
    };
    let disease = first.disease_id.as_str();
    if let Some(other) = records.iter().find(|r| r.disease_id != disease) {
        return Err(CollectionError::MalformedAnnotations(format!(
            "records for `{disease}` and `{}` passed to one vote",
            other.disease_id
        )));
    }
    let panel: BTreeSet<&str> = records.iter().map(|r| r.annotator_id.as_str()).collect();
    if panel.len().is_multiple_of(2) {
        return Err(CollectionError::EvenPanel {
            disease: disease.into(),
            size: panel.len(),
        });
    }
    if panel.len() < 3 {
        return Err(CollectionError::PanelTooSmall {
            disease: disease.into(),
            size: panel.len(),
        });
    }

    let mut votes: BTreeMap<&str, HashMap<&str, bool>> = BTreeMap::new();
    for r in records {
        let by_annotator = votes.entry(r.symptom_id.as_str()).or_default();
        if by_annotator.insert(r.annotator_id.as_str(), r.is_primary).is_some() {
            return Err(CollectionError::DuplicateAnnotation {
                disease: disease.into(),
                symptom: r.symptom_id.clone(),
                annotator: r.annotator_id.clone(),
            });
        }
    }
    votes
        .into_iter()
        .map(|(symptom, by_annotator)| {
            if let Some(missing) = panel.iter().find(|a| !by_annotator.contains_key(*a)) {
                return Err(CollectionError::MissingAnnotator {
                    disease: disease.into(),
                    symptom: symptom.into(),
                    annotator: (*missing).into(),
                });
            }
            let yes = by_annotator.values().filter(|&&p| p).count();
            let grade = if 2 * yes > panel.len() {
                Grade::Primary
            } else {
                Grade::Relevant
            };
            Ok(GradedJudgment {
                symptom_id: symptom.into(),
                grade,
            })
        })
        .collect()
}

/// Builds a collection from the relevant-pair list and the primary-symptom
/// annotations.
///
/// Diseases appear in pair-list order; `name_of` supplies display names.
pub fn build_collection(
    records: &[AnnotationRecord],
    pairs: &[(String, String)],
    name_of: impl Fn(&str) -> String,
) -> Result<DsrCollection, CollectionError> {
    let listed: HashSet<(&str, &str)> = pairs.iter().map(|(d, s)| (d.as_str(), s.as_str())).collect();
    if let Some(r) = records
        .iter()
        .find(|r| !listed.contains(&(r.disease_id.as_str(), r.symptom_id.as_str())))
    {
        return Err(CollectionError::UnlistedPair {
            disease: r.disease_id.clone(),
            symptom: r.symptom_id.clone(),
        });
    }

    let mut order: Vec<&str> = Vec::new();
    let mut by_disease: HashMap<&str, Vec<AnnotationRecord>> = HashMap::new();
    for (d, _) in pairs {
        if !by_disease.contains_key(d.as_str()) {
            order.push(d);
            by_disease.insert(d, Vec::new());
        }
    }
    for r in records {
        if let Some(group) = by_disease.get_mut(r.disease_id.as_str()) {
            group.push(r.clone());
        }
    }

    let mut diseases = Vec::with_capacity(order.len());
    for d in order {
        let judgments = majority_vote(&by_disease[d])?;
        let voted: HashSet<&str> = judgments.iter().map(|j| j.symptom_id.as_str()).collect();
        if let Some((_, s)) = pairs.iter().find(|(pd, ps)| pd == d && !voted.contains(ps.as_str())) {
            let annotator = by_disease[d].first().map_or_else(|| "<none>".to_string(), |r| r.annotator_id.clone());
            return Err(CollectionError::MissingAnnotator {
                disease: d.into(),
                symptom: s.clone(),
                annotator,
            });
        }
        diseases.push(DiseaseEntry {
            id: d.to_string(),
            name: name_of(d),
            judgments,
        });
    }
    let mut metadata = BTreeMap::new();
    metadata.insert("construction".to_string(), "majority vote over primary-symptom annotations".to_string());
    Ok(DsrCollection { diseases, metadata })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(d: &str, s: &str, a: &str, p: bool) -> AnnotationRecord {
        AnnotationRecord {
            disease_id: d.into(),
            symptom_id: s.into(),
            annotator_id: a.into(),
            is_primary: p,
        }
    }

    fn vote(votes: &[bool]) -> Grade {
        let records: Vec<_> = votes
            .iter()
            .enumerate()
            .map(|(i, &p)| rec("D", "S", &format!("A{i}"), p))
            .collect();
        majority_vote(&records).unwrap()[0].grade
    }

    #[test]
    fn strict_majority() {
        assert_eq!(vote(&[true, true, false]), Grade::Primary);
        assert_eq!(vote(&[true, false, false]), Grade::Relevant);
        assert_eq!(vote(&[true, true, true]), Grade::Primary);
        assert_eq!(vote(&[false, false, false]), Grade::Relevant);
        assert_eq!(vote(&[true, true, false, false, true]), Grade::Primary);
    }

    #[test]
    fn panel_errors() {
        let even = [rec("D", "S", "a", true), rec("D", "S", "b", true)];
        assert!(matches!(majority_vote(&even), Err(CollectionError::EvenPanel { size: 2, .. })));
        let single = [rec("D", "S", "a", true)];
        assert!(matches!(majority_vote(&single), Err(CollectionError::PanelTooSmall { size: 1, .. })));
        let missing = [
            rec("D", "S1", "a", true),
            rec("D", "S1", "b", true),
            rec("D", "S1", "c", true),
            rec("D", "S2", "a", true),
            rec("D", "S2", "b", true),
        ];
        assert!(matches!(
            majority_vote(&missing),
            Err(CollectionError::MissingAnnotator { annotator, .. }) if annotator == "c"
        ));
        let dup = [
            rec("D", "S", "a", true),
            rec("D", "S", "a", false),
            rec("D", "S", "b", true),
            rec("D", "S", "c", true),
        ];
        assert!(matches!(majority_vote(&dup), Err(CollectionError::DuplicateAnnotation { .. })));
    }

    #[test]
    fn builds_collection_from_pairs() {
        let pairs = vec![
            ("D2".to_string(), "S1".to_string()),
            ("D1".to_string(), "S1".to_string()),
            ("D1".to_string(), "S2".to_string()),
        ];
        let mut records = Vec::new();
        for a in ["a", "b", "c"] {
            records.push(rec("D1", "S1", a, a != "c"));
            records.push(rec("D1", "S2", a, a == "c"));
            records.push(rec("D2", "S1", a, false));
        }
        let c = build_collection(&records, &pairs, |d| format!("name of {d}")).unwrap();
        assert_eq!(c.diseases.iter().map(|e| e.id.as_str()).collect::<Vec<_>>(), ["D2", "D1"]);
        assert_eq!(c.get("D1").unwrap().grade_of("S1"), 2);
        assert_eq!(c.get("D1").unwrap().grade_of("S2"), 1);
        assert_eq!(c.get("D2").unwrap().name, "name of D2");

        let extra = [records.clone(), vec![rec("D3", "S1", "a", true)]].concat();
        assert!(matches!(
            build_collection(&extra, &pairs, str::to_string),
            Err(CollectionError::UnlistedPair { .. })
        ));
        let more_pairs = [pairs.clone(), vec![("D1".to_string(), "S3".to_string())]].concat();
        assert!(matches!(
            build_collection(&records, &more_pairs, str::to_string),
            Err(CollectionError::MissingAnnotator { symptom, .. }) if symptom == "S3"
        ));
    }

    #[test]
    fn reads_csv_and_pair_list() {
        let csv = "disease_id,symptom_id,annotator_id,is_primary\nD1,S1,a,true\nD1,S1,b,0\nD1,S1,c,yes\n";
        let recs = read_annotations(csv.as_bytes()).unwrap();
        assert_eq!(recs.len(), 3);
        assert!(recs[0].is_primary && !recs[1].is_primary && recs[2].is_primary);
        assert!(read_annotations("disease_id,symptom_id,annotator_id,is_primary\nD1,S1,a,maybe\n".as_bytes()).is_err());

        let pairs = read_pair_list("# comment\nD1\tS1\n\nD1\tS2\n".as_bytes()).unwrap();
        assert_eq!(pairs.len(), 2);
        assert!(read_pair_list("D1 S1\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn vote_is_permutation_and_relabel_invariant(
            votes in proptest::collection::vec(proptest::collection::vec(any::<bool>(), 3), 1..8),
            shift in 0usize..3,
        ) {
            let mut records = Vec::new();
            for (s, row) in votes.iter().enumerate() {
                for (a, &p) in row.iter().enumerate() {
                    records.push(rec("D", &format!("S{s}"), &format!("A{a}"), p));
                }
            }
            let base = majority_vote(&records).unwrap();
            let mut shuffled: Vec<_> = records
                .iter()
                .map(|r| {
                    let a: usize = r.annotator_id[1..].parse().unwrap();
                    AnnotationRecord { annotator_id: format!("Z{}", (a + shift) % 3), ..r.clone() }
                })
                .collect();
            shuffled.reverse();
            prop_assert_eq!(majority_vote(&shuffled).unwrap(), base);
        }
    }
}
