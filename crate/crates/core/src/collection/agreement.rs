use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{AnnotationRecord, CollectionError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    pub overall_kappa: f64,
    pub items: usize,
    pub raters_per_item: usize,
    /// `None` where a disease has fewer than two items.
    pub per_disease_kappa: BTreeMap<String, Option<f64>>,
    /// Mean number of primary marks per disease the annotator rated.
    pub per_annotator_primary_rate: BTreeMap<String, f64>,
}

/// Fleiss' kappa over a two-category table of `(primary, not_primary)`
/// counts per item. Every item must have the same total.
pub fn fleiss_kappa_table(items: &[(u64, u64)]) -> Result<f64, CollectionError> {
    if items.len() < 2 {
        return Err(CollectionError::SingleItem(items.len()));
    }
    let n = items[0].0 + items[0].1;
    if let Some(&(a, b)) = items.iter().find(|&&(a, b)| a + b != n) {
        return Err(CollectionError::UnequalPanelSizes(n as usize, (a + b) as usize));
    }
    if n < 2 {
        return Err(CollectionError::MalformedAnnotations("kappa needs at least two raters per item".into()));
    }
    let (nf, big_n) = (n as f64, items.len() as f64);
    let mut agreement = 0.0;
    let (mut total_primary, mut total_not) = (0u64, 0u64);
    for &(p, q) in items {
        agreement += ((p * p + q * q) as f64 - nf) / (nf * (nf - 1.0));
        total_primary += p;
        total_not += q;
    }
    let p_bar = agreement / big_n;
    let p_primary = total_primary as f64 / (big_n * nf);
    let p_not = total_not as f64 / (big_n * nf);
    let p_e = p_primary * p_primary + p_not * p_not;
    if p_e >= 1.0 {
        // every rating in one category: agreement is perfect
        return Ok(1.0);
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

/// Fleiss' kappa over all `(disease, symptom)` items, per disease, and the
/// per-annotator primary rates.
pub fn fleiss_kappa(records: &[AnnotationRecord]) -> Result<AgreementReport, CollectionError> {
    let mut items: BTreeMap<(&str, &str), (u64, u64)> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for r in records {
        if !seen.insert((r.disease_id.as_str(), r.symptom_id.as_str(), r.annotator_id.as_str())) {
            return Err(CollectionError::DuplicateAnnotation {
                disease: r.disease_id.clone(),
                symptom: r.symptom_id.clone(),
                annotator: r.annotator_id.clone(),
            });
        }
        let cell = items.entry((&r.disease_id, &r.symptom_id)).or_insert((0, 0));
        if r.is_primary {
            cell.0 += 1;
        } else {
            cell.1 += 1;
        }
    }
    let table: Vec<(u64, u64)> = items.values().copied().collect();
    let overall_kappa = fleiss_kappa_table(&table)?;
    let raters_per_item = (table[0].0 + table[0].1) as usize;

    let mut by_disease: BTreeMap<&str, Vec<(u64, u64)>> = BTreeMap::new();
    for (&(d, _), &cell) in &items {
        by_disease.entry(d).or_default().push(cell);
    }
    let per_disease_kappa = by_disease
        .into_iter()
        .map(|(d, cells)| {
            let k = if cells.len() < 2 { None } else { Some(fleiss_kappa_table(&cells)?) };
            Ok((d.to_string(), k))
        })
        .collect::<Result<_, CollectionError>>()?;

    let mut marks: BTreeMap<&str, (u64, BTreeSet<&str>)> = BTreeMap::new();
    for r in records {
        let entry = marks.entry(&r.annotator_id).or_default();
        entry.1.insert(&r.disease_id);
        if r.is_primary {
            entry.0 += 1;
        }
    }
    let per_annotator_primary_rate = marks
        .into_iter()
        .map(|(a, (primaries, diseases))| (a.to_string(), primaries as f64 / diseases.len() as f64))
        .collect();

    Ok(AgreementReport {
        overall_kappa,
        items: table.len(),
        raters_per_item,
        per_disease_kappa,
        per_annotator_primary_rate,
    })
}
