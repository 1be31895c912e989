//! Scoring of extraction output against gold records.

pub mod bootstrap;
pub mod metrics;
pub mod similarity;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::extraction::Triplet;
use crate::text::normalize_text;

pub use bootstrap::{bootstrap_significance, DEFAULT_ITERATIONS, MIN_ITERATIONS};
pub use metrics::{
    entity_match, entity_recall, f1, prefix_matching, prf1_auc, ranking, CurvePoint, RelationMatcher, Scores,
    TripletMatcher,
};
pub use similarity::{
    cosine, semantic_map, trigrams, Embedding, LexicalSimilarity, RemoteSimilarity, SemanticMapper,
    SimilarityBackend, SimilarityKind,
};

pub const DEFAULT_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldTriplet {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub source_id: String,
    pub s: String,
    pub r: String,
    pub o: String,
}

impl GoldTriplet {
    pub fn new(source_id: &str, s: &str, r: &str, o: &str) -> Self {
        GoldTriplet {
            source_id: source_id.to_owned(),
            s: normalize_text(s),
            r: normalize_text(r),
            o: normalize_text(o),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SlotTriple {
    s: String,
    r: String,
    o: String,
}

/// One line of a gold JSONL file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldRecord {
    pub source_id: String,
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    gold_triplets: Vec<SlotTriple>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e2: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
}

impl GoldRecord {
    pub fn open(source_id: &str, text: &str, triplets: &[(&str, &str, &str)]) -> Self {
        GoldRecord {
            source_id: source_id.to_owned(),
            text: text.to_owned(),
            gold_triplets: triplets
                .iter()
                .map(|&(s, r, o)| SlotTriple {
                    s: s.into(),
                    r: r.into(),
                    o: o.into(),
                })
                .collect(),
            e1: None,
            e2: None,
            relation: None,
            lang: None,
        }
    }

    pub fn closed(source_id: &str, text: &str, e1: &str, relation: &str, e2: &str) -> Self {
        GoldRecord {
            e1: Some(e1.to_owned()),
            e2: Some(e2.to_owned()),
            relation: Some(relation.to_owned()),
            ..GoldRecord::open(source_id, text, &[])
        }
    }

    /// The closed-mode triple `(e1, relation, e2)`, if the record has one.
    pub fn closed_triplet(&self) -> Option<GoldTriplet> {
        match (&self.e1, &self.relation, &self.e2) {
            (Some(e1), Some(r), Some(e2)) => Some(GoldTriplet::new(&self.source_id, e1, r, e2)),
            _ => None,
        }
    }

    /// Listed gold triplets, or the closed-mode triple when none are listed.
    pub fn triplets(&self) -> Vec<GoldTriplet> {
        if self.gold_triplets.is_empty() {
            return self.closed_triplet().into_iter().collect();
        }
        self.gold_triplets
            .iter()
            .map(|t| GoldTriplet::new(&self.source_id, &t.s, &t.r, &t.o))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Open,
    Closed,
}

impl FromStr for EvalMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "open" => Ok(EvalMode::Open),
            "closed" => Ok(EvalMode::Closed),
            other => Err(format!("unknown evaluation mode `{other}`")),
        }
    }
}

/// Gold relations in order of first appearance.
pub fn gold_vocabulary(gold: &[GoldRecord]) -> Vec<String> {
    let mut seen = Vec::new();
    for t in gold.iter().flat_map(GoldRecord::triplets) {
        if !seen.contains(&t.r) {
            seen.push(t.r);
        }
    }
    seen
}

fn by_source(predicted: &[Triplet]) -> HashMap<&str, Vec<&Triplet>> {
    let mut m: HashMap<&str, Vec<&Triplet>> = HashMap::new();
    for t in predicted {
        m.entry(t.source_id().unwrap_or("")).or_default().push(t);
    }
    m
}

/// Predictions scoped to one gold record. Unattributed predictions are
/// visible to every record.
fn scoped<'p>(index: &HashMap<&str, Vec<&'p Triplet>>, source_id: &str) -> Vec<&'p Triplet> {
    let mut out: Vec<&Triplet> = index.get(source_id).cloned().unwrap_or_default();
    if !source_id.is_empty() {
        out.extend(index.get("").into_iter().flatten());
    }
    out
}

/// One 0/1 entry per gold triplet: hit when some prediction of the same
/// record matches both entities and maps onto the gold relation.
fn relation_hits(
    gold: &[GoldRecord],
    predicted: &[Triplet],
    map: &dyn Fn(&str) -> Result<Option<String>, EvalError>,
) -> Result<Vec<f64>, EvalError> {
    let index = by_source(predicted);
    let mut hits = Vec::new();
    for rec in gold {
        let preds = scoped(&index, &rec.source_id);
        for g in rec.triplets() {
            let mut hit = false;
            for p in &preds {
                if entity_match(&g.s, &p.subject)
                    && entity_match(&g.o, &p.object)
                    && map(&p.relation)?.as_deref() == Some(g.r.as_str())
                {
                    hit = true;
                    break;
                }
            }
            hits.push(hit as u8 as f64);
        }
    }
    if hits.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    Ok(hits)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Fraction of gold triplets recovered with a semantically mapped relation.
pub fn relation_recall(
    gold: &[GoldRecord],
    predicted: &[Triplet],
    mapper: &SemanticMapper<'_>,
) -> Result<f64, EvalError> {
    relation_hits(gold, predicted, &|r| mapper.map(r)).map(|h| mean(&h))
}

/// Relation recall at each threshold. Each distinct predicted relation is
/// embedded once.
pub fn threshold_sweep(
    gold: &[GoldRecord],
    predicted: &[Triplet],
    backend: &dyn SimilarityBackend,
    thresholds: &[f64],
) -> Result<Vec<(f64, f64)>, EvalError> {
    let mapper = SemanticMapper::new(backend, gold_vocabulary(gold), 0.0)?;
    let mut best: BTreeMap<&str, (String, f64)> = BTreeMap::new();
    for t in predicted {
        if !best.contains_key(t.relation.as_str()) {
            best.insert(&t.relation, mapper.best(&t.relation)?);
        }
    }
    thresholds
        .iter()
        .map(|&tau| {
            if !(0.0..=1.0).contains(&tau) {
                return Err(EvalError::Threshold(tau.to_string()));
            }
            let hits = relation_hits(gold, predicted, &|r| {
                Ok(best.get(r).filter(|(_, s)| *s >= tau).map(|(l, _)| l.clone()))
            })?;
            Ok((tau, mean(&hits)))
        })
        .collect()
}

/// Per-record entity recall, pooled over all gold entities.
fn pooled_entity_recall(gold: &[GoldRecord], predicted: &[Triplet]) -> Result<f64, EvalError> {
    let index = by_source(predicted);
    let (mut found, mut total) = (0usize, 0usize);
    for rec in gold {
        let mut entities: Vec<String> = Vec::new();
        for t in rec.triplets() {
            for e in [t.s, t.o] {
                if !entities.contains(&e) {
                    entities.push(e);
                }
            }
        }
        if entities.is_empty() {
            continue;
        }
        let preds: Vec<Triplet> = scoped(&index, &rec.source_id).into_iter().cloned().collect();
        found += (entity_recall(&entities, &preds)? * entities.len() as f64).round() as usize;
        total += entities.len();
    }
    if total == 0 {
        return Err(EvalError::EmptyGold);
    }
    Ok(found as f64 / total as f64)
}

/// Closed-mode correctness per record: the most confident prediction for the
/// entity pair must carry the gold label.
fn closed_hits(gold: &[GoldRecord], predicted: &[Triplet]) -> Result<Vec<f64>, EvalError> {
    let index = by_source(predicted);
    let mut out = Vec::new();
    for rec in gold {
        let Some(g) = rec.closed_triplet() else { continue };
        let preds: Vec<Triplet> = scoped(&index, &rec.source_id)
            .into_iter()
            .filter(|p| entity_match(&g.s, &p.subject) && entity_match(&g.o, &p.object))
            .cloned()
            .collect();
        let top = ranking(&preds).first().map(|&i| &preds[i]);
        out.push(top.is_some_and(|p| p.relation.eq_ignore_ascii_case(&g.r)) as u8 as f64);
    }
    if out.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: EvalMode,
    pub threshold: f64,
    /// Closed mode: share of entity pairs labelled correctly. Open mode: share
    /// of predicted triplets that match a gold triplet.
    pub accuracy: f64,
    pub entity_recall: f64,
    pub relation_recall: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: f64,
    pub matched: usize,
    pub gold: usize,
    pub predicted: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
}

/// A report plus the per-item scores used for paired significance tests.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: EvalReport,
    pub items: Vec<f64>,
}

pub fn evaluate(
    gold: &[GoldRecord],
    predicted: &[Triplet],
    mode: EvalMode,
    backend: &dyn SimilarityBackend,
    threshold: f64,
) -> Result<Evaluation, EvalError> {
    let gold_triplets: Vec<GoldTriplet> = gold.iter().flat_map(GoldRecord::triplets).collect();
    if gold_triplets.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let mapper = SemanticMapper::new(backend, gold_vocabulary(gold), threshold)?;
    let scores = prf1_auc(predicted, &gold_triplets, &RelationMatcher { mapper: &mapper })?;
    let rel_hits = relation_hits(gold, predicted, &|r| mapper.map(r))?;
    let (accuracy, items) = match mode {
        EvalMode::Open => (scores.precision, rel_hits.clone()),
        EvalMode::Closed => {
            let hits = closed_hits(gold, predicted)?;
            (mean(&hits), hits)
        }
    };
    Ok(Evaluation {
        report: EvalReport {
            mode,
            threshold,
            accuracy,
            entity_recall: pooled_entity_recall(gold, predicted)?,
            relation_recall: mean(&rel_hits),
            precision: scores.precision,
            recall: scores.recall,
            f1: scores.f1,
            auc: scores.auc,
            matched: scores.matched,
            gold: scores.gold,
            predicted: scores.predicted,
            p_value: None,
        },
        items,
    })
}

/// Aligned text table with one column per named report.
pub fn render_table(reports: &[(&str, &EvalReport)]) -> String {
    type Row = (&'static str, fn(&EvalReport) -> String);
    let rows: [Row; 12] = [
        ("accuracy", |r| format!("{:.4}", r.accuracy)),
        ("entity_recall", |r| format!("{:.4}", r.entity_recall)),
        ("relation_recall", |r| format!("{:.4}", r.relation_recall)),
        ("precision", |r| format!("{:.4}", r.precision)),
        ("recall", |r| format!("{:.4}", r.recall)),
        ("f1", |r| format!("{:.4}", r.f1)),
        ("auc", |r| format!("{:.4}", r.auc)),
        ("matched", |r| r.matched.to_string()),
        ("gold", |r| r.gold.to_string()),
        ("predicted", |r| r.predicted.to_string()),
        ("threshold", |r| format!("{:.2}", r.threshold)),
        ("p_value", |r| r.p_value.map_or("-".into(), |p| format!("{p:.4}"))),
    ];
    let mut cells: Vec<Vec<String>> = vec![std::iter::once("metric".to_owned())
        .chain(reports.iter().map(|(n, _)| n.to_string()))
        .collect()];
    for (name, f) in rows {
        if name == "p_value" && reports.iter().all(|(_, r)| r.p_value.is_none()) {
            continue;
        }
        cells.push(
            std::iter::once(name.to_owned())
                .chain(reports.iter().map(|(_, r)| f(r)))
                .collect(),
        );
    }
    let widths: Vec<usize> = (0..=reports.len())
        .map(|c| cells.iter().map(|row| row[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &cells {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c == 0 {
                let _ = write!(line, "{cell:<w$}", w = widths[0]);
            } else {
                let _ = write!(line, "  {cell:>w$}", w = widths[c]);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::Provenance;

    fn pred(src: &str, s: &str, r: &str, o: &str) -> Triplet {
        Triplet::new(s, r, o).unwrap().with_provenance(Provenance::direct(src))
    }

    fn gold() -> Vec<GoldRecord> {
        vec![
            GoldRecord::open("1", "", &[("Paris", "hasLocation", "France")]),
            GoldRecord::open("2", "", &[("Ann", "bornIn", "Oslo")]),
        ]
    }

    #[test]
    fn gold_record_json() {
        let r: GoldRecord = serde_json::from_str(
            r#"{"source_id": "x", "text": "t", "gold_triplets": [{"s": "a", "r": "b", "o": "c"}], "lang": "en"}"#,
        )
        .unwrap();
        assert_eq!(r.triplets(), vec![GoldTriplet::new("x", "a", "b", "c")]);
        let c: GoldRecord =
            serde_json::from_str(r#"{"source_id": "y", "e1": "A", "e2": "B", "relation": "partOf"}"#).unwrap();
        assert_eq!(c.triplets(), vec![GoldTriplet::new("y", "A", "partOf", "B")]);
    }

    #[test]
    fn relation_recall_examples() {
        let g = gold();
        let m = SemanticMapper::new(&LexicalSimilarity, gold_vocabulary(&g), 0.3).unwrap();
        let same = vec![pred("1", "Paris", "hasLocation", "France"), pred("2", "Ann", "bornIn", "Oslo")];
        assert_eq!(relation_recall(&g, &same, &m).unwrap(), 1.0);
        let para = vec![pred("1", "Paris", "is located in", "France")];
        assert_eq!(relation_recall(&g, &para, &m).unwrap(), 0.5);
        let unmappable = vec![pred("1", "Paris", "zzz", "France")];
        assert_eq!(relation_recall(&g, &unmappable, &m).unwrap(), 0.0);
        // records do not see each other's predictions
        let crossed = vec![pred("2", "Paris", "hasLocation", "France")];
        assert_eq!(relation_recall(&g, &crossed, &m).unwrap(), 0.0);
        assert_eq!(relation_recall(&[], &same, &m), Err(EvalError::EmptyGold));
    }

    #[test]
    fn sweep_matches_pointwise() {
        let g = gold();
        let p = vec![pred("1", "Paris", "is located in", "France"), pred("2", "Ann", "was born in", "Oslo")];
        let taus = [0.0, 0.2, 0.3, 0.5, 0.9, 1.0];
        let sweep = threshold_sweep(&g, &p, &LexicalSimilarity, &taus).unwrap();
        for (tau, rr) in sweep {
            let m = SemanticMapper::new(&LexicalSimilarity, gold_vocabulary(&g), tau).unwrap();
            assert_eq!(rr, relation_recall(&g, &p, &m).unwrap(), "tau {tau}");
        }
    }

    #[test]
    fn open_report() {
        let g = gold();
        let p = vec![
            pred("1", "Paris", "hasLocation", "France").with_confidence(0.9),
            pred("1", "Paris", "capitalOf", "Europe").with_confidence(0.4),
        ];
        let e = evaluate(&g, &p, EvalMode::Open, &LexicalSimilarity, 0.8).unwrap();
        let r = &e.report;
        assert_eq!((r.matched, r.gold, r.predicted), (1, 2, 2));
        assert_eq!((r.precision, r.recall, r.relation_recall), (0.5, 0.5, 0.5));
        assert_eq!(r.entity_recall, 0.5);
        assert_eq!(r.accuracy, r.precision);
        assert_eq!(e.items, vec![1.0, 0.0]);
        let table = render_table(&[("sys", r)]);
        assert!(table.starts_with("metric"));
        assert!(table.contains("precision        0.5000\n"));
    }

    #[test]
    fn closed_report() {
        let g = vec![
            GoldRecord::closed("1", "", "Paris", "hasLocation", "France"),
            GoldRecord::closed("2", "", "Ann", "bornIn", "Oslo"),
        ];
        let p = vec![
            pred("1", "Paris", "hasLocation", "France"),
            pred("2", "Ann", "hasLocation", "Oslo").with_confidence(0.9),
            pred("2", "Ann", "bornIn", "Oslo").with_confidence(0.4),
        ];
        let e = evaluate(&g, &p, EvalMode::Closed, &LexicalSimilarity, 0.8).unwrap();
        assert_eq!(e.items, vec![1.0, 0.0]);
        assert_eq!(e.report.accuracy, 0.5);
        assert_eq!(e.report.relation_recall, 1.0);
        assert_eq!(e.report.entity_recall, 1.0);
    }
}
