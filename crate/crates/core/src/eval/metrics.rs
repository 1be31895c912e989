use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::extraction::Triplet;

use super::similarity::SemanticMapper;
use super::GoldTriplet;

/// Case-insensitive equality or containment in either direction.
pub fn entity_match(gold: &str, predicted: &str) -> bool {
    let (g, p) = (gold.to_lowercase(), predicted.to_lowercase());
    if g.is_empty() || p.is_empty() {
        return g == p;
    }
    g == p || p.contains(&g) || g.contains(&p)
}

/// Fraction of gold entities matched by some predicted subject or object.
pub fn entity_recall<S: AsRef<str>>(gold: &[S], predicted: &[Triplet]) -> Result<f64, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let found = gold
        .iter()
        .filter(|g| {
            predicted
                .iter()
                .any(|t| entity_match(g.as_ref(), &t.subject) || entity_match(g.as_ref(), &t.object))
        })
        .count();
    Ok(found as f64 / gold.len() as f64)
}

/// Decides whether a prediction counts as a hit for one gold triplet.
pub trait TripletMatcher: Sync {
    fn matches(&self, predicted: &Triplet, gold: &GoldTriplet) -> Result<bool, EvalError>;
}

impl<F> TripletMatcher for F
where
    F: Fn(&Triplet, &GoldTriplet) -> bool + Sync,
{
    fn matches(&self, predicted: &Triplet, gold: &GoldTriplet) -> Result<bool, EvalError> {
        Ok(self(predicted, gold))
    }
}

/// Both entities by [`entity_match`], in order, and the relation mapped onto
/// the gold label.
pub struct RelationMatcher<'m, 'b> {
    pub mapper: &'m SemanticMapper<'b>,
}

impl TripletMatcher for RelationMatcher<'_, '_> {
    fn matches(&self, p: &Triplet, g: &GoldTriplet) -> Result<bool, EvalError> {
        if !entity_match(&g.s, &p.subject) || !entity_match(&g.o, &p.object) {
            return Ok(false);
        }
        Ok(self.mapper.map(&p.relation)?.as_deref() == Some(g.r.as_str()))
    }
}

/// Gold and prediction refer to the same record, when both say which.
fn same_source(p: &Triplet, g: &GoldTriplet) -> bool {
    match (p.source_id(), g.source_id.as_str()) {
        (Some(ps), gs) if !gs.is_empty() => ps == gs,
        _ => true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: f64,
    pub matched: usize,
    pub gold: usize,
    pub predicted: usize,
    pub curve: Vec<CurvePoint>,
}

pub fn f1(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Order in which predictions claim gold items: confidence descending, input
/// order among ties.
pub fn ranking(predicted: &[Triplet]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..predicted.len()).collect();
    idx.sort_by(|&a, &b| predicted[b].confidence.total_cmp(&predicted[a].confidence));
    idx
}

/// Size of a maximum one-to-one matching between gold items and each prefix
/// of [`ranking`]. Entry `k` covers the `k + 1` highest-ranked predictions.
///
/// Predictions are added one at a time and an augmenting path is searched
/// for each, so every prefix count is maximal.
pub fn prefix_matching(
    predicted: &[Triplet],
    gold: &[GoldTriplet],
    matcher: &dyn TripletMatcher,
) -> Result<Vec<usize>, EvalError> {
    let order = ranking(predicted);
    let mut adj: Vec<Vec<usize>> = Vec::with_capacity(order.len());
    for &i in &order {
        let p = &predicted[i];
        let mut row = Vec::new();
        for (j, g) in gold.iter().enumerate() {
            if same_source(p, g) && matcher.matches(p, g)? {
                row.push(j);
            }
        }
        adj.push(row);
    }

    fn augment(k: usize, adj: &[Vec<usize>], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
        for &j in &adj[k] {
            if seen[j] {
                continue;
            }
            seen[j] = true;
            if owner[j].is_none_or(|other| augment(other, adj, owner, seen)) {
                owner[j] = Some(k);
                return true;
            }
        }
        false
    }

    let mut owner = vec![None; gold.len()];
    let mut matched = 0;
    let mut out = Vec::with_capacity(adj.len());
    for k in 0..adj.len() {
        let mut seen = vec![false; gold.len()];
        if augment(k, &adj, &mut owner, &mut seen) {
            matched += 1;
        }
        out.push(matched);
    }
    Ok(out)
}

/// Precision, recall, F1 and the area under the precision-recall curve.
///
/// The curve has one point per distinct confidence, taking every prediction
/// at or above it. The area is trapezoidal over recall from an initial point
/// at recall 0 carrying the first precision.
pub fn prf1_auc(
    predicted: &[Triplet],
    gold: &[GoldTriplet],
    matcher: &dyn TripletMatcher,
) -> Result<Scores, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let order = ranking(predicted);
    let counts = prefix_matching(predicted, gold, matcher)?;
    let n_gold = gold.len() as f64;

    let mut curve = Vec::new();
    let mut matched = 0usize;
    for k in 0..order.len() {
        matched = counts[k];
        let conf = predicted[order[k]].confidence;
        let last_of_level = k + 1 == order.len() || predicted[order[k + 1]].confidence != conf;
        if last_of_level {
            curve.push(CurvePoint {
                threshold: conf,
                precision: matched as f64 / (k + 1) as f64,
                recall: matched as f64 / n_gold,
            });
        }
    }

    let (precision, recall) = if predicted.is_empty() {
        (0.0, 0.0)
    } else {
        (matched as f64 / predicted.len() as f64, matched as f64 / n_gold)
    };
    let auc = match curve.first() {
        None => 0.0,
        Some(first) => {
            let mut prev = (0.0, first.precision);
            let mut area = 0.0;
            for pt in &curve {
                area += (pt.recall - prev.0) * (pt.precision + prev.1) / 2.0;
                prev = (pt.recall, pt.precision);
            }
            area
        }
    };
    Ok(Scores {
        precision,
        recall,
        f1: f1(precision, recall),
        auc,
        matched,
        gold: gold.len(),
        predicted: predicted.len(),
        curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gold(items: &[(&str, &str, &str)]) -> Vec<GoldTriplet> {
        items.iter().map(|&(s, r, o)| GoldTriplet::new("", s, r, o)).collect()
    }

    fn pred(s: &str, r: &str, o: &str, c: f64) -> Triplet {
        Triplet::new(s, r, o).unwrap().with_confidence(c)
    }

    fn exact(p: &Triplet, g: &GoldTriplet) -> bool {
        p.subject == g.s && p.relation == g.r && p.object == g.o
    }

    #[test]
    fn entity_match_examples() {
        assert!(entity_match("Paris", "Paris, France"));
        assert!(entity_match("Paris", "paris"));
        assert!(!entity_match("Paris", "London"));
        assert!(entity_match("Paris, France", "Paris"));
    }

    #[test]
    fn entity_recall_examples() {
        let ts = vec![pred("A", "r", "x", 1.0)];
        assert_eq!(entity_recall(&["A", "B"], &ts).unwrap(), 0.5);
        let ts = vec![pred("A-suffix", "r", "y", 1.0)];
        assert_eq!(entity_recall(&["A"], &ts).unwrap(), 1.0);
        assert_eq!(entity_recall(&["A"], &[]).unwrap(), 0.0);
        assert_eq!(entity_recall::<&str>(&[], &ts), Err(EvalError::EmptyGold));
    }

    #[test]
    fn perfect_single_level() {
        let g = gold(&[("a", "r", "b"), ("c", "r", "d")]);
        let p = vec![pred("a", "r", "b", 1.0), pred("c", "r", "d", 1.0)];
        let s = prf1_auc(&p, &g, &exact).unwrap();
        assert_eq!((s.precision, s.recall, s.f1, s.auc), (1.0, 1.0, 1.0, 1.0));
        assert_eq!(s.curve.len(), 1);
    }

    #[test]
    fn correct_then_wrong() {
        let g = gold(&[("a", "r", "b")]);
        let p = vec![pred("x", "r", "y", 0.5), pred("a", "r", "b", 0.9)];
        let s = prf1_auc(&p, &g, &exact).unwrap();
        assert_eq!((s.precision, s.recall), (0.5, 1.0));
        assert!((s.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.auc, 1.0);
        assert_eq!(s.curve.len(), 2);
    }

    #[test]
    fn wrong_then_correct() {
        let g = gold(&[("a", "r", "b")]);
        let p = vec![pred("x", "r", "y", 0.9), pred("a", "r", "b", 0.5)];
        let s = prf1_auc(&p, &g, &exact).unwrap();
        // (0, 0) -> (0, 0) -> (1, 0.5)
        assert_eq!(s.auc, 0.25);
    }

    #[test]
    fn degenerate_inputs() {
        let g = gold(&[("a", "r", "b")]);
        let s = prf1_auc(&[], &g, &exact).unwrap();
        assert_eq!((s.precision, s.recall, s.f1, s.auc), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(prf1_auc(&[], &[], &exact), Err(EvalError::EmptyGold));
    }

    #[test]
    fn one_to_one() {
        let g = gold(&[("a", "r", "b")]);
        let p = vec![pred("a", "r", "b", 0.9), pred("a", "r", "b", 0.8)];
        let s = prf1_auc(&p, &g, &exact).unwrap();
        assert_eq!((s.matched, s.precision), (1, 0.5));
    }

    #[test]
    fn matching_is_maximum() {
        // the top prediction fits both gold items
        let g = gold(&[("a", "r", "b"), ("a", "r", "c")]);
        let loose = |p: &Triplet, g: &GoldTriplet| p.subject == g.s && (p.object == "*" || p.object == g.o);
        let p = vec![pred("a", "r", "*", 0.9), pred("a", "r", "b", 0.8)];
        let s = prf1_auc(&p, &g, &loose).unwrap();
        assert_eq!(s.matched, 2);
        assert_eq!(s.curve.iter().map(|c| c.recall).collect::<Vec<_>>(), vec![0.5, 1.0]);
    }

    #[test]
    fn source_ids_gate_matches() {
        use crate::extraction::Provenance;
        let g = vec![GoldTriplet::new("s1", "a", "r", "b")];
        let p = vec![pred("a", "r", "b", 1.0).with_provenance(Provenance::direct("s2"))];
        assert_eq!(prf1_auc(&p, &g, &exact).unwrap().matched, 0);
    }

    proptest! {
        #[test]
        fn rates_bounded(correct in proptest::collection::vec((any::<bool>(), 0u8..5), 0..8), n_gold in 1usize..6) {
            let g: Vec<GoldTriplet> = (0..n_gold).map(|i| GoldTriplet::new("", &format!("g{i}"), "r", "o")).collect();
            let p: Vec<Triplet> = correct
                .iter()
                .enumerate()
                .map(|(i, &(ok, c))| {
                    let s = if ok { format!("g{}", i % n_gold) } else { format!("w{i}") };
                    pred(&s, "r", "o", c as f64 / 4.0)
                })
                .collect();
            let s = prf1_auc(&p, &g, &exact).unwrap();
            for v in [s.precision, s.recall, s.f1, s.auc] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            let m = s.precision.min(s.recall);
            prop_assert!(s.f1 <= 2.0 * m / (1.0 + m) + 1e-12);
            prop_assert_eq!(s.f1 == 0.0, s.precision * s.recall == 0.0);
        }

        #[test]
        fn entity_match_symmetric(a in "[a-cA-C ]{0,4}", b in "[a-cA-C ]{0,4}") {
            prop_assert_eq!(entity_match(&a, &b), entity_match(&b, &a));
        }
    }
}
