use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::text::normalize_text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Origin {
    Direct,
    Prop,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::Direct => "Direct",
            Origin::Prop => "Prop",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub source_id: String,
    pub origin: Origin,
    /// The atomic proposition the triplet came from, for `Prop` origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proposition: Option<String>,
}

impl Provenance {
    pub fn direct(source_id: impl Into<String>) -> Self {
        Provenance {
            source_id: source_id.into(),
            origin: Origin::Direct,
            proposition: None,
        }
    }

    pub fn prop(source_id: impl Into<String>, proposition: impl Into<String>) -> Self {
        Provenance {
            source_id: source_id.into(),
            origin: Origin::Prop,
            proposition: Some(proposition.into()),
        }
    }
}

/// A `(subject, relation, object)` fact. Slots are stored normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triplet {
    pub subject: String,
    pub relation: String,
    pub object: String,
    pub confidence: f64,
    pub provenance: Vec<Provenance>,
}

pub type TripletKey = (String, String, String);

impl Triplet {
    /// Normalizes the slots; `None` if any slot is empty afterwards.
    pub fn new(subject: &str, relation: &str, object: &str) -> Option<Self> {
        let (s, r, o) = (normalize_text(subject), normalize_text(relation), normalize_text(object));
        if s.is_empty() || r.is_empty() || o.is_empty() {
            return None;
        }
        Some(Triplet {
            subject: s,
            relation: r,
            object: o,
            confidence: 1.0,
            provenance: Vec::new(),
        })
    }

    pub fn with_confidence(mut self, confidence: f64) -> Self {
        self.confidence = confidence.clamp(0.0, 1.0);
        self
    }

    pub fn with_provenance(mut self, p: Provenance) -> Self {
        self.provenance.push(p);
        self
    }

    pub fn key(&self) -> TripletKey {
        (self.subject.clone(), self.relation.clone(), self.object.clone())
    }

    pub fn source_id(&self) -> Option<&str> {
        self.provenance.first().map(|p| p.source_id.as_str())
    }
}

impl fmt::Display for Triplet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.subject, self.relation, self.object)
    }
}

/// Merges triplets with equal `(s, r, o)`: the highest confidence wins and
/// provenance records are unioned. Output is sorted by key.
pub fn dedup(triplets: impl IntoIterator<Item = Triplet>) -> Vec<Triplet> {
    let mut merged: BTreeMap<TripletKey, Triplet> = BTreeMap::new();
    for t in triplets {
        match merged.get_mut(&t.key()) {
            Some(existing) => {
                existing.confidence = existing.confidence.max(t.confidence);
                existing.provenance.extend(t.provenance);
            }
            None => {
                merged.insert(t.key(), t);
            }
        }
    }
    merged
        .into_values()
        .map(|mut t| {
            t.provenance.sort();
            t.provenance.dedup();
            t
        })
        .collect()
}

/// Flat JSONL form of a triplet. The first provenance record fills the flat
/// fields; further records, if any, go to `provenance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletRecord {
    pub s: String,
    pub r: String,
    pub o: String,
    #[serde(default = "one")]
    pub confidence: f64,
    #[serde(default = "direct")]
    pub origin: Origin,
    #[serde(default)]
    pub source_id: String,
    #[serde(default)]
    pub proposition: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub provenance: Vec<Provenance>,
}

fn one() -> f64 {
    1.0
}

fn direct() -> Origin {
    Origin::Direct
}

impl From<&Triplet> for TripletRecord {
    fn from(t: &Triplet) -> Self {
        let first = t
            .provenance
            .first()
            .cloned()
            .unwrap_or_else(|| Provenance::direct(""));
        TripletRecord {
            s: t.subject.clone(),
            r: t.relation.clone(),
            o: t.object.clone(),
            confidence: t.confidence,
            origin: first.origin,
            source_id: first.source_id,
            proposition: first.proposition,
            provenance: if t.provenance.len() > 1 {
                t.provenance[1..].to_vec()
            } else {
                Vec::new()
            },
        }
    }
}

impl TripletRecord {
    /// `None` when a slot is empty after normalization.
    pub fn into_triplet(self) -> Option<Triplet> {
        let mut t = Triplet::new(&self.s, &self.r, &self.o)?.with_confidence(self.confidence);
        t.provenance.push(Provenance {
            source_id: self.source_id,
            origin: self.origin,
            proposition: self.proposition,
        });
        t.provenance.extend(self.provenance);
        Some(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn construction_normalizes() {
        let t = Triplet::new(" Šafov ", "is  located in", "Znojmo District").unwrap();
        assert_eq!(t.key(), ("Šafov".into(), "is located in".into(), "Znojmo District".into()));
        assert_eq!(t.confidence, 1.0);
        assert!(Triplet::new("a", " ", "c").is_none());
    }

    #[test]
    fn dedup_keeps_max_confidence_and_both_provenances() {
        let a = Triplet::new("a", "b", "c").unwrap().with_confidence(0.4).with_provenance(Provenance::direct("1"));
        let b = Triplet::new("a", "b", "c").unwrap().with_confidence(0.9).with_provenance(Provenance::prop("1", "p"));
        let out = dedup([a, b]);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].confidence, 0.9);
        assert_eq!(out[0].provenance.len(), 2);
        assert_eq!(out[0].provenance[0].origin, Origin::Direct);
    }

    #[test]
    fn record_roundtrip() {
        let t = Triplet::new("a", "b", "c")
            .unwrap()
            .with_confidence(0.5)
            .with_provenance(Provenance::direct("s1"))
            .with_provenance(Provenance::prop("s1", "a b c"));
        let rec = TripletRecord::from(&t);
        let json = serde_json::to_value(&rec).unwrap();
        assert_eq!(json["s"], "a");
        assert_eq!(json["origin"], "Direct");
        assert_eq!(json["source_id"], "s1");
        assert!(json["proposition"].is_null());
        let back: TripletRecord = serde_json::from_value(json).unwrap();
        assert_eq!(back.into_triplet().unwrap(), t);
        let minimal: TripletRecord = serde_json::from_str(r#"{"s":"x","r":"y","o":"z"}"#).unwrap();
        assert_eq!(minimal.confidence, 1.0);
    }

    proptest! {
        #[test]
        fn dedup_is_idempotent(items in proptest::collection::vec(
            (0u8..3, 0u8..2, 0u8..3, 0.0f64..1.0, any::<bool>()), 0..20)) {
            let ts: Vec<Triplet> = items.iter().map(|&(s, r, o, c, d)| {
                let p = if d { Provenance::direct("x") } else { Provenance::prop("x", "p") };
                Triplet::new(&s.to_string(), &r.to_string(), &o.to_string()).unwrap()
                    .with_confidence(c).with_provenance(p)
            }).collect();
            let once = dedup(ts.clone());
            let twice = dedup(once.clone());
            prop_assert_eq!(&once, &twice);
            let mut keys: Vec<_> = ts.iter().map(Triplet::key).collect();
            keys.sort();
            keys.dedup();
            prop_assert_eq!(once.iter().map(Triplet::key).collect::<Vec<_>>(), keys);
        }
    }
}
