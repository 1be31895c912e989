use std::cmp::Ordering;
use std::fmt;

use crate::error::LogicError;

use super::formula::Formula;
use super::world::{WorldSet, WorldSpace};

/// Information content in bits: a finite nonnegative value or `+∞`.
///
/// `+∞` is reached exactly by contradictions. Negative infinity is never
/// produced, so it is not representable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InfoValue {
    Bits(f64),
    Infinite,
}

impl InfoValue {
    pub fn is_finite(&self) -> bool {
        matches!(self, InfoValue::Bits(_))
    }

    pub fn bits(&self) -> Option<f64> {
        match *self {
            InfoValue::Bits(b) => Some(b),
            InfoValue::Infinite => None,
        }
    }

    pub fn as_f64(&self) -> f64 {
        self.bits().unwrap_or(f64::INFINITY)
    }

    /// `-log2(satisfying / total)`.
    pub fn from_counts(satisfying: usize, total: usize) -> Self {
        assert!(total > 0 && satisfying <= total);
        if satisfying == 0 {
            InfoValue::Infinite
        } else {
            // exact for powers of two, and 0.0 (not -0.0) for tautologies
            InfoValue::Bits((total as f64).log2() - (satisfying as f64).log2())
        }
    }
}

impl Eq for InfoValue {}

impl PartialOrd for InfoValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for InfoValue {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (InfoValue::Infinite, InfoValue::Infinite) => Ordering::Equal,
            (InfoValue::Infinite, _) => Ordering::Greater,
            (_, InfoValue::Infinite) => Ordering::Less,
            (InfoValue::Bits(a), InfoValue::Bits(b)) => a.total_cmp(b),
        }
    }
}

impl fmt::Display for InfoValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InfoValue::Bits(b) => write!(f, "{b}"),
            InfoValue::Infinite => f.write_str("+inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CutClass {
    /// The extracted part carries strictly less information than the whole.
    Safe,
    /// The extracted part carries at least as much information as the whole.
    Bad,
    NotSubformula,
}

/// Worlds of `space` in which `phi` holds.
pub fn content(phi: &Formula, space: &WorldSpace) -> Result<WorldSet, LogicError> {
    space.evaluate(phi)
}

pub fn information(phi: &Formula, space: &WorldSpace) -> Result<InfoValue, LogicError> {
    let cont = content(phi, space)?;
    Ok(InfoValue::from_counts(cont.len(), space.num_worlds()))
}

/// True iff all four joint truth combinations of `a` and `b` occur in some
/// world of `space`.
pub fn is_independent(a: &Formula, b: &Formula, space: &WorldSpace) -> Result<bool, LogicError> {
    let ca = content(a, space)?;
    let cb = content(b, space)?;
    Ok(independent_sets(&ca, &cb))
}

pub(crate) fn independent_sets(ca: &WorldSet, cb: &WorldSet) -> bool {
    let na = ca.complement();
    let nb = cb.complement();
    !ca.intersect(cb).is_empty()
        && !ca.intersect(&nb).is_empty()
        && !na.intersect(cb).is_empty()
        && !na.intersect(&nb).is_empty()
}

/// Classifies cutting `phi` down to `psi`.
///
/// `psi` must be a structural subformula of `phi` (`phi` itself included).
/// Information is compared through content sizes over the shared space, so
/// the verdict never depends on floating-point rounding.
pub fn classify_cut(phi: &Formula, psi: &Formula, space: &WorldSpace) -> Result<CutClass, LogicError> {
    let phi_cont = content(phi, space)?;
    let psi_cont = content(psi, space)?;
    if !phi.has_subformula(psi) {
        return Ok(CutClass::NotSubformula);
    }
    // I(phi) > I(psi)  <=>  |Cont(phi)| < |Cont(psi)|
    Ok(if phi_cont.len() < psi_cont.len() {
        CutClass::Safe
    } else {
        CutClass::Bad
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_formula;

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn space(vars: &[&str]) -> WorldSpace {
        WorldSpace::new(vars.iter().copied()).unwrap()
    }

    #[test]
    fn content_examples() {
        let s = space(&["A"]);
        let c = content(&f("A"), &s).unwrap();
        assert_eq!(c.iter().collect::<Vec<_>>(), vec![1]);
        assert_eq!(s.world(1).get("A"), Some(true));
        assert!(content(&f("A & !A"), &space(&["A", "B", "C"])).unwrap().is_empty());
        assert_eq!(content(&f("A | B"), &space(&["A", "B"])).unwrap().len(), 3);
        assert!(matches!(
            content(&f("A | Z"), &space(&["A"])),
            Err(LogicError::UnknownVariable(v)) if v == "Z"
        ));
    }

    #[test]
    fn information_examples() {
        let s = space(&["A", "B"]);
        assert_eq!(information(&f("A & !A"), &s).unwrap(), InfoValue::Infinite);
        assert_eq!(information(&f("A | !A"), &s).unwrap(), InfoValue::Bits(0.0));
        assert_eq!(information(&f("A & B"), &s).unwrap(), InfoValue::Bits(2.0));
        let or = information(&f("A | B"), &s).unwrap().bits().unwrap();
        assert!((or - (4.0f64 / 3.0).log2()).abs() < 1e-15);
        assert!(information(&f("C"), &s).is_err());
    }

    #[test]
    fn infinity_dominates() {
        assert!(InfoValue::Infinite > InfoValue::Bits(1e300));
        assert!(InfoValue::Bits(0.0) < InfoValue::Bits(0.5));
        assert_eq!(InfoValue::Infinite.as_f64(), f64::INFINITY);
        assert_eq!(InfoValue::Infinite.to_string(), "+inf");
    }

    #[test]
    fn independence_examples() {
        let s = space(&["A", "B"]);
        assert!(is_independent(&f("A"), &f("B"), &s).unwrap());
        assert!(!is_independent(&f("A"), &f("A | B"), &s).unwrap());
        assert!(!is_independent(&f("A"), &f("!A"), &s).unwrap());
    }

    #[test]
    fn cut_examples() {
        let s = space(&["A", "B"]);
        assert_eq!(classify_cut(&f("A & B"), &f("A"), &s).unwrap(), CutClass::Safe);
        assert_eq!(classify_cut(&f("A | B"), &f("A"), &s).unwrap(), CutClass::Bad);
        assert_eq!(classify_cut(&f("A -> B"), &f("A"), &s).unwrap(), CutClass::Bad);
        assert_eq!(classify_cut(&f("A & B"), &f("A & B"), &s).unwrap(), CutClass::Bad);
        assert_eq!(
            classify_cut(&f("A & B"), &f("B & A"), &s).unwrap(),
            CutClass::NotSubformula
        );
        assert_eq!(classify_cut(&f("A & !A"), &f("A"), &s).unwrap(), CutClass::Safe);
    }

    #[test]
    fn monotone_in_content_size() {
        let s = space(&["A", "B", "C"]);
        let fs = ["A", "A & B", "A | B | C", "A & B & C", "A & !A", "A | !A", "A -> B"];
        for x in fs {
            for y in fs {
                let (cx, cy) = (content(&f(x), &s).unwrap(), content(&f(y), &s).unwrap());
                if cx.len() < cy.len() {
                    assert!(information(&f(x), &s).unwrap() > information(&f(y), &s).unwrap());
                }
            }
        }
    }
}
