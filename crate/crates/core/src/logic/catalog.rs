//! Exhaustive formula enumeration up to truth-table equivalence.
//!
//! Every quantity in this module's neighbours (content, information,
//! independence, atomicity) depends on a formula only through its truth
//! table, so a representative per reachable table stands in for the whole
//! equivalence class.

use std::collections::HashMap;

use crate::error::LogicError;
use crate::par;

use super::formula::Formula;
use super::world::{WorldSet, WorldSpace};

/// One shallowest representative per truth table reachable within a depth
/// bound.
#[derive(Debug, Clone)]
pub struct Catalog {
    space: WorldSpace,
    entries: Vec<(Formula, WorldSet)>,
}

impl Catalog {
    /// Enumerates all tables over `space` reachable by formulas of AST depth
    /// at most `max_depth` (atoms have depth 0).
    pub fn build(space: WorldSpace, max_depth: usize) -> Result<Self, LogicError> {
        let mut index: HashMap<WorldSet, usize> = HashMap::new();
        let mut entries: Vec<(Formula, WorldSet)> = Vec::new();
        for v in space.variables() {
            let f = Formula::atom(v.clone());
            let t = space.evaluate(&f)?;
            if !index.contains_key(&t) {
                index.insert(t.clone(), entries.len());
                entries.push((f, t));
            }
        }
        for _ in 0..max_depth {
            let prev = entries.clone();
            let n = prev.len();
            // candidate i encodes (op, lhs, rhs); op 0 is negation of lhs
            let candidates = par::map_range(n * n * 3 + n, |i| {
                if i < n {
                    let (f, t) = &prev[i];
                    return (Formula::not(f.clone()), t.complement());
                }
                let i = i - n;
                let (op, rest) = (i / (n * n), i % (n * n));
                let ((lf, lt), (rf, rt)) = (&prev[rest / n], &prev[rest % n]);
                match op {
                    0 => (Formula::and(lf.clone(), rf.clone()), lt.intersect(rt)),
                    1 => (Formula::or(lf.clone(), rf.clone()), lt.union(rt)),
                    _ => (
                        Formula::implies(lf.clone(), rf.clone()),
                        lt.complement().union(rt),
                    ),
                }
            });
            let before = entries.len();
            for (f, t) in candidates {
                if !index.contains_key(&t) {
                    index.insert(t.clone(), entries.len());
                    entries.push((f, t));
                }
            }
            if entries.len() == before {
                break;
            }
        }
        Ok(Catalog { space, entries })
    }

    pub fn space(&self) -> &WorldSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(Formula, WorldSet)] {
        &self.entries
    }

    pub fn formulas(&self) -> impl Iterator<Item = &Formula> {
        self.entries.iter().map(|(f, _)| f)
    }
}

/// Every formula (not up to equivalence) over `vars` with depth at most
/// `max_depth`. Grows doubly exponentially; intended for depth ≤ 2.
pub fn all_formulas(vars: &[&str], max_depth: usize) -> Vec<Formula> {
    let mut level: Vec<Formula> = vars.iter().map(|v| Formula::atom(*v)).collect();
    for _ in 0..max_depth {
        let mut next = level.clone();
        for x in &level {
            next.push(Formula::not(x.clone()));
        }
        for x in &level {
            for y in &level {
                next.push(Formula::and(x.clone(), y.clone()));
                next.push(Formula::or(x.clone(), y.clone()));
                next.push(Formula::implies(x.clone(), y.clone()));
            }
        }
        level = next;
    }
    level
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(all_formulas(&["A", "B", "C"], 0).len(), 3);
        assert_eq!(all_formulas(&["A", "B", "C"], 1).len(), 33);
        assert_eq!(all_formulas(&["A", "B", "C"], 2).len(), 3333);
    }

    #[test]
    fn catalog_covers_enumeration() {
        let space = WorldSpace::new(["A", "B", "C"]).unwrap();
        let cat = Catalog::build(space.clone(), 2).unwrap();
        let tables: std::collections::HashSet<_> =
            cat.entries().iter().map(|(_, t)| t.clone()).collect();
        for f in all_formulas(&["A", "B", "C"], 2) {
            assert!(tables.contains(&space.evaluate(&f).unwrap()), "{f}");
        }
        for (f, t) in cat.entries() {
            assert!(f.depth() <= 2);
            assert_eq!(&space.evaluate(f).unwrap(), t);
        }
    }

    #[test]
    fn two_variable_catalog_is_complete() {
        // every boolean function of two variables is reachable by depth 3
        let cat = Catalog::build(WorldSpace::new(["A", "B"]).unwrap(), 3).unwrap();
        assert_eq!(cat.len(), 16);
    }
}
