use crate::error::LogicError;
use crate::par;

use super::formula::Formula;
use super::world::{WorldSet, WorldSpace, MAX_VARIABLES};

/// Largest variable count for which [`is_atomic`] enumerates candidate clauses
/// (3^10 = 59049 candidates).
pub const MAX_CLAUSE_SEARCH_VARIABLES: usize = 10;

fn is_literal(f: &Formula) -> bool {
    match f {
        Formula::Atom(_) => true,
        Formula::Not(c) => matches!(**c, Formula::Atom(_)),
        _ => false,
    }
}

/// Structural test: `phi` is a literal or a `|`-tree of literals.
pub fn is_clause(phi: &Formula) -> bool {
    match phi {
        Formula::Or(l, r) => is_clause(l) && is_clause(r),
        other => is_literal(other),
    }
}

/// Top-level `&` operands, left to right.
pub fn conjuncts(phi: &Formula) -> Vec<&Formula> {
    match phi {
        Formula::And(l, r) => {
            let mut out = conjuncts(l);
            out.extend(conjuncts(r));
            out
        }
        other => vec![other],
    }
}

/// Worlds falsifying a clause form a cube: the assignments that fix every
/// mentioned variable against its literal.
fn cube(columns: &[WorldSet], k: usize, fixed: &[(usize, bool)]) -> WorldSet {
    fixed.iter().fold(WorldSet::full(k), |acc, &(j, value)| {
        if value {
            acc.intersect(&columns[j])
        } else {
            acc.intersect(&columns[j].complement())
        }
    })
}

/// True iff `phi` is logically equivalent to some nonempty clause over its own
/// variables. Decided by enumerating all 3^k candidate clauses.
///
/// `space` only fixes the scope check; the search runs over `phi`'s variables.
pub fn is_atomic(phi: &Formula, space: &WorldSpace) -> Result<bool, LogicError> {
    space.check_scope(phi)?;
    let own = WorldSpace::new(phi.variables())?;
    let k = own.num_variables();
    if k > MAX_CLAUSE_SEARCH_VARIABLES {
        return Err(LogicError::TooManyVariables {
            count: k,
            cap: MAX_CLAUSE_SEARCH_VARIABLES,
        });
    }
    let falsifying = own.evaluate(phi)?.complement();
    let columns: Vec<WorldSet> = (0..k).map(|j| WorldSet::column(k, j)).collect();
    let candidates = 3usize.pow(k as u32);
    // candidate c: base-3 digit j is 0 = absent, 1 = positive, 2 = negative.
    // c = 0 is the empty clause and is skipped.
    Ok(par::any_range(candidates - 1, |c| {
        let mut code = c + 1;
        let mut fixed = Vec::with_capacity(k);
        for j in 0..k {
            match code % 3 {
                // positive literal is false when the variable is false
                1 => fixed.push((j, false)),
                2 => fixed.push((j, true)),
                _ => {}
            }
            code /= 3;
        }
        cube(&columns, k, &fixed) == falsifying
    }))
}

/// Conjunctive normal form built from the falsifying worlds of the truth
/// table.
///
/// Each uncovered falsifying world is widened greedily (dropping variables in
/// order while the cube stays inside the falsifying set) into one clause.
/// Clauses are ordered variable by variable with negative before positive
/// before absent, and print their negative literals first. A tautology becomes `V | !V` and a
/// contradiction `V & !V`, with `V` the first variable.
pub fn to_cnf(phi: &Formula) -> Result<Formula, LogicError> {
    let space = WorldSpace::new(phi.variables())?;
    let vars = space.variables();
    let k = vars.len();
    let table = space.evaluate(phi)?;
    let first = Formula::atom(vars[0].clone());
    if table.is_full() {
        return Ok(Formula::or(first.clone(), Formula::not(first)));
    }
    if table.is_empty() {
        return Ok(Formula::and(first.clone(), Formula::not(first)));
    }

    let falsifying = table.complement();
    let columns: Vec<WorldSet> = (0..k).map(|j| WorldSet::column(k, j)).collect();
    let mut covered = WorldSet::empty(k);
    let mut clauses: Vec<Vec<(usize, bool)>> = Vec::new();
    for w in falsifying.iter() {
        if covered.contains(w) {
            continue;
        }
        let mut fixed: Vec<(usize, bool)> = (0..k).map(|j| (j, (w >> j) & 1 == 1)).collect();
        let mut j = 0;
        while j < fixed.len() {
            let mut trial = fixed.clone();
            trial.remove(j);
            if cube(&columns, k, &trial).is_subset(&falsifying) {
                fixed = trial;
            } else {
                j += 1;
            }
        }
        covered = covered.union(&cube(&columns, k, &fixed));
        // literal polarity: falsified when the variable takes `value`
        clauses.push(fixed.into_iter().map(|(j, value)| (j, !value)).collect());
    }
    // per variable: negative < positive < absent
    clauses.sort_by_key(|c| {
        (0..k)
            .map(|j| match c.iter().find(|&&(v, _)| v == j) {
                Some(&(_, false)) => 0u8,
                Some(&(_, true)) => 1,
                None => 2,
            })
            .collect::<Vec<_>>()
    });
    clauses.dedup();
    // negative literals first, each group in variable order
    for c in &mut clauses {
        c.sort_by_key(|&(j, positive)| (positive, j));
    }

    let lit = |(j, positive): (usize, bool)| {
        let a = Formula::atom(vars[j].clone());
        if positive {
            a
        } else {
            Formula::not(a)
        }
    };
    let clause_formula = |c: &Vec<(usize, bool)>| {
        c.iter()
            .copied()
            .map(lit)
            .reduce(Formula::or)
            .expect("nonempty clause")
    };
    Ok(clauses
        .iter()
        .map(clause_formula)
        .reduce(Formula::and)
        .expect("at least one falsifying world"))
}

/// Truth-table equivalence over the union of both variable sets.
pub fn equivalent(a: &Formula, b: &Formula) -> Result<bool, LogicError> {
    let space = WorldSpace::spanning([a, b])?;
    debug_assert!(space.num_variables() <= MAX_VARIABLES);
    Ok(space.evaluate(a)? == space.evaluate(b)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::formula::tests::arb_formula;
    use crate::logic::{information, parse_formula};
    use proptest::prelude::*;

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn own(phi: &Formula) -> WorldSpace {
        WorldSpace::new(phi.variables()).unwrap()
    }

    #[test]
    fn clause_shapes() {
        assert!(is_clause(&f("A | !B | C")));
        assert!(is_clause(&f("A")));
        assert!(is_clause(&f("!A")));
        assert!(!is_clause(&f("A & B")));
        assert!(!is_clause(&f("!(A & B)")));
        assert!(!is_clause(&f("!!A")));
        assert!(!is_clause(&f("A -> B")));
    }

    #[test]
    fn atomic_examples() {
        for (src, expected) in [
            ("A | B", true),
            ("A & B", false),
            ("!(A & B)", true),
            ("A -> B", true),
            ("A", true),
            ("A | !A", false),
            ("A & !A", false),
            ("A | (B & !B)", true),
            ("(A -> B) & (B -> A)", false),
        ] {
            let phi = f(src);
            assert_eq!(is_atomic(&phi, &own(&phi)).unwrap(), expected, "{src}");
        }
    }

    #[test]
    fn atomic_caps_and_scope() {
        let big = (0..11).map(|i| format!("v{i}")).collect::<Vec<_>>().join(" | ");
        let phi = f(&big);
        assert!(matches!(
            is_atomic(&phi, &own(&phi)),
            Err(LogicError::TooManyVariables { count: 11, cap: 10 })
        ));
        let ten = (0..10).map(|i| format!("v{i}")).collect::<Vec<_>>().join(" | ");
        let phi = f(&ten);
        assert!(is_atomic(&phi, &own(&phi)).unwrap());
        let small = WorldSpace::new(["A"]).unwrap();
        assert!(is_atomic(&f("A | B"), &small).is_err());
    }

    #[test]
    fn cnf_examples() {
        assert_eq!(to_cnf(&f("A -> B")).unwrap().to_string(), "!A | B");
        assert_eq!(to_cnf(&f("A & B")).unwrap().to_string(), "A & B");
        let bicond = to_cnf(&f("(A -> B) & (B -> A)")).unwrap();
        assert_eq!(bicond.to_string(), "(!A | B) & (!B | A)");
        assert_eq!(to_cnf(&f("!(A & B) & C")).unwrap().to_string(), "(!A | !B) & C");
        assert_eq!(to_cnf(&f("B | !B")).unwrap().to_string(), "B | !B");
        assert_eq!(to_cnf(&f("C & !C & A")).unwrap().to_string(), "C & !C");
    }

    #[test]
    fn equivalence_examples() {
        assert!(equivalent(&f("A -> B"), &f("!A | B")).unwrap());
        assert!(!equivalent(&f("A"), &f("B")).unwrap());
        assert!(equivalent(&f("A & (A | B)"), &f("A")).unwrap());
    }

    proptest! {
        #[test]
        fn cnf_is_equivalent_conjunction_of_clauses(phi in arb_formula()) {
            let cnf = to_cnf(&phi).unwrap();
            prop_assert!(equivalent(&phi, &cnf).unwrap());
            for c in conjuncts(&cnf) {
                prop_assert!(is_clause(c));
            }
        }

        #[test]
        fn atomic_iff_single_clause_cnf_and_not_tautology(phi in arb_formula()) {
            let space = own(&phi);
            let atomic = is_atomic(&phi, &space).unwrap();
            let table = space.evaluate(&phi).unwrap();
            let cnf = to_cnf(&phi).unwrap();
            let single = conjuncts(&cnf).len() == 1;
            prop_assert_eq!(atomic, single && !table.is_full());
            if atomic {
                prop_assert!(information(&phi, &space).unwrap().is_finite());
            }
        }

        #[test]
        fn multi_clause_cnf_has_safe_conjunct_cuts(phi in arb_formula()) {
            let cnf = to_cnf(&phi).unwrap();
            let parts = conjuncts(&cnf);
            if parts.len() >= 2 {
                let space = own(&phi);
                let whole = space.evaluate(&cnf).unwrap().len();
                for c in parts {
                    // each prime clause is strictly weaker than the conjunction
                    prop_assert!(whole < space.evaluate(c).unwrap().len());
                }
            }
        }
    }
}
