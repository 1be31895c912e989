//! Executable semantic-information calculus over propositional formulas.
//!
//! Information content is `-log2(|Cont(φ)| / |W|)` under the uniform counting
//! measure on the worlds of a [`WorldSpace`]. Cuts, independence and atomicity
//! are all decided by truth-table enumeration.

pub mod catalog;
mod formula;
mod info;
mod normal;
mod world;

pub use catalog::Catalog;
pub use formula::{parse_formula, Formula};
pub use info::{classify_cut, content, information, is_independent, CutClass, InfoValue};
pub use normal::{conjuncts, equivalent, is_atomic, is_clause, to_cnf, MAX_CLAUSE_SEARCH_VARIABLES};
pub use world::{World, WorldSet, WorldSpace, MAX_VARIABLES};

/// Summary printed by `atomkg logic eval`.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub formula: Formula,
    pub variables: Vec<String>,
    pub content_size: usize,
    pub worlds: usize,
    pub information: InfoValue,
    pub atomic: bool,
    pub cnf: Formula,
}

/// Parses `text` and evaluates it over its own variables.
pub fn evaluate(text: &str) -> Result<Evaluation, crate::error::LogicError> {
    let formula = parse_formula(text)?;
    let space = WorldSpace::new(formula.variables())?;
    let cont = content(&formula, &space)?;
    Ok(Evaluation {
        variables: space.variables().to_vec(),
        content_size: cont.len(),
        worlds: space.num_worlds(),
        information: information(&formula, &space)?,
        atomic: is_atomic(&formula, &space)?,
        cnf: to_cnf(&formula)?,
        formula,
    })
}
