use crate::error::LogicError;

use super::formula::Formula;

/// Hard limit on the number of variables in a world space (2^16 worlds).
pub const MAX_VARIABLES: usize = 16;

/// All truth assignments over an ordered list of variables.
///
/// World `w` assigns variable `j` the value of bit `j` of `w`, so worlds are
/// never materialized; sets of worlds are bitsets ([`WorldSet`]).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WorldSpace {
    variables: Vec<String>,
}

impl WorldSpace {
    pub fn new<I, S>(variables: I) -> Result<Self, LogicError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vars: Vec<String> = Vec::new();
        for v in variables {
            let v = v.into();
            if vars.contains(&v) {
                return Err(LogicError::DuplicateVariable(v));
            }
            vars.push(v);
        }
        if vars.len() > MAX_VARIABLES {
            return Err(LogicError::TooManyVariables {
                count: vars.len(),
                cap: MAX_VARIABLES,
            });
        }
        Ok(WorldSpace { variables: vars })
    }

    /// The space spanned by the union of the formulas' variables, in
    /// first-occurrence order.
    pub fn spanning<'a, I>(formulas: I) -> Result<Self, LogicError>
    where
        I: IntoIterator<Item = &'a Formula>,
    {
        let mut vars: Vec<String> = Vec::new();
        for f in formulas {
            for v in f.variables() {
                if !vars.contains(&v) {
                    vars.push(v);
                }
            }
        }
        WorldSpace::new(vars)
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_worlds(&self) -> usize {
        1usize << self.variables.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    pub fn world(&self, index: usize) -> World<'_> {
        assert!(index < self.num_worlds(), "world index out of range");
        World { space: self, index }
    }

    pub fn worlds(&self) -> impl Iterator<Item = World<'_>> {
        (0..self.num_worlds()).map(move |index| World { space: self, index })
    }

    /// Fails with [`LogicError::UnknownVariable`] if `f` mentions a variable
    /// outside this space.
    pub fn check_scope(&self, f: &Formula) -> Result<(), LogicError> {
        match f.variables().into_iter().find(|v| self.index_of(v).is_none()) {
            Some(v) => Err(LogicError::UnknownVariable(v)),
            None => Ok(()),
        }
    }

    /// Truth table of `f` over this space.
    pub fn evaluate(&self, f: &Formula) -> Result<WorldSet, LogicError> {
        self.check_scope(f)?;
        Ok(self.eval_unchecked(f))
    }

    fn eval_unchecked(&self, f: &Formula) -> WorldSet {
        match f {
            Formula::Atom(name) => {
                let j = self.index_of(name).expect("scope checked");
                WorldSet::column(self.num_variables(), j)
            }
            Formula::Not(c) => self.eval_unchecked(c).complement(),
            Formula::And(l, r) => self.eval_unchecked(l).intersect(&self.eval_unchecked(r)),
            Formula::Or(l, r) => self.eval_unchecked(l).union(&self.eval_unchecked(r)),
            Formula::Implies(l, r) => self
                .eval_unchecked(l)
                .complement()
                .union(&self.eval_unchecked(r)),
        }
    }
}

/// One truth assignment of a [`WorldSpace`].
#[derive(Debug, Clone, Copy)]
pub struct World<'a> {
    space: &'a WorldSpace,
    index: usize,
}

impl<'a> World<'a> {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn value(&self, var: usize) -> bool {
        (self.index >> var) & 1 == 1
    }

    pub fn get(&self, name: &str) -> Option<bool> {
        self.space.index_of(name).map(|j| self.value(j))
    }

    pub fn assignment(&self) -> Vec<(&'a str, bool)> {
        self.space
            .variables
            .iter()
            .enumerate()
            .map(|(j, v)| (v.as_str(), self.value(j)))
            .collect()
    }
}

/// A set of worlds of a `k`-variable space, stored as a `2^k`-bit bitset.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WorldSet {
    k: usize,
    words: Vec<u64>,
}

impl WorldSet {
    fn num_words(k: usize) -> usize {
        (1usize << k).div_ceil(64)
    }

    fn tail_mask(k: usize) -> u64 {
        let bits = 1usize << k;
        if bits.is_multiple_of(64) {
            u64::MAX
        } else {
            (1u64 << bits) - 1
        }
    }

    pub fn empty(k: usize) -> Self {
        WorldSet {
            k,
            words: vec![0; Self::num_words(k)],
        }
    }

    pub fn full(k: usize) -> Self {
        let mut s = WorldSet {
            k,
            words: vec![u64::MAX; Self::num_words(k)],
        };
        s.mask_tail();
        s
    }

    /// Worlds in which variable `j` is true.
    pub fn column(k: usize, j: usize) -> Self {
        let mut s = Self::empty(k);
        if j < 6 {
            // period 2^(j+1) pattern inside each word
            let mut pattern = 0u64;
            for bit in 0..64 {
                if (bit >> j) & 1 == 1 {
                    pattern |= 1 << bit;
                }
            }
            s.words.iter_mut().for_each(|w| *w = pattern);
        } else {
            let stride = 1usize << (j - 6);
            for (i, w) in s.words.iter_mut().enumerate() {
                if (i / stride) % 2 == 1 {
                    *w = u64::MAX;
                }
            }
        }
        s.mask_tail();
        s
    }

    /// Builds a set from a predicate over world indices.
    pub fn from_fn(k: usize, mut pred: impl FnMut(usize) -> bool) -> Self {
        let mut s = Self::empty(k);
        for w in 0..(1usize << k) {
            if pred(w) {
                s.insert(w);
            }
        }
        s
    }

    fn mask_tail(&mut self) {
        let m = Self::tail_mask(self.k);
        if let Some(last) = self.words.last_mut() {
            *last &= m;
        }
    }

    pub fn num_variables(&self) -> usize {
        self.k
    }

    pub fn insert(&mut self, w: usize) {
        self.words[w / 64] |= 1 << (w % 64);
    }

    pub fn contains(&self, w: usize) -> bool {
        (self.words[w / 64] >> (w % 64)) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.len() == 1usize << self.k
    }

    pub fn complement(&self) -> Self {
        let mut s = WorldSet {
            k: self.k,
            words: self.words.iter().map(|w| !w).collect(),
        };
        s.mask_tail();
        s
    }

    pub fn intersect(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a & b)
    }

    pub fn union(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a | b)
    }

    fn zip(&self, other: &Self, op: impl Fn(u64, u64) -> u64) -> Self {
        assert_eq!(self.k, other.k, "world sets from different spaces");
        WorldSet {
            k: self.k,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).all(|(&a, &b)| a & !b == 0)
    }

    /// World indices in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..(1usize << self.k)).filter(move |&w| self.contains(w))
    }
}
