//! Graded-lexicographic monomial bases shared by all jets of a given shape.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;

/// Exponent tuple of one monomial in `n` variables.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    exps: Vec<u32>,
}

impl MultiIndex {
    pub fn new(exps: Vec<u32>) -> Self {
        Self { exps }
    }

    /// The zero tuple (constant monomial) in `n` variables.
    pub fn zero(n: usize) -> Self {
        Self { exps: vec![0; n] }
    }

    /// The unit tuple for variable `var`.
    pub fn unit(n: usize, var: usize) -> Self {
        assert!(var < n, "variable index {var} out of range for n={n}");
        let mut exps = vec![0; n];
        exps[var] = 1;
        Self { exps }
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    /// Total degree.
    pub fn degree(&self) -> usize {
        self.exps.iter().map(|&e| e as usize).sum()
    }

    pub fn exp(&self, var: usize) -> u32 {
        self.exps[var]
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exps
    }

    /// Componentwise sum (monomial product).
    pub fn sum(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.len(), other.len());
        MultiIndex {
            exps: self
                .exps
                .iter()
                .zip(&other.exps)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Decrement of variable `var`; `None` when its exponent is zero.
    pub fn lowered(&self, var: usize) -> Option<MultiIndex> {
        if self.exps[var] == 0 {
            return None;
        }
        let mut exps = self.exps.clone();
        exps[var] -= 1;
        Some(MultiIndex { exps })
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.exps)
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Basis iteration order: total degree ascending, then earlier variables
/// dominant within a degree block, e.g. for n=2, d=2: (2,0), (1,1), (0,2).
impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.exps.cmp(&self.exps))
    }
}

/// All monomials in `n` variables of total degree <= `degree`, in the fixed
/// order used for jet coefficient storage.
pub struct Basis {
    n: usize,
    degree: usize,
    exps: Vec<MultiIndex>,
    offsets: Vec<usize>,
    position: HashMap<MultiIndex, usize>,
}

impl Basis {
    fn build(n: usize, degree: usize) -> Basis {
        assert!(n >= 1, "at least one variable required");
        let mut exps = Vec::new();
        let mut offsets = Vec::with_capacity(degree + 2);
        for d in 0..=degree {
            offsets.push(exps.len());
            let mut current = vec![0u32; n];
            emit_degree(&mut exps, &mut current, 0, d as u32);
        }
        offsets.push(exps.len());
        let position = exps
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        Basis {
            n,
            degree,
            exps,
            offsets,
            position,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of stored monomials, i.e. C(n + degree, n).
    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn monomial(&self, idx: usize) -> &MultiIndex {
        &self.exps[idx]
    }

    pub fn monomials(&self) -> &[MultiIndex] {
        &self.exps
    }

    /// Slice of positions covering the degree-`d` block.
    pub fn degree_range(&self, d: usize) -> std::ops::Range<usize> {
        self.offsets[d]..self.offsets[d + 1]
    }

    /// First position whose monomial has degree > `d`.
    pub fn end_of_degree(&self, d: usize) -> usize {
        self.offsets[(d + 1).min(self.degree + 1)]
    }

    pub fn index_of(&self, m: &MultiIndex) -> Option<usize> {
        self.position.get(m).copied()
    }

    pub fn degree_of(&self, idx: usize) -> usize {
        self.exps[idx].degree()
    }
}

fn emit_degree(out: &mut Vec<MultiIndex>, current: &mut Vec<u32>, var: usize, remaining: u32) {
    let n = current.len();
    if var + 1 == n {
        current[var] = remaining;
        out.push(MultiIndex::new(current.clone()));
        current[var] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        current[var] = e;
        emit_degree(out, current, var + 1, remaining - e);
        current[var] = 0;
    }
}

static CACHE: Lazy<Mutex<HashMap<(usize, usize), Arc<Basis>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Shared basis for the given shape; built once per (n, degree).
pub fn shared(n: usize, degree: usize) -> Arc<Basis> {
    let mut cache = CACHE.lock().expect("basis cache poisoned");
    cache
        .entry((n, degree))
        .or_insert_with(|| Arc::new(Basis::build(n, degree)))
        .clone()
}
