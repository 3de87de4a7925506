//! Monomial enumeration for truncated multivariate polynomials.
//!
//! Monomials are enumerated in graded order: ascending total degree, and
//! within one degree in descending lexicographic order of the exponent
//! vector (so `x0^d` comes first). A layout is shared by every polynomial
//! with the same `(nvars, order)` and is built once per process.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use super::PolyError;

/// Largest truncation order a layout may be built for.
pub const MAX_ORDER: usize = 64;
/// Largest number of variables a layout may be built for.
pub const MAX_VARS: usize = 64;

/// Exponent vector `α = (α₁, …, αₙ)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(nvars: usize) -> Self {
        MultiIndex(vec![0; nvars])
    }

    /// Unit index `e_i`.
    pub fn unit(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        MultiIndex(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    /// Total degree `|α|`.
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `α! = α₁!⋯αₙ!`
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&a| factorial(a)).product()
    }

    /// True when the index is supported on variable `i` only (or is zero).
    pub fn is_supported_on(&self, i: usize) -> bool {
        self.0.iter().enumerate().all(|(j, &a)| j == i || a == 0)
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Number of monomials in `nvars` variables of total degree ≤ `order`.
pub fn monomial_count(nvars: usize, order: usize) -> usize {
    binomial(nvars + order, order)
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

pub(crate) struct Layout {
    nvars: usize,
    order: usize,
    exps: Vec<u8>,
    degree_start: Vec<usize>,
    degrees: Vec<u8>,
    index: HashMap<Box<[u8]>, u32>,
    mul: OnceLock<Vec<Box<[u32]>>>,
}

impl fmt::Debug for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Layout")
            .field("nvars", &self.nvars)
            .field("order", &self.order)
            .field("len", &self.len())
            .finish()
    }
}

fn push_degree(nvars: usize, degree: usize, prefix: &mut Vec<u8>, out: &mut Vec<u8>) {
    if prefix.len() + 1 == nvars {
        out.extend_from_slice(prefix);
        out.push(degree as u8);
        return;
    }
    for e in (0..=degree).rev() {
        prefix.push(e as u8);
        push_degree(nvars, degree - e, prefix, out);
        prefix.pop();
    }
}

impl Layout {
    fn build(nvars: usize, order: usize) -> Layout {
        let mut exps = Vec::with_capacity(monomial_count(nvars, order) * nvars);
        let mut degree_start = Vec::with_capacity(order + 2);
        let mut prefix = Vec::with_capacity(nvars);
        for d in 0..=order {
            degree_start.push(exps.len() / nvars);
            push_degree(nvars, d, &mut prefix, &mut exps);
        }
        degree_start.push(exps.len() / nvars);
        let len = exps.len() / nvars;
        let mut degrees = Vec::with_capacity(len);
        for d in 0..=order {
            degrees.resize(degree_start[d + 1], d as u8);
        }
        let mut index = HashMap::with_capacity(len);
        for i in 0..len {
            index.insert(exps[i * nvars..(i + 1) * nvars].into(), i as u32);
        }
        Layout {
            nvars,
            order,
            exps,
            degree_start,
            degrees,
            index,
            mul: OnceLock::new(),
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.exps.len() / self.nvars
    }

    pub fn exps(&self, i: usize) -> &[u8] {
        &self.exps[i * self.nvars..(i + 1) * self.nvars]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degrees[i] as usize
    }

    /// Index range of the monomials with total degree `d`.
    pub fn degree_range(&self, d: usize) -> std::ops::Range<usize> {
        self.degree_start[d]..self.degree_start[d + 1]
    }

    /// Number of monomials with total degree ≤ `d`.
    pub fn count_upto(&self, d: usize) -> usize {
        self.degree_start[d.min(self.order) + 1]
    }

    pub fn find(&self, exps: &[u8]) -> Option<usize> {
        self.index.get(exps).map(|&i| i as usize)
    }

    pub fn find_u32(&self, alpha: &[u32]) -> Option<usize> {
        if alpha.len() != self.nvars || alpha.iter().any(|&a| a as usize > self.order) {
            return None;
        }
        let key: Vec<u8> = alpha.iter().map(|&a| a as u8).collect();
        self.find(&key)
    }

    /// For each monomial `i`, the product targets `i·j` for every `j` with
    /// `deg(i) + deg(j) ≤ order` (those `j` form a prefix of the enumeration).
    pub fn mul_table(&self) -> &[Box<[u32]>] {
        self.mul.get_or_init(|| {
            let n = self.nvars;
            let mut scratch = vec![0u8; n];
            (0..self.len())
                .map(|i| {
                    let di = self.degree(i);
                    let upto = self.count_upto(self.order - di);
                    let ei = self.exps(i);
                    (0..upto)
                        .map(|j| {
                            let ej = self.exps(j);
                            for v in 0..n {
                                scratch[v] = ei[v] + ej[v];
                            }
                            self.find(&scratch).expect("product within order") as u32
                        })
                        .collect::<Vec<u32>>()
                        .into_boxed_slice()
                })
                .collect()
        })
    }
}

type Registry = Mutex<HashMap<(usize, usize), Arc<Layout>>>;

fn registry() -> &'static Registry {
    static REGISTRY: OnceLock<Registry> = OnceLock::new();
    REGISTRY.get_or_init(|| Mutex::new(HashMap::new()))
}

pub(crate) fn layout(nvars: usize, order: usize) -> Result<Arc<Layout>, PolyError> {
    if nvars == 0 || nvars > MAX_VARS {
        return Err(PolyError::UnsupportedShape { nvars, order });
    }
    if order > MAX_ORDER {
        return Err(PolyError::UnsupportedShape { nvars, order });
    }
    let mut reg = registry().lock().expect("layout registry poisoned");
    Ok(reg
        .entry((nvars, order))
        .or_insert_with(|| Arc::new(Layout::build(nvars, order)))
        .clone())
}
