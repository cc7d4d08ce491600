//! Dense cost-function tables over a small finite domain.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cost::{Cost, Rational};
use crate::error::{Error, Result};

/// Largest table (`|D|^m` entries) accepted anywhere in the toolkit.
pub const TABLE_CAP: usize = 1_000_000;

/// `base^exp` if it does not exceed `cap`.
pub(crate) fn checked_pow(base: usize, exp: usize, cap: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
        if acc > cap {
            return None;
        }
    }
    Some(acc)
}

/// Lexicographic odometer over `D^arity`; the last coordinate varies fastest.
#[derive(Debug, Clone)]
pub struct Tuples {
    domain_size: usize,
    current: Vec<usize>,
    done: bool,
}

impl Tuples {
    pub fn new(domain_size: usize, arity: usize) -> Self {
        Tuples {
            domain_size,
            current: vec![0; arity],
            done: domain_size == 0,
        }
    }
}

impl Iterator for Tuples {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let mut k = self.current.len();
        loop {
            if k == 0 {
                self.done = true;
                break;
            }
            k -= 1;
            self.current[k] += 1;
            if self.current[k] < self.domain_size {
                break;
            }
            self.current[k] = 0;
        }
        Some(out)
    }
}

/// A cost function `D^m -> Q+ ∪ {inf}` stored as a row-major table.
///
/// Entry order is lexicographic in the argument tuple, first coordinate most
/// significant.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawFunction")]
pub struct CostFunction {
    arity: usize,
    domain_size: usize,
    table: Vec<Cost>,
}

impl CostFunction {
    pub fn new(domain_size: usize, arity: usize, table: Vec<Cost>) -> Result<Self> {
        if domain_size < 2 {
            return Err(Error::structural(format!(
                "domain size must be at least 2, got {domain_size}"
            )));
        }
        if arity == 0 {
            return Err(Error::structural("cost functions must have positive arity"));
        }
        let expected = checked_pow(domain_size, arity, TABLE_CAP).ok_or_else(|| {
            Error::capability(format!(
                "table of size {domain_size}^{arity} exceeds the cap of {TABLE_CAP} entries"
            ))
        })?;
        if table.len() != expected {
            return Err(Error::structural(format!(
                "table has {} entries, expected {domain_size}^{arity} = {expected}",
                table.len()
            )));
        }
        Ok(CostFunction {
            arity,
            domain_size,
            table,
        })
    }

    pub fn from_fn(
        domain_size: usize,
        arity: usize,
        mut f: impl FnMut(&[usize]) -> Cost,
    ) -> Result<Self> {
        checked_pow(domain_size, arity, TABLE_CAP).ok_or_else(|| {
            Error::capability(format!(
                "table of size {domain_size}^{arity} exceeds the cap"
            ))
        })?;
        let table = Tuples::new(domain_size, arity).map(|t| f(&t)).collect();
        Self::new(domain_size, arity, table)
    }

    /// `0` on tuples satisfying `rel`, `inf` elsewhere.
    pub fn crisp(domain_size: usize, arity: usize, rel: impl Fn(&[usize]) -> bool) -> Result<Self> {
        Self::from_fn(domain_size, arity, |t| {
            if rel(t) {
                Cost::zero()
            } else {
                Cost::Infinite
            }
        })
    }

    /// Convenience constructor for integer tables; `None` entries are infinite.
    pub fn from_ints(domain_size: usize, arity: usize, values: &[Option<u64>]) -> Result<Self> {
        let table = values
            .iter()
            .map(|v| v.map_or(Cost::Infinite, Cost::int))
            .collect();
        Self::new(domain_size, arity, table)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn table(&self) -> &[Cost] {
        &self.table
    }

    pub fn into_table(self) -> Vec<Cost> {
        self.table
    }

    pub fn index(&self, tuple: &[usize]) -> usize {
        debug_assert_eq!(tuple.len(), self.arity);
        tuple.iter().fold(0, |acc, &x| acc * self.domain_size + x)
    }

    pub fn tuple(&self, mut index: usize) -> Vec<usize> {
        let mut t = vec![0; self.arity];
        for slot in t.iter_mut().rev() {
            *slot = index % self.domain_size;
            index /= self.domain_size;
        }
        t
    }

    pub fn get(&self, tuple: &[usize]) -> &Cost {
        &self.table[self.index(tuple)]
    }

    /// Binary lookup `f(a, b)`.
    pub fn get2(&self, a: usize, b: usize) -> &Cost {
        debug_assert_eq!(self.arity, 2);
        &self.table[a * self.domain_size + b]
    }

    pub fn in_dom(&self, tuple: &[usize]) -> bool {
        self.get(tuple).is_finite()
    }

    /// Tuples with finite cost, in lexicographic order.
    pub fn effective_domain(&self) -> Vec<Vec<usize>> {
        self.table
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_finite())
            .map(|(i, _)| self.tuple(i))
            .collect()
    }

    pub fn dom_size(&self) -> usize {
        self.table.iter().filter(|c| c.is_finite()).count()
    }

    pub fn is_crisp(&self) -> bool {
        self.table.iter().all(|c| c.is_zero() || c.is_infinite())
    }

    pub fn is_finite_valued(&self) -> bool {
        self.table.iter().all(Cost::is_finite)
    }

    /// Largest finite entry, if any.
    pub fn max_finite(&self) -> Option<&Rational> {
        self.table.iter().filter_map(Cost::finite).max()
    }

    /// Every finite value replaced by zero.
    pub fn feas(&self) -> CostFunction {
        CostFunction {
            arity: self.arity,
            domain_size: self.domain_size,
            table: self
                .table
                .iter()
                .map(|c| {
                    if c.is_finite() {
                        Cost::zero()
                    } else {
                        Cost::Infinite
                    }
                })
                .collect(),
        }
    }

    /// Swaps the two arguments of a binary function.
    pub fn transpose(&self) -> CostFunction {
        assert_eq!(self.arity, 2, "transpose needs a binary function");
        let d = self.domain_size;
        let table = (0..d * d)
            .map(|i| self.table[(i % d) * d + i / d].clone())
            .collect();
        CostFunction {
            arity: 2,
            domain_size: d,
            table,
        }
    }

    pub(crate) fn from_raw(domain_size: usize, arity: usize, table: Vec<Cost>) -> Self {
        debug_assert_eq!(
            Some(table.len()),
            checked_pow(domain_size, arity, usize::MAX)
        );
        CostFunction {
            arity,
            domain_size,
            table,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFunction {
    domain_size: usize,
    arity: usize,
    table: Vec<Cost>,
}

impl TryFrom<RawFunction> for CostFunction {
    type Error = Error;

    fn try_from(r: RawFunction) -> Result<Self> {
        CostFunction::new(r.domain_size, r.arity, r.table)
    }
}

impl fmt::Debug for CostFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "CostFunction(d={}, m={}, [",
            self.domain_size, self.arity
        )?;
        for (i, c) in self.table.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str("])")
    }
}
