//! Expressibility: gadget evaluation and a budgeted closure of the binary
//! functions expressible over a language with general unaries.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::cost::{Cost, Rational};
use crate::error::{Error, Result};
use crate::function::{checked_pow, CostFunction, Tuples};
use crate::language::{evaluate_unchecked, Instance, Language, Term, UnaryClosure};

/// Largest number of full assignments enumerated by [`express_gadget`].
pub const EVAL_CAP: usize = 10_000_000;

/// An instance with some variables exposed and the rest minimized out.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gadget {
    pub instance: Instance,
    pub exposed: Vec<usize>,
}

impl Gadget {
    pub fn new(instance: Instance, exposed: Vec<usize>) -> Result<Self> {
        if exposed.is_empty() {
            return Err(Error::structural(
                "a gadget must expose at least one variable",
            ));
        }
        for (i, &v) in exposed.iter().enumerate() {
            if v >= instance.num_vars {
                return Err(Error::structural(format!(
                    "exposed variable {v} does not exist"
                )));
            }
            if exposed[..i].contains(&v) {
                return Err(Error::structural(format!("variable {v} exposed twice")));
            }
        }
        Ok(Gadget { instance, exposed })
    }

    pub fn auxiliary(&self) -> Vec<usize> {
        (0..self.instance.num_vars)
            .filter(|v| !self.exposed.contains(v))
            .collect()
    }
}

/// Evaluates `min_y Cost(x, y)` over the auxiliary variables for every
/// assignment `x` of the exposed ones.
pub fn express_gadget(g: &Gadget, language: &Language) -> Result<CostFunction> {
    g.instance.validate(language)?;
    let d = language.domain_size();
    let n = g.instance.num_vars;
    checked_pow(d, n, EVAL_CAP).ok_or_else(|| {
        Error::capability(format!(
            "gadget needs {d}^{n} evaluations, over the cap of {EVAL_CAP}"
        ))
    })?;
    let m = g.exposed.len();
    let size = checked_pow(d, m, EVAL_CAP).expect("exposed variables are a subset");
    let mut table = vec![Cost::Infinite; size];
    for x in Tuples::new(d, n) {
        let idx = g.exposed.iter().fold(0, |acc, &v| acc * d + x[v]);
        let c = evaluate_unchecked(&g.instance, language, &x);
        if c < table[idx] {
            table[idx] = c;
        }
    }
    CostFunction::new(d, m, table)
}

/// `h(x, z) = min_y f(x, y) + g(y, z)`.
pub fn min_compose(f: &CostFunction, g: &CostFunction) -> Result<CostFunction> {
    if f.arity() != 2 || g.arity() != 2 {
        return Err(Error::structural("composition needs two binary functions"));
    }
    if f.domain_size() != g.domain_size() {
        return Err(Error::structural(
            "composition of functions over different domains",
        ));
    }
    let d = f.domain_size();
    Ok(CostFunction::from_raw(
        d,
        2,
        compose_tables(f.table(), g.table(), d),
    ))
}

fn compose_tables(f: &[Cost], g: &[Cost], d: usize) -> Vec<Cost> {
    let mut out = vec![Cost::Infinite; d * d];
    for x in 0..d {
        for y in 0..d {
            let fxy = match &f[x * d + y] {
                Cost::Finite(r) => r,
                Cost::Infinite => continue,
            };
            for z in 0..d {
                if let Cost::Finite(gyz) = &g[y * d + z] {
                    let c = Cost::Finite(fxy + gyz);
                    if c < out[x * d + z] {
                        out[x * d + z] = c;
                    }
                }
            }
        }
    }
    out
}

/// Treatment of a coordinate that [`pin_project`] does not keep.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "pin", rename_all = "snake_case")]
pub enum Pin {
    /// Minimized over freely.
    Minimize,
    /// Forced to one label.
    Fixed { label: usize },
    /// `amount` is added whenever the coordinate takes `label`.
    Penalty { label: usize, amount: Cost },
    /// Restricted to the labels of a bitmask.
    Subset { mask: u32 },
}

impl Pin {
    fn unary(&self, d: usize) -> Option<Vec<Cost>> {
        match self {
            Pin::Minimize => None,
            Pin::Fixed { label } => Some(
                (0..d)
                    .map(|x| {
                        if x == *label {
                            Cost::zero()
                        } else {
                            Cost::Infinite
                        }
                    })
                    .collect(),
            ),
            Pin::Penalty { label, amount } => Some(
                (0..d)
                    .map(|x| {
                        if x == *label {
                            amount.clone()
                        } else {
                            Cost::zero()
                        }
                    })
                    .collect(),
            ),
            Pin::Subset { mask } if *mask == (1 << d) - 1 => None,
            Pin::Subset { mask } => Some(
                (0..d)
                    .map(|x| {
                        if mask & (1 << x) != 0 {
                            Cost::zero()
                        } else {
                            Cost::Infinite
                        }
                    })
                    .collect(),
            ),
        }
    }

    fn is_crisp_restriction(&self, d: usize) -> bool {
        match self {
            Pin::Fixed { .. } => true,
            Pin::Subset { mask } => *mask != (1 << d) - 1,
            _ => false,
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        match self {
            Pin::Fixed { label } | Pin::Penalty { label, .. } if *label >= d => Err(
                Error::structural(format!("pin label {label} outside the domain")),
            ),
            Pin::Penalty {
                amount: Cost::Infinite,
                ..
            } => Err(Error::structural("penalty pins must be finite")),
            Pin::Subset { mask } if *mask == 0 || *mask >= 1 << d => Err(Error::structural(
                format!("pin subset {mask:#b} is empty or outside the domain"),
            )),
            _ => Ok(()),
        }
    }
}

/// Keeps coordinates `keep = [i, j]` of `f` (as the first and second argument
/// of the result), applies `pins` to the remaining coordinates in increasing
/// order and minimizes them out.
pub fn pin_project(f: &CostFunction, keep: [usize; 2], pins: &[Pin]) -> Result<CostFunction> {
    let m = f.arity();
    let d = f.domain_size();
    if m < 2 || keep[0] == keep[1] || keep.iter().any(|&k| k >= m) {
        return Err(Error::structural(format!(
            "cannot keep coordinates {keep:?} of an arity-{m} function"
        )));
    }
    if pins.len() != m - 2 {
        return Err(Error::structural(format!(
            "expected {} pins, got {}",
            m - 2,
            pins.len()
        )));
    }
    for p in pins {
        p.validate(d)?;
    }
    let others: Vec<usize> = (0..m).filter(|k| !keep.contains(k)).collect();
    let unaries: Vec<Option<Vec<Cost>>> = pins.iter().map(|p| p.unary(d)).collect();
    let mut out = vec![Cost::Infinite; d * d];
    for (idx, c) in f.table().iter().enumerate() {
        if c.is_infinite() {
            continue;
        }
        let t = f.tuple(idx);
        let mut total = c.clone();
        for (k, u) in others.iter().zip(&unaries) {
            if let Some(u) = u {
                total = total.add_ref(&u[t[*k]]);
            }
        }
        let slot = &mut out[t[keep[0]] * d + t[keep[1]]];
        if total < *slot {
            *slot = total;
        }
    }
    Ok(CostFunction::from_raw(d, 2, out))
}

/// Which argument a crisp restriction applies to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Row,
    Column,
}

/// How a closure member was obtained from earlier members or the language.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Derivation {
    /// The empty gadget on two variables.
    Zero,
    /// A unary language function on the first variable.
    Unary {
        function: usize,
    },
    Project {
        function: usize,
        keep: [usize; 2],
        pins: Vec<Pin>,
    },
    Transpose {
        of: usize,
    },
    Restrict {
        of: usize,
        axis: Axis,
        subset: u32,
    },
    Sum {
        left: usize,
        right: usize,
    },
    Compose {
        left: usize,
        right: usize,
    },
}

/// Audit record of a member: the gadget built from `derivation` expresses
/// `member(x, y) + row_shift[x] + col_shift[y]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub derivation: Derivation,
    pub row_shift: Vec<Cost>,
    pub col_shift: Vec<Cost>,
    /// The derivation used a crisp unary restriction somewhere.
    pub crisp_pin: bool,
    pub round: usize,
}

/// Budgets for [`binary_closure_with`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClosureBudget {
    pub rounds: usize,
    pub size: usize,
    /// Members with an entry whose numerator or denominator exceeds this many
    /// bits are dropped.
    pub bit_cap: u64,
    /// Worker threads for candidate generation; `1` runs inline.
    pub workers: usize,
}

impl Default for ClosureBudget {
    fn default() -> Self {
        ClosureBudget {
            rounds: 4,
            size: 2000,
            bit_cap: 64,
            workers: 1,
        }
    }
}

/// Budgeted under-approximation of the binary functions expressible over the
/// language together with all general unaries, up to row/column shifts.
///
/// Every member is normalized: each row, then each column, with a finite
/// entry has minimum zero. Members with empty effective domain are dropped.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BinaryClosure {
    pub domain_size: usize,
    pub members: Vec<CostFunction>,
    pub provenance: Vec<Provenance>,
    pub budget_rounds: usize,
    pub budget_size: usize,
    pub bit_cap: u64,
    pub rounds_run: usize,
    pub saturated: bool,
    /// Candidates dropped by the bit cap.
    pub oversized: usize,
    /// Stopped because `budget_size` members were reached.
    pub size_exhausted: bool,
}

impl BinaryClosure {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Index of `f`'s normalized form, if present.
    pub fn find(&self, f: &CostFunction) -> Option<usize> {
        let (n, _, _) = normalize(f.table(), self.domain_size)?;
        self.members.iter().position(|m| m.table() == n.as_slice())
    }

    /// Builds the gadget recorded for member `i`. The returned language is
    /// `base` extended with the unary functions the gadget needs.
    pub fn audit_gadget(&self, i: usize, base: &Language) -> Result<(Gadget, Language)> {
        if i >= self.members.len() {
            return Err(Error::structural(format!("closure has no member {i}")));
        }
        let mut b = GadgetBuilder {
            closure: self,
            language: base.clone(),
            unaries: HashMap::new(),
            terms: Vec::new(),
            num_vars: 2,
        };
        b.build(i, 0, 1)?;
        let instance = Instance::new(b.num_vars, b.terms)?;
        Ok((Gadget::new(instance, vec![0, 1])?, b.language))
    }

    /// Evaluates the audit gadget of member `i` and checks it equals the
    /// member plus its recorded shifts.
    pub fn audit(&self, i: usize, base: &Language) -> Result<bool> {
        let (g, lang) = self.audit_gadget(i, base)?;
        let got = express_gadget(&g, &lang)?;
        Ok(got.table() == self.shifted(i).as_slice())
    }

    /// `member(x, y) + row_shift[x] + col_shift[y]`.
    pub fn shifted(&self, i: usize) -> Vec<Cost> {
        let d = self.domain_size;
        let p = &self.provenance[i];
        self.members[i]
            .table()
            .iter()
            .enumerate()
            .map(|(k, c)| c.add_ref(&p.row_shift[k / d]).add_ref(&p.col_shift[k % d]))
            .collect()
    }
}

struct GadgetBuilder<'a> {
    closure: &'a BinaryClosure,
    language: Language,
    unaries: HashMap<Vec<Cost>, usize>,
    terms: Vec<Term>,
    num_vars: usize,
}

/// Variables beyond which audit gadgets are refused.
const AUDIT_VAR_CAP: usize = 4096;

impl GadgetBuilder<'_> {
    fn fresh(&mut self) -> Result<usize> {
        if self.num_vars >= AUDIT_VAR_CAP {
            return Err(Error::capability("audit gadget exceeds the variable cap"));
        }
        self.num_vars += 1;
        Ok(self.num_vars - 1)
    }

    fn unary(&mut self, values: Vec<Cost>, var: usize) -> Result<()> {
        let idx = match self.unaries.get(&values) {
            Some(&i) => i,
            None => {
                let f = CostFunction::new(self.language.domain_size(), 1, values.clone())?;
                let i = self.language.push(f)?;
                self.unaries.insert(values, i);
                i
            }
        };
        self.terms.push(Term {
            function: idx,
            scope: vec![var],
        });
        Ok(())
    }

    fn build(&mut self, i: usize, x: usize, y: usize) -> Result<()> {
        let d = self.closure.domain_size;
        match self.closure.provenance[i].derivation.clone() {
            Derivation::Zero => {}
            Derivation::Unary { function } => self.terms.push(Term {
                function,
                scope: vec![x],
            }),
            Derivation::Project {
                function,
                keep,
                pins,
            } => {
                let arity = self
                    .language
                    .functions()
                    .get(function)
                    .ok_or_else(|| Error::structural("provenance references a missing function"))?
                    .arity();
                let mut scope = vec![0; arity];
                let mut pins = pins.iter();
                for (k, slot) in scope.iter_mut().enumerate() {
                    *slot = if k == keep[0] {
                        x
                    } else if k == keep[1] {
                        y
                    } else {
                        let v = self.fresh()?;
                        if let Some(u) = pins.next().and_then(|p| p.unary(d)) {
                            self.unary(u, v)?;
                        }
                        v
                    };
                }
                self.terms.push(Term { function, scope });
            }
            Derivation::Transpose { of } => self.build(of, y, x)?,
            Derivation::Restrict { of, axis, subset } => {
                self.build(of, x, y)?;
                let u = (0..d)
                    .map(|l| {
                        if subset & (1 << l) != 0 {
                            Cost::zero()
                        } else {
                            Cost::Infinite
                        }
                    })
                    .collect();
                self.unary(u, if axis == Axis::Row { x } else { y })?;
            }
            Derivation::Sum { left, right } => {
                self.build(left, x, y)?;
                self.build(right, x, y)?;
            }
            Derivation::Compose { left, right } => {
                let z = self.fresh()?;
                self.build(left, x, z)?;
                self.build(right, z, y)?;
                if let Some(w) = middle_unary(self.closure, left, right) {
                    self.unary(w, z)?;
                }
            }
        }
        Ok(())
    }
}

/// `w(z) = K - col_shift_left[z] - row_shift_right[z]` with `K` the largest
/// such sum, so the compose gadget adds only a constant. `None` when zero.
fn middle_unary(c: &BinaryClosure, left: usize, right: usize) -> Option<Vec<Cost>> {
    let (k, sums) = middle_shift(
        &c.provenance[left].col_shift,
        &c.provenance[right].row_shift,
    );
    if k.is_zero() {
        return None;
    }
    Some(
        sums.iter()
            .map(|s| Cost::Finite(k.checked_sub(s).expect("k is the maximum")))
            .collect(),
    )
}

fn middle_shift(col_left: &[Cost], row_right: &[Cost]) -> (Rational, Vec<Rational>) {
    let sums: Vec<Rational> = col_left
        .iter()
        .zip(row_right)
        .map(|(a, b)| a.finite().expect("finite shift") + b.finite().expect("finite shift"))
        .collect();
    let k = sums.iter().max().cloned().unwrap_or_else(Rational::zero);
    (k, sums)
}

/// Row-then-column normalization. Returns the table and both shift vectors,
/// or `None` if every entry is infinite.
fn normalize(table: &[Cost], d: usize) -> Option<(Vec<Cost>, Vec<Cost>, Vec<Cost>)> {
    if table.iter().all(Cost::is_infinite) {
        return None;
    }
    let mut t = table.to_vec();
    let mut rows = vec![Cost::zero(); d];
    let mut cols = vec![Cost::zero(); d];
    for x in 0..d {
        if let Some(m) = t[x * d..(x + 1) * d]
            .iter()
            .filter_map(Cost::finite)
            .min()
            .cloned()
        {
            if !m.is_zero() {
                for c in &mut t[x * d..(x + 1) * d] {
                    *c = c.sub_finite(&m).expect("row minimum");
                }
                rows[x] = Cost::Finite(m);
            }
        }
    }
    for y in 0..d {
        if let Some(m) = (0..d).filter_map(|x| t[x * d + y].finite()).min().cloned() {
            if !m.is_zero() {
                for x in 0..d {
                    t[x * d + y] = t[x * d + y].sub_finite(&m).expect("column minimum");
                }
                cols[y] = Cost::Finite(m);
            }
        }
    }
    Some((t, rows, cols))
}

fn add_vec(a: &[Cost], b: &[Cost]) -> Vec<Cost> {
    a.iter().zip(b).map(|(x, y)| x.add_ref(y)).collect()
}

fn transpose_table(t: &[Cost], d: usize) -> Vec<Cost> {
    (0..d * d).map(|i| t[(i % d) * d + i / d].clone()).collect()
}

fn restrict_table(t: &[Cost], d: usize, axis: Axis, subset: u32) -> Vec<Cost> {
    let mut out = t.to_vec();
    for x in 0..d {
        for y in 0..d {
            let label = if axis == Axis::Row { x } else { y };
            if subset & (1 << label) == 0 {
                out[x * d + y] = Cost::Infinite;
            }
        }
    }
    out
}

/// Table representation used by the closure engine. Crisp closures (every
/// seed crisp) run on bitmasks; everything else on exact cost vectors.
trait Table: Clone + Eq + std::hash::Hash + Send + Sync {
    /// Normalized form, `None` when the effective domain is empty.
    fn normalized(&self, d: usize) -> Option<Self>;
    /// Row and column shifts removed by [`Table::normalized`].
    fn shifts(&self, d: usize) -> (Vec<Cost>, Vec<Cost>);
    fn transpose(&self, d: usize) -> Self;
    fn restrict(&self, d: usize, axis: Axis, subset: u32) -> Self;
    fn sum(&self, other: &Self) -> Self;
    fn compose(&self, other: &Self, d: usize) -> Self;
    fn too_big(&self, bit_cap: u64) -> bool;
    fn costs(&self, d: usize) -> Vec<Cost>;
    fn from_costs(t: &[Cost]) -> Self;
}

impl Table for Vec<Cost> {
    fn normalized(&self, d: usize) -> Option<Self> {
        normalize(self, d).map(|(t, _, _)| t)
    }

    fn shifts(&self, d: usize) -> (Vec<Cost>, Vec<Cost>) {
        normalize(self, d).map_or_else(
            || (vec![Cost::zero(); d], vec![Cost::zero(); d]),
            |(_, r, c)| (r, c),
        )
    }

    fn transpose(&self, d: usize) -> Self {
        transpose_table(self, d)
    }

    fn restrict(&self, d: usize, axis: Axis, subset: u32) -> Self {
        restrict_table(self, d, axis, subset)
    }

    fn sum(&self, other: &Self) -> Self {
        add_vec(self, other)
    }

    fn compose(&self, other: &Self, d: usize) -> Self {
        compose_tables(self, other, d)
    }

    fn too_big(&self, bit_cap: u64) -> bool {
        self.iter().any(|c| c.bits() > bit_cap)
    }

    fn costs(&self, _d: usize) -> Vec<Cost> {
        self.clone()
    }

    fn from_costs(t: &[Cost]) -> Self {
        t.to_vec()
    }
}

/// Crisp binary relation, bit `x * d + y` set iff `(x, y)` is in the relation.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct Bits(u16);

impl Bits {
    fn row(self, y: usize, d: usize) -> u16 {
        (self.0 >> (y * d)) & ((1 << d) - 1)
    }
}

impl Table for Bits {
    fn normalized(&self, _d: usize) -> Option<Self> {
        (self.0 != 0).then_some(*self)
    }

    fn shifts(&self, d: usize) -> (Vec<Cost>, Vec<Cost>) {
        (vec![Cost::zero(); d], vec![Cost::zero(); d])
    }

    fn transpose(&self, d: usize) -> Self {
        let mut out = 0;
        for x in 0..d {
            for y in 0..d {
                if self.0 >> (x * d + y) & 1 == 1 {
                    out |= 1 << (y * d + x);
                }
            }
        }
        Bits(out)
    }

    fn restrict(&self, d: usize, axis: Axis, subset: u32) -> Self {
        let mut keep = 0u16;
        for x in 0..d {
            for y in 0..d {
                let label = if axis == Axis::Row { x } else { y };
                if subset & (1 << label) != 0 {
                    keep |= 1 << (x * d + y);
                }
            }
        }
        Bits(self.0 & keep)
    }

    fn sum(&self, other: &Self) -> Self {
        Bits(self.0 & other.0)
    }

    fn compose(&self, other: &Self, d: usize) -> Self {
        let mut out = 0;
        for x in 0..d {
            for y in 0..d {
                if self.0 >> (x * d + y) & 1 == 1 {
                    out |= other.row(y, d) << (x * d);
                }
            }
        }
        Bits(out)
    }

    fn too_big(&self, _bit_cap: u64) -> bool {
        false
    }

    fn costs(&self, d: usize) -> Vec<Cost> {
        (0..d * d)
            .map(|i| {
                if self.0 >> i & 1 == 1 {
                    Cost::zero()
                } else {
                    Cost::Infinite
                }
            })
            .collect()
    }

    fn from_costs(t: &[Cost]) -> Self {
        Bits(
            t.iter()
                .enumerate()
                .filter(|(_, c)| c.is_finite())
                .fold(0, |acc, (i, _)| acc | 1 << i),
        )
    }
}

/// A candidate before normalization.
struct Candidate<T> {
    raw: T,
    derivation: Derivation,
}

struct Engine<T> {
    d: usize,
    budget: ClosureBudget,
    tables: Vec<T>,
    provenance: Vec<Provenance>,
    index: HashMap<T, usize>,
    oversized: usize,
    size_exhausted: bool,
}

enum Offer {
    New,
    Known,
    Dropped,
    Full,
}

impl<T: Table> Engine<T> {
    fn new(d: usize, budget: &ClosureBudget) -> Self {
        Engine {
            d,
            budget: budget.clone(),
            tables: Vec::new(),
            provenance: Vec::new(),
            index: HashMap::new(),
            oversized: 0,
            size_exhausted: false,
        }
    }

    fn zeros(&self) -> Vec<Cost> {
        vec![Cost::zero(); self.d]
    }

    fn is_new(&self, c: &Candidate<T>) -> bool {
        match c.raw.normalized(self.d) {
            None => false,
            Some(t) => t.too_big(self.budget.bit_cap) || !self.index.contains_key(&t),
        }
    }

    /// Shifts inherited from the parents, before the candidate's own
    /// normalization.
    fn base_shifts(&self, derivation: &Derivation) -> (Vec<Cost>, Vec<Cost>) {
        let p = &self.provenance;
        match *derivation {
            Derivation::Zero | Derivation::Unary { .. } | Derivation::Project { .. } => {
                (self.zeros(), self.zeros())
            }
            Derivation::Transpose { of } => (p[of].col_shift.clone(), p[of].row_shift.clone()),
            Derivation::Restrict { of, .. } => (p[of].row_shift.clone(), p[of].col_shift.clone()),
            Derivation::Sum { left, right } => (
                add_vec(&p[left].row_shift, &p[right].row_shift),
                add_vec(&p[left].col_shift, &p[right].col_shift),
            ),
            Derivation::Compose { left, right } => {
                let (k, _) = middle_shift(&p[left].col_shift, &p[right].row_shift);
                let k = Cost::Finite(k);
                (
                    p[left].row_shift.iter().map(|r| r.add_ref(&k)).collect(),
                    p[right].col_shift.clone(),
                )
            }
        }
    }

    fn crisp_pin(&self, derivation: &Derivation) -> bool {
        let p = &self.provenance;
        match derivation {
            Derivation::Zero | Derivation::Unary { .. } => false,
            Derivation::Project { pins, .. } => {
                pins.iter().any(|pin| pin.is_crisp_restriction(self.d))
            }
            Derivation::Restrict { .. } => true,
            Derivation::Transpose { of } => p[*of].crisp_pin,
            Derivation::Sum { left, right } | Derivation::Compose { left, right } => {
                p[*left].crisp_pin || p[*right].crisp_pin
            }
        }
    }

    fn offer(&mut self, c: Candidate<T>, round: usize) -> Offer {
        let Some(t) = c.raw.normalized(self.d) else {
            return Offer::Known;
        };
        if t.too_big(self.budget.bit_cap) {
            self.oversized += 1;
            return Offer::Dropped;
        }
        if self.index.contains_key(&t) {
            return Offer::Known;
        }
        let transposed = t.transpose(self.d);
        let needs_transpose = transposed != t;
        if self.tables.len() + usize::from(needs_transpose) >= self.budget.size {
            self.size_exhausted = true;
            return Offer::Full;
        }
        let (base_rows, base_cols) = self.base_shifts(&c.derivation);
        let (rows, cols) = c.raw.shifts(self.d);
        let prov = Provenance {
            row_shift: add_vec(&base_rows, &rows),
            col_shift: add_vec(&base_cols, &cols),
            crisp_pin: self.crisp_pin(&c.derivation),
            derivation: c.derivation,
            round,
        };
        let i = self.push(t, prov);
        if needs_transpose {
            let p = &self.provenance[i];
            let prov = Provenance {
                derivation: Derivation::Transpose { of: i },
                row_shift: p.col_shift.clone(),
                col_shift: p.row_shift.clone(),
                crisp_pin: p.crisp_pin,
                round,
            };
            self.push(transposed, prov);
        }
        Offer::New
    }

    fn push(&mut self, t: T, p: Provenance) -> usize {
        let i = self.tables.len();
        self.index.insert(t.clone(), i);
        self.tables.push(t);
        self.provenance.push(p);
        i
    }

    fn seeds(&self, language: &Language) -> Result<Vec<Candidate<T>>> {
        let d = self.d;
        let mut out = Vec::new();
        if language.unary_closure() != UnaryClosure::None {
            out.push(Candidate {
                raw: T::from_costs(&vec![Cost::zero(); d * d]),
                derivation: Derivation::Zero,
            });
        }
        let full = (1u32 << d) - 1;
        for (fi, f) in language.functions().iter().enumerate() {
            let m = f.arity();
            if m == 1 {
                let raw: Vec<Cost> = (0..d * d).map(|k| f.table()[k / d].clone()).collect();
                out.push(Candidate {
                    raw: T::from_costs(&raw),
                    derivation: Derivation::Unary { function: fi },
                });
                continue;
            }
            for i in 0..m {
                for j in i + 1..m {
                    for masks in Tuples::new(full as usize, m - 2) {
                        let pins: Vec<Pin> = masks
                            .iter()
                            .map(|&k| {
                                let mask = k as u32 + 1;
                                if mask == full {
                                    Pin::Minimize
                                } else {
                                    Pin::Subset { mask }
                                }
                            })
                            .collect();
                        let h = pin_project(f, [i, j], &pins)?;
                        out.push(Candidate {
                            raw: T::from_costs(h.table()),
                            derivation: Derivation::Project {
                                function: fi,
                                keep: [i, j],
                                pins,
                            },
                        });
                    }
                }
            }
        }
        Ok(out)
    }

    /// Candidates of one round: restrictions of the frontier `start..end`,
    /// sums and compositions of pairs touching the frontier.
    fn round_candidates(&self, start: usize, end: usize) -> Vec<Candidate<T>> {
        let d = self.d;
        let per_member = |i: usize| -> Vec<Candidate<T>> {
            let t = &self.tables[i];
            let mut out = Vec::new();
            if i >= start {
                for axis in [Axis::Row, Axis::Column] {
                    for subset in 1u32..(1 << d) - 1 {
                        out.push(Candidate {
                            raw: t.restrict(d, axis, subset),
                            derivation: Derivation::Restrict {
                                of: i,
                                axis,
                                subset,
                            },
                        });
                    }
                }
            }
            // sums {j, i} with j <= i, once per pair touching the frontier
            for j in 0..=i.min(end - 1) {
                if i < start && j < start {
                    continue;
                }
                out.push(Candidate {
                    raw: t.sum(&self.tables[j]),
                    derivation: Derivation::Sum { left: j, right: i },
                });
            }
            // compositions with i as the left factor
            for j in 0..end {
                if i < start && j < start {
                    continue;
                }
                out.push(Candidate {
                    raw: t.compose(&self.tables[j], d),
                    derivation: Derivation::Compose { left: i, right: j },
                });
            }
            out
        };
        if self.budget.workers > 1 {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(self.budget.workers)
                .build()
                .expect("thread pool");
            pool.install(|| (0..end).into_par_iter().map(per_member).collect::<Vec<_>>())
                .into_iter()
                .flatten()
                .collect()
        } else {
            (0..end).flat_map(per_member).collect()
        }
    }

    fn run(mut self, language: &Language) -> Result<BinaryClosure> {
        for c in self.seeds(language)? {
            if matches!(self.offer(c, 0), Offer::Full) {
                break;
            }
        }
        let budget = self.budget.clone();
        let mut start = 0;
        let mut rounds_run = 0;
        let mut saturated = false;
        while !self.size_exhausted {
            let end = self.tables.len();
            if rounds_run == budget.rounds {
                // dry run: would another round add anything?
                saturated = self.oversized == 0
                    && !self
                        .round_candidates(start, end)
                        .iter()
                        .any(|c| self.is_new(c));
                break;
            }
            rounds_run += 1;
            let oversized_before = self.oversized;
            for c in self.round_candidates(start, end) {
                if matches!(self.offer(c, rounds_run), Offer::Full) {
                    break;
                }
            }
            if self.tables.len() == end
                && self.oversized == oversized_before
                && !self.size_exhausted
            {
                saturated = self.oversized == 0;
                break;
            }
            start = end;
        }
        let d = self.d;
        let members = self
            .tables
            .iter()
            .map(|t| CostFunction::from_raw(d, 2, t.costs(d)))
            .collect();
        Ok(BinaryClosure {
            domain_size: d,
            members,
            provenance: self.provenance,
            budget_rounds: budget.rounds,
            budget_size: budget.size,
            bit_cap: budget.bit_cap,
            rounds_run,
            saturated,
            oversized: self.oversized,
            size_exhausted: self.size_exhausted,
        })
    }
}

/// [`binary_closure_with`] using default bit cap and a single worker.
pub fn binary_closure(
    language: &Language,
    budget_rounds: usize,
    budget_size: usize,
) -> Result<BinaryClosure> {
    binary_closure_with(
        language,
        &ClosureBudget {
            rounds: budget_rounds,
            size: budget_size,
            ..ClosureBudget::default()
        },
    )
}

/// Seeds the closure with every two-coordinate projection of every language
/// function (other coordinates restricted to each nonempty label subset, then
/// minimized out), then runs up to `budget.rounds` rounds of restriction,
/// pointwise sum, composition and transposition. Rounds are barriers: members
/// added in a round are only combined in the next one.
pub fn binary_closure_with(language: &Language, budget: &ClosureBudget) -> Result<BinaryClosure> {
    let d = language.domain_size();
    if d > 4 {
        return Err(Error::capability(format!(
            "binary closure supports |D| <= 4, got {d}"
        )));
    }
    if language.functions().iter().all(CostFunction::is_crisp) {
        Engine::<Bits>::new(d, budget).run(language)
    } else {
        Engine::<Vec<Cost>>::new(d, budget).run(language)
    }
}

/// [`binary_closure_with`] on exact cost tables even for crisp languages;
/// kept as a reference for the bitmask path.
#[doc(hidden)]
pub fn binary_closure_exact(language: &Language, budget: &ClosureBudget) -> Result<BinaryClosure> {
    Engine::<Vec<Cost>>::new(language.domain_size(), budget).run(language)
}
