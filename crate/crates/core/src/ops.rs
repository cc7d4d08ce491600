//! Operation tables on the domain, their properties, and multimorphism /
//! polymorphism verification and search.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cost::Cost;
use crate::error::{Error, Result};
use crate::function::{CostFunction, Tuples};
use crate::language::{Language, UnaryClosure};

/// Set of unordered label pairs `{a, b}`, `a != b`, stored as `(min, max)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PairSet(BTreeSet<(usize, usize)>);

impl PairSet {
    pub fn new() -> Self {
        PairSet(BTreeSet::new())
    }

    /// Every unordered pair of distinct labels.
    pub fn all(domain_size: usize) -> Self {
        let mut s = PairSet::new();
        for a in 0..domain_size {
            for b in a + 1..domain_size {
                s.insert(a, b);
            }
        }
        s
    }

    pub fn from_pairs<I: IntoIterator<Item = (usize, usize)>>(pairs: I) -> Self {
        let mut s = PairSet::new();
        for (a, b) in pairs {
            s.insert(a, b);
        }
        s
    }

    pub fn insert(&mut self, a: usize, b: usize) -> bool {
        assert_ne!(a, b, "pairs must have distinct labels");
        self.0.insert((a.min(b), a.max(b)))
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.0.contains(&(a.min(b), a.max(b)))
    }

    pub fn complement(&self, domain_size: usize) -> PairSet {
        PairSet(
            PairSet::all(domain_size)
                .0
                .difference(&self.0)
                .copied()
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().copied()
    }

    pub fn is_subset(&self, other: &PairSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn max_label(&self) -> Option<usize> {
        self.0.iter().map(|&(_, b)| b).max()
    }
}

impl fmt::Display for PairSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (a, b)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{{{a},{b}}}")?;
        }
        f.write_str("}")
    }
}

fn table_domain(len: usize, arity: u32) -> Option<usize> {
    (2..=16).find(|d: &usize| d.pow(arity) == len)
}

macro_rules! op_table {
    ($name:ident, $arity:expr, $what:expr) => {
        #[doc = concat!("A ", $what, " operation on the domain, stored row-major.")]
        #[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name {
            domain_size: usize,
            table: Vec<usize>,
        }

        impl $name {
            pub const ARITY: usize = $arity;

            pub fn new(domain_size: usize, table: Vec<usize>) -> Result<Self> {
                let expected = domain_size.pow($arity);
                if table.len() != expected {
                    return Err(Error::structural(format!(
                        "{} table has {} entries, expected {expected}",
                        $what,
                        table.len()
                    )));
                }
                if let Some(bad) = table.iter().find(|&&x| x >= domain_size) {
                    return Err(Error::structural(format!(
                        "operation value {bad} outside the domain"
                    )));
                }
                Ok($name { domain_size, table })
            }

            pub fn domain_size(&self) -> usize {
                self.domain_size
            }

            pub fn table(&self) -> &[usize] {
                &self.table
            }

            /// Applies the operation to the argument tuple (row-major index).
            pub fn apply_slice(&self, args: &[usize]) -> usize {
                let idx = args.iter().fold(0, |acc, &x| acc * self.domain_size + x);
                self.table[idx]
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}{:?}", stringify!($name), self.table)
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                self.table.serialize(s)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let table = Vec::<usize>::deserialize(d)?;
                let dom = table_domain(table.len(), $arity).ok_or_else(|| {
                    serde::de::Error::custom(format!(
                        "{} table length {} is not a power",
                        $what,
                        table.len()
                    ))
                })?;
                $name::new(dom, table).map_err(serde::de::Error::custom)
            }
        }
    };
}

op_table!(BinaryOp, 2, "binary");
op_table!(TernaryOp, 3, "ternary");

impl BinaryOp {
    pub fn from_fn(domain_size: usize, f: impl Fn(usize, usize) -> usize) -> Self {
        let table = (0..domain_size * domain_size)
            .map(|i| f(i / domain_size, i % domain_size))
            .collect();
        BinaryOp::new(domain_size, table).expect("closure returns labels in the domain")
    }

    pub fn apply(&self, a: usize, b: usize) -> usize {
        self.table[a * self.domain_size + b]
    }

    pub fn min(domain_size: usize) -> Self {
        Self::from_fn(domain_size, usize::min)
    }

    pub fn max(domain_size: usize) -> Self {
        Self::from_fn(domain_size, usize::max)
    }

    pub fn first(domain_size: usize) -> Self {
        Self::from_fn(domain_size, |a, _| a)
    }

    pub fn second(domain_size: usize) -> Self {
        Self::from_fn(domain_size, |_, b| b)
    }
}

impl TernaryOp {
    pub fn from_fn(domain_size: usize, f: impl Fn(usize, usize, usize) -> usize) -> Self {
        let d = domain_size;
        let table = (0..d * d * d)
            .map(|i| f(i / (d * d), (i / d) % d, i % d))
            .collect();
        TernaryOp::new(domain_size, table).expect("closure returns labels in the domain")
    }

    pub fn apply(&self, a: usize, b: usize, c: usize) -> usize {
        let d = self.domain_size;
        self.table[(a * d + b) * d + c]
    }

    pub fn projection(domain_size: usize, coordinate: usize) -> Self {
        Self::from_fn(domain_size, |a, b, c| [a, b, c][coordinate])
    }

    /// Returns the repeated label on two-valued tuples and `fallback` on
    /// tuples with three distinct labels.
    pub fn majority_with(
        domain_size: usize,
        fallback: impl Fn(usize, usize, usize) -> usize,
    ) -> Self {
        Self::from_fn(domain_size, |a, b, c| {
            if a == b || a == c {
                a
            } else if b == c {
                b
            } else {
                fallback(a, b, c)
            }
        })
    }

    /// Boolean parity `a xor b xor c`.
    pub fn parity() -> Self {
        Self::from_fn(2, |a, b, c| a ^ b ^ c)
    }
}

/// Classification flags of a single operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpProperty {
    Conservative,
    Commutative,
    Majority,
    Minority,
    Idempotent,
}

/// A binary or ternary operation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Operation {
    Binary(BinaryOp),
    Ternary(TernaryOp),
}

impl Operation {
    pub fn domain_size(&self) -> usize {
        match self {
            Operation::Binary(o) => o.domain_size(),
            Operation::Ternary(o) => o.domain_size(),
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Operation::Binary(_) => 2,
            Operation::Ternary(_) => 3,
        }
    }

    pub fn apply_slice(&self, args: &[usize]) -> usize {
        match self {
            Operation::Binary(o) => o.apply_slice(args),
            Operation::Ternary(o) => o.apply_slice(args),
        }
    }
}

/// Flags of `op` computed by exhaustive enumeration. Commutativity is only
/// reported for binary operations; majority / minority only for ternary ones,
/// tested on the tuples with exactly two distinct labels.
pub fn op_properties(op: &Operation) -> BTreeSet<OpProperty> {
    let d = op.domain_size();
    let k = op.arity();
    let mut props = BTreeSet::new();
    let args: Vec<Vec<usize>> = Tuples::new(d, k).collect();
    let value = |t: &[usize]| op.apply_slice(t);

    if args.iter().all(|t| t.contains(&value(t))) {
        props.insert(OpProperty::Conservative);
    }
    if (0..d).all(|a| value(&vec![a; k]) == a) {
        props.insert(OpProperty::Idempotent);
    }
    match op {
        Operation::Binary(o) => {
            if (0..d).all(|a| (0..d).all(|b| o.apply(a, b) == o.apply(b, a))) {
                props.insert(OpProperty::Commutative);
            }
        }
        Operation::Ternary(_) => {
            let two_valued: Vec<&Vec<usize>> = args.iter().filter(|t| distinct(t) == 2).collect();
            if two_valued.iter().all(|t| value(t) == majority_of(t)) {
                props.insert(OpProperty::Majority);
            }
            if two_valued.iter().all(|t| value(t) == minority_of(t)) {
                props.insert(OpProperty::Minority);
            }
        }
    }
    props
}

fn distinct(t: &[usize]) -> usize {
    let mut v = t.to_vec();
    v.sort_unstable();
    v.dedup();
    v.len()
}

/// Repeated label of a two-valued triple.
fn majority_of(t: &[usize]) -> usize {
    if t[0] == t[1] || t[0] == t[2] {
        t[0]
    } else {
        t[1]
    }
}

/// Label occurring once in a two-valued triple.
fn minority_of(t: &[usize]) -> usize {
    if t[0] == t[1] {
        t[2]
    } else if t[0] == t[2] {
        t[1]
    } else {
        t[0]
    }
}

/// Binary operation pair `<meet, join>`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OpPair {
    pub meet: BinaryOp,
    pub join: BinaryOp,
}

impl OpPair {
    pub fn new(meet: BinaryOp, join: BinaryOp) -> Result<Self> {
        if meet.domain_size() != join.domain_size() {
            return Err(Error::structural(
                "pair operations have different domain sizes",
            ));
        }
        Ok(OpPair { meet, join })
    }

    pub fn domain_size(&self) -> usize {
        self.meet.domain_size()
    }

    pub fn min_max(domain_size: usize) -> Self {
        OpPair {
            meet: BinaryOp::min(domain_size),
            join: BinaryOp::max(domain_size),
        }
    }

    /// Tournament pair: on `{a, b}` in `tournament`, bit `i` of `orientation`
    /// (for the `i`-th pair in sorted order) picks the meet, `0` meaning the
    /// smaller label; every other pair gets `a ⊓ b = a`, `a ⊔ b = b`; the
    /// diagonal is idempotent.
    pub fn tournament(domain_size: usize, tournament: &PairSet, orientation: u64) -> Self {
        let mut meet = BinaryOp::first(domain_size).table;
        let mut join = BinaryOp::second(domain_size).table;
        for (i, (a, b)) in tournament.iter().enumerate() {
            let low_wins = orientation >> i & 1 == 0;
            let (m, j) = if low_wins { (a, b) } else { (b, a) };
            for (x, y) in [(a, b), (b, a)] {
                meet[x * domain_size + y] = m;
                join[x * domain_size + y] = j;
            }
        }
        OpPair {
            meet: BinaryOp::new(domain_size, meet).expect("labels in range"),
            join: BinaryOp::new(domain_size, join).expect("labels in range"),
        }
    }

    fn ops(&self) -> Vec<Operation> {
        vec![
            Operation::Binary(self.meet.clone()),
            Operation::Binary(self.join.clone()),
        ]
    }
}

/// Ternary operation triple `<Mj1, Mj2, Mn3>`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OpTriple {
    pub mj1: TernaryOp,
    pub mj2: TernaryOp,
    pub mn3: TernaryOp,
}

impl OpTriple {
    pub fn new(mj1: TernaryOp, mj2: TernaryOp, mn3: TernaryOp) -> Result<Self> {
        let d = mj1.domain_size();
        if mj2.domain_size() != d || mn3.domain_size() != d {
            return Err(Error::structural(
                "triple operations have different domain sizes",
            ));
        }
        Ok(OpTriple { mj1, mj2, mn3 })
    }

    pub fn domain_size(&self) -> usize {
        self.mj1.domain_size()
    }

    pub fn apply(&self, a: usize, b: usize, c: usize) -> (usize, usize, usize) {
        (
            self.mj1.apply(a, b, c),
            self.mj2.apply(a, b, c),
            self.mn3.apply(a, b, c),
        )
    }

    fn ops(&self) -> Vec<Operation> {
        vec![
            Operation::Ternary(self.mj1.clone()),
            Operation::Ternary(self.mj2.clone()),
            Operation::Ternary(self.mn3.clone()),
        ]
    }
}

/// What to check with [`check_multimorphism`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Operations {
    /// Binary multimorphism, inequality `f(x⊓y) + f(x⊔y) <= f(x) + f(y)`.
    Pair(OpPair),
    /// Ternary multimorphism.
    Triple(OpTriple),
    /// A single operation checked for preservation of every effective domain.
    Polymorphism { op: Operation },
}

impl Operations {
    pub fn domain_size(&self) -> usize {
        match self {
            Operations::Pair(p) => p.domain_size(),
            Operations::Triple(t) => t.domain_size(),
            Operations::Polymorphism { op } => op.domain_size(),
        }
    }
}

/// The function a violation was found on.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionRef {
    /// Index into the language's function list.
    Language(usize),
    /// A unary drawn from the language's implicit unary closure.
    Unary(Vec<String>),
}

fn cost_string<S: Serializer>(c: &Cost, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&c.to_string())
}

fn cost_from_string<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Cost, D::Error> {
    Cost::deserialize(d)
}

/// A failed check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// `lhs > rhs` for the images of `args`, or (polymorphism) an image
    /// outside the effective domain, reported with `lhs = inf`.
    Inequality {
        function: FunctionRef,
        args: Vec<Vec<usize>>,
        images: Vec<Vec<usize>>,
        #[serde(serialize_with = "cost_string", deserialize_with = "cost_from_string")]
        lhs: Cost,
        #[serde(serialize_with = "cost_string", deserialize_with = "cost_from_string")]
        rhs: Cost,
    },
    /// A structural requirement on the operation tables failed.
    Property {
        requirement: String,
        args: Vec<usize>,
        got: Vec<usize>,
        expected: String,
    },
}

/// Outcome of a multimorphism, polymorphism or STP/MJN condition check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MmReport {
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub violation: Option<Violation>,
    /// How the implicit unary closure was handled.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub unary_note: Option<String>,
}

impl MmReport {
    pub fn pass() -> Self {
        MmReport {
            holds: true,
            violation: None,
            unary_note: None,
        }
    }

    pub fn fail(v: Violation) -> Self {
        MmReport {
            holds: false,
            violation: Some(v),
            unary_note: None,
        }
    }

    fn with_note(mut self, note: Option<String>) -> Self {
        self.unary_note = note;
        self
    }
}

/// Each output multiset equals the input multiset at every argument tuple.
fn multiset_preserving(ops: &[Operation], d: usize) -> bool {
    let k = ops[0].arity();
    if ops.len() != k {
        return false;
    }
    Tuples::new(d, k).all(|t| {
        let mut out: Vec<usize> = ops.iter().map(|o| o.apply_slice(&t)).collect();
        let mut inp = t.clone();
        out.sort_unstable();
        inp.sort_unstable();
        out == inp
    })
}

/// Core inequality check of `ops` (all the same arity `k`) on `f`: for every
/// k-tuple of effective-domain points, in lexicographic order.
/// `(args, images, lhs, rhs)` of a failed check.
type Failure = (Vec<Vec<usize>>, Vec<Vec<usize>>, Cost, Cost);

fn check_function(ops: &[Operation], f: &CostFunction, polymorphism: bool) -> Option<Failure> {
    let k = ops[0].arity();
    let dom: Vec<(Vec<usize>, &Cost)> = f
        .table()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.is_finite())
        .map(|(i, c)| (f.tuple(i), c))
        .collect();
    if dom.is_empty() {
        return None;
    }
    let m = f.arity();
    let mut args_buf = vec![0usize; k];
    for choice in Tuples::new(dom.len(), k) {
        let mut images = Vec::with_capacity(ops.len());
        for op in ops {
            let mut img = Vec::with_capacity(m);
            for coord in 0..m {
                for (slot, &c) in args_buf.iter_mut().zip(&choice) {
                    *slot = dom[c].0[coord];
                }
                img.push(op.apply_slice(&args_buf));
            }
            images.push(img);
        }
        let lhs = Cost::sum(images.iter().map(|img| f.get(img)));
        let violated = if polymorphism {
            lhs.is_infinite()
        } else {
            let rhs = Cost::sum(choice.iter().map(|&c| dom[c].1));
            lhs > rhs
        };
        if violated {
            let rhs = Cost::sum(choice.iter().map(|&c| dom[c].1));
            let args = choice.iter().map(|&c| dom[c].0.clone()).collect();
            return Some((args, images, lhs, rhs));
        }
    }
    None
}

/// Unaries sampled from the implicit closure when the operations do not
/// preserve multisets. Indicator unaries `[x = d]` and `1 - [x = d]` together
/// force per-label multiplicity equality, which is exactly the condition for
/// every finite unary; crisp subsets cover domain preservation.
fn sampled_unaries(language: &Language, include_finite: bool) -> Vec<CostFunction> {
    let d = language.domain_size();
    let mut out = Vec::new();
    if include_finite {
        for label in 0..d {
            out.push(
                CostFunction::from_fn(d, 1, |t| Cost::int(u64::from(t[0] == label)))
                    .expect("unary"),
            );
            out.push(
                CostFunction::from_fn(d, 1, |t| Cost::int(u64::from(t[0] != label)))
                    .expect("unary"),
            );
        }
    }
    if language.unary_closure() == UnaryClosure::General {
        for subset in 1u32..(1 << d) - 1 {
            out.push(Language::crisp_unary(d, subset));
        }
    }
    out
}

fn check_ops(ops: &[Operation], language: &Language, polymorphism: bool) -> Result<MmReport> {
    let d = language.domain_size();
    if ops.iter().any(|o| o.domain_size() != d) {
        return Err(Error::structural(format!(
            "operation domain size {} differs from the language's {d}",
            ops[0].domain_size()
        )));
    }
    for (i, f) in language.functions().iter().enumerate() {
        if let Some((args, images, lhs, rhs)) = check_function(ops, f, polymorphism) {
            return Ok(MmReport::fail(Violation::Inequality {
                function: FunctionRef::Language(i),
                args,
                images,
                lhs,
                rhs,
            }));
        }
    }

    let note;
    let unaries = match language.unary_closure() {
        UnaryClosure::None => {
            note = None;
            Vec::new()
        }
        closure if polymorphism => {
            // finite unaries have full effective domain
            if closure == UnaryClosure::General {
                note = Some("crisp unary subsets checked for domain preservation".to_string());
                sampled_unaries(language, false)
            } else {
                note =
                    Some("finite unaries have full effective domain; nothing to check".to_string());
                Vec::new()
            }
        }
        _ if multiset_preserving(ops, d) => {
            note = Some(
                "operations preserve argument multisets, so every unary satisfies the inequality with equality"
                    .to_string(),
            );
            Vec::new()
        }
        _ => {
            note = Some(
                "operations do not preserve multisets; indicator and crisp unaries checked"
                    .to_string(),
            );
            sampled_unaries(language, true)
        }
    };
    for u in &unaries {
        if let Some((args, images, lhs, rhs)) = check_function(ops, u, polymorphism) {
            return Ok(MmReport::fail(Violation::Inequality {
                function: FunctionRef::Unary(u.table().iter().map(ToString::to_string).collect()),
                args,
                images,
                lhs,
                rhs,
            })
            .with_note(note));
        }
    }
    Ok(MmReport::pass().with_note(note))
}

/// Verifies the multimorphism inequality (pairs, triples) or domain
/// preservation (single operation) against every function of `language`, and
/// against its implicit unaries. Returns the first violation under
/// lexicographic enumeration of functions and argument tuples.
pub fn check_multimorphism(ops: &Operations, language: &Language) -> Result<MmReport> {
    match ops {
        Operations::Pair(p) => check_ops(&p.ops(), language, false),
        Operations::Triple(t) => check_ops(&t.ops(), language, false),
        Operations::Polymorphism { op } => check_ops(std::slice::from_ref(op), language, true),
    }
}

pub fn check_pair(pair: &OpPair, language: &Language) -> Result<MmReport> {
    check_ops(&pair.ops(), language, false)
}

pub fn check_triple(triple: &OpTriple, language: &Language) -> Result<MmReport> {
    check_ops(&triple.ops(), language, false)
}

pub fn check_polymorphism(op: &Operation, language: &Language) -> Result<MmReport> {
    check_ops(std::slice::from_ref(op), language, true)
}

/// Pair: conservative on every pair of distinct labels and commutative on the
/// pairs of `m_set`.
pub fn check_stp_on(pair: &OpPair, m_set: &PairSet) -> MmReport {
    let d = pair.domain_size();
    for a in 0..d {
        for b in 0..d {
            if a == b {
                continue;
            }
            let (m, j) = (pair.meet.apply(a, b), pair.join.apply(a, b));
            let mut got = [m, j];
            got.sort_unstable();
            if got != [a.min(b), a.max(b)] {
                return MmReport::fail(Violation::Property {
                    requirement: "conservative pair".into(),
                    args: vec![a, b],
                    got: vec![m, j],
                    expected: format!("{{{a},{b}}}"),
                });
            }
            if m_set.contains(a, b) && (m != pair.meet.apply(b, a) || j != pair.join.apply(b, a)) {
                return MmReport::fail(Violation::Property {
                    requirement: "commutative on M".into(),
                    args: vec![a, b],
                    got: vec![m, j],
                    expected: format!("({}, {})", pair.meet.apply(b, a), pair.join.apply(b, a)),
                });
            }
        }
    }
    MmReport::pass()
}

/// Triple: all three operations conservative; on every tuple whose label set
/// is a pair of `m_bar`, the first two return the repeated label and the third
/// the single one.
pub fn check_mjn_on(triple: &OpTriple, m_bar: &PairSet) -> MmReport {
    let d = triple.domain_size();
    for t in Tuples::new(d, 3) {
        let (x, y, z) = triple.apply(t[0], t[1], t[2]);
        if let Some(bad) = [x, y, z].into_iter().find(|v| !t.contains(v)) {
            return MmReport::fail(Violation::Property {
                requirement: "conservative".into(),
                args: t.clone(),
                got: vec![x, y, z],
                expected: format!("every value in {{{},{},{}}}, found {bad}", t[0], t[1], t[2]),
            });
        }
        if distinct(&t) == 2 {
            let (lo, hi) = (*t.iter().min().unwrap(), *t.iter().max().unwrap());
            if m_bar.contains(lo, hi) {
                let (mj, mn) = (majority_of(&t), minority_of(&t));
                if (x, y, z) != (mj, mj, mn) {
                    return MmReport::fail(Violation::Property {
                        requirement: "majority/majority/minority on M-bar".into(),
                        args: t.clone(),
                        got: vec![x, y, z],
                        expected: format!("({mj}, {mj}, {mn})"),
                    });
                }
            }
        }
    }
    MmReport::pass()
}

/// STP-on-M check for pairs; MJN-on-(complement of M) check for triples.
pub fn check_m_conditions(ops: &Operations, m_set: &PairSet) -> Result<MmReport> {
    if let Some(max) = m_set.max_label() {
        if max >= ops.domain_size() {
            return Err(Error::structural(format!(
                "pair set mentions label {max} outside the domain"
            )));
        }
    }
    match ops {
        Operations::Pair(p) => Ok(check_stp_on(p, m_set)),
        Operations::Triple(t) => Ok(check_mjn_on(t, &m_set.complement(t.domain_size()))),
        Operations::Polymorphism { .. } => Err(Error::structural(
            "STP and MJN conditions apply to pairs and triples",
        )),
    }
}

/// Majority search strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MajorityStrategy {
    /// Lexicographic enumeration of every candidate table (`|D| <= 3`).
    Exhaustive,
    /// Constrainedness-ordered backtracking with domain-violation pruning
    /// (`|D| <= 4`).
    Backtracking,
}

/// One refuted node of the majority search space: the values assigned to the
/// first `prefix.len()` variables already send `args` (all in the effective
/// domain of `function`) outside it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Refutation {
    pub prefix: Vec<usize>,
    pub function: usize,
    pub args: [Vec<usize>; 3],
}

/// Search tree summary that lets a caller re-check a "no majority" answer
/// without searching: every leaf is refuted and the leaves cover the space.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefutationLog {
    pub strategy: MajorityStrategy,
    /// Free argument triples (three distinct labels), in search order.
    pub variables: Vec<[usize; 3]>,
    /// Candidate values per variable.
    pub domains: Vec<Vec<usize>>,
    pub leaves: Vec<Refutation>,
    pub nodes: u64,
}

/// Result of a majority polymorphism search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MajoritySearch {
    pub found: Option<TernaryOp>,
    /// False only when the node budget ran out before the space was covered.
    pub complete: bool,
    pub log: RefutationLog,
}

impl MajoritySearch {
    /// `None` after a complete search is a certificate of non-existence.
    pub fn refuted(&self) -> bool {
        self.found.is_none() && self.complete
    }
}

/// One membership constraint: output of the candidate on coordinate-wise
/// triples must lie in `dom f`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct DomConstraint {
    function: usize,
    /// Per coordinate: fixed output label, or index of a free variable.
    slots: Vec<Slot>,
    args: [Vec<usize>; 3],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Slot {
    Fixed(usize),
    Var(usize),
}

struct MajoritySpace {
    d: usize,
    variables: Vec<[usize; 3]>,
    var_of: HashMap<[usize; 3], usize>,
    domains: Vec<Vec<usize>>,
    feas: Vec<CostFunction>,
}

impl MajoritySpace {
    fn new(language: &Language) -> Self {
        let d = language.domain_size();
        let conservative = language.unary_closure() == UnaryClosure::General;
        let variables: Vec<[usize; 3]> = Tuples::new(d, 3)
            .filter(|t| distinct(t) == 3)
            .map(|t| [t[0], t[1], t[2]])
            .collect();
        let var_of = variables.iter().enumerate().map(|(i, t)| (*t, i)).collect();
        let domains = variables
            .iter()
            .map(|t| {
                if conservative {
                    let mut v = t.to_vec();
                    v.sort_unstable();
                    v
                } else {
                    (0..d).collect()
                }
            })
            .collect();
        let feas = language
            .functions()
            .iter()
            .map(CostFunction::feas)
            .collect();
        MajoritySpace {
            d,
            variables,
            var_of,
            domains,
            feas,
        }
    }

    fn slot(&self, t: [usize; 3]) -> Slot {
        let [a, b, c] = t;
        if a == b || a == c {
            Slot::Fixed(a)
        } else if b == c {
            Slot::Fixed(b)
        } else {
            Slot::Var(self.var_of[&t])
        }
    }

    /// Constraints that mention at least one free variable, plus (returned
    /// separately) the first constraint already violated by fixed values.
    fn constraints(&self) -> (Vec<DomConstraint>, Option<DomConstraint>) {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (fi, f) in self.feas.iter().enumerate() {
            let dom = f.effective_domain();
            let m = f.arity();
            for choice in Tuples::new(dom.len(), 3) {
                let (x, y, z) = (&dom[choice[0]], &dom[choice[1]], &dom[choice[2]]);
                let slots: Vec<Slot> = (0..m).map(|k| self.slot([x[k], y[k], z[k]])).collect();
                let c = DomConstraint {
                    function: fi,
                    slots,
                    args: [x.clone(), y.clone(), z.clone()],
                };
                if c.slots.iter().all(|s| matches!(s, Slot::Fixed(_))) {
                    if !self.satisfied(&c, &[]) {
                        return (out, Some(c));
                    }
                    continue;
                }
                if seen.insert((fi, c.slots.clone())) {
                    out.push(c);
                }
            }
        }
        (out, None)
    }

    /// `values` indexed by variable; `usize::MAX` marks unassigned.
    fn satisfied(&self, c: &DomConstraint, values: &[usize]) -> bool {
        let f = &self.feas[c.function];
        let idx = c.slots.iter().fold(0, |acc, s| {
            let v = match *s {
                Slot::Fixed(l) => l,
                Slot::Var(i) => values[i],
            };
            acc * self.d + v
        });
        f.table()[idx].is_finite()
    }

    fn build(&self, values: &[usize]) -> TernaryOp {
        TernaryOp::from_fn(self.d, |a, b, c| match self.slot([a, b, c]) {
            Slot::Fixed(l) => l,
            Slot::Var(i) => values[i],
        })
    }
}

/// Searches for a majority operation preserving every effective domain of the
/// language. When the language carries general unaries the candidates are
/// restricted to conservative operations (crisp unaries on every 3-set).
pub fn search_majority(
    language: &Language,
    strategy: MajorityStrategy,
) -> Result<Option<TernaryOp>> {
    Ok(search_majority_logged(language, strategy, None)?.found)
}

/// [`search_majority`] with a refutation log and an optional node budget for
/// the backtracking strategy.
pub fn search_majority_logged(
    language: &Language,
    strategy: MajorityStrategy,
    node_budget: Option<u64>,
) -> Result<MajoritySearch> {
    let d = language.domain_size();
    match strategy {
        MajorityStrategy::Exhaustive if d > 3 => {
            return Err(Error::capability(format!(
                "exhaustive majority search supports |D| <= 3, got {d}"
            )))
        }
        MajorityStrategy::Backtracking if d > 4 => {
            return Err(Error::capability(format!(
                "backtracking majority search supports |D| <= 4, got {d}"
            )))
        }
        _ => {}
    }
    let space = MajoritySpace::new(language);
    let (constraints, root) = space.constraints();
    let n = space.variables.len();

    let mut log = RefutationLog {
        strategy,
        variables: Vec::new(),
        domains: Vec::new(),
        leaves: Vec::new(),
        nodes: 0,
    };

    if let Some(c) = root {
        log.variables = space.variables.clone();
        log.domains = space.domains.clone();
        log.leaves.push(Refutation {
            prefix: Vec::new(),
            function: c.function,
            args: c.args,
        });
        log.nodes = 1;
        return Ok(MajoritySearch {
            found: None,
            complete: true,
            log,
        });
    }

    match strategy {
        MajorityStrategy::Exhaustive => {
            log.variables = space.variables.clone();
            log.domains = space.domains.clone();
            let sizes: Vec<usize> = space.domains.iter().map(Vec::len).collect();
            let mut digits = vec![0usize; n];
            loop {
                log.nodes += 1;
                let values: Vec<usize> = digits
                    .iter()
                    .zip(&space.domains)
                    .map(|(&i, dm)| dm[i])
                    .collect();
                match constraints.iter().find(|c| !space.satisfied(c, &values)) {
                    None => {
                        return Ok(MajoritySearch {
                            found: Some(space.build(&values)),
                            complete: true,
                            log,
                        });
                    }
                    Some(c) => log.leaves.push(Refutation {
                        prefix: values,
                        function: c.function,
                        args: c.args.clone(),
                    }),
                }
                // odometer, last variable fastest
                let mut k = n;
                loop {
                    if k == 0 {
                        return Ok(MajoritySearch {
                            found: None,
                            complete: true,
                            log,
                        });
                    }
                    k -= 1;
                    digits[k] += 1;
                    if digits[k] < sizes[k] {
                        break;
                    }
                    digits[k] = 0;
                }
            }
        }
        MajorityStrategy::Backtracking => {
            // most-constrained variables first, ties by lexicographic triple
            let mut counts = vec![0usize; n];
            for c in &constraints {
                for s in &c.slots {
                    if let Slot::Var(i) = s {
                        counts[*i] += 1;
                    }
                }
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
            let mut position = vec![0usize; n];
            for (p, &v) in order.iter().enumerate() {
                position[v] = p;
            }
            // constraints become checkable at the position of their last variable
            let mut by_position: Vec<Vec<usize>> = vec![Vec::new(); n];
            for (ci, c) in constraints.iter().enumerate() {
                let last = c
                    .slots
                    .iter()
                    .filter_map(|s| match s {
                        Slot::Var(i) => Some(position[*i]),
                        Slot::Fixed(_) => None,
                    })
                    .max()
                    .expect("constraint has a variable");
                by_position[last].push(ci);
            }
            log.variables = order.iter().map(|&v| space.variables[v]).collect();
            log.domains = order.iter().map(|&v| space.domains[v].clone()).collect();

            let mut values = vec![usize::MAX; n];
            let mut prefix = Vec::with_capacity(n);
            let mut budget_hit = false;
            let found = backtrack(
                0,
                &order,
                &space,
                &constraints,
                &by_position,
                &mut values,
                &mut prefix,
                &mut log,
                node_budget,
                &mut budget_hit,
            );
            let found = found.then(|| space.build(&values));
            Ok(MajoritySearch {
                complete: found.is_some() || !budget_hit,
                found,
                log,
            })
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn backtrack(
    pos: usize,
    order: &[usize],
    space: &MajoritySpace,
    constraints: &[DomConstraint],
    by_position: &[Vec<usize>],
    values: &mut [usize],
    prefix: &mut Vec<usize>,
    log: &mut RefutationLog,
    budget: Option<u64>,
    budget_hit: &mut bool,
) -> bool {
    if pos == order.len() {
        return true;
    }
    let var = order[pos];
    for &v in &space.domains[var] {
        if budget.is_some_and(|b| log.nodes >= b) {
            *budget_hit = true;
            return false;
        }
        log.nodes += 1;
        values[var] = v;
        prefix.push(v);
        let failed = by_position[pos]
            .iter()
            .map(|&ci| &constraints[ci])
            .find(|c| !space.satisfied(c, values));
        match failed {
            Some(c) => log.leaves.push(Refutation {
                prefix: prefix.clone(),
                function: c.function,
                args: c.args.clone(),
            }),
            None => {
                if backtrack(
                    pos + 1,
                    order,
                    space,
                    constraints,
                    by_position,
                    values,
                    prefix,
                    log,
                    budget,
                    budget_hit,
                ) {
                    return true;
                }
                if *budget_hit {
                    prefix.pop();
                    values[var] = usize::MAX;
                    return false;
                }
            }
        }
        prefix.pop();
        values[var] = usize::MAX;
    }
    false
}

/// Re-checks a "no majority" log against `language` without searching: the
/// variables must be exactly the free triples with the expected candidate
/// values, every leaf must be a genuine domain violation, and the leaves must
/// cover the whole candidate space.
pub fn replay_refutation(language: &Language, log: &RefutationLog) -> Result<(), String> {
    let space = MajoritySpace::new(language);
    let mut vars: Vec<[usize; 3]> = log.variables.clone();
    vars.sort_unstable();
    if vars != space.variables {
        return Err("variable set differs from the free triples of the domain".into());
    }
    if log.domains.len() != log.variables.len() {
        return Err("one candidate list per variable expected".into());
    }
    for (t, dm) in log.variables.iter().zip(&log.domains) {
        let expected = &space.domains[space.var_of[t]];
        let mut got = dm.clone();
        got.sort_unstable();
        if &got != expected {
            return Err(format!(
                "candidate values for {t:?} differ from the search space"
            ));
        }
    }
    let mut values = vec![usize::MAX; space.variables.len()];
    for leaf in &log.leaves {
        let f = language
            .functions()
            .get(leaf.function)
            .ok_or_else(|| format!("leaf references missing function {}", leaf.function))?;
        if leaf.prefix.len() > log.variables.len() {
            return Err("leaf prefix longer than the variable list".into());
        }
        values.iter_mut().for_each(|v| *v = usize::MAX);
        for (p, &v) in leaf.prefix.iter().enumerate() {
            values[space.var_of[&log.variables[p]]] = v;
        }
        let [x, y, z] = &leaf.args;
        if [x, y, z]
            .iter()
            .any(|t| t.len() != f.arity() || !f.in_dom(t))
        {
            return Err(format!(
                "leaf arguments for function {} are not in its domain",
                leaf.function
            ));
        }
        let mut image = Vec::with_capacity(f.arity());
        for k in 0..f.arity() {
            let v = match space.slot([x[k], y[k], z[k]]) {
                Slot::Fixed(l) => l,
                Slot::Var(i) if values[i] != usize::MAX => values[i],
                Slot::Var(_) => return Err("leaf depends on a variable outside its prefix".into()),
            };
            image.push(v);
        }
        if f.in_dom(&image) {
            return Err(format!(
                "leaf image {image:?} lies in the domain of function {}",
                leaf.function
            ));
        }
    }
    let leaves: HashSet<&[usize]> = log.leaves.iter().map(|l| l.prefix.as_slice()).collect();
    fn covered(prefix: &mut Vec<usize>, log: &RefutationLog, leaves: &HashSet<&[usize]>) -> bool {
        if leaves.contains(prefix.as_slice()) {
            return true;
        }
        let p = prefix.len();
        if p == log.variables.len() {
            return false;
        }
        for &v in &log.domains[p] {
            prefix.push(v);
            let ok = covered(prefix, log, leaves);
            prefix.pop();
            if !ok {
                return false;
            }
        }
        true
    }
    if !covered(&mut Vec::new(), log, &leaves) {
        return Err("refutation leaves do not cover the candidate space".into());
    }
    Ok(())
}

/// Largest pair set accepted by [`search_stp`].
pub const STP_SEARCH_CAP: usize = 20;

/// Enumerates the `2^|m_set|` tournament orientations on `m_set` (first/second
/// projections elsewhere) and returns the first one that is a multimorphism of
/// `language`. The result is re-verified against the STP-on-M conditions.
pub fn search_stp(language: &Language, m_set: &PairSet) -> Result<Option<OpPair>> {
    if m_set.len() > STP_SEARCH_CAP {
        return Err(Error::capability(format!(
            "STP search over {} pairs exceeds the cap of {STP_SEARCH_CAP}",
            m_set.len()
        )));
    }
    let d = language.domain_size();
    if m_set.max_label().is_some_and(|m| m >= d) {
        return Err(Error::structural(
            "pair set mentions labels outside the domain",
        ));
    }
    for orientation in 0..1u64 << m_set.len() {
        let pair = OpPair::tournament(d, m_set, orientation);
        if check_pair(&pair, language)?.holds {
            let on_m = check_stp_on(&pair, m_set);
            debug_assert!(on_m.holds, "tournament construction is an STP on M");
            if on_m.holds {
                return Ok(Some(pair));
            }
        }
    }
    Ok(None)
}
