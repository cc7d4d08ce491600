//! Languages, VCSP instances, assignments and their JSON file formats.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cost::Cost;
use crate::error::{Error, Result};
use crate::function::CostFunction;

/// Which unary cost functions a language implicitly contains.
///
/// `Finite` is conservativity in the weighted sense (every finite-valued
/// unary); `General` additionally admits unaries taking the value `inf`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnaryClosure {
    None,
    Finite,
    General,
}

/// A finite set of cost functions over a common domain, plus an implicit
/// (possibly infinite) family of unary functions described by `unary_closure`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(try_from = "LanguageFile", into = "LanguageFile")]
pub struct Language {
    domain_size: usize,
    functions: Vec<CostFunction>,
    unary_closure: UnaryClosure,
}

impl Language {
    pub fn new(
        domain_size: usize,
        functions: Vec<CostFunction>,
        unary_closure: UnaryClosure,
    ) -> Result<Self> {
        if domain_size < 2 {
            return Err(Error::structural(format!(
                "domain size must be at least 2, got {domain_size}"
            )));
        }
        for (i, f) in functions.iter().enumerate() {
            if f.domain_size() != domain_size {
                return Err(Error::structural(format!(
                    "function {i} has domain size {} but the language has {domain_size}",
                    f.domain_size()
                )));
            }
        }
        Ok(Language {
            domain_size,
            functions,
            unary_closure,
        })
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn functions(&self) -> &[CostFunction] {
        &self.functions
    }

    pub fn unary_closure(&self) -> UnaryClosure {
        self.unary_closure
    }

    /// Contains every finite-valued unary.
    pub fn is_conservative(&self) -> bool {
        self.unary_closure != UnaryClosure::None
    }

    pub fn with_unary_closure(&self, unary_closure: UnaryClosure) -> Language {
        Language {
            unary_closure,
            ..self.clone()
        }
    }

    /// Appends a function, returning its index.
    pub fn push(&mut self, f: CostFunction) -> Result<usize> {
        if f.domain_size() != self.domain_size {
            return Err(Error::structural(
                "function domain size differs from the language",
            ));
        }
        self.functions.push(f);
        Ok(self.functions.len() - 1)
    }

    /// Materialises a unary from the implicit closure. Fails if the closure
    /// does not contain it.
    pub fn unary(&self, values: Vec<Cost>) -> Result<CostFunction> {
        let has_inf = values.iter().any(Cost::is_infinite);
        let allowed = match self.unary_closure {
            UnaryClosure::None => false,
            UnaryClosure::Finite => !has_inf,
            UnaryClosure::General => true,
        };
        if !allowed {
            return Err(Error::Precondition(format!(
                "unary closure {:?} does not contain the requested unary",
                self.unary_closure
            )));
        }
        CostFunction::new(self.domain_size, 1, values)
    }

    /// The crisp unary that is zero on `subset` (a label bitmask).
    pub fn crisp_unary(domain_size: usize, subset: u32) -> CostFunction {
        CostFunction::crisp(domain_size, 1, |t| subset & (1 << t[0]) != 0).expect("valid unary")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&LanguageFile::from(self)).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: LanguageFile =
            serde_json::from_str(text).map_err(|e| Error::parse(format!("language file: {e}")))?;
        raw.try_into()
    }

    /// Hex SHA-256 of the canonical (compact) JSON encoding.
    pub fn content_hash(&self) -> String {
        let canonical = serde_json::to_string(&LanguageFile::from(self)).expect("serializable");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct FunctionFile {
    pub arity: usize,
    pub table: Vec<Cost>,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct LanguageFile {
    pub domain_size: usize,
    #[serde(default = "default_closure")]
    pub unary_closure: UnaryClosure,
    pub functions: Vec<FunctionFile>,
}

fn default_closure() -> UnaryClosure {
    UnaryClosure::None
}

impl From<&CostFunction> for FunctionFile {
    fn from(f: &CostFunction) -> Self {
        FunctionFile {
            arity: f.arity(),
            table: f.table().to_vec(),
        }
    }
}

impl From<&Language> for LanguageFile {
    fn from(l: &Language) -> Self {
        LanguageFile {
            domain_size: l.domain_size,
            unary_closure: l.unary_closure,
            functions: l.functions.iter().map(FunctionFile::from).collect(),
        }
    }
}

impl From<Language> for LanguageFile {
    fn from(l: Language) -> Self {
        LanguageFile::from(&l)
    }
}

impl FunctionFile {
    pub(crate) fn into_function(self, domain_size: usize) -> Result<CostFunction> {
        CostFunction::new(domain_size, self.arity, self.table)
    }
}

impl TryFrom<LanguageFile> for Language {
    type Error = Error;

    fn try_from(raw: LanguageFile) -> Result<Self> {
        let functions = raw
            .functions
            .into_iter()
            .enumerate()
            .map(|(i, f)| {
                f.into_function(raw.domain_size)
                    .map_err(|e| Error::parse(format!("function {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Language::new(raw.domain_size, functions, raw.unary_closure)
    }
}

/// One term of an instance: a function index and the variables it reads.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    #[serde(rename = "fn")]
    pub function: usize,
    pub scope: Vec<usize>,
}

/// A VCSP instance: a sum of language terms over `num_vars` variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub num_vars: usize,
    pub terms: Vec<Term>,
}

impl Instance {
    pub fn new(num_vars: usize, terms: Vec<Term>) -> Result<Self> {
        let inst = Instance { num_vars, terms };
        inst.check_scopes()?;
        Ok(inst)
    }

    fn check_scopes(&self) -> Result<()> {
        for (t, term) in self.terms.iter().enumerate() {
            if let Some(&v) = term.scope.iter().find(|&&v| v >= self.num_vars) {
                return Err(Error::structural(format!(
                    "term {t} references variable {v} but the instance has {} variables",
                    self.num_vars
                )));
            }
        }
        Ok(())
    }

    /// Checks every term against `language`: valid function index, scope
    /// length equal to the arity.
    pub fn validate(&self, language: &Language) -> Result<()> {
        self.check_scopes()?;
        for (t, term) in self.terms.iter().enumerate() {
            let f = language.functions().get(term.function).ok_or_else(|| {
                Error::structural(format!(
                    "term {t} references function {} but the language has {}",
                    term.function,
                    language.functions().len()
                ))
            })?;
            if f.arity() != term.scope.len() {
                return Err(Error::structural(format!(
                    "term {t} has scope length {} but function {} has arity {}",
                    term.scope.len(),
                    term.function,
                    f.arity()
                )));
            }
        }
        Ok(())
    }

    pub fn push(&mut self, function: usize, scope: Vec<usize>) {
        self.terms.push(Term { function, scope });
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: Instance =
            serde_json::from_str(text).map_err(|e| Error::parse(format!("instance file: {e}")))?;
        inst.check_scopes()?;
        Ok(inst)
    }
}

/// A labelling of the instance variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(pub Vec<usize>);

impl Deref for Assignment {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for Assignment {
    fn from(v: Vec<usize>) -> Self {
        Assignment(v)
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{x}")?;
        }
        f.write_str(")")
    }
}

/// Total cost of `x` under `instance`: the exact sum of every term's value on
/// its scoped labels.
pub fn evaluate(instance: &Instance, language: &Language, x: &[usize]) -> Result<Cost> {
    if x.len() != instance.num_vars {
        return Err(Error::structural(format!(
            "assignment has {} labels but the instance has {} variables",
            x.len(),
            instance.num_vars
        )));
    }
    if let Some(&l) = x.iter().find(|&&l| l >= language.domain_size()) {
        return Err(Error::structural(format!("label {l} outside the domain")));
    }
    instance.validate(language)?;
    Ok(evaluate_unchecked(instance, language, x))
}

/// [`evaluate`] without validation, for hot loops over pre-validated input.
pub(crate) fn evaluate_unchecked(instance: &Instance, language: &Language, x: &[usize]) -> Cost {
    let d = language.domain_size();
    let mut acc = Cost::zero();
    for term in &instance.terms {
        let f = &language.functions()[term.function];
        let idx = term.scope.iter().fold(0, |a, &v| a * d + x[v]);
        acc = acc.add_ref(&f.table()[idx]);
        if acc.is_infinite() {
            return acc;
        }
    }
    acc
}
