//! Language and instance transformations: Feas / MinHom / bar languages, the
//! cap reduction removing infinite unaries, the MinHom reduction, and
//! unary-plus-binary decomposition of relations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cost::{Cost, Rational};
use crate::error::{Error, Result};
use crate::function::{CostFunction, Tuples};
use crate::language::{Instance, Language, Term, UnaryClosure};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DeriveMode {
    /// Every finite value set to zero.
    Feas,
    /// Feas plus all finite-valued unaries.
    Minhom,
    /// The language plus all general-valued unaries.
    Bar,
}

pub fn derive_language(language: &Language, mode: DeriveMode) -> Language {
    match mode {
        DeriveMode::Feas => {
            // a finite unary crispifies to the all-zero unary
            let closure = match language.unary_closure() {
                UnaryClosure::Finite => UnaryClosure::None,
                c => c,
            };
            let fs = language
                .functions()
                .iter()
                .map(CostFunction::feas)
                .collect();
            Language::new(language.domain_size(), fs, closure).expect("same shapes")
        }
        DeriveMode::Minhom => {
            derive_language(language, DeriveMode::Feas).with_unary_closure(UnaryClosure::Finite)
        }
        DeriveMode::Bar => language.with_unary_closure(UnaryClosure::General),
    }
}

fn unary_has_infinity(f: &CostFunction) -> bool {
    f.arity() == 1 && f.table().iter().any(Cost::is_infinite)
}

/// Output of [`cap_reduce`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapReduction {
    pub instance: Instance,
    /// Same indices as the input language, every infinite-valued unary `u`
    /// replaced by `min(u, C)`; the penalty unaries `C * [u = inf]` are
    /// appended.
    pub language: Language,
    pub c: Rational,
    pub n: u64,
    /// `N * C`: finite original costs stay below it, infinite ones map to at
    /// least it.
    pub threshold: Rational,
}

/// Removes infinite values from unary terms. Each term of an
/// infinite-valued unary `u` becomes `min(u, C)` once plus `N - 1` copies of
/// `C * [u = inf]`, with `C` one more than the largest finite value any term
/// can take and `N` the number of terms. Finite assignment costs are
/// unchanged; assignments made infeasible only by unaries cost at least
/// `N * C`.
pub fn cap_reduce(instance: &Instance, language: &Language) -> Result<CapReduction> {
    instance.validate(language)?;
    let fs = language.functions();
    let mut used: Vec<usize> = instance.terms.iter().map(|t| t.function).collect();
    used.sort_unstable();
    used.dedup();
    let max = used
        .iter()
        .filter_map(|&i| fs[i].max_finite())
        .max()
        .cloned()
        .unwrap_or_else(Rational::zero);
    let c = &max + &Rational::from_integer(1);
    let n = instance.terms.len().max(1) as u64;
    let capped = |u: &CostFunction| {
        let t = u.table().iter().map(|x| {
            if x.is_finite() {
                x.clone()
            } else {
                Cost::Finite(c.clone())
            }
        });
        CostFunction::new(u.domain_size(), 1, t.collect()).expect("unary shape")
    };
    let mut functions: Vec<CostFunction> = fs
        .iter()
        .map(|f| {
            if unary_has_infinity(f) {
                capped(f)
            } else {
                f.clone()
            }
        })
        .collect();
    let mut penalty = BTreeMap::new();
    let mut terms = Vec::new();
    for term in &instance.terms {
        terms.push(term.clone());
        let f = &fs[term.function];
        if !unary_has_infinity(f) {
            continue;
        }
        let p = *penalty.entry(term.function).or_insert_with(|| {
            let t = f.table().iter().map(|x| {
                if x.is_finite() {
                    Cost::zero()
                } else {
                    Cost::Finite(c.clone())
                }
            });
            functions
                .push(CostFunction::new(f.domain_size(), 1, t.collect()).expect("unary shape"));
            functions.len() - 1
        });
        for _ in 1..n {
            terms.push(Term {
                function: p,
                scope: term.scope.clone(),
            });
        }
    }
    let closure = match language.unary_closure() {
        UnaryClosure::General => UnaryClosure::Finite,
        u => u,
    };
    Ok(CapReduction {
        instance: Instance::new(instance.num_vars, terms)?,
        language: Language::new(language.domain_size(), functions, closure)?,
        threshold: c.mul_integer(n),
        c,
        n,
    })
}

/// Output of [`minhom_reduce`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinHomReduction {
    pub instance: Instance,
    /// Same indices as the input: `f°` for every non-unary function, `C * u`
    /// for every unary.
    pub language: Language,
    pub c: Rational,
    pub n: u64,
}

impl MinHomReduction {
    /// `N * C`.
    pub fn scale(&self) -> Rational {
        self.c.mul_integer(self.n)
    }

    /// Original cost from a reduced cost: `floor(cost / (N * C))`, or
    /// infinite.
    pub fn recover(&self, reduced: &Cost) -> Cost {
        match reduced {
            Cost::Infinite => Cost::Infinite,
            Cost::Finite(r) => {
                let q = r.floor_div(&self.scale());
                Cost::Finite(Rational::new(q, 1.into()).expect("non-negative quotient"))
            }
        }
    }
}

/// Turns an instance over crisp non-unary functions plus integer unaries into
/// one over the valued originals `f°` (given per function index) plus the
/// scaled unaries `C * u`, each unary term repeated `N` times. Then
/// `N C f(x) <= f'(x) < N C (f(x) + 1)` on `dom f`, so the original optimum is
/// `floor(opt' / (N C))`.
pub fn minhom_reduce(
    instance: &Instance,
    language: &Language,
    originals: &BTreeMap<usize, CostFunction>,
) -> Result<MinHomReduction> {
    instance.validate(language)?;
    let fs = language.functions();
    let mut used: Vec<usize> = instance.terms.iter().map(|t| t.function).collect();
    used.sort_unstable();
    used.dedup();
    let mut max = Rational::zero();
    for &i in &used {
        let f = &fs[i];
        if f.arity() == 1 {
            if let Some(bad) = f
                .table()
                .iter()
                .filter_map(Cost::finite)
                .find(|r| !r.is_integer())
            {
                return Err(Error::Precondition(format!(
                    "unary function {i} has the non-integer cost {bad}; the reduction needs integer costs"
                )));
            }
            continue;
        }
        let o = originals
            .get(&i)
            .ok_or_else(|| Error::Precondition(format!("function {i} has no valued original")))?;
        if o.arity() != f.arity() || o.domain_size() != f.domain_size() {
            return Err(Error::structural(format!(
                "original of function {i} has a different shape"
            )));
        }
        if o.feas() != *f {
            return Err(Error::Precondition(format!(
                "function {i} is not the feasibility relation of its original"
            )));
        }
        if let Some(m) = o.max_finite() {
            max = max.max(m.clone());
        }
    }
    let c = &max + &Rational::from_integer(1);
    let t_star = instance
        .terms
        .iter()
        .filter(|t| fs[t.function].arity() != 1)
        .count();
    // with no higher-arity terms N = 0 would erase the unaries
    let n = t_star.max(1) as u64;
    let functions = fs
        .iter()
        .enumerate()
        .map(|(i, f)| {
            if f.arity() == 1 {
                let t = f.table().iter().map(|x| {
                    x.finite()
                        .map_or(Cost::Infinite, |r| Cost::Finite(r.mul(&c)))
                });
                CostFunction::new(f.domain_size(), 1, t.collect()).expect("unary shape")
            } else {
                originals.get(&i).cloned().unwrap_or_else(|| f.clone())
            }
        })
        .collect();
    let mut terms = Vec::new();
    for term in &instance.terms {
        let copies = if fs[term.function].arity() == 1 { n } else { 1 };
        for _ in 0..copies {
            terms.push(term.clone());
        }
    }
    Ok(MinHomReduction {
        instance: Instance::new(instance.num_vars, terms)?,
        language: Language::new(language.domain_size(), functions, UnaryClosure::Finite)?,
        c,
        n,
    })
}

/// Minimizations of a function onto single coordinates and coordinate pairs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryDecomposition {
    /// `unary[i](a) = min { f(u) : u_i = a }`.
    pub unary: Vec<CostFunction>,
    /// `((i, j), rho)` for every ordered pair `i != j`, with
    /// `rho(a, b) = min { f(u) : (u_i, u_j) = (a, b) }`.
    pub binary: Vec<((usize, usize), CostFunction)>,
    /// `dom f` equals the tuples all of whose projections lie in the parts'
    /// effective domains.
    pub exact: bool,
}

pub fn binary_decompose(f: &CostFunction) -> Result<BinaryDecomposition> {
    let m = f.arity();
    if m < 2 {
        return Err(Error::Precondition(
            "decomposition needs arity at least 2".into(),
        ));
    }
    let d = f.domain_size();
    let mut unary = vec![vec![Cost::Infinite; d]; m];
    let mut binary = vec![vec![Cost::Infinite; d * d]; m * m];
    for (k, u) in Tuples::new(d, m).enumerate() {
        let v = &f.table()[k];
        if v.is_infinite() {
            continue;
        }
        for i in 0..m {
            if *v < unary[i][u[i]] {
                unary[i][u[i]] = v.clone();
            }
            for j in 0..m {
                let cell = &mut binary[i * m + j][u[i] * d + u[j]];
                if i != j && *v < *cell {
                    *cell = v.clone();
                }
            }
        }
    }
    let exact = Tuples::new(d, m).enumerate().all(|(k, u)| {
        let implied = (0..m).all(|i| unary[i][u[i]].is_finite())
            && (0..m)
                .all(|i| (0..m).all(|j| i == j || binary[i * m + j][u[i] * d + u[j]].is_finite()));
        implied == f.table()[k].is_finite()
    });
    let unary = unary
        .into_iter()
        .map(|t| CostFunction::new(d, 1, t))
        .collect::<Result<_>>()?;
    let binary = binary
        .into_iter()
        .enumerate()
        .filter(|(k, _)| k / m != k % m)
        .map(|(k, t)| Ok(((k / m, k % m), CostFunction::new(d, 2, t)?)))
        .collect::<Result<_>>()?;
    Ok(BinaryDecomposition {
        unary,
        binary,
        exact,
    })
}
