//! Seeded random languages and instances.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::Cost;
use crate::error::{Error, Result};
use crate::function::{CostFunction, TABLE_CAP};
use crate::language::{Instance, Language, Term, UnaryClosure};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageParams {
    pub domain_size: usize,
    pub functions: usize,
    pub min_arity: usize,
    pub max_arity: usize,
    /// Tables take values in `0..=max_cost` or infinity.
    pub max_cost: u64,
    /// Chance in percent that an entry is infinite.
    pub infinity_percent: u32,
    pub crisp: bool,
    pub unary_closure: UnaryClosure,
}

impl Default for LanguageParams {
    fn default() -> Self {
        LanguageParams {
            domain_size: 2,
            functions: 1,
            min_arity: 2,
            max_arity: 2,
            max_cost: 3,
            infinity_percent: 20,
            crisp: false,
            unary_closure: UnaryClosure::Finite,
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_function<R: Rng>(
    rng: &mut R,
    p: &LanguageParams,
    arity: usize,
) -> Result<CostFunction> {
    CostFunction::from_fn(p.domain_size, arity, |_| {
        if rng.gen_range(0..100) < p.infinity_percent {
            Cost::Infinite
        } else if p.crisp {
            Cost::zero()
        } else {
            Cost::int(rng.gen_range(0..=p.max_cost))
        }
    })
}

pub fn random_language<R: Rng>(rng: &mut R, p: &LanguageParams) -> Result<Language> {
    if p.min_arity == 0 || p.min_arity > p.max_arity || p.domain_size == 0 {
        return Err(Error::structural(
            "need 1 <= min_arity <= max_arity and a nonempty domain",
        ));
    }
    if p.domain_size
        .checked_pow(p.max_arity as u32)
        .is_none_or(|n| n > TABLE_CAP)
    {
        return Err(Error::capability("tables would exceed the size cap"));
    }
    let fs = (0..p.functions)
        .map(|_| {
            let arity = rng.gen_range(p.min_arity..=p.max_arity);
            random_function(rng, p, arity)
        })
        .collect::<Result<_>>()?;
    Language::new(p.domain_size, fs, p.unary_closure)
}

/// `terms` terms over `num_vars` variables, each with a uniformly chosen
/// function and distinct scope variables where the arity allows.
pub fn random_instance<R: Rng>(
    rng: &mut R,
    language: &Language,
    num_vars: usize,
    terms: usize,
) -> Result<Instance> {
    let fs = language.functions();
    if fs.is_empty() && terms > 0 {
        return Err(Error::structural(
            "cannot draw terms from an empty language",
        ));
    }
    if num_vars == 0 && terms > 0 {
        return Err(Error::structural("terms need at least one variable"));
    }
    let vars: Vec<usize> = (0..num_vars).collect();
    let mut out = Vec::with_capacity(terms);
    for _ in 0..terms {
        let function = rng.gen_range(0..fs.len());
        let arity = fs[function].arity();
        let scope = if arity <= num_vars {
            vars.choose_multiple(rng, arity).copied().collect()
        } else {
            (0..arity).map(|_| rng.gen_range(0..num_vars)).collect()
        };
        out.push(Term { function, scope });
    }
    Instance::new(num_vars, out)
}

/// A uniformly random assignment in the effective domain of the instance,
/// by rejection; `None` after `tries` misses.
pub fn random_feasible<R: Rng>(
    rng: &mut R,
    instance: &Instance,
    language: &Language,
    tries: usize,
) -> Result<Option<Vec<usize>>> {
    let d = language.domain_size();
    for _ in 0..tries {
        let x: Vec<usize> = (0..instance.num_vars)
            .map(|_| rng.gen_range(0..d))
            .collect();
        if crate::language::evaluate(instance, language, &x)?.is_finite() {
            return Ok(Some(x));
        }
    }
    Ok(None)
}
