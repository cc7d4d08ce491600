//! Exhaustive solving and multimorphism-guided fusion of assignments.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::Cost;
use crate::error::{Error, Result};
use crate::function::{checked_pow, Tuples};
use crate::language::{evaluate, evaluate_unchecked, Assignment, Instance, Language};
use crate::ops::{check_pair, check_triple, OpPair, OpTriple};

/// Largest number of assignments [`brute_force_solve`] enumerates.
pub const SOLVE_CAP: usize = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Solution {
    pub assignment: Assignment,
    pub cost: Cost,
    pub optimal: bool,
    pub feasible: bool,
}

/// Exhaustive minimum; ties go to the lexicographically least assignment.
pub fn brute_force_solve(instance: &Instance, language: &Language) -> Result<Solution> {
    brute_force_solve_with(instance, language, 1)
}

/// [`brute_force_solve`] with the assignment space split over `workers`
/// threads by the value of the first variable.
pub fn brute_force_solve_with(
    instance: &Instance,
    language: &Language,
    workers: usize,
) -> Result<Solution> {
    instance.validate(language)?;
    let d = language.domain_size();
    let n = instance.num_vars;
    checked_pow(d, n, SOLVE_CAP).ok_or_else(|| {
        Error::capability(format!("{d}^{n} assignments exceed the cap of {SOLVE_CAP}"))
    })?;
    let best_in = |first: Option<usize>| -> (Cost, Vec<usize>) {
        let rest = if first.is_some() { n - 1 } else { n };
        let mut best: Option<(Cost, Vec<usize>)> = None;
        for tail in Tuples::new(d, rest) {
            let x: Vec<usize> = first.into_iter().chain(tail).collect();
            let c = evaluate_unchecked(instance, language, &x);
            if best.as_ref().is_none_or(|(b, _)| c < *b) {
                best = Some((c, x));
            }
        }
        best.expect("at least one assignment")
    };
    let (cost, x) = if workers > 1 && n > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::capability(format!("thread pool: {e}")))?;
        pool.install(|| {
            (0..d)
                .into_par_iter()
                .map(|a| best_in(Some(a)))
                .collect::<Vec<_>>()
                .into_iter()
                .min_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)))
                .expect("nonempty domain")
        })
    } else {
        best_in(None)
    };
    Ok(Solution {
        feasible: cost.is_finite(),
        assignment: Assignment(x),
        cost,
        optimal: true,
    })
}

/// Operations that passed the multimorphism check against a language. Only
/// constructible through verification.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certified {
    ops: CertifiedOps,
    language_hash: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum CertifiedOps {
    Pair(OpPair),
    Triple(OpTriple),
}

impl Certified {
    pub fn pair(pair: OpPair, language: &Language) -> Result<Self> {
        let r = check_pair(&pair, language)?;
        if !r.holds {
            return Err(Error::Precondition(format!(
                "pair is not a multimorphism: {:?}",
                r.violation
            )));
        }
        Ok(Certified {
            ops: CertifiedOps::Pair(pair),
            language_hash: language.content_hash(),
        })
    }

    pub fn triple(triple: OpTriple, language: &Language) -> Result<Self> {
        let r = check_triple(&triple, language)?;
        if !r.holds {
            return Err(Error::Precondition(format!(
                "triple is not a multimorphism: {:?}",
                r.violation
            )));
        }
        Ok(Certified {
            ops: CertifiedOps::Triple(triple),
            language_hash: language.content_hash(),
        })
    }

    pub fn arity(&self) -> usize {
        match self.ops {
            CertifiedOps::Pair(_) => 2,
            CertifiedOps::Triple(_) => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fusion {
    pub outputs: Vec<Assignment>,
    pub input_cost: Cost,
    pub output_cost: Cost,
}

/// Applies the operations coordinate-wise to the input assignments. The total
/// cost of the outputs never exceeds that of the inputs; a violation is
/// reported as an error rather than returned.
pub fn fuse_improve(
    instance: &Instance,
    language: &Language,
    ops: &Certified,
    inputs: &[Assignment],
) -> Result<Fusion> {
    if ops.language_hash != language.content_hash() {
        return Err(Error::Precondition(
            "operations were certified for a different language".into(),
        ));
    }
    if inputs.len() != ops.arity() {
        return Err(Error::structural(format!(
            "fusion needs {} assignments, got {}",
            ops.arity(),
            inputs.len()
        )));
    }
    let n = instance.num_vars;
    let d = language.domain_size();
    if inputs
        .iter()
        .any(|x| x.len() != n || x.iter().any(|&v| v >= d))
    {
        return Err(Error::structural("assignment does not match the instance"));
    }
    let outputs: Vec<Vec<usize>> = match &ops.ops {
        CertifiedOps::Pair(p) => {
            let (x, y) = (&inputs[0], &inputs[1]);
            vec![
                (0..n).map(|i| p.meet.apply(x[i], y[i])).collect(),
                (0..n).map(|i| p.join.apply(x[i], y[i])).collect(),
            ]
        }
        CertifiedOps::Triple(t) => {
            let (x, y, z) = (&inputs[0], &inputs[1], &inputs[2]);
            let fused: Vec<(usize, usize, usize)> =
                (0..n).map(|i| t.apply(x[i], y[i], z[i])).collect();
            vec![
                fused.iter().map(|f| f.0).collect(),
                fused.iter().map(|f| f.1).collect(),
                fused.iter().map(|f| f.2).collect(),
            ]
        }
    };
    let total = |xs: &mut dyn Iterator<Item = &[usize]>| -> Result<Cost> {
        let mut sum = Cost::zero();
        for x in xs {
            sum = sum + evaluate(instance, language, x)?;
        }
        Ok(sum)
    };
    let input_cost = total(&mut inputs.iter().map(|a| a.0.as_slice()))?;
    let output_cost = total(&mut outputs.iter().map(Vec::as_slice))?;
    if input_cost.is_finite() && output_cost > input_cost {
        return Err(Error::Precondition(format!(
            "fusion increased the total cost from {input_cost} to {output_cost}"
        )));
    }
    Ok(Fusion {
        outputs: outputs.into_iter().map(Assignment).collect(),
        input_cost,
        output_cost,
    })
}
