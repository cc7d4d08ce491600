//! Naive oracles used to cross-check the library. Nothing here calls the code
//! under test except for table lookups.
#![allow(dead_code)]

use cvcsp::ops::{OpPair, OpTriple};
use cvcsp::{Cost, CostFunction, Instance, Language};

pub fn tuples(d: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..d).map(move |a| {
                    let mut t = t.clone();
                    t.push(a);
                    t
                })
            })
            .collect();
    }
    out
}

pub fn value(f: &CostFunction, x: &[usize]) -> Cost {
    let d = f.domain_size();
    let idx = x.iter().fold(0, |acc, &a| acc * d + a);
    f.table()[idx].clone()
}

pub fn cost(instance: &Instance, language: &Language, x: &[usize]) -> Cost {
    let mut total = Cost::zero();
    for t in &instance.terms {
        let args: Vec<usize> = t.scope.iter().map(|&v| x[v]).collect();
        total = total + value(&language.functions()[t.function], &args);
    }
    total
}

/// Lexicographically least optimum by full enumeration.
pub fn brute_min(instance: &Instance, language: &Language) -> (Cost, Vec<usize>) {
    let mut best: Option<(Cost, Vec<usize>)> = None;
    for x in tuples(language.domain_size(), instance.num_vars) {
        let c = cost(instance, language, &x);
        if best.as_ref().is_none_or(|(b, _)| c < *b) {
            best = Some((c, x));
        }
    }
    best.unwrap()
}

pub fn pair_inequality_holds(f: &CostFunction, ops: &OpPair) -> bool {
    let d = f.domain_size();
    let dom: Vec<Vec<usize>> = tuples(d, f.arity())
        .into_iter()
        .filter(|x| value(f, x).is_finite())
        .collect();
    dom.iter().all(|x| {
        dom.iter().all(|y| {
            let m: Vec<usize> = x
                .iter()
                .zip(y)
                .map(|(&a, &b)| ops.meet.apply(a, b))
                .collect();
            let j: Vec<usize> = x
                .iter()
                .zip(y)
                .map(|(&a, &b)| ops.join.apply(a, b))
                .collect();
            value(f, &m) + value(f, &j) <= value(f, x) + value(f, y)
        })
    })
}

pub fn triple_inequality_holds(f: &CostFunction, ops: &OpTriple) -> bool {
    let d = f.domain_size();
    let dom: Vec<Vec<usize>> = tuples(d, f.arity())
        .into_iter()
        .filter(|x| value(f, x).is_finite())
        .collect();
    for x in &dom {
        for y in &dom {
            for z in &dom {
                let (mut a, mut b, mut c) = (vec![], vec![], vec![]);
                for i in 0..x.len() {
                    let (p, q, r) = ops.apply(x[i], y[i], z[i]);
                    a.push(p);
                    b.push(q);
                    c.push(r);
                }
                let lhs = value(f, &a) + value(f, &b) + value(f, &c);
                if lhs > value(f, x) + value(f, y) + value(f, z) {
                    return false;
                }
            }
        }
    }
    true
}

/// Pair-graph edge arithmetic written out directly.
pub fn edge(f: &CostFunction, p: (usize, usize), q: (usize, usize)) -> Option<&'static str> {
    let g = |a: usize, b: usize| value(f, &[a, b]);
    let (a, b) = p;
    let (a2, b2) = q;
    if g(a, b2).is_infinite() || g(b, a2).is_infinite() {
        return None;
    }
    if g(a, a2) + g(b, b2) > g(a, b2) + g(b, a2) {
        Some(if g(a, a2).is_finite() || g(b, b2).is_finite() {
            "soft"
        } else {
            "hard"
        })
    } else {
        None
    }
}

pub fn crisp_binary(d: usize, mask: u32) -> CostFunction {
    CostFunction::crisp(d, 2, |t| mask >> (t[0] * d + t[1]) & 1 == 1).unwrap()
}

pub fn submodular() -> CostFunction {
    CostFunction::from_ints(2, 2, &[Some(0), Some(2), Some(2), Some(2)]).unwrap()
}

pub fn cut() -> CostFunction {
    CostFunction::from_ints(2, 2, &[Some(1), Some(0), Some(0), Some(1)]).unwrap()
}

pub fn disequality() -> CostFunction {
    CostFunction::crisp(2, 2, |t| t[0] != t[1]).unwrap()
}

pub fn parity() -> CostFunction {
    CostFunction::crisp(2, 3, |t| (t[0] + t[1] + t[2]) % 2 == 0).unwrap()
}
