//! Feas / MinHom views, the unary cap, the MinHom scaling and binary
//! decomposition, each checked against brute force.
use std::collections::BTreeMap;

use cvcsp::reduce::{binary_decompose, cap_reduce, derive_language, minhom_reduce, DeriveMode};
use cvcsp::solver::brute_force_solve;
use cvcsp::{CostFunction, Instance, Language, Term, UnaryClosure};

fn term(function: usize, scope: &[usize]) -> Term {
    Term {
        function,
        scope: scope.to_vec(),
    }
}

fn main() -> cvcsp::Result<()> {
    let f = CostFunction::from_ints(2, 2, &[Some(2), Some(0), None, Some(1)])?;
    let u = CostFunction::from_ints(2, 1, &[Some(0), None])?;
    let lang = Language::new(2, vec![f.clone(), u], UnaryClosure::General)?;
    let inst = Instance::new(3, vec![term(0, &[0, 1]), term(0, &[1, 2]), term(1, &[2])])?;

    let feas = derive_language(&lang, DeriveMode::Feas);
    println!("feas closure: {:?}", feas.unary_closure());

    let cap = cap_reduce(&inst, &lang)?;
    let (a, b) = (
        brute_force_solve(&inst, &lang)?,
        brute_force_solve(&cap.instance, &cap.language)?,
    );
    println!("cap: C={} N={} threshold={}", cap.c, cap.n, cap.threshold);
    println!(
        "  optimum {} at {} / capped {} at {}",
        a.cost, a.assignment, b.cost, b.assignment
    );

    // MinHom: crisp Feas(f) with integer unaries, f as the valued original
    let w = CostFunction::from_ints(2, 1, &[Some(3), Some(1)])?;
    let mh = Language::new(2, vec![f.feas(), w], UnaryClosure::Finite)?;
    let inst = Instance::new(
        3,
        vec![
            term(0, &[0, 1]),
            term(0, &[1, 2]),
            term(1, &[0]),
            term(1, &[2]),
        ],
    )?;
    let red = minhom_reduce(&inst, &mh, &BTreeMap::from([(0, f)]))?;
    let opt = brute_force_solve(&inst, &mh)?.cost;
    let scaled = brute_force_solve(&red.instance, &red.language)?.cost;
    println!(
        "minhom: NC={} optimum {opt}, reduced {scaled}, recovered {}",
        red.scale(),
        red.recover(&scaled)
    );

    let parity = CostFunction::crisp(2, 3, |t| t.iter().sum::<usize>() % 2 == 0)?;
    let at_most_one = CostFunction::crisp(2, 3, |t| t.iter().sum::<usize>() <= 1)?;
    for (name, g) in [("parity", parity), ("at most one", at_most_one)] {
        println!(
            "{name}: binary decomposition exact = {}",
            binary_decompose(&g)?.exact
        );
    }
    Ok(())
}
