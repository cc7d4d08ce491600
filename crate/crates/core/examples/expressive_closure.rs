//! Gadgets, min-composition, and the budgeted binary closure.
use cvcsp::express::{binary_closure, express_gadget, min_compose, Gadget};
use cvcsp::{CostFunction, Instance, Language, Term, UnaryClosure};

fn show(f: &CostFunction) -> String {
    f.table()
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn main() -> cvcsp::Result<()> {
    let neq = CostFunction::crisp(2, 2, |t| t[0] != t[1])?;
    let lang = Language::new(2, vec![neq.clone()], UnaryClosure::General)?;

    // v0 != v1 != v2, hide v1
    let chain = Instance::new(
        3,
        vec![
            Term {
                function: 0,
                scope: vec![0, 1],
            },
            Term {
                function: 0,
                scope: vec![1, 2],
            },
        ],
    )?;
    let g = Gadget::new(chain, vec![0, 2])?;
    println!("chain gadget:     {}", show(&express_gadget(&g, &lang)?));
    println!("neq o neq:        {}", show(&min_compose(&neq, &neq)?));

    for rounds in 0..=3 {
        let c = binary_closure(&lang, rounds, 2000)?;
        println!(
            "rounds {rounds}: {} members, saturated={}",
            c.len(),
            c.saturated
        );
    }
    let c = binary_closure(&lang, 3, 2000)?;
    for (i, m) in c.members.iter().enumerate() {
        // each member can be rebuilt as an explicit gadget
        let audited = c.audit(i, &lang)?;
        println!("  {:18} audit={audited}", show(m));
    }
    Ok(())
}
