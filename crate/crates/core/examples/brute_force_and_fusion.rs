//! Exhaustive solving and certified fusion of assignments.
use cvcsp::classify::{classify, Budgets, Verdict};
use cvcsp::gen::{random_feasible, random_instance, rng};
use cvcsp::solver::{brute_force_solve_with, fuse_improve, Certified};
use cvcsp::{Assignment, CostFunction, Language, UnaryClosure};

fn main() -> cvcsp::Result<()> {
    let f = CostFunction::from_fn(3, 2, |t| cvcsp::Cost::int(t[0].abs_diff(t[1]) as u64))?;
    let u = CostFunction::from_ints(3, 1, &[Some(2), Some(0), Some(3)])?;
    let lang = Language::new(3, vec![f, u], UnaryClosure::Finite)?;
    let Verdict::Tractable(cert) = classify(&lang, &Budgets::default())?.verdict else {
        println!("not tractable");
        return Ok(());
    };

    let mut r = rng(7);
    let inst = random_instance(&mut r, &lang, 8, 12)?;
    let best = brute_force_solve_with(&inst, &lang, 4)?;
    println!("optimum {} at {}", best.cost, best.assignment);

    let pair = Certified::pair(cert.stp, &lang)?;
    let triple = Certified::triple(cert.triple, &lang)?;
    let mut xs: Vec<Assignment> = (0..3)
        .map(|_| Assignment(random_feasible(&mut r, &inst, &lang, 100).unwrap().unwrap()))
        .collect();
    for step in 0..4 {
        let fp = fuse_improve(&inst, &lang, &pair, &xs[..2])?;
        let ft = fuse_improve(&inst, &lang, &triple, &xs)?;
        println!(
            "step {step}: pair {} -> {}, triple {} -> {}",
            fp.input_cost, fp.output_cost, ft.input_cost, ft.output_cost
        );
        xs = ft.outputs;
    }
    Ok(())
}
