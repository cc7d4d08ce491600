//! Assemble a tractability certificate by hand: closure, graph, STP, mu,
//! MJN, and check the result by brute force.
use cvcsp::express::binary_closure;
use cvcsp::graph::build_pair_graph;
use cvcsp::mjn::{compute_mu, construct_mjn, verify_mjn};
use cvcsp::ops::{check_pair, search_stp};
use cvcsp::{CostFunction, Language, UnaryClosure};

fn main() -> cvcsp::Result<()> {
    // two sparse valued relations on three labels; {0,1} ends up in M and
    // the other pairs in M-bar, with one mu entry
    let f = CostFunction::from_ints(
        3,
        2,
        &[
            None,
            None,
            Some(2),
            None,
            None,
            Some(2),
            None,
            Some(0),
            None,
        ],
    )?;
    let g = CostFunction::from_ints(
        3,
        2,
        &[
            Some(2),
            Some(2),
            None,
            None,
            Some(1),
            None,
            None,
            None,
            None,
        ],
    )?;
    let lang = Language::new(3, vec![f, g], UnaryClosure::Finite)?;

    let closure = binary_closure(&lang, 4, 2000)?;
    let g = build_pair_graph(&closure);
    if let Some(e) = g.find_soft_self_loop() {
        println!("soft self-loop at {:?}: NP-hard", e.p);
        return Ok(());
    }
    let m = g.m_set.clone();
    println!("M = {:?}", m.iter().collect::<Vec<_>>());

    let Some(stp) = search_stp(&lang, &m)? else {
        println!("no STP on M");
        return Ok(());
    };
    println!("meet {:?}\njoin {:?}", stp.meet, stp.join);
    println!("pair check: {}", check_pair(&stp, &lang)?.holds);

    let mu = compute_mu(&closure, &m)?;
    for w in &mu.entries {
        println!("mu({:?}) = {} via member {}", w.set, w.label, w.member);
    }
    let t = construct_mjn(&mu, &stp, &m);
    for x in [(0, 1, 2), (2, 1, 0), (1, 1, 0), (0, 2, 2)] {
        println!("MJN{x:?} = {:?}", t.apply(x.0, x.1, x.2));
    }
    println!("triple check: {}", verify_mjn(&t, &lang, &m)?.holds);
    Ok(())
}
