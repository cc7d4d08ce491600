//! Build the pair graph of a language and print it as Graphviz.
//!
//!     cargo run --example pair_graph | dot -Tsvg > graph.svg
use cvcsp::express::binary_closure;
use cvcsp::graph::{build_pair_graph, check_graph_properties, edge_witness};
use cvcsp::{CostFunction, Language, UnaryClosure};

fn main() -> cvcsp::Result<()> {
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
    let lang = Language::new(3, vec![f.clone(), g], UnaryClosure::Finite)?;

    eprintln!(
        "edge (0,2)-(0,2) on f alone: {:?}",
        edge_witness(&f, (0, 2), (0, 2))
    );
    let closure = binary_closure(&lang, 3, 2000)?;
    let g = build_pair_graph(&closure);
    eprintln!(
        "{} closure members, saturated={}",
        closure.len(),
        closure.saturated
    );
    eprintln!("M = {:?}", g.m_set.iter().collect::<Vec<_>>());
    eprintln!("{:#?}", check_graph_properties(&g));
    print!("{}", g.to_dot());
    Ok(())
}
