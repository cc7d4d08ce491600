//! Majority polymorphisms: search, refutation logs and their replay.
use cvcsp::ops::{replay_refutation, search_majority, search_majority_logged, MajorityStrategy};
use cvcsp::{CostFunction, Language, UnaryClosure};

fn main() -> cvcsp::Result<()> {
    let parity = CostFunction::crisp(2, 3, |t| t.iter().sum::<usize>() % 2 == 0)?;
    let lex = CostFunction::crisp(3, 2, |t| t[0] <= t[1])?;
    for (name, lang) in [
        (
            "parity",
            Language::new(2, vec![parity], UnaryClosure::General)?,
        ),
        (
            "order on 3",
            Language::new(3, vec![lex], UnaryClosure::General)?,
        ),
    ] {
        match search_majority(&lang, MajorityStrategy::Exhaustive)? {
            Some(m) => println!("{name}: majority found, m(0,1,2) = {}", m.apply(0, 1, 2)),
            None => {
                let s = search_majority_logged(&lang, MajorityStrategy::Exhaustive, None)?;
                let log = s.log;
                println!(
                    "{name}: refuted with {} leaves; replay: {:?}",
                    log.leaves.len(),
                    replay_refutation(&lang, &log)
                );
            }
        }
    }
    Ok(())
}
