//! Classify a few two-label languages and replay each certificate.
use cvcsp::certificate::{verify, CertificateFile};
use cvcsp::classify::{classify, Budgets, Verdict};
use cvcsp::{CostFunction, Language, UnaryClosure};

fn main() -> cvcsp::Result<()> {
    let cases = [
        (
            "submodular",
            CostFunction::from_ints(2, 2, &[Some(0), Some(2), Some(2), Some(2)])?,
        ),
        (
            "cut",
            CostFunction::from_ints(2, 2, &[Some(1), Some(0), Some(0), Some(1)])?,
        ),
        ("disequality", CostFunction::crisp(2, 2, |t| t[0] != t[1])?),
        (
            "parity",
            CostFunction::crisp(2, 3, |t| t.iter().sum::<usize>() % 2 == 0)?,
        ),
    ];
    let budgets = Budgets::default();
    for (name, f) in cases {
        let lang = Language::new(2, vec![f], UnaryClosure::Finite)?;
        let c = classify(&lang, &budgets)?;
        let cert = CertificateFile::new(&lang, &c, &budgets, None);
        let replay = verify(&cert, &lang)
            .map(|_| "replays")
            .unwrap_or("does not replay");
        print!("{name:12} {:34} certificate {replay}", c.verdict.name());
        if let Verdict::Tractable(t) = &c.verdict {
            let m: Vec<_> = t.m_set.iter().collect();
            print!(", M = {m:?}");
        }
        println!();
    }
    Ok(())
}
