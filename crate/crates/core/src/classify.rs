//! The dichotomy pipeline: closure, pair graph, majority search, STP and MJN
//! certificates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::express::{binary_closure_with, BinaryClosure, ClosureBudget, Gadget};
use crate::function::CostFunction;
use crate::graph::{build_pair_graph, Node, PairGraph};
use crate::language::{Language, UnaryClosure};
use crate::mjn::{compute_mu, construct_mjn, verify_mjn, MuMap};
use crate::ops::{
    check_m_conditions, check_pair, search_majority_logged, search_stp, MajorityStrategy, OpPair,
    OpTriple, Operations, PairSet, RefutationLog, TernaryOp,
};

/// Largest domain any stage supports.
pub const MAX_DOMAIN: usize = 4;

/// Every knob of the pipeline. Verdicts are a function of the language and
/// these values only.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Budgets {
    pub rounds: usize,
    pub size: usize,
    pub bit_cap: u64,
    /// `None` picks exhaustive search up to three labels and backtracking
    /// above.
    pub strategy: Option<MajorityStrategy>,
    /// Node budget of the backtracking majority search.
    pub majority_nodes: Option<u64>,
    pub max_domain: usize,
    pub workers: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        let c = ClosureBudget::default();
        Budgets {
            rounds: c.rounds,
            size: c.size,
            bit_cap: c.bit_cap,
            strategy: None,
            majority_nodes: Some(5_000_000),
            max_domain: MAX_DOMAIN,
            workers: 1,
        }
    }
}

impl Budgets {
    pub fn closure_budget(&self) -> ClosureBudget {
        ClosureBudget {
            rounds: self.rounds,
            size: self.size,
            bit_cap: self.bit_cap,
            workers: self.workers,
        }
    }

    pub fn strategy_for(&self, domain_size: usize) -> MajorityStrategy {
        self.strategy.unwrap_or(if domain_size <= 3 {
            MajorityStrategy::Exhaustive
        } else {
            MajorityStrategy::Backtracking
        })
    }
}

/// What the verdict relied on from the closure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureSummary {
    pub members: usize,
    pub rounds_run: usize,
    pub saturated: bool,
    pub size_exhausted: bool,
    pub oversized: usize,
}

impl From<&BinaryClosure> for ClosureSummary {
    fn from(c: &BinaryClosure) -> Self {
        ClosureSummary {
            members: c.len(),
            rounds_run: c.rounds_run,
            saturated: c.saturated,
            size_exhausted: c.size_exhausted,
            oversized: c.oversized,
        }
    }
}

/// STP on `m_set` and MJN on its complement, both multimorphisms of the
/// language.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TractableCertificate {
    pub m_set: PairSet,
    /// The self-loop-free pairs of the graph; `m_set` is a subset.
    pub graph_m_set: PairSet,
    pub stp: OpPair,
    pub triple: OpTriple,
    pub mu: MuMap,
}

/// A gadget over the language plus `unaries` whose expressed function has a
/// soft self-loop at `node`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SoftLoopWitness {
    pub node: Node,
    /// The normalized closure member.
    pub member: CostFunction,
    pub gadget: Gadget,
    /// Unary functions appended to the language, in the order the gadget
    /// references them.
    pub unaries: Vec<CostFunction>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Hardness {
    SoftSelfLoop(SoftLoopWitness),
    NoMajority(RefutationLog),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Backtracking ran out of nodes before settling the majority question.
    Majority,
    /// No candidate pair set produced a verified STP and MJN.
    Certificate,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Tractable(TractableCertificate),
    NpHard(Hardness),
    UnknownAtBudget { stage: Stage, budgets: Budgets },
}

impl Verdict {
    /// Process exit code used by the command line.
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Tractable(_) => 0,
            Verdict::NpHard(_) => 2,
            Verdict::UnknownAtBudget { .. } => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Tractable(_) => "tractable",
            Verdict::NpHard(Hardness::SoftSelfLoop(_)) => "np-hard (soft self-loop)",
            Verdict::NpHard(Hardness::NoMajority(_)) => "np-hard (no majority polymorphism)",
            Verdict::UnknownAtBudget { .. } => "unknown at budget",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Classification {
    pub verdict: Verdict,
    pub closure: ClosureSummary,
    pub graph: PairGraph,
    /// The majority polymorphism found, when the search got that far.
    pub majority: Option<TernaryOp>,
    /// One line per pipeline decision.
    pub trace: Vec<String>,
}

/// Runs the pipeline on a conservative language.
///
/// Hardness answers are sound at any budget: a soft self-loop is witnessed by
/// a concrete gadget and a missing majority by a complete refutation. A
/// tractable answer carries operations that were verified directly against
/// the language, whatever the closure looked like. Everything else is
/// reported as unknown at the given budget.
pub fn classify(language: &Language, budgets: &Budgets) -> Result<Classification> {
    if !language.is_conservative() {
        return Err(Error::Precondition(
            "classification needs a conservative language (unary closure finite or general)".into(),
        ));
    }
    let d = language.domain_size();
    if d > budgets.max_domain.min(MAX_DOMAIN) {
        return Err(Error::capability(format!(
            "domain size {d} exceeds the maximum of {}",
            budgets.max_domain.min(MAX_DOMAIN)
        )));
    }
    let mut trace = Vec::new();
    let bar = language.with_unary_closure(UnaryClosure::General);
    // Deepen one round at a time: a soft self-loop found early settles the
    // verdict without paying for the later, much larger rounds.
    let mut rounds = 0;
    let (closure, graph) = loop {
        let budget = ClosureBudget {
            rounds,
            ..budgets.closure_budget()
        };
        let closure = binary_closure_with(&bar, &budget)?;
        let graph = build_pair_graph(&closure);
        if rounds >= budgets.rounds
            || closure.saturated
            || closure.size_exhausted
            || graph.has_soft_self_loop()
        {
            break (closure, graph);
        }
        rounds += 1;
    };
    let summary = ClosureSummary::from(&closure);
    trace.push(format!(
        "closure: {} members after {} rounds, saturated={}, size_exhausted={}, oversized={}",
        summary.members,
        summary.rounds_run,
        summary.saturated,
        summary.size_exhausted,
        summary.oversized
    ));
    trace.push(format!(
        "graph: {} edges, M = {}",
        graph.edges.len(),
        graph.m_set
    ));
    let done = |verdict, majority, trace| {
        Ok(Classification {
            verdict,
            closure: summary.clone(),
            graph: graph.clone(),
            majority,
            trace,
        })
    };

    if let Some(edge) = graph.find_soft_self_loop() {
        let (gadget, extended) = closure.audit_gadget(edge.member, language)?;
        let unaries = extended.functions()[language.functions().len()..].to_vec();
        trace.push(format!(
            "soft self-loop at ({},{}) from member {}",
            edge.p.0, edge.p.1, edge.member
        ));
        let witness = SoftLoopWitness {
            node: edge.p,
            member: closure.members[edge.member].clone(),
            gadget,
            unaries,
        };
        return done(
            Verdict::NpHard(Hardness::SoftSelfLoop(witness)),
            None,
            trace,
        );
    }

    let strategy = budgets.strategy_for(d);
    let search = search_majority_logged(&bar, strategy, budgets.majority_nodes)?;
    trace.push(format!(
        "majority search ({strategy:?}): {} after {} nodes",
        match (&search.found, search.complete) {
            (Some(_), _) => "found",
            (None, true) => "refuted",
            (None, false) => "budget exhausted",
        },
        search.log.nodes
    ));
    let majority = match search.found {
        Some(m) => m,
        None if search.complete => {
            return done(
                Verdict::NpHard(Hardness::NoMajority(search.log)),
                None,
                trace,
            );
        }
        None => {
            let v = Verdict::UnknownAtBudget {
                stage: Stage::Majority,
                budgets: budgets.clone(),
            };
            return done(v, None, trace);
        }
    };

    for m_set in candidate_sets(&graph.m_set) {
        match certify(language, &closure, &m_set, &mut trace)? {
            Some((stp, triple, mu)) => {
                let cert = TractableCertificate {
                    m_set,
                    graph_m_set: graph.m_set.clone(),
                    stp,
                    triple,
                    mu,
                };
                return done(Verdict::Tractable(cert), Some(majority), trace);
            }
            None => continue,
        }
    }
    trace.push(if closure.saturated {
        "no candidate M certified at a saturated closure with a majority present: engine limitation"
            .into()
    } else {
        "no candidate M certified; the closure was truncated".into()
    });
    let v = Verdict::UnknownAtBudget {
        stage: Stage::Certificate,
        budgets: budgets.clone(),
    };
    done(v, Some(majority), trace)
}

/// Subsets of `m_set`, largest first, lexicographic by sorted pair list
/// within a size.
pub fn candidate_sets(m_set: &PairSet) -> Vec<PairSet> {
    let pairs: Vec<(usize, usize)> = m_set.iter().collect();
    let mut subsets: Vec<Vec<(usize, usize)>> = (0u64..1 << pairs.len())
        .map(|mask| {
            pairs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &p)| p)
                .collect()
        })
        .collect();
    subsets.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    subsets.into_iter().map(PairSet::from_pairs).collect()
}

fn certify(
    language: &Language,
    closure: &BinaryClosure,
    m_set: &PairSet,
    trace: &mut Vec<String>,
) -> Result<Option<(OpPair, OpTriple, MuMap)>> {
    let Some(stp) = search_stp(language, m_set)? else {
        trace.push(format!("M = {m_set}: no STP"));
        return Ok(None);
    };
    let mu = match compute_mu(closure, m_set) {
        Ok(mu) => mu,
        Err(Error::MuConflict(v)) => {
            trace.push(format!(
                "M = {m_set}: mu undefined on {:?} (labels {} and {})",
                v.set, v.first_label, v.second_label
            ));
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    let triple = construct_mjn(&mu, &stp, m_set);
    let report = verify_mjn(&triple, language, m_set)?;
    if !report.holds {
        trace.push(format!(
            "M = {m_set}: MJN with {} mu entries fails: {:?}",
            mu.entries.len(),
            report.violation
        ));
        return Ok(None);
    }
    trace.push(format!(
        "M = {m_set}: STP and MJN verified ({} mu entries)",
        mu.entries.len()
    ));
    Ok(Some((stp, triple, mu)))
}

/// Re-checks a tractable certificate against the language with no search.
pub fn verify_tractable(cert: &TractableCertificate, language: &Language) -> Result<(), String> {
    let d = language.domain_size();
    if cert.stp.domain_size() != d || cert.triple.domain_size() != d {
        return Err("operation tables have the wrong domain size".into());
    }
    if cert.m_set.max_label().is_some_and(|m| m >= d) {
        return Err("M mentions labels outside the domain".into());
    }
    let fail = |what: &str, r: crate::ops::MmReport| format!("{what} fails: {:?}", r.violation);
    let r = check_pair(&cert.stp, language).map_err(|e| e.to_string())?;
    if !r.holds {
        return Err(fail("STP multimorphism", r));
    }
    let r = check_m_conditions(&Operations::Pair(cert.stp.clone()), &cert.m_set)
        .map_err(|e| e.to_string())?;
    if !r.holds {
        return Err(fail("STP on M", r));
    }
    let r = verify_mjn(&cert.triple, language, &cert.m_set).map_err(|e| e.to_string())?;
    if !r.holds {
        return Err(fail("MJN", r));
    }
    Ok(())
}

/// Re-evaluates the gadget and checks the soft self-loop on what it
/// expresses.
pub fn verify_soft_loop(w: &SoftLoopWitness, language: &Language) -> Result<(), String> {
    use crate::express::express_gadget;
    use crate::graph::{edge_witness, EdgeKind};
    let d = language.domain_size();
    let (a, b) = w.node;
    if a == b || a >= d || b >= d {
        return Err("witness node is not a pair of distinct labels".into());
    }
    if language.unary_closure() == UnaryClosure::None && !w.unaries.is_empty() {
        return Err("witness uses unary functions the language does not contain".into());
    }
    let mut extended = language.clone();
    for u in &w.unaries {
        if u.arity() != 1 {
            return Err("witness unaries must have arity 1".into());
        }
        extended.push(u.clone()).map_err(|e| e.to_string())?;
    }
    let f = express_gadget(&w.gadget, &extended).map_err(|e| e.to_string())?;
    if f.arity() != 2 {
        return Err("witness gadget must expose two variables".into());
    }
    match edge_witness(&f, w.node, w.node) {
        Some(EdgeKind::Soft) => {}
        _ => {
            return Err(format!(
                "no soft self-loop at ({a},{b}) in the expressed function"
            ))
        }
    }
    match edge_witness(&w.member, w.node, w.node) {
        Some(EdgeKind::Soft) => Ok(()),
        _ => Err("recorded member does not carry the soft self-loop".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::{replay_refutation, BinaryOp};

    fn boolean(fs: Vec<CostFunction>) -> Language {
        Language::new(2, fs, UnaryClosure::Finite).unwrap()
    }

    fn submodular() -> CostFunction {
        CostFunction::from_ints(2, 2, &[Some(0), Some(2), Some(2), Some(2)]).unwrap()
    }

    #[test]
    fn submodular_is_tractable_with_min_max() {
        let lang = boolean(vec![submodular()]);
        let c = classify(&lang, &Budgets::default()).unwrap();
        let Verdict::Tractable(cert) = &c.verdict else {
            panic!("{:?}", c.verdict)
        };
        assert_eq!(cert.m_set, PairSet::all(2));
        assert_eq!(cert.stp.meet, BinaryOp::min(2));
        assert_eq!(cert.stp.join, BinaryOp::max(2));
        assert!(verify_tractable(cert, &lang).is_ok());
        // with no 3-sets the triple is (min, max, third) on mixed arguments
        assert_eq!(cert.triple.apply(0, 1, 1), (0, 1, 1));
        assert_eq!(cert.triple.apply(1, 0, 0), (0, 1, 0));
    }

    #[test]
    fn cut_is_hard_after_one_round() {
        let cut = CostFunction::from_ints(2, 2, &[Some(1), Some(0), Some(0), Some(1)]).unwrap();
        let lang = boolean(vec![cut]);
        let b = Budgets {
            rounds: 1,
            ..Budgets::default()
        };
        let c = classify(&lang, &b).unwrap();
        let Verdict::NpHard(Hardness::SoftSelfLoop(w)) = &c.verdict else {
            panic!("{:?}", c.verdict)
        };
        assert_eq!(w.node, (0, 1));
        verify_soft_loop(w, &lang).unwrap();
    }

    #[test]
    fn parity_has_no_majority() {
        let parity = CostFunction::crisp(2, 3, |t| (t[0] + t[1] + t[2]) % 2 == 0).unwrap();
        let lang = boolean(vec![parity]);
        let c = classify(&lang, &Budgets::default()).unwrap();
        let Verdict::NpHard(Hardness::NoMajority(log)) = &c.verdict else {
            panic!("{:?}", c.verdict)
        };
        replay_refutation(&lang.with_unary_closure(UnaryClosure::General), log).unwrap();
    }

    #[test]
    fn disequality_certifies_with_empty_m() {
        let diseq = CostFunction::crisp(2, 2, |t| t[0] != t[1]).unwrap();
        let lang = boolean(vec![diseq]);
        let c = classify(&lang, &Budgets::default()).unwrap();
        let Verdict::Tractable(cert) = &c.verdict else {
            panic!("{:?}", c.verdict)
        };
        assert!(cert.m_set.is_empty());
        assert!(verify_tractable(cert, &lang).is_ok());
        assert_eq!(cert.triple.apply(0, 0, 1), (0, 0, 1));
        assert!(c.majority.is_some());
    }

    #[test]
    fn non_conservative_is_rejected() {
        let lang = Language::new(2, vec![submodular()], UnaryClosure::None).unwrap();
        assert!(matches!(
            classify(&lang, &Budgets::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn candidate_order() {
        let m = PairSet::from_pairs([(0, 1), (0, 2), (1, 2)]);
        let got: Vec<Vec<(usize, usize)>> = candidate_sets(&m)
            .iter()
            .map(|s| s.iter().collect())
            .collect();
        assert_eq!(got.len(), 8);
        assert_eq!(got[0].len(), 3);
        assert_eq!(got[1], vec![(0, 1), (0, 2)]);
        assert_eq!(got[2], vec![(0, 1), (1, 2)]);
        assert_eq!(got[3], vec![(0, 2), (1, 2)]);
        assert_eq!(got[4], vec![(0, 1)]);
        assert!(got[7].is_empty());
    }

    #[test]
    fn tampered_certificate_fails() {
        let lang = boolean(vec![submodular()]);
        let c = classify(&lang, &Budgets::default()).unwrap();
        let Verdict::Tractable(mut cert) = c.verdict else {
            panic!()
        };
        cert.stp = OpPair::new(BinaryOp::first(2), BinaryOp::second(2)).unwrap();
        assert!(verify_tractable(&cert, &lang).is_err());
    }
}
