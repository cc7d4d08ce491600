//! The pair graph of a language: nodes are ordered pairs of distinct labels,
//! edges are witnessed by binary functions violating the rectangle inequality.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cost::Cost;
use crate::express::BinaryClosure;
use crate::function::CostFunction;
use crate::ops::PairSet;

/// Edge kind; `Soft` orders above `Hard` so the stronger kind wins a `max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Hard,
    Soft,
}

pub type Node = (usize, usize);

/// Edge test for `p = (a, b)`, `q = (a2, b2)`:
/// `f(a, a2) + f(b, b2) > f(a, b2) + f(b, a2)` with both right-hand points in
/// `dom f`. Soft when `(a, a2)` or `(b, b2)` is in `dom f` as well.
pub fn edge_witness(f: &CostFunction, p: Node, q: Node) -> Option<EdgeKind> {
    let (a, b) = p;
    let (a2, b2) = q;
    let cross1 = f.get2(a, b2);
    let cross2 = f.get2(b, a2);
    if cross1.is_infinite() || cross2.is_infinite() {
        return None;
    }
    let diag1 = f.get2(a, a2);
    let diag2 = f.get2(b, b2);
    if diag1.add_ref(diag2) > cross1.add_ref(cross2) {
        if diag1.is_finite() || diag2.is_finite() {
            Some(EdgeKind::Soft)
        } else {
            Some(EdgeKind::Hard)
        }
    } else {
        None
    }
}

/// An edge with the closure member that witnesses it. `swapped` means the
/// member satisfies the inequality for `(q, p)` rather than `(p, q)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub p: Node,
    pub q: Node,
    pub kind: EdgeKind,
    pub member: usize,
    pub swapped: bool,
}

impl Edge {
    pub fn is_loop(&self) -> bool {
        self.p == self.q
    }

    /// Re-checks the witness on `f`.
    pub fn replays_on(&self, f: &CostFunction) -> bool {
        let (p, q) = if self.swapped {
            (self.q, self.p)
        } else {
            (self.p, self.q)
        };
        edge_witness(f, p, q).is_some_and(|k| k >= self.kind)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairGraph {
    pub domain_size: usize,
    /// Every ordered pair of distinct labels, lexicographic.
    pub nodes: Vec<Node>,
    /// Sorted by `(p, q)` with `p <= q`.
    pub edges: Vec<Edge>,
    /// Label pairs whose nodes carry no self-loop.
    pub m_set: PairSet,
    /// The closure the graph came from was not saturated.
    pub truncated: bool,
}

fn nodes(d: usize) -> Vec<Node> {
    (0..d)
        .flat_map(|a| (0..d).filter(move |&b| b != a).map(move |b| (a, b)))
        .collect()
}

/// Unions [`edge_witness`] over all closure members in both orientations.
/// The first soft witness (by member index) wins; otherwise the first hard.
pub fn build_pair_graph(closure: &BinaryClosure) -> PairGraph {
    build_from_members(closure.domain_size, &closure.members, !closure.saturated)
}

/// [`build_pair_graph`] over an explicit member list.
pub fn build_from_members(
    domain_size: usize,
    members: &[CostFunction],
    truncated: bool,
) -> PairGraph {
    let nodes = nodes(domain_size);
    let mut edges = Vec::new();
    for (i, &p) in nodes.iter().enumerate() {
        for &q in &nodes[i..] {
            let mut best: Option<Edge> = None;
            'members: for (k, f) in members.iter().enumerate() {
                for swapped in [false, true] {
                    if swapped && p == q {
                        continue;
                    }
                    let (x, y) = if swapped { (q, p) } else { (p, q) };
                    if let Some(kind) = edge_witness(f, x, y) {
                        if best.as_ref().is_none_or(|e| kind > e.kind) {
                            best = Some(Edge {
                                p,
                                q,
                                kind,
                                member: k,
                                swapped,
                            });
                        }
                        if kind == EdgeKind::Soft {
                            break 'members;
                        }
                    }
                }
            }
            edges.extend(best);
        }
    }
    let mut g = PairGraph {
        domain_size,
        nodes,
        edges,
        m_set: PairSet::new(),
        truncated,
    };
    g.m_set = PairSet::from_pairs(
        (0..domain_size)
            .flat_map(|a| (a + 1..domain_size).map(move |b| (a, b)))
            .filter(|&(a, b)| g.self_loop((a, b)).is_none() && g.self_loop((b, a)).is_none()),
    );
    g
}

impl PairGraph {
    pub fn edge(&self, p: Node, q: Node) -> Option<&Edge> {
        let key = if p <= q { (p, q) } else { (q, p) };
        self.edges
            .binary_search_by(|e| (e.p, e.q).cmp(&key))
            .ok()
            .map(|i| &self.edges[i])
    }

    pub fn self_loop(&self, p: Node) -> Option<&Edge> {
        self.edge(p, p)
    }

    pub fn in_m(&self, p: Node) -> bool {
        self.m_set.contains(p.0, p.1)
    }

    pub fn m_bar(&self) -> PairSet {
        self.m_set.complement(self.domain_size)
    }

    pub fn has_soft_self_loop(&self) -> bool {
        self.find_soft_self_loop().is_some()
    }

    /// Lexicographically least node with a soft self-loop.
    pub fn find_soft_self_loop(&self) -> Option<&Edge> {
        self.edges
            .iter()
            .find(|e| e.is_loop() && e.kind == EdgeKind::Soft)
    }

    /// Graphviz rendering; soft edges solid, hard edges dashed, M-bar nodes
    /// doubled.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph pairs {\n");
        for &(a, b) in &self.nodes {
            let shape = if self.in_m((a, b)) {
                "ellipse"
            } else {
                "doublecircle"
            };
            let _ = writeln!(s, "  \"{a},{b}\" [shape={shape}];");
        }
        for e in &self.edges {
            let style = match e.kind {
                EdgeKind::Soft => "solid",
                EdgeKind::Hard => "dashed",
            };
            let _ = writeln!(
                s,
                "  \"{},{}\" -- \"{},{}\" [style={style}, label=\"f{}\"];",
                e.p.0, e.p.1, e.q.0, e.q.1, e.member
            );
        }
        s.push_str("}\n");
        s
    }
}

/// Free function form of [`PairGraph::find_soft_self_loop`].
pub fn find_soft_self_loop(g: &PairGraph) -> Option<&Edge> {
    g.find_soft_self_loop()
}

/// Why a structural property failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCause {
    /// The closure was saturated, so the graph is exact for its operator set.
    EngineBug,
    /// The closure was truncated; a missing self-loop may explain the failure.
    UnderApproximation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Check {
    Pass,
    NotApplicable {
        reason: String,
    },
    Fail {
        witness: Vec<Edge>,
        nodes: Vec<Node>,
        cause: FailureCause,
    },
}

impl Check {
    pub fn failed(&self) -> bool {
        matches!(self, Check::Fail { .. })
    }
}

/// Outcome of the three structural properties of the pair graph. The last two
/// are only claimed for graphs without a soft self-loop (such a loop is itself
/// a soft edge on M-bar) and are reported as not applicable otherwise.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphPropertyReport {
    /// `(a, b)` and `(b, a)` agree on self-loop status.
    pub symmetric_loops: Check,
    /// No edge joins a node of M to a node of M-bar.
    pub no_cross_edges: Check,
    /// No node of M-bar has an incident soft edge.
    pub no_soft_on_m_bar: Check,
}

impl GraphPropertyReport {
    pub fn all_pass(&self) -> bool {
        !(self.symmetric_loops.failed()
            || self.no_cross_edges.failed()
            || self.no_soft_on_m_bar.failed())
    }
}

pub fn check_graph_properties(g: &PairGraph) -> GraphPropertyReport {
    let cause = if g.truncated {
        FailureCause::UnderApproximation
    } else {
        FailureCause::EngineBug
    };
    let looped = |p: Node| g.self_loop(p).is_some();

    let asym: Vec<Node> = g
        .nodes
        .iter()
        .copied()
        .filter(|&(a, b)| looped((a, b)) != looped((b, a)))
        .collect();
    let symmetric_loops = if asym.is_empty() {
        Check::Pass
    } else {
        Check::Fail {
            witness: Vec::new(),
            nodes: asym,
            cause,
        }
    };

    let in_m_bar = |p: Node| looped(p) || looped((p.1, p.0));
    // both remaining properties presuppose that no soft self-loop exists
    if let Some(l) = g.find_soft_self_loop() {
        let reason = format!("soft self-loop at {:?}", l.p);
        return GraphPropertyReport {
            symmetric_loops,
            no_cross_edges: Check::NotApplicable {
                reason: reason.clone(),
            },
            no_soft_on_m_bar: Check::NotApplicable { reason },
        };
    }

    let cross: Vec<Edge> = g
        .edges
        .iter()
        .filter(|e| in_m_bar(e.p) != in_m_bar(e.q))
        .cloned()
        .collect();
    let no_cross_edges = if cross.is_empty() {
        Check::Pass
    } else {
        Check::Fail {
            witness: cross,
            nodes: Vec::new(),
            cause,
        }
    };

    let soft: Vec<Edge> = g
        .edges
        .iter()
        .filter(|e| e.kind == EdgeKind::Soft && (in_m_bar(e.p) || in_m_bar(e.q)))
        .cloned()
        .collect();
    let no_soft_on_m_bar = if soft.is_empty() {
        Check::Pass
    } else {
        Check::Fail {
            witness: soft,
            nodes: Vec::new(),
            cause,
        }
    };

    GraphPropertyReport {
        symmetric_loops,
        no_cross_edges,
        no_soft_on_m_bar,
    }
}

/// Left and right side of the edge inequality for `f` at `(p, q)`.
pub fn rectangle_gap(f: &CostFunction, p: Node, q: Node) -> (Cost, Cost) {
    let (a, b) = p;
    let (a2, b2) = q;
    (
        f.get2(a, a2).add_ref(f.get2(b, b2)),
        f.get2(a, b2).add_ref(f.get2(b, a2)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::express::binary_closure;
    use crate::language::{Language, UnaryClosure};

    fn cut() -> CostFunction {
        CostFunction::from_ints(2, 2, &[Some(1), Some(0), Some(0), Some(1)]).unwrap()
    }

    fn submodular() -> CostFunction {
        CostFunction::from_ints(2, 2, &[Some(0), Some(2), Some(2), Some(2)]).unwrap()
    }

    fn diseq() -> CostFunction {
        CostFunction::crisp(2, 2, |t| t[0] != t[1]).unwrap()
    }

    fn graph_of(f: CostFunction) -> PairGraph {
        let l = Language::new(2, vec![f], UnaryClosure::General).unwrap();
        build_pair_graph(&binary_closure(&l, 3, 500).unwrap())
    }

    #[test]
    fn cut_self_loop_is_soft() {
        assert_eq!(edge_witness(&cut(), (0, 1), (0, 1)), Some(EdgeKind::Soft));
        assert_eq!(
            rectangle_gap(&cut(), (0, 1), (0, 1)),
            (Cost::int(2), Cost::zero())
        );
    }

    #[test]
    fn disequality_self_loop_is_hard() {
        assert_eq!(edge_witness(&diseq(), (0, 1), (0, 1)), Some(EdgeKind::Hard));
    }

    #[test]
    fn submodular_cross_edge_is_soft() {
        assert_eq!(
            edge_witness(&submodular(), (0, 1), (1, 0)),
            Some(EdgeKind::Soft)
        );
        assert_eq!(edge_witness(&submodular(), (0, 1), (0, 1)), None);
    }

    #[test]
    fn graph_of_cut() {
        let g = graph_of(cut());
        assert_eq!(g.self_loop((0, 1)).unwrap().kind, EdgeKind::Soft);
        assert_eq!(g.self_loop((1, 0)).unwrap().kind, EdgeKind::Soft);
        assert!(g.m_set.is_empty());
        assert_eq!(g.find_soft_self_loop().unwrap().p, (0, 1));
    }

    #[test]
    fn graph_of_submodular() {
        let g = graph_of(submodular());
        assert!(g.self_loop((0, 1)).is_none() && g.self_loop((1, 0)).is_none());
        assert_eq!(g.m_set, PairSet::all(2));
        assert!(g.find_soft_self_loop().is_none());
        assert!(check_graph_properties(&g).all_pass());
    }

    #[test]
    fn graph_of_disequality() {
        let g = graph_of(diseq());
        assert_eq!(g.self_loop((0, 1)).unwrap().kind, EdgeKind::Hard);
        assert!(g.m_set.is_empty());
        assert!(g.find_soft_self_loop().is_none());
        let r = check_graph_properties(&g);
        assert!(r.all_pass(), "{r:?}");
        assert_eq!(r.no_soft_on_m_bar, Check::Pass);
    }

    #[test]
    fn injected_cross_edge_is_reported() {
        let mut g = build_from_members(3, &[], false);
        assert!(check_graph_properties(&g).all_pass());
        let fake = |p, q| Edge {
            p,
            q,
            kind: EdgeKind::Hard,
            member: 0,
            swapped: false,
        };
        g.edges = vec![
            fake((0, 1), (0, 1)),
            fake((0, 1), (0, 2)),
            fake((1, 0), (1, 0)),
        ];
        g.m_set = PairSet::from_pairs([(0, 2), (1, 2)]);
        let r = check_graph_properties(&g);
        assert!(!r.symmetric_loops.failed());
        match r.no_cross_edges {
            Check::Fail { witness, cause, .. } => {
                assert_eq!(witness, vec![fake((0, 1), (0, 2))]);
                assert_eq!(cause, FailureCause::EngineBug);
            }
            other => panic!("expected a failure, got {other:?}"),
        }
    }

    #[test]
    fn witnesses_replay() {
        let l = Language::new(2, vec![cut()], UnaryClosure::General).unwrap();
        let c = binary_closure(&l, 2, 200).unwrap();
        let g = build_pair_graph(&c);
        for e in &g.edges {
            assert!(e.replays_on(&c.members[e.member]));
        }
    }
}
