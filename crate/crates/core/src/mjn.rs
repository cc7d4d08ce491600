//! The mu function on 3-label sets and the MJN triple built from it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, MuConflict, Result};
use crate::express::{min_compose, BinaryClosure};
use crate::function::CostFunction;
use crate::language::Language;
use crate::ops::{
    check_mjn_on, check_triple, BinaryOp, MmReport, OpPair, OpTriple, PairSet, TernaryOp,
};

/// Evidence that `label` is the minority of `set`: member `member` of the
/// closure has effective domain exactly `{(x, a2), (y, a2), (label, b2)}`
/// where `{x, y, label} = set` and `pair = (a2, b2)` lies in M-bar.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MuWitness {
    pub set: [usize; 3],
    pub label: usize,
    pub member: usize,
    pub pair: (usize, usize),
}

/// The mu function: at most one label per 3-set, each with a witness. Sets
/// with fewer than three labels are never present.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MuMap {
    pub domain_size: usize,
    pub entries: Vec<MuWitness>,
}

impl MuMap {
    /// `mu({a, b, c})`, if nonempty.
    pub fn get(&self, a: usize, b: usize, c: usize) -> Option<usize> {
        let mut set = [a, b, c];
        set.sort_unstable();
        if set[0] == set[1] || set[1] == set[2] {
            return None;
        }
        self.entries.iter().find(|w| w.set == set).map(|w| w.label)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Matches `dom f = {(x, a2), (y, a2), (c, b2)}` with distinct first
/// coordinates; returns `(sorted set, c, (a2, b2))`.
fn three_point_pattern(f: &CostFunction) -> Option<([usize; 3], usize, (usize, usize))> {
    if f.dom_size() != 3 {
        return None;
    }
    let dom = f.effective_domain();
    let mut firsts = [dom[0][0], dom[1][0], dom[2][0]];
    firsts.sort_unstable();
    if firsts[0] == firsts[1] || firsts[1] == firsts[2] {
        return None;
    }
    let seconds = [dom[0][1], dom[1][1], dom[2][1]];
    // the odd one out among the second coordinates
    let odd = (0..3).find(|&i| seconds.iter().filter(|&&s| s == seconds[i]).count() == 1)?;
    let shared = seconds[(odd + 1) % 3];
    if seconds.iter().filter(|&&s| s == shared).count() != 2 {
        return None;
    }
    Some((firsts, dom[odd][0], (shared, seconds[odd])))
}

/// Scans the closure for three-point effective domains whose second
/// coordinates form a pair of M-bar (the complement of `m_set`). Two different
/// labels qualifying for one set is reported as [`Error::MuConflict`] together
/// with the composition exposing the missed soft edge.
pub fn compute_mu(closure: &BinaryClosure, m_set: &PairSet) -> Result<MuMap> {
    let mut found: BTreeMap<[usize; 3], MuWitness> = BTreeMap::new();
    for (k, f) in closure.members.iter().enumerate() {
        let Some((set, label, pair)) = three_point_pattern(f) else {
            continue;
        };
        if m_set.contains(pair.0, pair.1) {
            continue;
        }
        match found.get(&set) {
            None => {
                found.insert(
                    set,
                    MuWitness {
                        set,
                        label,
                        member: k,
                        pair,
                    },
                );
            }
            Some(w) if w.label == label => {}
            Some(w) => {
                // transpose(witness of the first label) composed with the second
                let composed = min_compose(&closure.members[w.member].transpose(), f)?;
                return Err(Error::MuConflict(Box::new(MuConflict {
                    set,
                    first_label: w.label,
                    first_member: w.member,
                    second_label: label,
                    second_member: k,
                    composed,
                })));
            }
        }
    }
    Ok(MuMap {
        domain_size: closure.domain_size,
        entries: found.into_values().collect(),
    })
}

/// Entries violating "mu({a, b, c}) = {c} implies {a, c}, {b, c} in M-bar".
pub fn check_mu_pairs(mu: &MuMap, m_set: &PairSet) -> Vec<MuWitness> {
    mu.entries
        .iter()
        .filter(|w| {
            w.set
                .iter()
                .any(|&x| x != w.label && m_set.contains(x, w.label))
        })
        .cloned()
        .collect()
}

/// Builds the triple case by case: two-valued argument multisets `{x, x, y}`
/// with `{x, y}` in M-bar give `(x, x, y)`; a mu label in the first or second
/// position moves to the third output with the STP applied to the other two;
/// everything else gives `(a ⊓ b, a ⊔ b, c)`.
pub fn construct_mjn(mu: &MuMap, stp: &OpPair, m_set: &PairSet) -> OpTriple {
    let d = stp.domain_size();
    let m_bar = m_set.complement(d);
    let (meet, join) = (&stp.meet, &stp.join);
    let mut tables: [Vec<usize>; 3] = Default::default();
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                let out = mjn_at(mu, meet, join, &m_bar, a, b, c);
                for (t, v) in tables.iter_mut().zip(out) {
                    t.push(v);
                }
            }
        }
    }
    let [t1, t2, t3] = tables;
    OpTriple {
        mj1: TernaryOp::new(d, t1).expect("labels in range"),
        mj2: TernaryOp::new(d, t2).expect("labels in range"),
        mn3: TernaryOp::new(d, t3).expect("labels in range"),
    }
}

fn mjn_at(
    mu: &MuMap,
    meet: &BinaryOp,
    join: &BinaryOp,
    m_bar: &PairSet,
    a: usize,
    b: usize,
    c: usize,
) -> [usize; 3] {
    let two_valued = if a == b && b != c {
        Some((a, c))
    } else if a == c && a != b {
        Some((a, b))
    } else if b == c && a != b {
        Some((b, a))
    } else {
        None
    };
    if let Some((x, y)) = two_valued {
        if m_bar.contains(x, y) {
            return [x, x, y];
        }
    }
    match mu.get(a, b, c) {
        Some(l) if l == a && a != b && a != c => [meet.apply(b, c), join.apply(b, c), a],
        Some(l) if l == b && b != a && b != c => [meet.apply(a, c), join.apply(a, c), b],
        _ => [meet.apply(a, b), join.apply(a, b), c],
    }
}

/// Multimorphism check of the triple against the language plus the MJN
/// conditions on the complement of `m_set`. Both must hold.
pub fn verify_mjn(triple: &OpTriple, language: &Language, m_set: &PairSet) -> Result<MmReport> {
    let r = check_triple(triple, language)?;
    if !r.holds {
        return Ok(r);
    }
    let on_m = check_mjn_on(triple, &m_set.complement(triple.domain_size()));
    Ok(if on_m.holds { r } else { on_m })
}
