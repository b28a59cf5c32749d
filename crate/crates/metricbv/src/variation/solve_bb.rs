//! Exact solver for gadgets with cycles.
//!
//! Enumerates every candidate arc (simple gadget path admissible for the
//! mode, positive value), then searches families by branching on
//! *resources* rather than candidates: take the heaviest still undecided
//! gadget edge and either ban it outright or cover it with one of the
//! candidates through it.  Either way the admissible bound, current value
//! plus the summed weights of undecided resources, strictly tightens; the
//! bound is admissible in every mode because an arc's value never exceeds
//! the summed weights of the resources it uses (the endpoint difference
//! telescopes through them).
//!
//! Two reductions keep high-degree junctions tractable.  Candidates are
//! trimmed: a zero-weight terminal hop joins equal node values, so dropping
//! it keeps the arc's value while freeing resources, and only the trimmed
//! representative is kept.  States are memoized by resource availability:
//! used and banned resources constrain the remaining search identically, so
//! a revisit that arrives with no more accumulated value than before cannot
//! improve on the first visit.
//!
//! Also valid on forests; the tree solver is just faster there.

use std::collections::{HashMap, HashSet};

use super::gadget::{GNode, Gadget, Side};
use super::{arc_value, system_value, Mode, RawSystem};
use crate::error::{Error, Result};
use crate::num::Num;

const CANDIDATE_CAP: usize = 200_000;
/// Memo entries kept before the table is dropped wholesale; clearing only
/// costs pruning power, never correctness.
const MEMO_CAP: usize = 2_000_000;

struct Candidate {
    nodes: Vec<GNode>,
    value: Num,
    weight: Num,
    edges: Vec<usize>,
    points: Vec<usize>,
}

fn terminal_ok(mode: Mode, n: GNode) -> bool {
    match mode {
        Mode::Interior => matches!(n, GNode::H(..)),
        _ => true,
    }
}

/// Drops zero-weight terminal hops while the ends stay admissible and the
/// value survives.  Equal-value extensions only spend extra resources, so
/// any family using the long arc can swap in the trimmed one.
fn trim_path(gg: &Gadget, mode: Mode, nodes: &[GNode], value: &Num) -> Vec<GNode> {
    let mut path = nodes.to_vec();
    while path.len() > 2 {
        let e = gg.edge_between(path[0], path[1]).expect("adjacent");
        if gg.edge_weight(e).is_positive()
            || !terminal_ok(mode, path[1])
            || arc_value(gg, mode, &path[1..]) != *value
        {
            break;
        }
        path.remove(0);
    }
    while path.len() > 2 {
        let n = path.len();
        let e = gg.edge_between(path[n - 2], path[n - 1]).expect("adjacent");
        if gg.edge_weight(e).is_positive()
            || !terminal_ok(mode, path[n - 2])
            || arc_value(gg, mode, &path[..n - 1]) != *value
        {
            break;
        }
        path.pop();
    }
    path
}

fn candidate_from_path(gg: &Gadget, nodes: Vec<GNode>, value: Num) -> Candidate {
    let mut edges = Vec::with_capacity(nodes.len() - 1);
    let mut weight = Num::zero();
    for w in nodes.windows(2) {
        let e = gg.edge_between(w[0], w[1]).expect("adjacent");
        edges.push(gg.edge_index(e));
        weight = weight + gg.edge_weight(e);
    }
    let points = nodes
        .iter()
        .filter_map(|n| match n {
            GNode::P(i) => Some(*i),
            _ => None,
        })
        .collect();
    Candidate {
        nodes,
        value,
        weight,
        edges,
        points,
    }
}

fn enumerate_candidates(gg: &Gadget, mode: Mode) -> Result<Vec<Candidate>> {
    let nn = gg.node_count();
    let mut out: Vec<Candidate> = Vec::new();
    let mut kept: HashSet<Vec<GNode>> = HashSet::new();
    let mut all_nodes: Vec<GNode> = (0..gg.points.len()).map(GNode::P).collect();
    for s in 0..gg.segments.len() {
        all_nodes.push(GNode::H(s, Side::Lo));
        all_nodes.push(GNode::H(s, Side::Hi));
    }
    for &start in &all_nodes {
        if !terminal_ok(mode, start) {
            continue;
        }
        let mut path = vec![start];
        let mut on_path = vec![false; nn];
        on_path[gg.node_index(start)] = true;
        let mut cursor = vec![0usize];
        while !path.is_empty() {
            let depth = path.len() - 1;
            let here = path[depth];
            let nbrs = gg.neighbors(here);
            if cursor[depth] >= nbrs.len() {
                on_path[gg.node_index(here)] = false;
                path.pop();
                cursor.pop();
                continue;
            }
            let (_, nb) = nbrs[cursor[depth]];
            cursor[depth] += 1;
            if on_path[gg.node_index(nb)] {
                continue;
            }
            path.push(nb);
            on_path[gg.node_index(nb)] = true;
            cursor.push(0);
            if gg.node_index(start) < gg.node_index(nb) && terminal_ok(mode, nb) {
                let value = arc_value(gg, mode, &path);
                if value.is_positive() {
                    let mut canon = trim_path(gg, mode, &path, &value);
                    if gg.node_index(canon[0]) > gg.node_index(canon[canon.len() - 1]) {
                        canon.reverse();
                    }
                    if kept.insert(canon.clone()) {
                        out.push(candidate_from_path(gg, canon, value));
                        if out.len() > CANDIDATE_CAP {
                            return Err(Error::CapExceeded {
                                what: "candidate arcs in the branch and bound".into(),
                                cap: CANDIDATE_CAP,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

struct Search<'a> {
    mode: Mode,
    cands: Vec<Candidate>,
    /// Candidates through each gadget edge.
    by_edge: Vec<Vec<usize>>,
    /// Edge weights, and edge indices ordered by descending weight.
    weights: Vec<Num>,
    edge_order: Vec<usize>,
    /// Decision state: 0 undecided, 1 used, 2 banned.
    edge_state: Vec<u8>,
    point_used: Vec<bool>,
    best: Num,
    best_pick: Vec<usize>,
    pick: Vec<usize>,
    /// Best accumulated value seen per availability state.
    seen: HashMap<(Box<[u64]>, Box<[u64]>), Num>,
    gg: &'a Gadget,
}

impl Search<'_> {
    fn compatible(&self, ci: usize) -> bool {
        let c = &self.cands[ci];
        c.edges.iter().all(|&e| self.edge_state[e] == 0)
            && (self.mode == Mode::Interior || c.points.iter().all(|&p| !self.point_used[p]))
    }

    /// Availability fingerprint: used and banned resources restrict the
    /// remaining search identically, so both collapse to "unavailable".
    fn state_key(&self) -> (Box<[u64]>, Box<[u64]>) {
        let mut e = vec![0u64; self.edge_state.len().div_ceil(64)];
        for (i, s) in self.edge_state.iter().enumerate() {
            if *s != 0 {
                e[i / 64] |= 1 << (i % 64);
            }
        }
        let mut p = Vec::new();
        if self.mode != Mode::Interior {
            p = vec![0u64; self.point_used.len().div_ceil(64)];
            for (i, u) in self.point_used.iter().enumerate() {
                if *u {
                    p[i / 64] |= 1 << (i % 64);
                }
            }
        }
        (e.into_boxed_slice(), p.into_boxed_slice())
    }

    fn dfs(&mut self, acc: Num, free: Num) {
        if acc > self.best {
            self.best = acc.clone();
            self.best_pick = self.pick.clone();
        }
        if &acc + &free <= self.best {
            return;
        }
        let key = self.state_key();
        match self.seen.get(&key) {
            Some(prev) if *prev >= acc => return,
            _ => {
                if self.seen.len() >= MEMO_CAP {
                    self.seen.clear();
                }
                self.seen.insert(key, acc.clone());
            }
        }
        // heaviest undecided resource with at least one viable candidate
        let Some(&edge) = self
            .edge_order
            .iter()
            .find(|&&e| self.edge_state[e] == 0 && !self.by_edge[e].is_empty())
        else {
            return;
        };
        // cover it
        for ci in self.by_edge[edge].clone() {
            if !self.compatible(ci) {
                continue;
            }
            for &e in &self.cands[ci].edges {
                self.edge_state[e] = 1;
            }
            if self.mode != Mode::Interior {
                for &p in &self.cands[ci].points {
                    self.point_used[p] = true;
                }
            }
            self.pick.push(ci);
            let nacc = &acc + &self.cands[ci].value;
            let nfree = &free - &self.cands[ci].weight;
            self.dfs(nacc, nfree);
            self.pick.pop();
            for &e in &self.cands[ci].edges {
                self.edge_state[e] = 0;
            }
            if self.mode != Mode::Interior {
                for &p in &self.cands[ci].points {
                    self.point_used[p] = false;
                }
            }
        }
        // or leave it unused
        self.edge_state[edge] = 2;
        let nfree = &free - &self.weights[edge];
        self.dfs(acc, nfree);
        self.edge_state[edge] = 0;
    }
}

pub(super) fn solve_bb(gg: &Gadget, mode: Mode) -> Result<RawSystem> {
    let cands = enumerate_candidates(gg, mode)?;
    let m = gg.edge_count();
    let mut by_edge: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (ci, c) in cands.iter().enumerate() {
        for &e in &c.edges {
            by_edge[e].push(ci);
        }
    }
    // within an edge, try high-value candidates first
    for list in &mut by_edge {
        list.sort_by(|&a, &b| cands[b].value.cmp(&cands[a].value));
    }
    let weights: Vec<Num> = gg.all_edges().map(|e| gg.edge_weight(e)).collect();
    let mut edge_order: Vec<usize> = (0..m).collect();
    edge_order.sort_by(|&a, &b| weights[b].cmp(&weights[a]));
    // resources no candidate ever touches cannot contribute
    let mut free = Num::zero();
    for (e, w) in weights.iter().enumerate() {
        if !by_edge[e].is_empty() {
            free = free + w;
        }
    }
    let mut search = Search {
        mode,
        cands,
        by_edge,
        weights,
        edge_order,
        edge_state: vec![0; m],
        point_used: vec![false; gg.points.len()],
        best: Num::zero(),
        best_pick: Vec::new(),
        pick: Vec::new(),
        seen: HashMap::new(),
        gg,
    };
    search.dfs(Num::zero(), free);
    let arcs: Vec<Vec<GNode>> = search
        .best_pick
        .iter()
        .map(|&i| search.cands[i].nodes.clone())
        .collect();
    let total = search.best.clone();
    let check = system_value(search.gg, mode, &arcs);
    assert!(
        check.approx_eq(&total),
        "branch and bound bookkeeping mismatch: {check} vs {total}"
    );
    Ok(RawSystem { total, arcs })
}
