//! Exact solver for acyclic gadgets.
//!
//! Rooted dynamic program over the gadget forest.  Each node carries three
//! states: `S0`, the best total over the subtree with nothing dangling, and
//! `S1(sigma)`, the best total with one open path end waiting to exit
//! through the parent resource.  An open path with polarity `sigma` is
//! accounted so that when it finally terminates at a node of value `V` the
//! system gains `sigma * V`; taking the better polarity realizes the
//! absolute endpoint difference.  In partition mode terminals are worthless
//! and crossing a resource collects its weight instead.
//!
//! Half nodes have one child; they can pass the dangling end through, start
//! a fresh one, or close the child's end and immediately start another,
//! which is how a terminal dip and a crossing curve share a segment end.
//! Point nodes with capacity one run a small automaton over their children
//! (untouched / saturated / holding an open end); interior mode replaces it
//! with a surplus count of unmatched open ends, pairing them into through
//! curves, since there point nodes are shareable and never terminals.

use super::gadget::{GEdge, GNode, Gadget};
use super::{system_value, Mode, RawSystem};
use crate::num::Num;

const SIGS: [usize; 2] = [0, 1];

fn term(v: &Num, sig: usize, mode: Mode) -> Num {
    match mode {
        Mode::Partition => Num::zero(),
        _ => {
            if sig == 0 {
                v.clone()
            } else {
                -v.clone()
            }
        }
    }
}

fn cross_weight(gg: &Gadget, e: GEdge, mode: Mode) -> Num {
    match mode {
        Mode::Partition => gg.edge_weight(e),
        _ => Num::zero(),
    }
}

fn add(a: &Option<Num>, b: &Num) -> Option<Num> {
    a.as_ref().map(|x| x + b)
}

fn sub(a: &Option<Num>, b: &Num) -> Option<Num> {
    a.as_ref().map(|x| x - b)
}

#[derive(Clone, Debug)]
enum Back {
    HA0,
    HTerm { sig: usize },
    HPass,
    HBirth,
    HTermBirth { sig: usize },
    CapZ,
    CapT,
    CapO,
    CapBirth,
    IvTable,
}

type Entry = Option<(Num, Back)>;

fn upd(slot: &mut Entry, cand: Option<Num>, back: Back) {
    if let Some(v) = cand {
        let better = match slot {
            None => true,
            Some((cur, _)) => v > *cur,
        };
        if better {
            *slot = Some((v, back));
        }
    }
}

#[derive(Clone, Default)]
struct Dp {
    s0: Entry,
    s1: [Entry; 2],
}

impl Dp {
    fn s0_val(&self) -> Option<Num> {
        self.s0.as_ref().map(|(v, _)| v.clone())
    }
    fn s1_val(&self, sig: usize) -> Option<Num> {
        self.s1[sig].as_ref().map(|(v, _)| v.clone())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum CapAct {
    Skip,
    Term { sig: usize },
    Hold { sig: usize },
    Join { sig: usize },
}

#[derive(Clone)]
struct CapCell {
    val: Option<Num>,
    back: (usize, CapAct),
}

#[derive(Clone, Copy, Debug)]
enum IvAct {
    Skip,
    Take { sig: usize },
}

#[derive(Clone)]
struct IvCell {
    val: Option<Num>,
    back: IvAct,
}

enum PTable {
    Cap(Vec<[CapCell; 4]>),
    Iv { offset: usize, rows: Vec<Vec<IvCell>> },
}

// automaton states for capacity-one points
const Z: usize = 0;
const T: usize = 1;
fn o(sig: usize) -> usize {
    2 + sig
}

struct Ctx<'a> {
    gg: &'a Gadget,
    mode: Mode,
    children: Vec<Vec<(GEdge, GNode)>>,
    dp: Vec<Dp>,
    tables: Vec<Option<PTable>>,
}

/// Solves on a forest gadget; `None` when the gadget contains a cycle.
pub(super) fn solve_tree(gg: &Gadget, mode: Mode) -> Option<RawSystem> {
    let n = gg.node_count();
    let mut visited = vec![false; n];
    let mut order: Vec<GNode> = Vec::with_capacity(n);
    let mut children: Vec<Vec<(GEdge, GNode)>> = vec![Vec::new(); n];
    let mut roots: Vec<GNode> = Vec::new();
    for p in 0..gg.points.len() {
        let root = GNode::P(p);
        if visited[gg.node_index(root)] {
            continue;
        }
        roots.push(root);
        visited[gg.node_index(root)] = true;
        let mut queue = std::collections::VecDeque::new();
        queue.push_back((root, None::<GEdge>));
        while let Some((node, pedge)) = queue.pop_front() {
            order.push(node);
            for (e, nb) in gg.neighbors(node) {
                if Some(e) == pedge {
                    continue;
                }
                let bi = gg.node_index(nb);
                if visited[bi] {
                    return None; // cycle
                }
                visited[bi] = true;
                children[gg.node_index(node)].push((e, nb));
                queue.push_back((nb, Some(e)));
            }
        }
    }
    debug_assert!(visited.iter().all(|&b| b));

    let mut ctx = Ctx {
        gg,
        mode,
        children,
        dp: vec![Dp::default(); n],
        tables: (0..n).map(|_| None).collect(),
    };
    for node in order.iter().rev() {
        match node {
            GNode::H(..) => solve_h(&mut ctx, *node),
            GNode::P(..) => solve_p(&mut ctx, *node),
        }
    }

    let mut arcs: Vec<Vec<GNode>> = Vec::new();
    let mut total = Num::zero();
    for root in roots {
        let idx = gg.node_index(root);
        let (v, _) = ctx.dp[idx].s0.clone().expect("closed state is feasible");
        total = total + v;
        let open = rebuild(&ctx, root, Want::S0, &mut arcs);
        debug_assert!(open.is_none());
    }
    arcs.retain(|a| a.len() >= 2);
    let check = system_value(gg, mode, &arcs);
    assert!(
        check.approx_eq(&total),
        "tree solver bookkeeping mismatch: {check} vs {total}"
    );
    Some(RawSystem { total, arcs })
}

fn child_a(ctx: &Ctx, e: GEdge, c: GNode) -> (Option<Num>, [Option<Num>; 2]) {
    let cdp = &ctx.dp[ctx.gg.node_index(c)];
    let w = cross_weight(ctx.gg, e, ctx.mode);
    let a0 = cdp.s0_val();
    let a1 = [
        cdp.s1_val(0).map(|v| v + &w),
        cdp.s1_val(1).map(|v| v + &w),
    ];
    (a0, a1)
}

fn solve_h(ctx: &mut Ctx, node: GNode) {
    let idx = ctx.gg.node_index(node);
    let kids = ctx.children[idx].clone();
    assert_eq!(kids.len(), 1, "half nodes have exactly one child");
    let (e, c) = kids[0];
    let (a0, a1) = child_a(ctx, e, c);
    let hv = ctx.gg.node_value(node).clone();
    let mut dp = Dp::default();
    upd(&mut dp.s0, a0.clone(), Back::HA0);
    for sig in SIGS {
        upd(
            &mut dp.s0,
            add(&a1[sig], &term(&hv, sig, ctx.mode)),
            Back::HTerm { sig },
        );
    }
    for sig in SIGS {
        upd(&mut dp.s1[sig], a1[sig].clone(), Back::HPass);
        upd(
            &mut dp.s1[sig],
            sub(&a0, &term(&hv, sig, ctx.mode)),
            Back::HBirth,
        );
        for sig_in in SIGS {
            let closed = add(&a1[sig_in], &term(&hv, sig_in, ctx.mode));
            upd(
                &mut dp.s1[sig],
                sub(&closed, &term(&hv, sig, ctx.mode)),
                Back::HTermBirth { sig: sig_in },
            );
        }
    }
    ctx.dp[idx] = dp;
}

fn solve_p(ctx: &mut Ctx, node: GNode) {
    let idx = ctx.gg.node_index(node);
    let kids = ctx.children[idx].clone();
    let pv = ctx.gg.node_value(node).clone();
    let mut dp = Dp::default();
    match ctx.mode {
        Mode::Pointwise | Mode::Partition => {
            let empty = CapCell {
                val: None,
                back: (Z, CapAct::Skip),
            };
            let mut rows: Vec<[CapCell; 4]> = Vec::with_capacity(kids.len() + 1);
            let mut init = [empty.clone(), empty.clone(), empty.clone(), empty];
            init[Z].val = Some(Num::zero());
            rows.push(init);
            for (e, c) in &kids {
                let (a0, a1) = child_a(ctx, *e, *c);
                let prev = rows.last().unwrap().clone();
                let mut next: [CapCell; 4] = prev.clone().map(|cell| CapCell {
                    val: None,
                    back: cell.back,
                });
                let mut put = |st: usize, v: Option<Num>, from: usize, act: CapAct| {
                    if let Some(v) = v {
                        let better = match &next[st].val {
                            None => true,
                            Some(cur) => v > *cur,
                        };
                        if better {
                            next[st] = CapCell {
                                val: Some(v),
                                back: (from, act),
                            };
                        }
                    }
                };
                for st in [Z, T, o(0), o(1)] {
                    let base = prev[st].val.clone();
                    if base.is_none() {
                        continue;
                    }
                    put(
                        st,
                        a0.as_ref().map(|x| x + base.as_ref().unwrap()),
                        st,
                        CapAct::Skip,
                    );
                }
                if let Some(zv) = prev[Z].val.clone() {
                    for sig in SIGS {
                        let reach = add(&a1[sig], &term(&pv, sig, ctx.mode));
                        put(T, reach.map(|x| x + &zv), Z, CapAct::Term { sig });
                        put(
                            o(sig),
                            a1[sig].as_ref().map(|x| x + &zv),
                            Z,
                            CapAct::Hold { sig },
                        );
                    }
                }
                for sig in SIGS {
                    if let Some(ov) = prev[o(sig)].val.clone() {
                        let mate = 1 - sig;
                        put(
                            T,
                            a1[mate].as_ref().map(|x| x + &ov),
                            o(sig),
                            CapAct::Join { sig: mate },
                        );
                    }
                }
                rows.push(next);
            }
            let last = rows.last().unwrap();
            upd(&mut dp.s0, last[Z].val.clone(), Back::CapZ);
            upd(&mut dp.s0, last[T].val.clone(), Back::CapT);
            for sig in SIGS {
                upd(&mut dp.s1[sig], last[o(sig)].val.clone(), Back::CapO);
                upd(
                    &mut dp.s1[sig],
                    sub(&last[Z].val, &term(&pv, sig, ctx.mode)),
                    Back::CapBirth,
                );
            }
            ctx.tables[idx] = Some(PTable::Cap(rows));
        }
        Mode::Interior => {
            let k = kids.len();
            let offset = k;
            let width = 2 * k + 1;
            let mut rows: Vec<Vec<IvCell>> = Vec::with_capacity(k + 1);
            let mut init = vec![
                IvCell {
                    val: None,
                    back: IvAct::Skip,
                };
                width.max(1)
            ];
            init[offset] = IvCell {
                val: Some(Num::zero()),
                back: IvAct::Skip,
            };
            rows.push(init);
            for (e, c) in &kids {
                let (a0, a1) = child_a(ctx, *e, *c);
                let prev = rows.last().unwrap().clone();
                let mut next = vec![
                    IvCell {
                        val: None,
                        back: IvAct::Skip,
                    };
                    width
                ];
                for s in 0..width {
                    let mut put = |v: Option<Num>, act: IvAct| {
                        if let Some(v) = v {
                            let better = match &next[s].val {
                                None => true,
                                Some(cur) => v > *cur,
                            };
                            if better {
                                next[s] = IvCell {
                                    val: Some(v),
                                    back: act,
                                };
                            }
                        }
                    };
                    if let Some(p) = prev[s].val.clone() {
                        put(a0.as_ref().map(|x| x + &p), IvAct::Skip);
                    }
                    if s >= 1 {
                        if let Some(p) = prev[s - 1].val.clone() {
                            put(a1[0].as_ref().map(|x| x + &p), IvAct::Take { sig: 0 });
                        }
                    }
                    if s + 1 < width {
                        if let Some(p) = prev[s + 1].val.clone() {
                            put(a1[1].as_ref().map(|x| x + &p), IvAct::Take { sig: 1 });
                        }
                    }
                }
                rows.push(next);
            }
            let last = rows.last().unwrap();
            upd(&mut dp.s0, last[offset].val.clone(), Back::IvTable);
            if k >= 1 {
                upd(&mut dp.s1[0], last[offset + 1].val.clone(), Back::IvTable);
                upd(&mut dp.s1[1], last[offset - 1].val.clone(), Back::IvTable);
            }
            ctx.tables[idx] = Some(PTable::Iv { offset, rows });
        }
    }
    ctx.dp[idx] = dp;
}

#[derive(Clone, Copy)]
enum Want {
    S0,
    S1(usize),
}

/// Replays backpointers; returns the open path (deep terminal first, current
/// node last) when an `S1` state was requested.
fn rebuild(ctx: &Ctx, node: GNode, want: Want, out: &mut Vec<Vec<GNode>>) -> Option<Vec<GNode>> {
    let idx = ctx.gg.node_index(node);
    let entry = match want {
        Want::S0 => ctx.dp[idx].s0.clone(),
        Want::S1(sig) => ctx.dp[idx].s1[sig].clone(),
    };
    let (_, back) = entry.expect("requested state is feasible");
    match node {
        GNode::H(..) => {
            let (_, c) = ctx.children[idx][0];
            match back {
                Back::HA0 => {
                    let open = rebuild(ctx, c, Want::S0, out);
                    debug_assert!(open.is_none());
                    None
                }
                Back::HTerm { sig } => {
                    let mut open = rebuild(ctx, c, Want::S1(sig), out).expect("open path");
                    open.push(node);
                    out.push(open);
                    None
                }
                Back::HPass => {
                    let sig = match want {
                        Want::S1(s) => s,
                        Want::S0 => unreachable!(),
                    };
                    let mut open = rebuild(ctx, c, Want::S1(sig), out).expect("open path");
                    open.push(node);
                    Some(open)
                }
                Back::HBirth => {
                    let open = rebuild(ctx, c, Want::S0, out);
                    debug_assert!(open.is_none());
                    Some(vec![node])
                }
                Back::HTermBirth { sig } => {
                    let mut closed = rebuild(ctx, c, Want::S1(sig), out).expect("open path");
                    closed.push(node);
                    out.push(closed);
                    Some(vec![node])
                }
                _ => unreachable!("half node with point backpointer"),
            }
        }
        GNode::P(..) => match ctx.tables[idx].as_ref().expect("point table") {
            PTable::Cap(rows) => rebuild_cap(ctx, node, want, back, rows, out),
            PTable::Iv { offset, rows } => {
                let want_s = match (want, back) {
                    (Want::S0, Back::IvTable) => *offset,
                    (Want::S1(0), Back::IvTable) => offset + 1,
                    (Want::S1(1), Back::IvTable) => offset - 1,
                    _ => unreachable!("interior point backpointer"),
                };
                rebuild_iv(ctx, node, want_s, *offset, rows, out)
            }
        },
    }
}

fn rebuild_cap(
    ctx: &Ctx,
    node: GNode,
    want: Want,
    back: Back,
    rows: &[[CapCell; 4]],
    out: &mut Vec<Vec<GNode>>,
) -> Option<Vec<GNode>> {
    let idx = ctx.gg.node_index(node);
    let kids = &ctx.children[idx];
    let mut state = match (&back, want) {
        (Back::CapZ, _) | (Back::CapBirth, _) => Z,
        (Back::CapT, _) => T,
        (Back::CapO, Want::S1(sig)) => o(sig),
        _ => unreachable!("capacity point backpointer"),
    };
    let mut acts: Vec<(usize, CapAct)> = Vec::with_capacity(kids.len());
    for i in (0..kids.len()).rev() {
        let cell = &rows[i + 1][state];
        acts.push((state, cell.back.1));
        state = cell.back.0;
    }
    debug_assert_eq!(state, Z);
    acts.reverse();
    let mut pending: Option<Vec<GNode>> = None;
    for (i, (_, act)) in acts.iter().enumerate() {
        let (_, c) = kids[i];
        match act {
            CapAct::Skip => {
                let open = rebuild(ctx, c, Want::S0, out);
                debug_assert!(open.is_none());
            }
            CapAct::Term { sig } => {
                let mut open = rebuild(ctx, c, Want::S1(*sig), out).expect("open path");
                open.push(node);
                out.push(open);
            }
            CapAct::Hold { sig } => {
                let mut open = rebuild(ctx, c, Want::S1(*sig), out).expect("open path");
                open.push(node);
                debug_assert!(pending.is_none());
                pending = Some(open);
            }
            CapAct::Join { sig } => {
                let other = rebuild(ctx, c, Want::S1(*sig), out).expect("open path");
                let mut arc = pending.take().expect("held path");
                arc.extend(other.into_iter().rev());
                out.push(arc);
            }
        }
    }
    match back {
        Back::CapZ | Back::CapT => {
            debug_assert!(pending.is_none());
            None
        }
        Back::CapO => Some(pending.expect("held path survives")),
        Back::CapBirth => {
            debug_assert!(pending.is_none());
            Some(vec![node])
        }
        _ => unreachable!(),
    }
}

fn rebuild_iv(
    ctx: &Ctx,
    node: GNode,
    want_s: usize,
    offset: usize,
    rows: &[Vec<IvCell>],
    out: &mut Vec<Vec<GNode>>,
) -> Option<Vec<GNode>> {
    let idx = ctx.gg.node_index(node);
    let kids = &ctx.children[idx];
    let mut acts: Vec<IvAct> = Vec::with_capacity(kids.len());
    let mut s = want_s;
    for i in (0..kids.len()).rev() {
        let cell = &rows[i + 1][s];
        acts.push(cell.back);
        s = match cell.back {
            IvAct::Skip => s,
            IvAct::Take { sig: 0 } => s - 1,
            IvAct::Take { .. } => s + 1,
        };
    }
    debug_assert_eq!(s, offset);
    acts.reverse();
    let mut plus: Vec<Vec<GNode>> = Vec::new();
    let mut minus: Vec<Vec<GNode>> = Vec::new();
    for (i, act) in acts.iter().enumerate() {
        let (_, c) = kids[i];
        match act {
            IvAct::Skip => {
                let open = rebuild(ctx, c, Want::S0, out);
                debug_assert!(open.is_none());
            }
            IvAct::Take { sig } => {
                let open = rebuild(ctx, c, Want::S1(*sig), out).expect("open path");
                if *sig == 0 {
                    plus.push(open);
                } else {
                    minus.push(open);
                }
            }
        }
    }
    let leftover = match want_s.cmp(&offset) {
        std::cmp::Ordering::Equal => None,
        std::cmp::Ordering::Greater => Some(plus.pop().expect("surplus plus")),
        std::cmp::Ordering::Less => Some(minus.pop().expect("surplus minus")),
    };
    debug_assert_eq!(plus.len(), minus.len());
    for (a, b) in plus.into_iter().zip(minus.into_iter()) {
        let mut arc = a;
        arc.push(node);
        arc.extend(b.into_iter().rev());
        out.push(arc);
    }
    leftover.map(|mut open| {
        open.push(node);
        open
    })
}
