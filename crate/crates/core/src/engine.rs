//! Conditioned model counting on a join tree by sum-product message
//! passing.
//!
//! Conditioning filters rows; tables are never modified. Every edge gets a
//! dictionary over the label projections of both endpoints, so combining a
//! message with a table is a slot lookup instead of a join.
//!
//! Unconditioned messages in both directions are computed once. A query
//! recomputes only the messages inside the smallest subtree spanning the
//! vertices that hold a conditioned bit, and sums at that subtree's top
//! vertex, whose message from outside is unconditioned.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::Zero;
use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::table::{get_bit, intersect, positions, project, Key};
use crate::treebuild::{JoinTree, TreeNode};

/// Partial assignment of error bits, by bit index.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Query {
    bits: BTreeMap<usize, bool>,
}

impl Query {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, bit: usize, value: bool) -> Self {
        self.bits.insert(bit, value);
        self
    }

    pub fn set(&mut self, bit: usize, value: bool) {
        self.bits.insert(bit, value);
    }

    pub fn get(&self, bit: usize) -> Option<bool> {
        self.bits.get(&bit).copied()
    }

    /// Fixes every error bit: bit `i` to `bits[i]`.
    pub fn full_pattern(bits: &[bool]) -> Self {
        Query {
            bits: bits.iter().copied().enumerate().collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, bool)> + '_ {
        self.bits.iter().map(|(&i, &v)| (i, v))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

struct Prepared {
    /// `(error bit, key position)` for every error variable in the node.
    err: Vec<(usize, usize)>,
    /// Per child (in `children` order), the slot of each row on that edge.
    child_slot: Vec<Vec<u32>>,
    /// Slot of each row on the edge to the parent.
    parent_slot: Vec<u32>,
    /// Dictionary size of the edge to the parent.
    num_slots: usize,
    depth: usize,
    component: usize,
}

pub struct Engine<'t> {
    tree: &'t JoinTree,
    prep: Vec<Prepared>,
    /// Unconditioned message from each non-root node to its parent.
    up: Vec<Vec<BigUint>>,
    /// Unconditioned message to each non-root node from its parent.
    down: Vec<Vec<BigUint>>,
    /// Unconditioned count of each component, in root order.
    component_total: Vec<BigUint>,
    /// Nodes holding each error bit.
    holders: Vec<Vec<usize>>,
}

/// Row count times every message the row reads; `None` when a message is
/// zero. `children` gives one message per child, `None` leaving it out.
fn row_value(
    p: &Prepared,
    r: usize,
    count: &BigUint,
    children: &[Option<&[BigUint]>],
    outside: Option<&[BigUint]>,
) -> Option<BigUint> {
    let reads = children
        .iter()
        .zip(&p.child_slot)
        .filter_map(|(m, slots)| m.map(|m| &m[slots[r] as usize]))
        .chain(outside.map(|m| &m[p.parent_slot[r] as usize]));
    let mut value: Option<BigUint> = None;
    for m in reads {
        if m.is_zero() {
            return None;
        }
        value = Some(match value {
            None => count * m,
            Some(x) => x * m,
        });
    }
    Some(value.unwrap_or_else(|| count.clone()))
}

fn consistent(key: &[u64], cond: &[(usize, bool)]) -> bool {
    cond.iter().all(|&(pos, b)| get_bit(key, pos) == b)
}

/// Row values of `node` consistent with `cond`, summed per output slot.
/// Returns `None` when no row contributes.
fn combine(
    node: &TreeNode,
    p: &Prepared,
    cond: &[(usize, bool)],
    children: &[Option<&[BigUint]>],
    outside: Option<&[BigUint]>,
    out_slots: Option<&[u32]>,
    out_len: usize,
) -> Option<Vec<BigUint>> {
    let mut out = vec![BigUint::zero(); out_len];
    let mut any = false;
    for (r, (key, count)) in node.table.rows().iter().enumerate() {
        if !consistent(key, cond) {
            continue;
        }
        if let Some(x) = row_value(p, r, count, children, outside) {
            out[out_slots.map_or(0, |s| s[r] as usize)] += x;
            any = true;
        }
    }
    any.then_some(out)
}

impl<'t> Engine<'t> {
    pub fn new(tree: &'t JoinTree) -> Self {
        let nodes = tree.nodes();
        let errs = tree.error_vars();
        let mut prep: Vec<Prepared> = nodes
            .iter()
            .map(|n| Prepared {
                err: errs
                    .iter()
                    .enumerate()
                    .filter_map(|(bit, v)| n.table.vars().binary_search(v).ok().map(|p| (bit, p)))
                    .collect(),
                child_slot: vec![Vec::new(); n.children.len()],
                parent_slot: vec![0; n.table.len()],
                num_slots: 1,
                depth: 0,
                component: 0,
            })
            .collect();
        for (p, node) in nodes.iter().enumerate() {
            for (ci, &c) in node.children.iter().enumerate() {
                let child = &nodes[c];
                let label = intersect(child.table.vars(), node.table.vars());
                let in_parent = positions(node.table.vars(), &label);
                let in_child = positions(child.table.vars(), &label);
                let mut dict: FxHashMap<Key, u32> = FxHashMap::default();
                let mut slot_of = |k: Key| {
                    let next = dict.len() as u32;
                    *dict.entry(k).or_insert(next)
                };
                prep[p].child_slot[ci] = node.table.rows().iter().map(|(k, _)| slot_of(project(k, &in_parent))).collect();
                prep[c].parent_slot = child.table.rows().iter().map(|(k, _)| slot_of(project(k, &in_child))).collect();
                prep[c].num_slots = dict.len();
            }
        }
        let order = tree.postorder();
        for (i, &r) in tree.roots().iter().enumerate() {
            prep[r].component = i;
        }
        for &v in order.iter().rev() {
            if let Some(p) = nodes[v].parent {
                prep[v].depth = prep[p].depth + 1;
                prep[v].component = prep[p].component;
            }
        }
        let mut holders = vec![Vec::new(); errs.len()];
        for (v, p) in prep.iter().enumerate() {
            for &(bit, _) in &p.err {
                holders[bit].push(v);
            }
        }

        let mut up: Vec<Vec<BigUint>> = vec![Vec::new(); nodes.len()];
        let mut component_total = vec![BigUint::zero(); tree.roots().len()];
        for &v in &order {
            let p = &prep[v];
            let children: Vec<Option<&[BigUint]>> = nodes[v].children.iter().map(|&c| Some(&up[c][..])).collect();
            match nodes[v].parent {
                Some(_) => {
                    let m = combine(&nodes[v], p, &[], &children, None, Some(&p.parent_slot), p.num_slots);
                    up[v] = m.unwrap_or_else(|| vec![BigUint::zero(); p.num_slots]);
                }
                None => {
                    let m = combine(&nodes[v], p, &[], &children, None, None, 1);
                    component_total[p.component] = m.map_or_else(BigUint::zero, |mut m| m.swap_remove(0));
                }
            }
        }
        let mut down: Vec<Vec<BigUint>> = vec![Vec::new(); nodes.len()];
        for &v in order.iter().rev() {
            for (ci, &c) in nodes[v].children.iter().enumerate() {
                let children: Vec<Option<&[BigUint]>> = nodes[v]
                    .children
                    .iter()
                    .map(|&d| (d != c).then(|| &up[d][..]))
                    .collect();
                let outside = nodes[v].parent.map(|_| &down[v][..]);
                let len = prep[c].num_slots;
                let m = combine(&nodes[v], &prep[v], &[], &children, outside, Some(&prep[v].child_slot[ci]), len);
                down[c] = m.unwrap_or_else(|| vec![BigUint::zero(); len]);
            }
        }
        Engine {
            tree,
            prep,
            up,
            down,
            component_total,
            holders,
        }
    }

    pub fn tree(&self) -> &JoinTree {
        self.tree
    }

    /// Models of the whole formula consistent with `q`.
    pub fn sat_count(&self, q: &Query) -> BigUint {
        if let Some((bit, _)) = q.iter().find(|&(b, _)| b >= self.holders.len()) {
            panic!("query fixes error bit {bit}, but there are only {}", self.holders.len());
        }
        let nodes = self.tree.nodes();
        let mut by_component: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (bit, _) in q.iter() {
            for &v in &self.holders[bit] {
                by_component.entry(self.prep[v].component).or_default().push(v);
            }
        }
        let mut total = BigUint::from(1u8);
        for (i, t) in self.component_total.iter().enumerate() {
            if !by_component.contains_key(&i) {
                total *= t;
            }
        }
        for held in by_component.values() {
            let top = held.iter().copied().reduce(|a, b| self.meet(a, b)).expect("nonempty");
            let mut active: Vec<usize> = Vec::new();
            for &s in held {
                let mut v = s;
                while v != top && !active.contains(&v) {
                    active.push(v);
                    v = nodes[v].parent.expect("below the meeting point");
                }
            }
            active.sort_unstable_by_key(|&v| std::cmp::Reverse(self.prep[v].depth));
            let mut fresh: FxHashMap<usize, Vec<BigUint>> = FxHashMap::default();
            for &v in active.iter().chain([&top]) {
                let p = &self.prep[v];
                let cond: Vec<(usize, bool)> = p.err.iter().filter_map(|&(bit, pos)| q.get(bit).map(|b| (pos, b))).collect();
                let children: Vec<Option<&[BigUint]>> = nodes[v]
                    .children
                    .iter()
                    .map(|c| Some(fresh.get(c).map_or(&self.up[*c][..], |m| &m[..])))
                    .collect();
                let m = if v == top {
                    let outside = nodes[v].parent.map(|_| &self.down[v][..]);
                    combine(&nodes[v], p, &cond, &children, outside, None, 1)
                } else {
                    combine(&nodes[v], p, &cond, &children, None, Some(&p.parent_slot), p.num_slots)
                };
                let Some(mut m) = m else {
                    return BigUint::zero();
                };
                if v == top {
                    total *= m.swap_remove(0);
                } else {
                    fresh.insert(v, m);
                }
            }
        }
        total
    }

    /// For every error bit `j`, the number of models consistent with `q`
    /// that also set `e_j`. One conditioned pass up and one down the whole
    /// forest, after which each vertex sees the evidence from everywhere.
    pub fn bit_counts(&self, q: &Query) -> Vec<BigUint> {
        let num_bits = self.holders.len();
        if let Some((bit, _)) = q.iter().find(|&(b, _)| b >= num_bits) {
            panic!("query fixes error bit {bit}, but there are only {num_bits}");
        }
        let nodes = self.tree.nodes();
        let zeros = || vec![BigUint::zero(); num_bits];
        let conds: Vec<Vec<(usize, bool)>> = self
            .prep
            .iter()
            .map(|p| p.err.iter().filter_map(|&(bit, pos)| q.get(bit).map(|b| (pos, b))).collect())
            .collect();
        // messages whose sending side holds no evidence are the cached
        // unconditioned ones
        let mut below = vec![0usize; nodes.len()];
        let mut in_component = vec![0usize; self.component_total.len()];
        for (v, c) in conds.iter().enumerate() {
            if !c.is_empty() {
                in_component[self.prep[v].component] += 1;
                let mut x = Some(v);
                while let Some(y) = x {
                    below[y] += 1;
                    x = nodes[y].parent;
                }
            }
        }
        let order = self.tree.postorder();
        let mut up: Vec<Option<Vec<BigUint>>> = vec![None; nodes.len()];
        let mut totals = self.component_total.clone();
        for &v in order.iter().filter(|&&v| below[v] > 0) {
            let p = &self.prep[v];
            let children: Vec<Option<&[BigUint]>> = nodes[v]
                .children
                .iter()
                .map(|&c| Some(up[c].as_deref().unwrap_or(&self.up[c])))
                .collect();
            let (slots, len) = match nodes[v].parent {
                Some(_) => (Some(&p.parent_slot[..]), p.num_slots),
                None => (None, 1),
            };
            let Some(m) = combine(&nodes[v], p, &conds[v], &children, None, slots, len) else {
                return zeros();
            };
            match nodes[v].parent {
                Some(_) => up[v] = Some(m),
                None => totals[p.component] = m.into_iter().next().expect("one slot"),
            }
        }
        let up_of = |c: usize| up[c].as_deref().unwrap_or(&self.up[c]);
        let mut down: Vec<Option<Vec<BigUint>>> = vec![None; nodes.len()];
        for &v in order.iter().rev() {
            for (ci, &c) in nodes[v].children.iter().enumerate() {
                if below[c] == in_component[self.prep[c].component] {
                    continue;
                }
                let children: Vec<Option<&[BigUint]>> =
                    nodes[v].children.iter().map(|&d| (d != c).then(|| up_of(d))).collect();
                let outside = nodes[v].parent.map(|_| down[v].as_deref().unwrap_or(&self.down[v]));
                let len = self.prep[c].num_slots;
                let slots = Some(&self.prep[v].child_slot[ci][..]);
                down[c] = Some(
                    combine(&nodes[v], &self.prep[v], &conds[v], &children, outside, slots, len)
                        .unwrap_or_else(|| vec![BigUint::zero(); len]),
                );
            }
        }
        let down_of = |c: usize| down[c].as_deref().unwrap_or(&self.down[c]);
        let mut owned: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes.len()];
        for (bit, hs) in self.holders.iter().enumerate() {
            if let Some(&v) = hs.first() {
                let pos = self.prep[v].err.iter().find(|&&(b, _)| b == bit).expect("holder").1;
                owned[v].push((bit, pos));
            }
        }
        let mut out = zeros();
        for (v, bits) in owned.iter().enumerate().filter(|(_, b)| !b.is_empty()) {
            let p = &self.prep[v];
            let children: Vec<Option<&[BigUint]>> = nodes[v].children.iter().map(|&c| Some(up_of(c))).collect();
            let outside = nodes[v].parent.map(|_| down_of(v));
            for (r, (key, count)) in nodes[v].table.rows().iter().enumerate() {
                if !consistent(key, &conds[v]) || bits.iter().all(|&(_, pos)| !get_bit(key, pos)) {
                    continue;
                }
                if let Some(x) = row_value(p, r, count, &children, outside) {
                    for &(bit, pos) in bits {
                        if get_bit(key, pos) {
                            out[bit] += &x;
                        }
                    }
                }
            }
            for &(bit, _) in bits {
                for (i, t) in totals.iter().enumerate() {
                    if i != p.component {
                        out[bit] *= t;
                    }
                }
            }
        }
        out
    }

    /// Lowest common ancestor of two nodes in the same component.
    fn meet(&self, mut a: usize, mut b: usize) -> usize {
        let nodes = self.tree.nodes();
        while a != b {
            if self.prep[a].depth >= self.prep[b].depth {
                a = nodes[a].parent.expect("same component");
            } else {
                b = nodes[b].parent.expect("same component");
            }
        }
        a
    }

    /// Element-wise [`Engine::sat_count`], evaluated in parallel.
    pub fn sat_count_batch(&self, queries: &[Query]) -> Vec<BigUint> {
        queries.par_iter().map(|q| self.sat_count(q)).collect()
    }
}
