//! Clause partitioning over the clause/variable hypergraph.
//!
//! Parts come from recursive bisection. Each bisection grows one side
//! breadth-first from a pseudo-peripheral clause and improves the split
//! with Fiduccia-Mattheyses passes; the resulting parts are then refined by
//! single-clause boundary moves that strictly reduce the number of cut
//! variables.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smallvec::SmallVec;

use crate::cnfsys::{lit_var, Clause, CnfSystem, Var};

/// Clauses are vertices, variables are hyperedges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypergraph {
    pub num_vertices: usize,
    /// `(variable, clauses containing it)`, ascending by variable; only
    /// variables that occur somewhere.
    pub edges: Vec<(Var, Vec<usize>)>,
}

pub fn build_hypergraph(sys: &CnfSystem) -> Hypergraph {
    hypergraph_of(sys.num_vars(), sys.clauses())
}

fn hypergraph_of(num_vars: u32, clauses: &[Clause]) -> Hypergraph {
    let mut occ: Vec<Vec<usize>> = vec![Vec::new(); num_vars as usize + 1];
    for (ci, c) in clauses.iter().enumerate() {
        for &l in c {
            let list = &mut occ[lit_var(l) as usize];
            if list.last() != Some(&ci) {
                list.push(ci);
            }
        }
    }
    Hypergraph {
        num_vertices: clauses.len(),
        edges: occ
            .into_iter()
            .enumerate()
            .filter(|(_, cs)| !cs.is_empty())
            .map(|(v, cs)| (v as Var, cs))
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partitioning {
    /// Clause indices per part, ascending.
    pub parts: Vec<Vec<usize>>,
    /// Variables touched by each part, ascending.
    pub var_sets: Vec<Vec<Var>>,
    /// Variables touched by two or more parts, ascending.
    pub cut_vars: Vec<Var>,
}

impl Partitioning {
    /// Derives variable sets and cut variables from explicit clause groups.
    /// Variables of `1..=num_vars` that occur in no clause are attached to
    /// part 0 so that every variable belongs to some part.
    pub fn from_parts(num_vars: u32, clauses: &[Clause], parts: Vec<Vec<usize>>) -> Self {
        assert!(!parts.is_empty(), "at least one part");
        let mut owners: Vec<SmallVec<[u32; 2]>> = vec![SmallVec::new(); num_vars as usize + 1];
        for (p, cs) in parts.iter().enumerate() {
            for &ci in cs {
                for &l in &clauses[ci] {
                    let o = &mut owners[lit_var(l) as usize];
                    if !o.contains(&(p as u32)) {
                        o.push(p as u32);
                    }
                }
            }
        }
        let mut var_sets = vec![Vec::new(); parts.len()];
        let mut cut_vars = Vec::new();
        for (v, o) in owners.iter().enumerate().skip(1) {
            if o.is_empty() {
                var_sets[0].push(v as Var);
            }
            for &p in o {
                var_sets[p as usize].push(v as Var);
            }
            if o.len() >= 2 {
                cut_vars.push(v as Var);
            }
        }
        let parts = parts
            .into_iter()
            .map(|mut p| {
                p.sort_unstable();
                p
            })
            .collect();
        Partitioning {
            parts,
            var_sets,
            cut_vars,
        }
    }

    pub fn num_parts(&self) -> usize {
        self.parts.len()
    }

    /// One line per clause: `<clause index> <part>`.
    pub fn dump(&self) -> String {
        let mut part_of: Vec<(usize, usize)> = self
            .parts
            .iter()
            .enumerate()
            .flat_map(|(p, cs)| cs.iter().map(move |&c| (c, p)))
            .collect();
        part_of.sort_unstable();
        let mut out = String::new();
        for (c, p) in part_of {
            let _ = writeln!(out, "{c} {p}");
        }
        out
    }
}

/// `P = max(1, ceil(clauses / clause_limit))` parts of at most
/// `clause_limit` clauses each.
pub fn partition(sys: &CnfSystem, clause_limit: usize, seed: u64) -> Partitioning {
    partition_clauses(sys.num_vars(), sys.clauses(), clause_limit, None, seed)
}

/// Partitions with an explicit part count. The effective clause limit is
/// raised to `ceil(clauses / num_parts)` when needed.
pub fn partition_clauses(
    num_vars: u32,
    clauses: &[Clause],
    clause_limit: usize,
    num_parts: Option<usize>,
    seed: u64,
) -> Partitioning {
    assert!(clause_limit >= 1, "clause limit must be positive");
    let n = clauses.len();
    let p = num_parts.unwrap_or_else(|| n.div_ceil(clause_limit)).clamp(1, n.max(1));
    let limit = clause_limit.max(n.div_ceil(p));
    if p == 1 {
        return Partitioning::from_parts(num_vars, clauses, vec![(0..n).collect()]);
    }
    let h = hypergraph_of(num_vars, clauses);
    let clause_vars: Vec<Vec<Var>> = clauses
        .iter()
        .map(|c| {
            let mut vs: Vec<Var> = c.iter().map(|&l| lit_var(l)).collect();
            vs.sort_unstable();
            vs.dedup();
            vs
        })
        .collect();
    let mut occ: Vec<&[usize]> = vec![&[]; num_vars as usize + 1];
    for (v, cs) in &h.edges {
        occ[*v as usize] = cs;
    }

    let mut part_of = initial_parts(&clause_vars, num_vars, p, limit, seed);
    refine(&clause_vars, &occ, &mut part_of, p, limit);
    if refine_fragments(&clause_vars, &occ, &mut part_of, p, limit) {
        refine(&clause_vars, &occ, &mut part_of, p, limit);
    }

    let mut parts = vec![Vec::new(); p];
    for (c, &q) in part_of.iter().enumerate() {
        parts[q].push(c);
    }
    parts.retain(|cs| !cs.is_empty());
    Partitioning::from_parts(num_vars, clauses, parts)
}

/// Recursive bisection: each split grows one side breadth-first from a
/// pseudo-peripheral clause, then improves it with Fiduccia-Mattheyses
/// passes. Returns the part of every clause.
fn initial_parts(clause_vars: &[Vec<Var>], num_vars: u32, p: usize, limit: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut part_of = vec![0usize; clause_vars.len()];
    let mut var_map = vec![u32::MAX; num_vars as usize + 1];
    let mut next_part = 0;
    let mut stack = vec![((0..clause_vars.len()).collect::<Vec<_>>(), p)];
    while let Some((set, k)) = stack.pop() {
        if k == 1 || set.len() <= 1 {
            for &c in &set {
                part_of[c] = next_part;
            }
            next_part += 1;
            continue;
        }
        let k1 = k / 2;
        let k2 = k - k1;
        let lo = set.len().saturating_sub(k2 * limit).max(1);
        let hi = (k1 * limit).min(set.len() - 1);
        let target = (set.len() * k1 / k).clamp(lo, hi);
        let sub = SubGraph::new(&set, clause_vars, &mut var_map);
        let side = sub.bisect(target, lo, hi, &mut rng);
        let a = set.iter().zip(&side).filter(|(_, &s)| !s).map(|(&c, _)| c).collect();
        let b = set.iter().zip(&side).filter(|(_, &s)| s).map(|(&c, _)| c).collect();
        stack.push((b, k2));
        stack.push((a, k1));
    }
    part_of
}

/// Clauses of one bisection step with locally numbered variables.
struct SubGraph {
    vars: Vec<Vec<u32>>,
    occ: Vec<Vec<u32>>,
}

impl SubGraph {
    fn new(set: &[usize], clause_vars: &[Vec<Var>], var_map: &mut [u32]) -> Self {
        let mut occ: Vec<Vec<u32>> = Vec::new();
        let mut touched = Vec::new();
        let vars = set
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                clause_vars[c]
                    .iter()
                    .map(|&v| {
                        let slot = &mut var_map[v as usize];
                        if *slot == u32::MAX {
                            *slot = occ.len() as u32;
                            occ.push(Vec::new());
                            touched.push(v);
                        }
                        occ[*slot as usize].push(i as u32);
                        *slot
                    })
                    .collect()
            })
            .collect();
        for v in touched {
            var_map[v as usize] = u32::MAX;
        }
        SubGraph { vars, occ }
    }

    fn len(&self) -> usize {
        self.vars.len()
    }

    /// `true` marks the second side, which receives `len - |first|` clauses
    /// with `lo <= |first| <= hi`.
    fn bisect(&self, target: usize, lo: usize, hi: usize, rng: &mut ChaCha8Rng) -> Vec<bool> {
        let mut side = vec![true; self.len()];
        for &c in self.bfs(rng.gen_range(0..self.len())).iter().take(target) {
            side[c] = false;
        }
        let slack = (self.len() / 20).max(1);
        let lo = lo.max(target.saturating_sub(slack));
        let hi = hi.min(target + slack);
        for _ in 0..16 {
            if !self.fm_pass(&mut side, target, lo, hi) {
                break;
            }
        }
        side
    }

    /// Breadth-first order over all clauses; every connected region starts
    /// at a pseudo-peripheral clause.
    fn bfs(&self, start: usize) -> Vec<usize> {
        let n = self.len();
        let mut placed = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut next_unplaced = 0;
        let mut start = start;
        while order.len() < n {
            let root = self.pseudo_peripheral(start, &placed);
            let mut q = VecDeque::from([root]);
            placed[root] = true;
            while let Some(c) = q.pop_front() {
                order.push(c);
                for &v in &self.vars[c] {
                    for &d in &self.occ[v as usize] {
                        if !placed[d as usize] {
                            placed[d as usize] = true;
                            q.push_back(d as usize);
                        }
                    }
                }
            }
            while next_unplaced < n && placed[next_unplaced] {
                next_unplaced += 1;
            }
            start = next_unplaced;
        }
        order
    }

    /// Farthest clause (lowest index on ties) after repeated sweeps.
    fn pseudo_peripheral(&self, start: usize, blocked: &[bool]) -> usize {
        let mut cur = start;
        let mut best_depth = 0;
        for _ in 0..4 {
            let (far, depth) = self.farthest(cur, blocked);
            if depth <= best_depth && cur != start {
                break;
            }
            best_depth = depth;
            cur = far;
        }
        cur
    }

    fn farthest(&self, start: usize, blocked: &[bool]) -> (usize, usize) {
        let mut dist = vec![usize::MAX; self.len()];
        dist[start] = 0;
        let mut q = VecDeque::from([start]);
        let mut best = (start, 0);
        while let Some(c) = q.pop_front() {
            let d = dist[c];
            if d > best.1 || (d == best.1 && c < best.0) {
                best = (c, d);
            }
            for &v in &self.vars[c] {
                for &x in &self.occ[v as usize] {
                    let x = x as usize;
                    if !blocked[x] && dist[x] == usize::MAX {
                        dist[x] = d + 1;
                        q.push_back(x);
                    }
                }
            }
        }
        best
    }

    fn gain(&self, c: usize, side: &[bool], cnt: &[[u32; 2]]) -> i32 {
        let s = side[c] as usize;
        let mut g = 0;
        for &v in &self.vars[c] {
            let k = cnt[v as usize];
            if k[s] == 1 && k[1 - s] > 0 {
                g += 1;
            } else if k[s] > 1 && k[1 - s] == 0 {
                g -= 1;
            }
        }
        g
    }

    /// One Fiduccia-Mattheyses pass keeping the first side's size within
    /// `lo..=hi`; rolls back to the best prefix of moves. Returns whether
    /// the cut shrank.
    fn fm_pass(&self, side: &mut [bool], target: usize, lo: usize, hi: usize) -> bool {
        let n = self.len();
        let mut cnt = vec![[0u32; 2]; self.occ.len()];
        for (c, vs) in self.vars.iter().enumerate() {
            for &v in vs {
                cnt[v as usize][side[c] as usize] += 1;
            }
        }
        let mut first = side.iter().filter(|&&s| !s).count();
        let mut stamp = vec![0u32; n];
        let mut locked = vec![false; n];
        let mut heaps: [BinaryHeap<(i32, Reverse<u32>, u32)>; 2] = [BinaryHeap::new(), BinaryHeap::new()];
        for c in 0..n {
            heaps[side[c] as usize].push((self.gain(c, side, &cnt), Reverse(c as u32), 0));
        }
        let dev = |f: usize| f.abs_diff(target);
        let mut moves: Vec<usize> = Vec::new();
        let (mut cur, mut best, mut best_len, mut best_dev) = (0i32, 0i32, 0usize, dev(first));
        let patience = (n / 8).max(64);
        loop {
            for h in heaps.iter_mut() {
                while let Some(&(_, Reverse(c), st)) = h.peek() {
                    if locked[c as usize] || stamp[c as usize] != st {
                        h.pop();
                    } else {
                        break;
                    }
                }
            }
            let from_first = heaps[0].peek().filter(|_| first > lo).map(|&(g, _, _)| g);
            let from_second = heaps[1].peek().filter(|_| first < hi).map(|&(g, _, _)| g);
            let s = match (from_first, from_second) {
                (None, None) => break,
                (Some(_), None) => 0,
                (None, Some(_)) => 1,
                (Some(a), Some(b)) if a != b => usize::from(b > a),
                _ => usize::from(first < target),
            };
            let (g, Reverse(c), _) = heaps[s].pop().expect("peeked");
            let c = c as usize;
            locked[c] = true;
            side[c] = s == 0;
            if s == 0 {
                first -= 1;
            } else {
                first += 1;
            }
            for &v in &self.vars[c] {
                let k = &mut cnt[v as usize];
                let before = *k;
                k[s] -= 1;
                k[1 - s] += 1;
                if before[s] <= 2 || before[1 - s] <= 1 {
                    for &d in &self.occ[v as usize] {
                        let d = d as usize;
                        if !locked[d] {
                            stamp[d] += 1;
                            heaps[side[d] as usize].push((self.gain(d, side, &cnt), Reverse(d as u32), stamp[d]));
                        }
                    }
                }
            }
            moves.push(c);
            cur += g;
            if cur > best || (cur == best && dev(first) < best_dev) {
                best = cur;
                best_len = moves.len();
                best_dev = dev(first);
            } else if moves.len() - best_len > patience {
                break;
            }
        }
        for &c in &moves[best_len..] {
            side[c] = !side[c];
        }
        best > 0
    }
}

/// Per-variable clause counts by part.
type Spread = SmallVec<[(u32, u32); 3]>;

fn is_cut(s: &Spread) -> bool {
    s.len() >= 2
}

/// First-improvement boundary moves in clause-index order, repeated until
/// a pass makes no move. Only strictly improving moves are taken, so the
/// cut never grows and the loop terminates.
fn refine(clause_vars: &[Vec<Var>], occ: &[&[usize]], part_of: &mut [usize], p: usize, limit: usize) {
    let mut size = vec![0usize; p];
    for &q in part_of.iter() {
        size[q] += 1;
    }
    let mut spread = spreads(occ, part_of);
    for _pass in 0..64 {
        let mut moved = false;
        for c in 0..part_of.len() {
            let from = part_of[c];
            if size[from] <= 1 {
                continue;
            }
            let mut targets: SmallVec<[u32; 8]> = SmallVec::new();
            for &v in &clause_vars[c] {
                for &(q, _) in &spread[v as usize] {
                    if q as usize != from && size[q as usize] < limit && !targets.contains(&q) {
                        targets.push(q);
                    }
                }
            }
            targets.sort_unstable();
            let mut best: Option<(i64, u32)> = None;
            for &q in &targets {
                let g = gain(&clause_vars[c], &spread, from as u32, q);
                if g > 0 && best.is_none_or(|(bg, _)| g > bg) {
                    best = Some((g, q));
                }
            }
            if let Some((_, q)) = best {
                for &v in &clause_vars[c] {
                    bump(&mut spread[v as usize], from as u32, -1);
                    bump(&mut spread[v as usize], q, 1);
                }
                size[from] -= 1;
                size[q as usize] += 1;
                part_of[c] = q as usize;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
}

fn spreads(occ: &[&[usize]], part_of: &[usize]) -> Vec<Spread> {
    occ.iter()
        .map(|cs| {
            let mut s = Spread::new();
            for &c in cs.iter() {
                bump(&mut s, part_of[c] as u32, 1);
            }
            s
        })
        .collect()
}

/// Moves every connected piece of a part other than its largest one to
/// the neighboring part that shrinks the cut the most, when some part
/// does and has room. Returns whether anything moved.
fn refine_fragments(clause_vars: &[Vec<Var>], occ: &[&[usize]], part_of: &mut [usize], p: usize, limit: usize) -> bool {
    fn find(u: &mut [usize], mut x: usize) -> usize {
        while u[x] != x {
            u[x] = u[u[x]];
            x = u[x];
        }
        x
    }
    let n = part_of.len();
    let mut any = false;
    for _round in 0..8 {
        let mut spread = spreads(occ, part_of);
        let mut size = vec![0usize; p];
        for &q in part_of.iter() {
            size[q] += 1;
        }
        let mut uf: Vec<usize> = (0..n).collect();
        for cs in occ {
            let mut last: SmallVec<[(usize, usize); 4]> = SmallVec::new();
            for &c in cs.iter() {
                let q = part_of[c];
                match last.iter().find(|&&(lq, _)| lq == q) {
                    Some(&(_, d)) => {
                        let (a, b) = (find(&mut uf, c), find(&mut uf, d));
                        uf[a.max(b)] = a.min(b);
                    }
                    None => last.push((q, c)),
                }
            }
        }
        let mut pieces: std::collections::BTreeMap<usize, Vec<usize>> = std::collections::BTreeMap::new();
        for c in 0..n {
            let r = find(&mut uf, c);
            pieces.entry(r).or_default().push(c);
        }
        let mut largest = vec![(0usize, usize::MAX); p];
        for (&r, cs) in &pieces {
            let q = part_of[r];
            if cs.len() > largest[q].0 {
                largest[q] = (cs.len(), r);
            }
        }
        let mut moved = false;
        for (&r, cs) in &pieces {
            let from = part_of[r];
            if largest[from].1 == r {
                continue;
            }
            let mut touched: SmallVec<[(Var, u32); 16]> = SmallVec::new();
            for &c in cs {
                for &v in &clause_vars[c] {
                    match touched.iter_mut().find(|(x, _)| *x == v) {
                        Some(t) => t.1 += 1,
                        None => touched.push((v, 1)),
                    }
                }
            }
            let mut targets: Vec<u32> = touched
                .iter()
                .flat_map(|&(v, _)| spread[v as usize].iter().map(|&(q, _)| q))
                .filter(|&q| q as usize != from && size[q as usize] + cs.len() <= limit)
                .collect();
            targets.sort_unstable();
            targets.dedup();
            let mut best: Option<(i64, u32)> = None;
            for &q in &targets {
                let mut g = 0i64;
                for &(v, k) in &touched {
                    let s = &spread[v as usize];
                    let mut after = s.clone();
                    bump(&mut after, from as u32, -(k as i32));
                    bump(&mut after, q, k as i32);
                    g += i64::from(is_cut(s)) - i64::from(is_cut(&after));
                }
                if g > 0 && best.is_none_or(|(bg, _)| g > bg) {
                    best = Some((g, q));
                }
            }
            if let Some((_, q)) = best {
                for &(v, k) in &touched {
                    bump(&mut spread[v as usize], from as u32, -(k as i32));
                    bump(&mut spread[v as usize], q, k as i32);
                }
                for &c in cs {
                    part_of[c] = q as usize;
                }
                size[from] -= cs.len();
                size[q as usize] += cs.len();
                moved = true;
            }
        }
        if !moved {
            break;
        }
        any = true;
    }
    any
}

fn bump(s: &mut Spread, part: u32, delta: i32) {
    match s.iter().position(|&(q, _)| q == part) {
        Some(i) => {
            let n = s[i].1 as i32 + delta;
            if n == 0 {
                s.remove(i);
            } else {
                s[i].1 = n as u32;
            }
        }
        None => {
            debug_assert!(delta > 0);
            s.push((part, delta as u32));
        }
    }
}

/// Reduction of the cut-variable count from moving a clause `from -> to`.
fn gain(vars: &[Var], spread: &[Spread], from: u32, to: u32) -> i64 {
    let mut g = 0i64;
    for &v in vars {
        let s = &spread[v as usize];
        let mut after = s.clone();
        bump(&mut after, from, -1);
        bump(&mut after, to, 1);
        g += i64::from(is_cut(s)) - i64::from(is_cut(&after));
    }
    g
}

/// Number of cut variables of an assignment of clauses to parts.
pub fn cut_size(clauses: &[Clause], parts: &[Vec<usize>]) -> usize {
    let num_vars = clauses.iter().flatten().map(|&l| lit_var(l)).max().unwrap_or(0);
    Partitioning::from_parts(num_vars, clauses, parts.to_vec()).cut_vars.len()
}
