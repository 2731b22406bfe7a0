//! Join graph over partitions and the merge-and-marginalize loop that turns
//! it into a join tree.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use crate::cnfsys::Var;
use crate::error::{Error, Result};
use crate::partition::Partitioning;
use crate::table::{intersect, union, SizeEstimator, SolutionTable};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vertex {
    /// Partition ids whose formulas this vertex carries.
    pub parts: Vec<usize>,
    pub table: SolutionTable,
}

impl Vertex {
    pub fn vars(&self) -> &[Var] {
        self.table.vars()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub label: Vec<Var>,
}

/// Rows allowed in any one table by default; at roughly 70 bytes a row this
/// is about a gigabyte.
pub const DEFAULT_PRODUCT_CAP: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeConfig {
    /// Largest estimated merged table (rows) a round may create.
    pub ts: u128,
    /// Hard row cap on any single factor product.
    pub product_cap: usize,
    pub estimator: SizeEstimator,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            ts: 1_000_000,
            product_cap: DEFAULT_PRODUCT_CAP,
            estimator: SizeEstimator::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub rounds: usize,
    pub merges: usize,
    pub absorptions: usize,
    pub escalations: usize,
    pub final_ts: u128,
}

#[derive(Debug, Clone)]
pub struct JoinGraph {
    vertices: Vec<Option<Vertex>>,
    /// `e_0..e_m` in bit order.
    error_vars: Vec<Var>,
    error_sorted: Vec<Var>,
}

fn is_subset(a: &[Var], b: &[Var]) -> bool {
    intersect(a, b).len() == a.len()
}

impl JoinGraph {
    /// One vertex per part; variables that occur in a single vertex and are
    /// not error bits are summed out right away.
    pub fn new(partitioning: &Partitioning, tables: Vec<SolutionTable>, error_vars: &[Var]) -> Self {
        assert_eq!(partitioning.num_parts(), tables.len(), "one table per part");
        let mut error_sorted = error_vars.to_vec();
        error_sorted.sort_unstable();
        let vertices = tables
            .into_iter()
            .enumerate()
            .map(|(i, table)| Some(Vertex { parts: vec![i], table }))
            .collect();
        let mut g = JoinGraph {
            vertices,
            error_vars: error_vars.to_vec(),
            error_sorted,
        };
        g.marginalize_exclusive();
        g
    }

    pub fn vertex(&self, i: usize) -> Option<&Vertex> {
        self.vertices.get(i).and_then(Option::as_ref)
    }

    pub fn live(&self) -> impl Iterator<Item = usize> + '_ {
        self.vertices.iter().enumerate().filter(|(_, v)| v.is_some()).map(|(i, _)| i)
    }

    pub fn num_vertices(&self) -> usize {
        self.live().count()
    }

    fn holders(&self) -> FxHashMap<Var, SmallVec<[usize; 2]>> {
        let mut h: FxHashMap<Var, SmallVec<[usize; 2]>> = FxHashMap::default();
        for i in self.live() {
            for &v in self.vertices[i].as_ref().expect("live").vars() {
                h.entry(v).or_default().push(i);
            }
        }
        h
    }

    /// Every pair of vertices sharing a variable, ordered by `(i, j)`.
    pub fn edges(&self) -> Vec<Edge> {
        let mut labels: BTreeMap<(usize, usize), Vec<Var>> = BTreeMap::new();
        for (v, hs) in self.holders() {
            for (a, &i) in hs.iter().enumerate() {
                for &j in &hs[a + 1..] {
                    labels.entry((i.min(j), i.max(j))).or_default().push(v);
                }
            }
        }
        labels
            .into_iter()
            .map(|((i, j), mut label)| {
                label.sort_unstable();
                Edge { i, j, label }
            })
            .collect()
    }

    /// Sums out every non-error variable held by exactly one vertex.
    pub fn marginalize_exclusive(&mut self) {
        let holders = self.holders();
        let err = &self.error_sorted;
        let drops: Vec<(usize, Vec<Var>)> = self
            .live()
            .filter_map(|i| {
                let vars = self.vertices[i].as_ref().expect("live").vars();
                let drop: Vec<Var> = vars
                    .iter()
                    .copied()
                    .filter(|v| holders[v].len() == 1 && err.binary_search(v).is_err())
                    .collect();
                (!drop.is_empty()).then_some((i, drop))
            })
            .collect();
        let done: Vec<(usize, SolutionTable)> = drops
            .into_par_iter()
            .map(|(i, drop)| (i, self.vertices[i].as_ref().expect("live").table.marginalize(&drop)))
            .collect();
        for (i, t) in done {
            self.vertices[i].as_mut().expect("live").table = t;
        }
    }

    fn join_into(&mut self, i: usize, j: usize, table: SolutionTable) {
        let vj = self.vertices[j].take().expect("live");
        let vi = self.vertices[i].as_mut().expect("live");
        vi.parts.extend(vj.parts);
        vi.parts.sort_unstable();
        vi.table = table;
    }

    /// Absorbs every neighbor whose variables are a subset of vertex `i`'s.
    fn absorb(&mut self, i: usize, cap: usize) -> Result<usize> {
        let mut count = 0;
        let candidates: Vec<usize> = self.live().filter(|&k| k != i).collect();
        for k in candidates {
            let (Some(vi), Some(vk)) = (self.vertex(i), self.vertex(k)) else {
                continue;
            };
            if !vk.vars().is_empty() && is_subset(vk.vars(), vi.vars()) {
                let t = vi.table.factor_product(&vk.table, cap)?;
                self.join_into(i, k, t);
                count += 1;
            }
        }
        Ok(count)
    }

    /// Non-error variables of `i` or `j` that no other vertex holds; a
    /// merge of the two sums them out.
    fn private_to(&self, holders: &FxHashMap<Var, SmallVec<[usize; 2]>>, i: usize, j: usize) -> Vec<Var> {
        let (Some(vi), Some(vj)) = (self.vertex(i), self.vertex(j)) else {
            return Vec::new();
        };
        union(vi.vars(), vj.vars())
            .into_iter()
            .filter(|v| self.error_sorted.binary_search(v).is_err())
            .filter(|v| holders[v].iter().all(|&h| h == i || h == j))
            .collect()
    }

    /// Replaces `i` and `j` by their product at `i`, absorbs subset
    /// neighbors and sums out newly exclusive variables.
    pub fn merge(&mut self, i: usize, j: usize, product_cap: usize) -> Result<()> {
        let drop = self.private_to(&self.holders(), i, j);
        let (Some(vi), Some(vj)) = (self.vertex(i), self.vertex(j)) else {
            return Err(Error::Invariant(format!("merge of dead vertex {i} or {j}")));
        };
        let t = vi.table.product_marginalized(&vj.table, &drop, product_cap)?;
        self.join_into(i, j, t);
        self.absorb(i, product_cap)?;
        self.marginalize_exclusive();
        Ok(())
    }

    /// Connected components of live vertices, each ascending.
    pub fn components(&self, edges: &[Edge]) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.vertices.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in edges {
            let (a, b) = (find(&mut parent, e.i), find(&mut parent, e.j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in self.live().collect::<Vec<_>>() {
            let r = find(&mut parent, i);
            comps.entry(r).or_default().push(i);
        }
        comps.into_values().collect()
    }

    /// Maximum-weight spanning forest of `edges`, weighted by label size,
    /// as indices into `edges`. Ties go to the lower `(i, j)`.
    pub fn spanning_forest(&self, edges: &[Edge]) -> Vec<usize> {
        let mut order: Vec<usize> = (0..edges.len()).collect();
        order.sort_by_key(|&e| (std::cmp::Reverse(edges[e].label.len()), edges[e].i, edges[e].j));
        let mut parent: Vec<usize> = (0..self.vertices.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut out = Vec::new();
        for e in order {
            let (a, b) = (find(&mut parent, edges[e].i), find(&mut parent, edges[e].j));
            if a != b {
                parent[a.max(b)] = a.min(b);
                out.push(e);
            }
        }
        out.sort_unstable();
        out
    }

    /// Per component of `comps`, whether no spanning tree has the running
    /// intersection property. A maximum-weight spanning tree has it exactly
    /// when its weight reaches the sum over variables of holders minus one.
    fn cyclic_components(&self, edges: &[Edge], comps: &[Vec<usize>]) -> Vec<bool> {
        let mut comp_of = vec![usize::MAX; self.vertices.len()];
        for (c, vs) in comps.iter().enumerate() {
            for &v in vs {
                comp_of[v] = c;
            }
        }
        let mut deficit = vec![0i64; comps.len()];
        for hs in self.holders().values() {
            deficit[comp_of[hs[0]]] += hs.len() as i64 - 1;
        }
        for e in self.spanning_forest(edges) {
            deficit[comp_of[edges[e].i]] -= edges[e].label.len() as i64;
        }
        deficit.iter().map(|&d| d > 0).collect()
    }

    /// Whether every component admits a join tree.
    pub fn is_join_forest(&self) -> bool {
        let edges = self.edges();
        let comps = self.components(&edges);
        !self.cyclic_components(&edges, &comps).iter().any(|&c| c)
    }

    /// The merge-and-marginalize loop. Each round estimates every edge of
    /// the components that admit no join tree yet, keeps edges whose
    /// estimate is at most the threshold, merges a greedy smallest-first
    /// vertex-disjoint selection of them and sums out exclusive variables.
    /// A round with no admissible edge doubles the threshold.
    pub fn reduce_to_tree(mut self, cfg: &TreeConfig) -> Result<JoinTree> {
        let mut stats = BuildStats::default();
        let mut ts = cfg.ts.max(1);
        loop {
            let edges = self.edges();
            let comps = self.components(&edges);
            let mut comp_of = vec![usize::MAX; self.vertices.len()];
            for (c, vs) in comps.iter().enumerate() {
                for &v in vs {
                    comp_of[v] = c;
                }
            }
            let cyclic = self.cyclic_components(&edges, &comps);
            if !cyclic.iter().any(|&c| c) {
                break;
            }
            let holders = self.holders();
            let cand: Vec<&Edge> = edges.iter().filter(|e| cyclic[comp_of[e.i]]).collect();
            let mut weighted: Vec<(u128, usize, usize)> = cand
                .par_iter()
                .map(|e| {
                    let drop = self.private_to(&holders, e.i, e.j);
                    let (a, b) = (self.vertex(e.i).expect("live"), self.vertex(e.j).expect("live"));
                    (cfg.estimator.estimate_marginalized(&a.table, &b.table, &drop), e.i, e.j)
                })
                .collect();
            weighted.sort_unstable();
            weighted.retain(|&(w, _, _)| w <= ts);
            if weighted.is_empty() {
                ts = ts.saturating_mul(2);
                stats.escalations += 1;
                log::warn!("no edge within the table-size threshold; raising it to {ts} rows");
                continue;
            }
            let mut used = vec![false; self.vertices.len()];
            let mut pairs = Vec::new();
            for &(_, i, j) in &weighted {
                if !used[i] && !used[j] {
                    used[i] = true;
                    used[j] = true;
                    pairs.push((i, j));
                }
            }
            // pairs are disjoint, so each one's private variables stay private
            let products: Vec<Result<SolutionTable>> = pairs
                .par_iter()
                .map(|&(i, j)| {
                    let (a, b) = (self.vertex(i).expect("live"), self.vertex(j).expect("live"));
                    a.table.product_marginalized(&b.table, &self.private_to(&holders, i, j), cfg.product_cap)
                })
                .collect();
            for (&(i, j), t) in pairs.iter().zip(products) {
                self.join_into(i, j, t?);
            }
            for &(i, _) in &pairs {
                if self.vertex(i).is_some() {
                    stats.absorptions += self.absorb(i, cfg.product_cap)?;
                }
            }
            self.marginalize_exclusive();
            stats.rounds += 1;
            stats.merges += pairs.len();
            log::debug!(
                "round {}: {} merges, {} vertices left, largest table {} rows, ts {}",
                stats.rounds,
                pairs.len(),
                self.num_vertices(),
                self.live().map(|i| self.vertices[i].as_ref().expect("live").table.len()).max().unwrap_or(0),
                ts
            );
        }
        stats.final_ts = ts;
        JoinTree::from_forest(self, stats)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    pub parts: Vec<usize>,
    pub table: SolutionTable,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

/// A rooted join forest; one root per connected component.
#[derive(Debug, Clone)]
pub struct JoinTree {
    nodes: Vec<TreeNode>,
    roots: Vec<usize>,
    /// `e_0..e_m` in bit order.
    error_vars: Vec<Var>,
    stats: BuildStats,
}

impl JoinTree {
    fn from_forest(g: JoinGraph, stats: BuildStats) -> Result<Self> {
        let all = g.edges();
        let comps = g.components(&all);
        let edges: Vec<&Edge> = g.spanning_forest(&all).into_iter().map(|e| &all[e]).collect();
        let ids: Vec<usize> = g.live().collect();
        let mut new_id = vec![usize::MAX; g.vertices.len()];
        for (n, &i) in ids.iter().enumerate() {
            new_id[i] = n;
        }
        let mut adj = vec![Vec::new(); ids.len()];
        for e in edges {
            adj[new_id[e.i]].push(new_id[e.j]);
            adj[new_id[e.j]].push(new_id[e.i]);
        }
        let roots: Vec<usize> = comps
            .iter()
            .map(|vs| {
                let &best = vs
                    .iter()
                    .max_by_key(|&&v| (g.vertex(v).expect("live").table.len(), std::cmp::Reverse(v)))
                    .expect("nonempty component");
                new_id[best]
            })
            .collect();
        let error_vars = g.error_vars.clone();
        let nodes: Vec<TreeNode> = g
            .vertices
            .into_iter()
            .flatten()
            .map(|v| TreeNode {
                parts: v.parts,
                table: v.table,
                parent: None,
                children: Vec::new(),
            })
            .collect();
        let mut tree = JoinTree {
            nodes,
            roots: Vec::new(),
            error_vars,
            stats,
        };
        tree.orient(&adj, &roots)?;
        Ok(tree)
    }

    fn orient(&mut self, adj: &[Vec<usize>], roots: &[usize]) -> Result<()> {
        for n in &mut self.nodes {
            n.parent = None;
            n.children.clear();
        }
        let mut seen = vec![false; self.nodes.len()];
        for &r in roots {
            seen[r] = true;
            let mut q = VecDeque::from([r]);
            while let Some(x) = q.pop_front() {
                let mut next: Vec<usize> = adj[x].iter().copied().filter(|&y| Some(y) != self.nodes[x].parent).collect();
                next.sort_unstable();
                for y in next {
                    if seen[y] {
                        return Err(Error::Invariant("join graph is not a forest".into()));
                    }
                    seen[y] = true;
                    self.nodes[y].parent = Some(x);
                    self.nodes[x].children.push(y);
                    q.push_back(y);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Invariant("roots do not cover every component".into()));
        }
        self.roots = roots.to_vec();
        Ok(())
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            if let Some(p) = n.parent {
                adj[i].push(p);
                adj[p].push(i);
            }
        }
        adj
    }

    /// Same tree with the given vertices as roots (one per component, in
    /// any order).
    pub fn reroot(&self, roots: &[usize]) -> Result<JoinTree> {
        let adj = self.adjacency();
        let mut t = self.clone();
        t.orient(&adj, roots)?;
        Ok(t)
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    pub fn error_vars(&self) -> &[Var] {
        &self.error_vars
    }

    pub fn stats(&self) -> BuildStats {
        self.stats
    }

    /// Variables shared by a node and its parent.
    pub fn label(&self, node: usize) -> Vec<Var> {
        match self.nodes[node].parent {
            Some(p) => intersect(self.nodes[node].table.vars(), self.nodes[p].table.vars()),
            None => Vec::new(),
        }
    }

    /// Children before parents.
    pub fn postorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        for &r in &self.roots {
            let mut stack = vec![(r, false)];
            while let Some((x, expanded)) = stack.pop() {
                if expanded {
                    out.push(x);
                } else {
                    stack.push((x, true));
                    for &c in self.nodes[x].children.iter().rev() {
                        stack.push((c, false));
                    }
                }
            }
        }
        out
    }

    /// For each variable the nodes holding it must form a connected
    /// subtree, and every error variable must be held somewhere.
    pub fn check_rip(&self) -> Result<()> {
        let mut tops: FxHashMap<Var, usize> = FxHashMap::default();
        for n in &self.nodes {
            let parent_vars = n.parent.map(|p| self.nodes[p].table.vars());
            for &v in n.table.vars() {
                let entry = tops.entry(v).or_insert(0);
                if parent_vars.is_none_or(|pv| pv.binary_search(&v).is_err()) {
                    *entry += 1;
                }
            }
        }
        if let Some((v, k)) = tops.iter().find(|(_, &k)| k != 1) {
            return Err(Error::Invariant(format!(
                "running intersection violated: variable {v} spans {k} disconnected subtrees"
            )));
        }
        if let Some(v) = self.error_vars.iter().find(|v| !tops.contains_key(v)) {
            return Err(Error::Invariant(format!("error variable {v} was summed out")));
        }
        Ok(())
    }

    /// Text listing: vertex id, parent, parts, table size, variables.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let s = self.stats;
        let _ = writeln!(
            out,
            "# {} vertices, roots {:?}, {} rounds, {} merges, {} absorptions, {} escalations",
            self.nodes.len(),
            self.roots,
            s.rounds,
            s.merges,
            s.absorptions,
            s.escalations
        );
        for (i, n) in self.nodes.iter().enumerate() {
            let parent = n.parent.map_or("-".to_string(), |p| p.to_string());
            let vars: Vec<String> = n.table.vars().iter().map(|v| v.to_string()).collect();
            let label: Vec<String> = self.label(i).iter().map(|v| v.to_string()).collect();
            let _ = writeln!(
                out,
                "{i} parent {parent} parts {:?} rows {} vars [{}] label [{}]",
                n.parts,
                n.table.len(),
                vars.join(" "),
                label.join(" ")
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::enumerate;
    use num_bigint::BigUint;

    fn graph(clauses: &[Vec<i32>], parts: Vec<Vec<usize>>, num_vars: u32, err: &[Var]) -> JoinGraph {
        let p = Partitioning::from_parts(num_vars, clauses, parts);
        let tables = p
            .parts
            .iter()
            .zip(&p.var_sets)
            .map(|(cs, vars)| {
                let cl: Vec<Vec<i32>> = cs.iter().map(|&c| clauses[c].clone()).collect();
                enumerate(&cl, vars, 24).unwrap()
            })
            .collect();
        JoinGraph::new(&p, tables, err)
    }

    fn brute_count(clauses: &[Vec<i32>], n: u32) -> u64 {
        (0..1u64 << n)
            .filter(|bits| {
                clauses
                    .iter()
                    .all(|c| c.iter().any(|&l| ((bits >> (l.unsigned_abs() - 1)) & 1 == 1) == (l > 0)))
            })
            .count() as u64
    }

    #[test]
    fn two_parts_sharing_one_variable() {
        // a=1 b=2 c=3 ; parts {a|b} and {!b|c}, b shared, all kept as errors
        let g = graph(&[vec![1, 2], vec![-2, 3]], vec![vec![0], vec![1]], 3, &[1, 2, 3]);
        assert_eq!(g.edges(), vec![Edge { i: 0, j: 1, label: vec![2] }]);
    }

    #[test]
    fn exclusive_variables_collapse() {
        let g = graph(&[vec![1, 2], vec![-2, 3]], vec![vec![0, 1]], 3, &[]);
        let v = g.vertex(0).unwrap();
        assert!(v.vars().is_empty());
        assert_eq!(v.table.total_count(), BigUint::from(4u8));
    }

    #[test]
    fn triangle_reduces_quickly() {
        // a=1 b=2 c=3 ; each part shares a variable with the other two
        let clauses = vec![vec![1, 2], vec![-2, 3], vec![-3, -1]];
        let g = graph(&clauses, vec![vec![0], vec![1], vec![2]], 3, &[]);
        assert_eq!(g.edges().len(), 3);
        let t = g.reduce_to_tree(&TreeConfig::default()).unwrap();
        assert!(t.stats().rounds <= 2);
        t.check_rip().unwrap();
        let total: BigUint = t.roots().iter().map(|&r| t.nodes()[r].table.total_count()).product();
        assert_eq!(total, BigUint::from(brute_count(&clauses, 3)));
    }

    #[test]
    fn shared_variable_star_needs_no_merge() {
        // every part holds a=1, otherwise private error bits
        let clauses = vec![vec![1, 2], vec![-1, 3], vec![1, -4]];
        let g = graph(&clauses, vec![vec![0], vec![1], vec![2]], 4, &[2, 3, 4]);
        assert_eq!(g.edges().len(), 3);
        assert!(g.is_join_forest());
        let t = g.reduce_to_tree(&TreeConfig::default()).unwrap();
        assert_eq!(t.stats().merges, 0);
        assert_eq!(t.nodes().len(), 3);
        t.check_rip().unwrap();
    }

    #[test]
    fn tree_is_a_fixed_point() {
        let g = graph(&[vec![1, 2], vec![-2, 3]], vec![vec![0], vec![1]], 3, &[1, 3]);
        let before: Vec<SolutionTable> = g.live().map(|i| g.vertex(i).unwrap().table.clone()).collect();
        let t = g.reduce_to_tree(&TreeConfig::default()).unwrap();
        assert_eq!(t.stats().rounds, 0);
        let after: Vec<SolutionTable> = t.nodes().iter().map(|n| n.table.clone()).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn merge_of_last_two_vertices_counts_models() {
        let clauses = vec![vec![1, 2, -3], vec![-1, 3], vec![2, 4], vec![-4, -2, 1]];
        let mut g = graph(&clauses, vec![vec![0, 1], vec![2, 3]], 4, &[2]);
        assert_eq!(g.num_vertices(), 2);
        g.merge(0, 1, usize::MAX).unwrap();
        assert_eq!(g.num_vertices(), 1);
        let v = g.vertex(0).unwrap();
        assert_eq!(v.table.total_count(), BigUint::from(brute_count(&clauses, 4)));
    }

    #[test]
    fn subset_absorption_does_not_grow_rows() {
        // vertex 1 = {b} is a subset of vertex 0 = {a,b}
        let clauses = vec![vec![1, 2], vec![2], vec![1, 3]];
        let mut g = graph(&clauses, vec![vec![0], vec![1], vec![2]], 3, &[1, 2, 3]);
        let rows_before = g.vertex(0).unwrap().table.len();
        g.merge(0, 2, usize::MAX).unwrap();
        assert_eq!(g.num_vertices(), 1, "subset neighbor absorbed");
        assert!(g.vertex(0).unwrap().table.len() <= rows_before * 2);
        let mut g = graph(&clauses, vec![vec![0], vec![1], vec![2]], 3, &[1, 2, 3]);
        let merged_rows = {
            let (a, b) = (g.vertex(0).unwrap(), g.vertex(1).unwrap());
            a.table.factor_product(&b.table, usize::MAX).unwrap().len()
        };
        assert!(merged_rows <= rows_before);
        g.merge(0, 1, usize::MAX).unwrap();
        assert_eq!(g.vertex(0).unwrap().table.len(), merged_rows);
    }

    #[test]
    fn escalation_when_threshold_too_small() {
        let clauses = vec![vec![1, 2], vec![-2, 3], vec![-3, -1]];
        let g = graph(&clauses, vec![vec![0], vec![1], vec![2]], 3, &[]);
        let cfg = TreeConfig { ts: 1, ..TreeConfig::default() };
        let t = g.reduce_to_tree(&cfg).unwrap();
        assert!(t.stats().escalations > 0);
        t.check_rip().unwrap();
    }

    #[test]
    fn reroot_keeps_structure() {
        let clauses = vec![vec![1, 2], vec![-2, 3], vec![-3, 4], vec![4, 5]];
        let g = graph(&clauses, vec![vec![0], vec![1], vec![2], vec![3]], 5, &[1, 2, 3, 4, 5]);
        let t = g.reduce_to_tree(&TreeConfig::default()).unwrap();
        assert_eq!(t.nodes().len(), 4);
        for r in 0..4 {
            let u = t.reroot(&[r]).unwrap();
            assert_eq!(u.roots(), &[r]);
            u.check_rip().unwrap();
            assert_eq!(u.postorder().last(), Some(&r));
        }
    }

    #[test]
    fn rip_violation_detected() {
        // two disconnected nodes both holding variable 1
        let a = SolutionTable::new(vec![1], []);
        let t = JoinTree {
            nodes: vec![
                TreeNode { parts: vec![0], table: a.clone(), parent: None, children: vec![] },
                TreeNode { parts: vec![1], table: a, parent: None, children: vec![] },
            ],
            roots: vec![0, 1],
            error_vars: vec![],
            stats: BuildStats::default(),
        };
        assert!(t.check_rip().is_err());
    }
}
