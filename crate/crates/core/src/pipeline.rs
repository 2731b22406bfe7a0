//! CNF system to join tree: partition, enumerate each part, reduce.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::cnfsys::{lit_var, Clause, CnfSystem, Lit, Var};
use crate::error::{Error, Result};
use crate::partition::{partition_clauses, Partitioning};
use crate::table::{enumerate_ordered, enumerate_projected, Branching, intersect, union, SizeEstimator, SolutionTable};
use crate::treebuild::{JoinGraph, JoinTree, TreeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineConfig {
    pub clause_limit: usize,
    /// Overrides the part count derived from `clause_limit`.
    pub num_parts: Option<usize>,
    pub seed: u64,
    /// Per-part enumeration gives up beyond `2^enum_cap_log2` leaves.
    pub enum_cap_log2: u32,
    pub tree: TreeConfig,
}

pub const DEFAULT_CLAUSE_LIMIT: usize = 500;

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            clause_limit: DEFAULT_CLAUSE_LIMIT,
            num_parts: None,
            seed: 0,
            enum_cap_log2: 24,
            tree: TreeConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Built {
    pub partitioning: Partitioning,
    pub tables: Vec<SolutionTable>,
    pub tree: JoinTree,
}

/// Smallest clause limit the automatic re-split goes down to.
pub const MIN_CLAUSE_LIMIT: usize = 4;

/// Partitions, tabulates and reduces. When some part cannot be tabulated
/// within the caps and the part count was not fixed, the clause limit is
/// halved and the system partitioned again.
pub fn build(sys: &CnfSystem, cfg: &PipelineConfig) -> Result<Built> {
    let mut limit = cfg.clause_limit.max(1);
    loop {
        let p = partition_clauses(sys.num_vars(), sys.clauses(), limit, cfg.num_parts, cfg.seed);
        match part_tables(sys, &p, cfg) {
            Err(e @ (Error::EnumerationCap { .. } | Error::ProductCap { .. }))
                if cfg.num_parts.is_none() && limit / 2 >= MIN_CLAUSE_LIMIT =>
            {
                limit /= 2;
                log::warn!("{e}; partitioning again with clause limit {limit}");
            }
            tables => return reduce(sys, p, tables?, cfg),
        }
    }
}

/// Runs the pipeline on a given partitioning.
pub fn build_with(sys: &CnfSystem, partitioning: Partitioning, cfg: &PipelineConfig) -> Result<Built> {
    let tables = part_tables(sys, &partitioning, cfg)?;
    reduce(sys, partitioning, tables, cfg)
}

fn reduce(sys: &CnfSystem, partitioning: Partitioning, tables: Vec<SolutionTable>, cfg: &PipelineConfig) -> Result<Built> {
    let g = JoinGraph::new(&partitioning, tables.clone(), sys.error_vars());
    let tree = g.reduce_to_tree(&cfg.tree)?;
    tree.check_rip()?;
    Ok(Built {
        partitioning,
        tables,
        tree,
    })
}

/// Parts up to this many clauses are enumerated directly.
pub const LEAF_CLAUSES: usize = 32;

/// Solution tables of every part, projected onto the variables that matter
/// outside the part: cut variables and error bits.
pub fn part_tables(sys: &CnfSystem, p: &Partitioning, cfg: &PipelineConfig) -> Result<Vec<SolutionTable>> {
    let mut visible: Vec<Var> = p.cut_vars.iter().chain(sys.error_vars()).copied().collect();
    visible.sort_unstable();
    visible.dedup();
    p.parts
        .par_iter()
        .zip(&p.var_sets)
        .enumerate()
        .map(|(i, (cs, vars))| {
            let clauses: Vec<Clause> = cs.iter().map(|&c| sys.clauses()[c].clone()).collect();
            let keep = intersect(vars, &visible);
            part_table(&clauses, vars, &keep, cfg).map_err(|e| match e {
                Error::EnumerationCap { cap_log2, .. } => Error::EnumerationCap { part: i, cap_log2 },
                e => e,
            })
        })
        .collect()
}

/// Search leaves allowed to direct enumeration of a large part before it
/// falls back to leaf elimination.
pub const DIRECT_LEAVES_LOG2: u32 = 18;

/// Projected model counts of one part. Small parts are enumerated. Larger
/// ones get a bounded direct enumeration first, which suits parts with few
/// free inputs, then leaf elimination.
pub fn part_table(clauses: &[Clause], vars: &[Var], keep: &[Var], cfg: &PipelineConfig) -> Result<SolutionTable> {
    if clauses.len() <= LEAF_CLAUSES {
        return enumerate_projected(clauses, vars, keep, cfg.enum_cap_log2);
    }
    let quick = DIRECT_LEAVES_LOG2.min(cfg.enum_cap_log2);
    match enumerate_ordered(clauses, vars, keep, quick, Branching::Ascending) {
        Err(Error::EnumerationCap { .. }) => eliminate_leaves(clauses, vars, keep, cfg),
        done => done,
    }
}

/// Splits a part into leaves of at most [`LEAF_CLAUSES`] clauses and
/// eliminates the hidden cut variables between leaves one bucket at a time,
/// always taking the variable whose bucket leaves the narrowest table.
fn eliminate_leaves(clauses: &[Clause], vars: &[Var], keep: &[Var], cfg: &PipelineConfig) -> Result<SolutionTable> {
    // local names 1..=k preserve order, so tables relabel back directly
    let local = |v: Var| vars.binary_search(&v).expect("clause variable outside the part") as Var + 1;
    let local_clauses: Vec<Clause> = clauses
        .iter()
        .map(|c| c.iter().map(|&l| local(lit_var(l)) as Lit * l.signum()).collect())
        .collect();
    let local_keep: Vec<Var> = keep.iter().map(|&v| local(v)).collect();
    let sub = partition_clauses(vars.len() as Var, &local_clauses, LEAF_CLAUSES, None, cfg.seed);
    let sub_visible = union(&sub.cut_vars, &local_keep);
    let mut tables: Vec<SolutionTable> = sub
        .parts
        .par_iter()
        .zip(&sub.var_sets)
        .map(|(cs, vs)| {
            let leaf: Vec<Clause> = cs.iter().map(|&c| local_clauses[c].clone()).collect();
            enumerate_projected(&leaf, vs, &intersect(vs, &sub_visible), cfg.enum_cap_log2)
        })
        .collect::<Result<_>>()?;
    log::debug!(
        "part of {} clauses: {} leaves, {} sub-cut variables, largest leaf {} rows",
        clauses.len(),
        tables.len(),
        sub.cut_vars.len(),
        tables.iter().map(SolutionTable::len).max().unwrap_or(0)
    );
    let cap = cfg.tree.product_cap;
    let est = &cfg.tree.estimator;
    loop {
        let mut holders: BTreeMap<Var, Vec<usize>> = BTreeMap::new();
        for (k, t) in tables.iter().enumerate() {
            for &v in t.vars() {
                if local_keep.binary_search(&v).is_err() {
                    holders.entry(v).or_default().push(k);
                }
            }
        }
        // width left after eliminating v, then the rows it touches
        let pick = holders
            .iter()
            .map(|(&v, ks)| {
                let mut scope: Vec<Var> = Vec::new();
                for &k in ks {
                    scope = union(&scope, tables[k].vars());
                }
                let left = scope.iter().filter(|&&u| {
                    local_keep.binary_search(&u).is_ok()
                        || holders.get(&u).is_some_and(|hs| hs.iter().any(|h| !ks.contains(h)))
                });
                let rows: u128 = ks.iter().map(|&k| tables[k].len() as u128).sum();
                ((left.count(), rows), v)
            })
            .min();
        let Some((_, v)) = pick else { break };
        let mut bucket: Vec<SolutionTable> = Vec::new();
        let mut rest = Vec::with_capacity(tables.len());
        for t in tables {
            if t.vars().binary_search(&v).is_ok() {
                bucket.push(t);
            } else {
                rest.push(t);
            }
        }
        let needed = |u: Var| local_keep.binary_search(&u).is_ok() || rest.iter().any(|t| t.vars().binary_search(&u).is_ok());
        let joined = join_summing_out(bucket, &needed, est, cap)?;
        rest.push(joined);
        tables = rest;
    }
    let t = join_summing_out(tables, &|_| true, est, cap)?;
    let t = t.project_onto(&local_keep);
    Ok(t.relabel(keep.to_vec()))
}

/// Joins tables pairwise, smallest estimated result first, summing out
/// each variable that is not `needed` as soon as no other table holds it.
fn join_summing_out(
    mut tables: Vec<SolutionTable>,
    needed: &dyn Fn(Var) -> bool,
    est: &SizeEstimator,
    cap: usize,
) -> Result<SolutionTable> {
    let droppable = |tables: &[SolutionTable], i: usize, j: usize| -> Vec<Var> {
        union(tables[i].vars(), tables[j].vars())
            .into_iter()
            .filter(|&u| !needed(u))
            .filter(|u| {
                tables
                    .iter()
                    .enumerate()
                    .all(|(k, t)| k == i || k == j || t.vars().binary_search(u).is_err())
            })
            .collect()
    };
    if tables.len() == 1 {
        let drop = droppable(&tables, 0, 0);
        return Ok(tables[0].marginalize(&drop));
    }
    while tables.len() > 1 {
        let mut best = (u128::MAX, 0, 1, Vec::new());
        for i in 0..tables.len() {
            for j in i + 1..tables.len() {
                let drop = droppable(&tables, i, j);
                let w = est.estimate_marginalized(&tables[i], &tables[j], &drop);
                if w < best.0 {
                    best = (w, i, j, drop);
                }
            }
        }
        let (_, i, j, drop) = best;
        let joined = tables[i].product_marginalized(&tables[j], &drop, cap)?;
        tables.swap_remove(j);
        tables[i] = joined;
    }
    Ok(tables.pop().expect("at least one table"))
}
