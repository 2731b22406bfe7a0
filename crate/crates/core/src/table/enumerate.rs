//! Model enumeration by DPLL with counter-based unit propagation and
//! chronological backtracking.

use num_bigint::BigUint;
use num_traits::One;
use rustc_hash::FxHashMap;
use smallvec::smallvec;

use super::{key_words, set_bit, Key, SolutionTable};
use crate::cnfsys::{lit_var, Clause, Var};
use crate::error::{Error, Result};

/// Enumerates every model of `clauses` over `vars` (ascending). Variables of
/// `vars` that occur in no clause are expanded into both polarities. The
/// search gives up once it visits more than `2^cap_log2` leaves.
pub fn enumerate(clauses: &[Clause], vars: &[Var], cap_log2: u32) -> Result<SolutionTable> {
    enumerate_projected(clauses, vars, vars, cap_log2)
}

/// Like [`enumerate`], but keeps only the `keep` variables: each row counts
/// the models that extend it. Equal to enumerating and then marginalizing
/// the other variables.
pub fn enumerate_projected(clauses: &[Clause], vars: &[Var], keep: &[Var], cap_log2: u32) -> Result<SolutionTable> {
    enumerate_ordered(clauses, vars, keep, cap_log2, Branching::KeptFirst)
}

/// Decision order of the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branching {
    /// Kept variables first, so no two leaves share a row.
    KeptFirst,
    /// Plain variable order. On Tseitin encodings this decides inputs before
    /// gates, and propagation settles the rest.
    Ascending,
}

pub fn enumerate_ordered(
    clauses: &[Clause],
    vars: &[Var],
    keep: &[Var],
    cap_log2: u32,
    branching: Branching,
) -> Result<SolutionTable> {
    let mut s = Search::new(clauses, vars, keep, branching)?;
    let limit = 1u128 << cap_log2.min(120);
    let mut acc: FxHashMap<Key, BigUint> = FxHashMap::default();
    if s.run(limit, &mut acc).is_err() {
        return Err(Error::EnumerationCap { part: 0, cap_log2 });
    }
    Ok(SolutionTable::new(keep.to_vec(), acc))
}

struct CapExceeded;

struct Search {
    clauses: Vec<Vec<(u32, bool)>>,
    pos_occ: Vec<Vec<u32>>,
    neg_occ: Vec<Vec<u32>>,
    /// Position in the kept variable list, if kept.
    keep_pos: Vec<Option<usize>>,
    num_keep: usize,
    /// Branching order.
    order: Vec<u32>,
    val: Vec<Option<bool>>,
    n_true: Vec<u32>,
    n_false: Vec<u32>,
    /// Unsatisfied clauses each variable occurs in.
    unsat_occ: Vec<u32>,
    n_sat: usize,
    trail: Vec<u32>,
    trivially_unsat: bool,
}

impl Search {
    fn new(clauses: &[Clause], vars: &[Var], keep: &[Var], branching: Branching) -> Result<Self> {
        let k = vars.len();
        let local = |v: Var| {
            vars.binary_search(&v)
                .map(|i| i as u32)
                .map_err(|_| Error::Invariant(format!("clause variable {v} missing from the part's variable set")))
        };
        let mut keep_pos = vec![None; k];
        for (j, &v) in keep.iter().enumerate() {
            keep_pos[local(v)? as usize] = Some(j);
        }
        let mut norm = Vec::with_capacity(clauses.len());
        let mut trivially_unsat = false;
        'clauses: for c in clauses {
            let mut lits: Vec<(u32, bool)> = Vec::with_capacity(c.len());
            for &l in c {
                lits.push((local(lit_var(l))?, l > 0));
            }
            lits.sort_unstable();
            lits.dedup();
            for w in lits.windows(2) {
                if w[0].0 == w[1].0 {
                    continue 'clauses; // tautology
                }
            }
            trivially_unsat |= lits.is_empty();
            norm.push(lits);
        }
        let mut pos_occ = vec![Vec::new(); k];
        let mut neg_occ = vec![Vec::new(); k];
        let mut unsat_occ = vec![0; k];
        for (ci, c) in norm.iter().enumerate() {
            for &(v, pos) in c {
                let occ = if pos { &mut pos_occ } else { &mut neg_occ };
                occ[v as usize].push(ci as u32);
                unsat_occ[v as usize] += 1;
            }
        }
        let mut order: Vec<u32> = (0..k as u32).collect();
        if branching == Branching::KeptFirst {
            order.sort_by_key(|&v| (keep_pos[v as usize].is_none(), v));
        }
        Ok(Search {
            n_true: vec![0; norm.len()],
            n_false: vec![0; norm.len()],
            clauses: norm,
            pos_occ,
            neg_occ,
            keep_pos,
            num_keep: keep.len(),
            order,
            val: vec![None; k],
            unsat_occ,
            n_sat: 0,
            trail: Vec::new(),
            trivially_unsat,
        })
    }

    fn assign(&mut self, v: u32, b: bool) {
        let vi = v as usize;
        self.val[vi] = Some(b);
        self.trail.push(v);
        let (sat, fal) = if b { (&self.pos_occ[vi], &self.neg_occ[vi]) } else { (&self.neg_occ[vi], &self.pos_occ[vi]) };
        for &c in sat {
            let c = c as usize;
            self.n_true[c] += 1;
            if self.n_true[c] == 1 {
                self.n_sat += 1;
                for &(u, _) in &self.clauses[c] {
                    self.unsat_occ[u as usize] -= 1;
                }
            }
        }
        for &c in fal {
            self.n_false[c as usize] += 1;
        }
    }

    fn undo_to(&mut self, len: usize) {
        while self.trail.len() > len {
            let v = self.trail.pop().expect("trail entry");
            let vi = v as usize;
            let b = self.val[vi].take().expect("assigned");
            let (sat, fal) = if b { (&self.pos_occ[vi], &self.neg_occ[vi]) } else { (&self.neg_occ[vi], &self.pos_occ[vi]) };
            for &c in sat {
                let c = c as usize;
                self.n_true[c] -= 1;
                if self.n_true[c] == 0 {
                    self.n_sat -= 1;
                    for &(u, _) in &self.clauses[c] {
                        self.unsat_occ[u as usize] += 1;
                    }
                }
            }
            for &c in fal {
                self.n_false[c as usize] -= 1;
            }
        }
    }

    /// Unit propagation from `qhead`; false on conflict.
    fn propagate(&mut self, qhead: &mut usize) -> bool {
        while *qhead < self.trail.len() {
            let v = self.trail[*qhead] as usize;
            *qhead += 1;
            let b = self.val[v].expect("assigned");
            let n = if b { self.neg_occ[v].len() } else { self.pos_occ[v].len() };
            for i in 0..n {
                let c = if b { self.neg_occ[v][i] } else { self.pos_occ[v][i] } as usize;
                if self.n_true[c] > 0 {
                    continue;
                }
                let len = self.clauses[c].len() as u32;
                if self.n_false[c] == len {
                    return false;
                }
                if self.n_false[c] + 1 == len {
                    let &(u, pos) = self.clauses[c]
                        .iter()
                        .find(|(u, _)| self.val[*u as usize].is_none())
                        .expect("one open literal");
                    self.assign(u, pos);
                }
            }
        }
        true
    }

    fn pick(&self) -> u32 {
        *self
            .order
            .iter()
            .find(|&&v| self.val[v as usize].is_none() && self.unsat_occ[v as usize] > 0)
            .expect("an unsatisfied clause has an open variable")
    }

    fn emit(&self, acc: &mut FxHashMap<Key, BigUint>, emitted: &mut u128, limit: u128) -> Result<(), CapExceeded> {
        let mut base: Key = smallvec![0; key_words(self.num_keep)];
        let mut open_keep = Vec::new();
        let mut open_other = 0usize;
        for (v, val) in self.val.iter().enumerate() {
            match (self.keep_pos[v], val) {
                (Some(j), Some(true)) => set_bit(&mut base, j),
                (Some(j), None) => open_keep.push(j),
                (None, None) => open_other += 1,
                _ => {}
            }
        }
        if open_keep.len() >= 120 {
            return Err(CapExceeded);
        }
        *emitted += 1u128 << open_keep.len();
        if *emitted > limit {
            return Err(CapExceeded);
        }
        let count = BigUint::one() << open_other;
        for mask in 0u128..1 << open_keep.len() {
            let mut k = base.clone();
            for (i, &j) in open_keep.iter().enumerate() {
                if (mask >> i) & 1 == 1 {
                    set_bit(&mut k, j);
                }
            }
            *acc.entry(k).or_default() += &count;
        }
        Ok(())
    }

    fn run(&mut self, limit: u128, acc: &mut FxHashMap<Key, BigUint>) -> Result<(), CapExceeded> {
        if self.trivially_unsat {
            return Ok(());
        }
        for c in 0..self.clauses.len() {
            if let [(u, pos)] = self.clauses[c][..] {
                match self.val[u as usize] {
                    None => self.assign(u, pos),
                    Some(b) if b != pos => return Ok(()),
                    Some(_) => {}
                }
            }
        }
        let mut qhead = 0;
        let mut decisions: Vec<(usize, u32, bool)> = Vec::new();
        let mut emitted = 0u128;
        let mut dead_ends = 0u128;
        loop {
            let ok = self.propagate(&mut qhead);
            if ok && self.n_sat < self.clauses.len() {
                let v = self.pick();
                decisions.push((self.trail.len(), v, false));
                self.assign(v, false);
                continue;
            }
            if ok {
                self.emit(acc, &mut emitted, limit)?;
            } else {
                dead_ends += 1;
                if dead_ends > limit {
                    return Err(CapExceeded);
                }
            }
            loop {
                let Some((len, v, flipped)) = decisions.pop() else {
                    return Ok(());
                };
                self.undo_to(len);
                qhead = len;
                if !flipped {
                    decisions.push((len, v, true));
                    self.assign(v, true);
                    break;
                }
            }
        }
    }
}
