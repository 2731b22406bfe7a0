//! Solution-count tables (factors) and their algebra.
//!
//! A table maps assignments of an ascending variable list to positive
//! counts. Keys are packed bit-vectors: bit `j` of the key is the value of
//! `vars[j]`.

mod enumerate;
mod sketch;

pub use enumerate::{enumerate, enumerate_ordered, enumerate_projected, Branching};
pub use sketch::HyperLogLog;

use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::Zero;
use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};
use smallvec::{smallvec, SmallVec};

use crate::cnfsys::Var;
use crate::error::{Error, Result};

pub type Key = SmallVec<[u64; 2]>;

/// Rows below which product work stays on the calling thread.
const PAR_ROWS: usize = 1 << 12;

/// Joined row pairs a marginalized product may visit, per row of its cap.
pub const PAIR_BUDGET: usize = 16;

pub fn key_words(bits: usize) -> usize {
    bits.div_ceil(64)
}

#[inline]
pub fn get_bit(key: &[u64], j: usize) -> bool {
    (key[j / 64] >> (j % 64)) & 1 == 1
}

#[inline]
pub fn set_bit(key: &mut [u64], j: usize) {
    key[j / 64] |= 1 << (j % 64);
}

/// Copies the bits at `from` positions of `key` into consecutive positions
/// of a fresh key.
pub fn project(key: &[u64], from: &[usize]) -> Key {
    let mut out: Key = smallvec![0; key_words(from.len())];
    for (j, &p) in from.iter().enumerate() {
        if get_bit(key, p) {
            set_bit(&mut out, j);
        }
    }
    out
}

/// Positions of `sub` inside the ascending list `vars`.
pub fn positions(vars: &[Var], sub: &[Var]) -> Vec<usize> {
    sub.iter()
        .map(|v| vars.binary_search(v).expect("variable present in table"))
        .collect()
}

pub fn intersect(a: &[Var], b: &[Var]) -> Vec<Var> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

pub fn union(a: &[Var], b: &[Var]) -> Vec<Var> {
    let mut out: Vec<Var> = a.iter().chain(b).copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolutionTable {
    vars: Vec<Var>,
    rows: Vec<(Key, BigUint)>,
}

impl SolutionTable {
    /// Builds a table, summing duplicate keys and dropping zero counts.
    /// `vars` must be strictly ascending.
    pub fn new(vars: Vec<Var>, rows: impl IntoIterator<Item = (Key, BigUint)>) -> Self {
        debug_assert!(vars.windows(2).all(|w| w[0] < w[1]));
        let words = key_words(vars.len());
        let mut rows: Vec<(Key, BigUint)> = rows
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(mut k, c)| {
                k.resize(words, 0);
                (k, c)
            })
            .collect();
        rows.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        rows.dedup_by(|later, kept| {
            if later.0 == kept.0 {
                kept.1 += std::mem::take(&mut later.1);
                true
            } else {
                false
            }
        });
        SolutionTable { vars, rows }
    }

    /// Table over no variables holding a single count.
    pub fn scalar(count: BigUint) -> Self {
        Self::new(Vec::new(), [(Key::new(), count)])
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    /// Renames the variables position by position; the new names must be
    /// ascending too, so rows keep their meaning.
    pub fn relabel(mut self, vars: Vec<Var>) -> SolutionTable {
        assert_eq!(vars.len(), self.vars.len(), "relabel arity");
        debug_assert!(vars.windows(2).all(|w| w[0] < w[1]));
        self.vars = vars;
        self
    }

    pub fn rows(&self) -> &[(Key, BigUint)] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn total_count(&self) -> BigUint {
        self.rows.iter().map(|(_, c)| c).sum()
    }

    /// Value of `vars[j]` in `key`.
    pub fn bit(key: &[u64], j: usize) -> bool {
        get_bit(key, j)
    }

    /// Count stored for an assignment given as one bool per variable.
    pub fn count_of(&self, assignment: &[bool]) -> BigUint {
        assert_eq!(assignment.len(), self.vars.len());
        let mut k: Key = smallvec![0; key_words(self.vars.len())];
        for (j, _) in assignment.iter().enumerate().filter(|(_, &b)| b) {
            set_bit(&mut k, j);
        }
        match self.rows.binary_search_by(|r| r.0.cmp(&k)) {
            Ok(i) => self.rows[i].1.clone(),
            Err(_) => BigUint::zero(),
        }
    }

    /// Join on the shared variables with multiplied counts. Fails when the
    /// result would exceed `cap` rows.
    pub fn factor_product(&self, other: &SolutionTable, cap: usize) -> Result<SolutionTable> {
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        let vars = union(&self.vars, &other.vars);
        let shared = intersect(&self.vars, &other.vars);
        let s_shared = positions(&small.vars, &shared);
        let l_shared = positions(&large.vars, &shared);
        let s_to_u = positions(&vars, &small.vars);
        let l_to_u = positions(&vars, &large.vars);

        let mut index: FxHashMap<Key, Vec<usize>> = FxHashMap::default();
        for (i, (k, _)) in small.rows.iter().enumerate() {
            index.entry(project(k, &s_shared)).or_default().push(i);
        }
        let partners = |k: &Key| index.get(&project(k, &l_shared)).map_or(0, Vec::len);
        let size: usize = if large.len() >= PAR_ROWS {
            large.rows.par_iter().map(|(k, _)| partners(k)).sum()
        } else {
            large.rows.iter().map(|(k, _)| partners(k)).sum()
        };
        if size > cap {
            log::debug!(
                "product of {}x{} rows over {}+{} vars ({} shared) needs {size} rows",
                self.len(),
                other.len(),
                self.vars.len(),
                other.vars.len(),
                shared.len()
            );
            return Err(Error::ProductCap { cap });
        }

        let words = key_words(vars.len());
        let join = |(lk, lc): &(Key, BigUint)| -> Vec<(Key, BigUint)> {
            let Some(hits) = index.get(&project(lk, &l_shared)) else {
                return Vec::new();
            };
            let mut base: Key = smallvec![0; words];
            for (j, &u) in l_to_u.iter().enumerate() {
                if get_bit(lk, j) {
                    set_bit(&mut base, u);
                }
            }
            hits.iter()
                .map(|&i| {
                    let (sk, sc) = &small.rows[i];
                    let mut k = base.clone();
                    for (j, &u) in s_to_u.iter().enumerate() {
                        if get_bit(sk, j) {
                            set_bit(&mut k, u);
                        }
                    }
                    (k, lc * sc)
                })
                .collect()
        };
        let mut rows: Vec<(Key, BigUint)> = if large.len() >= PAR_ROWS {
            large.rows.par_iter().flat_map_iter(join).collect()
        } else {
            large.rows.iter().flat_map(join).collect()
        };
        // joined keys are distinct, only the order needs fixing
        rows.par_sort_unstable_by(|a, b| a.0.cmp(&b.0));
        Ok(SolutionTable { vars, rows })
    }

    /// `factor_product` followed by `marginalize(drop)`, without building
    /// the full product. `cap` bounds the rows of the result; the number of
    /// joined row pairs may be up to [`PAIR_BUDGET`] times that.
    pub fn product_marginalized(&self, other: &SolutionTable, drop: &[Var], cap: usize) -> Result<SolutionTable> {
        let vars = union(&self.vars, &other.vars);
        if !vars.iter().any(|v| drop.contains(v)) {
            return self.factor_product(other, cap);
        }
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        let out: Vec<Var> = vars.iter().copied().filter(|v| !drop.contains(v)).collect();
        let shared = intersect(&self.vars, &other.vars);
        let s_shared = positions(&small.vars, &shared);
        let l_shared = positions(&large.vars, &shared);
        // (position in the row, position in the output) for surviving bits
        let to_out = |t: &SolutionTable| -> Vec<(usize, usize)> {
            t.vars
                .iter()
                .enumerate()
                .filter_map(|(j, v)| out.binary_search(v).ok().map(|u| (j, u)))
                .collect()
        };
        let (s_out, l_out) = (to_out(small), to_out(large));
        let words = key_words(out.len());
        let scatter = |k: &Key, map: &[(usize, usize)], into: &mut Key| {
            for &(j, u) in map {
                if get_bit(k, j) {
                    set_bit(into, u);
                }
            }
        };

        let mut index: FxHashMap<Key, Vec<usize>> = FxHashMap::default();
        for (i, (k, _)) in small.rows.iter().enumerate() {
            index.entry(project(k, &s_shared)).or_default().push(i);
        }
        let pairs: usize = large
            .rows
            .par_iter()
            .map(|(k, _)| index.get(&project(k, &l_shared)).map_or(0, Vec::len))
            .sum();
        if pairs > cap.saturating_mul(PAIR_BUDGET) {
            log::debug!("marginalized product needs {pairs} row pairs");
            return Err(Error::ProductCap { cap });
        }
        let small_out: Vec<Key> = small
            .rows
            .iter()
            .map(|(k, _)| {
                let mut o: Key = smallvec![0; words];
                scatter(k, &s_out, &mut o);
                o
            })
            .collect();
        let fold = |mut acc: FxHashMap<Key, BigUint>, (lk, lc): &(Key, BigUint)| {
            if acc.len() > cap {
                return acc;
            }
            if let Some(hits) = index.get(&project(lk, &l_shared)) {
                let mut base: Key = smallvec![0; words];
                scatter(lk, &l_out, &mut base);
                for &i in hits {
                    let mut k = base.clone();
                    for (w, o) in k.iter_mut().zip(&small_out[i]) {
                        *w |= o;
                    }
                    *acc.entry(k).or_default() += lc * &small.rows[i].1;
                }
            }
            acc
        };
        let acc = large
            .rows
            .par_iter()
            .fold(FxHashMap::default, fold)
            .reduce(FxHashMap::default, |mut a, mut b| {
                if a.len() < b.len() {
                    std::mem::swap(&mut a, &mut b);
                }
                if a.len() <= cap {
                    for (k, c) in b {
                        *a.entry(k).or_default() += c;
                    }
                }
                a
            });
        if acc.len() > cap {
            return Err(Error::ProductCap { cap });
        }
        Ok(SolutionTable::new(out, acc))
    }

    /// Sums counts over every assignment of `drop`.
    pub fn marginalize(&self, drop: &[Var]) -> SolutionTable {
        if drop.is_empty() {
            return self.clone();
        }
        let keep: Vec<Var> = self.vars.iter().copied().filter(|v| !drop.contains(v)).collect();
        self.project_onto(&keep)
    }

    /// Marginalizes every variable outside `keep` (which must be a subset of
    /// the table's variables).
    pub fn project_onto(&self, keep: &[Var]) -> SolutionTable {
        let pos = positions(&self.vars, keep);
        let mut acc: FxHashMap<Key, BigUint> = FxHashMap::default();
        for (k, c) in &self.rows {
            *acc.entry(project(k, &pos)).or_default() += c;
        }
        SolutionTable::new(keep.to_vec(), acc)
    }

    /// Human-readable listing, one row per line, bits in variable order.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let vars: Vec<String> = self.vars.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "vars [{}] rows {}", vars.join(" "), self.len());
        for (k, c) in &self.rows {
            let bits: String = (0..self.vars.len()).map(|j| if get_bit(k, j) { '1' } else { '0' }).collect();
            let _ = writeln!(out, "{bits} {c}");
        }
        out
    }
}

/// Join-size estimation settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeEstimator {
    /// Tables with at most this many rows are distinct-counted exactly.
    pub exact_threshold: usize,
    /// Register-count exponent of the sketch.
    pub sketch_precision: u8,
}

impl Default for SizeEstimator {
    fn default() -> Self {
        SizeEstimator {
            exact_threshold: 1 << 16,
            sketch_precision: 14,
        }
    }
}

impl SizeEstimator {
    /// Number of distinct projections of the table's rows onto `pos`.
    pub fn distinct(&self, t: &SolutionTable, pos: &[usize]) -> u64 {
        if t.len() <= self.exact_threshold {
            let set: FxHashSet<Key> = t.rows.iter().map(|(k, _)| project(k, pos)).collect();
            set.len() as u64
        } else {
            let mut hll = HyperLogLog::new(self.sketch_precision);
            for (k, _) in &t.rows {
                hll.insert(&project(k, pos));
            }
            hll.estimate().round().max(1.0) as u64
        }
    }

    /// Estimated row count of `t1 * t2`: `|T1| |T2| / max(d1, d2)` with `d`
    /// the distinct counts of the shared-variable projections.
    pub fn estimate_merge_size(&self, t1: &SolutionTable, t2: &SolutionTable) -> u128 {
        let cross = t1.len() as u128 * t2.len() as u128;
        let shared = intersect(&t1.vars, &t2.vars);
        if shared.is_empty() || cross == 0 {
            return cross;
        }
        let d1 = self.distinct(t1, &positions(&t1.vars, &shared));
        let d2 = self.distinct(t2, &positions(&t2.vars, &shared));
        (cross / u128::from(d1.max(d2))).max(1)
    }

    /// Estimated rows of `t1 * t2` with `drop` summed out: the product
    /// estimate, capped by the assignments of the surviving variables.
    pub fn estimate_marginalized(&self, t1: &SolutionTable, t2: &SolutionTable, drop: &[Var]) -> u128 {
        let product = self.estimate_merge_size(t1, t2);
        let width = union(&t1.vars, &t2.vars).iter().filter(|v| !drop.contains(v)).count();
        if width < 127 {
            product.min(1 << width)
        } else {
            product
        }
    }
}
