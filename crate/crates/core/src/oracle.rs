//! Brute-force ground truth by simulating both circuits on every input.
//!
//! The localized mode covers wide two-operand adders whose circuits agree
//! on an exact ripple chain above some position `k`: the error then only
//! depends on the `2k` low operand bits, which are enumerated instead.

use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::circuit::{Gate, NetId, Netlist};
use crate::error::{Error, Result};
use crate::metrics::{moments, sign_of, MetricReport, Pdf, Wce, WceSign};

pub const DEFAULT_INPUT_CAP: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleReport {
    pub n_inputs: usize,
    pub er: BigRational,
    pub mae: BigRational,
    pub mse: BigRational,
    pub wce: Wce,
    pub pdf: Pdf,
}

impl OracleReport {
    fn from_counts(n_inputs: usize, counts: BTreeMap<BigInt, BigUint>) -> Self {
        let den = BigInt::one() << n_inputs;
        let pdf: Pdf = counts
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(v, c)| (v, BigRational::new(BigInt::from(c), den.clone())))
            .collect();
        let p_of = |v: &BigInt| {
            pdf.iter()
                .find(|(x, _)| x == v)
                .map_or_else(BigRational::zero, |(_, p)| p.clone())
        };
        let er = BigRational::one() - p_of(&BigInt::zero());
        let (mae, mse) = moments(&pdf);
        let lo = pdf.first().map(|(v, _)| v.clone()).unwrap_or_default();
        let hi = pdf.last().map(|(v, _)| v.clone()).unwrap_or_default();
        // ties between signs resolve to the positive value
        let worst = if -&lo > hi { lo } else { hi };
        let wce = Wce {
            magnitude: worst.magnitude().clone(),
            sign: sign_of(&worst),
            p_wce: p_of(&worst),
        };
        OracleReport {
            n_inputs,
            er,
            mae,
            mse,
            wce,
            pdf,
        }
    }

    /// Field-by-field differences against the fields present in `r`.
    pub fn mismatches(&self, r: &MetricReport) -> Vec<String> {
        let mut out = Vec::new();
        let mut cmp = |name: &str, got: Option<String>, want: String| {
            if let Some(got) = got {
                if got != want {
                    out.push(format!("{name}: engine {got}, oracle {want}"));
                }
            }
        };
        cmp("n_inputs", Some(r.n_inputs.to_string()), self.n_inputs.to_string());
        cmp("er", r.er.as_ref().map(ToString::to_string), self.er.to_string());
        cmp("mae", r.mae.as_ref().map(ToString::to_string), self.mae.to_string());
        cmp("mse", r.mse.as_ref().map(ToString::to_string), self.mse.to_string());
        let show_wce = |w: &Wce| format!("{} ({}) p={}", w.magnitude, w.sign, w.p_wce);
        cmp("wce", r.wce.as_ref().map(show_wce), show_wce(&self.wce));
        let show_pdf = |p: &Pdf| {
            p.iter()
                .map(|(v, p)| format!("{v}:{p}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        cmp("pdf", r.pdf.as_ref().map(show_pdf), show_pdf(&self.pdf));
        out
    }
}

fn check_arity(exact: &Netlist, approx: &Netlist) -> Result<usize> {
    let n = exact.inputs().len();
    if approx.inputs().len() != n {
        return Err(Error::ArityMismatch {
            exact: n,
            approx: approx.inputs().len(),
        });
    }
    Ok(n)
}

/// Error value counts over all assignments of the first `free` inputs,
/// remaining inputs held at zero.
fn error_counts(exact: &Netlist, approx: &Netlist, free: usize) -> BTreeMap<BigInt, BigUint> {
    let n = exact.inputs().len();
    const LANES: [u64; 6] = [
        0xAAAA_AAAA_AAAA_AAAA,
        0xCCCC_CCCC_CCCC_CCCC,
        0xF0F0_F0F0_F0F0_F0F0,
        0xFF00_FF00_FF00_FF00,
        0xFFFF_0000_FFFF_0000,
        0xFFFF_FFFF_0000_0000,
    ];
    let lanes = 1usize << free.min(6);
    let chunks = 1u64 << free.saturating_sub(6);
    let narrow = exact.outputs().len() <= 126 && approx.outputs().len() <= 126;
    let words = |chunk: u64| -> Vec<u64> {
        (0..n)
            .map(|i| match i {
                _ if i >= free => 0,
                _ if i < 6 => LANES[i],
                _ if chunk >> (i - 6) & 1 == 1 => !0,
                _ => 0,
            })
            .collect()
    };
    let value_u128 = |outs: &[u64], lane: usize| -> u128 {
        outs.iter()
            .enumerate()
            .fold(0u128, |acc, (i, w)| acc | (((w >> lane) & 1) as u128) << i)
    };
    let value_big = |outs: &[u64], lane: usize| -> BigInt {
        let mut v = BigUint::zero();
        for (i, w) in outs.iter().enumerate() {
            if (w >> lane) & 1 == 1 {
                v.set_bit(i as u64, true);
            }
        }
        BigInt::from(v)
    };
    if narrow {
        let merged = (0..chunks)
            .into_par_iter()
            .fold(FxHashMap::<i128, u64>::default, |mut acc, chunk| {
                let w = words(chunk);
                let (y, yh) = (exact.simulate_words(&w), approx.simulate_words(&w));
                for lane in 0..lanes {
                    let e = value_u128(&y, lane) as i128 - value_u128(&yh, lane) as i128;
                    *acc.entry(e).or_default() += 1;
                }
                acc
            })
            .reduce(FxHashMap::default, |mut a, b| {
                for (k, v) in b {
                    *a.entry(k).or_default() += v;
                }
                a
            });
        merged
            .into_iter()
            .map(|(e, c)| (BigInt::from(e), BigUint::from(c)))
            .collect()
    } else {
        let merged = (0..chunks)
            .into_par_iter()
            .fold(HashMap::<BigInt, u64>::new, |mut acc, chunk| {
                let w = words(chunk);
                let (y, yh) = (exact.simulate_words(&w), approx.simulate_words(&w));
                for lane in 0..lanes {
                    *acc.entry(value_big(&y, lane) - value_big(&yh, lane)).or_default() += 1;
                }
                acc
            })
            .reduce(HashMap::new, |mut a, b| {
                for (k, v) in b {
                    *a.entry(k).or_default() += v;
                }
                a
            });
        merged.into_iter().map(|(e, c)| (e, BigUint::from(c))).collect()
    }
}

/// Simulates both circuits on all `2^n` inputs.
pub fn exhaustive_metrics(exact: &Netlist, approx: &Netlist, input_cap: usize) -> Result<OracleReport> {
    let n = check_arity(exact, approx)?;
    if n > input_cap {
        return Err(Error::OracleCap { n, cap: input_cap });
    }
    Ok(OracleReport::from_counts(n, error_counts(exact, approx, n)))
}

/// Enumerates only the low operand bits when [`localizable_prefix`] proves
/// the rest irrelevant; each outcome stands for `2^(n - 2k)` inputs.
pub fn localized_metrics(exact: &Netlist, approx: &Netlist, input_cap: usize) -> Result<OracleReport> {
    let n = check_arity(exact, approx)?;
    let k = localizable_prefix(exact, approx).ok_or(Error::OracleCap { n, cap: input_cap })?;
    if 2 * k > input_cap {
        return Err(Error::OracleCap { n, cap: input_cap });
    }
    let counts = error_counts(exact, approx, 2 * k)
        .into_iter()
        .map(|(e, c)| (e, c << (n - 2 * k)))
        .collect();
    Ok(OracleReport::from_counts(n, counts))
}

/// Exhaustive when `n` fits the cap, localized otherwise.
pub fn oracle_metrics(exact: &Netlist, approx: &Netlist, input_cap: usize) -> Result<OracleReport> {
    if exact.inputs().len() <= input_cap {
        exhaustive_metrics(exact, approx, input_cap)
    } else {
        localized_metrics(exact, approx, input_cap)
    }
}

/// Smallest `k >= 1` such that, in both adders (operand bits interleaved,
/// `width + 1` outputs), the outputs below `k` read only the `2k` low
/// inputs and positions `k..width` are an exact ripple chain whose carry
/// into position `k` also reads only those inputs.
pub fn localizable_prefix(exact: &Netlist, approx: &Netlist) -> Option<usize> {
    let n = exact.inputs().len();
    if !n.is_multiple_of(2) || approx.inputs().len() != n {
        return None;
    }
    let w = n / 2;
    if exact.outputs().len() != w + 1 || approx.outputs().len() != w + 1 {
        return None;
    }
    let (se, sa) = (Structure::new(exact), Structure::new(approx));
    (1..=w).find(|&k| se.ripple_above(k) && sa.ripple_above(k))
}

struct Structure<'a> {
    net: &'a Netlist,
    driver: Vec<Option<&'a Gate>>,
    /// Input support of every net as a bitset.
    support: Vec<Vec<u64>>,
}

impl<'a> Structure<'a> {
    fn new(net: &'a Netlist) -> Self {
        let n = net.inputs().len();
        let words = n.div_ceil(64).max(1);
        let mut driver = vec![None; net.num_nets()];
        let mut support = vec![vec![0u64; words]; net.num_nets()];
        for (i, &x) in net.inputs().iter().enumerate() {
            support[x][i / 64] |= 1 << (i % 64);
        }
        for g in net.gates() {
            driver[g.output] = Some(g);
            let mut s = vec![0u64; words];
            for &x in &g.inputs {
                for (a, b) in s.iter_mut().zip(&support[x]) {
                    *a |= b;
                }
            }
            support[g.output] = s;
        }
        Structure {
            net,
            driver,
            support,
        }
    }

    fn reads_only_below(&self, x: NetId, limit: usize) -> bool {
        self.support[x]
            .iter()
            .enumerate()
            .all(|(wi, &word)| (0..64).all(|b| word >> b & 1 == 0 || wi * 64 + b < limit))
    }

    fn reads(&self, x: NetId, input: usize) -> bool {
        self.support[x][input / 64] >> (input % 64) & 1 == 1
    }

    /// Nets feeding `root` that read neither `a` nor `b` while the path to
    /// them does.
    fn frontier(&self, root: NetId, a: usize, b: usize) -> Vec<NetId> {
        let mut out = Vec::new();
        let mut stack = vec![root];
        let mut seen = vec![false; self.net.num_nets()];
        while let Some(x) = stack.pop() {
            if std::mem::replace(&mut seen[x], true) {
                continue;
            }
            let touches = self.reads(x, a) || self.reads(x, b);
            match self.driver[x] {
                _ if !touches => {
                    if self.support[x].iter().any(|&w| w != 0) {
                        out.push(x);
                    }
                }
                Some(g) => stack.extend(&g.inputs),
                None => {}
            }
        }
        out
    }

    /// Value of `root` with `leaves` fixed, or `None` if its cone reaches
    /// an input outside `leaves`.
    fn eval(&self, root: NetId, leaves: &[(NetId, bool)]) -> Option<bool> {
        fn go(s: &Structure, x: NetId, leaves: &[(NetId, bool)], memo: &mut HashMap<NetId, bool>) -> Option<bool> {
            if let Some(&(_, v)) = leaves.iter().find(|(l, _)| *l == x) {
                return Some(v);
            }
            if let Some(&v) = memo.get(&x) {
                return Some(v);
            }
            let g = s.driver[x]?;
            let ins = g
                .inputs
                .iter()
                .map(|&i| go(s, i, leaves, memo).map(|v| if v { !0u64 } else { 0 }))
                .collect::<Option<Vec<u64>>>()?;
            let v = g.kind.eval_words(&ins) & 1 == 1;
            memo.insert(x, v);
            Some(v)
        }
        go(self, root, leaves, &mut HashMap::new())
    }

    fn computes(&self, root: NetId, leaves: [NetId; 3], f: impl Fn(bool, bool, bool) -> bool) -> bool {
        (0..8u8).all(|p| {
            let (x, y, z) = (p & 1 == 1, p & 2 == 2, p & 4 == 4);
            self.eval(root, &[(leaves[0], x), (leaves[1], y), (leaves[2], z)]) == Some(f(x, y, z))
        })
    }

    fn single_carry(&self, pos: usize) -> Option<NetId> {
        match self.frontier(self.net.outputs()[pos], 2 * pos, 2 * pos + 1)[..] {
            [c] => Some(c),
            _ => None,
        }
    }

    fn ripple_above(&self, k: usize) -> bool {
        let outs = self.net.outputs();
        let ins = self.net.inputs();
        let w = outs.len() - 1;
        if !(0..k).all(|j| self.reads_only_below(outs[j], 2 * k)) {
            return false;
        }
        if k == w {
            return self.reads_only_below(outs[w], 2 * k);
        }
        let Some(mut carry) = self.single_carry(k) else {
            return false;
        };
        if !self.reads_only_below(carry, 2 * k) {
            return false;
        }
        for j in k..w {
            let cell = [ins[2 * j], ins[2 * j + 1], carry];
            if !self.computes(outs[j], cell, |a, b, c| a ^ b ^ c) {
                return false;
            }
            let next = if j + 1 < w {
                match self.single_carry(j + 1) {
                    Some(c) => c,
                    None => return false,
                }
            } else {
                outs[w]
            };
            if !self.computes(next, cell, |a, b, c| (a & b) | (c & (a ^ b))) {
                return false;
            }
            carry = next;
        }
        true
    }
}

/// Sum of the probabilities in a PDF.
pub fn total_probability(pdf: &Pdf) -> BigRational {
    pdf.iter().map(|(_, p)| p.clone()).sum()
}

/// `true` if the reported WCE sign is consistent with its magnitude.
pub fn wce_consistent(w: &Wce) -> bool {
    (w.sign == WceSign::Zero) == w.magnitude.is_zero() && w.p_wce.is_positive()
}
