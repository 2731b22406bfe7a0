//! Error metrics from conditioned model counts.
//!
//! With `E = y - ŷ` in two's complement over the error bits `e_0..e_m`
//! (`e_m` the sign), every metric is a weighted sum of counts of models
//! fixing a few error bits, divided by `2^n`. All arithmetic is exact.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::engine::{Engine, Query};
use crate::error::{Error, Result};

/// Which metrics [`Analyzer::compute_all`] evaluates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Selection {
    pub er: bool,
    pub mae: bool,
    pub mse: bool,
    /// Worst-case error together with its sign and probability.
    pub wce: bool,
    pub pdf: bool,
}

impl Selection {
    /// ER, MAE, MSE and WCE; the PDF is requested separately.
    pub const ALL: Selection = Selection {
        er: true,
        mae: true,
        mse: true,
        wce: true,
        pdf: false,
    };

    pub fn is_empty(&self) -> bool {
        !(self.er || self.mae || self.mse || self.wce || self.pdf)
    }
}

impl FromStr for Selection {
    type Err = Error;

    /// Comma-separated names out of `er, mae, mse, wce, pwce, pdf, all`.
    fn from_str(s: &str) -> Result<Self> {
        let mut sel = Selection::default();
        for name in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match name.to_ascii_lowercase().as_str() {
                "all" => {
                    let pdf = sel.pdf;
                    sel = Selection { pdf, ..Selection::ALL };
                }
                "er" => sel.er = true,
                "mae" => sel.mae = true,
                "mse" => sel.mse = true,
                "wce" | "pwce" | "p_wce" => sel.wce = true,
                "pdf" => sel.pdf = true,
                other => return Err(Error::Spec(format!("unknown metric {other:?}"))),
            }
        }
        Ok(sel)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WceSign {
    Plus,
    Minus,
    Zero,
}

impl fmt::Display for WceSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WceSign::Plus => "+",
            WceSign::Minus => "-",
            WceSign::Zero => "zero",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Wce {
    pub magnitude: BigUint,
    pub sign: WceSign,
    /// Probability of the error value `sign * magnitude`.
    pub p_wce: BigRational,
}

/// Error value and probability, ascending by value, zero-probability
/// values left out.
pub type Pdf = Vec<(BigInt, BigRational)>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricReport {
    pub n_inputs: usize,
    pub er: Option<BigRational>,
    pub mae: Option<BigRational>,
    pub mse: Option<BigRational>,
    pub wce: Option<Wce>,
    pub pdf: Option<Pdf>,
    /// Engine evaluations issued, counting a per-bit count vector as one.
    pub query_count: u64,
    /// Wall time per metric, in evaluation order.
    pub timings: Vec<(&'static str, Duration)>,
}

impl MetricReport {
    /// Relations every consistent report satisfies, among the fields present.
    pub fn check_invariants(&self) -> Result<()> {
        let fail = |what: &str| Err(Error::Invariant(format!("metric report: {what}")));
        let zeros: Vec<bool> = [
            self.er.as_ref().map(Zero::is_zero),
            self.mae.as_ref().map(Zero::is_zero),
            self.mse.as_ref().map(Zero::is_zero),
            self.wce.as_ref().map(|w| w.magnitude.is_zero()),
        ]
        .into_iter()
        .flatten()
        .collect();
        if zeros.windows(2).any(|w| w[0] != w[1]) {
            return fail("zero error metrics disagree");
        }
        if let (Some(mae), Some(mse)) = (&self.mae, &self.mse) {
            if mse < &(mae * mae) {
                return fail("mse below mae squared");
            }
        }
        if let (Some(mae), Some(w)) = (&self.mae, &self.wce) {
            if &BigRational::from_integer(BigInt::from(w.magnitude.clone())) < mae {
                return fail("wce below mae");
            }
        }
        if let Some(pdf) = &self.pdf {
            if pdf.iter().any(|(_, p)| !p.is_positive()) {
                return fail("non-positive pdf entry");
            }
        }
        Ok(())
    }
}

/// Result of the two greedy worst-case passes.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Extremes {
    /// Largest non-negative error and its model count, if any model has
    /// `e_m = 0`.
    pos: Option<(BigUint, BigUint)>,
    /// Magnitude of the most negative error and its model count.
    neg: Option<(BigUint, BigUint)>,
}

/// Default cap on PDF queries.
pub const DEFAULT_QUERY_BUDGET: u128 = 1 << 16;

/// Runs metric queries against one engine and counts them.
pub struct Analyzer<'e, 't> {
    engine: &'e Engine<'t>,
    n_inputs: usize,
    /// Index of the sign bit `e_m`.
    m: usize,
    queries: AtomicU64,
    bit_cache: Mutex<BTreeMap<Query, Vec<BigUint>>>,
    extremes: Mutex<Option<Extremes>>,
    corrupt: bool,
    pub query_budget: u128,
}

impl<'e, 't> Analyzer<'e, 't> {
    pub fn new(engine: &'e Engine<'t>, n_inputs: usize) -> Self {
        let bits = engine.tree().error_vars().len();
        assert!(bits >= 2, "at least one magnitude bit and the sign bit");
        Analyzer {
            engine,
            n_inputs,
            m: bits - 1,
            queries: AtomicU64::new(0),
            bit_cache: Mutex::new(BTreeMap::new()),
            extremes: Mutex::new(None),
            corrupt: false,
            query_budget: DEFAULT_QUERY_BUDGET,
        }
    }

    /// Adds one to every count that fixes all error bits.
    #[doc(hidden)]
    pub fn corrupt_for_test(&mut self) {
        self.corrupt = true;
    }

    fn tamper(&self, q: &Query, c: &mut BigUint) {
        if self.corrupt && q.len() == self.m + 1 {
            *c += 1u8;
        }
    }

    pub fn sign_bit(&self) -> usize {
        self.m
    }

    pub fn query_count(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    fn denominator(&self) -> BigInt {
        BigInt::one() << self.n_inputs
    }

    fn prob(&self, count: BigUint) -> BigRational {
        BigRational::new(BigInt::from(count), self.denominator())
    }

    pub fn count(&self, q: &Query) -> BigUint {
        self.queries.fetch_add(1, Ordering::Relaxed);
        let mut c = self.engine.sat_count(q);
        self.tamper(q, &mut c);
        c
    }

    pub fn count_batch(&self, qs: &[Query]) -> Vec<BigUint> {
        self.queries.fetch_add(qs.len() as u64, Ordering::Relaxed);
        let mut cs = self.engine.sat_count_batch(qs);
        for (q, c) in qs.iter().zip(&mut cs) {
            self.tamper(q, c);
        }
        cs
    }

    /// Per-bit counts under `q`, memoized.
    fn bit_counts(&self, q: &Query) -> Vec<BigUint> {
        if let Some(c) = self.bit_cache.lock().expect("cache lock").get(q) {
            return c.clone();
        }
        self.queries.fetch_add(1, Ordering::Relaxed);
        let c = self.engine.bit_counts(q);
        self.bit_cache.lock().expect("cache lock").insert(q.clone(), c.clone());
        c
    }

    fn bit_counts_batch(&self, qs: &[Query]) -> Vec<Vec<BigUint>> {
        qs.par_iter().map(|q| self.bit_counts(q)).collect()
    }

    /// The unconditioned count must be `2^n`; anything else is a bug.
    pub fn verify_total(&self) -> Result<()> {
        let total = self.count(&Query::new());
        let expect = BigUint::one() << self.n_inputs;
        if total != expect {
            return Err(Error::Invariant(format!(
                "unconditioned count {total} differs from 2^{} = {expect}",
                self.n_inputs
            )));
        }
        Ok(())
    }

    pub fn error_rate(&self) -> BigRational {
        let zero = Query::full_pattern(&vec![false; self.m + 1]);
        BigRational::one() - self.prob(self.count(&zero))
    }

    pub fn mean_abs_error(&self) -> BigRational {
        let m = self.m;
        let pos = self.bit_counts(&Query::new().with(m, false));
        let neg = self.bit_counts(&Query::new().with(m, true));
        let neg_total = neg[m].clone();
        let mut sum = BigInt::from(neg_total.clone());
        for i in 0..m {
            let flips = &pos[i] + (&neg_total - &neg[i]);
            sum += BigInt::from(flips) << i;
        }
        BigRational::new(sum, self.denominator())
    }

    pub fn mean_sq_error(&self) -> BigRational {
        let m = self.m;
        let single = self.bit_counts(&Query::new());
        let mut qs: Vec<Query> = (0..m.saturating_sub(1)).map(|i| Query::new().with(i, true)).collect();
        qs.push(Query::new().with(m, true));
        let mut pairs = self.bit_counts_batch(&qs);
        let with_sign = pairs.pop().expect("sign query");
        let mut sum = BigInt::zero();
        for (i, c) in single.iter().enumerate() {
            sum += BigInt::from(c.clone()) << (2 * i);
        }
        for (i, row) in pairs.iter().enumerate() {
            for (j, c) in row.iter().enumerate().take(m).skip(i + 1) {
                sum += BigInt::from(c.clone()) << (i + j + 1);
            }
        }
        for (i, c) in with_sign.iter().enumerate().take(m) {
            sum -= BigInt::from(c.clone()) << (i + m + 1);
        }
        BigRational::new(sum, self.denominator())
    }

    /// Greedy bit-by-bit passes from `e_{m-1}` down to `e_0`: the positive
    /// pass keeps each bit at one when some model allows it, the negative
    /// pass keeps it at zero.
    fn extremes(&self) -> Extremes {
        if let Some(x) = self.extremes.lock().expect("extremes lock").clone() {
            return x;
        }
        let m = self.m;
        let pass = |sign: bool| -> Option<(BigUint, BigUint)> {
            let mut q = Query::new().with(m, sign);
            let mut cur = self.count(&q);
            if cur.is_zero() {
                return None;
            }
            let mut low = BigUint::zero();
            for i in (0..m).rev() {
                let want = !sign;
                let c = self.count(&q.clone().with(i, want));
                let bit = if c.is_zero() { !want } else { want };
                if !c.is_zero() {
                    cur = c;
                }
                q.set(i, bit);
                if bit {
                    low.set_bit(i as u64, true);
                }
            }
            let magnitude = if sign { (BigUint::one() << m) - low } else { low };
            Some((magnitude, cur))
        };
        let x = Extremes {
            pos: pass(false),
            neg: pass(true),
        };
        *self.extremes.lock().expect("extremes lock") = Some(x.clone());
        x
    }

    /// Largest error magnitude; ties between signs resolve to `+`.
    pub fn worst_case_error(&self) -> Wce {
        let x = self.extremes();
        let zero = (BigUint::zero(), BigUint::zero());
        let (pm, pc) = x.pos.as_ref().unwrap_or(&zero);
        let (nm, nc) = x.neg.as_ref().unwrap_or(&zero);
        let (magnitude, count, sign) = if x.neg.is_some() && nm > pm {
            (nm, nc, WceSign::Minus)
        } else if pm.is_zero() {
            (pm, pc, WceSign::Zero)
        } else {
            (pm, pc, WceSign::Plus)
        };
        Wce {
            magnitude: magnitude.clone(),
            sign,
            p_wce: self.prob(count.clone()),
        }
    }

    /// Probability of every error value in `range` (inclusive; default from
    /// the most negative to the largest error), one full-pattern query each.
    pub fn error_pdf(&self, range: Option<(BigInt, BigInt)>) -> Result<Pdf> {
        let m = self.m;
        let lowest = -(BigInt::one() << m);
        let highest = (BigInt::one() << m) - 1;
        let (lo, hi) = match range {
            Some((lo, hi)) => (lo.max(lowest), hi.min(highest)),
            None => {
                let x = self.extremes();
                let lo = x.neg.map_or(BigInt::zero(), |(mag, _)| -BigInt::from(mag));
                let hi = x.pos.map_or(BigInt::zero(), |(mag, _)| BigInt::from(mag));
                (lo, hi)
            }
        };
        if lo > hi {
            return Ok(Vec::new());
        }
        let needed = (&hi - &lo + 1u8).to_u128().unwrap_or(u128::MAX);
        if needed > self.query_budget {
            return Err(Error::QueryBudget {
                needed,
                budget: self.query_budget,
            });
        }
        let modulus = BigInt::one() << (m + 1);
        let values: Vec<BigInt> = (0..needed).map(|k| &lo + k).collect();
        let queries: Vec<Query> = values
            .iter()
            .map(|v| {
                let code = v.mod_floor(&modulus);
                Query::full_pattern(&(0..=m).map(|i| code.bit(i as u64)).collect::<Vec<_>>())
            })
            .collect();
        let counts = self.count_batch(&queries);
        Ok(values
            .into_iter()
            .zip(counts)
            .filter(|(_, c)| !c.is_zero())
            .map(|(v, c)| (v, self.prob(c)))
            .collect())
    }

    /// Evaluates the selected metrics in a fixed order.
    pub fn compute_all(&self, sel: Selection) -> Result<MetricReport> {
        self.compute_with_range(sel, None)
    }

    pub fn compute_with_range(&self, sel: Selection, range: Option<(BigInt, BigInt)>) -> Result<MetricReport> {
        if sel.is_empty() {
            return Err(Error::NoMetrics);
        }
        let mut timings = Vec::new();
        let mut timed = |name: &'static str, f: &mut dyn FnMut()| {
            let t = Instant::now();
            f();
            timings.push((name, t.elapsed()));
        };
        let (mut er, mut mae, mut mse, mut wce, mut pdf) = (None, None, None, None, None);
        if sel.er {
            timed("er", &mut || er = Some(self.error_rate()));
        }
        if sel.mae {
            timed("mae", &mut || mae = Some(self.mean_abs_error()));
        }
        if sel.mse {
            timed("mse", &mut || mse = Some(self.mean_sq_error()));
        }
        if sel.wce {
            timed("wce", &mut || wce = Some(self.worst_case_error()));
        }
        if sel.pdf {
            let mut r = Ok(Vec::new());
            timed("pdf", &mut || r = self.error_pdf(range.clone()));
            pdf = Some(r?);
        }
        let report = MetricReport {
            n_inputs: self.n_inputs,
            er,
            mae,
            mse,
            wce,
            pdf,
            query_count: self.query_count(),
            timings,
        };
        report.check_invariants()?;
        Ok(report)
    }
}

/// `|v|` and `v^2` weighted by probability.
pub fn moments(pdf: &[(BigInt, BigRational)]) -> (BigRational, BigRational) {
    let mut mae = BigRational::zero();
    let mut mse = BigRational::zero();
    for (v, p) in pdf {
        let v = BigRational::from_integer(v.clone());
        mae += v.abs() * p;
        mse += &v * &v * p;
    }
    (mae, mse)
}

/// Decimal rendering with `digits` significant digits, rounding half away
/// from zero. Plain notation for exponents in `-6..21`, scientific
/// otherwise.
pub fn decimal(r: &BigRational, digits: usize) -> String {
    let digits = digits.max(1);
    if r.is_zero() {
        return "0".into();
    }
    let neg = r.is_negative();
    let a = r.numer().abs().to_biguint().expect("non-negative");
    let b = r.denom().to_biguint().expect("positive");
    let ten = BigUint::from(10u8);
    let len = |x: &BigUint| x.to_string().len() as i64;
    // 10^e <= a/b < 10^(e+1)
    let mut e = len(&a) - len(&b);
    let below = |e: i64| {
        if e >= 0 {
            a < &b * ten.pow(e as u32)
        } else {
            &a * ten.pow((-e) as u32) < b
        }
    };
    if below(e) {
        e -= 1;
    }
    let shift = digits as i64 - 1 - e;
    let (num, den) = if shift >= 0 {
        (&a * ten.pow(shift as u32), b.clone())
    } else {
        (a.clone(), &b * ten.pow((-shift) as u32))
    };
    let (mut q, rem) = num.div_rem(&den);
    if rem * 2u8 >= den {
        q += 1u8;
    }
    if q == ten.pow(digits as u32) {
        q /= 10u8;
        e += 1;
    }
    let s = q.to_string();
    let trim = |t: &str| t.trim_end_matches('0').to_string();
    let body = if (-6..21).contains(&e) {
        if e >= digits as i64 - 1 {
            format!("{s}{}", "0".repeat((e - digits as i64 + 1) as usize))
        } else if e >= 0 {
            let (int, frac) = s.split_at(e as usize + 1);
            let frac = trim(frac);
            if frac.is_empty() {
                int.to_string()
            } else {
                format!("{int}.{frac}")
            }
        } else {
            format!("0.{}{}", "0".repeat((-e - 1) as usize), trim(&s))
        }
    } else {
        let (first, rest) = s.split_at(1);
        let rest = trim(rest);
        let mantissa = if rest.is_empty() { first.to_string() } else { format!("{first}.{rest}") };
        format!("{mantissa}e{}{}", if e < 0 { "-" } else { "+" }, e.abs())
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

/// Exact integer value of a non-negative rational with denominator one.
pub fn as_integer(r: &BigRational) -> Option<BigInt> {
    r.is_integer().then(|| r.to_integer())
}

/// Sign of an integer as a [`WceSign`].
pub fn sign_of(v: &BigInt) -> WceSign {
    match v.sign() {
        Sign::Plus => WceSign::Plus,
        Sign::Minus => WceSign::Minus,
        Sign::NoSign => WceSign::Zero,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{CircuitSpec, NetlistBuilder};
    use crate::cnfsys::build_system;
    use crate::pipeline::{build, PipelineConfig};

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn report_for(exact: &crate::circuit::Netlist, approx: &crate::circuit::Netlist, sel: Selection) -> MetricReport {
        let sys = build_system(exact, approx).unwrap();
        let built = build(&sys, &PipelineConfig::default()).unwrap();
        let engine = Engine::new(&built.tree);
        let a = Analyzer::new(&engine, sys.n());
        a.verify_total().unwrap();
        a.compute_all(sel).unwrap()
    }

    fn spec(s: &str) -> crate::circuit::Netlist {
        s.parse::<CircuitSpec>().unwrap().build().unwrap()
    }

    #[test]
    fn exact_against_itself() {
        let sel = Selection { pdf: true, ..Selection::ALL };
        let r = report_for(&spec("adder:3"), &spec("adder:3"), sel);
        assert_eq!(r.er, Some(BigRational::zero()));
        assert_eq!(r.mae, Some(BigRational::zero()));
        assert_eq!(r.mse, Some(BigRational::zero()));
        let w = r.wce.unwrap();
        assert_eq!((w.magnitude, w.sign, w.p_wce), (BigUint::zero(), WceSign::Zero, BigRational::one()));
        assert_eq!(r.pdf, Some(vec![(BigInt::zero(), BigRational::one())]));
    }

    #[test]
    fn width_two_truncated_by_one() {
        let sel = Selection { pdf: true, ..Selection::ALL };
        let r = report_for(&spec("adder:2"), &spec("trunc:2:1"), sel);
        assert_eq!(r.er, Some(ratio(1, 2)));
        assert_eq!(r.mae, Some(ratio(1, 2)));
        assert_eq!(r.mse, Some(ratio(1, 2)));
        let w = r.wce.unwrap();
        assert_eq!((w.magnitude, w.sign, w.p_wce), (BigUint::one(), WceSign::Plus, ratio(1, 2)));
        assert_eq!(r.pdf, Some(vec![(BigInt::zero(), ratio(1, 2)), (BigInt::one(), ratio(1, 2))]));
    }

    #[test]
    fn constant_zero_against_adder() {
        let r = report_for(&spec("adder:2"), &spec("const0:2"), Selection::ALL);
        let w = r.wce.unwrap();
        assert_eq!((w.magnitude, w.sign, w.p_wce), (BigUint::from(6u8), WceSign::Plus, ratio(1, 16)));
    }

    #[test]
    fn constant_zero_against_buffer() {
        let mut b = NetlistBuilder::new();
        let x = b.input();
        let buf = b.finish("buf", vec![x]);
        let mut b = NetlistBuilder::new();
        let _ = b.input();
        let z = b.const0();
        let zero = b.finish("zero", vec![z]);
        let r = report_for(&buf, &zero, Selection::ALL);
        assert_eq!(r.er, Some(ratio(1, 2)));
    }

    #[test]
    fn constant_negative_two() {
        // y = x (2 bits), ŷ = x + 2 (3 bits), so E = -2 everywhere
        let mut b = NetlistBuilder::new();
        let x = b.inputs(2);
        let exact = b.finish("x", x);
        let mut b = NetlistBuilder::new();
        let x = b.inputs(2);
        let one = b.const1();
        let hi = b.xor(x[1], one);
        let carry = b.and(x[1], one);
        let approx = b.finish("x+2", vec![x[0], hi, carry]);
        let r = report_for(&exact, &approx, Selection { pdf: true, ..Selection::ALL });
        assert_eq!(r.mse, Some(ratio(4, 1)));
        assert_eq!(r.mae, Some(ratio(2, 1)));
        let w = r.wce.unwrap();
        assert_eq!((w.magnitude, w.sign), (BigUint::from(2u8), WceSign::Minus));
        assert_eq!(r.pdf, Some(vec![(BigInt::from(-2), BigRational::one())]));
    }

    #[test]
    fn selection_parsing_and_empty() {
        assert_eq!("er".parse::<Selection>().unwrap(), Selection { er: true, ..Default::default() });
        assert_eq!("all".parse::<Selection>().unwrap(), Selection::ALL);
        assert!("bogus".parse::<Selection>().is_err());
        let r = report_for(&spec("adder:2"), &spec("adder:2"), "er".parse().unwrap());
        assert_eq!(r.er, Some(BigRational::zero()));
        assert!(r.mae.is_none() && r.wce.is_none());

        let sys = build_system(&spec("adder:2"), &spec("adder:2")).unwrap();
        let built = build(&sys, &PipelineConfig::default()).unwrap();
        let engine = Engine::new(&built.tree);
        let a = Analyzer::new(&engine, sys.n());
        assert_eq!(a.compute_all(Selection::default()), Err(Error::NoMetrics));
    }

    #[test]
    fn corruption_hook_shifts_pattern_counts() {
        let sys = build_system(&spec("adder:2"), &spec("loa:2:1")).unwrap();
        let built = build(&sys, &PipelineConfig::default()).unwrap();
        let engine = Engine::new(&built.tree);
        let clean = Analyzer::new(&engine, sys.n()).error_rate();
        let mut a = Analyzer::new(&engine, sys.n());
        a.corrupt_for_test();
        a.verify_total().unwrap();
        assert_eq!(a.error_rate(), clean - ratio(1, 16));
    }

    #[test]
    fn pdf_budget() {
        let sys = build_system(&spec("adder:4"), &spec("const0:4")).unwrap();
        let built = build(&sys, &PipelineConfig::default()).unwrap();
        let engine = Engine::new(&built.tree);
        let mut a = Analyzer::new(&engine, sys.n());
        a.query_budget = 8;
        assert!(matches!(a.error_pdf(None), Err(Error::QueryBudget { needed: 31, budget: 8 })));
        let part = a.error_pdf(Some((BigInt::from(0), BigInt::from(3)))).unwrap();
        assert_eq!(part.len(), 4);
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(decimal(&ratio(1, 2), 12), "0.5");
        assert_eq!(decimal(&ratio(1, 3), 12), "0.333333333333");
        assert_eq!(decimal(&ratio(2, 3), 4), "0.6667");
        assert_eq!(decimal(&ratio(-7, 1), 12), "-7");
        assert_eq!(decimal(&ratio(0, 1), 12), "0");
        assert_eq!(decimal(&ratio(123456, 1), 3), "123000");
        assert_eq!(decimal(&ratio(1, 100_000_000), 3), "1e-8");
        assert_eq!(decimal(&ratio(999_999, 1_000_000), 3), "1");
        let big = BigRational::from_integer(BigInt::one() << 236);
        assert_eq!(decimal(&big, 6), "1.10428e+71");
    }
}
