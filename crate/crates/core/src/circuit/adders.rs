//! Exact and approximate adder generators.
//!
//! All two-operand circuits take their inputs interleaved low-to-high:
//! `a0, b0, a1, b1, ...`, and produce `width + 1` outputs (sum bits then
//! carry-out).
//!
//! Approximate full-adder cells are given as truth tables over the row
//! index `4a + 2b + cin` and lowered to minimized two-level AND/OR
//! networks. Sources for the tables:
//!
//! * AMA1, AMA2, AMA5: approximations 1, 2 and 5 of the mirror adder of
//!   Gupta et al. (IEEE TCAD 2013). AMA1 keeps the carry correct except on
//!   row 010 and gets the sum wrong on rows 010 and 100; AMA2 computes the
//!   exact carry and `sum = !cout`; AMA5 is `sum = b`, `cout = a`.
//! * AXA2: the XNOR-based adder of Yang et al. (IEEE NANO 2013), with
//!   `sum = xnor(a, b)` and exact carry.

use super::{NetId, Netlist, NetlistBuilder};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AdderFamily {
    Exact,
    Trunc,
    Loa,
    Ama1,
    Ama2,
    Ama5,
    Axa2,
    Gear,
}

impl AdderFamily {
    pub const ALL: [AdderFamily; 8] = [
        AdderFamily::Exact,
        AdderFamily::Trunc,
        AdderFamily::Loa,
        AdderFamily::Ama1,
        AdderFamily::Ama2,
        AdderFamily::Ama5,
        AdderFamily::Axa2,
        AdderFamily::Gear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AdderFamily::Exact => "adder",
            AdderFamily::Trunc => "trunc",
            AdderFamily::Loa => "loa",
            AdderFamily::Ama1 => "ama1",
            AdderFamily::Ama2 => "ama2",
            AdderFamily::Ama5 => "ama5",
            AdderFamily::Axa2 => "axa2",
            AdderFamily::Gear => "gear",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s || (s == "exact" && *f == AdderFamily::Exact))
    }

    /// Cell truth table for the cell-substitution families.
    pub fn cell(self) -> Option<CellTable> {
        match self {
            AdderFamily::Ama1 => Some(ama1_cell()),
            AdderFamily::Ama2 => Some(ama2_cell()),
            AdderFamily::Ama5 => Some(ama5_cell()),
            AdderFamily::Axa2 => Some(axa2_cell()),
            _ => None,
        }
    }
}

/// Truth tables of a one-bit adder cell. Bit `4a + 2b + cin` of each byte
/// is the function value on that row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellTable {
    pub sum: u8,
    pub cout: u8,
}

impl CellTable {
    pub fn eval(self, a: bool, b: bool, cin: bool) -> (bool, bool) {
        let row = (usize::from(a) << 2) | (usize::from(b) << 1) | usize::from(cin);
        ((self.sum >> row) & 1 == 1, (self.cout >> row) & 1 == 1)
    }
}

pub fn exact_cell() -> CellTable {
    CellTable {
        sum: 0x96,
        cout: 0xE8,
    }
}

pub fn ama1_cell() -> CellTable {
    CellTable {
        sum: 0x82,
        cout: 0xEC,
    }
}

pub fn ama2_cell() -> CellTable {
    CellTable {
        sum: 0x17,
        cout: 0xE8,
    }
}

pub fn ama5_cell() -> CellTable {
    CellTable {
        sum: 0xCC,
        cout: 0xF0,
    }
}

pub fn axa2_cell() -> CellTable {
    CellTable {
        sum: 0xC3,
        cout: 0xE8,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AdderSpec {
    pub family: AdderFamily,
    pub width: usize,
    /// Number of approximated low bit positions.
    pub approx_bits: usize,
    /// GeAr result bits per sub-adder.
    pub gear_r: usize,
    /// GeAr prediction bits per sub-adder.
    pub gear_p: usize,
}

impl AdderSpec {
    pub fn exact(width: usize) -> Self {
        Self::new(AdderFamily::Exact, width, 0)
    }

    pub fn new(family: AdderFamily, width: usize, approx_bits: usize) -> Self {
        AdderSpec {
            family,
            width,
            approx_bits,
            gear_r: 0,
            gear_p: 0,
        }
    }

    pub fn gear(width: usize, r: usize, p: usize) -> Self {
        AdderSpec {
            family: AdderFamily::Gear,
            width,
            approx_bits: 0,
            gear_r: r,
            gear_p: p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 {
            return Err(Error::Spec("adder width must be at least 1".into()));
        }
        if self.approx_bits > self.width {
            return Err(Error::Spec(format!(
                "{} approximate bits exceed width {}",
                self.approx_bits, self.width
            )));
        }
        if self.family == AdderFamily::Gear
            && (self.gear_r == 0 || self.gear_r + self.gear_p > self.width)
        {
            return Err(Error::Spec(format!(
                "GeAr needs R >= 1 and R + P <= width (R={}, P={}, width={})",
                self.gear_r, self.gear_p, self.width
            )));
        }
        Ok(())
    }

    pub fn name(&self) -> String {
        match self.family {
            AdderFamily::Exact => format!("adder_w{}", self.width),
            AdderFamily::Gear => format!("gear_w{}_r{}_p{}", self.width, self.gear_r, self.gear_p),
            f => format!("{}_w{}_k{}", f.name(), self.width, self.approx_bits),
        }
    }
}

/// Builds a standalone two-operand adder netlist.
pub fn generate_adder(spec: &AdderSpec) -> Result<Netlist> {
    spec.validate()?;
    let mut b = NetlistBuilder::new();
    let mut xs = Vec::with_capacity(spec.width);
    let mut ys = Vec::with_capacity(spec.width);
    for _ in 0..spec.width {
        xs.push(b.input());
        ys.push(b.input());
    }
    let out = add_operands(&mut b, &xs, &ys, spec);
    Ok(b.finish(spec.name(), out))
}

fn full_adder(b: &mut NetlistBuilder, x: NetId, y: NetId, c: NetId, want_sum: bool) -> (Option<NetId>, NetId) {
    let p = b.xor(x, y);
    let s = want_sum.then(|| b.xor(p, c));
    let g = b.and(x, y);
    let t = b.and(p, c);
    (s, b.or(g, t))
}

fn half_adder(b: &mut NetlistBuilder, x: NetId, y: NetId, want_sum: bool) -> (Option<NetId>, NetId) {
    let s = want_sum.then(|| b.xor(x, y));
    (s, b.and(x, y))
}

/// Exact ripple chain over `xs`/`ys`; `want_sum(i)` selects which sum bits
/// are materialized.
fn ripple(
    b: &mut NetlistBuilder,
    xs: &[NetId],
    ys: &[NetId],
    mut carry: Option<NetId>,
    want_sum: impl Fn(usize) -> bool,
) -> (Vec<Option<NetId>>, Option<NetId>) {
    let mut sums = Vec::with_capacity(xs.len());
    for (i, (&x, &y)) in xs.iter().zip(ys).enumerate() {
        let (s, c) = match carry {
            None => half_adder(b, x, y, want_sum(i)),
            Some(c) => full_adder(b, x, y, c, want_sum(i)),
        };
        sums.push(s);
        carry = Some(c);
    }
    (sums, carry)
}

/// Adds two equal-width operands inside `b` according to `spec` (the
/// operand nets fix the width). Returns `width + 1` result nets.
pub fn add_operands(b: &mut NetlistBuilder, xs: &[NetId], ys: &[NetId], spec: &AdderSpec) -> Vec<NetId> {
    assert_eq!(xs.len(), ys.len(), "operand widths");
    let w = xs.len();
    let k = spec.approx_bits.min(w);
    let mut out = Vec::with_capacity(w + 1);
    let carry_in: Option<NetId> = match spec.family {
        AdderFamily::Exact => None,
        AdderFamily::Trunc => {
            // low sums are dropped, their carry still reaches the upper part
            let (_, c) = ripple(b, &xs[..k], &ys[..k], None, |_| false);
            let z = b.const0();
            out.extend(std::iter::repeat_n(z, k));
            c
        }
        AdderFamily::Loa => {
            for i in 0..k {
                out.push(b.or(xs[i], ys[i]));
            }
            (k > 0).then(|| b.and(xs[k - 1], ys[k - 1]))
        }
        AdderFamily::Ama1 | AdderFamily::Ama2 | AdderFamily::Ama5 | AdderFamily::Axa2 => {
            let cell = spec.family.cell().expect("cell family");
            let mut c = None;
            for i in 0..k {
                let cin = match c {
                    Some(c) => c,
                    None => b.const0(),
                };
                let (s, co) = sop_cell(b, cell, xs[i], ys[i], cin);
                out.push(s);
                c = Some(co);
            }
            c
        }
        AdderFamily::Gear => return gear(b, xs, ys, spec.gear_r, spec.gear_p),
    };
    let lo = out.len();
    let (sums, carry) = ripple(b, &xs[lo..], &ys[lo..], carry_in, |_| true);
    out.extend(sums.into_iter().map(|s| s.expect("sum requested")));
    let cout = match carry.or(carry_in) {
        Some(c) => c,
        None => b.const0(),
    };
    out.push(cout);
    out
}

fn gear(b: &mut NetlistBuilder, xs: &[NetId], ys: &[NetId], r: usize, p: usize) -> Vec<NetId> {
    let w = xs.len();
    let l = (r + p).min(w);
    let mut out: Vec<NetId> = Vec::with_capacity(w + 1);
    let mut cout = None;
    let mut start = 0;
    while out.len() < w {
        let produced = out.len();
        let (sums, c) = ripple(b, &xs[start..start + l], &ys[start..start + l], None, |i| {
            start + i >= produced
        });
        for (i, s) in sums.into_iter().enumerate() {
            if start + i >= produced {
                out.push(s.expect("sum requested"));
            }
        }
        cout = c;
        start = if start + r + l <= w { start + r } else { w - l };
    }
    out.push(cout.expect("non-empty adder"));
    out
}

/// Lowers a cell truth table to minimized sum-of-products networks.
fn sop_cell(b: &mut NetlistBuilder, cell: CellTable, x: NetId, y: NetId, c: NetId) -> (NetId, NetId) {
    let mut lits = Literals {
        pos: [x, y, c],
        neg: [None; 3],
    };
    let s = sop(b, &mut lits, cell.sum);
    let co = sop(b, &mut lits, cell.cout);
    (s, co)
}

struct Literals {
    pos: [NetId; 3],
    neg: [Option<NetId>; 3],
}

impl Literals {
    // variable 0 is the most significant row bit (a)
    fn get(&mut self, b: &mut NetlistBuilder, var: usize, positive: bool) -> NetId {
        if positive {
            self.pos[var]
        } else {
            *self.neg[var].get_or_insert_with(|| b.not(self.pos[var]))
        }
    }
}

/// A cube over three variables: `care` bit `v` set means variable `v` is
/// fixed to the matching bit of `value`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Cube {
    care: u8,
    value: u8,
}

impl Cube {
    fn minterms(self) -> u8 {
        (0..8u8)
            .filter(|&row| (0..3).all(|v| self.care >> v & 1 == 0 || (self.value >> v & 1) == (var_bit(row, v))))
            .fold(0, |acc, row| acc | (1 << row))
    }
}

// variable v of a row index 4a + 2b + c: v=0 -> a, 1 -> b, 2 -> c
fn var_bit(row: u8, v: usize) -> u8 {
    (row >> (2 - v)) & 1
}

fn prime_cover(on: u8) -> Vec<Cube> {
    let mut implicants = Vec::new();
    for care in 0..8u8 {
        for value in 0..8u8 {
            if value & !care != 0 {
                continue;
            }
            let cube = Cube { care, value };
            let m = cube.minterms();
            if m & !on == 0 {
                implicants.push((cube, m));
            }
        }
    }
    let primes: Vec<(Cube, u8)> = implicants
        .iter()
        .copied()
        .filter(|&(_, m)| !implicants.iter().any(|&(_, m2)| m2 != m && m2 & m == m))
        .collect();
    let mut uncovered = on;
    let mut cover = Vec::new();
    while uncovered != 0 {
        let (cube, m) = primes
            .iter()
            .copied()
            .max_by_key(|&(cube, m)| ((m & uncovered).count_ones(), 3 - cube.care.count_ones()))
            .expect("every minterm has a prime");
        cover.push(cube);
        uncovered &= !m;
    }
    cover
}

fn sop(b: &mut NetlistBuilder, lits: &mut Literals, table: u8) -> NetId {
    match table {
        0x00 => return b.const0(),
        0xFF => return b.const1(),
        _ => {}
    }
    let mut terms = Vec::new();
    for cube in prime_cover(table) {
        let ins: Vec<NetId> = (0..3)
            .filter(|&v| cube.care >> v & 1 == 1)
            .map(|v| lits.get(b, v, cube.value >> v & 1 == 1))
            .collect();
        terms.push(match ins.len() {
            1 => ins[0],
            _ => b.gate(super::GateKind::And, ins),
        });
    }
    match terms.len() {
        1 => terms[0],
        _ => b.gate(super::GateKind::Or, terms),
    }
}

/// Sums little-endian operands of arbitrary widths pairwise in a balanced
/// tree, using `spec.family` (with its approximation parameters clamped to
/// each adder's width) for every two-input addition. Operands are
/// zero-extended to a common width before each addition.
pub fn adder_tree(b: &mut NetlistBuilder, operands: Vec<Vec<NetId>>, spec: &AdderSpec) -> Vec<NetId> {
    assert!(!operands.is_empty(), "adder tree needs operands");
    let mut level = operands;
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        let mut it = level.into_iter();
        while let Some(mut x) = it.next() {
            match it.next() {
                None => next.push(x),
                Some(mut y) => {
                    let w = x.len().max(y.len());
                    let z = b.const0();
                    x.resize(w, z);
                    y.resize(w, z);
                    let mut s = *spec;
                    s.width = w;
                    s.approx_bits = s.approx_bits.min(w);
                    if s.family == AdderFamily::Gear && s.gear_r + s.gear_p > w {
                        s.family = AdderFamily::Exact;
                    }
                    next.push(add_operands(b, &x, &y, &s));
                }
            }
        }
        level = next;
    }
    level.pop().expect("one operand left")
}

/// Array multiplier: partial products `a & b_j` shifted by `j` and summed by
/// [`adder_tree`]. Inputs are interleaved; the `2 * width` low product bits
/// are the outputs.
pub fn multiplier(width: usize, spec: &AdderSpec) -> Result<Netlist> {
    if width == 0 {
        return Err(Error::Spec("multiplier width must be at least 1".into()));
    }
    let mut b = NetlistBuilder::new();
    let mut xs = Vec::with_capacity(width);
    let mut ys = Vec::with_capacity(width);
    for _ in 0..width {
        xs.push(b.input());
        ys.push(b.input());
    }
    let mut pps = Vec::with_capacity(width);
    for (j, &yj) in ys.iter().enumerate() {
        let z = b.const0();
        let mut pp = vec![z; j];
        for &xi in &xs {
            pp.push(b.and(xi, yj));
        }
        pps.push(pp);
    }
    let mut out = adder_tree(&mut b, pps, spec);
    let z = b.const0();
    out.resize(2 * width, z);
    let name = match spec.family {
        AdderFamily::Exact => format!("mult_w{width}"),
        _ => format!("mult_w{width}_{}", spec.name()),
    };
    Ok(b.finish(name, out))
}

/// 3x3 Gaussian smoothing kernel `[1 2 1; 2 4 2; 1 2 1]` over nine
/// `width`-bit pixels (pixel-major input order). Outputs the full weighted
/// sum, `width + 4` bits.
pub fn gaussian3x3(width: usize, spec: &AdderSpec) -> Result<Netlist> {
    if width == 0 {
        return Err(Error::Spec("pixel width must be at least 1".into()));
    }
    const SHIFTS: [usize; 9] = [0, 1, 0, 1, 2, 1, 0, 1, 0];
    let mut b = NetlistBuilder::new();
    let pixels: Vec<Vec<NetId>> = (0..9).map(|_| b.inputs(width)).collect();
    let mut operands = Vec::with_capacity(9);
    for (px, &sh) in pixels.into_iter().zip(SHIFTS.iter()) {
        let z = b.const0();
        let mut op = vec![z; sh];
        op.extend(px);
        operands.push(op);
    }
    let mut out = adder_tree(&mut b, operands, spec);
    let z = b.const0();
    out.resize(width + 4, z);
    let name = match spec.family {
        AdderFamily::Exact => format!("gauss_w{width}"),
        _ => format!("gauss_w{width}_{}", spec.name()),
    };
    Ok(b.finish(name, out))
}
