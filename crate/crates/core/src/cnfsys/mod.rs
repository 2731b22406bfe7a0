//! The error-analysis system: exact and approximate circuits over shared
//! inputs feeding a two's-complement subtractor, encoded as CNF.
//!
//! Variables are 1-based DIMACS ids. The error bits `e_0..e_m` are the
//! subtractor outputs; `e_m` is the sign bit.

mod dimacs;
mod tseitin;

pub use dimacs::{read_dimacs, write_dimacs};
pub use tseitin::{tseitin, VarAllocator};

use crate::circuit::{Netlist, NetlistBuilder};
use crate::error::{Error, Result};

pub type Var = u32;
/// DIMACS literal: `v` or `-v`.
pub type Lit = i32;
pub type Clause = Vec<Lit>;

#[inline]
pub fn lit_var(l: Lit) -> Var {
    l.unsigned_abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Input(usize),
    Error(usize),
    Internal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfSystem {
    num_vars: u32,
    clauses: Vec<Clause>,
    input_vars: Vec<Var>,
    error_vars: Vec<Var>,
}

impl CnfSystem {
    pub fn new(num_vars: u32, clauses: Vec<Clause>, input_vars: Vec<Var>, error_vars: Vec<Var>) -> Result<Self> {
        let in_range = |v: Var| v >= 1 && v <= num_vars;
        for (i, c) in clauses.iter().enumerate() {
            if let Some(&l) = c.iter().find(|&&l| l == 0 || !in_range(lit_var(l))) {
                return Err(Error::Invariant(format!("clause {i}: literal {l} out of range")));
            }
        }
        let mut seen = vec![false; num_vars as usize + 1];
        for &v in input_vars.iter().chain(&error_vars) {
            if !in_range(v) {
                return Err(Error::Invariant(format!("role variable {v} out of range")));
            }
            if std::mem::replace(&mut seen[v as usize], true) {
                return Err(Error::Invariant(format!("variable {v} has two roles")));
            }
        }
        if error_vars.is_empty() {
            return Err(Error::ErrorBitsUnannotated);
        }
        Ok(CnfSystem {
            num_vars,
            clauses,
            input_vars,
            error_vars,
        })
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn input_vars(&self) -> &[Var] {
        &self.input_vars
    }

    /// `e_0..e_m`, sign bit last.
    pub fn error_vars(&self) -> &[Var] {
        &self.error_vars
    }

    /// Number of primary inputs.
    pub fn n(&self) -> usize {
        self.input_vars.len()
    }

    /// Index of the sign bit.
    pub fn m(&self) -> usize {
        self.error_vars.len() - 1
    }

    pub fn role(&self, v: Var) -> Role {
        if let Some(i) = self.input_vars.iter().position(|&x| x == v) {
            Role::Input(i)
        } else if let Some(i) = self.error_vars.iter().position(|&x| x == v) {
            Role::Error(i)
        } else {
            Role::Internal
        }
    }
}

/// Builds `exact || approx` over shared inputs plus the subtractor computing
/// `E = y - ŷ` as `y + ~ŷ + 1` on `m + 1` bits, where `m` is the wider of the
/// two output widths.
pub fn build_system(exact: &Netlist, approx: &Netlist) -> Result<CnfSystem> {
    let n = exact.inputs().len();
    if approx.inputs().len() != n {
        return Err(Error::ArityMismatch {
            exact: n,
            approx: approx.inputs().len(),
        });
    }
    let m = exact.outputs().len().max(approx.outputs().len());
    let sub = subtractor(exact.outputs().len(), approx.outputs().len(), m);

    let mut alloc = VarAllocator::new();
    let inputs: Vec<Var> = (0..n).map(|_| alloc.fresh()).collect();
    let mut clauses = Vec::new();
    let (c, y) = tseitin(exact, &mut alloc, &inputs);
    clauses.extend(c);
    let (c, y_hat) = tseitin(approx, &mut alloc, &inputs);
    clauses.extend(c);
    let sub_inputs: Vec<Var> = y.iter().chain(&y_hat).copied().collect();
    let (c, errors) = tseitin(&sub, &mut alloc, &sub_inputs);
    clauses.extend(c);
    CnfSystem::new(alloc.num_vars(), clauses, inputs, errors)
}

/// Ripple subtractor netlist: inputs are the `wy` bits of y followed by the
/// `wh` bits of ŷ, outputs the `m + 1` bits of y - ŷ.
fn subtractor(wy: usize, wh: usize, m: usize) -> Netlist {
    let mut b = NetlistBuilder::new();
    let y = b.inputs(wy);
    let yh = b.inputs(wh);
    let mut carry = b.const1();
    let mut out = Vec::with_capacity(m + 1);
    for i in 0..=m {
        let yi = match y.get(i) {
            Some(&x) => x,
            None => b.const0(),
        };
        let ni = match yh.get(i) {
            Some(&x) => b.not(x),
            None => b.const1(),
        };
        let p = b.xor(yi, ni);
        out.push(b.xor(p, carry));
        if i < m {
            let g = b.and(yi, ni);
            let t = b.and(p, carry);
            carry = b.or(g, t);
        }
    }
    b.finish("subtractor", out)
}
