//! Gate-level combinational netlists.
//!
//! A [`Netlist`] is a list of primary inputs, a topologically ordered gate
//! list and a list of output nets. Nets are dense integer ids; every net is
//! driven exactly once, either as a primary input or as the output of one
//! gate.

mod adders;
mod aig;
mod spec;

pub use adders::{
    add_operands, adder_tree, ama1_cell, ama2_cell, ama5_cell, axa2_cell, exact_cell, gaussian3x3,
    generate_adder, multiplier, AdderFamily, AdderSpec, CellTable,
};
pub use aig::{parse_aig, write_aig};
pub use spec::CircuitSpec;

use std::fmt;

use crate::error::{Error, Result};

pub type NetId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    And,
    Or,
    Xor,
    Not,
    Nand,
    Nor,
    Xnor,
    Const0,
    Const1,
}

impl GateKind {
    fn arity_ok(self, n: usize) -> bool {
        match self {
            GateKind::Const0 | GateKind::Const1 => n == 0,
            GateKind::Not => n == 1,
            GateKind::Xor | GateKind::Xnor => n == 2,
            GateKind::And | GateKind::Or | GateKind::Nand | GateKind::Nor => n >= 2,
        }
    }

    /// Evaluates the gate on 64 input patterns at once.
    pub fn eval_words(self, inputs: &[u64]) -> u64 {
        match self {
            GateKind::And => inputs.iter().fold(!0, |acc, &x| acc & x),
            GateKind::Or => inputs.iter().fold(0, |acc, &x| acc | x),
            GateKind::Xor => inputs[0] ^ inputs[1],
            GateKind::Not => !inputs[0],
            GateKind::Nand => !inputs.iter().fold(!0, |acc, &x| acc & x),
            GateKind::Nor => !inputs.iter().fold(0, |acc, &x| acc | x),
            GateKind::Xnor => !(inputs[0] ^ inputs[1]),
            GateKind::Const0 => 0,
            GateKind::Const1 => !0,
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GateKind::And => "AND",
            GateKind::Or => "OR",
            GateKind::Xor => "XOR",
            GateKind::Not => "NOT",
            GateKind::Nand => "NAND",
            GateKind::Nor => "NOR",
            GateKind::Xnor => "XNOR",
            GateKind::Const0 => "CONST0",
            GateKind::Const1 => "CONST1",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    pub kind: GateKind,
    pub inputs: Vec<NetId>,
    pub output: NetId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Netlist {
    name: String,
    num_nets: usize,
    inputs: Vec<NetId>,
    outputs: Vec<NetId>,
    gates: Vec<Gate>,
}

impl Netlist {
    /// Checks the structural invariants and builds the netlist: gates are in
    /// topological order, each net is driven once and every reference
    /// resolves.
    pub fn new(
        name: impl Into<String>,
        num_nets: usize,
        inputs: Vec<NetId>,
        outputs: Vec<NetId>,
        gates: Vec<Gate>,
    ) -> Result<Self> {
        let mut defined = vec![false; num_nets];
        fn define(defined: &mut [bool], net: NetId, what: &str) -> Result<()> {
            match defined.get_mut(net) {
                None => Err(Error::Netlist(format!("{what} net {net} out of range"))),
                Some(true) => Err(Error::Netlist(format!("net {net} driven more than once"))),
                Some(d) => {
                    *d = true;
                    Ok(())
                }
            }
        }
        for &i in &inputs {
            define(&mut defined, i, "input")?;
        }
        for g in &gates {
            if !g.kind.arity_ok(g.inputs.len()) {
                return Err(Error::Netlist(format!(
                    "{} gate driving net {} has {} inputs",
                    g.kind,
                    g.output,
                    g.inputs.len()
                )));
            }
            for &x in &g.inputs {
                if !defined.get(x).copied().unwrap_or(false) {
                    return Err(Error::Netlist(format!(
                        "gate driving net {} reads net {x} before it is defined",
                        g.output
                    )));
                }
            }
            define(&mut defined, g.output, "gate output")?;
        }
        for &o in &outputs {
            if !defined.get(o).copied().unwrap_or(false) {
                return Err(Error::Netlist(format!("output net {o} is undefined")));
            }
        }
        Ok(Netlist {
            name: name.into(),
            num_nets,
            inputs,
            outputs,
            gates,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_nets(&self) -> usize {
        self.num_nets
    }

    pub fn inputs(&self) -> &[NetId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[NetId] {
        &self.outputs
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Evaluates the outputs for one input assignment.
    ///
    /// Panics if `assignment.len()` differs from the number of inputs.
    pub fn simulate(&self, assignment: &[bool]) -> Vec<bool> {
        assert_eq!(assignment.len(), self.inputs.len(), "input arity");
        let words: Vec<u64> = assignment.iter().map(|&b| if b { !0 } else { 0 }).collect();
        self.simulate_words(&words)
            .into_iter()
            .map(|w| w & 1 == 1)
            .collect()
    }

    /// Bit-parallel simulation: bit `k` of every word is an independent
    /// input pattern.
    pub fn simulate_words(&self, assignment: &[u64]) -> Vec<u64> {
        assert_eq!(assignment.len(), self.inputs.len(), "input arity");
        let values = self.net_values(assignment);
        self.outputs.iter().map(|&o| values[o]).collect()
    }

    /// Bit-parallel values of every net.
    pub fn net_values(&self, assignment: &[u64]) -> Vec<u64> {
        let mut values = vec![0u64; self.num_nets];
        for (&net, &v) in self.inputs.iter().zip(assignment) {
            values[net] = v;
        }
        let mut scratch = Vec::with_capacity(4);
        for g in &self.gates {
            scratch.clear();
            scratch.extend(g.inputs.iter().map(|&x| values[x]));
            values[g.output] = g.kind.eval_words(&scratch);
        }
        values
    }

    /// Copies this netlist's gates into `builder`, with primary input `i`
    /// bound to `input_nets[i]`. Returns the builder nets of the outputs.
    pub fn instantiate(&self, builder: &mut NetlistBuilder, input_nets: &[NetId]) -> Vec<NetId> {
        assert_eq!(input_nets.len(), self.inputs.len(), "input arity");
        let mut map = vec![usize::MAX; self.num_nets];
        for (&net, &outer) in self.inputs.iter().zip(input_nets) {
            map[net] = outer;
        }
        for g in &self.gates {
            let ins: Vec<NetId> = g.inputs.iter().map(|&x| map[x]).collect();
            map[g.output] = builder.gate(g.kind, ins);
        }
        self.outputs.iter().map(|&o| map[o]).collect()
    }
}

/// Incremental netlist construction. Gates are appended in topological
/// order by construction.
#[derive(Debug, Default)]
pub struct NetlistBuilder {
    next: NetId,
    inputs: Vec<NetId>,
    gates: Vec<Gate>,
    const0: Option<NetId>,
    const1: Option<NetId>,
}

impl NetlistBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn input(&mut self) -> NetId {
        let n = self.fresh();
        self.inputs.push(n);
        n
    }

    pub fn inputs(&mut self, count: usize) -> Vec<NetId> {
        (0..count).map(|_| self.input()).collect()
    }

    fn fresh(&mut self) -> NetId {
        let n = self.next;
        self.next += 1;
        n
    }

    pub fn gate(&mut self, kind: GateKind, inputs: Vec<NetId>) -> NetId {
        let output = self.fresh();
        self.gates.push(Gate {
            kind,
            inputs,
            output,
        });
        output
    }

    pub fn and(&mut self, a: NetId, b: NetId) -> NetId {
        self.gate(GateKind::And, vec![a, b])
    }

    pub fn or(&mut self, a: NetId, b: NetId) -> NetId {
        self.gate(GateKind::Or, vec![a, b])
    }

    pub fn xor(&mut self, a: NetId, b: NetId) -> NetId {
        self.gate(GateKind::Xor, vec![a, b])
    }

    pub fn not(&mut self, a: NetId) -> NetId {
        self.gate(GateKind::Not, vec![a])
    }

    /// Shared constant-0 net.
    pub fn const0(&mut self) -> NetId {
        match self.const0 {
            Some(n) => n,
            None => {
                let n = self.gate(GateKind::Const0, Vec::new());
                self.const0 = Some(n);
                n
            }
        }
    }

    /// Shared constant-1 net.
    pub fn const1(&mut self) -> NetId {
        match self.const1 {
            Some(n) => n,
            None => {
                let n = self.gate(GateKind::Const1, Vec::new());
                self.const1 = Some(n);
                n
            }
        }
    }

    pub fn finish(self, name: impl Into<String>, outputs: Vec<NetId>) -> Netlist {
        Netlist::new(name, self.next, self.inputs, outputs, self.gates)
            .expect("builder produces well-formed netlists")
    }
}

/// Input vector for a two-operand circuit with interleaved operand bits
/// (`a0, b0, a1, b1, ...`).
pub fn interleave_operands(width: usize, a: u128, b: u128) -> Vec<bool> {
    (0..width)
        .flat_map(|i| [(a >> i) & 1 == 1, (b >> i) & 1 == 1])
        .collect()
}

/// Reads an output vector as an unsigned little-endian integer.
pub fn bits_to_u128(bits: &[bool]) -> u128 {
    bits.iter()
        .enumerate()
        .fold(0, |acc, (i, &b)| acc | (u128::from(b) << i))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xor_semantics() {
        let mut b = NetlistBuilder::new();
        let x = b.input();
        let y = b.input();
        let z = b.xor(x, y);
        let n = b.finish("xor", vec![z]);
        assert_eq!(n.simulate(&[true, true]), vec![false]);
        assert_eq!(n.simulate(&[true, false]), vec![true]);
        assert_eq!(n.simulate(&[false, false]), vec![false]);
    }

    #[test]
    fn every_gate_kind_matches_boolean_semantics() {
        let cases = [
            (GateKind::And, [false, false, false, true]),
            (GateKind::Or, [false, true, true, true]),
            (GateKind::Xor, [false, true, true, false]),
            (GateKind::Nand, [true, true, true, false]),
            (GateKind::Nor, [true, false, false, false]),
            (GateKind::Xnor, [true, false, false, true]),
        ];
        for (kind, table) in cases {
            let mut b = NetlistBuilder::new();
            let x = b.input();
            let y = b.input();
            let z = b.gate(kind, vec![x, y]);
            let n = b.finish("g", vec![z]);
            for (k, &want) in table.iter().enumerate() {
                let got = n.simulate(&[k & 1 == 1, k & 2 == 2])[0];
                assert_eq!(got, want, "{kind} on {k:02b}");
            }
        }
    }

    #[test]
    fn rejects_use_before_definition() {
        let gates = vec![Gate {
            kind: GateKind::Not,
            inputs: vec![2],
            output: 1,
        }];
        assert!(Netlist::new("bad", 3, vec![0], vec![1], gates).is_err());
    }

    #[test]
    fn rejects_double_driver() {
        let gates = vec![Gate {
            kind: GateKind::Not,
            inputs: vec![0],
            output: 0,
        }];
        assert!(Netlist::new("bad", 1, vec![0], vec![0], gates).is_err());
    }

    #[test]
    fn rejects_dangling_output() {
        assert!(Netlist::new("bad", 2, vec![0], vec![1], Vec::new()).is_err());
    }

    #[test]
    fn rejects_bad_arity() {
        let gates = vec![Gate {
            kind: GateKind::Xor,
            inputs: vec![0],
            output: 1,
        }];
        assert!(Netlist::new("bad", 2, vec![0], vec![1], gates).is_err());
    }

    #[test]
    fn instantiate_rebinds_inputs() {
        let mut inner = NetlistBuilder::new();
        let x = inner.input();
        let y = inner.input();
        let z = inner.and(x, y);
        let inner = inner.finish("and", vec![z]);

        let mut outer = NetlistBuilder::new();
        let p = outer.input();
        let q = outer.input();
        let nq = outer.not(q);
        let out = inner.instantiate(&mut outer, &[p, nq]);
        let n = outer.finish("wrap", out);
        assert_eq!(n.simulate(&[true, false]), vec![true]);
        assert_eq!(n.simulate(&[true, true]), vec![false]);
    }
}
