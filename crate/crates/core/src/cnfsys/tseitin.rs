use super::{Clause, Lit, Var};
use crate::circuit::{GateKind, Netlist};

/// Hands out consecutive variable ids starting at 1.
#[derive(Debug, Default)]
pub struct VarAllocator {
    last: Var,
}

impl VarAllocator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fresh(&mut self) -> Var {
        self.last += 1;
        self.last
    }

    pub fn num_vars(&self) -> u32 {
        self.last
    }
}

/// Tseitin-encodes `netlist` with its primary inputs bound to `inputs`.
/// Every gate output gets a fresh variable, except constants: each use of
/// a constant net (as a gate input or an output) gets its own unit-clause
/// variable, so a shared constant does not tie distant gates together.
/// Returns the clauses and the variables of the netlist outputs.
pub fn tseitin(netlist: &Netlist, alloc: &mut VarAllocator, inputs: &[Var]) -> (Vec<Clause>, Vec<Var>) {
    assert_eq!(inputs.len(), netlist.inputs().len(), "one variable per primary input");
    let mut var = vec![0 as Var; netlist.num_nets()];
    let mut constant: Vec<Option<GateKind>> = vec![None; netlist.num_nets()];
    for (&net, &v) in netlist.inputs().iter().zip(inputs) {
        var[net] = v;
    }
    let mut clauses = Vec::new();
    for g in netlist.gates() {
        if matches!(g.kind, GateKind::Const0 | GateKind::Const1) {
            constant[g.output] = Some(g.kind);
            continue;
        }
        let xs: Vec<Lit> = g.inputs.iter().map(|&n| var_of(n, &var, &constant, alloc, &mut clauses) as Lit).collect();
        let z = alloc.fresh();
        var[g.output] = z;
        encode(g.kind, z as Lit, &xs, &mut clauses);
    }
    let outputs = netlist.outputs().iter().map(|&n| var_of(n, &var, &constant, alloc, &mut clauses)).collect();
    (clauses, outputs)
}

fn var_of(net: usize, var: &[Var], constant: &[Option<GateKind>], alloc: &mut VarAllocator, clauses: &mut Vec<Clause>) -> Var {
    match constant[net] {
        Some(kind) => {
            let z = alloc.fresh();
            encode(kind, z as Lit, &[], clauses);
            z
        }
        None => var[net],
    }
}

fn encode(kind: GateKind, z: Lit, xs: &[Lit], out: &mut Vec<Clause>) {
    match kind {
        GateKind::And => and(z, xs, out),
        GateKind::Nand => and(-z, xs, out),
        GateKind::Or => or(z, xs, out),
        GateKind::Nor => or(-z, xs, out),
        GateKind::Xor => xor(z, xs[0], xs[1], out),
        GateKind::Xnor => xor(-z, xs[0], xs[1], out),
        GateKind::Not => {
            out.push(vec![z, xs[0]]);
            out.push(vec![-z, -xs[0]]);
        }
        GateKind::Const0 => out.push(vec![-z]),
        GateKind::Const1 => out.push(vec![z]),
    }
}

fn and(z: Lit, xs: &[Lit], out: &mut Vec<Clause>) {
    for &x in xs {
        out.push(vec![-z, x]);
    }
    let mut last = vec![z];
    last.extend(xs.iter().map(|&x| -x));
    out.push(last);
}

fn or(z: Lit, xs: &[Lit], out: &mut Vec<Clause>) {
    for &x in xs {
        out.push(vec![z, -x]);
    }
    let mut last = vec![-z];
    last.extend_from_slice(xs);
    out.push(last);
}

fn xor(z: Lit, x: Lit, y: Lit, out: &mut Vec<Clause>) {
    out.push(vec![-z, x, y]);
    out.push(vec![-z, -x, -y]);
    out.push(vec![z, -x, y]);
    out.push(vec![z, x, -y]);
}
