//! Combinational subset of the ASCII AIGER format (`aag`).

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{GateKind, NetId, Netlist, NetlistBuilder};
use crate::error::{Error, Result};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::AigParse {
        line,
        msg: msg.into(),
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok((i + 1, l))
            }
            None => Err(parse_err(self.last + 1, format!("unexpected end of document, expected {what}"))),
        }
    }
}

fn literals<const N: usize>(line: usize, text: &str, what: &str) -> Result<[usize; N]> {
    let mut out = [0usize; N];
    let mut fields = text.split_ascii_whitespace();
    for slot in out.iter_mut() {
        let f = fields
            .next()
            .ok_or_else(|| parse_err(line, format!("{what}: expected {N} literal(s)")))?;
        *slot = f
            .parse()
            .map_err(|_| parse_err(line, format!("{what}: {f:?} is not a literal")))?;
    }
    if fields.next().is_some() {
        return Err(parse_err(line, format!("{what}: trailing fields")));
    }
    Ok(out)
}

/// Parses an ASCII AIGER document into an AND/NOT netlist. Input and output
/// order follow the document's declaration order.
pub fn parse_aig(text: &str) -> Result<Netlist> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let (hline, header) = lines.next_line("header")?;
    let mut fields = header.split_ascii_whitespace();
    if fields.next() != Some("aag") {
        return Err(parse_err(hline, "header must start with 'aag'"));
    }
    let nums: Vec<usize> = fields
        .map(|f| f.parse().map_err(|_| parse_err(hline, format!("bad header field {f:?}"))))
        .collect::<Result<_>>()?;
    if nums.len() < 5 {
        return Err(parse_err(hline, "header needs M I L O A"));
    }
    let (max_var, ni, nl, no, na) = (nums[0], nums[1], nums[2], nums[3], nums[4]);
    if nl > 0 {
        return Err(Error::Sequential { line: hline });
    }
    if nums.len() > 9 || nums[5..].iter().any(|&x| x > 0) {
        return Err(parse_err(hline, "bad-state, constraint, justice and fairness sections are unsupported"));
    }
    if ni + na > max_var {
        return Err(parse_err(hline, "M is smaller than I + A"));
    }

    // AIGER variable -> defining line, for error reporting
    let mut defined: HashMap<usize, usize> = HashMap::new();
    let mut b = NetlistBuilder::new();
    let mut var_net: HashMap<usize, NetId> = HashMap::new();

    let check_var = |line: usize, lit: usize| -> Result<()> {
        if lit / 2 > max_var {
            return Err(parse_err(line, format!("literal {lit} exceeds M = {max_var}")));
        }
        Ok(())
    };

    for _ in 0..ni {
        let (ln, l) = lines.next_line("input")?;
        let [lit] = literals::<1>(ln, l, "input")?;
        check_var(ln, lit)?;
        if lit < 2 || lit % 2 == 1 {
            return Err(parse_err(ln, format!("input literal {lit} must be even and non-constant")));
        }
        if defined.insert(lit / 2, ln).is_some() {
            return Err(parse_err(ln, format!("variable {} defined twice", lit / 2)));
        }
        var_net.insert(lit / 2, b.input());
    }
    let mut outputs = Vec::with_capacity(no);
    for _ in 0..no {
        let (ln, l) = lines.next_line("output")?;
        let [lit] = literals::<1>(ln, l, "output")?;
        check_var(ln, lit)?;
        outputs.push((ln, lit));
    }
    let mut ands: Vec<(usize, usize, [usize; 2])> = Vec::with_capacity(na);
    let mut and_def: HashMap<usize, usize> = HashMap::new();
    for _ in 0..na {
        let (ln, l) = lines.next_line("and gate")?;
        let [lhs, r0, r1] = literals::<3>(ln, l, "and gate")?;
        for lit in [lhs, r0, r1] {
            check_var(ln, lit)?;
        }
        if lhs < 2 || lhs % 2 == 1 {
            return Err(parse_err(ln, format!("and-gate output {lhs} must be even and non-constant")));
        }
        if defined.insert(lhs / 2, ln).is_some() {
            return Err(parse_err(ln, format!("variable {} defined twice", lhs / 2)));
        }
        and_def.insert(lhs / 2, ands.len());
        ands.push((ln, lhs / 2, [r0, r1]));
    }
    // symbol table and comments
    while let Ok((ln, l)) = lines.next_line("symbol") {
        let t = l.trim();
        if t == "c" {
            break;
        }
        if t.is_empty() {
            continue;
        }
        let kind = t.as_bytes()[0];
        if kind == b'l' {
            return Err(Error::Sequential { line: ln });
        }
        if !matches!(kind, b'i' | b'o') {
            return Err(parse_err(ln, format!("unexpected line {t:?}")));
        }
    }

    let mut st = Resolver {
        b,
        var_net,
        neg_net: HashMap::new(),
        const_net: [None, None],
    };
    // iterative DFS in document order keeps the emitted gates topological
    let mut state = vec![0u8; ands.len()]; // 0 new, 1 on stack, 2 done
    for root in 0..ands.len() {
        if state[root] == 2 {
            continue;
        }
        let mut stack = vec![root];
        while let Some(&top) = stack.last() {
            let (ln, var, rhs) = ands[top];
            if state[top] == 0 {
                state[top] = 1;
                for &lit in rhs.iter().rev() {
                    let v = lit / 2;
                    if v == 0 || st.var_net.contains_key(&v) {
                        continue;
                    }
                    match and_def.get(&v) {
                        None => return Err(parse_err(ln, format!("literal {lit} refers to undefined variable {v}"))),
                        Some(&j) if state[j] == 1 => {
                            return Err(parse_err(ln, format!("combinational cycle through variable {v}")))
                        }
                        Some(&j) if state[j] == 0 => stack.push(j),
                        Some(_) => {}
                    }
                }
            } else {
                stack.pop();
                if state[top] == 1 {
                    let x = st.lit(rhs[0]);
                    let y = st.lit(rhs[1]);
                    let net = st.b.and(x, y);
                    st.var_net.insert(var, net);
                    state[top] = 2;
                }
            }
        }
    }
    let mut out_nets = Vec::with_capacity(outputs.len());
    for (ln, lit) in outputs {
        let v = lit / 2;
        if v != 0 && !st.var_net.contains_key(&v) {
            return Err(parse_err(ln, format!("output literal {lit} refers to undefined variable {v}")));
        }
        out_nets.push(st.lit(lit));
    }
    Ok(st.b.finish("aig", out_nets))
}

struct Resolver {
    b: NetlistBuilder,
    var_net: HashMap<usize, NetId>,
    neg_net: HashMap<usize, NetId>,
    const_net: [Option<NetId>; 2],
}

impl Resolver {
    fn lit(&mut self, lit: usize) -> NetId {
        if lit < 2 {
            let b = &mut self.b;
            return *self.const_net[lit].get_or_insert_with(|| {
                b.gate(if lit == 0 { GateKind::Const0 } else { GateKind::Const1 }, Vec::new())
            });
        }
        let net = self.var_net[&(lit / 2)];
        if lit.is_multiple_of(2) {
            net
        } else {
            let b = &mut self.b;
            *self.neg_net.entry(lit / 2).or_insert_with(|| b.not(net))
        }
    }
}

/// Writes a netlist in ASCII AIGER form, lowering every gate kind to
/// two-input ANDs with inverted edges.
pub fn write_aig(netlist: &Netlist) -> String {
    let mut lit = vec![0usize; netlist.num_nets()];
    for (i, &net) in netlist.inputs().iter().enumerate() {
        lit[net] = 2 * (i + 1);
    }
    let mut next_var = netlist.inputs().len() + 1;
    let mut ands: Vec<(usize, usize, usize)> = Vec::new();
    let mut and2 = |x: usize, y: usize| -> usize {
        let l = 2 * next_var;
        next_var += 1;
        ands.push((l, x, y));
        l
    };
    let and_n = |xs: &[usize], and2: &mut dyn FnMut(usize, usize) -> usize| -> usize {
        xs[1..].iter().fold(xs[0], |acc, &x| and2(acc, x))
    };
    for g in netlist.gates() {
        let ins: Vec<usize> = g.inputs.iter().map(|&x| lit[x]).collect();
        let negs: Vec<usize> = ins.iter().map(|&x| x ^ 1).collect();
        lit[g.output] = match g.kind {
            GateKind::Const0 => 0,
            GateKind::Const1 => 1,
            GateKind::Not => ins[0] ^ 1,
            GateKind::And => and_n(&ins, &mut and2),
            GateKind::Nand => and_n(&ins, &mut and2) ^ 1,
            GateKind::Or => and_n(&negs, &mut and2) ^ 1,
            GateKind::Nor => and_n(&negs, &mut and2),
            GateKind::Xor | GateKind::Xnor => {
                let p = and2(ins[0], negs[1]);
                let q = and2(negs[0], ins[1]);
                let x = and2(p ^ 1, q ^ 1) ^ 1;
                if g.kind == GateKind::Xor {
                    x
                } else {
                    x ^ 1
                }
            }
        };
    }
    let mut out = String::new();
    let ni = netlist.inputs().len();
    let _ = writeln!(
        out,
        "aag {} {} 0 {} {}",
        next_var - 1,
        ni,
        netlist.outputs().len(),
        ands.len()
    );
    for i in 0..ni {
        let _ = writeln!(out, "{}", 2 * (i + 1));
    }
    for &o in netlist.outputs() {
        let _ = writeln!(out, "{}", lit[o]);
    }
    for (l, x, y) in ands {
        let _ = writeln!(out, "{l} {x} {y}");
    }
    let _ = writeln!(out, "c\n{}", netlist.name());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{generate_adder, AdderFamily, AdderSpec, CircuitSpec};
    use rand::{Rng, SeedableRng};

    #[test]
    fn single_and() {
        let n = parse_aig("aag 3 2 0 1 1\n2\n4\n6\n6 2 4\n").unwrap();
        assert_eq!(n.inputs().len(), 2);
        assert_eq!(n.outputs().len(), 1);
        assert_eq!(n.gates().len(), 1);
        assert_eq!(n.gates()[0].kind, GateKind::And);
        assert_eq!(n.simulate(&[true, true]), vec![true]);
        assert_eq!(n.simulate(&[true, false]), vec![false]);
    }

    #[test]
    fn inverted_output() {
        let n = parse_aig("aag 1 1 0 1 0\n2\n3\n").unwrap();
        assert_eq!(n.gates().len(), 1);
        assert_eq!(n.gates()[0].kind, GateKind::Not);
        assert_eq!(n.simulate(&[false]), vec![true]);
    }

    #[test]
    fn latch_is_rejected() {
        let err = parse_aig("aag 3 1 1 1 0\n2\n4 2\n4\n").unwrap_err();
        assert_eq!(err, Error::Sequential { line: 1 });
        assert!(err.to_string().contains("sequential element unsupported"));
    }

    #[test]
    fn constants_and_symbols() {
        let n = parse_aig("aag 1 1 0 3 0\n2\n0\n1\n2\ni0 x\no0 zero\nc\nanything goes\n").unwrap();
        assert_eq!(n.simulate(&[true]), vec![false, true, true]);
    }

    #[test]
    fn out_of_order_ands_are_sorted() {
        // 8 = 6 & 2, 6 = 2 & 4 (declared after its user)
        let n = parse_aig("aag 4 2 0 1 2\n2\n4\n9\n8 6 2\n6 2 4\n").unwrap();
        assert_eq!(n.simulate(&[true, true]), vec![false]);
        assert_eq!(n.simulate(&[true, false]), vec![true]);
    }

    #[test]
    fn errors_carry_positions() {
        match parse_aig("aag 3 2 0 1 1\n2\n4\n6\n6 2 x\n") {
            Err(Error::AigParse { line: 5, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match parse_aig("aag 3 2 0 1 1\n2\n4\n6\n6 2 10\n") {
            Err(Error::AigParse { line: 5, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_aig("aig 1 1 0 0 0\n"), Err(Error::AigParse { line: 1, .. })));
        assert!(matches!(parse_aig("aag 3 2 0 1 1\n2\n"), Err(Error::AigParse { line: 3, .. })));
        // cycle
        assert!(parse_aig("aag 3 1 0 1 2\n2\n4\n4 6 2\n6 4 2\n").is_err());
        // undefined reference
        assert!(parse_aig("aag 3 1 0 1 1\n2\n4\n4 6 2\n").is_err());
    }

    fn assert_equivalent(a: &Netlist, b: &Netlist, seed: u64) {
        assert_eq!(a.inputs().len(), b.inputs().len());
        assert_eq!(a.outputs().len(), b.outputs().len());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        // 16 rounds of 64 lanes = 1024 random vectors
        for _ in 0..16 {
            let words: Vec<u64> = (0..a.inputs().len()).map(|_| rng.gen()).collect();
            assert_eq!(a.simulate_words(&words), b.simulate_words(&words));
        }
    }

    #[test]
    fn emit_then_parse_preserves_semantics() {
        let mut specs: Vec<CircuitSpec> = AdderFamily::ALL
            .iter()
            .map(|&f| match f {
                AdderFamily::Gear => CircuitSpec::Adder(AdderSpec::gear(12, 3, 2)),
                f => CircuitSpec::Adder(AdderSpec::new(f, 12, 5)),
            })
            .collect();
        specs.push("mult:4:loa:2".parse().unwrap());
        specs.push("const0:3".parse().unwrap());
        specs.push("gauss:2".parse().unwrap());
        for (i, spec) in specs.iter().enumerate() {
            let n = spec.build().unwrap();
            let back = parse_aig(&write_aig(&n)).unwrap();
            assert_equivalent(&n, &back, i as u64);
        }
    }

    #[test]
    fn every_gate_kind_survives_emit() {
        for kind in [GateKind::And, GateKind::Or, GateKind::Xor, GateKind::Nand, GateKind::Nor, GateKind::Xnor] {
            let mut b = NetlistBuilder::new();
            let x = b.input();
            let y = b.input();
            let z = b.gate(kind, vec![x, y]);
            let n = b.finish("g", vec![z, x]);
            let back = parse_aig(&write_aig(&n)).unwrap();
            for k in 0..4 {
                let v = [k & 1 == 1, k & 2 == 2];
                assert_eq!(n.simulate(&v), back.simulate(&v), "{kind}");
            }
        }
        let n = generate_adder(&AdderSpec::exact(3)).unwrap();
        let text = write_aig(&n);
        assert!(text.starts_with("aag "));
    }
}
