//! DIMACS CNF with role annotations:
//!
//! ```text
//! p cnf <vars> <clauses>
//! c input <var> <bit>
//! c err <var> <bit>
//! <lit> ... 0
//! ```
//!
//! Other comment lines are ignored.

use std::fmt::Write as _;

use super::{lit_var, Clause, CnfSystem, Lit, Var};
use crate::error::{Error, Result};

pub fn write_dimacs(sys: &CnfSystem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "p cnf {} {}", sys.num_vars(), sys.clauses().len());
    for (i, v) in sys.input_vars().iter().enumerate() {
        let _ = writeln!(out, "c input {v} {i}");
    }
    for (i, v) in sys.error_vars().iter().enumerate() {
        let _ = writeln!(out, "c err {v} {i}");
    }
    for c in sys.clauses() {
        for l in c {
            let _ = write!(out, "{l} ");
        }
        out.push_str("0\n");
    }
    out
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Dimacs { line, msg: msg.into() }
}

/// Collects `(bit, var)` annotations into a gap-free, bit-ordered list.
fn ordered(mut ann: Vec<(usize, Var, usize)>, what: &str) -> Result<Vec<Var>> {
    ann.sort_unstable();
    for w in ann.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(err(w[1].2, format!("duplicate {what} annotation for bit {}", w[0].0)));
        }
    }
    for (expect, &(bit, _, line)) in ann.iter().enumerate() {
        if bit != expect {
            return Err(err(line, format!("{what} bit {expect} is not annotated")));
        }
    }
    Ok(ann.into_iter().map(|(_, v, _)| v).collect())
}

pub fn read_dimacs(text: &str) -> Result<CnfSystem> {
    let mut header: Option<(u32, usize)> = None;
    let mut inputs = Vec::new();
    let mut errors = Vec::new();
    let mut clauses: Vec<Clause> = Vec::new();
    let mut current: Clause = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let t = raw.trim();
        if t.is_empty() || t == "%" {
            continue;
        }
        let mut fields = t.split_ascii_whitespace();
        let first = fields.next().unwrap_or_default();
        if first == "c" {
            let kind = fields.next();
            if !matches!(kind, Some("input" | "err")) {
                continue;
            }
            let nums: Vec<&str> = fields.collect();
            let parsed = match nums.as_slice() {
                [v, b] => v.parse::<Var>().ok().zip(b.parse::<usize>().ok()),
                _ => None,
            };
            let (v, bit) = parsed.ok_or_else(|| err(line, "annotation needs <var> <bit>"))?;
            if kind == Some("input") {
                inputs.push((bit, v, line));
            } else {
                errors.push((bit, v, line));
            }
            continue;
        }
        if first == "p" {
            if header.is_some() {
                return Err(err(line, "second header"));
            }
            let rest: Vec<&str> = fields.collect();
            header = match rest.as_slice() {
                ["cnf", v, c] => v.parse().ok().zip(c.parse().ok()),
                _ => None,
            };
            if header.is_none() {
                return Err(err(line, "malformed header, expected 'p cnf <vars> <clauses>'"));
            }
            continue;
        }
        let Some((nv, _)) = header else {
            return Err(err(line, "clause before the 'p cnf' header"));
        };
        for tok in t.split_ascii_whitespace() {
            let l: Lit = tok.parse().map_err(|_| err(line, format!("bad literal {tok:?}")))?;
            if l == 0 {
                clauses.push(std::mem::take(&mut current));
            } else if lit_var(l) > nv {
                return Err(err(line, format!("literal {l} out of range 1..={nv}")));
            } else {
                current.push(l);
            }
        }
    }
    let Some((nv, nc)) = header else {
        return Err(err(last_line.max(1), "missing 'p cnf' header"));
    };
    if !current.is_empty() {
        return Err(err(last_line, "last clause is not terminated by 0"));
    }
    if clauses.len() != nc {
        return Err(err(last_line, format!("header declares {nc} clauses, found {}", clauses.len())));
    }
    if errors.is_empty() {
        return Err(Error::ErrorBitsUnannotated);
    }
    for &(_, v, line) in inputs.iter().chain(&errors) {
        if v == 0 || v > nv {
            return Err(err(line, format!("annotated variable {v} out of range 1..={nv}")));
        }
    }
    let input_vars = ordered(inputs, "input")?;
    let error_vars = ordered(errors, "err")?;
    CnfSystem::new(nv, clauses, input_vars, error_vars).map_err(|e| match e {
        Error::Invariant(msg) => err(last_line, msg),
        e => e,
    })
}
