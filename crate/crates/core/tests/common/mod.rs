#![allow(dead_code)]

use std::io::Write;

use axerr::circuit::{CircuitSpec, Netlist};
use axerr::cnfsys::{build_system, Clause, CnfSystem, Var};
use axerr::engine::Engine;
use axerr::metrics::{Analyzer, MetricReport, Selection};
use axerr::pipeline::{build, PipelineConfig};
use axerr::treebuild::JoinTree;
use num_bigint::BigUint;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn spec(s: &str) -> Netlist {
    s.parse::<CircuitSpec>().unwrap().build().unwrap()
}

/// Runs the whole pipeline and every metric including the PDF.
pub fn engine_report(exact: &Netlist, approx: &Netlist, cfg: &PipelineConfig) -> MetricReport {
    let sys = build_system(exact, approx).unwrap();
    let built = build(&sys, cfg).unwrap();
    let engine = Engine::new(&built.tree);
    let an = Analyzer::new(&engine, sys.n());
    an.verify_total().unwrap();
    an.compute_all(Selection {
        pdf: true,
        ..Selection::ALL
    })
    .unwrap()
}

/// Model count by DPLL with unit propagation, under extra unit literals.
pub fn dpll_count(num_vars: u32, clauses: &[Clause], units: &[(Var, bool)]) -> BigUint {
    let mut assign: Vec<Option<bool>> = vec![None; num_vars as usize + 1];
    for &(v, b) in units {
        match assign[v as usize] {
            Some(x) if x != b => return BigUint::ZERO,
            _ => assign[v as usize] = Some(b),
        }
    }
    count(clauses, &mut assign)
}

fn lit_value(l: i32, assign: &[Option<bool>]) -> Option<bool> {
    assign[l.unsigned_abs() as usize].map(|v| v == (l > 0))
}

fn count(clauses: &[Clause], assign: &mut Vec<Option<bool>>) -> BigUint {
    let mut trail = Vec::new();
    // unit propagation to a fixed point
    loop {
        let mut unit = None;
        for c in clauses {
            let mut open = None;
            let mut n_open = 0;
            let mut sat = false;
            for &l in c {
                match lit_value(l, assign) {
                    Some(true) => {
                        sat = true;
                        break;
                    }
                    Some(false) => {}
                    None => {
                        n_open += 1;
                        open = Some(l);
                    }
                }
            }
            if sat {
                continue;
            }
            if n_open == 0 {
                for v in trail {
                    assign[v] = None;
                }
                return BigUint::ZERO;
            }
            if n_open == 1 {
                unit = open;
                break;
            }
        }
        match unit {
            Some(l) => {
                let v = l.unsigned_abs() as usize;
                assign[v] = Some(l > 0);
                trail.push(v);
            }
            None => break,
        }
    }
    let branch = clauses
        .iter()
        .filter(|c| !c.iter().any(|&l| lit_value(l, assign) == Some(true)))
        .min_by_key(|c| c.iter().filter(|&&l| lit_value(l, assign).is_none()).count())
        .and_then(|c| c.iter().find(|&&l| lit_value(l, assign).is_none()).copied());
    let result = match branch {
        None => {
            let free = assign.iter().skip(1).filter(|a| a.is_none()).count();
            BigUint::from(1u8) << free
        }
        Some(l) => {
            let v = l.unsigned_abs() as usize;
            let mut total = BigUint::ZERO;
            for b in [true, false] {
                assign[v] = Some(b);
                total += count(clauses, assign);
            }
            assign[v] = None;
            total
        }
    };
    for v in trail {
        assign[v] = None;
    }
    result
}

/// Random CNF with clauses of width 1..=4, mostly 3.
pub fn random_cnf(rng: &mut ChaCha8Rng, num_vars: u32, num_clauses: usize) -> Vec<Clause> {
    (0..num_clauses)
        .map(|_| {
            let width = match rng.gen_range(0..20) {
                0 => 1,
                1..=4 => 2,
                5..=17 => 3,
                _ => 4,
            }
            .min(num_vars as usize);
            let mut vars: Vec<u32> = Vec::with_capacity(width);
            while vars.len() < width {
                let v = rng.gen_range(1..=num_vars);
                if !vars.contains(&v) {
                    vars.push(v);
                }
            }
            vars.into_iter()
                .map(|v| if rng.gen_bool(0.5) { v as i32 } else { -(v as i32) })
                .collect()
        })
        .collect()
}

/// Random CNF whose clauses each draw their variables from a window of
/// `band` consecutive variables, which keeps the treewidth low.
pub fn banded_cnf(rng: &mut ChaCha8Rng, num_vars: u32, num_clauses: usize, band: u32) -> Vec<Clause> {
    let band = band.min(num_vars);
    (0..num_clauses)
        .map(|_| {
            let lo = rng.gen_range(1..=num_vars - band + 1);
            let width = rng.gen_range(2..=3usize).min(band as usize);
            let mut vars: Vec<u32> = Vec::with_capacity(width);
            while vars.len() < width {
                let v = rng.gen_range(lo..lo + band);
                if !vars.contains(&v) {
                    vars.push(v);
                }
            }
            vars.into_iter()
                .map(|v| if rng.gen_bool(0.5) { v as i32 } else { -(v as i32) })
                .collect()
        })
        .collect()
}

/// A random system whose "error bits" are `bits` distinct random variables.
pub fn random_system(rng: &mut ChaCha8Rng, num_vars: u32, clauses: Vec<Clause>, bits: usize) -> CnfSystem {
    let mut err: Vec<Var> = Vec::new();
    while err.len() < bits.min(num_vars as usize) {
        let v = rng.gen_range(1..=num_vars);
        if !err.contains(&v) {
            err.push(v);
        }
    }
    CnfSystem::new(num_vars, clauses, Vec::new(), err).unwrap()
}

/// Connected-subtree check done from scratch: for every variable the tree
/// nodes holding it, minus the tree edges between two such nodes, must
/// number exactly one.
pub fn rip_holds(tree: &JoinTree) -> bool {
    use std::collections::HashMap;
    let mut nodes: HashMap<Var, i64> = HashMap::new();
    for n in tree.nodes() {
        for &v in n.table.vars() {
            *nodes.entry(v).or_default() += 1;
        }
    }
    for n in tree.nodes() {
        if let Some(p) = n.parent {
            let pv = tree.nodes()[p].table.vars();
            for &v in n.table.vars() {
                if pv.binary_search(&v).is_ok() {
                    *nodes.get_mut(&v).unwrap() -= 1;
                }
            }
        }
    }
    nodes.values().all(|&c| c == 1)
}

/// One line per criterion on stderr, written past the test harness
/// capture so it shows on every run.
pub fn criterion(id: u32, title: &str, f: impl FnOnce() -> Result<String, String>) {
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f))
        .unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(msg)
        });
    let line = match &outcome {
        Ok(detail) => format!("criterion {id} ({title}): PASS ({detail})\n"),
        Err(detail) => format!("criterion {id} ({title}): FAIL ({detail})\n"),
    };
    let _ = std::io::stderr().write_all(line.as_bytes());
    if let Err(d) = outcome {
        panic!("criterion {id} failed: {d}");
    }
}

/// `Err` with a message unless `cond`.
pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}
