mod common;

use std::time::Instant;

use axerr::cnfsys::{build_system, CnfSystem};
use axerr::engine::{Engine, Query};
use axerr::metrics::{moments, Analyzer, Selection};
use axerr::oracle::{exhaustive_metrics, localized_metrics, total_probability};
use axerr::partition::Partitioning;
use axerr::pipeline::{build, PipelineConfig};
use axerr::table::enumerate;
use axerr::treebuild::{JoinGraph, TreeConfig};
use common::{banded_cnf, criterion, dpll_count, engine_report, ensure, random_cnf, random_system, rip_holds, spec};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every generator family against the exact adder at widths 2..=8, with a
/// few approximate-bit counts each.
fn small_family_pairs() -> Vec<(String, String)> {
    let mut pairs = Vec::new();
    for w in 2..=8usize {
        let exact = format!("adder:{w}");
        let mut ks = vec![1, w.div_ceil(2), w];
        ks.dedup();
        pairs.push((exact.clone(), exact.clone()));
        for fam in ["trunc", "loa", "ama1", "ama2", "ama5", "axa2"] {
            for &k in &ks {
                pairs.push((exact.clone(), format!("{fam}:{w}:{k}")));
            }
        }
        let mut gears = vec![(1, 1), (w / 2, w / 2), (1, w - 1)];
        gears.dedup();
        for (r, p) in gears {
            if r >= 1 && r + p <= w {
                pairs.push((exact.clone(), format!("gear:{w}:{r}:{p}")));
            }
        }
    }
    pairs
}

fn limited(clause_limit: usize) -> PipelineConfig {
    PipelineConfig {
        clause_limit,
        ..PipelineConfig::default()
    }
}

#[test]
fn criterion_1_oracle_equivalence() {
    criterion(1, "oracle equivalence, widths 2-8", || {
        let pairs = small_family_pairs();
        let t = Instant::now();
        let mut runs = 0;
        for (e, a) in &pairs {
            let (exact, approx) = (spec(e), spec(a));
            let oracle = exhaustive_metrics(&exact, &approx, 24).map_err(|x| x.to_string())?;
            for cfg in [PipelineConfig::default(), limited(40), limited(12)] {
                let report = engine_report(&exact, &approx, &cfg);
                let diffs = oracle.mismatches(&report);
                ensure(diffs.is_empty(), || format!("{e} vs {a} (limit {}): {diffs:?}", cfg.clause_limit))?;
                runs += 1;
            }
        }
        Ok(format!("{} circuit pairs, {runs} engine runs, {:.1?}", pairs.len(), t.elapsed()))
    });
}

/// Three parts pairwise sharing one of `a=1, b=2, c=3`, each with a private
/// variable (4, 5, 6) kept visible as an error bit; 8 models in total.
fn triangle_formula() -> (Vec<Vec<i32>>, Vec<Vec<usize>>) {
    let clauses = vec![
        vec![1, -4],
        vec![2, 4],
        vec![3, -2],
        vec![5, -2, -3],
        vec![-3, 6],
        vec![-6, -3, 1],
    ];
    (clauses, vec![vec![0, 1], vec![2, 3], vec![4, 5]])
}

#[test]
fn criterion_2_worked_example_shape() {
    criterion(2, "3-part cycle reduces to 2 vertices in one round", || {
        let (clauses, parts) = triangle_formula();
        let truth = dpll_count(6, &clauses, &[]);
        ensure(truth == BigUint::from(8u8), || format!("constructed formula has {truth} models"))?;
        let p = Partitioning::from_parts(6, &clauses, parts);
        let tables = p
            .parts
            .iter()
            .zip(&p.var_sets)
            .map(|(cs, vars)| {
                let cl: Vec<Vec<i32>> = cs.iter().map(|&c| clauses[c].clone()).collect();
                enumerate(&cl, vars, 24).unwrap()
            })
            .collect();
        let g = JoinGraph::new(&p, tables, &[4, 5, 6]);
        ensure(g.edges().len() == 3, || format!("{} edges, expected a triangle", g.edges().len()))?;
        let tree = g.reduce_to_tree(&TreeConfig::default()).map_err(|e| e.to_string())?;
        let stats = tree.stats();
        ensure(stats.rounds == 1, || format!("{} merge rounds", stats.rounds))?;
        ensure(tree.nodes().len() == 2, || format!("{} tree vertices", tree.nodes().len()))?;
        ensure(rip_holds(&tree), || "RIP violated".into())?;
        let root = &tree.nodes()[tree.roots()[0]];
        let child = root.children[0];
        // root sum: sum over the root's rows of its count times the child message
        let engine_total = Engine::new(&tree).sat_count(&Query::new());
        ensure(engine_total == truth, || format!("tree count {engine_total}, truth {truth}"))?;
        let sys = CnfSystem::new(6, clauses.clone(), Vec::new(), vec![4]).unwrap();
        let built = build(&sys, &PipelineConfig::default()).map_err(|e| e.to_string())?;
        let via_pipeline = Engine::new(&built.tree).sat_count(&Query::new());
        ensure(via_pipeline == BigUint::from(8u8), || format!("pipeline count {via_pipeline}"))?;
        Ok(format!("2 vertices (child {child}), sat-count 8 via tree and via pipeline"))
    });
}

#[test]
fn criterion_3_total_count_identity() {
    criterion(3, "total-count identity", || {
        let mut small = 0;
        for (e, a) in small_family_pairs() {
            let sys = build_system(&spec(&e), &spec(&a)).unwrap();
            let built = build(&sys, &limited(40)).map_err(|x| x.to_string())?;
            let engine = Engine::new(&built.tree);
            let want = BigUint::one() << sys.n();
            let total = engine.sat_count(&Query::new());
            ensure(total == want, || format!("{e} vs {a}: unconditioned {total}"))?;
            let bits = sys.error_vars().len();
            let patterns: Vec<Query> = (0..1u32 << bits)
                .map(|p| Query::full_pattern(&(0..bits).map(|i| p >> i & 1 == 1).collect::<Vec<_>>()))
                .collect();
            let sum: BigUint = engine.sat_count_batch(&patterns).into_iter().sum();
            ensure(sum == want, || format!("{e} vs {a}: pattern sum {sum}"))?;
            small += 1;
        }
        let mut slowest = 0f64;
        for a in [
            "adder:128",
            "loa:128:8",
            "trunc:128:8",
            "ama1:128:8",
            "ama2:128:8",
            "ama5:128:8",
            "axa2:128:8",
            "gear:128:8:8",
        ] {
            let t = Instant::now();
            let sys = build_system(&spec("adder:128"), &spec(a)).unwrap();
            let built = build(&sys, &PipelineConfig::default()).map_err(|x| x.to_string())?;
            ensure(rip_holds(&built.tree), || format!("{a}: RIP"))?;
            let engine = Engine::new(&built.tree);
            let an = Analyzer::new(&engine, sys.n());
            an.verify_total().map_err(|x| x.to_string())?;
            if a != "gear:128:8:8" {
                // the PDF range spans both worst cases, so it covers every
                // error pattern with a nonzero count
                let pdf = an.error_pdf(None).map_err(|x| x.to_string())?;
                let s = total_probability(&pdf);
                ensure(s.is_one(), || format!("{a}: pattern probabilities sum to {s}"))?;
            }
            let secs = t.elapsed().as_secs_f64();
            ensure(secs < 60.0, || format!("{a}: {secs:.1}s"))?;
            slowest = slowest.max(secs);
        }
        Ok(format!("{small} small systems exhaustively, 8 adders at n=256, slowest {slowest:.1}s"))
    });
}

#[test]
fn criterion_4_big_number_mse() {
    criterion(4, "MSE of 128-bit LOA(120) exceeds 1e71", || {
        let sys = build_system(&spec("adder:128"), &spec("loa:128:120")).unwrap();
        let built = build(&sys, &PipelineConfig::default()).map_err(|e| e.to_string())?;
        let engine = Engine::new(&built.tree);
        let an = Analyzer::new(&engine, sys.n());
        an.verify_total().map_err(|e| e.to_string())?;
        let r = an
            .compute_all(Selection {
                er: true,
                mae: true,
                mse: true,
                ..Selection::default()
            })
            .map_err(|e| e.to_string())?;
        let (er, mae, mse) = (r.er.unwrap(), r.mae.unwrap(), r.mse.unwrap());
        let bound = BigRational::from_integer(Pow::pow(BigInt::from(10), 71u32));
        ensure(mse > bound, || format!("mse {mse}"))?;
        ensure(mse >= &mae * &mae, || "mse below mae squared".into())?;
        let three_quarters = BigRational::new(3.into(), 4.into());
        let want_er = BigRational::one() - Pow::pow(three_quarters, 120u32);
        ensure(er == want_er, || format!("er {er}"))?;
        Ok(format!("mse = {}", axerr::metrics::decimal(&mse, 6)))
    });
}

#[test]
fn criterion_5_localized_oracle() {
    criterion(5, "128-bit LOA(8) against the localized oracle", || {
        let (exact, approx) = (spec("adder:128"), spec("loa:128:8"));
        let oracle = localized_metrics(&exact, &approx, 24).map_err(|e| e.to_string())?;
        let report = engine_report(&exact, &approx, &PipelineConfig::default());
        let diffs = oracle.mismatches(&report);
        ensure(diffs.is_empty(), || format!("{diffs:?}"))?;
        Ok(format!("er {} wce {} over {} pdf values", oracle.er, oracle.wce.magnitude, oracle.pdf.len()))
    });
}

#[test]
fn criterion_6_rip_and_dpll() {
    criterion(6, "RIP on fuzzed and generator systems, counts match DPLL", || {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut queries = 0;
        let mut multi = 0;
        let mut fuzzed = 0;
        while fuzzed < 200 {
            // alternate unstructured small formulas with banded wide ones
            let (nv, clauses) = if fuzzed % 2 == 1 {
                let nv = rng.gen_range(20..=60u32);
                let nc = rng.gen_range(nv as usize..=(5 * nv as usize / 2).min(200));
                (nv, banded_cnf(&mut rng, nv, nc, 8))
            } else {
                let nv = rng.gen_range(4..=24u32);
                let nc = rng.gen_range(nv as usize / 2..=(3 * nv as usize).min(200));
                (nv, random_cnf(&mut rng, nv, nc))
            };
            let total = dpll_count(nv, &clauses, &[]);
            if total > BigUint::one() << 20 {
                continue;
            }
            let bits = rng.gen_range(1..=5usize);
            let sys = random_system(&mut rng, nv, clauses.clone(), bits);
            let cfg = PipelineConfig {
                clause_limit: rng.gen_range(3..=40),
                seed: rng.gen(),
                tree: TreeConfig {
                    ts: [16, 1_000, 1_000_000][rng.gen_range(0..3)],
                    ..TreeConfig::default()
                },
                ..PipelineConfig::default()
            };
            let built = build(&sys, &cfg).map_err(|e| format!("fuzz {fuzzed}: {e}"))?;
            ensure(rip_holds(&built.tree), || format!("fuzz {fuzzed}: RIP"))?;
            if built.tree.nodes().len() > 1 {
                multi += 1;
            }
            let engine = Engine::new(&built.tree);
            let ev = sys.error_vars().to_vec();
            let mut qs = vec![Query::new()];
            for _ in 0..6 {
                let mut q = Query::new();
                for i in 0..ev.len() {
                    if rng.gen_bool(0.6) {
                        q.set(i, rng.gen());
                    }
                }
                qs.push(q);
            }
            for q in &qs {
                let units: Vec<_> = q.iter().map(|(i, b)| (ev[i], b)).collect();
                let want = dpll_count(nv, &clauses, &units);
                let got = engine.sat_count(q);
                ensure(got == want, || format!("fuzz {fuzzed}: query {q:?} engine {got} dpll {want}"))?;
                queries += 1;
            }
            fuzzed += 1;
        }
        let mut generator = 0;
        let mut systems: Vec<(String, String)> = common_generator_pairs();
        systems.extend(small_family_pairs());
        for (e, a) in systems {
            let sys = build_system(&spec(&e), &spec(&a)).unwrap();
            for &limit in feasible_limits(&e) {
                let built = build(&sys, &limited(limit)).map_err(|x| format!("{e} vs {a}: {x}"))?;
                ensure(rip_holds(&built.tree), || format!("{e} vs {a} limit {limit}: RIP"))?;
                generator += 1;
            }
        }
        Ok(format!(
            "200 fuzzed CNFs ({multi} multi-vertex trees, {queries} queries), {generator} generator builds"
        ))
    });
}

/// Clause limits a system builds under within the default caps. Multiplier
/// and filter miters have min-fill widths above 20, so small parts leave
/// too many free boundary variables in their tables.
fn feasible_limits(exact: &str) -> &'static [usize] {
    if exact.starts_with("gauss") {
        &[500]
    } else if exact.starts_with("mult") {
        &[60, 500]
    } else {
        &[20, 60, 500]
    }
}

fn common_generator_pairs() -> Vec<(String, String)> {
    [
        ("mult:4", "mult:4:loa:2"),
        ("mult:4", "mult:4:ama2:3"),
        ("gauss:2", "gauss:2:trunc:1"),
        ("adder:32", "loa:32:8"),
        ("adder:32", "gear:32:4:4"),
        ("adder:16", "const0:16"),
    ]
    .iter()
    .map(|(e, a)| (e.to_string(), a.to_string()))
    .collect()
}

fn invariance_pairs() -> Vec<(&'static str, &'static str)> {
    vec![
        ("adder:6", "loa:6:3"),
        ("adder:6", "trunc:6:2"),
        ("adder:6", "ama1:6:3"),
        ("adder:6", "ama2:6:2"),
        ("adder:6", "ama5:6:3"),
        ("adder:6", "axa2:6:3"),
        ("adder:6", "gear:6:2:2"),
        ("adder:8", "loa:8:4"),
        ("adder:8", "ama1:8:3"),
        ("adder:8", "ama5:8:2"),
        ("adder:8", "axa2:8:4"),
        ("adder:8", "gear:8:2:2"),
        ("adder:8", "trunc:8:3"),
        ("adder:8", "adder:8"),
        ("mult:3", "mult:3:loa:2"),
        ("mult:3", "mult:3:trunc:2"),
        ("mult:3", "mult:3:ama5:2"),
        ("adder:16", "loa:16:4"),
        ("adder:16", "gear:16:4:4"),
        ("adder:32", "loa:32:4"),
    ]
}

#[test]
fn criterion_7_configuration_invariance() {
    criterion(7, "byte-identical reports across configurations", || {
        let pairs = invariance_pairs();
        let mut runs = 0;
        for (e, a) in &pairs {
            let mut first: Option<(String, Vec<u8>)> = None;
            for limit in ["50", "500"] {
                for ts in ["10000", "1000000"] {
                    for threads in ["1", "8"] {
                        for seed in ["0", "1", "77"] {
                            let args = [
                                "axerr", "metrics", "--exact", e, "--approx", a, "--metrics", "all,pdf", "--format", "json",
                                "--clause-limit", limit, "--ts", ts, "--threads", threads, "--seed", seed,
                            ];
                            let (mut out, mut err) = (Vec::new(), Vec::new());
                            let code = axerr::cli::run(args, &mut out, &mut err);
                            let tag = format!("limit {limit} ts {ts} threads {threads} seed {seed}");
                            ensure(code == 0, || {
                                format!("{e} vs {a} {tag}: exit {code}: {}", String::from_utf8_lossy(&err))
                            })?;
                            match &first {
                                None => first = Some((tag, out)),
                                Some((t0, o0)) => ensure(*o0 == out, || format!("{e} vs {a}: {t0} differs from {tag}"))?,
                            }
                            runs += 1;
                        }
                    }
                }
            }
        }
        Ok(format!("{} systems x 24 configurations, {runs} runs", pairs.len()))
    });
}

#[test]
fn criterion_8_histogram_consistency() {
    criterion(8, "PDF moments equal direct MAE and MSE", || {
        let pairs = [
            ("mult:3", "mult:3:loa:2"),
            ("mult:4", "mult:4:loa:3"),
            ("mult:4", "mult:4:ama2:3"),
            ("mult:4", "mult:4:trunc:2"),
            ("mult:3", "mult:3:ama5:2"),
            ("gauss:2", "gauss:2:loa:2"),
            ("adder:8", "loa:8:4"),
            ("adder:10", "ama1:10:5"),
            ("adder:11", "axa2:11:6"),
            ("adder:11", "gear:11:3:3"),
        ];
        let mut checked = 0;
        for (e, a) in pairs {
            let sys = build_system(&spec(e), &spec(a)).unwrap();
            ensure(sys.m() <= 12, || format!("{e} vs {a}: m = {}", sys.m()))?;
            let r = engine_report(&spec(e), &spec(a), &limited(60));
            let pdf = r.pdf.as_ref().unwrap();
            let (mae, mse) = moments(pdf);
            ensure(Some(&mae) == r.mae.as_ref(), || format!("{e} vs {a}: pdf mae {mae}"))?;
            ensure(Some(&mse) == r.mse.as_ref(), || format!("{e} vs {a}: pdf mse {mse}"))?;
            let s = total_probability(pdf);
            ensure(s.is_one(), || format!("{e} vs {a}: pdf sums to {s}"))?;
            let w = r.wce.as_ref().unwrap();
            let max = pdf.iter().map(|(v, _)| v.magnitude().clone()).max().unwrap_or_default();
            ensure(w.magnitude == max, || format!("{e} vs {a}: wce {} vs pdf {max}", w.magnitude))?;
            ensure(!pdf.iter().any(|(_, p)| p.is_zero()), || "zero entry".into())?;
            checked += 1;
        }
        Ok(format!("{checked} systems"))
    });
}
