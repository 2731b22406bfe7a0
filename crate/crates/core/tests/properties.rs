mod common;

use axerr::engine::{Engine, Query};
use axerr::metrics::{Analyzer, Selection, WceSign};
use axerr::oracle::{exhaustive_metrics, total_probability, wce_consistent};
use axerr::pipeline::{build, PipelineConfig};
use common::{dpll_count, engine_report, random_cnf, random_system, rip_holds, spec};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn limited(limit: usize) -> PipelineConfig {
    PipelineConfig {
        clause_limit: limit,
        ..Default::default()
    }
}

fn approx_spec(width: usize, family: usize, k: usize) -> String {
    let k = k.clamp(1, width);
    match family {
        0 => format!("loa:{width}:{k}"),
        1 => format!("trunc:{width}:{k}"),
        2 => format!("ama1:{width}:{k}"),
        3 => format!("ama2:{width}:{k}"),
        4 => format!("ama5:{width}:{k}"),
        5 => format!("axa2:{width}:{k}"),
        _ => format!("gear:{width}:1:{}", k.min(width - 1).max(1)),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conditioned_counts_match_dpll(seed in any::<u64>(), nv in 3u32..14, limit in 2usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nc = rng.gen_range(nv as usize / 2..=2 * nv as usize);
        let clauses = random_cnf(&mut rng, nv, nc);
        let bits = rng.gen_range(1..=4usize);
        let sys = random_system(&mut rng, nv, clauses.clone(), bits);
        let built = build(&sys, &limited(limit)).unwrap();
        prop_assert!(rip_holds(&built.tree));
        let engine = Engine::new(&built.tree);
        let err = sys.error_vars();
        for _ in 0..6 {
            let mut q = Query::new();
            let mut units = Vec::new();
            for (i, &v) in err.iter().enumerate() {
                if rng.gen_bool(0.6) {
                    let b = rng.gen_bool(0.5);
                    q.set(i, b);
                    units.push((v, b));
                }
            }
            prop_assert_eq!(engine.sat_count(&q), dpll_count(nv, &clauses, &units));
        }
    }

    #[test]
    fn metrics_match_exhaustive_oracle(width in 2usize..6, family in 0usize..7, k in 1usize..5, limit in 4usize..60) {
        let a = approx_spec(width, family, k);
        let (exact, approx) = (spec(&format!("adder:{width}")), spec(&a));
        let oracle = exhaustive_metrics(&exact, &approx, 24).unwrap();
        let report = engine_report(&exact, &approx, &limited(limit));
        let diffs = oracle.mismatches(&report);
        prop_assert!(diffs.is_empty(), "{} at limit {}: {:?}", a, limit, diffs);
    }

    #[test]
    fn metric_relations_hold(width in 2usize..9, family in 0usize..7, k in 1usize..6) {
        let a = approx_spec(width, family, k);
        let r = engine_report(&spec(&format!("adder:{width}")), &spec(&a), &PipelineConfig::default());
        prop_assert!(r.check_invariants().is_ok(), "{}", a);
        let (er, mae, mse) = (r.er.clone().unwrap(), r.mae.clone().unwrap(), r.mse.clone().unwrap());
        let wce = r.wce.clone().unwrap();
        let pdf = r.pdf.clone().unwrap();
        let w = BigRational::from(BigInt::from(wce.magnitude.clone()));
        prop_assert!(er >= BigRational::zero() && er <= BigRational::one());
        prop_assert!(mae <= w && &mae * &mae <= mse && mse <= &w * &w);
        prop_assert!(wce_consistent(&wce));
        prop_assert_eq!(wce.sign == WceSign::Zero, er.is_zero());
        prop_assert_eq!(total_probability(&pdf), BigRational::one());
        let p_zero = pdf.iter().find(|(v, _)| v.is_zero()).map_or_else(BigRational::zero, |(_, p)| p.clone());
        prop_assert_eq!(BigRational::one() - p_zero, er);
    }

    #[test]
    fn total_count_is_two_to_the_inputs(width in 2usize..10, family in 0usize..7, k in 1usize..6, limit in 4usize..80) {
        let a = approx_spec(width, family, k);
        let sys = axerr::cnfsys::build_system(&spec(&format!("adder:{width}")), &spec(&a)).unwrap();
        let built = build(&sys, &limited(limit)).unwrap();
        let engine = Engine::new(&built.tree);
        let an = Analyzer::new(&engine, sys.n());
        prop_assert!(an.verify_total().is_ok());
        let report = an.compute_all(Selection::ALL).unwrap();
        prop_assert_eq!(report.n_inputs, 2 * width);
    }
}
