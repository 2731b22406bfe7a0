use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

use super::Format;
use crate::cnfsys::CnfSystem;
use crate::metrics::{decimal, MetricReport, Pdf};
use crate::pipeline::Built;

#[derive(Serialize)]
struct Fraction {
    num: String,
    den: String,
    dec: String,
}

impl Fraction {
    fn new(r: &BigRational, digits: usize) -> Self {
        Fraction {
            num: r.numer().to_string(),
            den: r.denom().to_string(),
            dec: decimal(r, digits),
        }
    }
}

#[derive(Serialize)]
struct PdfEntry {
    value: String,
    #[serde(flatten)]
    p: Fraction,
}

#[derive(Serialize)]
struct JsonReport {
    n_inputs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    er: Option<Fraction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mae: Option<Fraction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mse: Option<Fraction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wce: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wce_sign: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_wce: Option<Fraction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pdf: Option<Vec<PdfEntry>>,
    query_count: u64,
}

/// JSON with exact fractions and decimal strings; no field depends on
/// timing or thread count.
pub fn report_json(r: &MetricReport, digits: usize) -> String {
    let frac = |x: &Option<BigRational>| x.as_ref().map(|v| Fraction::new(v, digits));
    let j = JsonReport {
        n_inputs: r.n_inputs,
        er: frac(&r.er),
        mae: frac(&r.mae),
        mse: frac(&r.mse),
        wce: r.wce.as_ref().map(|w| w.magnitude.to_string()),
        wce_sign: r.wce.as_ref().map(|w| w.sign.to_string()),
        p_wce: r.wce.as_ref().map(|w| Fraction::new(&w.p_wce, digits)),
        pdf: r.pdf.as_ref().map(|pdf| {
            pdf.iter()
                .map(|(v, p)| PdfEntry {
                    value: v.to_string(),
                    p: Fraction::new(p, digits),
                })
                .collect()
        }),
        query_count: r.query_count,
    };
    let mut s = serde_json::to_string_pretty(&j).expect("report serializes");
    s.push('\n');
    s
}

/// Rows of `metric,num,den,dec`; PDF rows are named `pdf:<value>`.
pub fn report_csv(r: &MetricReport, digits: usize) -> String {
    let mut s = String::from("metric,num,den,dec\n");
    let mut row = |name: &str, v: &BigRational| {
        let _ = writeln!(s, "{name},{},{},{}", v.numer(), v.denom(), decimal(v, digits));
    };
    for (name, v) in [("er", &r.er), ("mae", &r.mae), ("mse", &r.mse)] {
        if let Some(v) = v {
            row(name, v);
        }
    }
    if let Some(w) = &r.wce {
        row("wce", &BigRational::from_integer(BigInt::from(w.magnitude.clone())));
        row("p_wce", &w.p_wce);
    }
    if let Some(pdf) = &r.pdf {
        for (v, p) in pdf {
            row(&format!("pdf:{v}"), p);
        }
    }
    if let Some(w) = &r.wce {
        let _ = writeln!(s, "wce_sign,{},,", w.sign);
    }
    let _ = writeln!(s, "query_count,{},1,{}", r.query_count, r.query_count);
    s
}

pub fn report_text(r: &MetricReport, digits: usize) -> String {
    let mut s = String::new();
    let show = |v: &BigRational| format!("{v} ({})", decimal(v, digits));
    let _ = writeln!(s, "inputs   {}", r.n_inputs);
    for (name, v) in [("er", &r.er), ("mae", &r.mae), ("mse", &r.mse)] {
        if let Some(v) = v {
            let _ = writeln!(s, "{name:<8} {}", show(v));
        }
    }
    if let Some(w) = &r.wce {
        let _ = writeln!(s, "wce      {} ({})", w.magnitude, w.sign);
        let _ = writeln!(s, "p_wce    {}", show(&w.p_wce));
    }
    if let Some(pdf) = &r.pdf {
        let _ = writeln!(s, "pdf");
        for (v, p) in pdf {
            let _ = writeln!(s, "  {v:>6}  {}", show(p));
        }
    }
    let _ = writeln!(s, "queries  {}", r.query_count);
    s
}

/// `value,count,denominator` with the denominator fixed at `2^n`.
pub fn histogram_csv(pdf: &Pdf, n_inputs: usize) -> String {
    let den = BigInt::one() << n_inputs;
    let mut s = String::from("value,count,denominator\n");
    for (v, p) in pdf {
        let count = p.numer() * (&den / p.denom());
        let _ = writeln!(s, "{v},{count},{den}");
    }
    s
}

pub fn gnuplot(pdf: &Pdf) -> String {
    let mut s = String::from("# value probability\n");
    for (v, p) in pdf {
        let _ = writeln!(s, "{v} {}", decimal(p, 12));
    }
    s
}

#[derive(Serialize)]
struct BuildSummary {
    num_vars: u32,
    num_clauses: usize,
    n_inputs: usize,
    error_bits: usize,
    parts: usize,
    cut_vars: usize,
    tree_vertices: usize,
    tree_roots: usize,
    max_rows: usize,
    total_rows: usize,
    merge_rounds: usize,
    merges: usize,
    absorptions: usize,
    escalations: usize,
    final_ts: String,
}

pub fn build_summary(sys: &CnfSystem, b: &Built, format: Format) -> String {
    let stats = b.tree.stats();
    let rows: Vec<usize> = b.tree.nodes().iter().map(|n| n.table.len()).collect();
    let s = BuildSummary {
        num_vars: sys.num_vars(),
        num_clauses: sys.clauses().len(),
        n_inputs: sys.n(),
        error_bits: sys.error_vars().len(),
        parts: b.partitioning.parts.len(),
        cut_vars: b.partitioning.cut_vars.len(),
        tree_vertices: rows.len(),
        tree_roots: b.tree.roots().len(),
        max_rows: rows.iter().copied().max().unwrap_or(0),
        total_rows: rows.iter().sum(),
        merge_rounds: stats.rounds,
        merges: stats.merges,
        absorptions: stats.absorptions,
        escalations: stats.escalations,
        final_ts: stats.final_ts.to_string(),
    };
    let value = serde_json::to_value(&s).expect("summary serializes");
    match format {
        Format::Json => {
            let mut t = serde_json::to_string_pretty(&value).expect("summary serializes");
            t.push('\n');
            t
        }
        Format::Csv | Format::Text => {
            let sep = if format == Format::Csv { "," } else { " " };
            let mut t = if format == Format::Csv { "field,value\n".to_string() } else { String::new() };
            for (k, v) in value.as_object().expect("object") {
                let v = v.as_str().map_or_else(|| v.to_string(), str::to_string);
                let _ = writeln!(t, "{k}{sep}{v}");
            }
            t
        }
    }
}
