//! Text and TSV renderings of evaluation results.
//!
//! The text report is `key<TAB>value`, one per line, in a fixed key order.
//! Ratios use the shortest representation that round-trips; undefined
//! values print as `UNDEFINED`.

use std::fmt::Write as _;
use std::fs::OpenOptions;
use std::io::{self, Write};
use std::path::Path;

use cslid_core::metrics::{prediction_histogram, EvalInstance, MetricsReport};

pub const UNDEFINED: &str = "UNDEFINED";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| UNDEFINED.to_string(), |v| v.to_string())
}

/// Key/value lines, each key prefixed with `prefix`.
pub fn render(report: &MetricsReport, prefix: &str) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        writeln!(out, "{prefix}{k}\t{v}").expect("writing to a string");
    };
    kv("n", report.n.to_string());
    kv("universe_size", report.universe_size.to_string());
    kv("exact_match", report.exact_match.to_string());
    kv("hamming", report.hamming.to_string());
    kv("macro_fpr", opt(report.macro_fpr.value));
    kv("macro_fpr_included", report.macro_fpr.included.to_string());
    kv("macro_fpr_excluded", report.macro_fpr.excluded.to_string());
    let pr = &report.precision_recall;
    kv("macro_precision", opt(pr.macro_precision));
    kv("macro_recall", opt(pr.macro_recall));
    kv("undefined_precision", pr.undefined_precision.to_string());
    kv("undefined_recall", pr.undefined_recall.to_string());
    kv("undefined_pr_count", report.undefined_pr_count().to_string());
    kv("empty_rate", report.aux.empty_rate.to_string());
    kv("cs_empty_rate", report.aux.cs_empty_rate.to_string());
    kv("unique_langs_predicted", report.aux.unique_langs_predicted.to_string());
    kv("mean_preds", report.aux.mean_preds.to_string());
    for l in &pr.per_lang {
        if l.precision.is_some() || l.recall.is_some() {
            kv(&format!("precision.{}", l.tag), opt(l.precision));
            kv(&format!("recall.{}", l.tag), opt(l.recall));
        }
    }
    out
}

/// The full report and, when there are code-switched instances, the same
/// report over them with keys prefixed `cs.`.
pub fn render_with_cs(all: &MetricsReport, cs: Option<&MetricsReport>) -> String {
    let mut out = render(all, "");
    match cs {
        Some(cs) => out.push_str(&render(cs, "cs.")),
        None => out.push_str("cs.n\t0\n"),
    }
    out
}

/// Table identifiers and their header rows.
pub const TABLES: &[(&str, &str)] = &[
    ("table1", "model\texact_match\thamming\tfpr\tmean_preds"),
    ("table2", "dataset\tmodel\texact_match\thamming\tfpr"),
    ("table3", "dataset\tmodel\texact_match\thamming\tfpr"),
    ("table4", "dataset\tmodel\tempty_all_pct\tempty_cs_pct"),
    ("table6", "dataset\tmodel\trank\tprediction\tcount"),
];

fn fixed(v: f64, places: usize) -> String {
    format!("{v:.places$}")
}

fn fpr4(r: &MetricsReport) -> String {
    r.macro_fpr.value.map_or_else(|| UNDEFINED.to_string(), |v| fixed(v, 4))
}

/// Data rows for each table, keyed like [`TABLES`]: monolingual
/// benchmark summary, main metrics over all and over code-switched
/// sentences, empty-prediction percentages, and the five most frequent
/// predictions.
pub fn table_rows(
    dataset: &str,
    model: &str,
    all: &MetricsReport,
    cs: Option<&MetricsReport>,
    instances: &[EvalInstance],
) -> Vec<(&'static str, String)> {
    let mut rows = vec![
        (
            "table1",
            format!(
                "{model}\t{}\t{}\t{}\t{}",
                fixed(all.exact_match, 3),
                fixed(all.hamming, 4),
                fpr4(all),
                fixed(all.aux.mean_preds, 3)
            ),
        ),
        (
            "table2",
            format!(
                "{dataset}\t{model}\t{}\t{}\t{}",
                fixed(all.exact_match, 3),
                fixed(all.hamming, 4),
                fpr4(all)
            ),
        ),
    ];
    if let Some(cs) = cs {
        rows.push((
            "table3",
            format!(
                "{dataset}\t{model}\t{}\t{}\t{}",
                fixed(cs.exact_match, 3),
                fixed(cs.hamming, 4),
                fpr4(cs)
            ),
        ));
    }
    rows.push((
        "table4",
        format!(
            "{dataset}\t{model}\t{}\t{}",
            fixed(100.0 * all.aux.empty_rate, 1),
            cs.map_or_else(|| "-".to_string(), |c| fixed(100.0 * c.aux.empty_rate, 1))
        ),
    ));
    for (rank, (set, count)) in prediction_histogram(instances, 5).into_iter().enumerate() {
        let label = if set.is_empty() {
            "None".to_string()
        } else {
            set.to_string()
        };
        rows.push(("table6", format!("{dataset}\t{model}\t{}\t{label}\t{count}", rank + 1)));
    }
    rows
}

/// Appends rows to `<dir>/<table>.tsv`, writing the header into new files.
pub fn append_tables(dir: &Path, rows: &[(&'static str, String)]) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for &(table, header) in TABLES {
        let mine: Vec<&String> = rows.iter().filter(|(t, _)| *t == table).map(|(_, r)| r).collect();
        if mine.is_empty() {
            continue;
        }
        let path = dir.join(format!("{table}.tsv"));
        let fresh = !path.exists();
        let mut f = OpenOptions::new().create(true).append(true).open(&path)?;
        if fresh {
            writeln!(f, "{header}")?;
        }
        for r in mine {
            writeln!(f, "{r}")?;
        }
    }
    Ok(())
}
