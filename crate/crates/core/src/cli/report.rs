//! Report files. CSVs follow RFC 4180 with fixed headers; reals are written in
//! shortest round-trip form.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::EffectiveConfig;
use crate::family::format_schedule;
use crate::search::{competition_rank, AggregateRow, Ranked, Trajectory};

pub const RESULTS_HEADER: [&str; 10] = [
    "rank",
    "index",
    "algorithm",
    "status",
    "cost",
    "it_con",
    "nodes_expanded",
    "budget_exhausted",
    "certified",
    "schedule",
];

pub const ENSEMBLE_HEADER: [&str; 8] = ["start_index", "start", "position", "index", "algorithm", "status", "cost", "rank"];

pub const AGGREGATE_HEADER: [&str; 6] = ["index", "algorithm", "n_starts", "n_feasible", "n_cheapest", "mean_cost"];

pub const GRID_HEADER: [&str; 3] = ["x1", "x2", "f"];

/// Contents of `results.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscoverReport {
    pub config: EffectiveConfig,
    pub results: Vec<Ranked>,
}

/// Contents of `ensemble.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleReport {
    pub config: EffectiveConfig,
    pub candidates: Vec<String>,
    pub starts: Vec<Vec<f64>>,
    pub per_start: Vec<Vec<Ranked>>,
    pub aggregate: Vec<AggregateRow>,
}

pub fn real(v: f64) -> String {
    format!("{v}")
}

fn opt_real(v: Option<f64>) -> String {
    v.map(real).unwrap_or_default()
}

fn point(p: &[f64]) -> String {
    p.iter().map(|v| real(*v)).collect::<Vec<_>>().join(" ")
}

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

pub fn results_rows(results: &[Ranked]) -> Vec<Vec<String>> {
    results
        .iter()
        .enumerate()
        .map(|(pos, r)| {
            let v = &r.verdict;
            let best = v.best.as_ref();
            vec![
                (pos + 1).to_string(),
                r.index.to_string(),
                r.algorithm.clone(),
                v.status.as_str().to_string(),
                opt_real(v.cost),
                best.and_then(|t| t.it_con).map(|i| i.to_string()).unwrap_or_default(),
                v.nodes_expanded.to_string(),
                v.budget_exhausted.to_string(),
                v.certified_optimal().to_string(),
                best.map(|t| format_schedule(&t.schedule)).unwrap_or_default(),
            ]
        })
        .collect()
}

pub fn write_results_csv(path: &Path, results: &[Ranked]) -> io::Result<()> {
    write_csv(path, &RESULTS_HEADER, results_rows(results))
}

pub fn trajectory_header(n: usize) -> Vec<String> {
    let mut h = vec!["it".to_string()];
    h.extend((1..=n).map(|i| format!("x{i}")));
    h.extend(["residual", "abar", "sign", "counted", "iter_cost"].map(String::from));
    h
}

pub fn write_trajectory_csv(path: &Path, n: usize, t: &Trajectory) -> io::Result<()> {
    let header = trajectory_header(n);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = t.points.iter().enumerate().map(|(it, x)| {
        let mut row = vec![it.to_string()];
        row.extend(x.iter().map(|v| real(*v)));
        row.push(t.residuals.get(it).map(|r| real(*r)).unwrap_or_default());
        if it == 0 {
            row.extend(std::iter::repeat(String::new()).take(4));
        } else {
            let step = t.schedule[it - 1];
            row.push(step.abar.to_string());
            row.push(if step.value() > 0.0 { "+" } else { "-" }.to_string());
            row.push(t.counted[it - 1].to_string());
            row.push(real(t.iter_costs[it - 1]));
        }
        row
    });
    write_csv(path, &header, rows)
}

pub fn write_ensemble_csv(path: &Path, starts: &[Vec<f64>], per_start: &[Vec<Ranked>]) -> io::Result<()> {
    let mut rows = Vec::new();
    for (si, (start, list)) in starts.iter().zip(per_start).enumerate() {
        for (pos, r) in list.iter().enumerate() {
            rows.push(vec![
                si.to_string(),
                point(start),
                (pos + 1).to_string(),
                r.index.to_string(),
                r.algorithm.clone(),
                r.verdict.status.as_str().to_string(),
                opt_real(r.verdict.cost),
                competition_rank(list, r).map(|k| k.to_string()).unwrap_or_default(),
            ]);
        }
    }
    write_csv(path, &ENSEMBLE_HEADER, rows)
}

pub fn write_aggregate_csv(path: &Path, rows: &[AggregateRow]) -> io::Result<()> {
    write_csv(
        path,
        &AGGREGATE_HEADER,
        rows.iter().map(|r| {
            vec![
                r.index.to_string(),
                r.algorithm.clone(),
                r.n_starts.to_string(),
                r.n_feasible.to_string(),
                r.n_cheapest.to_string(),
                opt_real(r.mean_cost),
            ]
        }),
    )
}

pub fn write_grid_csv(path: &Path, rows: &[(f64, f64, Option<f64>)]) -> io::Result<()> {
    write_csv(
        path,
        &GRID_HEADER,
        rows.iter().map(|(a, b, f)| vec![real(*a), real(*b), opt_real(*f)]),
    )
}

pub fn summary(problem: &str, algorithm: &str, t: &Trajectory) -> String {
    let mut s = String::new();
    s.push_str(&format!("problem: {problem}\n"));
    s.push_str(&format!("algorithm: {algorithm}\n"));
    s.push_str(&format!("schedule: {}\n", format_schedule(&t.schedule)));
    s.push_str(&format!("iterations: {}\n", t.schedule.len()));
    if let Some(x) = t.points.last() {
        s.push_str(&format!("final point: ({})\n", point(x).replace(' ', ", ")));
    }
    if let Some(r) = t.residuals.last() {
        s.push_str(&format!("final residual: {}\n", real(*r)));
    }
    let outcome = if t.feasible {
        format!("feasible, cost {}, it_con {}", real(t.total_cost), t.it_con.unwrap_or(0))
    } else if let Some(f) = &t.failure {
        format!("failed at iteration {}: {}, cost {}", f.iteration, f.message, real(t.total_cost))
    } else {
        format!("not converged, cost {}", real(t.total_cost))
    };
    s.push_str(&format!("result: {outcome}\n"));
    s
}
