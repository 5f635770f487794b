//! CSV tables for reports.

use std::io::Write;

use serde::Serialize;

use super::distances::DistanceReport;
use super::eval::{EvalReport, SweepCell};
use crate::error::Result;

/// One row per method × budget × run with the aggregate scores.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow<'a> {
    pub method: &'a str,
    pub budget: usize,
    pub run: usize,
    pub seed: u64,
    pub pooled: f64,
    pub task_mean: f64,
    pub auc: f64,
}

/// One row per task × budget × run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskRow<'a> {
    pub method: &'a str,
    pub budget: usize,
    pub run: usize,
    pub seed: u64,
    pub task: &'a str,
    pub tpr_at_5: f64,
}

pub fn grid_rows(report: &EvalReport) -> Vec<GridRow<'_>> {
    report
        .runs
        .iter()
        .map(|r| GridRow {
            method: &report.method,
            budget: report.budget,
            run: r.run,
            seed: r.seed,
            pooled: r.pooled,
            task_mean: r.task_mean,
            auc: r.auc,
        })
        .collect()
}

pub fn task_rows(report: &EvalReport) -> Vec<TaskRow<'_>> {
    let mut rows = Vec::new();
    for r in &report.runs {
        for (task, &v) in &r.tasks {
            rows.push(TaskRow {
                method: &report.method,
                budget: report.budget,
                run: r.run,
                seed: r.seed,
                task,
                tpr_at_5: v,
            });
        }
    }
    rows
}

pub const GRID_HEADER: [&str; 7] = ["method", "budget", "run", "seed", "pooled", "task_mean", "auc"];
pub const TASK_HEADER: [&str; 6] = ["method", "budget", "run", "seed", "task", "tpr_at_5"];

/// A CSV writer that emits `header` once and expects rows without one.
pub fn headed_writer<W: Write>(writer: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(header)?;
    w.flush()?;
    Ok(w)
}

/// Appends `rows` and flushes, so a partial table survives an interruption.
pub fn append_rows<W: Write, T: Serialize>(w: &mut csv::Writer<W>, rows: &[T]) -> Result<()> {
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_runs_csv<W: Write>(writer: W, report: &EvalReport) -> Result<()> {
    let mut w = headed_writer(writer, &TASK_HEADER)?;
    append_rows(&mut w, &task_rows(report))
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    method: &'a str,
    budget: usize,
    task: &'a str,
    mean: f64,
    std: f64,
    runs: usize,
}

/// One row per task with mean and std over runs, then the aggregates.
pub fn write_summary_csv<W: Write>(writer: W, report: &EvalReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut emit = |task: &str, s: &super::eval::Summary| {
        w.serialize(SummaryRow {
            method: &report.method,
            budget: report.budget,
            task,
            mean: s.mean,
            std: s.std,
            runs: s.per_run.len(),
        })
    };
    for t in &report.tasks {
        emit(&t.task, &t.tpr_at_5)?;
    }
    emit("aggregate_pooled", &report.aggregate_pooled)?;
    emit("aggregate_task_mean", &report.aggregate_task_mean)?;
    w.flush()?;
    Ok(())
}

pub fn write_pairs_csv<W: Write>(writer: W, report: &EvalReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for p in &report.pairs {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_distance_csv<W: Write>(writer: W, report: &DistanceReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in &report.rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SweepSummaryRow<'a> {
    method: &'a str,
    budget: usize,
    task: &'a str,
    mean: f64,
    std: f64,
}

/// The budget-sweep data table: mean and std per task and budget.
pub fn write_sweep_summary_csv<W: Write>(writer: W, cells: &[SweepCell]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for cell in cells {
        let Some(r) = &cell.report else { continue };
        for t in &r.tasks {
            w.serialize(SweepSummaryRow {
                method: &r.method,
                budget: r.budget,
                task: &t.task,
                mean: t.tpr_at_5.mean,
                std: t.tpr_at_5.std,
            })?;
        }
        w.serialize(SweepSummaryRow {
            method: &r.method,
            budget: r.budget,
            task: "aggregate_pooled",
            mean: r.aggregate_pooled.mean,
            std: r.aggregate_pooled.std,
        })?;
    }
    w.flush()?;
    Ok(())
}
