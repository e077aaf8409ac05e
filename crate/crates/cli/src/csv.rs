//! Metric rows and their CSV encoding.

use std::fs;
use std::path::Path;

use fedmeter_core::optimizer::ScaState;
use fedmeter_core::pfl::RunOutput;

use crate::error::CliError;

pub const TRAINING_HEADER: &str = "round,client_id,alpha_best,train_loss,global_mae,global_rmse";
pub const OPTIMIZATION_HEADER: &str = "iteration,objective_s,feasible,max_constraint_violation";

/// Largest normalized violation still reported as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-6;

/// Twelve significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.11e}")
}

/// One client's round (`client_id` set, global fields empty) or the round's
/// global evaluation (`client_id` empty, client fields empty).
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingRow {
    pub round: usize,
    pub client_id: Option<usize>,
    pub alpha_best: Option<f64>,
    pub train_loss: Option<f64>,
    pub global_mae: Option<f64>,
    pub global_rmse: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizationRow {
    pub iteration: usize,
    /// Total latency over all training rounds, seconds.
    pub objective_s: f64,
    pub feasible: bool,
    pub max_constraint_violation: f64,
}

pub trait CsvRow {
    const HEADER: &'static str;
    fn encode(&self) -> String;
}

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

impl CsvRow for TrainingRow {
    const HEADER: &'static str = TRAINING_HEADER;
    fn encode(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.round,
            opt(self.client_id, |c| c.to_string()),
            opt(self.alpha_best, fmt_float),
            opt(self.train_loss, fmt_float),
            opt(self.global_mae, fmt_float),
            opt(self.global_rmse, fmt_float),
        )
    }
}

impl CsvRow for OptimizationRow {
    const HEADER: &'static str = OPTIMIZATION_HEADER;
    fn encode(&self) -> String {
        format!(
            "{},{},{},{}",
            self.iteration,
            fmt_float(self.objective_s),
            self.feasible,
            fmt_float(self.max_constraint_violation)
        )
    }
}

pub fn render<R: CsvRow>(rows: &[R]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(R::HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.encode());
        out.push('\n');
    }
    out
}

pub fn emit_metrics<R: CsvRow>(rows: &[R], path: &Path) -> Result<(), CliError> {
    fs::write(path, render(rows)).map_err(|e| CliError::io(path, e))
}

/// Per round: one row per client in client-id order, then the global row.
/// `client_offset` shifts the reported ids.
pub fn training_rows(run: &RunOutput<f64>, client_offset: usize) -> Vec<TrainingRow> {
    let mut rows = Vec::new();
    for r in &run.rounds {
        for (i, &id) in r.client_ids.iter().enumerate() {
            rows.push(TrainingRow {
                round: r.round,
                client_id: Some(id + client_offset),
                alpha_best: Some(r.alpha_best[i]),
                train_loss: Some(r.train_loss[i]),
                global_mae: None,
                global_rmse: None,
            });
        }
        rows.push(TrainingRow {
            round: r.round,
            client_id: None,
            alpha_best: None,
            train_loss: None,
            global_mae: Some(r.global_mae),
            global_rmse: Some(r.global_rmse),
        });
    }
    rows
}

/// One row per SCA iteration, iteration 0 being the initial point.
pub fn optimization_rows(state: &ScaState, rounds: usize) -> Vec<OptimizationRow> {
    state
        .history
        .iter()
        .zip(&state.violations)
        .enumerate()
        .map(|(i, (&obj, &v))| OptimizationRow {
            iteration: i,
            objective_s: rounds as f64 * obj,
            feasible: v <= FEASIBILITY_TOL,
            max_constraint_violation: v,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_rows_is_header_only() {
        assert_eq!(render::<TrainingRow>(&[]), format!("{TRAINING_HEADER}\n"));
        assert_eq!(render::<OptimizationRow>(&[]), format!("{OPTIMIZATION_HEADER}\n"));
    }

    #[test]
    fn rows_have_fixed_column_count() {
        let row = TrainingRow {
            round: 1,
            client_id: None,
            alpha_best: None,
            train_loss: None,
            global_mae: Some(0.5),
            global_rmse: Some(0.25),
        };
        assert_eq!(row.encode(), "1,,,,5.00000000000e-1,2.50000000000e-1");
        let opt = OptimizationRow { iteration: 3, objective_s: 6.0, feasible: true, max_constraint_violation: -0.5 };
        assert_eq!(opt.encode(), "3,6.00000000000e0,true,-5.00000000000e-1");
    }

    proptest! {
        #[test]
        fn floats_reparse_to_twelve_digits(x in prop::num::f64::NORMAL) {
            let back: f64 = fmt_float(x).parse().unwrap();
            prop_assert!((back - x).abs() <= x.abs() * 1e-11);
            let mantissa = fmt_float(x);
            let digits = mantissa.split('e').next().unwrap().chars().filter(char::is_ascii_digit).count();
            prop_assert_eq!(digits, 12);
        }
    }
}
