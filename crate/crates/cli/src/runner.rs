//! Executes a scenario point by point and collects a result table.

use qdemon_core::demons::{
    jarzynski_feedback, jarzynski_trajectory, run_autonomous_demon, run_feedback_demon,
    run_landauer_protocol, run_trajectory_demon,
};
use qdemon_core::quantum::{husimi_q, DensityMatrix, C64};
use qdemon_core::thermo::{plain_mean, EstimatorResult};
use serde_json::Value;

use crate::error::CliError;
use crate::scenario::{point_seed, ProtocolParams, Scenario};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColumnKind {
    Plain,
    /// Information or entropy in nats; rescaled when bits are requested.
    Information,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Number(f64),
    Count(u64),
    Text(String),
}

impl Cell {
    fn render(&self, scale: f64) -> String {
        match self {
            Cell::Number(x) => format_number(x * scale),
            Cell::Count(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// Shortest round-trip decimal, switching to exponent form for very small or
/// very large magnitudes.
pub fn format_number(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// Per-point state dumps of the autonomous demon.
#[derive(Clone, Debug)]
pub struct Artifacts {
    pub rho_s: DensityMatrix,
    pub rho_d: DensityMatrix,
    pub husimi: Vec<(C64, f64)>,
}

#[derive(Clone, Debug, Default)]
pub struct ResultTable {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
    pub artifacts: Vec<Artifacts>,
    pub point_seeds: Vec<u64>,
}

impl ResultTable {
    /// Header names; information columns gain a `_bits` marker when `bits`.
    pub fn header(&self, bits: bool) -> Vec<String> {
        self.columns
            .iter()
            .map(|c| match (c.kind, bits) {
                (ColumnKind::Information, true) => match c.name.strip_suffix("_stderr") {
                    Some(stem) => format!("{stem}_bits_stderr"),
                    None => format!("{}_bits", c.name),
                },
                _ => c.name.clone(),
            })
            .collect()
    }

    pub fn rendered_rows(&self, bits: bool) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&self.columns)
                    .map(|(cell, col)| {
                        let scale = if bits && col.kind == ColumnKind::Information {
                            1.0 / std::f64::consts::LN_2
                        } else {
                            1.0
                        };
                        cell.render(scale)
                    })
                    .collect()
            })
            .collect()
    }
}

/// Builds one row while recording the column layout on first use.
struct RowBuilder<'a> {
    columns: &'a mut Vec<Column>,
    cells: Vec<Cell>,
    first: bool,
    /// Name of the sweep column, so fixed columns do not repeat it.
    sweep: Option<&'a str>,
}

impl<'a> RowBuilder<'a> {
    fn new(columns: &'a mut Vec<Column>, sweep: Option<(&'a str, Cell)>) -> Self {
        let first = columns.is_empty();
        let mut row = Self {
            columns,
            cells: Vec::new(),
            first,
            sweep: None,
        };
        if let Some((name, cell)) = sweep {
            row.push(name, ColumnKind::Plain, cell);
            row.sweep = Some(name);
        }
        row
    }

    fn push(&mut self, name: &str, kind: ColumnKind, cell: Cell) {
        if self.sweep == Some(name) {
            return;
        }
        if self.first {
            self.columns.push(Column {
                name: name.to_string(),
                kind,
            });
        }
        self.cells.push(cell);
    }

    fn number(&mut self, name: &str, x: f64) {
        self.push(name, ColumnKind::Plain, Cell::Number(x));
    }

    fn count(&mut self, name: &str, n: usize) {
        self.push(name, ColumnKind::Plain, Cell::Count(n as u64));
    }

    fn estimate(&mut self, name: &str, kind: ColumnKind, e: &EstimatorResult) {
        self.push(name, kind, Cell::Number(e.mean));
        self.push(&format!("{name}_stderr"), kind, Cell::Number(e.std_error));
    }

    fn information(&mut self, name: &str, x: f64) {
        self.push(name, ColumnKind::Information, Cell::Number(x));
    }
}

fn sweep_cell(value: &Value) -> Cell {
    match value {
        Value::String(s) => Cell::Text(s.clone()),
        Value::Number(n) => match n.as_f64() {
            Some(x) => Cell::Number(x),
            None => Cell::Text(n.to_string()),
        },
        other => Cell::Text(other.to_string()),
    }
}

/// Run every sweep point in order. Trials inside a point run on the
/// current rayon pool.
pub fn execute(scenario: &Scenario) -> Result<ResultTable, CliError> {
    let points = scenario.points()?;
    let mut table = ResultTable::default();
    let base_seed = scenario.seed.unwrap_or(0);
    for (index, point) in points.iter().enumerate() {
        let seed = point_seed(base_seed, index);
        table.point_seeds.push(seed);
        let sweep = match (&scenario.sweep, &point.value) {
            (Some(sweep), Some(value)) => Some((sweep.parameter.as_str(), sweep_cell(value))),
            _ => None,
        };
        let mut row = RowBuilder::new(&mut table.columns, sweep);
        match &point.params {
            ProtocolParams::Feedback(p) => {
                let cfg = p.config(seed)?;
                let records = run_feedback_demon(&cfg)?;
                let est = jarzynski_feedback(&records, &cfg)?;
                let work: Vec<f64> = records.iter().map(|r| r.work).collect();
                row.number("beta_homega", cfg.beta_homega);
                row.number("eps_fb", est.feedback_error);
                row.number("lambda_fb", est.lambda_fb);
                row.estimate("jarz_generalized", ColumnKind::Plain, &est.generalized);
                row.estimate("jarz_plain", ColumnKind::Plain, &est.plain);
                row.estimate("avg_info", ColumnKind::Information, &est.information);
                row.estimate("mean_work", ColumnKind::Plain, &plain_mean(&work)?);
                row.count("irreversible_trials", est.irreversible_trials);
                row.count("trials", records.len());
            }
            ProtocolParams::Trajectory(p) => {
                let cfg = p.config(seed)?;
                let trials = run_trajectory_demon(&cfg)?;
                let est = jarzynski_trajectory(&trials, cfg.beta_homega, seed)?;
                let work: Vec<f64> = trials.iter().map(|t| t.tpm.work).collect();
                row.number("t_m", cfg.t_m);
                row.estimate("jarz_generalized", ColumnKind::Plain, &est.generalized);
                row.estimate("jarz_plain", ColumnKind::Plain, &est.plain);
                row.estimate("avg_info", ColumnKind::Information, &est.information);
                row.estimate(
                    "record_info",
                    ColumnKind::Information,
                    &est.record_information,
                );
                row.estimate("mean_work", ColumnKind::Plain, &plain_mean(&work)?);
                row.count("irreversible_trials", est.irreversible_trials);
                row.count("trials", trials.len());
            }
            ProtocolParams::Autonomous(p) => {
                let cfg = p.config()?;
                let r = run_autonomous_demon(&cfg)?;
                row.number("alpha_abs", cfg.alpha.norm());
                row.count("n_cav", cfg.truncation());
                row.number("final_excited", r.final_excited);
                row.number("work_direct", r.work_direct);
                row.number("delta_u", r.delta_u);
                row.information("entropy_qubit_initial", r.entropies.qubit_initial);
                row.information("entropy_qubit", r.entropies.qubit);
                row.information("entropy_cavity", r.entropies.cavity);
                row.information("entropy_joint", r.entropies.joint);
                let grid = p.husimi_grid()?;
                let q = husimi_q(&r.rho_d, &grid)?;
                table.artifacts.push(Artifacts {
                    rho_s: r.rho_s,
                    rho_d: r.rho_d,
                    husimi: grid.into_iter().zip(q).collect(),
                });
            }
            ProtocolParams::Landauer(p) => {
                let r = run_landauer_protocol(&p.config())?;
                row.number("beta_homega1", p.beta_homega1);
                row.number("omega2_ratio", p.omega2_ratio);
                row.number("stage1", r.stage1);
                row.number("stage3", r.stage3);
                row.number("stage3_reversible", r.stage3_reversible);
                row.number("total", r.total);
                row.number("ratio", r.ratio);
                row.information("acquired_information", r.acquired_information);
                row.number("information_ratio", r.information_ratio);
            }
        }
        let cells = row.cells;
        table.rows.push(cells);
    }
    Ok(table)
}
