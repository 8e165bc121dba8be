//! Trajectory files.
//!
//! JSON lines: one object per step with keys `t`, `epsilon`, `opinions`
//! (`n` rows of `d` coordinates), `alphas` and `open_set` (the assignment
//! applied to leave this step, `null` on the last step), `edge_count`,
//! `component_count`, `Z`, `decrement`, `nl8_bound` (`null` on the last step)
//! and `merges` (zero-based pairs that merged on arrival at this step).
//!
//! CSV: one row per step with columns `t`, `x_<i>_<k>` (agent-major, one-based
//! labels), `alpha_<i>`, `Z`, `decrement`, `nl8_bound`, `merges`; cells that do
//! not apply on the last step are empty and merges are written `i-j` with
//! one-based labels, separated by `;`.
//!
//! Floats are written in shortest round-trip form, so values read back are
//! bit-identical to the ones written.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{OpinionState, StubbornnessAssignment};
use crate::error::{Error, Result};
use crate::scenario::TrajectoryFormat;
use crate::trajectory::{StepRecord, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonlRow {
    pub t: u64,
    pub epsilon: f64,
    pub opinions: Vec<Vec<f64>>,
    pub alphas: Option<Vec<f64>>,
    pub open_set: Option<Vec<usize>>,
    pub edge_count: usize,
    pub component_count: usize,
    #[serde(rename = "Z")]
    pub z: f64,
    pub decrement: Option<f64>,
    pub nl8_bound: Option<f64>,
    pub merges: Vec<(usize, usize)>,
}

impl JsonlRow {
    pub fn from_record(rec: &StepRecord) -> Self {
        JsonlRow {
            t: rec.state.t(),
            epsilon: rec.state.epsilon(),
            opinions: rec.state.to_rows(),
            alphas: rec.alpha.as_ref().map(|a| a.alphas().to_vec()),
            open_set: rec.alpha.as_ref().map(|a| a.open_set().to_vec()),
            edge_count: rec.edge_count,
            component_count: rec.component_count,
            z: rec.energy,
            decrement: rec.decrement,
            nl8_bound: rec.nl8_bound,
            merges: rec.merges.clone(),
        }
    }

    fn into_record(self) -> Result<StepRecord> {
        let state = OpinionState::new(&self.opinions, self.epsilon)?.at_time(self.t);
        let alpha = self.alphas.map(StubbornnessAssignment::new).transpose()?;
        Ok(StepRecord {
            state,
            alpha,
            edge_count: self.edge_count,
            component_count: self.component_count,
            energy: self.z,
            decrement: self.decrement,
            nl8_bound: self.nl8_bound,
            merges: self.merges,
        })
    }
}

pub fn write_jsonl<W: Write>(traj: &Trajectory, mut out: W) -> Result<()> {
    for rec in &traj.steps {
        let line = serde_json::to_string(&JsonlRow::from_record(rec)).map_err(|e| Error::Parse(e.to_string()))?;
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn csv_header(n: usize, d: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    for i in 1..=n {
        for k in 1..=d {
            cols.push(format!("x_{i}_{k}"));
        }
    }
    cols.extend((1..=n).map(|i| format!("alpha_{i}")));
    cols.extend(["Z", "decrement", "nl8_bound", "merges"].map(String::from));
    cols
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_csv<W: Write>(traj: &Trajectory, mut out: W) -> Result<()> {
    let first = &traj.steps[0].state;
    let n = first.n();
    writeln!(out, "{}", csv_header(n, traj.dim).join(","))?;
    for rec in &traj.steps {
        let mut line = rec.state.t().to_string();
        for c in rec.state.coords() {
            write!(line, ",{c}").expect("write to String");
        }
        for i in 0..n {
            let a = rec.alpha.as_ref().map(|a| a.alphas()[i]);
            write!(line, ",{}", opt_cell(a)).expect("write to String");
        }
        let merges: Vec<String> = rec.merges.iter().map(|(i, j)| format!("{}-{}", i + 1, j + 1)).collect();
        write!(
            line,
            ",{},{},{},{}",
            rec.energy,
            opt_cell(rec.decrement),
            opt_cell(rec.nl8_bound),
            merges.join(";")
        )
        .expect("write to String");
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn export_trajectory(traj: &Trajectory, path: impl AsRef<Path>, format: TrajectoryFormat) -> Result<()> {
    let out = BufWriter::new(File::create(path)?);
    match format {
        TrajectoryFormat::Jsonl => write_jsonl(traj, out),
        TrajectoryFormat::Csv => write_csv(traj, out),
    }
}

fn finish(steps: Vec<StepRecord>) -> Result<Trajectory> {
    let first = steps
        .first()
        .ok_or_else(|| Error::Parse("trajectory file has no steps".into()))?;
    let epsilon = first.state.epsilon();
    let dim = first.state.dim();
    for pair in steps.windows(2) {
        if pair[1].state.t() != pair[0].state.t() + 1 {
            return Err(Error::Parse(format!(
                "steps not contiguous: {} follows {}",
                pair[1].state.t(),
                pair[0].state.t()
            )));
        }
    }
    Ok(Trajectory { epsilon, dim, steps })
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<Trajectory> {
    let mut steps = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: JsonlRow =
            serde_json::from_str(&line).map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        steps.push(row.into_record()?);
    }
    finish(steps)
}

fn parse_f64(cell: &str, lineno: usize) -> Result<f64> {
    cell.parse()
        .map_err(|_| Error::Parse(format!("line {lineno}: `{cell}` is not a number")))
}

fn parse_opt(cell: &str, lineno: usize) -> Result<Option<f64>> {
    if cell.is_empty() {
        Ok(None)
    } else {
        parse_f64(cell, lineno).map(Some)
    }
}

/// Reads a CSV trajectory. The confidence bound is not stored in CSV and must
/// be supplied.
pub fn read_csv<R: BufRead>(input: R, epsilon: f64) -> Result<Trajectory> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))??;
    let cols: Vec<&str> = header.split(',').collect();
    let n = cols.iter().filter(|c| c.starts_with("alpha_")).count();
    let xs = cols.iter().filter(|c| c.starts_with("x_")).count();
    if n == 0 || xs % n != 0 {
        return Err(Error::Parse("CSV header lacks opinion or alpha columns".into()));
    }
    let d = xs / n;
    if cols != csv_header(n, d) {
        return Err(Error::Parse("unexpected CSV header".into()));
    }
    let mut steps = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        let lineno = k + 2;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != cols.len() {
            return Err(Error::Parse(format!("line {lineno}: expected {} cells", cols.len())));
        }
        let t: u64 = cells[0]
            .parse()
            .map_err(|_| Error::Parse(format!("line {lineno}: bad step index")))?;
        let coords = cells[1..1 + xs]
            .iter()
            .map(|c| parse_f64(c, lineno))
            .collect::<Result<Vec<_>>>()?;
        let alphas = cells[1 + xs..1 + xs + n]
            .iter()
            .map(|c| parse_opt(c, lineno))
            .collect::<Result<Vec<_>>>()?;
        let alpha = if alphas.iter().all(Option::is_some) {
            Some(StubbornnessAssignment::new(alphas.into_iter().flatten().collect())?)
        } else {
            None
        };
        let rest = &cells[1 + xs + n..];
        let merges = rest[3]
            .split(';')
            .filter(|s| !s.is_empty())
            .map(|pair| {
                let (i, j) = pair
                    .split_once('-')
                    .ok_or_else(|| Error::Parse(format!("line {lineno}: bad merge `{pair}`")))?;
                let parse = |s: &str| -> Result<usize> {
                    s.parse::<usize>()
                        .ok()
                        .and_then(|v| v.checked_sub(1))
                        .ok_or_else(|| Error::Parse(format!("line {lineno}: bad merge `{pair}`")))
                };
                Ok((parse(i)?, parse(j)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let state = OpinionState::from_flat(t, d, epsilon, coords)?;
        let graph = crate::profile::build_profile(&state);
        steps.push(StepRecord {
            edge_count: graph.edges().len(),
            component_count: graph.components().len(),
            state,
            alpha,
            energy: parse_f64(rest[0], lineno)?,
            decrement: parse_opt(rest[1], lineno)?,
            nl8_bound: parse_opt(rest[2], lineno)?,
            merges,
        });
    }
    finish(steps)
}

/// Reads a trajectory file, choosing the format by extension (`.csv` needs `epsilon`).
pub fn load_trajectory(path: impl AsRef<Path>, epsilon: Option<f64>) -> Result<Trajectory> {
    let path = path.as_ref();
    let input = BufReader::new(File::open(path)?);
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        let eps = epsilon.ok_or_else(|| Error::Usage("CSV trajectories need --epsilon".into()))?;
        read_csv(input, eps)
    } else {
        read_jsonl(input)
    }
}
