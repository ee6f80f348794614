//! File formats: measurement CSV input, result CSV/JSON output, synthetic
//! data and ground truth.
//!
//! Row and column numbers in parse errors are 1-based file positions, so the
//! header (when present) is row 1.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Trim, WriterBuilder};
use serde::{Deserialize, Serialize};

use crate::driver::{IterationDiagnostics, MasaResult};
use crate::error::{MasaError, Result};
use crate::state_model::StateModel;
use crate::synth::GroundTruth;
use crate::timeseries::{Hyperparameters, MotifSet, StateAssignment, TimeSeries};

/// 17 significant digits, enough to round-trip any `f64`.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_cell(s: &str) -> Option<f64> {
    s.parse::<f64>().ok()
}

/// Reads a numeric CSV. A first row containing any non-numeric cell is taken
/// as the header.
pub fn ingest_csv(path: &Path, standardize: bool) -> Result<TimeSeries> {
    let mut reader = ReaderBuilder::new()
        .has_headers(false)
        .trim(Trim::All)
        .from_path(path)?;
    let mut records = reader.records();
    let mut names = None;
    let mut data = Vec::new();
    let mut n_dims = 0;
    let mut t_len = 0;

    let mut push_row = |rec: &StringRecord, data: &mut Vec<f64>| -> Result<()> {
        let row = rec.position().map_or(t_len + 1, |p| p.line() as usize);
        for (c, cell) in rec.iter().enumerate() {
            let v = parse_cell(cell).ok_or_else(|| MasaError::Parse {
                row,
                col: c + 1,
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(MasaError::NonFinite { row, col: c + 1 });
            }
            data.push(v);
        }
        t_len += 1;
        Ok(())
    };

    if let Some(first) = records.next() {
        let first = first?;
        n_dims = first.len();
        if first.iter().any(|c| parse_cell(c).is_none()) {
            names = Some(first.iter().map(str::to_string).collect::<Vec<_>>());
        } else {
            push_row(&first, &mut data)?;
        }
    }
    for rec in records {
        push_row(&rec?, &mut data)?;
    }
    if data.is_empty() {
        return Err(MasaError::EmptyInput);
    }
    let t_len = data.len() / n_dims;
    let mut ts = TimeSeries::new(data, t_len, n_dims)?;
    if let Some(names) = names {
        ts = ts.with_column_names(names)?;
    }
    if standardize {
        ts.standardize();
    }
    Ok(ts)
}

pub fn write_series_csv(path: &Path, ts: &TimeSeries) -> Result<()> {
    let mut w = WriterBuilder::new().from_path(path)?;
    let header: Vec<String> = match ts.column_names() {
        Some(names) => names.to_vec(),
        None => (0..ts.n_dims()).map(|c| format!("x{c}")).collect(),
    };
    w.write_record(&header)?;
    for row in ts.rows() {
        w.write_record(row.iter().map(|&v| fmt_f64(v)))?;
    }
    w.flush()?;
    Ok(())
}

/// `t,state,motif_id,instance_id`; the two id columns are empty outside
/// motif instances. Motif ids are ranks in the motif list.
pub fn write_assignment_csv(path: &Path, assignment: &StateAssignment, motifs: &MotifSet) -> Result<()> {
    let mut owner: Vec<Option<(usize, usize)>> = vec![None; assignment.len()];
    for (rank, e) in motifs.entries.iter().enumerate() {
        for (i, q) in e.instances.iter().enumerate() {
            owner[q.start..q.end].iter_mut().for_each(|o| *o = Some((rank, i)));
        }
    }
    let mut w = WriterBuilder::new().from_path(path)?;
    w.write_record(["t", "state", "motif_id", "instance_id"])?;
    for (t, (&s, o)) in assignment.labels().iter().zip(&owner).enumerate() {
        let (m, i) = o.map_or((String::new(), String::new()), |(m, i)| (m.to_string(), i.to_string()));
        w.write_record([t.to_string(), s.to_string(), m, i])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentRow {
    pub state: usize,
    pub motif_id: Option<usize>,
    pub instance_id: Option<usize>,
}

/// Reads a file written by [`write_assignment_csv`] (or any CSV with a
/// `state` column).
pub fn read_assignment_csv(path: &Path) -> Result<Vec<AssignmentRow>> {
    let mut r = ReaderBuilder::new().trim(Trim::All).from_path(path)?;
    let headers = r.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let state_col = col("state")
        .ok_or_else(|| MasaError::InvalidInput(format!("{} has no `state` column", path.display())))?;
    let (motif_col, inst_col) = (col("motif_id"), col("instance_id"));
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec.position().map_or(out.len() + 2, |p| p.line() as usize);
        let int = |c: usize| -> Result<Option<usize>> {
            let cell = rec.get(c).unwrap_or("");
            if cell.is_empty() {
                return Ok(None);
            }
            cell.parse().map(Some).map_err(|_| MasaError::Parse {
                row,
                col: c + 1,
                value: cell.to_string(),
            })
        };
        let state = int(state_col)?.ok_or_else(|| MasaError::Parse {
            row,
            col: state_col + 1,
            value: String::new(),
        })?;
        out.push(AssignmentRow {
            state,
            motif_id: motif_col.map(int).transpose()?.flatten(),
            instance_id: inst_col.map(int).transpose()?.flatten(),
        });
    }
    Ok(out)
}

/// `t,true_state,motif_mask,perturbed`.
pub fn write_truth_csv(path: &Path, truth: &GroundTruth) -> Result<()> {
    let perturbed = truth.perturbed_mask();
    let mut w = WriterBuilder::new().from_path(path)?;
    w.write_record(["t", "true_state", "motif_mask", "perturbed"])?;
    for t in 0..truth.len() {
        w.write_record([
            t.to_string(),
            truth.labels[t].to_string(),
            truth.motif_mask[t].to_string(),
            perturbed[t].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTable {
    pub labels: Vec<usize>,
    pub motif_mask: Vec<bool>,
    pub perturbed: Vec<bool>,
}

pub fn read_truth_csv(path: &Path) -> Result<TruthTable> {
    let mut r = ReaderBuilder::new().trim(Trim::All).from_path(path)?;
    let mut out = TruthTable {
        labels: Vec::new(),
        motif_mask: Vec::new(),
        perturbed: Vec::new(),
    };
    for rec in r.records() {
        let rec = rec?;
        let row = rec.position().map_or(out.labels.len() + 2, |p| p.line() as usize);
        let cell = |c: usize| rec.get(c).unwrap_or("");
        let bad = |c: usize| MasaError::Parse {
            row,
            col: c + 1,
            value: cell(c).to_string(),
        };
        out.labels.push(cell(1).parse().map_err(|_| bad(1))?);
        out.motif_mask.push(parse_bool(cell(2)).ok_or_else(|| bad(2))?);
        out.perturbed.push(parse_bool(cell(3)).ok_or_else(|| bad(3))?);
    }
    Ok(out)
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "1" => Some(true),
        "false" | "0" => Some(false),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub id: usize,
    pub start: usize,
    pub end: usize,
    pub durations: Vec<usize>,
    pub instance_score: f64,
    pub total_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotifRecord {
    pub id: usize,
    pub states: Vec<usize>,
    pub letters: String,
    pub motif_score: f64,
    pub score: f64,
    pub instances: Vec<InstanceRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotifsFile {
    pub total_score: f64,
    pub motifs: Vec<MotifRecord>,
}

impl MotifsFile {
    pub fn from_set(set: &MotifSet) -> Self {
        let motifs = set
            .entries
            .iter()
            .enumerate()
            .map(|(id, e)| MotifRecord {
                id,
                states: e.motif.states().to_vec(),
                letters: e.motif.letters(),
                motif_score: e.motif_score,
                score: e.score(),
                instances: e
                    .instances
                    .iter()
                    .zip(&e.instance_scores)
                    .enumerate()
                    .map(|(i, (q, &d))| InstanceRecord {
                        id: i,
                        start: q.start,
                        end: q.end,
                        durations: q.durations.clone(),
                        instance_score: d,
                        total_score: q.score,
                    })
                    .collect(),
            })
            .collect();
        Self {
            total_score: set.total_score,
            motifs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub mean: Vec<f64>,
    pub inv_cov: Vec<Vec<f64>>,
    pub log_det: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub k_states: usize,
    pub n_dims: usize,
    pub beta: f64,
    pub gamma: f64,
    pub reg_lambda: f64,
    pub states: Vec<StateRecord>,
}

impl ModelFile {
    pub fn from_model(model: &StateModel, gamma: f64) -> Self {
        let states = model
            .states()
            .iter()
            .map(|g| StateRecord {
                mean: g.mean().iter().copied().collect(),
                inv_cov: g.inv_cov().row_iter().map(|r| r.iter().copied().collect()).collect(),
                log_det: g.log_det(),
            })
            .collect();
        Self {
            k_states: model.states().len(),
            n_dims: model.n_dims(),
            beta: model.beta(),
            gamma,
            reg_lambda: model.reg_lambda(),
            states,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsFile<'a> {
    pub converged: bool,
    pub iterations: usize,
    pub wall_time_seconds: f64,
    pub hyperparameters: &'a Hyperparameters,
    pub history: &'a [IterationDiagnostics],
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Writes `assignment.csv`, `motifs.json`, `model.json` and
/// `diagnostics.json` into `dir`.
pub fn write_run_outputs(
    dir: &Path,
    result: &MasaResult,
    hp: &Hyperparameters,
    wall_time_seconds: f64,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_assignment_csv(&dir.join("assignment.csv"), &result.assignment, &result.motifs)?;
    write_json(&dir.join("motifs.json"), &MotifsFile::from_set(&result.motifs))?;
    write_json(&dir.join("model.json"), &ModelFile::from_model(&result.model, hp.gamma))?;
    write_json(
        &dir.join("diagnostics.json"),
        &DiagnosticsFile {
            converged: result.converged,
            iterations: result.iterations,
            wall_time_seconds,
            hyperparameters: hp,
            history: &result.history,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn write_tmp(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn csv_with_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "a.csv", "a,b\n1,2\n3,4\n5,6.5\n");
        let ts = ingest_csv(&p, false).unwrap();
        assert_eq!((ts.t_len(), ts.n_dims()), (3, 2));
        assert_eq!(ts.column_names().unwrap(), &["a".to_string(), "b".to_string()]);
        assert_eq!(ts.row(2), &[5.0, 6.5]);
    }

    #[test]
    fn csv_without_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "a.csv", "1,2\n3,4\n");
        let ts = ingest_csv(&p, false).unwrap();
        assert_eq!(ts.t_len(), 2);
        assert!(ts.column_names().is_none());
    }

    #[test]
    fn parse_error_location() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "a.csv", "x,y\n1,2\n3,4\n5,6\n7,abc\n");
        match ingest_csv(&p, false) {
            Err(MasaError::Parse { row, col, value }) => {
                assert_eq!((row, col), (5, 2));
                assert_eq!(value, "abc");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nan_and_empty_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "a.csv", "1,2\nNaN,4\n");
        assert!(matches!(ingest_csv(&p, false), Err(MasaError::NonFinite { row: 2, col: 1 })));
        let p = write_tmp(&dir, "b.csv", "");
        assert!(matches!(ingest_csv(&p, false), Err(MasaError::EmptyInput)));
        let p = write_tmp(&dir, "c.csv", "a,b\n");
        assert!(matches!(ingest_csv(&p, false), Err(MasaError::EmptyInput)));
    }

    #[test]
    fn ragged_rows_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "a.csv", "1,2\n3\n");
        assert!(ingest_csv(&p, false).is_err());
    }

    #[test]
    fn standardized_columns() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "a.csv", "a,b,c\n1,10,3\n2,20,3\n4,15,3\n9,-5,3\n");
        let ts = ingest_csv(&p, true).unwrap();
        for c in 0..2 {
            let col: Vec<f64> = ts.rows().map(|r| r[c]).collect();
            let mean = col.iter().sum::<f64>() / 4.0;
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4.0).sqrt();
            assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!(sd, 1.0, epsilon = 1e-9);
        }
        assert!(ts.rows().all(|r| r[2] == 0.0));
    }

    #[test]
    fn series_round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let vals = vec![0.1, 1.0 / 3.0, -2.5e-300, 1e300, std::f64::consts::PI, -0.0];
        let ts = TimeSeries::new(vals.clone(), 3, 2).unwrap();
        let p = dir.path().join("d.csv");
        write_series_csv(&p, &ts).unwrap();
        let back = ingest_csv(&p, false).unwrap();
        assert_eq!(back.as_slice(), vals.as_slice());
    }

    #[test]
    fn assignment_round_trip() {
        use crate::timeseries::{Motif, MotifEntry, MotifInstance};
        let dir = tempfile::tempdir().unwrap();
        let a = StateAssignment::new(vec![3, 0, 1, 2, 3, 3], 4).unwrap();
        let q = MotifInstance::new(Motif::new(vec![0, 1, 2]).unwrap(), 1, vec![1, 1, 1]).unwrap();
        let set = MotifSet {
            entries: vec![MotifEntry {
                motif_id: 7,
                motif: q.motif.clone(),
                motif_score: 1.5,
                instances: vec![q],
                instance_scores: vec![0.25],
            }],
            total_score: 1.75,
        };
        let p = dir.path().join("assignment.csv");
        write_assignment_csv(&p, &a, &set).unwrap();
        let rows = read_assignment_csv(&p).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows.iter().map(|r| r.state).collect::<Vec<_>>(), a.labels());
        assert_eq!(rows[0].motif_id, None);
        assert_eq!(rows[2].motif_id, Some(0));
        assert_eq!(rows[3].instance_id, Some(0));
        assert_eq!(rows[4].motif_id, None);

        let json = serde_json::to_string(&MotifsFile::from_set(&set)).unwrap();
        let parsed: MotifsFile = serde_json::from_str(&json).unwrap();
        assert_eq!(serde_json::to_string(&parsed).unwrap(), json);
        assert_eq!(parsed.motifs[0].letters, "ABC");
    }

    #[test]
    fn truth_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let truth = GroundTruth {
            labels: vec![4, 4, 0, 0],
            motif_mask: vec![false, false, true, true],
            perturbed_segments: vec![true, false],
            seg_len: 2,
            k_states: 5,
        };
        let p = dir.path().join("truth.csv");
        write_truth_csv(&p, &truth).unwrap();
        let back = read_truth_csv(&p).unwrap();
        assert_eq!(back.labels, truth.labels);
        assert_eq!(back.motif_mask, truth.motif_mask);
        assert_eq!(back.perturbed, vec![true, true, false, false]);
    }
}
