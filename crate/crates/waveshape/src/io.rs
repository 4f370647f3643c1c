//! CSV and JSON import and export for every artifact the pipeline
//! produces. All floating-point output uses 17 significant digits so that
//! files round-trip exactly and reruns are byte-identical.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde_json::json;

use crate::cycles::{CycleMatrix, LandmarkSequence};
use crate::diffusion::DiffusionEmbedding;
use crate::dynamics::{DynamicsTrace, TraceSource};
use crate::error::{Error, Result};
use crate::synth::SyntheticDataset;
use crate::timeseries::TimeSeries;

/// Formats a float with 17 significant digits, enough to reproduce the
/// exact bit pattern on parse.
pub fn fmt_g17(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Malformed {
        what: what.to_string(),
        detail: format!("`{s}`: {e}"),
    })
}

fn parse_usize(s: &str, what: &str) -> Result<usize> {
    s.trim().parse::<usize>().map_err(|e| Error::Malformed {
        what: what.to_string(),
        detail: format!("`{s}`: {e}"),
    })
}

/// Writes `time,value` rows.
pub fn write_signal_csv(path: &Path, x: &TimeSeries) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["time", "value"])?;
    for (i, &v) in x.samples().iter().enumerate() {
        w.write_record([fmt_g17(x.time_at(i)), fmt_g17(v)])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `time,value` file back. The sampling rate is inferred from the
/// median time step and snapped to nine decimal places to absorb printing
/// noise; the time column must be uniform to within 1e-6 of a step.
pub fn read_signal_csv(path: &Path) -> Result<TimeSeries> {
    let mut r = csv::Reader::from_path(path)?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(Error::Malformed {
                what: "signal csv".into(),
                detail: format!("expected 2 columns, found {}", rec.len()),
            });
        }
        times.push(parse_f64(&rec[0], "time")?);
        values.push(parse_f64(&rec[1], "value")?);
    }
    if times.len() < 2 {
        return Err(Error::SeriesTooShort {
            got: times.len(),
            min: 2,
        });
    }
    let mut steps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    steps.sort_by(f64::total_cmp);
    let dt = steps[steps.len() / 2];
    if !(dt > 0.0) {
        return Err(Error::Malformed {
            what: "signal csv".into(),
            detail: "time column is not strictly increasing".into(),
        });
    }
    let fs = (1.0 / dt * 1e9).round() / 1e9;
    for (i, w) in times.windows(2).enumerate() {
        let step = w[1] - w[0];
        if (step - dt).abs() > 1e-6 * dt.max(1.0) {
            return Err(Error::Malformed {
                what: "signal csv".into(),
                detail: format!("non-uniform time step at row {}", i + 1),
            });
        }
    }
    TimeSeries::new(values, fs, times[0])
}

/// Writes the ground-truth table `landmark_sample,a,f,class`.
pub fn write_truth_csv(path: &Path, ds: &SyntheticDataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["landmark_sample", "a", "f", "class"])?;
    for (idx, cp) in ds.landmarks.indices().iter().zip(&ds.cycle_params) {
        w.write_record([
            idx.to_string(),
            fmt_g17(cp.a),
            fmt_g17(cp.f),
            cp.class.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the ground-truth table back as (landmark sample, a, f, class).
pub fn read_truth_csv(path: &Path) -> Result<Vec<(usize, f64, f64, u8)>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() < 4 {
            return Err(Error::Malformed {
                what: "truth csv".into(),
                detail: format!("expected 4 columns, found {}", rec.len()),
            });
        }
        out.push((
            parse_usize(&rec[0], "landmark_sample")?,
            parse_f64(&rec[1], "a")?,
            parse_f64(&rec[2], "f")?,
            parse_usize(&rec[3], "class")? as u8,
        ));
    }
    Ok(out)
}

/// Writes the dataset descriptor (generating spec, seed, bookkeeping).
pub fn write_dataset_json(path: &Path, ds: &SyntheticDataset) -> Result<()> {
    let doc = json!({
        "origin": ds.origin,
        "fs": ds.signal.fs(),
        "samples": ds.signal.len(),
        "cycles": ds.cycle_params.len(),
        "overlap_fraction": ds.overlap_fraction,
    });
    fs::write(path, format!("{:#}\n", doc))?;
    Ok(())
}

/// Writes one row per cycle plus a JSON sidecar with the window metadata.
pub fn write_cycles_csv(csv_path: &Path, json_path: &Path, cm: &CycleMatrix) -> Result<()> {
    let mut w = csv::Writer::from_path(csv_path)?;
    for row in cm.rows.rows() {
        let rec: Vec<String> = row.iter().map(|&v| fmt_g17(v)).collect();
        w.write_record(&rec)?;
    }
    w.flush()?;
    let doc = json!({
        "left_ms": cm.left_ms,
        "right_ms": cm.right_ms,
        "fs": cm.fs,
        "landmark_indices": cm.landmark_indices,
        "normalized": cm.normalized,
        "landmark_col": cm.landmark_col(),
    });
    fs::write(json_path, format!("{:#}\n", doc))?;
    Ok(())
}

/// Reads a cycle matrix and its sidecar back.
pub fn read_cycles_csv(csv_path: &Path, json_path: &Path) -> Result<CycleMatrix> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(csv_path)?;
    let mut data: Vec<Vec<f64>> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row: Result<Vec<f64>> = rec.iter().map(|s| parse_f64(s, "cycle sample")).collect();
        data.push(row?);
    }
    let n = data.len();
    let p = data.first().map_or(0, Vec::len);
    if n == 0 || p == 0 || data.iter().any(|r| r.len() != p) {
        return Err(Error::Malformed {
            what: "cycles csv".into(),
            detail: "empty file or ragged rows".into(),
        });
    }
    let mut rows = Array2::zeros((n, p));
    for (i, r) in data.iter().enumerate() {
        for (j, &v) in r.iter().enumerate() {
            rows[[i, j]] = v;
        }
    }
    let side: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(json_path)?).map_err(|e| Error::Malformed {
            what: "cycles sidecar".into(),
            detail: e.to_string(),
        })?;
    let need_f64 = |key: &str| -> Result<f64> {
        side.get(key)
            .and_then(serde_json::Value::as_f64)
            .ok_or_else(|| Error::Malformed {
                what: "cycles sidecar".into(),
                detail: format!("missing `{key}`"),
            })
    };
    let landmarks: Vec<usize> = side
        .get("landmark_indices")
        .and_then(serde_json::Value::as_array)
        .map(|a| {
            a.iter()
                .filter_map(serde_json::Value::as_u64)
                .map(|v| v as usize)
                .collect()
        })
        .ok_or_else(|| Error::Malformed {
            what: "cycles sidecar".into(),
            detail: "missing `landmark_indices`".into(),
        })?;
    CycleMatrix::from_parts(
        rows,
        need_f64("left_ms")?,
        need_f64("right_ms")?,
        need_f64("fs")?,
        landmarks,
        side.get("normalized")
            .and_then(serde_json::Value::as_bool)
            .unwrap_or(false),
        need_f64("landmark_col")? as usize,
    )
}

/// Writes `landmark_sample, time_s, coord_1..coord_d`.
pub fn write_embedding_csv(
    path: &Path,
    emb: &DiffusionEmbedding,
    lm: &LandmarkSequence,
) -> Result<()> {
    let d = emb.coords.ncols();
    if lm.len() != emb.coords.nrows() {
        return Err(Error::Malformed {
            what: "embedding export".into(),
            detail: format!("{} landmarks for {} rows", lm.len(), emb.coords.nrows()),
        });
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["landmark_sample".to_string(), "time_s".to_string()];
    header.extend((1..=d).map(|k| format!("coord_{k}")));
    w.write_record(&header)?;
    let times = lm.times();
    for (i, &idx) in lm.indices().iter().enumerate() {
        let mut rec = vec![idx.to_string(), fmt_g17(times[i])];
        rec.extend((0..d).map(|k| fmt_g17(emb.coords[[i, k]])));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Embedding file contents: landmark samples, times, coordinates.
pub struct EmbeddingFile {
    pub landmark_samples: Vec<usize>,
    pub times: Vec<f64>,
    pub coords: Array2<f64>,
}

/// Reads an embedding CSV back.
pub fn read_embedding_csv(path: &Path) -> Result<EmbeddingFile> {
    let mut r = csv::Reader::from_path(path)?;
    let d = r.headers()?.len().saturating_sub(2);
    if d == 0 {
        return Err(Error::Malformed {
            what: "embedding csv".into(),
            detail: "expected landmark_sample, time_s and coordinate columns".into(),
        });
    }
    let mut samples = Vec::new();
    let mut times = Vec::new();
    let mut flat = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != d + 2 {
            return Err(Error::Malformed {
                what: "embedding csv".into(),
                detail: format!("row with {} columns, expected {}", rec.len(), d + 2),
            });
        }
        samples.push(parse_usize(&rec[0], "landmark_sample")?);
        times.push(parse_f64(&rec[1], "time_s")?);
        for k in 0..d {
            flat.push(parse_f64(&rec[k + 2], "coordinate")?);
        }
    }
    if samples.is_empty() {
        return Err(Error::Malformed {
            what: "embedding csv".into(),
            detail: "no data rows".into(),
        });
    }
    let n = samples.len();
    let coords = Array2::from_shape_vec((n, d), flat).map_err(|e| Error::Malformed {
        what: "embedding csv".into(),
        detail: e.to_string(),
    })?;
    Ok(EmbeddingFile {
        landmark_samples: samples,
        times,
        coords,
    })
}

/// Writes the eigenvalue report.
pub fn write_eigenvalue_json(path: &Path, emb: &DiffusionEmbedding) -> Result<()> {
    let doc = json!({
        "lambda": emb.eigenvalues,
        "h": emb.h,
        "alpha": emb.alpha,
        "t": emb.t,
        "d": emb.coords.ncols(),
        "component_count": emb.component_count,
        "dropped_modes": emb.dropped_modes,
    });
    fs::write(path, format!("{:#}\n", doc))?;
    Ok(())
}

/// Parsed eigenvalue report.
#[derive(Debug, Clone)]
pub struct EigenReport {
    pub lambda: Vec<f64>,
    pub h: f64,
    pub alpha: f64,
    pub t: f64,
    pub d: usize,
}

/// Reads an eigenvalue report back.
pub fn read_eigenvalue_json(path: &Path) -> Result<EigenReport> {
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(path)?).map_err(|e| Error::Malformed {
            what: "eigenvalue json".into(),
            detail: e.to_string(),
        })?;
    let lambda = doc
        .get("lambda")
        .and_then(serde_json::Value::as_array)
        .map(|a| a.iter().filter_map(serde_json::Value::as_f64).collect())
        .ok_or_else(|| Error::Malformed {
            what: "eigenvalue json".into(),
            detail: "missing `lambda`".into(),
        })?;
    let get = |key: &str| -> Result<f64> {
        doc.get(key)
            .and_then(serde_json::Value::as_f64)
            .ok_or_else(|| Error::Malformed {
                what: "eigenvalue json".into(),
                detail: format!("missing `{key}`"),
            })
    };
    Ok(EigenReport {
        lambda,
        h: get("h")?,
        alpha: get("alpha")?,
        t: get("t")?,
        d: get("d")? as usize,
    })
}

/// Writes `time_s,value[,label]`.
pub fn write_trace_csv(path: &Path, tr: &DynamicsTrace) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if let Some(labels) = &tr.cluster_labels {
        w.write_record(["time_s", "value", "label"])?;
        for ((t, v), l) in tr.times.iter().zip(&tr.values).zip(labels) {
            w.write_record([fmt_g17(*t), fmt_g17(*v), l.to_string()])?;
        }
    } else {
        w.write_record(["time_s", "value"])?;
        for (t, v) in tr.times.iter().zip(&tr.values) {
            w.write_record([fmt_g17(*t), fmt_g17(*v)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a trace back; the label column is optional.
pub fn read_trace_csv(path: &Path, source: TraceSource) -> Result<DynamicsTrace> {
    let mut r = csv::Reader::from_path(path)?;
    let has_label = r.headers()?.len() >= 3;
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        times.push(parse_f64(&rec[0], "time_s")?);
        values.push(parse_f64(&rec[1], "value")?);
        if has_label {
            labels.push(parse_usize(&rec[2], "label")? as u8);
        }
    }
    DynamicsTrace::new(
        times,
        values,
        source,
        if has_label { Some(labels) } else { None },
    )
}
