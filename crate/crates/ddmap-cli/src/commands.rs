//! The three subcommands: dataset synthesis, the analysis pipeline, and
//! embedding inspection.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;
use sha2::{Digest, Sha256};

use waveshape::dynamics::{compress_svd, ddmap, derive_edr, sign_cluster, DdmapResult};
use waveshape::io;
use waveshape::synth::{scenario_names, scenario_with_duration};

use crate::config::ResolvedConfig;

/// Command failure with the exit code it maps to: usage and input-format
/// problems exit 2, pipeline and data errors exit 1.
pub enum CmdError {
    Usage(String),
    Pipeline(String),
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Usage(_) => 2,
            CmdError::Pipeline(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CmdError::Usage(m) | CmdError::Pipeline(m) => m,
        }
    }
}

type CmdResult = Result<(), CmdError>;

fn usage<E: std::fmt::Display>(what: &str) -> impl FnOnce(E) -> CmdError + '_ {
    move |e| CmdError::Usage(format!("{what}: {e}"))
}

fn stage<E: std::fmt::Display>(name: &str) -> impl FnOnce(E) -> CmdError + '_ {
    move |e| CmdError::Pipeline(format!("{name}: {e}"))
}

fn ensure_dir(dir: &Path) -> CmdResult {
    fs::create_dir_all(dir).map_err(|e| CmdError::Usage(format!("output dir {dir:?}: {e}")))
}

fn sha256_file(path: &Path) -> Result<String, CmdError> {
    let bytes = fs::read(path).map_err(usage(&format!("input `{}`", path.display())))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

fn write_manifest(dir: &Path, doc: &serde_json::Value) -> CmdResult {
    fs::write(dir.join("manifest.json"), format!("{doc:#}\n")).map_err(stage("manifest export"))?;
    Ok(())
}

pub fn cmd_synth(scenario: &str, seed: u64, duration: Option<f64>, out: &Path) -> CmdResult {
    if !scenario_names().contains(&scenario) {
        return Err(CmdError::Usage(format!(
            "unknown scenario `{scenario}` (available: {})",
            scenario_names().join(", ")
        )));
    }
    ensure_dir(out)?;
    let ds = scenario_with_duration(scenario, seed, duration).map_err(stage("synthesis"))?;
    io::write_signal_csv(&out.join("signal.csv"), &ds.signal).map_err(stage("signal export"))?;
    io::write_truth_csv(&out.join("truth.csv"), &ds).map_err(stage("truth export"))?;
    let manifest = json!({
        "command": "synth",
        "version": env!("CARGO_PKG_VERSION"),
        "scenario": scenario,
        "seed": seed,
        "duration_s": duration,
        "outputs": ["signal.csv", "truth.csv"],
        "dataset": {
            "origin": ds.origin,
            "fs": ds.signal.fs(),
            "samples": ds.signal.len(),
            "cycles": ds.cycle_params.len(),
            "overlap_fraction": ds.overlap_fraction,
        },
    });
    write_manifest(out, &manifest)?;
    println!(
        "wrote {} cycles over {:.1} s to {}",
        ds.cycle_params.len(),
        ds.signal.duration(),
        out.display()
    );
    Ok(())
}

fn read_landmark_csv(path: &Path) -> Result<Vec<usize>, CmdError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(usage(&format!("landmark file `{}`", path.display())))?;
    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(usage("landmark file"))?;
        let field = rec.get(0).unwrap_or_default().trim();
        match field.parse::<usize>() {
            Ok(v) => out.push(v),
            Err(_) if row == 0 => continue, // header row
            Err(e) => {
                return Err(CmdError::Usage(format!(
                    "landmark file row {}: `{field}`: {e}",
                    row + 1
                )))
            }
        }
    }
    if out.is_empty() {
        return Err(CmdError::Usage("landmark file has no usable rows".into()));
    }
    Ok(out)
}

pub struct RunArgs {
    pub config: ResolvedConfig,
    pub input: PathBuf,
    pub landmarks: Option<PathBuf>,
    pub out: PathBuf,
    pub expect_sha: Option<String>,
}

pub fn cmd_run(args: RunArgs) -> CmdResult {
    let RunArgs {
        config,
        input,
        landmarks,
        out,
        expect_sha,
    } = args;
    let sha = sha256_file(&input)?;
    if let Some(expected) = &expect_sha {
        if *expected != sha {
            return Err(CmdError::Usage(format!(
                "input digest mismatch: manifest expects {expected}, file has {sha}"
            )));
        }
    }
    ensure_dir(&out)?;
    let x = io::read_signal_csv(&input).map_err(usage(&format!("input `{}`", input.display())))?;
    let external = match &landmarks {
        Some(p) => Some(read_landmark_csv(p)?),
        None => None,
    };

    let pipeline = config.to_pipeline(external).map_err(CmdError::Usage)?;
    let mut outputs = vec![
        "cycles.csv".to_string(),
        "cycles.json".to_string(),
        "embedding.csv".to_string(),
        "eigenvalues.json".to_string(),
        "u_trace.csv".to_string(),
        "clusters.csv".to_string(),
    ];

    let (dd, edr): (DdmapResult, Option<waveshape::dynamics::EdrResult>) = if config.edr {
        let r = derive_edr(&x, &pipeline).map_err(stage("pipeline"))?;
        (r.ddmap.clone(), Some(r))
    } else {
        (ddmap(&x, &pipeline).map_err(stage("pipeline"))?, None)
    };

    for w in &dd.warnings {
        log::warn!("{w}");
    }
    io::write_cycles_csv(
        &out.join("cycles.csv"),
        &out.join("cycles.json"),
        &dd.cycles,
    )
    .map_err(stage("cycles export"))?;
    io::write_embedding_csv(&out.join("embedding.csv"), &dd.embedding, &dd.landmarks)
        .map_err(stage("embedding export"))?;
    io::write_eigenvalue_json(&out.join("eigenvalues.json"), &dd.embedding)
        .map_err(stage("eigenvalue export"))?;

    // The compressed trace and cluster labels exist in both modes; the
    // interpolated and normalized traces only when the edr stage runs.
    let (u, clusters) = match &edr {
        Some(r) => (r.u.clone(), r.clusters.clone()),
        None => {
            let times = dd.landmarks.times();
            let mut u = compress_svd(&dd.embedding.coords, &times).map_err(stage("compression"))?;
            let clusters = sign_cluster(&u).map_err(stage("clustering"))?;
            u.cluster_labels = Some(clusters.labels(u.len()));
            (u, clusters)
        }
    };
    io::write_trace_csv(&out.join("u_trace.csv"), &u).map_err(stage("trace export"))?;

    let labels = clusters.labels(u.len());
    let mut w =
        csv::Writer::from_path(out.join("clusters.csv")).map_err(stage("cluster export"))?;
    w.write_record(["cycle", "landmark_sample", "time_s", "label"])
        .map_err(stage("cluster export"))?;
    let times = dd.landmarks.times();
    for (i, &idx) in dd.landmarks.indices().iter().enumerate() {
        w.write_record([
            i.to_string(),
            idx.to_string(),
            io::fmt_g17(times[i]),
            labels[i].to_string(),
        ])
        .map_err(stage("cluster export"))?;
    }
    w.flush().map_err(stage("cluster export"))?;

    if let Some(r) = &edr {
        io::write_trace_csv(&out.join("v_trace.csv"), &r.v).map_err(stage("trace export"))?;
        io::write_trace_csv(&out.join("vhat_trace.csv"), &r.vhat).map_err(stage("trace export"))?;
        outputs.push("v_trace.csv".to_string());
        outputs.push("vhat_trace.csv".to_string());
        for w in &r.warnings {
            log::warn!("{w}");
        }
    }

    let manifest = json!({
        "command": "run",
        "version": env!("CARGO_PKG_VERSION"),
        "input": { "path": input.display().to_string(), "sha256": sha },
        "landmarks": landmarks.as_ref().map(|p| p.display().to_string()),
        "config": serde_json::to_value(&config).map_err(stage("manifest export"))?,
        "outputs": outputs,
        "cycles": dd.cycles.n(),
        "bandwidth_h": dd.embedding.h,
    });
    write_manifest(&out, &manifest)?;
    println!(
        "embedded {} cycles into {} coordinates (h = {:.6e}); outputs in {}",
        dd.cycles.n(),
        dd.embedding.coords.ncols(),
        dd.embedding.h,
        out.display()
    );
    Ok(())
}

/// Reads a manifest produced by `cmd_run` and reruns it against a new
/// output directory.
pub fn rerun_from_manifest(manifest_path: &Path, out: &Path) -> CmdResult {
    let text = fs::read_to_string(manifest_path)
        .map_err(usage(&format!("manifest `{}`", manifest_path.display())))?;
    let doc: serde_json::Value = serde_json::from_str(&text).map_err(usage("manifest"))?;
    if doc.get("command").and_then(serde_json::Value::as_str) != Some("run") {
        return Err(CmdError::Usage(
            "manifest does not describe a `run` command".into(),
        ));
    }
    let config: ResolvedConfig = serde_json::from_value(
        doc.get("config")
            .cloned()
            .ok_or_else(|| CmdError::Usage("manifest is missing `config`".into()))?,
    )
    .map_err(usage("manifest config"))?;
    let input = doc
        .pointer("/input/path")
        .and_then(serde_json::Value::as_str)
        .ok_or_else(|| CmdError::Usage("manifest is missing `input.path`".into()))?;
    let expect_sha = doc
        .pointer("/input/sha256")
        .and_then(serde_json::Value::as_str)
        .map(str::to_string);
    let landmarks = doc
        .get("landmarks")
        .and_then(serde_json::Value::as_str)
        .map(PathBuf::from);
    cmd_run(RunArgs {
        config,
        input: PathBuf::from(input),
        landmarks,
        out: out.to_path_buf(),
        expect_sha,
    })
}

pub fn cmd_inspect(embedding: &Path, eigenvalues: Option<&Path>) -> CmdResult {
    let emb = io::read_embedding_csv(embedding)
        .map_err(usage(&format!("embedding `{}`", embedding.display())))?;
    let n = emb.coords.nrows();
    let d = emb.coords.ncols();
    println!("points: {n}");
    println!("coordinates: {d}");

    let sibling = embedding.with_file_name("eigenvalues.json");
    let eig_path = eigenvalues
        .map(Path::to_path_buf)
        .or_else(|| sibling.exists().then_some(sibling));
    if let Some(p) = eig_path {
        let rep = io::read_eigenvalue_json(&p)
            .map_err(usage(&format!("eigenvalues `{}`", p.display())))?;
        let listed: Vec<String> = rep.lambda.iter().map(|l| format!("{l:.6}")).collect();
        println!("eigenvalues (nonincreasing): {}", listed.join(", "));
        println!(
            "bandwidth h = {:.6e}, alpha = {}, t = {}",
            rep.h, rep.alpha, rep.t
        );
        if rep.lambda.len() >= 2 {
            println!(
                "spectral gap (first minus second): {:.6}",
                rep.lambda[0] - rep.lambda[1]
            );
        }
    }
    for k in 0..d {
        let col = emb.coords.column(k);
        let rms = (col.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
        println!("coord_{} rms: {:.6e}", k + 1, rms);
    }
    Ok(())
}
