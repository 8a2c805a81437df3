//! Persistence: CSV tables, the compact binary matrix format and run manifests.
//!
//! A sequence directory holds `manifest.json`, `rho.csv` (`t,v,rho`) and the
//! matrices as `matrices.csv` (`t,u,v,p`, `u` the source state), `matrices.json`
//! or `matrices.bin`.
//! Tuple states are written as `u1|u2|...`. Floats use the shortest
//! representation that reads back to the same value.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RunConfig;
use crate::equivalence::{StateSpace, TransitionMatrix, TransitionMatrixSeq};
use crate::error::Error;
use crate::trajectory::{TrajectoryEnsemble, TvdRow, RNG_ALGORITHM};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RHO_FILE: &str = "rho.csv";
pub const MATRICES_CSV: &str = "matrices.csv";
pub const MATRICES_JSON: &str = "matrices.json";
pub const MATRICES_BIN: &str = "matrices.bin";

const BIN_MAGIC: &[u8; 8] = b"QWPMAT01";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: invalid JSON at line {line}, column {column}: {message}", path.display())]
    Json {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed {what}: {message}")]
    Format { what: &'static str, message: String },
    #[error(transparent)]
    Model(#[from] Error),
}

pub type IoResult<T> = std::result::Result<T, IoError>;

fn format_err(what: &'static str, message: impl Into<String>) -> IoError {
    IoError::Format {
        what,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixFormat {
    #[default]
    Csv,
    Json,
    Bin,
}

/// Provenance of one output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// SHA-256 of the port-ordered adjacency.
    pub graph_fingerprint: String,
    pub rng_algorithm: String,
    pub seed: u64,
    pub horizon: usize,
    pub state_space: StateSpace,
    pub matrix_format: Option<MatrixFormat>,
    pub outputs: Vec<String>,
    /// Full configuration after flag overrides; a valid `--config` input.
    pub config: RunConfig,
}

impl RunManifest {
    pub fn new(command: &str, fingerprint: String, state_space: StateSpace, config: &RunConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            graph_fingerprint: fingerprint,
            rng_algorithm: RNG_ALGORITHM.into(),
            seed: config.seed,
            horizon: config.horizon,
            state_space,
            matrix_format: None,
            outputs: Vec::new(),
            config: config.clone(),
        }
    }
}

fn open(path: &Path) -> IoResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| IoError::File {
            path: path.into(),
            source,
        })
}

fn create(path: &Path) -> IoResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| IoError::File {
            path: path.into(),
            source,
        })
}

fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::File {
        path: path.into(),
        source,
    }
}

/// Parses a JSON file, reporting the line and column of syntax and schema errors.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> IoResult<T> {
    let mut text = String::new();
    open(path)?.read_to_string(&mut text).map_err(io_at(path))?;
    parse_json(path, &text)
}

pub fn parse_json<T: DeserializeOwned>(path: &Path, text: &str) -> IoResult<T> {
    serde_json::from_str(text).map_err(|e| IoError::Json {
        path: path.into(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> IoResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| format_err("JSON output", e.to_string()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(io_at(path))
}

pub fn write_rho_csv<W: Write>(w: W, space: StateSpace, rho: &[Vec<f64>]) -> IoResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "v", "rho"])?;
    for (t, dist) in rho.iter().enumerate() {
        for (v, p) in dist.iter().enumerate() {
            out.write_record([t.to_string(), space.label(v), p.to_string()])?;
        }
    }
    out.flush().map_err(|e| IoError::Csv(e.into()))
}

pub fn read_rho_csv<R: Read>(r: R, space: StateSpace) -> IoResult<Vec<Vec<f64>>> {
    let mut rho: Vec<Vec<f64>> = Vec::new();
    for record in csv::Reader::from_reader(r).records() {
        let record = record?;
        let (t, v, p) = three_fields(&record, "rho table")?;
        let t: usize = parse_field(t, "rho table")?;
        let v = space.parse_label(v)?;
        if t >= rho.len() {
            if t != rho.len() {
                return Err(format_err("rho table", format!("instant {t} out of order")));
            }
            rho.push(vec![0.0; space.len()]);
        }
        rho[t][v] = parse_field(p, "rho table")?;
    }
    Ok(rho)
}

pub fn write_matrices_csv<W: Write>(w: W, seq: &TransitionMatrixSeq) -> IoResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "u", "v", "p"])?;
    for m in &seq.matrices {
        let t = m.time().to_string();
        for (u, col) in m.columns() {
            let u = seq.space.label(u);
            for &(v, p) in col {
                out.write_record([t.as_str(), u.as_str(), &seq.space.label(v), &p.to_string()])?;
            }
        }
    }
    out.flush().map_err(|e| IoError::Csv(e.into()))
}

pub fn read_matrices_csv<R: Read>(r: R, space: StateSpace, horizon: usize) -> IoResult<Vec<TransitionMatrix>> {
    let mut columns: Vec<Vec<(usize, Vec<(usize, f64)>)>> = vec![Vec::new(); horizon];
    for record in csv::Reader::from_reader(r).records() {
        let record = record?;
        let t: usize = parse_field(record.get(0).unwrap_or(""), "matrix table")?;
        let (u, v, p) = (
            record.get(1).unwrap_or(""),
            record.get(2).unwrap_or(""),
            record.get(3).unwrap_or(""),
        );
        if t >= horizon {
            return Err(format_err("matrix table", format!("instant {t} beyond horizon {horizon}")));
        }
        let u = space.parse_label(u)?;
        let entry = (space.parse_label(v)?, parse_field(p, "matrix table")?);
        match columns[t].last_mut() {
            Some((last, col)) if *last == u => col.push(entry),
            _ => columns[t].push((u, vec![entry])),
        }
    }
    Ok(columns
        .into_iter()
        .enumerate()
        .map(|(t, cols)| {
            let mut m = TransitionMatrix::new(t, space.len());
            for (u, col) in cols {
                m.insert_column(u, col);
            }
            m
        })
        .collect())
}

fn three_fields<'a>(record: &'a csv::StringRecord, what: &'static str) -> IoResult<(&'a str, &'a str, &'a str)> {
    match (record.get(0), record.get(1), record.get(2)) {
        (Some(a), Some(b), Some(c)) => Ok((a, b, c)),
        _ => Err(format_err(what, "expected three fields")),
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, what: &'static str) -> IoResult<T> {
    s.trim()
        .parse()
        .map_err(|_| format_err(what, format!("cannot parse {s:?}")))
}

/// Little-endian: magic, `size`, `horizon`, then per matrix the column count
/// and per column `source`, entry count and `(target, p)` pairs.
pub fn write_matrices_bin<W: Write>(mut w: W, seq: &TransitionMatrixSeq) -> std::io::Result<()> {
    let u64_le = |x: usize| (x as u64).to_le_bytes();
    w.write_all(BIN_MAGIC)?;
    w.write_all(&u64_le(seq.space.len()))?;
    w.write_all(&u64_le(seq.horizon()))?;
    for m in &seq.matrices {
        w.write_all(&u64_le(m.num_columns()))?;
        for (u, col) in m.columns() {
            w.write_all(&u64_le(u))?;
            w.write_all(&u64_le(col.len()))?;
            for &(v, p) in col {
                w.write_all(&u64_le(v))?;
                w.write_all(&p.to_le_bytes())?;
            }
        }
    }
    w.flush()
}

pub fn read_matrices_bin<R: Read>(mut r: R, space: StateSpace) -> IoResult<Vec<TransitionMatrix>> {
    let mut buf = [0u8; 8];
    let mut next = |r: &mut R| -> IoResult<[u8; 8]> {
        r.read_exact(&mut buf)
            .map_err(|e| format_err("binary matrices", e.to_string()))?;
        Ok(buf)
    };
    if &next(&mut r)? != BIN_MAGIC {
        return Err(format_err("binary matrices", "bad magic"));
    }
    let mut word = |r: &mut R| next(r).map(|b| u64::from_le_bytes(b) as usize);
    if word(&mut r)? != space.len() {
        return Err(format_err("binary matrices", "state space size does not match manifest"));
    }
    let horizon = word(&mut r)?;
    let mut matrices = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let mut m = TransitionMatrix::new(t, space.len());
        for _ in 0..word(&mut r)? {
            let u = word(&mut r)?;
            let n = word(&mut r)?;
            let col = (0..n)
                .map(|_| Ok((word(&mut r)?, f64::from_bits(word(&mut r)? as u64))))
                .collect::<IoResult<Vec<_>>>()?;
            if u >= space.len() || col.iter().any(|&(v, _)| v >= space.len()) {
                return Err(format_err("binary matrices", "state id out of range"));
            }
            m.insert_column(u, col);
        }
        matrices.push(m);
    }
    Ok(matrices)
}

/// Writes `rho.csv` and the matrices; returns the file names written.
pub fn save_sequence(dir: &Path, seq: &TransitionMatrixSeq, format: MatrixFormat) -> IoResult<Vec<String>> {
    let rho = dir.join(RHO_FILE);
    write_rho_csv(create(&rho)?, seq.space, &seq.rho)?;
    let name = match format {
        MatrixFormat::Csv => {
            write_matrices_csv(create(&dir.join(MATRICES_CSV))?, seq)?;
            MATRICES_CSV
        }
        MatrixFormat::Json => {
            write_json(&dir.join(MATRICES_JSON), &seq.matrices)?;
            MATRICES_JSON
        }
        MatrixFormat::Bin => {
            let path = dir.join(MATRICES_BIN);
            write_matrices_bin(create(&path)?, seq).map_err(io_at(&path))?;
            MATRICES_BIN
        }
    };
    Ok(vec![RHO_FILE.into(), name.into()])
}

/// Reads a directory written by [`save_sequence`] plus its manifest.
pub fn load_sequence(dir: &Path) -> IoResult<(RunManifest, TransitionMatrixSeq)> {
    let manifest: RunManifest = read_json(&dir.join(MANIFEST_FILE))?;
    let space = manifest.state_space;
    let rho = read_rho_csv(open(&dir.join(RHO_FILE))?, space)?;
    let matrices = match manifest.matrix_format {
        Some(MatrixFormat::Bin) => read_matrices_bin(open(&dir.join(MATRICES_BIN))?, space)?,
        Some(MatrixFormat::Json) => read_json(&dir.join(MATRICES_JSON))?,
        Some(MatrixFormat::Csv) => {
            read_matrices_csv(open(&dir.join(MATRICES_CSV))?, space, manifest.horizon)?
        }
        None => return Err(format_err("manifest", "directory holds no matrices")),
    };
    if rho.len() != matrices.len() + 1 {
        return Err(format_err(
            "sequence directory",
            format!("{} distributions for {} matrices", rho.len(), matrices.len()),
        ));
    }
    Ok((
        manifest,
        TransitionMatrixSeq {
            space,
            matrices,
            rho,
        },
    ))
}

pub fn write_trajectories_csv<W: Write>(w: W, ens: &TrajectoryEnsemble) -> IoResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["traj_id", "t", "vertex"])?;
    for (i, traj) in ens.trajectories.iter().enumerate() {
        for (t, &s) in traj.states.iter().enumerate() {
            out.write_record([i.to_string(), t.to_string(), ens.space.label(s)])?;
        }
    }
    out.flush().map_err(|e| IoError::Csv(e.into()))
}

pub fn write_tvd_csv<W: Write>(w: W, rows: &[TvdRow]) -> IoResult<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush().map_err(|e| IoError::Csv(e.into()))
}

pub fn create_file(path: &Path) -> IoResult<BufWriter<File>> {
    create(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equivalence::tests_support::hadamard_c4_seq;

    #[test]
    fn csv_round_trip_is_exact() {
        let seq = hadamard_c4_seq(6);
        let mut buf = Vec::new();
        write_matrices_csv(&mut buf, &seq).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,u,v,p\n"));
        let back = read_matrices_csv(buf.as_slice(), seq.space, 6).unwrap();
        assert_eq!(back, seq.matrices);
        let mut buf = Vec::new();
        write_rho_csv(&mut buf, seq.space, &seq.rho).unwrap();
        assert_eq!(read_rho_csv(buf.as_slice(), seq.space).unwrap(), seq.rho);
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let seq = hadamard_c4_seq(6);
        let mut buf = Vec::new();
        write_matrices_bin(&mut buf, &seq).unwrap();
        assert_eq!(read_matrices_bin(buf.as_slice(), seq.space).unwrap(), seq.matrices);
        buf[0] = b'X';
        assert!(read_matrices_bin(buf.as_slice(), seq.space).is_err());
    }

    #[test]
    fn json_errors_carry_location() {
        let err = parse_json::<RunConfig>(Path::new("cfg.json"), "{\n  \"graph\": {\"kind\": \"cycle\",\n    \"n\": 4,,\n}").unwrap_err();
        match err {
            IoError::Json { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }
}
