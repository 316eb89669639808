//! Artifact files: solution directories, trajectories, outcomes and box snapshots.
//!
//! Every text artifact starts with `#` header lines naming the crate version and the
//! SHA-256 of the configuration that produced it. Floats are written in shortest
//! round-trip form, so identical inputs give byte-identical files.

use crate::discretization::{
    build_radial_grid, CartesianField, CartesianGrid3, GridKind, RadialField,
};
use crate::dynamics::{SimOutcome, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::functionals::{fiber_value, EnergyBreakdown, FiberPoints};
use crate::model::ModelParams;
use crate::solvers::{Branch, SolutionRecord};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub config_sha256: String,
}

impl Provenance {
    pub fn from_config_text(text: &str) -> Self {
        let digest = Sha256::digest(text.as_bytes());
        let mut hex = String::with_capacity(64);
        for b in digest {
            let _ = write!(hex, "{b:02x}");
        }
        Provenance {
            version: VERSION.to_string(),
            config_sha256: hex,
        }
    }

    fn header(&self) -> String {
        format!(
            "# choquard {}\n# config_sha256 {}\n",
            self.version, self.config_sha256
        )
    }
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(())
}

pub fn write_csv(
    path: &Path,
    prov: &Provenance,
    columns: &[&str],
    rows: &[Vec<f64>],
) -> Result<()> {
    let mut out = prov.header();
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v:e}");
        }
        out.push('\n');
    }
    create_parent(path)?;
    fs::write(path, out)?;
    Ok(())
}

/// Column names and rows of a CSV written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let file = fs::File::open(path).map_err(|e| missing(path, e))?;
    let mut columns = None;
    let mut rows = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if columns.is_none() {
            columns = Some(line.split(',').map(str::to_string).collect::<Vec<_>>());
            continue;
        }
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
        rows.push(row);
    }
    let columns =
        columns.ok_or_else(|| Error::Config(format!("{}: no header row", path.display())))?;
    if let Some(bad) = rows.iter().position(|r| r.len() != columns.len()) {
        return Err(Error::Config(format!(
            "{}: row {} has the wrong number of columns",
            path.display(),
            bad + 1
        )));
    }
    Ok((columns, rows))
}

fn missing(path: &Path, e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::NotFound {
        Error::MissingArtifact(path.display().to_string())
    } else {
        Error::Io(e)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    create_parent(path)?;
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| missing(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub radius: f64,
    pub nodes: usize,
    pub kind: GridKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionMeta {
    #[serde(flatten)]
    pub provenance: Provenance,
    pub branch: Branch,
    pub params: ModelParams,
    pub grid: GridSpec,
    pub lambda: f64,
    pub breakdown: EnergyBreakdown,
    pub fiber: FiberPoints,
    pub iterations: usize,
    pub newton_iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub restarts: usize,
    pub warnings: Vec<String>,
}

/// Writes `profile.csv`, `fiber.csv`, `energy_trace.csv` and `meta.json` into `dir`.
pub fn write_solution(dir: &Path, rec: &SolutionRecord, prov: &Provenance) -> Result<()> {
    fs::create_dir_all(dir)?;
    let grid = &rec.u.grid;
    let rows: Vec<Vec<f64>> = grid
        .nodes()
        .iter()
        .zip(&rec.u.values)
        .map(|(&r, &u)| vec![r, u])
        .collect();
    write_csv(&dir.join("profile.csv"), prov, &["r", "u"], &rows)?;

    let b = rec.breakdown.integrals(&rec.params);
    let (lo, hi) = (
        (rec.fiber.tau_plus / 10.0).ln(),
        (rec.fiber.tau_minus * 10.0).ln(),
    );
    let fiber_rows: Vec<Vec<f64>> = (0..=400)
        .filter_map(|i| {
            let tau = (lo + (hi - lo) * i as f64 / 400.0).exp();
            fiber_value(&b, &rec.params, tau).ok().map(|v| vec![tau, v])
        })
        .collect();
    write_csv(&dir.join("fiber.csv"), prov, &["tau", "psi"], &fiber_rows)?;

    let trace: Vec<Vec<f64>> = rec
        .energy_trace
        .iter()
        .enumerate()
        .map(|(i, &e)| vec![i as f64, e])
        .collect();
    write_csv(
        &dir.join("energy_trace.csv"),
        prov,
        &["iteration", "energy"],
        &trace,
    )?;

    let meta = SolutionMeta {
        provenance: prov.clone(),
        branch: rec.branch,
        params: rec.params,
        grid: GridSpec {
            dim: grid.dim(),
            radius: grid.radius(),
            nodes: grid.len(),
            kind: grid.kind(),
        },
        lambda: rec.lambda,
        breakdown: rec.breakdown,
        fiber: rec.fiber.clone(),
        iterations: rec.iterations,
        newton_iterations: rec.newton_iterations,
        residual: rec.residual,
        converged: rec.converged,
        restarts: rec.restarts,
        warnings: rec.warnings.clone(),
    };
    write_json(&dir.join("meta.json"), &meta)
}

/// Reads a solution directory back. Stored diagnostics are taken as written;
/// callers that distrust the files recompute them from the profile.
pub fn read_solution(dir: &Path) -> Result<(SolutionRecord, Provenance)> {
    let meta: SolutionMeta = read_json(&dir.join("meta.json"))?;
    let grid = build_radial_grid(
        meta.grid.dim,
        meta.grid.radius,
        meta.grid.nodes,
        meta.grid.kind,
    )?;
    let (columns, rows) = read_csv(&dir.join("profile.csv"))?;
    if columns != ["r", "u"] {
        return Err(Error::Config(format!(
            "{}: expected columns r,u",
            dir.join("profile.csv").display()
        )));
    }
    if rows.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "profile has {} rows, grid has {} nodes",
            rows.len(),
            grid.len()
        )));
    }
    for (row, &r) in rows.iter().zip(grid.nodes()) {
        if (row[0] - r).abs() > 1e-12 * r.max(1.0) {
            return Err(Error::GridMismatch(format!(
                "profile node {} does not match grid node {r}",
                row[0]
            )));
        }
    }
    let u = RadialField::new(grid, rows.iter().map(|row| row[1]).collect())?;
    let trace = read_csv(&dir.join("energy_trace.csv"))
        .map(|(_, rows)| rows.iter().map(|r| r[1]).collect())
        .unwrap_or_default();
    let rec = SolutionRecord {
        u,
        lambda: meta.lambda,
        breakdown: meta.breakdown,
        branch: meta.branch,
        fiber: meta.fiber,
        iterations: meta.iterations,
        newton_iterations: meta.newton_iterations,
        residual: meta.residual,
        converged: meta.converged,
        params: meta.params,
        energy_trace: trace,
        restarts: meta.restarts,
        warnings: meta.warnings,
    };
    Ok((rec, meta.provenance))
}

const TRAJECTORY_COLUMNS: [&str; 9] = [
    "t",
    "mass",
    "energy",
    "kinetic",
    "virial",
    "pohozaev",
    "sup_amp",
    "center_offset",
    "orbit_dist",
];

pub fn write_trajectory_csv(path: &Path, traj: &TrajectoryRecord, prov: &Provenance) -> Result<()> {
    let with_dist = traj.orbit_dist.is_some();
    let columns = if with_dist {
        &TRAJECTORY_COLUMNS[..]
    } else {
        &TRAJECTORY_COLUMNS[..8]
    };
    let rows: Vec<Vec<f64>> = (0..traj.len())
        .map(|i| {
            let mut row = vec![
                traj.times[i],
                traj.mass[i],
                traj.energy[i],
                traj.kinetic[i],
                traj.virial[i],
                traj.pohozaev[i],
                traj.sup_amp[i],
                traj.center_offset[i],
            ];
            if let Some(d) = &traj.orbit_dist {
                row.push(d[i]);
            }
            row
        })
        .collect();
    write_csv(path, prov, columns, &rows)
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    #[serde(flatten)]
    provenance: &'a Provenance,
    #[serde(flatten)]
    value: &'a T,
}

/// JSON object of `value` with the provenance fields merged in.
pub fn write_stamped_json<T: Serialize>(path: &Path, value: &T, prov: &Provenance) -> Result<()> {
    write_json(
        path,
        &Stamped {
            provenance: prov,
            value,
        },
    )
}

pub fn write_outcome(path: &Path, outcome: &SimOutcome, prov: &Provenance) -> Result<()> {
    write_stamped_json(path, outcome, prov)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BoxHeader {
    #[serde(flatten)]
    provenance: Provenance,
    shape: [usize; 3],
    half_width: f64,
    dtype: String,
}

/// One JSON header line followed by the field as little-endian `(re, im)` pairs.
pub fn write_box_field(path: &Path, field: &CartesianField, prov: &Provenance) -> Result<()> {
    let n = field.grid.n();
    let header = BoxHeader {
        provenance: prov.clone(),
        shape: [n; 3],
        half_width: field.grid.half_width(),
        dtype: "complex128-le".into(),
    };
    create_parent(path)?;
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for z in &field.data {
        out.write_all(&z.re.to_le_bytes())?;
        out.write_all(&z.im.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_box_field(path: &Path) -> Result<CartesianField> {
    let mut reader = BufReader::new(fs::File::open(path).map_err(|e| missing(path, e))?);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let header: BoxHeader = serde_json::from_str(&line)?;
    if header.dtype != "complex128-le"
        || header.shape[0] != header.shape[1]
        || header.shape[1] != header.shape[2]
    {
        return Err(Error::Config(format!(
            "{}: unsupported box layout",
            path.display()
        )));
    }
    let grid = CartesianGrid3::new(header.shape[0], header.half_width)?;
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() != 16 * grid.len() {
        return Err(Error::Config(format!(
            "{}: expected {} values",
            path.display(),
            grid.len()
        )));
    }
    let data = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    Ok(CartesianField { grid, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        let prov = Provenance::from_config_text("a = 1\n");
        let rows = vec![vec![0.1, 1.0 / 3.0], vec![1e-300, -2.5e17]];
        write_csv(&path, &prov, &["x", "y"], &rows).unwrap();
        let (cols, back) = read_csv(&path).unwrap();
        assert_eq!(cols, ["x", "y"]);
        assert_eq!(back, rows);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(&format!("# choquard {VERSION}\n# config_sha256 ")));
    }

    #[test]
    fn digest_is_stable() {
        let a = Provenance::from_config_text("N = 3\n");
        let b = Provenance::from_config_text("N = 3\n");
        let c = Provenance::from_config_text("N = 4\n");
        assert_eq!(a, b);
        assert_ne!(a.config_sha256, c.config_sha256);
        assert_eq!(a.config_sha256.len(), 64);
    }

    #[test]
    fn missing_file_is_reported_as_artifact() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            read_csv(&dir.path().join("nope.csv")),
            Err(Error::MissingArtifact(_))
        ));
    }

    #[test]
    fn box_field_round_trip() {
        let grid = CartesianGrid3::new(32, 4.0).unwrap();
        let f =
            CartesianField::from_fn(&grid, |x| Complex64::new((-x[0] * x[0]).exp(), x[1] * 0.1));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("psi.bin");
        write_box_field(&path, &f, &Provenance::from_config_text("")).unwrap();
        let g = read_box_field(&path).unwrap();
        assert!(g.grid.same_as(&f.grid));
        assert_eq!(g.data, f.data);
    }
}
