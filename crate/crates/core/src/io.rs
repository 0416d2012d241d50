//! File formats: Matrix Market and edge-list graphs, CSV signals, CDFs,
//! center sets and coefficients (binary and CSV).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::frame::Coefficients;
use crate::graph::SparseGraph;
use crate::sampling::CenterSets;
use crate::spectrum::SpectralCdf;

/// Magic bytes of the binary coefficient format.
pub const COEFF_MAGIC: &[u8; 4] = b"SGFC";
pub const COEFF_VERSION: u32 = 1;

/// Shortest round-trip text for `v`, in exponent form when the plain form
/// would be long.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn parse_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse(msg.into()))
}

fn with_path(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

pub fn open(path: impl AsRef<Path>) -> Result<BufReader<File>> {
    let path = path.as_ref();
    File::open(path).map(BufReader::new).map_err(|e| with_path(path, e))
}

pub fn create(path: impl AsRef<Path>) -> Result<BufWriter<File>> {
    let path = path.as_ref();
    File::create(path).map(BufWriter::new).map_err(|e| with_path(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    MatrixMarket,
    EdgeCsv,
}

impl GraphFormat {
    /// `.mtx` is Matrix Market, `.csv` / `.txt` an edge list.
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("mtx") | Some("mm") => Ok(Self::MatrixMarket),
            Some("csv") | Some("txt") | Some("edges") => Ok(Self::EdgeCsv),
            _ => parse_err(format!("cannot infer graph format of {}", path.display())),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mtx" | "mm" | "matrix_market" | "matrix-market" => Ok(Self::MatrixMarket),
            "csv" | "edges" | "edge_csv" | "edge-csv" => Ok(Self::EdgeCsv),
            other => parse_err(format!("unknown graph format {other:?}")),
        }
    }
}

// ---------------------------------------------------------------- graphs

/// Reads a symmetric adjacency matrix in Matrix Market coordinate format.
///
/// `symmetric` files list one triangle; `general` files must list both
/// `(i, j)` and `(j, i)` with equal weights. `pattern` entries get weight 1.
/// Explicit zeros are skipped and diagonal entries dropped.
pub fn read_matrix_market<R: BufRead>(r: R) -> Result<SparseGraph> {
    let mut lines = r.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse("empty Matrix Market file".into()))?;
    let header = header?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return parse_err(format!("bad Matrix Market header: {header:?}"));
    }
    if tokens[2] != "coordinate" {
        return parse_err("only coordinate Matrix Market files are supported");
    }
    let pattern = match tokens[3].as_str() {
        "real" | "integer" | "double" => false,
        "pattern" => true,
        other => return parse_err(format!("unsupported Matrix Market field {other:?}")),
    };
    let symmetric = match tokens[4].as_str() {
        "symmetric" => true,
        "general" => false,
        other => return parse_err(format!("unsupported Matrix Market symmetry {other:?}")),
    };

    let mut size: Option<(usize, usize)> = None;
    let mut entries: BTreeMap<(usize, usize), (f64, u8)> = BTreeMap::new();
    let mut seen = 0usize;
    for (lineno, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        let at = |msg: String| Error::Parse(format!("line {}: {msg}", lineno + 1));
        let Some((n, nnz)) = size else {
            if fields.len() != 3 {
                return Err(at(format!("expected `rows cols entries`, got {t:?}")));
            }
            let dims: Vec<usize> = fields
                .iter()
                .map(|f| f.parse().map_err(|_| at(format!("bad size field {f:?}"))))
                .collect::<Result<_>>()?;
            if dims[0] != dims[1] {
                return Err(at(format!("adjacency must be square, got {}x{}", dims[0], dims[1])));
            }
            size = Some((dims[0], dims[2]));
            continue;
        };
        let want = if pattern { 2 } else { 3 };
        if fields.len() != want {
            return Err(at(format!("expected {want} fields, got {}", fields.len())));
        }
        let idx = |f: &str| -> Result<usize> {
            let v: usize = f.parse().map_err(|_| at(format!("bad index {f:?}")))?;
            if v == 0 || v > n {
                return Err(at(format!("index {v} outside 1..={n}")));
            }
            Ok(v - 1)
        };
        let (i, j) = (idx(fields[0])?, idx(fields[1])?);
        let w: f64 = if pattern {
            1.0
        } else {
            fields[2].parse().map_err(|_| at(format!("bad value {:?}", fields[2])))?
        };
        seen += 1;
        if seen > nnz {
            return Err(at(format!("more entries than the declared {nnz}")));
        }
        if i == j {
            log::warn!("dropping diagonal entry at vertex {i}");
            continue;
        }
        if w == 0.0 {
            continue;
        }
        let key = (i.min(j), i.max(j));
        let dir = if i > j { 1u8 } else { 2u8 };
        match entries.get_mut(&key) {
            None => {
                entries.insert(key, (w, dir));
            }
            Some((_, d)) if symmetric || *d & dir != 0 => {
                return Err(at(format!("duplicate entry for edge ({}, {})", key.0 + 1, key.1 + 1)));
            }
            Some((w0, d)) => {
                if *w0 != w {
                    return Err(at(format!("asymmetric weights {w0} and {w} for edge ({}, {})", key.0 + 1, key.1 + 1)));
                }
                *d |= dir;
            }
        }
    }
    let Some((n, nnz)) = size else {
        return parse_err("Matrix Market file has no size line");
    };
    if seen != nnz {
        return parse_err(format!("declared {nnz} entries, found {seen}"));
    }
    if !symmetric {
        if let Some(((i, j), _)) = entries.iter().find(|(_, (_, d))| *d != 3) {
            return parse_err(format!("general matrix is not symmetric at ({}, {})", i + 1, j + 1));
        }
    }
    SparseGraph::from_edges(n, entries.into_iter().map(|((i, j), (w, _))| (i, j, w)))
}

/// Writes the lower triangle as a symmetric real Matrix Market file.
pub fn write_matrix_market<W: Write>(g: &SparseGraph, mut w: W) -> Result<()> {
    let n = g.n_vertices();
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(w, "{n} {n} {}", g.n_edges())?;
    for (i, j, v) in g.edges() {
        writeln!(w, "{} {} {}", j + 1, i + 1, fmt_f64(v))?;
    }
    w.flush()?;
    Ok(())
}

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(r)
}

/// Data rows of a CSV with `ncols` columns. A first row whose fields are
/// not all numeric is taken as a header and skipped.
fn csv_rows<R: Read>(r: R, ncols: usize, what: &str) -> Result<Vec<(u64, Vec<String>)>> {
    let mut out = Vec::new();
    for (k, rec) in csv_reader(r).records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("{what}: {e}")))?;
        let line = rec.position().map_or(k as u64 + 1, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if k == 0 && rec.iter().any(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        if rec.len() != ncols {
            return parse_err(format!("{what} line {line}: expected {ncols} columns, got {}", rec.len()));
        }
        out.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(out)
}

fn field<T: std::str::FromStr>(s: &str, what: &str, line: u64) -> Result<T> {
    s.parse().map_err(|_| Error::Parse(format!("{what} line {line}: bad value {s:?}")))
}

/// Reads `src,dst,weight` rows with 0-based vertex ids. The vertex count is
/// `n` when given, otherwise one more than the largest id.
pub fn read_edge_csv<R: Read>(r: R, n: Option<usize>) -> Result<SparseGraph> {
    let mut edges = Vec::new();
    for (line, f) in csv_rows(r, 3, "edge list")? {
        edges.push((
            field::<usize>(&f[0], "edge list", line)?,
            field::<usize>(&f[1], "edge list", line)?,
            field::<f64>(&f[2], "edge list", line)?,
        ));
    }
    let n = match n {
        Some(n) => n,
        None => edges.iter().map(|&(i, j, _)| i.max(j) + 1).max().unwrap_or(0),
    };
    SparseGraph::from_edges(n, edges)
}

pub fn write_edge_csv<W: Write>(g: &SparseGraph, mut w: W) -> Result<()> {
    writeln!(w, "src,dst,weight")?;
    for (i, j, v) in g.edges() {
        writeln!(w, "{i},{j},{}", fmt_f64(v))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_graph(path: impl AsRef<Path>, format: Option<GraphFormat>) -> Result<SparseGraph> {
    let path = path.as_ref();
    let format = match format {
        Some(f) => f,
        None => GraphFormat::from_path(path)?,
    };
    let r = open(path)?;
    match format {
        GraphFormat::MatrixMarket => read_matrix_market(r),
        GraphFormat::EdgeCsv => read_edge_csv(r, None),
    }
}

pub fn write_graph(path: impl AsRef<Path>, g: &SparseGraph, format: Option<GraphFormat>) -> Result<()> {
    let path = path.as_ref();
    let format = match format {
        Some(f) => f,
        None => GraphFormat::from_path(path)?,
    };
    let w = create(path)?;
    match format {
        GraphFormat::MatrixMarket => write_matrix_market(g, w),
        GraphFormat::EdgeCsv => write_edge_csv(g, w),
    }
}

// ---------------------------------------------------------------- signals

pub fn read_signal<R: Read>(r: R) -> Result<Vec<f64>> {
    csv_rows(r, 1, "signal")?
        .into_iter()
        .map(|(line, f)| field(&f[0], "signal", line))
        .collect()
}

pub fn write_signal<W: Write>(values: &[f64], mut w: W) -> Result<()> {
    writeln!(w, "value")?;
    for &v in values {
        writeln!(w, "{}", fmt_f64(v))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_signal_file(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    read_signal(open(path)?)
}

pub fn write_signal_file(path: impl AsRef<Path>, values: &[f64]) -> Result<()> {
    write_signal(values, create(path)?)
}

// ---------------------------------------------------------------- CDFs

/// Reads `(z, P(z))` rows as a monotone cubic interpolant. Rows repeating
/// an abscissa, as written by [`cdf_points`] for a step CDF, give a step CDF
/// taking the last value listed at each point.
pub fn read_cdf<R: Read>(r: R) -> Result<SpectralCdf> {
    let mut grid: Vec<f64> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut step = false;
    for (line, f) in csv_rows(r, 2, "cdf")? {
        let z: f64 = field(&f[0], "cdf", line)?;
        let p: f64 = field(&f[1], "cdf", line)?;
        if grid.last() == Some(&z) {
            step = true;
            *values.last_mut().expect("nonempty") = p;
        } else {
            grid.push(z);
            values.push(p);
        }
    }
    if step {
        SpectralCdf::step(grid, values)
    } else {
        SpectralCdf::monotone_cubic(grid, values)
    }
}

pub fn write_cdf<W: Write>(points: &[(f64, f64)], mut w: W) -> Result<()> {
    writeln!(w, "z,P")?;
    for &(z, p) in points {
        writeln!(w, "{},{}", fmt_f64(z), fmt_f64(p))?;
    }
    w.flush()?;
    Ok(())
}

/// Rows for export: the knots of a cubic CDF, or for a step CDF the value
/// just before and at every jump so plots show the steps.
pub fn cdf_points(cdf: &SpectralCdf) -> Vec<(f64, f64)> {
    if !cdf.is_step() {
        return cdf.grid().iter().copied().zip(cdf.values().iter().copied()).collect();
    }
    let mut out = Vec::with_capacity(2 * cdf.grid().len());
    let mut prev = 0.0;
    for (&z, &v) in cdf.grid().iter().zip(cdf.values()) {
        out.push((z, prev));
        out.push((z, v));
        prev = v;
    }
    out
}

// ---------------------------------------------------------------- centers

/// Reads `band,vertex,weight` rows; bands are numbered from 0 and `n_bands`
/// defaults to one more than the largest band seen.
pub fn read_centers<R: Read>(r: R, n_bands: Option<usize>) -> Result<CenterSets> {
    let mut rows = Vec::new();
    for (line, f) in csv_rows(r, 3, "centers")? {
        rows.push((
            field::<usize>(&f[0], "centers", line)?,
            field::<usize>(&f[1], "centers", line)?,
            field::<f64>(&f[2], "centers", line)?,
        ));
    }
    let j = n_bands.unwrap_or_else(|| rows.iter().map(|r| r.0 + 1).max().unwrap_or(0));
    let mut out = CenterSets { sets: vec![Vec::new(); j], weights: vec![Vec::new(); j] };
    for (b, v, w) in rows {
        if b >= j {
            return parse_err(format!("band {b} out of range for {j} bands"));
        }
        out.sets[b].push(v);
        out.weights[b].push(w);
    }
    Ok(out)
}

pub fn write_centers<W: Write>(c: &CenterSets, mut w: W) -> Result<()> {
    writeln!(w, "band,vertex,weight")?;
    for (b, (set, weights)) in c.sets.iter().zip(&c.weights).enumerate() {
        for (v, &p) in set.iter().zip(weights) {
            writeln!(w, "{b},{v},{}", fmt_f64(p))?;
        }
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------- coefficients

fn to_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::InvalidArgument(format!("{what} {v} does not fit in u32")))
}

/// Binary layout, little-endian: magic `SGFC`, `u32` version, `u32` band
/// count, then per band `u32` band id, `u32` center count, the center ids as
/// `u32` and the values as `f64`.
pub fn write_coefficients<W: Write>(c: &Coefficients, mut w: W) -> Result<()> {
    if c.bands.len() != c.centers.len() {
        return Err(Error::SizeMismatch { expected: c.centers.len(), got: c.bands.len() });
    }
    w.write_all(COEFF_MAGIC)?;
    w.write_all(&COEFF_VERSION.to_le_bytes())?;
    w.write_all(&to_u32(c.bands.len(), "band count")?.to_le_bytes())?;
    for (j, (vals, ids)) in c.bands.iter().zip(&c.centers).enumerate() {
        if vals.len() != ids.len() {
            return Err(Error::SizeMismatch { expected: ids.len(), got: vals.len() });
        }
        w.write_all(&to_u32(j, "band id")?.to_le_bytes())?;
        w.write_all(&to_u32(ids.len(), "center count")?.to_le_bytes())?;
        for &i in ids {
            w.write_all(&to_u32(i, "vertex id")?.to_le_bytes())?;
        }
        for v in vals {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Parse("coefficient file is truncated".into())
    } else {
        Error::Io(e)
    }
}

/// Inverse of [`write_coefficients`]. Bands may appear in any order but each
/// id exactly once. The result carries no dictionary provenance.
pub fn read_coefficients<R: Read>(mut r: R) -> Result<Coefficients> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != COEFF_MAGIC {
        return parse_err("not a coefficient file (bad magic)");
    }
    let version = read_u32(&mut r)?;
    if version != COEFF_VERSION {
        return parse_err(format!("unsupported coefficient file version {version}"));
    }
    let j = read_u32(&mut r)? as usize;
    let mut bands: Vec<Option<(Vec<usize>, Vec<f64>)>> = vec![None; j];
    for _ in 0..j {
        let id = read_u32(&mut r)? as usize;
        if id >= j {
            return parse_err(format!("band id {id} out of range for {j} bands"));
        }
        if bands[id].is_some() {
            return parse_err(format!("band {id} appears twice"));
        }
        let count = read_u32(&mut r)? as usize;
        let ids = (0..count)
            .map(|_| read_u32(&mut r).map(|v| v as usize))
            .collect::<Result<Vec<_>>>()?;
        let mut vals = Vec::with_capacity(count);
        for _ in 0..count {
            let mut b = [0u8; 8];
            r.read_exact(&mut b).map_err(truncated)?;
            vals.push(f64::from_le_bytes(b));
        }
        bands[id] = Some((ids, vals));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return parse_err("trailing bytes after coefficient data");
    }
    let (centers, bands): (Vec<_>, Vec<_>) = bands.into_iter().map(|b| b.expect("every id filled")).unzip();
    Ok(Coefficients { bands, centers, provenance: None })
}

pub fn write_coefficients_csv<W: Write>(c: &Coefficients, mut w: W) -> Result<()> {
    writeln!(w, "band,vertex,value")?;
    for (j, (vals, ids)) in c.bands.iter().zip(&c.centers).enumerate() {
        for (i, &v) in ids.iter().zip(vals) {
            writeln!(w, "{j},{i},{}", fmt_f64(v))?;
        }
    }
    w.flush()?;
    Ok(())
}
