//! File formats: numeric CSV matrices, PGM images, index lists.

use std::fs;
use std::path::{Path, PathBuf};

use sequencer_core::{load_object_set, ObjectSet64};

use crate::error::{CliError, CliResult};

/// Reads one object per CSV row. A first row that does not parse as numbers is
/// taken as a header; with `labels` the first column names each object.
pub fn read_csv_matrix(path: &Path, labels: bool) -> CliResult<ObjectSet64> {
    let text = fs::read(path).map_err(|e| CliError::read(path, e))?;
    parse_csv_matrix(&text, labels).map_err(|e| match e {
        CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_csv_matrix(text: &[u8], labels: bool) -> CliResult<ObjectSet64> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text);
    let mut rows = Vec::new();
    let mut names = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Input(e.to_string()))?;
        let skip = usize::from(labels);
        let parsed: Result<Vec<f64>, _> = record.iter().skip(skip).map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => {
                if labels {
                    names.push(record.get(0).unwrap_or_default().to_string());
                }
                rows.push(row);
            }
            Err(_) if line == 0 => continue,
            Err(e) => return Err(CliError::Input(format!("row {}: {e}", line + 1))),
        }
    }
    Ok(load_object_set(&rows, labels.then_some(names))?)
}

/// Numeric rows of a CSV file without the minimum-size checks of an object set.
pub fn read_csv_matrix_rows(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    let text = fs::read(path).map_err(|e| CliError::read(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_slice());
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::read(path, e))?;
        match record.iter().map(str::parse::<f64>).collect::<Result<Vec<_>, _>>() {
            Ok(r) => rows.push(r),
            Err(_) if line == 0 => {}
            Err(e) => return Err(CliError::read(path, format!("row {}: {e}", line + 1))),
        }
    }
    Ok(rows)
}

pub fn csv_matrix_bytes(set: &ObjectSet64) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (j, row) in set.rows().enumerate() {
        let mut rec: Vec<String> = Vec::with_capacity(row.len() + 1);
        if let Some(l) = set.labels() {
            rec.push(l[j].clone());
        }
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec).map_err(|e| CliError::Other(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Other(e.to_string()))
}

fn pgm_tokens(data: &[u8], count: usize) -> CliResult<(Vec<usize>, usize)> {
    let mut out = Vec::with_capacity(count);
    let mut i = 0;
    while out.len() < count {
        while i < data.len() && (data[i].is_ascii_whitespace() || data[i] == b'#') {
            if data[i] == b'#' {
                while i < data.len() && data[i] != b'\n' {
                    i += 1;
                }
            } else {
                i += 1;
            }
        }
        let start = i;
        while i < data.len() && !data[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err(CliError::Input("truncated PGM header".into()));
        }
        let tok = std::str::from_utf8(&data[start..i]).unwrap_or("");
        out.push(tok.parse().map_err(|_| CliError::Input(format!("bad PGM header field {tok:?}")))?);
    }
    Ok((out, i))
}

/// Reads a binary (P5) or ASCII (P2) graymap; each image row becomes an object.
pub fn read_pgm(path: &Path) -> CliResult<ObjectSet64> {
    let data = fs::read(path).map_err(|e| CliError::read(path, e))?;
    parse_pgm(&data).map_err(|e| match e {
        CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_pgm(data: &[u8]) -> CliResult<ObjectSet64> {
    let binary = match data.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => return Err(CliError::Input("not a P2/P5 PGM file".into())),
    };
    let (head, end) = pgm_tokens(&data[2..], 3)?;
    let (width, height, maxval) = (head[0], head[1], head[2]);
    if maxval == 0 || maxval > 65535 {
        return Err(CliError::Input(format!("PGM maxval {maxval} out of range")));
    }
    let n = width * height;
    let values: Vec<f64> = if binary {
        let body = &data[2 + end + 1..];
        let wide = maxval > 255;
        let need = n * if wide { 2 } else { 1 };
        if body.len() < need {
            return Err(CliError::Input(format!("PGM body has {} bytes, expected {need}", body.len())));
        }
        if wide {
            body[..need].chunks(2).map(|c| f64::from(u16::from_be_bytes([c[0], c[1]]))).collect()
        } else {
            body[..need].iter().map(|&b| f64::from(b)).collect()
        }
    } else {
        let (v, _) = pgm_tokens(&data[2 + end..], n)?;
        v.into_iter().map(|x| x as f64).collect()
    };
    let rows: Vec<Vec<f64>> = values.chunks(width.max(1)).map(<[f64]>::to_vec).collect();
    Ok(load_object_set(&rows, None)?)
}

/// 8-bit binary graymap of the matrix, linearly stretched to 0..255.
pub fn pgm_bytes(set: &ObjectSet64) -> Vec<u8> {
    let v = set.values();
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = format!("P5\n{} {}\n255\n", set.n_pix(), set.n_obj()).into_bytes();
    out.extend(v.iter().map(|&x| ((x - lo) / span * 255.0).round() as u8));
    out
}

pub fn read_matrix(path: &Path, labels: bool) -> CliResult<ObjectSet64> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    if ext.eq_ignore_ascii_case("pgm") {
        read_pgm(path)
    } else {
        read_csv_matrix(path, labels)
    }
}

pub fn index_lines(indices: &[usize]) -> Vec<u8> {
    indices.iter().map(|i| format!("{i}\n")).collect::<String>().into_bytes()
}

pub fn read_index_lines(path: &Path) -> CliResult<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim().parse().map_err(|e| CliError::read(path, format!("{l:?}: {e}"))))
        .collect()
}

/// Output files staged in memory and written only once everything succeeded.
#[derive(Default)]
pub struct Artifacts {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Artifacts {
    pub fn add(&mut self, path: impl Into<PathBuf>, bytes: Vec<u8>) {
        self.files.push((path.into(), bytes));
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.files.iter().map(|f| f.0.as_path())
    }

    /// Writes to temporary siblings first, then renames; on failure removes
    /// whatever was written.
    pub fn commit(self) -> CliResult<()> {
        let mut staged: Vec<(PathBuf, &Path)> = Vec::new();
        let cleanup = |staged: &[(PathBuf, &Path)]| {
            for (tmp, _) in staged {
                let _ = fs::remove_file(tmp);
            }
        };
        for (path, bytes) in &self.files {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                if let Err(e) = fs::create_dir_all(dir) {
                    cleanup(&staged);
                    return Err(CliError::write(dir, e));
                }
            }
            let mut tmp = path.clone().into_os_string();
            tmp.push(".partial");
            let tmp = PathBuf::from(tmp);
            if let Err(e) = fs::write(&tmp, bytes) {
                cleanup(&staged);
                return Err(CliError::write(path, e));
            }
            staged.push((tmp, path));
        }
        for (k, (tmp, path)) in staged.iter().enumerate() {
            if let Err(e) = fs::rename(tmp, path) {
                cleanup(&staged[k..]);
                for (_, done) in &staged[..k] {
                    let _ = fs::remove_file(done);
                }
                return Err(CliError::write(path, e));
            }
        }
        Ok(())
    }
}
