//! Pattern files.
//!
//! CSV: first line `rows,cols`, then `rows` lines of `cols` comma-separated
//! reals (row-major). Values are written with shortest round-trip formatting,
//! so a save/load cycle is lossless.
//!
//! PGM: P2 (ASCII) or P5 (binary) with maxval up to 255. Gray level `g` loads
//! as `g / maxval`. [`save_image`] writes `round(255 * v)` clamped to
//! `0..=255`, the exact inverse up to 8-bit quantization.

use std::fs;
use std::path::{Path, PathBuf};

use super::{Pattern, Shape};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmEncoding {
    Ascii,
    Binary,
}

/// Loads a PGM or CSV pattern, normalized, with the file stem as label.
pub fn load_image(path: impl AsRef<Path>) -> Result<Pattern> {
    let path = path.as_ref();
    let mut pattern = load_image_raw(path)?.normalize()?;
    if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
        pattern.label = Some(stem.to_string());
    }
    Ok(pattern)
}

/// Loads a PGM or CSV pattern exactly as stored: no normalization, no label.
pub fn load_image_raw(path: impl AsRef<Path>) -> Result<Pattern> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.is_empty() {
        return Err(header(path, "empty file"));
    }
    let (values, shape) = if bytes.starts_with(b"P2") || bytes.starts_with(b"P5") {
        parse_pgm(path, &bytes)?
    } else {
        parse_csv(path, &bytes)?
    };
    Pattern::new(values, shape).map_err(|e| match e {
        Error::Parameter(reason) => dims(path, reason),
        other => other,
    })
}

/// Writes `.pgm` (binary P5) or, for any other extension, CSV.
pub fn save_image(p: &Pattern, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")) {
        save_pgm(p, path, PgmEncoding::Binary)
    } else {
        let (rows, cols) = p.shape().dims();
        let mut out = format!("{rows},{cols}\n");
        for row in p.values().chunks(cols) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

pub fn save_pgm(p: &Pattern, path: impl AsRef<Path>, encoding: PgmEncoding) -> Result<()> {
    write_pgm(p, path.as_ref(), encoding, 1.0)
}

/// Writes a PGM stretched so the pattern's peak maps to white. For figures.
pub fn save_pgm_scaled(p: &Pattern, path: impl AsRef<Path>) -> Result<()> {
    let peak = p.max();
    let scale = if peak > 0.0 { 1.0 / peak } else { 1.0 };
    write_pgm(p, path.as_ref(), PgmEncoding::Binary, scale)
}

fn quantize(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

fn write_pgm(p: &Pattern, path: &Path, encoding: PgmEncoding, scale: f64) -> Result<()> {
    let (rows, cols) = p.shape().dims();
    let gray: Vec<u8> = p.values().iter().map(|v| quantize(v * scale)).collect();
    let bytes = match encoding {
        PgmEncoding::Binary => {
            let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
            out.extend_from_slice(&gray);
            out
        }
        PgmEncoding::Ascii => {
            let mut out = format!("P2\n{cols} {rows}\n255\n");
            for row in gray.chunks(cols) {
                let line: Vec<String> = row.iter().map(u8::to_string).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
            out.into_bytes()
        }
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn header(path: &Path, reason: impl Into<String>) -> Error {
    Error::MalformedHeader {
        path: PathBuf::from(path),
        reason: reason.into(),
    }
}

fn dims(path: &Path, reason: impl Into<String>) -> Error {
    Error::DimensionMismatch {
        path: PathBuf::from(path),
        reason: reason.into(),
    }
}

/// Splits the PGM header into whitespace tokens, skipping `#` comments, and
/// returns the tokens plus the offset just past the single whitespace byte
/// that ends the header.
fn pgm_header(path: &Path, bytes: &[u8]) -> Result<(Vec<String>, usize)> {
    let mut tokens = Vec::new();
    let mut i = 0;
    while tokens.len() < 4 {
        while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'#') {
            if bytes[i] == b'#' {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            } else {
                i += 1;
            }
        }
        if i >= bytes.len() {
            return Err(header(path, "truncated PGM header"));
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        let token = std::str::from_utf8(&bytes[start..i])
            .map_err(|_| header(path, "non-ASCII PGM header"))?;
        tokens.push(token.to_string());
    }
    Ok((tokens, i + 1))
}

fn parse_pgm(path: &Path, bytes: &[u8]) -> Result<(Vec<f64>, Shape)> {
    let (tokens, data_start) = pgm_header(path, bytes)?;
    let number = |s: &str, what: &str| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| header(path, format!("bad {what} `{s}`")))
    };
    let cols = number(&tokens[1], "width")?;
    let rows = number(&tokens[2], "height")?;
    let maxval = number(&tokens[3], "maxval")?;
    if cols == 0 || rows == 0 {
        return Err(header(path, "zero image dimension"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(header(path, format!("unsupported maxval {maxval}")));
    }
    let n = rows * cols;
    let levels: Vec<usize> = if tokens[0] == "P5" {
        let data = bytes.get(data_start..).unwrap_or(&[]);
        if data.len() != n {
            return Err(dims(
                path,
                format!("{rows}x{cols} image needs {n} bytes, found {}", data.len()),
            ));
        }
        data.iter().map(|&b| b as usize).collect()
    } else {
        let text = std::str::from_utf8(bytes.get(data_start..).unwrap_or(&[]))
            .map_err(|_| dims(path, "non-ASCII P2 body"))?;
        let levels = text
            .split_ascii_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| dims(path, format!("bad gray level `{t}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if levels.len() != n {
            return Err(dims(
                path,
                format!("{rows}x{cols} image needs {n} values, found {}", levels.len()),
            ));
        }
        levels
    };
    if let Some(bad) = levels.iter().find(|&&g| g > maxval) {
        return Err(dims(path, format!("gray level {bad} exceeds maxval {maxval}")));
    }
    let values = levels.iter().map(|&g| g as f64 / maxval as f64).collect();
    Ok((values, Shape::Grid { rows, cols }))
}

fn parse_csv(path: &Path, bytes: &[u8]) -> Result<(Vec<f64>, Shape)> {
    let text = std::str::from_utf8(bytes).map_err(|_| header(path, "not UTF-8 text"))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let head = lines.next().ok_or_else(|| header(path, "empty file"))?;
    let parts: Vec<&str> = head.split(',').map(str::trim).collect();
    let (rows, cols) = match parts.as_slice() {
        [r, c] => match (r.parse::<usize>(), c.parse::<usize>()) {
            (Ok(r), Ok(c)) if r > 0 && c > 0 => (r, c),
            _ => return Err(header(path, format!("expected `rows,cols`, found `{head}`"))),
        },
        _ => return Err(header(path, format!("expected `rows,cols`, found `{head}`"))),
    };
    let mut values = Vec::with_capacity(rows * cols);
    let mut row_count = 0;
    for line in lines {
        row_count += 1;
        let row = line
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| dims(path, format!("bad number `{}`", t.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != cols {
            return Err(dims(
                path,
                format!("row {row_count} has {} values, expected {cols}", row.len()),
            ));
        }
        values.extend(row);
    }
    if row_count != rows {
        return Err(dims(path, format!("found {row_count} rows, expected {rows}")));
    }
    Ok((values, Shape::Grid { rows, cols }))
}
