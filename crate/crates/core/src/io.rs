//! File formats.
//!
//! * Raw images: text header `IMG n\n` then `n²` little-endian `f64`, row-major.
//! * Raw sinograms: `SINO p q\n` then `pq` little-endian `f64` in storage
//!   order (angle-major, one detector column after another).
//! * PGM (`P5`) for viewing, 8 or 16 bit, linearly stretched from the image
//!   minimum to its maximum.
//! * CSV for sinograms (`p` rows × `q` columns), error curves, profiles,
//!   denoiser traces and graph edge lists.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::denoise::DenoiseTrace;
use crate::error::{Error, Result};
use crate::graph::PatchGraph;
use crate::image::Image;
use crate::metrics::{ErrorCurve, IntensityProfile};
use crate::projector::Sinogram;

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(format!("creating {}", path.display()), e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(format!("opening {}", path.display()), e))
}

fn write_ctx(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(format!("writing {}", path.display()), e)
}

fn read_ctx(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(format!("reading {}", path.display()), e)
}

fn write_f64s(w: &mut impl Write, values: &[f64]) -> std::io::Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_header(r: &mut impl BufRead, path: &Path) -> Result<Vec<String>> {
    let mut line = String::new();
    r.read_line(&mut line).map_err(read_ctx(path))?;
    Ok(line.split_whitespace().map(str::to_owned).collect())
}

fn parse_dim(token: Option<&String>, what: &str, path: &Path) -> Result<usize> {
    token
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Format(format!("{}: bad {what} in header", path.display())))
}

fn read_f64s(r: &mut impl Read, count: usize, path: &Path) -> Result<Vec<f64>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(read_ctx(path))?;
    if bytes.len() != count * 8 {
        return Err(Error::Format(format!(
            "{}: expected {} payload bytes, found {}",
            path.display(),
            count * 8,
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn write_image_raw(path: &Path, img: &Image) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "IMG {}", img.n()).map_err(write_ctx(path))?;
    write_f64s(&mut w, img.pixels()).map_err(write_ctx(path))?;
    w.flush().map_err(write_ctx(path))
}

pub fn read_image_raw(path: &Path) -> Result<Image> {
    let mut r = open(path)?;
    let header = read_header(&mut r, path)?;
    if header.first().map(String::as_str) != Some("IMG") || header.len() != 2 {
        return Err(Error::Format(format!(
            "{}: not an IMG file",
            path.display()
        )));
    }
    let n = parse_dim(header.get(1), "side", path)?;
    let pixels = read_f64s(&mut r, n * n, path)?;
    Image::new(n, pixels).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn write_sinogram_raw(path: &Path, s: &Sinogram) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "SINO {} {}", s.p(), s.q()).map_err(write_ctx(path))?;
    write_f64s(&mut w, s.values()).map_err(write_ctx(path))?;
    w.flush().map_err(write_ctx(path))
}

pub fn read_sinogram_raw(path: &Path) -> Result<Sinogram> {
    let mut r = open(path)?;
    let header = read_header(&mut r, path)?;
    if header.first().map(String::as_str) != Some("SINO") || header.len() != 3 {
        return Err(Error::Format(format!(
            "{}: not a SINO file",
            path.display()
        )));
    }
    let p = parse_dim(header.get(1), "ray count", path)?;
    let q = parse_dim(header.get(2), "angle count", path)?;
    let values = read_f64s(&mut r, p * q, path)?;
    Sinogram::new(p, q, values).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// Bit depth of a PGM export.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmDepth {
    Eight,
    Sixteen,
}

pub fn write_pgm(path: &Path, img: &Image, depth: PgmDepth) -> Result<()> {
    let (lo, hi) = (img.min_value(), img.max_value());
    let maxval: u32 = match depth {
        PgmDepth::Eight => 255,
        PgmDepth::Sixteen => 65535,
    };
    let mut w = create(path)?;
    write!(w, "P5\n{} {}\n{}\n", img.n(), img.n(), maxval).map_err(write_ctx(path))?;
    for &v in img.pixels() {
        let level = if hi > lo {
            ((v - lo) / (hi - lo) * maxval as f64).round() as u32
        } else {
            0
        };
        match depth {
            PgmDepth::Eight => w.write_all(&[level as u8]),
            PgmDepth::Sixteen => w.write_all(&(level as u16).to_be_bytes()),
        }
        .map_err(write_ctx(path))?;
    }
    w.flush().map_err(write_ctx(path))
}

/// Read a binary PGM; gray levels are returned divided by the header maxval.
pub fn read_pgm(path: &Path) -> Result<Image> {
    let mut bytes = Vec::new();
    open(path)?
        .read_to_end(&mut bytes)
        .map_err(read_ctx(path))?;
    let bad = || Error::Format(format!("{}: malformed PGM", path.display()));
    // Header: magic, width, height, maxval separated by whitespace, then one
    // whitespace byte before the raster.
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad());
        }
        fields.push(
            std::str::from_utf8(&bytes[start..pos])
                .map_err(|_| bad())?
                .to_owned(),
        );
    }
    pos += 1;
    if fields[0] != "P5" {
        return Err(bad());
    }
    let width: usize = fields[1].parse().map_err(|_| bad())?;
    let height: usize = fields[2].parse().map_err(|_| bad())?;
    let maxval: u32 = fields[3].parse().map_err(|_| bad())?;
    if width != height || maxval == 0 || maxval > 65535 {
        return Err(bad());
    }
    let raster = bytes.get(pos..).ok_or_else(bad)?;
    let pixels: Vec<f64> = if maxval < 256 {
        if raster.len() != width * height {
            return Err(bad());
        }
        raster.iter().map(|&b| b as f64 / maxval as f64).collect()
    } else {
        if raster.len() != 2 * width * height {
            return Err(bad());
        }
        raster
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / maxval as f64)
            .collect()
    };
    Image::new(width, pixels)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(format!("creating {}", path.display()), io),
        other => Error::Format(format!("{other:?}")),
    })
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    Ok(csv::Reader::from_reader(file))
}

fn parse_field<T: std::str::FromStr>(
    record: &csv::StringRecord,
    k: usize,
    path: &Path,
) -> Result<T> {
    record
        .get(k)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Format(format!("{}: bad field {k} in {record:?}", path.display())))
}

/// Sinogram as CSV: one line per ray, one column per angle.
pub fn write_sinogram_csv(path: &Path, s: &Sinogram) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record((0..s.q()).map(|k| format!("angle{k}")))?;
    for r in 0..s.p() {
        w.write_record((0..s.q()).map(|k| format!("{:e}", s.get(r, k))))?;
    }
    w.flush().map_err(write_ctx(path))
}

pub fn read_sinogram_csv(path: &Path) -> Result<Sinogram> {
    let mut r = csv_reader(path)?;
    let q = r.headers()?.len();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = (0..q)
            .map(|k| parse_field::<f64>(&rec, k, path))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let p = rows.len();
    let mut values = vec![0.0; p * q];
    for (ray, row) in rows.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            values[k * p + ray] = v;
        }
    }
    Sinogram::new(p, q, values)
}

/// `iteration,error`.
pub fn write_curve_csv(path: &Path, curve: &ErrorCurve) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["iteration", "error"])?;
    for (k, v) in curve.values.iter().enumerate() {
        w.write_record([k.to_string(), format!("{v:e}")])?;
    }
    w.flush().map_err(write_ctx(path))
}

pub fn read_curve_csv(path: &Path, method_label: &str) -> Result<ErrorCurve> {
    let mut r = csv_reader(path)?;
    let mut curve = ErrorCurve::new(method_label);
    for rec in r.records() {
        curve.values.push(parse_field(&rec?, 1, path)?);
    }
    Ok(curve)
}

/// `column,value`.
pub fn write_profile_csv(path: &Path, profile: &IntensityProfile) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["column", "value"])?;
    for (c, v) in profile.values.iter().enumerate() {
        w.write_record([c.to_string(), format!("{v:e}")])?;
    }
    w.flush().map_err(write_ctx(path))
}

pub fn read_profile_csv(path: &Path, row_index: usize) -> Result<IntensityProfile> {
    let mut r = csv_reader(path)?;
    let mut values = Vec::new();
    for rec in r.records() {
        values.push(parse_field(&rec?, 1, path)?);
    }
    Ok(IntensityProfile { row_index, values })
}

/// `iteration,objective`.
pub fn write_trace_csv(path: &Path, trace: &DenoiseTrace) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["iteration", "objective"])?;
    for (k, v) in trace.objective.iter().enumerate() {
        w.write_record([k.to_string(), format!("{v:e}")])?;
    }
    w.flush().map_err(write_ctx(path))
}

/// Edge list `i,j,weight`.
pub fn write_edges_csv(path: &Path, g: &PatchGraph) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["i", "j", "weight"])?;
    for e in g.edges() {
        w.write_record([e.i.to_string(), e.j.to_string(), format!("{:e}", e.weight)])?;
    }
    w.flush().map_err(write_ctx(path))
}

pub fn read_edges_csv(path: &Path) -> Result<Vec<(usize, usize, f64)>> {
    let mut r = csv_reader(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        out.push((
            parse_field(&rec, 0, path)?,
            parse_field(&rec, 1, path)?,
            parse_field(&rec, 2, path)?,
        ));
    }
    Ok(out)
}
