//! Text and image formats for stacks, maps, factor vectors and images.
//!
//! CSV files start with one `#` comment line of `key=value` pairs that carries
//! the shape. Values are printed with the shortest representation that parses
//! back to the same `f64`.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::am::Image;
use crate::cmap::{CausalityMap, Method};
use crate::error::{Error, Result};
use crate::factors::FactorVector;
use crate::stack::FeatureStack;

fn parse_err(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn header(text: &str) -> Result<(HashMap<String, String>, std::str::Lines<'_>)> {
    let mut lines = text.lines();
    let first = lines.next().ok_or_else(|| parse_err("empty file"))?;
    let body = first
        .strip_prefix('#')
        .ok_or_else(|| parse_err("missing '# key=value' header line"))?;
    let mut fields = HashMap::new();
    for tok in body.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| parse_err(format!("malformed header field '{tok}'")))?;
        fields.insert(k.to_string(), v.to_string());
    }
    Ok((fields, lines))
}

fn field<T: std::str::FromStr>(fields: &HashMap<String, String>, key: &str) -> Result<T> {
    let raw = fields
        .get(key)
        .ok_or_else(|| parse_err(format!("header is missing '{key}'")))?;
    raw.parse()
        .map_err(|_| parse_err(format!("header field '{key}' has invalid value '{raw}'")))
}

fn parse_row(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .map_err(|_| parse_err(format!("line {lineno}: '{t}' is not a number")))
        })
        .collect()
}

/// Non-empty, non-comment data rows, each required to have `width` values.
fn rows<'a>(lines: impl Iterator<Item = &'a str>, width: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = parse_row(line, i + 2)?;
        if row.len() != width {
            return Err(parse_err(format!("line {}: expected {width} values, found {}", i + 2, row.len())));
        }
        out.push(row);
    }
    Ok(out)
}

fn push_row(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v:?}");
    }
    out.push('\n');
}

/// `# k=.. n=..` followed by `k·n` rows of `n` values (map after map).
pub fn stack_to_csv(stack: &FeatureStack) -> String {
    let mut out = format!("# k={} n={}\n", stack.k(), stack.n());
    for row in stack.as_slice().chunks_exact(stack.n()) {
        push_row(&mut out, row);
    }
    out
}

pub fn stack_from_csv(text: &str) -> Result<FeatureStack> {
    let (fields, lines) = header(text)?;
    let k: usize = field(&fields, "k")?;
    let n: usize = field(&fields, "n")?;
    if n == 0 {
        return Err(parse_err("n must be positive"));
    }
    let data = rows(lines, n)?;
    if data.len() != k * n {
        return Err(parse_err(format!("expected {} rows, found {}", k * n, data.len())));
    }
    FeatureStack::new(k, n, data.concat())
}

/// `# k=.. method=..` followed by `k` rows of `k` values.
pub fn map_to_csv(map: &CausalityMap) -> String {
    let mut out = format!("# k={} method={}\n", map.k(), map.method());
    for i in 0..map.k() {
        push_row(&mut out, map.row(i));
    }
    out
}

pub fn map_from_csv(text: &str) -> Result<CausalityMap> {
    let (fields, lines) = header(text)?;
    let k: usize = field(&fields, "k")?;
    let method: Method = match fields.get("method") {
        Some(_) => field(&fields, "method")?,
        None => Method::Max,
    };
    let data = rows(lines, k)?;
    if data.len() != k {
        return Err(parse_err(format!("expected {k} rows, found {}", data.len())));
    }
    CausalityMap::new(k, data.concat(), method)
}

/// `# k=..` followed by a single row.
pub fn factors_to_csv(factors: &FactorVector) -> String {
    let mut out = format!("# k={}\n", factors.len());
    push_row(&mut out, &factors.weights);
    out
}

pub fn factors_from_csv(text: &str) -> Result<Vec<f64>> {
    let (fields, lines) = header(text)?;
    let k: usize = field(&fields, "k")?;
    let data = rows(lines, k)?;
    match data.as_slice() {
        [row] => Ok(row.clone()),
        _ => Err(parse_err(format!("expected 1 row, found {}", data.len()))),
    }
}

/// Comma-separated rows with no header; every row must have the same length.
pub fn matrix_from_csv(text: &str) -> Result<(usize, Vec<f64>)> {
    let mut width = None;
    let mut data = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = parse_row(line, i + 1)?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(parse_err(format!("line {}: expected {w} values, found {}", i + 1, row.len())))
            }
            _ => {}
        }
        data.extend(row);
    }
    let width = width.ok_or_else(|| parse_err("no data rows"))?;
    Ok((width, data))
}

/// `# h=.. w=.. c=..` followed by `h` rows of `w·c` values.
pub fn image_to_csv(img: &Image) -> String {
    let mut out = format!("# h={} w={} c={}\n", img.height(), img.width(), img.channels());
    for row in img.as_slice().chunks_exact(img.width() * img.channels()) {
        push_row(&mut out, row);
    }
    out
}

pub fn image_from_csv(text: &str) -> Result<Image> {
    let (fields, lines) = header(text)?;
    let h: usize = field(&fields, "h")?;
    let w: usize = field(&fields, "w")?;
    let c: usize = field(&fields, "c")?;
    let data = rows(lines, w * c)?;
    if data.len() != h {
        return Err(parse_err(format!("expected {h} rows, found {}", data.len())));
    }
    Image::new(h, w, c, data.concat())
}

/// Binary 8-bit graymap. `values` are mapped linearly from `[lo, hi]` to
/// `[0, 255]` and clamped.
pub fn encode_pgm(width: usize, height: usize, values: &[f64], lo: f64, hi: f64) -> Vec<u8> {
    assert_eq!(values.len(), width * height, "pgm pixel count");
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    let span = hi - lo;
    out.extend(values.iter().map(|&v| {
        let t = if span > 0.0 { (v - lo) / span } else { 0.0 };
        (t.clamp(0.0, 1.0) * 255.0).round() as u8
    }));
    out
}

/// Heatmap of a causality map, scaled by its largest entry.
pub fn map_to_pgm(map: &CausalityMap) -> Vec<u8> {
    encode_pgm(map.k(), map.k(), map.entries(), 0.0, map.max_entry())
}

/// Grayscale rendering of a single-channel image, or the channel mean of an
/// RGB one, scaled from `[lo, hi]`.
pub fn image_to_pgm(img: &Image, lo: f64, hi: f64) -> Vec<u8> {
    let c = img.channels();
    let gray: Vec<f64> = img
        .as_slice()
        .chunks_exact(c)
        .map(|px| px.iter().sum::<f64>() / c as f64)
        .collect();
    encode_pgm(img.width(), img.height(), &gray, lo, hi)
}

/// Parses a binary 8-bit graymap into `[0, 1]` values: `(width, height, pixels)`.
pub fn decode_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<f64>)> {
    let mut fields = Vec::with_capacity(4);
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
            return Err(parse_err("truncated graymap header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P5" {
        return Err(parse_err("only binary graymaps (P5) are supported"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| parse_err(format!("bad graymap field '{s}'")));
    let (w, h, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
    if maxval == 0 || maxval > 255 {
        return Err(parse_err("graymap must be 8-bit"));
    }
    let pixels = bytes.get(pos..pos + w * h).ok_or_else(|| parse_err("truncated graymap data"))?;
    Ok((w, h, pixels.iter().map(|&b| b as f64 / maxval as f64).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmap::{compute_causality_map, EstimatorConfig};
    use crate::factors::{extract_factors, FactorConfig};

    fn stack() -> FeatureStack {
        FeatureStack::new(2, 2, vec![0.1, 0.2, 1.0 / 3.0, 0.0, 0.5, 1e-17, 7.0, 2.5]).unwrap()
    }

    #[test]
    fn stack_round_trip() {
        let s = stack();
        assert_eq!(stack_from_csv(&stack_to_csv(&s)).unwrap(), s);
    }

    #[test]
    fn map_and_factor_round_trip() {
        let map = compute_causality_map(&stack(), &EstimatorConfig::max()).unwrap();
        let back = map_from_csv(&map_to_csv(&map)).unwrap();
        assert_eq!(back, map);
        let f = extract_factors(&map, FactorConfig::default());
        assert_eq!(factors_from_csv(&factors_to_csv(&f)).unwrap(), f.weights);
    }

    #[test]
    fn malformed_inputs() {
        assert!(stack_from_csv("").is_err());
        assert!(stack_from_csv("0.1,0.2\n").is_err());
        assert!(stack_from_csv("# k=2 n=2\n0.1,0.2\n").is_err());
        assert!(stack_from_csv("# k=1 n=2\n0.1,abc\n0,0\n").is_err());
        assert!(map_from_csv("# k=2\n1,2\n3\n").is_err());
        assert!(matrix_from_csv("1,2\n3\n").is_err());
    }

    #[test]
    fn pgm_round_trip() {
        let bytes = encode_pgm(3, 1, &[0.0, 0.5, 2.0], 0.0, 1.0);
        let (w, h, px) = decode_pgm(&bytes).unwrap();
        assert_eq!((w, h), (3, 1));
        assert_eq!(px, vec![0.0, 128.0 / 255.0, 1.0]);
        assert!(decode_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(decode_pgm(b"P5\n2 2\n255\n\x00").is_err());
    }

    #[test]
    fn image_round_trip() {
        let img = Image::new(2, 2, 3, (0..12).map(|v| v as f64 / 11.0).collect()).unwrap();
        assert_eq!(image_from_csv(&image_to_csv(&img)).unwrap(), img);
    }
}
