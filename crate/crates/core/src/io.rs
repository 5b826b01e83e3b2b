//! Text formats.
//!
//! Point list: one point per line, coordinates as space-separated decimal
//! integers; `#` starts a comment; dimension is inferred from the first
//! data line.  Duplicates are preserved (consumers decide set semantics).
//!
//! Map table: a header line `d h Mnum Mden lo1 hi1 ... lod hid` — where
//! `Mnum/Mden` is the *squared* Lipschitz constant, the exact form in which
//! constants like `sqrt(1+Mg^2)` are representable — followed by one line
//! per window point in lexicographic order: the `d` domain coordinates then
//! the `d+h` value coordinates.

use crate::lattice::LatticePoint;
use crate::maps::{DomainSet, LipschitzMap, MapError, Window};
use num_bigint::BigInt;
use num_rational::BigRational;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Map(#[from] MapError),
}

fn err(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Parse {
        line,
        msg: msg.into(),
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let body = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        (!body.is_empty()).then_some((i + 1, body))
    })
}

fn parse_ints(line_no: usize, body: &str) -> Result<Vec<BigInt>, FormatError> {
    body.split_whitespace()
        .map(|tok| {
            tok.parse::<BigInt>()
                .map_err(|_| err(line_no, format!("not an integer: {tok:?}")))
        })
        .collect()
}

/// Parses a point list, preserving order and duplicates.
pub fn parse_point_list(text: &str) -> Result<Vec<LatticePoint>, FormatError> {
    let mut out: Vec<LatticePoint> = Vec::new();
    let mut dim: Option<usize> = None;
    for (line_no, body) in data_lines(text) {
        let coords = parse_ints(line_no, body)?;
        match dim {
            None => dim = Some(coords.len()),
            Some(d) if d != coords.len() => {
                return Err(err(
                    line_no,
                    format!("point has {} coordinates, expected {d}", coords.len()),
                ));
            }
            _ => {}
        }
        out.push(LatticePoint::new(coords));
    }
    Ok(out)
}

pub fn write_point_list(points: &[LatticePoint]) -> String {
    let mut s = String::new();
    for p in points {
        let _ = writeln!(s, "{p}");
    }
    s
}

/// Point list restricted to machine-sized coordinates, collected as a set.
pub fn parse_domain_set(text: &str) -> Result<DomainSet, FormatError> {
    let mut out = DomainSet::new();
    for p in parse_point_list(text)? {
        let small = p
            .to_i64s()
            .ok_or_else(|| err(0, format!("coordinates of {p} exceed the machine range")))?;
        out.insert(small);
    }
    Ok(out)
}

pub fn write_domain_set(set: &DomainSet) -> String {
    let mut s = String::new();
    for p in set {
        let line = p
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        let _ = writeln!(s, "{line}");
    }
    s
}

pub fn parse_map(text: &str) -> Result<LipschitzMap, FormatError> {
    let mut lines = data_lines(text);
    let (header_no, header) = lines.next().ok_or_else(|| err(0, "missing map header"))?;
    let fields = parse_ints(header_no, header)?;
    if fields.len() < 4 || fields.len() % 2 != 0 {
        return Err(err(
            header_no,
            "header needs d h Mnum Mden and one lo/hi pair per dimension",
        ));
    }
    let d = usize::try_from(&fields[0]).map_err(|_| err(header_no, "bad dimension"))?;
    let h = usize::try_from(&fields[1]).map_err(|_| err(header_no, "bad codimension"))?;
    if d == 0 || fields.len() != 4 + 2 * d {
        return Err(err(
            header_no,
            format!(
                "header promises dimension {d} but has {} fields",
                fields.len()
            ),
        ));
    }
    if fields[3] == BigInt::from(0) {
        return Err(err(header_no, "zero denominator in Lipschitz constant"));
    }
    let m_sq = BigRational::new(fields[2].clone(), fields[3].clone());
    let mut lo = Vec::with_capacity(d);
    let mut hi = Vec::with_capacity(d);
    for i in 0..d {
        let l = i64::try_from(&fields[4 + 2 * i])
            .map_err(|_| err(header_no, "window bound out of range"))?;
        let r = i64::try_from(&fields[5 + 2 * i])
            .map_err(|_| err(header_no, "window bound out of range"))?;
        lo.push(l);
        hi.push(r);
    }
    let window = Window::new(lo, hi)?;
    let volume = window.volume();
    let mut values: Vec<LatticePoint> = Vec::with_capacity(volume);
    for (line_no, body) in lines {
        let nums = parse_ints(line_no, body)?;
        if nums.len() != d + d + h {
            return Err(err(
                line_no,
                format!("row has {} fields, expected {}", nums.len(), d + d + h),
            ));
        }
        let x: Option<Vec<i64>> = nums[..d].iter().map(|c| i64::try_from(c).ok()).collect();
        let x = x.ok_or_else(|| err(line_no, "domain coordinate out of range"))?;
        let expected = window.point_at(values.len());
        if x != expected {
            return Err(err(
                line_no,
                format!("rows must follow window order; expected point {expected:?}"),
            ));
        }
        values.push(LatticePoint::new(nums[d..].to_vec()));
    }
    if values.len() != volume {
        return Err(err(
            0,
            format!("{} rows for a window of {volume} points", values.len()),
        ));
    }
    Ok(LipschitzMap::new(window, h, m_sq, values)?)
}

pub fn write_map(map: &LipschitzMap) -> String {
    let mut s = String::new();
    let w = map.window();
    let mut header = format!(
        "{} {} {} {}",
        map.d(),
        map.h(),
        map.m_sq().numer(),
        map.m_sq().denom()
    );
    for i in 0..map.d() {
        let _ = write!(header, " {} {}", w.lo()[i], w.hi()[i]);
    }
    let _ = writeln!(s, "{header}");
    for (x, v) in w.iter().zip(map.values()) {
        let dom = x
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        let _ = writeln!(s, "{dom} {v}");
    }
    s
}

/// Family manifest: one block per line, `map-path set-path`, `#` comments.
pub fn parse_manifest(text: &str) -> Result<Vec<(String, String)>, FormatError> {
    let mut out = Vec::new();
    for (line_no, body) in data_lines(text) {
        let mut parts = body.split_whitespace();
        let (Some(map_path), Some(set_path), None) = (parts.next(), parts.next(), parts.next())
        else {
            return Err(err(line_no, "expected exactly: map-path set-path"));
        };
        out.push((map_path.to_string(), set_path.to_string()));
    }
    Ok(out)
}
