//! Line-oriented text format for nets and designs.
//!
//! The first line is `dim=<d> kind=<kind> radius=<r>`, followed by one point
//! per line as space-separated decimals. Designs use `kind=design`, store the
//! max support leverage as the radius and append the weight as an extra column.

use std::io::{BufRead, Write};

use super::design::{leverage, DesignWeights};
use super::net::{nnz, NetKind, ParameterNet};
use super::GeometryError;
use crate::Vector;

struct Header {
    dim: usize,
    kind: String,
    radius: f64,
}

fn write_row<W: Write>(out: &mut W, values: impl Iterator<Item = f64>) -> std::io::Result<()> {
    let line: Vec<String> = values.map(|x| x.to_string()).collect();
    writeln!(out, "{}", line.join(" "))
}

pub fn write_net<W: Write>(net: &ParameterNet, mut out: W) -> Result<(), GeometryError> {
    writeln!(
        out,
        "dim={} kind={} radius={}",
        net.dim(),
        net.kind(),
        net.target_radius()
    )?;
    for p in net.points() {
        write_row(&mut out, p.iter().copied())?;
    }
    Ok(())
}

pub fn write_design<W: Write>(design: &DesignWeights, mut out: W) -> Result<(), GeometryError> {
    let max_lev = design.max_leverage(design.actions());
    writeln!(out, "dim={} kind=design radius={}", design.dim(), max_lev)?;
    for (a, w) in design.actions().iter().zip(design.weights()) {
        write_row(&mut out, a.iter().copied().chain(std::iter::once(*w)))?;
    }
    Ok(())
}

fn parse_header(line: &str) -> Result<Header, GeometryError> {
    let err = |message: String| GeometryError::Parse { line: 1, message };
    let (mut dim, mut kind, mut radius) = (None, None, None);
    for field in line.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| err(format!("expected key=value, got `{field}`")))?;
        match key {
            "dim" => dim = Some(value.parse().map_err(|e| err(format!("dim: {e}")))?),
            "kind" => kind = Some(value.to_string()),
            "radius" => radius = Some(value.parse().map_err(|e| err(format!("radius: {e}")))?),
            other => return Err(err(format!("unknown header field `{other}`"))),
        }
    }
    Ok(Header {
        dim: dim.ok_or_else(|| err("missing dim".into()))?,
        kind: kind.ok_or_else(|| err("missing kind".into()))?,
        radius: radius.ok_or_else(|| err("missing radius".into()))?,
    })
}

fn parse_rows<R: BufRead>(input: R, width: usize) -> Result<(Header, Vec<Vec<f64>>), GeometryError> {
    let mut lines = input.lines();
    let first = lines.next().ok_or(GeometryError::Parse {
        line: 1,
        message: "empty input".into(),
    })??;
    let header = parse_header(&first)?;
    let expected = header.dim + width;
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 2;
        let row = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| GeometryError::Parse {
                line: lineno,
                message: e.to_string(),
            })?;
        if row.len() != expected {
            return Err(GeometryError::Parse {
                line: lineno,
                message: format!("expected {expected} values, found {}", row.len()),
            });
        }
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn read_net<R: BufRead>(input: R) -> Result<ParameterNet, GeometryError> {
    let (header, rows) = parse_rows(input, 0)?;
    let points: Vec<Vector> = rows.into_iter().map(Vector::from_vec).collect();
    let kind = match header.kind.as_str() {
        "dense-grid" => NetKind::DenseGrid,
        "user-supplied" => NetKind::UserSupplied,
        "sparse" => NetKind::Sparse {
            sparsity: points.iter().map(nnz).max().unwrap_or(0).max(1),
        },
        other => {
            return Err(GeometryError::Parse {
                line: 1,
                message: format!("unknown net kind `{other}`"),
            })
        }
    };
    ParameterNet::with_kind(points, header.radius, kind)
}

pub fn read_design<R: BufRead>(input: R) -> Result<DesignWeights, GeometryError> {
    let (header, rows) = parse_rows(input, 1)?;
    if header.kind != "design" {
        return Err(GeometryError::Parse {
            line: 1,
            message: format!("expected kind=design, got `{}`", header.kind),
        });
    }
    let (actions, weights): (Vec<Vector>, Vec<f64>) = rows
        .into_iter()
        .map(|mut row| {
            let w = row.pop().unwrap_or_default();
            (Vector::from_vec(row), w)
        })
        .unzip();
    let design = DesignWeights::from_weights(actions, weights)?;
    let max_lev = design
        .actions()
        .iter()
        .map(|a| leverage(a, &design))
        .fold(0.0, f64::max);
    if (max_lev - header.radius).abs() > 1e-6 * header.radius.max(1.0) {
        return Err(GeometryError::Parse {
            line: 1,
            message: format!("header leverage {} disagrees with weights ({max_lev})", header.radius),
        });
    }
    Ok(design)
}
