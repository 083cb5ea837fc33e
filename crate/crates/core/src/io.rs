//! JSON and CSV forms of margins, joints, subcopulas and copulas.
//!
//! Exact values are written as `"num/den"` strings and float values as JSON
//! numbers. Readers accept either form on both tracks.

use std::io::{Read, Write};

use ndarray::{ArrayD, Dimension, IxDyn};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::extension::{extend, Copula, ExtensionKind};
use crate::joint::JointPmf;
use crate::margins::Margin;
use crate::numerics::{cmp_scalar, Scalar};
use crate::subcopula::Subcopula;

fn track<T: Scalar>() -> &'static str {
    if T::EXACT {
        "exact"
    } else {
        "float"
    }
}

fn scalars<T: Scalar>(v: &[T]) -> Value {
    Value::Array(v.iter().map(Scalar::to_json).collect())
}

/// Row-major nesting of an array as JSON arrays.
pub fn nested_json<T: Scalar>(a: &ArrayD<T>) -> Value {
    fn go<T: Scalar>(a: ndarray::ArrayViewD<'_, T>) -> Value {
        if a.ndim() == 0 {
            return a.iter().next().map(Scalar::to_json).unwrap_or(Value::Null);
        }
        Value::Array(a.outer_iter().map(go).collect())
    }
    go(a.view())
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| Error::Parse(format!("missing field \"{key}\"")))
}

fn array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| Error::Parse(format!("{what} must be an array")))
}

fn scalar_list<T: Scalar>(v: &Value, what: &str) -> Result<Vec<T>> {
    array(v, what)?.iter().map(T::from_json).collect()
}

/// Flattens nested arrays in row-major order; a flat list passes through.
fn flatten<T: Scalar>(v: &Value, out: &mut Vec<T>) -> Result<()> {
    match v {
        Value::Array(items) => items.iter().try_for_each(|x| flatten(x, out)),
        other => {
            out.push(T::from_json(other)?);
            Ok(())
        }
    }
}

fn dense<T: Scalar>(v: &Value, shape: &[usize]) -> Result<ArrayD<T>> {
    let mut flat = Vec::new();
    flatten(v, &mut flat)?;
    ArrayD::from_shape_vec(IxDyn(shape), flat).map_err(|e| Error::Shape(e.to_string()))
}

pub fn margin_to_json<T: Scalar>(m: &Margin<T>) -> Value {
    if let Some((atoms, masses)) = m.atoms() {
        json!({ "kind": "discrete", "atoms": scalars(atoms), "masses": scalars(masses) })
    } else {
        let bps: Vec<Value> = m
            .breakpoints()
            .unwrap_or_default()
            .iter()
            .map(|(x, f)| json!([x.to_json(), f.to_json()]))
            .collect();
        json!({ "kind": "piecewise_linear", "breakpoints": bps })
    }
}

pub fn margin_from_json<T: Scalar>(v: &Value) -> Result<Margin<T>> {
    match field(v, "kind")?.as_str() {
        Some("discrete") => Margin::discrete(
            scalar_list(field(v, "atoms")?, "atoms")?,
            scalar_list(field(v, "masses")?, "masses")?,
        ),
        Some("piecewise_linear") => {
            let bps = array(field(v, "breakpoints")?, "breakpoints")?
                .iter()
                .map(|p| match scalar_list::<T>(p, "breakpoint")?.as_slice() {
                    [x, f] => Ok((x.clone(), f.clone())),
                    _ => Err(Error::Parse("a breakpoint is an [x, F] pair".into())),
                })
                .collect::<Result<_>>()?;
            Margin::piecewise_linear(bps)
        }
        _ => Err(Error::Parse("margin kind must be \"discrete\" or \"piecewise_linear\"".into())),
    }
}

/// A single margin object or an array of them.
pub fn margins_from_json<T: Scalar>(v: &Value) -> Result<Vec<Margin<T>>> {
    match v {
        Value::Array(items) => items.iter().map(margin_from_json).collect(),
        single => Ok(vec![margin_from_json(single)?]),
    }
}

pub fn joint_to_json<T: Scalar>(j: &JointPmf<T>) -> Value {
    json!({
        "dims": j.dims(),
        "axes": Value::Array(j.axes().iter().map(|a| scalars(a)).collect()),
        "mass": { "format": "dense", "values": nested_json(j.mass()) },
        "track": track::<T>(),
    })
}

/// Reads a joint; `mass.values` may be flat (row-major) or nested.
pub fn joint_from_json<T: Scalar>(v: &Value) -> Result<JointPmf<T>> {
    let axes: Vec<Vec<T>> = array(field(v, "axes")?, "axes")?
        .iter()
        .map(|a| scalar_list(a, "axis"))
        .collect::<Result<_>>()?;
    if let Some(d) = v.get("dims").and_then(Value::as_u64) {
        if d as usize != axes.len() {
            return Err(Error::DimensionMismatch { expected: d as usize, got: axes.len() });
        }
    }
    let mass = field(v, "mass")?;
    if let Some(f) = mass.get("format").and_then(Value::as_str) {
        if f != "dense" {
            return Err(Error::Parse(format!("unsupported mass format \"{f}\"")));
        }
    }
    let values = mass.get("values").unwrap_or(mass);
    let shape: Vec<usize> = axes.iter().map(Vec::len).collect();
    JointPmf::new(axes, dense(values, &shape)?)
}

pub fn subcopula_to_json<T: Scalar>(h: &Subcopula<T>) -> Result<Value> {
    let (axes, values) = h
        .grid()
        .ok_or_else(|| Error::Unsupported("only tabulated subcopulas can be written".into()))?;
    Ok(json!({
        "dims": h.dims(),
        "grid": Value::Array(axes.iter().map(|a| scalars(a)).collect()),
        "values": nested_json(values),
    }))
}

pub fn subcopula_from_json<T: Scalar>(v: &Value) -> Result<Subcopula<T>> {
    let axes: Vec<Vec<T>> = array(field(v, "grid")?, "grid")?
        .iter()
        .map(|a| scalar_list(a, "grid axis"))
        .collect::<Result<_>>()?;
    let shape: Vec<usize> = axes.iter().map(Vec::len).collect();
    let values = dense(field(v, "values")?, &shape)?;
    Subcopula::from_grid(axes, values)
}

pub fn copula_to_json<T: Scalar>(c: &Copula<T>) -> Result<Value> {
    Ok(json!({ "kind": c.kind().name(), "skeleton": subcopula_to_json(c.skeleton())? }))
}

pub fn copula_from_json<T: Scalar>(v: &Value) -> Result<Copula<T>> {
    let kind = ExtensionKind::from_name(
        field(v, "kind")?.as_str().ok_or_else(|| Error::Parse("copula kind must be a string".into()))?,
    )?;
    extend(&subcopula_from_json(field(v, "skeleton")?)?, kind)
}

fn csv_error(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

fn cell<T: Scalar>(s: &str, row: usize) -> Result<T> {
    T::parse_repr(s.trim()).map_err(|e| Error::Parse(format!("row {row}: {e}")))
}

/// Two-way table: the header row holds the axis-2 labels after one leading
/// (ignored) corner cell, and each further row starts with its axis-1 label.
pub fn read_csv2d<T: Scalar>(reader: impl Read, counts: bool) -> Result<JointPmf<T>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let mut records = rdr.records();
    let header = records.next().ok_or(Error::EmptyInput)?.map_err(csv_error)?;
    let cols: Vec<T> = header.iter().skip(1).map(|s| cell(s, 1)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut values = Vec::new();
    for (n, rec) in records.enumerate() {
        let rec = rec.map_err(csv_error)?;
        if rec.len() != cols.len() + 1 {
            return Err(Error::RaggedRecord { index: n + 1, expected: cols.len() + 1, got: rec.len() });
        }
        rows.push(cell(&rec[0], n + 2)?);
        for s in rec.iter().skip(1) {
            values.push(cell(s, n + 2)?);
        }
    }
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::EmptyInput);
    }
    let shape = [rows.len(), cols.len()];
    let mass = ArrayD::from_shape_vec(IxDyn(&shape), values).map_err(|e| Error::Shape(e.to_string()))?;
    let axes = vec![rows, cols];
    if counts {
        JointPmf::from_counts(axes, mass)
    } else {
        JointPmf::new(axes, mass)
    }
}

/// Long form `x1,...,xd,prob` with a header row. Absent cells are zero and
/// repeated cells add up; each axis is the sorted set of its labels.
pub fn read_csv_long<T: Scalar>(reader: impl Read, counts: bool) -> Result<JointPmf<T>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(reader);
    let width = rdr.headers().map_err(csv_error)?.len();
    if width < 3 {
        return Err(Error::Shape(format!("long form needs at least 2 coordinates and a probability, got {width} columns")));
    }
    let d = width - 1;
    let mut rows: Vec<(Vec<T>, T)> = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        if rec.len() != width {
            return Err(Error::RaggedRecord { index: n, expected: width, got: rec.len() });
        }
        let x = rec.iter().take(d).map(|s| cell(s, n + 2)).collect::<Result<Vec<T>>>()?;
        rows.push((x, cell(&rec[d], n + 2)?));
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let axes: Vec<Vec<T>> = (0..d)
        .map(|k| {
            let mut a: Vec<T> = rows.iter().map(|(x, _)| x[k].clone()).collect();
            a.sort_by(cmp_scalar);
            a.dedup();
            a
        })
        .collect();
    let shape: Vec<usize> = axes.iter().map(Vec::len).collect();
    let mut mass = ArrayD::from_elem(IxDyn(&shape), T::zero());
    for (x, p) in rows {
        let idx: Vec<usize> = x
            .iter()
            .zip(&axes)
            .map(|(v, a)| a.binary_search_by(|b| cmp_scalar(b, v)).expect("label is on its axis"))
            .collect();
        let slot = &mut mass[IxDyn(&idx)];
        *slot = slot.clone() + p;
    }
    if counts {
        JointPmf::from_counts(axes, mass)
    } else {
        JointPmf::new(axes, mass)
    }
}

pub fn write_csv2d<T: Scalar>(j: &JointPmf<T>, writer: impl Write) -> Result<()> {
    if j.dims() != 2 {
        return Err(Error::Unsupported(format!("two-way CSV needs d = 2, got {}", j.dims())));
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![String::new()];
    header.extend(j.axes()[1].iter().map(Scalar::to_repr));
    w.write_record(&header).map_err(csv_error)?;
    for (i, row) in j.mass().outer_iter().enumerate() {
        let mut rec = vec![j.axes()[0][i].to_repr()];
        rec.extend(row.iter().map(Scalar::to_repr));
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_long<T: Scalar>(j: &JointPmf<T>, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (1..=j.dims()).map(|k| format!("x{k}")).collect();
    header.push("prob".into());
    w.write_record(&header).map_err(csv_error)?;
    for (idx, m) in j.mass().indexed_iter() {
        let mut rec: Vec<String> = idx.slice().iter().zip(j.axes()).map(|(&i, a)| a[i].to_repr()).collect();
        rec.push(m.to_repr());
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-axis weight vectors from a JSON array of arrays.
pub fn weights_from_json<T: Scalar>(v: &Value) -> Result<Vec<Vec<T>>> {
    array(v, "weights")?.iter().map(|w| scalar_list(w, "weight vector")).collect()
}
