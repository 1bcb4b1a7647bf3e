//! Network file formats.
//!
//! JSON: `{"origin": <id>, "edges": [[<id>, <id>, <float>], ...]}`.
//! CSV: header `x,y,c`, one edge per row; the origin is supplied separately.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use super::{Network, VertexId};
use crate::error::{Error, Result};

fn parse_err(context: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        context: context.into(),
        message: message.into(),
    }
}

fn vertex_from_json(v: &Value, context: &str) -> Result<VertexId> {
    match v {
        Value::String(s) => Ok(VertexId::Name(s.clone())),
        Value::Number(n) => n
            .as_i64()
            .map(VertexId::Int)
            .ok_or_else(|| parse_err(context, format!("vertex id {n} is not an integer"))),
        other => Err(parse_err(
            context,
            format!("vertex id must be a string or integer, got {other}"),
        )),
    }
}

/// Parses the JSON network format.
pub fn parse_network_json(text: &str) -> Result<Network> {
    let doc: Value = serde_json::from_str(text).map_err(|e| {
        parse_err(
            format!("line {} column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    let obj = doc
        .as_object()
        .ok_or_else(|| parse_err("document", "expected a JSON object"))?;
    let origin = obj
        .get("origin")
        .ok_or_else(|| parse_err("origin", "missing key \"origin\""))?;
    let origin = vertex_from_json(origin, "origin")?;
    let edges = obj
        .get("edges")
        .ok_or_else(|| parse_err("edges", "missing key \"edges\""))?
        .as_array()
        .ok_or_else(|| parse_err("edges", "expected an array"))?;

    let mut list = Vec::with_capacity(edges.len());
    for (k, e) in edges.iter().enumerate() {
        let ctx = format!("edges[{k}]");
        let triple = e
            .as_array()
            .filter(|a| a.len() == 3)
            .ok_or_else(|| parse_err(&ctx, "expected [x, y, c]"))?;
        let x = vertex_from_json(&triple[0], &format!("{ctx}[0]"))?;
        let y = vertex_from_json(&triple[1], &format!("{ctx}[1]"))?;
        let c = triple[2]
            .as_f64()
            .ok_or_else(|| parse_err(format!("{ctx}[2]"), "conductance must be a number"))?;
        list.push((x, y, c));
    }
    Network::new(list, origin)
}

/// Parses the CSV network format with the given origin.
pub fn parse_network_csv(text: &str, origin: &str) -> Result<Network> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_err("line 1", e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["x", "y", "c"] {
        return Err(parse_err("line 1", "header must be x,y,c"));
    }
    let mut list = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(format!("line {line}"), e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let x: VertexId = record[0].parse().unwrap_or_else(|e| match e {});
        let y: VertexId = record[1].parse().unwrap_or_else(|e| match e {});
        let c: f64 = record[2]
            .parse()
            .map_err(|_| parse_err(format!("line {line}, field c"), format!("'{}' is not a number", &record[2])))?;
        list.push((x, y, c));
    }
    let origin_id: VertexId = origin.parse().unwrap_or_else(|e| match e {});
    let appears = list.iter().any(|(x, y, _)| *x == origin_id || *y == origin_id);
    let origin_id = if appears {
        origin_id
    } else {
        VertexId::Name(origin.trim().to_string())
    };
    Network::new(list, origin_id)
}

/// Loads a network from a JSON file.
pub fn load_network(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_network_json(&text)
}

pub fn load_network_csv(path: impl AsRef<Path>, origin: &str) -> Result<Network> {
    let text = fs::read_to_string(path)?;
    parse_network_csv(&text, origin)
}

#[derive(Serialize)]
struct NetworkDoc<'a> {
    origin: &'a VertexId,
    edges: Vec<(&'a VertexId, &'a VertexId, f64)>,
}

impl Network {
    /// Serializes to the canonical JSON format, edges in stored order.
    pub fn to_json(&self) -> String {
        let doc = NetworkDoc {
            origin: self.id(self.origin()),
            edges: self
                .edges()
                .iter()
                .map(|e| (self.id(e.a), self.id(e.b), e.conductance))
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("network serializes")
    }
}

pub fn save_network(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, net.to_json() + "\n")?;
    Ok(())
}
