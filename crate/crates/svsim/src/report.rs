//! Tabular results written as CSV or versioned JSON.

use std::io::Write;

use serde::Serialize;
use serde_json::{json, Map, Value};
use svsim_core::perfmodel::BoundCase;
use svsim_core::GateOp;

/// Version of the JSON layout produced by [`Table::to_json`].
pub const JSON_SCHEMA: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Named columns plus rows of JSON scalars, with free-form metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub meta: Map<String, Value>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            meta: Map::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(cell)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().cloned().zip(r.iter().cloned()).collect()))
            .collect();
        json!({
            "schema": JSON_SCHEMA,
            "table": self.name,
            "columns": self.columns,
            "meta": self.meta,
            "rows": rows,
        })
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => {
                let mut s = serde_json::to_string_pretty(&self.to_json()).expect("json");
                s.push('\n');
                s
            }
        }
    }

    pub fn write_to(&self, format: OutputFormat, out: &mut dyn Write) -> std::io::Result<()> {
        out.write_all(self.render(format).as_bytes())
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Timing and traffic for one executed gate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateRecord {
    pub gate: usize,
    pub kind: &'static str,
    pub qubits: Vec<usize>,
    pub case_id: u8,
    pub seconds: f64,
    /// Model traffic for the gate's case at this `m`.
    pub bytes_moved: u64,
    /// Payload bytes this rank actually sent and received.
    pub wire_bytes: u64,
}

/// Timer floor, so records never report zero time.
pub const MIN_SECONDS: f64 = 1e-9;

impl GateRecord {
    pub fn new(gate: usize, op: &GateOp, case: BoundCase, m: usize, seconds: f64, wire_bytes: u64) -> Self {
        Self {
            gate,
            kind: if op.control().is_some() { "controlled" } else { "single" },
            qubits: op.control().into_iter().chain([op.target()]).collect(),
            case_id: case.id(),
            seconds: seconds.max(MIN_SECONDS),
            bytes_moved: case.traffic_bytes(m),
            wire_bytes,
        }
    }
}

pub fn records_table(records: &[GateRecord]) -> Table {
    let mut t = Table::new(
        "gates",
        &["gate", "kind", "qubits", "case", "seconds", "bytes_moved", "wire_bytes"],
    );
    for r in records {
        let qubits = r.qubits.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(" ");
        t.push(vec![
            json!(r.gate),
            json!(r.kind),
            json!(qubits),
            json!(r.case_id),
            json!(r.seconds),
            json!(r.bytes_moved),
            json!(r.wire_bytes),
        ]);
    }
    t
}
