//! Text circuit format.
//!
//! ```text
//! # Bell pair
//! qubits 2
//! H 0
//! CX 0 1
//! ```
//!
//! Gates: `H k`, `X k`, `Y k`, `Z k`, `RK j k`, `CX c t`, `CRK j c t`,
//! `U k <8 floats>`, `CU c t <8 floats>`. The floats are the matrix entries
//! row by row, real part then imaginary part.

use std::path::Path;

use svsim_core::{Amplitude, Circuit, GateMatrix, GateOp};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("missing `qubits n` header")]
    MissingHeader,
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Line {
        line,
        message: message.into(),
    }
}

struct Fields<'a> {
    line: usize,
    op: &'a str,
    rest: Vec<&'a str>,
}

impl Fields<'_> {
    fn expect(&self, n: usize) -> Result<(), ParseError> {
        if self.rest.len() == n {
            Ok(())
        } else {
            Err(err(
                self.line,
                format!("{} takes {} argument(s), got {}", self.op, n, self.rest.len()),
            ))
        }
    }

    fn int(&self, i: usize, what: &str) -> Result<usize, ParseError> {
        self.rest[i]
            .parse::<usize>()
            .map_err(|_| err(self.line, format!("{what} must be a non-negative integer, got `{}`", self.rest[i])))
    }

    fn matrix(&self, from: usize) -> Result<GateMatrix, ParseError> {
        let mut v = [0.0f64; 8];
        for (i, slot) in v.iter_mut().enumerate() {
            let tok = self.rest[from + i];
            *slot = tok
                .parse::<f64>()
                .map_err(|_| err(self.line, format!("bad number `{tok}`")))?;
        }
        let a = |i: usize| Amplitude::new(v[2 * i], v[2 * i + 1]);
        GateMatrix::new(a(0), a(1), a(2), a(3)).map_err(|e| err(self.line, e.to_string()))
    }
}

pub fn parse_circuit(text: &str) -> Result<Circuit, ParseError> {
    let mut circuit: Option<Circuit> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut toks = body.split_whitespace();
        let op = toks.next().unwrap_or_default();
        let f = Fields {
            line,
            op,
            rest: toks.collect(),
        };
        let Some(c) = circuit.as_mut() else {
            if !op.eq_ignore_ascii_case("qubits") {
                return Err(err(line, "first line must be `qubits n`"));
            }
            f.expect(1)?;
            let n = f.int(0, "qubit count")?;
            if n == 0 || n > svsim_core::layout::MAX_QUBITS {
                return Err(err(line, format!("qubit count {n} out of range")));
            }
            circuit = Some(Circuit::new(n));
            continue;
        };
        let gate = match op.to_ascii_uppercase().as_str() {
            "H" | "X" | "Y" | "Z" => {
                f.expect(1)?;
                let m = match op.to_ascii_uppercase().as_str() {
                    "H" => GateMatrix::h(),
                    "X" => GateMatrix::x(),
                    "Y" => GateMatrix::y(),
                    _ => GateMatrix::z(),
                };
                GateOp::single(f.int(0, "qubit")?, m)
            }
            "RK" => {
                f.expect(2)?;
                GateOp::single(f.int(1, "qubit")?, GateMatrix::rk(rk_exponent(&f, 0)?))
            }
            "CX" => {
                f.expect(2)?;
                GateOp::controlled(f.int(0, "control")?, f.int(1, "target")?, GateMatrix::x())
            }
            "CRK" => {
                f.expect(3)?;
                GateOp::controlled(
                    f.int(1, "control")?,
                    f.int(2, "target")?,
                    GateMatrix::rk(rk_exponent(&f, 0)?),
                )
            }
            "U" => {
                f.expect(9)?;
                GateOp::single(f.int(0, "qubit")?, f.matrix(1)?)
            }
            "CU" => {
                f.expect(10)?;
                GateOp::controlled(f.int(0, "control")?, f.int(1, "target")?, f.matrix(2)?)
            }
            "QUBITS" => return Err(err(line, "duplicate `qubits` line")),
            _ => return Err(err(line, format!("unknown gate `{op}`"))),
        };
        c.push(gate).map_err(|e| err(line, e.to_string()))?;
    }
    circuit.ok_or(ParseError::MissingHeader)
}

fn rk_exponent(f: &Fields<'_>, i: usize) -> Result<u32, ParseError> {
    let j = f.int(i, "rotation exponent")?;
    u32::try_from(j)
        .ok()
        .filter(|&j| j <= 1000)
        .ok_or_else(|| err(f.line, "rotation exponent too large"))
}

pub fn load_circuit(path: &Path) -> Result<Circuit, ParseError> {
    let text = std::fs::read_to_string(path).map_err(|e| ParseError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_circuit(&text)
}

/// Serialise with explicit matrices; parsing the result gives back the
/// identical circuit.
pub fn write_circuit(circuit: &Circuit) -> String {
    let mut out = format!("qubits {}\n", circuit.qubits());
    for g in circuit.gates() {
        let rows = g.matrix().to_rows();
        let nums: Vec<String> = rows
            .iter()
            .flat_map(|a| [a.re, a.im])
            .map(|x| format!("{x:?}"))
            .collect();
        match g.control() {
            None => out.push_str(&format!("U {} {}\n", g.target(), nums.join(" "))),
            Some(c) => out.push_str(&format!("CU {} {} {}\n", c, g.target(), nums.join(" "))),
        }
    }
    out
}
