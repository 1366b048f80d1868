//! Peer-list files: one `rank host:port` per line, `#` comments allowed.

use std::collections::HashSet;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PeerError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("rank {0} listed twice")]
    DuplicateRank(usize),
    #[error("address {0} listed twice")]
    DuplicateAddress(String),
    #[error("missing rank {0}")]
    MissingRank(usize),
    #[error("rank count {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("peer list is empty")]
    Empty,
    #[error("cannot read peer list: {0}")]
    Io(String),
}

/// Rank → address map for every rank of a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeerTable {
    addrs: Vec<String>,
}

impl PeerTable {
    pub fn parse(text: &str) -> Result<Self, PeerError> {
        let mut entries: Vec<(usize, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |message: &str| PeerError::Syntax {
                line: i + 1,
                message: message.to_string(),
            };
            let mut parts = line.split_whitespace();
            let rank = parts
                .next()
                .and_then(|r| r.parse::<usize>().ok())
                .ok_or_else(|| syntax("expected `rank host:port`"))?;
            let addr = parts.next().ok_or_else(|| syntax("missing address"))?;
            if parts.next().is_some() {
                return Err(syntax("trailing fields"));
            }
            if !addr.contains(':') {
                return Err(syntax("address must be host:port"));
            }
            entries.push((rank, addr.to_string()));
        }
        Self::from_entries(entries)
    }

    pub fn from_entries(mut entries: Vec<(usize, String)>) -> Result<Self, PeerError> {
        if entries.is_empty() {
            return Err(PeerError::Empty);
        }
        entries.sort_by_key(|e| e.0);
        let mut seen_addr = HashSet::new();
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(PeerError::DuplicateRank(w[0].0));
            }
        }
        for (i, (rank, addr)) in entries.iter().enumerate() {
            if *rank != i {
                return Err(PeerError::MissingRank(i));
            }
            if !seen_addr.insert(addr.clone()) {
                return Err(PeerError::DuplicateAddress(addr.clone()));
            }
        }
        if !entries.len().is_power_of_two() {
            return Err(PeerError::NotPowerOfTwo(entries.len()));
        }
        Ok(Self {
            addrs: entries.into_iter().map(|e| e.1).collect(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, PeerError> {
        let text = std::fs::read_to_string(path).map_err(|e| PeerError::Io(e.to_string()))?;
        Self::parse(&text)
    }

    pub fn len(&self) -> usize {
        self.addrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.addrs.is_empty()
    }

    pub fn addr(&self, rank: usize) -> &str {
        &self.addrs[rank]
    }

    pub fn to_text(&self) -> String {
        self.addrs
            .iter()
            .enumerate()
            .map(|(r, a)| format!("{r} {a}\n"))
            .collect()
    }
}
