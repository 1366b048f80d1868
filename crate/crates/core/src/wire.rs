//! Message framing shared by every transport.
//!
//! A frame is `[u32 tag][u32 phase][u64 byte-length][payload]`, all
//! little-endian. Amplitude payloads are raw interleaved `f64` pairs.

use alloc::vec::Vec;

use crate::error::TransportError;
use crate::Amplitude;

pub const HEADER_LEN: usize = 16;

/// Message tag: `tag` is the gate epoch, `phase` the step within it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tag {
    pub tag: u32,
    pub phase: u32,
}

impl Tag {
    pub const fn new(tag: u32, phase: u32) -> Self {
        Self { tag, phase }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub tag: Tag,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn header(tag: Tag, len: usize) -> [u8; HEADER_LEN] {
        let mut h = [0u8; HEADER_LEN];
        h[0..4].copy_from_slice(&tag.tag.to_le_bytes());
        h[4..8].copy_from_slice(&tag.phase.to_le_bytes());
        h[8..16].copy_from_slice(&(len as u64).to_le_bytes());
        h
    }

    /// `(tag, payload length)` from a header.
    pub fn parse_header(h: &[u8; HEADER_LEN]) -> (Tag, u64) {
        let word = |r: core::ops::Range<usize>| u32::from_le_bytes(h[r].try_into().unwrap());
        let len = u64::from_le_bytes(h[8..16].try_into().unwrap());
        (Tag::new(word(0..4), word(4..8)), len)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(&Self::header(self.tag, self.payload.len()));
        out.extend_from_slice(&self.payload);
        out
    }

    /// Decode exactly one frame occupying all of `bytes`.
    pub fn decode(bytes: &[u8]) -> Result<Self, TransportError> {
        let h: &[u8; HEADER_LEN] = bytes
            .get(..HEADER_LEN)
            .and_then(|h| h.try_into().ok())
            .ok_or(TransportError::Frame("short header"))?;
        let (tag, len) = Self::parse_header(h);
        let body = &bytes[HEADER_LEN..];
        if body.len() as u64 != len {
            return Err(TransportError::Length {
                got: body.len(),
                expected: len as usize,
            });
        }
        Ok(Self {
            tag,
            payload: body.to_vec(),
        })
    }
}

pub fn encode_amps(amps: &[Amplitude]) -> Vec<u8> {
    let mut out = Vec::with_capacity(amps.len() * 16);
    for a in amps {
        out.extend_from_slice(&a.re.to_le_bytes());
        out.extend_from_slice(&a.im.to_le_bytes());
    }
    out
}

pub fn decode_amps_into(bytes: &[u8], out: &mut [Amplitude]) -> Result<(), TransportError> {
    if bytes.len() != out.len() * 16 {
        return Err(TransportError::Length {
            got: bytes.len(),
            expected: out.len() * 16,
        });
    }
    for (a, b) in out.iter_mut().zip(bytes.chunks_exact(16)) {
        a.re = f64::from_le_bytes(b[..8].try_into().unwrap());
        a.im = f64::from_le_bytes(b[8..].try_into().unwrap());
    }
    Ok(())
}

pub fn decode_amps(bytes: &[u8]) -> Result<Vec<Amplitude>, TransportError> {
    if !bytes.len().is_multiple_of(16) {
        return Err(TransportError::Frame("amplitude payload not a multiple of 16 bytes"));
    }
    let mut out = alloc::vec![Amplitude::new(0.0, 0.0); bytes.len() / 16];
    decode_amps_into(bytes, &mut out)?;
    Ok(out)
}
