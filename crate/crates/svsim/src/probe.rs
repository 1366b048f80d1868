//! Host probes: cache size, free memory, and a copy-bandwidth microbenchmark.

use std::fs;
use std::time::Instant;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ProbeError {
    #[error("copy buffer of {buffer} bytes is below 4x the last-level cache ({llc} bytes)")]
    BufferTooSmall { buffer: usize, llc: usize },
    #[error("repetitions must be at least 1")]
    NoRepetitions,
}

/// Used when the cache size cannot be read from sysfs.
pub const FALLBACK_LLC_BYTES: usize = 32 << 20;

fn parse_size(s: &str) -> Option<usize> {
    let s = s.trim();
    let (digits, mult) = match s.chars().last()? {
        'K' | 'k' => (&s[..s.len() - 1], 1 << 10),
        'M' | 'm' => (&s[..s.len() - 1], 1 << 20),
        'G' | 'g' => (&s[..s.len() - 1], 1 << 30),
        _ => (s, 1),
    };
    digits.trim().parse::<usize>().ok().map(|v| v * mult)
}

/// Size of the highest-level data or unified cache of cpu0.
pub fn detect_llc_bytes() -> Option<usize> {
    let dir = fs::read_dir("/sys/devices/system/cpu/cpu0/cache").ok()?;
    let mut best: Option<(u32, usize)> = None;
    for entry in dir.flatten() {
        let p = entry.path();
        if !p.file_name()?.to_string_lossy().starts_with("index") {
            continue;
        }
        let read = |f: &str| fs::read_to_string(p.join(f)).ok();
        if read("type").is_some_and(|t| t.trim() == "Instruction") {
            continue;
        }
        let (Some(level), Some(size)) = (
            read("level").and_then(|l| l.trim().parse::<u32>().ok()),
            read("size").and_then(|s| parse_size(&s)),
        ) else {
            continue;
        };
        if best.is_none_or(|(l, _)| level > l) {
            best = Some((level, size));
        }
    }
    best.map(|b| b.1)
}

pub fn llc_bytes_or_default() -> usize {
    detect_llc_bytes().unwrap_or(FALLBACK_LLC_BYTES)
}

/// `MemAvailable` from /proc/meminfo, in bytes.
pub fn available_memory_bytes() -> Option<u64> {
    let text = fs::read_to_string("/proc/meminfo").ok()?;
    text.lines()
        .find_map(|l| l.strip_prefix("MemAvailable:"))
        .and_then(|v| v.trim().trim_end_matches("kB").trim().parse::<u64>().ok())
        .map(|kb| kb * 1024)
}

/// Copy bandwidth in bytes/s, counting both the read and the write stream.
/// Returns the median over `reps` timed copies.
pub fn measure_copy_bandwidth(buffer_bytes: usize, reps: usize, llc_bytes: usize) -> Result<f64, ProbeError> {
    if buffer_bytes < 4 * llc_bytes {
        return Err(ProbeError::BufferTooSmall {
            buffer: buffer_bytes,
            llc: llc_bytes,
        });
    }
    if reps == 0 {
        return Err(ProbeError::NoRepetitions);
    }
    let words = buffer_bytes / 8;
    let src: Vec<u64> = (0..words as u64).collect();
    let mut dst = vec![0u64; words];
    dst.copy_from_slice(&src); // fault pages in
    let mut rates: Vec<f64> = (0..reps)
        .map(|_| {
            let t = Instant::now();
            dst.copy_from_slice(std::hint::black_box(&src));
            std::hint::black_box(&mut dst);
            let secs = t.elapsed().as_secs_f64().max(1e-9);
            2.0 * (words * 8) as f64 / secs
        })
        .collect();
    rates.sort_by(f64::total_cmp);
    Ok(rates[reps / 2])
}
