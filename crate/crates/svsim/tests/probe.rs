use svsim::probe::{llc_bytes_or_default, measure_copy_bandwidth};

#[test]
fn copy_probe_is_repeatable() {
    let llc = llc_bytes_or_default();
    let buffer = 4 * llc;
    let a = measure_copy_bandwidth(buffer, 5, llc).unwrap();
    let b = measure_copy_bandwidth(buffer, 5, llc).unwrap();
    eprintln!("copy bandwidth: {:.2} GB/s, {:.2} GB/s (buffer {} MiB)", a / 1e9, b / 1e9, buffer >> 20);
    assert!(a.is_finite() && a > 0.0);
    let rel = (a - b).abs() / a.max(b);
    assert!(rel <= 0.15, "medians differ by {:.1}%", rel * 100.0);
}
