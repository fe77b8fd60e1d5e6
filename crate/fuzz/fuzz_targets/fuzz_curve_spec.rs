#![no_main]

use libfuzzer_sys::fuzz_target;

// Curve-spec parsing must reject garbage with an error, never a panic.
// Inputs are capped so discriminant factoring cannot stall the fuzzer.
fuzz_target!(|data: &[u8]| {
    if data.len() > 64 {
        return;
    }
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = stcensus::cli::parse_curve_spec(s);
    }
});
