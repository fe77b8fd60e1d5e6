#![no_main]

use libfuzzer_sys::fuzz_target;
use stcensus::curves::decode_cache;

fuzz_target!(|data: &[u8]| {
    if let Ok(contents) = decode_cache(data) {
        // decoded records satisfy the invariants the decoder promises
        let mut last = 0u64;
        for rec in &contents.records {
            assert!(rec.p > last && rec.p <= contents.x);
            last = rec.p;
            assert_eq!(rec.good, rec.a_p.is_some());
        }
    }
});
