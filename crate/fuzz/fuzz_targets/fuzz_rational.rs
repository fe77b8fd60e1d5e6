#![no_main]

use std::str::FromStr;

use libfuzzer_sys::fuzz_target;
use stcensus::arith::Rational;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(r) = Rational::from_str(s) {
            // a parsed rational must survive its own arithmetic
            let _ = r.plus_one();
            let _ = r.recip();
            let _ = r.reduce_mod(101);
            assert_eq!(r, Rational::from_str(&r.to_string()).unwrap());
        }
    }
});
