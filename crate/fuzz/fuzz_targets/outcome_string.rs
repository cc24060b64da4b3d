#![no_main]

use libfuzzer_sys::fuzz_target;
use lqmd::plans::{format_outcomes, parse_outcomes};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(outcomes) = parse_outcomes(s) {
            assert_eq!(format_outcomes(&outcomes), s);
        }
    }
});
