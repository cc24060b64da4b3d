#![no_main]

use libfuzzer_sys::fuzz_target;
use lqmd::amplitude::ratio;
use lqmd::engine::Basis;

fuzz_target!(|data: &[u8]| {
    if let Ok(b) = serde_json::from_slice::<Basis>(data) {
        let norm = b.c0().sq() + b.c1().sq();
        assert_eq!(norm, ratio(1, 1));
    }
});
