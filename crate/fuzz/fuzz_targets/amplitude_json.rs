#![no_main]

use libfuzzer_sys::fuzz_target;
use lqmd::amplitude::ExactAmplitude;

fuzz_target!(|data: &[u8]| {
    if let Ok(a) = serde_json::from_slice::<ExactAmplitude>(data) {
        let text = serde_json::to_string(&a).unwrap();
        assert_eq!(serde_json::from_str::<ExactAmplitude>(&text).unwrap(), a);
    }
});
