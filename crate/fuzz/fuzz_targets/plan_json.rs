#![no_main]

use libfuzzer_sys::fuzz_target;
use lqmd::amplitude::ratio;
use lqmd::oracle::bob_marginal;
use lqmd::plans::parse_plan_json;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(plan) = parse_plan_json(s) {
            if lqmd::plans::MeasurementPlan::params(&plan).qubits() <= 6 {
                assert_eq!(bob_marginal(&plan), (ratio(1, 2), ratio(1, 2)));
            }
        }
    }
});
