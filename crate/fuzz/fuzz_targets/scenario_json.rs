#![no_main]

use hvdc_fr::harness::Scenario;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(s) = Scenario::from_json(text) {
        let out = s.to_json();
        let again = Scenario::from_json(&out).expect("serialized scenario parses");
        assert_eq!(again.to_json(), out);
    }
});
