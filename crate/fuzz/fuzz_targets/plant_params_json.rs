#![no_main]

use hvdc_fr::plant::PlantParams;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = PlantParams::from_json(text) {
        let out = p.to_json();
        let again = PlantParams::from_json(&out).expect("serialized params parse");
        assert_eq!(again.to_json(), out);
    }
});
