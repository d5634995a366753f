#![no_main]

use hvdc_fr::signal::SignalRecord;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // read_csv takes raw bytes, so non-UTF-8 input is exercised too
    if let Ok(rec) = SignalRecord::read_csv(data) {
        let out = rec.to_csv_string();
        let again = SignalRecord::from_csv_str(&out).expect("serialized record parses");
        assert_eq!(again.to_csv_string(), out);
    }
});
