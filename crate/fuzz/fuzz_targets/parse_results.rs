#![no_main]

use libfuzzer_sys::fuzz_target;
use rsbg_bench::ResultsFile;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(r) = ResultsFile::from_json(text) {
        let again = ResultsFile::from_json(&r.to_json()).expect("round trip");
        assert_eq!(again.records.len(), r.records.len());
    }
});
