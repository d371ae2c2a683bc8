#![no_main]

use libfuzzer_sys::fuzz_target;
use rsbg_bench::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = ExperimentConfig::from_toml_str(text) {
        // A config that validates must resolve its planners.
        cfg.resolved_planners().expect("validated config resolves");
    }
});
