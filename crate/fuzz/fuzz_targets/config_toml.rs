#![no_main]

use libfuzzer_sys::fuzz_target;
use mfid::harness::ScenarioConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = ScenarioConfig::from_toml_str(text) else { return };
    // accepted configs are valid and serialize back to an accepted config
    let again = cfg.to_toml_string().expect("serialize");
    let back = ScenarioConfig::from_toml_str(&again).expect("re-parse");
    assert_eq!(back.name, cfg.name);
    assert_eq!(back.estimators.len(), cfg.estimators.len());
});
