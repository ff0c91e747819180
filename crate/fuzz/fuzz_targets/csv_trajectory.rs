#![no_main]

use libfuzzer_sys::fuzz_target;
use mfid::harness::csvio::{parse_csv, trajectory_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(tr) = parse_csv(text) else { return };
    assert_eq!(tr.t.len(), tr.u.len());
    assert_eq!(tr.t.len(), tr.y.len());
    assert!(tr.ts > 0.0 && tr.ts.is_finite());
    // whatever parses must survive a write/parse round trip unchanged
    let back = parse_csv(&trajectory_csv(&tr)).expect("re-parse");
    assert_eq!(back.t, tr.t);
    assert_eq!(back.u, tr.u);
    assert_eq!(back.y, tr.y);
    assert_eq!(back.x, tr.x);
});
