#![no_main]

use libfuzzer_sys::fuzz_target;
use snoopy_core::StudyManifest;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = StudyManifest::from_json_str(text) {
        assert!(m.target_accuracy > 0.0 && m.target_accuracy <= 1.0);
        let json = serde_json::to_string(&m).expect("serialize");
        assert_eq!(StudyManifest::from_json_str(&json).expect("re-parse"), m);
    }
});
