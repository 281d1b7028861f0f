#![no_main]

use libfuzzer_sys::fuzz_target;
use snoopy_core::EmbeddingMatrix;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(m) = EmbeddingMatrix::from_csv_str(text, "fuzz") {
        assert!(m.values().iter().all(|v| v.is_finite()));
        let again = EmbeddingMatrix::from_csv_str(&m.to_csv_string(), "fuzz").expect("re-parse");
        assert_eq!(again.values(), m.values());
    }
});
