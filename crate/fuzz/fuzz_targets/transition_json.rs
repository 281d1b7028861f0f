#![no_main]

use libfuzzer_sys::fuzz_target;
use snoopy_core::noise::TransitionMatrix;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(t) = TransitionMatrix::from_json_str(text) {
        let c = t.classes();
        for clean in 0..c {
            let sum: f64 = (0..c).map(|noisy| t.get(noisy, clean)).sum();
            assert!((sum - 1.0).abs() < 1e-6, "column {clean} sums to {sum}");
        }
        assert_eq!(
            TransitionMatrix::from_json_str(&t.to_json_string()).expect("re-parse"),
            t
        );
    }
});
