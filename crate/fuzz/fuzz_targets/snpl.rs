#![no_main]

use libfuzzer_sys::fuzz_target;
use snoopy_core::LabelVector;

fuzz_target!(|data: &[u8]| {
    if let Ok(labels) = LabelVector::from_snpl_bytes(data) {
        assert!(labels.labels().iter().all(|&y| y < labels.classes()));
        assert_eq!(labels.to_snpl_bytes(), data);
    }
});
