#![no_main]

use libfuzzer_sys::fuzz_target;
use snoopy_core::LabelVector;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(labels) = LabelVector::from_csv_str(text) {
        let again = LabelVector::from_csv_str(&labels.to_csv_string()).expect("re-parse");
        assert_eq!(again.labels(), labels.labels());
    }
});
