#![no_main]

use libfuzzer_sys::fuzz_target;
use snoopy_core::datamodel::{curves_to_csv_string, parse_curves_csv};
use snoopy_core::estimator::fit_loglinear;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(series) = parse_curves_csv(text) {
        assert_eq!(
            parse_curves_csv(&curves_to_csv_string(&series)).expect("re-parse"),
            series
        );
        for s in &series {
            // Degenerate curves are errors, never panics.
            let _ = fit_loglinear(&s.points);
        }
    }
});
