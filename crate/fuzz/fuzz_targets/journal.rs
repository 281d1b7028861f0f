#![no_main]

use libfuzzer_sys::fuzz_target;
use snoopy_service::store::parse_journal;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(events) = parse_journal(text) {
        assert!(events.windows(2).all(|w| w[0].seq() < w[1].seq()));
    }
});
