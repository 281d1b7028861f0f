#![no_main]

use libfuzzer_sys::fuzz_target;
use snoopy_service::CreateSessionRequest;

fuzz_target!(|data: &[u8]| {
    let _ = serde_json::from_slice::<CreateSessionRequest>(data);
});
