//! Cached arm states are read back from disk after a restart; a corrupt
//! cache file must decode to an error.

#![no_main]

use libfuzzer_sys::fuzz_target;
use snoopy_core::knn::{decode_arm_state, encode_arm_state};

fuzz_target!(|data: &[u8]| {
    if let Ok(state) = decode_arm_state(data) {
        assert!(state.n_consumed() <= state.n_train());
        let bytes = encode_arm_state(&state);
        assert_eq!(decode_arm_state(&bytes).expect("re-decode"), state);
    }
});
