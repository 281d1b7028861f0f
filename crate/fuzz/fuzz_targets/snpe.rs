//! SNPE decoding must reject bad input with an error, and anything it
//! accepts must re-encode to the same bytes.

#![no_main]

use libfuzzer_sys::fuzz_target;
use snoopy_core::EmbeddingMatrix;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = EmbeddingMatrix::from_snpe_bytes(data, "fuzz") {
        assert_eq!(m.values().len(), m.n_rows() * m.dim());
        let again = EmbeddingMatrix::from_snpe_bytes(&m.to_snpe_bytes(), "fuzz").expect("re-decode");
        assert_eq!(again.to_snpe_bytes(), m.to_snpe_bytes());
    }
});
