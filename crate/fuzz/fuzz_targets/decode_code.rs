#![no_main]

use libfuzzer_sys::fuzz_target;
use sensory_core::protocol::decode_code;

// First byte is the hidden-digit position, the rest is the code.
fuzz_target!(|data: &[u8]| {
    let Some((&pos, code)) = data.split_first() else { return };
    let Ok(code) = std::str::from_utf8(code) else { return };
    let key: Vec<(String, u8)> = (0..6u8).map(|i| (format!("W{}", i + 1), (i + 1) % 10)).collect();
    if let Ok(product) = decode_code(code, pos as usize, &key) {
        let digit = code.as_bytes()[pos as usize - 1] - b'0';
        assert!(key.iter().any(|(p, d)| p == product && *d == digit));
    }
});
