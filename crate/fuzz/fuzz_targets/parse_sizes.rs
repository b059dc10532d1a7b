#![no_main]

use libfuzzer_sys::fuzz_target;
use sensory_cli::format::parse_sizes;

fuzz_target!(|data: &[u8]| {
    let Ok(spec) = std::str::from_utf8(data) else { return };
    if let Ok(sizes) = parse_sizes(spec) {
        assert!(!sizes.is_empty());
        assert!(sizes.windows(2).all(|w| w[0] < w[1]));
    }
});
