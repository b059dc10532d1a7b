#![no_main]

use libfuzzer_sys::fuzz_target;
use sensory_core::simulate::{load_model, simulate_apt, simulate_cata};
use sensory_core::numerics::SeedSpec;

// Input is the intensity CSV and the TOML parameters separated by a NUL byte.
fuzz_target!(|data: &[u8]| {
    let Some(split) = data.iter().position(|&b| b == 0) else { return };
    let (csv, rest) = data.split_at(split);
    let Ok(params) = std::str::from_utf8(&rest[1..]) else { return };
    if let Ok(model) = load_model(csv, params, ';') {
        model.validate().expect("loaded models are valid");
        let seed = SeedSpec::new(1, "fuzz");
        let _ = simulate_cata(&model, 2, &seed);
        let _ = simulate_apt(&model, 2, &seed);
    }
});
