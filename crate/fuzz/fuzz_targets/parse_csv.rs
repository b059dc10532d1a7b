#![no_main]

use libfuzzer_sys::fuzz_target;
use sensory_core::data::{emit_csv, parse_csv, CsvOptions};

// First byte picks the separator and whether a hedonic column is expected.
fuzz_target!(|data: &[u8]| {
    let Some((&ctl, body)) = data.split_first() else { return };
    let separator = [';', ',', '\t', '|'][(ctl & 3) as usize];
    let hedonic_column = (ctl & 4 != 0).then(|| "Score".to_string());
    let opts = CsvOptions { separator, hedonic_column };
    if let Ok(dataset) = parse_csv(body, &opts) {
        let emitted = emit_csv(&dataset, separator);
        let again = parse_csv(&emitted, &opts).expect("emitted csv parses");
        assert_eq!(again, dataset);
        assert_eq!(emit_csv(&again, separator), emitted);
    }
});
