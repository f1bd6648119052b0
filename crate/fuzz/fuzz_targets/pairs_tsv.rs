#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| scalar_probe_fuzz::pairs_tsv(data));
