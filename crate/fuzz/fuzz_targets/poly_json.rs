#![no_main]

libfuzzer_sys::fuzz_target!(|data: &[u8]| dcpoly_fuzz::checks::poly_json(data));
