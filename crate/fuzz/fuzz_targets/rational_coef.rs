#![no_main]

libfuzzer_sys::fuzz_target!(|data: &[u8]| dcpoly_fuzz::checks::rational_coef(data));
