#![no_main]

use biharm::io::SpectralDump;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(d) = SpectralDump::parse(text) {
        let _ = d.to_field();
    }
});
