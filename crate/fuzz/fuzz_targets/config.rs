#![no_main]

use biharm::config::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(c) = RunConfig::parse(text) {
        // normalized configs must parse back to themselves
        assert_eq!(RunConfig::parse(&c.to_json()).ok().as_ref(), Some(&c));
        let _ = c.geometry();
    }
});
