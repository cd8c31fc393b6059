#![no_main]

use biharm::io::{read_mu_csv, CsvTable};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let _ = CsvTable::parse(text);
    let _ = read_mu_csv(text);
});
