#![no_main]

use biharm::expr::Expr;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|src: &str| {
    if let Ok(e) = Expr::parse(src) {
        let _ = e.eval(0.25, 0.75);
    }
});
