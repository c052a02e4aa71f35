#![no_main]

use std::path::Path;

use fracbam_cli::config::{from_table, parse_table};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(table) = parse_table(text) {
        // no readable files under this base, so csv kernels fail cleanly
        let _ = from_table(table, Path::new("/nonexistent-fuzz-base"));
    }
});
