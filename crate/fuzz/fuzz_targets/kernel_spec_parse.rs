#![no_main]

use fracbam_cli::kernel_spec::parse_kernel;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(k) = parse_kernel(text, None) {
        let m = k.total_mass();
        assert!(m >= 0.0);
        let _ = k.eval(0.5);
    }
});
