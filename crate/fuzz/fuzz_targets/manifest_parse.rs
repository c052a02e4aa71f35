#![no_main]

use fracbam_cli::manifest::RunManifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = RunManifest::parse(text) {
        let again = RunManifest::parse(&m.render()).expect("rendered manifests parse");
        assert_eq!(again.outputs, m.outputs);
    }
});
