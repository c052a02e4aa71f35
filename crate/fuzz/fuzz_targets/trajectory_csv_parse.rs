#![no_main]

use fracbam::trajectory::Trajectory;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(t) = Trajectory::from_csv(text) {
        let back = Trajectory::from_csv(&t.to_csv()).expect("written CSV parses");
        assert_eq!(back.names, t.names);
        assert_eq!(back.times, t.times);
        assert_eq!(back.states, t.states);
    }
});
