#![no_main]

use libfuzzer_sys::fuzz_target;
use monodromy_core::tracker::LoopPath;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(l) = LoopPath::from_json(s) {
        assert_eq!(l.vertices.first(), Some(&l.basepoint));
        assert_eq!(l.vertices.last(), Some(&l.basepoint));
        let back = LoopPath::from_json(&l.to_json()).expect("printed loop reparses");
        assert_eq!(back.vertices.len(), l.vertices.len());
    }
});
