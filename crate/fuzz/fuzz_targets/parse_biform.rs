#![no_main]

use libfuzzer_sys::fuzz_target;
use monodromy_core::hyperlat::BiPoly;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(b) = s.parse::<BiPoly>() {
        let back: BiPoly = b.to_string().parse().expect("printed form reparses");
        assert_eq!(back, b);
    }
});
