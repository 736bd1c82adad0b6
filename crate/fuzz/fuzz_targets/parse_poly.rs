#![no_main]

use libfuzzer_sys::fuzz_target;
use monodromy_core::RatPoly;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(f) = s.parse::<RatPoly>() {
        let back: RatPoly = f.to_string().parse().expect("printed polynomial reparses");
        assert_eq!(back, f);
    }
});
