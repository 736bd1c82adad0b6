#![no_main]

use libfuzzer_sys::fuzz_target;
use monodromy_core::permlab::Permutation;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(p) = s.parse::<Permutation>() {
        let back: Permutation = p.to_string().parse().expect("printed permutation reparses");
        assert_eq!(back, p);
        assert!(p.after(&p.inverse()).is_identity());
    }
});
