#![no_main]
use compc::scenario::Scenario;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(s) = Scenario::parse(text) {
        // anything accepted must survive a print/parse cycle
        let again = Scenario::parse(&s.to_text()).expect("printed scenario parses");
        assert_eq!(again, s);
    }
});
