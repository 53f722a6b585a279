#![no_main]
use compc::gf::Field;
use compc::net::{parse_transcript, RawRecord};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let field = Field::new(Field::DEFAULT_PRIME).expect("prime");
    for line in text.lines() {
        if let Ok(raw) = RawRecord::parse(line) {
            if let Ok(rec) = raw.to_record(field) {
                assert_eq!(RawRecord::from(&rec), raw);
            }
        }
    }
    let _ = parse_transcript(text);
});
