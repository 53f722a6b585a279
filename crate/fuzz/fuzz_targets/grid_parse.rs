#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = compc::audit::parse_grid(text);
    let _ = compc_cli::parse_sweep_grid(text);
});
