#![no_main]

use embedhalluc::augment::SynonymTable;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(table) = SynonymTable::parse(text) {
        assert_eq!(SynonymTable::parse(&table.to_text()).unwrap(), table);
    }
});
