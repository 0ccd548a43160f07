#![no_main]

use embedhalluc::dataio::{parse_tsv, to_tsv, Schema, TaskKind};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    for kind in [TaskKind::Single, TaskKind::Pair] {
        let schema = Schema {
            name: "fuzz".into(),
            kind,
            labels: vec!["neg".into(), "pos".into(), "0".into(), "1".into()],
            metric: Default::default(),
        };
        if let Ok(ds) = parse_tsv(text, &schema) {
            // Whatever parses must re-serialize and parse back identically.
            let again = parse_tsv(&to_tsv(&ds).unwrap(), &schema).unwrap();
            assert_eq!(again.examples.len(), ds.examples.len());
        }
    }
});
