#![no_main]

use embedhalluc::harness::{parse_report_json, render_report, ReportFormat};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(report) = parse_report_json(text) {
        for format in [ReportFormat::Json, ReportFormat::Csv, ReportFormat::Table] {
            let _ = render_report(&report, format);
        }
    }
});
