#![no_main]

use gendertx::experiments::{ExperimentReport, ReportFormat};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(report) = ExperimentReport::parse_csv(text) {
        let _ = report.emit(ReportFormat::Markdown);
        let again = ExperimentReport::parse_csv(&report.to_csv()).unwrap();
        assert_eq!(again, report.rounded());
    }
});
