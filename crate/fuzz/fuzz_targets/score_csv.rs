#![no_main]

use libfuzzer_sys::fuzz_target;
use rankloss::data::read_score_csv;

fuzz_target!(|data: &[u8]| {
    if let Ok(table) = read_score_csv(data, "label") {
        for multiclass in [false, true] {
            if let Ok(report) = table.auroc(multiclass) {
                assert!((0.0..=1.0).contains(&report.auroc));
            }
        }
    }
});
