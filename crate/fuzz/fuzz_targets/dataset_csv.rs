#![no_main]

use libfuzzer_sys::fuzz_target;
use rankloss::data::read_dataset_csv;

fuzz_target!(|data: &[u8]| {
    if let Ok(ds) = read_dataset_csv(data, "label") {
        assert_eq!(ds.features().rows(), ds.labels().len());
        assert!(ds.features().all_finite());
        let mut out = Vec::new();
        ds.write_csv(&mut out).unwrap();
        let back = read_dataset_csv(out.as_slice(), "label").unwrap();
        assert_eq!(back.features().as_slice(), ds.features().as_slice());
    }
});
