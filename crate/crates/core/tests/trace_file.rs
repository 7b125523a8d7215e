use std::fs::File;
use std::io::BufWriter;

use nrpos::tracefmt::{extract, find_def, parse_message_defs, read_trace, FieldValue, TraceRecorder, DEFAULT_MESSAGES};

#[test]
fn recorder_to_file_then_extract() {
    let defs = parse_message_defs(DEFAULT_MESSAGES).unwrap();
    let chest = find_def(&defs, "GNB_PHY_UL_FREQ_CHANNEL_ESTIMATE").unwrap().numeric_id;
    let noise = find_def(&defs, "GNB_PHY_UL_NOISE").unwrap().numeric_id;

    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("run.nrpt");
    let out = BufWriter::new(File::create(&path).unwrap());
    let (producer, recorder) = TraceRecorder::spawn(out, defs.clone(), 1024);
    let mut expected = Vec::new();
    for slot in 0..200i64 {
        let buf: Vec<u8> = (0..16).map(|i| (slot as u8).wrapping_mul(7).wrapping_add(i)).collect();
        expected.extend_from_slice(&buf);
        let frame = FieldValue::Int(slot / 20);
        let s = FieldValue::Int(slot % 20);
        // emit never blocks; with 1024 queue slots nothing is dropped here.
        assert!(producer.emit(chest, vec![frame.clone(), s.clone(), FieldValue::Buffer(buf)]));
        assert!(producer.emit(noise, vec![frame, s, FieldValue::Buffer(vec![0; 4])]));
    }
    let (w, stats) = recorder.finish(producer).unwrap();
    drop(w);
    assert_eq!((stats.written, stats.rejected, stats.dropped), (400, 0, 0));

    let bytes = std::fs::read(&path).unwrap();
    let all = read_trace(&bytes, &defs).unwrap();
    assert_eq!(all.events.len(), 400);
    assert!(all.events.windows(2).all(|w| w[0].timestamp_ns <= w[1].timestamp_ns));

    let got = extract(&bytes, "GNB_PHY_UL_FREQ_CHANNEL_ESTIMATE", "chest_f", &defs).unwrap();
    assert_eq!(got.events, 200);
    assert_eq!(got.truncated_at, None);
    assert_eq!(got.bytes, expected);

    // A cut in the last record keeps everything before it.
    let cut = extract(&bytes[..bytes.len() - 3], "GNB_PHY_UL_NOISE", "noise", &defs).unwrap();
    assert_eq!(cut.events, 199);
    assert!(cut.truncated_at.is_some());
}
