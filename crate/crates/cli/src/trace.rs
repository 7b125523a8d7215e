//! `nrpos trace record|extract`.
//!
//! `record` replays dataset records as trace events: one event per snapshot
//! block for each known message ID present in the definitions.

use std::path::{Path, PathBuf};

use nrpos::dataset::{read_record, scan_root, DatasetRecord, SRS_CHF};
use nrpos::tracefmt::{
    extract, parse_message_defs, FieldKind, FieldValue, TraceEvent, TraceMessageDef, TraceWriter, DEFAULT_MESSAGES,
};
use nrpos::IqBufferQ15;

use crate::error::{CliError, Result};

/// Nominal slot spacing used as the replay timestamp step (30 kHz SCS).
const SLOT_NS: u64 = 500_000;

pub fn load_defs(path: Option<&Path>) -> Result<Vec<TraceMessageDef>> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?,
        None => DEFAULT_MESSAGES.to_string(),
    };
    Ok(parse_message_defs(&text)?)
}

fn source_of<'a>(id: &str, rec: &'a DatasetRecord) -> Option<&'a IqBufferQ15> {
    match id {
        "GNB_PHY_UL_FREQ_CHANNEL_ESTIMATE" => Some(&rec.srs_chf),
        "GNB_PHY_UL_FREQ_CHANNEL_ESTIMATE_INTERP" => Some(&rec.srs_chf_lin_interp),
        "GNB_PHY_UL_TIME_CHANNEL_ESTIMATE" => Some(&rec.srs_cht),
        "GNB_PHY_UL_NOISE" => Some(&rec.noise),
        _ => None,
    }
}

fn record_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    if root.join(SRS_CHF).is_file() {
        return Ok(vec![root.to_path_buf()]);
    }
    Ok(scan_root(root)?.records.into_iter().map(|e| e.path).collect())
}

/// Returns a one-line summary.
pub fn record(root: &Path, defs_path: Option<&Path>, output: &Path) -> Result<String> {
    let defs = load_defs(defs_path)?;
    let file = std::io::BufWriter::new(std::fs::File::create(output)?);
    let mut w = TraceWriter::new(file, defs.clone())?;
    let mut tick = 0u64;
    for (slot, dir) in record_dirs(root)?.iter().enumerate() {
        let (rec, _) = read_record(dir)?;
        let m = rec.validate()?;
        for frame in 0..m {
            for def in &defs {
                let Some(src) = source_of(&def.id, &rec) else { continue };
                let block = src.len() / m;
                let bytes = IqBufferQ15::new(src.samples()[frame * block..(frame + 1) * block].to_vec()).to_le_bytes();
                let mut buffer = Some(bytes);
                let payload = def
                    .fields
                    .iter()
                    .map(|f| match (f.kind, f.name.as_str()) {
                        (FieldKind::Int, "frame") => FieldValue::Int(frame as i64),
                        (FieldKind::Int, "slot") => FieldValue::Int(slot as i64),
                        (FieldKind::Int, _) => FieldValue::Int(0),
                        (FieldKind::Buffer, _) => FieldValue::Buffer(buffer.take().unwrap_or_default()),
                    })
                    .collect();
                w.write_event(&TraceEvent {
                    numeric_id: def.numeric_id,
                    timestamp_ns: tick * SLOT_NS,
                    payload,
                })?;
            }
            tick += 1;
        }
    }
    let (_, stats) = w.finish()?;
    Ok(format!(
        "recorded {} events to {} ({} rejected)\n",
        stats.written,
        output.display(),
        stats.rejected
    ))
}

/// Writes the extracted bytes and returns the summary plus an optional
/// truncation warning.
pub fn extract_cmd(
    trace: &Path,
    defs_path: Option<&Path>,
    id: &str,
    field: &str,
    output: &Path,
) -> Result<(String, Option<String>)> {
    let defs = load_defs(defs_path)?;
    let bytes = std::fs::read(trace).map_err(|e| CliError::Data(format!("{}: {e}", trace.display())))?;
    let ex = extract(&bytes, id, field, &defs)?;
    std::fs::write(output, &ex.bytes)?;
    let warning = ex
        .truncated_at
        .map(|off| format!("trace truncated at byte {off}; extracted the complete records before it"));
    Ok((
        format!("extracted {} bytes from {} events to {}\n", ex.bytes.len(), ex.events, output.display()),
        warning,
    ))
}
