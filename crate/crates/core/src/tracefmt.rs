//! Message definitions, binary trace recording and field extraction.
//!
//! Definition files are line oriented:
//!
//! ```text
//! # comment
//! ID = GNB_PHY_UL_FREQ_CHANNEL_ESTIMATE
//!     DESC = uplink channel estimate in frequency
//!     GROUP = ALL:PHY:GNB
//!     FORMAT = int,frame : int,slot : buffer,chest_f
//! ```
//!
//! `ID` lines start in column 0, the entries under them are indented.
//! `FORMAT` is required, `GROUP` and `DESC` are optional. Numeric ids follow
//! file order.
//!
//! A trace file is the magic `NRPT`, a `u16` version, then one record per
//! event: `u32` numeric id, `u64` timestamp in ns, and the fields in
//! definition order (int as `i64`, buffer as `u32` length plus bytes), all
//! little endian. The framing is not compatible with OAI traces.

use std::fmt;
use std::io::{self, Write};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{sync_channel, Receiver, SyncSender, TrySendError};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Instant;

use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"NRPT";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 6;

/// Definitions shipped with the toolkit, including the frequency-domain SRS
/// channel estimate message.
pub const DEFAULT_MESSAGES: &str = include_str!("../data/trace_messages.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Int,
    Buffer,
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FieldKind::Int => "int",
            FieldKind::Buffer => "buffer",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDef {
    pub name: String,
    pub kind: FieldKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceMessageDef {
    pub id: String,
    pub group: String,
    pub desc: Option<String>,
    pub fields: Vec<FieldDef>,
    pub numeric_id: u32,
    /// Line of the `ID` entry.
    pub line: usize,
}

impl TraceMessageDef {
    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("duplicate ID {id} (first defined on line {first_line})")]
    DuplicateId { id: String, first_line: usize },
    #[error("duplicate field {0}")]
    DuplicateField(String),
    #[error("unknown field kind {0:?}")]
    UnknownKind(String),
    #[error("{0} given twice for this message")]
    RepeatedEntry(String),
    #[error("{0} entry outside any ID block")]
    Orphan(String),
    #[error("message {0} has no FORMAT")]
    MissingFormat(String),
    #[error("malformed line: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_format(value: &str, line: usize) -> Result<Vec<FieldDef>, ParseError> {
    let err = |kind| ParseError { line, kind };
    let mut fields: Vec<FieldDef> = Vec::new();
    for entry in value.split(':') {
        let (kind, name) = entry
            .split_once(',')
            .ok_or_else(|| err(ParseErrorKind::Malformed(format!("field entry {:?} is not kind,name", entry.trim()))))?;
        let kind = match kind.trim() {
            "int" => FieldKind::Int,
            "buffer" => FieldKind::Buffer,
            other => return Err(err(ParseErrorKind::UnknownKind(other.to_string()))),
        };
        let name = name.trim();
        if !is_identifier(name) {
            return Err(err(ParseErrorKind::Malformed(format!("bad field name {name:?}"))));
        }
        if fields.iter().any(|f| f.name == name) {
            return Err(err(ParseErrorKind::DuplicateField(name.to_string())));
        }
        fields.push(FieldDef {
            name: name.to_string(),
            kind,
        });
    }
    Ok(fields)
}

struct Pending {
    def: TraceMessageDef,
    has_format: bool,
}

fn close(pending: Option<Pending>, out: &mut Vec<TraceMessageDef>) -> Result<(), ParseError> {
    if let Some(p) = pending {
        if !p.has_format {
            return Err(ParseError {
                line: p.def.line,
                kind: ParseErrorKind::MissingFormat(p.def.id),
            });
        }
        out.push(p.def);
    }
    Ok(())
}

/// Parses a definition file. Every failure names the offending line.
pub fn parse_message_defs(text: &str) -> Result<Vec<TraceMessageDef>, ParseError> {
    let mut defs = Vec::new();
    let mut pending: Option<Pending> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |kind| ParseError { line, kind };
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| err(ParseErrorKind::Malformed(trimmed.to_string())))?;
        let (key, value) = (key.trim(), value.trim());
        let indented = raw.starts_with([' ', '\t']);
        match (key, indented) {
            ("ID", false) => {
                close(pending.take(), &mut defs)?;
                if !is_identifier(value) {
                    return Err(err(ParseErrorKind::Malformed(format!("bad ID {value:?}"))));
                }
                if let Some(first) = defs.iter().find(|d| d.id == value) {
                    return Err(err(ParseErrorKind::DuplicateId {
                        id: value.to_string(),
                        first_line: first.line,
                    }));
                }
                pending = Some(Pending {
                    def: TraceMessageDef {
                        id: value.to_string(),
                        group: String::new(),
                        desc: None,
                        fields: Vec::new(),
                        numeric_id: defs.len() as u32,
                        line,
                    },
                    has_format: false,
                });
            }
            ("GROUP" | "FORMAT" | "DESC", true) => {
                let p = pending
                    .as_mut()
                    .ok_or_else(|| err(ParseErrorKind::Orphan(key.to_string())))?;
                match key {
                    "GROUP" if p.def.group.is_empty() => p.def.group = value.to_string(),
                    "DESC" if p.def.desc.is_none() => p.def.desc = Some(value.to_string()),
                    "FORMAT" if !p.has_format => {
                        p.def.fields = parse_format(value, line)?;
                        p.has_format = true;
                    }
                    _ => return Err(err(ParseErrorKind::RepeatedEntry(key.to_string()))),
                }
            }
            _ => return Err(err(ParseErrorKind::Malformed(trimmed.to_string()))),
        }
    }
    close(pending, &mut defs)?;
    Ok(defs)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FieldValue {
    Int(i64),
    Buffer(Vec<u8>),
}

impl FieldValue {
    pub fn kind(&self) -> FieldKind {
        match self {
            FieldValue::Int(_) => FieldKind::Int,
            FieldValue::Buffer(_) => FieldKind::Buffer,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub numeric_id: u32,
    pub timestamp_ns: u64,
    pub payload: Vec<FieldValue>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("unknown message ID {0}")]
    UnknownId(String),
    #[error("message {id} has no field {field}")]
    UnknownField { id: String, field: String },
    #[error("event with numeric id {0} has no definition")]
    UnknownNumericId(u32),
    #[error("event for {id} does not match its definition: {reason}")]
    Nonconforming { id: String, reason: String },
    #[error("not a trace file (bad magic)")]
    BadMagic,
    #[error("unsupported trace version {0}")]
    UnsupportedVersion(u16),
    #[error("trace header truncated ({0} bytes)")]
    TruncatedHeader(usize),
    #[error("record at byte {offset} references undefined numeric id {id}")]
    CorruptRecord { offset: usize, id: u32 },
    #[error("recorder thread panicked")]
    RecorderPanicked,
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn def_for(defs: &[TraceMessageDef], numeric_id: u32) -> Option<&TraceMessageDef> {
    defs.get(numeric_id as usize).filter(|d| d.numeric_id == numeric_id)
}

pub fn find_def<'a>(defs: &'a [TraceMessageDef], id: &str) -> Result<&'a TraceMessageDef, TraceError> {
    defs.iter()
        .find(|d| d.id == id)
        .ok_or_else(|| TraceError::UnknownId(id.to_string()))
}

/// Checks `ev` against its definition.
pub fn check_event(ev: &TraceEvent, defs: &[TraceMessageDef]) -> Result<(), TraceError> {
    let def = def_for(defs, ev.numeric_id).ok_or(TraceError::UnknownNumericId(ev.numeric_id))?;
    let bad = |reason: String| TraceError::Nonconforming {
        id: def.id.clone(),
        reason,
    };
    if ev.payload.len() != def.fields.len() {
        return Err(bad(format!("{} values for {} fields", ev.payload.len(), def.fields.len())));
    }
    for (v, f) in ev.payload.iter().zip(&def.fields) {
        if v.kind() != f.kind {
            return Err(bad(format!("field {} is {}, got {}", f.name, f.kind, v.kind())));
        }
        if let FieldValue::Buffer(b) = v {
            if u32::try_from(b.len()).is_err() {
                return Err(bad(format!("field {} longer than 4 GiB", f.name)));
            }
        }
    }
    Ok(())
}

/// Serializes one record. The event must conform.
pub fn encode_event(ev: &TraceEvent, out: &mut Vec<u8>) {
    out.extend_from_slice(&ev.numeric_id.to_le_bytes());
    out.extend_from_slice(&ev.timestamp_ns.to_le_bytes());
    for v in &ev.payload {
        match v {
            FieldValue::Int(x) => out.extend_from_slice(&x.to_le_bytes()),
            FieldValue::Buffer(b) => {
                out.extend_from_slice(&(b.len() as u32).to_le_bytes());
                out.extend_from_slice(b);
            }
        }
    }
}

pub fn header_bytes() -> [u8; HEADER_LEN] {
    let mut h = [0u8; HEADER_LEN];
    h[..4].copy_from_slice(MAGIC);
    h[4..].copy_from_slice(&VERSION.to_le_bytes());
    h
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RecordStats {
    pub written: u64,
    /// Events that did not match their definition.
    pub rejected: u64,
    /// Events lost to a full queue.
    pub dropped: u64,
}

/// Streaming trace writer. Nonconforming events are counted and skipped.
pub struct TraceWriter<W: Write> {
    out: W,
    defs: Vec<TraceMessageDef>,
    buf: Vec<u8>,
    stats: RecordStats,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(mut out: W, defs: Vec<TraceMessageDef>) -> io::Result<Self> {
        out.write_all(&header_bytes())?;
        Ok(Self {
            out,
            defs,
            buf: Vec::new(),
            stats: RecordStats::default(),
        })
    }

    /// Returns `Ok(false)` when the event was rejected.
    pub fn write_event(&mut self, ev: &TraceEvent) -> io::Result<bool> {
        if check_event(ev, &self.defs).is_err() {
            self.stats.rejected += 1;
            return Ok(false);
        }
        self.buf.clear();
        encode_event(ev, &mut self.buf);
        self.out.write_all(&self.buf)?;
        self.stats.written += 1;
        Ok(true)
    }

    pub fn stats(&self) -> RecordStats {
        self.stats
    }

    pub fn finish(mut self) -> io::Result<(W, RecordStats)> {
        self.out.flush()?;
        Ok((self.out, self.stats))
    }
}

/// Writes a complete trace of `events` to `out`.
pub fn record<W: Write>(
    events: impl IntoIterator<Item = TraceEvent>,
    defs: &[TraceMessageDef],
    out: W,
) -> io::Result<(W, RecordStats)> {
    let mut w = TraceWriter::new(out, defs.to_vec())?;
    for ev in events {
        w.write_event(&ev)?;
    }
    w.finish()
}

/// Events decoded from a trace. `truncated_at` is the byte offset of an
/// incomplete trailing record, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceContents {
    pub events: Vec<TraceEvent>,
    pub truncated_at: Option<usize>,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let s = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(s)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }
}

fn check_header(bytes: &[u8]) -> Result<(), TraceError> {
    if bytes.len() < HEADER_LEN {
        return Err(TraceError::TruncatedHeader(bytes.len()));
    }
    if &bytes[..4] != MAGIC {
        return Err(TraceError::BadMagic);
    }
    let v = u16::from_le_bytes([bytes[4], bytes[5]]);
    if v != VERSION {
        return Err(TraceError::UnsupportedVersion(v));
    }
    Ok(())
}

enum Step {
    Event(TraceEvent),
    Truncated,
}

fn read_one(cur: &mut Cursor<'_>, defs: &[TraceMessageDef]) -> Result<Step, TraceError> {
    let start = cur.pos;
    let Some(id) = cur.u32() else { return Ok(Step::Truncated) };
    let def = def_for(defs, id).ok_or(TraceError::CorruptRecord { offset: start, id })?;
    let Some(timestamp_ns) = cur.u64() else { return Ok(Step::Truncated) };
    let mut payload = Vec::with_capacity(def.fields.len());
    for f in &def.fields {
        let v = match f.kind {
            FieldKind::Int => cur.u64().map(|x| FieldValue::Int(x as i64)),
            FieldKind::Buffer => cur
                .u32()
                .and_then(|n| cur.take(n as usize))
                .map(|b| FieldValue::Buffer(b.to_vec())),
        };
        match v {
            Some(v) => payload.push(v),
            None => return Ok(Step::Truncated),
        }
    }
    Ok(Step::Event(TraceEvent {
        numeric_id: id,
        timestamp_ns,
        payload,
    }))
}

/// Decodes every complete record of a trace.
pub fn read_trace(bytes: &[u8], defs: &[TraceMessageDef]) -> Result<TraceContents, TraceError> {
    check_header(bytes)?;
    let mut cur = Cursor {
        bytes,
        pos: HEADER_LEN,
    };
    let mut events = Vec::new();
    while cur.pos < bytes.len() {
        let start = cur.pos;
        match read_one(&mut cur, defs)? {
            Step::Event(e) => events.push(e),
            Step::Truncated => {
                return Ok(TraceContents {
                    events,
                    truncated_at: Some(start),
                })
            }
        }
    }
    Ok(TraceContents {
        events,
        truncated_at: None,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extracted {
    pub bytes: Vec<u8>,
    /// Matching events found.
    pub events: usize,
    /// Byte offset of an incomplete trailing record; everything before it was extracted.
    pub truncated_at: Option<usize>,
}

/// Concatenates field `field` of every `id` event, in trace order. Ints are
/// emitted as little-endian `i64`.
pub fn extract(trace: &[u8], id: &str, field: &str, defs: &[TraceMessageDef]) -> Result<Extracted, TraceError> {
    let def = find_def(defs, id)?;
    let idx = def.field_index(field).ok_or_else(|| TraceError::UnknownField {
        id: id.to_string(),
        field: field.to_string(),
    })?;
    let contents = read_trace(trace, defs)?;
    let mut bytes = Vec::new();
    let mut events = 0;
    for ev in contents.events.iter().filter(|e| e.numeric_id == def.numeric_id) {
        events += 1;
        match &ev.payload[idx] {
            FieldValue::Int(x) => bytes.extend_from_slice(&x.to_le_bytes()),
            FieldValue::Buffer(b) => bytes.extend_from_slice(b),
        }
    }
    Ok(Extracted {
        bytes,
        events,
        truncated_at: contents.truncated_at,
    })
}

/// Producer side of a background recorder. `emit` never blocks: when the
/// queue is full the event is dropped and counted.
#[derive(Debug, Clone)]
pub struct TraceProducer {
    tx: SyncSender<TraceEvent>,
    dropped: Arc<AtomicU64>,
    epoch: Instant,
}

impl TraceProducer {
    /// Timestamps the event with monotonic nanoseconds since the recorder
    /// started and enqueues it. Returns `false` if it was dropped.
    pub fn emit(&self, numeric_id: u32, payload: Vec<FieldValue>) -> bool {
        let timestamp_ns = self.epoch.elapsed().as_nanos() as u64;
        self.send(TraceEvent {
            numeric_id,
            timestamp_ns,
            payload,
        })
    }

    /// Enqueues an already stamped event.
    pub fn send(&self, ev: TraceEvent) -> bool {
        match self.tx.try_send(ev) {
            Ok(()) => true,
            Err(TrySendError::Full(_) | TrySendError::Disconnected(_)) => {
                self.dropped.fetch_add(1, Ordering::Relaxed);
                false
            }
        }
    }

    pub fn dropped(&self) -> u64 {
        self.dropped.load(Ordering::Relaxed)
    }
}

/// Consumer thread writing queued events to a trace.
pub struct TraceRecorder<W: Write + Send + 'static> {
    handle: JoinHandle<io::Result<(W, RecordStats)>>,
    dropped: Arc<AtomicU64>,
}

impl<W: Write + Send + 'static> TraceRecorder<W> {
    /// Starts the writer thread with a queue of `capacity` events.
    pub fn spawn(out: W, defs: Vec<TraceMessageDef>, capacity: usize) -> (TraceProducer, Self) {
        let (tx, rx): (SyncSender<TraceEvent>, Receiver<TraceEvent>) = sync_channel(capacity);
        let dropped = Arc::new(AtomicU64::new(0));
        let handle = std::thread::spawn(move || {
            let mut w = TraceWriter::new(out, defs)?;
            for ev in rx {
                w.write_event(&ev)?;
            }
            w.finish()
        });
        let producer = TraceProducer {
            tx,
            dropped: Arc::clone(&dropped),
            epoch: Instant::now(),
        };
        (producer, Self { handle, dropped })
    }

    /// Closes the queue, drains it and returns the writer. Every clone of
    /// the producer must have been dropped, or this waits for them.
    pub fn finish(self, producer: TraceProducer) -> Result<(W, RecordStats), TraceError> {
        drop(producer);
        let (w, mut stats) = self.handle.join().map_err(|_| TraceError::RecorderPanicked)??;
        stats.dropped = self.dropped.load(Ordering::Relaxed);
        Ok((w, stats))
    }
}
