//! Event stream files.
//!
//! CSV holds one `t,x,y,p` record per line with `t` in microseconds. Lines
//! starting with `#` are comments and an optional `t,x,y,p` header is
//! skipped.
//!
//! The binary format is little-endian: magic `SPKE`, `u16` version (1),
//! `u16` sensor width, `u16` sensor height, `u64` event count, then one
//! 13-byte record per event (`u64 t`, `u16 x`, `u16 y`, `u8 p`).

use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::event::{PixelEvent, SENSOR_HEIGHT, SENSOR_WIDTH};

pub const EVENT_MAGIC: [u8; 4] = *b"SPKE";
pub const EVENT_VERSION: u16 = 1;
const HEADER_LEN: u64 = 18;
const RECORD_LEN: u64 = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EventFormat {
    #[default]
    Csv,
    Binary,
}

impl EventFormat {
    /// `.csv` and `.txt` are CSV, anything else binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv" | "txt") => EventFormat::Csv,
            _ => EventFormat::Binary,
        }
    }
}

impl FromStr for EventFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(EventFormat::Csv),
            "binary" | "bin" => Ok(EventFormat::Binary),
            _ => Err(format!("unknown event format {s:?} (expected csv or binary)")),
        }
    }
}

impl fmt::Display for EventFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventFormat::Csv => "csv",
            EventFormat::Binary => "binary",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReadOptions {
    /// Stable-sort by time instead of rejecting a non-monotone stream.
    pub allow_unsorted: bool,
    pub sensor_width: u16,
    pub sensor_height: u16,
}

impl Default for ReadOptions {
    fn default() -> Self {
        Self { allow_unsorted: false, sensor_width: SENSOR_WIDTH, sensor_height: SENSOR_HEIGHT }
    }
}

/// Where a bad record sits: a CSV line or a binary byte offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Line(u64),
    Offset(u64),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Line(l) => write!(f, "line {l}"),
            Location::Offset(o) => write!(f, "byte offset {o}"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EventIoError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("{at}: {message}")]
    Malformed { at: Location, message: String },
    #[error("{at}: polarity {value} out of {{0,1}}")]
    Polarity { at: Location, value: u64 },
    #[error("{at}: pixel ({x}, {y}) outside the {width}x{height} sensor")]
    Bounds { at: Location, x: u64, y: u64, width: u16, height: u16 },
    #[error("{at}: timestamp {t} precedes {prev} (pass --allow-unsorted to sort)")]
    Unsorted { at: Location, t: u64, prev: u64 },
    #[error("bad magic {0:?}, expected SPKE")]
    Magic([u8; 4]),
    #[error("unsupported event file version {0}")]
    Version(u16),
    #[error("header sensor {found_w}x{found_h} does not match the configured {want_w}x{want_h}")]
    SensorMismatch { found_w: u16, found_h: u16, want_w: u16, want_h: u16 },
}

fn check_record(at: Location, t: u64, x: u64, y: u64, p: u64, opts: &ReadOptions) -> Result<PixelEvent, EventIoError> {
    if p > 1 {
        return Err(EventIoError::Polarity { at, value: p });
    }
    if x >= u64::from(opts.sensor_width) || y >= u64::from(opts.sensor_height) {
        return Err(EventIoError::Bounds { at, x, y, width: opts.sensor_width, height: opts.sensor_height });
    }
    Ok(PixelEvent::new(t, x as u16, y as u16, p as u8))
}

fn finish(mut events: Vec<PixelEvent>, locations: impl Fn(usize) -> Location, opts: &ReadOptions) -> Result<Vec<PixelEvent>, EventIoError> {
    if let Some(i) = events.windows(2).position(|w| w[1].t < w[0].t) {
        if !opts.allow_unsorted {
            return Err(EventIoError::Unsorted { at: locations(i + 1), t: events[i + 1].t, prev: events[i].t });
        }
        events.sort_by_key(|e| e.t);
    }
    Ok(events)
}

/// Decodes CSV records in file order.
pub fn read_csv<R: Read>(reader: R, opts: &ReadOptions) -> Result<Vec<PixelEvent>, EventIoError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut events = Vec::new();
    let mut lines = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut first = true;
    loop {
        let more = rdr.read_record(&mut record).map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            match e.into_kind() {
                csv::ErrorKind::Io(io) => EventIoError::Io(io),
                kind => EventIoError::Malformed { at: Location::Line(line), message: format!("{kind:?}") },
            }
        })?;
        if !more {
            break;
        }
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let at = Location::Line(line);
        if std::mem::take(&mut first) && record.iter().eq(["t", "x", "y", "p"]) {
            continue;
        }
        if record.len() != 4 {
            return Err(EventIoError::Malformed { at, message: format!("expected 4 fields t,x,y,p, found {}", record.len()) });
        }
        let mut fields = [0u64; 4];
        for (slot, (name, text)) in fields.iter_mut().zip(["t", "x", "y", "p"].iter().zip(record.iter())) {
            *slot = text
                .parse()
                .map_err(|_| EventIoError::Malformed { at, message: format!("{name} = {text:?} is not a non-negative integer") })?;
        }
        events.push(check_record(at, fields[0], fields[1], fields[2], fields[3], opts)?);
        lines.push(line);
    }
    finish(events, |i| Location::Line(lines[i]), opts)
}

/// Decodes a binary event file, checking the header first.
pub fn read_binary<R: Read>(reader: R, opts: &ReadOptions) -> Result<Vec<PixelEvent>, EventIoError> {
    let mut r = BufReader::new(reader);
    let mut magic = [0; 4];
    r.read_exact(&mut magic)?;
    if magic != EVENT_MAGIC {
        return Err(EventIoError::Magic(magic));
    }
    let version = r.read_u16::<LittleEndian>()?;
    if version != EVENT_VERSION {
        return Err(EventIoError::Version(version));
    }
    let width = r.read_u16::<LittleEndian>()?;
    let height = r.read_u16::<LittleEndian>()?;
    if (width, height) != (opts.sensor_width, opts.sensor_height) {
        return Err(EventIoError::SensorMismatch {
            found_w: width,
            found_h: height,
            want_w: opts.sensor_width,
            want_h: opts.sensor_height,
        });
    }
    let count = r.read_u64::<LittleEndian>()?;
    let offset = |i: u64| Location::Offset(HEADER_LEN + i * RECORD_LEN);
    let mut events = Vec::with_capacity(count.min(1 << 24) as usize);
    let mut buf = [0u8; RECORD_LEN as usize];
    for i in 0..count {
        r.read_exact(&mut buf).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => EventIoError::Malformed {
                at: offset(i),
                message: format!("truncated: header declares {count} events, file ends at record {i}"),
            },
            _ => EventIoError::Io(e),
        })?;
        let mut rec = &buf[..];
        let t = rec.read_u64::<LittleEndian>()?;
        let x = rec.read_u16::<LittleEndian>()?;
        let y = rec.read_u16::<LittleEndian>()?;
        let p = rec.read_u8()?;
        events.push(check_record(offset(i), t, x.into(), y.into(), p.into(), opts)?);
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(EventIoError::Malformed { at: offset(count), message: "trailing bytes after the last record".into() });
    }
    finish(events, |i| offset(i as u64), opts)
}

/// Reads an event file in the given format.
pub fn read_events(path: impl AsRef<Path>, format: EventFormat, opts: &ReadOptions) -> Result<Vec<PixelEvent>, EventIoError> {
    let file = File::open(path)?;
    match format {
        EventFormat::Csv => read_csv(BufReader::new(file), opts),
        EventFormat::Binary => read_binary(file, opts),
    }
}

pub fn write_csv<W: Write>(writer: W, events: &[PixelEvent]) -> io::Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "t,x,y,p")?;
    for e in events {
        writeln!(w, "{},{},{},{}", e.t, e.x, e.y, e.p)?;
    }
    w.flush()
}

pub fn write_binary<W: Write>(writer: W, events: &[PixelEvent], width: u16, height: u16) -> io::Result<()> {
    let mut w = BufWriter::new(writer);
    w.write_all(&EVENT_MAGIC)?;
    w.write_u16::<LittleEndian>(EVENT_VERSION)?;
    w.write_u16::<LittleEndian>(width)?;
    w.write_u16::<LittleEndian>(height)?;
    w.write_u64::<LittleEndian>(events.len() as u64)?;
    for e in events {
        w.write_u64::<LittleEndian>(e.t)?;
        w.write_u16::<LittleEndian>(e.x)?;
        w.write_u16::<LittleEndian>(e.y)?;
        w.write_u8(e.p)?;
    }
    w.flush()
}

pub fn write_events(path: impl AsRef<Path>, format: EventFormat, events: &[PixelEvent], width: u16, height: u16) -> io::Result<()> {
    let file = File::create(path)?;
    match format {
        EventFormat::Csv => write_csv(file, events),
        EventFormat::Binary => write_binary(file, events, width, height),
    }
}

/// A reproducible sensor stream: an edge sweeping across the array plus
/// uniform background noise, with Poisson-like gaps averaging `mean_gap_us`.
pub fn synthetic_stream(seed: u64, count: usize, width: u16, height: u16, mean_gap_us: u64) -> Vec<PixelEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0u64;
    let period = 20_000u64;
    (0..count)
        .map(|_| {
            t += rng.gen_range(0..=2 * mean_gap_us);
            if rng.gen_bool(0.8) {
                let phase = (t % period) as f64 / period as f64;
                let edge = (phase * f64::from(width)) as i32 + rng.gen_range(-2..=2);
                let x = edge.clamp(0, i32::from(width) - 1) as u16;
                let y = rng.gen_range(0..height);
                PixelEvent::new(t, x, y, u8::from(rng.gen_bool(0.7)))
            } else {
                PixelEvent::new(t, rng.gen_range(0..width), rng.gen_range(0..height), rng.gen_range(0..=1))
            }
        })
        .collect()
}
