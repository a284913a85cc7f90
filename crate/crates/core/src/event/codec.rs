//! On-disk event formats.
//!
//! Binary layout (little-endian):
//!
//! ```text
//! header  "NASE" | version:u8 | channels:u16 | topology:u8          (8 bytes)
//! record  t:u32 | c:u16 | p:i8 | pad:u8 (= 0)                        (8 bytes)
//! ```
//!
//! CSV is one `t,c,p` record per line with an optional `t,c,p` header line.
//!
//! Recordings published as `.aedat` are not read here. Convert them
//! externally by mapping each AER packet's timestamp (µs) to `t`, its
//! channel address to `c` and its polarity bit to `p` (0 -> -1, 1 -> +1).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{validate_event, validate_events, Event, EventStream, Polarity, SensorConfig, Topology};
use crate::error::{Error, Location, Result};

pub const MAGIC: &[u8; 4] = b"NASE";
pub const FORMAT_VERSION: u8 = 1;
pub const HEADER_LEN: usize = 8;
pub const RECORD_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Binary,
    Csv,
}

impl Format {
    /// Guesses the format from a file extension; anything but `.csv` is binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Binary,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "binary" | "bin" => Ok(Format::Binary),
            "csv" => Ok(Format::Csv),
            other => Err(Error::validation(format!("unknown event format {other:?}"))),
        }
    }
}

pub fn read_stream(path: &Path, format: Format, config: SensorConfig) -> Result<EventStream> {
    let file = File::open(path)?;
    let events = match format {
        Format::Binary => {
            let mut buf = Vec::new();
            BufReader::new(file).read_to_end(&mut buf)?;
            decode_binary(&buf, config)?
        }
        Format::Csv => read_csv(BufReader::new(file), config)?,
    };
    let sample_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(EventStream::new(config, events).with_sample_id(sample_id))
}

pub fn write_stream(stream: &EventStream, path: &Path, format: Format) -> Result<()> {
    stream.validate()?;
    let mut out = BufWriter::new(File::create(path)?);
    match format {
        Format::Binary => out.write_all(&encode_binary(stream)?)?,
        Format::Csv => write_csv(stream, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

pub fn encode_binary(stream: &EventStream) -> Result<Vec<u8>> {
    stream.validate()?;
    let mut buf = Vec::with_capacity(HEADER_LEN + RECORD_LEN * stream.events.len());
    buf.extend_from_slice(MAGIC);
    buf.push(FORMAT_VERSION);
    buf.extend_from_slice(&stream.config.channels().to_le_bytes());
    buf.push(stream.config.topology.to_byte());
    for ev in &stream.events {
        buf.extend_from_slice(&ev.t.to_le_bytes());
        buf.extend_from_slice(&ev.c.to_le_bytes());
        buf.push(ev.p.as_i8() as u8);
        buf.push(0);
    }
    Ok(buf)
}

/// Decodes a binary event file, checking the header against `config`.
/// An empty buffer decodes to an empty stream.
pub fn decode_binary(buf: &[u8], config: SensorConfig) -> Result<Vec<Event>> {
    if buf.is_empty() {
        return Ok(Vec::new());
    }
    let parse_err = |offset: usize, message: String| Error::Parse {
        location: Location::Byte(offset as u64),
        message,
    };
    if buf.len() < HEADER_LEN {
        return Err(parse_err(0, format!("truncated header ({} bytes)", buf.len())));
    }
    if &buf[0..4] != MAGIC {
        return Err(parse_err(0, "bad magic, expected \"NASE\"".into()));
    }
    if buf[4] != FORMAT_VERSION {
        return Err(parse_err(4, format!("unsupported format version {}", buf[4])));
    }
    let channels = u16::from_le_bytes([buf[5], buf[6]]);
    let topology = Topology::from_byte(buf[7])
        .ok_or_else(|| parse_err(7, format!("unknown topology byte {}", buf[7])))?;
    if channels != config.channels() || topology != config.topology {
        return Err(Error::validation(format!(
            "file header declares {channels}-{topology} but the configured sensor is {config}"
        )));
    }

    let body = &buf[HEADER_LEN..];
    if !body.len().is_multiple_of(RECORD_LEN) {
        let offset = HEADER_LEN + body.len() - body.len() % RECORD_LEN;
        return Err(parse_err(offset, "truncated record".into()));
    }

    let mut events = Vec::with_capacity(body.len() / RECORD_LEN);
    let mut last_t = 0u32;
    for (i, rec) in body.chunks_exact(RECORD_LEN).enumerate() {
        let offset = HEADER_LEN + i * RECORD_LEN;
        let t = u32::from_le_bytes([rec[0], rec[1], rec[2], rec[3]]);
        let c = u16::from_le_bytes([rec[4], rec[5]]);
        let p = Polarity::try_from(rec[6] as i8)
            .map_err(|_| parse_err(offset + 6, format!("invalid polarity byte {:#04x}", rec[6])))?;
        if rec[7] != 0 {
            return Err(parse_err(offset + 7, "non-zero padding byte".into()));
        }
        let ev = Event::new(t, c, p);
        validate_event(&ev, channels).map_err(|e| at_location(e, Location::Byte(offset as u64)))?;
        if t < last_t {
            return Err(Error::Ordering(format!(
                "record at byte {offset} has t={t} after t={last_t}"
            )));
        }
        last_t = t;
        events.push(ev);
    }
    Ok(events)
}

pub fn read_csv<R: Read>(reader: R, config: SensorConfig) -> Result<Vec<Event>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);

    let mut events = Vec::new();
    let mut last_t = 0u32;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::Parse {
                location: Location::Line(line),
                message: e.to_string(),
            }
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(i as u64 + 1);
        if i == 0 && rec.iter().eq(["t", "c", "p"]) {
            continue;
        }
        let err = |message: String| Error::Parse {
            location: Location::Line(line),
            message,
        };
        if rec.len() != 3 {
            return Err(err(format!("expected 3 fields, found {}", rec.len())));
        }
        let t: u32 = rec[0].parse().map_err(|e| err(format!("bad timestamp {:?}: {e}", &rec[0])))?;
        let c: u16 = rec[1].parse().map_err(|e| err(format!("bad channel {:?}: {e}", &rec[1])))?;
        let p: i8 = rec[2].parse().map_err(|e| err(format!("bad polarity {:?}: {e}", &rec[2])))?;
        let p = Polarity::try_from(p).map_err(|e| err(e.to_string()))?;
        let ev = Event::new(t, c, p);
        validate_event(&ev, config.channels()).map_err(|e| at_location(e, Location::Line(line)))?;
        if t < last_t {
            return Err(Error::Ordering(format!("line {line} has t={t} after t={last_t}")));
        }
        last_t = t;
        events.push(ev);
    }
    Ok(events)
}

pub fn write_csv<W: Write>(stream: &EventStream, out: W) -> Result<()> {
    validate_events(&stream.events, stream.config.channels())?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "c", "p"]).map_err(csv_io)?;
    for ev in &stream.events {
        w.write_record([ev.t.to_string(), ev.c.to_string(), ev.p.as_i8().to_string()])
            .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn at_location(e: Error, loc: Location) -> Error {
    match e {
        Error::Validation(msg) => Error::Validation(format!("{loc}: {msg}")),
        other => other,
    }
}
