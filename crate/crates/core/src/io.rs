//! File formats: EVT1 and CSV event lists, FSEQ frame sequences.
//!
//! All binary formats are little-endian.
//!
//! ```text
//! EVT1: "EVT1" u16 version=1, u16 width, u16 height, u32 count,
//!       count x { u32 t_us, u16 x, u16 y, i8 p }
//! FSEQ: "FSEQ" u16 version=1, u16 width, u16 height, u32 frames, f32 fps,
//!       u8 channels=3, frames x height x width x 3 f32
//! CSV:  header "t_us,x,y,p", one decimal record per line
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Cursor, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::events::{Event, EventList};
use crate::frames::FrameSeq;

pub const EVT1_MAGIC: &[u8; 4] = b"EVT1";
pub const FSEQ_MAGIC: &[u8; 4] = b"FSEQ";
pub const FORMAT_VERSION: u16 = 1;
pub const CSV_HEADER: [&str; 4] = ["t_us", "x", "y", "p"];

const EVT1_HEADER_LEN: usize = 4 + 2 + 2 + 2 + 4;
const EVT1_RECORD_LEN: usize = 4 + 2 + 2 + 1;

fn dim_u16(what: &str, v: usize) -> Result<u16> {
    u16::try_from(v).map_err(|_| Error::Range(format!("{what} {v} does not fit in u16")))
}

fn truncated(what: &str) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format(format!("truncated {what}")),
        _ => Error::Io(e),
    }
}

fn read_magic(buf: &mut Cursor<&[u8]>, magic: &[u8; 4], what: &str) -> Result<()> {
    let mut m = [0u8; 4];
    buf.read_exact(&mut m).map_err(truncated(what))?;
    if &m != magic {
        return Err(Error::Format(format!("bad {what} magic {m:?}")));
    }
    let version = buf.read_u16::<LE>().map_err(truncated(what))?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported {what} version {version}")));
    }
    Ok(())
}

pub fn encode_evt1(events: &EventList, mut w: impl Write) -> Result<()> {
    let count = u32::try_from(events.len())
        .map_err(|_| Error::Range(format!("{} events exceed u32 count", events.len())))?;
    w.write_all(EVT1_MAGIC)?;
    w.write_u16::<LE>(FORMAT_VERSION)?;
    w.write_u16::<LE>(dim_u16("width", events.width())?)?;
    w.write_u16::<LE>(dim_u16("height", events.height())?)?;
    w.write_u32::<LE>(count)?;
    for e in events.events() {
        let t = u32::try_from(e.t_us)
            .map_err(|_| Error::Range(format!("timestamp {} us exceeds u32", e.t_us)))?;
        w.write_u32::<LE>(t)?;
        w.write_u16::<LE>(e.x)?;
        w.write_u16::<LE>(e.y)?;
        w.write_i8(e.p)?;
    }
    Ok(())
}

pub fn decode_evt1(bytes: &[u8]) -> Result<EventList> {
    let mut buf = Cursor::new(bytes);
    read_magic(&mut buf, EVT1_MAGIC, "EVT1")?;
    let width = buf.read_u16::<LE>().map_err(truncated("EVT1 header"))? as usize;
    let height = buf.read_u16::<LE>().map_err(truncated("EVT1 header"))? as usize;
    let count = buf.read_u32::<LE>().map_err(truncated("EVT1 header"))? as usize;
    let expected = EVT1_HEADER_LEN + count * EVT1_RECORD_LEN;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "EVT1 declares {count} records ({expected} bytes) but file has {} bytes",
            bytes.len()
        )));
    }
    let mut events = Vec::with_capacity(count);
    for _ in 0..count {
        let t = buf.read_u32::<LE>()? as u64;
        let x = buf.read_u16::<LE>()?;
        let y = buf.read_u16::<LE>()?;
        let p = buf.read_i8()?;
        events.push(Event::new(t, x, y, p));
    }
    EventList::new(width, height, events)
}

pub fn write_evt1(path: impl AsRef<Path>, events: &EventList) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    encode_evt1(events, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_evt1(path: impl AsRef<Path>) -> Result<EventList> {
    decode_evt1(&std::fs::read(path)?)
}

pub fn encode_csv(events: &EventList, w: impl Write) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(CSV_HEADER)?;
    for e in events.events() {
        wr.write_record(&[e.t_us.to_string(), e.x.to_string(), e.y.to_string(), e.p.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

/// Parse CSV events. The format carries no sensor size, so `dims` supplies
/// it; when absent the bounding box of the coordinates is used.
pub fn decode_csv(r: impl Read, dims: Option<(usize, usize)>) -> Result<EventList> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(r);
    let header = rd.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Format(format!("expected CSV header t_us,x,y,p, got {header:?}")));
    }
    let mut events = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec?;
        if rec.len() != 4 {
            return Err(Error::Format(format!("record {} has {} fields", line + 1, rec.len())));
        }
        let field = |i: usize| -> Result<i64> {
            rec[i].parse::<i64>().map_err(|e| {
                Error::Format(format!("record {}: field {} = {:?}: {e}", line + 1, CSV_HEADER[i], &rec[i]))
            })
        };
        let (t, x, y, p) = (field(0)?, field(1)?, field(2)?, field(3)?);
        if t < 0 {
            return Err(Error::Range(format!("record {}: negative timestamp {t}", line + 1)));
        }
        let x = u16::try_from(x).map_err(|_| Error::Range(format!("record {}: x = {x}", line + 1)))?;
        let y = u16::try_from(y).map_err(|_| Error::Range(format!("record {}: y = {y}", line + 1)))?;
        let p = i8::try_from(p).map_err(|_| Error::Format(format!("record {}: p = {p}", line + 1)))?;
        events.push(Event::new(t as u64, x, y, p));
    }
    let (width, height) = dims.unwrap_or_else(|| {
        events.iter().fold((0, 0), |(w, h), e| (w.max(e.x as usize + 1), h.max(e.y as usize + 1)))
    });
    EventList::new(width, height, events)
}

pub fn write_csv(path: impl AsRef<Path>, events: &EventList) -> Result<()> {
    encode_csv(events, BufWriter::new(File::create(path)?))
}

pub fn read_csv(path: impl AsRef<Path>, dims: Option<(usize, usize)>) -> Result<EventList> {
    decode_csv(BufReader::new(File::open(path)?), dims)
}

pub fn encode_fseq(frames: &FrameSeq, mut w: impl Write) -> Result<()> {
    let count = u32::try_from(frames.frame_count())
        .map_err(|_| Error::Range("frame count exceeds u32".into()))?;
    w.write_all(FSEQ_MAGIC)?;
    w.write_u16::<LE>(FORMAT_VERSION)?;
    w.write_u16::<LE>(dim_u16("width", frames.width())?)?;
    w.write_u16::<LE>(dim_u16("height", frames.height())?)?;
    w.write_u32::<LE>(count)?;
    w.write_f32::<LE>(frames.fps() as f32)?;
    w.write_u8(FrameSeq::CHANNELS as u8)?;
    for &v in frames.data() {
        w.write_f32::<LE>(v)?;
    }
    Ok(())
}

pub fn decode_fseq(bytes: &[u8]) -> Result<FrameSeq> {
    let mut buf = Cursor::new(bytes);
    read_magic(&mut buf, FSEQ_MAGIC, "FSEQ")?;
    let header = truncated("FSEQ header");
    let width = buf.read_u16::<LE>().map_err(&header)? as usize;
    let height = buf.read_u16::<LE>().map_err(&header)? as usize;
    let count = buf.read_u32::<LE>().map_err(&header)? as usize;
    let fps = buf.read_f32::<LE>().map_err(&header)?;
    let channels = buf.read_u8().map_err(&header)?;
    if channels as usize != FrameSeq::CHANNELS {
        return Err(Error::Format(format!("FSEQ must have 3 channels, got {channels}")));
    }
    let samples = count * width * height * FrameSeq::CHANNELS;
    let body = &bytes[buf.position() as usize..];
    if body.len() != samples * 4 {
        return Err(Error::Format(format!(
            "FSEQ declares {samples} samples but body has {} bytes",
            body.len()
        )));
    }
    let data = body.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
    FrameSeq::new(width, height, fps as f64, data).map_err(|e| match e {
        Error::Io(_) => e,
        other => Error::Format(format!("invalid FSEQ payload: {other}")),
    })
}

pub fn write_fseq(path: impl AsRef<Path>, frames: &FrameSeq) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    encode_fseq(frames, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_fseq(path: impl AsRef<Path>) -> Result<FrameSeq> {
    decode_fseq(&std::fs::read(path)?)
}

/// Read events by extension: `.csv` is CSV, anything else EVT1.
pub fn read_events(path: impl AsRef<Path>, dims: Option<(usize, usize)>) -> Result<EventList> {
    let path = path.as_ref();
    if is_csv(path) {
        read_csv(path, dims)
    } else {
        read_evt1(path)
    }
}

pub fn write_events(path: impl AsRef<Path>, events: &EventList) -> Result<()> {
    let path = path.as_ref();
    if is_csv(path) {
        write_csv(path, events)
    } else {
        write_evt1(path, events)
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EventList {
        EventList::new(
            4,
            3,
            vec![Event::new(0, 1, 0, 1), Event::new(0, 3, 2, -1), Event::new(2000, 0, 0, -1)],
        )
        .unwrap()
    }

    #[test]
    fn evt1_layout() {
        let mut bytes = Vec::new();
        encode_evt1(&sample(), &mut bytes).unwrap();
        assert_eq!(bytes.len(), 14 + 3 * 9);
        assert_eq!(&bytes[..4], b"EVT1");
        assert_eq!(&bytes[4..14], &[1, 0, 4, 0, 3, 0, 3, 0, 0, 0]);
        // last record: t=2000, x=0, y=0, p=-1
        assert_eq!(&bytes[32..], &[0xD0, 0x07, 0, 0, 0, 0, 0, 0, 0xFF]);
        assert_eq!(decode_evt1(&bytes).unwrap(), sample());
    }

    #[test]
    fn evt1_errors() {
        let mut bytes = Vec::new();
        encode_evt1(&sample(), &mut bytes).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_evt1(&bad), Err(Error::Format(_))));
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(decode_evt1(&bad), Err(Error::Format(_))));
        assert!(matches!(decode_evt1(&bytes[..bytes.len() - 1]), Err(Error::Format(_))));
        assert!(matches!(decode_evt1(&bytes[..6]), Err(Error::Format(_))));
        // width 4 -> 1: the x=3 record is now out of range
        let mut bad = bytes.clone();
        bad[6] = 1;
        assert!(matches!(decode_evt1(&bad), Err(Error::Range(_))));
    }

    #[test]
    fn csv_line_parses() {
        let text = "t_us,x,y,p\n2000,0,0,-1\n";
        let e = decode_csv(text.as_bytes(), None).unwrap();
        assert_eq!(e.events(), &[Event::new(2000, 0, 0, -1)]);
        assert_eq!((e.width(), e.height()), (1, 1));

        let mut out = Vec::new();
        encode_csv(&sample(), &mut out).unwrap();
        assert_eq!(String::from_utf8(out.clone()).unwrap().lines().next(), Some("t_us,x,y,p"));
        assert_eq!(decode_csv(out.as_slice(), Some((4, 3))).unwrap(), sample());
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(decode_csv("t,x,y,p\n".as_bytes(), None), Err(Error::Format(_))));
        assert!(matches!(decode_csv("t_us,x,y,p\n1,a,0,1\n".as_bytes(), None), Err(Error::Format(_))));
        assert!(matches!(decode_csv("t_us,x,y,p\n1,5,0,1\n".as_bytes(), Some((2, 2))), Err(Error::Range(_))));
    }

    #[test]
    fn fseq_errors() {
        let f = FrameSeq::new(2, 1, 1000.0, vec![0.25; 12]).unwrap();
        let mut bytes = Vec::new();
        encode_fseq(&f, &mut bytes).unwrap();
        assert_eq!(bytes.len(), 4 + 2 + 2 + 2 + 4 + 4 + 1 + 12 * 4);
        assert_eq!(decode_fseq(&bytes).unwrap(), f);
        let mut bad = bytes.clone();
        bad[3] = b'X';
        assert!(matches!(decode_fseq(&bad), Err(Error::Format(_))));
        assert!(matches!(decode_fseq(&bytes[..bytes.len() - 2]), Err(Error::Format(_))));
    }
}
