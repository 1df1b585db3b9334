//! EVSN checkpoint format (little-endian):
//!
//! ```text
//! "EVSN" u16 version=1
//! u32 channels, u32 kernel, u32 depth, f32 tau, f32 v_th, f32 alpha
//! per tensor, in declaration order: u32 rank, rank x u32 dim, f32 values
//! ```

use std::fs::File;
use std::io::{BufWriter, Cursor, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use super::{EvsNetConfig, EvsNetParams};
use crate::error::{Error, Result};
use crate::spiking::{LifParams, SurrogateConfig};

pub const EVSN_MAGIC: &[u8; 4] = b"EVSN";
const VERSION: u16 = 1;

fn truncated(e: std::io::Error) -> Error {
    match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("truncated EVSN checkpoint".into()),
        _ => Error::Io(e),
    }
}

pub fn encode_checkpoint(p: &EvsNetParams<f32>, mut w: impl Write) -> Result<()> {
    let cfg = p.config();
    w.write_all(EVSN_MAGIC)?;
    w.write_u16::<LE>(VERSION)?;
    for v in [cfg.channels, cfg.kernel, cfg.depth] {
        w.write_u32::<LE>(u32::try_from(v).map_err(|_| Error::Range(format!("{v} exceeds u32")))?)?;
    }
    for v in [cfg.lif.tau, cfg.lif.v_th, cfg.surrogate.alpha] {
        w.write_f32::<LE>(v as f32)?;
    }
    for (i, (_, shape)) in cfg.tensor_shapes().iter().enumerate() {
        w.write_u32::<LE>(shape.len() as u32)?;
        for &d in shape {
            w.write_u32::<LE>(d as u32)?;
        }
        for &v in p.tensor(i) {
            w.write_f32::<LE>(v)?;
        }
    }
    Ok(())
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<EvsNetParams<f32>> {
    let mut r = Cursor::new(bytes);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != EVSN_MAGIC {
        return Err(Error::Format(format!("bad EVSN magic {magic:?}")));
    }
    let version = r.read_u16::<LE>().map_err(truncated)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported EVSN version {version}")));
    }
    let channels = r.read_u32::<LE>().map_err(truncated)? as usize;
    let kernel = r.read_u32::<LE>().map_err(truncated)? as usize;
    let depth = r.read_u32::<LE>().map_err(truncated)? as usize;
    let tau = r.read_f32::<LE>().map_err(truncated)? as f64;
    let v_th = r.read_f32::<LE>().map_err(truncated)? as f64;
    let alpha = r.read_f32::<LE>().map_err(truncated)? as f64;
    let cfg = EvsNetConfig {
        channels,
        kernel,
        depth,
        lif: LifParams { tau, v_th },
        surrogate: SurrogateConfig { alpha },
    };
    cfg.validate().map_err(|e| Error::Format(format!("invalid EVSN config: {e}")))?;

    let mut data = Vec::new();
    for (name, shape) in cfg.tensor_shapes() {
        let rank = r.read_u32::<LE>().map_err(truncated)? as usize;
        let dims = (0..rank)
            .map(|_| r.read_u32::<LE>().map(|d| d as usize))
            .collect::<std::io::Result<Vec<_>>>()
            .map_err(truncated)?;
        if dims != shape {
            return Err(Error::Format(format!("tensor {name}: expected shape {shape:?}, found {dims:?}")));
        }
        for _ in 0..shape.iter().product::<usize>() {
            data.push(r.read_f32::<LE>().map_err(truncated)?);
        }
    }
    if (r.position() as usize) != bytes.len() {
        return Err(Error::Format("trailing bytes after EVSN tensors".into()));
    }
    EvsNetParams::from_flat(cfg, data).map_err(|e| Error::Format(format!("invalid EVSN tensors: {e}")))
}

pub fn write_checkpoint(path: impl AsRef<Path>, p: &EvsNetParams<f32>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    encode_checkpoint(p, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<EvsNetParams<f32>> {
    decode_checkpoint(&std::fs::read(path)?)
}
