//! Flat little-endian population checkpoints.
//!
//! Layout: magic `KSATPOP\0`, version `u32`, mode `u8` (0 = BP, 1 = SP),
//! three zero bytes, size `u64`, population seed `u64`, alpha `f64`,
//! accepted updates `u64`, rejected draws `u64`, generator seed `[u8; 32]`,
//! generator stream `u64`, generator word position `u128`, then the samples
//! as `f64`s (`p_T, p_F` or `s_T, s_I, s_F`).

use std::io::{Read, Write};

use rand::SeedableRng;

use super::{Population, Samples};
use crate::bp::Belief2;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::sp::Survey3;

const MAGIC: &[u8; 8] = b"KSATPOP\0";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub population: Population,
    pub alpha: f64,
}

fn io(e: std::io::Error) -> Error {
    Error::Checkpoint(e.to_string())
}

pub fn write_checkpoint<W: Write>(mut w: W, pop: &Population, alpha: f64) -> Result<()> {
    let mut buf = Vec::with_capacity(128 + pop.len() * 24);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    let mode: u8 = match pop.samples {
        Samples::Bp(_) => 0,
        Samples::Sp(_) => 1,
    };
    buf.extend_from_slice(&[mode, 0, 0, 0]);
    buf.extend_from_slice(&(pop.len() as u64).to_le_bytes());
    buf.extend_from_slice(&pop.seed.to_le_bytes());
    buf.extend_from_slice(&alpha.to_le_bytes());
    buf.extend_from_slice(&pop.updates.to_le_bytes());
    buf.extend_from_slice(&pop.contradictions.to_le_bytes());
    let r = pop.rng();
    buf.extend_from_slice(&r.get_seed());
    buf.extend_from_slice(&r.get_stream().to_le_bytes());
    buf.extend_from_slice(&r.get_word_pos().to_le_bytes());
    match &pop.samples {
        Samples::Bp(v) => {
            for b in v {
                buf.extend_from_slice(&b.p_t.to_le_bytes());
                buf.extend_from_slice(&b.p_f.to_le_bytes());
            }
        }
        Samples::Sp(v) => {
            for s in v {
                buf.extend_from_slice(&s.s_t.to_le_bytes());
                buf.extend_from_slice(&s.s_i.to_le_bytes());
                buf.extend_from_slice(&s.s_f.to_le_bytes());
            }
        }
    }
    w.write_all(&buf).map_err(io)?;
    w.flush().map_err(io)
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let bytes = self
            .data
            .get(self.pos..end)
            .ok_or_else(|| Error::Checkpoint("truncated checkpoint".into()))?;
        self.pos = end;
        Ok(bytes.try_into().expect("length checked"))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Checkpoint> {
    let mut data = Vec::new();
    r.read_to_end(&mut data).map_err(io)?;
    let mut c = Cursor { data: &data, pos: 0 };
    if &c.take::<8>()? != MAGIC {
        return Err(Error::Checkpoint("not a population checkpoint".into()));
    }
    let version = u32::from_le_bytes(c.take()?);
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let [mode, ..] = c.take::<4>()?;
    let size = c.u64()? as usize;
    let seed = c.u64()?;
    let alpha = c.f64()?;
    let updates = c.u64()?;
    let contradictions = c.u64()?;
    let mut rng = Rng::from_seed(c.take::<32>()?);
    rng.set_stream(c.u64()?);
    rng.set_word_pos(u128::from_le_bytes(c.take()?));
    let width = match mode {
        0 => 2,
        1 => 3,
        m => return Err(Error::Checkpoint(format!("unknown mode {m}"))),
    };
    if data.len() - c.pos != size * width * 8 {
        return Err(Error::Checkpoint(format!(
            "expected {size} samples, payload has {} bytes",
            data.len() - c.pos
        )));
    }
    let samples = if mode == 0 {
        let mut v = Vec::with_capacity(size);
        for _ in 0..size {
            v.push(Belief2::new(c.f64()?, c.f64()?));
        }
        Samples::Bp(v)
    } else {
        let mut v = Vec::with_capacity(size);
        for _ in 0..size {
            v.push(Survey3::new(c.f64()?, c.f64()?, c.f64()?));
        }
        Samples::Sp(v)
    };
    Ok(Checkpoint {
        population: Population::from_parts(samples, seed, rng, updates, contradictions),
        alpha,
    })
}
