//! `SIMMATN1` tensor exchange files.
//!
//! Layout: the 8 magic bytes, then `T`, `L`, `N` as little-endian `u32`, then
//! `L` pairs `(W, H)` as `u32`, one kind byte (0 logits, 1 probs), then
//! little-endian `f32` values ordered `[step from T down][layer][row][col][token]`.

use std::io::{Read, Write};

use super::map::{AttnMap, AttnStack, Grid, MapKind};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"SIMMATN1";

/// A sequence of stacks for steps `T, T-1, …` sharing shapes and kind.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorFile {
    stacks: Vec<AttnStack>,
}

impl TensorFile {
    pub fn new(stacks: Vec<AttnStack>) -> Result<Self> {
        let first = stacks
            .first()
            .ok_or_else(|| Error::Format("tensor file needs at least one step".into()))?;
        let total = stacks.len();
        for (i, s) in stacks.iter().enumerate() {
            if s.resolutions() != first.resolutions() || s.n_tokens() != first.n_tokens() {
                return Err(Error::Format("steps differ in layer shapes".into()));
            }
            if s.kind() != first.kind() {
                return Err(Error::Format("steps mix logits and probs".into()));
            }
            if s.step != total - i {
                return Err(Error::Format(format!(
                    "step {} at position {i}; steps must run from {total} down to 1",
                    s.step
                )));
            }
        }
        Ok(TensorFile { stacks })
    }

    pub fn stacks(&self) -> &[AttnStack] {
        &self.stacks
    }

    pub fn into_stacks(self) -> Vec<AttnStack> {
        self.stacks
    }

    pub fn steps(&self) -> usize {
        self.stacks.len()
    }

    pub fn kind(&self) -> MapKind {
        self.stacks[0].kind()
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let first = &self.stacks[0];
        let u32_of = |v: usize| {
            u32::try_from(v).map_err(|_| Error::Format(format!("dimension {v} exceeds u32")))
        };
        w.write_all(MAGIC)?;
        for v in [self.stacks.len(), first.n_layers(), first.n_tokens()] {
            w.write_all(&u32_of(v)?.to_le_bytes())?;
        }
        for (width, height) in first.resolutions() {
            w.write_all(&u32_of(width)?.to_le_bytes())?;
            w.write_all(&u32_of(height)?.to_le_bytes())?;
        }
        w.write_all(&[match first.kind() {
            MapKind::Logits => 0,
            MapKind::Probs => 1,
        }])?;
        let mut buf = Vec::new();
        for stack in &self.stacks {
            for layer in stack.layers() {
                let grids = layer.grids();
                buf.clear();
                buf.reserve(layer.width() * layer.height() * grids.len() * 4);
                for cell in 0..layer.width() * layer.height() {
                    for g in grids {
                        buf.extend_from_slice(&(g.values()[cell] as f32).to_le_bytes());
                    }
                }
                w.write_all(&buf)?;
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(8)? != MAGIC {
            return Err(Error::Format("missing SIMMATN1 magic".into()));
        }
        let steps = cur.u32()? as usize;
        let layers = cur.u32()? as usize;
        let tokens = cur.u32()? as usize;
        if steps == 0 || layers == 0 || tokens == 0 {
            return Err(Error::Format("zero steps, layers or tokens".into()));
        }
        let mut shapes = Vec::with_capacity(layers);
        for _ in 0..layers {
            let w = cur.u32()? as usize;
            let h = cur.u32()? as usize;
            if w == 0 || h == 0 {
                return Err(Error::Format("zero layer resolution".into()));
            }
            shapes.push((w, h));
        }
        let kind = match cur.take(1)?[0] {
            0 => MapKind::Logits,
            1 => MapKind::Probs,
            k => return Err(Error::Format(format!("unknown kind byte {k}"))),
        };
        let per_step: usize = shapes.iter().map(|(w, h)| w * h * tokens).sum();
        let expected = per_step
            .checked_mul(steps)
            .and_then(|v| v.checked_mul(4))
            .ok_or_else(|| Error::Format("tensor size overflows".into()))?;
        if cur.remaining() != expected {
            return Err(Error::Format(format!(
                "expected {expected} payload bytes, found {}",
                cur.remaining()
            )));
        }
        let mut stacks = Vec::with_capacity(steps);
        for i in 0..steps {
            let mut maps = Vec::with_capacity(layers);
            for &(w, h) in &shapes {
                let mut per_token: Vec<Vec<f64>> = vec![Vec::with_capacity(w * h); tokens];
                for _ in 0..w * h {
                    for values in per_token.iter_mut() {
                        values.push(f32::from_le_bytes(cur.array()?) as f64);
                    }
                }
                let grids = per_token
                    .into_iter()
                    .map(|v| Grid::new(w, h, v))
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| Error::Format(e.to_string()))?;
                maps.push(AttnMap::new(kind, grids).map_err(|e| Error::Format(e.to_string()))?);
            }
            stacks.push(AttnStack::new(steps - i, maps)?);
        }
        TensorFile::new(stacks)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|e| *e <= self.bytes.len())
            .ok_or_else(|| Error::Format("truncated tensor file".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn array(&mut self) -> Result<[u8; 4]> {
        Ok(self.take(4)?.try_into().expect("took four bytes"))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stack(step: usize, base: f64) -> AttnStack {
        let layer = |w: usize, h: usize| {
            let grids = (0..2)
                .map(|k| Grid::from_fn(w, h, |r, c| base + (k * 100 + r * 10 + c) as f64).unwrap())
                .collect();
            AttnMap::new(MapKind::Logits, grids).unwrap()
        };
        AttnStack::new(step, vec![layer(2, 2), layer(1, 1)]).unwrap()
    }

    #[test]
    fn header_and_ordering() {
        let file = TensorFile::new(vec![stack(2, 0.0), stack(1, 0.5)]).unwrap();
        let bytes = file.to_bytes();
        assert_eq!(&bytes[..8], b"SIMMATN1");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 2);
        assert_eq!(bytes[36], 0);
        // token-innermost: cell (0,0) token 0 then token 1
        let f = |i: usize| f32::from_le_bytes(bytes[37 + 4 * i..41 + 4 * i].try_into().unwrap());
        assert_eq!((f(0), f(1), f(2)), (0.0, 100.0, 1.0));
        assert_eq!(bytes.len(), 37 + 2 * (4 * 2 + 2) * 4);
        assert_eq!(TensorFile::from_bytes(&bytes).unwrap(), file);
    }

    #[test]
    fn rejects_malformed_input() {
        let bytes = TensorFile::new(vec![stack(1, 0.0)]).unwrap().to_bytes();
        assert!(TensorFile::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(TensorFile::from_bytes(&bad).is_err());
        let mut bad = bytes.clone();
        bad[36] = 7;
        assert!(TensorFile::from_bytes(&bad).is_err());
        let mut long = bytes;
        long.push(0);
        assert!(TensorFile::from_bytes(&long).is_err());
    }

    #[test]
    fn steps_must_descend() {
        assert!(TensorFile::new(vec![stack(1, 0.0), stack(2, 0.0)]).is_err());
    }
}
