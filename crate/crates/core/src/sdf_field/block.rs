use std::io::{ErrorKind, Read, Write};

use super::SdfError;

pub const SDFV_MAGIC: [u8; 4] = *b"SDFV";
/// Cubic block: one `u16` resolution.
const VERSION_CUBIC: u16 = 1;
/// Box-shaped block: three `u16` extents (used for 2-D images, `nz = 1`).
const VERSION_BOX: u16 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum SignConvention {
    /// Signed distance, negative in the interior.
    NegativeInside = 0,
    /// Unsigned intensities or occupancy.
    Unsigned = 1,
}

impl TryFrom<u8> for SignConvention {
    type Error = SdfError;

    fn try_from(v: u8) -> Result<Self, SdfError> {
        match v {
            0 => Ok(Self::NegativeInside),
            1 => Ok(Self::Unsigned),
            _ => Err(SdfError::Format(format!("unknown sign convention {v}"))),
        }
    }
}

/// `channels` planes of `nx * ny * nz` little-endian `f32`, x fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct VolumeBlock {
    pub dims: [usize; 3],
    pub channels: u8,
    pub sign: SignConvention,
    pub values: Vec<f32>,
}

fn io_err(e: std::io::Error) -> SdfError {
    if e.kind() == ErrorKind::UnexpectedEof {
        SdfError::Truncated
    } else {
        SdfError::Io(e.to_string())
    }
}

impl VolumeBlock {
    pub fn cubic(resolution: usize, channels: u8, values: Vec<f32>) -> Self {
        Self {
            dims: [resolution; 3],
            channels,
            sign: SignConvention::NegativeInside,
            values,
        }
    }

    pub fn with_sign(mut self, sign: SignConvention) -> Self {
        self.sign = sign;
        self
    }

    pub fn voxels(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_cubic(&self) -> bool {
        self.dims[0] == self.dims[1] && self.dims[1] == self.dims[2]
    }

    fn check(&self) -> Result<(), SdfError> {
        if self.dims.iter().any(|&d| d == 0 || d > u16::MAX as usize) {
            return Err(SdfError::Format(format!("extent out of range in {:?}", self.dims)));
        }
        let expected = self.voxels() * self.channels as usize;
        if self.values.len() != expected {
            return Err(SdfError::BadGridSize {
                expected,
                got: self.values.len(),
            });
        }
        Ok(())
    }

    pub fn byte_len(&self) -> usize {
        let head = if self.is_cubic() { 4 + 2 + 2 + 2 } else { 4 + 2 + 6 + 2 };
        head + 4 * self.values.len()
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<(), SdfError> {
        self.check()?;
        let mut buf = Vec::with_capacity(self.byte_len());
        buf.extend_from_slice(&SDFV_MAGIC);
        if self.is_cubic() {
            buf.extend_from_slice(&VERSION_CUBIC.to_le_bytes());
            buf.extend_from_slice(&(self.dims[0] as u16).to_le_bytes());
        } else {
            buf.extend_from_slice(&VERSION_BOX.to_le_bytes());
            for d in self.dims {
                buf.extend_from_slice(&(d as u16).to_le_bytes());
            }
        }
        buf.push(self.channels);
        buf.push(self.sign as u8);
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf).map_err(io_err)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, SdfError> {
        let mut out = Vec::new();
        self.write_to(&mut out)?;
        Ok(out)
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self, SdfError> {
        let mut head = [0u8; 6];
        r.read_exact(&mut head).map_err(io_err)?;
        if head[..4] != SDFV_MAGIC {
            return Err(SdfError::Format(format!("bad magic {:?}", &head[..4])));
        }
        let u16_at = |b: &[u8]| u16::from_le_bytes([b[0], b[1]]) as usize;
        let dims = match u16::from_le_bytes([head[4], head[5]]) {
            VERSION_CUBIC => {
                let mut b = [0u8; 2];
                r.read_exact(&mut b).map_err(io_err)?;
                [u16_at(&b); 3]
            }
            VERSION_BOX => {
                let mut b = [0u8; 6];
                r.read_exact(&mut b).map_err(io_err)?;
                [u16_at(&b[0..]), u16_at(&b[2..]), u16_at(&b[4..])]
            }
            v => return Err(SdfError::Format(format!("unsupported version {v}"))),
        };
        let mut cs = [0u8; 2];
        r.read_exact(&mut cs).map_err(io_err)?;
        let (channels, sign) = (cs[0], SignConvention::try_from(cs[1])?);
        let n = dims.iter().product::<usize>() * channels as usize;
        let mut raw = vec![0u8; 4 * n];
        r.read_exact(&mut raw).map_err(io_err)?;
        let values = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        let block = Self {
            dims,
            channels,
            sign,
            values,
        };
        block.check()?;
        Ok(block)
    }
}
