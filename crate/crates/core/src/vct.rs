//! The VCT container: a fixed little-endian header followed by a dense
//! payload in frame, row, column, channel order.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "VCT1"
//!      4     4  version (u32, = 1)
//!      8    16  frames, height, width, channels (u32 each)
//!     24     4  dtype (u32: 1 = f32, 2 = u8)
//!     28     -  payload
//! ```

use crate::error::{Error, Result};
use crate::tensor::{Shape, VideoClip};

pub const MAGIC: [u8; 4] = *b"VCT1";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum Dtype {
    F32 = 1,
    U8 = 2,
}

impl Dtype {
    pub fn from_code(code: u32) -> Result<Self> {
        match code {
            1 => Ok(Self::F32),
            2 => Ok(Self::U8),
            code => Err(Error::DtypeUnsupported { code }),
        }
    }

    pub fn code(self) -> u32 {
        self as u32
    }

    pub fn element_size(self) -> usize {
        match self {
            Self::F32 => 4,
            Self::U8 => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VctHeader {
    pub shape: Shape,
    pub dtype: Dtype,
}

impl VctHeader {
    pub fn payload_len(&self) -> usize {
        self.shape.len() * self.dtype.element_size()
    }

    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..4].copy_from_slice(&MAGIC);
        let words = [
            VERSION,
            self.shape.frames as u32,
            self.shape.height as u32,
            self.shape.width as u32,
            self.shape.channels as u32,
            self.dtype.code(),
        ];
        for (i, w) in words.iter().enumerate() {
            out[4 + 4 * i..8 + 4 * i].copy_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 {
            return Err(Error::TruncatedPayload {
                field: "magic",
                expected: 4,
                actual: bytes.len(),
            });
        }
        let magic: [u8; 4] = bytes[0..4].try_into().expect("4-byte slice");
        if magic != MAGIC {
            return Err(Error::BadMagic { found: magic });
        }
        let word = |i: usize, field: &'static str| -> Result<u32> {
            let at = 4 + 4 * i;
            bytes
                .get(at..at + 4)
                .map(|b| u32::from_le_bytes(b.try_into().expect("4-byte slice")))
                .ok_or(Error::TruncatedPayload {
                    field,
                    expected: at + 4,
                    actual: bytes.len(),
                })
        };
        let version = word(0, "version")?;
        if version != VERSION {
            return Err(Error::VersionUnsupported { version });
        }
        let shape = Shape::new(
            word(1, "frames")? as usize,
            word(2, "height")? as usize,
            word(3, "width")? as usize,
            word(4, "channels")? as usize,
        );
        let dtype = Dtype::from_code(word(5, "dtype")?)?;
        shape.check_nonzero()?;
        Ok(Self { shape, dtype })
    }
}

/// Decodes a VCT byte buffer. `u8` payloads are scaled into `[0, 1]`.
pub fn read_vct(bytes: &[u8]) -> Result<VideoClip> {
    let header = VctHeader::parse(bytes)?;
    let payload = &bytes[HEADER_LEN..];
    let expected = header.payload_len();
    if payload.len() < expected {
        return Err(Error::TruncatedPayload {
            field: "payload",
            expected,
            actual: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(Error::TrailingBytes {
            expected,
            actual: payload.len(),
        });
    }
    let data: Vec<f32> = match header.dtype {
        Dtype::F32 => payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4-byte chunk")))
            .collect(),
        Dtype::U8 => payload.iter().map(|&b| f32::from(b) / 255.0).collect(),
    };
    VideoClip::new(header.shape, data)
}

/// Encodes a clip. `u8` storage quantizes by `round(v * 255)` and rejects
/// values outside `[0, 1]`.
pub fn write_vct(clip: &VideoClip, dtype: Dtype) -> Result<Vec<u8>> {
    let header = VctHeader {
        shape: clip.shape(),
        dtype,
    };
    let mut out = Vec::with_capacity(HEADER_LEN + header.payload_len());
    out.extend_from_slice(&header.to_bytes());
    match dtype {
        Dtype::F32 => {
            for v in clip.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Dtype::U8 => {
            clip.check_unit_range()?;
            out.extend(clip.data().iter().map(|&v| (f64::from(v) * 255.0).round() as u8));
        }
    }
    Ok(out)
}
