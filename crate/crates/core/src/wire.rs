//! Binary layouts of the frame transport and the PLC data-block protocol.
//!
//! Frame message: `"FRM1"`, payload length (u32 BE), format (u8), payload.
//! Data-block write: `"DBW1"`, db (u16 BE), start offset (u16 BE), byte count
//! (u16 BE), payload. Data-block read: `"DBR1"` with the same header and no
//! payload; the reply is ACK followed by `byte count` bytes, or a lone NAK.
//! Every request is answered with one ACK or NAK byte.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::motion::MotionVector;

pub const ACK: u8 = 0x06;
pub const NAK: u8 = 0x15;

pub const FRAME_MAGIC: [u8; 4] = *b"FRM1";
pub const WRITE_MAGIC: [u8; 4] = *b"DBW1";
pub const READ_MAGIC: [u8; 4] = *b"DBR1";

pub const FRAME_HEADER_LEN: usize = 9;
pub const BLOCK_HEADER_LEN: usize = 10;
/// Upper bound accepted for one frame payload.
pub const MAX_FRAME_PAYLOAD: u32 = 64 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WireError {
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unknown frame format {0}")]
    BadFormat(u8),
    #[error("message truncated: need {need} bytes, have {have}")]
    Truncated { need: usize, have: usize },
    #[error("payload of {0} bytes exceeds the limit")]
    TooLarge(usize),
    #[error("declared length {declared} does not match payload length {actual}")]
    LengthMismatch { declared: usize, actual: usize },
    #[error("value does not fit the wire field: {0}")]
    Unrepresentable(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameFormat {
    /// Binary portable pixmap, maxval 255.
    P6 = 0,
    Jpeg = 1,
}

impl TryFrom<u8> for FrameFormat {
    type Error = WireError;

    fn try_from(v: u8) -> Result<Self, WireError> {
        match v {
            0 => Ok(FrameFormat::P6),
            1 => Ok(FrameFormat::Jpeg),
            other => Err(WireError::BadFormat(other)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameMessage {
    pub format: FrameFormat,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameHeader {
    pub format: FrameFormat,
    pub length: u32,
}

impl FrameHeader {
    pub fn encode(&self) -> [u8; FRAME_HEADER_LEN] {
        let mut h = [0u8; FRAME_HEADER_LEN];
        h[..4].copy_from_slice(&FRAME_MAGIC);
        h[4..8].copy_from_slice(&self.length.to_be_bytes());
        h[8] = self.format as u8;
        h
    }

    pub fn decode(b: &[u8; FRAME_HEADER_LEN]) -> Result<Self, WireError> {
        let magic = [b[0], b[1], b[2], b[3]];
        if magic != FRAME_MAGIC {
            return Err(WireError::BadMagic(magic));
        }
        let length = u32::from_be_bytes([b[4], b[5], b[6], b[7]]);
        if length > MAX_FRAME_PAYLOAD {
            return Err(WireError::TooLarge(length as usize));
        }
        Ok(Self { format: FrameFormat::try_from(b[8])?, length })
    }
}

impl FrameMessage {
    pub fn new(format: FrameFormat, payload: Vec<u8>) -> Self {
        Self { format, payload }
    }

    pub fn header(&self) -> Result<FrameHeader, WireError> {
        let length = u32::try_from(self.payload.len())
            .ok()
            .filter(|&l| l <= MAX_FRAME_PAYLOAD)
            .ok_or(WireError::TooLarge(self.payload.len()))?;
        Ok(FrameHeader { format: self.format, length })
    }

    pub fn encode(&self) -> Result<Vec<u8>, WireError> {
        let h = self.header()?.encode();
        let mut out = Vec::with_capacity(h.len() + self.payload.len());
        out.extend_from_slice(&h);
        out.extend_from_slice(&self.payload);
        Ok(out)
    }

    /// Decodes one message from the front of `buf`, returning it with the
    /// number of bytes consumed.
    pub fn decode(buf: &[u8]) -> Result<(Self, usize), WireError> {
        let head: &[u8; FRAME_HEADER_LEN] = buf
            .get(..FRAME_HEADER_LEN)
            .and_then(|s| s.try_into().ok())
            .ok_or(WireError::Truncated { need: FRAME_HEADER_LEN, have: buf.len() })?;
        let h = FrameHeader::decode(head)?;
        let end = FRAME_HEADER_LEN + h.length as usize;
        if buf.len() < end {
            return Err(WireError::Truncated { need: end, have: buf.len() });
        }
        Ok((Self { format: h.format, payload: buf[FRAME_HEADER_LEN..end].to_vec() }, end))
    }
}

/// Header shared by DBW1 and DBR1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockHeader {
    pub magic: [u8; 4],
    pub db: u16,
    pub start: u16,
    pub count: u16,
}

impl BlockHeader {
    pub fn encode(&self) -> [u8; BLOCK_HEADER_LEN] {
        let mut h = [0u8; BLOCK_HEADER_LEN];
        h[..4].copy_from_slice(&self.magic);
        h[4..6].copy_from_slice(&self.db.to_be_bytes());
        h[6..8].copy_from_slice(&self.start.to_be_bytes());
        h[8..10].copy_from_slice(&self.count.to_be_bytes());
        h
    }

    pub fn decode(b: &[u8; BLOCK_HEADER_LEN]) -> Result<Self, WireError> {
        let magic = [b[0], b[1], b[2], b[3]];
        if magic != WRITE_MAGIC && magic != READ_MAGIC {
            return Err(WireError::BadMagic(magic));
        }
        Ok(Self {
            magic,
            db: u16::from_be_bytes([b[4], b[5]]),
            start: u16::from_be_bytes([b[6], b[7]]),
            count: u16::from_be_bytes([b[8], b[9]]),
        })
    }

    pub fn is_write(&self) -> bool {
        self.magic == WRITE_MAGIC
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataBlockWrite {
    pub db: u16,
    pub start: u16,
    pub payload: Vec<u8>,
}

impl DataBlockWrite {
    pub fn encode(&self) -> Result<Vec<u8>, WireError> {
        let count = u16::try_from(self.payload.len()).map_err(|_| WireError::TooLarge(self.payload.len()))?;
        let h = BlockHeader { magic: WRITE_MAGIC, db: self.db, start: self.start, count };
        let mut out = Vec::with_capacity(BLOCK_HEADER_LEN + self.payload.len());
        out.extend_from_slice(&h.encode());
        out.extend_from_slice(&self.payload);
        Ok(out)
    }

    pub fn decode(buf: &[u8]) -> Result<(Self, usize), WireError> {
        let h = header_from(buf)?;
        if !h.is_write() {
            return Err(WireError::BadMagic(h.magic));
        }
        let end = BLOCK_HEADER_LEN + h.count as usize;
        if buf.len() < end {
            return Err(WireError::Truncated { need: end, have: buf.len() });
        }
        Ok((Self { db: h.db, start: h.start, payload: buf[BLOCK_HEADER_LEN..end].to_vec() }, end))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DataBlockRead {
    pub db: u16,
    pub start: u16,
    pub count: u16,
}

impl DataBlockRead {
    pub fn encode(&self) -> [u8; BLOCK_HEADER_LEN] {
        BlockHeader { magic: READ_MAGIC, db: self.db, start: self.start, count: self.count }.encode()
    }

    pub fn decode(buf: &[u8]) -> Result<Self, WireError> {
        let h = header_from(buf)?;
        if h.is_write() {
            return Err(WireError::BadMagic(h.magic));
        }
        Ok(Self { db: h.db, start: h.start, count: h.count })
    }
}

fn header_from(buf: &[u8]) -> Result<BlockHeader, WireError> {
    let head: &[u8; BLOCK_HEADER_LEN] = buf
        .get(..BLOCK_HEADER_LEN)
        .and_then(|s| s.try_into().ok())
        .ok_or(WireError::Truncated { need: BLOCK_HEADER_LEN, have: buf.len() })?;
    BlockHeader::decode(head)
}

/// Motion payload: segment count (u16 BE), then per segment the turn in
/// tenths of a degree (i16 BE) and the distance in mm (u16 BE). Values are
/// rounded to the nearest wire unit.
pub fn encode_motion(vectors: &[MotionVector]) -> Result<Vec<u8>, WireError> {
    let n = u16::try_from(vectors.len()).map_err(|_| WireError::Unrepresentable("segment count"))?;
    // Whole payload must fit the u16 byte count of the block header.
    if 2 + 4 * vectors.len() > u16::MAX as usize {
        return Err(WireError::TooLarge(2 + 4 * vectors.len()));
    }
    let mut out = Vec::with_capacity(2 + 4 * vectors.len());
    out.extend_from_slice(&n.to_be_bytes());
    for v in vectors {
        let tenths = libm::round(v.turn_deg * 10.0);
        if !(tenths >= i16::MIN as f64 && tenths <= i16::MAX as f64) {
            return Err(WireError::Unrepresentable("turn angle"));
        }
        let mm = libm::round(v.dist_mm);
        if !(0.0..=u16::MAX as f64).contains(&mm) {
            return Err(WireError::Unrepresentable("segment distance"));
        }
        out.extend_from_slice(&(tenths as i16).to_be_bytes());
        out.extend_from_slice(&(mm as u16).to_be_bytes());
    }
    Ok(out)
}

pub fn decode_motion(buf: &[u8]) -> Result<Vec<MotionVector>, WireError> {
    if buf.len() < 2 {
        return Err(WireError::Truncated { need: 2, have: buf.len() });
    }
    let n = u16::from_be_bytes([buf[0], buf[1]]) as usize;
    let need = 2 + 4 * n;
    if buf.len() != need {
        return Err(WireError::LengthMismatch { declared: need, actual: buf.len() });
    }
    Ok(buf[2..]
        .chunks_exact(4)
        .map(|c| MotionVector {
            turn_deg: i16::from_be_bytes([c[0], c[1]]) as f64 / 10.0,
            dist_mm: u16::from_be_bytes([c[2], c[3]]) as f64,
        })
        .collect())
}
