//! Binary frames for bulk data and text envelopes for control messages.
//!
//! Every frame starts with an 8-byte header:
//!
//! ```text
//! 0..4  magic "JSCT"
//! 4     version (1)
//! 5     frame type (1 = points chunk, 2 = selection, 3 = camera)
//! 6..8  reserved, zero
//! ```
//!
//! All multi-byte values are little-endian. Points chunk payload:
//!
//! ```text
//! u32 row_count
//! u16 col_count
//! col_count x { u8 name_len, name (UTF-8), u8 dtype }
//! column data, tightly packed, in descriptor order
//! ```
//!
//! dtypes: 1 = f32, 2 = f64, 3 = u8 category code, 4 = u32 category code.
//! The first two columns are always the x and y coordinates as f32.
//!
//! Selection payload: `u32 count` then `count` strictly ascending `u32`
//! row indices. Camera payload: four `f64` (x_min, x_max, y_min, y_max).

use serde::{Deserialize, Serialize};

use crate::data::{Categorical, Column, PointTable};
use crate::error::{Error, Result};
use crate::index::Extent;
use crate::selection::SelectionSet;
use crate::view::Camera;

pub const MAGIC: [u8; 4] = *b"JSCT";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum FrameType {
    PointsChunk = 1,
    Selection = 2,
    Camera = 3,
}

impl TryFrom<u8> for FrameType {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(FrameType::PointsChunk),
            2 => Ok(FrameType::Selection),
            3 => Ok(FrameType::Camera),
            other => Err(Error::Protocol(format!("unknown frame type {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Dtype {
    F32 = 1,
    F64 = 2,
    U8 = 3,
    U32 = 4,
}

impl Dtype {
    fn width(self) -> usize {
        match self {
            Dtype::F32 | Dtype::U32 => 4,
            Dtype::F64 => 8,
            Dtype::U8 => 1,
        }
    }
}

impl TryFrom<u8> for Dtype {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Dtype::F32),
            2 => Ok(Dtype::F64),
            3 => Ok(Dtype::U8),
            4 => Ok(Dtype::U32),
            other => Err(Error::Protocol(format!("unknown dtype {other}"))),
        }
    }
}

fn header(frame_type: FrameType, payload_len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + payload_len);
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(frame_type as u8);
    out.extend_from_slice(&[0, 0]);
    out
}

/// Validates the frame header and returns the frame type.
pub fn peek_frame_type(frame: &[u8]) -> Result<FrameType> {
    if frame.len() < HEADER_LEN {
        return Err(Error::Truncated {
            needed: HEADER_LEN,
            available: frame.len(),
        });
    }
    if frame[0..4] != MAGIC {
        return Err(Error::Protocol(format!("bad magic {:02x?}", &frame[0..4])));
    }
    if frame[4] != VERSION {
        return Err(Error::Protocol(format!("unsupported version {}", frame[4])));
    }
    if frame[6..8] != [0, 0] {
        return Err(Error::Protocol("reserved header bytes must be zero".into()));
    }
    FrameType::try_from(frame[5])
}

fn expect_type(frame: &[u8], expected: FrameType) -> Result<Reader<'_>> {
    let actual = peek_frame_type(frame)?;
    if actual != expected {
        return Err(Error::Protocol(format!(
            "expected {expected:?} frame, got {actual:?}"
        )));
    }
    Ok(Reader {
        buf: frame,
        pos: HEADER_LEN,
    })
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let s = &self.buf[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Truncated {
                needed: self.pos.saturating_add(n),
                available: self.buf.len(),
            }),
        }
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Protocol(format!(
                "{} trailing bytes after payload",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

/// Decoded column values of a points chunk.
#[derive(Debug, Clone, PartialEq)]
pub enum ChunkData {
    F32(Vec<f32>),
    F64(Vec<f64>),
    U8(Vec<u8>),
    U32(Vec<u32>),
}

impl ChunkData {
    pub fn dtype(&self) -> Dtype {
        match self {
            ChunkData::F32(_) => Dtype::F32,
            ChunkData::F64(_) => Dtype::F64,
            ChunkData::U8(_) => Dtype::U8,
            ChunkData::U32(_) => Dtype::U32,
        }
    }

    fn codes(&self) -> Option<Vec<u32>> {
        match self {
            ChunkData::U8(v) => Some(v.iter().map(|&c| c as u32).collect()),
            ChunkData::U32(v) => Some(v.clone()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkColumn {
    pub name: String,
    pub data: ChunkData,
}

/// A decoded points chunk. `columns[0]` and `columns[1]` are x and y.
#[derive(Debug, Clone, PartialEq)]
pub struct PointsChunk {
    pub row_count: usize,
    pub columns: Vec<ChunkColumn>,
}

impl PointsChunk {
    pub fn x(&self) -> &[f32] {
        match &self.columns[0].data {
            ChunkData::F32(v) => v,
            _ => unreachable!("decoder guarantees f32 x"),
        }
    }

    pub fn y(&self) -> &[f32] {
        match &self.columns[1].data {
            ChunkData::F32(v) => v,
            _ => unreachable!("decoder guarantees f32 y"),
        }
    }

    /// Rebuilds a table from the chunk's auxiliary columns (everything after
    /// x/y). Categorical labels are not carried in frames; they come from
    /// `labels` (sent in the dataset description).
    pub fn to_table(&self, x_column: &str, y_column: &str, labels: &dyn Fn(&str) -> Option<Vec<String>>) -> Result<PointTable> {
        let mut columns = Vec::with_capacity(self.columns.len() - 2);
        for col in &self.columns[2..] {
            let column = match &col.data {
                ChunkData::F64(v) => Column::real(v.clone()),
                ChunkData::F32(v) => Column::real(v.iter().map(|&f| f as f64).collect()),
                data => {
                    let codes = data.codes().expect("code dtype");
                    let labels = labels(&col.name).ok_or_else(|| {
                        Error::Protocol(format!("no labels for categorical column `{}`", col.name))
                    })?;
                    Column::Categorical(Categorical::new(codes, labels)?)
                }
            };
            columns.push((col.name.clone(), column));
        }
        PointTable::new(x_column, y_column, columns)
    }
}

fn check_name(name: &str) -> Result<()> {
    if name.len() > 255 {
        return Err(Error::EncodingLimit(format!(
            "column name is {} bytes, limit 255",
            name.len()
        )));
    }
    Ok(())
}

/// Encodes x/y (as f32) followed by the named columns. Real columns are sent
/// as f64; categorical columns as u8 codes when they have at most 255
/// labels, u32 otherwise.
pub fn encode_points_chunk(table: &PointTable, rows: Option<&SelectionSet>, columns: &[&str]) -> Result<Vec<u8>> {
    if columns.len() + 2 > u16::MAX as usize {
        return Err(Error::EncodingLimit(format!(
            "{} columns exceed the 65535 column limit",
            columns.len() + 2
        )));
    }
    if let Some(rows) = rows {
        rows.validate_for(table.row_count())?;
    }
    let row_count = rows.map_or(table.row_count(), SelectionSet::len);
    let row_count_u32 = u32::try_from(row_count)
        .map_err(|_| Error::EncodingLimit(format!("{row_count} rows exceed u32")))?;

    let mut descriptors: Vec<(&str, Dtype, Option<&Column>)> = vec![
        (table.x_name(), Dtype::F32, None),
        (table.y_name(), Dtype::F32, None),
    ];
    for &name in columns {
        let col = table.column(name)?;
        let dtype = match col {
            Column::Real(_) => Dtype::F64,
            Column::Categorical(c) if c.label_count() <= 255 => Dtype::U8,
            Column::Categorical(_) => Dtype::U32,
        };
        descriptors.push((name, dtype, Some(col)));
    }
    for (name, _, _) in &descriptors {
        check_name(name)?;
    }

    let data_len: usize = descriptors.iter().map(|(_, d, _)| d.width() * row_count).sum();
    let desc_len: usize = descriptors.iter().map(|(n, _, _)| n.len() + 2).sum();
    let mut out = header(FrameType::PointsChunk, 6 + desc_len + data_len);
    out.extend_from_slice(&row_count_u32.to_le_bytes());
    out.extend_from_slice(&(descriptors.len() as u16).to_le_bytes());
    for (name, dtype, _) in &descriptors {
        out.push(name.len() as u8);
        out.extend_from_slice(name.as_bytes());
        out.push(*dtype as u8);
    }

    let row_iter = || -> Box<dyn Iterator<Item = usize> + '_> {
        match rows {
            Some(sel) => Box::new(sel.indices().iter().map(|&r| r as usize)),
            None => Box::new(0..table.row_count()),
        }
    };
    for (i, (_, dtype, col)) in descriptors.iter().enumerate() {
        match (col, dtype) {
            (None, _) => {
                let coords = if i == 0 { table.x() } else { table.y() };
                for r in row_iter() {
                    out.extend_from_slice(&(coords[r] as f32).to_le_bytes());
                }
            }
            (Some(Column::Real(v)), _) => {
                for r in row_iter() {
                    out.extend_from_slice(&v[r].to_le_bytes());
                }
            }
            (Some(Column::Categorical(c)), Dtype::U8) => {
                for r in row_iter() {
                    out.push(c.codes()[r] as u8);
                }
            }
            (Some(Column::Categorical(c)), _) => {
                for r in row_iter() {
                    out.extend_from_slice(&c.codes()[r].to_le_bytes());
                }
            }
        }
    }
    Ok(out)
}

pub fn decode_points_chunk(frame: &[u8]) -> Result<PointsChunk> {
    let mut rd = expect_type(frame, FrameType::PointsChunk)?;
    let row_count = rd.u32()? as usize;
    let col_count = rd.u16()? as usize;
    if col_count < 2 {
        return Err(Error::Protocol(format!(
            "points chunk needs x and y columns, got {col_count} columns"
        )));
    }
    let mut descriptors = Vec::with_capacity(col_count);
    for i in 0..col_count {
        let len = rd.u8()? as usize;
        let name = std::str::from_utf8(rd.take(len)?)
            .map_err(|e| Error::Protocol(format!("column name is not UTF-8: {e}")))?
            .to_owned();
        let dtype = Dtype::try_from(rd.u8()?)?;
        if i < 2 && dtype != Dtype::F32 {
            return Err(Error::Protocol(format!(
                "coordinate column `{name}` must be f32, got {dtype:?}"
            )));
        }
        descriptors.push((name, dtype));
    }
    // Check the total size up front so a corrupt row count cannot trigger a
    // huge allocation.
    let needed = descriptors
        .iter()
        .try_fold(0usize, |acc, (_, d)| acc.checked_add(d.width().checked_mul(row_count)?))
        .and_then(|n| n.checked_add(rd.pos))
        .unwrap_or(usize::MAX);
    if needed > frame.len() {
        return Err(Error::Truncated {
            needed,
            available: frame.len(),
        });
    }
    let mut columns = Vec::with_capacity(col_count);
    for (name, dtype) in descriptors {
        let bytes = rd.take(dtype.width() * row_count)?;
        let data = match dtype {
            Dtype::F32 => ChunkData::F32(
                bytes.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect(),
            ),
            Dtype::F64 => ChunkData::F64(
                bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect(),
            ),
            Dtype::U8 => ChunkData::U8(bytes.to_vec()),
            Dtype::U32 => ChunkData::U32(
                bytes.chunks_exact(4).map(|b| u32::from_le_bytes(b.try_into().unwrap())).collect(),
            ),
        };
        columns.push(ChunkColumn { name, data });
    }
    rd.finish()?;
    Ok(PointsChunk { row_count, columns })
}

pub fn encode_selection(sel: &SelectionSet) -> Vec<u8> {
    let mut out = header(FrameType::Selection, 4 + 4 * sel.len());
    out.extend_from_slice(&(sel.len() as u32).to_le_bytes());
    for &i in sel.indices() {
        out.extend_from_slice(&i.to_le_bytes());
    }
    out
}

pub fn decode_selection(frame: &[u8]) -> Result<SelectionSet> {
    let mut rd = expect_type(frame, FrameType::Selection)?;
    let count = rd.u32()? as usize;
    let bytes = rd.take(count.saturating_mul(4))?;
    rd.finish()?;
    let indices: Vec<u32> = bytes
        .chunks_exact(4)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    SelectionSet::from_sorted(indices)
        .map_err(|_| Error::Protocol("selection indices are not strictly ascending".into()))
}

pub fn encode_camera(cam: &Camera) -> Vec<u8> {
    let e = cam.extent();
    let mut out = header(FrameType::Camera, 32);
    for v in [e.x_min, e.x_max, e.y_min, e.y_max] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_camera(frame: &[u8]) -> Result<Camera> {
    let mut rd = expect_type(frame, FrameType::Camera)?;
    let e = Extent {
        x_min: rd.f64()?,
        x_max: rd.f64()?,
        y_min: rd.f64()?,
        y_max: rd.f64()?,
    };
    rd.finish()?;
    Camera::new(e).map_err(|err| Error::Protocol(format!("invalid camera: {err}")))
}

/// Control message kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlType {
    Hello,
    DatasetInfo,
    SetEncoding,
    ViewUpdate,
    SelectionUpdate,
    HoverUpdate,
    Error,
}

/// A text control-plane record, serialized as a JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlMessage {
    #[serde(rename = "type")]
    pub kind: ControlType,
    pub session: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub view: Option<String>,
    #[serde(default)]
    pub body: serde_json::Value,
}

impl ControlMessage {
    pub fn new(kind: ControlType, session: impl Into<String>, view: Option<String>, body: serde_json::Value) -> Self {
        ControlMessage {
            kind,
            session: session.into(),
            view,
            body,
        }
    }

    pub fn error(session: impl Into<String>, view: Option<String>, message: impl Into<String>) -> Self {
        ControlMessage::new(
            ControlType::Error,
            session,
            view,
            serde_json::json!({ "message": message.into() }),
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Protocol(format!("malformed control message: {e}")))
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string(self).expect("control messages serialize")
    }
}
