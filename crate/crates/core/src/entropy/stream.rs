//! The `.lfgc` container.
//!
//! Little-endian layout: magic `LFGC`, u8 version, the fixed header fields,
//! u32 SAI count, `count + 1` u64 payload offsets relative to the first payload
//! byte, and a u64 FNV-1a checksum of everything before it. Payloads follow
//! back to back; each ends with the u64 FNV-1a of its coded bytes, so payloads
//! are never empty and the offsets are strictly increasing.

use std::fs::File;
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use super::EntropyError;
use crate::container::{BayerPhase, CalibrationParams};
use crate::util::{fnv1a64, ByteReader, ByteWriter};

pub const MAGIC: &[u8; 4] = b"LFGC";
pub const VERSION: u8 = 1;
const CHECKSUM_LEN: usize = 8;

/// How the decoder learns the color layout of every SAI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayoutSource {
    /// Rebuilt from the sensor size, calibration and Bayer phase.
    Calibration,
    /// Coded at the start of every SAI payload.
    Explicit,
}

/// Coding tools and parameters the decoder must mirror.
#[derive(Debug, Clone, PartialEq)]
pub struct CodingParams {
    pub qp: u8,
    pub block_size: u8,
    pub lifting_levels: u8,
    pub k_sparse: u8,
    pub ref_radius: u8,
    pub grad_radius: u8,
    pub intra: bool,
    /// 0 = distance graphs, 1 = learned bank.
    pub graph_mode: u8,
    pub layout: LayoutSource,
    pub delta: f64,
    pub sigma: f64,
    pub p1: f64,
    pub p2: f64,
    pub dc_threshold: f64,
    pub dc_p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamHeader {
    pub version: u8,
    pub sensor_width: u32,
    pub sensor_height: u32,
    pub bit_depth: u8,
    pub bayer_phase: BayerPhase,
    pub calibration: CalibrationParams,
    pub coding: CodingParams,
    /// FNV-1a 64 of the serialized bank, 0 for distance graphs.
    pub bank_hash: u64,
    /// `sai_count + 1` offsets of the payloads relative to the payload area.
    pub offsets: Vec<u64>,
}

impl StreamHeader {
    pub fn sai_count(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    /// Serialized header length in bytes.
    pub fn byte_len(&self) -> usize {
        FIXED_LEN + 4 + 8 * self.offsets.len() + CHECKSUM_LEN
    }

    pub fn payload_range(&self, index: usize) -> Result<(u64, u64), EntropyError> {
        if index + 1 >= self.offsets.len() {
            return Err(EntropyError::OffsetOutOfRange(format!(
                "SAI {index} of {}",
                self.sai_count()
            )));
        }
        Ok((self.offsets[index], self.offsets[index + 1]))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.bytes(MAGIC);
        w.u8(self.version);
        w.u32(self.sensor_width);
        w.u32(self.sensor_height);
        w.u8(self.bit_depth);
        w.u8(self.bayer_phase.code());
        let cal = &self.calibration;
        cal.affine.iter().for_each(|&a| w.f64(a));
        w.f64(cal.macro_pixel_pitch);
        w.f64(cal.row_offset);
        for v in [cal.views_u, cal.views_v, cal.sai_width, cal.sai_height] {
            w.u32(v as u32);
        }
        let c = &self.coding;
        for b in [
            c.qp,
            c.block_size,
            c.lifting_levels,
            c.k_sparse,
            c.ref_radius,
            c.grad_radius,
            c.intra as u8,
            c.graph_mode,
        ] {
            w.u8(b);
        }
        w.u8(match c.layout {
            LayoutSource::Calibration => 0,
            LayoutSource::Explicit => 1,
        });
        for f in [c.delta, c.sigma, c.p1, c.p2, c.dc_threshold, c.dc_p] {
            w.f64(f);
        }
        w.u64(self.bank_hash);
        debug_assert_eq!(w.len(), FIXED_LEN);
        w.u32(self.sai_count() as u32);
        self.offsets.iter().for_each(|&o| w.u64(o));
        let sum = fnv1a64(&w.buf);
        w.u64(sum);
        w.into_inner()
    }

    /// Parses a header from the front of `bytes`; returns it with its length.
    pub fn from_bytes(bytes: &[u8]) -> Result<(Self, usize), EntropyError> {
        let mut r = ByteReader::new(bytes);
        let t = EntropyError::TruncatedStream;
        if r.take(4).ok_or(t.clone())? != MAGIC {
            return Err(EntropyError::BadMagic);
        }
        let version = r.u8().ok_or(t.clone())?;
        if version != VERSION {
            return Err(EntropyError::VersionUnsupported(version));
        }
        let fixed = bytes.get(..FIXED_LEN).ok_or(t.clone())?;
        let mut r = ByteReader::new(&fixed[5..]);
        let sensor_width = r.u32().unwrap();
        let sensor_height = r.u32().unwrap();
        let bit_depth = r.u8().unwrap();
        let phase = r.u8().unwrap();
        let mut affine = [0.0; 6];
        affine.iter_mut().for_each(|a| *a = r.f64().unwrap());
        let macro_pixel_pitch = r.f64().unwrap();
        let row_offset = r.f64().unwrap();
        let mut dims = [0usize; 4];
        dims.iter_mut().for_each(|d| *d = r.u32().unwrap() as usize);
        let mut small = [0u8; 9];
        small.iter_mut().for_each(|b| *b = r.u8().unwrap());
        let mut floats = [0.0; 6];
        floats.iter_mut().for_each(|f| *f = r.f64().unwrap());
        let bank_hash = r.u64().unwrap();

        let mut r = ByteReader::new(&bytes[FIXED_LEN..]);
        let count = r.u32().ok_or(t.clone())? as usize;
        let table_len = count
            .checked_add(1)
            .and_then(|c| c.checked_mul(8))
            .ok_or(t.clone())?;
        if r.remaining() < table_len + CHECKSUM_LEN {
            return Err(t);
        }
        let offsets: Vec<u64> = (0..=count).map(|_| r.u64().unwrap()).collect();
        let len = FIXED_LEN + 4 + table_len;
        let stored = r.u64().unwrap();
        if stored != fnv1a64(&bytes[..len]) {
            return Err(EntropyError::ChecksumMismatch("header".into()));
        }

        let bayer_phase = BayerPhase::from_code(phase)
            .ok_or_else(|| EntropyError::Malformed(format!("Bayer phase {phase}")))?;
        let layout = match small[8] {
            0 => LayoutSource::Calibration,
            1 => LayoutSource::Explicit,
            v => return Err(EntropyError::Malformed(format!("layout source {v}"))),
        };
        if offsets[0] != 0
            || offsets
                .windows(2)
                .any(|w| w[1] < w[0] + CHECKSUM_LEN as u64)
        {
            return Err(EntropyError::OffsetOutOfRange(
                "offsets are not strictly increasing".into(),
            ));
        }
        let [views_u, views_v, sai_width, sai_height] = dims;
        let calibration = CalibrationParams {
            affine,
            macro_pixel_pitch,
            row_offset,
            views_u,
            views_v,
            sai_width,
            sai_height,
        };
        let [qp, block_size, lifting_levels, k_sparse, ref_radius, grad_radius, intra, graph_mode, _] =
            small;
        let [delta, sigma, p1, p2, dc_threshold, dc_p] = floats;
        let coding = CodingParams {
            qp,
            block_size,
            lifting_levels,
            k_sparse,
            ref_radius,
            grad_radius,
            intra: intra != 0,
            graph_mode,
            layout,
            delta,
            sigma,
            p1,
            p2,
            dc_threshold,
            dc_p,
        };
        let header = Self {
            version,
            sensor_width,
            sensor_height,
            bit_depth,
            bayer_phase,
            calibration,
            coding,
            bank_hash,
            offsets,
        };
        Ok((header, len + CHECKSUM_LEN))
    }
}

/// Magic, version, then the fields up to and including the bank hash.
const FIXED_LEN: usize = 4 + 1 + 4 + 4 + 1 + 1 + 8 * 8 + 4 * 4 + 9 + 6 * 8 + 8;

/// Offsets table for payloads of the given coded lengths (checksums included).
pub fn payload_offsets(lengths: impl IntoIterator<Item = usize>) -> Vec<u64> {
    let mut offsets = vec![0u64];
    for len in lengths {
        let last = *offsets.last().unwrap();
        offsets.push(last + (len + CHECKSUM_LEN) as u64);
    }
    offsets
}

/// Serializes a full stream. `header.offsets` is recomputed from `payloads`.
pub fn stream_to_bytes(header: &StreamHeader, payloads: &[Vec<u8>]) -> Vec<u8> {
    let header = StreamHeader {
        offsets: payload_offsets(payloads.iter().map(Vec::len)),
        ..header.clone()
    };
    let mut out = header.to_bytes();
    for p in payloads {
        out.extend_from_slice(p);
        out.extend_from_slice(&fnv1a64(p).to_le_bytes());
    }
    out
}

fn verify_payload(index: usize, framed: &[u8]) -> Result<Vec<u8>, EntropyError> {
    let (body, sum) = framed.split_at(framed.len() - CHECKSUM_LEN);
    if u64::from_le_bytes(sum.try_into().unwrap()) != fnv1a64(body) {
        return Err(EntropyError::ChecksumMismatch(format!(
            "payload of SAI {index}"
        )));
    }
    Ok(body.to_vec())
}

/// Parses a full stream into the header and the coded payloads.
pub fn stream_from_bytes(bytes: &[u8]) -> Result<(StreamHeader, Vec<Vec<u8>>), EntropyError> {
    let (header, start) = StreamHeader::from_bytes(bytes)?;
    let area = &bytes[start..];
    if *header.offsets.last().unwrap() != area.len() as u64 {
        return Err(EntropyError::OffsetOutOfRange(format!(
            "payload table covers {} bytes, stream has {}",
            header.offsets.last().unwrap(),
            area.len()
        )));
    }
    let payloads = (0..header.sai_count())
        .map(|i| {
            let (a, b) = header.payload_range(i)?;
            verify_payload(i, &area[a as usize..b as usize])
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((header, payloads))
}

pub fn write_stream(
    path: impl AsRef<Path>,
    header: &StreamHeader,
    payloads: &[Vec<u8>],
) -> Result<(), EntropyError> {
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(&stream_to_bytes(header, payloads))?;
    f.flush()?;
    Ok(())
}

pub fn read_stream(path: impl AsRef<Path>) -> Result<(StreamHeader, Vec<Vec<u8>>), EntropyError> {
    stream_from_bytes(&std::fs::read(path)?)
}

/// Random access reader: parses the header once and then fetches single
/// payloads by seeking, counting every byte it reads.
#[derive(Debug)]
pub struct StreamReader<R> {
    inner: R,
    header: StreamHeader,
    payload_start: u64,
    bytes_read: u64,
}

impl StreamReader<File> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, EntropyError> {
        Self::new(File::open(path)?)
    }
}

impl<R: Read + Seek> StreamReader<R> {
    pub fn new(mut inner: R) -> Result<Self, EntropyError> {
        let mut head = vec![0u8; FIXED_LEN + 4];
        inner
            .read_exact(&mut head)
            .map_err(|_| EntropyError::TruncatedStream)?;
        if &head[..4] != MAGIC {
            return Err(EntropyError::BadMagic);
        }
        let count = u32::from_le_bytes(head[FIXED_LEN..].try_into().unwrap()) as u64;
        let table = (count + 1)
            .checked_mul(8)
            .ok_or(EntropyError::TruncatedStream)?
            + CHECKSUM_LEN as u64;
        let total_len = inner.seek(SeekFrom::End(0))?;
        if (FIXED_LEN as u64 + 4).saturating_add(table) > total_len {
            return Err(EntropyError::TruncatedStream);
        }
        inner.seek(SeekFrom::Start(FIXED_LEN as u64 + 4))?;
        let mut rest = vec![0u8; table as usize];
        inner
            .read_exact(&mut rest)
            .map_err(|_| EntropyError::TruncatedStream)?;
        head.extend_from_slice(&rest);
        let (header, len) = StreamHeader::from_bytes(&head)?;
        if len as u64 + header.offsets.last().unwrap() != total_len {
            return Err(EntropyError::OffsetOutOfRange(
                "payload table does not match the file size".into(),
            ));
        }
        Ok(Self {
            inner,
            header,
            payload_start: len as u64,
            bytes_read: head.len() as u64,
        })
    }

    pub fn header(&self) -> &StreamHeader {
        &self.header
    }

    /// Total bytes read from the underlying source so far.
    pub fn bytes_read(&self) -> u64 {
        self.bytes_read
    }

    /// Reads and verifies the coded payload of SAI `index`.
    pub fn payload(&mut self, index: usize) -> Result<Vec<u8>, EntropyError> {
        let (a, b) = self.header.payload_range(index)?;
        self.inner.seek(SeekFrom::Start(self.payload_start + a))?;
        let mut framed = vec![0u8; (b - a) as usize];
        self.inner
            .read_exact(&mut framed)
            .map_err(|_| EntropyError::TruncatedStream)?;
        self.bytes_read += b - a;
        verify_payload(index, &framed)
    }
}
