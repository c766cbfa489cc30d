//! Binarization of quantized levels: a per-band significance flag, then per
//! level a zero flag, a sign and an order-0 Exp-Golomb magnitude, all context
//! coded with one context set per band.

use super::range::{BitModel, RangeDecoder, RangeEncoder};
use super::EntropyError;

/// Context sets: low band, level-2 high band, level-1 high band.
pub const BAND_CONTEXTS: usize = 3;
/// Longest Exp-Golomb prefix accepted by the decoder.
pub const MAX_PREFIX: usize = 48;
const PREFIX_CONTEXTS: usize = 24;
/// Suffix bits of prefixes up to this length are context coded, longer ones
/// are sent as direct bits.
const MODELLED_SUFFIX: usize = 16;

#[derive(Debug, Clone)]
struct BandModels {
    /// Set when the band holds at least one nonzero level.
    significant: BitModel,
    /// Zero flag, indexed by whether the previous level of the band was zero.
    zero: [BitModel; 2],
    sign: BitModel,
    prefix: [BitModel; PREFIX_CONTEXTS],
    suffix: Vec<Vec<BitModel>>,
}

impl Default for BandModels {
    fn default() -> Self {
        Self {
            significant: Default::default(),
            zero: Default::default(),
            sign: Default::default(),
            prefix: Default::default(),
            suffix: (0..=MODELLED_SUFFIX)
                .map(|k| vec![BitModel::default(); k])
                .collect(),
        }
    }
}

/// Context set for band `k` of a scan with `bands` bands: the low band has its
/// own set, level-1 high bands use the last set and all coarser high bands
/// share the middle one.
pub fn band_context(k: usize, bands: usize) -> usize {
    if k == 0 {
        0
    } else if bands - k == 1 {
        2
    } else {
        1
    }
}

fn check_bands(levels: usize, bands: &[usize]) -> Result<(), EntropyError> {
    let total: usize = bands.iter().sum();
    if total != levels {
        return Err(EntropyError::CountMismatch {
            expected: total,
            found: levels,
        });
    }
    Ok(())
}

/// Adaptive level coder shared by all blocks of one SAI payload.
#[derive(Debug, Clone)]
pub struct LevelWriter {
    enc: RangeEncoder,
    models: Vec<BandModels>,
}

impl Default for LevelWriter {
    fn default() -> Self {
        Self::new()
    }
}

impl LevelWriter {
    pub fn new() -> Self {
        Self {
            enc: RangeEncoder::new(),
            models: vec![BandModels::default(); BAND_CONTEXTS],
        }
    }

    /// Underlying coder, for side information that shares the stream.
    pub fn coder(&mut self) -> &mut RangeEncoder {
        &mut self.enc
    }

    /// Codes one scan-ordered block whose band lengths are `bands`.
    pub fn write_block(&mut self, levels: &[i64], bands: &[usize]) -> Result<(), EntropyError> {
        check_bands(levels.len(), bands)?;
        let mut start = 0;
        for (k, &len) in bands.iter().enumerate() {
            let m = &mut self.models[band_context(k, bands.len())];
            let band = &levels[start..start + len];
            start += len;
            if len == 0 {
                continue;
            }
            let significant = band.iter().any(|&l| l != 0);
            self.enc.encode(&mut m.significant, significant);
            if !significant {
                continue;
            }
            let mut prev_zero = 0;
            for &level in band {
                let zero = level == 0;
                self.enc.encode(&mut m.zero[prev_zero], !zero);
                prev_zero = zero as usize;
                if zero {
                    continue;
                }
                self.enc.encode(&mut m.sign, level < 0);
                // Exp-Golomb of magnitude - 1: prefix of k ones and a zero,
                // then the k low bits of `magnitude`.
                let v = level.unsigned_abs();
                let k = 63 - v.leading_zeros() as usize;
                for i in 0..=k {
                    self.enc
                        .encode(&mut m.prefix[i.min(PREFIX_CONTEXTS - 1)], i < k);
                }
                for j in (0..k).rev() {
                    let bit = v >> j & 1 == 1;
                    if k <= MODELLED_SUFFIX {
                        self.enc.encode(&mut m.suffix[k][j], bit);
                    } else {
                        self.enc.encode_direct(bit);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn finish(self) -> Vec<u8> {
        self.enc.finish()
    }
}

/// Mirror of [`LevelWriter`].
#[derive(Debug, Clone)]
pub struct LevelReader<'a> {
    dec: RangeDecoder<'a>,
    models: Vec<BandModels>,
    len: usize,
}

impl<'a> LevelReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Result<Self, EntropyError> {
        Ok(Self {
            dec: RangeDecoder::new(bytes)?,
            models: vec![BandModels::default(); BAND_CONTEXTS],
            len: bytes.len(),
        })
    }

    pub fn coder(&mut self) -> &mut RangeDecoder<'a> {
        &mut self.dec
    }

    pub fn read_block(&mut self, bands: &[usize]) -> Result<Vec<i64>, EntropyError> {
        let mut out = Vec::with_capacity(bands.iter().sum());
        for (k, &len) in bands.iter().enumerate() {
            let m = &mut self.models[band_context(k, bands.len())];
            if len == 0 {
                continue;
            }
            if !self.dec.decode(&mut m.significant)? {
                out.extend(std::iter::repeat_n(0, len));
                continue;
            }
            let mut prev_zero = 0;
            for _ in 0..len {
                let nonzero = self.dec.decode(&mut m.zero[prev_zero])?;
                prev_zero = (!nonzero) as usize;
                if !nonzero {
                    out.push(0);
                    continue;
                }
                let negative = self.dec.decode(&mut m.sign)?;
                let mut k = 0;
                while self.dec.decode(&mut m.prefix[k.min(PREFIX_CONTEXTS - 1)])? {
                    k += 1;
                    if k > MAX_PREFIX {
                        return Err(EntropyError::Malformed(format!(
                            "Exp-Golomb prefix longer than {MAX_PREFIX}"
                        )));
                    }
                }
                let mut v: u64 = 1;
                for j in (0..k).rev() {
                    let bit = if k <= MODELLED_SUFFIX {
                        self.dec.decode(&mut m.suffix[k][j])?
                    } else {
                        self.dec.decode_direct()?
                    };
                    v = v << 1 | bit as u64;
                }
                let v = v as i64;
                out.push(if negative { -v } else { v });
            }
        }
        Ok(out)
    }

    /// Checks that the payload held exactly the symbols that were read.
    pub fn finish(self) -> Result<(), EntropyError> {
        if self.dec.position() != self.len {
            return Err(EntropyError::CountMismatch {
                expected: self.len,
                found: self.dec.position(),
            });
        }
        Ok(())
    }
}

/// Codes a single block into a self-contained byte string.
pub fn encode_levels(levels: &[i64], bands: &[usize]) -> Result<Vec<u8>, EntropyError> {
    let mut w = LevelWriter::new();
    w.write_block(levels, bands)?;
    Ok(w.finish())
}

pub fn decode_levels(
    bytes: &[u8],
    expected_count: usize,
    bands: &[usize],
) -> Result<Vec<i64>, EntropyError> {
    check_bands(expected_count, bands)?;
    let mut r = LevelReader::new(bytes)?;
    let out = r.read_block(bands)?;
    r.finish()?;
    Ok(out)
}
