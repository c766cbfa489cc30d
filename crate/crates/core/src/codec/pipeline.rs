//! Encode and decode of whole light fields.

use std::io::{Read, Seek};

use rayon::prelude::*;

use super::block::{run_sai, BlockStats, BlockTrace, CodingContext, LevelSource, PlanCache};
use super::config::{CodecConfig, GraphMode};
use super::demosaic::demosaic_sai;
use super::layout::{derived_layouts, matches_layout, read_layout, write_layout, SaiLayout};
use super::CodecError;
use crate::container::{
    calibrate, compose, decompose, restore_raw, CalibrationMap, CalibrationParams, LightField,
    RawLensletImage, SAIArray, SparseSAI,
};
use crate::entropy::{
    stream_from_bytes, stream_to_bytes, LayoutSource, LevelReader, LevelWriter, StreamHeader,
    StreamReader, VERSION,
};
use crate::graph::ModeGraphBank;

/// Encoder-side view of one SAI.
#[derive(Debug, Clone, PartialEq)]
pub struct SaiReport {
    pub blocks: Vec<BlockStats>,
    pub traces: Vec<BlockTrace>,
    /// Coded bytes of the payload, without its checksum.
    pub payload_bytes: usize,
}

impl SaiReport {
    pub fn residual_energy(&self) -> f64 {
        self.blocks.iter().map(|b| b.residual_energy).sum()
    }

    pub fn high_energy(&self) -> f64 {
        self.blocks.iter().map(|b| b.high_energy).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub bytes: Vec<u8>,
    pub header: StreamHeader,
    /// What the decoder will reconstruct.
    pub reconstruction: SAIArray,
    pub sais: Vec<SaiReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub header: StreamHeader,
    pub sais: SAIArray,
    pub traces: Vec<Vec<BlockTrace>>,
    /// Demosaicked views, when requested.
    pub full_color: Option<LightField>,
}

fn bank_hash(config: &CodecConfig, bank: Option<&ModeGraphBank>) -> u64 {
    match (config.graph_mode, bank) {
        (GraphMode::Learned, Some(b)) => b.hash(),
        _ => 0,
    }
}

/// Calibrates and decomposes a raw lenselet frame, then encodes its SAIs.
pub fn encode_raw(
    raw: &RawLensletImage,
    params: &CalibrationParams,
    bank: Option<&ModeGraphBank>,
    config: &CodecConfig,
) -> Result<Encoded, CodecError> {
    let (cal, _) = calibrate(raw, params)?;
    let arr = decompose(&cal, params)?;
    encode_array(&arr, raw.width, raw.height, bank, config)
}

/// Encodes an SAI array whose sensor is taken to be the calibrated canvas.
/// Layouts that the geometry does not predict are coded explicitly.
pub fn encode_sais(
    arr: &SAIArray,
    bank: Option<&ModeGraphBank>,
    config: &CodecConfig,
) -> Result<Encoded, CodecError> {
    encode_array(
        arr,
        arr.params.canvas_width(),
        arr.params.canvas_height(),
        bank,
        config,
    )
}

fn encode_array(
    arr: &SAIArray,
    sensor_width: usize,
    sensor_height: usize,
    bank: Option<&ModeGraphBank>,
    config: &CodecConfig,
) -> Result<Encoded, CodecError> {
    let params = &arr.params;
    let (w, h) = (params.sai_width, params.sai_height);
    if arr.sais.len() != params.view_count()
        || arr.sais.iter().any(|s| s.width != w || s.height != h)
    {
        return Err(CodecError::ShapeMismatch(
            "SAIs do not match the calibration geometry".into(),
        ));
    }
    let plans = PlanCache::default();
    let ctx = CodingContext::new(config, bank, &plans)?;
    let derived = derived_layouts(sensor_width, sensor_height, params, arr.bayer_phase)?;
    let layout = if matches_layout(arr, &derived) {
        LayoutSource::Calibration
    } else {
        LayoutSource::Explicit
    };

    let coded: Vec<(Vec<u8>, SparseSAI, SaiReport)> = if arr.occupied() == 0 {
        Vec::new()
    } else {
        arr.sais
            .par_iter()
            .map(|sai| {
                let mut writer = LevelWriter::new();
                let colors = sai.colors();
                if layout == LayoutSource::Explicit {
                    write_layout(writer.coder(), &colors, w);
                }
                let outcome = run_sai(
                    &ctx,
                    colors,
                    w,
                    h,
                    arr.bit_depth,
                    LevelSource::Encode {
                        sai,
                        writer: &mut writer,
                    },
                )?;
                let bytes = writer.finish();
                let report = SaiReport {
                    blocks: outcome.stats,
                    traces: outcome.traces,
                    payload_bytes: bytes.len(),
                };
                Ok((bytes, outcome.sai, report))
            })
            .collect::<Result<_, CodecError>>()?
    };

    let mut header = StreamHeader {
        version: VERSION,
        sensor_width: u32::try_from(sensor_width)
            .map_err(|_| CodecError::ShapeMismatch("sensor too wide".into()))?,
        sensor_height: u32::try_from(sensor_height)
            .map_err(|_| CodecError::ShapeMismatch("sensor too tall".into()))?,
        bit_depth: arr.bit_depth,
        bayer_phase: arr.bayer_phase,
        calibration: params.clone(),
        coding: config.coding_params(layout),
        bank_hash: bank_hash(config, ctx.bank),
        offsets: Vec::new(),
    };
    let mut payloads = Vec::with_capacity(coded.len());
    let mut reconstruction = SAIArray::empty(params, arr.bit_depth, arr.bayer_phase);
    let mut sais = Vec::with_capacity(coded.len());
    for (i, (bytes, sai, report)) in coded.into_iter().enumerate() {
        payloads.push(bytes);
        reconstruction.sais[i] = sai;
        sais.push(report);
    }
    let bytes = stream_to_bytes(&header, &payloads);
    header = StreamHeader::from_bytes(&bytes)?.0;
    Ok(Encoded {
        bytes,
        header,
        reconstruction,
        sais,
    })
}

/// Decoder state derived from a stream header.
struct DecodeSetup<'a> {
    config: CodecConfig,
    bank: Option<&'a ModeGraphBank>,
    layouts: Option<Vec<SaiLayout>>,
}

fn setup<'a>(
    header: &StreamHeader,
    bank: Option<&'a ModeGraphBank>,
) -> Result<DecodeSetup<'a>, CodecError> {
    let config = CodecConfig::from_coding(&header.coding)?;
    header.calibration.validate()?;
    let bank = match config.graph_mode {
        GraphMode::Distance => None,
        GraphMode::Learned => {
            let b = bank.ok_or(CodecError::MissingBank)?;
            let found = b.hash();
            if found != header.bank_hash {
                return Err(CodecError::BankMismatch {
                    expected: header.bank_hash,
                    found,
                });
            }
            Some(b)
        }
    };
    let count = header.sai_count();
    if count != 0 && count != header.calibration.view_count() {
        return Err(CodecError::ShapeMismatch(format!(
            "stream holds {count} SAIs but the geometry has {}",
            header.calibration.view_count()
        )));
    }
    let layouts = match header.coding.layout {
        LayoutSource::Calibration => Some(derived_layouts(
            header.sensor_width as usize,
            header.sensor_height as usize,
            &header.calibration,
            header.bayer_phase,
        )?),
        LayoutSource::Explicit => None,
    };
    Ok(DecodeSetup {
        config,
        bank,
        layouts,
    })
}

fn decode_payload(
    ctx: &CodingContext<'_>,
    header: &StreamHeader,
    layout: Option<&SaiLayout>,
    payload: &[u8],
) -> Result<(SparseSAI, Vec<BlockTrace>), CodecError> {
    let (w, h) = (header.calibration.sai_width, header.calibration.sai_height);
    let mut reader = LevelReader::new(payload)?;
    let layout = match layout {
        Some(l) => l.clone(),
        None => read_layout(reader.coder(), w, h)?,
    };
    let outcome = run_sai(
        ctx,
        layout,
        w,
        h,
        header.bit_depth,
        LevelSource::Decode(&mut reader),
    )?;
    reader.finish()?;
    Ok((outcome.sai, outcome.traces))
}

/// Decodes every SAI; with `demosaic` the views are also interpolated to RGB.
pub fn decode(
    bytes: &[u8],
    bank: Option<&ModeGraphBank>,
    demosaic: bool,
) -> Result<Decoded, CodecError> {
    let (header, payloads) = stream_from_bytes(bytes)?;
    let s = setup(&header, bank)?;
    let plans = PlanCache::default();
    let ctx = CodingContext::new(&s.config, s.bank, &plans)?;
    let mut sais = SAIArray::empty(&header.calibration, header.bit_depth, header.bayer_phase);
    let decoded: Vec<(SparseSAI, Vec<BlockTrace>)> = payloads
        .par_iter()
        .enumerate()
        .map(|(i, p)| decode_payload(&ctx, &header, s.layouts.as_ref().map(|l| &l[i]), p))
        .collect::<Result<_, CodecError>>()?;
    let mut traces = Vec::with_capacity(decoded.len());
    for (i, (sai, t)) in decoded.into_iter().enumerate() {
        sais.sais[i] = sai;
        traces.push(t);
    }
    let full_color = demosaic.then(|| demosaic_decoded(&sais, &traces, &s.config));
    Ok(Decoded {
        header,
        sais,
        traces,
        full_color,
    })
}

fn demosaic_decoded(
    sais: &SAIArray,
    traces: &[Vec<BlockTrace>],
    config: &CodecConfig,
) -> LightField {
    let p = &sais.params;
    let mut lf = LightField::filled(
        p.views_u,
        p.views_v,
        p.sai_width,
        p.sai_height,
        sais.bit_depth,
        [0; 3],
    );
    let views: Vec<Vec<[u16; 3]>> = sais
        .sais
        .par_iter()
        .enumerate()
        .map(|(i, sai)| {
            let kernels: Vec<_> = traces
                .get(i)
                .map(|t| t.iter().map(|b| b.kernel).collect())
                .unwrap_or_default();
            demosaic_sai(sai, &kernels, config)
        })
        .collect();
    let n = lf.view_len();
    for (i, v) in views.into_iter().enumerate() {
        lf.data[i * n..(i + 1) * n].copy_from_slice(&v);
    }
    lf
}

/// Decodes SAI `index` alone, reading only its payload from `reader`.
pub fn decode_view<R: Read + Seek>(
    reader: &mut StreamReader<R>,
    index: usize,
    bank: Option<&ModeGraphBank>,
) -> Result<(SparseSAI, Vec<BlockTrace>), CodecError> {
    let header = reader.header().clone();
    let s = setup(&header, bank)?;
    let payload = reader.payload(index)?;
    let plans = PlanCache::default();
    let ctx = CodingContext::new(&s.config, s.bank, &plans)?;
    decode_payload(
        &ctx,
        &header,
        s.layouts.as_ref().map(|l| &l[index]),
        &payload,
    )
}

/// Puts decoded SAIs back on the sensor grid of the stream. Sensor samples the
/// calibration dropped are filled with `fill`.
pub fn restore_sensor(
    header: &StreamHeader,
    sais: &SAIArray,
    fill: u16,
) -> Result<RawLensletImage, CodecError> {
    let map = CalibrationMap::new(
        header.sensor_width as usize,
        header.sensor_height as usize,
        &header.calibration,
    )?;
    let cal = compose(sais)?;
    Ok(restore_raw(&cal, &map, fill)?)
}
