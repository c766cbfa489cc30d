//! Encode/decode orchestration, receiver-side demosaicking and metrics.

mod block;
mod config;
mod demosaic;
mod layout;
mod metrics;
mod pipeline;

pub use block::{BlockStats, BlockTrace, PlanCache, DISTANCE_NEIGHBOURS};
pub use config::{CodecConfig, GraphMode};
pub use demosaic::{demosaic_array, demosaic_sai, MIN_WINDOW};
pub use layout::{derived_layouts, read_layout, write_layout, SaiLayout};
pub use metrics::{
    bits_per_pixel, evaluate, psnr, BppBasis, Metrics, RdRow, ViewPsnr, CSV_HEADER, PSNR_CAP,
};
pub use pipeline::{
    decode, decode_view, encode_raw, encode_sais, restore_sensor, Decoded, Encoded, SaiReport,
};

use thiserror::Error;

use crate::container::ContainerError;
use crate::entropy::EntropyError;
use crate::glt::GltError;
use crate::graph::GraphError;

#[derive(Debug, Error, PartialEq)]
pub enum CodecError {
    #[error(transparent)]
    Container(#[from] ContainerError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Glt(#[from] GltError),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error("stream was coded with bank {expected:016x} but bank {found:016x} was supplied")]
    BankMismatch { expected: u64, found: u64 },
    #[error("learned graphs need a trained bank")]
    MissingBank,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::container::{
        calibrate, decompose, generate_scene, synthesize_lenselet, BayerPhase, CalibrationParams,
        Color, SAIArray, SceneKind, SparseSAI, SynthOptions,
    };
    use crate::entropy::{LayoutSource, StreamReader};
    use crate::graph::{train_bank, LearnConfig, ModeGraphBank};
    use std::io::Cursor;

    fn edge_sais(
        views: usize,
        side: usize,
        seed: u64,
    ) -> (
        SAIArray,
        crate::container::RawLensletImage,
        CalibrationParams,
    ) {
        let params = CalibrationParams::identity(views, views, side, side);
        let scene = generate_scene(SceneKind::Edges, &params, 10, seed);
        let raw = synthesize_lenselet(
            &scene,
            &params,
            SynthOptions {
                seed,
                ..SynthOptions::default()
            },
        )
        .unwrap();
        let (cal, _) = calibrate(&raw, &params).unwrap();
        (decompose(&cal, &params).unwrap(), raw, params)
    }

    fn small_bank(arr: &SAIArray) -> ModeGraphBank {
        let cfg = LearnConfig {
            max_sweeps: 40,
            ..LearnConfig::default()
        };
        train_bank(
            &arr.sais,
            &CodecConfig::default().intra_params(),
            true,
            &cfg,
        )
        .unwrap()
        .0
    }

    #[test]
    fn lossless_at_qp4_for_both_graph_sources() {
        let (arr, raw, params) = edge_sais(2, 24, 3);
        let bank = small_bank(&arr);
        for (mode, bank) in [
            (GraphMode::Distance, None),
            (GraphMode::Learned, Some(&bank)),
        ] {
            let cfg = CodecConfig {
                qp: 4,
                graph_mode: mode,
                ..CodecConfig::default()
            };
            let enc = encode_raw(&raw, &params, bank, &cfg).unwrap();
            assert_eq!(enc.header.coding.layout, LayoutSource::Calibration);
            assert_eq!(enc.reconstruction, arr);
            let dec = decode(&enc.bytes, bank, false).unwrap();
            assert_eq!(dec.sais, arr);
        }
    }

    #[test]
    fn decoder_mirrors_encoder_state() {
        let (arr, _, _) = edge_sais(2, 24, 8);
        let cfg = CodecConfig {
            qp: 28,
            graph_mode: GraphMode::Distance,
            ..CodecConfig::default()
        };
        let enc = encode_sais(&arr, None, &cfg).unwrap();
        let dec = decode(&enc.bytes, None, false).unwrap();
        assert_eq!(dec.sais, enc.reconstruction);
        let enc_traces: Vec<_> = enc.sais.iter().map(|s| s.traces.clone()).collect();
        assert_eq!(dec.traces, enc_traces);
        assert_ne!(dec.sais, arr, "QP 28 should be lossy");
    }

    #[test]
    fn single_view_decode_matches_full_decode() {
        let (arr, _, _) = edge_sais(3, 16, 4);
        let cfg = CodecConfig {
            qp: 16,
            graph_mode: GraphMode::Distance,
            ..CodecConfig::default()
        };
        let enc = encode_sais(&arr, None, &cfg).unwrap();
        let full = decode(&enc.bytes, None, false).unwrap();
        let mut reader = StreamReader::new(Cursor::new(enc.bytes.clone())).unwrap();
        for i in [0, 4, 8] {
            let (sai, traces) = decode_view(&mut reader, i, None).unwrap();
            assert_eq!(sai, full.sais.sais[i]);
            assert_eq!(traces, full.traces[i]);
        }
    }

    #[test]
    fn empty_array_gives_header_only_stream() {
        let params = CalibrationParams::identity(2, 2, 8, 8);
        let arr = SAIArray::empty(&params, 10, BayerPhase::Rggb);
        let enc = encode_sais(
            &arr,
            None,
            &CodecConfig {
                graph_mode: GraphMode::Distance,
                ..CodecConfig::default()
            },
        )
        .unwrap();
        assert_eq!(enc.bytes.len(), enc.header.byte_len());
        assert_eq!(decode(&enc.bytes, None, false).unwrap().sais, arr);
    }

    #[test]
    fn arbitrary_layouts_are_coded_explicitly() {
        let params = CalibrationParams::identity(1, 1, 12, 10);
        let px = (0..10)
            .flat_map(|r| (0..12).map(move |c| (r, c)))
            .filter(|&(r, c)| (r * 5 + c * 3) % 7 != 0)
            .map(|(r, c)| {
                (
                    r,
                    c,
                    Color::ALL[(r + 2 * c) % 3],
                    ((r * 37 + c * 11) % 1024) as u16,
                )
            });
        let sai = SparseSAI::from_pixels(12, 10, 10, px.collect::<Vec<_>>()).unwrap();
        let arr = SAIArray {
            params,
            bit_depth: 10,
            bayer_phase: BayerPhase::Rggb,
            sais: vec![sai],
        };
        let cfg = CodecConfig {
            qp: 4,
            graph_mode: GraphMode::Distance,
            ..CodecConfig::default()
        };
        let enc = encode_sais(&arr, None, &cfg).unwrap();
        assert_eq!(enc.header.coding.layout, LayoutSource::Explicit);
        assert_eq!(decode(&enc.bytes, None, false).unwrap().sais, arr);
    }

    #[test]
    fn bank_is_checked() {
        let (arr, _, _) = edge_sais(2, 16, 5);
        let bank = small_bank(&arr);
        let cfg = CodecConfig {
            qp: 22,
            ..CodecConfig::default()
        };
        assert_eq!(
            encode_sais(&arr, None, &cfg).unwrap_err(),
            CodecError::MissingBank
        );
        let enc = encode_sais(&arr, Some(&bank), &cfg).unwrap();
        assert_eq!(
            decode(&enc.bytes, None, false).unwrap_err(),
            CodecError::MissingBank
        );
        let mut other = bank.clone();
        other.entries[0].graph.self_loops[0] += 1.0;
        assert!(matches!(
            decode(&enc.bytes, Some(&other), false),
            Err(CodecError::BankMismatch { .. })
        ));
    }

    #[test]
    fn demosaic_of_constant_scene_is_constant() {
        let params = CalibrationParams::identity(3, 3, 16, 16);
        let scene = generate_scene(SceneKind::Constant(321), &params, 10, 0);
        let raw = synthesize_lenselet(&scene, &params, SynthOptions::default()).unwrap();
        let cfg = CodecConfig {
            qp: 4,
            graph_mode: GraphMode::Distance,
            ..CodecConfig::default()
        };
        let enc = encode_raw(&raw, &params, None, &cfg).unwrap();
        let dec = decode(&enc.bytes, None, true).unwrap();
        assert!(dec.full_color.unwrap().data.iter().all(|&p| p == [321; 3]));
    }

    #[test]
    fn decoded_sais_restore_the_sensor() {
        let (_, raw, params) = edge_sais(2, 16, 6);
        let cfg = CodecConfig {
            qp: 4,
            graph_mode: GraphMode::Distance,
            ..CodecConfig::default()
        };
        let enc = encode_raw(&raw, &params, None, &cfg).unwrap();
        let dec = decode(&enc.bytes, None, false).unwrap();
        assert_eq!(restore_sensor(&dec.header, &dec.sais, 0).unwrap(), raw);
    }

    #[test]
    fn coarser_quantization_spends_fewer_bits() {
        let (arr, _, _) = edge_sais(2, 24, 9);
        let sizes: Vec<usize> = [4, 16, 28]
            .iter()
            .map(|&qp| {
                let cfg = CodecConfig {
                    qp,
                    graph_mode: GraphMode::Distance,
                    ..CodecConfig::default()
                };
                encode_sais(&arr, None, &cfg).unwrap().bytes.len()
            })
            .collect();
        assert!(sizes[0] > sizes[1] && sizes[1] > sizes[2], "{sizes:?}");
    }
}
