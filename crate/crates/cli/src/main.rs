//! `lfglt`: encode, decode, train and evaluate pre-demosaic light field streams.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use lfglt::codec::{
    bits_per_pixel, decode, demosaic_array, encode_raw, evaluate, restore_sensor, BppBasis,
    CodecConfig, GraphMode, RdRow, CSV_HEADER,
};
use lfglt::container::{
    calibrate, decompose, generate_scene, read_calibration, read_lfraw, read_scene,
    synthesize_lenselet, write_calibration, write_lfraw, write_scene, BayerPhase,
    CalibrationParams, SceneKind, SynthOptions,
};
use lfglt::entropy::StreamHeader;
use lfglt::graph::{train_bank, LearnConfig, ModeGraphBank};

#[derive(Debug, Parser)]
#[command(
    name = "lfglt",
    version,
    about = "Pre-demosaic light field codec with graph lifting transforms"
)]
struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a synthetic scene into a raw lenselet frame.
    Synth(SynthArgs),
    /// Encode a raw lenselet frame into an .lfgc stream.
    Encode(EncodeArgs),
    /// Decode an .lfgc stream to a raw frame or, with --demosaic, to RGB views.
    Decode(DecodeArgs),
    /// Learn the mode graph bank from raw frames.
    Train(TrainArgs),
    /// Compare decoded RGB views with a reference and print metrics.
    Eval(EvalArgs),
    /// Encode at several QPs and write one RD row per QP.
    RdSweep(RdSweepArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SceneArg {
    Edges,
    Ramp,
    Constant,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PhaseArg {
    Rggb,
    Bggr,
    Grbg,
    Gbrg,
}

impl From<PhaseArg> for BayerPhase {
    fn from(p: PhaseArg) -> Self {
        match p {
            PhaseArg::Rggb => BayerPhase::Rggb,
            PhaseArg::Bggr => BayerPhase::Bggr,
            PhaseArg::Grbg => BayerPhase::Grbg,
            PhaseArg::Gbrg => BayerPhase::Gbrg,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GraphArg {
    Distance,
    Learned,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BasisArg {
    Sai,
    Sensor,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output prefix; writes PREFIX.lfraw, PREFIX.calib.json and PREFIX.lfscene.
    #[arg(long)]
    output: PathBuf,
    /// Seed; falls back to LFGLT_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "edges")]
    scene: SceneArg,
    /// Level of the constant scene.
    #[arg(long, default_value_t = 512)]
    level: u16,
    /// Views per axis.
    #[arg(long, default_value_t = 5)]
    views: usize,
    /// SAI width and height.
    #[arg(long, default_value_t = 64)]
    size: usize,
    #[arg(long, default_value_t = 10)]
    bit_depth: u8,
    #[arg(long, value_enum, default_value = "rggb")]
    phase: PhaseArg,
    /// Sensor noise standard deviation.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Calibration rotation in degrees.
    #[arg(long, default_value_t = 0.0)]
    rotation: f64,
    /// Shift of odd macro-pixel rows (hexagonal grids).
    #[arg(long, default_value_t = 0.0)]
    row_offset: f64,
}

#[derive(Debug, Args)]
struct CodingArgs {
    /// TOML file with codec settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Graph source; learned is the default.
    #[arg(long, value_enum)]
    graph: Option<GraphArg>,
    /// Disable intra prediction.
    #[arg(long)]
    no_intra: bool,
    /// Mode graph bank (.lfbank), required for learned graphs.
    #[arg(long)]
    bank: Option<PathBuf>,
}

impl CodingArgs {
    fn config(&self, qp: Option<i32>) -> Result<CodecConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text =
                    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => CodecConfig::default(),
        };
        if let Some(qp) = qp {
            cfg.qp = qp;
        }
        if let Some(g) = self.graph {
            cfg.graph_mode = match g {
                GraphArg::Distance => GraphMode::Distance,
                GraphArg::Learned => GraphMode::Learned,
            };
        }
        if self.no_intra {
            cfg.intra = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct EncodeArgs {
    /// Raw lenselet frame (.lfraw).
    #[arg(long)]
    input: PathBuf,
    /// Calibration sidecar; defaults to the input with a .calib.json extension.
    #[arg(long)]
    calib: Option<PathBuf>,
    /// Output stream (.lfgc).
    #[arg(long)]
    output: PathBuf,
    /// Quantization parameter, 4 (lossless) to 36.
    #[arg(long)]
    qp: Option<i32>,
    #[command(flatten)]
    coding: CodingArgs,
}

#[derive(Debug, Args)]
struct DecodeArgs {
    /// Input stream (.lfgc).
    #[arg(long)]
    input: PathBuf,
    /// Output .lfraw, or .lfscene with --demosaic.
    #[arg(long)]
    output: PathBuf,
    /// Mode graph bank the stream was coded with.
    #[arg(long)]
    bank: Option<PathBuf>,
    /// Interpolate RGB views (.lfscene) instead of restoring the raw frame.
    #[arg(long)]
    demosaic: bool,
    /// Value of sensor samples the calibration dropped.
    #[arg(long, default_value_t = 0)]
    fill: u16,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Training frames (.lfraw) with .calib.json sidecars.
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Output bank (.lfbank).
    #[arg(long)]
    output: PathBuf,
    /// Train on uncorrected residuals, for streams coded with --no-intra.
    #[arg(long)]
    no_intra: bool,
    /// Sweep budget of the Laplacian solver per mode.
    #[arg(long, default_value_t = 500)]
    max_sweeps: usize,
    /// TOML file with codec settings.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Decoded RGB views (.lfscene).
    #[arg(long)]
    input: PathBuf,
    /// Reference RGB views (.lfscene).
    #[arg(long)]
    reference: PathBuf,
    /// Stream the views were decoded from, for bpp and QP.
    #[arg(long)]
    stream: Option<PathBuf>,
    /// Append the RD row to this CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Pixel count bpp is taken over: all SAI positions or sensor pixels.
    #[arg(long, value_enum, default_value = "sai")]
    bpp_basis: BasisArg,
}

#[derive(Debug, Args)]
struct RdSweepArgs {
    /// Raw lenselet frame (.lfraw).
    #[arg(long)]
    input: PathBuf,
    /// Calibration sidecar; defaults to the input with a .calib.json extension.
    #[arg(long)]
    calib: Option<PathBuf>,
    /// Reference RGB views; defaults to the demosaicked uncoded SAIs.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Comma-separated QP list.
    #[arg(long, value_delimiter = ',', default_value = "4,10,16,22,28,34")]
    qp: Vec<i32>,
    /// Write the RD rows to this CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Pixel count bpp is taken over: all SAI positions or sensor pixels.
    #[arg(long, value_enum, default_value = "sai")]
    bpp_basis: BasisArg,
    #[command(flatten)]
    coding: CodingArgs,
}

fn sidecar(input: &Path, explicit: &Option<PathBuf>) -> PathBuf {
    explicit
        .clone()
        .unwrap_or_else(|| input.with_extension("calib.json"))
}

fn load_bank(path: &Option<PathBuf>) -> Result<Option<ModeGraphBank>> {
    path.as_ref()
        .map(|p| ModeGraphBank::read(p).with_context(|| format!("reading bank {}", p.display())))
        .transpose()
}

fn basis(b: BasisArg) -> BppBasis {
    match b {
        BasisArg::Sai => BppBasis::Sai,
        BasisArg::Sensor => BppBasis::Sensor,
    }
}

fn bpp_of(header: &StreamHeader, stream_bytes: usize, b: BppBasis) -> f64 {
    let c = &header.calibration;
    let pixels = match b {
        BppBasis::Sai => c.view_count() * c.sai_width * c.sai_height,
        BppBasis::Sensor => header.sensor_width as usize * header.sensor_height as usize,
    };
    bits_per_pixel(stream_bytes, pixels)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_csv(path: &Path, rows: &[RdRow], append: bool) -> Result<()> {
    let fresh = !append || !path.exists();
    let mut text = if fresh {
        format!("{CSV_HEADER}\n")
    } else {
        fs::read_to_string(path)?
    };
    for r in rows {
        text.push_str(&format!("{r}\n"));
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn synth(a: &SynthArgs) -> Result<()> {
    let seed = match a.seed {
        Some(s) => s,
        None => match std::env::var("LFGLT_SEED") {
            Ok(v) => v
                .parse()
                .with_context(|| format!("LFGLT_SEED={v} is not an integer"))?,
            Err(_) => 0,
        },
    };
    let mut params = CalibrationParams {
        row_offset: a.row_offset,
        ..CalibrationParams::identity(a.views, a.views, a.size, a.size)
    };
    if a.rotation != 0.0 {
        params = params.with_rotation(a.rotation);
    }
    params.validate()?;
    let kind = match a.scene {
        SceneArg::Edges => SceneKind::Edges,
        SceneArg::Ramp => SceneKind::HorizontalRamp,
        SceneArg::Constant => SceneKind::Constant(a.level),
    };
    let scene = generate_scene(kind, &params, a.bit_depth, seed);
    let raw = synthesize_lenselet(
        &scene,
        &params,
        SynthOptions {
            seed,
            bayer_phase: a.phase.into(),
            noise_sigma: a.noise,
        },
    )?;
    write_lfraw(with_suffix(&a.output, ".lfraw"), &raw)?;
    write_calibration(with_suffix(&a.output, ".calib.json"), &params)?;
    write_scene(with_suffix(&a.output, ".lfscene"), &scene)?;
    println!(
        "synthesized {}x{} sensor, {} views of {}x{}, seed {seed}",
        raw.width,
        raw.height,
        params.view_count(),
        a.size,
        a.size
    );
    Ok(())
}

fn encode_cmd(a: &EncodeArgs) -> Result<()> {
    let cfg = a.coding.config(a.qp)?;
    let raw = read_lfraw(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let params = read_calibration(sidecar(&a.input, &a.calib))?;
    let bank = load_bank(&a.coding.bank)?;
    let enc = encode_raw(&raw, &params, bank.as_ref(), &cfg)?;
    fs::write(&a.output, &enc.bytes).with_context(|| format!("writing {}", a.output.display()))?;
    println!(
        "encoded {} SAIs at QP {}: {} bytes, {:.4} bpp",
        enc.header.sai_count(),
        cfg.qp,
        enc.bytes.len(),
        bpp_of(&enc.header, enc.bytes.len(), BppBasis::Sai)
    );
    Ok(())
}

fn decode_cmd(a: &DecodeArgs) -> Result<()> {
    let bytes = fs::read(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let bank = load_bank(&a.bank)?;
    let dec = decode(&bytes, bank.as_ref(), a.demosaic)?;
    match dec.full_color {
        Some(lf) => write_scene(&a.output, &lf)?,
        None => write_lfraw(&a.output, &restore_sensor(&dec.header, &dec.sais, a.fill)?)?,
    }
    println!(
        "decoded {} SAIs to {}",
        dec.header.sai_count(),
        a.output.display()
    );
    Ok(())
}

fn train_cmd(a: &TrainArgs) -> Result<()> {
    let cfg = match &a.config {
        Some(p) => toml::from_str(&fs::read_to_string(p)?)
            .with_context(|| format!("parsing {}", p.display()))?,
        None => CodecConfig::default(),
    };
    let mut sais = Vec::new();
    for input in &a.input {
        let raw = read_lfraw(input).with_context(|| format!("reading {}", input.display()))?;
        let params = read_calibration(sidecar(input, &None))?;
        let (cal, _) = calibrate(&raw, &params)?;
        sais.extend(decompose(&cal, &params)?.sais);
    }
    let learn = LearnConfig {
        max_sweeps: a.max_sweeps,
        ..LearnConfig::default()
    };
    let (bank, report) = train_bank(&sais, &cfg.intra_params(), !a.no_intra, &learn)?;
    bank.write(&a.output)?;
    println!(
        "trained bank on {} SAIs, blocks per mode {:?}",
        sais.len(),
        report.counts
    );
    if !report.empty_modes.is_empty() {
        eprintln!(
            "warning: modes {:?} had too few blocks and use the distance template",
            report.empty_modes
        );
    }
    if !report.unconverged.is_empty() {
        eprintln!(
            "warning: modes {:?} hit the sweep budget",
            report.unconverged
        );
    }
    Ok(())
}

fn eval_cmd(a: &EvalArgs) -> Result<()> {
    let recon = read_scene(&a.input)?;
    let truth = read_scene(&a.reference)?;
    let m = evaluate(&recon, &truth)?;
    let (qp, bpp) = match &a.stream {
        Some(p) => {
            let bytes = fs::read(p)?;
            let (header, _) = StreamHeader::from_bytes(&bytes)?;
            (
                header.coding.qp as i32,
                bpp_of(&header, bytes.len(), basis(a.bpp_basis)),
            )
        }
        None => (0, 0.0),
    };
    let row = RdRow::new(qp, bpp, &m);
    println!("{CSV_HEADER}\n{row}");
    if let Some(csv) = &a.csv {
        write_csv(csv, &[row], true)?;
    }
    Ok(())
}

fn rd_sweep_cmd(a: &RdSweepArgs) -> Result<()> {
    let base = a.coding.config(None)?;
    if a.qp.is_empty() {
        bail!("--qp needs at least one value");
    }
    let raw = read_lfraw(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let params = read_calibration(sidecar(&a.input, &a.calib))?;
    let bank = load_bank(&a.coding.bank)?;
    let truth = match &a.reference {
        Some(p) => read_scene(p)?,
        None => {
            let (cal, _) = calibrate(&raw, &params)?;
            demosaic_array(&decompose(&cal, &params)?, &base)
        }
    };
    println!("{CSV_HEADER}");
    let mut rows = Vec::with_capacity(a.qp.len());
    for &qp in &a.qp {
        let cfg = CodecConfig { qp, ..base.clone() };
        cfg.validate()?;
        let enc = encode_raw(&raw, &params, bank.as_ref(), &cfg)?;
        let dec = decode(&enc.bytes, bank.as_ref(), true)?;
        let m = evaluate(dec.full_color.as_ref().expect("demosaic requested"), &truth)?;
        let row = RdRow::new(
            qp,
            bpp_of(&enc.header, enc.bytes.len(), basis(a.bpp_basis)),
            &m,
        );
        println!("{row}");
        rows.push(row);
    }
    if let Some(csv) = &a.csv {
        write_csv(csv, &rows, false)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match &cli.command {
        Command::Synth(a) => synth(a),
        Command::Encode(a) => encode_cmd(a),
        Command::Decode(a) => decode_cmd(a),
        Command::Train(a) => train_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::RdSweep(a) => rd_sweep_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn qp_lists_split_on_commas() {
        let cli =
            Cli::try_parse_from(["lfglt", "rd-sweep", "--input", "a.lfraw", "--qp", "4,10,16"])
                .unwrap();
        let Command::RdSweep(a) = cli.command else {
            panic!("wrong subcommand")
        };
        assert_eq!(a.qp, vec![4, 10, 16]);
    }

    #[test]
    fn flags_override_the_config_file() {
        let dir = std::env::temp_dir().join(format!("lfglt-cfg-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.toml");
        fs::write(&path, "qp = 30\ngraph_mode = \"distance\"\nsigma = 2.0\n").unwrap();
        let args = CodingArgs {
            config: Some(path),
            graph: None,
            no_intra: true,
            bank: None,
        };
        let cfg = args.config(Some(10)).unwrap();
        assert_eq!(
            (cfg.qp, cfg.graph_mode, cfg.sigma, cfg.intra),
            (10, GraphMode::Distance, 2.0, false)
        );
        fs::write(dir.join("bad.toml"), "bogus = 1\n").unwrap();
        let bad = CodingArgs {
            config: Some(dir.join("bad.toml")),
            graph: None,
            no_intra: false,
            bank: None,
        };
        assert!(bad.config(None).is_err());
    }
}
