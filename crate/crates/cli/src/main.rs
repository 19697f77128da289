use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sagnac_cli::{svg, RunManifest};
use sagnac_core::bell::{
    chsh_s, omega_bell, postselect, sweep, write_sweep_csv, BellFrequency, TwoQubitState,
};
use sagnac_core::lang::load;
use sagnac_core::sampler::{run_experiment, write_records_ndjson, DetectorModel};
use sagnac_core::{
    coil_area, sagnac_phase, Amplitude, Circuit, Error, MeasurementSetting, PhaseArg, Preset,
    SagnacConfig,
};
use serde_json::{json, Value};

type Json = serde_json::Map<String, Value>;

/// Rotation-generated polarization entanglement in a Sagnac loop.
#[derive(Parser, Debug)]
#[command(name = "sagnac-bell", version, about)]
struct Cli {
    /// Suppress the human-readable summary on standard error.
    #[arg(long, short, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Propagate the photon pair through a layout and post-select coincidences.
    Simulate(SimulateArgs),
    /// Tabulate |S| and coincidence probability over a range of rotation frequencies.
    Sweep(SweepArgs),
    /// Rotation rates at which the post-selected state is the singlet.
    BellFreq(BellFreqArgs),
    /// Seeded shot-by-shot Bell test with finite statistics.
    Sample(SampleArgs),
    /// Parse and compile a layout file, printing its canonical form.
    ParseCheck { file: PathBuf },
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Clone)]
struct Geometry {
    /// Enclosed area A in m^2; replaces --loops/--radius-m.
    #[arg(long, value_name = "M2", conflicts_with_all = ["loops", "radius_m"])]
    area_m2: Option<f64>,
    /// Number of fiber turns in the coil.
    #[arg(long, default_value_t = 10)]
    loops: u32,
    /// Coil radius in m.
    #[arg(long, value_name = "M", default_value_t = 0.5)]
    radius_m: f64,
    /// Photon wavelength in m.
    #[arg(long, value_name = "M", default_value_t = 1e-6)]
    wavelength_m: f64,
}

impl Geometry {
    fn area(&self) -> f64 {
        self.area_m2
            .unwrap_or_else(|| coil_area(self.loops, self.radius_m))
    }

    fn config(&self, omega_rot: f64) -> Result<SagnacConfig, Failure> {
        Ok(SagnacConfig::new(
            self.area(),
            self.wavelength_m,
            omega_rot,
        )?)
    }

    fn record(&self, p: &mut Json) {
        p.insert("area-m2".into(), json!(self.area()));
        p.insert("wavelength-m".into(), json!(self.wavelength_m));
    }
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
struct Phase {
    /// Sagnac phase in radians.
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<f64>,
    /// Platform rotation frequency in Hz.
    #[arg(long, value_name = "HZ", allow_hyphen_values = true)]
    rotation_hz: Option<f64>,
    /// Platform angular velocity in rad/s.
    #[arg(long, value_name = "RAD_S", allow_hyphen_values = true)]
    rotation_rad_s: Option<f64>,
}

impl Phase {
    /// Resolved phase, plus the configuration when a rotation rate was given.
    fn resolve(&self, geo: &Geometry) -> Result<(f64, Option<SagnacConfig>), Failure> {
        let cfg = match (self.phi, self.rotation_hz, self.rotation_rad_s) {
            (Some(phi), _, _) => return Ok((phi, None)),
            (_, Some(f), _) => SagnacConfig::from_rotation_hz(geo.area(), geo.wavelength_m, f)?,
            (_, _, Some(w)) => geo.config(w)?,
            _ => unreachable!("clap enforces one phase source"),
        };
        Ok((sagnac_phase(&cfg), Some(cfg)))
    }

    fn record(&self, geo: &Geometry, p: &mut Json) {
        if let Some(phi) = self.phi {
            p.insert("phi".into(), json!(phi));
            return;
        }
        geo.record(p);
        if let Some(f) = self.rotation_hz {
            p.insert("rotation-hz".into(), json!(f));
        }
        if let Some(w) = self.rotation_rad_s {
            p.insert("rotation-rad-s".into(), json!(w));
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

impl TableFormat {
    fn name(self) -> &'static str {
        match self {
            TableFormat::Csv => "csv",
            TableFormat::Json => "json",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PresetArg {
    Core4,
    Full12,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Core4 => Preset::Core4,
            PresetArg::Full12 => Preset::Full12,
        }
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Built-in layout.
    #[arg(long, value_enum, default_value = "core4", conflicts_with = "circuit")]
    preset: PresetArg,
    /// Layout file in the .icl format.
    #[arg(long, value_name = "FILE")]
    circuit: Option<PathBuf>,
    #[command(flatten)]
    phase: Phase,
    #[command(flatten)]
    geometry: Geometry,
    /// Write the JSON result here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    geometry: Geometry,
    /// Lowest rotation frequency in Hz.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    f_min: f64,
    /// Highest rotation frequency in Hz.
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    f_max: f64,
    /// Number of evenly spaced points, endpoints included.
    #[arg(long, short, default_value_t = 401, value_parser = clap::value_parser!(u32).range(2..))]
    n: u32,
    #[arg(long, value_enum, default_value = "csv")]
    format: TableFormat,
    /// Write the table here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Also write an SVG plot of |S| and P against f.
    #[arg(long, value_name = "FILE")]
    svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BellFreqArgs {
    #[command(flatten)]
    geometry: Geometry,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    k_min: i64,
    #[arg(long, default_value_t = 2, allow_hyphen_values = true)]
    k_max: i64,
    #[arg(long, value_enum, default_value = "csv")]
    format: TableFormat,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[command(flatten)]
    phase: Phase,
    #[command(flatten)]
    geometry: Geometry,
    /// RNG seed; required so every run is reproducible.
    #[arg(long)]
    seed: u64,
    /// Number of emitted photon pairs.
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    shots: u64,
    /// Click probability of each detector.
    #[arg(long, default_value_t = 1.0)]
    efficiency: f64,
    /// Layout whose coincidence probability sets the pair survival rate.
    #[arg(long, value_enum, default_value = "core4")]
    preset: PresetArg,
    /// Write every shot as newline-delimited JSON.
    #[arg(long, value_name = "FILE")]
    records: Option<PathBuf>,
    /// Write the estimate JSON here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    manifest: PathBuf,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    svg: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    records: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    /// Bad flags or input values: exit 2.
    Usage(String),
    /// Layout source rejected, already rendered: exit 2.
    Parse(String),
    /// Simulation or I/O failure: exit 1.
    Domain(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Parse(_) => 2,
            Failure::Domain(_) => 1,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::InvalidRange(_) => Failure::Usage(e.to_string()),
            other => Failure::Domain(other.to_string()),
        }
    }
}

fn io_error(path: &Path, e: io::Error) -> Failure {
    Failure::Domain(format!("{}: {e}", path.display()))
}

/// Collects file outputs so the manifest can be written beside them.
struct Outputs {
    files: Vec<PathBuf>,
}

impl Outputs {
    fn new() -> Self {
        Self { files: Vec::new() }
    }

    fn emit(&mut self, path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
        match path {
            Some(p) => {
                fs::write(p, bytes).map_err(|e| io_error(p, e))?;
                self.files.push(p.to_owned());
            }
            None => {
                let mut out = io::stdout().lock();
                out.write_all(bytes)
                    .and_then(|()| out.flush())
                    .map_err(|e| Failure::Domain(format!("stdout: {e}")))?;
            }
        }
        Ok(())
    }

    fn finish(self, command: &str, parameters: Json, seed: Option<u64>) -> Result<(), Failure> {
        let Some(first) = self.files.first() else {
            return Ok(());
        };
        let mut m = RunManifest::new(
            command,
            parameters.into_iter().collect::<BTreeMap<_, _>>(),
            seed,
        );
        m.outputs = self.files.clone();
        let path = RunManifest::sidecar_path(first);
        fs::write(&path, m.to_json()).map_err(|e| io_error(&path, e))
    }
}

fn complex_json(c: Amplitude) -> Value {
    json!({ "re": c.re, "im": c.im })
}

fn two_qubit_json(s: &TwoQubitState<f64>) -> Value {
    json!({
        "amp_HH": complex_json(s.amp_hh),
        "amp_HV": complex_json(s.amp_hv),
        "amp_VH": complex_json(s.amp_vh),
        "amp_VV": complex_json(s.amp_vv),
    })
}

fn rotation_json(cfg: &SagnacConfig) -> Value {
    json!({
        "area_m2": cfg.area_m2(),
        "wavelength_m": cfg.wavelength_m(),
        "omega_rad_s": cfg.omega_rot(),
        "f_hz": cfg.rotation_hz(),
    })
}

fn pretty(v: &impl serde::Serialize) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("output serializes");
    s.push('\n');
    s.into_bytes()
}

fn load_circuit(path: &Path) -> Result<Circuit, Failure> {
    let src = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    load::<f64>(&src)
        .map(|(_, c)| c)
        .map_err(|e| Failure::Parse(e.render(&src, &path.display().to_string())))
}

fn simulate(a: &SimulateArgs, quiet: bool) -> Result<(), Failure> {
    let (phi, cfg) = a.phase.resolve(&a.geometry)?;
    let (circuit, layout) = match &a.circuit {
        Some(p) => (load_circuit(p)?, p.display().to_string()),
        None => {
            let preset = Preset::from(a.preset);
            (preset.circuit(PhaseArg::Phi), preset.name().to_owned())
        }
    };
    let post = postselect(circuit.run(Some(phi))?)?;
    let settings = MeasurementSetting::standard();
    let s_signed = post.state.as_ref().map(|s| chsh_s(s, &settings));

    let result = json!({
        "layout": layout,
        "phi_rad": phi,
        "rotation": cfg.as_ref().map(rotation_json),
        "output_state": post.output.to_dump(),
        "coincidence_probability": post.coincidence_probability,
        "postselected": post.state.as_ref().map(two_qubit_json),
        "concurrence": post.state.as_ref().map(TwoQubitState::concurrence),
        "S_signed": s_signed,
        "S_abs": s_signed.map(f64::abs),
    });

    let mut out = Outputs::new();
    out.emit(a.output.as_deref(), &pretty(&result))?;
    if !quiet {
        match s_signed {
            Some(s) => eprintln!(
                "phi = {phi:.6} rad, P(coincidence) = {:.6}, |S| = {:.6}",
                post.coincidence_probability,
                s.abs()
            ),
            None => eprintln!("phi = {phi:.6} rad: no coincidence amplitude survives"),
        }
    }

    let mut p = Json::new();
    match &a.circuit {
        Some(c) => p.insert("circuit".into(), json!(c)),
        None => p.insert("preset".into(), json!(Preset::from(a.preset).name())),
    };
    a.phase.record(&a.geometry, &mut p);
    out.finish("simulate", p, None)
}

fn sweep_cmd(a: &SweepArgs, quiet: bool) -> Result<(), Failure> {
    let template = a.geometry.config(0.0)?;
    let rows = sweep(
        &template,
        a.f_min,
        a.f_max,
        a.n as usize,
        &MeasurementSetting::standard(),
    )?;

    let table = match a.format {
        TableFormat::Csv => {
            let mut buf = Vec::new();
            write_sweep_csv(&rows, &mut buf).map_err(|e| Failure::Domain(e.to_string()))?;
            buf
        }
        TableFormat::Json => pretty(&rows),
    };
    let mut out = Outputs::new();
    out.emit(a.output.as_deref(), &table)?;
    if let Some(path) = &a.svg {
        out.emit(Some(path), svg::render(&rows).as_bytes())?;
    }
    if !quiet {
        let violations = rows.iter().filter(|r| r.violation).count();
        let peak = rows.iter().map(|r| r.s_abs).fold(0.0, f64::max);
        eprintln!(
            "{} points, {violations} violate |S| > 2, max |S| = {peak:.6}",
            rows.len()
        );
    }

    let mut p = Json::new();
    a.geometry.record(&mut p);
    p.insert("f-min".into(), json!(a.f_min));
    p.insert("f-max".into(), json!(a.f_max));
    p.insert("n".into(), json!(a.n));
    p.insert("format".into(), json!(a.format.name()));
    out.finish("sweep", p, None)
}

fn bell_freq(a: &BellFreqArgs) -> Result<(), Failure> {
    if a.k_min > a.k_max {
        return Err(Failure::Usage(format!(
            "empty k range: --k-min {} is above --k-max {}",
            a.k_min, a.k_max
        )));
    }
    let cfg = a.geometry.config(0.0)?;
    let rows: Vec<BellFrequency> = (a.k_min..=a.k_max).map(|k| omega_bell(&cfg, k)).collect();
    let table = match a.format {
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &rows {
                w.serialize(r).map_err(|e| Failure::Domain(e.to_string()))?;
            }
            w.into_inner().map_err(|e| Failure::Domain(e.to_string()))?
        }
        TableFormat::Json => pretty(&rows),
    };
    let mut out = Outputs::new();
    out.emit(a.output.as_deref(), &table)?;

    let mut p = Json::new();
    a.geometry.record(&mut p);
    p.insert("k-min".into(), json!(a.k_min));
    p.insert("k-max".into(), json!(a.k_max));
    p.insert("format".into(), json!(a.format.name()));
    out.finish("bell-freq", p, None)
}

fn sample(a: &SampleArgs, quiet: bool) -> Result<(), Failure> {
    let (phi, _) = a.phase.resolve(&a.geometry)?;
    let det = DetectorModel::new(a.efficiency, a.seed, a.shots)?;
    let exp = run_experiment(phi, &MeasurementSetting::standard(), &det, a.preset.into())?;
    let est = exp.estimate;

    let mut out = Outputs::new();
    if let Some(path) = &a.records {
        let file = fs::File::create(path).map_err(|e| io_error(path, e))?;
        write_records_ndjson(&exp.records, io::BufWriter::new(file))
            .map_err(|e| io_error(path, e))?;
        out.files.push(path.clone());
    }
    out.emit(a.output.as_deref(), &pretty(&est.to_json()))?;

    match (est.s_hat, est.stderr) {
        (Some(s), Some(e)) if !quiet => eprintln!(
            "S_hat = {s:.6} ± {e:.6} ({} coincidences in {} shots)",
            est.coincidences, est.shots
        ),
        (None, _) => eprintln!(
            "warning: a setting pair recorded no coincidences; S_hat is undefined ({} coincidences in {} shots)",
            est.coincidences, est.shots
        ),
        _ => {}
    }

    let mut p = Json::new();
    a.phase.record(&a.geometry, &mut p);
    p.insert("seed".into(), json!(a.seed));
    p.insert("shots".into(), json!(a.shots));
    p.insert("efficiency".into(), json!(a.efficiency));
    p.insert("preset".into(), json!(Preset::from(a.preset).name()));
    out.finish("sample", p, Some(a.seed))
}

fn parse_check(file: &Path, quiet: bool) -> Result<(), Failure> {
    let src = fs::read_to_string(file).map_err(|e| io_error(file, e))?;
    let name = file.display().to_string();
    let ast = sagnac_core::lang::parse(&src).map_err(|e| Failure::Parse(e.render(&src, &name)))?;
    let (reg, circuit) = sagnac_core::lang::compile::<f64>(&ast)
        .map_err(|e| Failure::Parse(e.render(&src, &name)))?;
    print!("{ast}");
    if !quiet {
        eprintln!(
            "{name}: ok, {} statements, {} modes, {} elements",
            ast.statements.len(),
            reg.len(),
            circuit.elements().len()
        );
    }
    Ok(())
}

fn replay(a: &ReplayArgs, quiet: bool) -> Result<(), Failure> {
    let text = fs::read_to_string(&a.manifest).map_err(|e| io_error(&a.manifest, e))?;
    let m: RunManifest = serde_json::from_str(&text).map_err(|e| {
        Failure::Usage(format!("{}: not a run manifest: {e}", a.manifest.display()))
    })?;
    let mut argv = vec!["sagnac-bell".to_owned()];
    if quiet {
        argv.push("--quiet".into());
    }
    argv.extend(m.argv());
    for (flag, path) in [
        ("--output", &a.output),
        ("--svg", &a.svg),
        ("--records", &a.records),
    ] {
        if let Some(p) = path {
            argv.extend([flag.to_owned(), p.display().to_string()]);
        }
    }
    let cli = Cli::try_parse_from(&argv).map_err(|e| Failure::Usage(e.to_string()))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(Failure::Usage(
            "a manifest cannot replay another replay".into(),
        ));
    }
    run(&cli)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Simulate(a) => simulate(a, cli.quiet),
        Command::Sweep(a) => sweep_cmd(a, cli.quiet),
        Command::BellFreq(a) => bell_freq(a),
        Command::Sample(a) => sample(a, cli.quiet),
        Command::ParseCheck { file } => parse_check(file, cli.quiet),
        Command::Replay(a) => replay(a, cli.quiet),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Parse(diag) => eprint!("{diag}"),
                Failure::Usage(msg) => eprintln!("error: {msg}"),
                Failure::Domain(msg) => eprintln!("error: {msg}"),
            }
            ExitCode::from(f.code())
        }
    }
}
