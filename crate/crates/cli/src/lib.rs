//! The `spikecost` command line: single-layer estimates, sparsity sweeps,
//! functional simulation against the closed form, and survey frontiers.
//!
//! Exit codes: 0 on success, 1 when a computation or output write fails,
//! 2 when the configuration is invalid.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use spikecost::analytic::{element_energy, format_energy, sig3, sweep_sparsity, EnergyBreakdown, NetKind, SweepRow};
use spikecost::pareto::{frontier, scatter_rows};
use spikecost::report::{sweep_csv, SweepSim};
use spikecost::sim::{simulate_layer, Comparison, OpCounts, SimConfig, SpikeReads, Traversal, ZeroSkip};
use spikecost::survey::{bundled_audio, bundled_imagenet};
use spikecost::{
    emit_scatter, load_cost_table, load_layer, load_survey, AcceleratorRecord, ConvShape, CostTable, LayerShape,
    NeuronParams, RecurrentShape, ResetMode, SparsityMode, Task,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Compute(String),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(_) | CliError::Output { .. } => 1,
        }
    }
}

fn config(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn compute(e: impl std::fmt::Display) -> CliError {
    CliError::Compute(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "spikecost", version, about = "Energy estimates for spiking and conventional NN layers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-element and whole-layer energy for both network families.
    Estimate(EstimateArgs),
    /// Layer energy over a list of activity densities.
    Sweep(SweepArgs),
    /// Run the functional simulator and compare against the closed form.
    Simulate(SimulateArgs),
    /// Scatter data and Pareto frontier of a published-accelerator survey.
    Pareto(ParetoArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Paper,
    Component,
}

impl From<Mode> for SparsityMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Paper => SparsityMode::PaperFaithful,
            Mode::Component => SparsityMode::ComponentWise,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Net {
    Snn,
    Ann,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnnSkip {
    Off,
    Mac,
    Compressed,
}

impl From<AnnSkip> for ZeroSkip {
    fn from(s: AnnSkip) -> Self {
        match s {
            AnnSkip::Off => ZeroSkip::Off,
            AnnSkip::Mac => ZeroSkip::SkipMac,
            AnnSkip::Compressed => ZeroSkip::Compressed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Reset {
    Immediate,
    Deferred,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Cost table JSON; defaults to the bundled 45 nm table.
    #[arg(long, value_name = "PATH")]
    pub cost_table: Option<PathBuf>,
    /// Layer JSON path, or inline: conv | rnn | conv:CI,HI,WI,CO,HK,WK[,S[,P]] | rnn:N_IN,N_NEURONS
    #[arg(long, default_value = "conv")]
    pub layer: String,
    #[arg(long, default_value_t = 1)]
    pub timesteps: u32,
    /// Where the output goes; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, value_enum, default_value_t = Mode::Paper)]
    pub mode: Mode,
}

#[derive(Debug, Clone, Args)]
pub struct NeuronArgs {
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 64)]
    pub threshold: i32,
    #[arg(long, value_enum, default_value_t = Reset::Immediate)]
    pub reset: Reset,
}

impl NeuronArgs {
    fn params(&self) -> Result<NeuronParams, CliError> {
        let mode = match self.reset {
            Reset::Immediate => ResetMode::ImmediateSubtract,
            Reset::Deferred => ResetMode::DeferredSubtract,
        };
        NeuronParams::new(self.beta, self.threshold, mode).map_err(config)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated densities; defaults to 0.1 down to 0.01.
    #[arg(long, value_delimiter = ',')]
    pub gammas: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Mode::Paper)]
    pub mode: Mode,
    /// Add simulated totals for each density.
    #[arg(long)]
    pub simulate: bool,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub neuron: NeuronArgs,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Probability that an input element is nonzero.
    #[arg(long, alias = "gamma", default_value_t = 1.0)]
    pub density: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Net::Both)]
    pub net: Net,
    #[command(flatten)]
    pub neuron: NeuronArgs,
    /// Visit every window position instead of scattering nonzero inputs.
    #[arg(long)]
    pub dense_traversal: bool,
    /// Charge a spike read at every window position, not only for spikes.
    #[arg(long)]
    pub read_every_position: bool,
    /// Cost of zero ANN activations: `off` reads and multiplies everything,
    /// `mac` reads every activation but skips zero MACs, `compressed` skips both.
    #[arg(long, value_enum, default_value_t = AnnSkip::Compressed)]
    pub ann_skip: AnnSkip,
    /// Write op counts as `counter,value` CSV; with `--net both` the file
    /// name gets a `_snn` / `_ann` suffix.
    #[arg(long, value_name = "PATH")]
    pub counts: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ParetoArgs {
    /// `imagenet`, `audio`, or a survey JSON path.
    #[arg(long, default_value = "imagenet")]
    pub survey: String,
    #[arg(long)]
    pub task: Option<Task>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

/// Parses `conv`, `rnn`, `conv:CI,HI,WI,CO,HK,WK[,S[,P]]`, `rnn:N_IN,N` or a
/// path to a layer JSON file.
pub fn parse_layer(spec: &str) -> Result<LayerShape, CliError> {
    let nums = |rest: &str| -> Result<Vec<usize>, CliError> {
        rest.split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|_| config(format!("bad layer dimension '{t}' in '{spec}'"))))
            .collect()
    };
    let layer = match spec.split_once(':') {
        None if spec == "conv" => LayerShape::Conv(ConvShape::default()),
        None if spec == "rnn" || spec == "recurrent" => LayerShape::Recurrent(RecurrentShape::default()),
        Some(("conv", rest)) => {
            let v = nums(rest)?;
            if !(6..=8).contains(&v.len()) {
                return Err(config(format!("conv layer needs CI,HI,WI,CO,HK,WK[,S[,P]], got '{spec}'")));
            }
            LayerShape::Conv(ConvShape {
                ci: v[0],
                hi: v[1],
                wi: v[2],
                co: v[3],
                hk: v[4],
                wk: v[5],
                stride: v.get(6).copied().unwrap_or(1),
                padding: v.get(7).copied().unwrap_or(0),
                ..ConvShape::default()
            })
        }
        Some(("rnn" | "recurrent", rest)) => match nums(rest)?[..] {
            [n_in, n] => LayerShape::Recurrent(RecurrentShape::new(n_in, n)),
            _ => return Err(config(format!("rnn layer needs N_IN,N_NEURONS, got '{spec}'"))),
        },
        _ => return load_layer(spec).map_err(config),
    };
    layer.validate().map_err(config)?;
    Ok(layer)
}

fn cost_table(path: Option<&Path>) -> Result<CostTable, CliError> {
    path.map_or_else(|| Ok(CostTable::bundled_45nm()), |p| load_cost_table(p).map_err(config))
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(compute)
}

pub fn describe_layer(layer: &LayerShape) -> String {
    match layer {
        LayerShape::Conv(c) => format!(
            "conv {}x{}x{} -> {} channels, kernel {}x{}, stride {}, padding {}",
            c.ci, c.hi, c.wi, c.co, c.hk, c.wk, c.stride, c.padding
        ),
        LayerShape::Recurrent(r) => format!("recurrent {} inputs -> {} neurons", r.n_in, r.n_neurons),
    }
}

const COLUMNS: [&str; 5] = ["e_rd_tot", "e_compute", "e_state", "e_ofmap", "total"];

fn breakdown_table(out: &mut String, title: &str, rows: &[&EnergyBreakdown]) {
    let _ = write!(out, "{title:<16}");
    for c in COLUMNS {
        let _ = write!(out, "{c:>12}");
    }
    out.push('\n');
    for b in rows {
        let _ = write!(out, "{:<16}", b.kind.as_str());
        for (_, v) in b.components() {
            let _ = write!(out, "{:>12}", format_energy(v));
        }
        out.push('\n');
    }
}

/// Relative deviation as a percentage with three decimals.
fn percent(d: f64) -> String {
    let p = format!("{:.3}%", 100.0 * d);
    if p == "-0.000%" {
        "0.000%".into()
    } else {
        p
    }
}

fn mode_name(m: Mode) -> String {
    m.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
}

fn validate_common(m: &ModelArgs) -> Result<(CostTable, LayerShape), CliError> {
    if m.timesteps == 0 {
        return Err(config("timesteps must be >= 1"));
    }
    Ok((cost_table(m.cost_table.as_deref())?, parse_layer(&m.layer)?))
}

pub fn cmd_estimate(args: &EstimateArgs) -> Result<String, CliError> {
    let (table, layer) = validate_common(&args.model)?;
    let mode = SparsityMode::from(args.mode);
    let rows = sweep_sparsity(&layer, &table, &[args.gamma], args.model.timesteps, mode).map_err(config)?;
    if args.model.format == Format::Csv {
        return sweep_csv(&rows, None).map_err(compute);
    }
    let row = &rows[0];
    let sp = spikecost::SparsitySpec::new(args.gamma, mode).map_err(config)?;
    let per = |net| -> Result<EnergyBreakdown, CliError> {
        let e = element_energy(&layer, net, &table).map_err(compute)?;
        spikecost::scale(&e, &sp, args.model.timesteps).map_err(compute)
    };
    let (snn, ann) = (per(NetKind::Snn)?, per(NetKind::Ann)?);
    let elements = layer.output_elements().map_err(compute)?;
    let unit = if matches!(layer, LayerShape::Conv(_)) { "window" } else { "neuron" };

    let mut out = String::new();
    let _ = writeln!(out, "layer      {} ({elements} {unit}s)", describe_layer(&layer));
    let _ = writeln!(out, "cost table {}", table.label);
    let _ = writeln!(out, "gamma {}, timesteps {}, mode {}\n", args.gamma, args.model.timesteps, mode_name(args.mode));
    breakdown_table(&mut out, &format!("per {unit}"), &[&snn, &ann]);
    let _ = writeln!(out, "ratio ann/snn {}\n", sig3(ann.total_pj / snn.total_pj));
    breakdown_table(&mut out, "whole layer", &[&row.snn, &row.ann]);
    let _ = writeln!(
        out,
        "memory/compute snn {} ann {}",
        sig3(row.snn.memory_pj() / row.snn.arith_pj()),
        sig3(row.ann.memory_pj() / row.ann.arith_pj())
    );
    Ok(out)
}

pub fn default_gammas() -> Vec<f64> {
    (1..=10).rev().map(|i| f64::from(i) / 100.0).collect()
}

fn sim_config(density: f64, seed: u64, timesteps: u32, params: NeuronParams) -> SimConfig {
    SimConfig { density, seed, timesteps, params, ..SimConfig::default() }
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<String, CliError> {
    let (table, layer) = validate_common(&args.model)?;
    let gammas = if args.gammas.is_empty() { default_gammas() } else { args.gammas.clone() };
    let mode = SparsityMode::from(args.mode);
    for &g in &gammas {
        spikecost::SparsitySpec::new(g, mode).map_err(config)?;
    }
    let params = args.neuron.params()?;
    let pool = thread_pool(args.threads)?;
    let t = args.model.timesteps;

    let (rows, sims) = pool.install(|| -> Result<(Vec<SweepRow>, Option<Vec<SweepSim>>), CliError> {
        let mut rows = gammas
            .par_iter()
            .map(|&g| sweep_sparsity(&layer, &table, &[g], t, mode).map(|mut r| r.remove(0)))
            .collect::<spikecost::Result<Vec<_>>>()
            .map_err(compute)?;
        rows.sort_by(|a, b| b.gamma.total_cmp(&a.gamma));
        if !args.simulate {
            return Ok((rows, None));
        }
        let sims = rows
            .par_iter()
            .map(|r| {
                let cfg = sim_config(r.gamma, args.seed, t, params);
                Ok(SweepSim {
                    snn: simulate_layer(&layer, NetKind::Snn, &cfg, &table)?,
                    ann: simulate_layer(&layer, NetKind::Ann, &cfg, &table)?,
                })
            })
            .collect::<spikecost::Result<Vec<_>>>()
            .map_err(compute)?;
        Ok((rows, Some(sims)))
    })?;

    if args.model.format == Format::Csv {
        return sweep_csv(&rows, sims.as_deref()).map_err(compute);
    }
    let mut out = String::new();
    let _ = writeln!(out, "layer {}, timesteps {t}, mode {}\n", describe_layer(&layer), mode_name(args.mode));
    let _ = write!(out, "{:>8}{:>14}{:>14}{:>10}", "gamma", "snn total", "ann total", "ann/snn");
    if sims.is_some() {
        let _ = write!(out, "{:>14}{:>10}{:>14}{:>10}", "snn sim", "dev", "ann sim", "dev");
    }
    out.push('\n');
    for (i, r) in rows.iter().enumerate() {
        let _ = write!(
            out,
            "{:>8}{:>14}{:>14}{:>10}",
            r.gamma,
            format_energy(r.snn.total_pj),
            format_energy(r.ann.total_pj),
            sig3(r.ann.total_pj / r.snn.total_pj)
        );
        if let Some(s) = &sims {
            for c in [&s[i].snn, &s[i].ann] {
                let _ = write!(out, "{:>14}{:>10}", format_energy(c.simulated.total_pj), percent(c.total_deviation()));
            }
        }
        out.push('\n');
    }
    Ok(out)
}

/// Comparison rows as CSV: `net,component,simulated_pj,analytic_pj,rel_dev`.
fn comparison_csv(cmps: &[Comparison]) -> String {
    let mut out = String::from("net,component,simulated_pj,analytic_pj,rel_dev\n");
    for c in cmps {
        let kind = c.simulated.kind.as_str();
        for (name, s, a, d) in c.rows() {
            let _ = writeln!(out, "{kind},{name},{s},{a},{d}");
        }
        let _ = writeln!(out, "{kind},empirical_density,{},{},", c.empirical_density, c.empirical_density);
    }
    out
}

fn counts_path(base: &Path, net: NetKind, both: bool) -> PathBuf {
    if !both {
        return base.to_path_buf();
    }
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let suffix = match net {
        NetKind::Snn => "snn",
        NetKind::Ann => "ann",
    };
    let name = match base.extension() {
        Some(ext) => format!("{stem}_{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{suffix}"),
    };
    base.with_file_name(name)
}

fn counts_text(out: &mut String, c: &OpCounts) {
    for (name, v) in c.entries() {
        let _ = writeln!(out, "  {name:<16}{v:>16}");
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<String, CliError> {
    let (table, layer) = validate_common(&args.model)?;
    if !(0.0..=1.0).contains(&args.density) {
        return Err(config(format!("density must be within [0, 1], got {}", args.density)));
    }
    let cfg = SimConfig {
        traversal: if args.dense_traversal { Traversal::Dense } else { Traversal::EventDriven },
        spike_reads: if args.read_every_position { SpikeReads::EveryPosition } else { SpikeReads::ActiveOnly },
        ann_zero_skip: args.ann_skip.into(),
        ..sim_config(args.density, args.seed, args.model.timesteps, args.neuron.params()?)
    };
    let nets: &[NetKind] = match args.net {
        Net::Snn => &[NetKind::Snn],
        Net::Ann => &[NetKind::Ann],
        Net::Both => &[NetKind::Snn, NetKind::Ann],
    };
    let pool = thread_pool(args.threads)?;
    let cmps = pool
        .install(|| {
            nets.par_iter().map(|&n| simulate_layer(&layer, n, &cfg, &table)).collect::<spikecost::Result<Vec<_>>>()
        })
        .map_err(compute)?;

    if let Some(base) = &args.counts {
        for c in &cmps {
            let path = counts_path(base, c.net, nets.len() > 1);
            write_file(&path, &c.counts.to_csv().map_err(compute)?)?;
        }
    }
    if args.model.format == Format::Csv {
        return Ok(comparison_csv(&cmps));
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "layer {}, density {}, seed {}, timesteps {}",
        describe_layer(&layer),
        args.density,
        args.seed,
        args.model.timesteps
    );
    for c in &cmps {
        let _ = writeln!(out, "\n{} (empirical density {})", c.simulated.kind, c.empirical_density);
        counts_text(&mut out, &c.counts);
        let _ = writeln!(out, "  {:<16}{:>14}{:>14}{:>12}", "component", "simulated", "analytic", "deviation");
        for (name, s, a, d) in c.rows() {
            let _ = writeln!(out, "  {name:<16}{:>14}{:>14}{:>12}", format_energy(s), format_energy(a), percent(d));
        }
    }
    Ok(out)
}

fn load_records(survey: &str) -> Result<Vec<AcceleratorRecord>, CliError> {
    match survey {
        "imagenet" => Ok(bundled_imagenet()),
        "audio" => Ok(bundled_audio()),
        path => load_survey(path).map_err(config),
    }
}

pub fn cmd_pareto(args: &ParetoArgs) -> Result<String, CliError> {
    let records = load_records(&args.survey)?;
    if let Some(t) = args.task {
        if !records.iter().any(|r| r.task == t) {
            return Err(config(format!("survey has no records for task {t}")));
        }
    }
    if args.format == Format::Csv {
        return emit_scatter(&records, args.task).map_err(compute);
    }
    let rows = scatter_rows(&records, args.task).map_err(compute)?;
    let mut out = String::new();
    let _ = writeln!(out, "{:<14}{:<12}{:<10}{:>10}{:>14}  frontier", "name", "family", "task", "error %", "energy");
    for r in &rows {
        let _ = writeln!(
            out,
            "{:<14}{:<12}{:<10}{:>10}{:>14}  {}",
            r.name,
            r.family,
            r.task,
            r.error_pct,
            format_energy(r.energy_nj * 1e3),
            if r.on_frontier { "yes" } else { "" }
        );
    }
    for t in Task::ALL {
        if args.task.is_some_and(|want| want != t) || !records.iter().any(|r| r.task == t) {
            continue;
        }
        let f = frontier(&records, Some(t)).map_err(compute)?;
        let _ = writeln!(out, "\ntask {t}\n  frontier: {}", f.frontier.join(", "));
        for (name, by) in &f.dominated {
            let by: Vec<&str> = by.iter().map(String::as_str).collect();
            let _ = writeln!(out, "  {name} dominated by {} ({})", by.len(), by.join(", "));
        }
    }
    Ok(out)
}

pub fn execute(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Estimate(a) => cmd_estimate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Pareto(a) => cmd_pareto(a),
    }
}

fn out_path(cli: &Cli) -> Option<&Path> {
    match &cli.command {
        Command::Estimate(a) => a.model.out.as_deref(),
        Command::Sweep(a) => a.model.out.as_deref(),
        Command::Simulate(a) => a.model.out.as_deref(),
        Command::Pareto(a) => a.out.as_deref(),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Output { path: path.to_path_buf(), source })
}

/// Parses `args` (program name first), runs the command and writes its
/// output to `--out` or `stdout`. Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = execute(&cli).and_then(|text| match out_path(&cli) {
        Some(p) => write_file(p, &text),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Output { path: PathBuf::from("<stdout>"), source }),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
