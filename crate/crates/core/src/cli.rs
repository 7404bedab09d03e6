//! Command-line front end. Exit codes: 0 success, 1 domain failure
//! (violations, oracle mismatch), 2 usage, parse or I/O failure.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use evsoc::config::{load_network, validate_network, NetworkConfig};
use evsoc::event::PixelEvent;
use evsoc::io::{read_events, EventFormat, ReadOptions};
use evsoc::oracle::{self, OracleConfig, SuiteReport};
use evsoc::router::RouteTable;
use evsoc::sim::{self, SimOptions, Simulator, TickSchedule, TimingModel};

#[derive(Parser, Debug)]
#[command(name = "evsoc", version, about = "Event-driven vision SoC simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a network description against the chip resource profile.
    Validate { config: PathBuf },
    /// Simulate an event file through a network.
    Run(RunArgs),
    /// Run the randomized oracle-equivalence suites.
    OracleCheck(OracleArgs),
    /// Print resource usage, the route table and optional event statistics.
    Stats {
        config: PathBuf,
        events: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[arg(long)]
        allow_unsorted: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Binary,
}

impl From<Format> for EventFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => EventFormat::Csv,
            Format::Binary => EventFormat::Binary,
        }
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    config: PathBuf,
    events: PathBuf,
    /// Event file format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write the line-delimited trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write one JSON readout record per tick here.
    #[arg(long)]
    readout: Option<PathBuf>,
    /// Readout tick period in microseconds.
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    ticks_readout: u64,
    /// Leak tick period in microseconds.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    ticks_leak: Option<u64>,
    /// Simulate until this time in microseconds.
    #[arg(long)]
    end_time: Option<u64>,
    /// Seed for random memory contents.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    allow_unsorted: bool,
    /// JSON file overriding the timing constants.
    #[arg(long)]
    timing_profile: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    All,
    Linearity,
    Thresholded,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long, default_value_t = 1000)]
    trials: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Suite::All)]
    suite: Suite,
    /// Largest input width and height.
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u32).range(1..=128))]
    max_dim: u32,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(1..=1024))]
    max_channels: u32,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..=1024))]
    max_features: u32,
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..=250))]
    max_events: u64,
    /// Check a subject whose sweep stops one kernel offset early.
    #[arg(long, hide = true)]
    mutate: bool,
}

enum Failure {
    Domain,
    Usage(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { config } => validate(&config),
        Command::Run(args) => run(&args),
        Command::OracleCheck(args) => oracle_check(&args),
        Command::Stats { config, events, format, allow_unsorted } => stats(&config, events.as_deref(), format, allow_unsorted),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load(config: &Path) -> Result<NetworkConfig> {
    load_network(config).with_context(|| format!("cannot load {}", config.display()))
}

fn validate(config: &Path) -> Result<(), Failure> {
    let net = load(config)?;
    let report = validate_network(&net, &net.effective_profile());
    print!("{report}");
    if report.is_ok() {
        Ok(())
    } else {
        Err(Failure::Domain)
    }
}

fn load_events(path: &Path, format: Option<Format>, allow_unsorted: bool, net: &NetworkConfig) -> Result<Vec<PixelEvent>> {
    let format = format.map(EventFormat::from).unwrap_or_else(|| EventFormat::from_path(path));
    let opts = ReadOptions {
        allow_unsorted,
        sensor_width: net.preproc.sensor_width,
        sensor_height: net.preproc.sensor_height,
    };
    read_events(path, format, &opts).with_context(|| format!("cannot read {} as {format}", path.display()))
}

fn run(args: &RunArgs) -> Result<(), Failure> {
    let net = load(&args.config)?;
    let report = validate_network(&net, &net.effective_profile());
    if !report.is_ok() {
        eprint!("{report}");
        return Err(Failure::Domain);
    }
    let timing = match &args.timing_profile {
        Some(p) => TimingModel::load(p).with_context(|| format!("cannot load {}", p.display()))?,
        None => TimingModel::default(),
    };
    let events = load_events(&args.events, args.format, args.allow_unsorted, &net)?;
    let options = SimOptions {
        seed: args.seed,
        base_dir: args.config.parent().map(Path::to_path_buf).unwrap_or_default(),
        record_trace: args.trace.is_some(),
        zero_skip: true,
    };
    let ticks = TickSchedule {
        leak_period_us: args.ticks_leak,
        readout_period_us: Some(args.ticks_readout),
        end_us: args.end_time,
    };
    let sim = Simulator::new(&net, &options).context("cannot load memory contents")?;
    let (outputs, trace) = sim.run(&events, &ticks).context("simulation failed")?;

    if let Some(path) = &args.trace {
        let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        trace.write_jsonl(BufWriter::new(file)).context("cannot write trace")?;
    }
    if let Some(path) = &args.readout {
        let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        let mut w = BufWriter::new(file);
        for o in &outputs {
            serde_json::to_writer(&mut w, o).context("cannot write readout")?;
            writeln!(w).context("cannot write readout")?;
        }
        w.flush().context("cannot write readout")?;
    }

    let s = &trace.summary;
    println!("input events      {}", s.input_events);
    println!("preproc passed    {} (dropped {})", s.preproc_passed, s.preproc_dropped);
    println!("{:<8} {:>10} {:>12} {:>10} {:>10}", "core", "events in", "updates", "spikes", "events out");
    for (id, c) in &s.cores {
        println!("core{:<4} {:>10} {:>12} {:>10} {:>10}", id, c.events_in, c.updates(), c.spikes, c.events_out);
    }
    println!("readout spikes    {} (dropped {})", s.readout_spikes, s.readout_dropped);
    println!("readout ticks     {}", s.readout_ticks);
    if let Some(last) = outputs.last() {
        println!("last max class    {}", last.max_class);
    }
    println!("router deliveries {} (faults {}, malformed {})", s.ledger.total_deliveries(), s.ledger.faults, s.malformed);
    println!("ledger conserved  {}", s.ledger.is_conserved(&RouteTable::from_config(&net)));
    if let Some(path) = sim::deepest_path(&net) {
        let ns = sim::estimate_latency(&net, &timing, &path).context("latency path")?;
        let names: Vec<String> = path.iter().map(ToString::to_string).collect();
        println!("latency           {:.1} ns via {}", ns, names.join(" -> "));
    }
    for (&hops, &n) in &s.hops_to_readout {
        println!("  {n} readout events after {hops} core(s): {:.1} ns", timing.latency_for_layers(hops.into()));
    }
    let load = sim::update_load(s);
    let util = sim::account_throughput(&load, &timing);
    println!("simulated time    {} us", s.duration_us());
    for c in &util.cores {
        let flag = if c.saturated { " SATURATED" } else { "" };
        println!("  core{} utilization {:.4}{}", c.core, c.utilization, flag);
    }
    if args.trace.is_some() {
        println!("trace records     {}", trace.records.len());
        println!("trace digest      {}", trace.digest());
    }
    Ok(())
}

fn print_suite(r: &SuiteReport) -> bool {
    match &r.counterexample {
        None => {
            println!("{}: {}/{} trials match", r.name, r.passed, r.trials);
            true
        }
        Some(ce) => {
            println!("{}: MISMATCH at trial {} after {} passing", r.name, ce.trial, r.passed);
            println!("  reproduce with seed {}: {}", ce.seed, ce.description);
            false
        }
    }
}

fn oracle_check(args: &OracleArgs) -> Result<(), Failure> {
    if args.trials == 0 {
        println!("no trials");
        return Ok(());
    }
    let cfg = OracleConfig {
        trials: args.trials,
        seed: args.seed,
        max_dim: args.max_dim,
        max_channels: args.max_channels,
        max_features: args.max_features,
        max_events: args.max_events as usize,
        ..Default::default()
    };
    let mut ok = true;
    if matches!(args.suite, Suite::All | Suite::Linearity) {
        let subject = if args.mutate { oracle::off_by_one_membrane } else { oracle::core_membrane };
        ok &= print_suite(&oracle::check_linearity(&cfg, subject));
    }
    if matches!(args.suite, Suite::All | Suite::Thresholded) {
        ok &= print_suite(&oracle::check_thresholded(&cfg, oracle::core_spikes));
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Domain)
    }
}

fn stats(config: &Path, events: Option<&Path>, format: Option<Format>, allow_unsorted: bool) -> Result<(), Failure> {
    let net = load(config)?;
    let profile = net.effective_profile();
    println!("{:<8} {:>12} {:>12} {:>12} {:>12} {:>9}", "core", "kernel", "kernel cap", "neurons", "neuron cap", "out dims");
    for layer in &net.layers {
        let cap = profile.core(layer.core_id);
        let dims = layer
            .pooled_output_dims()
            .map(|(w, h)| format!("{}x{}x{}", layer.out_features, w, h))
            .unwrap_or_else(|_| "invalid".into());
        let neurons = layer.neuron_words().map(|n| n.to_string()).unwrap_or_else(|_| "-".into());
        let (kcap, ncap) = cap.map(|c| (c.kernel_words.to_string(), c.neuron_words.to_string())).unwrap_or(("-".into(), "-".into()));
        println!("core{:<4} {:>12} {:>12} {:>12} {:>12} {:>9}", layer.core_id, layer.kernel_words(), kcap, neurons, ncap, dims);
    }
    let kernel: u64 = net.layers.iter().map(|l| l.kernel_words()).sum();
    let neurons: u64 = net.layers.iter().filter_map(|l| l.neuron_words().ok()).sum();
    println!("total    {kernel:>12} {:>12} {neurons:>12} {:>12}", profile.total_synaptic_words, profile.total_neurons);
    println!();
    print!("{}", RouteTable::from_config(&net));
    if let Some(path) = sim::deepest_path(&net) {
        let ns = sim::estimate_latency(&net, &TimingModel::default(), &path).context("latency path")?;
        println!("\ndeepest path latency {ns:.1} ns");
    }
    if let Some(events) = events {
        let ev = load_events(events, format, allow_unsorted, &net)?;
        println!();
        println!("events            {}", ev.len());
        if let (Some(first), Some(last)) = (ev.first(), ev.last()) {
            let span = last.t - first.t;
            println!("time span         {} us ({} .. {})", span, first.t, last.t);
            if span > 0 {
                println!("mean rate         {:.1} events/s", ev.len() as f64 * 1e6 / span as f64);
            }
        }
        let on = ev.iter().filter(|e| e.p == 1).count();
        println!("polarity on/off   {}/{}", on, ev.len() - on);
        let pixels: BTreeSet<(u16, u16)> = ev.iter().map(|e| (e.x, e.y)).collect();
        println!("active pixels     {}", pixels.len());
    }
    Ok(())
}
