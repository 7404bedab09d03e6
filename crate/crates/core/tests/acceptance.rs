//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use evsoc::config::{
    load_network, parse_topology, validate_network, ChipProfile, Constraint, Destination, LayerConfig, NetworkConfig,
    TopologyOptions,
};
use evsoc::conv::{compress_neuron_address, decompress_neuron_address, sweep_targets, NeuronDims};
use evsoc::event::{FeatureEvent, PixelEvent, Port};
use evsoc::io::{read_events, synthetic_stream, write_events, EventFormat, ReadOptions};
use evsoc::oracle::{self, OracleConfig};
use evsoc::preproc::{PreprocConfig, Roi};
use evsoc::readout::{Readout, ReadoutConfig, ReadoutMode};
use evsoc::router::RouteTable;
use evsoc::sim::{
    account_throughput, deepest_path, estimate_latency, update_load, SimOptions, Simulator, TickSchedule, TimingModel,
    UpdateLoad,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn linearity_oracle() -> Outcome {
    let cfg = OracleConfig { trials: 1000, seed: 0x5EED, ..Default::default() };
    let start = Instant::now();
    let report = oracle::check_linearity(&cfg, oracle::core_membrane);
    let elapsed = start.elapsed();
    if let Some(ce) = report.counterexample {
        return Err(format!("trial {} seed {}: {}", ce.trial, ce.seed, ce.description));
    }
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:.2?}"))?;
    Ok(format!("{}/{} instances exact in {elapsed:.2?}", report.passed, report.trials))
}

fn thresholded_equivalence() -> Outcome {
    let cfg = OracleConfig { trials: 1000, seed: 0xC0FFEE, ..Default::default() };
    let report = oracle::check_thresholded(&cfg, oracle::core_spikes);
    if let Some(ce) = report.counterexample {
        return Err(format!("trial {} seed {}: {}", ce.trial, ce.seed, ce.description));
    }
    // make sure the instances actually exercised the thresholds
    let spikes: usize = (0..50).map(|t| oracle::naive_spikes(&oracle::random_threshold_instance(&cfg, cfg.trial_seed(t))).len()).sum();
    ensure(spikes > 0, || "instances produced no spikes".into())?;
    Ok(format!("{}/{} spike sequences identical ({spikes} spikes in the first 50)", report.passed, report.trials))
}

fn sweep_congruence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut stride2_pairs = 0;
    for i in 0..10_000 {
        let k = rng.gen_range(1..=16u32);
        let s = [1u32, 2, 4, 8][rng.gen_range(0..4)];
        let p = rng.gen_range(0..=k / 2 + 1);
        let lo = k.saturating_sub(2 * p).max(1);
        let w = rng.gen_range(lo..=lo + 20);
        let h = rng.gen_range(lo..=lo + 20);
        let f = rng.gen_range(1..=4u32);
        let layer = LayerConfig::conv(0, 2, f, (w, h), (k, k), 1).with_stride(s, s).with_padding(p, p);
        let (ow, oh) = layer.output_dims().map_err(|e| e.to_string())?;
        let e = FeatureEvent::new(rng.gen_range(0..2), rng.gen_range(0..w) as u16, rng.gen_range(0..h) as u16);
        let targets = sweep_targets(&e, &layer).map_err(|e| e.to_string())?;
        let (xp, yp) = (u32::from(e.x) + p, u32::from(e.y) + p);

        for t in &targets {
            ensure(t.xo * s + t.xk == xp && t.yo * s + t.yk == yp, || format!("pair {i}: {t:?} not congruent"))?;
            ensure(t.xk < k && t.yk < k && t.xo < ow && t.yo < oh, || format!("pair {i}: {t:?} out of range"))?;
        }
        let got: BTreeSet<_> = targets.iter().map(|t| (t.f, t.xo, t.yo, t.xk, t.yk)).collect();
        ensure(got.len() == targets.len(), || format!("pair {i}: duplicate targets"))?;
        let mut want = BTreeSet::new();
        for ff in 0..f {
            for yo in 0..oh {
                for xo in 0..ow {
                    if xp >= xo * s && xp - xo * s < k && yp >= yo * s && yp - yo * s < k {
                        want.insert((ff, xo, yo, xp - xo * s, yp - yo * s));
                    }
                }
            }
        }
        ensure(got == want, || format!("pair {i}: sweep misses or adds targets"))?;
        let bound = f * k.div_ceil(s) * k.div_ceil(s);
        ensure(targets.len() as u32 <= bound, || format!("pair {i}: fan-out {} > {bound}", targets.len()))?;
        if s == 2 {
            let xs: Vec<u32> = targets.iter().filter(|t| t.f == 0 && t.yk == targets[0].yk).map(|t| t.xk).collect();
            for pair in xs.windows(2) {
                ensure(pair[1] == pair[0] + 2, || format!("pair {i}: stride-2 offsets {xs:?}"))?;
                stride2_pairs += 1;
            }
        }
    }
    ensure(stride2_pairs > 0, || "no stride-2 skips exercised".into())?;
    Ok(format!("10000 pairs congruent and complete; {stride2_pairs} stride-2 skips checked"))
}

fn address_bijection() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut total = 0u64;
    for _ in 0..20 {
        let dims = NeuronDims::new(rng.gen_range(1..=64), rng.gen_range(1..=64), rng.gen_range(1..=64));
        let mut seen = vec![false; dims.len() as usize];
        for f in 0..dims.features {
            for y in 0..dims.height {
                for x in 0..dims.width {
                    let n = compress_neuron_address(f, x, y, dims).map_err(|e| e.to_string())?;
                    ensure(n < dims.len(), || format!("{dims:?}: address {n} outside range"))?;
                    ensure(!seen[n as usize], || format!("{dims:?}: address {n} hit twice"))?;
                    seen[n as usize] = true;
                    let back = decompress_neuron_address(n, dims).map_err(|e| e.to_string())?;
                    ensure(back == (f, x, y), || format!("{dims:?}: {n} -> {back:?}"))?;
                }
            }
        }
        ensure(seen.iter().all(|&s| s), || format!("{dims:?}: gap in the image"))?;
        ensure(compress_neuron_address(dims.features, 0, 0, dims).is_err(), || "out-of-range feature accepted".into())?;
        total += u64::from(dims.len());
    }
    Ok(format!("20 dimension triples, {total} addresses round-trip onto gap-free ranges"))
}

fn small_net(layers: Vec<LayerConfig>) -> NetworkConfig {
    NetworkConfig {
        preproc: PreprocConfig {
            roi: Some(Roi::new(0, 0, 16, 16)),
            destinations: vec![Destination::new(Port::Core(0), 0)],
            ..Default::default()
        },
        layers,
        readout: Some(ReadoutConfig::new(16, ReadoutMode::BinCount)),
        profile: None,
    }
}

fn conv16(core: u8, c: u32, f: u32) -> LayerConfig {
    LayerConfig::conv(core, c, f, (16, 16), (3, 3), 10).with_padding(1, 1)
}

fn expect_one(name: &str, net: &NetworkConfig, want: Constraint) -> Result<String, String> {
    let report = validate_network(net, &ChipProfile::default());
    let got = report.constraints();
    ensure(got == vec![want], || format!("{name}: expected only [{}], got {report}", want.name()))?;
    Ok(format!("{name} -> {}", want.name()))
}

fn validation_limits() -> Outcome {
    let mut lines = Vec::new();
    let base = small_net(vec![conv16(0, 2, 4)]);
    ensure(validate_network(&base, &ChipProfile::default()).is_ok(), || "baseline has violations".into())?;

    let mut net = base.clone();
    let l = &mut net.layers[0];
    (l.kernel_w, l.kernel_h, l.pad_x, l.pad_y) = (17, 17, 8, 8);
    lines.push(expect_one("kernel 17x17", &net, Constraint::MaxKernelSize)?);

    let mut net = base.clone();
    net.layers[0] = LayerConfig::conv(0, 2, 1025, (16, 16), (1, 1), 10);
    net.preproc.roi = Some(Roi::new(0, 0, 1, 1));
    net.layers[0].in_width = 1;
    net.layers[0].in_height = 1;
    lines.push(expect_one("1025 features", &net, Constraint::FeaturesPerLayer)?);

    // one core of each capacity class: 64Ki on core 0, 32Ki on core 2, 16Ki on core 4
    let profile = ChipProfile::default();
    for (core, cap) in [(0u8, 65_536u32), (2, 32_768), (4, 16_384)] {
        ensure(profile.core(core).map(|c| c.fc_synapses) == Some(cap.into()), || format!("core{core} cap differs"))?;
        let fc_in = 16 * 16 * 2;
        let outputs = cap / fc_in + 1;
        let mut net = base.clone();
        net.preproc.destinations = vec![Destination::new(Port::Core(core), 0)];
        net.layers = vec![LayerConfig::fully_connected(core, 2, (16, 16), outputs, 10)];
        let within = {
            let mut ok = net.clone();
            ok.layers[0].out_features = cap / fc_in;
            validate_network(&ok, &profile).is_ok()
        };
        ensure(within, || format!("FC exactly at the core{core} cap is rejected"))?;
        lines.push(expect_one(&format!("FC {} synapses on core{core}", fc_in * outputs), &net, Constraint::FcSynapseCap)?);
    }

    let mut net = small_net(vec![conv16(0, 2, 4), conv16(1, 4, 4), conv16(2, 4, 4), conv16(3, 4, 4)]);
    net.layers[0].destinations = (1..=3).map(|c| Destination::new(Port::Core(c), 0)).collect();
    lines.push(expect_one("fan-out 3", &net, Constraint::Fanout)?);

    let l0 = conv16(0, 2, 4).with_destination(Port::Core(1), 0);
    let l1 = conv16(1, 8, 4).with_destination(Port::Core(2), 0);
    let l2 = conv16(2, 4, 4).with_destination(Port::Core(1), 4);
    lines.push(expect_one("cycle core1 -> core2 -> core1", &small_net(vec![l0, l1, l2]), Constraint::FeedForward)?);

    let nmnist = parse_topology("34x34x2-16C5-16C3-P2-8C3-F10", TopologyOptions::default()).map_err(|e| e.to_string())?;
    let report = validate_network(&nmnist, &ChipProfile::default());
    ensure(report.is_ok(), || format!("NMNIST: {report}"))?;
    let shipped = load_network(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/nmnist.json")).map_err(|e| e.to_string())?;
    ensure(validate_network(&shipped, &ChipProfile::default()).is_ok(), || "configs/nmnist.json has violations".into())?;
    lines.push("34x34x2-16C5-16C3-P2-8C3-F10 clean".into());
    Ok(lines.join("; "))
}

fn chain(layers: usize, pool_first: bool) -> NetworkConfig {
    let mut topo = String::from("32x32x2");
    for i in 0..layers {
        topo.push_str("-4C3");
        if i == 0 && pool_first {
            topo.push_str("-P2");
        }
    }
    parse_topology(&topo, TopologyOptions { same_padding: true, ..Default::default() }).expect("valid topology")
}

fn timing_calibration() -> Outcome {
    let t = TimingModel::default();
    let latency = |net: &NetworkConfig| {
        let path = deepest_path(net).ok_or("readout unreachable")?;
        estimate_latency(net, &t, &path).map_err(|e| e.to_string())
    };
    let one = latency(&chain(1, false))?;
    let nine = latency(&chain(9, false))?;
    for (got, want) in [(one, 1580.0), (nine, 3360.0)] {
        ensure((got - want).abs() <= want * 0.005, || format!("{got} ns vs {want} ns"))?;
    }
    for net in [chain(1, false), chain(9, false)] {
        let layer = &net.layers[0];
        ensure((layer.kernel_w, layer.stride_x, layer.pad_x) == (3, 1, 1), || "not a 3x3/s1/p1 chain".into())?;
        let report = validate_network(&net, &ChipProfile::default());
        ensure(report.is_ok(), || format!("{report}"))?;
    }
    let pooled = latency(&chain(2, true))?;
    let plain = latency(&chain(2, false))?;
    ensure(pooled == plain, || format!("pooling changed latency: {pooled} vs {plain}"))?;
    Ok(format!("1 layer {:.3} us, 9 layers {:.3} us, pooling +0 ns", one / 1e3, nine / 1e3))
}

fn throughput_accounting() -> Outcome {
    let timing = TimingModel::default();
    // 30,000 events x 1000 features of a 1x1 layer = 30M updates within 1 s
    let mut layer = LayerConfig::conv(0, 1, 1000, (1, 1), (1, 1), i16::MAX);
    layer.threshold_strict = true;
    layer.weights = Some(evsoc::config::Contents::Values(vec![1; 1000]));
    let mut core = evsoc::conv::ConvCore::new(layer).map_err(|e| e.to_string())?;
    for _ in 0..30_000 {
        core.process(FeatureEvent::new(0, 0, 0)).map_err(|e| e.to_string())?;
    }
    let updates = core.stats().updates();
    ensure(updates == 30_000_000, || format!("{updates} updates"))?;
    let report = account_throughput(&UpdateLoad::single(0, updates, 1e9), &timing);
    let u = report.cores[0].utilization;
    ensure((u - 1.0).abs() <= 0.01, || format!("utilization {u}"))?;
    ensure(!report.cores[0].saturated, || "30M updates/s flagged".into())?;
    let over = account_throughput(&UpdateLoad::single(0, 30_100_000, 1e9), &timing);
    ensure(over.cores[0].saturated, || "30.1M updates/s not flagged".into())?;
    let half = account_throughput(&UpdateLoad::single(0, 15_000_000, 1e9), &timing);
    ensure((half.cores[0].utilization - 0.5).abs() <= 0.005, || "15M is not half load".into())?;
    let idle = account_throughput(&UpdateLoad::single(0, 0, 1e9), &timing);
    ensure(idle.cores[0].utilization == 0.0, || "idle core busy".into())?;
    Ok(format!("30M updates/s -> utilization {u:.3}; saturation flagged at 30.1M (capacity {:.4e}/s)", report.capacity_per_core))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let events = dir.path().join("in.csv");
    write_events(&events, EventFormat::Csv, &synthetic_stream(8, 5_000, 128, 128, 20), 128, 128).map_err(|e| e.to_string())?;
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/nmnist.json");
    let digest = |name: &str| -> Result<(String, Vec<u8>), String> {
        let trace = dir.path().join(name);
        let out = Command::new(env!("CARGO_BIN_EXE_evsoc"))
            .args(["run", config])
            .arg(&events)
            .args(["--seed", "42", "--ticks-readout", "10000", "--ticks-leak", "1000", "--trace"])
            .arg(&trace)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
        let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
        let line = stdout.lines().find(|l| l.starts_with("trace digest")).ok_or("no digest printed")?;
        let bytes = std::fs::read(&trace).map_err(|e| e.to_string())?;
        Ok((line.split_whitespace().last().unwrap_or_default().to_string(), bytes))
    };
    let (a, ta) = digest("a.jsonl")?;
    let (b, tb) = digest("b.jsonl")?;
    ensure(a == b && ta == tb, || format!("digests differ: {a} vs {b}"))?;
    ensure(ta.len() > 1000, || "trace is nearly empty".into())?;
    Ok(format!("two runs with --seed 42: sha256 {}…, {} trace bytes identical", &a[..16], ta.len()))
}

fn readout_windows() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut checked = 0;
    for trial in 0..300 {
        let n = rng.gen_range(1..=16u8);
        let w = rng.gen_range(1..=8u32);
        let mode = if rng.gen_bool(0.2) { ReadoutMode::BinCount } else { ReadoutMode::MovingAverage(w) };
        let mut cfg = ReadoutConfig::new(n, mode);
        let thresholds: Vec<u32> = (0..n).map(|_| rng.gen_range(0..5)).collect();
        cfg.thresholds = Some(thresholds.clone());
        let window = cfg.window() as usize;
        let mut readout = Readout::new(cfg);
        let mut bins: Vec<Vec<u64>> = Vec::new();
        for _ in 0..rng.gen_range(1..30) {
            let mut bin = vec![0u64; usize::from(n)];
            let spikes = rng.gen_range(0..40);
            for _ in 0..spikes {
                // a small set of classes makes ties common
                let c = rng.gen_range(0..n.min(3));
                bin[usize::from(c)] += 1;
                readout.accumulate(c.into()).map_err(|e| e.to_string())?;
                ensure(readout.latched().tick + 1 == bins.len() as u64 || bins.is_empty(), || "latched output moved".into())?;
            }
            bins.push(bin);
            let out = readout.on_tick();
            ensure(&out == readout.latched(), || "output not latched".into())?;
            let k = bins.len() - 1;
            ensure(out.tick == k as u64, || format!("tick index {}", out.tick))?;
            let first = k.saturating_sub(window - 1);
            for c in 0..usize::from(n) {
                let sum: u64 = bins[first..=k].iter().map(|b| b[c]).sum();
                ensure(out.numerators[c] == sum && out.denominator as usize == window, || {
                    format!("trial {trial} tick {k} class {c}: {}/{} vs {sum}/{window}", out.numerators[c], out.denominator)
                })?;
                let flag = sum >= u64::from(thresholds[c]) * window as u64;
                ensure(out.over_threshold[c] == flag, || format!("trial {trial}: threshold flag of class {c}"))?;
            }
            let max = *out.numerators.iter().max().unwrap_or(&0);
            let lowest = out.numerators.iter().position(|&v| v == max).unwrap_or(0);
            ensure(usize::from(out.max_class) == lowest, || format!("trial {trial}: argmax {} vs {lowest}", out.max_class))?;
            checked += 1;
        }
    }
    // closed-form script: constant rate r gives r after the window fills
    let mut readout = Readout::new(ReadoutConfig::new(2, ReadoutMode::MovingAverage(4)));
    let mut values = Vec::new();
    for _ in 0..6 {
        for _ in 0..8 {
            readout.accumulate(1).map_err(|e| e.to_string())?;
        }
        let out = readout.on_tick();
        values.push((out.numerators[1], out.denominator));
    }
    ensure(values == vec![(8, 4), (16, 4), (24, 4), (32, 4), (32, 4), (32, 4)], || format!("{values:?}"))?;
    Ok(format!("{checked} randomized ticks match closed-form means, flags, lowest-index argmax and latching"))
}

fn end_to_end_smoke() -> Outcome {
    let net = load_network(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/smoke.json")).map_err(|e| e.to_string())?;
    let report = validate_network(&net, &net.effective_profile());
    ensure(report.is_ok(), || format!("{report}"))?;
    let pre = &net.preproc;
    ensure(pre.pool_x == 2 && pre.roi.is_some() && pre.polarity == evsoc::preproc::PolarityMode::Merged, || {
        "smoke preproc is not pool 1:2 + ROI + merged".into()
    })?;
    ensure(net.layers.len() == 4, || "not a 4-layer network".into())?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("recording.spke");
    write_events(&path, EventFormat::Binary, &synthetic_stream(2024, 120_000, 128, 128, 5), 128, 128)
        .map_err(|e| e.to_string())?;
    let events: Vec<PixelEvent> = read_events(&path, EventFormat::Binary, &ReadOptions::default()).map_err(|e| e.to_string())?;

    let start = Instant::now();
    let options = SimOptions { seed: 11, record_trace: false, ..Default::default() };
    let sim = Simulator::new(&net, &options).map_err(|e| e.to_string())?;
    let (outputs, trace) = sim.run(&events, &TickSchedule::readout(10_000).with_leak(1_000)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();

    let s = &trace.summary;
    let table = RouteTable::from_config(&net);
    ensure(s.input_events == events.len() as u64 && s.input_events >= 100_000, || format!("{} inputs", s.input_events))?;
    ensure(s.ledger.is_conserved(&table), || format!("ledger not conserved: {:?}", s.ledger))?;
    let expected: u64 = s.ledger.emitted.iter().map(|(p, &n)| n * table.fanout(*p) as u64).sum();
    ensure(s.ledger.total_deliveries() == expected, || "deliveries != emissions x fan-out".into())?;
    ensure(s.readout_spikes > 0 && !outputs.is_empty(), || "nothing reached the readout".into())?;
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:.2?}"))?;
    let util = account_throughput(&update_load(s), &TimingModel::default());
    Ok(format!(
        "{} events in {elapsed:.2?}, {} deliveries = emissions x fan-out, {} readout spikes, peak utilization {:.3}",
        s.input_events,
        s.ledger.total_deliveries(),
        s.readout_spikes,
        util.cores.iter().map(|c| c.utilization).fold(0.0, f64::max)
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("linearity oracle", linearity_oracle),
        ("thresholded equivalence", thresholded_equivalence),
        ("sweep congruence and fan-out", sweep_congruence),
        ("address compression bijectivity", address_bijection),
        ("validation limits", validation_limits),
        ("timing calibration", timing_calibration),
        ("throughput accounting", throughput_accounting),
        ("determinism", determinism),
        ("readout windows", readout_windows),
        ("end-to-end smoke", end_to_end_smoke),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
