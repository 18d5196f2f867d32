//! Command-line front end: key a deployment from a ruleset, serve one
//! role over UDP, or run the measurement suites.

use std::fmt::Write as _;
use std::fs;
use std::net::{SocketAddr, UdpSocket};
use std::path::PathBuf;
use std::process::ExitCode;
use std::thread;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};

use splitbox::bench::{
    run_dummyrate, run_equivalence, run_latency, run_lsweep, run_throughput,
    BenchConfig, Carrier,
};
use splitbox::firewall::{
    decode_header, decode_trace, encode_header, generate_trace, parse_rules,
    TraceRecord, TraceSpec, HEADER_BITS,
};
use splitbox::protocol::bundle::{encode_setup, RoleConfig};
use splitbox::protocol::{global_setup, ProtocolRng, Ratio};
use splitbox::roles::{
    ClientInput, ClientOutcome, ClientState, EntryState, ProcessorState,
    ReassemblyLimits,
};
use splitbox::transport::WireMessage;
use splitbox::{Packet, ProtocolParams};

#[derive(Parser)]
#[command(
    name = "splitbox",
    version,
    about = "Packet filtering split across non-colluding middleboxes"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compile a ruleset, key a deployment, and write one config file per
    /// role into a directory.
    Setup(SetupArgs),
    /// Serve one role of a keyed deployment over UDP.
    Run(RunArgs),
    /// Measure the pipeline and write a CSV report.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SetupArgs {
    /// Ruleset file, one rule per line.
    #[arg(long)]
    rules: PathBuf,
    /// Directory for the role config files (created if missing).
    #[arg(long)]
    out_dir: PathBuf,
    /// Processor count.
    #[arg(long, default_value_t = 2)]
    t: u32,
    /// Pad-table length.
    #[arg(long, default_value_t = 1024)]
    l: u32,
    /// Real-traffic ratio, e.g. 1/1 or 0.5.
    #[arg(long, default_value = "1/1", value_parser = parse_ratio)]
    rho: Ratio,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Install rules that fix fewer bits than the safety floor.
    #[arg(long)]
    allow_weak_matches: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Role {
    Entry,
    Processor,
    Client,
}

#[derive(Args)]
struct RunArgs {
    /// Which role this process serves.
    #[arg(value_enum)]
    role: Role,
    /// Role config file written by `setup`.
    #[arg(long)]
    config: PathBuf,
    /// Local address to bind (processor and client).
    #[arg(long)]
    listen: Option<SocketAddr>,
    /// Downstream addresses. Entry: one per processor in id order, then
    /// the client. Processor: the client.
    #[arg(long = "peer")]
    peers: Vec<SocketAddr>,
    /// Traffic for the entry: a trace file or gen:count=N,mean=M.
    #[arg(long)]
    trace: Option<String>,
    /// Entry emission seed.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Gap between entry inputs, in microseconds.
    #[arg(long, default_value_t = 100)]
    pace_us: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Equivalence,
    Throughput,
    Latency,
    Lsweep,
    Dummyrate,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CarrierArg {
    Inproc,
    Udp,
}

#[derive(Args)]
struct BenchArgs {
    /// Which measurement to run.
    #[arg(value_enum)]
    mode: Mode,
    /// Ruleset file: the equivalence mode verifies it as an extra trial.
    /// Rate modes synthesize their own controlled rulesets.
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Trace file or gen:count=N,mean=M (default gen:count=10000,mean=1024).
    #[arg(long)]
    trace: Option<String>,
    /// Processor count.
    #[arg(long, default_value_t = 2)]
    t: u32,
    /// Pad-table length; repeat for the lsweep list.
    #[arg(long = "l")]
    l: Vec<u32>,
    /// Real-traffic ratio; repeat for the dummyrate list.
    #[arg(long = "rho", value_parser = parse_ratio)]
    rho: Vec<Ratio>,
    #[arg(long, value_enum, default_value_t = CarrierArg::Inproc)]
    carrier: CarrierArg,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Equivalence trial count.
    #[arg(long, default_value_t = 10)]
    trials: usize,
    /// Rule counts for the sweeps, comma separated.
    #[arg(long, value_delimiter = ',')]
    rule_counts: Vec<usize>,
    /// Processor worker counts for the throughput sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    workers: Vec<u32>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.cmd {
        Cmd::Setup(args) => cmd_setup(args),
        Cmd::Run(args) => cmd_run(args),
        Cmd::Bench(args) => cmd_bench(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

type CliError = Box<dyn std::error::Error>;

fn parse_ratio(s: &str) -> Result<Ratio, String> {
    let ratio = if let Some((n, d)) = s.split_once('/') {
        let num: u32 = n.trim().parse().map_err(|_| format!("bad numerator {n:?}"))?;
        let den: u32 = d.trim().parse().map_err(|_| format!("bad denominator {d:?}"))?;
        Ratio { num, den }
    } else {
        let p: f64 = s.parse().map_err(|_| format!("{s:?} is not a ratio"))?;
        let num = (p * 1000.0).round() as i64;
        Ratio { num: num.clamp(0, 1000) as u32, den: 1000 }
    };
    if ratio.den == 0 || ratio.num == 0 || ratio.num > ratio.den {
        return Err(format!("{s:?} is not in (0, 1]"));
    }
    Ok(ratio)
}

/// Traffic source: stored records or a generator spec.
enum TraceSource {
    File(PathBuf),
    Gen(TraceSpec),
}

impl TraceSource {
    fn parse(s: &str) -> Result<TraceSource, CliError> {
        let Some(spec) = s.strip_prefix("gen:") else {
            return Ok(TraceSource::File(PathBuf::from(s)));
        };
        let mut out = TraceSpec::default();
        for part in spec.split(',').filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| format!("expected key=value in {part:?}"))?;
            match key {
                "count" => out.count = value.parse()?,
                "mean" => out.mean_payload = value.parse()?,
                other => return Err(format!("unknown generator key {other:?}").into()),
            }
        }
        Ok(TraceSource::Gen(out))
    }

    fn load(&self, seed: u64) -> Result<Vec<TraceRecord>, CliError> {
        match self {
            TraceSource::File(path) => Ok(decode_trace(&fs::read(path)?)?),
            TraceSource::Gen(spec) => {
                Ok(generate_trace(spec, &mut ProtocolRng::from_seed(seed)))
            }
        }
    }
}

// ---------------------------------------------------------------------
// setup

fn cmd_setup(args: SetupArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.rules)?;
    let rules = parse_rules(&text)?;
    let tree = splitbox::firewall::compile_rules(&rules)?;
    let params = ProtocolParams {
        header_len: HEADER_BITS,
        blind_count: args.l,
        share_count: args.t,
        real_ratio: args.rho,
        allow_weak_matches: args.allow_weak_matches,
        ..ProtocolParams::default()
    };
    let bundle = global_setup(&params, &tree, &mut ProtocolRng::from_seed(args.seed))?;
    fs::create_dir_all(&args.out_dir)?;
    for (name, bytes) in encode_setup(&bundle) {
        let path = args.out_dir.join(&name);
        fs::write(&path, &bytes)?;
        println!("{} ({} bytes)", path.display(), bytes.len());
    }
    println!(
        "keyed {} rule(s) for t={} l={} rho={}/{}",
        rules.len(),
        args.t,
        args.l,
        args.rho.num,
        args.rho.den
    );
    Ok(())
}

// ---------------------------------------------------------------------
// run

const MAX_DATAGRAM: usize = 65_536;
const DRAIN_QUIET: Duration = Duration::from_millis(200);

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let role = RoleConfig::decode(&fs::read(&args.config)?)?;
    match (args.role, role) {
        (Role::Entry, RoleConfig::Entry(cfg)) => run_entry(&args, cfg),
        (Role::Processor, RoleConfig::Processor(cfg)) => run_processor(&args, cfg),
        (Role::Client, RoleConfig::Client(cfg)) => run_client(&args, cfg),
        (want, got) => {
            let held = match got {
                RoleConfig::Entry(_) => "entry",
                RoleConfig::Processor(_) => "processor",
                RoleConfig::Client(_) => "client",
            };
            let asked = match want {
                Role::Entry => "entry",
                Role::Processor => "processor",
                Role::Client => "client",
            };
            Err(format!("config file holds the {held} role, not {asked}").into())
        }
    }
}

fn run_entry(
    args: &RunArgs,
    cfg: splitbox::protocol::EntryConfig,
) -> Result<(), CliError> {
    let t = cfg.params.share_count as usize;
    if args.peers.len() != t + 1 {
        return Err(format!(
            "entry needs {} peers ({} processors in id order, then the client), got {}",
            t + 1,
            t,
            args.peers.len()
        )
        .into());
    }
    let trace = args
        .trace
        .as_deref()
        .ok_or("entry needs --trace (file or gen:count=N,mean=M)")?;
    let records = TraceSource::parse(trace)?.load(args.seed ^ 0x7472_6163)?;
    let mut payload_rng = ProtocolRng::from_seed(args.seed ^ 0x7061_796c);
    let packets: Vec<Packet> = records
        .iter()
        .map(|r| {
            Packet::new(
                encode_header(&r.tuple),
                payload_rng.bits(r.payload_bytes as usize * 8),
            )
        })
        .collect();

    let sock = UdpSocket::bind(
        args.listen
            .unwrap_or_else(|| "127.0.0.1:0".parse().expect("literal addr")),
    )?;
    let (proc_addrs, client_addr) = args.peers.split_at(t);
    let client_addr = client_addr[0];
    let mut entry = EntryState::new(cfg, ProtocolRng::from_seed(args.seed));
    let pace = Duration::from_micros(args.pace_us);
    for packet in &packets {
        for em in entry.ingest(packet)? {
            for m in &em.to_processors {
                let addr = proc_addrs[m.processor_id as usize - 1];
                sock.send_to(&WireMessage::ToProcessor(m.clone()).encode(), addr)?;
            }
            sock.send_to(&WireMessage::ToClientPacket(em.to_client).encode(), client_addr)?;
        }
        if !pace.is_zero() {
            thread::sleep(pace);
        }
    }
    for addr in proc_addrs {
        sock.send_to(&[], *addr)?;
    }
    sock.send_to(&[], client_addr)?;
    println!("entry done: {} input(s)", packets.len());
    println!("{}", entry.stats().render());
    Ok(())
}

fn run_processor(
    args: &RunArgs,
    cfg: splitbox::protocol::ProcessorConfig,
) -> Result<(), CliError> {
    let listen = args.listen.ok_or("processor needs --listen")?;
    let [client_addr] = args.peers[..] else {
        return Err("processor needs exactly one --peer (the client)".into());
    };
    let header_len = cfg.params.header_len;
    let sock = UdpSocket::bind(listen)?;
    let mut proc = ProcessorState::new(cfg);
    let mut buf = vec![0u8; MAX_DATAGRAM];
    loop {
        let (n, _) = sock.recv_from(&mut buf)?;
        if n == 0 {
            sock.send_to(&[], client_addr)?;
            break;
        }
        let input = match WireMessage::decode(&buf[..n], header_len)? {
            WireMessage::ToProcessor(m) => m,
            _ => return Err("non-processor frame on the processor port".into()),
        };
        let reply = proc.handle(&input)?;
        sock.send_to(&WireMessage::ToClientShares(reply.message).encode(), client_addr)?;
    }
    println!("{}", proc.stats().render());
    Ok(())
}

fn run_client(
    args: &RunArgs,
    cfg: splitbox::protocol::ClientConfig,
) -> Result<(), CliError> {
    let listen = args.listen.ok_or("client needs --listen")?;
    let header_len = cfg.params.header_len;
    let fins_expected = cfg.params.share_count as usize + 1;
    let sock = UdpSocket::bind(listen)?;
    sock.set_read_timeout(Some(DRAIN_QUIET))?;
    let mut client = ClientState::with_limits(cfg, ReassemblyLimits::default());
    let mut buf = vec![0u8; MAX_DATAGRAM];
    let started = Instant::now();
    let mut fins = 0usize;
    loop {
        let n = match sock.recv_from(&mut buf) {
            Ok((n, _)) => n,
            Err(e)
                if e.kind() == std::io::ErrorKind::WouldBlock
                    || e.kind() == std::io::ErrorKind::TimedOut =>
            {
                if fins >= fins_expected {
                    break;
                }
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        if n == 0 {
            fins += 1;
            continue;
        }
        let now = started.elapsed().as_nanos() as u64;
        client.expire(now);
        let input = match WireMessage::decode(&buf[..n], header_len)? {
            WireMessage::ToClientPacket(m) => ClientInput::Packet(m),
            WireMessage::ToClientShares(m) => ClientInput::Shares(m),
            WireMessage::ToProcessor(_) => {
                return Err("processor frame reached the client port".into())
            }
        };
        match client.ingest(&input, now)? {
            ClientOutcome::Forwarded { seq, packet } => {
                println!("seq={seq} forward {}", describe(&packet));
            }
            ClientOutcome::Dropped { seq } => println!("seq={seq} drop"),
            ClientOutcome::DummyDiscarded { .. } | ClientOutcome::Pending => {}
        }
    }
    client.expire(u64::MAX / 2);
    println!("{}", client.stats().render());
    Ok(())
}

/// One line for a forwarded packet: the parsed five-tuple when the
/// deployment uses real headers, raw hex otherwise.
fn describe(packet: &Packet) -> String {
    let header = packet.header();
    let mut line = match decode_header(header) {
        Ok(tuple) if header.len() == HEADER_BITS => tuple.to_string(),
        _ => {
            let mut hex = String::with_capacity(2 * header.as_bytes().len());
            for b in header.as_bytes() {
                let _ = write!(hex, "{b:02x}");
            }
            format!("header=0x{hex}")
        }
    };
    let _ = write!(line, " payload={}B", packet.payload().len() / 8);
    line
}

// ---------------------------------------------------------------------
// bench

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let mut cfg = BenchConfig {
        share_count: args.t.max(2),
        carrier: match args.carrier {
            CarrierArg::Inproc => Carrier::Inproc,
            CarrierArg::Udp => Carrier::Udp,
        },
        seed: args.seed,
        trials: args.trials.max(1),
        ..BenchConfig::default()
    };
    if !args.rule_counts.is_empty() {
        cfg.rule_counts = args.rule_counts.clone();
    }
    if !args.workers.is_empty() {
        cfg.worker_counts = args.workers.clone();
    }
    if !args.l.is_empty() {
        cfg.blind_count = args.l[0];
        cfg.blind_counts = args.l.clone();
    }
    if !args.rho.is_empty() {
        cfg.ratios = args.rho.clone();
    }
    match args.trace.as_deref().map(TraceSource::parse).transpose()? {
        None => {}
        Some(TraceSource::Gen(spec)) => cfg.trace = spec,
        Some(TraceSource::File(path)) => {
            let records = decode_trace(&fs::read(&path)?)?;
            if records.is_empty() {
                return Err(format!("{} holds no records", path.display()).into());
            }
            let mean = records.iter().map(|r| r.payload_bytes as u64).sum::<u64>()
                / records.len() as u64;
            cfg.trace = TraceSpec {
                count: records.len(),
                mean_payload: mean.max(1) as u32,
            };
            cfg.user_records = Some(records);
        }
    }
    if let Some(path) = &args.rules {
        if args.mode != Mode::Equivalence {
            return Err(
                "rate modes synthesize controlled rulesets; --rules applies to the \
                 equivalence mode"
                    .into(),
            );
        }
        cfg.user_rules = Some(parse_rules(&fs::read_to_string(path)?)?);
    }
    if cfg.user_records.is_some() && cfg.user_rules.is_none() {
        if args.mode == Mode::Equivalence {
            return Err("a trace file needs --rules to verify against".into());
        }
        // Rate modes take only the sizing from a stored trace.
        cfg.user_records = None;
    }

    let (render, csv) = match args.mode {
        Mode::Equivalence => {
            let report = run_equivalence(&cfg)?;
            (report.render(), report.to_csv())
        }
        Mode::Throughput => {
            let report = run_throughput(&cfg)?;
            (report.render(), report.to_csv())
        }
        Mode::Latency => {
            let report = run_latency(&cfg)?;
            (report.render(), report.to_csv())
        }
        Mode::Lsweep => {
            let report = run_lsweep(&cfg)?;
            (report.render(), report.to_csv())
        }
        Mode::Dummyrate => {
            let report = run_dummyrate(&cfg)?;
            (report.render(), report.to_csv())
        }
    };
    print!("{render}");
    match &args.out {
        Some(path) => {
            fs::write(path, csv.as_bytes())?;
            println!("csv written to {}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}
