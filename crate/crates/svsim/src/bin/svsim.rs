use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use svsim::bench;
use svsim::probe;
use svsim::report::{records_table, OutputFormat, Table};
use svsim::runner::{run_inproc, run_rank, FusionSetting, RunConfig, RunError, Summary};
use svsim::transport::{connect_all, PeerTable, TcpOptions};
use svsim::{load_circuit, write_circuit};
use svsim_core::{random_circuit, Circuit, MachineParams, ParallelLevel};

#[derive(Parser)]
#[command(name = "svsim", version, about = "Distributed state-vector quantum circuit simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a circuit file and report per-gate timings and the final state.
    Run {
        circuit: PathBuf,
        /// Widen the register beyond the file's `qubits` line.
        #[arg(long)]
        qubits: Option<usize>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        dist: Distribution,
    },
    /// Time single-qubit gates per target, or controlled gates per (c, t).
    GateBench {
        #[arg(long)]
        qubits: usize,
        /// Lowest target qubit of the sweep.
        #[arg(long, default_value_t = 0)]
        from: usize,
        /// Highest target qubit of the sweep (default n-1).
        #[arg(long)]
        to: Option<usize>,
        /// Sweep every (control, target) pair instead.
        #[arg(long)]
        grid: bool,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Time the Fourier transform circuit over a range of sizes.
    QftBench {
        #[arg(long)]
        min: usize,
        #[arg(long)]
        max: usize,
        /// Only count gates; do not simulate.
        #[arg(long)]
        dry_run: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Print per-gate lower bounds for each of the six gate cases.
    Bounds {
        #[arg(long, default_value_t = 29)]
        m_min: usize,
        #[arg(long)]
        m_max: Option<usize>,
        /// Sustainable memory bandwidth in bytes/s.
        #[arg(long, default_value_t = 40e9)]
        mem_bw: f64,
        /// Sustainable network bandwidth in bytes/s.
        #[arg(long, default_value_t = 5.5e9)]
        net_bw: f64,
        /// Measure memory bandwidth with the copy probe instead.
        #[arg(long)]
        probe: bool,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report cache size, free memory and copy bandwidth.
    Probe {
        /// Copy buffer size (default 4x the last-level cache).
        #[arg(long)]
        buffer_bytes: Option<usize>,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a random circuit file.
    Random {
        #[arg(long)]
        qubits: usize,
        #[arg(long, default_value_t = 100)]
        gates: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// Number of ranks (power of two).
    #[arg(long, default_value_t = 1)]
    ranks: usize,
    /// Worker threads per rank.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, value_enum, default_value_t = Level::Auto)]
    parallel_level: Level,
    /// Block exponent for gate fusion, `auto` (from cache size) or `off`.
    #[arg(long, default_value = "off")]
    fusion: FusionSetting,
    /// Exchange chunk size in bytes.
    #[arg(long)]
    chunk_bytes: Option<usize>,
    /// Refuse runs needing more than this fraction of available memory.
    #[arg(long, default_value_t = 0.75)]
    mem_fraction: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct Distribution {
    #[arg(long, value_enum, default_value_t = TransportKind::Inproc)]
    transport: TransportKind,
    /// Peer list (`rank host:port` per line) for the TCP transport.
    #[arg(long)]
    peers: Option<PathBuf>,
    /// This process's rank for the TCP transport.
    #[arg(long)]
    rank: Option<usize>,
    /// Seconds to wait for peers and messages.
    #[arg(long, default_value_t = 30)]
    timeout: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    Outer,
    Inner,
    Auto,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TransportKind {
    Inproc,
    Tcp,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

impl Common {
    fn config(&self) -> Result<RunConfig, RunError> {
        if !(self.mem_fraction > 0.0 && self.mem_fraction <= 1.0) {
            return Err(RunError::Usage("--mem-fraction must be in (0, 1]".into()));
        }
        if self.threads == 0 {
            return Err(RunError::Usage("--threads must be at least 1".into()));
        }
        Ok(RunConfig {
            ranks: self.ranks,
            threads: self.threads,
            parallel_level: match self.parallel_level {
                Level::Outer => ParallelLevel::Outer,
                Level::Inner => ParallelLevel::Inner,
                Level::Auto => ParallelLevel::Auto,
            },
            fusion: self.fusion,
            chunk_bytes: self.chunk_bytes,
            mem_fraction: self.mem_fraction,
            llc_bytes: probe::llc_bytes_or_default(),
            ..RunConfig::default()
        })
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), RunError> {
    match out {
        Some(p) => File::create(p)?.write_all(text.as_bytes())?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn summary_table(s: &Summary) -> Table {
    let mut t = Table::new("summary", &["quantity", "value"]);
    t.push(vec![json!("norm"), json!(s.norm)]);
    for (q, p) in s.probabilities.iter().enumerate() {
        t.push(vec![json!(format!("p1[{q}]")), json!(p)]);
    }
    for a in &s.top {
        t.push(vec![json!(format!("amp[{}]", a.index)), json!(format!("{}{:+}i", a.re, a.im))]);
    }
    t
}

fn widen(circuit: Circuit, qubits: Option<usize>) -> Result<Circuit, RunError> {
    match qubits {
        None => Ok(circuit),
        Some(n) if n >= circuit.qubits() => Ok(Circuit::from_gates(n, circuit.gates().to_vec())?),
        Some(n) => Err(RunError::Usage(format!(
            "--qubits {n} is smaller than the circuit's {} qubits",
            circuit.qubits()
        ))),
    }
}

fn cmd_run(path: PathBuf, qubits: Option<usize>, common: Common, dist: Distribution) -> Result<(), RunError> {
    let circuit = widen(load_circuit(&path)?, qubits)?;
    let mut cfg = common.config()?;
    cfg.timeout = Duration::from_secs(dist.timeout);
    let outcome = match dist.transport {
        TransportKind::Inproc => {
            if dist.peers.is_some() || dist.rank.is_some() {
                return Err(RunError::Usage("--peers/--rank need --transport tcp".into()));
            }
            run_inproc(&circuit, &cfg)?
        }
        TransportKind::Tcp => {
            let (Some(peers), Some(rank)) = (dist.peers, dist.rank) else {
                return Err(RunError::Usage("--transport tcp needs --peers and --rank".into()));
            };
            let table = PeerTable::load(&peers)?;
            cfg.ranks = table.len();
            cfg.layout(circuit.qubits(), rank)?;
            cfg.memory_guard(circuit.qubits(), 1)?;
            let t = connect_all(
                &table,
                rank,
                TcpOptions {
                    connect_timeout: cfg.timeout,
                    recv_timeout: cfg.timeout,
                },
            )?;
            let o = run_rank(&circuit, &t, &cfg)?;
            if rank != 0 {
                return Ok(());
            }
            o
        }
    };
    let summary = outcome.summary.expect("rank 0 summarises");
    let gates = records_table(&outcome.records);
    let text = match common.format {
        Format::Json => {
            let doc = json!({
                "schema": svsim::report::JSON_SCHEMA,
                "qubits": circuit.qubits(),
                "ranks": cfg.ranks,
                "fusion_block_bits": outcome.fusion.enabled.then_some(outcome.fusion.block_bits),
                "total_seconds": outcome.seconds,
                "summary": summary,
                "gates": gates.to_json()["rows"],
            });
            serde_json::to_string_pretty(&doc).expect("json") + "\n"
        }
        Format::Csv => format!("{}\n{}", summary_table(&summary).to_csv(), gates.to_csv()),
    };
    emit(&common.out, &text)
}

fn run(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Run {
            circuit,
            qubits,
            common,
            dist,
        } => cmd_run(circuit, qubits, common, dist),
        Command::GateBench {
            qubits,
            from,
            to,
            grid,
            reps,
            common,
        } => {
            let cfg = common.config()?;
            let to = to.unwrap_or(qubits.saturating_sub(1));
            if qubits == 0 || from > to || to >= qubits {
                return Err(RunError::Usage(format!("bad qubit range {from}..={to} for n={qubits}")));
            }
            let t = if grid {
                bench::controlled_grid(qubits, reps, &cfg)?
            } else {
                bench::single_sweep(qubits, from..=to, reps, &cfg)?
            };
            emit(&common.out, &t.render(common.format.into()))
        }
        Command::QftBench {
            min,
            max,
            dry_run,
            common,
        } => {
            if min == 0 || min > max {
                return Err(RunError::Usage(format!("bad size range {min}..={max}")));
            }
            let t = bench::qft_bench(min..=max, dry_run, &common.config()?)?;
            emit(&common.out, &t.render(common.format.into()))
        }
        Command::Bounds {
            m_min,
            m_max,
            mem_bw,
            net_bw,
            probe: use_probe,
            format,
            out,
        } => {
            let llc = probe::llc_bytes_or_default();
            let mem_bw = if use_probe {
                probe::measure_copy_bandwidth(4 * llc, 5, llc).map_err(|e| RunError::Usage(e.to_string()))?
            } else {
                mem_bw
            };
            let params = MachineParams::new(mem_bw, net_bw, llc).map_err(|e| RunError::Usage(e.to_string()))?;
            let m_max = m_max.unwrap_or(m_min);
            if m_min == 0 || m_min > m_max || m_max > 62 {
                return Err(RunError::Usage(format!("bad m range {m_min}..={m_max}")));
            }
            emit(&out, &bench::bounds_table(m_min..=m_max, &params)?.render(format.into()))
        }
        Command::Probe {
            buffer_bytes,
            reps,
            format,
            out,
        } => {
            let llc = probe::llc_bytes_or_default();
            let buffer = buffer_bytes.unwrap_or(4 * llc);
            let bw = probe::measure_copy_bandwidth(buffer, reps, llc).map_err(|e| RunError::Usage(e.to_string()))?;
            let mut t = Table::new("probe", &["quantity", "value"]);
            t.push(vec![json!("llc_bytes"), json!(llc)]);
            t.push(vec![json!("llc_detected"), json!(probe::detect_llc_bytes().is_some())]);
            t.push(vec![json!("mem_available_bytes"), json!(probe::available_memory_bytes())]);
            t.push(vec![json!("copy_buffer_bytes"), json!(buffer)]);
            t.push(vec![json!("copy_bandwidth_bytes_per_s"), json!(bw)]);
            emit(&out, &t.render(format.into()))
        }
        Command::Random {
            qubits,
            gates,
            seed,
            out,
        } => {
            if qubits == 0 || qubits > svsim_core::layout::MAX_QUBITS {
                return Err(RunError::Usage(format!("bad qubit count {qubits}")));
            }
            emit(&out, &write_circuit(&random_circuit(qubits, gates, seed)))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("svsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
