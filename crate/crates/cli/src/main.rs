use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use readchain_cli::suites::entry_json;
use readchain_cli::{parse_config, run_suite, Format, RunConfig, Suite};
use readchain_core::commutant::solve_commutant;
use readchain_core::{ReadBasis, ReadWindows, Window};

#[derive(Parser, Debug)]
#[command(
    name = "readchain",
    version,
    about = "Exact window checks for Read's operator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// key=value configuration file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Growth sequence a1,b1,a2,b2,...
    #[arg(long, global = true)]
    d: Option<String>,
    /// Sequence rule, geometric:<first_a>:<ratio>:<blocks>.
    #[arg(long, global = true)]
    rule: Option<String>,
    /// Window size.
    #[arg(long = "N", global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    m: Option<u64>,
    #[arg(long, global = true)]
    precision: Option<u32>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    cases: Option<usize>,
    #[arg(long, global = true, value_parser = ["text", "json"])]
    format: Option<String>,
    /// Record wall-clock durations in reports.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the growth conditions and divisibility by m.
    Validate,
    /// Print the construction case of index i.
    Classify { i: usize },
    /// Write a window in the matrix file format.
    Dump {
        #[arg(value_enum)]
        which: Which,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Commutation chain T - T^m - S2 - K.
    CheckChain,
    /// T~ = S, the Toeplitz lemma and the commutant round trip.
    CheckCommutant,
    /// Exploratory l1 column norms of T.
    CheckNorms,
    /// Express a window commuting with T as a series in T.
    Solve { matrix: PathBuf },
    /// Every configured suite.
    Run,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Which {
    #[value(name = "T")]
    T,
    #[value(name = "Q")]
    Q,
    #[value(name = "Qinv")]
    Qinv,
    #[value(name = "S2")]
    S2,
    #[value(name = "K")]
    K,
}

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn config_text(cli: &Cli) -> Result<String, String> {
    let mut text = match &cli.config {
        Some(path) => {
            std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => String::new(),
    };
    text.push('\n');
    let flags = [
        ("d", cli.d.clone()),
        ("rule", cli.rule.clone()),
        ("N", cli.n.map(|v| v.to_string())),
        ("m", cli.m.map(|v| v.to_string())),
        ("precision", cli.precision.map(|v| v.to_string())),
        ("seed", cli.seed.map(|v| v.to_string())),
        ("cases", cli.cases.map(|v| v.to_string())),
        ("format", cli.format.clone()),
        ("timing", cli.timing.then(|| "true".to_string())),
    ];
    for (key, value) in flags {
        if let Some(value) = value {
            let _ = writeln!(text, "{key}={value}");
        }
    }
    Ok(text)
}

fn config_error(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_CONFIG)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match config_text(&cli) {
        Ok(t) => t,
        Err(e) => return config_error(e),
    };
    let mut config = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    if let Command::Validate = cli.command {
        return validate(&config);
    }
    if let Command::Solve { matrix } = &cli.command {
        return solve(&mut config, matrix);
    }
    if let Err(e) = config.check() {
        return config_error(e);
    }
    match &cli.command {
        Command::Classify { i } => classify(&config, *i),
        Command::Dump { which, out } => dump(&config, *which, out.as_deref()),
        Command::CheckChain => report(&config, &Suite::CHAIN),
        Command::CheckCommutant => report(&config, &Suite::COMMUTANT),
        Command::CheckNorms => report(&config, &[Suite::NormScan]),
        Command::Run => report(&config, &config.suites.clone()),
        Command::Validate | Command::Solve { .. } => unreachable!("handled above"),
    }
}

fn emit(config: &RunConfig, value: serde_json::Value, text: String) {
    match config.format {
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&value).expect("serializes")
        ),
        Format::Text => print!("{text}"),
    }
}

fn validate(config: &RunConfig) -> ExitCode {
    let seq = config.growth_sequence();
    let report = match seq.validate(false, config.m) {
        Ok(r) => r,
        Err(e) => return config_error(e),
    };
    let messages = report.messages();
    let mut text = format!("d = {seq}\nv_M = {}\n", seq.max_index());
    for msg in &messages {
        let _ = writeln!(text, "violation: {msg}");
    }
    let _ = writeln!(
        text,
        "{}",
        if report.passes() { "valid" } else { "invalid" }
    );
    emit(
        config,
        json!({
            "d": seq.interleaved(),
            "v_max": seq.max_index(),
            "structurally_valid": report.structurally_valid(),
            "even": report.even_ok,
            "m": config.m,
            "divisible": report.divisible_ok,
            "violations": messages,
        }),
        text,
    );
    if report.passes() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn classify(config: &RunConfig, i: usize) -> ExitCode {
    match config.growth_sequence().classify(i) {
        Ok(case) => {
            emit(
                config,
                json!({ "index": i, "case": case.label(), "block": case.block(), "text": case.to_string() }),
                format!("{i}: {case}\n"),
            );
            ExitCode::SUCCESS
        }
        Err(e) => config_error(e),
    }
}

fn dump(config: &RunConfig, which: Which, out: Option<&std::path::Path>) -> ExitCode {
    let basis = ReadBasis::new(config.growth_sequence()).expect("checked");
    let windows = match ReadWindows::new(&basis, config.n) {
        Ok(w) => w,
        Err(e) => return config_error(e),
    };
    let window = match which {
        Which::T => windows.t().clone(),
        Which::Q => windows.q().clone(),
        Which::Qinv => windows.qinv().clone(),
        Which::K => windows.k(),
        Which::S2 => match windows.s2(config.m) {
            Ok(w) => w,
            Err(e) => return config_error(e),
        },
    };
    let text = window.to_text();
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                return config_error(format!("{}: {e}", path.display()));
            }
        }
        None => print!("{text}"),
    }
    ExitCode::SUCCESS
}

fn report(config: &RunConfig, suites: &[Suite]) -> ExitCode {
    let mut config = config.clone();
    config.suites = suites.to_vec();
    config.suites.sort();
    match run_suite(&config) {
        Ok(r) => {
            match config.format {
                Format::Json => println!("{}", r.to_json()),
                Format::Text => print!("{}", r.to_text()),
            }
            ExitCode::from(r.exit_code() as u8)
        }
        Err(e) => config_error(e),
    }
}

fn solve(config: &mut RunConfig, path: &std::path::Path) -> ExitCode {
    let window = match std::fs::read_to_string(path)
        .map_err(|e| e.to_string())
        .and_then(|t| Window::from_text(&t))
    {
        Ok(w) => w,
        Err(e) => return config_error(format!("{}: {e}", path.display())),
    };
    config.n = window.size();
    if let Err(e) = config.check() {
        return config_error(e);
    }
    let basis = ReadBasis::new(config.growth_sequence()).expect("checked");
    let windows = match ReadWindows::new(&basis, config.n) {
        Ok(w) => w,
        Err(e) => return config_error(e),
    };
    let sol = match solve_commutant(&window, &windows) {
        Ok(s) => s,
        Err(e) => return config_error(e),
    };
    let coeffs: Vec<String> = sol.series.coeffs().iter().map(|c| c.to_string()).collect();
    let witness = sol.failure_witness.as_ref().map(entry_json);
    let mut text = String::new();
    if sol.residual_zero {
        for (k, c) in coeffs.iter().enumerate() {
            let _ = writeln!(text, "p_{k} = {c}");
        }
    } else if let Some(w) = &sol.failure_witness {
        let _ = writeln!(
            text,
            "no series: entry ({}, {}) = {}",
            w.row, w.col, w.value
        );
    }
    emit(
        config,
        json!({ "residual_zero": sol.residual_zero, "series": coeffs, "failure_witness": witness }),
        text,
    );
    if sol.residual_zero {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}
