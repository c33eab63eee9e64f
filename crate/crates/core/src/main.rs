use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use supcast::config::{self, Config};
use supcast::verify::{self, Suite};
use supcast::{pipeline, report, Error};

#[derive(Parser)]
#[command(name = "supcast", version, about = "Superposed video multicast simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a sweep and write one CSV row per user and operating point.
    Run(RunArgs),
    /// Check the optimizers and distortion model against brute-force oracles.
    Verify {
        /// matching, power or distortion; all suites when omitted.
        #[arg(long)]
        suite: Option<String>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` file; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Headerless 8-bit luma video.
    #[arg(long)]
    input: Option<String>,
    /// constant[:level], gradient or moving-pattern.
    #[arg(long)]
    synthetic: Option<String>,
    #[arg(long)]
    synthetic_seed: Option<String>,
    #[arg(long)]
    frames: Option<String>,
    #[arg(long)]
    width: Option<String>,
    #[arg(long)]
    height: Option<String>,
    #[arg(long)]
    gop: Option<String>,
    #[arg(long)]
    chunks_per_side: Option<String>,
    /// Comma list.
    #[arg(long)]
    beta: Option<String>,
    /// Comma list, dB.
    #[arg(long)]
    snr: Option<String>,
    /// Comma list of supcast_bl, supcast_el, supcast_exhaustive, softcast, noma_ra.
    #[arg(long)]
    schemes: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    /// Comma list; `a..b` and `a..=b` ranges allowed.
    #[arg(long)]
    seeds: Option<String>,
    /// `inner,outer` in meters.
    #[arg(long)]
    near_radii: Option<String>,
    #[arg(long)]
    far_radii: Option<String>,
    #[arg(long)]
    users_per_zone: Option<String>,
    /// Average power per transmitted chunk.
    #[arg(long)]
    p_chunk: Option<String>,
    /// Meters per path-loss distance unit.
    #[arg(long)]
    distance_unit_m: Option<String>,
    #[arg(long)]
    exhaustive_cap: Option<String>,
    /// CSV destination; standard output when omitted or `-`.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    clamp_pixels: bool,
}

impl RunArgs {
    fn overrides(&self) -> BTreeMap<String, String> {
        let pairs = [
            ("input", &self.input),
            ("synthetic", &self.synthetic),
            ("synthetic_seed", &self.synthetic_seed),
            ("frames", &self.frames),
            ("width", &self.width),
            ("height", &self.height),
            ("gop", &self.gop),
            ("chunks_per_side", &self.chunks_per_side),
            ("beta", &self.beta),
            ("snr", &self.snr),
            ("schemes", &self.schemes),
            ("eta", &self.eta),
            ("seeds", &self.seeds),
            ("near_radii", &self.near_radii),
            ("far_radii", &self.far_radii),
            ("users_per_zone", &self.users_per_zone),
            ("p_chunk", &self.p_chunk),
            ("distance_unit_m", &self.distance_unit_m),
            ("exhaustive_cap", &self.exhaustive_cap),
            ("out", &self.out),
        ];
        let mut map: BTreeMap<String, String> = pairs
            .into_iter()
            .filter_map(|(k, v)| v.clone().map(|v| (k.to_string(), v)))
            .collect();
        if self.clamp_pixels {
            map.insert("clamp_pixels".into(), "true".into());
        }
        map
    }
}

fn run(args: &RunArgs) -> supcast::Result<()> {
    let file = match &args.config {
        Some(path) => config::read_config_file(path)?,
        None => BTreeMap::new(),
    };
    let cfg = Config::resolve(&file, &args.overrides())?;
    let video = cfg.load_video()?;
    let results = pipeline::run_experiment(&video, &cfg.sweep())?;
    let rows = report::rows(&results);
    match &cfg.out {
        Some(path) => {
            let f = File::create(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            report::write_csv(BufWriter::new(f), &rows)
        }
        None => report::write_csv(io::stdout().lock(), &rows),
    }
}

fn verify_cmd(suite: Option<&str>, seed: u64) -> supcast::Result<bool> {
    let suites = match suite {
        Some(s) => vec![s.parse::<Suite>()?],
        None => Suite::ALL.to_vec(),
    };
    let mut ok = true;
    for s in suites {
        println!("[{}]", s.as_str());
        for check in verify::run_suite(s, seed)? {
            ok &= check.passed();
            println!("  {check}");
        }
    }
    Ok(ok)
}

fn exit_for(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Config { .. } => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => match run(&args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => exit_for(&e),
        },
        Command::Verify { suite, seed } => match verify_cmd(suite.as_deref(), seed) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(1),
            Err(e) => exit_for(&e),
        },
    }
}
