use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fleet_cli::commands::{self, CliError, ReportOptions};

/// Fleet telemetry toolkit: simulate sensor stations, run the ingest
/// service, and query, export or analyze stored tracks.
#[derive(Parser)]
#[command(name = "fleet", version, about)]
struct Cli {
    /// Store directory for query/export/report and simulate output.
    #[arg(long, global = true)]
    store: Option<PathBuf>,
    /// Service config file (serve).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the scenario RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Verbose logging.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario simulation into a store or a live service.
    Simulate {
        /// Scenario TOML file.
        scenario: PathBuf,
        /// POST to a live service at this base URL instead of a store.
        #[arg(long, conflicts_with = "store")]
        url: Option<String>,
    },
    /// Run the ingest + query HTTP service until interrupted.
    Serve,
    /// List stored records for a device, newest first.
    Query {
        #[arg(long)]
        device: String,
        /// Range start, Unix seconds (default: 7 days before --to).
        #[arg(long)]
        from: Option<i64>,
        /// Range end, Unix seconds (default: now).
        #[arg(long)]
        to: Option<i64>,
        #[arg(long, default_value_t = 1)]
        page: usize,
        #[arg(long, default_value_t = store_query::DEFAULT_PAGE_SIZE)]
        page_size: usize,
        /// Seconds east of UTC for the stamp column.
        #[arg(long, default_value_t = ingest_service::DEFAULT_DISPLAY_OFFSET_S)]
        display_offset_s: i32,
    },
    /// Write the CSV export for a device and range.
    Export {
        #[arg(long)]
        device: String,
        #[arg(long)]
        from: Option<i64>,
        #[arg(long)]
        to: Option<i64>,
        /// Output file.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = ingest_service::DEFAULT_DISPLAY_OFFSET_S)]
        display_offset_s: i32,
    },
    /// Print the analytics report for a device and range.
    Report {
        #[arg(long)]
        device: String,
        #[arg(long)]
        from: Option<i64>,
        #[arg(long)]
        to: Option<i64>,
        /// Corridor override in meters (used with --route).
        #[arg(long)]
        corridor_m: Option<f64>,
        /// Weight change threshold in tons.
        #[arg(long, default_value_t = analytics::DEFAULT_WEIGHT_THRESHOLD_TONS)]
        weight_threshold_tons: f64,
        /// Link gap threshold as a multiple of the reporting period.
        #[arg(long, default_value_t = analytics::DEFAULT_GAP_FACTOR)]
        gap_factor: f64,
        /// Expected reporting period in seconds.
        #[arg(long, default_value_t = 300.0)]
        expected_period_s: f64,
        /// Scenario file providing the planned route.
        #[arg(long, requires = "route")]
        scenario: Option<PathBuf>,
        /// Route name within --scenario.
        #[arg(long, requires = "scenario")]
        route: Option<String>,
        /// Depot zone "lat,lon,radius_m" (repeatable); weight changes
        /// inside are treated as legitimate loading.
        #[arg(long = "depot", value_parser = parse_depot)]
        depot_zones: Vec<(f64, f64, f64)>,
        /// Emit the report as JSON instead of text.
        #[arg(long)]
        json: bool,
        /// Also write the CSV export beside the report.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = ingest_service::DEFAULT_DISPLAY_OFFSET_S)]
        display_offset_s: i32,
    },
}

fn parse_depot(arg: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = arg.split(',').collect();
    if parts.len() != 3 {
        return Err("expected lat,lon,radius_m".into());
    }
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| e.to_string());
    Ok((parse(parts[0])?, parse(parts[1])?, parse(parts[2])?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_env_filter(if cli.verbose { "info" } else { "warn" })
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let store_arg = |purpose: &str| -> Result<PathBuf, CliError> {
        cli.store
            .clone()
            .ok_or_else(|| CliError::Validation(format!("--store is required to {purpose}")))
    };
    let mut stdout = std::io::stdout();
    match cli.command {
        Command::Simulate { scenario, url } => {
            let store = match (&cli.store, &url) {
                (Some(path), None) => Some(path.clone()),
                _ => None,
            };
            commands::simulate(
                &scenario,
                store.as_deref(),
                url.as_deref(),
                cli.seed,
                &mut stdout,
            )?;
            Ok(())
        }
        Command::Serve => {
            let config = cli
                .config
                .clone()
                .ok_or_else(|| CliError::Validation("--config is required to serve".into()))?;
            commands::serve(&config)
        }
        Command::Query { device, from, to, page, page_size, display_offset_s } => {
            commands::query(
                &store_arg("query")?,
                &device,
                from,
                to,
                page,
                page_size,
                display_offset_s,
                &mut stdout,
            )
        }
        Command::Export { device, from, to, out, display_offset_s } => {
            let rows = commands::export(
                &store_arg("export")?,
                &device,
                from,
                to,
                display_offset_s,
                &out,
            )?;
            println!("wrote {} rows to {}", rows, out.display());
            Ok(())
        }
        Command::Report {
            device,
            from,
            to,
            corridor_m,
            weight_threshold_tons,
            gap_factor,
            expected_period_s,
            scenario,
            route,
            depot_zones,
            json,
            csv,
            display_offset_s,
        } => {
            let options = ReportOptions {
                corridor_m,
                weight_threshold_tons,
                gap_factor,
                expected_period_s,
                scenario: scenario.zip(route),
                depot_zones,
                json,
                csv_out: csv,
            };
            commands::report(
                &store_arg("report")?,
                &device,
                from,
                to,
                &options,
                display_offset_s,
                &mut stdout,
            )?;
            Ok(())
        }
    }
}
