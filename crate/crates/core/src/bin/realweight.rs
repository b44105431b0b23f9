use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use realweight::app::{self, Config, OutputFormat, Suite, SymbolKind, Tabular};
use realweight::exact_core::Cusp;
use realweight::quadrature::Endpoint;
use realweight::Error;

#[derive(Parser)]
#[command(name = "realweight", version, about = "Iterated periods of real-weight cusp forms and noncommutative Dedekind symbols")]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

/// Flags override the config file.
#[derive(Args)]
struct Overrides {
    /// Key-value config file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// q-expansion length.
    #[arg(long, global = true)]
    truncation: Option<usize>,
    /// Series depth (at most 4).
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Comma-separated weights w of eta^{2w}; empty for no forms.
    #[arg(long, global = true, allow_hyphen_values = true)]
    family: Option<String>,
    /// Period parameter in the lower half plane.
    #[arg(long, global = true, allow_hyphen_values = true)]
    t: Option<String>,
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    output: Option<OutputFormat>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    samples: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Built-in eta-power forms.
    Forms {
        #[command(subcommand)]
        action: FormsCommand,
    },
    /// Run a verification suite; exit 0 iff every check passes.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        /// Also write the report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Compute values.
    Compute {
        #[command(subcommand)]
        what: ComputeCommand,
    },
}

#[derive(Subcommand)]
enum FormsCommand {
    List,
    Inspect { w: f64 },
}

#[derive(Subcommand)]
enum ComputeCommand {
    /// int_0^{i inf} F(z) (z - t)^k dz.
    Period {
        #[arg(long)]
        w: f64,
    },
    /// Coefficients of J_a^b(t) for the configured family.
    Iterate {
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        b: String,
    },
    /// The generalized reciprocity function at (p, q).
    Reciprocity {
        #[arg(long, allow_hyphen_values = true)]
        p: i64,
        #[arg(long, allow_hyphen_values = true)]
        q: i64,
    },
    /// Residuals of the three-term relations at (p, q).
    Residuals {
        #[arg(long, allow_hyphen_values = true)]
        p: i64,
        #[arg(long, allow_hyphen_values = true)]
        q: i64,
    },
    /// Dedekind symbol values, one pair or a table up to --bound.
    Symbol {
        #[arg(long, value_enum, default_value = "classical")]
        kind: SymbolKind,
        #[arg(long, allow_hyphen_values = true, requires = "q")]
        p: Option<i64>,
        #[arg(long, allow_hyphen_values = true, requires = "p")]
        q: Option<i64>,
        #[arg(long, default_value_t = 5)]
        bound: i64,
    },
}

fn config(o: &Overrides) -> realweight::Result<Config> {
    let mut c = match &o.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    }
    .with_env();
    if let Some(x) = o.tolerance {
        c.tolerance = x;
    }
    if let Some(x) = o.truncation {
        c.truncation = x;
    }
    if let Some(x) = o.depth {
        c.depth = x;
    }
    if let Some(x) = &o.family {
        c.family = x
            .split(',')
            .map(str::trim)
            .filter(|w| !w.is_empty())
            .map(|w| w.parse().map_err(|_| Error::Parse(format!("weight '{w}'"))))
            .collect::<realweight::Result<_>>()?;
    }
    if let Some(x) = &o.t {
        c.t = x.clone();
    }
    if let Some(x) = &o.cache_dir {
        c.cache_dir = Some(x.clone());
    }
    if let Some(x) = o.output {
        c.output = x;
    }
    if let Some(x) = o.seed {
        c.seed = x;
    }
    if let Some(x) = o.samples {
        c.samples = x;
    }
    c.validate()?;
    Ok(c)
}

fn endpoint(s: &str) -> realweight::Result<Endpoint> {
    if s.contains('i') && s != "inf" {
        Ok(Endpoint::Point(app::parse_complex(s)?))
    } else {
        Ok(Endpoint::Cusp(Cusp::parse(s)?))
    }
}

fn run(cli: Cli) -> realweight::Result<i32> {
    let c = config(&cli.overrides)?;
    let out = c.output;
    let text = match cli.command {
        Command::Forms { action: FormsCommand::List } => app::list_forms(c.truncation)?.render(out)?,
        Command::Forms { action: FormsCommand::Inspect { w } } => app::inspect_form(w, c.truncation)?.render(out)?,
        Command::Verify { suite, report } => {
            let r = app::run_suite(suite, &c)?;
            let text = r.render(out)?;
            if let Some(path) = report {
                std::fs::write(path, &text)?;
            }
            emit(&text);
            return Ok(r.exit_code());
        }
        Command::Compute { what } => {
            let t = c.parameter()?;
            match what {
                ComputeCommand::Period { w } => app::compute_period(&c, w, t)?.render(out)?,
                ComputeCommand::Iterate { a, b } => app::compute_iterate(&c, &endpoint(&a)?, &endpoint(&b)?, t, c.depth)?.render(out)?,
                ComputeCommand::Reciprocity { p, q } => app::compute_reciprocity(&c, p, q, c.depth)?.render(out)?,
                ComputeCommand::Residuals { p, q } => app::compute_residuals(&c, p, q, c.depth)?.render(out)?,
                ComputeCommand::Symbol { kind, p, q, bound } => app::compute_symbol(kind, p.zip(q), bound)?.render(out)?,
            }
        }
    };
    emit(&text);
    Ok(0)
}

/// Writes to stdout, tolerating a closed pipe.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::InvalidArgument(_) | Error::Parse(_) | Error::NotCoprime(..) => 2,
                e if e.is_numeric() => 3,
                _ => 1,
            })
        }
    }
}
