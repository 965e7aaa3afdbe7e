use std::path::PathBuf;
use std::time::Duration;

use anyhow::{bail, Context as _, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use implicheck::bench::{self, Method, SynthSpec};
use implicheck::implications::{merge_by_premise, sort_for_display, support};
use implicheck::io;
use implicheck::session::{parse_jsonl, Origin, Question, Session};
use implicheck::{canonical_base_within, crucial, FormalContext};
use implicheck_service::{router, AppState, Store};

#[derive(Parser)]
#[command(name = "implicheck", version, about = "Find and fix erroneous rows in formal contexts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the canonical base of a context.
    Base {
        context: PathBuf,
        #[arg(long)]
        budget_secs: Option<u64>,
    },
    /// Check one object against a context.
    Inspect(InspectArgs),
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "store")]
        store: PathBuf,
        #[arg(long, default_value_t = 60)]
        base_budget_secs: u64,
    },
    /// Replay a session log and print the resulting object.
    Replay { log: PathBuf },
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Args)]
struct InspectArgs {
    context: PathBuf,
    /// Attributes of the object, comma separated.
    #[arg(long, value_delimiter = ',')]
    attributes: Vec<String>,
    /// Inspect this row of the context against the remaining rows instead.
    #[arg(long, conflicts_with = "attributes")]
    object: Option<String>,
    #[arg(long, value_enum, default_value_t = MethodArg::Closure)]
    method: MethodArg,
    #[arg(long)]
    complement: bool,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Generate a random context, or time both methods on it with --compare.
    Synth {
        #[arg(long)]
        objects: usize,
        #[arg(long)]
        attrs: usize,
        #[arg(long)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        compare: bool,
        #[arg(long, default_value_t = 60)]
        budget_secs: u64,
        #[arg(long, default_value_t = 3)]
        repetitions: usize,
    },
    /// Flip random bits of held-out rows and count how often they are found.
    Inject {
        #[arg(long)]
        context: PathBuf,
        #[arg(long, default_value_t = 1)]
        errors: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
        format: TableFormat,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Closure,
    Base,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

fn load(path: &std::path::Path) -> Result<FormalContext> {
    io::read_path(path).with_context(|| format!("reading {}", path.display()))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Base { context, budget_secs } => {
            let ctx = load(&context)?;
            let base = canonical_base_within(&ctx, budget_secs.map(Duration::from_secs))?;
            for imp in base.implications() {
                println!("<{}> {}", support(&ctx, imp).len(), imp.render(ctx.attribute_names()));
            }
        }
        Command::Inspect(args) => inspect(args)?,
        Command::Serve {
            port,
            store,
            base_budget_secs,
        } => {
            let mut state = AppState::new(Store::open(&store)?);
            state.base_budget = Duration::from_secs(base_budget_secs);
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
                eprintln!("listening on {}", listener.local_addr()?);
                axum::serve(listener, router(state)).await?;
                Ok::<_, anyhow::Error>(())
            })?;
        }
        Command::Replay { log } => {
            let text = std::fs::read_to_string(&log)?;
            let session = Session::replay(&parse_jsonl(&text)?)?;
            println!("{}: {}", session.candidate().name, session.intent_names().join(", "));
            println!("state: {}", session.state().as_str());
        }
        Command::Bench(cmd) => bench_command(cmd)?,
    }
    Ok(())
}

fn inspect(args: InspectArgs) -> Result<()> {
    let full = load(&args.context)?;
    let (ctx, intent) = match &args.object {
        Some(name) => {
            let g = full
                .object_index(name)
                .with_context(|| format!("no object named `{name}`"))?;
            (full.without_object(g), full.row(g).clone())
        }
        None => {
            let intent = full.attribute_set(&args.attributes)?;
            (full, intent)
        }
    };
    let mut groups: Vec<(Origin, Vec<implicheck::Implication>)> = Vec::new();
    match args.method {
        MethodArg::Closure => {
            groups.push((Origin::Closure, crucial::inspect_closure(&ctx, &intent).merged()));
        }
        MethodArg::Base => {
            groups.push((Origin::Base, implicheck::canonical_base(&ctx).inspect(&intent)));
        }
    }
    let comp = ctx.complement();
    if args.complement {
        groups.push((
            Origin::ComplementClosure,
            crucial::inspect_closure(&comp, &intent.complement()).merged(),
        ));
    }
    if let MethodArg::Closure = args.method {
        let hand = crucial::max_intent_questions(&ctx, &intent);
        groups.push((Origin::MaxIntentI1, merge_by_premise(hand.additions)));
        groups.push((Origin::MaxIntentI2, hand.removals));
    }
    let mut questions = Vec::new();
    for (origin, mut imps) in groups {
        sort_for_display(if origin.is_complemented() { &comp } else { &ctx }, &mut imps);
        questions.extend(imps.into_iter().map(|imp| Question::new(String::new(), origin, imp, &ctx, 0)));
    }
    match args.format {
        OutputFormat::Text => {
            for q in &questions {
                let origin = serde_json::to_value(q.origin)?;
                let origin = origin.as_str().unwrap_or_default();
                match q.origin.badge() {
                    Some(badge) => println!("[{origin}] {}  ({badge})", q.text),
                    None => println!("[{origin}] {}  support: {{{}}}", q.text, q.support_objects.join(", ")),
                }
            }
        }
        OutputFormat::Json => {
            let rows: Vec<serde_json::Value> = questions
                .iter()
                .map(|q| {
                    serde_json::json!({
                        "origin": q.origin,
                        "implication": q.text,
                        "premise": q.premise,
                        "conclusion": q.conclusion,
                        "support": q.support_objects,
                    })
                })
                .collect();
            println!("{}", serde_json::to_string_pretty(&rows)?);
        }
    }
    Ok(())
}

fn bench_command(cmd: BenchCommand) -> Result<()> {
    match cmd {
        BenchCommand::Synth {
            objects,
            attrs,
            density,
            seed,
            compare,
            budget_secs,
            repetitions,
        } => {
            if !(0.0..=1.0).contains(&density) {
                bail!("density must lie in [0, 1]");
            }
            let spec = SynthSpec {
                num_objects: objects,
                num_attributes: attrs,
                density,
                seed,
            };
            if compare {
                let rows = bench::runtime_compare(
                    &[spec],
                    &[Method::Closure, Method::Base],
                    Some(Duration::from_secs(budget_secs)),
                    repetitions,
                );
                print!("{}", bench::reports_to_csv(&rows)?);
            } else {
                print!("{}", io::write_cxt(&bench::gen_synthetic(&spec)));
            }
        }
        BenchCommand::Inject {
            context,
            errors,
            trials,
            seed,
            format,
        } => {
            let ctx = load(&context)?;
            let report = bench::error_injection_experiment(&ctx, errors, trials, seed)?;
            match format {
                TableFormat::Csv => print!("{}", bench::reports_to_csv(&[report])?),
                TableFormat::Json => println!("{}", serde_json::to_string_pretty(&report)?),
            }
        }
    }
    Ok(())
}
