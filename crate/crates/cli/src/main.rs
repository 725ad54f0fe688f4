use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use motives::Ring;
use motives_cli::exec::{run, RunOptions};
use motives_cli::scene::{adhoc_command, parse_scene, Scene};
use motives_cli::suites::run_suite;
use motives_cli::{cache, CliError};

const EXIT_OK: u8 = 0;
const EXIT_ENGINE: u8 = 1;
const EXIT_SCENE: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RingArg {
    Z,
    Q,
}

impl RingArg {
    fn ring(self) -> Ring {
        match self {
            RingArg::Z => Ring::Int,
            RingArg::Q => Ring::Rat,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Text,
    Structured,
}

#[derive(Parser)]
#[command(name = "motives", version, about = "Build scenes of relative cellular motives and run them")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,

    /// Required coefficient ring; must agree with the scene declaration.
    #[arg(long, global = true, value_enum)]
    ring: Option<RingArg>,

    /// Filtration name for the pushforward verb.
    #[arg(long, global = true)]
    filtration: Option<String>,

    /// Copy depth when a fragment shape has directed cycles.
    #[arg(long, global = true, default_value_t = 2)]
    unroll_depth: usize,

    /// Cache directory; the MOTIVES_CACHE_DIR environment variable wins.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Emit::Text)]
    emit: Emit,
}

#[derive(Subcommand)]
enum Verb {
    /// Parse a scene and summarize its declarations.
    Parse { scene: PathBuf },
    /// Execute a scene's command list and print the report.
    Run { scene: PathBuf },
    /// Execute a scene and print the structured report.
    Report { scene: PathBuf },
    /// Run a named verification suite, optionally against a scene.
    Verify {
        suite: String,
        scene: Option<PathBuf>,
    },
    /// Direct image of one declared vertex along a declared map.
    Pushforward {
        scene: PathBuf,
        #[arg(long)]
        fragment: String,
        #[arg(long)]
        vertex: String,
        #[arg(long)]
        map: String,
        #[arg(long, default_value_t = 0)]
        degree: usize,
    },
    /// Tensor two declared vertices, written FRAGMENT:VERTEX each.
    Tensor {
        scene: PathBuf,
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
    },
    /// Twist a declared vertex by a weight.
    Twist {
        scene: PathBuf,
        #[arg(long)]
        fragment: String,
        #[arg(long)]
        vertex: String,
        #[arg(long, default_value_t = 1)]
        weight: i64,
    },
    /// Realize a declared vertex as a cellular sheaf.
    Realize {
        scene: PathBuf,
        #[arg(long)]
        fragment: String,
        #[arg(long)]
        vertex: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(dispatch(cli))
}

fn load_scene(path: &PathBuf, ring: Option<RingArg>) -> Result<Scene, u8> {
    match parse_scene(path) {
        Ok(scene) => {
            if let Some(r) = ring {
                if r.ring() != scene.ring {
                    eprintln!(
                        "line 0: ring mismatch: --ring {} disagrees with the scene's {}",
                        if r == RingArg::Z { "Z" } else { "Q" },
                        scene.ring
                    );
                    return Err(EXIT_SCENE);
                }
            }
            Ok(scene)
        }
        Err(e) => {
            eprint!("{e}");
            Err(EXIT_SCENE)
        }
    }
}

fn options(cli: &Cli) -> RunOptions {
    RunOptions {
        cache_dir: cache::cache_dir(cli.cache_dir.as_deref()),
        unroll_depth: cli.unroll_depth,
    }
}

/// Run a scene whose command list was replaced by one ad-hoc command and
/// print that command's report entry.
fn run_single(cli: &Cli, scene: Scene, text: String) -> u8 {
    let cmd = match adhoc_command(&scene, &text) {
        Ok(c) => c,
        Err(e) => {
            eprint!("{e}");
            return EXIT_SCENE;
        }
    };
    let mut scene = scene;
    scene.commands = vec![(text, cmd)];
    let report = run(&scene, &options(cli));
    emit_report(cli, &report);
    if report.has_errors() {
        EXIT_ENGINE
    } else {
        EXIT_OK
    }
}

fn emit_report(cli: &Cli, report: &motives_cli::report::Report) {
    match cli.emit {
        Emit::Text => print!("{}", report.text()),
        Emit::Structured => print!("{}", report.structured()),
    }
    for (label, secs) in &report.timings {
        eprintln!("timing {label}: {secs:.3}s");
    }
}

fn dispatch(cli: Cli) -> u8 {
    match &cli.verb {
        Verb::Parse { scene } => match load_scene(scene, cli.ring) {
            Ok(s) => {
                println!(
                    "scene {}: ring {}, {} complexes, {} maps, {} pairs, {} filtrations, {} fragments, {} commands",
                    s.name,
                    s.ring,
                    s.complexes.len(),
                    s.maps.len(),
                    s.pairs.len(),
                    s.filtrations.len(),
                    s.fragments.len(),
                    s.commands.len()
                );
                EXIT_OK
            }
            Err(code) => code,
        },
        Verb::Run { scene } => match load_scene(scene, cli.ring) {
            Ok(s) => {
                let report = run(&s, &options(&cli));
                emit_report(&cli, &report);
                if report.has_errors() {
                    EXIT_ENGINE
                } else {
                    EXIT_OK
                }
            }
            Err(code) => code,
        },
        Verb::Report { scene } => match load_scene(scene, cli.ring) {
            Ok(s) => {
                let report = run(&s, &options(&cli));
                print!("{}", report.structured());
                for (label, secs) in &report.timings {
                    eprintln!("timing {label}: {secs:.3}s");
                }
                if report.has_errors() {
                    EXIT_ENGINE
                } else {
                    EXIT_OK
                }
            }
            Err(code) => code,
        },
        Verb::Verify { suite, scene } => {
            let parsed = match scene {
                Some(path) => match load_scene(path, cli.ring) {
                    Ok(s) => Some(s),
                    Err(code) => return code,
                },
                None => None,
            };
            match run_suite(suite, parsed.as_ref(), cli.unroll_depth) {
                Ok(outcome) => {
                    print!("{}", outcome.text());
                    if outcome.all_pass() {
                        EXIT_OK
                    } else {
                        EXIT_VERIFY
                    }
                }
                Err(CliError::Engine(msg)) => {
                    eprintln!("{msg}");
                    EXIT_ENGINE
                }
                Err(CliError::Scene(e)) => {
                    eprint!("{e}");
                    EXIT_SCENE
                }
            }
        }
        Verb::Pushforward { scene, fragment, vertex, map, degree } => {
            let Some(filtration) = cli.filtration.clone() else {
                eprintln!("pushforward needs --filtration <name>");
                return EXIT_SCENE;
            };
            match load_scene(scene, cli.ring) {
                Ok(s) => {
                    let text = format!(
                        "pushforward {fragment} {vertex} along {map} filtration {filtration} degree {degree}"
                    );
                    run_single(&cli, s, text)
                }
                Err(code) => code,
            }
        }
        Verb::Tensor { scene, left, right } => {
            let (Some((lf, lv)), Some((rf, rv))) = (left.split_once(':'), right.split_once(':'))
            else {
                eprintln!("tensor operands are written FRAGMENT:VERTEX");
                return EXIT_SCENE;
            };
            match load_scene(scene, cli.ring) {
                Ok(s) => run_single(&cli, s, format!("tensor {lf} {lv} {rf} {rv}")),
                Err(code) => code,
            }
        }
        Verb::Twist { scene, fragment, vertex, weight } => match load_scene(scene, cli.ring) {
            Ok(s) => run_single(&cli, s, format!("twist {fragment} {vertex} weight {weight}")),
            Err(code) => code,
        },
        Verb::Realize { scene, fragment, vertex } => match load_scene(scene, cli.ring) {
            Ok(s) => run_single(&cli, s, format!("realize {fragment} {vertex}")),
            Err(code) => code,
        },
    }
}
