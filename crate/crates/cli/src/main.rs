mod commands;
mod output;
mod scene;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Failure;
use scene::{Format, Scene};

const EXIT_SCENE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Hypersurfaces and isotropic congruences of the Lorentzian
/// pseudoconformal space.
#[derive(Parser)]
#[command(name = "pcgeom", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Map the scene's points onto the Darboux quadric.
    Embed(SceneArgs),
    /// Causal type of a hypersurface over the scene grid.
    Classify(SceneArgs),
    /// Affinor, singular points, torses, focal set and degeneracy check.
    Lightlike(SceneArgs),
    /// Affinor, roots, integrability defect and optional stratification.
    Congruence(SceneArgs),
    /// List the built-in catalog.
    Examples(OutArgs),
}

#[derive(Args)]
struct OutArgs {
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct SceneArgs {
    #[arg(long)]
    scene: PathBuf,
    #[command(flatten)]
    out: OutArgs,
}

type Handler = fn(&Scene, Format) -> Result<Vec<u8>, Failure>;

fn run(cli: Cli) -> Result<(), (u8, String)> {
    let scene_err = |m: String| (EXIT_SCENE, m);
    let (bytes, path) = match cli.command {
        Command::Examples(o) => {
            let format = o.format.unwrap_or_default();
            (commands::examples(format), o.out)
        }
        cmd => {
            let (a, f): (SceneArgs, Handler) = match cmd {
                Command::Embed(a) => (a, commands::embed),
                Command::Classify(a) => (a, commands::classify),
                Command::Lightlike(a) => (a, commands::lightlike),
                Command::Congruence(a) => (a, commands::congruence),
                Command::Examples(_) => unreachable!(),
            };
            let scene = Scene::load(&a.scene).map_err(scene_err)?;
            let format = a.out.format.or(scene.output.format).unwrap_or_default();
            let path = a.out.out.or_else(|| scene.output.path.clone());
            (f(&scene, format), path)
        }
    };
    match bytes {
        Ok(b) => output::emit(&b, path.as_deref()).map_err(scene_err),
        Err(Failure::Scene(m)) => Err(scene_err(m)),
        Err(Failure::Fatal(m)) => Err((EXIT_NUMERICAL, m)),
        Err(Failure::Numerical { rendered, message }) => {
            output::emit(&rendered, path.as_deref()).map_err(scene_err)?;
            Err((EXIT_NUMERICAL, message))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("pcgeom: {message}");
            ExitCode::from(code)
        }
    }
}
