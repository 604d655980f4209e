use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hb_cli::checks::run_checks;
use hb_cli::render::{render_bend_steps, render_svg, RenderKind};
use hb_cli::scene::{parse_scene, DomainSpec, Scene};
use hb_cli::Suite;
use hb_core::bend::trace_separation;
use hb_core::groups::punctured_torus_rep;
use hb_core::{busemann_volume, ConvexDomain, MetricContext, Region};
use nalgebra::DVector;

#[derive(Parser)]
#[command(
    name = "hb",
    version,
    about = "Hilbert geometry and projective bending from scene files"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Hilbert distance between two chart points, given as comma-separated coordinates.
    Dist { scene: PathBuf, x: String, y: String },
    /// Busemann volume of a region of the scene's domain.
    Volume {
        scene: PathBuf,
        /// `whole` or `ball:R` around the domain's interior point.
        #[arg(long, default_value = "ball:1")]
        region: String,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Builds the bent domain of a bend scene and prints a summary.
    Bend {
        scene: PathBuf,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Renders the scene to SVG.
    Tile {
        scene: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// `tiling`, `bent-domain` or `fundamental-domain`.
        #[arg(long, default_value = "tiling")]
        what: RenderKind,
        /// Writes one document per `render.t_steps` entry, suffixed by step index.
        #[arg(long)]
        steps: bool,
    },
    /// Runs invariant suites and prints a JSON-lines report.
    Check {
        scene: PathBuf,
        #[arg(long, default_value = "all")]
        suite: Suite,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn load(path: &Path) -> Result<Scene, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_scene(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Flag, then `HB_SEED`, then the scene.
fn resolve_seed(flag: Option<u64>, scene: &Scene) -> Result<u64, String> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("HB_SEED") {
        Ok(v) => v.trim().parse().map_err(|_| format!("HB_SEED is not an integer: {v}")),
        Err(_) => Ok(scene.probe.seed),
    }
}

fn parse_point(s: &str, n: usize) -> Result<DVector<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|_| format!("bad coordinate `{c}`")))
        .collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} coordinates, found {}", v.len()));
    }
    Ok(DVector::from_vec(v))
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Dist { scene, x, y } => {
            let scene = load(&scene)?;
            let built = scene.build().map_err(|e| e.to_string())?;
            let domain = built.domain();
            let a = parse_point(&x, domain.dim())?;
            let b = parse_point(&y, domain.dim())?;
            let d = MetricContext::new(domain)
                .distance_affine(&a, &b)
                .map_err(|e| e.to_string())?;
            println!("{d:.12}");
        }
        Command::Volume {
            scene,
            region,
            samples,
            seed,
        } => {
            let scene = load(&scene)?;
            let seed = resolve_seed(seed, &scene)?;
            let built = scene.build().map_err(|e| e.to_string())?;
            let domain = built.domain();
            let ctx = MetricContext::new(domain);
            let center = domain.chart().embed(&domain.interior_point());
            let region = match region.as_str() {
                "whole" => Region::Whole,
                r => {
                    let radius = r
                        .strip_prefix("ball:")
                        .and_then(|x| x.parse::<f64>().ok())
                        .ok_or_else(|| format!("bad region `{r}`, expected `whole` or `ball:R`"))?;
                    Region::Ball {
                        center: &center,
                        radius,
                    }
                }
            };
            let samples = samples.unwrap_or(scene.probe.samples);
            let (est, se) = busemann_volume(&ctx, region, samples, seed).map_err(|e| e.to_string())?;
            println!("{{\"estimate\":{est:.9},\"stderr\":{se:.9},\"samples\":{samples},\"seed\":{seed}}}");
        }
        Command::Bend { scene, t, depth } => {
            let scene = load(&scene)?;
            let (t0, d0) = match scene.domain {
                DomainSpec::Bend { t, depth, .. } => (t, depth),
                _ => (0.0, 6),
            };
            let b = scene
                .bend_with(t.unwrap_or(t0), depth.unwrap_or(d0))
                .map_err(|e| e.to_string())?;
            let (lo, hi) = b.domain.bounding_box();
            let worst = b.relations.iter().map(|r| r.1).fold(0.0, f64::max);
            let (word, sep) = trace_separation(&punctured_torus_rep(), &b.rho_t, 4).map_err(|e| e.to_string())?;
            let summary = serde_json::json!({
                "t": b.domain.t(),
                "depth": b.params.depth,
                "chambers": b.domain.chambers().len(),
                "walls": b.walls.words.len(),
                "relation_residual": worst,
                "trace_separation": { "word": word.to_string(), "value": sep },
                "bounding_box": [lo.as_slice(), hi.as_slice()],
            });
            println!("{summary}");
        }
        Command::Tile {
            scene,
            output,
            what,
            steps,
        } => {
            let scene = load(&scene)?;
            if steps {
                let docs = render_bend_steps(&scene).map_err(|e| e.to_string())?;
                let stem = output.with_extension("");
                for (i, doc) in docs.iter().enumerate() {
                    let path = PathBuf::from(format!("{}-{i}.svg", stem.display()));
                    std::fs::write(&path, doc).map_err(|e| format!("{}: {e}", path.display()))?;
                }
            } else {
                let what = match (&scene.domain, what) {
                    (DomainSpec::Bend { .. }, RenderKind::Tiling) => RenderKind::BentDomain,
                    (_, w) => w,
                };
                let doc = render_svg(&scene, what).map_err(|e| e.to_string())?;
                std::fs::write(&output, doc).map_err(|e| format!("{}: {e}", output.display()))?;
            }
        }
        Command::Check {
            scene,
            suite,
            seed,
            output,
        } => {
            let scene = load(&scene)?;
            let seed = resolve_seed(seed, &scene)?;
            let report = run_checks(&scene, suite, seed).map_err(|e| e.to_string())?;
            let text = report.to_jsonl();
            match output {
                Some(path) => std::fs::write(&path, &text).map_err(|e| format!("{}: {e}", path.display()))?,
                None => print!("{text}"),
            }
            return Ok(ExitCode::from(report.exit_code() as u8));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("hb: {e}");
            ExitCode::from(2)
        }
    }
}
