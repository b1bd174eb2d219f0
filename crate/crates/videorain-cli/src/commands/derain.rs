//! The `derain` subcommand: decompose a rainy clip, write both layers plus
//! diagnostics and a reusable run manifest.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;

use videorain::solver::{AngleSelection, SolverConfig};
use videorain::RainAngle;

use crate::config::{format_weights, parse_weights, write_manifest, ConfigMap};
use crate::video::{load_video, save_video, OutputFormat};
use crate::{usage, Density, DerainArgs};

const CONFIG_KEYS: &[&str] = &[
    "input", "out", "theta", "alpha", "beta", "tol", "max_iters", "density", "format",
    "inner_prox", "clamp_rain",
];

pub fn run(args: DerainArgs) -> anyhow::Result<()> {
    let file = match &args.config {
        Some(path) => ConfigMap::load(path, CONFIG_KEYS)?,
        None => ConfigMap::empty(),
    };

    let input = file
        .resolve(args.input.as_deref(), "input")
        .ok_or_else(|| usage("--input is required"))?
        .to_string();
    let out = file
        .resolve(args.out.as_deref(), "out")
        .ok_or_else(|| usage("--out is required"))?
        .to_string();
    let density: Option<Density> = file.resolve_parsed(args.density, "density")?;
    let format: OutputFormat =
        file.resolve_parsed(args.format, "format")?.unwrap_or(OutputFormat::Pgm);

    let mut config = match density {
        Some(Density::Heavy) => SolverConfig::heavy_rain(),
        Some(Density::Light) => SolverConfig::light_rain(),
        None => SolverConfig::default(),
    };
    if let Some(text) = file.resolve(args.alpha.as_deref(), "alpha") {
        config.alpha = parse_weights::<5>(text, "alpha")?;
    }
    if let Some(text) = file.resolve(args.beta.as_deref(), "beta") {
        config.beta = parse_weights::<6>(text, "beta")?;
    }
    if let Some(tol) = file.resolve_parsed(args.tol, "tol")? {
        config.tol = tol;
    }
    if let Some(max_iters) = file.resolve_parsed(args.max_iters, "max_iters")? {
        config.max_outer = max_iters;
    }
    if let Some(inner) = file.resolve_parsed::<usize>(None, "inner_prox")? {
        config.inner_prox = inner;
    }
    if let Some(clamp) = file.resolve_parsed::<bool>(None, "clamp_rain")? {
        config.clamp_rain = clamp;
    }
    let theta_request = file.resolve(args.theta.as_deref(), "theta").unwrap_or("auto").to_string();
    config.theta = parse_theta(&theta_request)?;

    let observation = load_video(&input)?;
    let result = videorain::solver::derain(&observation, &config)?;

    if !args.quiet {
        for (i, stats) in result.diagnostics.iter().enumerate() {
            let max_residual =
                stats.residuals.iter().fold(0.0f64, |acc, r| acc.max(*r));
            eprintln!(
                "iter {:3}: objective={:.6e} max_residual={:.3e} ({:.2}s)",
                i + 1,
                stats.objective,
                max_residual,
                stats.seconds
            );
        }
    }

    let out_dir = Path::new(&out);
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory {out}"))?;
    let background_path = save_video(&result.background, out_dir, "background", format)?;
    let rain_path = save_video(&result.rain, out_dir, "rain", format)?;
    write_diagnostics(&out_dir.join("diagnostics.csv"), &result.diagnostics)?;

    let (m, n, t) = observation.shape();
    let mut pairs: Vec<(&str, String)> = vec![
        ("command", "derain".to_string()),
        ("input", input.clone()),
        ("out", out.clone()),
        ("format", format.to_string()),
        ("theta", theta_request.clone()),
        ("theta_used", format!("{:.4}", result.theta_used.degrees())),
        ("alpha", format_weights(&config.alpha)),
        ("beta", format_weights(&config.beta)),
        ("tol", config.tol.to_string()),
        ("max_iters", config.max_outer.to_string()),
        ("inner_prox", config.inner_prox.to_string()),
        ("clamp_rain", config.clamp_rain.to_string()),
        ("iterations_run", result.iterations_run.to_string()),
        ("converged", result.converged.to_string()),
        ("height", m.to_string()),
        ("width", n.to_string()),
        ("frames", t.to_string()),
    ];
    if theta_request == "auto" {
        pairs.insert(
            6,
            ("theta_confidence", format!("{:.4}", result.theta_used.confidence())),
        );
    }
    if let Some(density) = density {
        pairs.push(("density", density.to_string()));
    }
    write_manifest(&out_dir.join("run-manifest.txt"), &pairs)?;

    println!(
        "derained {input}: theta {:.2} deg, {} iterations, converged={}",
        result.theta_used.degrees(),
        result.iterations_run,
        result.converged
    );
    println!("background: {}", background_path.display());
    println!("rain: {}", rain_path.display());
    Ok(())
}

fn parse_theta(text: &str) -> anyhow::Result<AngleSelection> {
    if text == "auto" {
        return Ok(AngleSelection::Auto);
    }
    let degrees: f64 = text
        .parse()
        .map_err(|_| usage(format!("--theta: expected a number or \"auto\", got {text:?}")))?;
    Ok(AngleSelection::Fixed(RainAngle::from_degrees(degrees)?))
}

fn write_diagnostics(
    path: &Path,
    diagnostics: &[videorain::solver::IterationStats],
) -> anyhow::Result<()> {
    let mut csv = String::from(
        "iteration,directional_residual,sparse_residual,grad_x_residual,\
         grad_y_residual,grad_t_residual,lowrank_residual,objective,seconds\n",
    );
    for (i, stats) in diagnostics.iter().enumerate() {
        let [d, s, x, y, t, l] = stats.residuals;
        writeln!(
            csv,
            "{},{d:e},{s:e},{x:e},{y:e},{t:e},{l:e},{:e},{:.6}",
            i + 1,
            stats.objective,
            stats.seconds
        )
        .expect("string write cannot fail");
    }
    std::fs::write(path, csv)
        .with_context(|| format!("cannot write diagnostics {}", path.display()))
}
