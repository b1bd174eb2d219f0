//! The `synth` subcommand: render reproducible synthetic rain over a clean
//! clip (or a generated textured one) and write the ground-truth triple.

use std::path::Path;

use anyhow::Context;

use videorain::synth::{self, RainSynthConfig};

use crate::config::{write_manifest, ConfigMap};
use crate::video::{load_video, save_video, OutputFormat};
use crate::{usage, Density, SynthArgs};

const CONFIG_KEYS: &[&str] = &["input", "out", "angle", "density", "seed", "format"];

/// Dimensions of the generated background when no clean clip is supplied.
const GENERATED_SHAPE: (usize, usize, usize) = (64, 64, 20);

pub fn run(args: SynthArgs) -> anyhow::Result<()> {
    let file = match &args.config {
        Some(path) => ConfigMap::load(path, CONFIG_KEYS)?,
        None => ConfigMap::empty(),
    };

    let out = file
        .resolve(args.out.as_deref(), "out")
        .ok_or_else(|| usage("--out is required"))?
        .to_string();
    let input = file.resolve(args.input.as_deref(), "input").map(str::to_string);
    let angle = file.resolve_parsed(args.angle, "angle")?.unwrap_or(45.0);
    let density = file.resolve_parsed(args.density, "density")?.unwrap_or(Density::Light);
    let seed = file.resolve_parsed(args.seed, "seed")?.unwrap_or(0);
    let format: OutputFormat =
        file.resolve_parsed(args.format, "format")?.unwrap_or(OutputFormat::Pgm);

    let clean = match &input {
        Some(path) => load_video(path)?,
        None => {
            let (m, n, t) = GENERATED_SHAPE;
            synth::textured_background(m, n, t, seed)?
        }
    };
    let config = match density {
        Density::Light => RainSynthConfig::light(angle, seed),
        Density::Heavy => RainSynthConfig::heavy(angle, seed),
    };
    let (observed, rain) = synth::synthesize(&clean, &config)?;

    let out_dir = Path::new(&out);
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory {out}"))?;
    let observed_path = save_video(&observed, out_dir, "observed", format)?;
    let rain_path = save_video(&rain, out_dir, "rain", format)?;
    let clean_path = save_video(&clean, out_dir, "clean", format)?;

    let (m, n, t) = observed.shape();
    let mut pairs: Vec<(&str, String)> = vec![
        ("command", "synth".to_string()),
        ("out", out.clone()),
        ("angle", angle.to_string()),
        ("density", density.to_string()),
        ("seed", seed.to_string()),
        ("format", format.to_string()),
        ("angle_jitter_deg", config.angle_jitter_deg.to_string()),
        ("length_mean", config.length_mean.to_string()),
        ("length_jitter", config.length_jitter.to_string()),
        ("streak_width", config.width.to_string()),
        ("intensity_mean", config.intensity_mean.to_string()),
        ("intensity_jitter", config.intensity_jitter.to_string()),
        ("height", m.to_string()),
        ("width", n.to_string()),
        ("frames", t.to_string()),
    ];
    if let Some(input) = &input {
        pairs.insert(1, ("input", input.clone()));
    }
    write_manifest(&out_dir.join("run-manifest.txt"), &pairs)?;

    println!("observed: {}", observed_path.display());
    println!("rain: {}", rain_path.display());
    println!("clean: {}", clean_path.display());
    Ok(())
}
