//! Clip loading and saving shared by the subcommands.

use std::io::Read as _;
use std::path::{Path, PathBuf};

use anyhow::Context;

use videorain::io::{self, SequenceFormat, TENSOR_MAGIC};
use videorain::VideoTensor;

/// On-disk representation for clips a command writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Pgm,
    Png,
    Raw,
}

impl std::fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OutputFormat::Pgm => write!(f, "pgm"),
            OutputFormat::Png => write!(f, "png"),
            OutputFormat::Raw => write!(f, "raw"),
        }
    }
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pgm" => Ok(OutputFormat::Pgm),
            "png" => Ok(OutputFormat::Png),
            "raw" => Ok(OutputFormat::Raw),
            other => Err(format!("unknown format {other:?} (expected pgm, png, or raw)")),
        }
    }
}

/// Load a clip from a frame directory, a single image file, or a raw tensor
/// container (recognized by its magic bytes).
pub fn load_video(path: &str) -> anyhow::Result<VideoTensor> {
    let p = Path::new(path);
    if p.is_file() && file_has_tensor_magic(p)? {
        return Ok(io::read_tensor(p)?);
    }
    Ok(io::read_sequence(p)?)
}

fn file_has_tensor_magic(path: &Path) -> anyhow::Result<bool> {
    let mut file = std::fs::File::open(path)
        .with_context(|| format!("cannot open input {}", path.display()))?;
    let mut head = [0u8; 4];
    match file.read_exact(&mut head) {
        Ok(()) => Ok(head == TENSOR_MAGIC),
        Err(_) => Ok(false),
    }
}

/// Write a clip under `dir` as `<stem>.vtns` (raw) or a `<stem>/` frame
/// directory, returning the path written.
pub fn save_video(
    x: &VideoTensor,
    dir: &Path,
    stem: &str,
    format: OutputFormat,
) -> anyhow::Result<PathBuf> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    match format {
        OutputFormat::Raw => {
            let path = dir.join(format!("{stem}.vtns"));
            io::write_tensor(x, &path)?;
            Ok(path)
        }
        OutputFormat::Pgm | OutputFormat::Png => {
            let sub = dir.join(stem);
            let sequence_format =
                if format == OutputFormat::Pgm { SequenceFormat::Pgm } else { SequenceFormat::Png };
            io::write_sequence(x, &sub, sequence_format)?;
            Ok(sub)
        }
    }
}
