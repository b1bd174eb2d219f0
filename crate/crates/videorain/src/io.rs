//! Clip input and output.
//!
//! Clips move between disk and memory in two shapes: image sequences
//! (PGM/PPM/PNG frames in a directory, lexicographic filename order) and a
//! raw little-endian float container for bit-exact round trips at 32-bit
//! resolution. Color frames collapse to luminance with Rec.601 weights.
//!
//! Raw container layout, byte by byte:
//! - bytes 0..4   magic `VTNS`
//! - bytes 4..8   format version, u32 little-endian (currently 1)
//! - bytes 8..16  height m, u64 little-endian
//! - bytes 16..24 width n, u64 little-endian
//! - bytes 24..32 frame count t, u64 little-endian
//! - bytes 32..   m*n*t samples, f32 little-endian, row-major with the
//!   frame index varying fastest (the standard layout of an `(m, n, t)`
//!   array).

use std::fs;
use std::io::{Read as _, Write as _};
use std::path::{Path, PathBuf};

use image::DynamicImage;
use ndarray::{Array3, Axis};

use crate::error::{Error, Result};
use crate::tensor::VideoTensor;

/// Leading bytes of the raw tensor container, usable to sniff file kind.
pub const TENSOR_MAGIC: [u8; 4] = *b"VTNS";

const MAGIC: &[u8; 4] = &TENSOR_MAGIC;
const VERSION: u32 = 1;
const REC601: [f64; 3] = [0.299, 0.587, 0.114];

/// Image formats `write_sequence` can emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceFormat {
    Pgm,
    Png,
}

impl SequenceFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            SequenceFormat::Pgm => "pgm",
            SequenceFormat::Png => "png",
        }
    }
}

fn is_frame_file(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()),
        Some(ref e) if e == "pgm" || e == "ppm" || e == "png" || e == "pnm"
    )
}

fn frame_to_luma(image: DynamicImage, path: &Path) -> Result<Array3<f64>> {
    let (w, h) = (image.width() as usize, image.height() as usize);
    let mut frame = Array3::zeros((h, w, 1));
    match image {
        DynamicImage::ImageLuma8(gray) => {
            for (y, x, p) in gray.enumerate_pixels().map(|(x, y, p)| (y, x, p)) {
                frame[[y as usize, x as usize, 0]] = p.0[0] as f64 / 255.0;
            }
        }
        DynamicImage::ImageRgb8(rgb) => {
            for (x, y, p) in rgb.enumerate_pixels() {
                let lum = REC601[0] * p.0[0] as f64
                    + REC601[1] * p.0[1] as f64
                    + REC601[2] * p.0[2] as f64;
                frame[[y as usize, x as usize, 0]] = lum / 255.0;
            }
        }
        other => {
            let rgb = other.to_rgb8();
            if rgb.width() as usize != w || rgb.height() as usize != h {
                return Err(Error::image(path, "frame changed size during conversion"));
            }
            for (x, y, p) in rgb.enumerate_pixels() {
                let lum = REC601[0] * p.0[0] as f64
                    + REC601[1] * p.0[1] as f64
                    + REC601[2] * p.0[2] as f64;
                frame[[y as usize, x as usize, 0]] = lum / 255.0;
            }
        }
    }
    Ok(frame)
}

/// Reads an image-sequence clip.
///
/// A directory reads every recognized frame file inside it in
/// lexicographic filename order; a single image file reads as a one-frame
/// clip. Frames must agree in size.
pub fn read_sequence(path: impl AsRef<Path>) -> Result<VideoTensor> {
    let path = path.as_ref();
    let files: Vec<PathBuf> = if path.is_dir() {
        let mut found: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && is_frame_file(p))
            .collect();
        found.sort_by_key(|p| p.file_name().map(|n| n.to_os_string()));
        found
    } else if path.is_file() {
        vec![path.to_path_buf()]
    } else {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or directory"),
        ));
    };
    if files.is_empty() {
        return Err(Error::Data(format!(
            "no frame files (pgm/ppm/png) found in {}",
            path.display()
        )));
    }

    let mut frames = Vec::with_capacity(files.len());
    let mut dims: Option<(usize, usize)> = None;
    for file in &files {
        let image = image::open(file).map_err(|e| Error::image(file, e.to_string()))?;
        let frame = frame_to_luma(image, file)?;
        let (h, w, _) = frame.dim();
        match dims {
            None => dims = Some((h, w)),
            Some(expected) if expected != (h, w) => {
                return Err(Error::Data(format!(
                    "frame {} is {}x{}, expected {}x{}",
                    file.display(),
                    h,
                    w,
                    expected.0,
                    expected.1
                )));
            }
            _ => {}
        }
        frames.push(frame);
    }
    let views: Vec<_> = frames.iter().map(|f| f.view()).collect();
    let stacked = ndarray::concatenate(Axis(2), &views)
        .map_err(|e| Error::Data(format!("could not assemble frames: {e}")))?;
    VideoTensor::from_array(stacked)
}

/// Writes a clip as numbered image frames, returning the paths written.
/// Samples clamp to `[0, 1]` and quantize to 8 bits with round-half-up.
pub fn write_sequence(
    x: &VideoTensor,
    dir: impl AsRef<Path>,
    format: SequenceFormat,
) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (m, n, t) = x.shape();
    let digits = t.to_string().len().max(4);
    let mut written = Vec::with_capacity(t);
    for f in 0..t {
        let name = format!("frame_{f:0digits$}.{}", format.extension());
        let file = dir.join(name);
        let mut pixels = Vec::with_capacity(m * n);
        for y in 0..m {
            for xx in 0..n {
                let v = x.array()[[y, xx, f]].clamp(0.0, 1.0);
                pixels.push((v * 255.0).round() as u8);
            }
        }
        let buffer: image::GrayImage =
            image::ImageBuffer::from_raw(n as u32, m as u32, pixels)
                .expect("frame buffer dimensions are consistent");
        buffer
            .save(&file)
            .map_err(|e| Error::image(&file, e.to_string()))?;
        written.push(file);
    }
    Ok(written)
}

/// Writes the raw float container described in the module docs.
pub fn write_tensor(x: &VideoTensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let (m, n, t) = x.shape();
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut header = Vec::with_capacity(32);
    header.extend_from_slice(MAGIC);
    header.extend_from_slice(&VERSION.to_le_bytes());
    header.extend_from_slice(&(m as u64).to_le_bytes());
    header.extend_from_slice(&(n as u64).to_le_bytes());
    header.extend_from_slice(&(t as u64).to_le_bytes());
    file.write_all(&header).map_err(|e| Error::io(path, e))?;
    let standard = x.array().as_standard_layout();
    let mut payload = Vec::with_capacity(x.len() * 4);
    for v in standard.iter() {
        payload.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    file.write_all(&payload).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads the raw float container described in the module docs.
pub fn read_tensor(path: impl AsRef<Path>) -> Result<VideoTensor> {
    let path = path.as_ref();
    let mut file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut header = [0u8; 32];
    file.read_exact(&mut header).map_err(|e| Error::io(path, e))?;
    if &header[0..4] != MAGIC {
        return Err(Error::Data(format!(
            "{} is not a raw tensor container (bad magic)",
            path.display()
        )));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().expect("slice is 4 bytes"));
    if version != VERSION {
        return Err(Error::Data(format!(
            "{}: unsupported container version {version}",
            path.display()
        )));
    }
    let m = u64::from_le_bytes(header[8..16].try_into().expect("slice is 8 bytes")) as usize;
    let n = u64::from_le_bytes(header[16..24].try_into().expect("slice is 8 bytes")) as usize;
    let t = u64::from_le_bytes(header[24..32].try_into().expect("slice is 8 bytes")) as usize;
    let count = m
        .checked_mul(n)
        .and_then(|p| p.checked_mul(t))
        .ok_or_else(|| Error::Data(format!("{}: header dimensions overflow", path.display())))?;
    let mut payload = Vec::new();
    file.read_to_end(&mut payload).map_err(|e| Error::io(path, e))?;
    if payload.len() != count * 4 {
        return Err(Error::Data(format!(
            "{}: payload holds {} bytes, header promises {}",
            path.display(),
            payload.len(),
            count * 4
        )));
    }
    let mut values = Vec::with_capacity(count);
    for chunk in payload.chunks_exact(4) {
        values.push(f32::from_le_bytes(chunk.try_into().expect("chunk is 4 bytes")) as f64);
    }
    let data = Array3::from_shape_vec((m, n, t), values)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    VideoTensor::from_array(data).map_err(|e| match e {
        Error::InvalidShape(msg) | Error::Numerical(msg) => {
            Error::Data(format!("{}: {msg}", path.display()))
        }
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use tempfile::tempdir;

    fn random_clip(seed: u64, m: usize, n: usize, t: usize) -> VideoTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = Array3::from_shape_fn((m, n, t), |_| rng.gen_range(0.0..1.0));
        VideoTensor::from_array(data).unwrap()
    }

    /// Random clip whose every sample is exactly representable in f32.
    fn random_f32_clip(seed: u64, m: usize, n: usize, t: usize) -> VideoTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = Array3::from_shape_fn((m, n, t), |_| rng.gen_range(-2.0..2.0f32) as f64);
        VideoTensor::from_array(data).unwrap()
    }

    #[test]
    fn single_pgm_reads_back_scaled() {
        let dir = tempdir().unwrap();
        let file = dir.path().join("one.pgm");
        let buffer: image::GrayImage = image::ImageBuffer::from_fn(4, 4, |_, _| image::Luma([128]));
        buffer.save(&file).unwrap();
        let clip = read_sequence(&file).unwrap();
        assert_eq!(clip.shape(), (4, 4, 1));
        for v in clip.array().iter() {
            assert!((v - 128.0 / 255.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rgb_collapses_to_rec601_luminance() {
        let dir = tempdir().unwrap();
        let file = dir.path().join("red.png");
        let buffer: image::RgbImage =
            image::ImageBuffer::from_fn(5, 3, |_, _| image::Rgb([255, 0, 0]));
        buffer.save(&file).unwrap();
        let clip = read_sequence(&file).unwrap();
        for v in clip.array().iter() {
            assert!((v - 0.299).abs() < 1e-12, "got {v}");
        }
    }

    #[test]
    fn sequences_round_trip_within_quantization() {
        let dir = tempdir().unwrap();
        let clip = random_clip(1, 12, 10, 5);
        for format in [SequenceFormat::Pgm, SequenceFormat::Png] {
            let sub = dir.path().join(format.extension());
            let files = write_sequence(&clip, &sub, format).unwrap();
            assert_eq!(files.len(), 5);
            let back = read_sequence(&sub).unwrap();
            assert_eq!(back.shape(), clip.shape());
            let worst = (&back - &clip).max_abs();
            assert!(worst <= 1.0 / 510.0 + 1e-12, "worst {worst} for {format:?}");
        }
    }

    #[test]
    fn frames_are_ordered_lexicographically() {
        let dir = tempdir().unwrap();
        for (name, value) in [("b.pgm", 200u8), ("a.pgm", 50u8), ("c.pgm", 100u8)] {
            let buffer: image::GrayImage =
                image::ImageBuffer::from_fn(3, 3, |_, _| image::Luma([value]));
            buffer.save(dir.path().join(name)).unwrap();
        }
        let clip = read_sequence(dir.path()).unwrap();
        let order: Vec<f64> = (0..3).map(|f| clip.array()[[0, 0, f]] * 255.0).collect();
        // Filename order a, b, c — not write order, not value order.
        assert_eq!(order.iter().map(|v| v.round() as u8).collect::<Vec<_>>(), vec![50, 200, 100]);
    }

    #[test]
    fn value_above_one_clamps_to_white() {
        let dir = tempdir().unwrap();
        let clip = VideoTensor::from_elem(4, 4, 1, 1.2).unwrap();
        let files = write_sequence(&clip, dir.path(), SequenceFormat::Pgm).unwrap();
        let image = image::open(&files[0]).unwrap().to_luma8();
        assert!(image.pixels().all(|p| p.0[0] == 255));
    }

    #[test]
    fn mixed_dimensions_error_names_the_file() {
        let dir = tempdir().unwrap();
        let small: image::GrayImage = image::ImageBuffer::from_fn(3, 3, |_, _| image::Luma([10]));
        small.save(dir.path().join("a.pgm")).unwrap();
        let big: image::GrayImage = image::ImageBuffer::from_fn(4, 4, |_, _| image::Luma([10]));
        big.save(dir.path().join("b.pgm")).unwrap();
        let err = read_sequence(dir.path()).unwrap_err();
        assert!(err.to_string().contains("b.pgm"), "message: {err}");
    }

    #[test]
    fn empty_directory_is_a_data_error() {
        let dir = tempdir().unwrap();
        assert!(read_sequence(dir.path()).is_err());
    }

    #[test]
    fn missing_path_errors_with_the_path() {
        let err = read_sequence("/definitely/not/here").unwrap_err();
        assert!(err.to_string().contains("/definitely/not/here"));
    }

    #[test]
    fn raw_container_round_trips_bit_exactly() {
        let dir = tempdir().unwrap();
        let file = dir.path().join("clip.vtns");
        let clip = random_f32_clip(2, 7, 9, 4);
        write_tensor(&clip, &file).unwrap();
        let back = read_tensor(&file).unwrap();
        assert_eq!(back.array(), clip.array());
    }

    #[test]
    fn raw_container_header_starts_with_magic() {
        let dir = tempdir().unwrap();
        let file = dir.path().join("clip.vtns");
        write_tensor(&random_f32_clip(3, 4, 4, 2), &file).unwrap();
        let bytes = fs::read(&file).unwrap();
        assert_eq!(&bytes[0..4], b"VTNS");
        assert_eq!(bytes.len(), 32 + 4 * 4 * 2 * 4);
    }

    #[test]
    fn raw_container_rejects_bad_magic_and_truncation() {
        let dir = tempdir().unwrap();
        let file = dir.path().join("clip.vtns");
        write_tensor(&random_f32_clip(4, 4, 4, 2), &file).unwrap();
        let mut bytes = fs::read(&file).unwrap();
        bytes[0] = b'X';
        fs::write(&file, &bytes).unwrap();
        assert!(read_tensor(&file).is_err());

        let file2 = dir.path().join("short.vtns");
        write_tensor(&random_f32_clip(5, 4, 4, 2), &file2).unwrap();
        let bytes = fs::read(&file2).unwrap();
        fs::write(&file2, &bytes[..bytes.len() - 5]).unwrap();
        assert!(read_tensor(&file2).is_err());
    }

    #[test]
    fn non_representable_values_round_to_f32_resolution() {
        // The container stores 32-bit floats; doubles land on the nearest
        // f32 and stay there on later round trips.
        let dir = tempdir().unwrap();
        let file = dir.path().join("clip.vtns");
        let clip = random_clip(6, 5, 5, 3);
        write_tensor(&clip, &file).unwrap();
        let once = read_tensor(&file).unwrap();
        assert!((&once - &clip).max_abs() < 1e-7);
        write_tensor(&once, &file).unwrap();
        let twice = read_tensor(&file).unwrap();
        assert_eq!(once.array(), twice.array());
    }
}
