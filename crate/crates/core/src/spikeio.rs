//! `.spk` spike files, scene directories and image output.
//!
//! File layout (all integers and floats little-endian):
//!
//! ```text
//! magic        4 bytes  "RVS1"
//! version      u16      1
//! model        u8       0 FSM, 1 RVSM_DoG, 2 RVSM_Gauss
//! height       u32
//! width        u32
//! T            u32
//! n_scales     u16
//! scales       n_scales × f64
//! thresholds   n_scales × f64
//! noise        u8       0 off, 1 on
//! noise params 7 × f64  e1 e2 e3 beta1 beta2 beta3 k (zeros when off)
//! seed         u64
//! payload      for t, for scale: H×W spikes row-major, 2 bits each,
//!              first spike in the most significant pair; every plane is
//!              padded to a whole byte. 00 → 0, 01 → +1, 10 → −1, 11 invalid.
//! ```

use std::fs;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array2, Array3, Array4, ArrayView2, Axis};
use thiserror::Error;

use crate::noise::NoiseConfig;
use crate::sampler::{Model, SpikeVolume};
use crate::scene::SceneStream;

pub const MAGIC: [u8; 4] = *b"RVS1";
pub const VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum SpikeIoError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("not a spike file: magic {0:?} (expected \"RVS1\")")]
    BadMagic([u8; 4]),

    #[error("unsupported spike file version {0} (this build reads version 1)")]
    BadVersion(u16),

    #[error("invalid header: {0}")]
    InvalidHeader(String),

    #[error("invalid spike code 0b11 at step {t}, scale {scale}, index {index}")]
    InvalidCode {
        t: usize,
        scale: usize,
        index: usize,
    },

    #[error("truncated payload: step {t}, scale {scale} is incomplete")]
    Truncated { t: usize, scale: usize },

    #[error("invalid volume: {0}")]
    InvalidVolume(String),

    #[error("image error in {path}: {message}")]
    Image { path: PathBuf, message: String },

    #[error("no image files in {0}")]
    EmptyDirectory(PathBuf),

    #[error("{path} is {actual_h}x{actual_w}, expected {expected_h}x{expected_w}")]
    MixedSizes {
        path: PathBuf,
        expected_h: usize,
        expected_w: usize,
        actual_h: usize,
        actual_w: usize,
    },
}

type IoResult<T> = std::result::Result<T, SpikeIoError>;

/// Parsed `.spk` header.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeFileHeader {
    pub model: Model,
    pub height: u32,
    pub width: u32,
    pub steps: u32,
    pub scales: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub noise: Option<NoiseConfig>,
    pub seed: u64,
}

impl SpikeFileHeader {
    pub fn for_volume(volume: &SpikeVolume) -> IoResult<Self> {
        let to_u32 = |v: usize, what: &str| {
            u32::try_from(v)
                .map_err(|_| SpikeIoError::InvalidVolume(format!("{what} {v} exceeds u32")))
        };
        Ok(Self {
            model: volume.model(),
            height: to_u32(volume.height(), "height")?,
            width: to_u32(volume.width(), "width")?,
            steps: to_u32(volume.len(), "T")?,
            scales: volume.scales().to_vec(),
            thresholds: volume.thresholds().to_vec(),
            noise: volume.noise().copied(),
            seed: volume.seed(),
        })
    }

    /// Header size in bytes.
    pub fn byte_len(&self) -> usize {
        header_len(self.scales.len())
    }

    /// Bytes per packed (step, scale) plane.
    pub fn plane_bytes(&self) -> usize {
        plane_bytes(self.height as usize * self.width as usize)
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> IoResult<()> {
        let n = u16::try_from(self.scales.len())
            .map_err(|_| SpikeIoError::InvalidHeader("too many scales".into()))?;
        w.write_all(&MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&[self.model.code()])?;
        w.write_all(&self.height.to_le_bytes())?;
        w.write_all(&self.width.to_le_bytes())?;
        w.write_all(&self.steps.to_le_bytes())?;
        w.write_all(&n.to_le_bytes())?;
        for v in self.scales.iter().chain(&self.thresholds) {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&[u8::from(self.noise.is_some())])?;
        let params = self.noise.map_or([0.0; 7], |n| n.to_array());
        for v in params {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.seed.to_le_bytes())?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> IoResult<Self> {
        let mut magic = [0u8; 4];
        read_header_bytes(r, &mut magic)?;
        if magic != MAGIC {
            return Err(SpikeIoError::BadMagic(magic));
        }
        let version = u16::from_le_bytes(read_array(r)?);
        if version != VERSION {
            return Err(SpikeIoError::BadVersion(version));
        }
        let [code] = read_array(r)?;
        let model = Model::from_code(code)
            .ok_or_else(|| SpikeIoError::InvalidHeader(format!("unknown model code {code}")))?;
        let height = u32::from_le_bytes(read_array(r)?);
        let width = u32::from_le_bytes(read_array(r)?);
        let steps = u32::from_le_bytes(read_array(r)?);
        let n = u16::from_le_bytes(read_array(r)?) as usize;
        if n == 0 {
            return Err(SpikeIoError::InvalidHeader(
                "n_scales must be at least 1".into(),
            ));
        }
        if model == Model::Fsm && n != 1 {
            return Err(SpikeIoError::InvalidHeader(format!(
                "FSM files carry exactly one scale, got {n}"
            )));
        }
        let scales = read_f64s(r, n)?;
        let thresholds = read_f64s(r, n)?;
        let [noise_flag] = read_array(r)?;
        let params: [f64; 7] = read_f64s(r, 7)?.try_into().expect("seven values");
        let noise = match noise_flag {
            0 => None,
            1 => Some(NoiseConfig::from_array(params)),
            f => {
                return Err(SpikeIoError::InvalidHeader(format!(
                    "noise flag must be 0 or 1, got {f}"
                )))
            }
        };
        let seed = u64::from_le_bytes(read_array(r)?);
        Ok(Self {
            model,
            height,
            width,
            steps,
            scales,
            thresholds,
            noise,
            seed,
        })
    }
}

pub fn header_len(n_scales: usize) -> usize {
    4 + 2 + 1 + 4 + 4 + 4 + 2 + 16 * n_scales + 1 + 7 * 8 + 8
}

pub fn plane_bytes(pixels: usize) -> usize {
    pixels.div_ceil(4)
}

fn read_header_bytes<R: Read>(r: &mut R, buf: &mut [u8]) -> IoResult<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => SpikeIoError::InvalidHeader("header is truncated".into()),
        _ => SpikeIoError::Io(e),
    })
}

fn read_array<R: Read, const N: usize>(r: &mut R) -> IoResult<[u8; N]> {
    let mut buf = [0u8; N];
    read_header_bytes(r, &mut buf)?;
    Ok(buf)
}

fn read_f64s<R: Read>(r: &mut R, count: usize) -> IoResult<Vec<f64>> {
    (0..count)
        .map(|_| Ok(f64::from_le_bytes(read_array(r)?)))
        .collect()
}

fn code(spike: i8) -> u8 {
    match spike {
        0 => 0b00,
        1 => 0b01,
        -1 => 0b10,
        _ => unreachable!("spike volumes are ternary"),
    }
}

/// Packs one plane, row-major, four spikes per byte, first spike in the top
/// bit pair.
pub fn pack_plane(plane: ArrayView2<'_, i8>, out: &mut Vec<u8>) {
    out.clear();
    out.resize(plane_bytes(plane.len()), 0);
    for (i, &s) in plane.iter().enumerate() {
        out[i / 4] |= code(s) << (6 - 2 * (i % 4));
    }
}

fn unpack_plane(bytes: &[u8], plane: &mut [i8], t: usize, scale: usize) -> IoResult<()> {
    for (i, slot) in plane.iter_mut().enumerate() {
        *slot = match (bytes[i / 4] >> (6 - 2 * (i % 4))) & 0b11 {
            0b00 => 0,
            0b01 => 1,
            0b10 => -1,
            _ => return Err(SpikeIoError::InvalidCode { t, scale, index: i }),
        };
    }
    Ok(())
}

/// Writes header and payload; returns the number of bytes written.
pub fn encode_volume<W: Write>(volume: &SpikeVolume, sink: W) -> IoResult<u64> {
    let header = SpikeFileHeader::for_volume(volume)?;
    let mut sink = BufWriter::new(sink);
    header.write_to(&mut sink)?;
    let mut buf = Vec::with_capacity(header.plane_bytes());
    let mut written = header.byte_len() as u64;
    for step in volume.spikes().outer_iter() {
        for plane in step.outer_iter() {
            pack_plane(plane, &mut buf);
            sink.write_all(&buf)?;
            written += buf.len() as u64;
        }
    }
    sink.flush()?;
    Ok(written)
}

/// Streaming decoder: yields the spike planes of one step at a time.
pub struct SpikeReader<R> {
    source: R,
    header: SpikeFileHeader,
    next_step: usize,
    buf: Vec<u8>,
}

impl<R: Read> SpikeReader<R> {
    pub fn new(mut source: R) -> IoResult<Self> {
        let header = SpikeFileHeader::read_from(&mut source)?;
        let buf = vec![0; header.plane_bytes()];
        Ok(Self {
            source,
            header,
            next_step: 0,
            buf,
        })
    }

    pub fn header(&self) -> &SpikeFileHeader {
        &self.header
    }

    /// Next `scales × height × width` step, or `None` after the last one.
    pub fn next_step(&mut self) -> IoResult<Option<Array3<i8>>> {
        if self.next_step >= self.header.steps as usize {
            return Ok(None);
        }
        let (h, w) = (self.header.height as usize, self.header.width as usize);
        let n = self.header.scales.len();
        let t = self.next_step;
        let mut planes = Array3::<i8>::zeros((n, h, w));
        for (scale, mut plane) in planes.axis_iter_mut(Axis(0)).enumerate() {
            self.source
                .read_exact(&mut self.buf)
                .map_err(|e| match e.kind() {
                    io::ErrorKind::UnexpectedEof => SpikeIoError::Truncated { t, scale },
                    _ => SpikeIoError::Io(e),
                })?;
            let slice = plane.as_slice_mut().expect("standard layout");
            unpack_plane(&self.buf, slice, t, scale)?;
        }
        self.next_step += 1;
        Ok(Some(planes))
    }
}

/// Reads a whole volume; any error rejects the file as a whole.
pub fn decode_volume<R: Read>(source: R) -> IoResult<SpikeVolume> {
    let mut reader = SpikeReader::new(BufReader::new(source))?;
    let h = reader.header.clone();
    let mut spikes = Array4::<i8>::zeros((
        h.steps as usize,
        h.scales.len(),
        h.height as usize,
        h.width as usize,
    ));
    let mut t = 0;
    while let Some(step) = reader.next_step()? {
        spikes.index_axis_mut(Axis(0), t).assign(&step);
        t += 1;
    }
    SpikeVolume::new(h.model, h.scales, h.thresholds, spikes, h.noise, h.seed)
        .map_err(|e| SpikeIoError::InvalidVolume(e.to_string()))
}

pub fn write_volume(path: &Path, volume: &SpikeVolume) -> IoResult<u64> {
    encode_volume(volume, fs::File::create(path)?)
}

pub fn read_volume(path: &Path) -> IoResult<SpikeVolume> {
    decode_volume(fs::File::open(path)?)
}

const IMAGE_EXTENSIONS: [&str; 6] = ["png", "pgm", "bmp", "jpg", "jpeg", "tif"];

fn image_files(dir: &Path) -> IoResult<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        })
        .collect();
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

/// Loads a directory of equally sized grayscale images, in lexicographic
/// file-name order, as brightness frames in `[0, 255]`.
pub fn read_scene(dir: &Path) -> IoResult<SceneStream> {
    let files = image_files(dir)?;
    if files.is_empty() {
        return Err(SpikeIoError::EmptyDirectory(dir.to_path_buf()));
    }
    let mut frames = Vec::with_capacity(files.len());
    let mut shape = None;
    for path in &files {
        let img = image::open(path)
            .map_err(|e| SpikeIoError::Image {
                path: path.clone(),
                message: e.to_string(),
            })?
            .into_luma8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        let (eh, ew) = *shape.get_or_insert((h, w));
        if (h, w) != (eh, ew) {
            return Err(SpikeIoError::MixedSizes {
                path: path.clone(),
                expected_h: eh,
                expected_w: ew,
                actual_h: h,
                actual_w: w,
            });
        }
        let data: Vec<f64> = img.into_raw().into_iter().map(f64::from).collect();
        frames.push(Array2::from_shape_vec((h, w), data).expect("buffer matches dimensions"));
    }
    SceneStream::new(frames).map_err(|e| SpikeIoError::InvalidVolume(e.to_string()))
}

/// Writes frames as 8-bit grayscale PNGs named `{prefix}_{index:05}.png`
/// (index from 0). Values are rounded and clamped to `[0, 255]`.
pub fn write_images(frames: &[Array2<f64>], dir: &Path, prefix: &str) -> IoResult<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    frames
        .iter()
        .enumerate()
        .map(|(i, frame)| {
            let path = dir.join(format!("{prefix}_{i:05}.png"));
            let (h, w) = frame.dim();
            let pixels: Vec<u8> = frame
                .iter()
                .map(|&v| v.round().clamp(0.0, 255.0) as u8)
                .collect();
            image::GrayImage::from_raw(w as u32, h as u32, pixels)
                .expect("buffer matches dimensions")
                .save(&path)
                .map_err(|e| SpikeIoError::Image {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
            Ok(path)
        })
        .collect()
}
