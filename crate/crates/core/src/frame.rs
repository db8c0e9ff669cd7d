//! Raw RGB frames and their on-disk forms (PNG, binary PPM).

use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("pixel buffer holds {got} bytes, expected {expected} for {width}x{height} RGB")]
    BadLength {
        width: usize,
        height: usize,
        expected: usize,
        got: usize,
    },
    #[error("zero-sized frame")]
    Empty,
    #[error("image codec: {0}")]
    Codec(#[from] image::ImageError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported frame file {0}: expected .png or .ppm")]
    UnsupportedFormat(PathBuf),
}

/// Row-major 8-bit RGB frame with a capture timestamp.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<u8>,
    pub timestamp_ms: u64,
}

impl Frame {
    pub fn new(width: usize, height: usize, data: Vec<u8>, timestamp_ms: u64) -> Result<Self, FrameError> {
        if width == 0 || height == 0 {
            return Err(FrameError::Empty);
        }
        let expected = width * height * 3;
        if data.len() != expected {
            return Err(FrameError::BadLength {
                width,
                height,
                expected,
                got: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
            timestamp_ms,
        })
    }

    /// Uniformly coloured frame.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let data = rgb.iter().copied().cycle().take(width * height * 3).collect();
        Self {
            width,
            height,
            data,
            timestamp_ms: 0,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Load a PNG or binary PPM (P6) file. The timestamp is left at zero.
    pub fn load(path: &Path) -> Result<Self, FrameError> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        let format = match ext.as_deref() {
            Some("png") => image::ImageFormat::Png,
            Some("ppm") | Some("pnm") => image::ImageFormat::Pnm,
            _ => return Err(FrameError::UnsupportedFormat(path.to_path_buf())),
        };
        let reader = std::io::BufReader::new(std::fs::File::open(path)?);
        let img = image::load(reader, format)?.into_rgb8();
        let (w, h) = img.dimensions();
        Frame::new(w as usize, h as usize, img.into_raw(), 0)
    }

    pub fn save_png(&self, path: &Path) -> Result<(), FrameError> {
        image::save_buffer_with_format(
            path,
            &self.data,
            self.width as u32,
            self.height as u32,
            image::ExtendedColorType::Rgb8,
            image::ImageFormat::Png,
        )?;
        Ok(())
    }

    pub fn save_ppm(&self, path: &Path) -> Result<(), FrameError> {
        use std::io::Write;
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(f, "P6\n{} {}\n255\n", self.width, self.height)?;
        f.write_all(&self.data)?;
        Ok(())
    }
}

/// Frame files of a directory in lexicographic order (the sequence order).
pub fn list_frame_files(dir: &Path) -> Result<Vec<PathBuf>, FrameError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && matches!(
                    p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
                    Some("png") | Some("ppm")
                )
                && !p
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .is_some_and(|s| s.ends_with("_stencil"))
        })
        .collect();
    files.sort();
    Ok(files)
}
