//! 8-bit raster buffers and PNG/JPEG file I/O.

use std::path::Path;

use image::{DynamicImage, ImageReader};

use crate::error::{Error, Result};

/// Row-major interleaved 8-bit image with one (gray) or three (RGB) channels.
///
/// Sample `(x, y, ch)` lives at `data[(y * width + x) * channels + ch]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageBuffer {
    width: u32,
    height: u32,
    channels: u8,
    data: Vec<u8>,
}

impl ImageBuffer {
    pub fn new(width: u32, height: u32, channels: u8, data: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::Dimension(format!(
                "unsupported channel count {channels}"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!("empty image {width}x{height}")));
        }
        let expected = width as usize * height as usize * channels as usize;
        if data.len() != expected {
            return Err(Error::Dimension(format!(
                "buffer holds {} samples, {width}x{height}x{channels} needs {expected}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Image with every sample set to `value`.
    ///
    /// Panics on zero dimensions or a channel count other than 1 or 3.
    pub fn filled(width: u32, height: u32, channels: u8, value: u8) -> Self {
        let len = width as usize * height as usize * channels as usize;
        Self::new(width, height, channels, vec![value; len]).expect("valid dimensions")
    }

    /// Builds an image by evaluating `f(x, y, ch)` for every sample.
    pub fn from_fn(
        width: u32,
        height: u32,
        channels: u8,
        mut f: impl FnMut(u32, u32, u8) -> u8,
    ) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize * channels as usize);
        for y in 0..height {
            for x in 0..width {
                for ch in 0..channels {
                    data.push(f(x, y, ch));
                }
            }
        }
        Self::new(width, height, channels, data).expect("valid dimensions")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
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

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    #[inline]
    pub fn index(&self, x: u32, y: u32, ch: u8) -> usize {
        (y as usize * self.width as usize + x as usize) * self.channels as usize + ch as usize
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32, ch: u8) -> u8 {
        self.data[self.index(x, y, ch)]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, ch: u8, value: u8) {
        let i = self.index(x, y, ch);
        self.data[i] = value;
    }

    pub fn same_shape(&self, other: &ImageBuffer) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub(crate) fn to_dynamic(&self) -> DynamicImage {
        match self.channels {
            1 => DynamicImage::ImageLuma8(
                image::GrayImage::from_raw(self.width, self.height, self.data.clone())
                    .expect("length checked at construction"),
            ),
            _ => DynamicImage::ImageRgb8(
                image::RgbImage::from_raw(self.width, self.height, self.data.clone())
                    .expect("length checked at construction"),
            ),
        }
    }

    pub(crate) fn from_dynamic(img: DynamicImage) -> Self {
        match img {
            DynamicImage::ImageLuma8(g) => {
                let (w, h) = g.dimensions();
                Self::new(w, h, 1, g.into_raw()).expect("decoder output is consistent")
            }
            DynamicImage::ImageLumaA8(_)
            | DynamicImage::ImageLuma16(_)
            | DynamicImage::ImageLumaA16(_) => {
                let g = img.to_luma8();
                let (w, h) = g.dimensions();
                Self::new(w, h, 1, g.into_raw()).expect("decoder output is consistent")
            }
            other => {
                let rgb = other.to_rgb8();
                let (w, h) = rgb.dimensions();
                Self::new(w, h, 3, rgb.into_raw()).expect("decoder output is consistent")
            }
        }
    }

    /// Writes the buffer as an 8-bit PNG.
    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.to_dynamic()
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| match e {
                image::ImageError::IoError(io) => Error::io(path, io),
                other => Error::Format(other.to_string()),
            })
    }
}

/// Decodes a PNG or JPEG file. Gray sources (with or without alpha) yield one channel,
/// everything else is flattened to RGB.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image_bytes(&bytes)
}

pub(crate) fn decode_image_bytes(bytes: &[u8]) -> Result<ImageBuffer> {
    let reader = ImageReader::new(std::io::Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| Error::Format(e.to_string()))?;
    match reader.format() {
        Some(image::ImageFormat::Png) | Some(image::ImageFormat::Jpeg) => {}
        Some(other) => return Err(Error::Format(format!("unsupported format {other:?}"))),
        None => return Err(Error::Format("unrecognized image signature".into())),
    }
    let img = reader.decode().map_err(|e| Error::Format(e.to_string()))?;
    Ok(ImageBuffer::from_dynamic(img))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_matches_row_major_layout() {
        let img = ImageBuffer::from_fn(13, 7, 3, |x, y, c| (x * 10 + y * 3 + c as u32) as u8);
        for y in 0..7 {
            for x in 0..13 {
                for c in 0..3u8 {
                    let flat = ((y * 13 + x) * 3 + c as u32) as usize;
                    assert_eq!(img.data()[flat], (x * 10 + y * 3 + c as u32) as u8);
                    assert_eq!(img.get(x, y, c), img.data()[flat]);
                }
            }
        }
    }

    #[test]
    fn rejects_inconsistent_length() {
        assert!(matches!(
            ImageBuffer::new(4, 4, 3, vec![0; 47]),
            Err(Error::Dimension(_))
        ));
        assert!(ImageBuffer::new(4, 4, 2, vec![0; 32]).is_err());
    }

    #[test]
    fn png_roundtrip_preserves_layout() {
        let dir = tempfile::tempdir().unwrap();
        let rgb = ImageBuffer::from_fn(40, 20, 3, |x, y, c| (x + 2 * y + 50 * c as u32) as u8);
        let p = dir.path().join("rgb.png");
        rgb.save_png(&p).unwrap();
        assert_eq!(load_image(&p).unwrap(), rgb);

        let gray = ImageBuffer::from_fn(16, 9, 1, |x, y, _| (x * y) as u8);
        let p = dir.path().join("gray.png");
        gray.save_png(&p).unwrap();
        let back = load_image(&p).unwrap();
        assert_eq!(back.channels(), 1);
        assert_eq!(back, gray);
    }

    #[test]
    fn missing_and_truncated_files() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_image(dir.path().join("nope.png")),
            Err(Error::Io { .. })
        ));

        let img = ImageBuffer::from_fn(64, 64, 3, |x, y, c| (x ^ y) as u8 ^ c);
        let p = dir.path().join("full.png");
        img.save_png(&p).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        let cut = dir.path().join("cut.png");
        std::fs::write(&cut, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(load_image(&cut), Err(Error::Format(_))));
    }
}
