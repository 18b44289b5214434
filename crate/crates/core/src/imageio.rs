//! Binary PGM (P5, maxval 255) and 8-bit grayscale PNG encoding.

use std::io::{self, BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::GrayImage;

#[derive(Debug, Error)]
pub enum ImageIoError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("malformed PGM: {0}")]
    Pgm(String),
    #[error("PNG encode: {0}")]
    PngEncode(#[from] png::EncodingError),
    #[error("PNG decode: {0}")]
    PngDecode(#[from] png::DecodingError),
    #[error("unsupported PNG layout: {0}")]
    PngLayout(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ImageFormat {
    #[default]
    Pgm,
    Png,
}

impl ImageFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Pgm => "pgm",
            ImageFormat::Png => "png",
        }
    }

    pub fn from_path(path: &Path) -> Option<ImageFormat> {
        match path.extension()?.to_str()? {
            "pgm" => Some(ImageFormat::Pgm),
            "png" => Some(ImageFormat::Png),
            _ => None,
        }
    }
}

pub fn write_pgm<W: Write>(img: &GrayImage, mut w: W) -> io::Result<()> {
    write!(w, "P5\n{} {}\n255\n", img.width, img.height)?;
    w.write_all(&img.pixels)
}

fn pgm_token<R: BufRead>(r: &mut R) -> Result<String, ImageIoError> {
    let mut tok = String::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)? == 0 {
            break;
        }
        let c = byte[0];
        if c == b'#' && tok.is_empty() {
            let mut skip = Vec::new();
            r.read_until(b'\n', &mut skip)?;
            continue;
        }
        if c.is_ascii_whitespace() {
            if tok.is_empty() {
                continue;
            }
            break;
        }
        tok.push(c as char);
    }
    if tok.is_empty() {
        return Err(ImageIoError::Pgm("unexpected end of header".into()));
    }
    Ok(tok)
}

pub fn read_pgm<R: BufRead>(mut r: R) -> Result<GrayImage, ImageIoError> {
    if pgm_token(&mut r)? != "P5" {
        return Err(ImageIoError::Pgm("magic is not P5".into()));
    }
    let mut num = |what: &str| -> Result<u32, ImageIoError> {
        pgm_token(&mut r)?
            .parse()
            .map_err(|_| ImageIoError::Pgm(format!("bad {what}")))
    };
    let width = num("width")?;
    let height = num("height")?;
    let maxval = num("maxval")?;
    if maxval != 255 {
        return Err(ImageIoError::Pgm(format!("maxval {maxval} unsupported")));
    }
    let mut pixels = vec![0u8; width as usize * height as usize];
    r.read_exact(&mut pixels)?;
    Ok(GrayImage {
        width,
        height,
        pixels,
    })
}

pub fn write_png<W: Write>(img: &GrayImage, w: W) -> Result<(), ImageIoError> {
    let mut enc = png::Encoder::new(w, img.width, img.height);
    enc.set_color(png::ColorType::Grayscale);
    enc.set_depth(png::BitDepth::Eight);
    let mut writer = enc.write_header()?;
    writer.write_image_data(&img.pixels)?;
    writer.finish()?;
    Ok(())
}

pub fn read_png<R: BufRead + io::Seek>(r: R) -> Result<GrayImage, ImageIoError> {
    let dec = png::Decoder::new(r);
    let mut reader = dec.read_info()?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(ImageIoError::PngLayout(format!(
            "{:?} at {:?}",
            info.color_type, info.bit_depth
        )));
    }
    let (width, height) = (info.width, info.height);
    let mut pixels = vec![0u8; reader.output_buffer_size().unwrap_or(0)];
    reader.next_frame(&mut pixels)?;
    pixels.truncate(width as usize * height as usize);
    Ok(GrayImage {
        width,
        height,
        pixels,
    })
}

pub fn encode(img: &GrayImage, format: ImageFormat) -> Result<Vec<u8>, ImageIoError> {
    let mut buf = Vec::new();
    match format {
        ImageFormat::Pgm => write_pgm(img, &mut buf)?,
        ImageFormat::Png => write_png(img, &mut buf)?,
    }
    Ok(buf)
}

pub fn decode(bytes: &[u8], format: ImageFormat) -> Result<GrayImage, ImageIoError> {
    match format {
        ImageFormat::Pgm => read_pgm(bytes),
        ImageFormat::Png => read_png(io::Cursor::new(bytes)),
    }
}

/// Read an image, choosing the decoder from the file extension.
pub fn load(path: &Path) -> Result<GrayImage, ImageIoError> {
    let bytes = std::fs::read(path)?;
    let format = ImageFormat::from_path(path).unwrap_or(ImageFormat::Pgm);
    decode(&bytes, format)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> GrayImage {
        let mut img = GrayImage::filled(7, 5, 0);
        img.set(3, 2, 255);
        img.set(6, 4, 128);
        img
    }

    #[test]
    fn pgm_header_and_payload() {
        let bytes = encode(&sample(), ImageFormat::Pgm).unwrap();
        assert!(bytes.starts_with(b"P5\n7 5\n255\n"));
        assert_eq!(bytes.len(), 11 + 35);
        assert_eq!(decode(&bytes, ImageFormat::Pgm).unwrap(), sample());
    }

    #[test]
    fn pgm_with_comment_parses() {
        let mut bytes = b"P5\n# made by hand\n2 1\n255\n".to_vec();
        bytes.extend([0, 255]);
        let img = read_pgm(&bytes[..]).unwrap();
        assert_eq!(img.pixels, vec![0, 255]);
    }

    #[test]
    fn png_round_trip() {
        let bytes = encode(&sample(), ImageFormat::Png).unwrap();
        assert_eq!(&bytes[1..4], b"PNG");
        assert_eq!(decode(&bytes, ImageFormat::Png).unwrap(), sample());
        assert_eq!(bytes, encode(&sample(), ImageFormat::Png).unwrap());
    }

    #[test]
    fn bad_pgm_is_rejected() {
        assert!(read_pgm(&b"P2\n1 1\n255\n0"[..]).is_err());
        assert!(read_pgm(&b"P5\n1 1\n65535\n00"[..]).is_err());
        assert!(read_pgm(&b"P5\n4 4\n255\n\x00"[..]).is_err());
    }
}
