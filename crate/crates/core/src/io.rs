//! Image readers and writers.
//!
//! - PGM, binary (`P5`) and ASCII (`P2`). `levels` is `maxval + 1`; 16-bit
//!   samples are big-endian as the format requires.
//! - PNG, 8- or 16-bit greyscale, via the `image` crate. `levels` is 256 or 65 536.
//! - A raw n-D voxel format: a small text header (`.ndh`) next to a flat
//!   little-endian data file with axis 0 fastest.
//!
//! ```text
//! ndraw 1
//! dims 3 3 3
//! levels 4
//! data volume.raw
//! ```
//!
//! Voxels are one byte when `levels <= 256` and two bytes otherwise. The
//! `data` path is resolved relative to the header's directory.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::ndgrid::NdImage;

/// Image file kinds recognised by [`read_image`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Pgm,
    Png,
    NdRaw,
}

impl ImageFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "pgm" => Some(Self::Pgm),
            "png" => Some(Self::Png),
            "ndh" => Some(Self::NdRaw),
            _ => None,
        }
    }
}

/// Reads any supported image, dispatching on the file extension.
pub fn read_image(path: &Path) -> Result<NdImage> {
    match ImageFormat::from_path(path) {
        Some(ImageFormat::Pgm) => read_pgm(path),
        Some(ImageFormat::Png) => read_png(path),
        Some(ImageFormat::NdRaw) => read_ndraw(path),
        None => Err(Error::format(path, "unrecognised image extension (expected .pgm, .png or .ndh)")),
    }
}

pub fn read_pgm(path: &Path) -> Result<NdImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&bytes).map_err(|m| Error::format(path, m))
}

/// Parses PGM header tokens, skipping whitespace and `#` comments.
struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn token(&mut self) -> std::result::Result<&str, String> {
        loop {
            match self.bytes.get(self.pos) {
                Some(b'#') => {
                    while self.bytes.get(self.pos).is_some_and(|&b| b != b'\n') {
                        self.pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(_) => break,
                None => return Err("unexpected end of header".into()),
            }
        }
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(|b| !b.is_ascii_whitespace()) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).map_err(|_| "non-ASCII header".into())
    }

    fn number(&mut self, what: &str) -> std::result::Result<usize, String> {
        let t = self.token()?;
        t.parse().map_err(|_| format!("bad {what} `{t}`"))
    }
}

fn parse_pgm(bytes: &[u8]) -> std::result::Result<NdImage, String> {
    let mut h = Header { bytes, pos: 0 };
    let magic = h.token()?.to_string();
    if magic != "P5" && magic != "P2" {
        return Err(format!("not a greyscale PGM (magic `{magic}`)"));
    }
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if !(1..=65535).contains(&maxval) {
        return Err(format!("maxval {maxval} outside 1..=65535"));
    }
    let len = width
        .checked_mul(height)
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("bad extents {width}x{height}"))?;
    let data: Vec<u32> = if magic == "P2" {
        (0..len)
            .map(|_| h.number("sample").map(|v| v as u32))
            .collect::<std::result::Result<_, _>>()?
    } else {
        // Exactly one whitespace byte separates maxval from the raster.
        let raster = bytes.get(h.pos + 1..).unwrap_or_default();
        let wide = maxval > 255;
        let need = if wide { 2 * len } else { len };
        if raster.len() < need {
            return Err(format!("raster has {} bytes, expected {need}", raster.len()));
        }
        if wide {
            raster[..need]
                .chunks_exact(2)
                .map(|c| u32::from(u16::from_be_bytes([c[0], c[1]])))
                .collect()
        } else {
            raster[..need].iter().map(|&b| u32::from(b)).collect()
        }
    };
    if let Some(v) = data.iter().find(|&&v| v as usize > maxval) {
        return Err(format!("sample {v} exceeds maxval {maxval}"));
    }
    NdImage::new(vec![width, height], maxval as u32 + 1, data).map_err(|e| e.to_string())
}

/// Writes a 2-D image as binary PGM with `maxval = levels - 1`.
pub fn write_pgm(path: &Path, image: &NdImage) -> Result<()> {
    fs::write(path, encode_pgm(image)?).map_err(|e| Error::io(path, e))
}

pub fn encode_pgm(image: &NdImage) -> Result<Vec<u8>> {
    if image.ndim() != 2 {
        return Err(Error::Shape(format!(
            "PGM holds 2-D images, this one has {} axes",
            image.ndim()
        )));
    }
    // PGM needs maxval >= 1.
    let maxval = (image.levels() - 1).max(1);
    if maxval > 65535 {
        return Err(Error::Domain("PGM supports at most 65536 grey levels".into()));
    }
    let mut out = format!("P5\n{} {}\n{}\n", image.dims()[0], image.dims()[1], maxval).into_bytes();
    if maxval > 255 {
        image.data().iter().for_each(|v| out.extend_from_slice(&v.to_be_bytes()));
    } else {
        out.extend(image.data().iter().map(|&v| v as u8));
    }
    Ok(out)
}

pub fn read_png(path: &Path) -> Result<NdImage> {
    let decoded = image::open(path).map_err(|e| Error::format(path, e.to_string()))?;
    use image::DynamicImage::*;
    let (w, h, levels, data): (u32, u32, u32, Vec<u32>) = match decoded {
        ImageLuma8(img) => (img.width(), img.height(), 256, img.into_raw().into_iter().map(u32::from).collect()),
        ImageLuma16(img) => (img.width(), img.height(), 65536, img.into_raw().into_iter().map(u32::from).collect()),
        other => {
            return Err(Error::format(
                path,
                format!("expected a greyscale PNG, found {:?}", other.color()),
            ))
        }
    };
    NdImage::new(vec![w as usize, h as usize], levels, data)
}

/// Parsed `.ndh` header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NdRawHeader {
    pub dims: Vec<usize>,
    pub levels: u32,
    pub data: PathBuf,
}

impl NdRawHeader {
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        match lines.next() {
            Some("ndraw 1") => {}
            other => return Err(format!("expected `ndraw 1`, found {other:?}")),
        }
        let (mut dims, mut levels, mut data) = (None, None, None);
        for line in lines {
            let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let rest = rest.trim();
            match key {
                "dims" => {
                    dims = Some(
                        rest.split_whitespace()
                            .map(|t| t.parse::<usize>().map_err(|_| format!("bad extent `{t}`")))
                            .collect::<std::result::Result<Vec<_>, _>>()?,
                    )
                }
                "levels" => levels = Some(rest.parse::<u32>().map_err(|_| format!("bad levels `{rest}`"))?),
                "data" => data = Some(PathBuf::from(rest)),
                other => return Err(format!("unknown header key `{other}`")),
            }
        }
        Ok(Self {
            dims: dims.ok_or("missing `dims`")?,
            levels: levels.ok_or("missing `levels`")?,
            data: data.ok_or("missing `data`")?,
        })
    }

    pub fn render(&self) -> String {
        let dims: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        format!(
            "ndraw 1\ndims {}\nlevels {}\ndata {}\n",
            dims.join(" "),
            self.levels,
            self.data.display()
        )
    }
}

fn voxel_width(levels: u32) -> usize {
    if levels <= 256 {
        1
    } else {
        2
    }
}

pub fn read_ndraw(header_path: &Path) -> Result<NdImage> {
    let text = fs::read_to_string(header_path).map_err(|e| Error::io(header_path, e))?;
    let header = NdRawHeader::parse(&text).map_err(|m| Error::format(header_path, m))?;
    let data_path = header_path
        .parent()
        .unwrap_or(Path::new("."))
        .join(&header.data);
    let bytes = fs::read(&data_path).map_err(|e| Error::io(&data_path, e))?;
    let len: usize = header.dims.iter().product();
    let width = voxel_width(header.levels);
    if bytes.len() != len * width {
        return Err(Error::format(
            &data_path,
            format!("expected {} bytes for dims {:?}, found {}", len * width, header.dims, bytes.len()),
        ));
    }
    let data = if width == 1 {
        bytes.iter().map(|&b| u32::from(b)).collect()
    } else {
        bytes
            .chunks_exact(2)
            .map(|c| u32::from(u16::from_le_bytes([c[0], c[1]])))
            .collect()
    };
    NdImage::new(header.dims, header.levels, data).map_err(|e| Error::format(header_path, e.to_string()))
}

/// Writes `<stem>.ndh` and its data file `<stem>.raw` side by side.
pub fn write_ndraw(header_path: &Path, image: &NdImage) -> Result<()> {
    let data_name = header_path.with_extension("raw");
    let file_name = data_name
        .file_name()
        .ok_or_else(|| Error::format(header_path, "header path has no file name"))?;
    let header = NdRawHeader {
        dims: image.dims().to_vec(),
        levels: image.levels(),
        data: PathBuf::from(file_name),
    };
    let bytes: Vec<u8> = if voxel_width(image.levels()) == 1 {
        image.data().iter().map(|&v| v as u8).collect()
    } else {
        image.data().iter().flat_map(|v| v.to_le_bytes()).collect()
    };
    fs::write(&data_name, bytes).map_err(|e| Error::io(&data_name, e))?;
    fs::write(header_path, header.render()).map_err(|e| Error::io(header_path, e))
}

/// Writes an image in the format implied by the extension (`.pgm` or `.ndh`).
pub fn write_image(path: &Path, image: &NdImage) -> Result<()> {
    match ImageFormat::from_path(path) {
        Some(ImageFormat::Pgm) => write_pgm(path, image),
        Some(ImageFormat::NdRaw) => write_ndraw(path, image),
        _ => Err(Error::format(path, "can only write .pgm or .ndh images")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_pgm_with_comments() {
        let img = parse_pgm(b"P2\n# comment\n3 2\n# another\n7\n0 1 2\n3 4 7\n").unwrap();
        assert_eq!(img.dims(), &[3, 2]);
        assert_eq!(img.levels(), 8);
        assert_eq!(img.get(&[2, 1]).unwrap(), Some(7));
    }

    #[test]
    fn binary_pgm_round_trip() {
        let img = NdImage::from_rows(&[vec![0, 1, 200], vec![255, 3, 4]], 256).unwrap();
        assert_eq!(parse_pgm(&encode_pgm(&img).unwrap()).unwrap(), img);
        let wide = NdImage::from_rows(&[vec![0, 1000], vec![4095, 3]], 4096).unwrap();
        assert_eq!(parse_pgm(&encode_pgm(&wide).unwrap()).unwrap(), wide);
    }

    #[test]
    fn pgm_rejects_bad_input() {
        assert!(parse_pgm(b"P6\n1 1\n255\n\0\0\0").is_err());
        assert!(parse_pgm(b"P5\n2 2\n255\n\0").is_err());
        assert!(parse_pgm(b"P2\n2 1\n3\n0 9\n").is_err());
        assert!(parse_pgm(b"").is_err());
        let three_d = NdImage::filled(vec![2, 2, 2], 2, 0).unwrap();
        assert!(encode_pgm(&three_d).is_err());
    }

    #[test]
    fn ndraw_header_parsing() {
        let h = NdRawHeader::parse("ndraw 1\n# c\ndims 3 3 3\nlevels 4\ndata v.raw\n").unwrap();
        assert_eq!(h.dims, vec![3, 3, 3]);
        assert_eq!(h.levels, 4);
        assert_eq!(NdRawHeader::parse(&h.render()).unwrap(), h);
        assert!(NdRawHeader::parse("dims 3\n").is_err());
        assert!(NdRawHeader::parse("ndraw 1\ndims 3\nlevels 4\n").is_err());
    }
}
