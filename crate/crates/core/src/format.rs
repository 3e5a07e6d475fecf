//! RAS1: a minimal multi-band raster container.
//!
//! ```text
//! RAS1 <width> <height> <bands>\n
//! <wavelength or -> ... (one per band)\n
//! <bands x height x width little-endian f32, band-sequential, row-major>
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::{BandRaster, MultiBandImage};

const MAGIC: &str = "RAS1";

pub fn encode(image: &MultiBandImage) -> Vec<u8> {
    let mut header = format!(
        "{MAGIC} {} {} {}\n",
        image.width(),
        image.height(),
        image.band_count()
    );
    let wl: Vec<String> = image
        .wavelengths()
        .into_iter()
        .map(|w| w.map_or_else(|| "-".to_string(), |w| w.to_string()))
        .collect();
    header.push_str(&wl.join(" "));
    header.push('\n');

    let n = image.width() * image.height() * image.band_count();
    let mut out = Vec::with_capacity(header.len() + 4 * n);
    out.extend_from_slice(header.as_bytes());
    for band in image.bands() {
        for v in band.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn next_line<'a>(bytes: &'a [u8], pos: &mut usize, what: &str) -> Result<&'a str> {
    let rest = &bytes[*pos..];
    let end = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format(format!("missing {what} line")))?;
    *pos += end + 1;
    std::str::from_utf8(&rest[..end]).map_err(|_| Error::Format(format!("{what} line is not ASCII")))
}

pub fn decode(bytes: &[u8]) -> Result<MultiBandImage> {
    let mut pos = 0;
    let line = next_line(bytes, &mut pos, "header")?;
    let fields: Vec<&str> = line.split(' ').collect();
    if fields.len() != 4 || fields[0] != MAGIC {
        return Err(Error::Format(format!("bad header {line:?}")));
    }
    let mut dims = [0usize; 3];
    for (d, f) in dims.iter_mut().zip(&fields[1..]) {
        *d = f
            .parse()
            .map_err(|_| Error::Format(format!("bad dimension {f:?}")))?;
        if *d == 0 {
            return Err(Error::Format(format!("zero dimension in {line:?}")));
        }
    }
    let [width, height, bands] = dims;

    let line = next_line(bytes, &mut pos, "wavelength")?;
    let wavelengths = line
        .split(' ')
        .map(|tok| match tok {
            "-" => Ok(None),
            t => t
                .parse::<f64>()
                .ok()
                .filter(|w| w.is_finite() && *w > 0.0)
                .map(Some)
                .ok_or_else(|| Error::Format(format!("bad wavelength {t:?}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    if wavelengths.len() != bands {
        return Err(Error::Format(format!(
            "{} wavelengths for {bands} bands",
            wavelengths.len()
        )));
    }

    let plane = width
        .checked_mul(height)
        .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
    let expected = plane
        .checked_mul(bands)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
    let payload = &bytes[pos..];
    if payload.len() < expected {
        return Err(Error::Truncated {
            expected,
            actual: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(Error::Format(format!(
            "{} trailing bytes after payload",
            payload.len() - expected
        )));
    }

    let out = payload
        .chunks_exact(plane * 4)
        .zip(wavelengths)
        .map(|(chunk, wl)| {
            let data = chunk
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            BandRaster::new(width, height, wl, data)
        })
        .collect::<Result<Vec<_>>>()?;
    MultiBandImage::new(out)
}

pub fn read_raster(path: impl AsRef<Path>) -> Result<MultiBandImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

pub fn write_raster(image: &MultiBandImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(image)).map_err(|e| Error::io(path, e))
}
