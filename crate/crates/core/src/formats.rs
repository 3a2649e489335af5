//! On-disk formats: PFM depth maps with a JSON intrinsics sidecar, binary
//! PPM images, and JSON helpers.

use std::path::Path;

use serde::{de::DeserializeOwned, Serialize};

use crate::geometry::{CameraIntrinsics, DepthMap};
use crate::{Error, Result};

/// Writes a single-channel little-endian PFM (scale `-1.0`). Rows are stored
/// bottom to top as the format requires; `data` is row-major top to bottom.
pub fn encode_pfm(width: usize, height: usize, data: &[f32]) -> Vec<u8> {
    assert_eq!(data.len(), width * height);
    let mut out = format!("Pf\n{width} {height}\n-1.0\n").into_bytes();
    out.reserve(data.len() * 4);
    for row in data.chunks(width).rev() {
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Decodes a single-channel PFM into row-major (top to bottom) values.
pub fn decode_pfm(bytes: &[u8]) -> std::result::Result<(usize, usize, Vec<f32>), String> {
    let mut pos = 0;
    let mut token = || -> std::result::Result<String, String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated header".into());
        }
        let tok = String::from_utf8_lossy(&bytes[start..pos]).into_owned();
        Ok(tok)
    };
    let magic = token()?;
    if magic != "Pf" {
        return Err(format!("expected single-channel `Pf`, found `{magic}`"));
    }
    let width: usize = token()?.parse().map_err(|e| format!("width: {e}"))?;
    let height: usize = token()?.parse().map_err(|e| format!("height: {e}"))?;
    let scale: f32 = token()?.parse().map_err(|e| format!("scale: {e}"))?;
    // exactly one whitespace byte separates the header from the raster
    let data_start = pos + 1;
    let expected = width * height * 4;
    let raster = bytes
        .get(data_start..)
        .filter(|r| r.len() == expected)
        .ok_or_else(|| format!("expected {expected} raster bytes"))?;
    let little = scale < 0.0;
    let mut rows: Vec<Vec<f32>> = raster
        .chunks_exact(width * 4)
        .map(|row| {
            row.chunks_exact(4)
                .map(|b| {
                    let b = [b[0], b[1], b[2], b[3]];
                    if little {
                        f32::from_le_bytes(b)
                    } else {
                        f32::from_be_bytes(b)
                    }
                })
                .collect()
        })
        .collect();
    rows.reverse();
    Ok((width, height, rows.concat()))
}

/// Saves a depth map as PFM plus an intrinsics sidecar. Values are written
/// in single precision.
pub fn save_depth(depth: &DepthMap, pfm_path: &Path, intrinsics_path: &Path) -> Result<()> {
    let data: Vec<f32> = depth.values.iter().map(|&v| v as f32).collect();
    std::fs::write(pfm_path, encode_pfm(depth.width, depth.height, &data))
        .map_err(|e| Error::io(pfm_path, e))?;
    write_json(intrinsics_path, &depth.intrinsics)
}

pub fn load_depth(pfm_path: &Path, intrinsics_path: &Path) -> Result<DepthMap> {
    let intrinsics: CameraIntrinsics = read_json(intrinsics_path)?;
    let bytes = std::fs::read(pfm_path).map_err(|e| Error::io(pfm_path, e))?;
    let (width, height, data) = decode_pfm(&bytes).map_err(|r| Error::format(pfm_path, r))?;
    if (width, height) != (intrinsics.width, intrinsics.height) {
        return Err(Error::format(
            pfm_path,
            format!(
                "{width}x{height} raster does not match {}x{} intrinsics",
                intrinsics.width, intrinsics.height
            ),
        ));
    }
    DepthMap::new(data.into_iter().map(f64::from).collect(), intrinsics)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

/// 8-bit RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, fill: [u8; 3]) -> Self {
        Self {
            width,
            height,
            pixels: vec![fill; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn put(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        self.pixels[y * self.width + x] = rgb;
    }

    /// Binary P6 encoding.
    pub fn encode_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.pixels.iter().flatten());
        out
    }

    pub fn decode_ppm(bytes: &[u8]) -> std::result::Result<Self, String> {
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if bytes.get(pos) == Some(&b'#') {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err("truncated header".into());
            }
            fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        if fields[0] != "P6" || fields[3] != "255" {
            return Err(format!("unsupported PPM header {fields:?}"));
        }
        let width: usize = fields[1].parse().map_err(|e| format!("width: {e}"))?;
        let height: usize = fields[2].parse().map_err(|e| format!("height: {e}"))?;
        let raster = &bytes[pos + 1..];
        if raster.len() != width * height * 3 {
            return Err(format!("expected {} raster bytes", width * height * 3));
        }
        Ok(Self {
            width,
            height,
            pixels: raster.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
        })
    }

    pub fn save_ppm(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode_ppm()).map_err(|e| Error::io(path, e))
    }

    pub fn load_ppm(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode_ppm(&bytes).map_err(|r| Error::format(path, r))
    }

    #[cfg(feature = "png")]
    pub fn save_png(&self, path: &Path) -> Result<()> {
        let raw: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        image::RgbImage::from_raw(self.width as u32, self.height as u32, raw)
            .expect("raster size matches")
            .save(path)
            .map_err(|e| Error::format(path, e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pfm_header_and_row_order() {
        let bytes = encode_pfm(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let header = b"Pf\n2 2\n-1.0\n";
        assert_eq!(&bytes[..header.len()], header);
        // bottom row first
        assert_eq!(&bytes[header.len()..header.len() + 4], &3.0f32.to_le_bytes());
        assert_eq!(bytes.len(), header.len() + 16);
    }

    #[test]
    fn pfm_rejects_color_and_truncation() {
        assert!(decode_pfm(b"PF\n1 1\n-1.0\n\0\0\0\0\0\0\0\0\0\0\0\0").is_err());
        assert!(decode_pfm(b"Pf\n2 2\n-1.0\n\0\0").is_err());
    }

    #[test]
    fn pfm_big_endian_scale() {
        let mut bytes = b"Pf\n1 1\n1.0\n".to_vec();
        bytes.extend_from_slice(&2.5f32.to_be_bytes());
        assert_eq!(decode_pfm(&bytes).unwrap(), (1, 1, vec![2.5]));
    }

    proptest! {
        #[test]
        fn pfm_round_trip_is_bit_exact(
            w in 1usize..6, h in 1usize..6, seed in proptest::collection::vec(any::<f32>(), 36)
        ) {
            let data: Vec<f32> = seed.into_iter().take(w * h).collect();
            prop_assume!(data.len() == w * h);
            let (w2, h2, back) = decode_pfm(&encode_pfm(w, h, &data)).unwrap();
            prop_assert_eq!((w2, h2), (w, h));
            let a: Vec<u32> = data.iter().map(|v| v.to_bits()).collect();
            let b: Vec<u32> = back.iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn ppm_round_trip(w in 1usize..5, h in 1usize..5, fill in any::<[u8; 3]>()) {
            let mut img = RgbImage::new(w, h, fill);
            img.put(w - 1, h - 1, [1, 2, 3]);
            prop_assert_eq!(RgbImage::decode_ppm(&img.encode_ppm()).unwrap(), img);
        }
    }

    #[test]
    fn depth_save_load_is_exact_after_quantization() {
        let intr = CameraIntrinsics::from_fov(5, 4, 70.0).unwrap();
        let mut depth =
            DepthMap::new((0..20).map(|i| 0.5 + i as f64 * 0.137).collect(), intr).unwrap();
        depth.quantize_f32();
        let dir = tempfile::tempdir().unwrap();
        let (p, j) = (dir.path().join("d.pfm"), dir.path().join("d.json"));
        save_depth(&depth, &p, &j).unwrap();
        assert_eq!(load_depth(&p, &j).unwrap(), depth);
    }
}
