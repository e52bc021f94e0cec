//! Minimal NIfTI-1 reader and writer.
//!
//! Reads single-file volumes (.nii, .nii.gz) in either byte order: dims from
//! the header, spacing from pixdim, the affine from the sform with qform as
//! fallback (and plain pixdim scaling when neither is set). Only 3-D volumes
//! pass. Masks are written as unsigned 8-bit 0/1 volumes carrying the source
//! affine in the sform.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;

use crate::affine::Affine4;
use crate::error::{Error, Result};
use crate::grid::{BinaryMask, GridGeometry, Volume3D};
use crate::io::{atomic_write, read_bytes};

const HEADER_LEN: usize = 348;
const MAGIC_OFFSET: u64 = 344;
const DIM_OFFSET: u64 = 40;
const DATATYPE_OFFSET: u64 = 70;
const PIXDIM_OFFSET: u64 = 76;

const DT_UINT8: i16 = 2;
const DT_INT16: i16 = 4;
const DT_INT32: i16 = 8;
const DT_FLOAT32: i16 = 16;
const DT_FLOAT64: i16 = 64;
const DT_INT8: i16 = 256;
const DT_UINT16: i16 = 512;

#[derive(Clone, Copy, PartialEq)]
enum Endian {
    Little,
    Big,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    endian: Endian,
}

impl<'a> Cursor<'a> {
    fn i16_at(&self, off: usize) -> i16 {
        let raw = [self.bytes[off], self.bytes[off + 1]];
        match self.endian {
            Endian::Little => i16::from_le_bytes(raw),
            Endian::Big => i16::from_be_bytes(raw),
        }
    }

    fn f32_at(&self, off: usize) -> f32 {
        let raw: [u8; 4] = self.bytes[off..off + 4].try_into().unwrap();
        match self.endian {
            Endian::Little => f32::from_le_bytes(raw),
            Endian::Big => f32::from_be_bytes(raw),
        }
    }
}

fn is_gzip(bytes: &[u8]) -> bool {
    bytes.len() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b
}

/// Reads a 3-D scalar volume from a NIfTI-1 file.
pub fn read_volume(path: &Path) -> Result<Volume3D> {
    let raw = read_bytes(path)?;
    let bytes = if is_gzip(&raw) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::parse(path, format!("gzip stream: {e}")))?;
        out
    } else {
        raw
    };

    if bytes.len() < HEADER_LEN {
        return Err(Error::parse_at(
            path,
            0,
            format!("file is {} bytes, shorter than a NIfTI-1 header", bytes.len()),
        ));
    }

    // byte order is detected from sizeof_hdr
    let sizeof_le = i32::from_le_bytes(bytes[0..4].try_into().unwrap());
    let sizeof_be = i32::from_be_bytes(bytes[0..4].try_into().unwrap());
    let endian = if sizeof_le == HEADER_LEN as i32 {
        Endian::Little
    } else if sizeof_be == HEADER_LEN as i32 {
        Endian::Big
    } else {
        return Err(Error::parse_at(
            path,
            0,
            format!("sizeof_hdr is {sizeof_le}, expected 348"),
        ));
    };
    let cur = Cursor {
        bytes: &bytes,
        endian,
    };

    let magic = &bytes[MAGIC_OFFSET as usize..MAGIC_OFFSET as usize + 4];
    if magic != b"n+1\0" {
        let msg = if magic == b"ni1\0" {
            "detached header/image pairs (ni1) are not supported".to_string()
        } else {
            format!("bad magic {:?}, expected \"n+1\\0\"", magic)
        };
        return Err(Error::parse_at(path, MAGIC_OFFSET, msg));
    }

    let ndim = cur.i16_at(DIM_OFFSET as usize);
    if ndim != 3 {
        return Err(Error::parse_at(
            path,
            DIM_OFFSET,
            format!("expected a 3-dimensional volume, dim[0] = {ndim}"),
        ));
    }
    let mut dims = [0usize; 3];
    for (a, d) in dims.iter_mut().enumerate() {
        let v = cur.i16_at(DIM_OFFSET as usize + 2 * (a + 1));
        if v < 1 {
            return Err(Error::parse_at(
                path,
                DIM_OFFSET + 2 * (a as u64 + 1),
                format!("dim[{}] = {v} must be >= 1", a + 1),
            ));
        }
        *d = v as usize;
    }

    let datatype = cur.i16_at(DATATYPE_OFFSET as usize);
    let bitpix = cur.i16_at(DATATYPE_OFFSET as usize + 2);

    let mut spacing = [0f64; 3];
    for (a, s) in spacing.iter_mut().enumerate() {
        let v = cur.f32_at(PIXDIM_OFFSET as usize + 4 * (a + 1)) as f64;
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::parse_at(
                path,
                PIXDIM_OFFSET + 4 * (a as u64 + 1),
                format!("pixdim[{}] = {v} must be positive", a + 1),
            ));
        }
        *s = v;
    }

    let vox_offset = cur.f32_at(108) as i64;
    if vox_offset < HEADER_LEN as i64 {
        return Err(Error::parse_at(
            path,
            108,
            format!("vox_offset {vox_offset} points inside the header"),
        ));
    }
    let scl_slope = cur.f32_at(112) as f64;
    let scl_inter = cur.f32_at(116) as f64;

    let affine = read_affine_from_header(&cur, spacing);
    let geometry = GridGeometry::new(dims, spacing, affine)
        .map_err(|e| Error::parse(path, e.to_string()))?;

    let n = geometry.voxel_count();
    let elem = match datatype {
        DT_UINT8 | DT_INT8 => 1,
        DT_INT16 | DT_UINT16 => 2,
        DT_INT32 | DT_FLOAT32 => 4,
        DT_FLOAT64 => 8,
        other => {
            return Err(Error::parse_at(
                path,
                DATATYPE_OFFSET,
                format!("unsupported datatype code {other} (bitpix {bitpix})"),
            ))
        }
    };
    let start = vox_offset as usize;
    let need = n * elem;
    if bytes.len() < start + need {
        return Err(Error::parse_at(
            path,
            bytes.len() as u64,
            format!(
                "voxel data truncated: need {need} bytes at offset {start}, file has {}",
                bytes.len()
            ),
        ));
    }
    let payload = &bytes[start..start + need];

    let swap = endian == Endian::Big;
    let mut data = Vec::with_capacity(n);
    match datatype {
        DT_UINT8 => data.extend(payload.iter().map(|&b| b as f32)),
        DT_INT8 => data.extend(payload.iter().map(|&b| b as i8 as f32)),
        DT_INT16 => {
            for c in payload.chunks_exact(2) {
                let raw = [c[0], c[1]];
                let v = if swap {
                    i16::from_be_bytes(raw)
                } else {
                    i16::from_le_bytes(raw)
                };
                data.push(v as f32);
            }
        }
        DT_UINT16 => {
            for c in payload.chunks_exact(2) {
                let raw = [c[0], c[1]];
                let v = if swap {
                    u16::from_be_bytes(raw)
                } else {
                    u16::from_le_bytes(raw)
                };
                data.push(v as f32);
            }
        }
        DT_INT32 => {
            for c in payload.chunks_exact(4) {
                let raw: [u8; 4] = c.try_into().unwrap();
                let v = if swap {
                    i32::from_be_bytes(raw)
                } else {
                    i32::from_le_bytes(raw)
                };
                data.push(v as f32);
            }
        }
        DT_FLOAT32 => {
            for c in payload.chunks_exact(4) {
                let raw: [u8; 4] = c.try_into().unwrap();
                let v = if swap {
                    f32::from_be_bytes(raw)
                } else {
                    f32::from_le_bytes(raw)
                };
                data.push(v);
            }
        }
        DT_FLOAT64 => {
            for c in payload.chunks_exact(8) {
                let raw: [u8; 8] = c.try_into().unwrap();
                let v = if swap {
                    f64::from_be_bytes(raw)
                } else {
                    f64::from_le_bytes(raw)
                };
                data.push(v as f32);
            }
        }
        _ => unreachable!(),
    }

    // NIfTI scaling: slope 0 means "no scaling stored"
    if scl_slope != 0.0 && (scl_slope != 1.0 || scl_inter != 0.0) {
        for v in &mut data {
            *v = (*v as f64 * scl_slope + scl_inter) as f32;
        }
    }

    Volume3D::new(Arc::new(geometry), data).map_err(|e| Error::parse(path, e.to_string()))
}

/// Reads a volume and thresholds it into a mask (set iff value > 0.5).
pub fn read_mask(path: &Path) -> Result<BinaryMask> {
    Ok(read_volume(path)?.threshold_mask(0.5))
}

fn read_affine_from_header(cur: &Cursor<'_>, spacing: [f64; 3]) -> Affine4 {
    let sform_code = cur.i16_at(254);
    let qform_code = cur.i16_at(252);
    if sform_code > 0 {
        let mut m = [[0.0f64; 4]; 4];
        for (r, base) in [(0usize, 280usize), (1, 296), (2, 312)] {
            for (c, v) in m[r].iter_mut().enumerate() {
                *v = cur.f32_at(base + 4 * c) as f64;
            }
        }
        m[3] = [0.0, 0.0, 0.0, 1.0];
        if let Ok(a) = Affine4::new(m) {
            return a;
        }
        log::warn!("sform is singular; falling back to qform/pixdim");
    }
    if qform_code > 0 {
        let b = cur.f32_at(256) as f64;
        let c = cur.f32_at(260) as f64;
        let d = cur.f32_at(264) as f64;
        let a = (1.0 - (b * b + c * c + d * d)).max(0.0).sqrt();
        let qfac = {
            let v = cur.f32_at(76) as f64;
            if v < 0.0 {
                -1.0
            } else {
                1.0
            }
        };
        let r = [
            [
                a * a + b * b - c * c - d * d,
                2.0 * (b * c - a * d),
                2.0 * (b * d + a * c),
            ],
            [
                2.0 * (b * c + a * d),
                a * a + c * c - b * b - d * d,
                2.0 * (c * d - a * b),
            ],
            [
                2.0 * (b * d - a * c),
                2.0 * (c * d + a * b),
                a * a + d * d - b * b - c * c,
            ],
        ];
        let offset = [
            cur.f32_at(268) as f64,
            cur.f32_at(272) as f64,
            cur.f32_at(276) as f64,
        ];
        let mut m = [[0.0f64; 4]; 4];
        for row in 0..3 {
            m[row][0] = r[row][0] * spacing[0];
            m[row][1] = r[row][1] * spacing[1];
            m[row][2] = r[row][2] * spacing[2] * qfac;
            m[row][3] = offset[row];
        }
        m[3] = [0.0, 0.0, 0.0, 1.0];
        if let Ok(aff) = Affine4::new(m) {
            return aff;
        }
        log::warn!("qform is singular; falling back to pixdim scaling");
    }
    Affine4::scale_translation(spacing, [0.0; 3]).expect("positive spacing")
}

fn put_i16(buf: &mut [u8], off: usize, v: i16) {
    buf[off..off + 2].copy_from_slice(&v.to_le_bytes());
}

fn put_i32(buf: &mut [u8], off: usize, v: i32) {
    buf[off..off + 4].copy_from_slice(&v.to_le_bytes());
}

fn put_f32(buf: &mut [u8], off: usize, v: f32) {
    buf[off..off + 4].copy_from_slice(&v.to_le_bytes());
}

/// Writes a mask as an unsigned 8-bit 0/1 NIfTI-1 volume (gzipped when the
/// path ends in .gz), carrying the grid affine in the sform.
pub fn write_mask(path: &Path, mask: &BinaryMask) -> Result<()> {
    let g = mask.geometry();
    let dims = g.dims();
    let spacing = g.spacing_mm();
    let m = g.index_to_world().matrix();

    let mut header = vec![0u8; 352]; // header + 4-byte extension flag
    put_i32(&mut header, 0, HEADER_LEN as i32);
    put_i16(&mut header, 40, 3);
    put_i16(&mut header, 42, dims[0] as i16);
    put_i16(&mut header, 44, dims[1] as i16);
    put_i16(&mut header, 46, dims[2] as i16);
    for a in 4..8 {
        put_i16(&mut header, 40 + 2 * a, 1);
    }
    put_i16(&mut header, 70, DT_UINT8);
    put_i16(&mut header, 72, 8); // bitpix
    put_f32(&mut header, 76, 1.0); // qfac
    put_f32(&mut header, 80, spacing[0] as f32);
    put_f32(&mut header, 84, spacing[1] as f32);
    put_f32(&mut header, 88, spacing[2] as f32);
    put_f32(&mut header, 108, 352.0); // vox_offset
    put_f32(&mut header, 112, 1.0); // scl_slope
    put_f32(&mut header, 116, 0.0); // scl_inter
    header[123] = 2; // spatial units: millimeters
    let descrip = b"binary anatomic mask";
    header[148..148 + descrip.len()].copy_from_slice(descrip);
    put_i16(&mut header, 252, 0); // qform_code
    put_i16(&mut header, 254, 1); // sform_code: scanner anatomical
    for (r, base) in [(0usize, 280usize), (1, 296), (2, 312)] {
        for (c, v) in m[r].iter().enumerate() {
            put_f32(&mut header, base + 4 * c, *v as f32);
        }
    }
    header[344..348].copy_from_slice(b"n+1\0");

    let mut body = header;
    body.reserve(mask.occupancy().len());
    body.extend(mask.occupancy().iter().map(|&v| v as u8));

    let is_gz = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("gz"))
        .unwrap_or(false);
    if is_gz {
        let mut enc = GzEncoder::new(Vec::new(), flate2::Compression::fast());
        enc.write_all(&body).map_err(|e| Error::io(path, e))?;
        let compressed = enc.finish().map_err(|e| Error::io(path, e))?;
        atomic_write(path, &compressed)
    } else {
        atomic_write(path, &body)
    }
}
