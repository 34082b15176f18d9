//! NIfTI-1 single-file volumes (`.nii`, `.nii.gz`).
//!
//! NIfTI stores x fastest; volumes here are C-order with axis 0 = x, so voxel `(i, j, k)` is file
//! element `i + nx * (j + ny * k)`. Spacing comes from `pixdim[1..4]`. Orientation fields are
//! kept verbatim. Files are always written as little-endian float32 with identity scaling.

use std::fs::File;
use std::io::{BufReader, BufWriter, Cursor, Read, Write};
use std::path::Path;

use byteorder::{BigEndian, ByteOrder, LittleEndian, ReadBytesExt, WriteBytesExt};
use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use isosr_core::{Orientation, Volume};

use crate::error::{IoError, Result};

const HEADER_SIZE: usize = 348;
const VOX_OFFSET: usize = 352;
const MAGIC: &[u8; 4] = b"n+1\0";

const DT_UINT8: i16 = 2;
const DT_INT16: i16 = 4;
const DT_INT32: i16 = 8;
const DT_FLOAT32: i16 = 16;
const DT_FLOAT64: i16 = 64;
const DT_INT8: i16 = 256;
const DT_UINT16: i16 = 512;
const DT_UINT32: i16 = 768;

fn is_gzip(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("gz"))
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let file = File::open(path).map_err(|e| IoError::io(path, e))?;
    let mut bytes = Vec::new();
    let mut reader = BufReader::new(file);
    let res = if is_gzip(path) {
        GzDecoder::new(reader).read_to_end(&mut bytes)
    } else {
        reader.read_to_end(&mut bytes)
    };
    res.map_err(|e| IoError::io(path, e))?;
    Ok(bytes)
}

/// Parsed header fields the pipeline needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub datatype: i16,
    pub vox_offset: usize,
    pub scl_slope: f32,
    pub scl_inter: f32,
    pub orientation: Orientation,
}

fn parse_header<B: ByteOrder>(h: &[u8], path: &Path) -> Result<Header> {
    let i16_at = |o: usize| B::read_i16(&h[o..]);
    let f32_at = |o: usize| B::read_f32(&h[o..]);
    let mut dim = [0i16; 8];
    for (n, d) in dim.iter_mut().enumerate() {
        *d = i16_at(40 + 2 * n);
    }
    let rank = dim[0];
    if !(1..=7).contains(&rank) {
        return Err(IoError::format(path, format!("invalid dim[0] = {rank}")));
    }
    let rank = rank as usize;
    if rank < 3 || dim[4..=rank].iter().any(|&d| d != 1) {
        return Err(IoError::format(path, format!("expected rank-3 image data, header dims {:?}", &dim[..=rank])));
    }
    if dim[1..4].iter().any(|&d| d < 1) {
        return Err(IoError::format(path, format!("non-positive dimension in {:?}", &dim[1..4])));
    }
    let mut pixdim = [0f32; 8];
    for (n, p) in pixdim.iter_mut().enumerate() {
        *p = f32_at(76 + 4 * n);
    }
    let spacing = [pixdim[1] as f64, pixdim[2] as f64, pixdim[3] as f64];
    if spacing.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(IoError::format(path, format!("non-positive voxel spacing {spacing:?}")));
    }
    let vox_offset = f32_at(108);
    if !(vox_offset.is_finite() && vox_offset >= HEADER_SIZE as f32) {
        return Err(IoError::format(path, format!("invalid vox_offset {vox_offset}")));
    }
    let mut srow = [[0f32; 4]; 3];
    for (r, row) in srow.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = f32_at(280 + 16 * r + 4 * c);
        }
    }
    let orientation = Orientation {
        qform_code: i16_at(252),
        sform_code: i16_at(254),
        qfac: pixdim[0],
        quatern: [f32_at(256), f32_at(260), f32_at(264)],
        qoffset: [f32_at(268), f32_at(272), f32_at(276)],
        srow,
    };
    Ok(Header {
        dims: [dim[1] as usize, dim[2] as usize, dim[3] as usize],
        spacing,
        datatype: i16_at(70),
        vox_offset: vox_offset as usize,
        scl_slope: f32_at(112),
        scl_inter: f32_at(116),
        orientation,
    })
}

fn bytes_per_voxel(datatype: i16) -> Option<usize> {
    match datatype {
        DT_UINT8 | DT_INT8 => Some(1),
        DT_INT16 | DT_UINT16 => Some(2),
        DT_INT32 | DT_UINT32 | DT_FLOAT32 => Some(4),
        DT_FLOAT64 => Some(8),
        _ => None,
    }
}

fn decode_values<B: ByteOrder>(raw: &[u8], datatype: i16, n: usize) -> Vec<f64> {
    let mut c = Cursor::new(raw);
    let mut out = Vec::with_capacity(n);
    // reads cannot fail: the caller checked the buffer length
    for _ in 0..n {
        let v = match datatype {
            DT_UINT8 => c.read_u8().unwrap() as f64,
            DT_INT8 => c.read_i8().unwrap() as f64,
            DT_INT16 => c.read_i16::<B>().unwrap() as f64,
            DT_UINT16 => c.read_u16::<B>().unwrap() as f64,
            DT_INT32 => c.read_i32::<B>().unwrap() as f64,
            DT_UINT32 => c.read_u32::<B>().unwrap() as f64,
            DT_FLOAT32 => c.read_f32::<B>().unwrap() as f64,
            _ => c.read_f64::<B>().unwrap(),
        };
        out.push(v);
    }
    out
}

/// Read a NIfTI-1 volume. `scl_slope`/`scl_inter` are applied when the slope is set; no other
/// intensity change happens.
pub fn read_nifti(path: &Path) -> Result<Volume> {
    let bytes = read_all(path)?;
    if bytes.len() < HEADER_SIZE {
        return Err(IoError::format(path, "file shorter than a NIfTI-1 header"));
    }
    let (header, little) = if LittleEndian::read_i32(&bytes) == HEADER_SIZE as i32 {
        (parse_header::<LittleEndian>(&bytes, path)?, true)
    } else if BigEndian::read_i32(&bytes) == HEADER_SIZE as i32 {
        (parse_header::<BigEndian>(&bytes, path)?, false)
    } else {
        return Err(IoError::format(path, "not a NIfTI-1 file (sizeof_hdr != 348)"));
    };
    if &bytes[344..348] != MAGIC {
        return Err(IoError::format(path, "not a single-file NIfTI-1 image (magic is not \"n+1\")"));
    }
    let bpv = bytes_per_voxel(header.datatype)
        .ok_or_else(|| IoError::format(path, format!("unsupported datatype {}", header.datatype)))?;
    let [nx, ny, nz] = header.dims;
    let n = nx * ny * nz;
    let end = header.vox_offset + n * bpv;
    if bytes.len() < end {
        return Err(IoError::format(path, format!("truncated image data: need {end} bytes, have {}", bytes.len())));
    }
    let raw = &bytes[header.vox_offset..end];
    let values = if little {
        decode_values::<LittleEndian>(raw, header.datatype, n)
    } else {
        decode_values::<BigEndian>(raw, header.datatype, n)
    };
    let (slope, inter) = (header.scl_slope as f64, header.scl_inter as f64);
    let scaled = slope != 0.0 && slope.is_finite() && (slope != 1.0 || inter != 0.0);
    let mut data = vec![0f32; n];
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let v = values[i + nx * (j + ny * k)];
                data[(i * ny + j) * nz + k] = if scaled { (v * slope + inter) as f32 } else { v as f32 };
            }
        }
    }
    Ok(Volume::new(header.dims, data, header.spacing)?.with_orientation(Some(header.orientation)))
}

fn header_bytes(volume: &Volume) -> Result<Vec<u8>> {
    let dims = volume.dims();
    if dims.iter().any(|&d| d > i16::MAX as usize) {
        return Err(isosr_core::Error::Shape(format!("dims {dims:?} exceed the NIfTI-1 limit of {}", i16::MAX)).into());
    }
    let o = volume.orientation().unwrap_or(Orientation { qfac: 1.0, ..Orientation::default() });
    let mut h = Vec::with_capacity(VOX_OFFSET);
    let w = &mut h;
    let le = |w: &mut Vec<u8>, v: f32| w.write_f32::<LittleEndian>(v).unwrap();
    w.write_i32::<LittleEndian>(HEADER_SIZE as i32).unwrap();
    w.extend_from_slice(&[0u8; 10 + 18]);
    w.write_i32::<LittleEndian>(0).unwrap(); // extents
    w.write_i16::<LittleEndian>(0).unwrap(); // session_error
    w.extend_from_slice(&[b'r', 0]); // regular, dim_info
    for d in [3, dims[0], dims[1], dims[2], 1, 1, 1, 1] {
        w.write_i16::<LittleEndian>(d as i16).unwrap();
    }
    for _ in 0..3 {
        le(w, 0.0); // intent parameters
    }
    w.write_i16::<LittleEndian>(0).unwrap(); // intent_code
    w.write_i16::<LittleEndian>(DT_FLOAT32).unwrap();
    w.write_i16::<LittleEndian>(32).unwrap(); // bitpix
    w.write_i16::<LittleEndian>(0).unwrap(); // slice_start
    let qfac = if o.qfac == 0.0 { 1.0 } else { o.qfac };
    let s = volume.spacing();
    for p in [qfac, s[0] as f32, s[1] as f32, s[2] as f32, 1.0, 1.0, 1.0, 1.0] {
        le(w, p);
    }
    le(w, VOX_OFFSET as f32);
    le(w, 1.0); // scl_slope
    le(w, 0.0); // scl_inter
    w.write_i16::<LittleEndian>(0).unwrap(); // slice_end
    w.push(0); // slice_code
    w.push(2); // xyzt_units: mm
    for _ in 0..4 {
        le(w, 0.0); // cal_max, cal_min, slice_duration, toffset
    }
    w.write_i32::<LittleEndian>(0).unwrap(); // glmax
    w.write_i32::<LittleEndian>(0).unwrap(); // glmin
    let mut descrip = [0u8; 80];
    descrip[..5].copy_from_slice(b"isosr");
    w.extend_from_slice(&descrip);
    w.extend_from_slice(&[0u8; 24]); // aux_file
    w.write_i16::<LittleEndian>(o.qform_code).unwrap();
    w.write_i16::<LittleEndian>(o.sform_code).unwrap();
    for v in o.quatern.iter().chain(&o.qoffset) {
        le(w, *v);
    }
    for row in &o.srow {
        for v in row {
            le(w, *v);
        }
    }
    w.extend_from_slice(&[0u8; 16]); // intent_name
    w.extend_from_slice(MAGIC);
    w.extend_from_slice(&[0u8; 4]); // no extensions
    debug_assert_eq!(h.len(), VOX_OFFSET);
    Ok(h)
}

/// Write `volume` as float32 NIfTI-1; gzip-compressed when the path ends in `.gz`.
pub fn write_nifti(volume: &Volume, path: &Path) -> Result<()> {
    let mut bytes = header_bytes(volume)?;
    let [nx, ny, nz] = volume.dims();
    bytes.reserve(volume.len() * 4);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                bytes.write_f32::<LittleEndian>(volume.get(i, j, k)).unwrap();
            }
        }
    }
    let file = File::create(path).map_err(|e| IoError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let res = if is_gzip(path) {
        let mut gz = GzEncoder::new(out, Compression::default());
        gz.write_all(&bytes).and_then(|_| gz.finish()).and_then(|mut w| w.flush())
    } else {
        out.write_all(&bytes).and_then(|_| out.flush())
    };
    res.map_err(|e| IoError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(dims: [usize; 3], spacing: [f64; 3]) -> Volume {
        Volume::from_fn(dims, spacing, |i, j, k| (i * 100 + j * 10 + k) as f32).unwrap()
    }

    #[test]
    fn header_layout() {
        let v = ramp([2, 3, 4], [0.7, 0.7, 2.1]);
        let h = header_bytes(&v).unwrap();
        assert_eq!(h.len(), 352);
        assert_eq!(LittleEndian::read_i16(&h[40..]), 3);
        assert_eq!(LittleEndian::read_i16(&h[42..]), 2);
        assert_eq!(LittleEndian::read_i16(&h[70..]), DT_FLOAT32);
        assert_eq!(LittleEndian::read_f32(&h[88..]), 2.1f32);
        assert_eq!(LittleEndian::read_f32(&h[108..]), 352.0);
        assert_eq!(&h[344..348], MAGIC);
    }

    #[test]
    fn x_is_fastest_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.nii");
        let v = ramp([2, 3, 4], [1.0; 3]);
        write_nifti(&v, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let first: Vec<f32> = (0..3).map(|n| LittleEndian::read_f32(&bytes[352 + 4 * n..])).collect();
        // (0,0,0), (1,0,0), (0,1,0)
        assert_eq!(first, vec![0.0, 100.0, 10.0]);
    }

    #[test]
    fn integer_data_with_scaling() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.nii");
        let v = ramp([2, 2, 2], [1.0, 2.0, 3.0]);
        let mut bytes = header_bytes(&v).unwrap();
        LittleEndian::write_i16(&mut bytes[70..], DT_INT16);
        LittleEndian::write_i16(&mut bytes[72..], 16);
        LittleEndian::write_f32(&mut bytes[112..], 0.5);
        LittleEndian::write_f32(&mut bytes[116..], 10.0);
        for n in 0..8i16 {
            bytes.write_i16::<LittleEndian>(n * 2).unwrap();
        }
        std::fs::write(&path, &bytes).unwrap();
        let back = read_nifti(&path).unwrap();
        // file element 1 is (1, 0, 0): 2 * 0.5 + 10
        assert_eq!(back.get(1, 0, 0), 11.0);
        assert_eq!(back.get(0, 0, 1), 8.0 * 0.5 + 10.0);
        assert_eq!(back.spacing(), [1.0, 2.0, 3.0]);
    }

    #[test]
    fn big_endian_files_are_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("be.nii");
        let v = ramp([2, 1, 1], [1.5, 1.0, 1.0]);
        let le = header_bytes(&v).unwrap();
        let mut be = le.clone();
        // swap every numeric field this reader touches
        BigEndian::write_i32(&mut be[0..], 348);
        for n in 0..8 {
            BigEndian::write_i16(&mut be[40 + 2 * n..], LittleEndian::read_i16(&le[40 + 2 * n..]));
            BigEndian::write_f32(&mut be[76 + 4 * n..], LittleEndian::read_f32(&le[76 + 4 * n..]));
        }
        for o in [70, 72, 252, 254] {
            BigEndian::write_i16(&mut be[o..], LittleEndian::read_i16(&le[o..]));
        }
        for o in (108..120).step_by(4).chain((256..328).step_by(4)) {
            BigEndian::write_f32(&mut be[o..], LittleEndian::read_f32(&le[o..]));
        }
        be.write_f32::<BigEndian>(3.0).unwrap();
        be.write_f32::<BigEndian>(-1.0).unwrap();
        std::fs::write(&path, &be).unwrap();
        let back = read_nifti(&path).unwrap();
        assert_eq!(back.data(), &[3.0, -1.0]);
        assert_eq!(back.spacing()[0], 1.5);
    }

    #[test]
    fn rejects_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        let v = ramp([2, 2, 2], [1.0; 3]);
        let good = header_bytes(&v).unwrap();

        let mut rank4 = good.clone();
        LittleEndian::write_i16(&mut rank4[40..], 4);
        LittleEndian::write_i16(&mut rank4[48..], 3);
        let mut zero_spacing = good.clone();
        LittleEndian::write_f32(&mut zero_spacing[84..], 0.0);
        let mut rank2 = good.clone();
        LittleEndian::write_i16(&mut rank2[40..], 2);
        for (name, bytes) in [("r4", rank4), ("sp", zero_spacing), ("r2", rank2), ("short", good[..100].to_vec())] {
            let p = dir.path().join(format!("{name}.nii"));
            std::fs::write(&p, bytes).unwrap();
            assert!(matches!(read_nifti(&p), Err(IoError::Format { .. })), "{name}");
        }
        assert!(matches!(read_nifti(&dir.path().join("missing.nii")), Err(IoError::Io { .. })));
    }
}
