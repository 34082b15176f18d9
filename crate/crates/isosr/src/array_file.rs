//! Minimal binary array records: magic `ISOSRARR`, `u32` rank, `u64` dims, then row-major
//! little-endian float32 data.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use isosr_core::Image;

pub const ARRAY_MAGIC: &[u8; 8] = b"ISOSRARR";
const MAX_RANK: u32 = 8;

pub fn write_array(w: &mut impl Write, dims: &[usize], data: &[f32]) -> std::io::Result<()> {
    assert_eq!(dims.iter().product::<usize>(), data.len());
    w.write_all(ARRAY_MAGIC)?;
    w.write_u32::<LittleEndian>(dims.len() as u32)?;
    for &d in dims {
        w.write_u64::<LittleEndian>(d as u64)?;
    }
    for &v in data {
        w.write_f32::<LittleEndian>(v)?;
    }
    Ok(())
}

fn invalid(msg: String) -> std::io::Error {
    std::io::Error::new(std::io::ErrorKind::InvalidData, msg)
}

pub fn read_array(r: &mut impl Read) -> std::io::Result<(Vec<usize>, Vec<f32>)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != ARRAY_MAGIC {
        return Err(invalid(format!("bad array magic {magic:?}")));
    }
    let rank = r.read_u32::<LittleEndian>()?;
    if rank > MAX_RANK {
        return Err(invalid(format!("array rank {rank} exceeds {MAX_RANK}")));
    }
    let dims = (0..rank)
        .map(|_| r.read_u64::<LittleEndian>().map(|d| d as usize))
        .collect::<std::io::Result<Vec<_>>>()?;
    let n = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| invalid(format!("array dims {dims:?} overflow")))?;
    let mut data = vec![0f32; n];
    r.read_f32_into::<LittleEndian>(&mut data)?;
    Ok((dims, data))
}

pub fn write_image(w: &mut impl Write, img: &Image<f32>) -> std::io::Result<()> {
    write_array(w, &[img.rows(), img.cols()], img.data())
}

pub fn read_image(r: &mut impl Read) -> std::io::Result<Image<f32>> {
    let (dims, data) = read_array(r)?;
    if dims.len() != 2 {
        return Err(invalid(format!("expected a rank-2 array, got dims {dims:?}")));
    }
    Image::from_vec(dims[0], dims[1], data).map_err(|e| invalid(e.to_string()))
}
