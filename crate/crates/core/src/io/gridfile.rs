//! `PTFG` binary grid container.
//!
//! ```text
//! offset  size      field
//! 0       4         magic "PTFG"
//! 4       2         version (u16 LE) = 1
//! 6       1         dtype: 0 = f32 LE, 1 = bool as u8 (0 or 1)
//! 7       1         rank
//! 8       4*rank    dims (u32 LE each)
//! ...     n*size    row-major payload, last axis fastest
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid;

pub const MAGIC: [u8; 4] = *b"PTFG";
pub const VERSION: u16 = 1;
const DTYPE_F32: u8 = 0;
const DTYPE_BOOL: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum GridData {
    Real(Grid<f32>),
    Bool(Grid<bool>),
}

impl GridData {
    pub fn dtype_name(&self) -> &'static str {
        match self {
            GridData::Real(_) => "f32",
            GridData::Bool(_) => "bool",
        }
    }

    pub fn shape(&self) -> &[usize] {
        match self {
            GridData::Real(g) => g.shape(),
            GridData::Bool(g) => g.shape(),
        }
    }
}

impl From<Grid<f32>> for GridData {
    fn from(g: Grid<f32>) -> Self {
        GridData::Real(g)
    }
}

impl From<Grid<bool>> for GridData {
    fn from(g: Grid<bool>) -> Self {
        GridData::Bool(g)
    }
}

pub fn encode_grid(data: &GridData) -> Result<Vec<u8>> {
    let shape = data.shape();
    if shape.len() > u8::MAX as usize {
        return Err(Error::InvalidArgument(format!(
            "rank {} too large",
            shape.len()
        )));
    }
    let (dtype, elem) = match data {
        GridData::Real(_) => (DTYPE_F32, 4),
        GridData::Bool(_) => (DTYPE_BOOL, 1),
    };
    let n: usize = shape.iter().product();
    let mut out = Vec::with_capacity(8 + 4 * shape.len() + n * elem);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(dtype);
    out.push(shape.len() as u8);
    for &d in shape {
        let d = u32::try_from(d)
            .map_err(|_| Error::InvalidArgument(format!("dimension {d} exceeds u32")))?;
        out.extend_from_slice(&d.to_le_bytes());
    }
    match data {
        GridData::Real(g) => {
            for v in g.as_slice() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        GridData::Bool(g) => out.extend(g.as_slice().iter().map(|&b| u8::from(b))),
    }
    Ok(out)
}

pub fn decode_grid(bytes: &[u8]) -> Result<GridData> {
    if bytes.len() < 8 {
        return Err(Error::Truncated {
            expected: 8,
            found: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[0..4].try_into().expect("length checked");
    if magic != MAGIC {
        return Err(Error::BadMagic(magic));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let dtype = bytes[6];
    let elem = match dtype {
        DTYPE_F32 => 4,
        DTYPE_BOOL => 1,
        other => return Err(Error::UnknownDtype(other)),
    };
    let rank = bytes[7] as usize;
    let header = 8 + 4 * rank;
    if bytes.len() < header {
        return Err(Error::Truncated {
            expected: header,
            found: bytes.len(),
        });
    }
    let shape: Vec<usize> = bytes[8..header]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().expect("chunk of 4")) as usize)
        .collect();
    let n = shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Parse(format!("dims {shape:?} overflow")))?;
    let expected = n
        .checked_mul(elem)
        .and_then(|p| p.checked_add(header))
        .ok_or_else(|| Error::Parse(format!("dims {shape:?} overflow")))?;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::Parse(format!(
            "{} trailing bytes after payload",
            bytes.len() - expected
        )));
    }
    let payload = &bytes[header..];
    Ok(match dtype {
        DTYPE_F32 => GridData::Real(Grid::from_vec(
            shape,
            payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")))
                .collect(),
        )?),
        _ => {
            let mut data = Vec::with_capacity(n);
            for (i, &b) in payload.iter().enumerate() {
                match b {
                    0 => data.push(false),
                    1 => data.push(true),
                    _ => return Err(Error::Parse(format!("bool byte {b} at element {i}"))),
                }
            }
            GridData::Bool(Grid::from_vec(shape, data)?)
        }
    })
}

pub fn write_grid(path: impl AsRef<Path>, data: &GridData) -> Result<()> {
    fs::write(path, encode_grid(data)?)?;
    Ok(())
}

pub fn read_grid(path: impl AsRef<Path>) -> Result<GridData> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    decode_grid(&bytes)
}

pub fn read_real_grid(path: impl AsRef<Path>) -> Result<Grid<f32>> {
    match read_grid(path)? {
        GridData::Real(g) => Ok(g),
        other => Err(Error::DtypeMismatch {
            expected: "f32",
            found: other.dtype_name(),
        }),
    }
}

pub fn read_bool_grid(path: impl AsRef<Path>) -> Result<Grid<bool>> {
    match read_grid(path)? {
        GridData::Bool(g) => Ok(g),
        other => Err(Error::DtypeMismatch {
            expected: "bool",
            found: other.dtype_name(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> GridData {
        GridData::Real(Grid::from_fn2(7, 5, |r, c| r as f32 * 1.5 - c as f32 / 3.0))
    }

    #[test]
    fn header_layout() {
        let bytes = encode_grid(&sample()).unwrap();
        assert_eq!(&bytes[..4], b"PTFG");
        assert_eq!(&bytes[4..8], &[1, 0, 0, 2]);
        assert_eq!(&bytes[8..16], &[7, 0, 0, 0, 5, 0, 0, 0]);
        assert_eq!(bytes.len(), 16 + 35 * 4);
    }

    #[test]
    fn round_trip_real_grid() {
        let g = sample();
        assert_eq!(decode_grid(&encode_grid(&g).unwrap()).unwrap(), g);
    }

    #[test]
    fn distinct_errors() {
        let mut bytes = encode_grid(&sample()).unwrap();
        let short = &bytes[..bytes.len() - 1];
        assert!(matches!(decode_grid(short), Err(Error::Truncated { .. })));
        bytes[..4].copy_from_slice(b"XXXX");
        assert!(matches!(decode_grid(&bytes), Err(Error::BadMagic(m)) if &m == b"XXXX"));

        let mut bytes = encode_grid(&sample()).unwrap();
        bytes[6] = 9;
        assert!(matches!(decode_grid(&bytes), Err(Error::UnknownDtype(9))));

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.ptfg");
        write_grid(&p, &sample()).unwrap();
        assert!(matches!(
            read_bool_grid(&p),
            Err(Error::DtypeMismatch {
                expected: "bool",
                ..
            })
        ));
        assert!(matches!(
            read_grid(dir.path().join("nope.ptfg")),
            Err(Error::MissingFile(_))
        ));
    }

    #[test]
    fn trailing_bytes_and_bad_bools_are_rejected() {
        let mut bytes = encode_grid(&GridData::Bool(Grid::filled(vec![2, 2], true))).unwrap();
        bytes.push(0);
        assert!(matches!(decode_grid(&bytes), Err(Error::Parse(_))));
        bytes.pop();
        *bytes.last_mut().unwrap() = 2;
        assert!(matches!(decode_grid(&bytes), Err(Error::Parse(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn shapes() -> impl Strategy<Value = Vec<usize>> {
            prop::collection::vec(1usize..6, 1..=4)
        }

        proptest! {
            #[test]
            fn real_round_trip_is_bit_exact(shape in shapes(), seed in any::<u32>()) {
                let n: usize = shape.iter().product();
                let data: Vec<f32> = (0..n)
                    .map(|i| f32::from_bits((i as u32).wrapping_mul(2_654_435_761).wrapping_add(seed)))
                    .collect();
                let g = GridData::Real(Grid::from_vec(shape, data).unwrap());
                let back = decode_grid(&encode_grid(&g).unwrap()).unwrap();
                let (GridData::Real(a), GridData::Real(b)) = (&g, &back) else { panic!() };
                prop_assert_eq!(a.shape(), b.shape());
                let bits = |g: &Grid<f32>| g.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
                prop_assert_eq!(bits(a), bits(b));
            }

            #[test]
            fn bool_round_trip(shape in shapes(), bits in prop::collection::vec(any::<bool>(), 625)) {
                let n: usize = shape.iter().product();
                let g = GridData::Bool(Grid::from_vec(shape, bits[..n].to_vec()).unwrap());
                prop_assert_eq!(decode_grid(&encode_grid(&g).unwrap()).unwrap(), g);
            }
        }
    }
}
