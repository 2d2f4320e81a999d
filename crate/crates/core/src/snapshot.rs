//! Binary field snapshots: magic `EXPPHI2\0`, `u32` LE grid size, `u32` LE kind
//! (0 physical, 1 spectral), then little-endian `f64` payload (row-major values, or
//! interleaved re/im coefficients in storage order).

use std::io::{Read, Write};
use std::path::Path;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{SpectralCoeffs, TorusField, TorusGrid};

pub const MAGIC: [u8; 8] = *b"EXPPHI2\0";

#[derive(Clone, Debug, PartialEq)]
pub enum Snapshot {
    Physical(TorusField),
    Spectral(SpectralCoeffs),
}

impl Snapshot {
    pub fn grid(&self) -> TorusGrid {
        match self {
            Snapshot::Physical(f) => f.grid(),
            Snapshot::Spectral(c) => c.grid(),
        }
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(&MAGIC)?;
        w.write_all(&(self.grid().size() as u32).to_le_bytes())?;
        match self {
            Snapshot::Physical(f) => {
                w.write_all(&0u32.to_le_bytes())?;
                for v in f.values() {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
            Snapshot::Spectral(c) => {
                w.write_all(&1u32.to_le_bytes())?;
                for z in c.as_slice() {
                    w.write_all(&z.re.to_le_bytes())?;
                    w.write_all(&z.im.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)
            .map_err(|e| Error::Snapshot(format!("truncated header: {e}")))?;
        if magic != MAGIC {
            return Err(Error::Snapshot("bad magic".into()));
        }
        let mut word = [0u8; 4];
        r.read_exact(&mut word)
            .map_err(|e| Error::Snapshot(format!("truncated header: {e}")))?;
        let m = u32::from_le_bytes(word) as usize;
        let grid = TorusGrid::new(m).map_err(|_| Error::Snapshot(format!("bad grid size {m}")))?;
        r.read_exact(&mut word)
            .map_err(|e| Error::Snapshot(format!("truncated header: {e}")))?;
        let kind = u32::from_le_bytes(word);
        let count = match kind {
            0 => grid.len(),
            1 => 2 * grid.len(),
            _ => return Err(Error::Snapshot(format!("unknown payload kind {kind}"))),
        };
        let mut bytes = vec![0u8; 8 * count];
        r.read_exact(&mut bytes)
            .map_err(|e| Error::Snapshot(format!("truncated payload: {e}")))?;
        let vals: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        if kind == 0 {
            let f = TorusField::new(grid, vals).map_err(|e| Error::Snapshot(e.to_string()))?;
            Ok(Snapshot::Physical(f))
        } else {
            let mut c = SpectralCoeffs::zeros(grid);
            for (z, pair) in c.as_mut_slice().iter_mut().zip(vals.chunks_exact(2)) {
                *z = Complex64::new(pair[0], pair[1]);
            }
            Ok(Snapshot::Spectral(c))
        }
    }

    /// Write to `path`, creating missing parent directories.
    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(&mut f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::to_spectral;

    #[test]
    fn round_trip_both_kinds() {
        let g = TorusGrid::new(8).unwrap();
        let f = TorusField::from_fn(g, |x| x[0].sin() * x[1]);
        for s in [
            Snapshot::Physical(f.clone()),
            Snapshot::Spectral(to_spectral(&f)),
        ] {
            let mut buf = Vec::new();
            s.write_to(&mut buf).unwrap();
            assert_eq!(Snapshot::read_from(&mut buf.as_slice()).unwrap(), s);
        }
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let g = TorusGrid::new(8).unwrap();
        let mut buf = Vec::new();
        Snapshot::Physical(TorusField::zeros(g))
            .write_to(&mut buf)
            .unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(
            Snapshot::read_from(&mut bad.as_slice()),
            Err(Error::Snapshot(_))
        ));
        let short = &buf[..buf.len() - 3];
        assert!(matches!(
            Snapshot::read_from(&mut &short[..]),
            Err(Error::Snapshot(_))
        ));
    }
}
