//! Binary snapshots and the diagnostics CSV.
//!
//! A snapshot is the magic `KSW1`, then `u32 nx, u32 ny, f64 hx, f64 hy,
//! f64 t, u8 reg_kind, f64 epsilon`, then `nx * ny` values, all little
//! endian. Radial fields are stored with `ny = 1`, `hx = h_min` and
//! `hy = 0`; the geometric grid is rebuilt from `nx` and `h_min`.

use std::io::{Read, Write};
use std::sync::Arc;

use super::{DiagRow, Density, Field, RadialField, RadialGrid, RegKind};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"KSW1";

pub fn write_snapshot<W: Write>(mut w: W, u: &Density, t: f64, reg: RegKind) -> Result<()> {
    let (nx, ny, hx, hy) = match u {
        Density::Rect(f) => (f.nx, f.ny, f.hx, f.hy),
        Density::Radial(f) => (f.grid.n, 1, f.grid.h_min, 0.0),
    };
    let mut buf = Vec::with_capacity(45 + 8 * nx * ny);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(nx as u32).to_le_bytes());
    buf.extend_from_slice(&(ny as u32).to_le_bytes());
    buf.extend_from_slice(&hx.to_le_bytes());
    buf.extend_from_slice(&hy.to_le_bytes());
    buf.extend_from_slice(&t.to_le_bytes());
    buf.push(reg.code());
    buf.extend_from_slice(&reg.epsilon().to_le_bytes());
    for x in u.values() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<(Density, f64, RegKind)> {
    let mut head = [0u8; 45];
    r.read_exact(&mut head)?;
    if &head[0..4] != MAGIC {
        return Err(Error::Invalid("not a KSW1 snapshot".into()));
    }
    let u32_at = |k: usize| u32::from_le_bytes(head[k..k + 4].try_into().unwrap()) as usize;
    let f64_at = |k: usize| f64::from_le_bytes(head[k..k + 8].try_into().unwrap());
    let (nx, ny) = (u32_at(4), u32_at(8));
    let (hx, hy, t) = (f64_at(12), f64_at(20), f64_at(28));
    let reg = RegKind::from_code(head[36], f64_at(37))?;
    let mut data = vec![0u8; 8 * nx * ny];
    r.read_exact(&mut data)?;
    let values: Vec<f64> = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let u = if hy == 0.0 {
        if ny != 1 {
            return Err(Error::Invalid("radial snapshot with ny != 1".into()));
        }
        Density::Radial(RadialField { grid: Arc::new(RadialGrid::new(nx, hx)?), values })
    } else {
        Density::Rect(Field::new(nx, ny, hx, hy, values)?)
    };
    Ok((u, t, reg))
}

pub const DIAG_HEADER: &str = "t,mass,min_u,max_u,entropy,dissipation,h_t";

pub fn write_diagnostics<W: Write>(mut w: W, rows: &[DiagRow]) -> Result<()> {
    writeln!(w, "{DIAG_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.t, r.mass, r.min_u, r.max_u, r.entropy, r.dissipation, r.h_t
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_round_trip() {
        let f = Field::from_fn(3, 2, 1.0, 2.0, |p| p[0] + 10.0 * p[1]);
        let reg = RegKind::nonlinear(1e-3).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &Density::Rect(f.clone()), 0.25, reg).unwrap();
        assert_eq!(buf.len(), 45 + 48);
        let (u, t, r) = read_snapshot(&buf[..]).unwrap();
        assert_eq!((u, t, r), (Density::Rect(f), 0.25, reg));

        let g = Arc::new(RadialGrid::new(50, 1e-3).unwrap());
        let rf = RadialField::from_fn(Arc::clone(&g), |r| 1.0 - r);
        let reg = RegKind::cutoff(0.1).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &Density::Radial(rf.clone()), 1.5, reg).unwrap();
        let (u, _, r) = read_snapshot(&buf[..]).unwrap();
        assert_eq!(r, reg);
        match u {
            Density::Radial(back) => {
                assert_eq!(back.values, rf.values);
                assert_eq!(back.grid.faces, g.faces);
            }
            _ => panic!("expected radial"),
        }
        assert!(read_snapshot(&b"KSW2xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx"[..]).is_err());
    }
}
