//! Hotboot cache and its binary file format.
//!
//! Layout, all integers and floats little-endian:
//!
//! | field | type |
//! |---|---|
//! | magic `SPADHB` | 6 bytes |
//! | version | u16 |
//! | payment levels X | u32 |
//! | quality levels Y | u32 |
//! | price cap | f64 |
//! | experiments run W | u32 |
//! | 4 tables: subscriber values, subscriber policy, publisher values, publisher policy | u64 length then f64 entries |

use std::io::{Read, Write};
use std::sync::Arc;

use super::{ActionGrid, TablePrior};
use crate::error::{Result, SpadError};

pub const CACHE_MAGIC: &[u8; 6] = b"SPADHB";
pub const CACHE_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct HotbootCache {
    pub grid: ActionGrid,
    pub experiments_run: usize,
    pub subscriber: Arc<TablePrior>,
    pub publisher: Arc<TablePrior>,
}

impl HotbootCache {
    pub fn check(&self) -> Result<()> {
        self.grid.check().map_err(|e| SpadError::Cache(e.to_string()))?;
        let (np, nq) = (self.grid.payment_actions(), self.grid.qocs_actions());
        let shapes = [
            ("subscriber values", self.subscriber.q.len()),
            ("subscriber policy", self.subscriber.policy.len()),
            ("publisher values", self.publisher.q.len()),
            ("publisher policy", self.publisher.policy.len()),
        ];
        for (name, len) in shapes {
            if len != np * nq {
                return Err(SpadError::Cache(format!("{name} has {len} entries, grid needs {}", np * nq)));
            }
        }
        Ok(())
    }
}

pub fn write_cache<W: Write>(cache: &HotbootCache, mut w: W) -> Result<()> {
    cache.check()?;
    w.write_all(CACHE_MAGIC)?;
    w.write_all(&CACHE_VERSION.to_le_bytes())?;
    w.write_all(&(cache.grid.payment_levels as u32).to_le_bytes())?;
    w.write_all(&(cache.grid.qocs_levels as u32).to_le_bytes())?;
    w.write_all(&cache.grid.price_cap.to_le_bytes())?;
    w.write_all(&(cache.experiments_run as u32).to_le_bytes())?;
    for table in [&cache.subscriber.q, &cache.subscriber.policy, &cache.publisher.q, &cache.publisher.policy] {
        w.write_all(&(table.len() as u64).to_le_bytes())?;
        for v in table {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| SpadError::Cache(format!("truncated cache: {e}")))?;
    Ok(buf)
}

fn table<R: Read>(r: &mut R, expected: usize) -> Result<Vec<f64>> {
    let len = u64::from_le_bytes(take(r)?) as usize;
    if len != expected {
        return Err(SpadError::Cache(format!("table has {len} entries, grid needs {expected}")));
    }
    (0..len).map(|_| Ok(f64::from_le_bytes(take(r)?))).collect()
}

/// Read a cache, rejecting other formats, versions and grids.
pub fn read_cache<R: Read>(mut r: R, expected: Option<&ActionGrid>) -> Result<HotbootCache> {
    if &take::<6, _>(&mut r)? != CACHE_MAGIC {
        return Err(SpadError::Cache("not a hotboot cache".into()));
    }
    let version = u16::from_le_bytes(take(&mut r)?);
    if version != CACHE_VERSION {
        return Err(SpadError::Cache(format!("cache version {version}, expected {CACHE_VERSION}")));
    }
    let grid = ActionGrid {
        payment_levels: u32::from_le_bytes(take(&mut r)?) as usize,
        qocs_levels: u32::from_le_bytes(take(&mut r)?) as usize,
        price_cap: f64::from_le_bytes(take(&mut r)?),
    };
    grid.check().map_err(|e| SpadError::Cache(e.to_string()))?;
    if let Some(g) = expected {
        if *g != grid {
            return Err(SpadError::Cache(format!("cache grid {grid:?} does not match {g:?}")));
        }
    }
    let experiments_run = u32::from_le_bytes(take(&mut r)?) as usize;
    let n = grid.payment_actions() * grid.qocs_actions();
    let cache = HotbootCache {
        grid,
        experiments_run,
        subscriber: Arc::new(TablePrior { q: table(&mut r, n)?, policy: table(&mut r, n)? }),
        publisher: Arc::new(TablePrior { q: table(&mut r, n)?, policy: table(&mut r, n)? }),
    };
    Ok(cache)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learning::{hotboot, LearningConfig};
    use crate::stackelberg::GameInstance;

    fn sample() -> HotbootCache {
        let inst = GameInstance {
            j: (2, 2),
            econ: Default::default(),
            sensing_capacity: 0.8,
            processing_capacity: 0.5,
            popularity: 0.4,
            reputation: 0.9,
            link: Default::default(),
        };
        let cfg = LearningConfig { hotboot_experiments: 2, ..Default::default() };
        hotboot(&inst, &cfg, 150, 3).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let c = sample();
        let mut buf = Vec::new();
        write_cache(&c, &mut buf).unwrap();
        let back = read_cache(buf.as_slice(), Some(&c.grid)).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn wrong_version_grid_and_magic_are_rejected() {
        let c = sample();
        let mut buf = Vec::new();
        write_cache(&c, &mut buf).unwrap();

        let mut v = buf.clone();
        v[6] = 9;
        assert!(matches!(read_cache(v.as_slice(), None), Err(SpadError::Cache(m)) if m.contains("version")));

        let other = ActionGrid::new(8, 10, 5.0).unwrap();
        assert!(matches!(read_cache(buf.as_slice(), Some(&other)), Err(SpadError::Cache(_))));

        let mut m = buf.clone();
        m[0] = b'X';
        assert!(read_cache(m.as_slice(), None).is_err());

        assert!(read_cache(&buf[..buf.len() - 3], None).is_err());
    }
}
