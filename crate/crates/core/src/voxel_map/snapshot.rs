//! Binary map snapshots.
//!
//! Layout, all integers and floats little-endian:
//!
//! | field | type |
//! |---|---|
//! | magic `b"VXMP"` | 4 bytes |
//! | version | u32 |
//! | voxel_size, truncation, esdf_max_distance | 3 × f64 |
//! | max_weight | f32 |
//! | block count | u64 |
//!
//! Followed by each block in ascending block-index order:
//!
//! | field | type |
//! |---|---|
//! | block index | 3 × i32 |
//! | TSDF voxels | 4096 × (distance f32, weight f32) |
//! | ESDF voxels | 4096 × (distance f32, flags u8, site 3 × i8) |
//!
//! Voxels inside a block are ordered x fastest, then y, then z. ESDF flag
//! bits: 0 observed, 1 fixed by policy, 2 policy-occupied.

use std::io::{Read, Write};

use super::{MapConfig, MapError, TsdfVoxel, VoxelMap, VOXELS_PER_BLOCK};

pub const SNAPSHOT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"VXMP";

impl VoxelMap {
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<(), MapError> {
        w.write_all(MAGIC)?;
        w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
        let c = &self.config;
        for x in [c.voxel_size, c.truncation, c.esdf_max_distance] {
            w.write_all(&x.to_le_bytes())?;
        }
        w.write_all(&c.max_weight.to_le_bytes())?;
        w.write_all(&(self.blocks.len() as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(12 + VOXELS_PER_BLOCK * 16);
        for index in self.block_indices() {
            let block = &self.blocks[self.slot(index).expect("listed block") as usize];
            buf.clear();
            for i in index {
                buf.extend_from_slice(&i.to_le_bytes());
            }
            for t in block.tsdf.iter() {
                buf.extend_from_slice(&t.distance.to_le_bytes());
                buf.extend_from_slice(&t.weight.to_le_bytes());
            }
            for e in block.esdf.iter() {
                buf.extend_from_slice(&e.distance.to_le_bytes());
                let flags = e.observed as u8
                    | (e.fixed_by_policy as u8) << 1
                    | (e.policy_occupied as u8) << 2;
                buf.push(flags);
                buf.extend(e.site.iter().map(|s| *s as u8));
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_snapshot<R: Read>(mut r: R) -> Result<Self, MapError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(MapError::Snapshot("bad magic".into()));
        }
        let version = u32::from_le_bytes(read_array(&mut r)?);
        if version != SNAPSHOT_VERSION {
            return Err(MapError::Snapshot(format!("unsupported version {version}")));
        }
        let voxel_size = f64::from_le_bytes(read_array(&mut r)?);
        let truncation = f64::from_le_bytes(read_array(&mut r)?);
        let esdf_max_distance = f64::from_le_bytes(read_array(&mut r)?);
        let max_weight = f32::from_le_bytes(read_array(&mut r)?);
        let mut map = VoxelMap::new(MapConfig {
            voxel_size,
            truncation,
            esdf_max_distance,
            max_weight,
        })?;
        let count = u64::from_le_bytes(read_array(&mut r)?);
        let mut buf = vec![0u8; VOXELS_PER_BLOCK * 16];
        for _ in 0..count {
            let index = [
                i32::from_le_bytes(read_array(&mut r)?),
                i32::from_le_bytes(read_array(&mut r)?),
                i32::from_le_bytes(read_array(&mut r)?),
            ];
            if map.slot(index).is_some() {
                return Err(MapError::Snapshot(format!("duplicate block {index:?}")));
            }
            let slot = map.allocate(index) as usize;
            r.read_exact(&mut buf)?;
            let block = &mut map.blocks[slot];
            for (i, t) in block.tsdf.iter_mut().enumerate() {
                let o = i * 8;
                *t = TsdfVoxel {
                    distance: f32::from_le_bytes(buf[o..o + 4].try_into().unwrap()),
                    weight: f32::from_le_bytes(buf[o + 4..o + 8].try_into().unwrap()),
                    frame: 0,
                };
            }
            let base = VOXELS_PER_BLOCK * 8;
            for (i, e) in block.esdf.iter_mut().enumerate() {
                let o = base + i * 8;
                e.distance = f32::from_le_bytes(buf[o..o + 4].try_into().unwrap());
                let flags = buf[o + 4];
                e.observed = flags & 1 != 0;
                e.fixed_by_policy = flags & 2 != 0;
                e.policy_occupied = flags & 4 != 0;
                e.site = [buf[o + 5] as i8, buf[o + 6] as i8, buf[o + 7] as i8];
            }
        }
        Ok(map)
    }
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N], MapError> {
    let mut a = [0u8; N];
    r.read_exact(&mut a)?;
    Ok(a)
}
