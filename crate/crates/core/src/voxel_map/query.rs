use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{split_index, BlockIndex, VoxelIndex, VoxelMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QueryLayer {
    /// Conservative ESDF view: unknown voxels read as `-voxel_size`.
    Esdf,
    /// Interpolated TSDF distances, unknown voxels read as `-voxel_size`.
    TsdfOccupancy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceQuery {
    pub distance: f64,
    pub gradient: Vector3<f64>,
    /// All eight interpolation corners are known.
    pub known: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VoxelState {
    Unknown,
    Free,
    Occupied,
}

impl VoxelMap {
    /// Distance and gradient by trilinear interpolation over the eight voxel
    /// centers surrounding `p`.
    pub fn query(&self, p: &Vector3<f64>, layer: QueryLayer) -> DistanceQuery {
        let vs = self.config.voxel_size;
        let unknown = -vs;
        let g = p / vs - Vector3::repeat(0.5);
        let base = [g.x.floor() as i64, g.y.floor() as i64, g.z.floor() as i64];
        let f = Vector3::new(
            g.x - base[0] as f64,
            g.y - base[1] as f64,
            g.z - base[2] as f64,
        );

        let mut values = [0.0f64; 8];
        let mut known = true;
        let mut cache: Option<(BlockIndex, Option<u32>)> = None;
        for (i, value) in values.iter_mut().enumerate() {
            let v = [
                base[0] + (i & 1) as i64,
                base[1] + ((i >> 1) & 1) as i64,
                base[2] + ((i >> 2) & 1) as i64,
            ];
            let (b, l) = split_index(v);
            let slot = match cache {
                Some((cb, s)) if cb == b => s,
                _ => {
                    let s = self.slot(b);
                    cache = Some((b, s));
                    s
                }
            };
            let read = slot.and_then(|s| {
                let block = &self.blocks[s as usize];
                match layer {
                    QueryLayer::Esdf => {
                        let e = &block.esdf[l];
                        e.known().then_some(e.distance as f64)
                    }
                    QueryLayer::TsdfOccupancy => {
                        let t = &block.tsdf[l];
                        t.observed().then_some(t.distance as f64)
                    }
                }
            });
            match read {
                Some(d) => *value = d,
                None => {
                    *value = unknown;
                    known = false;
                }
            }
        }

        let [c000, c100, c010, c110, c001, c101, c011, c111] = values;
        let (fx, fy, fz) = (f.x, f.y, f.z);
        let c00 = c000 + (c100 - c000) * fx;
        let c10 = c010 + (c110 - c010) * fx;
        let c01 = c001 + (c101 - c001) * fx;
        let c11 = c011 + (c111 - c011) * fx;
        let c0 = c00 + (c10 - c00) * fy;
        let c1 = c01 + (c11 - c01) * fy;
        let distance = c0 + (c1 - c0) * fz;

        let dx0 = (c100 - c000) + (c110 - c010 - c100 + c000) * fy;
        let dx1 = (c101 - c001) + (c111 - c011 - c101 + c001) * fy;
        let dx = dx0 + (dx1 - dx0) * fz;
        let dy = (c10 - c00) + ((c11 - c01) - (c10 - c00)) * fz;
        let dz = c1 - c0;
        DistanceQuery {
            distance,
            gradient: Vector3::new(dx, dy, dz) / vs,
            known,
        }
    }

    /// Conservative ESDF distance at `p`.
    #[inline]
    pub fn distance(&self, p: &Vector3<f64>) -> f64 {
        self.query(p, QueryLayer::Esdf).distance
    }

    /// Raw TSDF state of the voxel containing `p`.
    pub fn voxel_state(&self, p: &Vector3<f64>) -> VoxelState {
        self.voxel_state_at(self.voxel_of(p))
    }

    pub fn voxel_state_at(&self, v: VoxelIndex) -> VoxelState {
        match self.tsdf_voxel(v) {
            Some(t) if t.occupied() => VoxelState::Occupied,
            Some(t) if t.observed() => VoxelState::Free,
            _ => VoxelState::Unknown,
        }
    }

    /// Whether the voxel containing `p` is known in the ESDF layer (observed
    /// or fixed by the unknown-space policy).
    pub fn esdf_known(&self, p: &Vector3<f64>) -> bool {
        self.esdf_voxel(self.voxel_of(p)).is_some_and(|e| e.known())
    }
}
