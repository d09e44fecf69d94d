//! Block-hashed voxel map with a TSDF layer built from depth images and an
//! ESDF layer used for distance and gradient queries.
//!
//! Voxels are grouped into cubic blocks of [`BLOCK_SIDE`]³ voxels that are
//! allocated on first touch, so the map grows with the explored volume. Both
//! layers share one block table and one voxel indexing scheme. Anything
//! outside the allocated blocks is unknown.

mod esdf;
mod frustum;
mod policy;
mod query;
mod snapshot;
mod traverse;
mod tsdf;

pub use esdf::EsdfSummary;
pub use frustum::{subsample_stride, FrustumCount};
pub use policy::{PolicySummary, UnknownSpacePolicy};
pub use query::{DistanceQuery, QueryLayer, VoxelState};
pub use snapshot::SNAPSHOT_VERSION;
pub use traverse::traverse_voxels;
pub use tsdf::IntegrationSummary;

use nalgebra::Vector3;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const BLOCK_SIDE: usize = 16;
pub const VOXELS_PER_BLOCK: usize = BLOCK_SIDE * BLOCK_SIDE * BLOCK_SIDE;

/// Integer voxel coordinates; voxel `i` spans `[i, i + 1) * voxel_size`.
pub type VoxelIndex = [i64; 3];
pub type BlockIndex = [i32; 3];

const NO_BLOCK: u32 = u32::MAX;
const NO_SITE: i8 = i8::MIN;

#[derive(Debug, Error)]
pub enum MapError {
    #[error("depth image is {got_w}x{got_h} but camera expects {want_w}x{want_h}")]
    ImageSize {
        got_w: usize,
        got_h: usize,
        want_w: usize,
        want_h: usize,
    },
    #[error("sensor pose is not finite")]
    NonFinitePose,
    #[error("negative range {0} in depth image")]
    NegativeRange(f32),
    #[error("invalid map configuration: {0}")]
    Config(String),
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MapConfig {
    pub voxel_size: f64,
    pub truncation: f64,
    pub esdf_max_distance: f64,
    pub max_weight: f32,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            voxel_size: 0.2,
            truncation: 0.4,
            esdf_max_distance: 4.0,
            max_weight: 10_000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TsdfVoxel {
    /// Projective signed distance, clamped to the truncation band.
    pub distance: f32,
    pub weight: f32,
    frame: u32,
}

impl TsdfVoxel {
    #[inline]
    pub fn observed(&self) -> bool {
        self.weight > 0.0
    }

    #[inline]
    pub fn occupied(&self) -> bool {
        self.observed() && self.distance < 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsdfVoxel {
    /// Euclidean distance to the nearest obstacle voxel center. Obstacle
    /// voxels hold `-voxel_size`.
    pub distance: f32,
    pub observed: bool,
    pub fixed_by_policy: bool,
    /// Set by the occupancy sphere of the unknown-space policy.
    policy_occupied: bool,
    /// Offset to the obstacle voxel this distance was measured to.
    site: [i8; 3],
}

impl Default for EsdfVoxel {
    fn default() -> Self {
        Self {
            distance: 0.0,
            observed: false,
            fixed_by_policy: false,
            policy_occupied: false,
            site: [NO_SITE; 3],
        }
    }
}

impl EsdfVoxel {
    #[inline]
    pub fn known(&self) -> bool {
        self.observed || self.fixed_by_policy
    }

    #[inline]
    pub fn is_free(&self) -> bool {
        self.known() && self.distance >= 0.0
    }

    #[inline]
    pub fn is_obstacle(&self) -> bool {
        self.known() && self.distance < 0.0
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Block {
    pub(crate) index: BlockIndex,
    pub(crate) tsdf: Box<[TsdfVoxel]>,
    pub(crate) esdf: Box<[EsdfVoxel]>,
    /// Slots of the 26 neighboring blocks (and self at 13), `NO_BLOCK` if
    /// not allocated.
    neighbors: [u32; 27],
}

impl Block {
    fn new(index: BlockIndex) -> Self {
        Self {
            index,
            tsdf: vec![TsdfVoxel::default(); VOXELS_PER_BLOCK].into_boxed_slice(),
            esdf: vec![EsdfVoxel::default(); VOXELS_PER_BLOCK].into_boxed_slice(),
            neighbors: [NO_BLOCK; 27],
        }
    }
}

#[inline]
fn neighbor_slot_index(d: [i32; 3]) -> usize {
    ((d[0] + 1) * 9 + (d[1] + 1) * 3 + (d[2] + 1)) as usize
}

#[inline]
pub(crate) fn local_index(l: [usize; 3]) -> usize {
    l[0] + BLOCK_SIDE * (l[1] + BLOCK_SIDE * l[2])
}

#[inline]
pub(crate) fn local_coords(i: usize) -> [usize; 3] {
    [
        i % BLOCK_SIDE,
        (i / BLOCK_SIDE) % BLOCK_SIDE,
        i / (BLOCK_SIDE * BLOCK_SIDE),
    ]
}

/// Splits a voxel index into its block and the linear index inside the block.
#[inline]
pub fn split_index(v: VoxelIndex) -> (BlockIndex, usize) {
    let side = BLOCK_SIDE as i64;
    let b = [
        v[0].div_euclid(side) as i32,
        v[1].div_euclid(side) as i32,
        v[2].div_euclid(side) as i32,
    ];
    let l = [
        v[0].rem_euclid(side) as usize,
        v[1].rem_euclid(side) as usize,
        v[2].rem_euclid(side) as usize,
    ];
    (b, local_index(l))
}

#[inline]
pub(crate) fn join_index(b: BlockIndex, local: usize) -> VoxelIndex {
    let l = local_coords(local);
    let side = BLOCK_SIDE as i64;
    [
        b[0] as i64 * side + l[0] as i64,
        b[1] as i64 * side + l[1] as i64,
        b[2] as i64 * side + l[2] as i64,
    ]
}

/// Dynamically growing TSDF + ESDF voxel map.
#[derive(Debug, Clone)]
pub struct VoxelMap {
    config: MapConfig,
    pub(crate) blocks: Vec<Block>,
    lookup: FxHashMap<BlockIndex, u32>,
    frame: u32,
}

impl VoxelMap {
    pub fn new(config: MapConfig) -> Result<Self, MapError> {
        if !(config.voxel_size > 0.0) || !(config.truncation > 0.0) {
            return Err(MapError::Config(
                "voxel size and truncation must be positive".into(),
            ));
        }
        if !(config.esdf_max_distance > 0.0) || !(config.max_weight > 0.0) {
            return Err(MapError::Config(
                "ESDF range and max weight must be positive".into(),
            ));
        }
        if config.esdf_max_distance / config.voxel_size > 126.0 {
            return Err(MapError::Config(
                "ESDF range must be below 126 voxels".into(),
            ));
        }
        Ok(Self {
            config,
            blocks: Vec::new(),
            lookup: FxHashMap::default(),
            frame: 0,
        })
    }

    pub fn config(&self) -> &MapConfig {
        &self.config
    }

    #[inline]
    pub fn voxel_size(&self) -> f64 {
        self.config.voxel_size
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Allocated block indices in ascending order.
    pub fn block_indices(&self) -> Vec<BlockIndex> {
        let mut v: Vec<_> = self.blocks.iter().map(|b| b.index).collect();
        v.sort_unstable();
        v
    }

    #[inline]
    pub fn voxel_of(&self, p: &Vector3<f64>) -> VoxelIndex {
        let s = self.config.voxel_size;
        [
            (p.x / s).floor() as i64,
            (p.y / s).floor() as i64,
            (p.z / s).floor() as i64,
        ]
    }

    #[inline]
    pub fn voxel_center(&self, v: VoxelIndex) -> Vector3<f64> {
        let s = self.config.voxel_size;
        Vector3::new(
            (v[0] as f64 + 0.5) * s,
            (v[1] as f64 + 0.5) * s,
            (v[2] as f64 + 0.5) * s,
        )
    }

    #[inline]
    pub(crate) fn slot(&self, b: BlockIndex) -> Option<u32> {
        self.lookup.get(&b).copied()
    }

    pub(crate) fn allocate(&mut self, b: BlockIndex) -> u32 {
        if let Some(s) = self.slot(b) {
            return s;
        }
        let slot = self.blocks.len() as u32;
        let mut block = Block::new(b);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let nb = [b[0] + dx, b[1] + dy, b[2] + dz];
                    let d = [dx, dy, dz];
                    if d == [0, 0, 0] {
                        block.neighbors[13] = slot;
                        continue;
                    }
                    if let Some(ns) = self.slot(nb) {
                        block.neighbors[neighbor_slot_index(d)] = ns;
                        self.blocks[ns as usize].neighbors[neighbor_slot_index([-dx, -dy, -dz])] =
                            slot;
                    }
                }
            }
        }
        self.blocks.push(block);
        self.lookup.insert(b, slot);
        slot
    }

    pub fn tsdf_voxel(&self, v: VoxelIndex) -> Option<&TsdfVoxel> {
        let (b, l) = split_index(v);
        self.slot(b).map(|s| &self.blocks[s as usize].tsdf[l])
    }

    pub fn esdf_voxel(&self, v: VoxelIndex) -> Option<&EsdfVoxel> {
        let (b, l) = split_index(v);
        self.slot(b).map(|s| &self.blocks[s as usize].esdf[l])
    }

    /// Neighbor of voxel `(slot, local)` at offset `d` with components in
    /// `-1..=1`.
    #[inline]
    pub(crate) fn neighbor(&self, slot: u32, local: usize, d: [i32; 3]) -> Option<(u32, usize)> {
        let l = local_coords(local);
        let side = BLOCK_SIDE as i32;
        let mut bd = [0i32; 3];
        let mut nl = [0usize; 3];
        for k in 0..3 {
            let c = l[k] as i32 + d[k];
            if c < 0 {
                bd[k] = -1;
                nl[k] = (c + side) as usize;
            } else if c >= side {
                bd[k] = 1;
                nl[k] = (c - side) as usize;
            } else {
                nl[k] = c as usize;
            }
        }
        let ns = self.blocks[slot as usize].neighbors[neighbor_slot_index(bd)];
        (ns != NO_BLOCK).then(|| (ns, local_index(nl)))
    }

    /// Number of voxels with TSDF weight > 0.
    pub fn observed_count(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| b.tsdf.iter().filter(|v| v.observed()).count())
            .sum()
    }

    /// Calls `f` with the index of every observed TSDF voxel.
    pub fn for_each_observed(&self, mut f: impl FnMut(VoxelIndex)) {
        for b in &self.blocks {
            for (l, t) in b.tsdf.iter().enumerate() {
                if t.observed() {
                    f(join_index(b.index, l));
                }
            }
        }
    }

    /// Mutable TSDF access, allocating the block. Intended for building
    /// synthetic maps in tests and tools.
    pub fn tsdf_voxel_mut(&mut self, v: VoxelIndex) -> &mut TsdfVoxel {
        let (b, l) = split_index(v);
        let s = self.allocate(b);
        &mut self.blocks[s as usize].tsdf[l]
    }

    /// Marks a voxel as observed with the given signed distance and unit
    /// weight.
    pub fn set_observed(&mut self, v: VoxelIndex, distance: f32) {
        let t = self.config.truncation as f32;
        let voxel = self.tsdf_voxel_mut(v);
        voxel.distance = distance.clamp(-t, t);
        voxel.weight = 1.0;
    }
}
