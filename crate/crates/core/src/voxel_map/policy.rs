use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::esdf::{WaveHeap, OFFSETS26};
use super::{local_coords, MapError, VoxelMap, BLOCK_SIDE, NO_SITE, VOXELS_PER_BLOCK};
use std::cmp::Reverse;

/// Semantics for unobserved space near the vehicle: a clearing sphere around
/// the initial pose that is assumed free, and an occupancy sphere around the
/// current pose in which anything unknown is treated as an obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnknownSpacePolicy {
    pub clear_radius: f64,
    pub occupied_radius: f64,
    pub origin: Vector3<f64>,
}

impl UnknownSpacePolicy {
    pub fn new(
        clear_radius: f64,
        occupied_radius: f64,
        origin: Vector3<f64>,
    ) -> Result<Self, MapError> {
        if !(clear_radius >= 0.0 && clear_radius < occupied_radius) {
            return Err(MapError::Config(format!(
                "clearing radius {clear_radius} must be below occupancy radius {occupied_radius}"
            )));
        }
        Ok(Self {
            clear_radius,
            occupied_radius,
            origin,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PolicySummary {
    pub cleared: usize,
    pub occupied: usize,
}

impl VoxelMap {
    /// Applies the unknown-space policy to the ESDF layer.
    ///
    /// Unknown voxels within the clearing radius of the policy origin become
    /// free; unknown voxels within the occupancy radius of `current` become
    /// obstacles. Blocks inside the occupancy sphere are allocated so that
    /// unexplored space next to the vehicle always acts as an obstacle. The
    /// TSDF layer is not modified. Distances of free voxels are lowered to
    /// account for the new obstacles.
    pub fn apply_unknown_policy(
        &mut self,
        policy: &UnknownSpacePolicy,
        current: &Vector3<f64>,
    ) -> PolicySummary {
        let vs = self.config.voxel_size as f32;
        let max = self.config.esdf_max_distance as f32;
        let mut summary = PolicySummary::default();
        let mut freed = Vec::new();
        let mut heap = WaveHeap::new();

        for slot in self.blocks_in_sphere(&policy.origin, policy.clear_radius) {
            self.for_voxels_in_sphere(slot, &policy.origin, policy.clear_radius, |e, local| {
                if !e.known() {
                    e.fixed_by_policy = true;
                    e.policy_occupied = false;
                    e.distance = max;
                    e.site = [NO_SITE; 3];
                    freed.push((slot, local));
                }
            });
        }
        summary.cleared = freed.len();

        for slot in self.blocks_in_sphere(current, policy.occupied_radius) {
            self.for_voxels_in_sphere(slot, current, policy.occupied_radius, |e, local| {
                if !e.known() {
                    e.fixed_by_policy = true;
                    e.policy_occupied = true;
                    e.distance = -vs;
                    e.site = [0; 3];
                    heap.push(Reverse((0, slot, local as u32)));
                    summary.occupied += 1;
                }
            });
        }

        for &(slot, local) in &freed {
            for d in OFFSETS26 {
                if let Some((ns, nl)) = self.neighbor(slot, local, d) {
                    let n = &self.blocks[ns as usize].esdf[nl];
                    if n.known() && n.site[0] != NO_SITE {
                        let s = n.site;
                        let n2 = (s[0] as i32).pow(2) + (s[1] as i32).pow(2) + (s[2] as i32).pow(2);
                        heap.push(Reverse((n2 as u32, ns, nl as u32)));
                    }
                }
            }
        }
        self.propagate(heap);
        summary
    }

    /// Allocates and returns the slots of all blocks intersecting the sphere.
    fn blocks_in_sphere(&mut self, center: &Vector3<f64>, radius: f64) -> Vec<u32> {
        let bs = self.config.voxel_size * BLOCK_SIDE as f64;
        let lo = (center.add_scalar(-radius) / bs).map(|x| x.floor() as i32);
        let hi = (center.add_scalar(radius) / bs).map(|x| x.floor() as i32);
        let mut out = Vec::new();
        for bx in lo.x..=hi.x {
            for by in lo.y..=hi.y {
                for bz in lo.z..=hi.z {
                    let bmin = Vector3::new(bx as f64, by as f64, bz as f64) * bs;
                    let nearest =
                        center.zip_zip_map(&bmin, &bmin.add_scalar(bs), |c, a, b| c.clamp(a, b));
                    if (nearest - center).norm() <= radius {
                        out.push(self.allocate([bx, by, bz]));
                    }
                }
            }
        }
        out
    }

    fn for_voxels_in_sphere(
        &mut self,
        slot: u32,
        center: &Vector3<f64>,
        radius: f64,
        mut f: impl FnMut(&mut super::EsdfVoxel, usize),
    ) {
        let vs = self.config.voxel_size;
        let b = self.blocks[slot as usize].index;
        let r2 = radius * radius;
        let block = &mut self.blocks[slot as usize];
        for local in 0..VOXELS_PER_BLOCK {
            let l = local_coords(local);
            let c = Vector3::new(
                ((b[0] as i64 * BLOCK_SIDE as i64 + l[0] as i64) as f64 + 0.5) * vs,
                ((b[1] as i64 * BLOCK_SIDE as i64 + l[1] as i64) as f64 + 0.5) * vs,
                ((b[2] as i64 * BLOCK_SIDE as i64 + l[2] as i64) as f64 + 0.5) * vs,
            );
            if (c - center).norm_squared() <= r2 {
                f(&mut block.esdf[local], local);
            }
        }
    }
}
