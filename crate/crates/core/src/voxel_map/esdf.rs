use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{VoxelMap, NO_SITE, VOXELS_PER_BLOCK};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EsdfSummary {
    pub known_voxels: usize,
    pub obstacle_voxels: usize,
    /// Free voxels that ended up within range of an obstacle.
    pub reached_voxels: usize,
}

pub(crate) const OFFSETS26: [[i32; 3]; 26] = {
    let mut out = [[0i32; 3]; 26];
    let mut n = 0;
    let mut i: i32 = 0;
    while i < 27 {
        let d = [i / 9 - 1, (i / 3) % 3 - 1, i % 3 - 1];
        if !(d[0] == 0 && d[1] == 0 && d[2] == 0) {
            out[n] = d;
            n += 1;
        }
        i += 1;
    }
    out
};

/// Min-heap entry: squared site distance in voxels², block slot, local index.
pub(crate) type WaveHeap = BinaryHeap<Reverse<(u32, u32, u32)>>;

#[inline]
fn site_norm2(s: [i8; 3]) -> u32 {
    (s[0] as i32 * s[0] as i32 + s[1] as i32 * s[1] as i32 + s[2] as i32 * s[2] as i32) as u32
}

impl VoxelMap {
    /// Recomputes the ESDF layer from scratch over all allocated blocks.
    ///
    /// Obstacles are TSDF-occupied voxels plus voxels the unknown-space
    /// policy marked occupied. Distances grow from obstacle voxel centers
    /// through known free voxels with a 26-connected Dijkstra wave that
    /// carries the offset to the originating obstacle, so each stored value
    /// is an exact center-to-center distance to some obstacle.
    pub fn update_esdf(&mut self) -> EsdfSummary {
        let vs = self.config.voxel_size as f32;
        let max = self.config.esdf_max_distance as f32;
        let mut summary = EsdfSummary::default();
        for block in &mut self.blocks {
            for (t, e) in block.tsdf.iter().zip(block.esdf.iter_mut()) {
                e.observed = t.observed();
                if e.observed {
                    e.fixed_by_policy = false;
                    e.policy_occupied = false;
                }
                e.site = [NO_SITE; 3];
                if !e.known() {
                    e.distance = -vs;
                    continue;
                }
                summary.known_voxels += 1;
                let obstacle = if e.observed {
                    t.occupied()
                } else {
                    e.policy_occupied
                };
                if obstacle {
                    e.distance = -vs;
                    e.site = [0; 3];
                    summary.obstacle_voxels += 1;
                } else {
                    e.distance = max;
                }
            }
        }

        // Seed every free voxel touching an obstacle with its best neighbor.
        let mut heap = WaveHeap::new();
        for slot in 0..self.blocks.len() as u32 {
            for local in 0..VOXELS_PER_BLOCK {
                if !self.blocks[slot as usize].esdf[local].is_free() {
                    continue;
                }
                let mut best: Option<(u32, [i8; 3])> = None;
                for d in OFFSETS26 {
                    if let Some((ns, nl)) = self.neighbor(slot, local, d) {
                        if self.blocks[ns as usize].esdf[nl].is_obstacle() {
                            let site = [d[0] as i8, d[1] as i8, d[2] as i8];
                            let n2 = site_norm2(site);
                            if best.is_none_or(|(b, _)| n2 < b) {
                                best = Some((n2, site));
                            }
                        }
                    }
                }
                if let Some((n2, site)) = best {
                    let e = &mut self.blocks[slot as usize].esdf[local];
                    e.site = site;
                    e.distance = (n2 as f32).sqrt() * vs;
                    heap.push(Reverse((n2, slot, local as u32)));
                }
            }
        }
        self.propagate(heap);
        summary.reached_voxels = self
            .blocks
            .iter()
            .flat_map(|b| b.esdf.iter())
            .filter(|e| e.is_free() && e.site[0] != NO_SITE)
            .count();
        summary
    }

    /// Lowering wave: relaxes known free voxels from the queued voxels, only
    /// ever decreasing distances.
    pub(crate) fn propagate(&mut self, mut heap: WaveHeap) {
        let vs = self.config.voxel_size as f32;
        let max_vox = self.config.esdf_max_distance / self.config.voxel_size;
        let max2 = (max_vox * max_vox).floor() as u32;
        while let Some(Reverse((n2, slot, local))) = heap.pop() {
            let site = self.blocks[slot as usize].esdf[local as usize].site;
            if site[0] == NO_SITE || site_norm2(site) != n2 {
                continue;
            }
            for d in OFFSETS26 {
                let Some((ns, nl)) = self.neighbor(slot, local as usize, d) else {
                    continue;
                };
                let n = &mut self.blocks[ns as usize].esdf[nl];
                if !n.is_free() {
                    continue;
                }
                let cand = [
                    site[0] as i32 - d[0],
                    site[1] as i32 - d[1],
                    site[2] as i32 - d[2],
                ];
                let c2 = (cand[0] * cand[0] + cand[1] * cand[1] + cand[2] * cand[2]) as u32;
                if c2 > max2 {
                    continue;
                }
                let current = if n.site[0] == NO_SITE {
                    u32::MAX
                } else {
                    site_norm2(n.site)
                };
                if c2 < current {
                    n.site = [cand[0] as i8, cand[1] as i8, cand[2] as i8];
                    n.distance = (c2 as f32).sqrt() * vs;
                    heap.push(Reverse((c2, ns, nl as u32)));
                }
            }
        }
    }
}
