use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::arch::{Architecture, Site};
use crate::compiler::Region;
use crate::error::{Error, Result};

/// How the per-circuit bounding box is sized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoxMode {
    /// Square box, ceil(sqrt(n)) on each side.
    #[default]
    Loose,
    /// ceil(sqrt(n)) rows by ceil(n / ceil(sqrt(n))) columns.
    Tight,
}

impl fmt::Display for BoxMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoxMode::Loose => "loose",
            BoxMode::Tight => "tight",
        })
    }
}

impl FromStr for BoxMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "loose" => Ok(BoxMode::Loose),
            "tight" => Ok(BoxMode::Tight),
            other => Err(Error::InvalidStrategy(format!(
                "box mode must be loose or tight, got '{other}'"
            ))),
        }
    }
}

fn ceil_sqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r < n {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= n {
        r -= 1;
    }
    r
}

/// (height, width) of the box holding an `n_qubits` circuit.
pub fn bounding_box(n_qubits: usize, mode: BoxMode) -> (usize, usize) {
    let side = ceil_sqrt(n_qubits.max(1));
    match mode {
        BoxMode::Loose => (side, side),
        BoxMode::Tight => (side, n_qubits.max(1).div_ceil(side)),
    }
}

/// Sections of the array a circuit can be confined to, visited in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TilePlan {
    pub box_height: usize,
    pub box_width: usize,
    pub tiles: Vec<Region>,
    visited: Vec<bool>,
}

fn anchors(extent: usize, size: usize) -> Vec<usize> {
    (0..extent.div_ceil(size))
        .map(|k| (k * size).min(extent - size))
        .collect()
}

impl TilePlan {
    /// Tiles a `height` x `width` box across the array at box-sized strides;
    /// the last tile on each axis is pulled back to the edge and overlaps its
    /// predecessor when the box does not divide the array.
    pub fn with_box(arch: &Architecture, height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 || height > arch.rows() || width > arch.cols() {
            return Err(Error::CircuitTooLarge {
                height,
                width,
                rows: arch.rows(),
                cols: arch.cols(),
            });
        }
        let mut tiles = Vec::new();
        for r in anchors(arch.rows(), height) {
            for c in anchors(arch.cols(), width) {
                tiles.push(Region::new(arch, Site::new(r, c), height, width)?);
            }
        }
        let visited = vec![false; tiles.len()];
        Ok(Self {
            box_height: height,
            box_width: width,
            tiles,
            visited,
        })
    }

    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    pub fn is_visited(&self, tile: usize) -> bool {
        self.visited[tile]
    }

    pub fn mark_visited(&mut self, tile: usize) {
        self.visited[tile] = true;
    }

    pub fn visited_count(&self) -> usize {
        self.visited.iter().filter(|&&v| v).count()
    }

    /// Forget all visits; happens on a true reload.
    pub fn reset(&mut self) {
        self.visited.iter_mut().for_each(|v| *v = false);
    }

    /// Unvisited tiles in row-major order.
    pub fn unvisited(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.tiles.len()).filter(|&i| !self.visited[i])
    }

    /// Greedy row-major choice of `k` pairwise disjoint tiles.
    pub fn disjoint_tiles(&self, k: usize) -> Option<Vec<usize>> {
        let mut chosen: Vec<usize> = Vec::with_capacity(k);
        for i in 0..self.tiles.len() {
            if chosen.len() == k {
                break;
            }
            if chosen.iter().all(|&j| !self.tiles[i].overlaps(&self.tiles[j])) {
                chosen.push(i);
            }
        }
        (chosen.len() == k).then_some(chosen)
    }

    /// Size of the largest greedy disjoint selection.
    pub fn max_disjoint(&self) -> usize {
        (1..=self.tiles.len())
            .take_while(|&k| self.disjoint_tiles(k).is_some())
            .last()
            .unwrap_or(0)
    }
}

/// Tile plan for the circuit's bounding box.
pub fn make_tile_plan(arch: &Architecture, n_qubits: usize, mode: BoxMode) -> Result<TilePlan> {
    let (h, w) = bounding_box(n_qubits, mode);
    TilePlan::with_box(arch, h, w)
}

/// Tile plan with room for `instances` concurrent, non-overlapping copies.
///
/// Uses the mode's bounding box when it packs enough disjoint tiles;
/// otherwise falls back to the smallest box (closest to the mode's shape)
/// that does.
pub fn parallel_plan(
    arch: &Architecture,
    n_qubits: usize,
    mode: BoxMode,
    instances: usize,
) -> Result<TilePlan> {
    if instances == 0 {
        return Err(Error::InvalidStrategy("need at least one instance".into()));
    }
    let preferred = make_tile_plan(arch, n_qubits, mode)?;
    if preferred.disjoint_tiles(instances).is_some() {
        return Ok(preferred);
    }
    let (ph, pw) = (preferred.box_height, preferred.box_width);
    let best = best_packing(arch, n_qubits, instances, (ph, pw));
    match best {
        Some((h, w)) => TilePlan::with_box(arch, h, w),
        None => Err(Error::NotEnoughDisjointTiles {
            requested: instances,
            available: max_instances(arch, n_qubits),
        }),
    }
}

fn packing(arch: &Architecture, h: usize, w: usize) -> usize {
    (arch.rows() / h) * (arch.cols() / w)
}

fn best_packing(
    arch: &Architecture,
    n: usize,
    at_least: usize,
    shape: (usize, usize),
) -> Option<(usize, usize)> {
    (1..=arch.rows())
        .map(|h| (h, n.div_ceil(h)))
        .filter(|&(h, w)| w <= arch.cols() && packing(arch, h, w) >= at_least)
        .min_by_key(|&(h, w)| (h * w, h.abs_diff(shape.0) + w.abs_diff(shape.1), h))
}

/// Most disjoint copies of an `n`-qubit box the array can hold.
pub fn max_instances(arch: &Architecture, n: usize) -> usize {
    (1..=arch.rows())
        .filter(|&h| n.div_ceil(h) <= arch.cols())
        .map(|h| packing(arch, h, n.div_ceil(h)))
        .max()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boxes() {
        assert_eq!(bounding_box(6, BoxMode::Tight), (3, 2));
        assert_eq!(bounding_box(6, BoxMode::Loose), (3, 3));
        assert_eq!(bounding_box(9, BoxMode::Tight), (3, 3));
        assert_eq!(bounding_box(9, BoxMode::Loose), (3, 3));
        assert_eq!(bounding_box(10, BoxMode::Tight), (4, 3));
        assert_eq!(bounding_box(30, BoxMode::Tight), (6, 5));
        assert_eq!(bounding_box(1, BoxMode::Loose), (1, 1));
        for n in 1..200 {
            let (h, w) = bounding_box(n, BoxMode::Tight);
            assert!(h * w >= n);
            assert_eq!(h, ceil_sqrt(n));
        }
    }

    #[test]
    fn three_by_two_on_ten_by_ten() {
        let arch = Architecture::new_grid(10, 10, 4.0).unwrap();
        let plan = TilePlan::with_box(&arch, 3, 2).unwrap();
        assert_eq!(plan.len(), 20);
        let mut rows: Vec<_> = plan.tiles.iter().map(|t| t.origin.row).collect();
        rows.dedup();
        assert_eq!(rows, vec![0, 3, 6, 7]);
        let cols: Vec<_> = plan.tiles[..5].iter().map(|t| t.origin.col).collect();
        assert_eq!(cols, vec![0, 2, 4, 6, 8]);
    }

    #[test]
    fn whole_array_and_near_whole_boxes() {
        let arch = Architecture::new_grid(10, 10, 4.0).unwrap();
        assert_eq!(TilePlan::with_box(&arch, 10, 10).unwrap().len(), 1);
        let big = make_tile_plan(&arch, 90, BoxMode::Tight).unwrap();
        assert_eq!((big.box_height, big.box_width), (10, 9));
        assert_eq!(big.len(), 2);
        let loose = make_tile_plan(&arch, 90, BoxMode::Loose).unwrap();
        assert_eq!((loose.box_height, loose.box_width), (10, 10));
        assert!(matches!(
            make_tile_plan(&arch, 101, BoxMode::Loose),
            Err(Error::CircuitTooLarge { .. })
        ));
    }

    #[test]
    fn nine_by_ten_box() {
        let arch = Architecture::new_grid(10, 10, 4.0).unwrap();
        let plan = TilePlan::with_box(&arch, 9, 10).unwrap();
        assert_eq!(plan.len(), 2);
        assert!(plan.tiles[0].overlaps(&plan.tiles[1]));
    }

    #[test]
    fn visiting() {
        let arch = Architecture::new_grid(6, 6, 2.0).unwrap();
        let mut plan = make_tile_plan(&arch, 9, BoxMode::Tight).unwrap();
        assert_eq!(plan.len(), 4);
        plan.mark_visited(0);
        plan.mark_visited(2);
        assert_eq!(plan.unvisited().collect::<Vec<_>>(), vec![1, 3]);
        plan.reset();
        assert_eq!(plan.visited_count(), 0);
    }

    #[test]
    fn parallel_plans() {
        let arch = Architecture::new_grid(10, 10, 4.0).unwrap();
        let two = parallel_plan(&arch, 10, BoxMode::Tight, 2).unwrap();
        assert_eq!((two.box_height, two.box_width), (4, 3));
        let three = parallel_plan(&arch, 30, BoxMode::Tight, 3).unwrap();
        assert_eq!(three.box_height * three.box_width, 30);
        assert_eq!(three.disjoint_tiles(3).unwrap().len(), 3);
        assert_eq!(max_instances(&arch, 30), 3);
        assert!(matches!(
            parallel_plan(&arch, 30, BoxMode::Tight, 4),
            Err(Error::NotEnoughDisjointTiles { requested: 4, available: 3 })
        ));
    }
}
