//! Brute-force reference implementations for 2-D binary masks.
//!
//! These use recursive flood fill and explicit hole counting, sharing no
//! code with the union-find labeling or the cubical Euler characteristic.

use crate::lattice::SiteBox;
use crate::rng::CounterRng;

use super::euler::euler_characteristic;
use super::labeling::{label_components, BACKGROUND};

/// A row-major `width x height` binary image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask2 {
    pub width: usize,
    pub height: usize,
    pub cells: Vec<bool>,
}

impl Mask2 {
    pub fn random(width: usize, height: usize, rng: &mut CounterRng) -> Self {
        let density = 0.2 + 0.6 * rng.next_f64();
        let cells = (0..width * height)
            .map(|_| rng.next_f64() < density)
            .collect();
        Mask2 {
            width,
            height,
            cells,
        }
    }

    #[inline]
    pub fn get(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.cells[y as usize * self.width + x as usize]
    }
}

fn flood(
    mask: &Mask2,
    want: bool,
    x: i64,
    y: i64,
    label: usize,
    out: &mut [Option<usize>],
    neighbours: &[(i64, i64)],
) {
    if x < 0 || y < 0 || x as usize >= mask.width || y as usize >= mask.height {
        return;
    }
    let i = y as usize * mask.width + x as usize;
    if mask.cells[i] != want || out[i].is_some() {
        return;
    }
    out[i] = Some(label);
    for &(dx, dy) in neighbours {
        flood(mask, want, x + dx, y + dy, label, out, neighbours);
    }
}

const FOUR: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
const EIGHT: [(i64, i64); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

/// 4-connected foreground components by recursive flood fill.
pub fn flood_fill_labels(mask: &Mask2) -> (Vec<Option<usize>>, usize) {
    let mut out = vec![None; mask.cells.len()];
    let mut count = 0;
    for y in 0..mask.height as i64 {
        for x in 0..mask.width as i64 {
            let i = y as usize * mask.width + x as usize;
            if mask.cells[i] && out[i].is_none() {
                flood(mask, true, x, y, count, &mut out, &FOUR);
                count += 1;
            }
        }
    }
    (out, count)
}

/// 8-connected background components that do not reach the image border.
pub fn count_holes(mask: &Mask2) -> usize {
    // Pad with a background frame so every unbounded background piece is
    // joined into the frame's component.
    let padded = Mask2 {
        width: mask.width + 2,
        height: mask.height + 2,
        cells: (0..(mask.width + 2) * (mask.height + 2))
            .map(|i| {
                let x = (i % (mask.width + 2)) as i64 - 1;
                let y = (i / (mask.width + 2)) as i64 - 1;
                mask.get(x, y)
            })
            .collect(),
    };
    let mut out = vec![None; padded.cells.len()];
    let mut count = 0;
    for y in 0..padded.height as i64 {
        for x in 0..padded.width as i64 {
            let i = y as usize * padded.width + x as usize;
            if !padded.cells[i] && out[i].is_none() {
                flood(&padded, false, x, y, count, &mut out, &EIGHT);
                count += 1;
            }
        }
    }
    // Component 0 contains the frame corner (0, 0).
    count - 1
}

/// True when the two labelings induce the same partition.
pub fn same_partition(a: &[u32], b: &[Option<usize>]) -> bool {
    use std::collections::HashMap;
    if a.len() != b.len() {
        return false;
    }
    let mut fwd: HashMap<u32, usize> = HashMap::new();
    let mut back: HashMap<usize, u32> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        match (x == BACKGROUND, y) {
            (true, None) => {}
            (false, Some(y)) => {
                if *fwd.entry(x).or_insert(y) != y || *back.entry(y).or_insert(x) != x {
                    return false;
                }
            }
            _ => return false,
        }
    }
    true
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OracleTally {
    pub trials: usize,
    pub label_failures: usize,
    pub euler_failures: usize,
}

impl OracleTally {
    pub fn passed(&self) -> bool {
        self.label_failures == 0 && self.euler_failures == 0
    }
}

/// Checks union-find labels and the cubical Euler characteristic against
/// the brute-force oracles on `trials` random masks.
pub fn run_mask_suite(trials: usize, width: usize, height: usize, seed: u64) -> OracleTally {
    let mut rng = CounterRng::new(seed);
    let grid = SiteBox::new(2, [0, 0, 0], [width, height, 1]);
    let mut tally = OracleTally {
        trials,
        ..Default::default()
    };
    for _ in 0..trials {
        let mask = Mask2::random(width, height, &mut rng);
        // SiteBox axis 0 is x, so the flat layout matches row-major (y, x).
        let fast = label_components(grid, &mask.cells);
        let (slow, slow_count) = flood_fill_labels(&mask);
        if fast.count != slow_count || !same_partition(&fast.labels, &slow) {
            tally.label_failures += 1;
        }
        let chi = euler_characteristic(grid, |p| mask.get(p[0], p[1]));
        if chi != slow_count as i64 - count_holes(&mask) as i64 {
            tally.euler_failures += 1;
        }
    }
    tally
}
