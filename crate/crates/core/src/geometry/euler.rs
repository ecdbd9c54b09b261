//! Euler characteristic of a binary lattice set.
//!
//! The complex has one vertex per member site, one edge per face-adjacent
//! pair of members, one square per 2x2 block of members and (in 3-D) one cube
//! per 2x2x2 block. This is the complex whose connectivity is face adjacency
//! for the set and full adjacency for its complement, so in 2-D
//! `chi = #4-components - #8-connected holes`.

use crate::lattice::SiteBox;

const AXES: [[i64; 3]; 3] = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];

#[inline]
fn add(p: [i64; 3], q: [i64; 3]) -> [i64; 3] {
    [p[0] + q[0], p[1] + q[1], p[2] + q[2]]
}

/// Cells of the complex whose lowest corner is `p`, with alternating signs.
/// Summing over all sites gives `chi`; summing over a region gives that
/// region's additive share.
#[inline]
pub fn local_contribution(dim: usize, p: [i64; 3], member: &impl Fn([i64; 3]) -> bool) -> i64 {
    if !member(p) {
        return 0;
    }
    let mut chi = 1i64;
    let mut edge = [false; 3];
    for k in 0..dim {
        edge[k] = member(add(p, AXES[k]));
        if edge[k] {
            chi -= 1;
        }
    }
    let mut square = [[false; 3]; 3];
    for a in 0..dim {
        for b in (a + 1)..dim {
            if edge[a] && edge[b] && member(add(add(p, AXES[a]), AXES[b])) {
                square[a][b] = true;
                chi += 1;
            }
        }
    }
    if dim == 3
        && square[0][1]
        && square[0][2]
        && square[1][2]
        && member(add(add(add(p, AXES[0]), AXES[1]), AXES[2]))
    {
        chi -= 1;
    }
    chi
}

/// `chi` of the member sites of `region` (non-members outside it).
pub fn euler_characteristic(region: SiteBox, member: impl Fn([i64; 3]) -> bool) -> i64 {
    let inside = |p: [i64; 3]| region.contains(p) && member(p);
    region
        .points()
        .map(|p| local_contribution(region.dim, p, &inside))
        .sum()
}
