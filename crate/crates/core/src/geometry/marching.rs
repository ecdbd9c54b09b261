//! Marching-squares level-set length on a 2-D lattice.

use crate::field::FieldSample;

use super::labeling::LabeledExcursion;

/// Corners in counter-clockwise order starting at the lower-left site.
const CORNERS: [[i64; 2]; 4] = [[0, 0], [1, 0], [1, 1], [0, 1]];

/// Length of the selected part of `{f = level}` inside the cell whose
/// lower-left site is `p`.
///
/// Crossings are placed by linear interpolation of `f - level` along cell
/// edges. In a saddle cell the sign of the mean of the four corner values
/// decides which diagonal pair is joined. A segment counts when one of the
/// foreground corners it cuts off from the background belongs to a selected
/// component.
pub fn cell_length(field: &FieldSample, lab: &LabeledExcursion, p: [i64; 3]) -> f64 {
    let level = lab.level();
    let mut g = [0.0f64; 4];
    let mut fg = [false; 4];
    let mut sel = [false; 4];
    for (c, off) in CORNERS.iter().enumerate() {
        let q = [p[0] + off[0], p[1] + off[1], 0];
        g[c] = field.at(q) - level;
        fg[c] = g[c] >= 0.0;
        sel[c] = fg[c] && lab.in_selected_component(q);
    }
    if !sel.iter().any(|&s| s) {
        return 0.0;
    }

    // Crossing point on edge c -> c+1, in lattice units relative to p.
    let crossing = |c: usize| -> Option<[f64; 2]> {
        let d = (c + 1) % 4;
        if fg[c] == fg[d] {
            return None;
        }
        let t = g[c] / (g[c] - g[d]);
        let a = CORNERS[c];
        let b = CORNERS[d];
        Some([
            a[0] as f64 + t * (b[0] - a[0]) as f64,
            a[1] as f64 + t * (b[1] - a[1]) as f64,
        ])
    };
    let dist = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    let h = field.spacing();

    let crossed: Vec<usize> = (0..4).filter(|&c| fg[c] != fg[(c + 1) % 4]).collect();
    match crossed.len() {
        2 => {
            // Foreground corners are contiguous around the cell, so they lie
            // in one face-connected component.
            let owner = (0..4)
                .find(|&c| fg[c])
                .expect("crossing implies a foreground corner");
            if sel[owner] {
                let a = crossing(crossed[0]).unwrap();
                let b = crossing(crossed[1]).unwrap();
                dist(a, b) * h
            } else {
                0.0
            }
        }
        4 => {
            let centre = g.iter().sum::<f64>() / 4.0;
            // Cut off every corner of the minority side of the centre: the
            // corner `c` is bounded by edges c-1 -> c and c -> c+1.
            let cut_fg = centre < 0.0;
            let mut total = 0.0;
            for c in 0..4 {
                if fg[c] != cut_fg {
                    continue;
                }
                let prev = (c + 3) % 4;
                let counted = if cut_fg {
                    sel[c]
                } else {
                    sel[prev] || sel[(c + 1) % 4]
                };
                if counted {
                    let a = crossing(prev).unwrap();
                    let b = crossing(c).unwrap();
                    total += dist(a, b) * h;
                }
            }
            total
        }
        _ => 0.0,
    }
}
