use crate::field::{BoxGeometry, FieldSample};
use crate::lattice::SiteBox;

use super::union_find::UnionFind;

/// Label of a background site.
pub const BACKGROUND: u32 = u32::MAX;

/// Which foreground components count as "selected".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Components connected to the outer boundary of `Lambda_{(1+eps)n}`.
    Finitary,
    /// Every foreground site (the total excursion set).
    Full,
}

/// Connected components of a binary mask under face adjacency
/// (4-adjacency in 2-D, 6-adjacency in 3-D).
#[derive(Debug, Clone)]
pub struct ComponentLabels {
    pub labels: Vec<u32>,
    pub count: usize,
}

/// Raster-scan union-find labeling. Labels are numbered in order of first
/// appearance in the flat layout.
pub fn label_components(grid: SiteBox, mask: &[bool]) -> ComponentLabels {
    assert_eq!(mask.len(), grid.size());
    let mut uf = UnionFind::new(grid.size());
    for idx in 0..grid.size() {
        if !mask[idx] {
            continue;
        }
        let p = grid.point_of(idx);
        for (k, &c) in p.iter().enumerate().take(grid.dim) {
            if c > grid.lo[k] {
                let prev = idx - grid.stride(k);
                if mask[prev] {
                    uf.union(idx as u32, prev as u32);
                }
            }
        }
    }
    let mut root_label = vec![BACKGROUND; grid.size()];
    let mut labels = vec![BACKGROUND; grid.size()];
    let mut count = 0u32;
    for idx in 0..grid.size() {
        if !mask[idx] {
            continue;
        }
        let root = uf.find(idx as u32) as usize;
        if root_label[root] == BACKGROUND {
            root_label[root] = count;
            count += 1;
        }
        labels[idx] = root_label[root];
    }
    ComponentLabels {
        labels,
        count: count as usize,
    }
}

/// Excursion set `{f >= level}` on `Lambda_{(1+eps)n}` with its components.
#[derive(Debug, Clone)]
pub struct LabeledExcursion {
    level: f64,
    geometry: BoxGeometry,
    selection: Selection,
    labels: Vec<u32>,
    component_count: usize,
    boundary_touching: Vec<bool>,
}

/// Labels `{f >= level}` and marks components touching `∂Lambda_{(1+eps)n}`.
pub fn label_excursion(field: &FieldSample, level: f64) -> LabeledExcursion {
    label_with_selection(field, level, Selection::Finitary)
}

pub fn label_with_selection(
    field: &FieldSample,
    level: f64,
    selection: Selection,
) -> LabeledExcursion {
    let grid = field.grid();
    let mask: Vec<bool> = field.values().iter().map(|&v| v >= level).collect();
    let ComponentLabels { labels, count } = label_components(grid, &mask);
    let mut boundary_touching = vec![false; count];
    for (idx, &l) in labels.iter().enumerate() {
        if l != BACKGROUND && !boundary_touching[l as usize] && grid.on_boundary(grid.point_of(idx))
        {
            boundary_touching[l as usize] = true;
        }
    }
    LabeledExcursion {
        level,
        geometry: *field.geometry(),
        selection,
        labels,
        component_count: count,
        boundary_touching,
    }
}

impl LabeledExcursion {
    pub fn level(&self) -> f64 {
        self.level
    }
    pub fn geometry(&self) -> &BoxGeometry {
        &self.geometry
    }
    pub fn grid(&self) -> SiteBox {
        self.geometry.grid()
    }
    pub fn selection(&self) -> Selection {
        self.selection
    }
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }
    pub fn component_count(&self) -> usize {
        self.component_count
    }
    pub fn boundary_touching(&self) -> &[bool] {
        &self.boundary_touching
    }

    /// The same labeling under a different selection rule.
    pub fn with_selection(mut self, selection: Selection) -> Self {
        self.selection = selection;
        self
    }

    pub fn mask(&self) -> Vec<bool> {
        self.labels.iter().map(|&l| l != BACKGROUND).collect()
    }

    #[inline]
    pub fn label_at(&self, p: [i64; 3]) -> u32 {
        let g = self.grid();
        if g.contains(p) {
            self.labels[g.index_of(p)]
        } else {
            BACKGROUND
        }
    }

    #[inline]
    pub fn is_foreground(&self, p: [i64; 3]) -> bool {
        self.label_at(p) != BACKGROUND
    }

    /// Foreground and belonging to a selected component, anywhere in the grid.
    #[inline]
    pub fn in_selected_component(&self, p: [i64; 3]) -> bool {
        let l = self.label_at(p);
        l != BACKGROUND
            && match self.selection {
                Selection::Full => true,
                Selection::Finitary => self.boundary_touching[l as usize],
            }
    }

    /// Member of `{f >= level}_{n,eps}` (or of the full set inside `Lambda_n`).
    #[inline]
    pub fn is_selected(&self, p: [i64; 3]) -> bool {
        self.geometry.in_inner(p) && self.in_selected_component(p)
    }

    /// Sites of `Lambda_n`.
    pub fn inner_box(&self) -> SiteBox {
        let g = &self.geometry;
        let side = (2 * g.inner_sites) as usize;
        SiteBox::new(g.dim, [-g.inner_sites; 3], [side; 3])
    }

    pub fn selected_count(&self) -> usize {
        self.inner_box()
            .points()
            .filter(|&p| self.is_selected(p))
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid8() -> SiteBox {
        SiteBox::new(2, [0, 0, 0], [8, 8, 1])
    }

    #[test]
    fn diagonal_sites_are_separate_components() {
        let g = grid8();
        let mut mask = vec![false; 64];
        mask[g.index_of([2, 2, 0])] = true;
        mask[g.index_of([3, 3, 0])] = true;
        assert_eq!(label_components(g, &mask).count, 2);
        mask[g.index_of([3, 2, 0])] = true;
        assert_eq!(label_components(g, &mask).count, 1);
    }

    #[test]
    fn u_shape_merges_late() {
        let g = grid8();
        let mut mask = vec![false; 64];
        for y in 0..5 {
            mask[g.index_of([1, y, 0])] = true;
            mask[g.index_of([5, y, 0])] = true;
        }
        for x in 1..6 {
            mask[g.index_of([x, 4, 0])] = true;
        }
        let l = label_components(g, &mask);
        assert_eq!(l.count, 1);
    }

    #[test]
    fn low_level_selects_everything_high_level_nothing() {
        let f = FieldSample::from_fn(2, 2.0, 0.25, 0.25, |x| x[0].sin() + x[1]).unwrap();
        let lo = label_excursion(&f, -1e9);
        assert_eq!(lo.component_count(), 1);
        assert_eq!(lo.selected_count(), 256);
        let hi = label_excursion(&f, 1e9);
        assert_eq!(hi.component_count(), 0);
        assert_eq!(hi.selected_count(), 0);
    }

    #[test]
    fn interior_blob_is_not_selected() {
        // A bump centred at the origin: its superlevel set is a disk away
        // from the outer boundary.
        let f =
            FieldSample::from_fn(2, 4.0, 0.5, 0.25, |x| 1.0 - (x[0] * x[0] + x[1] * x[1])).unwrap();
        let lab = label_excursion(&f, 0.0);
        assert_eq!(lab.component_count(), 1);
        assert_eq!(lab.selected_count(), 0);
        let full = lab.with_selection(Selection::Full);
        assert!(full.selected_count() > 0);
    }
}
