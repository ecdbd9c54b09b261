//! Rectangular site boxes and an axis-by-axis n-d FFT.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

/// An axis-aligned box of lattice sites in absolute integer coordinates.
///
/// Axis 0 varies fastest in the flat layout. Unused axes (`k >= dim`) have
/// length 1 and origin 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiteBox {
    pub dim: usize,
    pub lo: [i64; 3],
    pub len: [usize; 3],
}

impl SiteBox {
    pub fn new(dim: usize, lo: [i64; 3], len: [usize; 3]) -> Self {
        let mut b = SiteBox { dim, lo, len };
        for k in dim..3 {
            b.lo[k] = 0;
            b.len[k] = 1;
        }
        b
    }

    /// Sites `[-half, half]` on every axis.
    pub fn centered(dim: usize, half: i64) -> Self {
        let side = (2 * half + 1) as usize;
        SiteBox::new(dim, [-half; 3], [side; 3])
    }

    pub fn size(&self) -> usize {
        self.len[0] * self.len[1] * self.len[2]
    }

    #[inline]
    pub fn hi(&self, axis: usize) -> i64 {
        self.lo[axis] + self.len[axis] as i64 - 1
    }

    #[inline]
    pub fn contains(&self, p: [i64; 3]) -> bool {
        (0..3).all(|k| p[k] >= self.lo[k] && p[k] <= self.hi(k))
    }

    #[inline]
    pub fn index_of(&self, p: [i64; 3]) -> usize {
        let i = (p[0] - self.lo[0]) as usize;
        let j = (p[1] - self.lo[1]) as usize;
        let k = (p[2] - self.lo[2]) as usize;
        i + self.len[0] * (j + self.len[1] * k)
    }

    #[inline]
    pub fn point_of(&self, idx: usize) -> [i64; 3] {
        let i = idx % self.len[0];
        let r = idx / self.len[0];
        let j = r % self.len[1];
        let k = r / self.len[1];
        [
            self.lo[0] + i as i64,
            self.lo[1] + j as i64,
            self.lo[2] + k as i64,
        ]
    }

    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => 1,
            1 => self.len[0],
            _ => self.len[0] * self.len[1],
        }
    }

    /// True when `p` lies on the outer face of the box in some used axis.
    #[inline]
    pub fn on_boundary(&self, p: [i64; 3]) -> bool {
        (0..self.dim).any(|k| p[k] == self.lo[k] || p[k] == self.hi(k))
    }

    pub fn points(&self) -> impl Iterator<Item = [i64; 3]> + '_ {
        (0..self.size()).map(move |idx| self.point_of(idx))
    }
}

/// Forward/inverse FFT plans for a fixed n-d shape.
#[derive(Clone)]
pub struct FftNd {
    dims: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for FftNd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftNd").field("dims", &self.dims).finish()
    }
}

impl FftNd {
    pub fn new(dims: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        FftNd {
            dims: dims.to_vec(),
            forward: dims.iter().map(|&n| planner.plan_fft_forward(n)).collect(),
            inverse: dims.iter().map(|&n| planner.plan_fft_inverse(n)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Unnormalized transform in place (axis 0 fastest).
    pub fn process(&self, data: &mut [Complex64], direction: FftDirection) {
        assert_eq!(data.len(), self.len());
        let plans = match direction {
            FftDirection::Forward => &self.forward,
            FftDirection::Inverse => &self.inverse,
        };
        let mut stride = 1usize;
        for (axis, &n) in self.dims.iter().enumerate() {
            let plan = &plans[axis];
            let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
            if stride == 1 {
                for line in data.chunks_exact_mut(n) {
                    plan.process_with_scratch(line, &mut scratch);
                }
            } else {
                let block = stride * n;
                let mut line = vec![Complex64::default(); n];
                for chunk in data.chunks_exact_mut(block) {
                    for offset in 0..stride {
                        for (t, slot) in line.iter_mut().enumerate() {
                            *slot = chunk[offset + t * stride];
                        }
                        plan.process_with_scratch(&mut line, &mut scratch);
                        for (t, v) in line.iter().enumerate() {
                            chunk[offset + t * stride] = *v;
                        }
                    }
                }
            }
            stride *= n;
        }
    }
}

/// Smallest integer `>= n` whose prime factors are all in {2, 3, 5, 7}.
pub fn fft_friendly_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5, 7] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}
