//! Dense cell list over a box for fixed-range neighbour queries.

use crate::model::Window;

const MAX_CELLS: usize = 1 << 20;

/// Uniform cell list over a window. Stores point ids; coordinates live with the caller.
///
/// Cells are at least `min_cell` wide along every axis, so every point within `min_cell`
/// of a query location sits in one of the `3^d` surrounding cells.
#[derive(Debug, Clone)]
pub struct GridIndex {
    dim: usize,
    origin: Vec<f64>,
    cell: Vec<f64>,
    side: Vec<f64>,
    shape: Vec<usize>,
    strides: Vec<usize>,
    periodic: bool,
    offsets: Vec<isize>,
    cells: Vec<Vec<u32>>,
}

impl GridIndex {
    pub fn new(window: &Window, min_cell: f64, periodic: bool) -> Self {
        let dim = window.dim();
        let axis_cap = ((MAX_CELLS as f64).powf(1.0 / dim.max(1) as f64).floor() as usize).max(1);
        let mut shape = Vec::with_capacity(dim);
        let mut cell = Vec::with_capacity(dim);
        let mut side = Vec::with_capacity(dim);
        for a in 0..dim {
            let s = window.side(a);
            let mut n = if min_cell > 0.0 {
                ((s / min_cell).floor() as usize).clamp(1, axis_cap)
            } else {
                axis_cap
            };
            // wrapped -1/0/+1 cells must be distinct
            if periodic && n < 3 {
                n = 1;
            }
            shape.push(n);
            cell.push(s / n as f64);
            side.push(s);
        }
        let mut strides = vec![1usize; dim];
        for a in 1..dim {
            strides[a] = strides[a - 1] * shape[a - 1];
        }
        let total: usize = shape.iter().product();
        let single: Vec<bool> = shape.iter().map(|&n| n == 1).collect();
        Self {
            dim,
            origin: window.lower().to_vec(),
            cell,
            side,
            shape,
            strides,
            periodic,
            offsets: neighbour_offsets(dim, &single),
            cells: vec![Vec::new(); total],
        }
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    fn coord(&self, x: &[f64], a: usize) -> usize {
        let c = ((x[a] - self.origin[a]) / self.cell[a]).floor();
        if c <= 0.0 {
            0
        } else {
            (c as usize).min(self.shape[a] - 1)
        }
    }

    fn cell_of(&self, x: &[f64]) -> usize {
        (0..self.dim).map(|a| self.coord(x, a) * self.strides[a]).sum()
    }

    pub fn insert(&mut self, id: u32, x: &[f64]) {
        let c = self.cell_of(x);
        self.cells[c].push(id);
    }

    /// Removes `id`, which must have been inserted at `x`.
    pub fn remove(&mut self, id: u32, x: &[f64]) {
        let c = self.cell_of(x);
        let v = &mut self.cells[c];
        let pos = v.iter().position(|&i| i == id).expect("id present in its cell");
        v.swap_remove(pos);
    }

    /// Renames `old` to `new` for a point stored at `x`.
    pub fn relabel(&mut self, old: u32, new: u32, x: &[f64]) {
        let c = self.cell_of(x);
        let slot = self.cells[c]
            .iter_mut()
            .find(|i| **i == old)
            .expect("id present in its cell");
        *slot = new;
    }

    pub fn clear(&mut self) {
        for c in &mut self.cells {
            c.clear();
        }
    }

    /// Squared distance, minimum-image when periodic.
    #[inline]
    pub fn dist_sq(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut s = 0.0;
        for k in 0..self.dim {
            let mut d = (a[k] - b[k]).abs();
            if self.periodic && d > 0.5 * self.side[k] {
                d = self.side[k] - d;
            }
            s += d * d;
        }
        s
    }

    /// Calls `f(id)` for every stored id in the cells adjacent to `x` (a superset of the
    /// points within one cell width).
    #[inline]
    pub fn for_each_candidate<F: FnMut(u32)>(&self, x: &[f64], mut f: F) {
        let dim = self.dim;
        let mut base = [0usize; 8];
        let mut base_vec;
        let base: &mut [usize] = if dim <= 8 {
            &mut base[..dim]
        } else {
            base_vec = vec![0usize; dim];
            &mut base_vec
        };
        for (a, b) in base.iter_mut().enumerate() {
            *b = self.coord(x, a);
        }
        'outer: for off in self.offsets.chunks_exact(dim) {
            let mut idx = 0usize;
            for a in 0..dim {
                let n = self.shape[a] as isize;
                let mut c = base[a] as isize + off[a];
                if c < 0 || c >= n {
                    if !self.periodic {
                        continue 'outer;
                    }
                    c = c.rem_euclid(n);
                }
                idx += c as usize * self.strides[a];
            }
            for &id in &self.cells[idx] {
                f(id);
            }
        }
    }

    /// Calls `f(id, squared distance)` for stored points within `radius` of `x`, where
    /// `radius` does not exceed the cell width. `coords` is the caller's flat storage.
    #[inline]
    pub fn for_each_within<F: FnMut(u32, f64)>(&self, x: &[f64], radius: f64, coords: &[f64], mut f: F) {
        let r2 = radius * radius;
        let dim = self.dim;
        self.for_each_candidate(x, |id| {
            let i = id as usize * dim;
            let d2 = self.dist_sq(x, &coords[i..i + dim]);
            if d2 <= r2 {
                f(id, d2);
            }
        });
    }

    /// Smallest cell width.
    pub fn reach(&self) -> f64 {
        self.cell.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// All offsets in `{-1, 0, 1}^d`, fixed to 0 along single-cell axes.
fn neighbour_offsets(dim: usize, single: &[bool]) -> Vec<isize> {
    let mut out = Vec::new();
    let mut cur = vec![0isize; dim];
    for (a, &s) in single.iter().enumerate() {
        cur[a] = if s { 0 } else { -1 };
    }
    loop {
        out.extend_from_slice(&cur);
        let mut a = 0;
        loop {
            if a == dim {
                return out;
            }
            if single[a] {
                a += 1;
                continue;
            }
            if cur[a] < 1 {
                cur[a] += 1;
                break;
            }
            cur[a] = -1;
            a += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn check_against_brute_force(dim: usize, radius: f64, periodic: bool) {
        let w = Window::unit_cube(dim);
        let mut rng = ChaCha8Rng::seed_from_u64(dim as u64 + 10 * periodic as u64);
        let n = 400;
        let coords: Vec<f64> = (0..n * dim).map(|_| rng.random::<f64>()).collect();
        let mut g = GridIndex::new(&w, radius, periodic);
        for i in 0..n {
            g.insert(i as u32, &coords[i * dim..(i + 1) * dim]);
        }
        for _ in 0..1000 {
            let x: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
            let mut got = Vec::new();
            g.for_each_within(&x, radius, &coords, |id, _| got.push(id));
            got.sort_unstable();
            let want: Vec<u32> = (0..n)
                .filter(|&i| g.dist_sq(&x, &coords[i * dim..(i + 1) * dim]) <= radius * radius)
                .map(|i| i as u32)
                .collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn matches_brute_force_free_and_periodic() {
        for dim in 1..=3 {
            for &r in &[0.05, 0.2, 0.4, 0.7] {
                check_against_brute_force(dim, r, false);
                check_against_brute_force(dim, r, true);
            }
        }
    }

    #[test]
    fn remove_and_relabel() {
        let w = Window::unit_cube(2);
        let mut g = GridIndex::new(&w, 0.1, false);
        let coords = [0.5, 0.5, 0.52, 0.5];
        g.insert(0, &coords[0..2]);
        g.insert(1, &coords[2..4]);
        g.remove(0, &coords[0..2]);
        g.relabel(1, 0, &coords[2..4]);
        let moved = [0.52, 0.5];
        let mut seen = Vec::new();
        g.for_each_within(&[0.5, 0.5], 0.1, &moved, |id, _| seen.push(id));
        assert_eq!(seen, vec![0]);
    }
}
