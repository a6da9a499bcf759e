//! Finite boxes `{-n, ..., n}^d` of the cubic lattice with free boundary.
//!
//! Sites are flat indices. Coordinate `x_a + n` is the base-`side` digit of
//! the index for axis `a`, axis 0 varying fastest. Coordinates are derived
//! on demand and never stored per site.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Geometry of the box `Λ_n ⊂ Z^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxLattice {
    dim: usize,
    radius: usize,
    side: usize,
    site_count: usize,
    edge_count: usize,
}

impl BoxLattice {
    pub fn new(dim: usize, radius: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        let side = radius
            .checked_mul(2)
            .and_then(|s| s.checked_add(1))
            .ok_or_else(|| Error::Sizing(format!("side of radius {radius} overflows")))?;
        let dim_u32 = u32::try_from(dim).map_err(|_| Error::Sizing(format!("dimension {dim}")))?;
        let site_count = side
            .checked_pow(dim_u32)
            .ok_or_else(|| Error::Sizing(format!("{side}^{dim} sites overflow")))?;
        let edge_count = side
            .checked_pow(dim_u32 - 1)
            .and_then(|face| face.checked_mul(2 * radius))
            .and_then(|e| e.checked_mul(dim))
            .ok_or_else(|| Error::Sizing(format!("edge count of {side}^{dim} box overflows")))?;
        // Site labels are stored as u32 by the cluster labeler.
        if site_count > u32::MAX as usize {
            return Err(Error::Sizing(format!(
                "{site_count} sites exceed the labeler's u32 range"
            )));
        }
        Ok(Self {
            dim,
            radius,
            side,
            site_count,
            edge_count,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn site_count(&self) -> usize {
        self.site_count
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Index offset of a unit step along `axis`.
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.side.pow(axis as u32)
    }

    pub fn origin(&self) -> usize {
        // Every digit equals `radius`.
        (0..self.dim).map(|a| self.radius * self.stride(a)).sum()
    }

    /// Index of the site with centered coordinates `coords`, if inside the box.
    pub fn index_of(&self, coords: &[i64]) -> Option<usize> {
        if coords.len() != self.dim {
            return None;
        }
        let r = self.radius as i64;
        let mut index = 0usize;
        for (axis, &x) in coords.iter().enumerate() {
            if x < -r || x > r {
                return None;
            }
            index += (x + r) as usize * self.stride(axis);
        }
        Some(index)
    }

    /// Centered coordinates of site `index`.
    pub fn site_of(&self, index: usize) -> Vec<i64> {
        let mut coords = Vec::with_capacity(self.dim);
        let mut rest = index;
        for _ in 0..self.dim {
            coords.push((rest % self.side) as i64 - self.radius as i64);
            rest /= self.side;
        }
        coords
    }

    #[inline]
    fn digit(&self, index: usize, axis: usize) -> usize {
        (index / self.stride(axis)) % self.side
    }

    /// L∞ distance of a site from the origin.
    pub fn sup_norm(&self, index: usize) -> usize {
        let mut rest = index;
        let mut norm = 0;
        for _ in 0..self.dim {
            let d = rest % self.side;
            norm = norm.max(d.abs_diff(self.radius));
            rest /= self.side;
        }
        norm
    }

    /// True when the site lies on a face of the box.
    pub fn on_boundary(&self, index: usize) -> bool {
        self.sup_norm(index) == self.radius
    }

    /// Neighbors of `index` inside the box.
    pub fn neighbors(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.dim).flat_map(move |axis| {
            let d = self.digit(index, axis);
            let s = self.stride(axis);
            let down = (d > 0).then(|| index - s);
            let up = (d + 1 < self.side).then(|| index + s);
            down.into_iter().chain(up)
        })
    }

    pub fn degree(&self, index: usize) -> usize {
        self.neighbors(index).count()
    }

    /// All edges `(lower, upper)` in canonical order: by lower site index,
    /// then by axis. The position in this sequence is the edge index.
    pub fn edges(&self) -> Edges<'_> {
        Edges {
            lattice: self,
            site: 0,
            axis: 0,
        }
    }

    /// Sites of the nested box `Λ_{n - margin}`, in increasing index order.
    pub fn inner_window(&self, margin: usize) -> Result<Vec<usize>> {
        if margin > self.radius {
            return Err(invalid(format!(
                "window margin {margin} exceeds box radius {}",
                self.radius
            )));
        }
        let inner = self.radius - margin;
        let inner_side = 2 * inner + 1;
        let mut sites = Vec::with_capacity(inner_side.pow(self.dim as u32));
        let mut digits = vec![margin; self.dim];
        let base: usize = (0..self.dim).map(|a| margin * self.stride(a)).sum();
        let mut index = base;
        loop {
            sites.push(index);
            // Odometer over the inner cube.
            let mut axis = 0;
            loop {
                if axis == self.dim {
                    return Ok(sites);
                }
                if digits[axis] + 1 < margin + inner_side {
                    digits[axis] += 1;
                    index += self.stride(axis);
                    break;
                }
                index -= (digits[axis] - margin) * self.stride(axis);
                digits[axis] = margin;
                axis += 1;
            }
        }
    }

    /// Membership mask for `Λ_{n - margin}`.
    pub fn window_mask(&self, margin: usize) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.site_count];
        for s in self.inner_window(margin)? {
            mask[s] = true;
        }
        Ok(mask)
    }
}

pub fn build_box(dim: usize, radius: usize) -> Result<BoxLattice> {
    BoxLattice::new(dim, radius)
}

/// Iterator over the edges of a [`BoxLattice`].
pub struct Edges<'a> {
    lattice: &'a BoxLattice,
    site: usize,
    axis: usize,
}

impl Iterator for Edges<'_> {
    type Item = (usize, usize);

    fn next(&mut self) -> Option<Self::Item> {
        let lat = self.lattice;
        while self.site < lat.site_count {
            while self.axis < lat.dim {
                let axis = self.axis;
                self.axis += 1;
                if lat.digit(self.site, axis) + 1 < lat.side {
                    return Some((self.site, self.site + lat.stride(axis)));
                }
            }
            self.axis = 0;
            self.site += 1;
        }
        None
    }
}
