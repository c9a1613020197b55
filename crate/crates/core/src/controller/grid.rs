use std::fmt;

use crate::mtbdd::{VariableOrder, MAX_VARS};

use super::ModelError;

/// One quantized dimension: `count` cells of `width` starting at `lower`.
///
/// Cell `k` is represented by its center `lower + k * width`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dim {
    pub count: u32,
    pub lower: f64,
    pub width: f64,
}

impl Dim {
    pub fn new(count: u32, lower: f64, width: f64) -> Self {
        Dim { count, lower, width }
    }

    /// Bits needed to store every index `0..count`.
    pub fn bit_width(&self) -> u32 {
        let n = self.count.max(2);
        32 - (n - 1).leading_zeros()
    }
}

/// Uniform grid over a box, one [`Dim`] per coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    dims: Vec<Dim>,
    cells: u64,
}

impl Grid {
    pub fn new(dims: Vec<Dim>) -> Result<Self, ModelError> {
        if dims.is_empty() {
            return Err(ModelError::InvalidGrid("grid needs at least one dimension".into()));
        }
        let mut cells: u64 = 1;
        let mut bits = 0u32;
        for (j, d) in dims.iter().enumerate() {
            if d.count == 0 {
                return Err(ModelError::InvalidGrid(format!("dimension {j} has no cells")));
            }
            if !(d.width > 0.0 && d.width.is_finite()) || !d.lower.is_finite() {
                return Err(ModelError::InvalidGrid(format!(
                    "dimension {j} needs a finite lower bound and positive width"
                )));
            }
            cells = cells
                .checked_mul(u64::from(d.count))
                .ok_or_else(|| ModelError::InvalidGrid("cell count overflows 64 bits".into()))?;
            bits += d.bit_width();
        }
        if bits as usize > MAX_VARS {
            return Err(ModelError::InvalidGrid(format!(
                "{bits} index bits exceeds {MAX_VARS}"
            )));
        }
        Ok(Grid { dims, cells })
    }

    /// Unit-width grid with cell centers at the integers `0..count`.
    pub fn integer(counts: &[u32]) -> Result<Self, ModelError> {
        Self::new(counts.iter().map(|&c| Dim::new(c, 0.0, 1.0)).collect())
    }

    pub fn dims(&self) -> &[Dim] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    /// Total number of cells, the product of the per-dimension counts.
    pub fn cell_count(&self) -> u64 {
        self.cells
    }

    pub fn codec(&self) -> BitCodec {
        BitCodec::new(self)
    }

    fn check_cell(&self, cell: &[u32]) -> Result<(), ModelError> {
        if cell.len() != self.dims.len() {
            return Err(ModelError::Range(format!(
                "cell has {} components, grid has {} dimensions",
                cell.len(),
                self.dims.len()
            )));
        }
        for (j, (&k, d)) in cell.iter().zip(&self.dims).enumerate() {
            if k >= d.count {
                return Err(ModelError::Range(format!(
                    "component {j} is {k}, dimension has {} cells",
                    d.count
                )));
            }
        }
        Ok(())
    }

    /// Dense mixed-radix index, radix `N_j` per dimension.
    pub fn index_fs(&self, cell: &[u32]) -> Result<u64, ModelError> {
        self.check_cell(cell)?;
        let mut idx = 0u64;
        let mut stride = 1u64;
        for (&k, d) in cell.iter().zip(&self.dims) {
            idx += u64::from(k) * stride;
            stride *= u64::from(d.count);
        }
        Ok(idx)
    }

    /// Bit-field index, radix `2^bit_width(N_j)` per dimension.
    pub fn index_fb(&self, cell: &[u32]) -> Result<u64, ModelError> {
        self.check_cell(cell)?;
        let mut idx = 0u64;
        let mut shift = 0u32;
        for (&k, d) in cell.iter().zip(&self.dims) {
            idx |= u64::from(k) << shift;
            shift += d.bit_width();
        }
        Ok(idx)
    }

    pub fn unindex_fs(&self, index: u64) -> Result<Vec<u32>, ModelError> {
        if index >= self.cells {
            return Err(ModelError::Range(format!(
                "index {index} outside 0..{}",
                self.cells
            )));
        }
        let mut rest = index;
        Ok(self
            .dims
            .iter()
            .map(|d| {
                let n = u64::from(d.count);
                let k = rest % n;
                rest /= n;
                k as u32
            })
            .collect())
    }

    pub fn unindex_fb(&self, index: u64) -> Result<Vec<u32>, ModelError> {
        let total = self.codec().total_bits();
        if total < 64 && index >> total != 0 {
            return Err(ModelError::Range(format!(
                "index {index} needs more than {total} bits"
            )));
        }
        let mut cell = Vec::with_capacity(self.dims.len());
        let mut shift = 0u32;
        for (j, d) in self.dims.iter().enumerate() {
            let w = d.bit_width();
            let k = (index >> shift) & ((1u64 << w) - 1);
            if k >= u64::from(d.count) {
                return Err(ModelError::InvalidIndex(format!(
                    "bit-field {j} holds {k}, dimension has {} cells",
                    d.count
                )));
            }
            cell.push(k as u32);
            shift += w;
        }
        Ok(cell)
    }

    pub fn fs_to_fb(&self, index: u64) -> Result<u64, ModelError> {
        self.index_fb(&self.unindex_fs(index)?)
    }

    pub fn fb_to_fs(&self, index: u64) -> Result<u64, ModelError> {
        self.index_fs(&self.unindex_fb(index)?)
    }

    /// Nearest cell to `point`; points more than half a cell outside the
    /// grid are rejected.
    pub fn quantize(&self, point: &[f64]) -> Result<Vec<u32>, ModelError> {
        if point.len() != self.dims.len() {
            return Err(ModelError::Range(format!(
                "point has {} coordinates, grid has {} dimensions",
                point.len(),
                self.dims.len()
            )));
        }
        point
            .iter()
            .zip(&self.dims)
            .enumerate()
            .map(|(j, (&x, d))| {
                let t = (x - d.lower) / d.width;
                if !(t >= -0.5 && t <= f64::from(d.count) - 0.5) {
                    return Err(ModelError::OutOfDomain(format!(
                        "coordinate {j} = {x} outside the grid"
                    )));
                }
                Ok((t.round().max(0.0) as u32).min(d.count - 1))
            })
            .collect()
    }

    /// Cell center coordinates.
    pub fn center(&self, cell: &[u32]) -> Vec<f64> {
        cell.iter()
            .zip(&self.dims)
            .map(|(&k, d)| d.lower + f64::from(k) * d.width)
            .collect()
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, d) in self.dims.iter().enumerate() {
            if j > 0 {
                f.write_str(" x ")?;
            }
            write!(f, "{}", d.count)?;
        }
        Ok(())
    }
}

/// Per-dimension bit layout of `index_fb` codes.
///
/// Bit `offset(j) + i` of a code is bit `i` of the dimension-`j` component;
/// that bit position doubles as the decision-variable id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitCodec {
    widths: Vec<u32>,
    offsets: Vec<u32>,
}

impl BitCodec {
    pub fn new(grid: &Grid) -> Self {
        let widths: Vec<u32> = grid.dims().iter().map(Dim::bit_width).collect();
        let offsets = widths
            .iter()
            .scan(0, |acc, &w| {
                let o = *acc;
                *acc += w;
                Some(o)
            })
            .collect();
        BitCodec { widths, offsets }
    }

    pub fn widths(&self) -> &[u32] {
        &self.widths
    }

    pub fn offset(&self, dim: usize) -> u32 {
        self.offsets[dim]
    }

    pub fn total_bits(&self) -> u32 {
        self.widths.iter().sum()
    }

    /// Alternating most-significant-first bit sequence across dimensions,
    /// shifted by `base` variables. Dimensions with fewer bits drop out once
    /// exhausted.
    pub fn interleaved_levels(&self, base: u8) -> Vec<u8> {
        let rounds = self.widths.iter().copied().max().unwrap_or(0);
        let mut levels = Vec::with_capacity(self.total_bits() as usize);
        for r in 0..rounds {
            for (j, &w) in self.widths.iter().enumerate() {
                if r < w {
                    levels.push(base + (self.offsets[j] + w - 1 - r) as u8);
                }
            }
        }
        levels
    }

    pub fn interleaved_order(&self) -> VariableOrder {
        VariableOrder::from_levels(self.interleaved_levels(0)).expect("interleaving is a permutation")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_widths() {
        let w: Vec<u32> = [1, 2, 3, 4, 5, 8, 9].iter().map(|&n| Dim::new(n, 0.0, 1.0).bit_width()).collect();
        assert_eq!(w, vec![1, 1, 2, 2, 3, 3, 4]);
    }

    #[test]
    fn indexers_on_3_by_5() {
        let g = Grid::integer(&[3, 5]).unwrap();
        assert_eq!(g.index_fb(&[0, 0]).unwrap(), 0);
        assert_eq!(g.index_fs(&[0, 0]).unwrap(), 0);
        assert_eq!(g.index_fb(&[2, 3]).unwrap(), 14);
        assert_eq!(g.index_fs(&[2, 3]).unwrap(), 11);
        assert_eq!(g.index_fs(&[2, 4]).unwrap(), 14);
        assert!(matches!(g.index_fs(&[3, 0]), Err(ModelError::Range(_))));
        assert!(matches!(g.unindex_fb(3), Err(ModelError::InvalidIndex(_))));
        assert_eq!(g.unindex_fs(0).unwrap(), vec![0, 0]);
        assert!(matches!(g.unindex_fs(15), Err(ModelError::Range(_))));
        assert!(matches!(g.unindex_fb(1 << 5), Err(ModelError::Range(_))));
    }

    #[test]
    fn fs_round_trip_exhaustive() {
        let g = Grid::integer(&[3, 5]).unwrap();
        for a in 0..3 {
            for b in 0..5 {
                let c = [a, b];
                assert_eq!(g.unindex_fs(g.index_fs(&c).unwrap()).unwrap(), c);
                assert_eq!(g.unindex_fb(g.index_fb(&c).unwrap()).unwrap(), c);
            }
        }
    }

    #[test]
    fn quantize_snaps_and_rejects() {
        let g = Grid::integer(&[5]).unwrap();
        assert_eq!(g.quantize(&[2.4]).unwrap(), vec![2]);
        assert_eq!(g.quantize(&[3.0]).unwrap(), vec![3]);
        assert_eq!(g.quantize(&[-0.5]).unwrap(), vec![0]);
        assert_eq!(g.quantize(&[4.5]).unwrap(), vec![4]);
        assert!(matches!(g.quantize(&[4.6]), Err(ModelError::OutOfDomain(_))));
        assert!(matches!(g.quantize(&[f64::NAN]), Err(ModelError::OutOfDomain(_))));
        let h = Grid::new(vec![Dim::new(4, -1.0, 0.5), Dim::new(3, 2.0, 0.25)]).unwrap();
        for a in 0..4 {
            for b in 0..3 {
                assert_eq!(h.quantize(&h.center(&[a, b])).unwrap(), vec![a, b]);
            }
        }
    }

    #[test]
    fn interleaving_is_msb_first_round_robin() {
        // widths (2, 3): dim0 bits 0..2, dim1 bits 2..5
        let g = Grid::integer(&[3, 5]).unwrap();
        assert_eq!(g.codec().interleaved_levels(0), vec![1, 4, 0, 3, 2]);
    }

    #[test]
    fn invalid_grids() {
        assert!(Grid::new(vec![]).is_err());
        assert!(Grid::integer(&[0]).is_err());
        assert!(Grid::new(vec![Dim::new(2, 0.0, 0.0)]).is_err());
        assert!(Grid::integer(&[u32::MAX, u32::MAX, u32::MAX]).is_err());
    }
}
