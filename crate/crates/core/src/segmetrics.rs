use crate::error::{param, Error, Result};

/// Real-valued image grid in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskGrid {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl MaskGrid {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return param("grid dimensions must be positive");
        }
        if values.len() != height * width {
            return Err(Error::Dimension(format!(
                "{} values for a {height}x{width} grid",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return param("grid values must be finite");
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::Dimension("ragged grid rows".into()));
        }
        Self::new(height, width, rows.concat())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }
}

/// Binary mask in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize, bits: Vec<bool>) -> Result<Self> {
        if height == 0 || width == 0 {
            return param("mask dimensions must be positive");
        }
        if bits.len() != height * width {
            return Err(Error::Dimension(format!(
                "{} values for a {height}x{width} mask",
                bits.len()
            )));
        }
        Ok(Self {
            height,
            width,
            bits,
        })
    }

    /// Reads a target mask; every value must be exactly 0 or 1.
    pub fn from_grid(grid: &MaskGrid) -> Result<Self> {
        let bits = grid
            .values
            .iter()
            .map(|&v| match v {
                0.0 => Ok(false),
                1.0 => Ok(true),
                other => param(format!("target mask value {other} is not 0 or 1")),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(grid.height, grid.width, bits)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }
}

/// `v >= threshold` maps to 1, everything else to 0.
pub fn binarize(pred: &MaskGrid, threshold: f64) -> BinaryMask {
    BinaryMask {
        height: pred.height,
        width: pred.width,
        bits: pred.values.iter().map(|&v| v >= threshold).collect(),
    }
}

/// Intersection over union; two empty masks score 1.
pub fn iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    if (a.height, a.width) != (b.height, b.width) {
        return Err(Error::Dimension(format!(
            "{}x{} vs {}x{}",
            a.height, a.width, b.height, b.width
        )));
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.bits.iter().zip(&b.bits) {
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    Ok(if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    })
}

/// Mean of `iou(binarize(pred, threshold), target)` over all pairs.
pub fn mean_iou(pairs: &[(MaskGrid, BinaryMask)], threshold: f64) -> Result<f64> {
    if pairs.is_empty() {
        return param("mean IoU of an empty list");
    }
    let mut sum = 0.0;
    for (pred, target) in pairs {
        sum += iou(&binarize(pred, threshold), target)?;
    }
    Ok(sum / pairs.len() as f64)
}
