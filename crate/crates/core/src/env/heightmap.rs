use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regular elevation grid. Node `(i, j)` sits at
/// `origin + (i·cell_size, j·cell_size)`; `elevations` is row-major with rows
/// indexed by `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HeightmapDoc", into = "HeightmapDoc")]
pub struct Heightmap {
    pub width: usize,
    pub height: usize,
    pub cell_size: f64,
    pub origin: [f64; 2],
    pub elevations: Vec<f64>,
}

/// On-disk shape: one array per grid row.
#[derive(Serialize, Deserialize)]
struct HeightmapDoc {
    width: usize,
    height: usize,
    cell_size: f64,
    origin: [f64; 2],
    rows: Vec<Vec<f64>>,
}

impl From<Heightmap> for HeightmapDoc {
    fn from(h: Heightmap) -> Self {
        let rows = h.elevations.chunks(h.width.max(1)).map(<[f64]>::to_vec).collect();
        Self {
            width: h.width,
            height: h.height,
            cell_size: h.cell_size,
            origin: h.origin,
            rows,
        }
    }
}

impl TryFrom<HeightmapDoc> for Heightmap {
    type Error = Error;

    fn try_from(doc: HeightmapDoc) -> Result<Self> {
        if doc.rows.len() != doc.height || doc.rows.iter().any(|r| r.len() != doc.width) {
            return Err(Error::Parse {
                what: "heightmap".into(),
                message: format!("grid is not {}x{}", doc.width, doc.height),
            });
        }
        Heightmap::new(
            doc.width,
            doc.height,
            doc.cell_size,
            doc.origin,
            doc.rows.into_iter().flatten().collect(),
        )
    }
}

impl Heightmap {
    pub fn new(width: usize, height: usize, cell_size: f64, origin: [f64; 2], elevations: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::config("heightmap", "needs at least one cell per axis"));
        }
        if !(cell_size > 0.0) {
            return Err(Error::config("heightmap.cell_size", "must be positive"));
        }
        if elevations.len() != width * height {
            return Err(Error::Dimension {
                what: "heightmap elevations",
                expected: width * height,
                got: elevations.len(),
            });
        }
        if elevations.iter().any(|e| !e.is_finite()) {
            return Err(Error::config("heightmap.elevations", "must be finite"));
        }
        Ok(Self {
            width,
            height,
            cell_size,
            origin,
            elevations,
        })
    }

    pub fn flat(width: usize, height: usize, cell_size: f64, origin: [f64; 2]) -> Self {
        Self {
            width,
            height,
            cell_size,
            origin,
            elevations: vec![0.0; width * height],
        }
    }

    pub fn node(&self, i: usize, j: usize) -> f64 {
        self.elevations[j * self.width + i]
    }

    pub fn node_position(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + i as f64 * self.cell_size,
            self.origin[1] + j as f64 * self.cell_size,
        ]
    }

    fn axis(coord: f64, origin: f64, cell: f64, n: usize) -> (usize, usize, f64) {
        let g = ((coord - origin) / cell).clamp(0.0, (n - 1) as f64);
        let i0 = (g.floor() as usize).min(n - 1);
        let i1 = (i0 + 1).min(n - 1);
        (i0, i1, g - i0 as f64)
    }

    /// Bilinear elevation; queries outside the grid clamp to the border.
    pub fn elevation_at(&self, x: f64, y: f64) -> f64 {
        let (i0, i1, fx) = Self::axis(x, self.origin[0], self.cell_size, self.width);
        let (j0, j1, fy) = Self::axis(y, self.origin[1], self.cell_size, self.height);
        let bottom = self.node(i0, j0) * (1.0 - fx) + self.node(i1, j0) * fx;
        let top = self.node(i0, j1) * (1.0 - fx) + self.node(i1, j1) * fx;
        bottom * (1.0 - fy) + top * fy
    }

    /// (∂h/∂x, ∂h/∂y) by central differences over one cell.
    pub fn gradient_at(&self, x: f64, y: f64) -> [f64; 2] {
        let h = self.cell_size;
        [
            (self.elevation_at(x + h, y) - self.elevation_at(x - h, y)) / (2.0 * h),
            (self.elevation_at(x, y + h) - self.elevation_at(x, y - h)) / (2.0 * h),
        ]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.elevations
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field() {
        let hm = Heightmap::flat(3, 3, 1.0, [0.0, 0.0]);
        assert_eq!(hm.elevation_at(0.7, 1.3), 0.0);
        assert_eq!(hm.elevation_at(-50.0, 80.0), 0.0);
    }

    #[test]
    fn bilinear_midpoint() {
        // Along x: 0, 1; both rows identical.
        let hm = Heightmap::new(2, 2, 1.0, [0.0, 0.0], vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        assert!((hm.elevation_at(0.5, 0.5) - 0.5).abs() < 1e-15);
        assert!((hm.elevation_at(0.25, 0.9) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn nodes_are_exact() {
        let e: Vec<f64> = (0..12).map(|k| (k as f64 * 0.37).sin()).collect();
        let hm = Heightmap::new(4, 3, 2.0, [-1.0, 5.0], e).unwrap();
        for j in 0..3 {
            for i in 0..4 {
                let [x, y] = hm.node_position(i, j);
                assert_eq!(hm.elevation_at(x, y), hm.node(i, j));
            }
        }
    }

    #[test]
    fn border_clamps() {
        let hm = Heightmap::new(2, 1, 1.0, [0.0, 0.0], vec![2.0, 4.0]).unwrap();
        assert_eq!(hm.elevation_at(-10.0, 0.0), 2.0);
        assert_eq!(hm.elevation_at(10.0, 3.0), 4.0);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Heightmap::new(2, 2, 1.0, [0.0; 2], vec![0.0; 3]).is_err());
        assert!(Heightmap::new(1, 1, 0.0, [0.0; 2], vec![0.0]).is_err());
        assert!(Heightmap::new(1, 1, 1.0, [0.0; 2], vec![f64::NAN]).is_err());
    }
}
