//! IRS lattice construction, scenario presets and the UE evaluation grid.
//!
//! Coordinates are in meters. The surface is mounted on the wall `y = irs_center.y`:
//! rows run along `x`, columns run along `z`, and row 0 is the top of every
//! column.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    /// Distance in the horizontal (x, y) plane.
    pub fn horizontal_distance(&self, other: &Point3) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A planar `n_cols x n_rows` reflecting surface.
///
/// Elements are stored row-major: index `row * n_cols + col`.
#[derive(Debug, Clone, PartialEq)]
pub struct IrsGeometry {
    n_cols: usize,
    n_rows: usize,
    spacing: f64,
    center: Point3,
    element_pos: Vec<Point3>,
}

impl IrsGeometry {
    /// Builds a half-wavelength lattice centered on `center`.
    pub fn new(n_cols: usize, n_rows: usize, frequency: f64, center: Point3) -> Result<Self> {
        if n_cols == 0 || n_rows == 0 {
            return Err(invalid(format!(
                "array dimensions must be positive, got {n_cols}x{n_rows}"
            )));
        }
        if !(frequency > 0.0 && frequency.is_finite()) {
            return Err(invalid(format!("frequency must be positive, got {frequency}")));
        }
        if !center.is_finite() {
            return Err(invalid("array center must be finite"));
        }
        let spacing = SPEED_OF_LIGHT / frequency / 2.0;
        let col_mid = (n_cols as f64 - 1.0) / 2.0;
        let row_mid = (n_rows as f64 - 1.0) / 2.0;
        let element_pos = (0..n_rows)
            .flat_map(|row| {
                (0..n_cols).map(move |col| {
                    Point3::new(
                        center.x + (col as f64 - col_mid) * spacing,
                        center.y,
                        center.z + (row_mid - row as f64) * spacing,
                    )
                })
            })
            .collect();
        Ok(IrsGeometry { n_cols, n_rows, spacing, center, element_pos })
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// Total element count `n_cols * n_rows`.
    pub fn len(&self) -> usize {
        self.element_pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.element_pos.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn center(&self) -> Point3 {
        self.center
    }

    /// Physical (width, height) of the aperture.
    pub fn extent(&self) -> (f64, f64) {
        (self.n_cols as f64 * self.spacing, self.n_rows as f64 * self.spacing)
    }

    pub fn element_positions(&self) -> &[Point3] {
        &self.element_pos
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.n_cols + col
    }

    pub fn column_of(&self, element: usize) -> usize {
        element % self.n_cols
    }

    pub fn row_of(&self, element: usize) -> usize {
        element / self.n_cols
    }

    /// Element indices of column `col`, top to bottom.
    pub fn column_elements(&self, col: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_rows).map(move |row| self.index(row, col))
    }

    /// Index of the first (topmost) element of column `col`.
    pub fn topmost(&self, col: usize) -> usize {
        self.index(0, col)
    }
}

/// Axis-aligned rectangle of the evaluation map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapBounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// 1, 2 or 3 for the presets; 0 for custom configurations.
    pub id: u8,
    pub ap_pos: Point3,
    pub irs_center: Point3,
    pub ue_height: f64,
    pub map_bounds: MapBounds,
    pub frequency: f64,
    pub tx_power: f64,
    pub noise_power: f64,
    pub path_loss_exponent: f64,
    pub ref_distance: f64,
    /// Power gain of a single hop at the reference distance, in dB.
    pub ref_gain_db: f64,
    pub grid_step: f64,
    pub n_cols: usize,
    pub n_rows: usize,
}

/// Single-hop power gain at `d0` used by the presets.
pub const DEFAULT_REF_GAIN_DB: f64 = -20.0;

impl ScenarioConfig {
    /// Returns one of the three height presets.
    ///
    /// | id | AP height | IRS height | UE height |
    /// |----|-----------|------------|-----------|
    /// | 1  | 1.5       | 1.5        | 1.5       |
    /// | 2  | 2.5       | 2.0        | 1.5       |
    /// | 3  | 5.0       | 2.5        | 1.5       |
    pub fn preset(id: u8) -> Result<Self> {
        let (ap_z, irs_z) = match id {
            1 => (1.5, 1.5),
            2 => (2.5, 2.0),
            3 => (5.0, 2.5),
            _ => return Err(invalid(format!("unknown scenario id {id}, expected 1, 2 or 3"))),
        };
        Ok(ScenarioConfig {
            id,
            ap_pos: Point3::new(4.0, 15.0, ap_z),
            irs_center: Point3::new(10.0, 20.0, irs_z),
            ue_height: 1.5,
            map_bounds: MapBounds { x_min: 0.0, x_max: 20.0, y_min: 0.0, y_max: 20.0 },
            frequency: 26e9,
            tx_power: 0.05,
            noise_power: 1e-9,
            path_loss_exponent: 2.0,
            ref_distance: 1.0,
            ref_gain_db: DEFAULT_REF_GAIN_DB,
            grid_step: 0.5,
            n_cols: 32,
            n_rows: 32,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tx_power", self.tx_power),
            ("noise_power", self.noise_power),
            ("frequency", self.frequency),
            ("ref_distance", self.ref_distance),
            ("grid_step", self.grid_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.path_loss_exponent >= 0.0 && self.path_loss_exponent.is_finite()) {
            return Err(invalid(format!(
                "path loss exponent must be >= 0, got {}",
                self.path_loss_exponent
            )));
        }
        if !self.ref_gain_db.is_finite() {
            return Err(invalid("ref_gain_db must be finite"));
        }
        if !self.ap_pos.is_finite() || !self.irs_center.is_finite() || !self.ue_height.is_finite() {
            return Err(invalid("node coordinates must be finite"));
        }
        let b = &self.map_bounds;
        if !(b.x_min <= b.x_max && b.y_min <= b.y_max) {
            return Err(invalid("map bounds are inverted"));
        }
        if self.n_cols == 0 || self.n_rows == 0 {
            return Err(invalid("array dimensions must be positive"));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency
    }

    /// The surface described by this scenario.
    pub fn irs(&self) -> Result<IrsGeometry> {
        IrsGeometry::new(self.n_cols, self.n_rows, self.frequency, self.irs_center)
    }

    /// True if a UE at `(x, y)` is far enough from the AP and the surface.
    pub fn admits_ue(&self, x: f64, y: f64) -> bool {
        let p = Point3::new(x, y, self.ue_height);
        p.horizontal_distance(&self.ap_pos) >= self.ref_distance
            && p.horizontal_distance(&self.irs_center) >= self.ref_distance
    }

    /// Row-major UE grid at height `ue_height`.
    ///
    /// Points closer than `ref_distance` (horizontally) to the AP or to the
    /// surface center are dropped.
    pub fn ue_grid(&self) -> Vec<Point3> {
        let b = &self.map_bounds;
        let steps = |lo: f64, hi: f64| ((hi - lo) / self.grid_step + 1e-9).floor() as usize + 1;
        let (nx, ny) = (steps(b.x_min, b.x_max), steps(b.y_min, b.y_max));
        let mut out = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            let y = b.y_min + j as f64 * self.grid_step;
            for i in 0..nx {
                let x = b.x_min + i as f64 * self.grid_step;
                if self.admits_ue(x, y) {
                    out.push(Point3::new(x, y, self.ue_height));
                }
            }
        }
        out
    }
}
