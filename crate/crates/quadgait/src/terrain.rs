//! Heightfield terrain: a uniform lattice of vertex heights with bilinear
//! interpolation between them, plus a plain-text dump format for replay.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Uniform-lattice heightfield with a single friction coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct TerrainField {
    x0: f64,
    y0: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    heights: Vec<f64>,
    /// Ground friction coefficient; multiplies the robot's foot friction.
    pub friction: f64,
    seed: u64,
}

impl TerrainField {
    /// Generate a field over `[x_range] x [y_range]` with vertex heights
    /// drawn uniformly from [-magnitude/2, +magnitude/2].
    ///
    /// The draw is deterministic in `seed`.
    pub fn generate(
        magnitude: f64,
        x_range: (f64, f64),
        y_range: (f64, f64),
        cell: f64,
        friction: f64,
        seed: u64,
    ) -> Result<Self> {
        if cell <= 0.0 {
            return Err(Error::Config("terrain cell size must be > 0".into()));
        }
        if x_range.1 <= x_range.0 || y_range.1 <= y_range.0 {
            return Err(Error::Config("terrain extent must be positive".into()));
        }
        if !(magnitude >= 0.0 && magnitude.is_finite()) {
            return Err(Error::Domain(format!("mesh magnitude {magnitude} invalid")));
        }
        let nx = ((x_range.1 - x_range.0) / cell).ceil() as usize + 1;
        let ny = ((y_range.1 - y_range.0) / cell).ceil() as usize + 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = magnitude / 2.0;
        let heights = (0..nx * ny)
            .map(|_| {
                if half > 0.0 {
                    rng.gen_range(-half..=half)
                } else {
                    0.0
                }
            })
            .collect();
        Ok(Self {
            x0: x_range.0,
            y0: y_range.0,
            cell,
            nx,
            ny,
            heights,
            friction,
            seed,
        })
    }

    /// Flat plane over the given extent.
    pub fn flat(x_range: (f64, f64), y_range: (f64, f64), cell: f64, friction: f64) -> Self {
        Self::generate(0.0, x_range, y_range, cell, friction, 0).expect("flat field")
    }

    /// Build a field from explicit vertex heights (row-major, `ny` rows of
    /// `nx` values each).
    pub fn from_heights(
        origin: (f64, f64),
        cell: f64,
        nx: usize,
        ny: usize,
        heights: Vec<f64>,
        friction: f64,
    ) -> Result<Self> {
        if cell <= 0.0 || nx < 2 || ny < 2 {
            return Err(Error::Config("lattice must be at least 2x2".into()));
        }
        if heights.len() != nx * ny {
            return Err(Error::Config(format!(
                "expected {} heights, got {}",
                nx * ny,
                heights.len()
            )));
        }
        if heights.iter().any(|h| !h.is_finite()) {
            return Err(Error::Config("heights must be finite".into()));
        }
        Ok(Self {
            x0: origin.0,
            y0: origin.1,
            cell,
            nx,
            ny,
            heights,
            friction,
            seed: 0,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Lattice extent as ((x0, x1), (y0, y1)).
    pub fn extent(&self) -> ((f64, f64), (f64, f64)) {
        (
            (self.x0, self.x0 + (self.nx - 1) as f64 * self.cell),
            (self.y0, self.y0 + (self.ny - 1) as f64 * self.cell),
        )
    }

    pub fn cell(&self) -> f64 {
        self.cell
    }

    /// Span between the lowest and highest vertex.
    pub fn height_span(&self) -> f64 {
        let max = self.heights.iter().cloned().fold(f64::MIN, f64::max);
        let min = self.heights.iter().cloned().fold(f64::MAX, f64::min);
        max - min
    }

    fn vertex(&self, ix: usize, iy: usize) -> f64 {
        self.heights[iy * self.nx + ix]
    }

    /// Cell coordinates for a query point, or an error outside the extent.
    fn locate(&self, x: f64, y: f64) -> Result<(usize, usize, f64, f64)> {
        let fx = (x - self.x0) / self.cell;
        let fy = (y - self.y0) / self.cell;
        if fx < 0.0 || fy < 0.0 || fx > (self.nx - 1) as f64 || fy > (self.ny - 1) as f64 {
            return Err(Error::TerrainQuery { x, y });
        }
        let ix = (fx.floor() as usize).min(self.nx - 2);
        let iy = (fy.floor() as usize).min(self.ny - 2);
        Ok((ix, iy, fx - ix as f64, fy - iy as f64))
    }

    /// Interpolated surface height at (x, y).
    pub fn height_at(&self, x: f64, y: f64) -> Result<f64> {
        let (ix, iy, u, v) = self.locate(x, y)?;
        let h00 = self.vertex(ix, iy);
        let h10 = self.vertex(ix + 1, iy);
        let h01 = self.vertex(ix, iy + 1);
        let h11 = self.vertex(ix + 1, iy + 1);
        Ok(h00 * (1.0 - u) * (1.0 - v) + h10 * u * (1.0 - v) + h01 * (1.0 - u) * v + h11 * u * v)
    }

    /// Unit surface normal at (x, y), from the bilinear patch gradient.
    pub fn normal_at(&self, x: f64, y: f64) -> Result<Vector3<f64>> {
        let (ix, iy, u, v) = self.locate(x, y)?;
        let h00 = self.vertex(ix, iy);
        let h10 = self.vertex(ix + 1, iy);
        let h01 = self.vertex(ix, iy + 1);
        let h11 = self.vertex(ix + 1, iy + 1);
        let dhdx = ((h10 - h00) * (1.0 - v) + (h11 - h01) * v) / self.cell;
        let dhdy = ((h01 - h00) * (1.0 - u) + (h11 - h10) * u) / self.cell;
        Ok(Vector3::new(-dhdx, -dhdy, 1.0).normalize())
    }

    /// Write the field in the plain-text grid format.
    ///
    /// Header: extent, cell, lattice size, seed, friction; body: one line of
    /// heights per row, row-major. Floats print with full round-trip
    /// precision so dump/load is an identity.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "quadgait-terrain v1")?;
        let ((x0, x1), (y0, y1)) = self.extent();
        writeln!(
            w,
            "{} {} {} {} {} {} {} {} {}",
            x0, x1, y0, y1, self.cell, self.nx, self.ny, self.seed, self.friction
        )?;
        let mut line = String::new();
        for iy in 0..self.ny {
            line.clear();
            for ix in 0..self.nx {
                if ix > 0 {
                    line.push(' ');
                }
                let _ = write!(line, "{}", self.vertex(ix, iy));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(file))
    }

    /// Parse a field from the plain-text grid format.
    pub fn read_from<R: BufRead>(r: R, source: &str) -> Result<Self> {
        let parse_err = |line: usize, msg: String| Error::Parse {
            path: source.to_string(),
            line,
            msg,
        };
        let mut lines = r.lines().enumerate();
        let (_, magic) = lines
            .next()
            .ok_or_else(|| parse_err(1, "empty file".into()))?;
        let magic = magic?;
        if magic.trim() != "quadgait-terrain v1" {
            return Err(parse_err(1, format!("unexpected header {magic:?}")));
        }
        let (_, header) = lines
            .next()
            .ok_or_else(|| parse_err(2, "missing dimension line".into()))?;
        let header = header?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 9 {
            return Err(parse_err(2, format!("expected 9 fields, got {}", fields.len())));
        }
        let f = |i: usize| -> Result<f64> {
            fields[i]
                .parse()
                .map_err(|e| parse_err(2, format!("field {i}: {e}")))
        };
        let (x0, _x1, y0, _y1, cell) = (f(0)?, f(1)?, f(2)?, f(3)?, f(4)?);
        let nx: usize = fields[5]
            .parse()
            .map_err(|e| parse_err(2, format!("nx: {e}")))?;
        let ny: usize = fields[6]
            .parse()
            .map_err(|e| parse_err(2, format!("ny: {e}")))?;
        let seed: u64 = fields[7]
            .parse()
            .map_err(|e| parse_err(2, format!("seed: {e}")))?;
        let friction = f(8)?;

        let mut heights = Vec::with_capacity(nx * ny);
        for (lineno, row) in lines {
            let row = row?;
            if row.trim().is_empty() {
                continue;
            }
            for tok in row.split_whitespace() {
                let h: f64 = tok
                    .parse()
                    .map_err(|e| parse_err(lineno + 1, format!("height {tok:?}: {e}")))?;
                heights.push(h);
            }
        }
        if heights.len() != nx * ny {
            return Err(parse_err(
                0,
                format!("expected {} heights, got {}", nx * ny, heights.len()),
            ));
        }
        Ok(Self {
            x0,
            y0,
            cell,
            nx,
            ny,
            heights,
            friction,
            seed,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file), &path.display().to_string())
    }
}
