//! Periodic spatial discretization of R^d and the discrete transforms
//! matching the continuum convention
//! F[f](xi) = int e^{-i x.xi} f(x) dx,   F^{-1}[g](x) = (2pi)^{-d} int e^{i xi.x} g(xi) dxi.
//!
//! The torus is [-L, L)^d sampled with N points per axis; the frequency
//! lattice is xi_k = (pi/L) k for signed k in [-N/2, N/2).

use crate::error::{Error, Result};
use crate::fft;
use num_complex::Complex64;

pub const MAX_DIM: usize = 3;

/// Which space a [`Field`]'s samples live in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Physical,
    Frequency,
}

/// Periodic sampling grid: `N^d` points on `[-L, L)^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralGrid {
    dimension: usize,
    points_per_axis: usize,
    half_width: f64,
}

impl SpectralGrid {
    pub fn new(dimension: usize, points_per_axis: usize, half_width: f64) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dimension) {
            return Err(Error::invalid(format!("dimension {dimension} not in 1..=3")));
        }
        if points_per_axis < 4 || !points_per_axis.is_power_of_two() {
            return Err(Error::invalid(format!(
                "points_per_axis {points_per_axis} must be a power of two >= 4"
            )));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::invalid("half_width must be positive and finite"));
        }
        Ok(SpectralGrid { dimension, points_per_axis, half_width })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }
    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }
    pub fn half_width(&self) -> f64 {
        self.half_width
    }
    /// Grid spacing 2L/N.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }
    /// Frequency lattice step pi/L.
    pub fn freq_step(&self) -> f64 {
        std::f64::consts::PI / self.half_width
    }
    /// Largest representable frequency magnitude per axis, (pi/L)(N/2).
    pub fn nyquist(&self) -> f64 {
        self.freq_step() * (self.points_per_axis / 2) as f64
    }
    pub fn total_points(&self) -> usize {
        self.points_per_axis.pow(self.dimension as u32)
    }
    pub fn shape(&self) -> Vec<usize> {
        vec![self.points_per_axis; self.dimension]
    }

    /// Signed frequency index of a storage index along one axis.
    pub fn signed_index(&self, j: usize) -> i64 {
        let n = self.points_per_axis;
        if j < n / 2 {
            j as i64
        } else {
            j as i64 - n as i64
        }
    }

    /// Storage index of a signed frequency index along one axis.
    pub fn storage_index(&self, k: i64) -> usize {
        let n = self.points_per_axis as i64;
        debug_assert!(k >= -n / 2 && k < n / 2);
        if k >= 0 {
            k as usize
        } else {
            (k + n) as usize
        }
    }

    /// Physical coordinate of storage index `j` along one axis.
    pub fn x_coord(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    /// Frequency coordinate of storage index `j` along one axis.
    pub fn xi_coord(&self, j: usize) -> f64 {
        self.freq_step() * self.signed_index(j) as f64
    }

    /// Decompose a flat row-major index into per-axis storage indices.
    pub fn axis_indices(&self, idx: usize, out: &mut [usize; MAX_DIM]) {
        let n = self.points_per_axis;
        let mut rest = idx;
        for axis in (0..self.dimension).rev() {
            out[axis] = rest % n;
            rest /= n;
        }
    }

    /// Physical coordinates of a flat index.
    pub fn x_at(&self, idx: usize, out: &mut [f64; MAX_DIM]) {
        let mut ax = [0usize; MAX_DIM];
        self.axis_indices(idx, &mut ax);
        for axis in 0..self.dimension {
            out[axis] = self.x_coord(ax[axis]);
        }
    }

    /// Frequency coordinates of a flat index.
    pub fn xi_at(&self, idx: usize, out: &mut [f64; MAX_DIM]) {
        let mut ax = [0usize; MAX_DIM];
        self.axis_indices(idx, &mut ax);
        for axis in 0..self.dimension {
            out[axis] = self.xi_coord(ax[axis]);
        }
    }

    /// Per-axis physical coordinate table indexed by storage index.
    pub fn x_axis_table(&self) -> Vec<f64> {
        (0..self.points_per_axis).map(|j| self.x_coord(j)).collect()
    }

    /// Per-axis frequency coordinate table indexed by storage index.
    pub fn xi_axis_table(&self) -> Vec<f64> {
        (0..self.points_per_axis).map(|j| self.xi_coord(j)).collect()
    }
}

/// Complex samples on a [`SpectralGrid`], tagged with their space.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: SpectralGrid,
    space: Space,
    values: Vec<Complex64>,
}

impl Field {
    pub fn zeros(grid: SpectralGrid, space: Space) -> Self {
        Field { grid, space, values: vec![Complex64::default(); grid.total_points()] }
    }

    pub fn from_values(grid: SpectralGrid, space: Space, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.total_points() {
            return Err(Error::invalid(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.total_points()
            )));
        }
        Ok(Field { grid, space, values })
    }

    /// Sample a physical-space function on the grid.
    pub fn from_physical_fn(grid: SpectralGrid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let mut out = Field::zeros(grid, Space::Physical);
        let mut x = [0.0; MAX_DIM];
        for idx in 0..grid.total_points() {
            grid.x_at(idx, &mut x);
            out.values[idx] = f(&x[..grid.dimension()]);
        }
        out
    }

    /// Sample a frequency-space function on the lattice.
    pub fn from_frequency_fn(grid: SpectralGrid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let mut out = Field::zeros(grid, Space::Frequency);
        let mut xi = [0.0; MAX_DIM];
        for idx in 0..grid.total_points() {
            grid.xi_at(idx, &mut xi);
            out.values[idx] = f(&xi[..grid.dimension()]);
        }
        out
    }

    pub fn grid(&self) -> SpectralGrid {
        self.grid
    }
    pub fn space(&self) -> Space {
        self.space
    }
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn expect_space(&self, space: Space, what: &str) -> Result<()> {
        if self.space != space {
            return Err(Error::invalid(format!(
                "{what}: field is in {:?} space, expected {:?}",
                self.space, space
            )));
        }
        Ok(())
    }

    /// Grid maximum of |f|; a lower bound for the continuum sup-norm.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&mut self, c: Complex64) {
        for v in &mut self.values {
            *v *= c;
        }
    }

    /// Fraction of the total |f| mass carried by points with any |x_i| > 0.8 L.
    /// Reported as a periodization diagnostic.
    pub fn boundary_mass_fraction(&self) -> f64 {
        let grid = self.grid;
        let cut = 0.8 * grid.half_width();
        let mut x = [0.0; MAX_DIM];
        let mut total = 0.0;
        let mut outer = 0.0;
        for idx in 0..grid.total_points() {
            grid.x_at(idx, &mut x);
            let a = self.values[idx].norm();
            total += a;
            if x[..grid.dimension()].iter().any(|&c| c.abs() > cut) {
                outer += a;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            outer / total
        }
    }
}

/// Parity of the sum of storage indices; the transform phase is (-1)^parity.
fn parity(grid: &SpectralGrid, idx: usize) -> bool {
    let mut ax = [0usize; MAX_DIM];
    grid.axis_indices(idx, &mut ax);
    ax[..grid.dimension()].iter().sum::<usize>() % 2 == 1
}

/// Discrete approximation of F[f], including the spacing^d quadrature weight.
pub fn forward_transform(field: &Field) -> Result<Field> {
    field.expect_space(Space::Physical, "forward_transform")?;
    let grid = field.grid();
    let mut values = field.values().to_vec();
    fft::transform_all(&mut values, &grid.shape(), true);
    let scale = grid.spacing().powi(grid.dimension() as i32);
    for idx in 0..values.len() {
        let sign = if parity(&grid, idx) { -scale } else { scale };
        values[idx] *= sign;
    }
    Field::from_values(grid, Space::Frequency, values)
}

/// Discrete approximation of F^{-1}[g] with the (2pi)^{-d} normalization.
pub fn inverse_transform(field: &Field) -> Result<Field> {
    field.expect_space(Space::Frequency, "inverse_transform")?;
    let grid = field.grid();
    let mut values = field.values().to_vec();
    for idx in 0..values.len() {
        if parity(&grid, idx) {
            values[idx] = -values[idx];
        }
    }
    fft::transform_all(&mut values, &grid.shape(), false);
    let scale = (2.0 * grid.half_width()).powi(-(grid.dimension() as i32));
    for v in &mut values {
        *v *= scale;
    }
    Field::from_values(grid, Space::Physical, values)
}

/// Field in physical space regardless of the input tag.
pub fn to_physical(field: &Field) -> Result<Field> {
    match field.space() {
        Space::Physical => Ok(field.clone()),
        Space::Frequency => inverse_transform(field),
    }
}

/// Field in frequency space regardless of the input tag.
pub fn to_frequency(field: &Field) -> Result<Field> {
    match field.space() {
        Space::Physical => forward_transform(field),
        Space::Frequency => Ok(field.clone()),
    }
}

/// Sup-norm refined by band-limited interpolation on a `factor`-times finer grid.
pub fn sup_norm_oversampled(field: &Field, factor: usize) -> Result<f64> {
    if factor < 2 || !factor.is_power_of_two() {
        return Err(Error::invalid("oversampling factor must be a power of two >= 2"));
    }
    let hat = to_frequency(field)?;
    let grid = field.grid();
    let fine = SpectralGrid::new(
        grid.dimension(),
        grid.points_per_axis() * factor,
        grid.half_width(),
    )?;
    let mut embedded = Field::zeros(fine, Space::Frequency);
    let mut ax = [0usize; MAX_DIM];
    let n = grid.points_per_axis();
    let fine_n = fine.points_per_axis();
    for idx in 0..grid.total_points() {
        grid.axis_indices(idx, &mut ax);
        let mut fine_idx = 0usize;
        for axis in 0..grid.dimension() {
            let k = grid.signed_index(ax[axis]);
            let j = if k >= 0 { k as usize } else { (k + fine_n as i64) as usize };
            fine_idx = fine_idx * fine_n + j;
        }
        embedded.values_mut()[fine_idx] = hat.values()[idx];
    }
    let _ = n;
    Ok(inverse_transform(&embedded)?.sup_norm())
}

impl Field {
    /// Binary dump: u32 d, u32 N, f64 L, u8 space tag, then interleaved
    /// re/im doubles, all little-endian.
    pub fn write_binary(&self, w: &mut impl std::io::Write) -> Result<()> {
        let g = self.grid;
        w.write_all(&(g.dimension as u32).to_le_bytes())?;
        w.write_all(&(g.points_per_axis as u32).to_le_bytes())?;
        w.write_all(&g.half_width.to_le_bytes())?;
        w.write_all(&[match self.space {
            Space::Physical => 0u8,
            Space::Frequency => 1,
        }])?;
        for v in &self.values {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(r: &mut impl std::io::Read) -> Result<Field> {
        let mut u32buf = [0u8; 4];
        let mut f64buf = [0u8; 8];
        r.read_exact(&mut u32buf)?;
        let d = u32::from_le_bytes(u32buf) as usize;
        r.read_exact(&mut u32buf)?;
        let n = u32::from_le_bytes(u32buf) as usize;
        r.read_exact(&mut f64buf)?;
        let l = f64::from_le_bytes(f64buf);
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)?;
        let space = match tag[0] {
            0 => Space::Physical,
            1 => Space::Frequency,
            t => return Err(Error::invalid(format!("bad space tag {t}"))),
        };
        let grid = SpectralGrid::new(d, n, l)?;
        let mut values = Vec::with_capacity(grid.total_points());
        for _ in 0..grid.total_points() {
            r.read_exact(&mut f64buf)?;
            let re = f64::from_le_bytes(f64buf);
            r.read_exact(&mut f64buf)?;
            let im = f64::from_le_bytes(f64buf);
            values.push(Complex64::new(re, im));
        }
        Field::from_values(grid, space, values)
    }

    /// CSV dump: one storage index column per axis (signed frequency
    /// indices in frequency space), then re and im.
    pub fn to_csv(&self) -> String {
        let g = self.grid;
        let d = g.dimension;
        let mut out = String::new();
        let prefix = match self.space {
            Space::Physical => "i",
            Space::Frequency => "k",
        };
        let header: Vec<String> = (0..d).map(|a| format!("{prefix}{a}")).collect();
        out.push_str(&header.join(","));
        out.push_str(",re,im\n");
        let mut ax = [0usize; MAX_DIM];
        for idx in 0..g.total_points() {
            g.axis_indices(idx, &mut ax);
            for a in 0..d {
                let col = match self.space {
                    Space::Physical => ax[a] as i64,
                    Space::Frequency => g.signed_index(ax[a]),
                };
                out.push_str(&col.to_string());
                out.push(',');
            }
            out.push_str(&format!("{},{}\n", self.values[idx].re, self.values[idx].im));
        }
        out
    }
}

/// Time-indexed sequence of fields on one grid with a uniform step.
#[derive(Debug, Clone)]
pub struct SpacetimeField {
    t_end: f64,
    fields: Vec<Field>,
}

impl SpacetimeField {
    pub fn new(t_end: f64, fields: Vec<Field>) -> Result<Self> {
        if fields.len() < 2 {
            return Err(Error::invalid("spacetime field needs at least two time levels"));
        }
        if !(t_end > 0.0) {
            return Err(Error::invalid("t_end must be positive"));
        }
        let g = fields[0].grid();
        let s = fields[0].space();
        if fields.iter().any(|f| f.grid() != g || f.space() != s) {
            return Err(Error::invalid("all time levels must share one grid and space"));
        }
        Ok(SpacetimeField { t_end, fields })
    }

    /// Sample `f(t, x)` on a uniform grid of `steps + 1` time levels.
    pub fn from_fn(
        grid: SpectralGrid,
        t_end: f64,
        steps: usize,
        f: impl Fn(f64, &[f64]) -> Complex64,
    ) -> Result<Self> {
        let fields = (0..=steps)
            .map(|k| {
                let t = t_end * k as f64 / steps as f64;
                Field::from_physical_fn(grid, |x| f(t, x))
            })
            .collect();
        SpacetimeField::new(t_end, fields)
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }
    pub fn steps(&self) -> usize {
        self.fields.len() - 1
    }
    pub fn dt(&self) -> f64 {
        self.t_end / self.steps() as f64
    }
    pub fn time(&self, k: usize) -> f64 {
        self.t_end * k as f64 / self.steps() as f64
    }
    pub fn grid(&self) -> SpectralGrid {
        self.fields[0].grid()
    }
    pub fn space(&self) -> Space {
        self.fields[0].space()
    }
    pub fn field(&self, k: usize) -> &Field {
        &self.fields[k]
    }
    pub fn field_mut(&mut self, k: usize) -> &mut Field {
        &mut self.fields[k]
    }
    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn to_frequency(&self) -> Result<SpacetimeField> {
        let fields = self.fields.iter().map(to_frequency).collect::<Result<Vec<_>>>()?;
        SpacetimeField::new(self.t_end, fields)
    }

    pub fn to_physical(&self) -> Result<SpacetimeField> {
        let fields = self.fields.iter().map(to_physical).collect::<Result<Vec<_>>>()?;
        SpacetimeField::new(self.t_end, fields)
    }

    /// Binary dump: u32 level count, f64 t_end, then each field's dump.
    pub fn write_binary(&self, w: &mut impl std::io::Write) -> Result<()> {
        w.write_all(&(self.fields.len() as u32).to_le_bytes())?;
        w.write_all(&self.t_end.to_le_bytes())?;
        for f in &self.fields {
            f.write_binary(w)?;
        }
        Ok(())
    }

    pub fn read_binary(r: &mut impl std::io::Read) -> Result<SpacetimeField> {
        let mut u32buf = [0u8; 4];
        let mut f64buf = [0u8; 8];
        r.read_exact(&mut u32buf)?;
        let count = u32::from_le_bytes(u32buf) as usize;
        r.read_exact(&mut f64buf)?;
        let t_end = f64::from_le_bytes(f64buf);
        let fields = (0..count).map(|_| Field::read_binary(r)).collect::<Result<Vec<_>>>()?;
        SpacetimeField::new(t_end, fields)
    }
}
