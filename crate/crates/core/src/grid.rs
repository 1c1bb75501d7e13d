//! Periodic uniform grids on the unit torus and the discrete operators the
//! solver and diagnostics are built from.
//!
//! Nodes live at x_i = i*h with h = 1/n; indices wrap modularly, so there are
//! no ghost cells. Fields are stored row-major over axes (axis 0 outermost).
//! Reductions run in a fixed index order so identical inputs give bit
//! identical outputs.

use crate::error::Error;
use crate::Result;
use std::io::{BufRead, Write};

/// Uniform periodic grid on the torus (R/Z)^dim, dim in {1, 2}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicGrid {
    dim: usize,
    n: usize,
    h: f64,
}

impl PeriodicGrid {
    /// `dim` must be 1 or 2 and `n >= 4` (centered stencils need distinct
    /// neighbors).
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dim must be 1 or 2, got {dim}")));
        }
        if n < 4 {
            return Err(Error::InvalidGrid(format!("n must be at least 4, got {n}")));
        }
        Ok(PeriodicGrid {
            dim,
            n,
            h: 1.0 / n as f64,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of nodes, n^dim.
    #[inline]
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat index of the node shifted by `offset` cells along `axis`,
    /// wrapping periodically.
    #[inline]
    pub fn neighbor(&self, index: usize, axis: usize, offset: isize) -> usize {
        debug_assert!(axis < self.dim);
        let n = self.n as isize;
        if self.dim == 1 {
            (((index as isize + offset) % n + n) % n) as usize
        } else {
            let i = (index / self.n) as isize;
            let j = (index % self.n) as isize;
            let (i, j) = if axis == 0 {
                (((i + offset) % n + n) % n, j)
            } else {
                (i, ((j + offset) % n + n) % n)
            };
            (i * n + j) as usize
        }
    }

    /// Physical coordinates of a node, one entry per axis.
    pub fn coords(&self, index: usize) -> Vec<f64> {
        match self.dim {
            1 => vec![index as f64 * self.h],
            _ => vec![(index / self.n) as f64 * self.h, (index % self.n) as f64 * self.h],
        }
    }
}

/// Node-valued scalar field on a periodic grid. All values stay finite;
/// constructors reject NaN/inf.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: PeriodicGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn constant(grid: PeriodicGrid, c: f64) -> Result<Self> {
        ScalarField::from_values(grid, vec![c; grid.len()])
    }

    pub fn from_values(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "field length {} does not match grid ({} nodes)",
                values.len(),
                grid.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite field value {bad}")));
        }
        Ok(ScalarField { grid, values })
    }

    /// Evaluates `f` at every node's coordinates.
    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.coords(i))).collect();
        ScalarField::from_values(grid, values)
    }

    #[inline]
    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Field shifted by whole cells (periodic), one offset per axis.
    pub fn translate(&self, shift: &[isize]) -> ScalarField {
        assert_eq!(shift.len(), self.grid.dim());
        let mut out = self.values.clone();
        for idx in 0..self.values.len() {
            // value at node idx comes from node idx - shift
            let mut src = idx;
            for (axis, s) in shift.iter().enumerate() {
                src = self.grid.neighbor(src, axis, -s);
            }
            out[idx] = self.values[src];
        }
        ScalarField {
            grid: self.grid,
            values: out,
        }
    }
}

/// Node-valued vector field; one component array per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: PeriodicGrid,
    components: Vec<Vec<f64>>,
}

impl VectorField {
    #[inline]
    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    /// Component array along `axis`.
    #[inline]
    pub fn component(&self, axis: usize) -> &[f64] {
        &self.components[axis]
    }

    /// Euclidean norm of the vector at a node.
    pub fn norm_at(&self, index: usize) -> f64 {
        self.components
            .iter()
            .map(|c| c[index] * c[index])
            .sum::<f64>()
            .sqrt()
    }
}

/// Second-order centered gradient, component a at node x:
/// (f(x + h e_a) - f(x - h e_a)) / (2h), periodic wrap.
pub fn gradient_centered(f: &ScalarField) -> VectorField {
    let grid = *f.grid();
    let two_h = 2.0 * grid.h();
    let v = f.values();
    let components = (0..grid.dim())
        .map(|axis| {
            (0..v.len())
                .map(|i| {
                    let up = v[grid.neighbor(i, axis, 1)];
                    let dn = v[grid.neighbor(i, axis, -1)];
                    (up - dn) / two_h
                })
                .collect()
        })
        .collect();
    VectorField { grid, components }
}

/// Max over nodes of the Euclidean norm of the centered gradient.
pub fn sup_grad_norm(f: &ScalarField) -> f64 {
    let g = gradient_centered(f);
    (0..f.values().len()).fold(0.0f64, |m, i| {
        let sq: f64 = g.components.iter().map(|c| c[i] * c[i]).sum();
        m.max(sq)
    })
    .sqrt()
}

/// Conservative divergence of per-axis face fluxes.
///
/// `fluxes[a][i]` is the flux through the face between node i and its +1
/// neighbor along axis a. The node value is sum_a (F_{i+1/2} - F_{i-1/2}) / h,
/// so summing the output over all nodes telescopes to zero.
pub fn divergence_of_face_flux(grid: &PeriodicGrid, fluxes: &[Vec<f64>]) -> ScalarField {
    assert_eq!(fluxes.len(), grid.dim(), "one flux array per axis");
    for f in fluxes {
        assert_eq!(f.len(), grid.len(), "flux arrays are node-shaped");
    }
    let h = grid.h();
    let values = (0..grid.len())
        .map(|i| {
            (0..grid.dim())
                .map(|axis| {
                    let fm = fluxes[axis][grid.neighbor(i, axis, -1)];
                    (fluxes[axis][i] - fm) / h
                })
                .sum()
        })
        .collect();
    ScalarField {
        grid: *grid,
        values,
    }
}

/// (min, max) over nodes, fixed scan order.
pub fn field_minmax(f: &ScalarField) -> (f64, f64) {
    f.values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

/// Discrete mass h^dim * sum of values, summed in index order.
pub fn mass(f: &ScalarField) -> f64 {
    let cell = f.grid().h().powi(f.grid().dim() as i32);
    cell * f.values().iter().sum::<f64>()
}

/// Writes a snapshot: header line `# d=<dim> n=<n> t=<time>` then one value
/// per line in row-major order, 17 significant digits (lossless for f64).
pub fn write_snapshot<W: Write>(w: &mut W, f: &ScalarField, t: f64) -> Result<()> {
    writeln!(w, "# d={} n={} t={:.16e}", f.grid().dim(), f.grid().n(), t)?;
    for v in f.values() {
        writeln!(w, "{v:.16e}")?;
    }
    Ok(())
}

/// Reads a snapshot written by [`write_snapshot`]; returns the field and its
/// recorded time.
pub fn read_snapshot<R: BufRead>(r: &mut R) -> Result<(ScalarField, f64)> {
    let mut header = String::new();
    r.read_line(&mut header)?;
    let header = header.trim();
    let mut dim = None;
    let mut n = None;
    let mut t = None;
    if let Some(rest) = header.strip_prefix('#') {
        for tok in rest.split_whitespace() {
            if let Some((k, v)) = tok.split_once('=') {
                match k {
                    "d" => dim = v.parse::<usize>().ok(),
                    "n" => n = v.parse::<usize>().ok(),
                    "t" => t = v.parse::<f64>().ok(),
                    _ => {}
                }
            }
        }
    }
    let (dim, n, t) = match (dim, n, t) {
        (Some(d), Some(n), Some(t)) => (d, n, t),
        _ => return Err(Error::Parse(format!("bad snapshot header: '{header}'"))),
    };
    let grid = PeriodicGrid::new(dim, n)?;
    let mut values = Vec::with_capacity(grid.len());
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        values.push(
            line.parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad snapshot value '{line}': {e}")))?,
        );
    }
    let field = ScalarField::from_values(grid, values)?;
    Ok((field, t))
}
