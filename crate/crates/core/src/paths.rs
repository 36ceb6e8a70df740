//! Coupled fine/coarse log-price paths on uniform grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::{IncrementSampler, LevyModel};
use crate::rng::RngStream;

/// Largest number of fine steps a single path may have (4^12).
pub const MAX_STEPS: u64 = 1 << 24;

/// Level-`level` grid: `refine^level` uniform steps over `[0, maturity]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub level: u32,
    pub refine: u32,
    pub maturity: f64,
}

impl GridSpec {
    pub fn new(level: u32, refine: u32, maturity: f64) -> Result<Self> {
        let grid = Self {
            level,
            refine,
            maturity,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.refine < 2 {
            return Err(Error::param("M", format!("refinement factor must be >= 2, got {}", self.refine)));
        }
        if !(self.maturity > 0.0) || !self.maturity.is_finite() {
            return Err(Error::param("T", format!("maturity must be positive, got {}", self.maturity)));
        }
        match (self.refine as u64).checked_pow(self.level) {
            Some(n) if n <= MAX_STEPS => Ok(()),
            _ => Err(Error::param(
                "level",
                format!("{}^{} steps exceeds the limit of {MAX_STEPS}", self.refine, self.level),
            )),
        }
    }

    pub fn n_fine(&self) -> usize {
        (self.refine as usize).pow(self.level)
    }

    /// Number of coarse steps, `None` at level 0.
    pub fn n_coarse(&self) -> Option<usize> {
        (self.level > 0).then(|| self.n_fine() / self.refine as usize)
    }

    pub fn h_fine(&self) -> f64 {
        self.maturity / self.n_fine() as f64
    }

    /// The grid one level down; its fine grid is this grid's coarse grid.
    pub fn coarser(&self) -> Option<GridSpec> {
        (self.level > 0).then(|| GridSpec {
            level: self.level - 1,
            ..*self
        })
    }
}

/// One coupled realisation. `fine[0] = 0`; `coarse[k] == fine[k * M]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PathGrid {
    pub fine: Vec<f64>,
    pub coarse: Option<Vec<f64>>,
}

impl PathGrid {
    pub fn fine_max(&self) -> f64 {
        max_of(&self.fine)
    }

    pub fn coarse_max(&self) -> Option<f64> {
        self.coarse.as_deref().map(max_of)
    }

    pub fn terminal(&self) -> f64 {
        *self.fine.last().expect("non-empty path")
    }
}

pub(crate) fn max_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Reusable generator: the increment sampler is built once per grid.
#[derive(Debug, Clone)]
pub struct PathGenerator {
    grid: GridSpec,
    sampler: IncrementSampler,
}

impl PathGenerator {
    pub fn new(model: &LevyModel, grid: GridSpec) -> Result<Self> {
        grid.validate()?;
        Ok(Self {
            grid,
            sampler: model.increment_sampler(grid.h_fine())?,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Fills `path` in place, reusing its buffers.
    pub fn generate_into(&self, rng: &mut RngStream, path: &mut PathGrid) {
        let n = self.grid.n_fine();
        path.fine.clear();
        path.fine.reserve(n + 1);
        let mut x = 0.0;
        path.fine.push(x);
        for _ in 0..n {
            x += self.sampler.sample(rng);
            path.fine.push(x);
        }
        match self.grid.n_coarse() {
            None => path.coarse = None,
            Some(_) => {
                let stride = self.grid.refine as usize;
                let coarse = path.coarse.get_or_insert_with(Vec::new);
                coarse.clear();
                coarse.extend(path.fine.iter().step_by(stride).copied());
            }
        }
    }

    pub fn generate(&self, rng: &mut RngStream) -> PathGrid {
        let mut path = PathGrid::default();
        self.generate_into(rng, &mut path);
        path
    }
}

pub fn generate_coupled_path(model: &LevyModel, grid: GridSpec, s: &mut RngStream) -> Result<PathGrid> {
    Ok(PathGenerator::new(model, grid)?.generate(s))
}
