//! Single-speed lattice gas on a periodic square lattice.
//!
//! Every particle carries the same kinetic energy and hops one site per
//! step. Each site holds a 4-bit mask, one bit per direction of travel.
//! A site "changes" when its any-direction occupancy flips; with `P`
//! particles at most `P` sites can be vacated and `P` newly occupied, so a
//! step never changes more than `2P` sites.

use rand::RngExt;
use serde::Serialize;

use crate::error::{Error, Result};

pub const EAST: u8 = 1 << 0;
pub const NORTH: u8 = 1 << 1;
pub const WEST: u8 = 1 << 2;
pub const SOUTH: u8 = 1 << 3;
pub const DIRECTIONS: [u8; 4] = [EAST, NORTH, WEST, SOUTH];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeGas {
    width: usize,
    height: usize,
    cells: Vec<u8>,
    particles: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepReport {
    /// `vacated + occupied`.
    pub changes: usize,
    pub vacated: usize,
    pub occupied: usize,
    /// `(site, direction)` slots that flipped.
    pub slot_changes: usize,
    /// `2 * particle_count`.
    pub bound: usize,
    /// `changes / bound`, zero for an empty lattice.
    pub utilization: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub steps: usize,
    pub particle_count: usize,
    pub collisions: bool,
    pub min_utilization: f64,
    pub mean_utilization: f64,
    pub max_utilization: f64,
    pub max_changes: usize,
    pub conserved: bool,
    pub bound_held: bool,
    /// `2E / (dE dT)` with `dE = dT = 1`.
    pub rate_bound: f64,
}

impl LatticeGas {
    pub fn empty(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::param("width/height", "lattice dimensions must be at least 1"));
        }
        Ok(LatticeGas {
            width,
            height,
            cells: vec![0; width * height],
            particles: 0,
        })
    }

    /// Occupies each `(site, direction)` slot independently with probability `density`.
    pub fn init_random(width: usize, height: usize, density: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&density) {
            return Err(Error::param("density", format!("must lie in [0, 1], got {density}")));
        }
        let mut gas = Self::empty(width, height)?;
        let mut rng = crate::rng::from_seed(seed);
        for cell in gas.cells.iter_mut() {
            for bit in DIRECTIONS {
                if rng.random_bool(density) {
                    *cell |= bit;
                }
            }
        }
        gas.particles = gas.count_particles();
        Ok(gas)
    }

    /// Places a particle at `(x, y)` moving along `direction`. Returns
    /// false when that slot was already taken.
    pub fn insert(&mut self, x: usize, y: usize, direction: u8) -> Result<bool> {
        if x >= self.width || y >= self.height || !DIRECTIONS.contains(&direction) {
            return Err(Error::param("site", "position or direction out of range"));
        }
        let cell = &mut self.cells[y * self.width + x];
        if *cell & direction != 0 {
            return Ok(false);
        }
        *cell |= direction;
        self.particles += 1;
        Ok(true)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn particle_count(&self) -> usize {
        self.particles
    }

    pub fn cell(&self, x: usize, y: usize) -> u8 {
        self.cells[y * self.width + x]
    }

    pub fn count_particles(&self) -> usize {
        self.cells.iter().map(|c| c.count_ones() as usize).sum()
    }

    fn neighbor(&self, x: usize, y: usize, direction: u8) -> usize {
        let (w, h) = (self.width, self.height);
        let (nx, ny) = match direction {
            EAST => ((x + 1) % w, y),
            WEST => ((x + w - 1) % w, y),
            NORTH => (x, (y + 1) % h),
            SOUTH => (x, (y + h - 1) % h),
            _ => unreachable!("direction is a single bit"),
        };
        ny * w + nx
    }

    /// One synchronous update: optional head-on collisions, then every
    /// particle hops to the neighbouring site along its direction.
    ///
    /// The collision rule turns an east-west pair into a north-south pair
    /// and vice versa, conserving particle number and momentum.
    pub fn step(&self, collisions: bool) -> (LatticeGas, StepReport) {
        let mut next = vec![0u8; self.cells.len()];
        for y in 0..self.height {
            for x in 0..self.width {
                let mut mask = self.cells[y * self.width + x];
                if collisions {
                    mask = match mask {
                        m if m == EAST | WEST => NORTH | SOUTH,
                        m if m == NORTH | SOUTH => EAST | WEST,
                        m => m,
                    };
                }
                for bit in DIRECTIONS {
                    if mask & bit != 0 {
                        next[self.neighbor(x, y, bit)] |= bit;
                    }
                }
            }
        }
        let mut report = StepReport {
            changes: 0,
            vacated: 0,
            occupied: 0,
            slot_changes: 0,
            bound: 2 * self.particles,
            utilization: 0.0,
        };
        for (before, after) in self.cells.iter().zip(&next) {
            report.slot_changes += (before ^ after).count_ones() as usize;
            match (*before != 0, *after != 0) {
                (true, false) => report.vacated += 1,
                (false, true) => report.occupied += 1,
                _ => {}
            }
        }
        report.changes = report.vacated + report.occupied;
        if report.bound > 0 {
            report.utilization = report.changes as f64 / report.bound as f64;
        }
        let next = LatticeGas {
            width: self.width,
            height: self.height,
            particles: next.iter().map(|c| c.count_ones() as usize).sum(),
            cells: next,
        };
        (next, report)
    }

    /// Runs `steps` updates in place, handing each report to `observe`.
    pub fn run(
        &mut self,
        steps: usize,
        collisions: bool,
        mut observe: impl FnMut(usize, &StepReport),
    ) -> Result<RunSummary> {
        if steps == 0 {
            return Err(Error::param("steps", "must be at least 1"));
        }
        let start = self.particles;
        let mut summary = RunSummary {
            steps,
            particle_count: start,
            collisions,
            min_utilization: f64::INFINITY,
            mean_utilization: 0.0,
            max_utilization: 0.0,
            max_changes: 0,
            conserved: true,
            bound_held: true,
            rate_bound: 2.0 * start as f64,
        };
        let mut total = 0.0;
        for i in 0..steps {
            let (next, report) = self.step(collisions);
            summary.conserved &= next.particles == start;
            summary.bound_held &= report.changes <= report.bound;
            summary.max_changes = summary.max_changes.max(report.changes);
            summary.min_utilization = summary.min_utilization.min(report.utilization);
            summary.max_utilization = summary.max_utilization.max(report.utilization);
            total += report.utilization;
            observe(i, &report);
            *self = next;
        }
        summary.mean_utilization = total / steps as f64;
        Ok(summary)
    }
}
