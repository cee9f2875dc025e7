//! Offset geometry shared by the three RHS evaluators.
//!
//! The quadrature integrates over the fundamental cell centered at each
//! target point. Offsets split into
//!   - a coarse lattice part: all grid offsets with |j1| <= nx/2-1,
//!     |j2| <= ny/2-1 outside the 3x3 block of cells around the origin
//!     (the symmetric set realizes the PV prescription),
//!   - a fine part covering the 3x3 block on a `refine`-times finer
//!     lattice (field values come from spectral upsampling),
//!   - a small disc |y| < ball_radius excluded from the fine part and
//!     restored by a local Taylor correction.
//!
//! Offsets are sorted in a fixed radial-then-angular order; the engines
//! accumulate in that order with compensated summation.

use crate::error::{CoreError, Result};
use crate::grid::GridSpec;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Offset {
    pub j1: i32,
    pub j2: i32,
    pub y1: f64,
    pub y2: f64,
    pub r2: f64,
    /// Quadrature weight multiplier (4.0 on the coarsened far-field sublattice).
    pub wmul: f64,
}

#[derive(Debug, Clone)]
pub struct QuadGeometry {
    pub grid: GridSpec,
    /// Odd upsampling factor for the near block (1 = no refinement).
    pub refine: usize,
    /// Ball radius in fine-cell units.
    pub cutoff_cells: usize,
    /// Far offsets (beyond a 25-cell box) sampled as 3x3 blocks with 9x
    /// weights; used by the time stepper, off for oracle evaluations.
    pub far_coarsen: bool,
    pub ball_radius: f64,
    pub(crate) coarse: Vec<Offset>,
    pub(crate) fine: Vec<Offset>,
    /// Sparse offset sample for pointwise kernel monitors.
    pub(crate) samples: Vec<Offset>,
}

/// Half-width of the exactly-sampled inner box when far coarsening is on.
/// Its boundary 25.5 h coincides with a 3-block edge, so the far 3x3 blocks
/// (centers at multiples of 3 with max |center| >= 27) tile exactly.
const FAR_BOX: i32 = 25;

fn radial_sort(offsets: &mut [Offset]) {
    offsets.sort_by(|a, b| {
        let ang = |o: &Offset| {
            let t = o.y2.atan2(o.y1);
            if t < 0.0 {
                t + 2.0 * std::f64::consts::PI
            } else {
                t
            }
        };
        (a.r2, ang(a))
            .partial_cmp(&(b.r2, ang(b)))
            .expect("finite offsets")
    });
}

impl QuadGeometry {
    pub fn new(grid: GridSpec, refine: usize, cutoff_cells: usize) -> Result<Self> {
        Self::with_far_coarsening(grid, refine, cutoff_cells, false)
    }

    pub fn with_far_coarsening(
        grid: GridSpec,
        refine: usize,
        cutoff_cells: usize,
        far_coarsen: bool,
    ) -> Result<Self> {
        if refine < 1 || refine % 2 == 0 {
            return Err(CoreError::Config(format!(
                "quad refinement must be odd and >= 1, got {refine}"
            )));
        }
        if cutoff_cells < 1 || cutoff_cells > refine {
            return Err(CoreError::Config(format!(
                "cutoff_cells must lie in 1..=refine (= {refine}), got {cutoff_cells}"
            )));
        }
        let (hx, hy) = (grid.hx(), grid.hy());
        let (mx, my) = (grid.nx as i32 / 2 - 1, grid.ny as i32 / 2 - 1);
        let far_coarsen = far_coarsen && mx > FAR_BOX + 4 && my > FAR_BOX + 4;

        let mut coarse = Vec::with_capacity((2 * mx as usize + 1) * (2 * my as usize + 1));
        let push = |list: &mut Vec<Offset>, j1: i32, j2: i32, wmul: f64| {
            let (y1, y2) = (j1 as f64 * hx, j2 as f64 * hy);
            list.push(Offset {
                j1,
                j2,
                y1,
                y2,
                r2: y1 * y1 + y2 * y2,
                wmul,
            });
        };
        let exact_box = if far_coarsen { FAR_BOX } else { mx.max(my) };
        for j2 in -my..=my {
            for j1 in -mx..=mx {
                if j1.abs() <= 1 && j2.abs() <= 1 {
                    continue; // handled by the fine part
                }
                if j1.abs() > exact_box || j2.abs() > exact_box {
                    continue;
                }
                push(&mut coarse, j1, j2, 1.0);
            }
        }
        if far_coarsen {
            // 3x3 far blocks, centers at multiples of 3, max |center| >= FAR_BOX + 2
            let (kx, ky) = (mx / 3, my / 3);
            for k2 in -ky..=ky {
                for k1 in -kx..=kx {
                    let (c1, c2) = (3 * k1, 3 * k2);
                    if c1.abs().max(c2.abs()) < FAR_BOX + 2 {
                        continue;
                    }
                    push(&mut coarse, c1, c2, 9.0);
                }
            }
        }
        radial_sort(&mut coarse);

        let s = refine as i32;
        let (hfx, hfy) = (hx / refine as f64, hy / refine as f64);
        let ball_radius = cutoff_cells as f64 * hfx.min(hfy);
        let half = (3 * s - 1) / 2;
        let mut fine = Vec::new();
        for m2 in -half..=half {
            for m1 in -half..=half {
                let (y1, y2) = (m1 as f64 * hfx, m2 as f64 * hfy);
                let r2 = y1 * y1 + y2 * y2;
                if r2 < ball_radius * ball_radius {
                    continue;
                }
                fine.push(Offset {
                    j1: m1,
                    j2: m2,
                    y1,
                    y2,
                    r2,
                    wmul: 1.0,
                });
            }
        }
        radial_sort(&mut fine);

        // sparse multi-scale sample of offsets for the C_alpha monitor
        let mut samples = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for &r in &[1i32, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48] {
            if r > mx.min(my) {
                break;
            }
            for a in 0..16 {
                let th = a as f64 * std::f64::consts::PI / 8.0;
                let j1 = (r as f64 * th.cos()).round() as i32;
                let j2 = (r as f64 * th.sin()).round() as i32;
                if (j1, j2) == (0, 0) || !seen.insert((j1, j2)) {
                    continue;
                }
                let (y1, y2) = (j1 as f64 * hx, j2 as f64 * hy);
                samples.push(Offset {
                    j1,
                    j2,
                    y1,
                    y2,
                    r2: y1 * y1 + y2 * y2,
                    wmul: 1.0,
                });
            }
        }
        radial_sort(&mut samples);

        Ok(QuadGeometry {
            grid,
            refine,
            cutoff_cells,
            far_coarsen,
            ball_radius,
            coarse,
            fine,
            samples,
        })
    }

    pub fn fine_grid(&self) -> GridSpec {
        GridSpec {
            nx: self.grid.nx * self.refine,
            ny: self.grid.ny * self.refine,
            lx: self.grid.lx,
            ly: self.grid.ly,
        }
    }

    /// Coarse cell area.
    pub fn coarse_area(&self) -> f64 {
        self.grid.cell_area()
    }

    /// Fine cell area.
    pub fn fine_area(&self) -> f64 {
        self.grid.cell_area() / (self.refine * self.refine) as f64
    }
}
