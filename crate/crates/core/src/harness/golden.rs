use std::collections::BTreeMap;
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{catalog_domains, rng_for, HarnessError};
use crate::coeff::{CoefficientExprs, Preset};
use crate::elliptic::{BumpField, GridFunction, ShiftedSolver};
use crate::grid::{build_domain, ShapeSpec};
use crate::linalg::SolverOptions;
use crate::operator::{assemble, Scheme};

/// Shifts over which the uniform bound constant is taken.
pub const BOUND_SHIFTS: [f64; 5] = [0.0, 0.5, 1.0, 10.0, 100.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibratedConstants {
    /// Max of `(sup u)⁺ / ‖f⁺‖_{L²}` over the calibration family, `u = 0` on
    /// the boundary.
    pub c1: f64,
    /// Max of `‖u‖∞ / ‖(μ − A_h)u‖_{L²}` over the family and
    /// [`BOUND_SHIFTS`].
    pub uniform_bound: f64,
}

/// Constants measured on the coarse calibration grid and frozen in
/// `golden/constants.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenConstants {
    pub h: f64,
    pub draws: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub constants: BTreeMap<String, CalibratedConstants>,
}

pub const GOLDEN_JSON: &str = include_str!("../../golden/constants.json");

pub fn golden_constants() -> &'static GoldenConstants {
    static CELL: OnceLock<GoldenConstants> = OnceLock::new();
    CELL.get_or_init(|| serde_json::from_str(GOLDEN_JSON).expect("golden constants parse"))
}

/// `"<domain>/<preset>"` for catalog domains, `None` otherwise.
pub fn golden_key(domain: &ShapeSpec, preset: Preset) -> Option<String> {
    catalog_domains()
        .iter()
        .any(|d| d == domain)
        .then(|| format!("{}/{}", domain.name(), preset.name()))
}

/// Draws `draws` smooth right-hand sides and measures both constants at
/// mesh width `h`.
pub fn calibrate_constants<R: Rng>(
    domain: &ShapeSpec,
    exprs: &CoefficientExprs,
    scheme: Scheme,
    h: f64,
    draws: usize,
    rng: &mut R,
) -> Result<CalibratedConstants, HarnessError> {
    let grid =
        build_domain(domain, h).map_err(|e| HarnessError::config("domain", e.to_string()))?;
    let field = exprs
        .sample(&grid)
        .map_err(|e| HarnessError::config("coefficients", e.to_string()))?;
    let op = assemble(&grid, &field, scheme)?;
    let bbox = grid.geometry().bbox();
    let family: Vec<GridFunction> = (0..draws)
        .map(|_| {
            let b = BumpField::random(rng, bbox);
            GridFunction::sample(&grid, |x, y| b.eval(x, y))
        })
        .collect::<Result<_, _>>()?;
    let mut c1: f64 = 0.0;
    let mut bound: f64 = 0.0;
    for mu in BOUND_SHIFTS {
        let s = ShiftedSolver::new(&op, mu, SolverOptions::default())?;
        for f in &family {
            let u = s.solve(f)?;
            if f.l2_norm() > 0.0 {
                bound = bound.max(u.u.sup_norm() / f.l2_norm());
            }
            let lp = f.positive_part().l2_norm();
            if mu == 0.0 && lp > 0.0 {
                c1 = c1.max(u.u.max().max(0.0) / lp);
            }
        }
    }
    Ok(CalibratedConstants {
        c1,
        uniform_bound: bound,
    })
}

/// Recomputes every golden entry with the frozen calibration settings.
pub fn recompute_golden() -> Result<GoldenConstants, HarnessError> {
    let g = golden_constants();
    let mut constants = BTreeMap::new();
    for domain in [ShapeSpec::unit_square(), ShapeSpec::l_shape()] {
        for p in Preset::ALL {
            let key = golden_key(&domain, p).expect("catalog domain");
            let mut rng = rng_for(g.seed, "calibration");
            let c = calibrate_constants(&domain, &p.exprs(), g.scheme, g.h, g.draws, &mut rng)?;
            constants.insert(key, c);
        }
    }
    Ok(GoldenConstants {
        h: g.h,
        draws: g.draws,
        seed: g.seed,
        scheme: g.scheme,
        constants,
    })
}
