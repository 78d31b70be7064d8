//! End-to-end reconstruction from a potential: spectrum, designated mode,
//! kink and nonlinearity.

use serde::Serialize;

use crate::eigensolver::{count_nodes, shifted_potential, solve_lowest, solve_refined, Spectrum};
use crate::error::{Error, Result};
use crate::grid::{Grid, SampledFunction};
use crate::potentials::Potential;
use crate::reconstruct::{
    build_kink, build_kink_even, build_nonlinearity, peak_normalized, KinkProfile, ModeSource,
    Nonlinearity, OutOfRangePolicy,
};

/// How the energy shift in `F' = V - E_ref` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ERefRule {
    /// Energy of the designated mode.
    ModeEnergy,
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct ReconstructOptions {
    pub grid: Option<Grid>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub mode_index: usize,
    pub e_ref: ERefRule,
    /// Extrapolate the mode from grids `h` and `h/2`.
    pub refine: bool,
    pub policy: OutOfRangePolicy,
    /// Replaces the solver's mode; peak-normalized before use.
    pub user_mode: Option<SampledFunction>,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        ReconstructOptions {
            grid: None,
            a: None,
            b: None,
            mode_index: 0,
            e_ref: ERefRule::ModeEnergy,
            refine: true,
            policy: OutOfRangePolicy::Error,
            user_mode: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub potential: Potential,
    pub grid: Grid,
    pub spectrum: Spectrum,
    pub designated: usize,
    pub e_ref: f64,
    pub nonlinearity: Nonlinearity,
}

impl Reconstruction {
    pub fn kink(&self) -> &KinkProfile {
        &self.nonlinearity.kink
    }
}

/// `(A, B)` used when the caller gives none: the catalog pair for a row's
/// ground state, `(1, 0)` otherwise.
pub fn default_ab(p: &Potential, opts: &ReconstructOptions) -> (f64, f64) {
    let catalog = p
        .reference
        .as_ref()
        .filter(|_| opts.mode_index == 0 && opts.user_mode.is_none())
        .map(|r| (r.a_ref, r.b_ref));
    let (a0, b0) = catalog.unwrap_or((1.0, 0.0));
    (opts.a.unwrap_or(a0), opts.b.unwrap_or(b0))
}

pub fn reconstruct(p: &Potential, opts: &ReconstructOptions) -> Result<Reconstruction> {
    let grid = opts.grid.unwrap_or_else(|| p.default_grid());
    let mut spectrum = solve_lowest(p, &grid, opts.mode_index + 1)?;
    spectrum.designate(opts.mode_index)?;
    let index = opts.mode_index;
    let (mode, energy, source) = match &opts.user_mode {
        Some(m) => {
            if *m.grid() != grid {
                return Err(Error::GridMismatch);
            }
            (
                peak_normalized(m)?,
                spectrum.modes[index].energy,
                ModeSource::User,
            )
        }
        None if opts.refine => {
            let r = solve_refined(p, &grid, index)?;
            let source = ModeSource::Eigen {
                index,
                energy: r.energy,
                refined: true,
            };
            (r.mode, r.energy, source)
        }
        None => {
            let m = &spectrum.modes[index];
            let source = ModeSource::Eigen {
                index,
                energy: m.energy,
                refined: false,
            };
            (m.mode.clone(), m.energy, source)
        }
    };
    let e_ref = match opts.e_ref {
        ERefRule::ModeEnergy => energy,
        ERefRule::Fixed(e) => e,
    };
    let (a, b) = default_ab(p, opts);
    let kink = if count_nodes(mode.values()) == 0 {
        build_kink(&mode, a, b)?
    } else {
        build_kink_even(&mode, a, b)?
    }
    .with_source(source);
    let shifted = shifted_potential(p, &grid, e_ref)?;
    let mut nonlinearity = build_nonlinearity(kink, &mode, shifted, e_ref, opts.policy)?;
    if p.is_delta() {
        nonlinearity.singular_node = spectrum.hamiltonian.delta_node();
    }
    Ok(Reconstruction {
        potential: p.clone(),
        grid,
        spectrum,
        designated: index,
        e_ref,
        nonlinearity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::catalog_reference;
    use crate::reconstruct::KinkCase;

    #[test]
    fn row_one_defaults() {
        let p = catalog_reference(1).unwrap();
        let r = reconstruct(&p, &ReconstructOptions::default()).unwrap();
        assert_eq!((r.kink().a, r.kink().b), (2.0, 0.0));
        assert!((r.e_ref + 1.0).abs() < 1e-8);
        let (lo, hi) = r.nonlinearity.domain();
        assert!(lo.abs() < 1e-7 && (hi - 2.0 * std::f64::consts::PI).abs() < 1e-5);
        assert!((r.nonlinearity.eval_f(1.0).unwrap() - 1f64.sin()).abs() < 1e-4);
    }

    #[test]
    fn excited_state_goes_through_even_pathway() {
        let p = Potential::poschl_teller(2).unwrap();
        let opts = ReconstructOptions {
            mode_index: 1,
            a: Some(0.5),
            b: Some(0.0),
            ..Default::default()
        };
        let r = reconstruct(&p, &opts).unwrap();
        assert_eq!(r.kink().case, KinkCase::EvenExtremum);
        assert!((r.e_ref + 1.0).abs() < 1e-8);
        for u in [-0.9, -0.5, -0.1] {
            let f = r.nonlinearity.eval_f(u).unwrap();
            assert!((f - (u - 2.0 * u * u * u)).abs() < 1e-4, "u {u}: {f}");
        }
    }

    #[test]
    fn delta_row_marks_singular_node() {
        let p = catalog_reference(5).unwrap();
        let r = reconstruct(&p, &ReconstructOptions::default()).unwrap();
        assert_eq!(r.nonlinearity.singular_node, Some(4000));
    }

    #[test]
    fn user_mode_on_wrong_grid() {
        let p = catalog_reference(1).unwrap();
        let g = Grid::new(-1.0, 1.0, 11).unwrap();
        let opts = ReconstructOptions {
            user_mode: Some(SampledFunction::from_fn(g, |_| 1.0).unwrap()),
            ..Default::default()
        };
        assert_eq!(reconstruct(&p, &opts).unwrap_err(), Error::GridMismatch);
    }
}
