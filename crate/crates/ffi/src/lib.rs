//! C ABI over the reconstruction pipeline.
//!
//! Objects are opaque handles created by the `bg_potential_*` constructors
//! and `bg_reconstruct`, released with the matching `bg_*_free`. Every
//! fallible call returns a `BgStatus`; on failure `bg_last_error_message`
//! describes the cause until the next call on the same thread. Array outputs
//! follow the two-call convention: the required length is always stored in
//! `*written`, and `BG_STATUS_BUFFER_TOO_SMALL` is returned when `capacity`
//! is short.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use blankgordon::pipeline::{reconstruct, ERefRule, ReconstructOptions, Reconstruction};
use blankgordon::reconstruct::OutOfRangePolicy;
use blankgordon::simulate::{evolve, Perturbation, PerturbationShape, SimConfig};
use blankgordon::verify::verify;
use blankgordon::{catalog_reference, Error, Grid, Potential};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Numerical = 3,
    OutOfRange = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BgPolicy {
    Error = 0,
    ClampEnds = 1,
    LinearExtend = 2,
    PeriodicExtend = 3,
}

/// Reconstruction settings; start from `bg_options_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BgOptions {
    /// Grid overrides; used when `points > 0`.
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    pub mode_index: usize,
    /// Nonzero to use `a` instead of the default amplitude.
    pub has_a: i32,
    pub a: f64,
    pub has_b: i32,
    pub b: f64,
    /// Nonzero to use `e_ref` instead of the designated mode's energy.
    pub has_e_ref: i32,
    pub e_ref: f64,
    /// Nonzero to extrapolate the mode from grids `h` and `h/2`.
    pub refine: i32,
    pub policy: BgPolicy,
}

/// Time-evolution settings; start from `bg_sim_options_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BgSimOptions {
    pub courant: f64,
    pub t_final: f64,
    /// Mode index added to the kink, or -1 for none.
    pub perturb_mode: i64,
    pub amplitude: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BgSimSummary {
    pub drift: f64,
    pub energy_drift: f64,
    /// Strongest measured angular frequency, NaN when none.
    pub omega: f64,
    pub steps: usize,
}

/// Opaque potential.
pub struct BgPotential {
    inner: Potential,
}

/// Opaque reconstruction: spectrum, kink and nonlinearity.
pub struct BgReconstruction {
    inner: Reconstruction,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> BgStatus {
    match e {
        Error::OutOfRange { .. } => BgStatus::OutOfRange,
        e if e.is_numerical() => BgStatus::Numerical,
        _ => BgStatus::InvalidInput,
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), BgStatus>) -> BgStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BgStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            BgStatus::Panic
        }
    }
}

fn check<T>(r: blankgordon::Result<T>) -> Result<T, BgStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, BgStatus> {
    p.as_ref().ok_or_else(|| {
        set_error(format!("{name} is null"));
        BgStatus::NullPointer
    })
}

unsafe fn deref_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, BgStatus> {
    p.as_mut().ok_or_else(|| {
        set_error(format!("{name} is null"));
        BgStatus::NullPointer
    })
}

unsafe fn write_array(
    src: &[f64],
    out: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> Result<(), BgStatus> {
    *deref_mut(written, "written")? = src.len();
    if capacity < src.len() {
        set_error(format!(
            "buffer holds {capacity} values, need {}",
            src.len()
        ));
        return Err(BgStatus::BufferTooSmall);
    }
    if out.is_null() {
        set_error("out is null".into());
        return Err(BgStatus::NullPointer);
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call on the same thread.
#[no_mangle]
pub extern "C" fn bg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn bg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

unsafe fn new_potential(p: blankgordon::Result<Potential>, out: *mut *mut BgPotential) -> BgStatus {
    guard(|| {
        let slot = deref_mut(out, "out")?;
        let inner = check(p)?;
        *slot = Box::into_raw(Box::new(BgPotential { inner }));
        Ok(())
    })
}

/// Catalog row 1..=6 with its reference data.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bg_potential_catalog(row: usize, out: *mut *mut BgPotential) -> BgStatus {
    new_potential(catalog_reference(row), out)
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bg_potential_poschl_teller(
    n: u32,
    out: *mut *mut BgPotential,
) -> BgStatus {
    new_potential(Potential::poschl_teller(n), out)
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bg_potential_delta(strength: f64, out: *mut *mut BgPotential) -> BgStatus {
    new_potential(Potential::delta_well(strength), out)
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bg_potential_harmonic(
    coefficient: f64,
    out: *mut *mut BgPotential,
) -> BgStatus {
    new_potential(Potential::harmonic(coefficient), out)
}

/// Monotone-cubic interpolant through `len` samples `(xs[i], vs[i])`.
///
/// # Safety
/// `xs` and `vs` must point to `len` readable values; `out` must be valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn bg_potential_tabulated(
    xs: *const f64,
    vs: *const f64,
    len: usize,
    out: *mut *mut BgPotential,
) -> BgStatus {
    if xs.is_null() || vs.is_null() {
        return guard(|| {
            set_error("sample arrays are null".into());
            Err(BgStatus::NullPointer)
        });
    }
    let xs = std::slice::from_raw_parts(xs, len).to_vec();
    let vs = std::slice::from_raw_parts(vs, len).to_vec();
    new_potential(Potential::tabulated(xs, vs), out)
}

/// `V(x)`; fails for the delta well.
///
/// # Safety
/// `p` must be a live handle and `value` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bg_potential_value(
    p: *const BgPotential,
    x: f64,
    value: *mut f64,
) -> BgStatus {
    guard(|| {
        let p = deref(p, "potential")?;
        *deref_mut(value, "value")? = check(p.inner.value_at(x))?;
        Ok(())
    })
}

/// # Safety
/// `p` must come from a `bg_potential_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn bg_potential_free(p: *mut BgPotential) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

#[no_mangle]
pub extern "C" fn bg_options_default() -> BgOptions {
    BgOptions {
        x_min: 0.0,
        x_max: 0.0,
        points: 0,
        mode_index: 0,
        has_a: 0,
        a: 0.0,
        has_b: 0,
        b: 0.0,
        has_e_ref: 0,
        e_ref: 0.0,
        refine: 1,
        policy: BgPolicy::Error,
    }
}

fn options(o: &BgOptions) -> Result<ReconstructOptions, BgStatus> {
    let grid = if o.points > 0 {
        Some(check(Grid::new(o.x_min, o.x_max, o.points))?)
    } else {
        None
    };
    Ok(ReconstructOptions {
        grid,
        a: (o.has_a != 0).then_some(o.a),
        b: (o.has_b != 0).then_some(o.b),
        mode_index: o.mode_index,
        e_ref: if o.has_e_ref != 0 {
            ERefRule::Fixed(o.e_ref)
        } else {
            ERefRule::ModeEnergy
        },
        refine: o.refine != 0,
        policy: match o.policy {
            BgPolicy::Error => OutOfRangePolicy::Error,
            BgPolicy::ClampEnds => OutOfRangePolicy::ClampEnds,
            BgPolicy::LinearExtend => OutOfRangePolicy::LinearExtend,
            BgPolicy::PeriodicExtend => OutOfRangePolicy::PeriodicExtend,
        },
        user_mode: None,
    })
}

/// Solves for the designated mode and builds the kink and `F`. A null
/// `options` means `bg_options_default()`.
///
/// # Safety
/// `p` must be a live handle, `options` null or readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bg_reconstruct(
    p: *const BgPotential,
    options: *const BgOptions,
    out: *mut *mut BgReconstruction,
) -> BgStatus {
    guard(|| {
        let p = deref(p, "potential")?;
        let slot = deref_mut(out, "out")?;
        let o = options
            .as_ref()
            .copied()
            .unwrap_or_else(|| bg_options_default());
        let inner = check(reconstruct(&p.inner, &self::options(&o)?))?;
        *slot = Box::into_raw(Box::new(BgReconstruction { inner }));
        Ok(())
    })
}

/// # Safety
/// `r` must come from `bg_reconstruct` or be null.
#[no_mangle]
pub unsafe extern "C" fn bg_reconstruction_free(r: *mut BgReconstruction) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Lowest discrete eigenvalue.
///
/// # Safety
/// `r` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bg_reconstruction_ground_energy(
    r: *const BgReconstruction,
    out: *mut f64,
) -> BgStatus {
    guard(|| {
        *deref_mut(out, "out")? = deref(r, "reconstruction")?.inner.spectrum.ground_energy;
        Ok(())
    })
}

/// Energy shift used in `F' = V - E_ref`.
///
/// # Safety
/// `r` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bg_reconstruction_e_ref(
    r: *const BgReconstruction,
    out: *mut f64,
) -> BgStatus {
    guard(|| {
        *deref_mut(out, "out")? = deref(r, "reconstruction")?.inner.e_ref;
        Ok(())
    })
}

/// Computed eigenvalues, ascending.
///
/// # Safety
/// `r` must be a live handle; `out` must hold `capacity` values;
/// `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bg_reconstruction_energies(
    r: *const BgReconstruction,
    out: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> BgStatus {
    guard(|| {
        let e = deref(r, "reconstruction")?.inner.spectrum.energies();
        write_array(&e, out, capacity, written)
    })
}

/// Grid nodes.
///
/// # Safety
/// As for `bg_reconstruction_energies`.
#[no_mangle]
pub unsafe extern "C" fn bg_reconstruction_grid(
    r: *const BgReconstruction,
    out: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> BgStatus {
    guard(|| {
        let x = deref(r, "reconstruction")?.inner.grid.nodes();
        write_array(&x, out, capacity, written)
    })
}

/// Kink samples on the grid.
///
/// # Safety
/// As for `bg_reconstruction_energies`.
#[no_mangle]
pub unsafe extern "C" fn bg_reconstruction_kink(
    r: *const BgReconstruction,
    out: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> BgStatus {
    guard(|| {
        let r = deref(r, "reconstruction")?;
        write_array(r.inner.kink().samples.values(), out, capacity, written)
    })
}

/// Domain `[lo, hi]` of `F`.
///
/// # Safety
/// `r` must be a live handle; `lo` and `hi` writable.
#[no_mangle]
pub unsafe extern "C" fn bg_reconstruction_domain(
    r: *const BgReconstruction,
    lo: *mut f64,
    hi: *mut f64,
) -> BgStatus {
    guard(|| {
        let (a, b) = deref(r, "reconstruction")?.inner.nonlinearity.domain();
        *deref_mut(lo, "lo")? = a;
        *deref_mut(hi, "hi")? = b;
        Ok(())
    })
}

/// `F(u)` under the reconstruction's out-of-range policy.
///
/// # Safety
/// `r` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bg_reconstruction_eval_f(
    r: *const BgReconstruction,
    u: f64,
    out: *mut f64,
) -> BgStatus {
    guard(|| {
        let r = deref(r, "reconstruction")?;
        *deref_mut(out, "out")? = check(r.inner.nonlinearity.eval_f(u))?;
        Ok(())
    })
}

/// `F'(u)`.
///
/// # Safety
/// `r` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bg_reconstruction_eval_f_prime(
    r: *const BgReconstruction,
    u: f64,
    out: *mut f64,
) -> BgStatus {
    guard(|| {
        let r = deref(r, "reconstruction")?;
        *deref_mut(out, "out")? = check(r.inner.nonlinearity.eval_f_prime(u))?;
        Ok(())
    })
}

/// Runs the verification battery; `*pass` is 1 when every check passes.
/// When `json` is non-null the report (nul-terminated) is copied into it;
/// `*needed` receives its size including the terminator.
///
/// # Safety
/// `r` must be a live handle; `pass` and `needed` writable; `json` null or
/// writable for `capacity` bytes.
#[no_mangle]
pub unsafe extern "C" fn bg_reconstruction_verify(
    r: *const BgReconstruction,
    pass: *mut i32,
    json: *mut c_char,
    capacity: usize,
    needed: *mut usize,
) -> BgStatus {
    guard(|| {
        let r = deref(r, "reconstruction")?;
        let report = check(verify(&r.inner))?;
        *deref_mut(pass, "pass")? = report.pass as i32;
        let text = report.to_json();
        *deref_mut(needed, "needed")? = text.len() + 1;
        if json.is_null() {
            return Ok(());
        }
        if capacity < text.len() + 1 {
            set_error(format!(
                "buffer holds {capacity} bytes, need {}",
                text.len() + 1
            ));
            return Err(BgStatus::BufferTooSmall);
        }
        ptr::copy_nonoverlapping(text.as_ptr().cast(), json, text.len());
        *json.add(text.len()) = 0;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn bg_sim_options_default() -> BgSimOptions {
    BgSimOptions {
        courant: 0.5,
        t_final: 20.0,
        perturb_mode: -1,
        amplitude: 1e-3,
    }
}

/// Evolves the kink, optionally perturbed by a computed mode, with clamped
/// ends and default probes.
///
/// # Safety
/// `r` must be a live handle, `options` null or readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bg_simulate(
    r: *const BgReconstruction,
    options: *const BgSimOptions,
    out: *mut BgSimSummary,
) -> BgStatus {
    guard(|| {
        let r = &deref(r, "reconstruction")?.inner;
        let slot = deref_mut(out, "out")?;
        let o = options
            .as_ref()
            .copied()
            .unwrap_or_else(|| bg_sim_options_default());
        let mut cfg = SimConfig::with_courant(r.grid, o.courant, o.t_final);
        let mut spectrum = r.spectrum.clone();
        if o.perturb_mode >= 0 {
            let k = o.perturb_mode as usize;
            if k >= spectrum.modes.len() {
                spectrum = check(blankgordon::eigensolver::solve_lowest(
                    &r.potential,
                    &r.grid,
                    k + 1,
                ))?;
            }
            cfg.perturbation = Some(Perturbation {
                amplitude: o.amplitude,
                shape: PerturbationShape::DesignatedMode(k),
            });
        }
        let s = check(evolve(&r.nonlinearity, &cfg, Some(&spectrum)))?;
        *slot = BgSimSummary {
            drift: s.drift,
            energy_drift: s.energy_drift,
            omega: s.measured_frequencies.first().map_or(f64::NAN, |p| p.omega),
            steps: s.energy_series.len() - 1,
        };
        Ok(())
    })
}
