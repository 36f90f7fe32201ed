//! C interface to `mfspin`.
//!
//! Every fallible function returns an [`MfsStatus`]; on failure the message
//! is available from [`mfs_last_error`] on the same thread. Distributions
//! are opaque handles released with [`mfs_distribution_free`]. Matrices are
//! row-major `k * k` arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mfspin::exact::{cw_distribution, exact_moments, ms_distribution, MagnetizationDistribution};
use mfspin::meanfield::solve_cw;
use mfspin::sampling::Sampler;
use mfspin::{cw_invert, ms_invert, CwParams, Error, ErrorKind, FractionVector, Matrix, MsParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfsStatus {
    Ok = 0,
    NullPointer = 1,
    Invalid = 2,
    Numerical = 3,
    Resource = 4,
    Panic = 5,
}

/// Exact magnetization distribution of one model.
pub struct MfsDistribution {
    inner: MagnetizationDistribution,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> MfsStatus {
    match err.kind() {
        ErrorKind::Usage | ErrorKind::Invalid => MfsStatus::Invalid,
        ErrorKind::Numerical => MfsStatus::Numerical,
        ErrorKind::Resource | ErrorKind::Io => MfsStatus::Resource,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MfsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MfsStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            MfsStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            MfsStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, what: &'static str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure::Null(what))
    } else {
        Ok(())
    }
}

/// # Safety
/// `p` must be null or point to `len` readable values.
unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    non_null(p, what)?;
    Ok(std::slice::from_raw_parts(p, len))
}

/// # Safety
/// `p` must be null or point to `len` writable values.
unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &'static str) -> Result<&'a mut [T], Failure> {
    non_null(p, what)?;
    Ok(std::slice::from_raw_parts_mut(p, len))
}

/// Message of the last failure on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mfs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mfs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Curie-Weiss distribution with `n` spins.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn mfs_distribution_new_cw(
    n: usize,
    coupling: f64,
    field: f64,
    out: *mut *mut MfsDistribution,
) -> MfsStatus {
    guard(|| {
        non_null(out, "out")?;
        let inner = cw_distribution(&CwParams::new(n, coupling, field)?)?;
        *out = Box::into_raw(Box::new(MfsDistribution { inner }));
        Ok(())
    })
}

/// `k`-species distribution; `coupling` is `k * k` row-major and symmetric.
///
/// # Safety
/// `sizes` and `field` must hold `k` values, `coupling` `k * k`, and `out`
/// must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn mfs_distribution_new_ms(
    k: usize,
    sizes: *const usize,
    coupling: *const f64,
    field: *const f64,
    out: *mut *mut MfsDistribution,
) -> MfsStatus {
    guard(|| {
        non_null(out, "out")?;
        let sizes = slice(sizes, k, "sizes")?;
        let j = slice(coupling, k * k, "coupling")?;
        let h = slice(field, k, "field")?;
        let params = MsParams::new(sizes.to_vec(), Matrix::from_fn(k, |a, b| j[a * k + b]), h.to_vec())?;
        let inner = ms_distribution(&params)?;
        *out = Box::into_raw(Box::new(MfsDistribution { inner }));
        Ok(())
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `dist` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mfs_distribution_free(dist: *mut MfsDistribution) {
    if !dist.is_null() {
        drop(Box::from_raw(dist));
    }
}

/// Number of grid cells and of species.
///
/// # Safety
/// `dist` must be a live handle; `cells` and `species` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mfs_distribution_shape(
    dist: *const MfsDistribution,
    cells: *mut usize,
    species: *mut usize,
) -> MfsStatus {
    guard(|| {
        non_null(dist, "dist")?;
        non_null(cells, "cells")?;
        non_null(species, "species")?;
        *cells = (*dist).inner.len();
        *species = (*dist).inner.species();
        Ok(())
    })
}

/// Copies the probability table (`cells` values) into `out`.
///
/// # Safety
/// `dist` must be a live handle and `out` hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn mfs_distribution_probabilities(
    dist: *const MfsDistribution,
    out: *mut f64,
    len: usize,
) -> MfsStatus {
    guard(|| {
        non_null(dist, "dist")?;
        let p = (*dist).inner.probabilities();
        if len < p.len() {
            return Err(Error::InvalidParams(format!("buffer of {len} for {} cells", p.len())).into());
        }
        slice_mut(out, p.len(), "out")?.copy_from_slice(p);
        Ok(())
    })
}

/// Exact `ω(m_l)` into `mean` (`k` values) and `χ_N` into `chi`
/// (`k * k`, row-major).
///
/// # Safety
/// `dist` must be a live handle; `mean` and `chi` sized as above.
#[no_mangle]
pub unsafe extern "C" fn mfs_distribution_moments(
    dist: *const MfsDistribution,
    mean: *mut f64,
    chi: *mut f64,
) -> MfsStatus {
    guard(|| {
        non_null(dist, "dist")?;
        let k = (*dist).inner.species();
        let mean = slice_mut(mean, k, "mean")?;
        let chi = slice_mut(chi, k * k, "chi")?;
        let mom = exact_moments(&(*dist).inner);
        mean.copy_from_slice(&mom.mean);
        chi.copy_from_slice(mom.finite_size_chi.as_slice());
        Ok(())
    })
}

/// Draws `m` up-spin count vectors into `counts` (`m * k` values, one
/// vector per draw). The same seed gives the same draws.
///
/// # Safety
/// `dist` must be a live handle and `counts` hold `m * k` values.
#[no_mangle]
pub unsafe extern "C" fn mfs_distribution_sample(
    dist: *const MfsDistribution,
    m: usize,
    seed: u64,
    counts: *mut u32,
) -> MfsStatus {
    guard(|| {
        non_null(dist, "dist")?;
        let k = (*dist).inner.species();
        let out = slice_mut(counts, m * k, "counts")?;
        let sample = Sampler::new(&(*dist).inner)?.draw(m, seed)?;
        out.copy_from_slice(sample.all_counts());
        Ok(())
    })
}

/// Fixed points of `m = tanh(J m + h)`, ascending. Writes up to `cap`
/// magnetizations and stability flags; `count` receives the total number.
///
/// # Safety
/// `magnetization` and `stable` must hold `cap` values (may be NULL when
/// `cap` is 0); `count` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mfs_solve_cw(
    coupling: f64,
    field: f64,
    magnetization: *mut f64,
    stable: *mut u8,
    cap: usize,
    count: *mut usize,
) -> MfsStatus {
    guard(|| {
        non_null(count, "count")?;
        let sols = solve_cw(coupling, field)?;
        *count = sols.len();
        let n = cap.min(sols.len());
        if n > 0 {
            let ms = slice_mut(magnetization, n, "magnetization")?;
            let st = slice_mut(stable, n, "stable")?;
            for (i, s) in sols.iter().take(n).enumerate() {
                ms[i] = s.scalar();
                st[i] = u8::from(s.stable);
            }
        }
        Ok(())
    })
}

/// `J = 1/(1 − m²) − 1/χ`, `h = atanh(m) − J m`.
///
/// # Safety
/// `coupling` and `field` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mfs_cw_invert(m: f64, chi: f64, coupling: *mut f64, field: *mut f64) -> MfsStatus {
    guard(|| {
        non_null(coupling, "coupling")?;
        non_null(field, "field")?;
        let (j, h) = cw_invert(m, chi)?;
        *coupling = j;
        *field = h;
        Ok(())
    })
}

/// `k`-species inversion from magnetizations `m`, susceptibility `chi`
/// (`k * k`) and population fractions `alpha`.
///
/// # Safety
/// `m`, `alpha`, `field` must hold `k` values; `chi`, `coupling` `k * k`.
#[no_mangle]
pub unsafe extern "C" fn mfs_ms_invert(
    k: usize,
    m: *const f64,
    chi: *const f64,
    alpha: *const f64,
    coupling: *mut f64,
    field: *mut f64,
) -> MfsStatus {
    guard(|| {
        let m = slice(m, k, "m")?;
        let chi = slice(chi, k * k, "chi")?;
        let alpha = FractionVector::new(slice(alpha, k, "alpha")?.to_vec())?;
        let j_out = slice_mut(coupling, k * k, "coupling")?;
        let h_out = slice_mut(field, k, "field")?;
        let inv = ms_invert(m, &Matrix::from_fn(k, |a, b| chi[a * k + b]), &alpha)?;
        j_out.copy_from_slice(inv.j_exp.as_slice());
        h_out.copy_from_slice(&inv.h_exp);
        Ok(())
    })
}
