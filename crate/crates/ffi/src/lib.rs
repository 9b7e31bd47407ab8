//! C ABI over `heisenberg-polymer`.
//!
//! Objects are opaque heap handles released with the matching `*_free`.
//! Every fallible call returns an `int32_t` status; on failure a message is
//! available from [`hp_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use heisenberg_polymer::dynamics::{self, Method};
use heisenberg_polymer::polymer::{self, PolymerCoefficients};
use heisenberg_polymer::{apply_t, Boundary, Error, IntertwinerSpec, Lattice, SectorVector, SubsetId, SubsetVector};

pub const HP_OK: i32 = 0;
pub const HP_ERR_ARGUMENT: i32 = 2;
pub const HP_ERR_SIZE: i32 = 3;
pub const HP_ERR_DEGENERATE: i32 = 4;
pub const HP_ERR_IO: i32 = 5;
pub const HP_ERR_NULL: i32 = 6;
pub const HP_ERR_PANIC: i32 = 7;

pub const HP_METHOD_EXACT: i32 = 0;
pub const HP_METHOD_RK4: i32 = 1;

/// Lattice handle.
pub struct HpLattice(Lattice);

/// Subset-indexed vector handle (wave function or superset sums).
pub struct HpState(SubsetVector);

/// Polymer coefficient handle.
pub struct HpPolymer(PolymerCoefficients);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> i32 {
    match err {
        Error::Argument(_) | Error::Json(_) => HP_ERR_ARGUMENT,
        Error::Size { .. } => HP_ERR_SIZE,
        Error::DegenerateNormalization { .. } => HP_ERR_DEGENERATE,
        Error::Io(_) => HP_ERR_IO,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> i32 {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HP_OK,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            HP_ERR_NULL
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".to_owned());
            HP_ERR_PANIC
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &'static str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next `hp_*` call on the same thread.
#[no_mangle]
pub extern "C" fn hp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Build a rectangular lattice with side lengths `dims[0..n_dims]`.
///
/// # Safety
/// `dims` must point to `n_dims` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hp_lattice_new(dims: *const usize, n_dims: usize, periodic: bool, out: *mut *mut HpLattice) -> i32 {
    guard(|| {
        let dims = slice(dims, n_dims, "dims")?;
        let boundary = if periodic { Boundary::Periodic } else { Boundary::Open };
        put(out, HpLattice(Lattice::new(dims, boundary)?))
    })
}

/// Vertex count, or 0 for NULL.
///
/// # Safety
/// `lat` must be NULL or a live lattice handle.
#[no_mangle]
pub unsafe extern "C" fn hp_lattice_n_vertices(lat: *const HpLattice) -> usize {
    lat.as_ref().map_or(0, |l| l.0.n_vertices())
}

/// # Safety
/// `lat` must be NULL or a handle from [`hp_lattice_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hp_lattice_free(lat: *mut HpLattice) {
    if !lat.is_null() {
        drop(Box::from_raw(lat));
    }
}

/// Copy `2^n_vertices` coefficients, indexed by subset bitmask.
///
/// # Safety
/// `coeffs` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hp_state_from_coeffs(n_vertices: usize, coeffs: *const f64, len: usize, out: *mut *mut HpState) -> i32 {
    guard(|| {
        let c = slice(coeffs, len, "coeffs")?;
        put(out, HpState(SubsetVector::from_coeffs(n_vertices, c.to_vec())?))
    })
}

/// Number of coefficients, or 0 for NULL.
///
/// # Safety
/// `state` must be NULL or a live state handle.
#[no_mangle]
pub unsafe extern "C" fn hp_state_len(state: *const HpState) -> usize {
    state.as_ref().map_or(0, |s| s.0.len())
}

/// Copy the coefficients into `buf`, which must hold exactly `len` doubles.
///
/// # Safety
/// `state` must be a live handle; `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hp_state_copy_coeffs(state: *const HpState, buf: *mut f64, len: usize) -> i32 {
    guard(|| {
        let s = deref(state, "state")?;
        if len != s.0.len() {
            return Err(Error::Argument(format!("buffer holds {len} values, state has {}", s.0.len())).into());
        }
        slice_mut(buf, len, "buf")?.copy_from_slice(s.0.coeffs());
        Ok(())
    })
}

/// # Safety
/// `state` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hp_state_total_sum(state: *const HpState, out: *mut f64) -> i32 {
    guard(|| {
        let s = deref(state, "state")?;
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        *out = s.0.total_sum();
        Ok(())
    })
}

/// # Safety
/// `state` must be NULL or a state handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hp_state_free(state: *mut HpState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Evolve `state` to time `t` with `HP_METHOD_EXACT` or `HP_METHOD_RK4`.
///
/// # Safety
/// `lat` and `state` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hp_evolve(
    lat: *const HpLattice,
    state: *const HpState,
    t: f64,
    method: i32,
    dt: f64,
    out: *mut *mut HpState,
) -> i32 {
    guard(|| {
        let lat = deref(lat, "lat")?;
        let f = deref(state, "state")?;
        let method = match method {
            HP_METHOD_EXACT => Method::ExactExpm,
            HP_METHOD_RK4 => Method::Rk4,
            other => return Err(Error::Argument(format!("unknown method code {other}")).into()),
        };
        put(out, HpState(dynamics::evolve_to(&lat.0, &f.0, t, method, dt)?))
    })
}

/// Superset sums of a normalized state.
///
/// # Safety
/// `state` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hp_compute_c(state: *const HpState, out: *mut *mut HpState) -> i32 {
    guard(|| put(out, HpState(polymer::compute_c(&deref(state, "state")?.0)?)))
}

/// Polymer coefficients from superset sums.
///
/// # Safety
/// `c` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hp_solve_u(c: *const HpState, out: *mut *mut HpPolymer) -> i32 {
    guard(|| put(out, HpPolymer(polymer::solve_u(&deref(c, "c")?.0)?)))
}

/// `hp_compute_c` followed by `hp_solve_u`.
///
/// # Safety
/// `state` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hp_decompose(state: *const HpState, out: *mut *mut HpPolymer) -> i32 {
    guard(|| put(out, HpPolymer(polymer::decompose(&deref(state, "state")?.0)?)))
}

/// Weight of the subset `mask`: `φ_i` for a singleton, `u(S)` for larger
/// sets, 0 for the empty set.
///
/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hp_polymer_get(p: *const HpPolymer, mask: u32, out: *mut f64) -> i32 {
    guard(|| {
        let p = deref(p, "p")?;
        if (mask as u64) >> p.0.n_vertices() != 0 {
            return Err(Error::Argument(format!("mask {mask:#x} exceeds {} vertices", p.0.n_vertices())).into());
        }
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        *out = p.0.get(SubsetId(mask));
        Ok(())
    })
}

/// Copy of `p` with every polymer larger than `k_max` sites zeroed.
///
/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hp_polymer_truncate(p: *const HpPolymer, k_max: usize, out: *mut *mut HpPolymer) -> i32 {
    guard(|| put(out, HpPolymer(polymer::truncate(&deref(p, "p")?.0, k_max)?)))
}

/// Wave function rebuilt from polymer coefficients.
///
/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hp_reconstruct_f(p: *const HpPolymer, out: *mut *mut HpState) -> i32 {
    guard(|| put(out, HpState(polymer::reconstruct_f(&deref(p, "p")?.0))))
}

/// # Safety
/// `p` must be NULL or a polymer handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hp_polymer_free(p: *mut HpPolymer) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Apply `T^{r,s}` to a sector-`r` vector. Entries are ordered by
/// increasing bitmask within the sector; `output` must hold `C(N, s)`.
///
/// # Safety
/// `input` must point to `in_len` readable doubles and `output` to
/// `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hp_apply_t(
    n_vertices: usize,
    r: usize,
    s: usize,
    input: *const f64,
    in_len: usize,
    output: *mut f64,
    out_len: usize,
) -> i32 {
    guard(|| {
        let g = SectorVector::from_entries(n_vertices, r, slice(input, in_len, "input")?.to_vec())?;
        let y = apply_t(IntertwinerSpec::new(r, s), &g)?;
        if out_len != y.entries().len() {
            return Err(Error::Argument(format!("output holds {out_len} values, sector {s} has {}", y.entries().len())).into());
        }
        slice_mut(output, out_len, "output")?.copy_from_slice(y.entries());
        Ok(())
    })
}
