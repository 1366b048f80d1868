//! 64-byte aligned amplitude storage.

use alloc::alloc::{alloc_zeroed, dealloc, handle_alloc_error, Layout};
use core::fmt;
use core::ops::{Deref, DerefMut};
use core::ptr::NonNull;

use crate::Amplitude;

/// Minimum alignment of every amplitude buffer, in bytes.
pub const ALIGN: usize = 64;

/// A fixed-length, zero-initialised, 64-byte aligned run of amplitudes.
///
/// Amplitudes are stored as interleaved `(re, im)` pairs of `f64`.
pub struct AlignedAmps {
    ptr: NonNull<Amplitude>,
    len: usize,
}

// SAFETY: the buffer uniquely owns its allocation, like `Vec`.
unsafe impl Send for AlignedAmps {}
unsafe impl Sync for AlignedAmps {}

impl AlignedAmps {
    pub fn zeroed(len: usize) -> Self {
        if len == 0 {
            return Self {
                ptr: NonNull::dangling(),
                len: 0,
            };
        }
        let layout = Self::layout(len);
        // SAFETY: layout has non-zero size; all-zero bits are a valid Complex64.
        let raw = unsafe { alloc_zeroed(layout) } as *mut Amplitude;
        let ptr = NonNull::new(raw).unwrap_or_else(|| handle_alloc_error(layout));
        Self { ptr, len }
    }

    pub fn from_slice(src: &[Amplitude]) -> Self {
        let mut out = Self::zeroed(src.len());
        out.copy_from_slice(src);
        out
    }

    fn layout(len: usize) -> Layout {
        Layout::from_size_align(len * core::mem::size_of::<Amplitude>(), ALIGN)
            .expect("amplitude buffer too large")
    }
}

impl Drop for AlignedAmps {
    fn drop(&mut self) {
        if self.len != 0 {
            // SAFETY: allocated in `zeroed` with the same layout.
            unsafe { dealloc(self.ptr.as_ptr() as *mut u8, Self::layout(self.len)) }
        }
    }
}

impl Deref for AlignedAmps {
    type Target = [Amplitude];
    fn deref(&self) -> &[Amplitude] {
        // SAFETY: ptr is valid for len initialised elements.
        unsafe { core::slice::from_raw_parts(self.ptr.as_ptr(), self.len) }
    }
}

impl DerefMut for AlignedAmps {
    fn deref_mut(&mut self) -> &mut [Amplitude] {
        // SAFETY: unique ownership.
        unsafe { core::slice::from_raw_parts_mut(self.ptr.as_ptr(), self.len) }
    }
}

impl Clone for AlignedAmps {
    fn clone(&self) -> Self {
        Self::from_slice(self)
    }
}

impl fmt::Debug for AlignedAmps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.iter()).finish()
    }
}

impl PartialEq for AlignedAmps {
    fn eq(&self, other: &Self) -> bool {
        **self == **other
    }
}
