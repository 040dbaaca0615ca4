use crate::error::{Error, Result};

/// `P` overlapping sub-sequences of a look-back window, each `P_L x D`.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchSet {
    /// Row-major `P x P_L x D`.
    pub patches: Vec<f64>,
    pub patch_len: usize,
    pub stride: usize,
    pub count: usize,
    pub dims: usize,
}

impl PatchSet {
    pub fn patch(&self, i: usize) -> &[f64] {
        let sz = self.patch_len * self.dims;
        &self.patches[i * sz..(i + 1) * sz]
    }
}

/// Number of patches: `floor((L - P_L) / S) + 1`.
pub fn patch_count(lookback: usize, patch_len: usize, stride: usize) -> usize {
    (lookback - patch_len) / stride + 1
}

/// Slices a row-major `L x D` window. Patch `i` (0-based) covers rows
/// `[i S, i S + P_L)`; rows past the last full patch are dropped.
pub fn patchify(x: &[f64], dims: usize, patch_len: usize, stride: usize) -> Result<PatchSet> {
    let lookback = x.len() / dims.max(1);
    if dims == 0 || x.len() != lookback * dims {
        return Err(Error::Contract("window is not a whole number of rows".into()));
    }
    if patch_len == 0 || patch_len > lookback || stride == 0 {
        return Err(Error::Parameter(format!(
            "patch length {patch_len} and stride {stride} invalid for look-back {lookback}"
        )));
    }
    let count = patch_count(lookback, patch_len, stride);
    let mut patches = Vec::with_capacity(count * patch_len * dims);
    for i in 0..count {
        patches.extend_from_slice(&x[i * stride * dims..(i * stride + patch_len) * dims]);
    }
    Ok(PatchSet {
        patches,
        patch_len,
        stride,
        count,
        dims,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn window(l: usize, d: usize) -> Vec<f64> {
        (0..l * d).map(|v| v as f64).collect()
    }

    #[test]
    fn counts() {
        assert_eq!(patchify(&window(24, 1), 1, 4, 2).unwrap().count, 11);
        assert_eq!(patchify(&window(24, 3), 3, 4, 4).unwrap().count, 6);
    }

    #[test]
    fn single_patch_is_the_window() {
        let x = window(12, 2);
        let p = patchify(&x, 2, 12, 5).unwrap();
        assert_eq!(p.count, 1);
        assert_eq!(p.patch(0), &x[..]);
    }

    #[test]
    fn too_long_patch() {
        assert_eq!(patchify(&window(4, 1), 1, 5, 1).unwrap_err().kind(), "parameter");
    }

    #[test]
    fn slices_follow_stride() {
        let x = window(10, 2);
        let p = patchify(&x, 2, 3, 3).unwrap();
        assert_eq!(p.count, 3);
        assert_eq!(p.patch(2), &x[12..18]);
    }

    proptest! {
        #[test]
        fn non_overlapping_patches_rebuild_prefix(l in 1usize..40, pl in 1usize..10, d in 1usize..4) {
            prop_assume!(pl <= l);
            let x = window(l, d);
            let p = patchify(&x, d, pl, pl).unwrap();
            prop_assert_eq!(p.count, (l - pl) / pl + 1);
            prop_assert_eq!(&p.patches[..], &x[..p.count * pl * d]);
        }
    }
}
