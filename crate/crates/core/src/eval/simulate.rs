use crate::degrade::LineDegrader;
use crate::error::Result;
use crate::volume::Volume;

/// Degrade a volume along `axis` by `scale` with the same operator used for training pairs;
/// the spacing along `axis` is multiplied by `scale`.
pub fn simulate_anisotropic(iso: &Volume, scale: f64, axis: usize) -> Result<Volume> {
    let dims = iso.dims();
    if axis > 2 {
        return Err(crate::Error::Axis(axis));
    }
    let op = LineDegrader::new(dims[axis], scale)?;
    let out = iso.map_lines(axis, op.output_len(), |line, res| op.apply(line, res))?;
    let mut spacing = iso.spacing();
    spacing[axis] *= scale;
    out.with_spacing(spacing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degrade::simulate_lr;
    use crate::volume::detect_axis_role;

    #[test]
    fn table_geometries() {
        let gt = Volume::zeros([26, 26, 26], [0.7; 3]).unwrap();
        let v = simulate_anisotropic(&gt, 2.0, 0).unwrap();
        assert_eq!(v.dims(), [13, 26, 26]);
        assert!((v.spacing()[0] - 1.4).abs() < 1e-12);
        let big = Volume::zeros([260, 2, 260], [0.7; 3]).unwrap();
        let v = simulate_anisotropic(&big, 3.0, 2).unwrap();
        assert_eq!(v.dims(), [260, 2, 87]);
        assert!((v.spacing()[2] - 2.1).abs() < 1e-12);
        assert!(simulate_anisotropic(&gt, 1.0, 0).is_err());
        assert!(simulate_anisotropic(&gt, 2.0, 3).is_err());
    }

    #[test]
    fn constant_in_constant_out() {
        let gt = Volume::new([9, 8, 7], alloc::vec![0.6; 504], [1.0; 3]).unwrap();
        let v = simulate_anisotropic(&gt, 2.5, 1).unwrap();
        assert_eq!(v.dims(), [9, 3, 7]);
        assert!(v.data().iter().all(|&x| (x - 0.6).abs() < 1e-6));
    }

    #[test]
    fn recovers_axis_and_scale() {
        let gt = Volume::from_fn([20, 20, 20], [0.7; 3], |i, j, k| ((i * j + k) % 7) as f32).unwrap();
        for (k, a) in [(2.0, 0), (2.5, 1), (3.0, 2), (3.5, 0), (4.0, 1)] {
            let role = detect_axis_role(&simulate_anisotropic(&gt, k, a).unwrap()).unwrap();
            assert_eq!(role.lr_axis, a);
            assert!((role.scale - k).abs() <= 1e-6);
        }
    }

    #[test]
    fn slicewise_equals_simulate_lr() {
        let gt = Volume::from_fn([10, 12, 9], [1.0; 3], |i, j, k| ((i * 31 + j * 17 + k * 7) % 23) as f32 / 23.0)
            .unwrap();
        let v = simulate_anisotropic(&gt, 2.0, 1).unwrap();
        // slices along axis 0 have rows along axis 1, the degraded axis
        for i in 0..10 {
            let want = simulate_lr(&gt.extract_slice(0, i).unwrap(), 2.0).unwrap();
            assert_eq!(v.extract_slice(0, i).unwrap(), want);
        }
        // slices along axis 2 have axis 1 as columns
        for k in 0..9 {
            let want = simulate_lr(&gt.extract_slice(2, k).unwrap().transpose(), 2.0).unwrap();
            assert_eq!(v.extract_slice(2, k).unwrap().transpose(), want);
        }
    }
}
