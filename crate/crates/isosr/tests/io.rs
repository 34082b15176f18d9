use byteorder::{ByteOrder, LittleEndian};
use isosr::nifti::{read_nifti, write_nifti};
use isosr::volume_io::{load_volume, save_volume, sidecar_path};
use isosr::IoError;
use isosr_core::{detect_axis_role, NormRange, Volume};
use proptest::prelude::*;

fn random_volume(dims: [usize; 3], spacing: [f64; 3], seed: u64) -> Volume {
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    Volume::from_fn(dims, spacing, |_, _, _| {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        f32::from_bits(((s >> 41) as u32) | 0x3f80_0000) - 1.0
    })
    .unwrap()
}

fn bits(v: &Volume) -> Vec<u32> {
    v.data().iter().map(|x| x.to_bits()).collect()
}

#[test]
fn table_sized_header_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("adult.nii");
    write_nifti(&Volume::zeros([80, 544, 544], [2.0, 0.41, 0.41]).unwrap(), &p).unwrap();
    let v = read_nifti(&p).unwrap();
    assert_eq!(v.dims(), [80, 544, 544]);
    for (a, b) in v.spacing().iter().zip([2.0, 0.41, 0.41]) {
        assert!((a - b).abs() <= 1e-6);
    }
    assert_eq!(detect_axis_role(&v).unwrap().lr_axis, 0);
}

#[test]
fn zero_volume_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("z.nii.gz");
    let z = Volume::zeros([4, 4, 4], [1.0; 3]).unwrap();
    save_volume(&z, &p).unwrap();
    let back = load_volume(&p).unwrap();
    assert_eq!((back.dims(), back.spacing()), ([4; 3], [1.0; 3]));
    assert!(back.data().iter().all(|&x| x.to_bits() == 0));
}

#[test]
fn random_volume_round_trips_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let v = random_volume([8, 8, 8], [0.7, 0.7, 2.1], 1);
    for name in ["r.nii", "r.nii.gz"] {
        let p = dir.path().join(name);
        save_volume(&v, &p).unwrap();
        let back = load_volume(&p).unwrap();
        assert_eq!(bits(&back), bits(&v));
        for (a, b) in back.spacing().iter().zip([0.7, 0.7, 2.1]) {
            assert!((a - b).abs() <= 1e-6);
        }
    }
    let raw = std::fs::read(dir.path().join("r.nii")).unwrap();
    let pixdim: Vec<f32> = (0..3).map(|i| LittleEndian::read_f32(&raw[80 + 4 * i..])).collect();
    assert_eq!(pixdim, [0.7f32, 0.7, 2.1]);
}

#[test]
fn normalization_range_lives_in_a_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("n.nii.gz");
    let v = Volume::from_fn([5, 4, 3], [1.0, 1.0, 3.0], |i, j, k| (i * 12 + j * 3 + k) as f32 * 70.0).unwrap();
    let n = v.normalize().unwrap();
    save_volume(&n, &p).unwrap();
    let side = std::fs::read_to_string(sidecar_path(&p)).unwrap();
    assert!(side.contains("norm_min = 0.0") && side.contains("norm_max = 4130.0"), "{side}");
    let back = load_volume(&p).unwrap();
    assert_eq!(back.norm(), Some(NormRange { min: 0.0, max: 4130.0 }));
    let restored = back.denormalize();
    for (a, b) in restored.data().iter().zip(v.data()) {
        assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0));
    }
}

#[test]
fn loading_reports_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_volume(&dir.path().join("missing.nii")), Err(IoError::Io { .. })));

    let p = dir.path().join("v.nii");
    write_nifti(&Volume::zeros([2, 3, 4], [1.0; 3]).unwrap(), &p).unwrap();
    let good = std::fs::read(&p).unwrap();

    let mut neg = good.clone();
    LittleEndian::write_f32(&mut neg[84..], -1.0);
    std::fs::write(&p, &neg).unwrap();
    assert!(matches!(read_nifti(&p), Err(IoError::Format { .. })));

    let mut rank4 = good.clone();
    LittleEndian::write_i16(&mut rank4[40..], 4);
    LittleEndian::write_i16(&mut rank4[48..], 2);
    std::fs::write(&p, &rank4).unwrap();
    assert!(matches!(read_nifti(&p), Err(IoError::Format { .. })));

    let mut rank2 = good;
    LittleEndian::write_i16(&mut rank2[40..], 2);
    std::fs::write(&p, &rank2).unwrap();
    assert!(matches!(read_nifti(&p), Err(IoError::Format { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn any_volume_round_trips(
        d0 in 1usize..7, d1 in 1usize..7, d2 in 1usize..7,
        s in prop::array::uniform3(0.05f64..8.0),
        seed in any::<u64>(),
        gz in any::<bool>(),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(if gz { "p.nii.gz" } else { "p.nii" });
        let v = random_volume([d0, d1, d2], s, seed);
        save_volume(&v, &p).unwrap();
        let back = load_volume(&p).unwrap();
        prop_assert_eq!(back.dims(), v.dims());
        prop_assert_eq!(bits(&back), bits(&v));
        for (a, b) in back.spacing().iter().zip(s) {
            prop_assert!((a - b).abs() <= 1e-6 * b.max(1.0));
        }
    }
}
