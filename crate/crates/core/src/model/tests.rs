use super::*;
use crate::rng::SplitMix64;

fn miniature() -> ModelSpec {
    ModelSpec::miniature((12, 12), &[4, 8], 16, PaddingPolicy::BlockSameValid).unwrap()
}

fn rand_batch(shape: &[usize], seed: u64) -> Tensor<f32> {
    let mut rng = SplitMix64::new(seed);
    Tensor::from_fn(shape, || rng.next_f64() as f32).unwrap()
}

#[test]
fn forward_output_shape_is_n_by_10() {
    let model = Model::build(&miniature(), 42).unwrap();
    let batch = rand_batch(&[3, 3, 12, 12], 1);
    let out = model
        .forward(&batch, Mode::Eval, &mut SplitMix64::new(0))
        .unwrap();
    assert_eq!(out.shape(), &[3, 10]);
}

#[test]
fn eval_rows_sum_to_one() {
    let model = Model::build(&miniature(), 42).unwrap();
    let batch = rand_batch(&[4, 3, 12, 12], 2);
    let probs = model
        .forward(&batch, Mode::Eval, &mut SplitMix64::new(0))
        .unwrap();
    for row in probs.data().chunks(10) {
        let sum: f32 = row.iter().sum();
        assert!((sum - 1.0).abs() < 1e-6);
    }
}

#[test]
fn eval_forward_is_deterministic() {
    let model = Model::build(&miniature(), 42).unwrap();
    let batch = rand_batch(&[2, 3, 12, 12], 3);
    let a = model
        .forward(&batch, Mode::Eval, &mut SplitMix64::new(0))
        .unwrap();
    let b = model
        .forward(&batch, Mode::Eval, &mut SplitMix64::new(999))
        .unwrap();
    assert_eq!(
        a.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        b.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );
}

#[test]
fn same_seed_builds_identical_models() {
    let a = Model::build(&miniature(), 7).unwrap();
    let b = Model::build(&miniature(), 7).unwrap();
    for (pa, pb) in a.parameters().iter().zip(b.parameters()) {
        assert_eq!(pa.name, pb.name);
        assert_eq!(
            pa.tensor.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            pb.tensor.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }
    let c = Model::build(&miniature(), 8).unwrap();
    assert_ne!(
        a.parameters()[0].tensor.data(),
        c.parameters()[0].tensor.data()
    );
}

#[test]
fn fresh_init_is_not_confidently_wrong() {
    let model = Model::build(&miniature(), 42).unwrap();
    let mut overconfident = 0;
    for seed in 0..100 {
        let batch = rand_batch(&[1, 3, 12, 12], seed);
        let probs = model
            .forward(&batch, Mode::Eval, &mut SplitMix64::new(0))
            .unwrap();
        let max = probs.data().iter().cloned().fold(f32::MIN, f32::max);
        if max >= 0.9 {
            overconfident += 1;
        }
    }
    assert!(overconfident <= 5, "{overconfident} of 100 over 0.9");
}

#[test]
fn every_parameter_participates_in_the_forward_pass() {
    let spec = miniature();
    let base_model = Model::build(&spec, 42).unwrap();
    let batch = rand_batch(&[1, 3, 12, 12], 11).map(|x| 0.5 + 0.5 * x);
    let baseline = base_model
        .forward(&batch, Mode::Eval, &mut SplitMix64::new(0))
        .unwrap();
    for i in 0..base_model.parameters().len() {
        let mut model = base_model.clone();
        let name = model.parameters()[i].name.clone();
        model.parameters_mut()[i].tensor.data_mut()[0] += 10.0;
        let out = model
            .forward(&batch, Mode::Eval, &mut SplitMix64::new(0))
            .unwrap();
        assert_ne!(
            out.data(),
            baseline.data(),
            "perturbing `{name}` left the output unchanged"
        );
    }
}

#[test]
fn batch_shape_is_validated() {
    let model = Model::build(&miniature(), 42).unwrap();
    let wrong_spatial = rand_batch(&[1, 3, 10, 10], 0);
    assert!(model
        .forward(&wrong_spatial, Mode::Eval, &mut SplitMix64::new(0))
        .is_err());
    let wrong_channels = rand_batch(&[1, 1, 12, 12], 0);
    assert!(model
        .forward(&wrong_channels, Mode::Eval, &mut SplitMix64::new(0))
        .is_err());
}

mod checkpoints {
    use super::*;
    use std::fs;

    #[test]
    fn round_trip_is_bitwise_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mini.cvc");
        let model = Model::build(&miniature(), 42).unwrap();
        save(&model, &path).unwrap();
        let loaded = load(&path).unwrap();

        assert_eq!(loaded.spec(), model.spec());
        for (a, b) in model.parameters().iter().zip(loaded.parameters()) {
            assert_eq!(a.name, b.name);
            assert_eq!(
                a.tensor.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                b.tensor.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
        }

        let batch = rand_batch(&[2, 3, 12, 12], 5);
        let before = model
            .forward(&batch, Mode::Eval, &mut SplitMix64::new(0))
            .unwrap();
        let after = loaded
            .forward(&batch, Mode::Eval, &mut SplitMix64::new(0))
            .unwrap();
        assert_eq!(
            before.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            after.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn file_size_is_four_bytes_per_parameter_plus_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mini.cvc");
        let model = Model::build(&miniature(), 42).unwrap();
        save(&model, &path).unwrap();
        let size = fs::metadata(&path).unwrap().len() as usize;

        let per_tensor_overhead: usize = model
            .parameters()
            .iter()
            .map(|p| 2 + p.name.len() + 1 + 4 * p.tensor.rank())
            .sum();
        let payload = 4 * model.param_count();
        // magic + version + header-length word + tensor-count word
        let fixed = 4 + 4 + 4 + 4;
        let header_len = size - fixed - per_tensor_overhead - payload;
        assert!(header_len > 0 && header_len < 4096, "header {header_len}");
    }

    #[test]
    fn truncated_file_is_a_typed_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mini.cvc");
        let model = Model::build(&miniature(), 42).unwrap();
        save(&model, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        let cut = dir.path().join("cut.cvc");
        fs::write(&cut, &bytes[..bytes.len() - 1]).unwrap();
        assert!(matches!(load(&cut), Err(Error::Truncated(_))));
    }

    #[test]
    fn bad_magic_is_a_typed_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mini.cvc");
        let model = Model::build(&miniature(), 42).unwrap();
        save(&model, &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes[0] = b'X';
        let bad = dir.path().join("bad.cvc");
        fs::write(&bad, &bytes).unwrap();
        assert!(matches!(load(&bad), Err(Error::BadMagic)));
    }

    #[test]
    fn unknown_tensor_name_is_a_typed_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mini.cvc");
        let model = Model::build(&miniature(), 42).unwrap();
        save(&model, &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        // corrupt the first tensor name in place ("block1..." -> "clock1...")
        let needle = b"block1.conv1.weight";
        let pos = bytes
            .windows(needle.len())
            .position(|w| w == needle)
            .unwrap();
        bytes[pos] = b'c';
        let bad = dir.path().join("renamed.cvc");
        fs::write(&bad, &bytes).unwrap();
        assert!(matches!(load(&bad), Err(Error::UnknownTensorName(_))));
    }

    #[test]
    fn wrong_version_is_a_typed_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mini.cvc");
        let model = Model::build(&miniature(), 42).unwrap();
        save(&model, &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes[4] = 9;
        let bad = dir.path().join("v9.cvc");
        fs::write(&bad, &bytes).unwrap();
        assert!(matches!(load(&bad), Err(Error::UnsupportedVersion(9))));
    }
}
