use erysegm_core::imaging::to_grayscale;
use erysegm_core::registration::{
    align, align_matched, describe_image, estimate_homography_dlt, hamming, match_descriptors,
    ransac_homography_pairs, warp_to, AlignParams, Descriptor, DetectorParams, Homography,
    PointPair, RansacParams, RegistrationError, DEFAULT_RATIO_MAX,
};
use erysegm_core::{BinaryMask, RasterImage};
use erysegm_testkit as tk;
use nalgebra::Matrix3;
use rand::Rng;

fn max_abs_diff(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    (a - b).abs().max()
}

fn normalized(m: &Matrix3<f64>) -> Matrix3<f64> {
    m / m[(2, 2)]
}

#[test]
fn dlt_recovers_random_homographies() {
    let mut rng = tk::rng(11);
    for _ in 0..100 {
        let truth = tk::random_homography(&mut rng, 640, 480, 80.0);
        let pairs: Vec<PointPair> = (0..12)
            .map(|_| {
                let p = [rng.random_range(0.0..640.0), rng.random_range(0.0..480.0)];
                (p, tk::apply(&truth, p))
            })
            .collect();
        let h = estimate_homography_dlt(&pairs).unwrap();
        assert!(max_abs_diff(&normalized(h.matrix()), &truth) < 1e-7);
    }
}

#[test]
fn dlt_equivariant_under_similarity() {
    let mut rng = tk::rng(12);
    let truth = tk::random_homography(&mut rng, 300, 300, 40.0);
    let pairs: Vec<PointPair> = (0..8)
        .map(|_| {
            let p = [rng.random_range(0.0..300.0), rng.random_range(0.0..300.0)];
            (p, tk::apply(&truth, p))
        })
        .collect();
    let (s, theta, tx, ty) = (2.5f64, 0.7f64, -40.0, 13.0);
    let sim = Matrix3::new(
        s * theta.cos(),
        -s * theta.sin(),
        tx,
        s * theta.sin(),
        s * theta.cos(),
        ty,
        0.0,
        0.0,
        1.0,
    );
    let moved: Vec<PointPair> = pairs
        .iter()
        .map(|(a, b)| (tk::apply(&sim, *a), tk::apply(&sim, *b)))
        .collect();
    let h = estimate_homography_dlt(&pairs).unwrap();
    let h_moved = estimate_homography_dlt(&moved).unwrap();
    let expected = normalized(&(sim * h.matrix() * sim.try_inverse().unwrap()));
    assert!(max_abs_diff(&normalized(h_moved.matrix()), &expected) < 1e-8);
}

#[test]
fn dlt_rejects_collinear_sample() {
    let pairs: Vec<PointPair> = [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [5.0, 0.0]]
        .iter()
        .map(|&p| (p, p))
        .collect();
    assert!(matches!(
        estimate_homography_dlt(&pairs),
        Err(RegistrationError::Degenerate(_))
    ));
}

fn translation_pairs(rng: &mut impl Rng, inliers: usize, outliers: usize) -> Vec<PointPair> {
    let mut pairs: Vec<PointPair> = (0..inliers)
        .map(|_| {
            let p = [rng.random_range(0.0..200.0), rng.random_range(0.0..200.0)];
            (p, [p[0] + 5.0, p[1] - 3.0])
        })
        .collect();
    // outliers are displaced at least 20 px from where the translation puts them
    pairs.extend((0..outliers).map(|_| {
        let p = [rng.random_range(0.0..200.0), rng.random_range(0.0..200.0)];
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        let r = rng.random_range(20.0..120.0);
        (p, [p[0] + 5.0 + r * angle.cos(), p[1] - 3.0 + r * angle.sin()])
    }));
    pairs
}

#[test]
fn ransac_translation_with_outliers() {
    let mut rng = tk::rng(5);
    let pairs = translation_pairs(&mut rng, 70, 30);
    let out = ransac_homography_pairs(&pairs, &RansacParams::default()).unwrap();
    let expected = Homography::translation(5.0, -3.0);
    assert!(max_abs_diff(&normalized(out.homography.matrix()), expected.matrix()) < 1e-6);
    assert_eq!(out.inliers, (0..70).collect::<Vec<_>>());
    assert!(out.rmse < 1e-9);
}

#[test]
fn ransac_is_deterministic() {
    let mut rng = tk::rng(6);
    let pairs = translation_pairs(&mut rng, 50, 50);
    let params = RansacParams {
        seed: 99,
        ..Default::default()
    };
    let a = ransac_homography_pairs(&pairs, &params).unwrap();
    let b = ransac_homography_pairs(&pairs, &params).unwrap();
    assert_eq!(a.homography, b.homography);
    assert_eq!(a.inliers, b.inliers);
    assert_eq!(a.iterations, b.iterations);
}

#[test]
fn ransac_inliers_agree_with_reported_model() {
    let mut rng = tk::rng(7);
    let truth = tk::random_homography(&mut rng, 400, 400, 30.0);
    let mut pairs: Vec<PointPair> = (0..80)
        .map(|_| {
            let p = [rng.random_range(0.0..400.0), rng.random_range(0.0..400.0)];
            let q = tk::apply(&truth, p);
            (p, [q[0] + rng.random_range(-0.5..0.5), q[1] + rng.random_range(-0.5..0.5)])
        })
        .collect();
    pairs.extend((0..40).map(|_| {
        (
            [rng.random_range(0.0..400.0), rng.random_range(0.0..400.0)],
            [rng.random_range(0.0..400.0), rng.random_range(0.0..400.0)],
        )
    }));
    let params = RansacParams::default();
    let out = ransac_homography_pairs(&pairs, &params).unwrap();
    assert!(out.inliers.len() >= 80);
    let inlier_err: Vec<f64> = out
        .inliers
        .iter()
        .map(|&i| out.homography.transfer_error(pairs[i].0, pairs[i].1))
        .collect();
    // the final model is the least-squares refit of the reported set
    assert!(inlier_err.iter().all(|&e| e <= params.inlier_px * 1.5));
    assert!(tk::max_corner_error(&normalized(out.homography.matrix()), &truth, 400, 400) < 1.0);
}

#[test]
fn ransac_too_few_pairs() {
    let pairs = vec![([0.0, 0.0], [1.0, 1.0]); 3];
    assert!(matches!(
        ransac_homography_pairs(&pairs, &RansacParams::default()),
        Err(RegistrationError::InsufficientPoints { needed: 4, got: 3 })
    ));
}

fn gray_mae_on(a: &RasterImage, b: &RasterImage, mask: &BinaryMask) -> f64 {
    let (ga, gb) = (to_grayscale(a), to_grayscale(b));
    let (mut sum, mut n) = (0.0, 0usize);
    for (i, &m) in mask.as_slice().iter().enumerate() {
        if m {
            sum += (ga.as_slice()[i] as f64 - gb.as_slice()[i] as f64).abs();
            n += 1;
        }
    }
    sum / n as f64
}

#[test]
fn warp_round_trip_reproduces_source() {
    let img = tk::smooth_image(160, 160, 21);
    let mut rng = tk::rng(22);
    for _ in 0..5 {
        let h = Homography::from_matrix(tk::random_homography(&mut rng, 160, 160, 10.0)).unwrap();
        let (there, v1) = warp_to(&img, &h, 160, 160).unwrap();
        let (back, v2) = warp_to(&there, &h.inverse().unwrap(), 160, 160).unwrap();
        let (v1_back, _) = warp_to(
            &RasterImage::from_fn(160, 160, |x, y| if v1.get(x, y) { [255; 3] } else { [0; 3] }),
            &h.inverse().unwrap(),
            160,
            160,
        )
        .unwrap();
        let both = BinaryMask::from_fn(160, 160, |x, y| v2.get(x, y) && v1_back.pixel(x, y) == [255; 3]);
        assert!(both.count() > 160 * 160 / 2);
        let mae = gray_mae_on(&img, &back, &both);
        assert!(mae <= 1.0, "round-trip MAE {mae}");
    }
}

#[test]
fn warp_composition_matches_single_warp() {
    let img = tk::smooth_image(160, 160, 23);
    let mut rng = tk::rng(24);
    let h1 = Homography::from_matrix(tk::random_homography(&mut rng, 160, 160, 6.0)).unwrap();
    let h2 = Homography::from_matrix(tk::random_homography(&mut rng, 160, 160, 6.0)).unwrap();
    let (once, _) = warp_to(&img, &h1, 160, 160).unwrap();
    let (twice, v2) = warp_to(&once, &h2, 160, 160).unwrap();
    let (direct, v3) = warp_to(&img, &h2.compose(&h1).unwrap(), 160, 160).unwrap();
    let interior = BinaryMask::from_fn(160, 160, |x, y| {
        v2.get(x, y) && v3.get(x, y) && (20..140).contains(&x) && (20..140).contains(&y)
    });
    let mae = gray_mae_on(&twice, &direct, &interior);
    assert!(mae <= 1.0, "composition MAE {mae}");
    let (identity, valid) = warp_to(&img, &Homography::identity(), 160, 160).unwrap();
    assert_eq!(identity, img);
    assert_eq!(valid.count(), 160 * 160);
}

fn rotate90(img: &RasterImage) -> RasterImage {
    // (x, y) → (h - 1 - y, x)
    let (w, h) = img.dimensions();
    RasterImage::from_fn(h, w, |x, y| img.pixel(y, h - 1 - x))
}

#[test]
fn descriptors_follow_90_degree_rotation() {
    let img = tk::textured_image(200, 200, 31);
    let rot = rotate90(&img);
    let params = DetectorParams::default();
    let (kp, desc) = describe_image(&img, &params).unwrap();
    let (kp_rot, desc_rot) = describe_image(&rot, &params).unwrap();
    let mut distances = Vec::new();
    for (k, d) in kp.iter().zip(&desc) {
        let (x, y) = (199.0 - k.y, k.x);
        if let Some(j) = kp_rot
            .iter()
            .position(|r| (r.x - x).abs() <= 0.5 && (r.y - y).abs() <= 0.5)
        {
            distances.push(hamming(d, &desc_rot[j]));
        }
    }
    assert!(distances.len() >= 30, "only {} corresponding keypoints", distances.len());
    distances.sort_unstable();
    let p90 = distances[distances.len() * 9 / 10];
    assert!(p90 <= 64, "90th percentile Hamming distance {p90}");
}

#[test]
fn duplicated_descriptors_match_themselves() {
    let mut rng = tk::rng(41);
    let random = |rng: &mut rand_chacha::ChaCha8Rng| Descriptor {
        bits: [rng.random(), rng.random(), rng.random(), rng.random()],
    };
    let a: Vec<Descriptor> = (0..100).map(|_| random(&mut rng)).collect();
    let mut b: Vec<Descriptor> = (0..80).map(|_| random(&mut rng)).collect();
    for i in 0..20 {
        b.insert(i * 4, a[i * 5]);
    }
    let matches = match_descriptors(&a, &b, DEFAULT_RATIO_MAX).unwrap();
    assert_eq!(matches.len(), 20);
    for m in &matches {
        assert_eq!(m.distance, 0);
        assert_eq!(a[m.index_a], b[m.index_b]);
    }
}

#[test]
fn align_identity_pair() {
    let img = tk::textured_image(256, 256, 51);
    let r = align(&img, &img, &AlignParams::default()).unwrap();
    assert!(max_abs_diff(&normalized(r.homography.matrix()), &Matrix3::identity()) < 1e-3);
    assert_eq!(r.mse_post, 0.0);
    assert_eq!(r.mse_pre, 0.0);
    assert!(r.inlier_count >= 50);
}

#[test]
fn align_recovers_known_warp() {
    let img = tk::textured_image(384, 384, 61);
    let mut rng = tk::rng(62);
    let truth = tk::random_homography(&mut rng, 384, 384, 25.0);
    let reference = tk::resample(&img, &truth, 384, 384);
    let r = align(&img, &reference, &AlignParams::default()).unwrap();
    let err = tk::max_corner_error(&normalized(r.homography.matrix()), &truth, 384, 384);
    assert!(err <= 1.0, "corner error {err}");
    assert!(r.mse_post < r.mse_pre);
    assert!(r.valid_mask.is_subset_of(&BinaryMask::filled(384, 384, true)));
    assert!(r.crop_rect.fits_within(384, 384));
}

#[test]
fn align_survives_injected_outliers() {
    let img = tk::textured_image(320, 320, 71);
    let mut rng = tk::rng(72);
    let truth = tk::random_homography(&mut rng, 320, 320, 20.0);
    let reference = tk::resample(&img, &truth, 320, 320);
    let params = AlignParams::default();
    let (kp_a, da) = describe_image(&img, &params.detector).unwrap();
    let (kp_b, db) = describe_image(&reference, &params.detector).unwrap();
    let clean = match_descriptors(&da, &db, params.ratio_max).unwrap();
    let noisy = tk::inject_outliers(&clean, kp_a.len(), kp_b.len(), 0.3, &mut rng);
    let r = align_matched(&img, &reference, &kp_a, &kp_b, &noisy, &params).unwrap();
    let err = tk::max_corner_error(&normalized(r.homography.matrix()), &truth, 320, 320);
    assert!(err <= 1.0, "corner error {err}");
}

#[test]
fn featureless_pair_fails_cleanly() {
    let flat = RasterImage::filled(128, 128, [120, 120, 120]);
    match align(&flat, &flat, &AlignParams::default()) {
        Err(RegistrationError::AlignmentFailed(_)) => {}
        other => panic!("expected AlignmentFailed, got {other:?}"),
    }
}
