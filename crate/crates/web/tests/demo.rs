use lgm_web::{planar_mixture, AugmentDemo, PyramidDemo, VectorDemo};

#[test]
fn pyramid_detail_grows_with_levels() {
    let mut p = PyramidDemo::create(3, 16).unwrap();
    assert_eq!(p.level_count(), 5);
    let flat = p.try_rgba().unwrap();
    assert_eq!(flat.len(), 4 * 16 * 16);
    // only the 1x1 level: one color everywhere
    assert!(flat.chunks(4).all(|px| px == &flat[..4]));
    p.try_set_active(5).unwrap();
    let full = p.try_rgba().unwrap();
    assert!(full.chunks(4).any(|px| px != &full[..4]));
    assert!(p.try_set_active(0).is_err());
    assert!(p.try_set_active(6).is_err());
}

#[test]
fn augmentation_off_returns_the_source() {
    let mut a = AugmentDemo::create(7, 24).unwrap();
    assert_eq!(a.describe(), "no sample yet");
    assert_eq!(
        a.try_sample(false, false, false, 0.2).unwrap(),
        a.source_rgba()
    );
    let crop = a.try_sample(true, true, true, 0.2).unwrap();
    assert_eq!(crop.len(), 4 * 24 * 24);
    assert!(a.describe().starts_with("crop "));
    assert!(a.try_sample(false, false, true, -1.0).is_err());
}

#[test]
fn vector_demo_learns_the_classes() {
    let data = planar_mixture(1, 0.3, 40).unwrap();
    assert_eq!(data.len(), 120);
    let mut v = VectorDemo::create(1, 0.3, 40).unwrap();
    let first = v.try_step(20).unwrap();
    v.try_step(400).unwrap();
    let last = v.try_step(20).unwrap();
    assert!(last < first, "meta loss {first} -> {last}");
    assert!(v.accuracy() > 0.9, "accuracy {}", v.accuracy());
    assert_eq!(v.iteration(), 440);
    assert_eq!(v.points().len(), 6);

    let mut again = VectorDemo::create(1, 0.3, 40).unwrap();
    again.try_step(440).unwrap();
    assert_eq!(again.points(), v.points());
}
