use voxskin_core::geometry::{build_grid, Address, DesignParams, VoxelGrid};
use voxskin_core::joints::*;
use voxskin_core::mechanics::{mode_stiffness, MechConfig, Mode};

fn reference() -> VoxelGrid {
    build_grid(&DesignParams::reference()).unwrap()
}

#[test]
fn presets_localize_under_their_dominant_mode() {
    let g = reference();
    let cfg = MechConfig::default();
    for p in presets(&g).unwrap() {
        let r = evaluate_pattern(&g, &p, &cfg).unwrap();
        assert!(r.localization >= 0.8, "{} {}", r.label, r.localization);
    }
}

#[test]
fn preset_dominant_modes() {
    let g = reference();
    let cfg = MechConfig::default();
    let find = |label: &str| {
        let p = presets(&g).unwrap().into_iter().find(|p| p.label == label).unwrap();
        evaluate_pattern(&g, &p, &cfg).unwrap()
    };
    assert_eq!(find("twist").dominant_mode, Mode::Torsion);
    assert_eq!(find("shear").dominant_mode, Mode::Shear);
    let shear = find("shear");
    assert!(shear.relative_drop[&Mode::Axial] < shear.relative_drop[&Mode::Shear]);
}

#[test]
fn larger_hinge_is_softer() {
    let g = reference();
    let cfg = MechConfig::default();
    let ps = presets(&g).unwrap();
    let rot = |label: &str| {
        let p = ps.iter().find(|p| p.label == label).unwrap();
        evaluate_pattern(&g, p, &cfg).unwrap().rotational_stiffness.unwrap()
    };
    assert!(rot("hinge_bilateral_large") < rot("hinge_bilateral_small"));
    assert!(rot("bend_unilateral_large") < rot("bend_unilateral_small"));
}

#[test]
fn aligned_pair_is_stiffer_than_circumferential() {
    let g = reference();
    let cfg = MechConfig::default();
    let pairs = two_patterns(&g).unwrap();
    assert_eq!(pairs.axial.addresses, [Address::new(1, 9), Address::new(2, 10)].into());
    for m in [Mode::Shear, Mode::Bending] {
        let aligned = mode_stiffness(&g, &pairs.axial.addresses, m, &cfg).unwrap();
        let across: f64 = pairs
            .circumferential
            .iter()
            .map(|p| mode_stiffness(&g, &p.addresses, m, &cfg).unwrap())
            .sum::<f64>()
            / 2.0;
        assert!(aligned > across, "{m}: {aligned} vs {across}");
    }
}

#[test]
fn half_turn_of_a_preset_is_a_valid_pattern() {
    let g = reference();
    for p in presets(&g).unwrap() {
        let image = p.half_turn(&g);
        image.validate(&g).unwrap();
        assert_eq!(image.addresses.len(), p.addresses.len());
        assert_eq!(image.half_turn(&g).addresses, p.addresses);
    }
}

#[test]
fn specs_round_trip_through_json() {
    for (_, spec) in preset_specs(&reference()) {
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<JointSpec>(&s).unwrap(), spec);
    }
    let err =
        serde_json::from_str::<JointSpec>(r#"{"kind":"twist","location":{"row":0,"col":0},"band_width":1,"bogus":1}"#);
    assert!(err.is_err());
}
