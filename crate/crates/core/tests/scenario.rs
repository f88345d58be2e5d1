use venttsel::geometry::snowflake;
use venttsel::scenario::*;
use venttsel::Error;

fn small() -> ScenarioConfig {
    let mut c = ScenarioConfig::default();
    c.geometry.level = 1;
    c.mesh.outer_h = 0.5;
    c.time.t_final = 5e6;
    c.time.stationary = false;
    c
}

#[test]
fn empty_config_is_default() {
    assert_eq!(ScenarioConfig::from_toml_str("").unwrap(), ScenarioConfig::default());
    ScenarioConfig::default().validate().unwrap();
}

#[test]
fn unknown_field_reports_its_path() {
    match ScenarioConfig::from_toml_str("[time]\ndtt = 1.0\n") {
        Err(Error::Config { path, .. }) => assert!(path.starts_with("time"), "{path}"),
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn negative_reaction_rejected() {
    let mut c = ScenarioConfig::default();
    c.coefficients.b = -1.0;
    match c.validate() {
        Err(Error::Config { path, .. }) => assert_eq!(path, "coefficients.b"),
        other => panic!("expected a config error, got {other:?}"),
    }
    assert!(ScenarioConfig::from_toml_str("[coefficients]\nb = -0.5\n").is_err());
}

#[test]
fn theta_outside_range_rejected() {
    assert!(ScenarioConfig::from_toml_str("[time]\ntheta = 0.25\n").is_err());
}

#[test]
fn config_round_trip() {
    let mut c = ScenarioConfig::default();
    c.geometry.center = Some([0.25, -0.125]);
    c.nonlocal.active = ActiveMode::Arcs;
    c.nonlocal.arcs = vec![[0.0, 0.5]];
    c.study.kinds = vec![MeshFamily::Uniform];
    let text = c.to_toml_string().unwrap();
    assert_eq!(ScenarioConfig::from_toml_str(&text).unwrap(), c);
}

#[test]
fn sectors_alternate() {
    let map = SectorMap::alternating([0.0, 0.0], 1.0, 1000.0).unwrap();
    map.check_alternation().unwrap();
    for q in Quadrant::ALL {
        assert_ne!(map.value(false, q), map.value(true, q));
    }
    assert_eq!(map.value(false, Quadrant::East), 1000.0);
    assert_eq!(map.value(false, Quadrant::North), 1.0);
    assert!(SectorMap::alternating([0.0, 0.0], 5.0, 5.0).is_err());
    let flat = SectorMap { center: [0.0, 0.0], k: [1.0; 8] };
    assert!(flat.check_alternation().is_err());
}

#[test]
fn quadrants_by_angle() {
    let c = [0.0, 0.0];
    assert_eq!(Quadrant::of(c, [0.0, 1.0]), Quadrant::North);
    assert_eq!(Quadrant::of(c, [1.0, 0.2]), Quadrant::East);
    assert_eq!(Quadrant::of(c, [-0.1, -1.0]), Quadrant::South);
    assert_eq!(Quadrant::of(c, [-1.0, 0.0]), Quadrant::West);
}

#[test]
fn segment_masks_partition_the_curve() {
    let curve = snowflake::<f64>(2).unwrap();
    let map = SectorMap::alternating(curve.centroid(), 1.0, 2.0).unwrap();
    let masks: Vec<Vec<bool>> = Quadrant::ALL.iter().map(|&q| map.segment_mask(&curve, q)).collect();
    for k in 0..curve.num_segments() {
        assert_eq!(masks.iter().filter(|m| m[k]).count(), 1);
    }
}

#[test]
fn zero_source_gives_zero_flux() {
    let mut c = small();
    c.source.amplitude = 0.0;
    let report = run_transmission::<f64>(&c).unwrap();
    for q in Quadrant::ALL {
        assert_eq!(report.main.mean_abs_flux(q), 0.0);
    }
    assert!(report.main.u.iter().all(|&v| v == 0.0));
}

#[test]
fn transmission_is_deterministic() {
    let c = small();
    let a = run_transmission::<f64>(&c).unwrap();
    let b = run_transmission::<f64>(&c).unwrap();
    assert_eq!(a.main.u, b.main.u);
    assert_eq!(a.main.rows, b.main.rows);
    let gap = a.control_gap().expect("control run enabled by default");
    assert!(gap.is_finite());
}

#[test]
fn check_report_csv() {
    let outcomes = check_geometry(0..=2).unwrap();
    assert!(outcomes.iter().all(|o| o.pass), "{outcomes:?}");
    let report = CheckReport { outcomes };
    let mut buf = Vec::new();
    report.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("module,quantity,value,limit,pass\n"));
    assert_eq!(text.lines().count(), 1 + report.outcomes.len());
}

#[test]
fn contraction_with_seed() {
    let mut c = ScenarioConfig::default();
    c.checks.level = 1;
    c.checks.samples = 10;
    let a = check_contraction(&c, 3).unwrap();
    assert!(a.iter().all(|o| o.pass), "{a:?}");
    assert_eq!(a, check_contraction(&c, 3).unwrap());
}
