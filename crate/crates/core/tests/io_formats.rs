//! Cloud file round trips, the malformed-file corpus and configuration parsing.

use std::path::{Path, PathBuf};

use proptest::prelude::*;
use shellsep::geometry::Label;
use shellsep::io::{
    parse_config, parse_ply, parse_xyz, read_cloud, read_trace_column, write_cloud, write_ply_string, write_trace_csv,
    CloudFile, DEFAULT_LABEL_PROPERTY,
};
use shellsep::{Error, PointCloud, SimConfig, Vec3};

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

fn label_of(code: u8) -> Label {
    Label::from_code(code as i64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ply_text_round_trip(
        coords in prop::collection::vec((-1e6f64..1e6, -1e6f64..1e6, -1e-3f64..1e-3), 2..200),
        codes in prop::collection::vec(0u8..3, 200),
        labeled in any::<bool>(),
    ) {
        let pts: Vec<Vec3> = coords.iter().enumerate()
            .map(|(i, &(x, y, z))| Vec3::new(x + i as f64 * 1e-3, y, z))
            .collect();
        let labels = labeled.then(|| codes[..pts.len()].iter().map(|&c| label_of(c)).collect::<Vec<_>>());
        let cloud = PointCloud::new(pts.clone(), labels.clone()).unwrap();
        let text = write_ply_string(&cloud, None).unwrap();
        let raw = parse_ply(&text, Path::new("mem.ply"), Some(DEFAULT_LABEL_PROPERTY)).unwrap();
        prop_assert_eq!(raw.points.len(), pts.len());
        for (a, b) in raw.points.iter().zip(&pts) {
            prop_assert!(a.distance(*b) <= 1e-9);
        }
        prop_assert_eq!(raw.labels, labels);
    }
}

fn grid_cloud(n: usize, labeled: bool) -> PointCloud {
    let pts: Vec<Vec3> = (0..n)
        .map(|i| Vec3::new((i % 100) as f64 * 0.37, (i / 100) as f64 * 1.0 / 3.0, (i as f64).sin()))
        .collect();
    let labels = labeled.then(|| {
        (0..n)
            .map(|i| if i % 3 == 0 { Label::Outer } else { Label::Inter })
            .collect()
    });
    PointCloud::new(pts, labels).unwrap()
}

#[test]
fn file_round_trip_of_ten_thousand_points() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cloud.ply");
    let cloud = grid_cloud(10_000, true);
    write_cloud(&cloud, None, &path).unwrap();
    let loaded = read_cloud(&CloudFile::new(&path)).unwrap();
    assert_eq!(loaded.duplicates_removed, 0);
    assert_eq!(loaded.cloud.labels(), cloud.labels());
    for (a, b) in loaded.cloud.points().iter().zip(cloud.points()) {
        assert!(a.distance(*b) <= 1e-9);
    }
}

#[test]
fn subset_and_empty_exports() {
    let cloud = grid_cloud(500, true);
    let subset: Vec<usize> = (0..500).step_by(7).collect();
    let raw = parse_ply(
        &write_ply_string(&cloud, Some(&subset)).unwrap(),
        Path::new("s.ply"),
        Some("layer"),
    )
    .unwrap();
    assert_eq!(raw.points.len(), subset.len());
    assert_eq!(raw.points[3], cloud.points()[21]);
    let empty = parse_ply(
        &write_ply_string(&cloud, Some(&[])).unwrap(),
        Path::new("e.ply"),
        Some("layer"),
    )
    .unwrap();
    assert!(empty.points.is_empty());
    assert!(write_ply_string(&cloud, Some(&[500])).is_err());
}

#[test]
fn unlabeled_ply_and_xyz_duplicates() {
    let dir = tempfile::tempdir().unwrap();
    let ply = dir.path().join("three.ply");
    std::fs::write(
        &ply,
        "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n1 0 0\n0 1 0\n",
    )
    .unwrap();
    let loaded = read_cloud(&CloudFile::new(&ply)).unwrap();
    assert_eq!(loaded.cloud.len(), 3);
    assert!((0..3).all(|i| loaded.cloud.label(i) == Label::Unknown));

    let xyz = dir.path().join("dup.xyz");
    std::fs::write(&xyz, "0 0 0\n1 0 0\n0 0 0").unwrap();
    let loaded = read_cloud(&CloudFile::new(&xyz)).unwrap();
    assert_eq!((loaded.cloud.len(), loaded.duplicates_removed), (2, 1));

    let single = dir.path().join("single.xyz");
    std::fs::write(&single, "1 2 3\n1 2 3\n").unwrap();
    assert!(matches!(
        read_cloud(&CloudFile::new(&single)),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn unwritable_path_is_io_error() {
    let cloud = grid_cloud(10, false);
    let err = write_cloud(&cloud, None, Path::new("/nonexistent-dir/x/y.ply")).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
}

#[test]
fn malformed_corpus_is_rejected_with_line_numbers() {
    let expected = std::fs::read_to_string(data_dir().join("malformed_expected.txt")).unwrap();
    let mut count = 0;
    for line in expected.lines() {
        let (name, want) = line.split_once(' ').unwrap();
        let want: usize = want.parse().unwrap();
        let path = data_dir().join("malformed").join(name);
        let text = std::fs::read_to_string(&path).unwrap();
        let res = if name.ends_with(".ply") {
            parse_ply(&text, &path, Some(DEFAULT_LABEL_PROPERTY))
        } else {
            parse_xyz(&text, &path)
        };
        match res {
            Err(Error::Parse { line, .. }) => assert_eq!(line, want, "{name}"),
            other => panic!("{name}: expected a parse error, got {other:?}"),
        }
        count += 1;
    }
    assert!(count >= 20);
    let on_disk = std::fs::read_dir(data_dir().join("malformed")).unwrap().count();
    assert_eq!(on_disk, count);
}

#[test]
fn config_files() {
    let (sim, _) = parse_config("").unwrap();
    assert_eq!(sim, SimConfig::default());
    let (sim, par) = parse_config("r_ball_factor = 3.0   # open sphere\nworkers = 4\n").unwrap();
    assert_eq!(
        sim,
        SimConfig {
            r_ball_factor: 3.0,
            ..Default::default()
        }
    );
    assert_eq!(par.workers, 4);
    assert!(matches!(
        parse_config("r_ball_factor = -1"),
        Err(Error::InvalidInput(_))
    ));
    assert!(matches!(parse_config("rball = 2"), Err(Error::Config { line: 1, .. })));
    assert!(matches!(parse_config("seed = x"), Err(Error::Config { line: 1, .. })));
}

#[test]
fn trace_csv_downsampling_keeps_last_row() {
    use shellsep::synthetic::{generate_double_sphere, DoubleSphereSpec};
    let cloud = generate_double_sphere(&DoubleSphereSpec::closed(1000, 1000, 0)).unwrap();
    let cfg = SimConfig {
        max_balls: 95,
        dup_streak: u32::MAX,
        ..Default::default()
    };
    let res = shellsep::run_simulation(&cloud, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    write_trace_csv(&res.trace, 10, &path).unwrap();
    let col = read_trace_column(&path, "r_inter").unwrap();
    let is: Vec<f64> = col.iter().map(|c| c.0).collect();
    assert_eq!(is, vec![10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 95.0]);
    assert_eq!(col.last().unwrap().1, res.trace.last().unwrap().r_inter);
    let header = std::fs::read_to_string(&path).unwrap();
    assert!(header.starts_with("i,collide,new,dup,r_dup,c_inter,c_outer,r_inter,r_outer,n_escape\n"));
}
