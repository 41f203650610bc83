use hydroblow::io::{
    fit_doc, params_doc, params_from_doc, read_csv, read_doc, write_csv, write_doc,
    write_profile_csv, write_trajectory_csv, Doc, IoError,
};
use hydroblow::profile::{build_profile, params_from_m, GridKind};
use hydroblow::reduced1d::{
    estimate_blowup_time, integrate, Controls1D, Discretization, Operator1D, State1D,
};
use proptest::prelude::*;

#[test]
fn params_document_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("params.toml");
    for m in [0.1, 0.8660254037844386, 2.0, 10.0] {
        let p = params_from_m(m, 1.5).unwrap();
        write_doc(&path, &params_doc(&p)).unwrap();
        let back = params_from_doc(&read_doc(&path).unwrap()).unwrap();
        assert_eq!(back, p);
    }
    let doc = read_doc(&path).unwrap();
    assert_eq!(doc["H"].as_float(), Some(1.5));
    assert!(doc.contains_key("phi_max"));
}

#[test]
fn unit_discriminant_walls() {
    let doc = params_doc(&params_from_m(0.8660254037844386, 1.0).unwrap());
    assert!((doc["psi_plus"].as_float().unwrap() - 1.5).abs() < 1e-15);
    assert!((doc["psi_minus"].as_float().unwrap() + 0.5).abs() < 1e-15);
    assert!((doc["delta"].as_float().unwrap() - 2.0).abs() < 1e-15);
}

#[test]
fn malformed_documents() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "m = [").unwrap();
    assert!(matches!(read_doc(&path), Err(IoError::Parse(_))));
    let partial = Doc::new().num("m", 1.0).build();
    assert!(matches!(params_from_doc(&partial), Err(IoError::Malformed(_))));
    assert!(matches!(read_doc(dir.path().join("missing.toml")), Err(IoError::Io(_))));
}

#[test]
fn profile_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("profile.csv");
    let prof = build_profile(&params_from_m(2.0, 1.0).unwrap(), 64, GridKind::Chebyshev).unwrap();
    write_profile_csv(&path, &prof).unwrap();
    let (header, rows) = read_csv(&path).unwrap();
    assert_eq!(header, ["z", "phi", "dphi", "ddphi"]);
    assert_eq!(rows.len(), 65);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r, &vec![prof.z[i], prof.phi[i], prof.dphi[i], prof.ddphi[i]]);
    }
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(!text.contains('\r'));
    assert!(text.ends_with('\n'));
}

#[test]
fn trajectory_table_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let op = Operator1D::new(Discretization::Chebyshev, 64, 1.0);
    let prof = build_profile(&params_from_m(2.0, 1.0).unwrap(), 64, GridKind::Chebyshev).unwrap();
    let traj = integrate(&op, &State1D::from_profile(&prof, 1.0), 0.5, &Controls1D::default(), None)
        .unwrap();
    let path = dir.path().join("trajectory.csv");
    write_trajectory_csv(&path, &traj).unwrap();
    let (header, rows) = read_csv(&path).unwrap();
    assert_eq!(header.len(), 5);
    assert_eq!(rows.len(), traj.samples.len());
    // no reference was supplied
    assert!(rows.iter().all(|r| r[4].is_nan()));
    assert!(rows.iter().all(|r| (r[3] * r[2] - 1.0).abs() < 1e-15));

    let fit = estimate_blowup_time(&traj.growth_samples()).unwrap();
    let doc = fit_doc(&fit);
    assert_eq!(doc["verdict"].as_str(), Some("blowup"));
    assert_eq!(doc["T_est"].as_float(), Some(fit.t_est));
    assert_eq!(doc["n_samples"].as_integer(), Some(fit.n_samples as i64));
}

#[test]
fn non_finite_cells() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    write_csv(&path, &["a", "b", "c"], vec![vec![f64::NAN, f64::INFINITY, -f64::INFINITY]]).unwrap();
    let (_, rows) = read_csv(&path).unwrap();
    assert!(rows[0][0].is_nan());
    assert_eq!(rows[0][1], f64::INFINITY);
    assert_eq!(rows[0][2], f64::NEG_INFINITY);
}

proptest! {
    #[test]
    fn csv_round_trip_is_exact(rows in prop::collection::vec(prop::collection::vec(any::<f64>(), 3), 0..20)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_csv(&path, &["x", "y", "z"], rows.clone()).unwrap();
        let (header, back) = read_csv(&path).unwrap();
        prop_assert_eq!(header, vec!["x", "y", "z"]);
        prop_assert_eq!(back.len(), rows.len());
        for (a, b) in rows.iter().zip(&back) {
            for (x, y) in a.iter().zip(b) {
                prop_assert!(x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()));
            }
        }
    }
}
