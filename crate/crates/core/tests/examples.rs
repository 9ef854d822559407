mod constants {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/constants.rs"));

    #[test]
    fn table_covers_three_to_six() {
        let rows = run_example();
        assert_eq!(rows.iter().map(|(c, _)| c.n).collect::<Vec<_>>(), vec![3, 4, 5, 6]);
        assert!((rows[1].0.sn_pow - 105.2757803).abs() < 1e-6);
        assert!(rows.iter().all(|(_, o)| o.abs() < 1e-10));
    }
}

mod green_robin {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/green_robin.rs"));

    #[test]
    fn scaled_diagonal_is_one() {
        for s in run_example() {
            assert!((s.scaled_diag - 1.0).abs() < 1e-12, "|x| = {}", s.x);
            assert!(s.green_near_boundary.abs() < 1e-8);
        }
    }
}

mod pair_interactions {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/pair_interactions.rs"));

    #[test]
    fn gap_shrinks_with_lambda() {
        let rows = run_example();
        assert!(rows.windows(2).all(|w| w[1].rel_gap < w[0].rel_gap));
        assert!(rows.last().unwrap().rel_gap < 1e-4);
    }
}

mod reduced_landscape {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/reduced_landscape.rs"));

    #[test]
    fn single_spike_increases_away_from_center() {
        let p = run_example();
        assert!(p.single.windows(2).all(|w| w[1] > w[0]));
        let defined: Vec<f64> = p.antipodal.iter().flatten().copied().collect();
        assert!(!defined.is_empty());
        // interior minimum of the antipodal profile
        let (imin, _) = defined.iter().enumerate().fold((0, f64::INFINITY), |b, (i, v)| if *v < b.1 { (i, *v) } else { b });
        assert!(imin > 0 && imin + 1 < defined.len());
    }
}

mod critical_points {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/critical_points.rs"));

    #[test]
    fn center_and_symmetric_pair() {
        let r = run_example();
        let one = &r[0].1;
        assert!(one.iter().any(|c| c.certified() && c.x[0].iter().all(|v| v.abs() < 1e-8)));
        let pair = r[1].1.iter().find(|c| c.certified()).expect("certified dipole");
        assert!((pair.x[0][0] + pair.x[1][0]).abs() < 1e-8);
    }
}

mod build_family {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/build_family.rs"));

    #[test]
    fn converges_on_every_rung() {
        let steps = run_example();
        assert!(steps.iter().all(|s| s.residual < 1e-10));
        assert!(steps.windows(2).all(|w| w[1].lambda_refined > w[0].lambda_refined));
        assert!(steps.windows(2).all(|w| (w[1].alpha - 1.0).abs() < (w[0].alpha - 1.0).abs()));
    }
}

mod monte_carlo {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/monte_carlo.rs"));

    #[test]
    fn estimates_agree_with_quadrature() {
        let (reference, est) = run_example();
        for e in &est {
            assert!(((e.value - reference) / e.stderr).abs() < 4.0, "seed {}", e.seed);
        }
        assert_ne!(est[0].value, est[1].value);
        let again = run_example().1;
        assert_eq!(again[0].value, est[0].value);
    }
}

mod verify_expansions {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/verify_expansions.rs"));

    #[test]
    fn every_default_study_passes() {
        use multispike::lab::Status;
        let studies = run_example();
        assert_eq!(studies.len(), StudyId::ALL.len());
        for s in &studies {
            assert_eq!(s.status, Status::Pass, "{}", s.study_id);
        }
    }
}
