use std::fs;
use std::path::Path;
use std::process::Command;

use rodsim_cli::config::RunConfig;
use rodsim_cli::converge::{convergence_study, Axis};
use rodsim_cli::runner::{simulate, RunStatus};
use rodsim_cli::sweep::sweep_eta;
use rodsim_core::snapshot::Snapshot;

const DA: &str = r#"
[model]
kind = "da"
[grid]
nx = 32
ny = 32
[time]
dt = 2e-3
t_end = 0.04
[init]
amplitude = 1.0
eps = 0.3
[output]
snapshot_every = 0.02
"#;

const DOI: &str = r#"
[model]
kind = "doi"
theta_modes = 8
[grid]
nx = 16
ny = 16
[time]
dt = 2e-3
t_end = 0.04
[init]
orientation = "random"
ratio = 0.3
kmax = 2
seed = 5
[output]
snapshot_every = 0.02
toeplitz_every = 5
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rodsim"))
}

fn read(p: impl AsRef<Path>) -> Vec<u8> {
    fs::read(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

fn csv_rows(p: impl AsRef<Path>) -> Vec<String> {
    String::from_utf8(read(p)).unwrap().lines().map(str::to_string).collect()
}

#[test]
fn identical_configs_give_identical_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, text) in [("da", DA), ("doi", DOI)] {
        let cfg = RunConfig::parse(text).unwrap();
        let (a, b) = (tmp.path().join(format!("{name}_a")), tmp.path().join(format!("{name}_b")));
        simulate(&cfg, Some(&a)).unwrap();
        simulate(&cfg, Some(&b)).unwrap();
        for f in ["diagnostics.csv", "summary.toml", "config.toml", "snapshots/final.bin"] {
            assert_eq!(read(a.join(f)), read(b.join(f)), "{name}: {f} differs");
        }
        if name == "doi" {
            assert_eq!(read(a.join("toeplitz.csv")), read(b.join("toeplitz.csv")));
        }
    }
}

#[test]
fn writing_artifacts_does_not_change_the_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig::parse(DA).unwrap();
    let with = simulate(&cfg, Some(tmp.path())).unwrap();
    let without = simulate(&cfg, None).unwrap();
    assert_eq!(with.state.snapshot(), without.state.snapshot());
}

#[test]
fn restart_from_a_snapshot_continues_bit_for_bit() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, text) in [("da", DA), ("doi", DOI)] {
        let full = tmp.path().join(format!("{name}_full"));
        let cfg = RunConfig::parse(text).unwrap();
        simulate(&cfg, Some(&full)).unwrap();
        // Restart at step 10 and run the remaining 10 steps.
        let mut restart = cfg.clone();
        restart.init.snapshot = Some(full.join("snapshots/snap_00000010.bin"));
        let part = tmp.path().join(format!("{name}_part"));
        let r = simulate(&restart, Some(&part)).unwrap();
        assert_eq!(r.status, RunStatus::Completed);
        assert_eq!(r.summary.steps, 10);
        assert_eq!(read(full.join("snapshots/final.bin")), read(part.join("snapshots/final.bin")), "{name}");
        assert_eq!(
            read(full.join("snapshots/snap_00000020.bin")),
            read(part.join("snapshots/snap_00000020.bin")),
            "{name}"
        );
        // Rows after the restart point agree exactly; the first restarted
        // row lacks the backward sample of the energy residual.
        let (a, b) = (csv_rows(full.join("diagnostics.csv")), csv_rows(part.join("diagnostics.csv")));
        assert_eq!(a[a.len() - 10..], b[b.len() - 10..], "{name}");
    }
}

#[test]
fn equilibrium_run_has_flat_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    let text = DA.replace("amplitude = 1.0", "velocity = \"zero\"").replace("eps = 0.3", "tensor = \"isotropic\"");
    let cfg = RunConfig::parse(&text).unwrap();
    simulate(&cfg, Some(tmp.path())).unwrap();
    let mut rdr = csv::Reader::from_path(tmp.path().join("diagnostics.csv")).unwrap();
    for row in rdr.records() {
        let row = row.unwrap();
        for (col, v) in row.iter().enumerate().skip(1) {
            let v: f64 = v.parse().unwrap();
            match col {
                // min det A of ½I.
                4 => assert_eq!(v, 0.25),
                3 if v.is_nan() => {}
                _ => assert!(v.abs() < 1e-14, "column {col}: {v}"),
            }
        }
    }
}

#[test]
fn sweep_gives_one_row_per_eta_and_matches_single_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig::parse(DA).unwrap();
    let rows = sweep_eta(&cfg, &[0.1, 1.0, 10.0], Some(tmp.path())).unwrap();
    assert_eq!(rows.iter().map(|r| r.eta).collect::<Vec<_>>(), [0.1, 1.0, 10.0]);
    assert!(rows.iter().all(|r| r.ok() && r.max_vorticity_norm.is_finite()));
    let single = simulate(&cfg, None).unwrap();
    let dir = tmp.path().join("eta_1");
    assert_eq!(read(dir.join("snapshots/final.bin")), {
        let mut v = Vec::new();
        single.state.snapshot().write_to(&mut v).unwrap();
        v
    });
    assert_eq!(csv_rows(tmp.path().join("sweep.csv")).len(), 4);
}

#[test]
fn sweep_isolates_failing_runs() {
    let cfg = RunConfig::parse(DA).unwrap();
    // A negative η fails validation for that run only.
    let rows = sweep_eta(&cfg, &[-1.0, 1.0], None).unwrap();
    assert!(!rows[0].ok() && rows[0].status.contains("eta"));
    assert!(rows[1].ok());
}

#[test]
fn time_step_convergence_is_second_order() {
    let text = DA.replace("t_end = 0.04", "t_end = 0.2").replace("dt = 2e-3", "dt = 1e-2");
    let cfg = RunConfig::parse(&text).unwrap();
    let rows = convergence_study(&cfg, Axis::Dt, &[1e-2, 5e-3, 2.5e-3, 1.25e-3], None).unwrap();
    assert_eq!(rows.len(), 3);
    // Against the finest run, d(h) ≈ C(h² − h_ref²).
    let c: Vec<f64> = rows.iter().map(|r| r.difference / (r.value.powi(2) - 1.25e-3f64.powi(2))).collect();
    for w in c.windows(2) {
        assert!((w[1] / w[0] - 1.0).abs() < 0.1, "{rows:?}");
    }
}

#[test]
fn grid_convergence_is_spectral() {
    let text = DA.replace("t_end = 0.04", "t_end = 0.1").replace("eps = 0.3", "eps = 0.3\ntensor = \"random\"\nkmax = 4");
    let cfg = RunConfig::parse(&text).unwrap();
    let rows = convergence_study(&cfg, Axis::Grid, &[16.0, 24.0, 32.0, 48.0], None).unwrap();
    assert!(rows[0].difference > 10.0 * rows[2].difference, "{rows:?}");
    assert!(rows.windows(2).all(|w| w[1].difference < w[0].difference), "{rows:?}");
}

#[test]
fn binary_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("da.toml");
    fs::write(&cfg_path, DA).unwrap();
    let out = tmp.path().join("out");
    let st = bin().arg("run").arg(&cfg_path).arg("--out").arg(&out).status().unwrap();
    assert_eq!(st.code(), Some(0));
    for snap in fs::read_dir(out.join("snapshots")).unwrap() {
        let st = bin().arg("check").arg(snap.unwrap().path()).status().unwrap();
        assert_eq!(st.code(), Some(0));
    }
    assert!(out.join("summary.toml").exists());
    assert!(fs::read_to_string(out.join("config.toml")).unwrap().starts_with("# rodsim "));

    // Unknown key.
    fs::write(&cfg_path, DA.replace("[grid]", "[grid]\nnz = 3")).unwrap();
    let o = bin().arg("run").arg(&cfg_path).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nz"));

    // Unstable time step.
    fs::write(&cfg_path, DA.replace("dt = 2e-3", "dt = 0.5").replace("t_end = 0.04", "t_end = 1.0")).unwrap();
    let o = bin().arg("run").arg(&cfg_path).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("time.dt"));

    // Blowup without the stability guard.
    let text = DA
        .replace("dt = 2e-3", "dt = 0.25")
        .replace("t_end = 0.04", "t_end = 50.0")
        .replace("snapshot_every = 0.02", "snapshot_every = 0.0")
        .replace("[init]", "[init]\nvelocity = \"random\"\nkmax = 8")
        .replace("amplitude = 1.0", "amplitude = 20.0")
        .replace("[time]", "[time]\nenforce_cfl = false");
    fs::write(&cfg_path, text).unwrap();
    let out = tmp.path().join("blowup");
    let o = bin().arg("run").arg(&cfg_path).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stdout));
    let last = Snapshot::load(out.join("snapshots/last_good.bin")).unwrap();
    assert!(last.is_finite());

    // Unreadable snapshot.
    let junk = tmp.path().join("junk.bin");
    fs::write(&junk, b"not a snapshot").unwrap();
    assert_eq!(bin().arg("check").arg(&junk).status().unwrap().code(), Some(2));
}

#[test]
fn abort_policy_stops_on_non_realizable_data() {
    use rodsim_core::doi::{AngularDistribution, DoiState};
    use rodsim_core::{ComplexField, Grid, ScalarField, VectorField};
    let tmp = tempfile::tempdir().unwrap();
    // |ĉ₁| > ĉ₀ has no nonnegative density.
    let g = Grid::new(16, 16).unwrap();
    let mut modes = vec![ComplexField::zeros(&g); 9];
    modes[0] = ScalarField::constant(&g, 0.5 / std::f64::consts::PI).to_complex();
    modes[1] = ScalarField::constant(&g, 0.3).to_complex();
    let st = DoiState::new(VectorField::zeros(&g), AngularDistribution::new(modes).unwrap(), 0.0).unwrap();
    let path = tmp.path().join("bad.bin");
    Snapshot::from_doi(&st).save(&path).unwrap();
    let mut cfg = RunConfig::parse(DOI).unwrap();
    cfg.init.snapshot = Some(path);
    let r = simulate(&cfg, Some(&tmp.path().join("warn"))).unwrap();
    assert_eq!(r.status, RunStatus::Completed);
    assert!(r.summary.violations > 0);
    cfg.model.on_violation = rodsim_cli::config::ViolationPolicy::Abort;
    let r = simulate(&cfg, Some(&tmp.path().join("abort"))).unwrap();
    assert!(matches!(r.status, RunStatus::Aborted(_)), "{:?}", r.status);
    assert_eq!(r.summary.steps, 0);
}

#[test]
fn tables_are_written() {
    let tmp = tempfile::tempdir().unwrap();
    let st = bin().arg("tables").arg("--out").arg(tmp.path()).status().unwrap();
    assert_eq!(st.code(), Some(0));
    let rows = csv_rows(tmp.path().join("diffusion_n2.csv"));
    assert_eq!(rows[0], "p,src,coef");
    // ∂²_θ sin²θ = 2cos²θ − 2sin²θ, and component p = 0 is sin²θ.
    assert!(rows.contains(&"0,0,-2".to_string()));
    assert!(rows.contains(&"0,2,2".to_string()));
    assert!(tmp.path().join("quartic.csv").exists());
}
