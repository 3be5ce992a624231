mod common;

use std::fs;

use common::{blobs_config, metrics_without_wall_time, moons_config};
use padam::harness::{
    compare_optimizers, emit_plot_series, execute_trial, grid_search_p, lr_sensitivity_sweep, read_metrics,
    run_trial, CellState, DatasetSpec, SweepResult, TrialConfig, TrialStatus, CONFIG_FILE, SUMMARY_FILE,
};
use padam::{Error, PSchedule};
use tempfile::tempdir;

fn short(mut c: TrialConfig, epochs: usize) -> TrialConfig {
    c.epochs = Some(epochs);
    c
}

#[test]
fn metrics_and_config_land_in_run_dir() {
    let dir = tempdir().unwrap();
    let rep = run_trial(&short(blobs_config(dir.path(), "padam"), 4)).unwrap();
    assert_eq!(rep.run_id, "padam-seed42");
    assert!(rep.run_dir.join(CONFIG_FILE).exists());
    let header = fs::read_to_string(&rep.metrics_path).unwrap();
    assert!(header.starts_with(
        "epoch,train_loss,train_error_top1,test_loss,test_error_top1,test_error_topk,lr,p,wall_time_seconds\n"
    ));
    let rows = read_metrics(&rep.metrics_path).unwrap();
    assert_eq!(rows, rep.rows);
    assert_eq!(rows.iter().map(|r| r.epoch).collect::<Vec<_>>(), [1, 2, 3, 4]);
    assert!(rows.iter().all(|r| r.p == 0.125));
    // 4 epochs scale the milestones to [1, 2, 3]
    let lrs: Vec<f64> = rows.iter().map(|r| r.lr).collect();
    assert_eq!(lrs, [0.1, 0.01, 0.001, 0.0001]);
}

#[test]
fn lr_column_follows_step_decay() {
    let dir = tempdir().unwrap();
    let mut c = short(blobs_config(dir.path(), "sgd"), 8);
    c.lr_schedule.milestones = Some(vec![2, 5]);
    let rep = run_trial(&c).unwrap();
    let lrs: Vec<f64> = rep.rows.iter().map(|r| r.lr).collect();
    assert_eq!(lrs, [0.1, 0.1, 0.01, 0.01, 0.01, 0.001, 0.001, 0.001]);
    assert!(rep.rows.iter().all(|r| r.p == 0.0));
}

#[test]
fn p_column_follows_p_schedule() {
    let dir = tempdir().unwrap();
    let mut c = short(blobs_config(dir.path(), "padam"), 6);
    c.p_schedule = Some(PSchedule::StepDecay {
        p_start: 0.25,
        p_end: 0.0625,
        factor: 0.5,
        milestones: vec![2, 4],
    });
    let rep = run_trial(&c).unwrap();
    let ps: Vec<f64> = rep.rows.iter().map(|r| r.p).collect();
    assert_eq!(ps, [0.25, 0.25, 0.125, 0.125, 0.0625, 0.0625]);
}

#[test]
fn identical_seeds_give_identical_metrics() {
    let (a, b) = (tempdir().unwrap(), tempdir().unwrap());
    let ra = run_trial(&moons_config(a.path(), "padam", 5)).unwrap();
    let rb = run_trial(&moons_config(b.path(), "padam", 5)).unwrap();
    assert_eq!(metrics_without_wall_time(&ra.metrics_path), metrics_without_wall_time(&rb.metrics_path));
    assert_eq!(ra.final_params, rb.final_params);

    let mut other = moons_config(b.path(), "padam", 5);
    other.seed = 7;
    let rc = run_trial(&other).unwrap();
    assert_ne!(metrics_without_wall_time(&ra.metrics_path), metrics_without_wall_time(&rc.metrics_path));
}

#[test]
fn huge_learning_rate_diverges() {
    let dir = tempdir().unwrap();
    let mut c = short(blobs_config(dir.path(), "adam"), 5);
    c.lr_schedule.base = Some(1e6);
    let rep = execute_trial(&c).unwrap();
    assert!(matches!(rep.status, TrialStatus::Diverged { epoch: 1, batch: Some(_) }));
    assert!(matches!(run_trial(&c), Err(Error::Diverged { epoch: 1, .. })));
    // the metrics file exists even though no epoch finished
    assert!(rep.metrics_path.exists());
}

#[test]
fn chance_accuracy_without_signal() {
    let k = 4;
    let mut mean_err = 0.0;
    for seed in 0..5 {
        let dir = tempdir().unwrap();
        let mut c = short(blobs_config(dir.path(), "padam"), 10);
        c.dataset = DatasetSpec::Blobs {
            num_classes: k,
            per_class: 250,
            dim: 2,
            separation: 0.0,
            seed: None,
        };
        c.seed = seed;
        let rep = run_trial(&c).unwrap();
        mean_err += rep.rows.last().unwrap().test_error_top1 / 5.0;
    }
    let chance = 1.0 - 1.0 / k as f64;
    assert!((mean_err - chance).abs() < 0.06, "mean error {mean_err}, chance {chance}");
}

#[test]
fn p_half_cell_matches_amsgrad_run() {
    let dir = tempdir().unwrap();
    let base = short(blobs_config(&dir.path().join("grid"), "padam"), 6);
    let grid = grid_search_p(&base, &[0.5]).unwrap();
    let cell = grid.cell("p0.5").unwrap();
    // amsgrad presets differ (alpha0, beta2, wd), so pin padam's
    let mut ams_cfg = short(blobs_config(&dir.path().join("ams"), "amsgrad"), 6);
    ams_cfg.hyper.alpha0 = Some(0.1);
    ams_cfg.hyper.beta2 = Some(0.999);
    ams_cfg.hyper.weight_decay = Some(5e-4);
    let ams = run_trial(&ams_cfg).unwrap();
    assert_eq!(
        metrics_without_wall_time(cell.metrics_path.as_ref().unwrap()),
        metrics_without_wall_time(&ams.metrics_path)
    );
}

#[test]
fn compare_padam_at_half_equals_amsgrad_with_same_hyperparameters() {
    let dir = tempdir().unwrap();
    let mut base = short(moons_config(dir.path(), "padam", 4), 4);
    base.hyper.p = Some(0.5);
    base.hyper.alpha0 = Some(0.01);
    base.hyper.beta2 = Some(0.999);
    base.hyper.weight_decay = Some(1e-4);
    let names = vec!["padam".to_string(), "amsgrad".to_string()];
    let res = compare_optimizers(&base, &names, &[2, 4]).unwrap();
    let path = |id: &str| res.cell(id).unwrap().metrics_path.clone().unwrap();
    let strip_p = |s: String| -> String { s.replace(",0.5\n", "\n") };
    assert_eq!(
        strip_p(metrics_without_wall_time(&path("padam")) + "\n"),
        strip_p(metrics_without_wall_time(&path("amsgrad")) + "\n")
    );
    let table = res.checkpoint_table.unwrap();
    assert_eq!(table.rows[0].test_accuracy, table.rows[1].test_accuracy);
}

#[test]
fn sweep_cells_do_not_depend_on_grid_order() {
    let (a, b) = (tempdir().unwrap(), tempdir().unwrap());
    let ra = lr_sensitivity_sweep(&short(blobs_config(a.path(), "padam"), 3), &[0.25, 0.125], &[0.1, 0.01]).unwrap();
    let rb = lr_sensitivity_sweep(&short(blobs_config(b.path(), "padam"), 3), &[0.125, 0.25], &[0.01, 0.1]).unwrap();
    assert_eq!(ra.cells.len(), 4);
    for cell in &ra.cells {
        let other = rb.cell(&cell.id).unwrap();
        assert_eq!(
            metrics_without_wall_time(cell.metrics_path.as_ref().unwrap()),
            metrics_without_wall_time(other.metrics_path.as_ref().unwrap()),
            "{}",
            cell.id
        );
    }
    let csv = fs::read_to_string(a.path().join("lr_sensitivity_p0.25.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn bad_grid_fails_before_any_training() {
    let dir = tempdir().unwrap();
    let base = short(blobs_config(dir.path(), "padam"), 3);
    assert!(matches!(grid_search_p(&base, &[0.25, 0.7]), Err(Error::Config(_))));
    assert!(matches!(grid_search_p(&base, &[]), Err(Error::Config(_))));
    assert!(fs::read_dir(dir.path()).map(|d| d.count() == 0).unwrap_or(true));
    let names = vec!["padam".to_string(), "adamw".to_string()];
    assert!(matches!(
        compare_optimizers(&base, &names, &[1]),
        Err(Error::UnknownOptimizer { .. })
    ));
}

#[test]
fn diverged_cell_is_reported_and_plotted_as_truncated() {
    let dir = tempdir().unwrap();
    let base = short(blobs_config(dir.path(), "padam"), 3);
    let res = lr_sensitivity_sweep(&base, &[0.0], &[1e9, 0.1]).unwrap();
    let bad = res.cell("p0-lr1000000000").unwrap();
    assert_eq!(bad.state, CellState::Diverged);
    assert_eq!(res.cell("p0-lr0.1").unwrap().state, CellState::Completed);

    let summary = SweepResult::from_json_file(&dir.path().join(SUMMARY_FILE)).unwrap();
    assert_eq!(summary, res);
    let index = emit_plot_series(&summary, "train_loss", &dir.path().join("plots")).unwrap();
    let entry = index.series.iter().find(|s| s.cell == bad.id).unwrap();
    assert!(entry.truncated);
    let good = index.series.iter().find(|s| s.cell == "p0-lr0.1").unwrap();
    assert!(!good.truncated);
    assert_eq!(good.points, 3);
    assert!(emit_plot_series(&summary, "nope", &dir.path().join("plots")).is_err());
}

#[test]
fn config_round_trips_through_json() {
    let dir = tempdir().unwrap();
    let mut c = blobs_config(dir.path(), "sgd");
    c.hyper.momentum = Some(0.5);
    let path = dir.path().join("trial.json");
    fs::write(&path, serde_json::to_string_pretty(&c).unwrap()).unwrap();
    assert_eq!(TrialConfig::from_json_file(&path).unwrap(), c);

    fs::write(&path, r#"{"optimizer": "sgd", "learning_rate": 0.1}"#).unwrap();
    assert!(matches!(TrialConfig::from_json_file(&path), Err(Error::Config(_))));
}
