//! The shipped reference scenario file must stay in lockstep with the
//! programmatic builder.

use std::path::Path;

use gridbroker_core::scenario::{builtin, load_scenario};

fn reference_path() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/reference.toml")
}

#[test]
fn shipped_reference_matches_builtin() {
    let cfg = load_scenario(&reference_path()).unwrap();
    assert_eq!(cfg, builtin::reference());
    assert_eq!(cfg.appliances.len(), 6);
}

#[test]
fn shipped_reference_round_trips() {
    let cfg = load_scenario(&reference_path()).unwrap();
    let text = cfg.to_toml_string();
    let reparsed =
        gridbroker_core::ScenarioConfig::from_toml_str(&text, Path::new(".")).unwrap();
    assert_eq!(cfg, reparsed);
}

#[test]
fn external_csv_references_resolve_relative_to_scenario() {
    let dir = std::env::temp_dir().join(format!("gridbroker-csv-refs-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();

    std::fs::write(dir.join("intensity.csv"), "0,0.0\n900,0.5\n1800,1.0\n").unwrap();
    std::fs::write(dir.join("tv_starts.csv"), "3600\n7200\n").unwrap();

    let mut cfg = builtin::reference();
    cfg.appliances.truncate(1);
    let text = cfg
        .to_toml_string()
        .replace(
            "[weather]\nkind = \"clear_sky\"\nday_length_s = 28800\nsunrise_second = 28800\n",
            "[weather]\nkind = \"measured\"\nresolution_s = 900\ncsv = \"intensity.csv\"\n",
        )
        .replace(
            "kind = \"probabilistic\"\nwillingness = 1.0\ndecay = 1.0\nrecovery_seconds = 1\nstarts_per_day = 2.0\n",
            "kind = \"trace\"\ncsv = \"tv_starts.csv\"\n",
        );
    let path = dir.join("scenario.toml");
    std::fs::write(&path, text).unwrap();

    let loaded = load_scenario(&path).unwrap();
    match &loaded.weather {
        gridbroker_core::WeatherSource::Measured { series } => {
            assert_eq!(series.samples, vec![(0, 0.0), (900, 0.5), (1800, 1.0)]);
        }
        other => panic!("expected measured weather, got {other:?}"),
    }
    match &loaded.appliances[0].usage {
        gridbroker_core::UsageModel::EventTrace { events } => {
            assert_eq!(events, &vec![3600, 7200]);
        }
        other => panic!("expected trace usage, got {other:?}"),
    }
}
