use nonlocal_crowd::simulator::config::{corridor_eq20, room_eq25, InitialConfig, RunConfig};
use nonlocal_crowd::simulator::{read_snapshot, run, write_run, DiagnosticsRecord, Simulation};
use proptest::prelude::*;

fn coarse_room(t_final: f64) -> RunConfig {
    let mut c = room_eq25();
    c.numerics.h = 0.25;
    c.numerics.kernel_floor = 2.0;
    c.numerics.t_final = t_final;
    c.output.times.clear();
    c
}

fn coarse_corridor(t_final: f64) -> RunConfig {
    let mut c = corridor_eq20();
    c.numerics.h = 0.125;
    c.numerics.kernel_floor = 1.5;
    c.numerics.t_final = t_final;
    c.output.times.clear();
    c
}

fn series_of(config: &RunConfig) -> Vec<DiagnosticsRecord> {
    let mut sim = Simulation::from_config(config).unwrap();
    sim.run_until(config.numerics.t_final, |_| Ok(())).unwrap();
    sim.series().to_vec()
}

/// Mass lost equals mass exited, walls pass nothing and densities stay
/// nonnegative, population by population.
fn assert_ledger(series: &[DiagnosticsRecord]) {
    let initial: Vec<f64> = series[0].populations.iter().map(|p| p.mass).collect();
    for w in series.windows(2) {
        for (i, (a, b)) in w[0].populations.iter().zip(&w[1].populations).enumerate() {
            let lost = a.mass - b.mass;
            let exited = b.outflux - a.outflux;
            assert!(
                (lost - exited).abs() <= 1e-10 * initial[i].max(1e-300),
                "population {i} at t = {}: lost {lost}, exited {exited}",
                w[1].t
            );
            assert!(b.mass <= a.mass, "mass grew at t = {}", w[1].t);
            assert_eq!(b.wall_flux, 0.0);
            assert!(b.min >= -1e-12, "negative density {} at t = {}", b.min, w[1].t);
        }
    }
}

/// `sup ρ(t) ≤ sup ρ(0) · exp(G t)` with `G` the largest divergence logged
/// during the run.
fn assert_sup_envelope(series: &[DiagnosticsRecord]) {
    let g = series.iter().map(|r| r.max_divergence).fold(0.0, f64::max);
    for i in 0..series[0].populations.len() {
        let s0 = series[0].populations[i].sup;
        for r in series {
            let bound = s0 * (g * r.t).exp();
            assert!(
                r.populations[i].sup <= bound * (1.0 + 1e-12),
                "population {i} at t = {}: sup {} above envelope {bound}",
                r.t,
                r.populations[i].sup
            );
        }
    }
}

#[test]
fn evacuation_invariants() {
    let series = series_of(&coarse_room(4.0));
    assert_ledger(&series);
    assert_sup_envelope(&series);
    assert!(series.last().unwrap().populations[0].mass < 48.0);
}

#[test]
fn corridor_invariants() {
    let series = series_of(&coarse_corridor(2.0));
    assert_ledger(&series);
    assert_sup_envelope(&series);
}

#[test]
fn written_series_has_zero_wall_flux_and_repeats_bitwise() {
    let mut config = coarse_corridor(0.5);
    config.output.times = vec![0.25];
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    write_run(&run(&config).unwrap(), a.path()).unwrap();
    write_run(&run(&config).unwrap(), b.path()).unwrap();

    let text = std::fs::read_to_string(a.path().join("series.csv")).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let wall_columns: Vec<usize> = (0..header.len()).filter(|&c| header[c].starts_with("wallflux")).collect();
    assert_eq!(wall_columns.len(), 2);
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        for &c in &wall_columns {
            assert_eq!(cells[c].parse::<f64>().unwrap(), 0.0);
        }
    }

    let mut compared = 0;
    for entry in std::fs::read_dir(a.path().join("snapshots")).unwrap() {
        let path = entry.unwrap().path();
        let twin = b.path().join("snapshots").join(path.file_name().unwrap());
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&twin).unwrap());
        if path.extension().is_some_and(|e| e == "csv") {
            let snap = read_snapshot(&path).unwrap();
            assert_eq!(snap.values.len(), snap.nx * snap.ny);
            compared += 1;
        }
    }
    // Two populations at t = 0, 0.25 and 0.5.
    assert_eq!(compared, 6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn random_rooms_keep_the_ledger(counts in prop::array::uniform4(0.0f64..30.0), beta in 0.0f64..1.0) {
        let mut config = coarse_room(1.0);
        config.populations[0].betas = vec![beta];
        config.populations[0].initial = InitialConfig::Quadrants { counts };
        let series = series_of(&config);
        let total: f64 = counts.iter().sum();
        prop_assert!((series[0].populations[0].mass - total).abs() <= 1e-9 * total.max(1.0));
        assert_ledger(&series);
        assert_sup_envelope(&series);
    }
}
