from __future__ import annotations

import json
import math

import numpy as np
import pytest

from acoustic_eit import (
    ConfigError,
    ConvergenceError,
    RankError,
    classify_regime,
    dbm_to_watts,
    eit_linewidth,
    hz_to_angular,
)
from acoustic_eit.experiments import (
    PIPELINE_COLUMNS,
    AtomParams,
    CalibrationParams,
    ExperimentConfig,
    GridSpec,
    IdtParams,
    NoiseParams,
    SweepRecord,
    csv_text,
    export_result,
    import_csv,
    import_json,
    json_text,
    merge_config_dicts,
    paper_profile,
    resolve_config,
    result_text,
    run_control_sweep,
    run_experiment,
    run_flux_sweep,
    run_linewidth_pipeline,
    run_power_sweep,
    simulate_control_row,
    synthesize_noise,
)


# ---------------------------------------------------------------------------
# Config plumbing
# ---------------------------------------------------------------------------


def test_grid_spec_values():
    grid = GridSpec(start=0.0, stop=10.0, count=5)
    assert np.array_equal(grid.values(), np.array([0.0, 2.5, 5.0, 7.5, 10.0]))
    single = GridSpec(start=3.0, stop=3.0, count=1)
    assert np.array_equal(single.values(), np.array([3.0]))


def test_grid_spec_repeated_setpoint_allowed():
    grid = GridSpec(start=-50.0, stop=-50.0, count=3)
    assert np.array_equal(grid.values(), np.full(3, -50.0))


def test_grid_spec_validation():
    with pytest.raises(ConfigError):
        GridSpec(start=0.0, stop=1.0, count=0)
    with pytest.raises(ConfigError):
        GridSpec(start=float("nan"), stop=1.0, count=3)
    with pytest.raises(ConfigError):
        GridSpec.from_dict({"start": 0.0, "stop": 1.0}, "grid")
    with pytest.raises(ConfigError):
        GridSpec.from_dict({"start": 0.0, "stop": 1.0, "count": 3, "step": 1}, "grid")
    with pytest.raises(ConfigError):
        GridSpec.from_dict({"start": 0.0, "stop": 1.0, "count": True}, "grid")


def test_param_builders_wrap_domain_errors():
    with pytest.raises(ConfigError):
        AtomParams(frequency_hz=2.2684e9, anharmonicity_hz=118.4e6,
                   decay_hz=-1.0).build()
    with pytest.raises(ConfigError):
        IdtParams(pairs=25, frequency_hz=2.26e9, k2=2.0,
                  capacitance_f=1.5e-13).build()
    with pytest.raises(ConfigError):
        CalibrationParams(k_hz2_per_watt=1.0, anchor_power_dbm=-45.0,
                          anchor_rabi_hz=16.06e6).build()
    with pytest.raises(ConfigError):
        CalibrationParams(anchor_power_dbm=-45.0).build()
    with pytest.raises(ConfigError):
        NoiseParams(sigma_rel=-0.1)
    with pytest.raises(ConfigError):
        NoiseParams(kind="additive")


def test_config_round_trip_through_dict():
    for scheme in ("control-sweep", "power-sweep", "flux-sweep", "linewidth-pipeline"):
        cfg = paper_profile(scheme)
        rebuilt = ExperimentConfig.from_dict(cfg.to_dict())
        assert rebuilt.to_dict() == cfg.to_dict()


def test_config_rejects_unknown_keys_and_bad_version():
    data = paper_profile("power-sweep").to_dict()
    data["bogus"] = 1
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(data)
    data = paper_profile("power-sweep").to_dict()
    data["schema_version"] = 99
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(data)


def test_config_scheme_requirements():
    atom = AtomParams(frequency_hz=2.2684e9, anharmonicity_hz=118.4e6, decay_hz=20.1e6)
    with pytest.raises(ConfigError):
        ExperimentConfig(scheme="mystery-sweep", atom=atom).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig(scheme="control-sweep", atom=atom).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig(scheme="flux-sweep", atom=atom,
                         probe_detuning_grid=GridSpec(-1e6, 1e6, 11)).validate()


def test_merge_config_dicts_is_recursive():
    base = {"a": 1, "nested": {"x": 1, "y": 2}}
    overlay = {"nested": {"y": 3}, "b": 4}
    merged = merge_config_dicts(base, overlay)
    assert merged == {"a": 1, "nested": {"x": 1, "y": 3}, "b": 4}
    assert base["nested"] == {"x": 1, "y": 2}


def test_resolve_config_profile_and_overrides(tmp_path):
    cfg = resolve_config("power-sweep", profile="paper", seed=7, output_format="json")
    assert cfg.noise.seed == 7
    assert cfg.output_format == "json"

    overlay_path = tmp_path / "overlay.json"
    overlay_path.write_text(json.dumps({"noise": {"sigma_rel": 0.01, "seed": 3}}))
    merged = resolve_config("power-sweep", profile="paper", config_path=overlay_path)
    assert merged.noise.sigma_rel == 0.01
    assert merged.noise.seed == 3

    conflict = tmp_path / "conflict.json"
    conflict.write_text(json.dumps({"scheme": "flux-sweep"}))
    with pytest.raises(ConfigError):
        resolve_config("power-sweep", profile="paper", config_path=conflict)

    with pytest.raises(ConfigError):
        resolve_config("power-sweep")
    with pytest.raises(ConfigError):
        resolve_config("power-sweep", profile="unknown")


# ---------------------------------------------------------------------------
# Records and noise
# ---------------------------------------------------------------------------


def test_sweep_record_validation():
    rec = SweepRecord((1.0, 2.0), 0.6 - 0.8j, "eit")
    assert rec.magnitude == pytest.approx(1.0, rel=1e-12)
    assert rec.phase == pytest.approx(math.atan2(-0.8, 0.6), rel=1e-12)
    with pytest.raises(ValueError):
        SweepRecord((float("inf"),), 1.0 + 0.0j)
    with pytest.raises(ValueError):
        SweepRecord((1.0,), complex(float("nan"), 0.0))


def test_noise_zero_sigma_is_identity():
    records = [SweepRecord((float(i),), complex(i, -i)) for i in range(5)]
    assert synthesize_noise(records, 0.0, seed=1) == records


def test_noise_is_deterministic_per_seed():
    records = [SweepRecord((float(i),), 1.0 + 0.0j) for i in range(100)]
    a = synthesize_noise(records, 0.02, seed=42)
    b = synthesize_noise(records, 0.02, seed=42)
    c = synthesize_noise(records, 0.02, seed=43)
    assert a == b
    assert a != c


def test_noise_sample_sigma_matches_nominal():
    n = 10_000
    records = [SweepRecord((float(i),), 1.0 + 0.0j) for i in range(n)]
    noisy = synthesize_noise(records, 0.02, seed=2026)
    deviations = np.array([rec.value for rec in noisy]) - 1.0
    # nominal per-quadrature sigma is 0.02 * max|value| = 0.02
    assert np.std(deviations.real) == pytest.approx(0.02, rel=0.05)
    assert np.std(deviations.imag) == pytest.approx(0.02, rel=0.05)


def test_noise_magnitude_kind_scales_values():
    records = [SweepRecord((float(i),), 2.0 + 1.0j) for i in range(2000)]
    noisy = synthesize_noise(records, 0.01, seed=5, kind="magnitude")
    factors = np.array([rec.value for rec in noisy]) / (2.0 + 1.0j)
    assert np.allclose(factors.imag, 0.0, atol=1e-12)
    assert np.std(factors.real) == pytest.approx(0.01, rel=0.1)


def test_noise_validation():
    records = [SweepRecord((0.0,), 1.0 + 0.0j)]
    with pytest.raises(ValueError):
        synthesize_noise(records, -0.1, seed=0)
    with pytest.raises(ValueError):
        synthesize_noise(records, 0.1, seed=0, kind="bogus")


# ---------------------------------------------------------------------------
# Control sweep
# ---------------------------------------------------------------------------


def test_zero_control_row_is_flat():
    atom = paper_profile("control-sweep").atom.build()
    freqs = np.linspace(2.10e9, 2.20e9, 11)
    row = simulate_control_row(atom, 0.0, freqs)
    expected = atom.Gamma10 / (2.0 * atom.gamma10)
    assert np.allclose(np.abs(row), expected, rtol=1e-12)
    assert float(np.ptp(np.abs(row))) < 1e-12


def test_control_sweep_dip_deepens_and_broadens():
    result = run_control_sweep(paper_profile("control-sweep"))
    freqs = paper_profile("control-sweep").control_frequency_grid.values()
    powers = paper_profile("control-sweep").power_grid.values()
    rows = {}
    for rec in result.records:
        rows.setdefault(rec.axes[0], []).append(rec)
    assert len(rows) == len(powers)
    dip_mins = []
    widths = []
    for power in powers:
        mags = np.array([rec.magnitude for rec in rows[power]])
        i_min = int(np.argmin(mags))
        # the transparency window sits at the 1-2 transition frequency
        assert abs(freqs[i_min] - 2.15e9) < 3e6
        dip_mins.append(float(mags[i_min]))
        flat = float(np.max(mags))
        widths.append(int(np.count_nonzero(mags < 0.5 * (flat + mags[i_min]))))
    assert all(b < a for a, b in zip(dip_mins, dip_mins[1:]))
    assert widths[-1] > widths[0]
    assert result.summary["transition_frequency_hz"] == pytest.approx(2.15e9, rel=1e-12)


def test_control_sweep_threshold_annotation():
    result = run_control_sweep(paper_profile("control-sweep"))
    assert result.summary["threshold_rabi_hz"] == pytest.approx(16.06e6, rel=1e-9)
    assert result.summary["threshold_power_dbm"] == pytest.approx(-45.0, abs=1e-9)


def test_control_sweep_regime_annotations_match_classifier():
    cfg = paper_profile("control-sweep")
    atom = cfg.atom.build()
    calibration = cfg.calibration.build()
    result = run_control_sweep(cfg)
    for rec in result.records:
        omega_c = calibration.omega_c(rec.axes[0])
        expected = classify_regime(atom.gamma10, atom.gamma20, omega_c).regime.value
        assert rec.annotation == expected
    seen = {rec.annotation for rec in result.records}
    assert "eit" in seen
    assert "autler-townes" in seen


def test_power_sweep_runs_and_annotates():
    result = run_power_sweep(paper_profile("power-sweep"))
    assert result.columns[0] == "control_power_dbm"
    assert len(result.records) == 41
    # on-resonance reflection shrinks monotonically with control power
    mags = [rec.magnitude for rec in result.records]
    assert all(b < a for a, b in zip(mags, mags[1:]))


# ---------------------------------------------------------------------------
# Flux sweep
# ---------------------------------------------------------------------------


def _flux_config(rabi_hz, crosstalk_re=0.0, residual_hz=4.0e6):
    base = paper_profile("flux-sweep")
    return ExperimentConfig(
        scheme="flux-sweep",
        atom=base.atom,
        probe_detuning_grid=GridSpec(start=-50.0e6, stop=50.0e6, count=401),
        control_rabi_hz=tuple(rabi_hz),
        residual_detuning_hz=residual_hz,
        crosstalk_re=crosstalk_re,
        crosstalk_im=0.0,
    )


def test_flux_sweep_control_off_is_symmetric():
    result = run_flux_sweep(_flux_config([0.0], residual_hz=4.0e6))
    mags = np.array([rec.magnitude for rec in result.records])
    assert int(np.argmin(mags)) == mags.size // 2
    assert np.allclose(mags, mags[::-1], rtol=1e-12)
    assert result.records[0].annotation == "eit"


def test_flux_sweep_ats_has_two_minima():
    result = run_flux_sweep(_flux_config([30.0e6]))
    mags = np.array([rec.magnitude for rec in result.records])
    dets = np.array([rec.axes[1] for rec in result.records])
    interior = (mags[1:-1] < mags[:-2]) & (mags[1:-1] <= mags[2:])
    minima = np.nonzero(interior)[0] + 1
    assert minima.size == 2
    separation = abs(dets[minima[1]] - dets[minima[0]])
    assert 20e6 < separation < 40e6
    assert result.records[0].annotation == "autler-townes"


def test_flux_sweep_asymmetry_with_offset():
    result = run_flux_sweep(_flux_config([6.0e6], crosstalk_re=0.05))
    mags = np.array([rec.magnitude for rec in result.records])
    mirrored = mags[::-1]
    assert float(np.max(np.abs(mags - mirrored))) > 1e-3
    assert result.records[0].annotation == "eit"


def test_flux_sweep_regimes_per_curve():
    result = run_flux_sweep(_flux_config([6.0e6, 30.0e6]))
    by_rabi = {}
    for rec in result.records:
        by_rabi.setdefault(rec.axes[0], set()).add(rec.annotation)
    assert by_rabi[6.0e6] == {"eit"}
    assert by_rabi[30.0e6] == {"autler-townes"}


# ---------------------------------------------------------------------------
# Linewidth pipeline
# ---------------------------------------------------------------------------


def test_pipeline_noiseless_recovers_device_parameters():
    cfg = paper_profile("linewidth-pipeline")
    result = run_linewidth_pipeline(cfg)
    assert result.columns == PIPELINE_COLUMNS
    assert len(result.table) == cfg.power_grid.count
    assert all(row["status"] == "ok" for row in result.table)

    line = result.summary["line_fit"]
    assert line["gamma20_hz"] == pytest.approx(4.94e6, rel=1e-6)
    expected_k = (16.06e6) ** 2 / dbm_to_watts(-45.0)
    assert line["k_hz2_per_watt"] == pytest.approx(expected_k, rel=1e-6)
    assert result.summary["threshold_rabi_hz"] == pytest.approx(16.06e6, rel=1e-6)
    assert result.summary["threshold_power_dbm"] == pytest.approx(-45.0, abs=1e-5)

    atom = cfg.atom.build()
    calibration = cfg.calibration.build()
    for row in result.table:
        omega_c = calibration.omega_c(row["power_dbm"])
        width = eit_linewidth(atom.gamma10, atom.gamma20, omega_c)
        assert hz_to_angular(row["gamma_eit_hz"]) == pytest.approx(width, rel=1e-6)
        assert hz_to_angular(row["omega_c_hz"]) == pytest.approx(omega_c, rel=1e-4)
        expected_regime = classify_regime(atom.gamma10, atom.gamma20, omega_c).regime.value
        assert row["regime"] == expected_regime
        assert row["dip_center_hz"] == pytest.approx(2.15e9, rel=1e-6)


def test_pipeline_single_power_rank_error():
    base = paper_profile("linewidth-pipeline")
    cfg = ExperimentConfig(
        scheme="linewidth-pipeline",
        atom=base.atom,
        calibration=base.calibration,
        power_grid=GridSpec(start=-50.0, stop=-50.0, count=3),
        control_frequency_grid=base.control_frequency_grid,
    )
    with pytest.raises(RankError):
        run_linewidth_pipeline(cfg)


def test_run_experiment_dispatch():
    result = run_experiment(paper_profile("power-sweep"))
    assert result.columns == ("control_power_dbm", "re", "im", "abs", "phase", "annotation")
    with pytest.raises(ConfigError):
        run_control_sweep(paper_profile("power-sweep"))


# ---------------------------------------------------------------------------
# Export / import
# ---------------------------------------------------------------------------


def test_empty_records_give_header_only_csv():
    assert csv_text(("a", "b"), []) == "a,b\n"


def test_csv_round_trip_bitwise(tmp_path):
    cfg = ExperimentConfig(
        scheme="flux-sweep",
        atom=paper_profile("flux-sweep").atom,
        probe_detuning_grid=GridSpec(start=-20.0e6, stop=20.0e6, count=21),
        control_rabi_hz=(6.0e6,),
        residual_detuning_hz=4.0e6,
        crosstalk_re=0.013,
        noise=NoiseParams(sigma_rel=0.01, seed=9),
    )
    result = run_flux_sweep(cfg)
    path = tmp_path / "sweep.csv"
    export_result(result, path, fmt="csv")
    columns, rows = import_csv(path)
    assert columns == result.columns
    assert len(rows) == len(result.table)
    for got, want in zip(rows, result.table):
        for col in columns:
            if isinstance(want[col], float):
                assert got[col] == want[col]
            else:
                assert got[col] == want[col]


def test_json_round_trip_with_config_echo(tmp_path):
    cfg = paper_profile("power-sweep")
    result = run_power_sweep(cfg)
    path = tmp_path / "sweep.json"
    export_result(result, path, fmt="json")
    envelope = import_json(path)
    assert envelope["schema_version"] == 1
    assert envelope["config_echo"] == cfg.to_dict()
    assert envelope["columns"] == list(result.columns)
    assert len(envelope["rows"]) == len(result.table)
    for got, want in zip(envelope["rows"], result.table):
        for col in result.columns:
            assert got[col] == want[col]
    assert envelope["summary"]["threshold_power_dbm"] == pytest.approx(-45.0, abs=1e-9)


def test_import_json_rejects_foreign_files(tmp_path):
    path = tmp_path / "foreign.json"
    path.write_text(json.dumps({"rows": []}))
    with pytest.raises(ValueError):
        import_json(path)


def test_json_replaces_non_finite_with_null():
    text = json_text(("a",), [{"a": float("nan")}])
    assert "null" in text
    assert "NaN" not in text
    assert json.loads(text)["rows"][0]["a"] is None


def test_result_text_format_selection():
    cfg = paper_profile("power-sweep")
    result = run_power_sweep(cfg)
    assert result_text(result).startswith("control_power_dbm,")
    assert result_text(result, fmt="json").startswith("{")
    with pytest.raises(ConfigError):
        result_text(result, fmt="yaml")


def test_pipeline_export_includes_status_column(tmp_path):
    result = run_linewidth_pipeline(paper_profile("linewidth-pipeline"))
    path = tmp_path / "pipeline.csv"
    export_result(result, path, fmt="csv")
    columns, rows = import_csv(path)
    assert columns == PIPELINE_COLUMNS
    assert all(row["status"] == "ok" for row in rows)
    assert all(row["one_sided"] is False for row in rows)
