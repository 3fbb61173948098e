import json
import math

import numpy as np
import pytest

from lenspace import load_space
from lenspace.cli import main


def _read(path):
    with open(path) as fh:
        return json.load(fh)


def test_gen_spec_form(tmp_path):
    code = main(["--out-dir", str(tmp_path), "gen", "--spec", "circle:32"])
    assert code == 0
    doc = _read(tmp_path / "space.json")
    assert doc["kind"] == "circle"
    assert doc["n"] == 32
    assert len(doc["measure"]) == 32
    manifest = _read(tmp_path / "run.json")
    assert manifest["command"] == "gen"
    assert manifest["exit_code"] == 0
    assert "space.json" in manifest["artifacts"]
    space = load_space(str(tmp_path / "space.json"))
    assert space.n == 32


def test_gen_out_dir_after_subcommand(tmp_path):
    assert main(["gen", "--spec", "circle:16", "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "space.json").exists()


def test_gen_flag_form_matches_spec_form(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["--out-dir", str(a), "gen", "--spec", "circle:32:6.2832"]) == 0
    assert main(["--out-dir", str(b), "gen", "--kind", "circle", "--n", "32",
                 "--length", "6.2832"]) == 0
    assert (a / "space.json").read_bytes() == (b / "space.json").read_bytes()


def test_gen_byte_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["--out-dir", str(d), "gen", "--spec",
                     "gaussian_interval:33:1:4"]) == 0
    assert (a / "space.json").read_bytes() == (b / "space.json").read_bytes()


def test_gen_bad_spec_exit2(tmp_path):
    assert main(["--out-dir", str(tmp_path), "gen", "--spec", "klein:7"]) == 2


def test_saved_space_usable_as_space_argument(tmp_path):
    assert main(["--out-dir", str(tmp_path), "gen", "--spec", "circle:32"]) == 0
    code = main(["--out-dir", str(tmp_path), "semigroup",
                 "--space", str(tmp_path / "space.json"),
                 "--field", "cos", "--times", "0.5"])
    assert code == 0


def test_semigroup_report_and_residual_rows(tmp_path):
    code = main(["--out-dir", str(tmp_path), "semigroup", "--space", "circle:64",
                 "--field", "cos", "--times", "geo:0.1:1:4"])
    assert code == 0
    doc = _read(tmp_path / "semigroup.json")
    assert doc["checks"]["lipschitz_bound_failures"] == []
    assert len(doc["trace"]["times"]) == 4
    assert len(doc["residual_vs_s"]) == 3
    assert (tmp_path / "semigroup_source.csv").exists()


def test_semigroup_defect_study_decreases(tmp_path):
    code = main(["--out-dir", str(tmp_path), "semigroup", "--space", "circle:32",
                 "--field", "cos", "--times", "0.5", "--refinements", "2"])
    assert code == 0
    rows = _read(tmp_path / "semigroup.json")["defect_vs_mesh"]
    assert len(rows) == 3
    meshes = [r[0] for r in rows]
    defects = [r[1] for r in rows]
    assert meshes[0] > meshes[1] > meshes[2]
    assert defects[0] > defects[1] > defects[2] >= 0


def test_plot_data_from_semigroup(tmp_path):
    main(["--out-dir", str(tmp_path), "semigroup", "--space", "circle:32",
          "--field", "cos", "--times", "0.5", "--refinements", "1"])
    for kind, header in (("residual_vs_s", "s,mean_abs_residual"),
                         ("defect_vs_mesh", "mesh_h,defect")):
        out = tmp_path / f"{kind}.csv"
        code = main(["--out-dir", str(tmp_path), "plot-data",
                     "--report", str(tmp_path / "semigroup.json"),
                     "--kind", kind, "--out", str(out)])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == header
        assert len(lines) >= 2


def test_constants_artifacts_and_estimates(tmp_path):
    code = main(["--out-dir", str(tmp_path), "constants", "--space", "path:16",
                 "--budget", "2", "--seed", "1"])
    assert code == 0
    doc = _read(tmp_path / "constants.json")
    assert set(doc["K_estimates"]) == {"lsi", "talagrand", "poincare"}
    assert all(v > 0 for v in doc["K_estimates"].values())
    assert doc["checks"]["reproducibility_failures"] == []
    for name in ("lsi", "talagrand", "poincare"):
        assert (tmp_path / f"witness_{name}.csv").exists()
    assert "verdict" not in doc or doc["chain_verdict"]


def test_constants_which_subset(tmp_path):
    code = main(["--out-dir", str(tmp_path), "constants", "--space", "path:16",
                 "--which", "poincare", "--budget", "1"])
    assert code == 0
    assert (tmp_path / "witness_poincare.csv").exists()
    assert not (tmp_path / "witness_lsi.csv").exists()


def test_chain_consistent_exit0(tmp_path):
    code = main(["--out-dir", str(tmp_path), "chain", "--space", "path:16",
                 "--K", "0.001", "--tau", "0.05", "--seed", "7",
                 "--trace-fields", "2"])
    assert code == 0
    doc = _read(tmp_path / "chain.json")
    assert doc["consistent"] is True
    assert doc["hypothesis_refuted"] is False
    assert "consistent" in doc["verdict"]
    stages = {c["stage"] for c in doc["chain"]}
    assert stages == {"lsi", "talagrand", "poincare"}
    assert doc["traces"]["psi"]["max_excess"] <= 0.02
    assert doc["traces"]["phi"]["max_upward_step"] <= 0.01


def test_chain_refuted_exit1(tmp_path):
    code = main(["--out-dir", str(tmp_path), "chain", "--space", "path:16",
                 "--K", "1000", "--trace-fields", "1"])
    assert code == 1
    doc = _read(tmp_path / "chain.json")
    assert doc["hypothesis_refuted"] is True
    assert "fails on this space" in doc["verdict"]


def test_chain_byte_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["--out-dir", str(d), "chain", "--space", "path:12",
                     "--K", "0.001", "--seed", "3", "--trace-fields", "2"]) == 0
    assert (a / "chain.json").read_bytes() == (b / "chain.json").read_bytes()


def test_chain_plot_kinds(tmp_path):
    main(["--out-dir", str(tmp_path), "chain", "--space", "path:12",
          "--K", "0.001", "--trace-fields", "2"])
    for kind in ("psi", "phi"):
        out = tmp_path / f"{kind}.csv"
        code = main(["--out-dir", str(tmp_path), "plot-data",
                     "--report", str(tmp_path / "chain.json"),
                     "--kind", kind, "--out", str(out)])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == f"t,{kind},series"
        assert len(lines) == 1 + 2 * 12


def test_plot_data_missing_trace_exit2(tmp_path, capsys):
    main(["--out-dir", str(tmp_path), "chain", "--space", "path:12",
          "--K", "0.001", "--trace-fields", "1"])
    code = main(["--out-dir", str(tmp_path), "plot-data",
                 "--report", str(tmp_path / "chain.json"),
                 "--kind", "residual_vs_s"])
    assert code == 2


def test_plot_data_missing_file_exit2(tmp_path):
    code = main(["--out-dir", str(tmp_path), "plot-data",
                 "--report", str(tmp_path / "nope.json"), "--kind", "psi"])
    assert code == 2


def test_transport_point_masses(tmp_path):
    code = main(["--out-dir", str(tmp_path), "transport", "--space", "path:8",
                 "--mu0", "point:0", "--mu1", "point:7"])
    assert code == 0
    doc = _read(tmp_path / "transport.json")
    assert doc["distance"] == pytest.approx(doc["space"]["diameter"], rel=1e-12)
    assert doc["coupling"] == [[0, 7, pytest.approx(1.0)]]
    assert doc["duality_gap"] <= 1e-9 * (1 + doc["cost"])


def test_transport_identical_marginals_zero(tmp_path):
    code = main(["--out-dir", str(tmp_path), "transport", "--space", "circle:16",
                 "--mu0", "nu", "--mu1", "nu"])
    assert code == 0
    assert _read(tmp_path / "transport.json")["distance"] == 0.0


def test_transport_bad_point_exit2(tmp_path):
    assert main(["--out-dir", str(tmp_path), "transport", "--space", "path:8",
                 "--mu0", "point:99", "--mu1", "nu"]) == 2


def test_transport_unknown_marginal_exit2(tmp_path):
    assert main(["--out-dir", str(tmp_path), "transport", "--space", "path:8",
                 "--mu0", "blob", "--mu1", "nu"]) == 2


def test_doubling_circle(tmp_path):
    code = main(["--out-dir", str(tmp_path), "doubling", "--space", "circle:64",
                 "--r-min", "0.4", "--r-max", "1.0"])
    assert code == 0
    doc = _read(tmp_path / "doubling.json")
    assert 1.5 <= doc["doubling_constant"] <= 2.5
    assert doc["metric_check"]["passed"] is True
    assert doc["local_poincare"] is None


def test_doubling_with_local_poincare(tmp_path):
    code = main(["--out-dir", str(tmp_path), "doubling", "--space", "circle:64",
                 "--r-min", "0.4", "--r-max", "1.0",
                 "--field", "cos", "--radius", "0.5"])
    assert code == 0
    doc = _read(tmp_path / "doubling.json")
    assert doc["local_poincare"] is not None
    assert doc["local_poincare"] > 0


def test_usage_error_exit2():
    assert main(["frobnicate"]) == 2
    assert main([]) == 2


def test_help_exit0():
    assert main(["--help"]) == 0
    assert main(["gen", "--help"]) == 0


def test_bad_time_grid_exit2(tmp_path):
    assert main(["--out-dir", str(tmp_path), "semigroup", "--space", "circle:16",
                 "--times", "geo:0:1:4"]) == 2
    assert main(["--out-dir", str(tmp_path), "semigroup", "--space", "circle:16",
                 "--times", "abc"]) == 2
