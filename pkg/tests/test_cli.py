import json
import os
import re

import pytest

from gridkit.cli import main
from gridkit.demos import FAN_TRIANGLES, FAN_VERTICES


@pytest.fixture(autouse=True)
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def fanFile(tmp_path):
    path = tmp_path / "fan.json"
    path.write_text(json.dumps({"vertices": FAN_VERTICES,
                                "simplices": FAN_TRIANGLES}))
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parseL2(out):
    match = re.match(r"l2error=([0-9.eE+-]+) callbacks=(\d+)", out)
    assert match, out
    return float(match.group(1)), int(match.group(2))


def test_make_grid_cartesian(workdir, capsys):
    code, out, _ = run(capsys, "make-grid", "--cartesian",
                       "0,0", "1,0.25", "15,4")
    assert code == 0
    assert out.strip() == "elements=60 vertices=80"
    assert os.path.exists("gridkit-state.json")


def test_make_grid_json_conform(workdir, capsys):
    code, out, _ = run(capsys, "make-grid", "--json", fanFile(workdir),
                       "--kind", "conform")
    assert code == 0
    assert out.strip() == "elements=6 vertices=8"


def test_make_grid_inverted_bounds_exit3(workdir, capsys):
    code, out, err = run(capsys, "make-grid", "--cartesian",
                         "0,0", "0,1", "1,1")
    assert code == 3
    assert "error" in err


def test_make_grid_bad_flags_exit2(workdir, capsys):
    with pytest.raises(SystemExit) as info:
        main(["make-grid", "--cartesian", "0,0"])
    assert info.value.code == 2
    capsys.readouterr()


def test_l2error_modes_agree(workdir, capsys):
    run(capsys, "make-grid", "--json", fanFile(workdir), "--kind", "conform")
    code, out, _ = run(capsys, "l2error", "--refine", "2", "--order", "5",
                       "--mode", "batch")
    assert code == 0
    batch, batchCalls = parseL2(out)
    _, out, _ = run(capsys, "l2error", "--refine", "2", "--order", "5",
                    "--mode", "loop")
    loop, loopCalls = parseL2(out)
    _, out, err = run(capsys, "l2error", "--refine", "2", "--order", "5",
                      "--mode", "kernel", "--timings")
    kernel, kernelCalls = parseL2(out)
    assert abs(batch - loop) <= 1e-12
    assert abs(batch - kernel) <= 1e-12
    assert batchCalls == 24
    assert loopCalls == 24 * 7
    assert kernelCalls == 0
    assert "time=" in err


def test_fem_poisson_rates(workdir, capsys):
    code, out, _ = run(capsys, "fem-poisson", "--refine", "3")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "h,dofs,l2error,rate"
    finalRate = float(lines[-1].split(",")[-1])
    assert 2.7 <= finalRate <= 3.2


def test_fv_transport_constant_state(workdir, capsys):
    code, out, _ = run(capsys, "fv-transport", "--cells", "8",
                       "--tend", "0.1", "--constant", "0.7")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "step,t,tau,mass,min,max"
    masses = [float(line.split(",")[3]) for line in lines[1:]]
    assert max(abs(m - masses[0]) for m in masses) <= 1e-12
    assert len(masses) > 2


def test_fv_transport_writes_vtk(workdir, capsys):
    code, out, _ = run(capsys, "fv-transport", "--cells", "6",
                       "--tend", "0.05", "--vtk-every", "2")
    assert code == 0
    assert os.path.exists("transport_0000.vtu")
    assert os.path.exists("transport_0002.vtu")


def test_partition_demo(workdir, capsys):
    code, out, _ = run(capsys, "partition-demo", "--ranks", "5")
    assert code == 0
    assert out.strip() == "verified ranks=5 vertices=80"
    for rank in range(5):
        path = f"partition_rank{rank}.csv"
        assert os.path.exists(path)
        with open(path) as handle:
            header = handle.readline().strip()
            assert header == "vertexGlobalIndex,rank,value"
            assert len(handle.readlines()) > 0
    assert os.path.exists("partition_minrank.vtu")


def test_adapt_demo(workdir, capsys):
    code, out, _ = run(capsys, "adapt-demo")
    assert code == 0
    counts = [int(line.split("elements=")[1])
              for line in out.strip().splitlines()]
    assert counts[0] == 24
    assert all(b > a for a, b in zip(counts, counts[1:]))


def test_l2error_reproducible(workdir, capsys):
    run(capsys, "make-grid", "--json", fanFile(workdir), "--kind", "conform")
    _, first, _ = run(capsys, "l2error", "--refine", "3", "--mode", "batch")
    _, second, _ = run(capsys, "l2error", "--refine", "3", "--mode", "batch")
    assert first == second
