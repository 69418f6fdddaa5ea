import os

import pytest

from maxsurf.cli import main


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


@pytest.fixture()
def out_root(tmp_path, monkeypatch):
    root = tmp_path / "out"
    monkeypatch.setenv("MAXSURF_OUT", str(root))
    return root


def test_run_exit_0_and_outputs(tmp_path, out_root):
    cfg = write(tmp_path, "ok.cfg",
                "scenario = cylinder_disk\nnodes = 33\ninitial = constant(0)\n"
                "max_steps = 200\nsnapshot_stride = 100\nout_dir = ok\n")
    assert main(["run", cfg]) == 0
    files = sorted(os.listdir(out_root / "ok"))
    assert files == ["final_profile.csv", "monitor_summary.txt", "timeseries.csv"]
    header = (out_root / "ok" / "final_profile.csv").read_text().splitlines()[0]
    assert header == "s,physical_coord,u,H,v,v_hat,normA2,dV"


def test_run_exit_2_guard_trip(tmp_path, out_root):
    cfg = write(tmp_path, "blow.cfg",
                "scenario = grim_reaper\nnodes = 101\nt0 = -0.05\nt_end = 0.5\n"
                "snapshot_stride = 500\nout_dir = blow\n")
    assert main(["run", cfg]) == 2
    summary = (out_root / "blow" / "monitor_summary.txt").read_text()
    assert "event = guard_tripped" in summary
    # trip time is negative: the boundary degenerates before t = 0
    line = [l for l in summary.splitlines() if l.startswith("event_time")][0]
    assert float(line.split("=")[1]) < 0.0


def test_run_exit_3_config_error(tmp_path, out_root, capsys):
    cfg = write(tmp_path, "bad.cfg", "scenario = grim_reaper\ncfl = 0.9\n")
    assert main(["run", cfg]) == 3
    assert "config error" in capsys.readouterr().err


def test_run_exit_4_condition_failure(tmp_path, out_root):
    cfg = write(tmp_path, "cond.cfg",
                "scenario = grim_reaper\nnodes = 51\nrequire_conditions = true\n"
                "out_dir = cond\n")
    assert main(["run", cfg]) == 4


def test_check_boundary_command(tmp_path, out_root, capsys):
    cfg = write(tmp_path, "sine.cfg", "scenario = sine_tube\nout_dir = sine\n")
    assert main(["check-boundary", cfg]) == 0
    out = capsys.readouterr().out
    assert "condition_ok = True" in out
    cfg2 = write(tmp_path, "trump.cfg", "scenario = grim_reaper\nout_dir = trump\n")
    assert main(["check-boundary", cfg2]) == 4


def test_converge_command(tmp_path, out_root, capsys):
    cfg = write(tmp_path, "leaf.cfg",
                "scenario = pseudosphere_leaf\nnodes = 51\ninitial = leaf(1.0)\n"
                "out_dir = leaf\n")
    assert main(["converge", cfg, "--levels", "2"]) == 0
    out = capsys.readouterr().out
    assert "nodes, max_error, order" in out
    assert (out_root / "leaf" / "convergence.csv").exists()


def test_converge_saturated_on_plane(tmp_path, out_root, capsys):
    cfg = write(tmp_path, "plane.cfg",
                "scenario = sine_tube\nnodes = 51\ninitial = plane(widest)\n"
                "t_end = 0\nout_dir = plane\n")
    assert main(["converge", cfg, "--levels", "2"]) == 0
    assert "saturated" in capsys.readouterr().out


def test_batch_command(tmp_path, out_root, capsys):
    batch = tmp_path / "batch"
    batch.mkdir()
    (batch / "a.cfg").write_text(
        "scenario = cylinder_disk\nnodes = 33\ninitial = constant(0)\n"
        "max_steps = 50\nout_dir = batch_a\n")
    (batch / "b.cfg").write_text(
        "scenario = sine_tube\nnodes = 51\ninitial = plane(widest)\n"
        "t_end = 0.01\nout_dir = batch_b\n")
    assert main(["batch", str(batch)]) == 0
    assert (out_root / "batch_a" / "timeseries.csv").exists()
    assert (out_root / "batch_b" / "timeseries.csv").exists()


def test_deterministic_outputs(tmp_path, out_root):
    text = ("scenario = cylinder_disk\nnodes = 33\ninitial = bump(0.05)\n"
            "max_steps = 120\nsnapshot_stride = 60\nout_dir = det\n")
    cfg = write(tmp_path, "det.cfg", text)
    assert main(["run", cfg]) == 0
    first = (out_root / "det" / "timeseries.csv").read_bytes()
    first_prof = (out_root / "det" / "final_profile.csv").read_bytes()
    assert main(["run", cfg]) == 0
    assert (out_root / "det" / "timeseries.csv").read_bytes() == first
    assert (out_root / "det" / "final_profile.csv").read_bytes() == first_prof
