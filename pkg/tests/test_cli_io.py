import json

import numpy as np

from confocal_billiards import cli, document, plotting
from confocal_billiards import class_by_id, find_spt


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_classes_list_counts(capsys):
    code, out, _ = run_cli(capsys, "classes", "list", "--dim", "3")
    assert code == 0
    rows = [line for line in out.splitlines() if not line.startswith("#")]
    assert len(rows) == 112
    code, out, _ = run_cli(capsys, "classes", "list", "--dim", "2")
    rows = [line for line in out.splitlines() if not line.startswith("#")]
    assert code == 0 and len(rows) == 12


def test_classes_list_json_filter(capsys):
    code, out, _ = run_cli(capsys, "classes", "list", "--dim", "3",
                           "--type", "H1H1", "--json")
    assert code == 0
    rows = json.loads(out)
    assert len(rows) == 28
    assert all(r["type"] == "H1H1" for r in rows)


def test_freq_invert_golden(capsys):
    code, out, _ = run_cli(capsys, "freq", "invert", "--axes", "0.13,0.8,1.0",
                           "--type", "H1H1", "--winding", "4,3,2")
    assert code == 0
    payload = json.loads(out)
    assert abs(payload["lambdas"][0] - 0.130077) < 1e-5
    assert abs(payload["lambdas"][1] - 0.648376) < 1e-5


def test_freq_eval(capsys):
    code, out, _ = run_cli(capsys, "freq", "eval", "--axes", "0.13,0.8,1.0",
                           "--lambdas", "0.130077,0.648376")
    assert code == 0
    payload = json.loads(out)
    assert payload["type"] == "H1H1"
    assert abs(payload["omega"][0] - 0.375) < 1e-4


def test_spt_find_verify_plot(tmp_path, capsys):
    out_file = tmp_path / "spt.json"
    code, out, _ = run_cli(capsys, "spt", "find", "--class", "H1H1:R2i+R2o",
                           "--axes", "0.13,0.8,1.0", "--out", str(out_file))
    assert code == 0 and out_file.exists()

    code, out, _ = run_cli(capsys, "verify", str(out_file))
    assert code == 0
    report = json.loads(out)
    assert report["passed"] and report["winding_counts"] == [4, 3, 2]

    svg_file = tmp_path / "spt.svg"
    code, out, _ = run_cli(capsys, "plot", str(out_file),
                           "--plane", "3d", "--out", str(svg_file))
    assert code == 0
    first = svg_file.read_text()
    assert first.startswith("<svg") and "polyline" in first
    run_cli(capsys, "plot", str(out_file), "--plane", "3d", "--out", str(svg_file))
    assert svg_file.read_text() == first  # deterministic output
    for plane in ("pi1", "pi2", "pi3"):
        code, _, _ = run_cli(capsys, "plot", str(out_file),
                             "--plane", plane, "--out", str(svg_file))
        assert code == 0


def test_plot_2d_modes(tmp_path, capsys):
    out_file = tmp_path / "tri.json"
    code, _, _ = run_cli(capsys, "spt", "find", "--class", "E:Rx+fRx",
                         "--axes", "0.16,1.0", "--out", str(out_file))
    assert code == 0
    for plane in ("cart", "elliptic"):
        svg_file = tmp_path / f"tri-{plane}.svg"
        code, _, _ = run_cli(capsys, "plot", str(out_file),
                             "--plane", plane, "--out", str(svg_file))
        assert code == 0
        body = svg_file.read_text()
        assert plotting.TRAJECTORY_COLOR in body


def test_exit_codes(tmp_path, capsys):
    code, _, err = run_cli(capsys, "nonsense")
    assert code == 1 and "usage" in err
    code, _, err = run_cli(capsys, "freq", "invert", "--axes", "1.0,2.0",
                           "--type", "H", "--winding", "20,1")
    assert code == 2
    assert json.loads(err.strip())["error"]
    # verification failure -> exit 3
    out_file = tmp_path / "spt.json"
    run_cli(capsys, "spt", "find", "--class", "E:Rx+fRx",
            "--axes", "0.16,1.0", "--out", str(out_file))
    doc = json.loads(out_file.read_text())
    doc["impacts"][1][0] += 1e-3
    out_file.write_text(json.dumps(doc))
    code, out, _ = run_cli(capsys, "verify", str(out_file))
    assert code == 3


def test_document_17_digit_floats(tmp_path, ell_thin):
    traj = find_spt(class_by_id("H1H2:R+fR13", 2), ell_thin)
    text = document.dumps(document.trajectory_to_document(traj))
    # parse back: every float must round-trip exactly
    doc = json.loads(text)
    rebuilt = document.trajectory_from_document(doc)
    assert np.array_equal(rebuilt.impacts, traj.impacts)
    assert np.array_equal(rebuilt.velocities, traj.velocities)
    assert document.dumps(document.trajectory_to_document(rebuilt)) == text


def test_atomic_write(tmp_path):
    target = tmp_path / "out.json"
    document.write_atomic(str(target), "hello\n")
    assert target.read_text() == "hello\n"
    assert [p.name for p in tmp_path.iterdir()] == ["out.json"]
