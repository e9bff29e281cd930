import json
import re

import pytest

from abtrack.cli import main
from abtrack.config import EngineConfig, from_flat, to_flat

FIXTURE = """\
1,-1,0,50,30,30,0.9,-1,-1,-1
2,-1,3,50,30,30,0.9,-1,-1,-1
3,-1,6,50,30,30,0.9,-1,-1,-1
"""


def run(argv, capsys=None):
    code = main([str(a) for a in argv])
    return code, (capsys.readouterr() if capsys else None)


def track(tmp_path, dets, extra=()):
    out = tmp_path / "tracks.txt"
    ev = tmp_path / "events.jsonl"
    code = main(["track", "--dets", str(dets), "--out-tracks", str(out), "--out-events", str(ev), *extra])
    return code, out, ev


def test_track_smoke(tmp_path):
    dets = tmp_path / "d.txt"
    dets.write_text(FIXTURE)
    code, out, ev = track(tmp_path, dets, ["--out-timing", str(tmp_path / "t.txt")])
    assert code == 0
    assert len(out.read_text().splitlines()) >= 1
    assert json.loads(ev.read_text().splitlines()[0])["event"] == "enters_fov"
    assert len((tmp_path / "t.txt").read_text().splitlines()) == 3


def test_bogus_format_exits_2(tmp_path):
    dets = tmp_path / "d.txt"
    dets.write_text(FIXTURE)
    with pytest.raises(SystemExit) as info:
        track(tmp_path, dets, ["--format", "bogus"])
    assert info.value.code == 2


def test_missing_file_and_bad_key(tmp_path, capsys):
    code, _, _ = track(tmp_path, tmp_path / "absent.txt")
    assert code == 2 and "not found" in capsys.readouterr().err
    dets = tmp_path / "d.txt"
    dets.write_text(FIXTURE)
    code, _, _ = track(tmp_path, dets, ["--set", "cost.bogus=3"])
    assert code == 2 and "cost.bogus" in capsys.readouterr().err


def test_malformed_detections_exit_2(tmp_path, capsys):
    dets = tmp_path / "d.txt"
    dets.write_text("1,-1,a,b\n")
    code, _, _ = track(tmp_path, dets)
    assert code == 2 and "line 1" in capsys.readouterr().err


def test_export_asp_one_file_per_frame(tmp_path):
    dets = tmp_path / "d.txt"
    dets.write_text(FIXTURE + "6,-1,15,50,30,30,0.9,-1,-1,-1\n")  # frames 4 and 5 are empty
    code, _, _ = track(tmp_path, dets, ["--export-asp", str(tmp_path / "asp")])
    assert code == 0
    assert sorted(p.name for p in (tmp_path / "asp").iterdir()) == [f"frame_{t:06d}.lp" for t in range(1, 7)]


def generate(tmp_path, seed=3):
    d, g = tmp_path / "dets.txt", tmp_path / "gt.txt"
    assert main(["generate", "--tracks", "3", "--overlap", "0.5", "--frames", "40", "--seed", str(seed),
                 "--dropout", "0.1", "--jitter", "1", "--out-dets", str(d), "--out-gt", str(g)]) == 0
    return d, g


def test_track_is_byte_deterministic(tmp_path):
    d, _ = generate(tmp_path)
    outs = []
    for k in range(2):
        sub = tmp_path / str(k)
        sub.mkdir()
        assert track(sub, d)[0] == 0
        outs.append(((sub / "tracks.txt").read_bytes(), (sub / "events.jsonl").read_bytes()))
    assert outs[0] == outs[1]


def eval_json(capsys, gt, hyp):
    code = main(["eval", "--gt", str(gt), "--hyp", str(hyp), "--json"])
    out = capsys.readouterr().out
    return code, json.loads(out.strip().splitlines()[-1]), out


def test_eval_identity_and_empty(tmp_path, capsys):
    _, g = generate(tmp_path)
    rows = [l.split(",") for l in g.read_text().splitlines() if float(l.split(",")[8]) > 0]
    hyp = tmp_path / "hyp.txt"
    hyp.write_text("".join(",".join(r[:6] + ["1", "-1", "-1", "-1"]) + "\n" for r in rows))
    code, rep, out = eval_json(capsys, g, hyp)
    assert code == 0 and rep["mota"] == 1.0 and "100.0%" in out
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    _, rep, _ = eval_json(capsys, g, empty)
    assert rep["fp"] == rep["idsw"] == 0 and rep["mota"] == pytest.approx(1 - rep["fn"] / rep["gt_total"])


def test_eval_micro_fixture(tmp_path, capsys):
    gt_lines, hyp_lines = [], []
    for t in range(1, 11):
        for g in range(1, 11):
            x = 100 * g
            gt_lines.append(f"{t},{g},{x},0,50,50,1,1,1.0")
            if g == 1:
                continue
            hid = 99 if (g == 2 and t >= 6) else g
            hyp_lines.append(f"{t},{hid},{x},0,50,50,1,-1,-1,-1")
        if t <= 5:
            hyp_lines.append(f"{t},500,5000,5000,10,10,1,-1,-1,-1")
    (tmp_path / "gt.txt").write_text("\n".join(gt_lines) + "\n")
    (tmp_path / "hyp.txt").write_text("\n".join(hyp_lines) + "\n")
    code, rep, out = eval_json(capsys, tmp_path / "gt.txt", tmp_path / "hyp.txt")
    assert code == 0 and (rep["fn"], rep["fp"], rep["idsw"], rep["gt_total"]) == (10, 5, 1, 100)
    assert "84.0%" in out


def test_eval_out_of_range_frames_warn(tmp_path, capsys, caplog):
    gt = tmp_path / "gt.txt"
    gt.write_text("1,1,0,0,10,10,1,1,1.0\n2,1,0,0,10,10,1,1,1.0\n")
    hyp = tmp_path / "hyp.txt"
    hyp.write_text("1,1,0,0,10,10,1,-1,-1,-1\n9,4,0,0,10,10,1,-1,-1,-1\n")
    code, rep, _ = eval_json(capsys, gt, hyp)
    assert code == 0 and rep["fp"] == 0 and rep["fn"] == 1
    assert "outside ground truth" in caplog.text


def test_eval_duplicate_ids_runtime_error(tmp_path, capsys):
    gt = tmp_path / "gt.txt"
    gt.write_text("1,1,0,0,10,10,1,1,1.0\n")
    hyp = tmp_path / "hyp.txt"
    hyp.write_text("1,1,0,0,10,10,1,-1,-1,-1\n1,1,50,0,10,10,1,-1,-1,-1\n")
    assert main(["eval", "--gt", str(gt), "--hyp", str(hyp)]) == 3


def bench(capsys, *args):
    assert main(["bench", "--json", *map(str, args)]) == 0
    return json.loads(capsys.readouterr().out.strip().splitlines()[-1])


def test_bench_repeat_identical_and_degenerate(capsys):
    rows = bench(capsys, "--tracks", 5, "--frames", 40, "--repeat", 2)
    assert rows[0]["deterministic"] is True
    (one,) = bench(capsys, "--tracks", 1, "--overlap", 0, "--frames", 40)
    assert one["ms_median"] < 20.0 and one["ms_p95"] < 50.0


def test_config_dump_round_trip(tmp_path, capsys):
    assert main(["config", "dump", "--set", "cost.end=13", "--set", "interior_starts=true"]) == 0
    text = capsys.readouterr().out
    path = tmp_path / "c.json"
    path.write_text(text)
    assert main(["config", "dump", "--config", str(path)]) == 0
    assert capsys.readouterr().out == text
    cfg = from_flat(json.loads(text))
    assert cfg.cost.end == 13 and cfg.interior_starts is True


def test_help_lists_all_defaults(capsys):
    with pytest.raises(SystemExit):
        main(["track", "--help"])
    text = capsys.readouterr().out
    for key, value in to_flat(EngineConfig()).items():
        assert re.search(rf"{re.escape(key)} = {re.escape(json.dumps(value))}", text), key


def test_config_reference(capsys):
    assert main(["config", "reference"]) == 0
    assert "| `cost.start` | `10` |" in capsys.readouterr().out
