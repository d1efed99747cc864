import json
from pathlib import Path

import numpy as np
import pytest

from billiard_zeta.errors import IntegrityError, InvalidConfiguration, ParseError
from billiard_zeta.symbolic import class_point_count, enumerate_words
from billiard_zeta.workbench import Run, StageError, load_orbits, parse_config, run_pipeline, save_orbits
from billiard_zeta.workbench.cli import main
from billiard_zeta.workbench.config import workers_from_env
from billiard_zeta.workbench.reports import json_text

R6 = """\
# three unit disks
[geometry]
equilateral = 6
radius = 1

[sweep]
m_max = {m_max}

[output]
dir = {out}
"""

DISKS = """\
[geometry]
disk 0 0 1
disk 6 0 1
disk 3 5.196152422706632 1
"""


def r6_config(tmp_path, m_max=6, **kw):
    return parse_config(R6.format(m_max=m_max, out=tmp_path / "out"), **kw)


# -- configuration -------------------------------------------------------------


def test_equilateral_and_disk_forms_agree(tmp_path):
    a = r6_config(tmp_path)
    b = parse_config(DISKS)
    assert np.allclose(a.geometry.centers, b.geometry.centers, atol=1e-12)
    assert a.sweep.m_max == 6 and b.sweep.m_max == 8
    assert a.output.dir == str(tmp_path / "out")


def test_overrides_and_hash(tmp_path):
    a = r6_config(tmp_path)
    b = r6_config(tmp_path, overrides=["sweep.m_max=7", "analysis.eps=0.25"])
    assert b.sweep.m_max == 7 and b.analysis.eps == 0.25
    assert a.config_hash != b.config_hash
    assert r6_config(tmp_path).config_hash == a.config_hash


@pytest.mark.parametrize("text,line", [
    ("[geometry]\nequilateral = 6\n[nope]\n", 3),
    ("radius = 1\n", 1),
    ("[geometry]\nequilateral = 6\n[sweep]\nm_max = six\n", 4),
    ("[geometry]\nequilateral = 6\n[sweep]\nm_max = 4\nm_max = 5\n", 5),
    ("[geometry]\nequilateral = 6\n[sweep]\nbogus = 1\n", 4),
    ("[geometry]\ndisk 0 0\n", 2),
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(ParseError) as info:
        parse_config(text)
    assert info.value.line == line


def test_invalid_values():
    with pytest.raises(InvalidConfiguration):
        parse_config(DISKS + "[sweep]\nm_max = 1\n")
    with pytest.raises(InvalidConfiguration):
        parse_config(DISKS + "[analysis]\neps = -0.1\n")
    with pytest.raises(ParseError):
        parse_config(DISKS, overrides=["m_max=3"])


def test_workers_env():
    assert workers_from_env({}) == 1
    assert workers_from_env({"BZETA_WORKERS": "4"}) == 4
    with pytest.raises(InvalidConfiguration):
        workers_from_env({"BZETA_WORKERS": "many"})


# -- orbit store -----------------------------------------------------------------


def test_round_trip_exact(tmp_path, db8):
    path = save_orbits(db8, tmp_path / "orbits.jsonl")
    back = load_orbits(path, db8.config)
    assert back.m_max == db8.m_max and len(back) == len(db8)
    for x, y in zip(db8, back):
        assert x.orbit.word == y.orbit.word
        assert x.orbit.tau == y.orbit.tau
        assert np.array_equal(x.orbit.angles, y.orbit.angles)
        assert np.array_equal(x.monodromy.matrix, y.monodromy.matrix)


def test_truncated_file_reports_line(tmp_path, db8):
    path = save_orbits(db8, tmp_path / "orbits.jsonl")
    lines = path.read_text().splitlines(keepends=True)
    cut = "".join(lines[:40]) + lines[40][: len(lines[40]) // 2]
    path.write_text(cut)
    with pytest.raises(ParseError) as info:
        load_orbits(path, db8.config)
    assert info.value.line == 41
    path.write_text("".join(lines[:40]))
    with pytest.raises(ParseError) as info:
        load_orbits(path, db8.config)
    assert info.value.line == 41


def test_edited_tau_rejected(tmp_path, db8):
    path = save_orbits(db8, tmp_path / "orbits.jsonl")
    lines = path.read_text().splitlines()
    row = json.loads(lines[5])
    row["tau"] += 1e-6
    lines[5] = json.dumps(row)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(IntegrityError):
        load_orbits(path, db8.config)


def test_edited_angles_rejected(tmp_path, db8):
    path = save_orbits(db8, tmp_path / "orbits.jsonl")
    lines = path.read_text().splitlines()
    row = json.loads(lines[12])
    row["angles"][0] += 1e-4
    lines[12] = json.dumps(row)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(IntegrityError):
        load_orbits(path, db8.config)


def test_wrong_geometry_rejected(tmp_path, db8):
    path = save_orbits(db8, tmp_path / "orbits.jsonl")
    other = parse_config("[geometry]\nequilateral = 7\n").geometry
    with pytest.raises(IntegrityError):
        load_orbits(path, other)


# -- pipeline ---------------------------------------------------------------------


def test_sweep_counts(tmp_path):
    run, paths = run_pipeline(r6_config(tmp_path), stages=("sweep",))
    expected = sum(len(enumerate_words(3, m, m_min=m)) for m in range(2, 7))
    assert len(run.database) == expected == len(enumerate_words(3, 6))
    # each class accounts for as many periodic points as its primitive period
    assert sum(class_point_count(3, m) for m in range(2, 7)) == sum(
        rec.orbit.m // rec.orbit.repetition for rec in run.database)
    assert Path(paths["orbits.jsonl"]).exists()


def test_invalid_geometry_writes_nothing(tmp_path):
    cfg = parse_config(f"[geometry]\nequilateral = 2.2\n[output]\ndir = {tmp_path / 'bad'}\n")
    with pytest.raises(StageError) as info:
        run_pipeline(cfg)
    assert info.value.stage == "geometry"
    assert not (tmp_path / "bad").exists()


def test_byte_identical_reruns(tmp_path):
    cfg = r6_config(tmp_path)
    _, paths = run_pipeline(cfg)
    first = {n: Path(p).read_bytes() for n, p in paths.items()}
    _, cached = run_pipeline(cfg)
    assert {n: Path(p).read_bytes() for n, p in cached.items()} == first
    _, cold = run_pipeline(cfg, reuse_orbits=False)
    assert {n: Path(p).read_bytes() for n, p in cold.items()} == first


def test_cached_database_is_used(tmp_path):
    cfg = r6_config(tmp_path)
    run_pipeline(cfg, stages=("sweep",))
    run = Run(cfg)
    assert run._cached_database() is not None
    changed = r6_config(tmp_path, overrides=["sweep.m_max=5"])
    assert Run(changed)._cached_database() is None


def test_criteria_document(tmp_path):
    run = Run(r6_config(tmp_path, m_max=8))
    doc, rows = run.criteria
    assert doc["params"]["delta"] == pytest.approx(run.h + 2.5)
    back = json.loads(json_text(doc))
    assert set(back) == set(doc)
    assert back["bohr"]["tightest"] == list(doc["bohr"]["tightest"])
    assert len(rows) == sum(w["n_intervals"] for w in doc["cluster_windows"])


# -- command line --------------------------------------------------------------------


def test_cli_validate(tmp_path, capsys):
    cfg = tmp_path / "r6.cfg"
    cfg.write_text(R6.format(m_max=4, out=tmp_path / "out"))
    assert main(["validate", str(cfg)]) == 0
    assert "non-eclipse: pass" in capsys.readouterr().out
    bad = tmp_path / "bad.cfg"
    bad.write_text("[geometry]\nequilateral = 2.2\n")
    assert main(["validate", str(bad)]) == 1


def test_cli_report_and_probe(tmp_path, capsys):
    cfg = tmp_path / "r6.cfg"
    cfg.write_text(R6.format(m_max=6, out=tmp_path / "out"))
    assert main(["report", str(cfg)]) == 0
    out = capsys.readouterr().out
    for name in ("orbits.jsonl", "spectrum.csv", "analysis.json", "criteria.json", "manifest.json"):
        assert name in out
    assert main(["probe", str(cfg), "--ell", "8", "--scale", "10"]) == 0
    assert "probe(ell=8" in capsys.readouterr().out


def test_cli_config_errors(tmp_path, capsys):
    cfg = tmp_path / "broken.cfg"
    cfg.write_text("[geometry]\nequilateral = 6\n[sweep]\nm_max = x\n")
    assert main(["sweep", str(cfg)]) == 2
    assert "line 4" in capsys.readouterr().err
    assert main(["sweep", str(tmp_path / "missing.cfg")]) == 2
