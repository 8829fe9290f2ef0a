import json

import pytest

from siegelvec import __version__
from siegelvec import cli
from siegelvec.cli import main
from siegelvec.finitegrp import build_field
from siegelvec.support import (COSET_TAGS, stratum_count, total_count,
                               base_count, al_fixed_cosets, coset_R_type)


def run(capsys, argv):
    rc = main(argv)
    out = capsys.readouterr().out
    return rc, out


def test_table_json_matches_counts(capsys):
    rc, out = run(capsys, ["table", "--q", "2", "--n-max", "10",
                           "--format", "json"])
    assert rc == 0
    payload = json.loads(out)
    assert payload["version"] == __version__
    assert payload["config"]["q"] == 2
    assert len(payload["rows"]) == 11
    for row in payload["rows"]:
        n = row["n"]
        for tag in COSET_TAGS:
            assert row[tag] == stratum_count(tag, 2, n)
        assert row["total"] == total_count(2, n)
        assert row["base"] == base_count(2, n)


def test_table_json_byte_stable(capsys):
    _, first = run(capsys, ["table", "--q", "4", "--n-max", "6",
                            "--format", "json"])
    _, second = run(capsys, ["table", "--q", "4", "--n-max", "6",
                             "--format", "json"])
    assert first == second


def test_table_csv_layout(capsys):
    rc, out = run(capsys, ["table", "--q", "3", "--n-max", "4",
                           "--format", "csv"])
    assert rc == 0
    lines = out.splitlines()
    assert lines[0] == "n,I,II,IIIa,IIIb,IV,total,base"
    assert len(lines) == 6
    assert lines[4] == "3,1,0,0,0,0,1,1"


def test_support_listing(capsys):
    rc, out = run(capsys, ["support", "--q", "2", "--n", "7",
                           "--format", "json"])
    assert rc == 0
    rows = json.loads(out)["rows"]
    assert len(rows) == total_count(2, 7)
    fq = build_field(2, 1)
    fixed = {(p.tag, p.i, p.j, p.u) for p in al_fixed_cosets(fq, 7)}
    got_fixed = {(r["tag"], r["i"], r["j"], r["u"]) for r in rows if r["fixed"]}
    assert got_fixed == fixed
    for r in rows:
        assert r["group"] == coset_R_type(r["tag"])


def test_verify_counts_passes(capsys):
    rc, out = run(capsys, ["verify", "--suite", "counts", "--q", "4",
                           "--n-max", "15", "--format", "json"])
    assert rc == 0
    checks = json.loads(out)["checks"]
    assert checks and all(c["ok"] for c in checks)


def test_verify_fixed_dims_passes(capsys):
    for q in ("2", "3"):
        rc, out = run(capsys, ["verify", "--suite", "fixed-dims", "--q", q,
                               "--format", "json"])
        assert rc == 0
        assert all(c["ok"] for c in json.loads(out)["checks"])


def test_verify_twists_covers_both_branches(capsys):
    rc, out = run(capsys, ["verify", "--suite", "twists", "--q", "3",
                           "--format", "json"])
    assert rc == 0
    rows = json.loads(out)["rows"]
    swaps = {r["closed"] for r in rows if r["operator"] == "swap"}
    assert swaps == {0, 2}
    for r in rows:
        assert r["model"] == r["closed"]


def test_verify_dims_passes(capsys):
    rc, out = run(capsys, ["verify", "--suite", "dims", "--q", "2",
                           "--n-max", "8", "--format", "json"])
    assert rc == 0
    payload = json.loads(out)
    assert all(c["ok"] for c in payload["checks"])
    assert all(r["assembled"] == r["closed"] for r in payload["rows"])


def test_verify_signatures_passes(capsys):
    rc, out = run(capsys, ["verify", "--suite", "signatures", "--q", "2",
                           "--n-max", "9", "--format", "json"])
    assert rc == 0
    assert all(c["ok"] for c in json.loads(out)["checks"])


def test_verify_identities_small_draws(capsys):
    rc, out = run(capsys, ["verify", "--suite", "identities", "--q", "2",
                           "--draws", "3", "--format", "json"])
    assert rc == 0
    payload = json.loads(out)
    assert payload["seed"] == 0
    assert len(payload["rows"]) == 22
    assert all(r["draws"] == 3 for r in payload["rows"])


def test_text_format_reports_checks(capsys):
    rc, out = run(capsys, ["verify", "--suite", "counts", "--q", "2"])
    assert rc == 0
    assert "check enumeration matches closed stratum counts: pass" in out


def test_exit_code_on_failed_check(capsys, monkeypatch):
    def broken(**_):
        return [], [{"name": "forced", "ok": False, "detail": ""}]
    monkeypatch.setitem(cli.SUITES, "counts", broken)
    rc, out = run(capsys, ["verify", "--suite", "counts", "--q", "2"])
    assert rc == 2
    assert "FAIL" in out


def test_exit_code_on_bad_field(capsys):
    assert main(["table", "--q", "6"]) == 3
    assert main(["verify", "--suite", "rg", "--q", "3"]) == 3
    capsys.readouterr()


def test_exit_code_on_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["verify", "--suite", "nonsense", "--q", "2"])
    assert exc.value.code == 4
    with pytest.raises(SystemExit) as exc:
        main(["table"])
    assert exc.value.code == 4


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out
