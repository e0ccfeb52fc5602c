import csv
import io
from pathlib import Path

import pytest

from secretgraph.channels import PauliChannel
from secretgraph.cli import main
from secretgraph.config import (
    ConfigError,
    build_channels,
    build_graph,
    build_protocol_config,
    parse_config,
    parse_seeds,
)
from secretgraph.graph import ghz, line

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def _rows(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def test_parse_config_sections_and_comments():
    cfg = parse_config("[graph]\npreset = line:4  # inline\n\n[channels]\ndefault = dephasing:0.1\n")
    assert build_graph(cfg) == line(4)
    assert build_channels(cfg, line(4)) == [PauliChannel.dephasing(0.1)] * 4


def test_unknown_section_and_malformed_text():
    with pytest.raises(ConfigError):
        parse_config("[bogus]\na = 1\n")
    with pytest.raises(ConfigError):
        parse_config("a = 1\n")


def test_channel_keys():
    cfg = parse_config(
        "[channels]\ndefault = depolarizing:0.1\nparty.2 = identity\n"
        "3.preset = custom\n3.p_i = 0.7\n3.p_x = 0.1\n3.p_y = 0.1\n3.p_z = 0.1\n"
        "4.preset = dephasing\n4.p = 0.3\n"
    )
    ch = build_channels(cfg, line(4))
    assert ch[0] == PauliChannel.depolarizing(0.1)
    assert ch[1] == PauliChannel.identity()
    assert ch[2].probs == pytest.approx((0.7, 0.1, 0.1, 0.1))
    assert ch[3] == PauliChannel.dephasing(0.3)
    for bad in ("party.9 = identity", "default = wobbly:1", "5.preset = custom\n5.p_i = 1", "x = 1"):
        with pytest.raises(ConfigError):
            build_channels(parse_config("[channels]\n" + bad), line(4))


def test_overrides_win_and_change_the_hash():
    cfg = parse_config("[protocol]\ncopies = 16\n")
    new = cfg.with_overrides(["protocol.copies=32"])
    assert new.get("protocol", "copies", cast=int) == 32
    assert new.digest() != cfg.digest()
    assert cfg.get("protocol", "copies", cast=int) == 16
    for bad in ("copies=3", "nope.copies=3", "protocol.copies"):
        with pytest.raises(ConfigError):
            cfg.with_overrides([bad])


def test_parse_seeds():
    assert parse_seeds("1,2,5-8") == [1, 2, 5, 6, 7, 8]
    with pytest.raises(ConfigError):
        parse_seeds("a-b")
    with pytest.raises(ConfigError):
        parse_seeds("")


def test_protocol_config_from_text():
    cfg = parse_config((CONFIGS / "protocol.cfg").read_text())
    pcfg = build_protocol_config(cfg, seed=3)
    assert pcfg.graph == ghz(3) and pcfg.copies == 256 and pcfg.seed == 3
    assert pcfg.schedule.sequence == ("P1",) and pcfg.schedule.rounds == 3
    with pytest.raises(ConfigError):
        build_protocol_config(cfg.with_overrides(["protocol.mu=01"]), seed=0)
    with pytest.raises(ConfigError):
        build_protocol_config(cfg.with_overrides(["protocol.epsilon=2"]), seed=0)


def test_graph_file(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("4\n1 2\n2 3\n3 4\n")
    cfg = parse_config(f"[graph]\nfile = {path}\n")
    assert build_graph(cfg) == line(4)
    path.write_text("3\n1 2\n2 3\n1 3\n")
    with pytest.raises(ConfigError):
        build_graph(cfg)


@pytest.mark.parametrize("argv", [
    ["protocol", "--config", "does-not-exist.cfg"],
    ["protocol", "--set", "protocol.copies=abc"],
    ["protocol", "--set", "protocol.copies=4"],
    ["transmit", "--set", "graph.preset=ring:5"],
    ["thresholds", "--set", "thresholds.family=bitflip"],
    ["secrecy", "--trials", "10"],
    ["secrecy", "--set", "secrecy.graph2=line:5", "--trials", "1000"],
    ["purify", "--set", "noise.q=1.5"],
])
def test_config_errors_exit_with_two(capsys, argv):
    code, out, err = _run(capsys, *argv)
    assert code == 2
    assert out == ""
    assert err.startswith("config error:")


def test_transmit_csv(capsys):
    code, out, _ = _run(capsys, "transmit", "--config", str(CONFIGS / "transmit.cfg"), "--seed", "4")
    assert code == 0
    head = out.splitlines()[0]
    assert head.startswith("# secretgraph transmit config_hash=") and head.endswith("seed=4")
    rows = _rows(out)
    total = sum(float(r["value"]) for r in rows if r["quantity"] == "lambda")
    assert total == pytest.approx(1.0)
    assert [r["key"] for r in rows if r["quantity"] == "fidelity"] == ["0110"]


@pytest.mark.parametrize("cmd,extra", [
    ("protocol", ["--seeds", "1-3", "--set", "protocol.copies=64"]),
    ("purify", []),
    ("thresholds", ["--set", "thresholds.q_values=0.99", "--set", "thresholds.grid=10"]),
])
def test_output_is_byte_identical(tmp_path, capsys, cmd, extra):
    cfg = CONFIGS / f"{cmd}.cfg"
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main([cmd, "--config", str(cfg), "--out", str(a), *extra]) == 0
    assert main([cmd, "--config", str(cfg), "--out", str(b), *extra]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0].startswith(f"# secretgraph {cmd} config_hash=")
    assert not lines[1].startswith("#")


def test_different_seed_changes_protocol_output(capsys):
    _, one, _ = _run(capsys, "protocol", "--config", str(CONFIGS / "protocol.cfg"), "--seed", "1")
    _, two, _ = _run(capsys, "protocol", "--config", str(CONFIGS / "protocol.cfg"), "--seed", "2")
    assert one.splitlines()[0] != two.splitlines()[0]


def test_protocol_columns(capsys):
    code, out, _ = _run(capsys, "protocol", "--config", str(CONFIGS / "protocol.cfg"), "--seeds", "1,2")
    assert code == 0
    rows = _rows(out)
    assert list(rows[0]) == ["seed", "scheme", "round", "copies_alive", "F_exact", "F_estimated",
                             "accepted", "yield", "detected"]
    finals = [r for r in rows if r["round"] == "final"]
    assert [r["seed"] for r in finals] == ["1", "2"]
    alive = [int(r["copies_alive"]) for r in rows if r["seed"] == "1"]
    assert alive[:4] == [256, 128, 64, 32]


def test_thresholds_sentinel_for_infeasible(capsys):
    code, out, _ = _run(capsys, "thresholds", "--set", "graph.preset=line:4", "--set", "thresholds.q_values=0.8",
                        "--set", "thresholds.schemes=ii", "--set", "thresholds.grid=8")
    assert code == 0
    (row,) = _rows(out)
    assert row["feasible"] == "0" and float(row["p_threshold"]) == -1.0
    assert 0 < float(row["f_max"]) < 1


def test_purify_curve_reaches_one(capsys):
    code, out, _ = _run(capsys, "purify", "--config", str(CONFIGS / "purify.cfg"))
    assert code == 0
    rows = _rows(out)
    for scheme in ("i", "ii", "iii"):
        last = [r for r in rows if r["scheme"] == scheme][-1]
        assert float(last["fidelity"]) > 0.999


def test_secrecy_blind_and_control(capsys):
    args = ["secrecy", "--config", str(CONFIGS / "secrecy.cfg"), "--trials", "1000",
            "--set", "secrecy.graph1=ghz:3", "--set", "secrecy.graph2=line:3"]
    code, out, err = _run(capsys, *args)
    assert code == 0 and "mode=blind" in out.splitlines()[-1]
    code, out, err = _run(capsys, *args, "--set", "secrecy.mode=control")
    assert code == 0
    assert "warning" in err
    p = float(out.splitlines()[-1].split("p_value=")[1].split()[0])
    assert p < 1e-3


def test_oracle_check_passes(capsys):
    code, out, _ = _run(capsys, "oracle-check")
    assert code == 0
    rows = _rows(out)
    assert len(rows) == 8 and all(r["passed"] == "1" for r in rows)
    assert max(float(r["max_deviation"]) for r in rows) < 1e-10


def test_seeds_from_config(capsys):
    _, out, _ = _run(capsys, "protocol", "--config", str(CONFIGS / "protocol.cfg"), "--set", "protocol.copies=32")
    finals = [r["seed"] for r in _rows(out) if r["round"] == "final"]
    assert finals == ["1", "2", "3", "4", "5"]
