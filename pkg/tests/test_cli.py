"""Command-line surface: subcommands, formats, exit codes, config layering."""

import io
import json
import subprocess
import sys

import pytest

from nettisa.cli import main
from nettisa.records import CSV_SCHEMA_TAG, read_csv

from conftest import IP_A, IP_B, tcp4_frame, udp4_frame, write_pcap


@pytest.fixture
def capture(tmp_path):
    path = tmp_path / "c.pcap"
    frames = [
        (0.0, tcp4_frame(payload=b"x" * 100)),
        (1.0, tcp4_frame(src=IP_B, dst=IP_A, sport=80, dport=1234,
                         payload=b"y" * 200)),
        (3.0, tcp4_frame(payload=b"z" * 300)),
        (0.5, udp4_frame(sport=5353, dport=53, payload=b"q" * 40)),
    ]
    write_pcap(path, sorted(frames, key=lambda f: f[0]))
    return str(path)


def run_cli(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as stop:  # argparse rejections exit directly
        code = stop.code
    out, err = capsys.readouterr()
    return code, out, err


def test_extract_csv_to_stdout(capture, capsys):
    code, out, err = run_cli(["extract", "-i", capture, "-o", "-"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == CSV_SCHEMA_TAG
    assert len(lines) == 4  # tag, header, two flows
    assert "packets 4" in err
    assert "flows 2" in err


def test_extract_csv_file_round_trips(capture, tmp_path, capsys):
    out_path = tmp_path / "flows.csv"
    code, _, _ = run_cli(["extract", "-i", capture, "-o", str(out_path)], capsys)
    assert code == 0
    header, rows = read_csv(str(out_path))
    assert len(rows) == 2
    tcp = [r for r in rows if r["protocol"] == 6][0]
    assert tcp["mean"] == 200.0
    assert tcp["packets"] == 2 and tcp["packets_rev"] == 1


def test_extract_binary_sizes(capture, tmp_path, capsys):
    classic = tmp_path / "c.bin"
    nettisa = tmp_path / "n.bin"
    assert run_cli(["extract", "-i", capture, "-o", str(classic),
                    "--format", "binary", "--mode", "classic"], capsys)[0] == 0
    assert run_cli(["extract", "-i", capture, "-o", str(nettisa),
                    "--format", "binary"], capsys)[0] == 0
    assert classic.stat().st_size == 61 * 2
    assert nettisa.stat().st_size == 113 * 2


def test_extract_jsonl(capture, capsys):
    code, out, _ = run_cli(["extract", "-i", capture, "-o", "-",
                            "--format", "jsonl"], capsys)
    assert code == 0
    rows = [json.loads(line) for line in out.splitlines()]
    assert len(rows) == 2
    assert all(r["trigger"] == "final" for r in rows)


def test_extract_enhanced_flag(capture, capsys):
    code, out, _ = run_cli(["extract", "-i", capture, "-o", "-", "--enhanced"],
                           capsys)
    assert code == 0
    header = out.splitlines()[1]
    assert header.endswith("duration")


def test_enhance_subcommand(capture, tmp_path, capsys):
    plain = tmp_path / "plain.csv"
    run_cli(["extract", "-i", capture, "-o", str(plain)], capsys)
    code, out, _ = run_cli(["enhance", "-i", str(plain), "-o", "-"], capsys)
    assert code == 0
    assert out.splitlines()[1].endswith("duration")


def test_stats_with_labels(capture, tmp_path, capsys):
    labels = tmp_path / "labels.csv"
    labels.write_text(
        "src_ip,dst_ip,src_port,dst_port,protocol,label\n"
        "10.0.0.1,10.0.0.2,1234,80,6,web\n")
    code, out, _ = run_cli(["stats", "-i", capture, "--labels", str(labels)],
                           capsys)
    assert code == 0
    assert "flows            2" in out
    assert "web" in out
    assert "(unlabeled)" in out


def test_bench_reports_all_modes(capture, tmp_path, capsys):
    report = tmp_path / "bench.json"
    code, out, _ = run_cli(["bench", "-i", capture, "--repeats", "1",
                            "--json", str(report)], capsys)
    assert code == 0
    data = json.loads(report.read_text())
    assert [r["mode"] for r in data["results"]] == ["classic", "nettisa",
                                                    "splt", "oracle"]
    assert all(r["wall_times_s"] for r in data["results"])
    assert "oracle" in out


def test_missing_capture_is_exit_1(capsys):
    code, _, err = run_cli(["extract", "-i", "/nonexistent.pcap", "-o", "-"],
                           capsys)
    assert code == 1
    assert "error" in err.lower() or "No such file" in err


def test_bad_mode_is_exit_2(capture, capsys):
    code, _, err = run_cli(["extract", "-i", capture, "-o", "-",
                            "--mode", "warp"], capsys)
    assert code == 2


def test_splt_binary_is_exit_2(capture, capsys):
    code, _, err = run_cli(["extract", "-i", capture, "-o", "-",
                            "--mode", "splt", "--format", "binary"], capsys)
    assert code == 2
    assert "splt" in err


def test_env_config_sets_mode(capture, tmp_path, capsys, monkeypatch):
    conf = tmp_path / "nettisa.conf"
    conf.write_text("mode = classic\n")
    monkeypatch.setenv("NETTISA_CONFIG", str(conf))
    code, out, _ = run_cli(["extract", "-i", capture, "-o", "-"], capsys)
    assert code == 0
    header = out.splitlines()[1]
    assert "mean" not in header.split(",")


def test_flag_overrides_env_config(capture, tmp_path, capsys, monkeypatch):
    conf = tmp_path / "nettisa.conf"
    conf.write_text("mode = classic\n")
    monkeypatch.setenv("NETTISA_CONFIG", str(conf))
    code, out, _ = run_cli(["extract", "-i", capture, "-o", "-",
                            "--mode", "nettisa"], capsys)
    assert code == 0
    assert "mean" in out.splitlines()[1].split(",")


def test_threads_flag_notes_single_thread(capture, capsys):
    code, _, err = run_cli(["extract", "-i", capture, "-o", "-",
                            "--threads", "4"], capsys)
    assert code == 0
    assert "one thread" in err


def test_forced_flush_flag(capture, capsys):
    code, out, _ = run_cli(["extract", "-i", capture, "-o", "-",
                            "--forced-flush", "1.0"], capsys)
    assert code == 0
    # the 0..3 s tcp flow is cut at every capture second
    assert len(out.splitlines()) >= 5


def test_console_script_entry_point(capture, tmp_path):
    """The installed executable works end to end outside pytest."""
    out_path = tmp_path / "flows.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "nettisa", "extract", "-i", capture,
         "-o", str(out_path)],
        capture_output=True, text=True, timeout=60)
    assert proc.returncode == 0, proc.stderr
    assert out_path.read_text().startswith(CSV_SCHEMA_TAG)


@pytest.fixture
def label_file(tmp_path):
    path = tmp_path / "labels.csv"
    path.write_text(
        "src_ip,dst_ip,src_port,dst_port,protocol,label\n"
        "10.0.0.1,10.0.0.2,1234,80,6,web\n")
    return str(path)


def test_extract_labels_add_trailing_column(capture, label_file, tmp_path, capsys):
    out_path = tmp_path / "flows.csv"
    code, _, _ = run_cli(["extract", "-i", capture, "-o", str(out_path),
                          "--labels", label_file], capsys)
    assert code == 0
    header, rows = read_csv(str(out_path))
    assert header[-1] == "label"
    by_proto = {r["protocol"]: r["label"] for r in rows}
    assert by_proto[6] == "web"
    assert by_proto[17] == ""  # not in the label file


def test_extract_labels_direction_free(capture, tmp_path, capsys):
    """A label keyed on the reverse orientation still matches."""
    flipped = tmp_path / "labels.csv"
    flipped.write_text(
        "src_ip,dst_ip,src_port,dst_port,protocol,label\n"
        "10.0.0.2,10.0.0.1,80,1234,6,web\n")
    code, out, _ = run_cli(["extract", "-i", capture, "-o", "-",
                            "--labels", str(flipped)], capsys)
    assert code == 0
    assert any(line.endswith(",web") for line in out.splitlines())


def test_extract_labels_with_enhanced_stays_trailing(capture, label_file, capsys):
    code, out, _ = run_cli(["extract", "-i", capture, "-o", "-", "--enhanced",
                            "--labels", label_file], capsys)
    assert code == 0
    header = out.splitlines()[1].split(",")
    assert header[-1] == "label"
    assert header[-2] == "duration"


def test_extract_labels_rejects_binary(capture, label_file, capsys):
    code, _, err = run_cli(["extract", "-i", capture, "--format", "binary",
                            "--labels", label_file], capsys)
    assert code == 2
    assert "label" in err


def test_enhance_keeps_label_trailing(capture, label_file, tmp_path, capsys):
    labeled = tmp_path / "labeled.csv"
    run_cli(["extract", "-i", capture, "-o", str(labeled),
             "--labels", label_file], capsys)
    code, out, _ = run_cli(["enhance", "-i", str(labeled), "-o", "-"], capsys)
    assert code == 0
    header = out.splitlines()[1].split(",")
    assert header[-1] == "label"
    assert header[-2] == "duration"
    assert any(line.endswith(",web") for line in out.splitlines()[2:])


def test_extract_labels_jsonl(capture, label_file, capsys):
    code, out, _ = run_cli(["extract", "-i", capture, "-o", "-",
                            "--format", "jsonl", "--labels", label_file], capsys)
    assert code == 0
    rows = [json.loads(line) for line in out.splitlines()]
    assert {r["label"] for r in rows} == {"web", ""}
