import re

import pytest

from akd import MetricsRow, ParseError, emit_plots, read_metrics
from akd.errors import ContractError
from akd.metrics import HEADER


def _row(epoch, split, alpha=0.5, acc=0.4, total=1.0):
    return MetricsRow(
        epoch=epoch,
        split=split,
        ce_loss=1.2345 / epoch,
        kd_loss=0.01 / epoch,
        total_loss=total / epoch,
        accuracy=acc,
        alpha_mean=alpha,
        alpha_std=0.0 if alpha == 0.5 else 0.01,
        dist_mean=0.002,
    )


def _write(path, rows):
    with open(path, "w") as fh:
        fh.write(HEADER + "\n")
        for r in rows:
            fh.write(r.to_csv_line() + "\n")


def test_csv_round_trip_is_lossless(tmp_path):
    rows = [_row(e, s, acc=0.1 + 0.01 * e) for e in range(1, 6) for s in ("train", "val")]
    path = tmp_path / "metrics_fixed_1.csv"
    _write(path, rows)
    assert read_metrics(path) == rows
    assert path.read_text().splitlines()[0] == HEADER


def test_row_invariants():
    with pytest.raises(ContractError):
        _row(1, "test")
    with pytest.raises(ContractError):
        _row(1, "train", acc=1.2)
    with pytest.raises(ContractError):
        _row(1, "train", alpha=1.3)


def test_read_metrics_errors_name_file_and_line(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(ParseError, match="empty"):
        read_metrics(path)

    path = tmp_path / "header.csv"
    path.write_text("nope\n")
    with pytest.raises(ParseError, match="line 1"):
        read_metrics(path)

    path = tmp_path / "short.csv"
    path.write_text(HEADER + "\n1,train,0.5\n")
    with pytest.raises(ParseError, match="line 2"):
        read_metrics(path)

    path = tmp_path / "badfloat.csv"
    path.write_text(HEADER + "\n1,train,x,0.0,0.0,0.5,0.5,0.0,0.0\n")
    with pytest.raises(ParseError, match="line 2"):
        read_metrics(path)

    path = tmp_path / "headeronly.csv"
    path.write_text(HEADER + "\n")
    with pytest.raises(ParseError, match="no data rows"):
        read_metrics(path)


def test_emit_plots_writes_three_fixed_size_svgs(tmp_path):
    path = tmp_path / "metrics_fixed_1.csv"
    _write(path, [_row(e, s) for e in range(1, 8) for s in ("train", "val")])
    out = emit_plots([path], tmp_path)
    assert set(out) == {"loss", "accuracy", "alpha"}
    for svg_path in out.values():
        text = open(svg_path).read()
        assert 'viewBox="0 0 800 500"' in text
        assert "xmlns" in text
        assert "epoch" in text
    assert "loss" in open(out["loss"]).read()
    assert "accuracy" in open(out["accuracy"]).read()


def test_alpha_plot_is_flat_for_fixed_policy(tmp_path):
    path = tmp_path / "metrics_fixed_1.csv"
    _write(path, [_row(e, s, alpha=0.5) for e in range(1, 6) for s in ("train", "val")])
    out = emit_plots([path], tmp_path)
    text = open(out["alpha"]).read()
    polylines = re.findall(r'<polyline points="([^"]+)"', text)
    assert polylines
    ys = {pair.split(",")[1] for pair in polylines[0].split()}
    assert len(ys) == 1  # constant height line


def test_two_series_get_distinct_legend_entries(tmp_path):
    p1 = tmp_path / "metrics_fixed_1.csv"
    p2 = tmp_path / "metrics_dynamic_1.csv"
    _write(p1, [_row(e, s, acc=0.3 + 0.02 * e) for e in range(1, 6) for s in ("train", "val")])
    _write(p2, [_row(e, s, acc=0.4 + 0.02 * e, alpha=0.4) for e in range(1, 6) for s in ("train", "val")])
    out = emit_plots([p1, p2], tmp_path)
    acc_text = open(out["accuracy"]).read()
    legend = re.findall(r'class="legend">([^<]+)</text>', acc_text)
    assert legend == ["fixed_1", "dynamic_1"]
    assert len(re.findall(r"<polyline", acc_text)) == 2
    loss_text = open(out["loss"]).read()
    assert len(re.findall(r"<polyline", loss_text)) == 4  # train + val per series


def test_emit_plots_rejects_malformed_csv(tmp_path):
    bad = tmp_path / "metrics_broken_1.csv"
    bad.write_text(HEADER + "\n1,train,oops\n")
    with pytest.raises(ParseError, match="line 2"):
        emit_plots([bad], tmp_path)


def test_emit_plots_byte_stable(tmp_path):
    path = tmp_path / "metrics_fixed_1.csv"
    _write(path, [_row(e, s) for e in range(1, 6) for s in ("train", "val")])
    out1 = emit_plots([path], tmp_path / "a")
    out2 = emit_plots([path], tmp_path / "b")
    for key in out1:
        assert open(out1[key]).read() == open(out2[key]).read()
