"""Per-epoch metrics rows and their CSV round trip.

Floats are written with ``repr`` so files are byte-stable across reruns and
parse back to the exact same values.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ContractError, ParseError

FIELDS = (
    "epoch",
    "split",
    "ce_loss",
    "kd_loss",
    "total_loss",
    "accuracy",
    "alpha_mean",
    "alpha_std",
    "dist_mean",
)

HEADER = ",".join(FIELDS)

_SPLITS = ("train", "val")


@dataclass(frozen=True)
class MetricsRow:
    epoch: int
    split: str
    ce_loss: float
    kd_loss: float
    total_loss: float
    accuracy: float
    alpha_mean: float
    alpha_std: float
    dist_mean: float

    def __post_init__(self):
        if self.split not in _SPLITS:
            raise ContractError(f"split must be one of {_SPLITS}, got {self.split!r}")
        if not 0.0 <= self.accuracy <= 1.0:
            raise ContractError(f"accuracy must lie in [0, 1], got {self.accuracy}")
        if not 0.0 <= self.alpha_mean <= 1.0:
            raise ContractError(f"alpha_mean must lie in [0, 1], got {self.alpha_mean}")

    def to_csv_line(self) -> str:
        return ",".join(
            [
                str(self.epoch),
                self.split,
                repr(self.ce_loss),
                repr(self.kd_loss),
                repr(self.total_loss),
                repr(self.accuracy),
                repr(self.alpha_mean),
                repr(self.alpha_std),
                repr(self.dist_mean),
            ]
        )


def read_metrics(path) -> list[MetricsRow]:
    """Parse a metrics CSV, naming the file and line on any defect."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError(f"{path}: empty file")
    if lines[0] != HEADER:
        raise ParseError(f"{path}: line 1: header mismatch, expected {HEADER!r}")
    rows = []
    for line_no, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(FIELDS):
            raise ParseError(f"{path}: line {line_no} has {len(parts)} fields, expected {len(FIELDS)}")
        try:
            rows.append(
                MetricsRow(
                    epoch=int(parts[0]),
                    split=parts[1],
                    ce_loss=float(parts[2]),
                    kd_loss=float(parts[3]),
                    total_loss=float(parts[4]),
                    accuracy=float(parts[5]),
                    alpha_mean=float(parts[6]),
                    alpha_std=float(parts[7]),
                    dist_mean=float(parts[8]),
                )
            )
        except (ValueError, ContractError) as exc:
            raise ParseError(f"{path}: line {line_no}: {exc}") from None
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return rows
