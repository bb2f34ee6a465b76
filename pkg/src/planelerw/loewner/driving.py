"""Driving functions and curve traces with bit-exact serialization."""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np

__all__ = ["DrivingPath", "CurveTrace", "Swallowed"]

# %.17g round-trips IEEE doubles exactly.
_FMT = "%.17g"


@dataclass(frozen=True)
class Swallowed:
    """Marks a point absorbed by the growing hull at time ``t``."""

    t: float


def _check_times(times):
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 1:
        raise ValueError("times must be a nonempty 1-d array")
    if times.size > 1 and not np.all(np.diff(times) > 0):
        raise ValueError("times must be strictly increasing")
    return times


@dataclass(frozen=True)
class DrivingPath:
    """Sampled driving function t -> xi(t), linearly interpolated.

    ``anchor`` records the 2*pi branch convention: the stored values are a
    continuous lift and only ``exp(i*xi)`` is canonical for whole-plane
    evolutions.  ``anchor`` is the lift value chosen at ``times[0]``.
    """

    times: np.ndarray
    values: np.ndarray
    kappa: float = 0.0
    anchor: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "times", _check_times(self.times))
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.times.shape:
            raise ValueError("values must match times")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "values", values)

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def __call__(self, t):
        return np.interp(t, self.times, self.values)

    def shifted(self, offset: float) -> "DrivingPath":
        return DrivingPath(self.times, self.values + offset, self.kappa,
                           self.anchor + offset)

    def restricted(self, t_lo: float, t_hi: float) -> "DrivingPath":
        m = (self.times >= t_lo) & (self.times <= t_hi)
        return DrivingPath(self.times[m], self.values[m], self.kappa, self.anchor)

    # -- serialization -------------------------------------------------
    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,value_re\n")
        np.savetxt(buf, np.column_stack([self.times, self.values]),
                   fmt=_FMT, delimiter=",")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, kappa: float = 0.0, anchor: float = 0.0) -> "DrivingPath":
        data = np.loadtxt(io.StringIO(text), delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1], kappa, anchor)

    def to_json(self) -> str:
        return json.dumps({
            "kind": "driving_path",
            "kappa": self.kappa,
            "anchor": self.anchor,
            "times": [float.hex(float(t)) for t in self.times],
            "values": [float.hex(float(v)) for v in self.values],
        })

    @classmethod
    def from_json(cls, text: str) -> "DrivingPath":
        obj = json.loads(text)
        times = np.array([float.fromhex(t) for t in obj["times"]])
        values = np.array([float.fromhex(v) for v in obj["values"]])
        return cls(times, values, obj.get("kappa", 0.0), obj.get("anchor", 0.0))


@dataclass(frozen=True)
class CurveTrace:
    """Sampled simple curve beta(t_i) growing from the origin."""

    times: np.ndarray
    points: np.ndarray
    start: complex = 0j

    def __post_init__(self):
        object.__setattr__(self, "times", _check_times(self.times))
        points = np.asarray(self.points, dtype=complex)
        if points.shape != self.times.shape:
            raise ValueError("points must match times")
        object.__setattr__(self, "points", points)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,value_re,value_im\n")
        np.savetxt(buf, np.column_stack([self.times, self.points.real, self.points.imag]),
                   fmt=_FMT, delimiter=",")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CurveTrace":
        data = np.loadtxt(io.StringIO(text), delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1] + 1j * data[:, 2])

    def to_json(self) -> str:
        return json.dumps({
            "kind": "curve_trace",
            "times": [float.hex(float(t)) for t in self.times],
            "re": [float.hex(float(v)) for v in self.points.real],
            "im": [float.hex(float(v)) for v in self.points.imag],
        })

    @classmethod
    def from_json(cls, text: str) -> "CurveTrace":
        obj = json.loads(text)
        times = np.array([float.fromhex(t) for t in obj["times"]])
        pts = (np.array([float.fromhex(v) for v in obj["re"]])
               + 1j * np.array([float.fromhex(v) for v in obj["im"]]))
        return cls(times, pts)
