"""Plan and demonstration containers plus their on-disk form.

Both files are line-delimited text: a commented metadata header, then
one whitespace-separated record per step. Floats are written with
repr-exact precision so a round trip through disk is value-exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ParseError

PLAN_MAGIC = "# pivotlift-plan v1"
DEMO_MAGIC = "# pivotlift-demo v1"


def _g(x):
    return format(float(x), ".17g")


@dataclass
class PlanTrajectory:
    """Fixed-rate trajectory of (q_a, q_u, a) rows with teleport flags.

    dt is the row spacing in seconds; times[i] == i * dt. The first row
    is the initial configuration.
    """

    q_a: np.ndarray  # (T, 4)
    q_u: np.ndarray  # (T, 3)
    a: np.ndarray  # (T, 4)
    teleport: np.ndarray  # (T,) bool
    dt: float
    seed: int = 0
    scene_hash: str = ""

    def __post_init__(self):
        self.q_a = np.atleast_2d(np.asarray(self.q_a, dtype=np.float64))
        self.q_u = np.atleast_2d(np.asarray(self.q_u, dtype=np.float64))
        self.a = np.atleast_2d(np.asarray(self.a, dtype=np.float64))
        self.teleport = np.asarray(self.teleport, dtype=bool).reshape(-1)
        n = len(self.q_a)
        if not (len(self.q_u) == len(self.a) == len(self.teleport) == n):
            raise ValueError("inconsistent plan column lengths")

    def __len__(self):
        return len(self.q_a)

    @property
    def times(self):
        return np.arange(len(self)) * self.dt

    def path_length(self):
        """Total joint-space travel of the robot columns."""
        if len(self) < 2:
            return 0.0
        return float(np.sum(np.abs(np.diff(self.q_a, axis=0))))


@dataclass
class Demonstration:
    """Robot-only projection of a plan: no box poses, no actions."""

    q_a: np.ndarray  # (T, 4)
    dt: float
    seed: int = 0
    scene_hash: str = ""

    def __post_init__(self):
        self.q_a = np.atleast_2d(np.asarray(self.q_a, dtype=np.float64))

    def __len__(self):
        return len(self.q_a)


def _write_header(fh, magic, seed, scene_hash, dt):
    fh.write(magic + "\n")
    fh.write(f"# scene: {scene_hash}\n")
    fh.write(f"# seed: {seed}\n")
    fh.write(f"# dt: {_g(dt)}\n")


def write_plan(path, plan):
    with open(path, "w") as fh:
        _write_header(fh, PLAN_MAGIC, plan.seed, plan.scene_hash, plan.dt)
        for i in range(len(plan)):
            cols = ([_g(i * plan.dt)]
                    + [_g(v) for v in plan.q_a[i]]
                    + [_g(v) for v in plan.q_u[i]]
                    + [_g(v) for v in plan.a[i]]
                    + [str(int(plan.teleport[i]))])
            fh.write(" ".join(cols) + "\n")


def write_demo(path, demo):
    with open(path, "w") as fh:
        _write_header(fh, DEMO_MAGIC, demo.seed, demo.scene_hash, demo.dt)
        for i in range(len(demo)):
            cols = [_g(i * demo.dt)] + [_g(v) for v in demo.q_a[i]]
            fh.write(" ".join(cols) + "\n")


def _read_lines(path, magic):
    meta = {"seed": 0, "scene": "", "dt": None}
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if lineno == 1:
                if line != magic:
                    raise ParseError(
                        f"bad file magic {line!r}", line_number=1)
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if ":" in body:
                    key, _, val = body.partition(":")
                    meta[key.strip()] = val.strip()
                continue
            rows.append((lineno, line.split()))
    try:
        meta["seed"] = int(meta.get("seed", 0))
        meta["dt"] = float(meta["dt"])
    except (TypeError, ValueError):
        raise ParseError("missing or malformed dt/seed header")
    return meta, rows


def _parse_floats(fields, lineno):
    try:
        return [float(f) for f in fields]
    except ValueError:
        raise ParseError(f"non-numeric field on line {lineno}",
                         line_number=lineno)


def read_plan(path):
    meta, rows = _read_lines(path, PLAN_MAGIC)
    q_a, q_u, a, tele = [], [], [], []
    for lineno, fields in rows:
        if len(fields) != 13:
            raise ParseError(
                f"expected 13 fields, got {len(fields)} on line {lineno}",
                line_number=lineno)
        vals = _parse_floats(fields[:12], lineno)
        if fields[12] not in ("0", "1"):
            raise ParseError(f"teleport flag must be 0 or 1 on line {lineno}",
                             line_number=lineno)
        q_a.append(vals[1:5])
        q_u.append(vals[5:8])
        a.append(vals[8:12])
        tele.append(fields[12] == "1")
    if not q_a:
        raise ParseError("plan file has no records")
    return PlanTrajectory(np.array(q_a), np.array(q_u), np.array(a),
                          np.array(tele), dt=meta["dt"], seed=meta["seed"],
                          scene_hash=meta.get("scene", ""))


def read_demo(path):
    meta, rows = _read_lines(path, DEMO_MAGIC)
    q_a = []
    for lineno, fields in rows:
        if len(fields) != 5:
            raise ParseError(
                f"expected 5 fields, got {len(fields)} on line {lineno}",
                line_number=lineno)
        q_a.append(_parse_floats(fields, lineno)[1:5])
    if not q_a:
        raise ParseError("demo file has no records")
    return Demonstration(np.array(q_a), dt=meta["dt"], seed=meta["seed"],
                         scene_hash=meta.get("scene", ""))
