"""Seedable channel generation for the simulated downlink cell.

Users sit at random distances from the base station inside a disc; the
eavesdropper sits at a fixed distance.  Large-scale attenuation follows a
power-law path loss, small-scale fading is i.i.d. Rayleigh per subcarrier, so
power gains are exponentially distributed around the path-loss mean.

Generation is a pure function of (params, geometry, seed): the same seed gives
bit-identical matrices regardless of call order or threading.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import ChannelRealization, SystemParams, ValidationError


class Placement(enum.Enum):
    """Law of the random user distance to the base station."""

    UNIFORM_RADIUS = "radius"
    UNIFORM_AREA = "area"


@dataclass(frozen=True)
class GeometryParams:
    cell_radius_m: float = 10.0
    eve_distance_m: float = 10.0
    pathloss_exponent: float = 3.0
    reference_loss_db: float = 30.0
    min_user_distance_m: float = 1.0
    placement: Placement = Placement.UNIFORM_RADIUS

    def __post_init__(self):
        vals = (self.cell_radius_m, self.eve_distance_m, self.pathloss_exponent,
                self.reference_loss_db, self.min_user_distance_m)
        if any(v <= 0 for v in vals):
            raise ValidationError("geometry parameters must be positive")
        if self.min_user_distance_m >= self.cell_radius_m:
            raise ValidationError("min user distance must be below cell radius")


def pathloss(distance_m: float, geom: GeometryParams) -> float:
    """Linear power gain of the distance-dependent attenuation.

    ``10^(-reference_loss/10) * (d / 1 m)^(-exponent)``; the reference loss is
    taken at 1 m.
    """
    if distance_m <= 0:
        raise ValidationError("distance must be positive")
    return 10.0 ** (-geom.reference_loss_db / 10.0) * distance_m ** (
        -geom.pathloss_exponent)


def generate(params: SystemParams, geom: GeometryParams,
             seed: int) -> ChannelRealization:
    """Draw one channel realization.

    Draw order is fixed (user distances, user fading, eavesdropper fading) so
    the output depends only on the seed.  Both the drawn eavesdropper gains
    (full-CSI mode) and the fading means (statistical-CSI mode) are filled in.
    """
    k, n = params.num_users, params.num_subcarriers
    rng = np.random.default_rng(seed)
    lo, hi = geom.min_user_distance_m, geom.cell_radius_m
    u = rng.random(k)
    if geom.placement is Placement.UNIFORM_RADIUS:
        dist = lo + (hi - lo) * u
    else:
        dist = np.sqrt(lo ** 2 + (hi ** 2 - lo ** 2) * u)
    pl_user = np.array([pathloss(d, geom) for d in dist])
    user_gains = pl_user[:, None] * rng.exponential(1.0, size=(k, n))
    pl_eve = pathloss(geom.eve_distance_m, geom)
    eve_gains = pl_eve * rng.exponential(1.0, size=n)
    eve_mean = np.full(n, pl_eve)
    return ChannelRealization(user_gains=user_gains, eve_gains=eve_gains,
                              eve_mean_gains=eve_mean, seed=seed)


_FMT = "%.17g"  # round-trips IEEE doubles exactly


def dump_channels_csv(channels: ChannelRealization, path) -> None:
    """Write a realization as CSV: one row per user, then eavesdropper rows.

    Header: ``kind,index,gain_0,...`` where kind is ``user`` (per-user fading
    row), ``eve`` (drawn eavesdropper gains) or ``eve_mean`` (fading means).
    A ``# seed=<int>`` comment precedes the header.  Values carry 17
    significant digits so a round trip is bit exact.
    """
    n = channels.num_subcarriers
    lines = [f"# seed={channels.seed}",
             "kind,index," + ",".join(f"gain_{j}" for j in range(n))]

    def row(kind, idx, values):
        return f"{kind},{idx}," + ",".join(_FMT % v for v in values)

    for k in range(channels.num_users):
        lines.append(row("user", k, channels.user_gains[k]))
    if channels.eve_gains is not None:
        lines.append(row("eve", 0, channels.eve_gains))
    if channels.eve_mean_gains is not None:
        lines.append(row("eve_mean", 0, channels.eve_mean_gains))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_channels_csv(path) -> ChannelRealization:
    """Read a realization written by :func:`dump_channels_csv`."""
    seed = 0
    users: list[np.ndarray] = []
    eve = None
    eve_mean = None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "seed=" in line:
                    seed = int(line.split("seed=")[1])
                continue
            kind = line.split(",", 1)[0]
            if kind == "kind":
                continue
            parts = line.split(",")
            values = np.array([float(v) for v in parts[2:]])
            if kind == "user":
                users.append(values)
            elif kind == "eve":
                eve = values
            elif kind == "eve_mean":
                eve_mean = values
            else:
                raise ValidationError(f"unknown row kind {kind!r} in {path}")
    if not users:
        raise ValidationError(f"no user rows found in {path}")
    return ChannelRealization(user_gains=np.vstack(users), eve_gains=eve,
                              eve_mean_gains=eve_mean, seed=seed)
