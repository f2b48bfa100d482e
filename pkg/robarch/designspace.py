#!/usr/bin/env python3
# SPDX-License-Identifier: BSD-3-Clause
# Copyright(C) 2026 robarch contributors
# Authors:
#   robarch contributors

""" Module designspace

Random sampling of stage configurations and population statistics.

   * sample_config: one random depth/width configuration on top of a template
   * compute_edf: empirical distribution function of model errors
   * pearson: sample correlation, e.g. between WD ratio and error
   * partition_by_range, top_fraction_range: optimal WD range analysis
   * CSV emitters for sample tables and EDF curves
"""




import bisect
import csv
import dataclasses
import io
import math

import numpy as np

from .archspec import WdRange
from .archspec import count_params
from .archspec import wd_ratio
from .common import BudgetInfeasible
from .common import Check
from .common import ConfigError
from .common import DegenerateInput
from .common import FormatError
from .common import RangeError
from .common import format_real

from .logger import get_logger


logger = get_logger(__name__)


MAX_REJECTIONS = 10000




@dataclasses.dataclass(frozen=True)
class SampleBounds:
    n_choices: tuple = (3, 4, 5, 6)
    max_depth: int = 60
    max_width: int = 1000
    param_budget: tuple = None

    def __post_init__(self):

        # The WD ratio needs at least two stages
        if not self.n_choices or not all(Check.is_positive_int(n) and n >= 2 for n in self.n_choices):
            raise ConfigError(f"Invalid stage count choices {self.n_choices}")

        if not Check.is_positive_int(self.max_depth):
            raise ConfigError(f"Invalid max depth {self.max_depth}")

        if not Check.is_positive_int(self.max_width):
            raise ConfigError(f"Invalid max width {self.max_width}")

        if self.param_budget is not None:
            lo, hi = self.param_budget
            if not Check.is_natural(lo) or not Check.is_natural(hi) or lo > hi:
                raise ConfigError(f"Invalid parameter budget {self.param_budget}")

    @classmethod
    def default(cls):
        return cls()


@dataclasses.dataclass(frozen=True)
class DesignSample:
    name: str
    depths: tuple
    widths: tuple
    wd: float
    params: int
    error: float = None
    spec: object = None

    def __post_init__(self):
        if self.error is not None and not Check.is_probability(self.error):
            raise RangeError(f"Error {self.error} outside [0, 1]")

    @property
    def n(self):
        return len(self.depths)

    def with_error(self, error):
        return dataclasses.replace(self, error=error)


@dataclasses.dataclass(frozen=True)
class EdfCurve:
    xs: tuple
    ys: tuple

    def __len__(self):
        return len(self.xs)

    def at(self, x):
        """Fraction of values <= x."""
        if not self.xs:
            return 0.0
        return bisect.bisect_right(self.xs, x) / len(self.xs)




def sample_config(seed, bounds, template, input_channels=3):
    """Draw stage counts, depths and widths uniformly until the budget fits."""

    rng = np.random.default_rng(seed)
    choices = sorted(bounds.n_choices)

    for attempt in range(MAX_REJECTIONS):

        n = int(choices[rng.integers(len(choices))])
        depths = [int(d) for d in rng.integers(1, bounds.max_depth + 1, n)]
        widths = [int(w) for w in rng.integers(1, bounds.max_width + 1, n)]

        spec = dataclasses.replace(template.with_stages(depths, widths), name=f"{template.name}-s{seed}")
        params = count_params(spec, input_channels)

        if bounds.param_budget is not None:
            lo, hi = bounds.param_budget
            if not lo <= params <= hi:
                continue

        if attempt:
            logger.debug(f"Seed {seed}: accepted after {attempt} rejections")

        return DesignSample(spec.name, tuple(depths), tuple(widths), wd_ratio(spec), params, None, spec)

    logger.error(f"Seed {seed}: no configuration within budget after {MAX_REJECTIONS} draws")
    raise BudgetInfeasible(f"No configuration within {bounds.param_budget} after {MAX_REJECTIONS} draws")


def sample_population(seed, count, bounds, template, input_channels=3):
    """count samples drawn from the consecutive seeds seed, seed + 1, ..."""

    samples = [sample_config(seed + i, bounds, template, input_channels) for i in range(count)]

    logger.info(f"Sampled {count} configurations from seed {seed}")

    return samples




def compute_edf(errors):

    values = [float(e) for e in errors]
    for value in values:
        if not 0.0 <= value <= 1.0:
            raise RangeError(f"Error {value} outside [0, 1]")

    xs = sorted(values)
    n = len(xs)

    return EdfCurve(tuple(xs), tuple((k + 1) / n for k in range(n)))


def pearson(xs, ys):

    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)

    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise DegenerateInput(f"pearson needs two series of equal length >= 2, got {x.shape} and {y.shape}")

    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise DegenerateInput("pearson needs finite values")

    dx = _centered_unit(x)
    dy = _centered_unit(y)
    sx = math.sqrt(float((dx * dx).sum()))
    sy = math.sqrt(float((dy * dy).sum()))

    if sx == 0.0 or sy == 0.0:
        raise DegenerateInput("pearson is undefined for a constant series")

    r = float((dx * dy).sum()) / (sx * sy)
    if not math.isfinite(r):
        raise DegenerateInput("pearson produced a non-finite coefficient")

    return max(-1.0, min(1.0, r))


def _centered_unit(v):
    """v minus its mean, scaled into [-1, 1]; zero for a constant series."""

    peak = np.abs(v).max()
    if peak == 0.0:
        return np.zeros_like(v)
    d = v / peak
    d = d - d.mean()
    spread = np.abs(d).max()
    if spread == 0.0:
        return d
    return d / spread


def partition_by_range(samples, wd_range):

    inside = [s for s in samples if wd_range.contains(s.wd)]
    outside = [s for s in samples if not wd_range.contains(s.wd)]

    return inside, outside


def top_fraction_range(samples, metrics=None, fraction=0.1):
    """Intersect the WD spans of the best fraction of samples per metric.

    metrics is a list of per-sample error series (lower is better); it
    defaults to the samples' own errors. Returns None when the spans do not
    overlap.
    """

    if not samples:
        return None

    if not 0 < fraction <= 1:
        raise RangeError(f"Fraction {fraction} outside (0, 1]")

    if metrics is None:
        metrics = [[s.error for s in samples]]

    lo, hi = -math.inf, math.inf
    keep = max(1, math.ceil(round(fraction * len(samples), 9)))

    for values in metrics:
        if len(values) != len(samples) or any(v is None for v in values):
            raise DegenerateInput("Every sample needs a value for every metric")
        order = sorted(range(len(samples)), key=lambda i: values[i])[:keep]
        wds = [samples[i].wd for i in order]
        lo = max(lo, min(wds))
        hi = min(hi, max(wds))

    if lo > hi:
        return None

    return WdRange(lo, hi)




def samples_to_csv(samples):

    k = max([s.n for s in samples], default=0)
    header = ["name", "n"] + [f"D{i + 1}" for i in range(k)] + [f"W{i + 1}" for i in range(k)] + ["wd", "params", "error"]

    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for s in samples:
        pad = [""] * (k - s.n)
        error = "" if s.error is None else format_real(s.error)
        writer.writerow([s.name, s.n] + list(s.depths) + pad + list(s.widths) + pad
                        + [format_real(s.wd), s.params, error])

    return out.getvalue()


def samples_from_csv(text):

    reader = csv.DictReader(io.StringIO(text))
    required = {"name", "n", "wd", "params", "error"}
    if reader.fieldnames is None or not required <= set(reader.fieldnames):
        raise FormatError(f"Sample table needs columns {sorted(required)}")

    samples = []
    for number, row in enumerate(reader, start=2):
        try:
            n = int(row["n"])
            depths = tuple(int(row[f"D{i + 1}"]) for i in range(n))
            widths = tuple(int(row[f"W{i + 1}"]) for i in range(n))
            error = float(row["error"]) if row["error"] not in ("", None) else None
            samples.append(DesignSample(row["name"], depths, widths, float(row["wd"]), int(row["params"]), error))
        except (KeyError, TypeError, ValueError) as ex:
            raise FormatError(f"Sample table line {number}: {ex}")

    return samples


def edf_to_csv(curves):
    """curves: list of (group label, EdfCurve)."""

    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["group", "x", "y"])
    for group, curve in curves:
        for x, y in zip(curve.xs, curve.ys):
            writer.writerow([group, format_real(x), format_real(y)])

    return out.getvalue()
