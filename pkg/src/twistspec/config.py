"""Experiment configuration files.

Line-oriented ``key = value`` pairs grouped under ``[section]`` headers::

    [domain]
    cross_section = rectangle(0.5, -0.5, 1.5, 0.5)
    profile = linear(1)

    [grid]
    h = 1/32
    h1 = 1/16
    L = 8, 16

Shapes: ``ellipse(cx,cy,a,b)``, ``rectangle(x0,y0,x1,y1)``,
``polygon((x,y),...)``. Profiles: ``constant(beta)``, ``linear(alpha)``,
``power(alpha,p)``, ``tabulated(path)``. Numbers may be written as
fractions (``1/32``); lists are comma separated and may be empty.
"""

from __future__ import annotations

import ast
import configparser
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import geometry as geo
from .errors import ConfigError

_LITERAL = re.compile(r"^\s*([a-z_]+)\s*\((.*)\)\s*$", re.S)


def parse_number(text):
    text = text.strip()
    try:
        if "/" in text:
            return float(Fraction(text))
        return float(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"not a number: {text!r}") from exc


def parse_list(text):
    text = text.strip()
    if not text:
        return []
    return [parse_number(part) for part in text.split(",")]


def parse_shape(text):
    m = _LITERAL.match(text)
    if not m:
        raise ConfigError(f"malformed cross-section literal: {text!r}")
    name, args = m.group(1), m.group(2)
    try:
        if name == "polygon":
            verts = ast.literal_eval(f"({args},)")
            if not all(isinstance(v, tuple) and len(v) == 2 for v in verts):
                raise ValueError
            return geo.Polygon(tuple((float(x), float(y)) for x, y in verts))
        nums = parse_list(args)
    except (ValueError, SyntaxError) as exc:
        raise ConfigError(f"malformed cross-section literal: {text!r}") from exc
    if name == "ellipse" and len(nums) == 4:
        return geo.Ellipse(*nums)
    if name == "rectangle" and len(nums) == 4:
        return geo.Rectangle(*nums)
    raise ConfigError(f"unknown cross-section literal: {text!r}")


def parse_profile(text, base_dir=None):
    m = _LITERAL.match(text)
    if not m:
        raise ConfigError(f"malformed profile literal: {text!r}")
    name, args = m.group(1), m.group(2).strip()
    if name == "tabulated":
        path = Path(args.strip("'\""))
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        try:
            return geo.load_tabulated(path)
        except OSError as exc:
            raise ConfigError(f"cannot read tabulated profile {path}: {exc}") from exc
    nums = parse_list(args)
    if name == "constant" and len(nums) == 1:
        return geo.Constant(nums[0])
    if name == "linear" and len(nums) == 1:
        return geo.LinearRate(nums[0])
    if name == "power" and len(nums) == 2:
        return geo.PowerRate(*nums)
    raise ConfigError(f"unknown profile literal: {text!r}")


def _positive(name):
    def check(value):
        if not value > 0:
            raise ConfigError(f"{name} must be positive, got {value}")
        return value
    return check


def _positive_list(name):
    def check(values):
        for v in values:
            _positive(name)(v)
        return values
    return check


def _bool(text):
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _ends(text):
    ends = [e.strip().lower() for e in text.split(",") if e.strip()]
    for e in ends:
        if e not in ("dirichlet", "neumann"):
            raise ConfigError(f"unknown end condition {e!r}")
    return ends


def _int(name, minimum=1):
    def conv(text):
        value = parse_number(text)
        if value != int(value) or value < minimum:
            raise ConfigError(f"{name} must be an integer >= {minimum}, got {text!r}")
        return int(value)
    return conv


def _int_list(name):
    def conv(text):
        return [_int(name)(part) for part in text.split(",") if part.strip()]
    return conv


def _number(check=None):
    def conv(text):
        value = parse_number(text)
        return check(value) if check else value
    return conv


def _numbers(check=None):
    def conv(text):
        values = parse_list(text)
        return check(values) if check else values
    return conv


# section -> key -> converter
SCHEMA = {
    "domain": {"cross_section": None, "profile": None},
    "grid": {
        "h": _number(_positive("h")),
        "h1": _number(_positive("h1")),
        "L": _numbers(_positive_list("L")),
        "ends": _ends,
    },
    "solver": {
        "k": _int("k"),
        "tol": _number(_positive("tol")),
        "max_iter": _int("max_iter"),
    },
    "xsection": {
        "beta": _numbers(),
        "richardson": _bool,
        "order": _number(_positive("order")),
    },
    "certify": {
        "n": _int_list("n"),
        "K": _int("K"),
        "bracket_n": _int("bracket_n"),
        "density": _number(_positive("density")),
    },
    "geometry": {
        "stations": _numbers(),
        "density": _number(_positive("density")),
        "slices": _int("slices", 2),
        "boundary_samples": _int("boundary_samples", 3),
        "x_range": _numbers(),
    },
    "oracle": {
        "cap": _int("cap"),
        "tol": _number(_positive("tol")),
        "inject_asymmetry": _bool,
    },
}


@dataclass
class ExperimentConfig:
    values: dict = field(default_factory=dict)
    base_dir: Path | None = None

    def get(self, section, key, default=None):
        return self.values.get(section, {}).get(key, default)

    def require(self, section, key):
        try:
            return self.values[section][key]
        except KeyError:
            raise ConfigError(f"missing required key [{section}] {key}") from None

    @property
    def cross_section(self):
        return self.require("domain", "cross_section")

    @property
    def profile(self):
        return self.require("domain", "profile")


def parse_config(text, base_dir=None):
    parser = configparser.ConfigParser(interpolation=None, strict=True, empty_lines_in_values=False,
                                       inline_comment_prefixes=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    values = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        values[section] = {}
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            if section == "domain":
                conv = parse_shape if key == "cross_section" else (lambda t: parse_profile(t, base_dir))
            else:
                conv = SCHEMA[section][key]
            values[section][key] = conv(raw)
    return ExperimentConfig(values, Path(base_dir) if base_dir else None)


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, base_dir=path.parent)
