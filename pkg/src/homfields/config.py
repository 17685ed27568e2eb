"""Sectioned key-value experiment configuration.

Example::

    [model]
    kind = brown_resnick
    family = power
    sigma = 1
    kappa = 1
    d = 1
    alpha = 1

    [lattice]
    base = Z

    [window]
    radius = 4

    [functional.box]
    kind = indicator_box
    points = 0; 1
    lower = 0.5, 0.3

    [test.b1]
    type = identity
    h = 1
    functional = box

    [mc]
    seed = 1
    reps = 10000

Points are separated by ``;`` and coordinates by ``,``.  The lattice base is
``Z``, ``Z^l`` or a row-major matrix literal such as ``[[2, 0], [0, 3]]``.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field

import numpy as np

from homfields.core import FUNCTIONAL_KINDS, HOMOGENEITY_TAGS, FunctionalSpec, UsageError
from homfields.gaussian_br import SIGN_MODES

MODEL_KINDS = ("brown_resnick", "singleton", "geometric_decay", "constant")
TEST_TYPES = ("identity", "spectral", "tail", "fdd_y", "maxstable_fdd", "frechet", "tail_measure",
              "extremal", "refine", "axioms")


class ConfigError(UsageError):
    def __init__(self, errors: list[tuple[int, str]]):
        self.errors = errors
        super().__init__("\n".join(f"line {ln}: {msg}" for ln, msg in errors))


# ---------------------------------------------------------------------------
# value codecs: parse(str) -> value, format(value) -> str


def _float(s: str) -> float:
    v = float(s)
    if math.isnan(v):
        raise ValueError("nan is not allowed")
    return v


def _int(s: str) -> int:
    return int(s)


def _floats(s: str) -> tuple:
    return tuple(_float(x) for x in s.split(",") if x.strip())


def _ints(s: str) -> tuple:
    return tuple(int(x) for x in s.split(",") if x.strip())


def _points(s: str) -> tuple:
    pts = tuple(tuple(int(c) for c in p.replace("(", "").replace(")", "").split(","))
                for p in s.split(";") if p.strip())
    if not pts:
        raise ValueError("empty point list")
    if len({len(p) for p in pts}) != 1:
        raise ValueError("points must have equal dimension")
    return pts


def _point(s: str) -> tuple:
    pts = _points(s)
    if len(pts) != 1:
        raise ValueError("expected a single point")
    return pts[0]


def _str(s: str) -> str:
    return s


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple) and v and isinstance(v[0], tuple):
        return "; ".join(", ".join(map(str, p)) for p in v)
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


CODECS = {"float": _float, "int": _int, "floats": _floats, "ints": _ints,
          "points": _points, "point": _point, "str": _str}

# key -> (codec, default, check(value) -> error message or None)


def _choice(options):
    return lambda v: None if v in options else f"must be one of {', '.join(options)}"


def _positive(v):
    return None if v > 0 else "must be positive"


def _nonneg(v):
    return None if v >= 0 else "must be nonnegative"


def _all_positive(v):
    return None if v and all(x > 0 for x in v) else "must be a nonempty list of positive values"


MODEL_SCHEMA = {
    "kind": ("str", "brown_resnick", _choice(MODEL_KINDS)),
    "family": ("str", "power", _choice(("power",))),
    "sigma": ("float", 1.0, _positive),
    "kappa": ("float", 1.0, lambda v: None if 0 < v <= 2 else "kappa must lie in (0, 2]"),
    "d": ("int", 1, lambda v: None if v >= 1 else "must be >= 1"),
    "alpha": ("float", 1.0, _positive),
    "sign_mode": ("str", "plus_one", _choice(SIGN_MODES)),
    "jitter": ("float", 1e-10, _nonneg),
    "rho": ("float", 0.5, lambda v: None if 0 < v < 1 else "rho must lie in (0, 1)"),
    "law": ("str", "unit", _choice(("unit", "exponential"))),
}
LATTICE_SCHEMA = {"base": ("str", "Z", None)}
WINDOW_SCHEMA = {"radius": ("float", 4.0, _positive)}
MC_SCHEMA = {
    "seed": ("int", 0, _nonneg),
    "reps": ("int", 10_000, lambda v: None if v >= 2 else "reps must be >= 2"),
    "workers": ("int", 1, lambda v: None if v >= 1 else "workers must be >= 1"),
    "z_crit": ("float", 4.0, _positive),
}
OUTPUT_SCHEMA = {"dir": ("str", "out", None)}
FUNCTIONAL_SCHEMA = {
    "kind": ("str", None, _choice(FUNCTIONAL_KINDS)),
    "points": ("points", None, None),
    "lower": ("floats", (), None),
    "upper": ("floats", (), None),
    "exponents": ("floats", (), None),
    "tag": ("str", "general", _choice(HOMOGENEITY_TAGS)),
    "weight": ("float", 1.0, _positive),
}
TEST_SCHEMAS = {
    "identity": {"h": ("point", None, None), "functional": ("str", None, None),
             "variant": ("str", "ii", _choice(("ii", "iii"))),
             "shift_radius": ("int", 2, _nonneg)},
    "spectral": {"h": ("point", None, None), "functional": ("str", None, None)},
    "tail": {"h": ("point", None, None), "x": ("float", 1.0, _positive),
             "functional": ("str", "one", None)},
    "fdd_y": {"points": ("points", None, None), "x": ("floats", None, _all_positive)},
    "maxstable_fdd": {"points": ("points", None, None), "x": ("floats", None, _all_positive),
             "epsilon": ("float", 0.5, lambda v: None if 0 < v < 1 else "epsilon must lie in (0, 1)")},
    "frechet": {"point": ("point", None, None), "x": ("floats", (0.5, 1.0, 2.0), _all_positive),
                "epsilon": ("float", 0.5, lambda v: None if 0 < v < 1 else "epsilon must lie in (0, 1)")},
    "tail_measure": {"points": ("points", None, None), "levels": ("floats", None, _all_positive),
                     "k_radius": ("int", 3, _nonneg), "shift_radius": ("int", 2, _nonneg)},
    "extremal": {"method": ("str", "both", _choice(("blocks", "pil", "both"))),
                 "n_list": ("ints", (8, 16, 32), _all_positive),
                 "radii": ("floats", (4.0, 8.0, 16.0), _all_positive),
                 "tau": ("float", 0.0, None)},
    "refine": {"levels": ("ints", (0, 1, 2, 3, 4), None), "block_n": ("int", 16, _positive)},
    "axioms": {"corpus": ("int", 500, _positive), "shifts": ("ints", (-2, -1, 0, 1, 2), None),
               "scales": ("floats", (0.5, 1.0, 3.0), _all_positive)},
}


# ---------------------------------------------------------------------------
# config objects


@dataclass(frozen=True)
class FunctionalConfig:
    name: str
    kind: str
    points: tuple
    lower: tuple = ()
    upper: tuple = ()
    exponents: tuple = ()
    tag: str = "general"
    weight: float = 1.0

    def build(self) -> FunctionalSpec:
        return FunctionalSpec(self.kind, np.array(self.points, dtype=np.int64), self.lower,
                              self.upper, self.exponents, self.tag, self.weight, self.name)


@dataclass(frozen=True)
class TestConfig:
    name: str
    type: str
    params: tuple  # sorted (key, value) pairs

    def get(self, key):
        return dict(self.params)[key]


@dataclass(frozen=True)
class ExperimentConfig:
    model: tuple = tuple(sorted((k, v[1]) for k, v in MODEL_SCHEMA.items()))
    lattice: str = "Z"
    radius: float = 4.0
    functionals: tuple = ()
    tests: tuple = ()
    seed: int = 0
    reps: int = 10_000
    workers: int = 1
    z_crit: float = 4.0
    out_dir: str = "out"

    def model_value(self, key):
        return dict(self.model)[key]

    def functional(self, name: str) -> FunctionalConfig:
        for f in self.functionals:
            if f.name == name:
                return f
        raise UsageError(f"unknown functional {name!r}")

    def tests_of(self, *types) -> list[TestConfig]:
        return [t for t in self.tests if t.type in types]

    def lattice_matrix(self) -> np.ndarray:
        return parse_lattice(self.lattice)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        from dataclasses import replace

        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def parse_lattice(text: str) -> np.ndarray:
    t = text.strip()
    if t in ("Z", "Z^1"):
        return np.eye(1)
    if t.startswith("Z^"):
        l = int(t[2:])
        if l < 1:
            raise ValueError("dimension must be >= 1")
        return np.eye(l)
    A = np.array(ast.literal_eval(t), dtype=float)
    if A.ndim == 1 and len(A) == 1:
        A = A.reshape(1, 1)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("base matrix must be square")
    if abs(np.linalg.det(A)) <= 1e-12:
        raise ValueError("base matrix is singular")
    return A


# ---------------------------------------------------------------------------
# parsing


def _read_sections(text: str, errors):
    sections: dict[str, dict] = {}
    lines: dict[str, int] = {}
    current = None
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current in sections:
                errors.append((ln, f"duplicate section [{current}]"))
            sections.setdefault(current, {})
            lines[current] = ln
            continue
        if current is None:
            errors.append((ln, "key outside of any section"))
            continue
        if "=" not in line:
            errors.append((ln, f"expected 'key = value', got {line!r}"))
            continue
        key, val = (s.strip() for s in line.split("=", 1))
        if key in sections[current]:
            errors.append((ln, f"duplicate key {key!r} in [{current}]"))
        sections[current][key] = (val, ln)
    return sections, lines


def _apply_schema(section: str, entries: dict, schema: dict, errors, header_line: int) -> dict:
    """Decode ``entries``; keys whose schema default is None are required."""
    out = {}
    for key, (val, ln) in entries.items():
        if key not in schema:
            errors.append((ln, f"unknown key {key!r} in [{section}]"))
            continue
        codec, _, check = schema[key]
        try:
            v = CODECS[codec](val)
        except (ValueError, SyntaxError) as exc:
            errors.append((ln, f"{section}.{key}: cannot parse {val!r} ({exc})"))
            continue
        msg = check(v) if check else None
        if msg:
            errors.append((ln, f"{section}.{key}: {msg}"))
            continue
        out[key] = (v, ln)
    for key, (codec, default, _) in schema.items():
        if key not in out:
            if default is None:
                errors.append((header_line, f"[{section}] is missing required key {key!r}"))
                continue
            out[key] = (default, header_line)
    return out


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate; raises ConfigError listing every problem found."""
    errors: list[tuple[int, str]] = []
    sections, hdr = _read_sections(text, errors)
    get = lambda name, schema: _apply_schema(name, sections.get(name, {}), schema, errors,
                                             hdr.get(name, 0))
    for name in sections:
        base = name.split(".", 1)[0]
        if name not in ("model", "lattice", "window", "mc", "output") and base not in ("functional", "test"):
            errors.append((hdr[name], f"unknown section [{name}]"))
    model = get("model", MODEL_SCHEMA)
    lat = get("lattice", LATTICE_SCHEMA)
    win = get("window", WINDOW_SCHEMA)
    mc = get("mc", MC_SCHEMA)
    outp = get("output", OUTPUT_SCHEMA)

    A = None
    lat_text, lat_ln = lat["base"]
    try:
        A = parse_lattice(lat_text)
    except (ValueError, SyntaxError) as exc:
        errors.append((lat_ln, f"lattice.base: {exc}"))
    l = A.shape[0] if A is not None else None
    radius = win["radius"][0]

    def inside(pts, ln, what):
        if l is None:
            return
        for p in pts:
            if len(p) != l:
                errors.append((ln, f"{what}: point {list(p)} has dimension {len(p)}, lattice has {l}"))
                return
            emb = A @ np.asarray(p, dtype=float)
            if np.any(np.abs(emb) > radius + 1e-9):
                errors.append((ln, f"{what}: point {list(p)} lies outside the window of radius {radius:g}"))

    functionals = []
    for name in sorted(n for n in sections if n.startswith("functional.")):
        vals = get(name, FUNCTIONAL_SCHEMA)
        if "kind" not in vals or "points" not in vals:
            continue
        fname = name.split(".", 1)[1]
        inside(vals["points"][0], vals["points"][1], name)
        fc = FunctionalConfig(fname, **{k: v for k, (v, _) in vals.items()})
        try:
            fc.build()
        except UsageError as exc:
            errors.append((hdr[name], f"{name}: {exc}"))
            continue
        functionals.append(fc)
    fnames = {f.name for f in functionals}

    tests = []
    for name in sorted(n for n in sections if n.startswith("test.")):
        entries = dict(sections[name])
        ttype = entries.pop("type", (None, hdr[name]))
        if ttype[0] not in TEST_TYPES:
            errors.append((ttype[1], f"{name}: type must be one of {', '.join(TEST_TYPES)}"))
            continue
        vals = _apply_schema(name, entries, TEST_SCHEMAS[ttype[0]], errors, hdr[name])
        for key in ("h", "point"):
            if key in vals:
                inside([vals[key][0]], vals[key][1], f"{name}.{key}")
        if "points" in vals:
            inside(vals["points"][0], vals["points"][1], f"{name}.points")
            for xkey in ("x", "levels"):
                if xkey in vals and len(vals[xkey][0]) != len(vals["points"][0]):
                    errors.append((vals[xkey][1], f"{name}.{xkey}: need one value per point"))
        if "functional" in vals:
            f = vals["functional"][0]
            if f not in fnames and not (ttype[0] == "tail" and f == "one"):
                errors.append((vals["functional"][1], f"{name}: unknown functional {f!r}"))
        tests.append(TestConfig(name.split(".", 1)[1], ttype[0],
                                tuple(sorted((k, v) for k, (v, _) in vals.items()))))

    if errors:
        raise ConfigError(sorted(errors))
    return ExperimentConfig(
        model=tuple(sorted((k, v) for k, (v, _) in model.items())),
        lattice=lat_text,
        radius=radius,
        functionals=tuple(functionals),
        tests=tuple(tests),
        seed=mc["seed"][0],
        reps=mc["reps"][0],
        workers=mc["workers"][0],
        z_crit=mc["z_crit"][0],
        out_dir=outp["dir"][0],
    )


def serialize_config(cfg: ExperimentConfig) -> str:
    out = ["[model]"]
    out += [f"{k} = {_fmt(v)}" for k, v in cfg.model]
    out += ["", "[lattice]", f"base = {cfg.lattice}", "", "[window]", f"radius = {cfg.radius!r}"]
    for f in cfg.functionals:
        out += ["", f"[functional.{f.name}]", f"kind = {f.kind}", f"points = {_fmt(f.points)}"]
        for key in ("lower", "upper", "exponents"):
            v = getattr(f, key)
            if v:
                out.append(f"{key} = {_fmt(v)}")
        out += [f"tag = {f.tag}", f"weight = {f.weight!r}"]
    for t in cfg.tests:
        out += ["", f"[test.{t.name}]", f"type = {t.type}"]
        out += [f"{k} = {_fmt(v)}" for k, v in t.params]
    out += ["", "[mc]", f"seed = {cfg.seed}", f"reps = {cfg.reps}", f"workers = {cfg.workers}",
            f"z_crit = {cfg.z_crit!r}", "", "[output]", f"dir = {cfg.out_dir}", ""]
    return "\n".join(out)


DEFAULT_CONFIG = """\
[model]
kind = brown_resnick
family = power
sigma = 1
kappa = 1
d = 1
alpha = 1

[lattice]
base = Z

[window]
radius = 4
"""
