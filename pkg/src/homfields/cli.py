"""Command-line experiment runner.

Every subcommand reads an optional config file, runs its checks with the
deterministic Monte Carlo engine, writes ``<out>/<subcommand>.csv`` and prints
one summary line per check.  The exit status is 0 when every hard check
passes, 1 when some check fails (the failures are listed in
``<out>/<subcommand>-failures.json``) and 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from homfields.config import (
    DEFAULT_CONFIG,
    ConfigError,
    ExperimentConfig,
    FunctionalConfig,
    TestConfig,
    parse_config,
)
from homfields.core import (
    ContractError,
    FieldSample,
    FunctionalSpec,
    NumericalError,
    UsageError,
    indicator_box,
    product_power,
    sup_window,
)
from homfields.extremal import extremal_index_blocks, extremal_index_pil, refinement_study
from homfields.functionals import axiom_check, first_exceedance, infargsup
from homfields.gaussian_br import BrownResnick, SpectralModel, VariogramSpec
from homfields.lattice import Lattice, Window, enumerate_window, fmt_point
from homfields.maxstable import DeHaanConfig, dehaan_simulate, frechet_marginal_check, joint_cdf_check
from homfields.mc import MCRunError, compare, replicate
from homfields.tailfields import (
    RandomShiftField,
    SyntheticDiscreteField,
    check_identity_boll,
    check_spectral_identity,
    check_tail_identity,
    exceedance_functional,
    fdd_Y_check,
    local_field,
    shift_base_window,
    tail_field,
    tail_measure_crosscheck,
)

SCHEMA_VERSION = 1
CHECK_COLUMNS = ["test_id", "lhs_mean", "lhs_se", "rhs_mean", "rhs_se", "z", "pass"]
EXTREMAL_COLUMNS = ["method", "lattice_delta", "n_or_a", "estimate", "se", "reps"]


def _num(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


@dataclass
class Outcome:
    """What a subcommand produced: CSV table, summary lines, failures."""

    columns: list
    rows: list = field(default_factory=list)
    lines: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def add_report(self, rep):
        self.rows.append([rep.test_id, rep.lhs.mean, rep.lhs.se, rep.rhs.mean, rep.rhs.se,
                          rep.z, rep.passed])
        self.lines.append(rep.summary())
        if not rep.passed:
            self.failures.append({"test_id": rep.test_id, "z": rep.z,
                                  "lhs_mean": rep.lhs.mean, "rhs_mean": rep.rhs.mean})

    def fail(self, test_id: str, reason: str):
        self.lines.append(f"{test_id} FAIL {reason}")
        self.failures.append({"test_id": test_id, "reason": reason})


class Experiment:
    """Binds a validated config to samplers."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.L = Lattice(cfg.lattice_matrix())
        self.l = self.L.l
        mv = cfg.model_value
        self.kind = mv("kind")
        self.alpha = float(mv("alpha"))
        self.d = int(mv("d"))
        if self.kind == "brown_resnick":
            self.model = SpectralModel(VariogramSpec(mv("sigma"), mv("kappa"), mv("family")),
                                       self.d, self.alpha, mv("sign_mode"), mv("jitter"))

    # samplers -------------------------------------------------------------

    def factory(self, w: Window):
        if self.kind == "brown_resnick":
            return BrownResnick(self.model, w)
        mv = self.cfg.model_value
        return SyntheticDiscreteField(self.kind, w, self.alpha, self.d, mv("rho"), mv("law"))

    def window(self, radius: float | None = None) -> Window:
        return enumerate_window(self.L, self.cfg.radius if radius is None else radius)

    def support(self, radius: float) -> np.ndarray:
        if radius <= 0:
            return np.zeros((1, self.l), dtype=np.int64)
        return self.window(radius).coords

    def shifted(self, out: Window, supp, variant="ii") -> RandomShiftField:
        base = self.factory(shift_base_window(self.L, out.coords, supp))
        if variant == "iii":
            base = local_field(base, seed=self.cfg.seed)
        return RandomShiftField(base, supp, None, variant, out)

    def theta(self, w: Window):
        return local_field(self.factory(w), seed=self.cfg.seed)

    def axis_point(self, k: int) -> np.ndarray:
        p = np.zeros(self.l, dtype=np.int64)
        p[0] = k
        return p

    def functional(self, name: str) -> FunctionalSpec:
        if name == "one":
            return indicator_box(self.axis_point(0)[None, :], name="one")
        return self.cfg.functional(name).build()

    @property
    def mc(self):
        c = self.cfg
        return dict(reps=c.reps, seed=c.seed, workers=c.workers)


# ---------------------------------------------------------------------------
# default panels used when the config declares no tests of a kind


def _defaults(ex: Experiment, ttype: str) -> list[TestConfig]:
    e = ex.axis_point
    pt = lambda *ks: tuple(tuple(int(c) for c in e(k)) for k in ks)
    mk = lambda name, t, **kw: TestConfig(name, t, tuple(sorted(kw.items())))
    if ttype == "identity":
        return [mk(f"identity-{h}-{F}", "identity", h=pt(h)[0], functional=F, variant="ii", shift_radius=2)
                for h in (0, 1, 2) for F in ("box", "pow", "sup")]
    if ttype == "spectral":
        return [mk(f"spec-{h}-{F}", "spectral", h=pt(h)[0], functional=F)
                for h in (1, 2) for F in ("exc1", "ratio", "sup")]
    if ttype == "tail":
        return [mk(f"tail-{h}-{x}-{G}", "tail", h=pt(h)[0], x=x, functional=G)
                for h in (0, 1) for x in (0.5, 1.0, 2.0) for G in ("one", "exc1")]
    if ttype == "fdd_y":
        return [mk("eB-1", "fdd_y", points=pt(0), x=(2.0,)),
                mk("eB-3", "fdd_y", points=pt(0, 1, 2), x=(2.0, 1.5, 3.0))]
    if ttype == "maxstable_fdd":
        return [mk("joint-cdf", "maxstable_fdd", points=pt(0, 1), x=(1.0, 2.0), epsilon=0.5)]
    if ttype == "frechet":
        return [mk("frechet", "frechet", point=pt(0)[0], x=(0.5, 1.0, 2.0), epsilon=0.5)]
    if ttype == "tail_measure":
        return [mk("H0", "tail_measure", points=pt(0), levels=(1.0,), k_radius=3, shift_radius=2),
                mk("H0-2", "tail_measure", points=pt(0), levels=(2.0,), k_radius=3, shift_radius=2),
                mk("H1", "tail_measure", points=pt(1), levels=(1.5,), k_radius=3, shift_radius=2),
                mk("H01", "tail_measure", points=pt(0, 1), levels=(1.0, 1.0), k_radius=3,
                   shift_radius=2)]
    if ttype == "extremal":
        return [mk("extremal", "extremal", method="both", n_list=(8, 16, 32),
                   radii=(4.0, 8.0, 16.0), tau=0.0)]
    if ttype == "refine":
        return [mk("refine", "refine", levels=(0, 1, 2, 3, 4), block_n=16)]
    if ttype == "axioms":
        return [mk("axioms", "axioms", corpus=500, shifts=(-2, -1, 0, 1, 2), scales=(0.5, 1.0, 3.0))]
    raise UsageError(ttype)


def _default_functionals(ex: Experiment) -> dict[str, FunctionalSpec]:
    e = ex.axis_point
    return {
        "box": indicator_box(np.stack([e(0), e(1)]), lower=(0.5, 0.3), upper=(np.inf, 2.0), name="box"),
        "pow": product_power(np.stack([e(-1), e(1)]), (0.5, 0.5), name="pow"),
        "sup": sup_window(np.stack([e(-1), e(0), e(1)]), name="sup"),
        "exc1": indicator_box(e(1)[None, :], lower=(0.7,), name="exc1"),
        "ratio": product_power(np.stack([e(1), e(-1)]), (0.5, -0.5), name="ratio"),
    }


def _panel(ex: Experiment, *types) -> list[TestConfig]:
    tests = ex.cfg.tests_of(*types)
    if tests:
        return tests
    return [t for ty in types for t in _defaults(ex, ty)]


def _functional(ex: Experiment, name: str) -> FunctionalSpec:
    if name == "one" or any(f.name == name for f in ex.cfg.functionals):
        return ex.functional(name)
    defaults = _default_functionals(ex)
    if name in defaults:
        return defaults[name]
    raise UsageError(f"unknown functional {name!r}")


def _radius_for(ex: Experiment, *point_sets) -> float:
    pts = np.concatenate([np.asarray(p, dtype=np.int64).reshape(-1, ex.l) for p in point_sets])
    emb = ex.L.embed(pts)
    return max(float(np.abs(emb).max(initial=0.0)), min(1.0, ex.cfg.radius)) + 1e-9


# ---------------------------------------------------------------------------
# subcommands


def cmd_check_identity(ex: Experiment, args) -> Outcome:
    out = Outcome(CHECK_COLUMNS)
    mc = ex.mc
    w = ex.window()
    for t in _panel(ex, "identity", "spectral"):
        p = dict(t.params)
        F = _functional(ex, p["functional"])
        h = np.array(p["h"])
        if t.type == "identity":
            supp = ex.support(p["shift_radius"])
            zn = ex.shifted(w, supp, p["variant"])
            rep = check_identity_boll(ex.factory(w), zn, F, h, mc["reps"], mc["seed"],
                                      z_crit=ex.cfg.z_crit, workers=mc["workers"],
                                      test_id=f"eq-boll h={fmt_point(h)} F={F.name} N={p['variant']}")
        else:
            r = _radius_for(ex, h, -h, F.points, F.points - h, F.points + h)
            rep = check_spectral_identity(ex.theta(ex.window(r)), F, h, mc["reps"], mc["seed"],
                                          z_crit=ex.cfg.z_crit, workers=mc["workers"])
        out.add_report(rep)
    return out


def cmd_check_tail(ex: Experiment, args) -> Outcome:
    out = Outcome(CHECK_COLUMNS)
    mc = ex.mc
    for t in _panel(ex, "tail"):
        p = dict(t.params)
        G = _functional(ex, p["functional"])
        h = np.array(p["h"])
        r = _radius_for(ex, h, -h, G.points, G.points - h)
        y = tail_field(ex.theta(ex.window(r)))
        out.add_report(check_tail_identity(y, G, h, p["x"], mc["reps"], mc["seed"],
                                           z_crit=ex.cfg.z_crit, workers=mc["workers"]))
    return out


def _maxstable_spectral(ex: Experiment, w: Window) -> RandomShiftField:
    # random shift with N uniform on the window: sup |Z_N|^alpha <= |window|
    return ex.shifted(w, w.coords, "ii")


def cmd_fdd_check(ex: Experiment, args) -> Outcome:
    out = Outcome(CHECK_COLUMNS)
    mc = ex.mc
    for t in _panel(ex, "fdd_y", "maxstable_fdd", "frechet"):
        p = dict(t.params)
        if t.type == "fdd_y":
            pts = np.array(p["points"])
            theta = ex.theta(ex.window(_radius_for(ex, pts)))
            out.add_report(fdd_Y_check(theta, pts, p["x"], mc["reps"], mc["seed"],
                                       z_crit=ex.cfg.z_crit, workers=mc["workers"]))
            continue
        w = ex.window()
        spectral = _maxstable_spectral(ex, w)
        dh = DeHaanConfig(epsilon=p["epsilon"])
        res = dehaan_simulate(spectral, dh, mc["reps"], mc["seed"], workers=mc["workers"],
                              stream=f"dehaan-{t.name}")
        if t.type == "maxstable_fdd":
            out.add_report(joint_cdf_check(spectral, np.array(p["points"]), p["x"], mc["reps"],
                                      mc["seed"], dh, z_crit=ex.cfg.z_crit, workers=mc["workers"],
                                      result=res))
        else:
            for x in p["x"]:
                out.add_report(frechet_marginal_check(res, np.array(p["point"]), x,
                                                      z_crit=ex.cfg.z_crit))
        if res.any_truncated:
            out.lines.append(f"  note: {int(res.truncated.sum())} de Haan runs hit max_terms")
    return out


def cmd_tail_measure(ex: Experiment, args) -> Outcome:
    out = Outcome(CHECK_COLUMNS)
    mc = ex.mc
    for t in _panel(ex, "tail_measure"):
        p = dict(t.params)
        H = exceedance_functional(np.array(p["points"]), p["levels"])
        K = ex.support(p["k_radius"])
        supp = ex.support(p["shift_radius"])
        hp = _radius_for(ex, H.F.points)
        z = ex.factory(ex.window(hp))
        # Theta must reach K - K, the H points shifted by K, and the random shifts
        theta = ex.theta(ex.window(2 * p["k_radius"] + p["shift_radius"] + hp))
        _, reports = tail_measure_crosscheck(H, z, theta, mc["reps"], mc["seed"], K=K,
                                             support=supp, z_crit=ex.cfg.z_crit,
                                             workers=mc["workers"])
        for rep in reports:
            out.add_report(rep)
    return out


def cmd_extremal(ex: Experiment, args) -> Outcome:
    out = Outcome(EXTREMAL_COLUMNS)
    mc = ex.mc
    for t in _panel(ex, "extremal"):
        p = dict(t.params)
        method = args.method or p["method"]
        last = {}
        if method in ("blocks", "both"):
            for e in extremal_index_blocks(ex.factory, ex.L, p["n_list"], mc["reps"], mc["seed"],
                                           workers=mc["workers"]):
                out.rows.append(["blocks", ex.L.delta, e.param, e.value.mean, e.value.se,
                                 e.value.reps])
                out.lines.append(f"eq-nu blocks n={e.param:g} theta={e.value}")
                last["blocks"] = e.value
        if method in ("pil", "both"):
            theta = ex.theta(ex.window(max(p["radii"])))
            for e in extremal_index_pil(theta, ex.L, p["radii"], mc["reps"], mc["seed"],
                                        tau=p["tau"], workers=mc["workers"]):
                out.rows.append([f"pil(tau={p['tau']:g})", ex.L.delta, e.param, e.value.mean,
                                 e.value.se, e.value.reps])
                out.lines.append(f"eq-pil a={e.param:g} tau={p['tau']:g} theta={e.value}")
                last["pil"] = e.value
                if e.diagnostics.get("monotone_in_radius") is False:
                    out.fail("eq-pil monotone", "estimate increased with the radius")
        if len(last) == 2:
            rep = compare(last["blocks"], last["pil"], ex.cfg.z_crit,
                          f"eq-nu~eq-pil n={p['n_list'][-1]} a={p['radii'][-1]:g}")
            out.lines.append(rep.summary())
            if not rep.passed:
                out.failures.append({"test_id": rep.test_id, "z": rep.z})
    return out


def cmd_refine(ex: Experiment, args) -> Outcome:
    out = Outcome(["level", "lattice_delta", "points", "raw", "raw_se", "normalized",
                   "normalized_se", "reps"])
    mc = ex.mc
    for t in _panel(ex, "refine"):
        p = dict(t.params)
        tab = refinement_study(ex.factory, ex.L, p["levels"], p["block_n"], mc["reps"],
                               mc["seed"], workers=mc["workers"])
        for r in tab.rows:
            out.rows.append([r.level, r.delta, r.points, r.raw.mean, r.raw.se,
                             r.normalized.mean, r.normalized.se, r.raw.reps])
            out.lines.append(f"eq-3mace level={r.level} raw={r.raw} normalized={r.normalized}")
        verdict = "PASS" if tab.passed else "FAIL"
        out.lines.append(f"eq-3mace {verdict} normalized change={tab.normalized_change:.3f} "
                         f"raw change={tab.raw_change:.3f}")
        if not tab.passed:
            out.failures.append({"test_id": "eq-3mace", "normalized_change": tab.normalized_change,
                                 "raw_change": tab.raw_change})
    return out


def axiom_corpus(ex: Experiment, n: int, seed: int, workers: int = 1) -> list[FieldSample]:
    """Spectral samples and tail samples ``Y = R Theta`` on the config window."""
    w = ex.window()
    z = ex.factory(w)
    y = tail_field(ex.theta(w))
    nz = n // 2
    zs = replicate(lambda rng, k: z.sample(rng, k), nz, seed, stream="axiom-corpus-z",
                   workers=workers)
    ys, wt = replicate(lambda rng, k: y.sample_weighted(rng, k), n - nz, seed,
                       stream="axiom-corpus-y", workers=workers)
    if wt is not None:
        ys = ys[wt > 0]
    return [FieldSample(w, v, ex.alpha) for v in np.concatenate([zs, ys])]


def cmd_axioms(ex: Experiment, args) -> Outcome:
    out = Outcome(["map", "axiom", "checked", "passed", "failed", "witness"])
    norm = ex.factory(ex.window()).norm
    for t in _panel(ex, "axioms"):
        p = dict(t.params)
        corpus = axiom_corpus(ex, p["corpus"], ex.cfg.seed, ex.cfg.workers)
        shifts = [ex.axis_point(j) for j in p["shifts"]]
        for J, hard in ((infargsup, ("A1", "A3", "A2", "hom0")),
                        (first_exceedance, ("A1", "A3", "A2"))):
            rep = axiom_check(J, corpus, shifts, p["scales"], norm, J.__name__)
            for ax, checked, passed, failed, wit in rep.rows():
                out.rows.append([rep.name, ax, checked, passed, failed, repr(wit[0]) if wit else ""])
                ok = failed == 0 and checked > 0
                status = "PASS" if ok else ("FAIL" if ax in hard else "INFO")
                out.lines.append(f"axiom-{ax} J={rep.name} {status} {passed}/{checked}")
                if ax in hard and not ok:
                    out.failures.append({"test_id": f"axiom-{ax} J={rep.name}", "failed": failed})
            out.lines.append(f"  {rep.name}: skipped shifts {rep.skipped_shifts}, "
                             f"A2 out-of-domain {rep.a2_out_of_domain} "
                             f"(literal failures {rep.a2_literal_failures})")
            if J is first_exceedance and rep.tallies["hom0"].failed == 0:
                out.failures.append({"test_id": "axiom-hom0 J=first_exceedance",
                                     "reason": "no scale-sensitivity witness found"})
    return out


def cmd_simulate_br(ex: Experiment, args) -> Outcome:
    w = ex.window()
    z = ex.factory(w)
    cols = ["rep_id"] + [f"k{i}" for i in range(ex.l)] + [f"z{i + 1}" for i in range(ex.d)] + ["norm"]
    out = Outcome(cols)
    vals = replicate(lambda rng, k: z.sample(rng, k), ex.cfg.reps, ex.cfg.seed,
                     stream="simulate-br", workers=ex.cfg.workers)
    norms = z.norm(vals)
    for r in range(len(vals)):
        for i, k in enumerate(w.coords):
            out.rows.append([r, *k.tolist(), *vals[r, i].tolist(), norms[r, i]])
    out.lines.append(f"simulated {len(vals)} fields on {len(w)} points")
    return out


def cmd_simulate_maxstable(ex: Experiment, args) -> Outcome:
    w = ex.window()
    spectral = _maxstable_spectral(ex, w)
    res = dehaan_simulate(spectral, DeHaanConfig(), ex.cfg.reps, ex.cfg.seed,
                          workers=ex.cfg.workers)
    cols = ["rep_id"] + [f"k{i}" for i in range(ex.l)] + ["X", "terms_used", "truncated"]
    out = Outcome(cols)
    for r in range(res.reps):
        for i, k in enumerate(w.coords):
            out.rows.append([r, *k.tolist(), res.values[r, i], res.terms[r], res.truncated[r]])
    out.lines.append(f"simulated {res.reps} max-stable fields, mean terms {res.terms.mean():.1f}, "
                     f"truncated {int(res.truncated.sum())}")
    return out


COMMANDS = {
    "simulate-br": cmd_simulate_br,
    "simulate-maxstable": cmd_simulate_maxstable,
    "check-identity": cmd_check_identity,
    "check-tail": cmd_check_tail,
    "fdd-check": cmd_fdd_check,
    "extremal-index": cmd_extremal,
    "refine-study": cmd_refine,
    "functional-axioms": cmd_axioms,
    "tail-measure": cmd_tail_measure,
}


def write_csv(path: Path, subcommand: str, outcome: Outcome):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# homfields {subcommand} schema-version={SCHEMA_VERSION}\n")
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(outcome.columns)
        for row in outcome.rows:
            wr.writerow([_num(v) for v in row])


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="homfields", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, help="experiment config file")
        sp.add_argument("--seed", type=int, help="master seed (overrides the config)")
        sp.add_argument("--reps", type=int, help="replications (overrides the config)")
        sp.add_argument("--workers", type=int, help="worker threads (overrides the config)")
        sp.add_argument("--out", type=Path, help="output directory (overrides the config)")
        if name == "extremal-index":
            sp.add_argument("--method", choices=("blocks", "pil", "both"))
        else:
            sp.set_defaults(method=None)
    return ap


def run(cfg: ExperimentConfig, subcommand: str, args=None, out_dir: Path | None = None) -> int:
    args = args or argparse.Namespace(method=None)
    ex = Experiment(cfg)
    outcome = COMMANDS[subcommand](ex, args)
    out_dir = Path(out_dir or cfg.out_dir)
    write_csv(out_dir / f"{subcommand}.csv", subcommand, outcome)
    for line in outcome.lines:
        print(line)
    fail_path = out_dir / f"{subcommand}-failures.json"
    if outcome.failures:
        fail_path.write_text(json.dumps(outcome.failures, indent=2, default=float) + "\n")
        return 1
    if fail_path.exists():
        fail_path.unlink()
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = args.config.read_text() if args.config else DEFAULT_CONFIG
        cfg = parse_config(text)
        if args.seed is not None and args.seed < 0:
            raise UsageError("--seed must be nonnegative")
        if args.reps is not None and args.reps < 2:
            raise UsageError("--reps must be >= 2")
        if args.workers is not None and args.workers < 1:
            raise UsageError("--workers must be >= 1")
        cfg = cfg.with_overrides(seed=args.seed, reps=args.reps, workers=args.workers,
                                 out_dir=str(args.out) if args.out else None)
        return run(cfg, args.command, args)
    except ConfigError as exc:
        print("configuration errors:", file=sys.stderr)
        for ln, msg in exc.errors:
            print(f"  line {ln}: {msg}", file=sys.stderr)
        return 2
    except (UsageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ContractError, NumericalError, MCRunError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
