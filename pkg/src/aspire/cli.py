"""Command-line runner: ``aspire verify|simulate|phat|sweep --config FILE``.

Exit codes: 0 success, 1 a check failed or a run could not complete,
2 a check was inconclusive within its search budget, 64 usage or config
error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import Experiment, apply_overrides, initial_state, load
from .errors import AspireError, StructureError
from .game import FAIL, INCONCLUSIVE, PASS, is_coordination_game, is_symmetric_game, payoff_constants, sk_partition
from .games import CommonPoolGame, NetworkGame
from .learning import Params, TremblePolicy, run
from .markov import (
    ReducibleChainWarning,
    equivalent_pairs,
    estimate_phat,
    fairness_report,
    fw_invariant,
    invariant_distribution,
    pair_stderr,
    pi_stderr,
)
from .metrics import CommonPoolObserver, NetworkObserver, OccupancyObserver, PurityObserver

EXIT_OK, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 1, 2, 64
FW_MAX_STATES = 9


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, set, frozenset)):
        items = [_jsonable(v) for v in x]
        return sorted(items, key=repr) if isinstance(x, (set, frozenset)) else items
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


def _params_line(p: Params) -> str:
    return (f"epsilon={p.epsilon!r} lambda={p.lam!r} zeta={p.zeta!r} c_phi={p.c_phi!r} "
            f"h={p.h!r} rho_lo={p.rho_lo!r} rho_hi={p.rho_hi!r}")


class Writer:
    """Writes every output file of one command invocation."""

    def __init__(self, exp: Experiment, command: str, seed: int | None, params: Params | None):
        self.dir = Path(exp.doc["output"]["directory"])
        self.formats = set(exp.doc["output"]["formats"])
        self.header = [
            f"aspire {__version__}",
            f"command: {command}",
            f"config_sha256: {exp.digest}",
            f"seed: {seed}",
            f"game: {exp.game.name} ({exp.game.size} pure states)",
        ]
        if params is not None:
            self.header.append(f"params: {_params_line(params)}")
        self.written: list[Path] = []

    def _path(self, name: str) -> Path:
        try:
            self.dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OSError(f"cannot create output directory {self.dir}: {exc}") from exc
        return self.dir / name

    def _put(self, name: str, text: str) -> None:
        path = self._path(name)
        try:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        self.written.append(path)

    def csv(self, name: str, columns: list[str], rows) -> None:
        if "csv" not in self.formats:
            return
        buf = io.StringIO()
        for line in self.header:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])
        self._put(name, buf.getvalue())

    def json(self, name: str, doc: dict) -> None:
        if "json" not in self.formats:
            return
        meta = {"version": __version__, "config_sha256": self.header[2].split(": ")[1]}
        body = _jsonable({**doc, **meta})
        self._put(name, json.dumps(body, sort_keys=True, indent=2) + "\n")


# -- verify ---------------------------------------------------------------


def cmd_verify(exp: Experiment, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    game, abar = exp.game, exp.abar
    checks = exp.doc["analysis"]["verify"]
    report: dict = {"game": game.name, "desirable": sorted(game.label(a) for a in abar), "warnings": []}
    statuses = []
    if "coordination" in checks:
        rep = is_coordination_game(game, abar, budget=int(exp.doc["analysis"]["search_budget"]))
        report["coordination"] = {
            "status": rep.status,
            "strict": rep.is_strict_coordination,
            "conditions": {
                name: {"status": c.status, "detail": c.detail, "witnesses": c.witnesses}
                for name, c in (("a", rep.cond_a), ("b", rep.cond_b), ("c", rep.cond_c))
            },
        }
        statuses.append(rep.status)
    if "symmetry" in checks:
        sym = is_symmetric_game(game)
        report["symmetry"] = {"status": PASS if sym.holds else FAIL, "counterexample": sym.counterexample}
        statuses.append(PASS if sym.holds else FAIL)
    if "constants" in checks:
        k = payoff_constants(game, abar)
        report["constants"] = {
            "delta_min": k.delta_min, "delta_max": k.delta_max, "delta_star": k.delta_star,
            "h1_holds": k.h1_holds, "h2_holds": k.h2_holds,
            "zeta_bound_h1": k.zeta_bound_h1, "zeta_bound_h2": k.zeta_bound_h2,
        }
        zeta = (exp.doc.get("params") or {}).get("zeta")
        bound = k.zeta_bound()
        if zeta is not None:
            if bound is None:
                report["warnings"].append("neither tremble-size hypothesis holds; no bound on zeta applies")
            elif float(zeta) >= bound:
                report["warnings"].append(f"zeta={zeta} is not below the applicable bound {bound!r}")
    if "partition" in checks:
        try:
            layers = sk_partition(game, abar)
            report["partition"] = {"status": PASS, "layer_sizes": [len(x) for x in layers]}
            statuses.append(PASS)
        except StructureError as exc:
            report["partition"] = {"status": FAIL, "detail": str(exc)}
            statuses.append(FAIL)
    for msg in report["warnings"]:
        print(f"warning: {msg}", file=err)
    print(json.dumps(_jsonable(report), sort_keys=True, indent=2), file=out)
    if FAIL in statuses:
        return EXIT_FAIL
    if INCONCLUSIVE in statuses:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


# -- simulate -------------------------------------------------------------


@dataclass
class SimOutcome:
    result: object
    occupancy: OccupancyObserver
    purity: PurityObserver
    pool: CommonPoolObserver | None = None
    network: NetworkObserver | None = None
    summary: dict = field(default_factory=dict)


def simulate(exp: Experiment, params: Params, seed: int) -> SimOutcome:
    game, runb = exp.game, exp.doc["run"]
    if "horizon" not in runb:
        raise UsageError("run.horizon is required for simulate")
    horizon = int(runb["horizon"])
    stride = max(1, int(runb["stride"]))
    window = None
    if runb["window_last"]:
        window = (max(0, horizon - int(runb["window_last"])), horizon)
    occ = OccupancyObserver()
    purity = PurityObserver(game, tol=params.zeta, stride=stride)
    observers = [occ, purity]
    pool = net = None
    if isinstance(game, CommonPoolGame):
        pool = CommonPoolObserver(game)
        observers.append(pool)
    if isinstance(game, NetworkGame):
        net = NetworkObserver(game, stride=stride)
        observers.append(net)
    x0 = initial_state(game, runb["initial"], seed)
    res = run(game, params, TremblePolicy.SPONTANEOUS, x0, horizon, seed, observers, window, runb["backend"])
    rep = occ.report
    summary = {
        "command": "simulate",
        "seed": seed,
        "horizon": horizon,
        "initial": game.label(x0.action),
        "final_action": game.label(res.final.action),
        "final_aspiration": list(res.final.aspiration),
        "top_profiles": [{"profile": game.label(a), "frequency": f} for a, f in rep.top(10)],
        "mass_desirable": rep.mass(exp.abar) if horizon else 0.0,
        "off_pure_fraction": purity.off_pure,
    }
    if pool is not None:
        summary["common_pool"] = {
            "success": pool.report.success, "collision": pool.report.collision,
            "fairness_gap": pool.report.fairness_gap,
        }
    if net is not None:
        summary["network"] = {
            "mean_inverse_distance": net.report.mean_inverse_distance,
            "wheel_frequency": net.report.wheel_frequency,
            "window_wheel_frequency": net.report.window_wheel_frequency,
        }
    return SimOutcome(res, occ, purity, pool, net, summary)


def cmd_simulate(exp: Experiment, seed: int) -> int:
    params = exp.params()
    sim = simulate(exp, params, seed)
    w = Writer(exp, "simulate", seed, params)
    rep = sim.occupancy.report
    game = exp.game
    w.csv(
        "occupancy.csv", ["state", "profile", "count", "frequency"],
        ((int(k), game.label(game.joint(int(k))), int(rep.counts[k]), float(rep.freq[k]))
         for k in np.flatnonzero(rep.counts)),
    )
    if sim.pool is not None:
        rows = [("success", i, float(v)) for i, v in enumerate(sim.pool.report.success)]
        rows.append(("collision", "", sim.pool.report.collision))
        w.csv("common_pool.csv", ["quantity", "agent", "frequency"], rows)
    if sim.network is not None:
        rows = [
            (t, i, float(avg[i]), float(inst[i]), float(rho[i]))
            for t, avg, inst, rho in sim.network.series for i in range(game.n)
        ]
        w.csv("network_series.csv", ["t", "node", "running_inverse_distance", "inverse_distance", "aspiration"], rows)
    w.json("summary.json", sim.summary)
    return EXIT_OK


# -- phat -----------------------------------------------------------------


@dataclass
class PhatOutcome:
    phat: object
    dist: object
    pi_se: np.ndarray
    summary: dict
    fairness: object = None
    pairs: list = field(default_factory=list)


def estimate(exp: Experiment, params: Params, seed: int) -> PhatOutcome:
    game, an = exp.game, exp.doc["analysis"]
    ph = estimate_phat(
        game, params, int(an["samples_per_row"]), seed, max_steps=int(an["max_steps"]),
        workers=int(an["workers"]), backend=exp.doc["run"]["backend"],
    )
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ReducibleChainWarning)
        dist = invariant_distribution(ph)
    for wmsg in caught:
        print(f"warning: {wmsg.message}", file=sys.stderr)
    se = pi_stderr(ph, dist.pi)
    desirable = sorted(game.index(a) for a in exp.abar)
    off = [s for s in range(game.size) if s not in set(desirable)]
    group_se = pi_stderr(ph, dist.pi, [desirable, off]) if off else np.array([0.0, 0.0])
    summary = {
        "command": "phat",
        "seed": seed,
        "samples_per_row": ph.samples_per_row,
        "unresolved_samples": int(ph.unresolved.sum()),
        "certificate_residual": ph.residual,
        "unperturbed_steps": ph.steps,
        "method": dist.method,
        "balance_residual": dist.residual,
        "communicating_classes": len(dist.classes),
        "closed_classes": len(dist.closed),
        "mass_desirable": float(dist.pi[desirable].sum()),
        "mass_desirable_stderr": float(group_se[0]),
        "mass_off_desirable": float(dist.pi[off].sum()),
        "mass_off_desirable_stderr": float(group_se[1]),
    }
    out = PhatOutcome(ph, dist, se, summary)
    if an["fw_check"]:
        if game.size <= FW_MAX_STATES:
            fw = fw_invariant(ph, budget=FW_MAX_STATES)
            summary["fw_disagreement"] = float(np.max(np.abs(fw.pi - dist.pi)))
        else:
            summary["fw_disagreement"] = None
            print(f"warning: fw check skipped, {game.size} states exceed {FW_MAX_STATES}", file=sys.stderr)
    if isinstance(game, CommonPoolGame):
        fr = fairness_report(dist, game, ph)
        pairs = equivalent_pairs(game)
        pse = pair_stderr(ph, dist.pi, pairs) if pairs else np.zeros(0)
        out.fairness = fr
        out.pairs = [(s, t, float(dist.pi[s] - dist.pi[t]), float(e)) for (s, t), e in zip(pairs, pse)]
        summary["fairness"] = {
            "agent_mass": fr.agent_mass, "agent_stderr": fr.agent_stderr,
            "collision_mass": fr.collision_mass, "collision_stderr": fr.collision_stderr,
            "max_gap": fr.max_gap,
        }
    return out


def cmd_phat(exp: Experiment, seed: int) -> int:
    params = exp.params()
    res = estimate(exp, params, seed)
    game = exp.game
    labels = [game.label(a) for a in game.profiles()]
    w = Writer(exp, "phat", seed, params)
    w.csv("phat.csv", ["from"] + labels,
          ([labels[s]] + [float(x) for x in res.phat.entries[s]] for s in range(game.size)))
    w.csv("phat_stderr.csv", ["from"] + labels,
          ([labels[s]] + [float(x) for x in res.phat.stderr[s]] for s in range(game.size)))
    w.csv("pi.csv", ["state", "profile", "pi", "stderr"],
          ((s, labels[s], float(res.dist.pi[s]), float(res.pi_se[s])) for s in range(game.size)))
    if res.fairness is not None:
        fr = res.fairness
        rows = [("agent_success", i, float(fr.agent_mass[i]), float(fr.agent_stderr[i])) for i in range(game.n)]
        rows.append(("collision", "", fr.collision_mass, fr.collision_stderr))
        rows += [("pair_difference", f"{labels[s]}|{labels[t]}", d, e) for s, t, d, e in res.pairs]
        w.csv("fairness.csv", ["quantity", "key", "mass", "stderr"], rows)
    w.json("summary.json", res.summary)
    return EXIT_OK


# -- sweep ----------------------------------------------------------------

_PARAM_FIELD = {"epsilon": "epsilon", "lambda": "lam", "zeta": "zeta"}


def cmd_sweep(exp: Experiment, seed: int) -> int:
    if "sweep" not in exp.doc:
        raise UsageError("sweep needs a 'sweep' block with parameter and values")
    sw = exp.doc["sweep"]
    base = exp.params()
    game = exp.game
    labels = [game.label(a) for a in game.profiles()]
    rows = []
    # every value reuses the same seed so that differences reflect the parameter
    for v in sw["values"]:
        params = base.with_(**{_PARAM_FIELD[sw["parameter"]]: float(v)})
        params.check(game)
        key = (sw["parameter"], float(v))
        if sw["command"] == "phat":
            res = estimate(exp, params, seed)
            for s in range(game.size):
                rows.append(key + ("pi", labels[s], float(res.dist.pi[s]), float(res.pi_se[s])))
            sm = res.summary
            rows.append(key + ("mass_desirable", "", sm["mass_desirable"], sm["mass_desirable_stderr"]))
            rows.append(key + ("mass_off_desirable", "", sm["mass_off_desirable"], sm["mass_off_desirable_stderr"]))
            if res.fairness is not None:
                for i, m in enumerate(res.fairness.agent_mass):
                    rows.append(key + ("agent_success", str(i), float(m), float(res.fairness.agent_stderr[i])))
                rows.append(key + ("collision", "", res.fairness.collision_mass, res.fairness.collision_stderr))
        else:
            sim = simulate(exp, params, seed)
            rep = sim.occupancy.report
            for k in np.flatnonzero(rep.counts):
                rows.append(key + ("occupancy", labels[k], float(rep.freq[k]), ""))
            rows.append(key + ("mass_desirable", "", sim.summary["mass_desirable"], ""))
            rows.append(key + ("off_pure_fraction", "", sim.purity.off_pure, ""))
    w = Writer(exp, f"sweep:{sw['command']}", seed, base)
    w.csv("sweep.csv", ["parameter", "value", "metric", "key", "estimate", "stderr"], rows)
    return EXIT_OK


# -- entry point ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="aspire", description="Aspiration-learning experiments driven by a config file.")
    p.add_argument("--version", action="version", version=f"aspire {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, text in (
        ("verify", "structural checks of the configured game"),
        ("simulate", "run the learning process and write occupancy reports"),
        ("phat", "estimate the equivalent chain and its stationary distribution"),
        ("sweep", "repeat phat or simulate over a list of parameter values"),
    ):
        s = sub.add_parser(name, help=text)
        s.add_argument("--config", required=True, help="YAML or JSON experiment file")
        s.add_argument("--seed", type=int, help="overrides run.seed")
        s.add_argument("--out", help="overrides output.directory")
        s.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="set a dotted config key, e.g. params.epsilon=1e-3 (repeatable)")
    return p


def _experiment(args) -> Experiment:
    doc = apply_overrides(load(args.config), args.override)
    if args.seed is not None:
        doc.setdefault("run", {})["seed"] = args.seed
    if args.out is not None:
        doc.setdefault("output", {})["directory"] = args.out
    return Experiment.from_doc(doc)


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


def main(argv=None) -> int:
    with warnings.catch_warnings():
        warnings.showwarning = _show_warning
        return _main(argv)


def _main(argv) -> int:
    try:
        args = build_parser().parse_args(argv)
        exp = _experiment(args)
        seed = exp.seed() if args.command != "verify" else None
        if args.command != "verify":
            exp.params()  # surface parameter errors as usage errors
    except UsageError as exc:
        print(f"aspire: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AspireError, ValueError) as exc:
        print(f"aspire: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "verify":
            return cmd_verify(exp)
        if args.command == "simulate":
            return cmd_simulate(exp, seed)
        if args.command == "phat":
            return cmd_phat(exp, seed)
        return cmd_sweep(exp, seed)
    except UsageError as exc:
        print(f"aspire: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AspireError, OSError) as exc:
        print(f"aspire: {args.command} failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
