"""Experiment drivers.  Each returns its artifacts as text plus a pass flag."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import forests as fo
from . import isoperimetry as iso
from . import percolation as pc
from . import psn
from . import tmtp
from . import walks as wk
from .config import RunConfig
from .families import census_identity_holds, family_to_dict
from .rng import stream
from .truncation import Truncation, ball


@dataclass
class Outcome:
    artifacts: dict[str, str]
    passed: bool
    modules: list[str]
    notes: dict = field(default_factory=dict)


def _ball(cfg: RunConfig, radius: int | None = None) -> Truncation:
    return ball(cfg.family, cfg.radius if radius is None else radius, cfg.max_vertices)


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, default=str) + "\n"


def run_census(cfg: RunConfig) -> Outcome:
    t = _ball(cfg)
    d = t.degree
    lines = ["index,address,census,weighted_degree,census_identity,degree_identity"]
    ok = True
    for v in t.interior.tolist():
        cen: dict[Fraction, int] = {}
        for _, _, q in t.rows[v]:
            cen[q] = cen.get(q, 0) + 1
        wd = sum((q * c for q, c in cen.items()), Fraction(0))
        ci, di = census_identity_holds(cen), wd == d
        ok &= ci and di
        desc = ";".join(f"{q}:{c}" for q, c in sorted(cen.items()))
        lines.append(f"{v},{t.address(v)},{desc},{wd},{int(ci)},{int(di)}")
    D = t.family.sqrt_degree()
    ok &= (abs(D - d) < 1e-12) if t.family.unimodular else (D < d)
    summary = {"family": family_to_dict(t.family), "degree": d, "sqrt_degree": D,
               "interior_vertices": len(t.interior), "passed": ok}
    return Outcome({"census.csv": "\n".join(lines) + "\n", "summary.json": _dumps(summary)},
                   ok, ["weights", "families", "truncation"])


def run_tmtp(cfg: RunConfig) -> Outcome:
    t = _ball(cfg)
    rng = stream(cfg.seed, "tmtp-pairs")
    npairs = int(cfg.opt("tmtp.pairs", 200))
    results = []
    ok = True
    for k in tmtp.kernel_library(t.family):
        res = tmtp.audit(t, k, tmtp.admissible_pairs(t, k.radius, npairs, rng))
        ok &= all(r.equal for r in res)
        results += res
    neg = tmtp.audit(t, tmtp.negative_control(), tmtp.admissible_pairs(t, 1, npairs, rng))
    detected = not all(r.equal for r in neg)
    ok &= detected
    summary = {"kernels": len(tmtp.kernel_library(t.family)), "pairs": npairs,
               "negative_control_detected": detected, "passed": ok}
    return Outcome({"audit.json": tmtp.audit_report(results) + "\n",
                    "negative_control.json": tmtp.audit_report(neg) + "\n",
                    "summary.json": _dumps(summary)}, ok, ["tmtp", "truncation", "weights"])


def run_walks(cfg: RunConfig) -> Outcome:
    kind = cfg.opt("walk.kind", "sqrtw")
    nmax = int(cfg.opt("walk.nmax", 20))
    table = wk.return_probabilities(cfg.family, kind, 2 * nmax)
    hats = table.rho_hats()
    ok = wk.is_nondecreasing(hats)
    t = _ball(cfg)
    k = wk.kernel(t, kind)
    rs = float(wk.row_sum_errors(k).max())
    ok &= rs <= 1e-12
    rev = float(wk.reversibility_errors(k).max()) if kind == "sqrtw" else None
    if rev is not None:
        ok &= rev <= 1e-12
    summary = {"kind": kind, "nmax": nmax, "rho_hat": float(hats[-1]),
               "rho_hat_is_lower_bound": True, "row_sum_error": rs,
               "reversibility_error": rev, "passed": bool(ok)}
    return Outcome({"returns.csv": table.to_csv(), "summary.json": _dumps(summary)},
                   bool(ok), ["walks", "truncation", "families"])


def run_cheeger(cfg: RunConfig) -> Outcome:
    t = _ball(cfg)
    budget = int(cfg.opt("cheeger.budget", 20))
    max_size = int(cfg.opt("cheeger.max_size", 5))
    wits = [iso.witness_search_greedy(t, min(budget, len(t.interior))),
            iso.witness_search_exhaustive(t, max_size)]
    try:
        wits.append(iso.folner_cone(t.family, int(cfg.opt("cheeger.cone_depth", 10))))
    except TypeError:
        pass
    rng = stream(cfg.seed, "cheeger-sets")
    ok = True
    audits = []
    for _ in range(int(cfg.opt("cheeger.random_sets", 50))):
        F = iso.random_connected_set(t, int(rng.integers(1, 9)), rng)
        a = iso.sandwich_audit(t, F)
        f = iso.functionals(t, F)
        ident = f.avg_inner_degree + f.iota == t.degree
        ok &= a["passed"] and ident
        audits.append({"size": len(F), "sandwich": a["passed"], "identity": ident})
    out = {"witnesses": [json.loads(w.to_json()) for w in wits], "audits": audits,
           "passed": ok}
    return Outcome({"witnesses.json": _dumps(out)}, ok, ["isoperimetry", "truncation"])


def _grid(cfg: RunConfig) -> list[float]:
    g = cfg.opt("percolation.grid", [round(0.05 * i, 2) for i in range(1, 20)])
    return sorted(float(x) for x in g)


def run_sweep(cfg: RunConfig) -> Outcome:
    grid = _grid(cfg)
    mode = cfg.opt("percolation.mode", "bond")
    names = cfg.opt("percolation.estimators", ["radial_reach", "upward_reach"])
    reach = int(cfg.opt("percolation.reach", cfg.radius))
    L = cfg.opt("percolation.level", cfg.radius // 2)
    spec = pc.EventSpec(reach=reach, up_level=L, growth_cap=max(grid))
    model = pc.make_model(cfg.family, cfg.radius, mode, cfg.seed, spec, p_cap=max(grid))
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(["family", "params", "radius", "estimator", "p", "replicas", "freq", "ci_lo",
                  "ci_hi", "seed"])
    params = json.dumps(cfg.family.params(), sort_keys=True, separators=(",", ":"))
    ok = True
    ts = pc.traces(model, 0, cfg.replicas, cfg.workers)
    for name in names:
        if name == "radial_growth":
            rows = [pc.growth_row(ts, p, cfg.radius) for p in grid]
        elif name == "uniqueness":
            rows = pc.Estimator(name, model if isinstance(model, pc.TruncationModel) else
                                pc.TruncationModel(cfg.family, cfg.radius, mode, cfg.seed, spec),
                                cfg.replicas, cfg.workers).rows(grid)
        else:
            ind = pc.event_indicators(ts, name, grid)
            ok &= bool(np.all(np.diff(ind.astype(int), axis=1) >= 0))
            rows = [pc.event_row(ts, name, p) for p in grid]
        for r in rows:
            out.writerow([cfg.family, params, cfg.radius, name, f"{r.p:.6g}", r.replicas,
                          f"{r.value:.10g}", f"{r.ci_lo:.10g}", f"{r.ci_hi:.10g}", cfg.seed])
    return Outcome({"sweep.csv": buf.getvalue()}, ok, ["percolation", "rng"])


def run_forests(cfg: RunConfig) -> Outcome:
    t = _ball(cfg)
    g = fo.label_truncation(t, cfg.seed)
    a, b = fo.fmsf(g), fo.fmaxsf_w(g)
    ok = a.is_acyclic() and b.is_acyclic() and a.tree_count == 1 and b.tree_count == 1
    c = fo.wmaxsf_w(g) if t.frontier.any() else b
    ok &= bool(np.all(~c.kept | b.kept)) and c.is_acyclic()
    lines = ["edge,u,v,U,w,fmsf,fmaxsf_w,wmaxsf_w"]
    for e, (u, v) in enumerate(t.edges.tolist()):
        lines.append(f"{e},{u},{v},{g.labels[e]:.17g},{g.edge_weight(e)},"
                     f"{int(a.kept[e])},{int(b.kept[e])},{int(c.kept[e])}")
    stats = ["algorithm,tree,vertices,weight_sum,boundary_touches,high_boundary_touches"]
    thr = float(cfg.opt("forests.level_threshold", 0))
    for name, fc in (("fmsf", a), ("fmaxsf_w", b), ("wmaxsf_w", c)):
        for s in fc.tree_stats(g, thr):
            stats.append(f"{name},{s['tree']},{s['vertices']},{s['weight_sum']:.12g},"
                         f"{s['boundary_touches']},{s['high_boundary_touches']}")
    return Outcome({"forest.csv": "\n".join(lines) + "\n", "trees.csv": "\n".join(stats) + "\n"},
                   bool(ok), ["forests", "truncation", "rng"])


def run_psn(cfg: RunConfig) -> Outcome:
    ks = [int(k) for k in cfg.opt("psn.ks", [2, 3, 4])]
    rows, ok = psn.psn_ratio_trend(cfg.family, ks, int(cfg.opt("psn.budget", 200)),
                                   cfg.opt("psn.mode", "path"))
    return Outcome({"psn.csv": psn.trend_csv(cfg.family, rows)}, ok, ["psn", "isoperimetry"])


def _bracket(b: pc.Bracket) -> dict:
    return {"estimator": b.estimator, "lo": b.lo, "hi": b.hi, "open": b.open,
            "rows": [[r.p, r.value, r.ci_lo, r.ci_hi] for r in b.rows],
            "refinements": [[r.p, r.value, r.ci_lo, r.ci_hi] for r in b.refinements]}


def run_phases(cfg: RunConfig) -> Outcome:
    grid = _grid(cfg)
    rep = pc.phase_brackets(cfg.family, cfg.radius, cfg.seed, cfg.replicas, grid,
                            u_radius=cfg.opt("percolation.u_radius"),
                            u_replicas=cfg.opt("percolation.u_replicas"),
                            tol=float(cfg.opt("percolation.tol", 0.04)), workers=cfg.workers)
    body = {"family": rep.family, "radius": rep.radius, "p_c": _bracket(rep.c),
            "p_h_proxy": _bracket(rep.h), "p_u_proxy": _bracket(rep.u),
            "h_proxy_is_c_estimator": rep.h_is_c, "ordered": rep.ordered,
            "c_h_overlap": rep.c_h_overlap, "under_resolved": rep.under_resolved}
    return Outcome({"phases.json": _dumps(body)}, rep.ordered and not rep.under_resolved,
                   ["percolation", "truncation", "rng"])


RUNNERS: dict[str, Callable[[RunConfig], Outcome]] = {
    "census": run_census,
    "tmtp": run_tmtp,
    "walks": run_walks,
    "cheeger": run_cheeger,
    "percolation-sweep": run_sweep,
    "forests": run_forests,
    "psn": run_psn,
    "phases-report": run_phases,
}
