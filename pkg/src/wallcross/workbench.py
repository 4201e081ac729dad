"""Dispatch a JobConfig to the modules and collect a Report."""

from __future__ import annotations

import csv
import math
import time
from pathlib import Path

import numpy as np

from . import jsonio
from .config import JobConfig, check_params
from .exact import QQi, Q
from .jsonio import Certificate, Report, SchemaError


# ---------------------------------------------------------------- parsing helpers


def parse_direction(text) -> QQi:
    """'re,im' with integer or rational parts."""
    if isinstance(text, (list, tuple)):
        parts = [str(x) for x in text]
    else:
        parts = str(text).split(",")
    if len(parts) != 2:
        raise SchemaError(f"direction {text!r} must look like 're,im'", "direction")
    try:
        return QQi(Q(parts[0].strip()), Q(parts[1].strip()))
    except (ValueError, TypeError):
        raise SchemaError(f"direction {text!r} has non-rational parts", "direction") from None


def parse_sector(spec):
    """'re,im:re,im' (right boundary, then left boundary going counterclockwise) or a Sector JSON object."""
    from .lattice import Sector

    if isinstance(spec, dict):
        return Sector.from_json(spec)
    text = str(spec)
    if ":" not in text:
        raise SchemaError(f"sector {text!r} must look like 're,im:re,im'", "sector")
    a, b = text.split(":", 1)
    return Sector.between(parse_direction(a), parse_direction(b))


def parse_complex(text) -> complex:
    if isinstance(text, (list, tuple)) and len(text) == 2:
        return complex(float(text[0]), float(text[1]))
    if isinstance(text, (int, float, complex)):
        return complex(text)
    try:
        return complex(str(text).replace(" ", "").replace("i", "j"))
    except ValueError:
        raise SchemaError(f"cannot read {text!r} as a complex number", "t") from None


def parse_ts(value) -> list:
    if isinstance(value, list) and value and not isinstance(value[0], (int, float)):
        return [parse_complex(v) for v in value]
    if isinstance(value, list) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value):
        return [parse_complex(value)]
    if isinstance(value, list):
        return [parse_complex(v) for v in value]
    return [parse_complex(v) for v in str(value).split(";") if v.strip()]


def _need(cfg: JobConfig, key: str):
    if key not in cfg.params or cfg.params[key] is None:
        raise SchemaError(f"verb {cfg.verb!r} needs params.{key}", "params." + key)
    return cfg.params[key]


def _load(cfg: JobConfig, key: str = "file") -> dict:
    return jsonio.load(_need(cfg, key))


def _write_csv(path, header, rows) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


# ---------------------------------------------------------------- stability


def _stab_data(cfg, doc=None):
    from .stability import StabilityData

    doc = doc if doc is not None else _load(cfg)
    return StabilityData.from_json(doc.get("data", doc))


def _field_json(g) -> dict:
    return g.log.to_json()


def stab_rays(cfg: JobConfig, rep: Report):
    from .stability import rays_from_data

    check_params(cfg, {"file", "start"})
    sig = _stab_data(cfg)
    start = parse_direction(cfg.params["start"]) if "start" in cfg.params else QQi(0, 1)
    rays = rays_from_data(sig, start)
    rep.results["rays"] = [{"direction": [str(r.direction.re), str(r.direction.im)]
                            if isinstance(r.direction, QQi) else r.direction, "log": _field_json(r.element)}
                           for r in rays]
    if sig.certificate is not None:
        rep.certificates.append(Certificate("support_property", sig.certificate.passed, None,
                                            {"bad_support": sig.certificate.bad_support}))


def stab_product(cfg: JobConfig, rep: Report):
    from .lie import multiply
    from .stability import rays_from_data, sector_product
    from .lattice import Sector, sector_contains

    check_params(cfg, {"file", "sector"})
    sig = _stab_data(cfg)
    V = parse_sector(_need(cfg, "sector"))
    A = sector_product(sig, V)
    rep.results["sector"] = V.to_json()
    rep.results["product"] = _field_json(A.element)
    # every interior split between consecutive rays must reproduce the product
    inside = [r for r in rays_from_data(sig, V.dir_plus if V.exact else QQi(0, 1))
              if sector_contains(V, r.direction)]
    bad = 0
    if V.exact:
        for j in range(1, len(inside)):
            d = inside[j - 1].direction
            # include_left/include_right refer to the plus/minus edge respectively
            left = sector_product(sig, Sector.between(d, V.dir_plus, V.include_left, False)).element
            right = sector_product(sig, Sector.between(V.dir_minus, d, True, V.include_right)).element
            bad += multiply(left, right) != A.element
    rep.certificates.append(Certificate("split_consistent", bad == 0, float(bad), {"rays": len(inside)}))


def stab_factorize(cfg: JobConfig, rep: Report):
    from .lie import product
    from .stability import factorize, sector_product

    check_params(cfg, {"file", "sector", "ray"})
    sig = _stab_data(cfg)
    V = parse_sector(_need(cfg, "sector"))
    l = parse_direction(_need(cfg, "ray"))
    A = sector_product(sig, V)
    parts = factorize(A, l, sig.Z)
    rep.results["factors"] = {name: _field_json(g) for name, g in zip(("left", "ray", "right"), parts)}
    rep.certificates.append(Certificate("product_matches", product(list(parts)) == A.element))


def stab_transport(cfg: JobConfig, rep: Report):
    from .lattice import CentralCharge, QuadraticForm
    from .stability import transport_charge

    check_params(cfg, {"file", "path", "sector"})
    sig = _stab_data(cfg)
    pdoc = jsonio.load(_need(cfg, "path"))
    steps = pdoc.get("path")
    if not isinstance(steps, list) or not steps:
        raise SchemaError("path file needs a non-empty 'path' list of charges", "path")
    path = [CentralCharge([QQi.coerce(v) if isinstance(v[0], str) else complex(*v) for v in Z]) for Z in steps]
    if "cover" in pdoc:
        cover = [parse_sector(s) for s in pdoc["cover"]]
    else:
        cover = [parse_sector(_need(cfg, "sector"))]
    Qf = QuadraticForm(pdoc["Q"]) if "Q" in pdoc else None
    res = transport_charge(sig, cover, path, Qf)
    rep.results["data"] = res.data.to_json()
    rep.results["steps"] = res.steps
    if res.certificate is not None:
        rep.certificates.append(Certificate("support_property", res.certificate.passed, None,
                                            {"bad_support": res.certificate.bad_support,
                                             "kernel_negative": res.certificate.kernel_negative}))


def stab_growth(cfg: JobConfig, rep: Report):
    from .lie import TruncationContext
    from .stability import estimate_growth, planted_element, rays_from_data

    check_params(cfg, {"file", "planted", "norm", "tolerance"})
    norm = cfg.params.get("norm", "l1")
    tol = float(cfg.params.get("tolerance", 0.1))
    if "planted" in cfg.params:
        r = Q(str(cfg.params["planted"]))
        g = planted_element((1, 0), (0, 1), r, TruncationContext.orthant(2, cfg.truncation.N))
        gr = estimate_growth(g, norm, tol)
        rep.results["planted"] = {"r": str(r), "log_r": math.log(float(r)), "growth": gr.to_json()}
        err = abs(gr.slope - math.log(float(r))) / max(abs(math.log(float(r))), 1e-300)
        rep.certificates.append(Certificate("planted_slope", err < 0.05, err))
        return
    sig = _stab_data(cfg)
    out = []
    for ray in rays_from_data(sig):
        gr = estimate_growth(ray.element, norm, tol)
        out.append({"direction": [str(ray.direction.re), str(ray.direction.im)]
                    if isinstance(ray.direction, QQi) else ray.direction, "growth": gr.to_json()})
        rep.certificates.append(Certificate(f"consistent[{len(out) - 1}]", gr.consistent, gr.slope))
    rep.results["rays"] = out


# ---------------------------------------------------------------- covers


def _system(doc):
    from .cover import CyclicProductSystem, UnipotentSystem

    spec = doc.get("system")
    if not isinstance(spec, dict) or "kind" not in spec:
        raise SchemaError("cover input needs a 'system' object with a 'kind'", "system")
    kind = spec["kind"]
    if kind == "cyclic":
        return CyclicProductSystem(spec["orders"])
    if kind == "unipotent":
        if "assign" in spec:
            return UnipotentSystem(int(spec["m"]), int(spec["p"]), int(spec["k"]),
                                   {tuple(a["root"]): int(a["slot"]) for a in spec["assign"]})
        z = [parse_complex(v) for v in spec["charges"]]
        return UnipotentSystem.from_charges(int(spec["m"]), int(spec["p"]), int(spec["k"]), z)
    raise SchemaError(f"unknown system kind {kind!r}", "system.kind")


def _cover(doc):
    from .cover import CombCyclicCover, CoverError

    c = doc.get("cover")
    if c is None:
        raise SchemaError("input needs a 'cover'", "cover")
    if isinstance(c, list):
        k = int(doc.get("k", doc.get("system", {}).get("k", 0)) or 0)
        c = {"k": k, "intervals": c}
    try:
        return CombCyclicCover.from_json(c)
    except CoverError:
        raise
    except (KeyError, TypeError, ValueError):
        raise SchemaError("cover must be {k, intervals: [{first_hole, length}, ...]}", "cover") from None


def cover_validate(cfg: JobConfig, rep: Report):
    from .cover import Interval, validate_cover

    check_params(cfg, {"file"})
    doc = _load(cfg)
    c = doc.get("cover", doc)
    k = int(c["k"])
    ivs = [Interval(int(x["first_hole"]), int(x["length"]), k) for x in c["intervals"]]
    ok, why = validate_cover(ivs, k)
    rep.results["reason"] = why
    rep.certificates.append(Certificate("valid", ok, None, {"reason": why}))


def cover_min(cfg: JobConfig, rep: Report):
    from .cover import min_subcover

    check_params(cfg, {"file"})
    doc = _load(cfg)
    kap = _cover(doc if "cover" in doc else {"cover": doc})
    J = min_subcover(kap)
    rep.results["min_subcover"] = J.to_json()
    rep.certificates.append(Certificate("disjoint_inside", J.is_disjoint
                                        and all(kap[s].contains(J[s]) for s in range(len(kap)))))


def cover_canon(cfg: JobConfig, rep: Report):
    from .cover import canonicalize, phi, same_tuple

    check_params(cfg, {"file"})
    doc = _load(cfg)
    system, kap = _system(doc), _cover(doc)
    x = [system.decode(v) for v in _need_doc(doc, "element")]
    g = canonicalize(system, kap, x)
    rep.results["canonical"] = [system.encode(v) for v in g]
    back = canonicalize(system, kap, phi(system, kap, g))
    rep.certificates.append(Certificate("roundtrip", same_tuple(system, back, g)))


def _need_doc(doc, key):
    if key not in doc:
        raise SchemaError(f"input needs '{key}'", key)
    return doc[key]


def cover_rewrite(cfg: JobConfig, rep: Report):
    from .cover import CombCyclicCover, _replay, canonicalize, check_element, rewrite_plan, same_tuple

    check_params(cfg, {"file", "trace"})
    doc = _load(cfg)
    system, kap = _system(doc), _cover(doc)
    x = [system.decode(v) for v in _need_doc(doc, "element")]
    check_element(system, kap, x)
    target = canonicalize(system, kap, x)
    xs = list(x)
    trace, bad = [], 0
    for e in rewrite_plan(kap):
        xs = _replay(system, e, xs)
        now = canonicalize(system, CombCyclicCover(e.after), xs, check=False)
        bad += not same_tuple(system, now, target)
        if cfg.params.get("trace"):
            trace.append({**e.to_json(), "element": [system.encode(v) for v in xs]})
    rep.results["final_cover"] = [I.to_json() for I in (CombCyclicCover(rewrite_plan(kap)[-1].after)
                                                       if rewrite_plan(kap) else kap).intervals]
    rep.results["final_element"] = [system.encode(v) for v in xs]
    rep.results["steps"] = len(rewrite_plan(kap))
    if cfg.params.get("trace"):
        rep.results["trace"] = trace
    rep.certificates.append(Certificate("steps_preserve_canonical", bad == 0, float(bad)))


# ---------------------------------------------------------------- connections


def _connection(cfg):
    from .hlt import AlmostStandardConnection

    doc = _load(cfg)
    try:
        return AlmostStandardConnection.from_json(doc.get("connection", doc))
    except KeyError as e:
        raise SchemaError(f"connection JSON is missing {e}", str(e).strip("'")) from None
    except (TypeError, ValueError) as e:
        raise SchemaError(f"malformed connection: {e}", "connection") from None


def hlt_invariants(cfg: JobConfig, rep: Report):
    from .hlt import connection_invariants

    check_params(cfg, {"file"})
    inv = connection_invariants(_connection(cfg))
    rep.results["invariants"] = inv.to_json()
    rep.results["vanish"] = inv.vanish
    rep.certificates.append(Certificate("alpha_closed", inv.closed))


def hlt_flat(cfg: JobConfig, rep: Report):
    from .hlt import flatness_check

    check_params(cfg, {"file"})
    fr = flatness_check(_connection(cfg))
    rep.results["flatness"] = fr.to_json()
    rep.certificates.append(Certificate("flat", fr.flat, fr.max_residual))


def hlt_normalize_verb(cfg: JobConfig, rep: Report):
    from .hlt import hlt_normalize

    check_params(cfg, {"file", "method", "Z0"})
    Z0 = [parse_complex(z) for z in cfg.params["Z0"]] if "Z0" in cfg.params else None
    h, cert = hlt_normalize(_connection(cfg), cfg.params.get("method", "s0"), True, Z0)
    rep.results["gauge"] = h.to_json()
    rep.results["certificate"] = cert.to_json()
    rep.certificates.append(Certificate("standard_after_gauge", cert.passed))


# ---------------------------------------------------------------- resurgence


def res_thimble(cfg: JobConfig, rep: Report):
    from .resurgence import critical_points, saddle_expansion, thimble_integral

    check_params(cfg, {"poly", "t", "index", "csv", "series"})
    f = _need(cfg, "poly")
    ts = parse_ts(_need(cfg, "t"))
    idx = cfg.params.get("index")
    cps = critical_points(f)
    which = range(len(cps)) if idx is None else [int(idx)]
    rows, out = [], []
    tol = cfg.precision.tol
    for j in which:
        S = saddle_expansion(f, j, cfg.precision.K) if cfg.params.get("series", True) else None
        for t in ts:
            r = thimble_integral(f, j, t, tol=tol)
            entry = {"index": j, "t": t, "value": r.value, "modified": r.mod, "error": r.error}
            if S is not None:
                ser = S(t, S.optimal_terms(t))
                entry["series"] = ser
                entry["series_gap"] = abs(ser - r.mod) / abs(ser) if ser else None
            out.append(entry)
            rows.append([j, t.real, t.imag, r.mod.real, r.mod.imag, r.error])
            rep.certificates.append(Certificate(f"quadrature[{j},{len(out) - 1}]",
                                                r.error <= max(tol, 1e-13) * max(1.0, abs(r.mod)), r.error))
    rep.results["critical_points"] = [{"x": p.xc, "z": p.zc, "hessian": complex(p.hessian)} for p in cps]
    rep.results["integrals"] = out
    if cfg.params.get("csv"):
        _write_csv(cfg.params["csv"], ["index", "t_re", "t_im", "mod_re", "mod_im", "error"], rows)


def res_psi(cfg: JobConfig, rep: Report):
    from .resurgence import StokesData, psi_series

    check_params(cfg, {"stokes", "t", "radius", "csv"})
    sd = StokesData.from_json(jsonio.load(_need(cfg, "stokes")))
    R = float(cfg.params.get("radius", 1.0))
    depth = cfg.precision.depth
    out, rows = [], []
    for t in parse_ts(_need(cfg, "t")):
        r = psi_series(sd, t, R, depth)
        out.append(r.to_json())
        under = all(size <= b for size, b in zip(r.terms, r.bounds))
        rep.certificates.append(Certificate(f"bounded[{len(out) - 1}]", under,
                                            max((s / b for s, b in zip(r.terms, r.bounds) if b), default=0.0)))
        rep.certificates.append(Certificate(f"quadrature[{len(out) - 1}]", r.quad_error <= max(cfg.precision.tol, 1e-13)
                                            * max(1.0, float(np.max(np.abs(r.matrix)))), r.quad_error))
        rows += [[t.real, t.imag, s + 1, size, b] for s, (size, b) in enumerate(zip(r.terms, r.bounds))]
    rep.results["psi"] = out
    if cfg.params.get("csv"):
        _write_csv(cfg.params["csv"], ["t_re", "t_im", "depth", "size", "bound"], rows)


def res_borel(cfg: JobConfig, rep: Report):
    from .resurgence import TSeries, borel, saddle_expansion

    check_params(cfg, {"series", "poly", "index", "rel"})
    if "series" in cfg.params:
        doc = jsonio.load(cfg.params["series"])
        S = TSeries.from_json(doc.get("series", doc))
    else:
        S = saddle_expansion(_need(cfg, "poly"), int(cfg.params.get("index", 0)), cfg.precision.K)
    B = borel(S, rel=float(cfg.params.get("rel", 0.02)))
    rep.results["borel"] = B.to_json()
    near = B.nearest()
    rep.results["nearest"] = near.to_json() if near else None


def _ev_data(cfg):
    from .resurgence import EVData

    if "file" in cfg.params:
        doc = jsonio.load(cfg.params["file"])
        return EVData.from_json(doc.get("data", doc))
    return EVData([parse_complex(x) for x in cfg.params.get("a_plus", [])],
                  [parse_complex(x) for x in cfg.params.get("a_minus", [])])


def res_ev_solve(cfg: JobConfig, rep: Report):
    from .resurgence import ev_formal, ev_solve

    check_params(cfg, {"file", "a_plus", "a_minus", "delta", "N"})
    d = _ev_data(cfg)
    delta = float(cfg.params.get("delta", 0.5))
    tol = min(cfg.precision.tol, 1e-12)
    sol = ev_solve(d, delta, tol=tol)
    F = ev_formal(d, sol, N=int(cfg.params.get("N", 20)))
    rep.results["solution"] = sol.to_json()
    rep.results["formal"] = F.to_json()
    rep.certificates.append(Certificate("converged", sol.residual <= tol, sol.residual))
    if F.growth is not None:
        rep.certificates.append(Certificate("gevrey_growth", F.growth.bounded, F.growth.A))


def res_ev_check(cfg: JobConfig, rep: Report):
    from .resurgence import conjugate_germ, ev_normal_form_check, recover_normalizing

    check_params(cfg, {"file", "c", "g", "N"})
    doc = jsonio.load(cfg.params["file"]) if "file" in cfg.params else {}
    N = int(cfg.params.get("N", doc.get("N", cfg.truncation.N)))
    c = cfg.params.get("c", doc.get("c"))
    g = cfg.params.get("g", doc.get("g"))
    if c is None and g is None:
        raise SchemaError("ev check needs 'c' (normalizer coefficients) and/or 'g' (germ)", "params.c")
    if g is None:
        g = conjugate_germ(c, N + 3)
        rep.results["germ"] = [str(x) for x in g]
    if c is None:
        rec = recover_normalizing(g, N)
        c = rec.c
        rep.results["recovered"] = {"c": [str(x) for x in rec.c], "invariant_defect": str(rec.invariant_defect)}
    nf = ev_normal_form_check(c, g, N)
    rep.results["normal_form"] = nf.to_json()
    rep.certificates.append(Certificate("normal_form", nf.passed, None, nf.to_json()))


# ---------------------------------------------------------------- top level


def pentagon_verb(cfg: JobConfig, rep: Report):
    from .repro import pentagon

    check_params(cfg, set())
    r = pentagon(order=cfg.truncation.N)
    rep.results.update(r.results)
    rep.certificates += [c for c in r.certificates if c.name != "runtime"]


def repro_verb(cfg: JobConfig, rep: Report, echo=None):
    from .repro import SUITES, run

    check_params(cfg, {"suites"})
    names = cfg.params.get("suites", ["all"])
    if isinstance(names, str):
        names = [names]
    if names != ["all"]:
        for n in names:
            if n not in SUITES:
                raise SchemaError(f"unknown suite {n!r}; choose from {', '.join(SUITES)} or all", "params.suites")
    reports = run(names if names != ["all"] else None, seed=cfg.seed, echo=echo)
    rep.results["suites"] = {r.name: r.to_json() for r in reports}
    for r in reports:
        for c in r.certificates:
            rep.certificates.append(Certificate(f"{r.name}.{c.name}", c.passed, c.residual, c.detail))
        rep.timing[r.name] = r.seconds


VERBS = {
    "pentagon": pentagon_verb,
    "stab.rays": stab_rays,
    "stab.product": stab_product,
    "stab.factorize": stab_factorize,
    "stab.transport": stab_transport,
    "stab.growth": stab_growth,
    "cover.validate": cover_validate,
    "cover.min": cover_min,
    "cover.canon": cover_canon,
    "cover.rewrite": cover_rewrite,
    "hlt.invariants": hlt_invariants,
    "hlt.flat": hlt_flat,
    "hlt.normalize": hlt_normalize_verb,
    "res.thimble": res_thimble,
    "res.psi": res_psi,
    "res.borel": res_borel,
    "res.ev.solve": res_ev_solve,
    "res.ev.check": res_ev_check,
    "repro": repro_verb,
}


def _inputs_digest(cfg: JobConfig) -> str:
    docs = {}
    for key in ("file", "path", "stokes", "series"):
        v = cfg.params.get(key)
        if isinstance(v, str) and Path(v).exists():
            docs[key] = Path(v).read_text()
    return jsonio.digest({"config": {**cfg.to_json(), "out": None}, "inputs": docs})


def dispatch(cfg: JobConfig, echo=None) -> Report:
    """Run one verb.  Schema problems raise SchemaError; module errors propagate unchanged.

    `echo` receives one progress line per suite for the repro verb.
    """
    if cfg.verb not in VERBS:
        raise SchemaError(f"unknown verb {cfg.verb!r}", "verb")
    cfg.validate()
    rep = Report(cfg.verb, cfg.to_json(), _inputs_digest(cfg))
    t0 = time.perf_counter()
    if cfg.verb == "repro":
        repro_verb(cfg, rep, echo)
    else:
        VERBS[cfg.verb](cfg, rep)
    rep.timing["total_s"] = time.perf_counter() - t0
    return rep
