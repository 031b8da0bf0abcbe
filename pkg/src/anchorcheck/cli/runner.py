"""Task execution and report rendering."""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .. import __version__
from .. import anchor as anc
from .. import conslaw as cl
from .. import odeanchor as ode
from ..jetcore import JetPolynomial
from .loader import LoadedFile, TaskSpec, phase_polynomial
from .syntax import TupleExpr, print_expr

CAP_ENV = "ANCHORCHECK_CAP"
DEGCAP_ENV = "ANCHORCHECK_DEGCAP"
WITNESS_LIMIT = 400


@dataclass
class TaskResult:
    task: str
    verdict: str
    residual_size: int = 0
    time_ms: float | None = None
    caps: dict = field(default_factory=dict)
    residual_lead: str | None = None
    witness: str | None = None
    message: str | None = None


@dataclass
class Report:
    file: str
    results: list

    @property
    def exit_code(self) -> int:
        verdicts = {r.verdict for r in self.results}
        if "fail" in verdicts or "error" in verdicts:
            return 1
        if "undecided" in verdicts:
            return 2
        return 0


def env_caps(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    out = {}
    for key, var in (("cap", CAP_ENV), ("degcap", DEGCAP_ENV)):
        raw = environ.get(var)
        if raw:
            try:
                out[key] = int(raw)
            except ValueError:
                raise ValueError(f"{var} must be an integer, got {raw!r}") from None
    return out


def _shorten(text: str) -> str:
    return text if len(text) <= WITNESS_LIMIT else text[: WITNESS_LIMIT - 3] + "..."


def _summarize(mapping) -> str | None:
    if mapping is None:
        return None
    if isinstance(mapping, anc.Characteristic):
        mapping = mapping.values
    parts = [f"{k}: {v}" for k, v in sorted(mapping.items(), key=lambda kv: repr(kv[0]))
             if not (isinstance(v, JetPolynomial) and v.is_zero())]
    return _shorten("; ".join(parts)) if parts else "0"


def _from_verdict(v: anc.Verdict, witness=None) -> dict:
    caps = {k: v.details[k] for k in ("cap", "degcap") if v.details.get(k) is not None}
    out = {
        "verdict": v.status,
        "residual_size": v.residual_size(),
        "residual_lead": v.leading_residual(),
        "caps": caps,
        "witness": witness,
    }
    if v.status == "undecided":
        out["message"] = f"undecided at cap={caps.get('cap')} degcap={caps.get('degcap')}; raise cap= or degcap="
    elif v.status == "error":
        out["message"] = v.details.get("message")
    return out


# -- task implementations ------------------------------------------------------------


def _check_anchor(args, opts):
    system, anchor = args
    v = anc.check_anchor_condition(system, anchor, opts.get("cap"), opts.get("degcap"), opts.get("method", "auto"))
    out = _from_verdict(v, _summarize(v.witness) if v.passed else None)
    paths = v.details.get("paths")
    if paths:
        out["message"] = (out.get("message") + "; " if out.get("message") else "") + \
            "paths: " + ", ".join(f"{k}={s}" for k, s in sorted(paths.items()))
    return out


def _check_integrability(args, opts):
    system, anchor = args
    return _from_verdict(anc.check_strong_integrability(anchor, system))


def _check_conservation(args, opts):
    j, psi, system = args
    return _from_verdict(cl.check_conservation(j, psi, system))


def _extract(args, opts):
    j, system = args
    try:
        pair = cl.extract_characteristic(j, system, opts.get("cap"), opts.get("degcap"))
    except cl.NotConserved as err:
        nf = err.normal_form
        lead = anc.Verdict("fail", residual=nf).leading_residual() if nf is not None else None
        undecided = "undecided" in str(err)
        return {
            "verdict": "undecided" if undecided else "fail",
            "residual_size": len(nf) if nf is not None else 0,
            "residual_lead": lead,
            "message": str(err) + ("; raise cap= or degcap=" if undecided else ""),
        }
    return {"verdict": "pass", "witness": _summarize(pair.psi)}


def _roundtrip(args, opts):
    j, psi, system = args
    got = cl.extract_characteristic(j, system, opts.get("cap"), opts.get("degcap")).psi
    diff = got - psi
    residual = {a: p for a, p in diff.values.items() if not p.is_zero()}
    v = anc.Verdict("pass" if not residual else "fail", residual=residual or None)
    return _from_verdict(v, _summarize(got))


def _check_symmetry(args, opts):
    system, ev = args
    return _from_verdict(anc.check_symmetry(system, ev, opts.get("cap"), opts.get("degcap")))


def _check_noether(args, opts):
    system, anchor, psi = args
    ev = anc.anchor_map(anchor, psi, system)
    v = anc.check_symmetry(system, ev, opts.get("cap"), opts.get("degcap"))
    return _from_verdict(v, _summarize({str(k): p for k, p in ev.characteristics.items()}) if v.passed else None)


def _check_homomorphism(args, opts):
    system, anchor, p1, p2 = args
    v = anc.check_homomorphism(anchor, p1, p2, system, opts.get("cap"))
    bracket = anc.characteristic_bracket(anchor, p1, p2, system)
    return _from_verdict(v, _summarize(bracket))


def _currents_equivalent(args, opts):
    j1, j2, system = args
    same = cl.currents_equivalent(j1, j2, system)
    return {"verdict": "pass" if same else "fail",
            "message": "decided by comparing extracted characteristics; relies on the current/characteristic bijection",
            "residual_size": 0 if same else 1}


def _check_f_invariance(args, opts):
    o, b = args
    v = ode.check_f_invariance(o, b)
    out = _from_verdict(v)
    if v.details.get("entry"):
        out["message"] = f"first offending entry {v.details['entry']}"
    return out


def _check_jacobi(args, opts):
    (b,) = args
    v = ode.check_jacobi(b)
    out = _from_verdict(v)
    if v.details.get("triple"):
        out["message"] = f"first offending triple {v.details['triple']}"
    return out


def _ode_bracket(args, opts):
    b, xi1, xi2 = args
    got = ode.ode_bracket(b, xi1, xi2)
    witness = "(" + ", ".join(str(p) for p in got) + ")"
    expect = opts.get("expect")
    if expect is None:
        return {"verdict": "pass", "witness": witness}
    if not isinstance(expect, TupleExpr) or len(expect.items) != len(got):
        raise ValueError("expect= must be a tuple matching the dimension")
    want = [phase_polynomial(x) for x in expect.items]
    residual = {str(k + 1): g - w for k, (g, w) in enumerate(zip(got, want)) if g != w}
    return _from_verdict(anc.Verdict("fail" if residual else "pass", residual=residual or None), witness)


TASKS = {
    "check_anchor": _check_anchor,
    "check_integrability": _check_integrability,
    "check_conservation": _check_conservation,
    "extract_characteristic": _extract,
    "check_roundtrip": _roundtrip,
    "check_symmetry": _check_symmetry,
    "check_noether": _check_noether,
    "check_homomorphism": _check_homomorphism,
    "currents_equivalent": _currents_equivalent,
    "check_f_invariance": _check_f_invariance,
    "check_jacobi": _check_jacobi,
    "ode_bracket": _ode_bracket,
}
CAPPED = {"check_anchor", "extract_characteristic", "check_roundtrip", "check_symmetry", "check_noether",
          "check_homomorphism"}


def run_task(spec: TaskSpec, defaults: dict) -> TaskResult:
    start = time.perf_counter()
    opts = dict(spec.options)
    if spec.call.name in CAPPED:
        for k, v in defaults.items():
            opts.setdefault(k, v)
    try:
        if spec.deferred_error is not None:
            raise spec.deferred_error
        out = TASKS[spec.call.name](spec.args, opts)
    except Exception as err:  # noqa: BLE001 - captured per task
        out = {"verdict": "error", "message": f"{type(err).__name__}: {err}"}
    elapsed = (time.perf_counter() - start) * 1000
    caps = dict(out.get("caps") or {})
    for k in ("cap", "degcap"):
        if k not in caps and opts.get(k) is not None:
            caps[k] = opts[k]
    return TaskResult(
        task=spec.name,
        verdict=out["verdict"],
        residual_size=out.get("residual_size", 0),
        time_ms=round(elapsed, 3),
        caps=caps,
        residual_lead=out.get("residual_lead"),
        witness=out.get("witness"),
        message=out.get("message"),
    )


def run(loaded: LoadedFile, file: str = "<input>", jobs: int = 1, defaults: dict | None = None) -> Report:
    """Run every task; results keep file order whatever the parallelism."""
    defaults = env_caps() if defaults is None else defaults
    tasks = loaded.tasks
    if jobs > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda t: run_task(t, defaults), tasks))
    else:
        results = [run_task(t, defaults) for t in tasks]
    return Report(file, results)


# -- rendering -------------------------------------------------------------------


RECORD_KEYS = ("task", "verdict", "residual_size", "time_ms", "caps", "residual_lead", "witness", "message")


def _record(r: TaskResult, timing: bool) -> dict:
    rec = {
        "task": r.task,
        "verdict": r.verdict,
        "residual_size": r.residual_size,
        "time_ms": r.time_ms if timing else None,
        "caps": {k: r.caps[k] for k in sorted(r.caps)},
        "residual_lead": r.residual_lead,
        "witness": r.witness,
        "message": r.message,
    }
    return {k: rec[k] for k in RECORD_KEYS}


def emit_structured(report: Report, timing: bool = True) -> str:
    header = {"report": "anchorcheck", "version": __version__, "file": report.file, "tasks": len(report.results)}
    lines = [json.dumps(header, ensure_ascii=False)]
    lines += [json.dumps(_record(r, timing), ensure_ascii=False) for r in report.results]
    return "\n".join(lines) + "\n"


def emit_human(report: Report, timing: bool = True) -> str:
    out = [f"anchorcheck {__version__}: {report.file} ({len(report.results)} task(s))"]
    if not report.results:
        return out[0] + "\n"
    rows = []
    for r in report.results:
        caps = " ".join(f"{k}={r.caps[k]}" for k in sorted(r.caps)) or "-"
        t = f"{r.time_ms:.1f}" if timing and r.time_ms is not None else "-"
        rows.append((r.task, r.verdict, str(r.residual_size), t, caps))
    head = ("task", "verdict", "residual", "ms", "caps")
    widths = [max(len(x[i]) for x in rows + [head]) for i in range(len(head))]
    fmt = lambda row: "  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip()  # noqa: E731
    out.append(fmt(head))
    out.append(fmt(tuple("-" * w for w in widths)))
    for r, row in zip(report.results, rows):
        out.append(fmt(row))
        if r.residual_lead:
            out.append(f"    leading residual: {r.residual_lead}")
        if r.witness and r.verdict == "pass":
            out.append(f"    witness: {r.witness}")
        if r.message:
            out.append(f"    note: {r.message}")
    counts = {}
    for r in report.results:
        counts[r.verdict] = counts.get(r.verdict, 0) + 1
    out.append("summary: " + ", ".join(f"{counts[k]} {k}" for k in ("pass", "fail", "undecided", "error") if k in counts))
    return "\n".join(out) + "\n"


def emit(report: Report, fmt: str = "human", timing: bool = True) -> str:
    if fmt == "structured":
        return emit_structured(report, timing)
    if fmt == "human":
        return emit_human(report, timing)
    raise ValueError(f"unknown format {fmt!r}")
