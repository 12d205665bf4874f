"""Command-line front end.

Commands (``gridadmit <command> --case case.yaml [options]``):

``derive``    write one source's admittance file
``assemble``  power flow, total admittance file, Ybus CSV
``eigs``      det-root eigen report (exit 3 if unstable)
``rma``       modal-impedance sweep and peak table
``sigma``     singular-value sweep
``nyquist``   generalized Nyquist test for one source against the rest
``trace``     eigen reports over a parameter sweep
``era``       identify a 2x2 admittance from two step-event CSVs

Exit codes: 0 stable / success, 3 unstable verdict, 1 usage or schema
error (including frame and operating-point mismatches), 2 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import __version__
from .components import (DfigParams, GeneratorParams, OperatingPoint, TorsionalParams, VscParams,
                         dfig_static_admittance, gen_classical_admittance,
                         torsional_gen_admittance, vsc_admittance)
from .era import admittance_from_steps, load_event, preprocess
from .frames import OMEGA0, AdmittanceBlock, FrameTag, rotate_admittance, static_to_dq
from .network import (Branch, Bus, FrameMismatchError, Load, NetworkCase,
                      OperatingPointMismatchError, PowerFlowError, PowerFlowResult, Source,
                      assemble_total, build_ybus, power_flow, schur_complement)
from .poly_tf import DegreeCapError, PoleHitError, Polynomial, RationalFunction, TFMatrix
from .stability import (TOL_RHP, eigs_from_admittance, frequency_grid, det_metric,
                        mode_trace, nyquist_loci, rma_sweep, sigma_sweep)
from .statespace import EquilibriumError

log = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_UNSTABLE = 0, 1, 2, 3


class CaseError(ValueError):
    """Schema violation in a case file (message carries section/line)."""


# ---------------------------------------------------------------------------
# Admittance files
# ---------------------------------------------------------------------------


def _fmt_coeff(c: complex, as_complex: bool) -> str:
    if not as_complex:
        return repr(float(np.real(c)))
    re, im = float(np.real(c)), float(np.imag(c))
    ims = repr(im)
    return f"{re!r}{'' if ims.startswith('-') else '+'}{ims}j"


def _parse_coeff(tok: str) -> complex:
    try:
        return float(tok)
    except ValueError:
        return complex(tok)


def format_admittance(Y: TFMatrix) -> str:
    """Text form: ``rows=``, ``cols=``, ``var=s``, then ``num:``/``den:`` per
    entry (row-major, ascending coefficients, full precision)."""
    r, c = Y.shape
    cplx = Y.is_complex
    lines = [f"rows={r}", f"cols={c}", "var=s"]
    for i in range(r):
        for j in range(c):
            x = Y[i, j]
            lines.append("num: " + " ".join(_fmt_coeff(v, cplx) for v in x.num.coeffs))
            lines.append("den: " + " ".join(_fmt_coeff(v, cplx) for v in x.den.coeffs))
    return "\n".join(lines) + "\n"


def parse_admittance(text: str, source: str = "<string>") -> TFMatrix:
    """Inverse of :func:`format_admittance`."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    try:
        head = dict(ln.split("=", 1) for ln in lines[:3])
        r, c = int(head["rows"]), int(head["cols"])
        if head.get("var") != "s":
            raise ValueError("var must be s")
    except (KeyError, ValueError) as exc:
        raise CaseError(f"{source}: bad admittance header ({exc})") from None
    body = lines[3:]
    if len(body) != 2 * r * c:
        raise CaseError(f"{source}: expected {2 * r * c} num/den lines, found {len(body)}")
    entries = []
    k = 0
    for i in range(r):
        row = []
        for j in range(c):
            nl, dl = body[k], body[k + 1]
            if not (nl.startswith("num:") and dl.startswith("den:")):
                raise CaseError(f"{source}: entry ({i},{j}) must be a num:/den: pair")
            num = [_parse_coeff(t) for t in nl[4:].split()]
            den = [_parse_coeff(t) for t in dl[4:].split()]
            row.append(RationalFunction(Polynomial(num), Polynomial(den)))
            k += 2
        entries.append(row)
    return TFMatrix(entries)


def write_admittance(path: str | Path, Y: TFMatrix) -> None:
    Path(path).write_text(format_admittance(Y))


def read_admittance(path: str | Path) -> TFMatrix:
    return parse_admittance(Path(path).read_text(), str(path))


# ---------------------------------------------------------------------------
# Case files
# ---------------------------------------------------------------------------


class _LineDict(dict):
    line: int = 0


class _LineLoader(yaml.SafeLoader):
    pass


def _construct_mapping(loader, node):
    d = _LineDict(loader.construct_mapping(node, deep=True))
    d.line = node.start_mark.line + 1
    return d


_LineLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)

#: Decimal digits kept when snapping a local operating point (PF tol is 1e-10).
OP_SNAP_DIGITS = 12

SCHEMA = {
    "top": {"system", "buses", "branches", "loads", "sources", "analysis"},
    "system": {"omega0", "f0", "base_mva", "name"},
    "bus": {"id", "V", "angle_deg", "slack", "type"},
    "branch": {"from", "to", "R", "X", "B", "comp", "circuits"},
    "load": {"bus", "P", "Q"},
    "source": {"id", "bus", "kind", "P", "V", "mva", "params", "calibration", "file"},
    "calibration": {"P", "Q", "V", "theta_deg"},
    "analysis": {"mode", "grid", "frame", "nyquist", "trace", "tol_rhp"},
    "trace": {"target", "param", "values"},
    "nyquist": {"source"},
}
REQUIRED_PARAMS = {
    "generator": {"H", "D1", "Xg"},
    "torsional-generator": {"H", "D", "K", "Xg"},
    "dfig": {"rs", "Xls", "rr", "Xlr"},
    "vsc-reference": set(),
    "measured-admittance-file": set(),
}
PARAMS = {
    "generator": {"H", "D1", "Xg", "E"},
    "torsional-generator": {"H", "D", "K", "Xg", "gen_index"},
    "dfig": {"rs", "Xls", "rr", "Xlr", "omega_m"},
    "vsc-reference": {"RL", "XL", "Kpi", "Kii", "Kpo", "Kio", "Kp_pll", "Ki_pll", "tau"},
    "measured-admittance-file": set(),
}


def _check_keys(d: Any, allowed: set, where: str) -> None:
    if not isinstance(d, dict):
        raise CaseError(f"{where}: expected a mapping")
    bad = sorted(set(d) - allowed)
    if bad:
        line = getattr(d, "line", "?")
        raise CaseError(f"{where} (line {line}): unknown key(s) {bad}; allowed {sorted(allowed)}")


def _req(d: dict, key: str, where: str):
    if key not in d:
        raise CaseError(f"{where} (line {getattr(d, 'line', '?')}): missing required key {key!r}")
    return d[key]


def load_case(path: str | Path) -> tuple[NetworkCase, dict, Path]:
    """Parse and validate a YAML case file.

    Returns the network case, the ``analysis`` section and the case
    directory (for resolving relative file references).
    """
    path = Path(path)
    try:
        doc = yaml.load(path.read_text(), Loader=_LineLoader)
    except yaml.YAMLError as exc:
        raise CaseError(f"{path}: YAML error: {exc}") from None
    return case_from_dict(doc, str(path)) + (path.parent,)


def case_from_dict(doc: dict, where: str = "case") -> tuple[NetworkCase, dict]:
    """Build a :class:`NetworkCase` from a parsed case document."""
    try:
        return _case_from_dict(doc, where)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, CaseError):
            raise
        raise CaseError(f"{where}: invalid value: {exc}") from None


def _case_from_dict(doc: dict, where: str) -> tuple[NetworkCase, dict]:
    _check_keys(doc, SCHEMA["top"], where)
    sysd = doc.get("system", {}) or {}
    _check_keys(sysd, SCHEMA["system"], f"{where}: system")
    if "omega0" in sysd and "f0" in sysd:
        raise CaseError(f"{where}: system: give omega0 or f0, not both")
    omega0 = float(sysd["omega0"]) if "omega0" in sysd else \
        2 * np.pi * float(sysd["f0"]) if "f0" in sysd else OMEGA0
    base = float(sysd.get("base_mva", 100.0))
    buses = []
    for k, b in enumerate(_req(doc, "buses", where)):
        w = f"{where}: buses[{k}]"
        _check_keys(b, SCHEMA["bus"], w)
        if b.get("type", "passive") not in ("source", "passive"):
            raise CaseError(f"{w}: type must be 'source' or 'passive'")
        buses.append(Bus(_req(b, "id", w), float(b.get("V", 1.0)),
                         np.deg2rad(float(b.get("angle_deg", 0.0))), bool(b.get("slack", False))))
    branches = []
    for k, br in enumerate(doc.get("branches", []) or []):
        w = f"{where}: branches[{k}]"
        _check_keys(br, SCHEMA["branch"], w)
        for _ in range(int(br.get("circuits", 1))):
            branches.append(Branch(_req(br, "from", w), _req(br, "to", w), float(br.get("R", 0.0)),
                                   float(_req(br, "X", w)), float(br.get("B", 0.0)),
                                   float(br.get("comp", 0.0))))
    loads = []
    for k, ld in enumerate(doc.get("loads", []) or []):
        w = f"{where}: loads[{k}]"
        _check_keys(ld, SCHEMA["load"], w)
        loads.append(Load(_req(ld, "bus", w), float(_req(ld, "P", w)), float(ld.get("Q", 0.0))))
    sources = []
    for k, sd in enumerate(doc.get("sources", []) or []):
        w = f"{where}: sources[{k}]"
        _check_keys(sd, SCHEMA["source"], w)
        kind = sd.get("kind", "generator")
        if kind not in PARAMS:
            raise CaseError(f"{w} (line {sd.line}): unknown kind {kind!r}; expected one of {sorted(PARAMS)}")
        params = dict(sd.get("params", {}) or {})
        _check_keys(sd.get("params", {}) or {}, PARAMS[kind], f"{w}: params")
        missing = sorted(REQUIRED_PARAMS[kind] - set(params))
        if missing:
            raise CaseError(f"{w} (line {sd.line}): {kind} source needs params {missing}")
        if "calibration" in sd:
            _check_keys(sd["calibration"], SCHEMA["calibration"], f"{w}: calibration")
            params["_calibration"] = dict(sd["calibration"])
        if kind == "measured-admittance-file":
            params["_file"] = _req(sd, "file", w)
        sources.append(Source(str(_req(sd, "id", w)), _req(sd, "bus", w), kind,
                              float(sd.get("P", 0.0)), float(sd.get("V", 1.0)), params,
                              float(sd["mva"]) if "mva" in sd else None))
    analysis = doc.get("analysis", {}) or {}
    _check_keys(analysis, SCHEMA["analysis"], f"{where}: analysis")
    if "trace" in analysis:
        _check_keys(analysis["trace"], SCHEMA["trace"], f"{where}: analysis.trace")
    if "nyquist" in analysis:
        _check_keys(analysis["nyquist"], SCHEMA["nyquist"], f"{where}: analysis.nyquist")
    case = NetworkCase(buses, branches, loads, sources, omega0, base)
    try:
        case.validate()
    except ValueError as exc:
        raise CaseError(f"{where}: {exc}") from None
    return case, dict(analysis)


def _source_op(src: Source, case: NetworkCase, pf: PowerFlowResult, Xg: float | None,
               ratio: float) -> OperatingPoint:
    """Terminal condition on the machine base: from the power flow unless a
    ``calibration`` block overrides it."""
    cal = src.params.get("_calibration")
    V = pf.voltage(src.bus)
    S = pf.source_S[src.id]
    if cal:
        Vm = float(cal.get("V", abs(V)))
        th = np.deg2rad(float(cal["theta_deg"])) if "theta_deg" in cal else float(np.angle(V))
        V = Vm * np.exp(1j * th)
        S = complex(float(cal.get("P", S.real)), float(cal.get("Q", S.imag)))
    S_m = S / ratio
    if Xg is not None:
        return OperatingPoint.from_dispatch(V, S_m, Xg)
    return OperatingPoint(V.real, V.imag, 0.0, 1.0, float(S_m.real), float(S_m.imag))


def _canonical_local(op: OperatingPoint) -> OperatingPoint:
    """Terminal-voltage-referenced operating point, snapped to a fixed grid.

    Digits below the power-flow tolerance carry no information, yet the
    finite-difference linearization turns last-bit differences into
    ~1e-10 Jacobian noise.  Snapping makes the local linearization (and so
    every eigenvalue) independent of the global reference angle.
    """
    loc = op.rotated(op.theta_v)
    def snap(x):
        return None if x is None else float(np.round(x, OP_SNAP_DIGITS)) + 0.0

    return OperatingPoint(snap(abs(op.V)), 0.0, snap(loc.delta), snap(loc.E), snap(loc.P), snap(loc.Q))


def source_block(src: Source, case: NetworkCase, pf: PowerFlowResult, frame: str = "system",
                 base_dir: Path | None = None) -> AdmittanceBlock:
    """Admittance block of one source at the solved operating point.

    With ``frame='local'`` the block is built with the terminal voltage as
    the d-axis reference and tagged ``local`` (assembly will reject it).
    """
    w0 = case.omega0
    ratio = (src.mva / case.base_mva) if src.mva else 1.0
    p = src.params
    Xg = float(p["Xg"]) if "Xg" in p else None
    op = _source_op(src, case, pf, Xg, ratio)
    tag = FrameTag.system()
    if frame == "local":
        tag = FrameTag.local(op.theta_v)
        op = op.rotated(op.theta_v)
    elif frame != "system":
        raise CaseError(f"frame must be 'system' or 'local', got {frame!r}")
    label = f"{src.kind}:{src.id}"
    if src.kind == "generator":
        gp = GeneratorParams(float(p["H"]), float(p["D1"]), Xg, p.get("E"), w0)
        blk = gen_classical_admittance(gp, op, src.bus, tag, ratio, label)
    elif src.kind == "torsional-generator":
        gp = GeneratorParams(1.0, 0.0, Xg, None, w0)
        tp = TorsionalParams(list(p["H"]), list(p["D"]), list(p["K"]), gp, int(p.get("gen_index", 0)))
        blk = torsional_gen_admittance(tp, op, src.bus, tag, ratio, label)
    elif src.kind == "dfig":
        yd = dfig_rational(src, case)
        blk = AdmittanceBlock(static_to_dq(yd, w0).scale(ratio), src.bus, tag, True, {}, label)
    elif src.kind == "vsc-reference":
        vp = VscParams(**{k: float(v) for k, v in p.items() if not k.startswith("_")}, omega0=w0)
        # Linearize with the d-axis on the terminal voltage and rotate the
        # result exactly; a global frame rotation then only changes T.
        th = op.theta_v
        blk = vsc_admittance(vp, _canonical_local(op), src.bus, label)
        blk = replace(blk, frame=FrameTag.local(tag.angle + th))
        if frame == "system":
            blk = rotate_admittance(blk, tag)
        opd = {k: (v * ratio if k in ("P", "Q") else v) for k, v in op.as_dict().items()}
        blk = replace(blk, Y=blk.Y.scale(ratio) if ratio != 1 else blk.Y, operating_point=opd)
    elif src.kind == "measured-admittance-file":
        fp = Path(p["_file"])
        if base_dir is not None and not fp.is_absolute():
            fp = base_dir / fp
        Y = read_admittance(fp)
        cal = p.get("_calibration") or {}
        opd = {k: float(v) for k, v in cal.items() if k in ("P", "Q", "V")}
        if "theta_deg" in cal:
            opd["theta"] = np.deg2rad(float(cal["theta_deg"]))
        blk = AdmittanceBlock(Y.scale(ratio) if ratio != 1 else Y, src.bus, tag, True, opd, label)
    else:  # pragma: no cover - guarded by the schema
        raise CaseError(f"unknown source kind {src.kind!r}")
    return blk


def dfig_rational(src: Source, case: NetworkCase) -> RationalFunction:
    """Static-frame DFIG admittance of a ``dfig`` source."""
    p = src.params
    dp = DfigParams(float(p["rs"]), float(p["Xls"]), float(p["rr"]), float(p["Xlr"]),
                    float(p.get("omega_m", 0.75)), 0.0, 1.0, 0.5, case.omega0)
    yd, _ = dfig_static_admittance(dp)
    return yd


def build_system(case: NetworkCase, analysis: dict, base_dir: Path | None = None,
                 frame: str | None = None, mode: str | None = None):
    pf = power_flow(case)
    frame = frame or analysis.get("frame", "system")
    mode = mode or analysis.get("mode", "quasistatic")
    if mode == "quasistatic" and any(s.kind == "dfig" for s in case.sources):
        log.warning("dfig sources need mode 'dynamic-branches' for series-capacitor dynamics")
    blocks = [source_block(s, case, pf, frame, base_dir) for s in case.sources]
    return assemble_total(case, blocks, pf, mode=mode)


def _grid(args, analysis: dict, Y: TFMatrix | None = None) -> np.ndarray:
    spec = args.grid or analysis.get("grid")
    if spec is None:
        return frequency_grid(densify=det_metric(Y) if Y is not None else None)
    if isinstance(spec, str):
        spec = [float(x) for x in spec.split(",")]
    if len(spec) != 3:
        raise CaseError("grid must be 'fmin,fmax,n'")
    return frequency_grid(float(spec[0]), float(spec[1]), int(spec[2]))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _out(args) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_derive(args) -> int:
    case, analysis, base = load_case(args.case)
    ids = [s.id for s in case.sources]
    if args.source is None:
        if len(ids) != 1:
            raise CaseError(f"--source required (case has sources {ids})")
        args.source = ids[0]
    if args.source not in ids:
        raise CaseError(f"unknown source {args.source!r}; case has {ids}")
    src = case.sources[ids.index(args.source)]
    if src.kind == "dfig":
        Y = TFMatrix([[dfig_rational(src, case)]])
    else:
        pf = power_flow(case)
        Y = source_block(src, case, pf, args.frame or analysis.get("frame", "system"), base).Y
    path = _out(args) / f"{src.id}.adm"
    write_admittance(path, Y)
    print(path)
    return EXIT_OK


def cmd_assemble(args) -> int:
    case, analysis, base = load_case(args.case)
    sysm = build_system(case, analysis, base, args.frame, args.mode)
    out = _out(args)
    write_admittance(out / "total.adm", sysm.Y)
    with open(out / "powerflow.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bus", "v_re", "v_im", "v_mag", "angle_deg"])
        for b, v in zip(sysm.pf.bus_ids, sysm.pf.V):
            w.writerow([b, repr(float(v.real)), repr(float(v.imag)), repr(float(abs(v))),
                        repr(float(np.angle(v, deg=True)))])
    export_ybus(out / "ybus.csv", build_ybus(case, include_loads=True, V=sysm.pf.V))
    print(out / "total.adm")
    return EXIT_OK


def export_ybus(path: str | Path, Y: np.ndarray) -> None:
    """Complex matrix as CSV rows of ``re,im`` pairs."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in np.asarray(Y):
            out = []
            for v in row:
                out += [repr(float(v.real)), repr(float(v.imag))]
            w.writerow(out)


def _load_Y(args):
    if args.adm:
        return read_admittance(args.adm), {}
    if not args.case:
        raise CaseError("--case or --adm is required")
    case, analysis, base = load_case(args.case)
    return build_system(case, analysis, base, args.frame, args.mode).Y, analysis


def cmd_eigs(args) -> int:
    Y, analysis = _load_Y(args)
    rep = eigs_from_admittance(Y, float(analysis.get("tol_rhp", TOL_RHP)))
    rep.to_csv(_out(args) / "eigs.csv")
    print(f"{rep.verdict}: {len(rep.roots)} roots, max real part {rep.roots.real.max():.6g}")
    return EXIT_OK if rep.stable else EXIT_UNSTABLE


def cmd_rma(args) -> int:
    Y, analysis = _load_Y(args)
    res = rma_sweep(Y, _grid(args, analysis, Y))
    out = _out(args)
    res.to_csv(out / "rma.csv")
    res.peaks_to_csv(out / "rma_peaks.csv")
    for f, m, k in res.peaks[:5]:
        print(f"peak {f:.4f} Hz |Z|={m:.6g} (trace {k})")
    return EXIT_OK


def cmd_sigma(args) -> int:
    Y, analysis = _load_Y(args)
    res = sigma_sweep(Y, _grid(args, analysis, Y))
    out = _out(args)
    res.to_csv(out / "sigma.csv")
    res.peaks_to_csv(out / "sigma_dips.csv")
    return EXIT_OK


def cmd_nyquist(args) -> int:
    case, analysis, base = load_case(args.case)
    sysm = build_system(case, analysis, base, args.frame, args.mode)
    ids = [s.id for s in case.sources]
    sid = args.source or (analysis.get("nyquist") or {}).get("source") or ids[0]
    if sid not in ids:
        raise CaseError(f"unknown source {sid!r}")
    res = nyquist_for_source(sysm, ids.index(sid))
    out = _out(args)
    res.loci.to_csv(out / "nyquist.csv")
    (out / "nyquist.json").write_text(json.dumps({
        "source": sid, "clockwise_encirclements": res.encirclements,
        "open_loop_rhp_poles": res.open_loop_rhp_poles, "verdict": res.verdict,
        "marginal": res.marginal,
        "indented_poles": [[p.real, p.imag] for p in res.indented],
        "assumptions": list(res.assumptions)}, indent=2, sort_keys=True) + "\n")
    print(f"{res.verdict}: {res.encirclements} clockwise encirclement(s) of -1")
    if res.verdict == "marginal":
        return EXIT_NUMERIC
    return EXIT_OK if res.verdict == "stable" else EXIT_UNSTABLE


def nyquist_for_source(sysm, k: int, grid: np.ndarray | None = None):
    """Generalized Nyquist test of source ``k`` against the rest of the system.

    The loop gain is ``L = Y_k Z_rest`` where ``Z_rest^{-1}`` is the Schur
    complement, at the source bus, of the total admittance without the
    source.  ``L`` is evaluated pointwise; its open-loop poles are those of
    ``Y_k`` and the zeros of ``det Z_rest^{-1}``.
    """
    Yg = sysm.blocks[k].Y
    S = schur_complement(sysm.without_source(k), k)      # Z_rest^{-1}
    ol_poles = np.concatenate([Yg.candidate_poles(), _det_zeros(S)])
    s_poles = S.candidate_poles()
    axis = s_poles[np.abs(s_poles.real) <= 1e-9 * (1 + np.abs(s_poles))]

    def evalL(s):
        return Yg.evaluate_many(s) @ np.linalg.inv(S.evaluate_many(s))

    P = int(np.sum(ol_poles.real > 1e-9 * (1 + np.abs(ol_poles))))
    return nyquist_loci(evalL, grid=grid, poles=np.concatenate([ol_poles, axis]),
                        size=Yg.shape[0], open_loop_rhp_poles=P)


def _det_zeros(S: TFMatrix) -> np.ndarray:
    from .poly_tf import det_roots
    try:
        return det_roots(S).roots
    except (ValueError, np.linalg.LinAlgError):
        return np.zeros(0, complex)


def _set_param(case: NetworkCase, target: str, param: str, value: float) -> NetworkCase:
    kind, _, key = target.partition(":")
    if kind == "branch":
        k = int(key)
        brs = list(case.branches)
        if not 0 <= k < len(brs):
            raise CaseError(f"trace target branch {k} out of range")
        if param not in ("R", "X", "B", "comp"):
            raise CaseError(f"branch parameter {param!r} cannot be traced")
        brs[k] = replace(brs[k], **{param: float(value)})
        return replace(case, branches=brs)
    if kind == "source":
        srcs = list(case.sources)
        ids = [s.id for s in srcs]
        if key not in ids:
            raise CaseError(f"trace target source {key!r} not found")
        i = ids.index(key)
        if param in ("P", "V"):
            srcs[i] = replace(srcs[i], **{param: float(value)})
        else:
            params = dict(srcs[i].params)
            params[param] = float(value)
            srcs[i] = replace(srcs[i], params=params)
        return replace(case, sources=srcs)
    raise CaseError(f"trace target must be 'branch:<index>' or 'source:<id>', got {target!r}")


def cmd_trace(args) -> int:
    case, analysis, base = load_case(args.case)
    tr = analysis.get("trace")
    if not tr:
        raise CaseError("case has no analysis.trace section")
    target, param = str(_req(tr, "target", "analysis.trace")), str(_req(tr, "param", "analysis.trace"))
    values = [float(v) for v in _req(tr, "values", "analysis.trace")]

    def build(v):
        c = _set_param(case, target, param, v)
        return build_system(c, analysis, base, args.frame, args.mode).Y

    res = mode_trace(build, values)
    out = _out(args)
    res.to_csv(out / "trace.csv")
    with open(out / "trace_verdicts.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["param", "verdict", "max_re"])
        for v, rep in zip(values, res.reports):
            w.writerow([repr(v), rep.verdict, repr(float(rep.roots.real.max()))])
    for v, rep in zip(values, res.reports):
        print(f"{param}={v:g}: {rep.verdict} (max Re {rep.roots.real.max():.6g})")
    return EXIT_UNSTABLE if any(not r.stable for r in res.reports) else EXIT_OK


def cmd_era(args) -> int:
    if not args.events or len(args.events) != 2:
        raise CaseError("two events required for 2×2 identification")
    events = []
    for p in args.events:
        rec, scales = load_event(p)
        events.append(preprocess(rec, scales))
    Y, res = admittance_from_steps(events, order=args.order)
    out = _out(args)
    write_admittance(out / "era.adm", Y)
    ssd = res.ssd
    (out / "era_ss.json").write_text(json.dumps({
        "dt": ssd.dt, "A": ssd.A.tolist(), "B": ssd.B.tolist(), "C": ssd.C.tolist(),
        "D": ssd.D.tolist()}, indent=1) + "\n")
    (out / "era_report.json").write_text(json.dumps(res.fit_report(), indent=2) + "\n")
    print(f"order {res.order}, markov error {res.markov_error():.3e}")
    return EXIT_OK


COMMANDS = {
    "derive": cmd_derive, "assemble": cmd_assemble, "eigs": cmd_eigs, "rma": cmd_rma,
    "sigma": cmd_sigma, "nyquist": cmd_nyquist, "trace": cmd_trace, "era": cmd_era,
}


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gridadmit", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--case", help="YAML case file")
        p.add_argument("--out", help="output directory (default: current)")
        p.add_argument("--grid", help="fmin,fmax,n (Hz)")
        p.add_argument("--order", type=int, help="ERA model order")
        p.add_argument("--frame", choices=("system", "local"))
        p.add_argument("--mode", choices=("quasistatic", "dynamic-branches"))
        p.add_argument("--source", help="source id (derive, nyquist)")
        p.add_argument("--adm", help="admittance file instead of a case (eigs, rma, sigma)")
        p.add_argument("--events", nargs="+", help="event CSVs with JSON sidecars (era)")
        p.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = make_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command not in ("era",) and not (args.case or getattr(args, "adm", None)):
        print("error: --case is required", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (CaseError, FrameMismatchError, OperatingPointMismatchError, FileNotFoundError,
            KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PowerFlowError, EquilibriumError, DegreeCapError, PoleHitError,
            np.linalg.LinAlgError, ValueError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main_entry() -> None:
    """Console-script entry point."""
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    main_entry()
