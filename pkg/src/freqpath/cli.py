"""Batch front-end: generate, audit, verify bounds, run counting censuses,
recover and score.  Reports are append-only JSON/CSV files with the params,
seed, gate flags and artifact version embedded; exit status 0 means every
asserted invariant passed.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path as FsPath

from . import __version__
from .pathgraph import (
    collision_census,
    enumerate_split_paths,
    ratio_drift_certificate,
    top_anchor_certificate,
    path_prepath,
)
from .pyramid import PrePathError, build_pyramid, verify_pyramid
from .recover import (
    RecoverConfig,
    recover_instance,
    score_recovery,
)
from .synth import (
    InfeasibleParamsError,
    Params,
    ParamsError,
    audit_instance,
    gen_instance,
    instance_from_json,
    instance_to_json,
)
from .torus import frac_to_str, str_to_frac


def _report_header(params: Params) -> dict:
    return {
        "version": __version__,
        "seed": params.seed,
        "params": params.to_json(),
        "gates": params.gates(),
    }


def _write_json(path: FsPath, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n")


def _write_csv(path: FsPath, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if not rows:
        path.write_text("")
        return
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)


def _write_error(out: FsPath, name: str, exc: Exception) -> None:
    _write_json(
        out / f"{name}_error.json",
        {"error": {"type": type(exc).__name__, "message": str(exc)}},
    )


def _params_from_args(args) -> Params:
    if args.params:
        doc = json.loads(FsPath(args.params).read_text())
        if args.seed is not None:
            doc["seed"] = args.seed
        return Params.from_json(doc)
    return Params(
        X=args.X,
        H=args.H,
        K=args.K,
        P=args.P,
        P_prime=args.P_prime,
        eps_edge=str_to_frac(args.eps_edge),
        s_edge=str_to_frac(args.s_edge),
        site_count=args.sites,
        edge_count=args.edges,
        seed=args.seed if args.seed is not None else 0,
        placement=args.placement,
        web_pair_targets=args.web_pair_targets,
        web_diamonds=args.web_diamonds,
        web_chains=args.web_chains,
        web_chain_len=args.web_chain_len,
        d_min=args.d_min,
    )


def _load_instance(path: str):
    return instance_from_json(FsPath(path).read_text())


def cmd_synth(args) -> int:
    out = FsPath(args.out)
    try:
        params = _params_from_args(args)
        inst = gen_instance(
            params,
            mode=args.mode,
            t_star=str_to_frac(args.t_star),
            q_star=args.q_star,
        )
    except (ParamsError, InfeasibleParamsError) as exc:
        out.mkdir(parents=True, exist_ok=True)
        _write_error(out, "synth", exc)
        return 2
    out.mkdir(parents=True, exist_ok=True)
    (out / "instance.json").write_text(instance_to_json(inst))
    if args.blind:
        (out / "instance_blind.json").write_text(instance_to_json(inst.strip_truth()))
        _write_json(out / "truth.json", inst.truth.to_json())
    _write_json(
        out / "synth_report.json",
        {**_report_header(params), "sites": len(inst.cfg.sites), "edges": len(inst.edges)},
    )
    return 0


def cmd_audit(args) -> int:
    inst = _load_instance(args.instance)
    report = audit_instance(inst)
    doc = {**_report_header(inst.params), **report.to_json()}
    _write_json(FsPath(args.out) / "audit_report.json", doc)
    return 0 if report.passed else 1


def cmd_verify_bounds(args) -> int:
    """Pyramid bound rows plus drift and apex certificates over enumerated
    split paths of every length up to --k."""
    inst = _load_instance(args.instance)
    eps = inst.params.eps_edge
    rows: list[dict] = []
    pyramids: list[dict] = []
    ok = True
    n_paths = 0
    for start in range(len(inst.cfg.sites)):
        for k in range(1, args.k + 1):
            enum = enumerate_split_paths(
                inst.cfg, inst.edges, start, k, limit=args.limit
            )
            for pid, path in enumerate(enum.paths):
                if n_paths >= args.limit:
                    break
                n_paths += 1
                try:
                    pp = path_prepath(path, eps)
                except PrePathError:
                    ok = False
                    rows.append(
                        {"path": f"{start}:{k}:{pid}", "kind": "prepath",
                         "j": "", "m": "", "actual": "", "bound": "", "pass": False}
                    )
                    continue
                py = build_pyramid(pp)
                if len(pyramids) < 10:
                    pyramids.append(
                        {"path": f"{start}:{k}:{pid}", **py.to_json()}
                    )
                for row in verify_pyramid(pp, py).rows:
                    ok &= row.passed
                    rows.append(
                        {"path": f"{start}:{k}:{pid}", "kind": "layer_gap",
                         "j": row.j, "m": "", "actual": frac_to_str(row.actual),
                         "bound": frac_to_str(row.predicted), "pass": row.passed}
                    )
                drift = ratio_drift_certificate(path, path.k)
                ok &= drift.passed
                rows.append(
                    {"path": f"{start}:{k}:{pid}", "kind": "ratio_drift",
                     "j": "", "m": drift.m, "actual": frac_to_str(drift.drift),
                     "bound": frac_to_str(drift.bound), "pass": drift.passed}
                )
                for j in (1, path.k + 1):
                    cert = top_anchor_certificate(path, py, j)
                    ok &= cert.passed
                    rows.append(
                        {"path": f"{start}:{k}:{pid}", "kind": "apex_anchor",
                         "j": cert.j, "m": "", "actual": frac_to_str(cert.actual),
                         "bound": frac_to_str(cert.bound), "pass": cert.passed}
                    )
    out = FsPath(args.out)
    if args.format == "csv":
        _write_csv(out / "bound_certificates.csv", rows)
    _write_json(
        out / "verify_report.json",
        {
            **_report_header(inst.params),
            "paths": n_paths,
            "rows": rows,
            "pyramids": pyramids,
            "pass": ok,
        },
    )
    return 0 if ok else 1


def cmd_census(args) -> int:
    inst = _load_instance(args.instance)
    params = inst.params
    reports = []
    ok = True
    for start in range(len(inst.cfg.sites)):
        enum = enumerate_split_paths(
            inst.cfg, inst.edges, start, args.k, limit=args.limit
        )
        if not enum.paths:
            continue
        rep = collision_census(
            list(enum.paths), params.X, params.H, params.P, params.B_ratio
        )
        ok &= rep.passed
        reports.append({"start": start, **rep.to_json()})
    _write_json(
        FsPath(args.out) / "census_report.json",
        {**_report_header(params), "census": reports, "pass": ok},
    )
    return 0 if ok else 1


def cmd_recover(args) -> int:
    inst = _load_instance(args.instance)
    if args.blind:
        inst = inst.strip_truth()
    rcfg = RecoverConfig(
        k=args.k,
        min_common_witness=args.min_common_witness,
        tol_t=str_to_frac(args.tol_T) if args.tol_T else None,
        path_limit=args.limit,
        d_min=args.d_min,
    )
    result = recover_instance(inst, rcfg)
    out = FsPath(args.out)
    _write_json(
        out / "recovery.json",
        {**_report_header(inst.params), **result.to_json()},
    )
    accepted = {e.target_index for e in result.global_freq.accepted} if result.global_freq else set()
    _write_csv(
        out / "targets.csv",
        [{**e.to_row(), "accepted": e.target_index in accepted} for e in result.estimates],
    )
    return 0 if result.error is None else 1


def cmd_score(args) -> int:
    inst = _load_instance(args.instance)
    doc = json.loads(FsPath(args.recovery).read_text()) if args.recovery else None
    rcfg = RecoverConfig(
        k=args.k,
        min_common_witness=args.min_common_witness,
        tol_t=str_to_frac(args.tol_T) if args.tol_T else None,
        path_limit=args.limit,
        d_min=args.d_min,
    )
    # re-run recovery blind against the instance, then score with its truth
    result = recover_instance(inst.strip_truth(), rcfg)
    score = score_recovery(result.global_freq, inst.truth, result.hub_index)
    _write_json(
        FsPath(args.out) / "score.json",
        {
            **_report_header(inst.params),
            "recovery_file": args.recovery if args.recovery else None,
            "recorded_hub": doc.get("hub") if doc else None,
            **score.to_json(),
        },
    )
    return 0 if score.status == "ok" else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="freqpath",
        description="Exact-arithmetic path/pyramid laboratory with planted "
        "frequency recovery.",
    )
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common_out(p):
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("synth", help="generate a verified instance")
    common_out(p)
    p.add_argument("--params", help="JSON params file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--mode", choices=("archimedean", "rational"), default="archimedean")
    p.add_argument("--t-star", default="0/1")
    p.add_argument("--q-star", type=int, default=1)
    p.add_argument("--blind", action="store_true")
    p.add_argument("--X", type=int, default=10**8)
    p.add_argument("--H", type=int, default=10**4)
    p.add_argument("--K", type=int, default=100)
    p.add_argument("--P", type=int, default=20)
    p.add_argument("--P-prime", dest="P_prime", type=int, default=5)
    p.add_argument("--eps-edge", default="1/5")
    p.add_argument("--s-edge", default="5/1")
    p.add_argument("--sites", type=int, default=2000)
    p.add_argument("--edges", type=int, default=None)
    p.add_argument("--d-min", type=int, default=1)
    p.add_argument("--placement", choices=("uniform", "web"), default="uniform")
    p.add_argument("--web-pair-targets", type=int, default=0)
    p.add_argument("--web-diamonds", type=int, default=0)
    p.add_argument("--web-chains", type=int, default=0)
    p.add_argument("--web-chain-len", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("audit", help="re-verify an instance's invariants")
    common_out(p)
    p.add_argument("--instance", required=True)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("verify-bounds", help="pyramid and path certificates")
    common_out(p)
    p.add_argument("--instance", required=True)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--limit", type=int, default=200)
    p.set_defaults(func=cmd_verify_bounds)

    p = sub.add_parser("census", help="same-endpoint route counting checks")
    common_out(p)
    p.add_argument("--instance", required=True)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--limit", type=int, default=1000)
    p.set_defaults(func=cmd_census)

    def recover_args(p):
        p.add_argument("--instance", required=True)
        p.add_argument("--k", type=int, default=2)
        p.add_argument("--min-common-witness", type=int, default=1)
        p.add_argument("--tol-T", default=None)
        p.add_argument("--d-min", type=int, default=None)
        p.add_argument("--limit", type=int, default=20000)

    p = sub.add_parser("recover", help="hub, route pairs, local and global estimates")
    common_out(p)
    recover_args(p)
    p.add_argument("--blind", action="store_true")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("score", help="score a recovery against the planted truth")
    common_out(p)
    recover_args(p)
    p.add_argument("--recovery", default=None, help="recovery.json for provenance")
    p.set_defaults(func=cmd_score)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary, report and exit
        out = FsPath(getattr(args, "out", "."))
        out.mkdir(parents=True, exist_ok=True)
        _write_error(out, args.command, exc)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
