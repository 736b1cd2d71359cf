"""Command-line front end: a thin client of the HTTP service.

By default the client runs the service in-process through an ASGI
transport, so no server needs to be running; ``--server URL`` targets a
remote instance instead.  Exit codes: 0 success, 1 uncertified result or
method mismatch, 2 malformed path file / orbit outside the bounded regime,
3 path not starting at the identity, 4 unsupported dimension.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

import httpx

EXIT_CODES = {
    "MALFORMED_PATH_FILE": 2,
    "PARABOLIC_OR_HYPERBOLIC": 2,
    "COLLISION": 2,
    "BAD_FAMILY": 2,
    "BAD_REQUEST": 2,
    "NON_IDENTITY_START": 3,
    "UNSUPPORTED_DIMENSION": 4,
}


def _client(server: Optional[str]) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    # In-process bridge to the ASGI app; no server required.  The installed
    # starlette deprecates its httpx-based client without offering the
    # replacement on this index, so silence that one warning.
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from starlette.testclient import TestClient

    from .service import app

    return TestClient(app)


def _post(args, endpoint: str, payload: dict) -> dict:
    with _client(args.server) as client:
        resp = client.post(endpoint, json=payload)
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", {})
        except Exception:
            detail = {}
        code = detail.get("code", "ERROR") if isinstance(detail, dict) else "ERROR"
        message = detail.get("message", resp.text) if isinstance(detail, dict) else resp.text
        print(f"error [{code}]: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CODES.get(code, 1))
    return resp.json()


def _emit(args, text: str) -> None:
    if args.output and args.output != "-":
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _family_payload(args) -> dict:
    spec = {"kind": args.family, "T": args.T}
    if args.family == "shear":
        spec["fsign"] = args.fsign
    else:
        spec["a1"] = args.a1
        spec["a2"] = args.a2
        spec["ssign"] = args.ssign
    return spec


def cmd_index(args) -> int:
    if (args.family is None) == (args.path is None):
        print("error: provide exactly one of --family or --path", file=sys.stderr)
        return 2
    payload: dict = {"method": args.method}
    if args.epsilon is not None:
        payload["epsilon"] = args.epsilon
    if args.family is not None:
        payload["family"] = _family_payload(args)
    else:
        try:
            with open(args.path) as fh:
                payload["path_csv"] = fh.read()
        except OSError as exc:
            print(f"error: cannot read {args.path}: {exc}", file=sys.stderr)
            return 2
    data = _post(args, "/index", payload)
    for warning in data.get("warnings", []):
        print(f"warning: {warning}", file=sys.stderr)
    _emit(args, json.dumps(data, indent=2, sort_keys=True) + "\n")
    if not data["certified"] or data.get("match") is False:
        return 1
    return 0


def cmd_kepler_report(args) -> int:
    payload = {
        "a": args.a,
        "ecc": args.ecc,
        "mu": args.mu,
        "m": args.m,
        "kmax": args.kmax,
        "steps": args.steps,
    }
    data = _post(args, "/kepler-report", payload)
    _emit(args, json.dumps(data, indent=2, sort_keys=True) + "\n")
    return 0 if data["integrator"]["certified"] else 1


def _parse_list(text: str, cast) -> list:
    if not text.strip():
        return []
    return [cast(tok) for tok in text.split(",") if tok.strip()]


def cmd_sweep(args) -> int:
    payload = {
        "ecc_list": _parse_list(args.ecc_list, float),
        "k_list": _parse_list(args.k_list, int),
        "s_list": _parse_list(args.s_list, float),
        "a": args.a,
        "mu": args.mu,
        "m": args.m,
        "steps": args.steps,
    }
    data = _post(args, "/sweep", payload)
    _emit(args, data["csv"])
    return 0


def cmd_trace(args) -> int:
    payload = {"family": _family_payload(args), "samples": args.samples}
    data = _post(args, "/trace", payload)
    if args.section_output:
        with open(args.section_output, "w") as fh:
            fh.write(data["section_csv"])
        _emit(args, data["path_csv"])
    else:
        _emit(args, data["path_csv"] + "\n" + data["section_csv"])
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("symindex.service:app", host=args.host, port=args.port)
    return 0


def _add_family_flags(parser) -> None:
    parser.add_argument(
        "--family", choices=["rbeta", "sbeta", "expjs", "shear"], help="closed-form family name"
    )
    parser.add_argument("--a1", type=float, help="first family parameter (positive)")
    parser.add_argument("--a2", type=float, help="second family parameter (positive)")
    parser.add_argument("--fsign", type=int, choices=[1, -1], help="shear slope sign")
    parser.add_argument("--ssign", type=int, choices=[1, -1], default=1, help="definiteness sign for expjs")
    parser.add_argument("--T", type=float, default=2.0, help="path duration (default 2.0)")


def _add_common_flags(parser) -> None:
    parser.add_argument("--server", help="base URL of a running service (default: in-process)")
    parser.add_argument("--output", help="write the primary output to this file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="symindex",
        description="Conley-Zehnder / Maslov indices of symplectic paths and Kepler orbit stability",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="index of a family or a sampled path file")
    _add_family_flags(p)
    p.add_argument("--path", help="CSV sampled-path file (t,m11,m12,... rows)")
    p.add_argument(
        "--method",
        choices=["crossing", "intersection", "both"],
        default=None,
        help="engine to run (default: both for families, intersection for files)",
    )
    p.add_argument("--epsilon", type=float, help="perturbation size override")
    _add_common_flags(p)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("kepler-report", help="stability report for a Keplerian ellipse")
    p.add_argument("--a", type=float, default=1.0, help="semi-major axis (default 1)")
    p.add_argument("--ecc", type=float, default=0.0, help="eccentricity in [0, 1) (default 0)")
    p.add_argument("--mu", type=float, default=1.0, help="reduced mass (default 1)")
    p.add_argument("--m", type=float, default=1.0, help="gravitational parameter (default 1)")
    p.add_argument("--kmax", type=int, default=1, help="largest iterate for Morse indices (default 1)")
    p.add_argument("--steps", type=int, default=20000, help="integrator steps per period (default 20000)")
    _add_common_flags(p)
    p.set_defaults(func=cmd_kepler_report)

    p = sub.add_parser("sweep", help="CSV table over an (ecc, k, s) grid")
    p.add_argument("--ecc-list", default="0,0.2,0.4,0.6,0.8", help="comma-separated eccentricities")
    p.add_argument("--k-list", default="1,2,3,4,5", help="comma-separated iterates")
    p.add_argument("--s-list", default="1", help="comma-separated homotopy parameters")
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--m", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=20000)
    _add_common_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("trace", help="chart-coordinate trace of a family plus the singular section")
    _add_family_flags(p)
    p.add_argument("--samples", type=int, default=256, help="sample count (default 256)")
    p.add_argument("--section-output", help="write the section curve to a separate file")
    _add_common_flags(p)
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "command", None) == "index" and args.method is None:
        args.method = "both" if args.path is None else "intersection"
    try:
        return args.func(args)
    except SystemExit as exc:  # raised by the error-code mapping in _post
        return int(exc.code) if exc.code is not None else 1


if __name__ == "__main__":
    sys.exit(main())
