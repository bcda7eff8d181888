"""Command-line client for the localization service.

Every subcommand talks to the HTTP API; by default the FastAPI app is
mounted in-process (no server needed), and ``--server URL`` points the
same commands at a running instance.  Exit codes: 0 success, 2 config or
usage error, 3 trial failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TRIAL = 3


def _client(server: str | None):
    import httpx

    if server:
        return httpx.Client(base_url=server, timeout=None)
    from fastapi.testclient import TestClient

    from .service import create_app

    return TestClient(create_app())


def _post(client, path: str, payload: dict) -> dict:
    resp = client.post(path, json=payload)
    if resp.status_code >= 500:
        print(f"error: {resp.text}", file=sys.stderr)
        raise SystemExit(EXIT_TRIAL)
    if resp.status_code >= 400:
        print(f"error: {resp.text}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)
    return resp.json()


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        print(text)
    else:
        Path(out).write_text(text)


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _program_payload(args) -> dict:
    return {"kind": args.program, "n": args.n, "input": args.input}


def _backend_payload(args) -> dict:
    if args.backend == "ideal":
        return {"mode": "ideal", "seed": args.seed}
    from .simulator import DEFAULT_P1, DEFAULT_P2, DEFAULT_P_READOUT

    return {
        "mode": "noisy",
        "p1": args.p1 if args.p1 is not None else DEFAULT_P1,
        "p2": args.p2 if args.p2 is not None else DEFAULT_P2,
        "p_readout": args.p_readout if args.p_readout is not None else DEFAULT_P_READOUT,
        "seed": args.seed,
    }


def cmd_generate(client, args) -> int:
    data = _post(client, "/circuits/generate", {"program": _program_payload(args)})
    _write(json.dumps(data["circuit"], indent=2), args.out)
    print(
        f"generated {args.program} n={args.n}: {data['segments']} segments, "
        f"{data['gate_count']} gates, depth {data['depth']}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_inject(client, args) -> int:
    payload = {"circuit": _read_json(args.circuit), "fault": _read_json(args.fault)}
    data = _post(client, "/circuits/inject", payload)
    _write(json.dumps(data["circuit"], indent=2), args.out)
    return EXIT_OK


def cmd_scheme(client, args) -> int:
    data = _post(client, "/schemes/build", {"program": _program_payload(args)})
    _write(json.dumps(data, indent=2), args.out)
    return EXIT_OK


def cmd_localize(client, args) -> int:
    payload: dict = {
        "approach": args.approach,
        "backend": _backend_payload(args),
        "threshold": args.threshold,
        "shots": args.shots,
    }
    if args.circuit:
        payload["circuit"] = _read_json(args.circuit)
    else:
        payload["program"] = _program_payload(args)
    if args.fault:
        payload["fault"] = _read_json(args.fault)
    data = _post(client, "/localize", payload)
    _write(json.dumps(data["verdict"], indent=2), args.out)
    return EXIT_OK


def cmd_experiment(client, args) -> int:
    config = _read_json(args.config)
    data = _post(client, "/experiment", config)
    from .harness import rows_to_csv

    _write(rows_to_csv(data["rows"]), args.out)
    if args.json:
        Path(args.json).write_text(json.dumps(data["rows"], indent=2))
    print(
        f"{data['trial_count']} trials, {len(data['rows'])} records, "
        f"{data['error_count']} errors",
        file=sys.stderr,
    )
    return EXIT_TRIAL if data["error_count"] else EXIT_OK


def cmd_report(client, args) -> int:
    from .harness import rows_from_csv

    try:
        rows = rows_from_csv(Path(args.records).read_text())
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    payload: dict = {"rows": rows}
    if args.groupings:
        payload["groupings"] = args.groupings.split(",")
    data = _post(client, "/report", payload)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(json.dumps(data, indent=2))
    for name in ("groups", "threshold_sweep", "runtime_depth"):
        rows_out = data[name]
        if not rows_out:
            continue
        import csv as _csv
        import io

        buf = io.StringIO()
        fieldnames: list[str] = []
        for row in rows_out:
            for key in row:
                if key not in fieldnames:
                    fieldnames.append(key)
        writer = _csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows_out)
        (out_dir / f"{name}.csv").write_text(buf.getvalue())
    print(f"report written to {out_dir}", file=sys.stderr)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blochloc",
        description="Bloch-vector assertion fault localization for quantum programs",
    )
    parser.add_argument("--server", help="base URL of a running service (default: in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_program_args(p):
        p.add_argument("--program", choices=["qft", "grover"], required=True)
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--input", required=True, help="input / marked bitstring")

    p = sub.add_parser("generate", help="emit circuit JSON for a program")
    add_program_args(p)
    p.add_argument("--out", default="-")
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("inject", help="apply a fault spec to a circuit JSON")
    p.add_argument("--circuit", required=True, help="path to circuit JSON")
    p.add_argument("--fault", required=True, help="path to fault spec JSON")
    p.add_argument("--out", default="-")
    p.set_defaults(fn=cmd_inject)

    p = sub.add_parser("scheme", help="emit the assertion scheme for a program")
    add_program_args(p)
    p.add_argument("--out", default="-")
    p.set_defaults(fn=cmd_scheme)

    p = sub.add_parser("localize", help="run one localization trial")
    add_program_args(p)
    p.add_argument("--circuit", help="circuit JSON path (overrides --program build)")
    p.add_argument("--fault", help="fault spec JSON to inject first")
    p.add_argument("--approach", choices=["bloq", "proq"], required=True)
    p.add_argument("--backend", choices=["ideal", "noisy"], default="ideal")
    p.add_argument("--threshold", type=float, default=0.0, help="percentage in [0, 100]")
    p.add_argument("--shots", type=int, default=8192, help="0 = analytic expectations")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p1", type=float, default=None)
    p.add_argument("--p2", type=float, default=None)
    p.add_argument("--p-readout", dest="p_readout", type=float, default=None)
    p.add_argument("--out", default="-")
    p.set_defaults(fn=cmd_localize)

    p = sub.add_parser("experiment", help="run the full matrix from a config JSON")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="records CSV path")
    p.add_argument("--json", help="also dump records as JSON")
    p.set_defaults(fn=cmd_experiment)

    p = sub.add_parser("report", help="aggregate a records CSV into stats tables")
    p.add_argument("--records", required=True, help="records CSV path")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--groupings", help="comma-separated subset of "
                   "program,qubits,fault_segment,fault_category")
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        return cmd_serve(args)
    try:
        with _client(args.server) as client:
            return args.fn(client, args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
