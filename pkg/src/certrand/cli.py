"""``certrand`` command line.

Exit codes: 0 ok, 1 assertion or verification failure, 2 config error,
3 transport failure. ``CERTRAND_OUT`` overrides the output directory.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import OUT_ENV, load_config, render_config
from .errors import ConfigError, DecodeError, SessionAborted, TransportError
from .protocol import decode_output, decode_transcript
from .scenarios import (
    SCENARIOS,
    mac_keys,
    output_stats,
    run_attack,
    verify_chain_dir,
    verify_lottery_file,
    verify_transcript_file,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_TRANSPORT = 0, 1, 2, 3
ATTACKS = ("uniform", "replay", "colluding", "slow")


def _overrides(items: list[str]) -> dict[str, str]:
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _emit(lines) -> None:
    for line in lines:
        print(line)


def _execute(runner, cfg, out_arg) -> int:
    out = cfg.output_dir(out_arg)
    out.mkdir(parents=True, exist_ok=True)
    (out / "scenario.conf").write_text(render_config(cfg))
    result = runner(cfg, out)
    _emit(result.lines)
    print(f"artifacts: {out}")
    return EXIT_OK if result.ok else EXIT_FAIL


def cmd_run(args) -> int:
    if args.scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {args.scenario!r}; choose from {', '.join(SCENARIOS)}")
    cfg = load_config(args.config, _overrides(args.set), scenario=args.scenario)
    return _execute(SCENARIOS[cfg.scenario], cfg, args.out)


def cmd_attack(args) -> int:
    over = _overrides(args.set)
    over["prover"] = args.kind
    if args.kind == "slow" and "delay_ns" not in over:
        over["delay_ns"] = str(2 * 10**9)
    cfg = load_config(args.config, over, scenario=f"attack-{args.kind}")
    return _execute(run_attack, cfg, args.out)


def cmd_verify(args) -> int:
    if args.what == "transcript":
        ok, msg = verify_transcript_file(Path(args.path))
    elif args.what == "chain":
        ok, msg = verify_chain_dir(Path(args.path), Path(args.keys) if args.keys else None)
    else:
        if not args.pulse:
            raise ConfigError("verify lottery needs --pulse FILE")
        try:
            ok, msg = verify_lottery_file(Path(args.path), Path(args.pulse))
        except DecodeError as exc:
            ok, msg = False, f"malformed artifact: {exc}"
    print(msg)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_stats(args) -> int:
    data = Path(args.path).read_bytes()
    try:
        out = decode_output(data)
        lines = output_stats(out.bits) + [f"n_out={out.n_out} n_input={out.n_input} expansion={int(out.expansion)}"]
    except DecodeError:
        t = decode_transcript(data)
        lines = [f"rounds={len(t.rounds)} verdict={'ACCEPT' if t.accepted else 'REJECT'} reason={t.reason}",
                 f"mean_xeb={t.mean_xeb:.6f} threshold={t.threshold:.6f} k={t.k:g}"]
    _emit(lines)
    return EXIT_OK


def cmd_keys(args) -> int:
    cfg = load_config(args.config, _overrides(args.set), scenario="keys")
    root = Path(args.dir)
    root.mkdir(parents=True, exist_ok=True)
    for k in mac_keys(cfg):
        (root / f"{k.verifier_id}.key").write_text(k.secret.hex() + "\n")
        print(f"wrote {root / (k.verifier_id + '.key')}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    cfg = load_config(args.config, _overrides(args.set), scenario="beacon")
    uvicorn.run(create_app(cfg, args.store), host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def cmd_prover(args) -> int:
    import time

    from .provers import ProverEndpoint
    from .scenarios import make_prover
    from .transport import StreamServer

    cfg = load_config(args.config, {**_overrides(args.set), "prover": args.kind}, scenario="prover")
    rng = np.random.default_rng(cfg.run_seed)
    with StreamServer(ProverEndpoint(make_prover(cfg, rng), rng.bytes(16)), args.host, args.port) as server:
        host, port = server.address
        print(f"prover kind={args.kind} listening on {host}:{port}", flush=True)
        try:
            while True:
                time.sleep(3600)
        except KeyboardInterrupt:
            pass
    return EXIT_OK


def cmd_fetch(args) -> int:
    import httpx

    base = args.url.rstrip("/")
    paths = {"latest": "/beacon/pulses/latest", "verify": "/beacon/verify", "health": "/health", "emit": "/beacon/pulses"}
    path = f"/beacon/pulses/{args.index}" if args.what == "pulse" else paths[args.what]
    try:
        resp = httpx.post(base + path, timeout=60) if args.what == "emit" else httpx.get(base + path, timeout=60)
    except httpx.HTTPError as exc:
        raise TransportError(str(exc)) from exc
    print(resp.text)
    if args.what in ("latest", "pulse", "emit") and resp.is_success and args.save:
        import base64

        Path(args.save).write_bytes(base64.b64decode(resp.json()["raw"]))
    return EXIT_OK if resp.is_success else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="certrand", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def configurable(sp):
        sp.add_argument("--config", "-c", help="key = value config file")
        sp.add_argument("--set", "-s", action="append", default=[], metavar="KEY=VALUE", help="override one config key")
        return sp

    def with_out(sp):
        sp.add_argument("--out", "-o", help=f"artifact directory (default: ${OUT_ENV} or certrand-out/<scenario>)")
        return sp

    sp = with_out(configurable(sub.add_parser("run", help="run a named scenario")))
    sp.add_argument("scenario", help=" | ".join(SCENARIOS))
    sp.set_defaults(func=cmd_run)

    sp = with_out(configurable(sub.add_parser("attack", help="run sessions against a cheating prover")))
    sp.add_argument("kind", choices=ATTACKS)
    sp.set_defaults(func=cmd_attack)

    sp = sub.add_parser("verify", help="re-verify a stored artifact")
    sp.add_argument("what", choices=("transcript", "chain", "lottery"))
    sp.add_argument("path")
    sp.add_argument("--keys", help="verifier key directory (chain; default <dir>/keys)")
    sp.add_argument("--pulse", help="pulse file the draw was made from (lottery)")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("stats", help="summary statistics of an output or transcript file")
    sp.add_argument("path")
    sp.set_defaults(func=cmd_stats)

    sp = configurable(sub.add_parser("keys", help="write verifier MAC keys derived from run_seed"))
    sp.add_argument("dir")
    sp.set_defaults(func=cmd_keys)

    sp = configurable(sub.add_parser("serve", help="run the HTTP service (foreground beacon)"))
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8000)
    sp.add_argument("--store", help="also append pulses to this directory")
    sp.set_defaults(func=cmd_serve)

    sp = configurable(sub.add_parser("prover", help="serve a prover over TCP frames"))
    sp.add_argument("--kind", default="honest", choices=("honest",) + ATTACKS)
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=7700)
    sp.set_defaults(func=cmd_prover)

    sp = sub.add_parser("fetch", help="query a running service")
    sp.add_argument("what", choices=("health", "latest", "pulse", "verify", "emit"))
    sp.add_argument("--url", default="http://127.0.0.1:8000")
    sp.add_argument("--index", type=int, default=0)
    sp.add_argument("--save", help="write the pulse's canonical bytes here")
    sp.set_defaults(func=cmd_fetch)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TransportError, SessionAborted, ConnectionError) as exc:
        print(f"transport failure: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except (DecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
