"""Named end-to-end scenarios and artifact verification.

Every scenario draws all of its randomness from ``run_seed`` and, in
``inprocess`` mode, runs on a virtual clock, so the same configuration
reproduces byte-identical artifacts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import bits as bitops
from .apps.dp import DpQuery, dp_count_query
from .apps.immunize import immunized_run
from .apps.lottery import decode_draw, encode_draw, lottery_draw, render_draw, verify_draw
from .apps.mixing import mix_onchain, randao_accumulate
from .apps.prng import make_backdoored, seed_prng
from .beacon import Beacon, MacKey, PulseStore, decode_pulse, majority, verify_chain
from .coinflip import FixedParty, Party, PartyHandle
from .config import ScenarioConfig, parse_text
from .digest import digest
from .errors import DecodeError
from .joint import run_joint_session
from .protocol import (
    InputRandomness,
    ProtocolConfig,
    SessionResult,
    decode_transcript,
    encode_output,
    encode_transcript,
    generate_challenges,
    reverify,
    run_session,
)
from .provers import Colluding, Honest, ProverEndpoint, ProverKind, Replay, Slow, Uniform, respond
from .statcheck import binomial_within, monobit
from .transport import FixedLatency, InProcessChannel, SimClock, StreamChannel, StreamServer, UniformJitter
from .vdf import VdfParams


@dataclass
class ScenarioResult:
    ok: bool
    lines: list[str] = field(default_factory=list)
    artifacts: list[Path] = field(default_factory=list)

    def say(self, line: str) -> None:
        self.lines.append(line)


def _rng(cfg: ScenarioConfig, *label) -> np.random.Generator:
    return np.random.default_rng(int.from_bytes(digest("certrand/run-seed", cfg.run_seed, *map(str, label)), "big"))


def make_prover(cfg: ScenarioConfig, rng: np.random.Generator) -> ProverKind:
    if cfg.prover == "honest":
        return Honest(cfg.epsilon)
    if cfg.prover == "uniform":
        return Uniform()
    if cfg.prover == "slow":
        return Slow(cfg.delay_ns)
    p = cfg.protocol
    stale = generate_challenges(p, bitops.random_bits(p.challenge_bits, rng))[0]
    if cfg.prover == "replay":
        return Replay(respond(Honest(0.0), stale, rng.bytes(16)))
    # precomputed answers for seeds nobody will ask about
    return Colluding({c.seed: respond(Honest(0.0), c, rng.bytes(16)) for c in generate_challenges(p, bitops.random_bits(p.challenge_bits, rng))})


class ProverLink:
    """Channel to a prover: in-process on a virtual clock, or TCP."""

    def __init__(self, cfg: ScenarioConfig, kind: ProverKind, key: bytes, capture=None):
        self._server = None
        if cfg.mode == "inprocess":
            clock = SimClock()
            latency = UniformJitter(cfg.latency_ns, cfg.latency_ns + cfg.jitter_ns, cfg.run_seed) if cfg.jitter_ns else FixedLatency(cfg.latency_ns)
            self.channel = InProcessChannel(ProverEndpoint(kind, key, clock), clock=clock, latency=latency,
                                            timeout_ns=cfg.timeout_ns, capture=capture)
        else:
            host, _, port = cfg.address.rpartition(":")
            if host in ("", "local"):
                self._server = StreamServer(ProverEndpoint(kind, key)).start()
                host, port = self._server.address
            self.channel = StreamChannel(host or "127.0.0.1", int(port), timeout_ns=cfg.timeout_ns or 30 * 10**9, capture=capture)

    def close(self):
        self.channel.close()
        if self._server is not None:
            self._server.stop()


def _write(path: Path, data: bytes | str, result: ScenarioResult) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        path.write_text(data)
    else:
        path.write_bytes(data)
    result.artifacts.append(path)


def _session_summary(i: int, s: SessionResult) -> str:
    t = s.transcript
    parts = [f"run={i}", f"verdict={'ACCEPT' if t.accepted else 'REJECT'}", f"reason={t.reason}",
             f"mean_xeb={t.mean_xeb:.4f}", f"threshold={t.threshold:.4f}", f"k={t.k:g}"]
    if s.output is not None:
        parts += [f"n_out={s.output.n_out}", f"n_input={s.output.n_input}", f"expansion={int(s.output.expansion)}"]
    return " ".join(parts)


def save_session(out: Path, stem: str, s: SessionResult, result: ScenarioResult) -> None:
    _write(out / f"{stem}.transcript", encode_transcript(s.transcript), result)
    if s.output is not None:
        _write(out / f"{stem}.output", encode_output(s.output), result)
        _write(out / f"{stem}.output.txt", bitops.to_hex(s.output.bits) + "\n", result)


def _sessions(cfg: ScenarioConfig, out: Path, expect_accept: bool, label: str) -> ScenarioResult:
    result = ScenarioResult(True)
    rng = _rng(cfg, label)
    verdicts = []
    for i in range(cfg.runs):
        link = ProverLink(cfg, make_prover(cfg, rng), rng.bytes(16))
        try:
            s = run_session(cfg.protocol, InputRandomness.generate(cfg.protocol, rng), link.channel)
        finally:
            link.close()
        verdicts.append(s.transcript.accepted)
        result.say(_session_summary(i, s))
        save_session(out, f"session_{i:03d}", s, result)
    rate = sum(verdicts) / len(verdicts)
    wanted = rate if expect_accept else 1 - rate
    result.ok = wanted >= 0.99
    result.say(f"summary prover={cfg.prover} runs={cfg.runs} accept_rate={rate:.3f} "
               f"expected={'accept' if expect_accept else 'reject'} result={'PASS' if result.ok else 'FAIL'}")
    return result


def run_honest_session(cfg: ScenarioConfig, out: Path) -> ScenarioResult:
    return _sessions(cfg, out, expect_accept=cfg.prover in ("honest",) and cfg.epsilon < 0.5, label="session")


def run_attack(cfg: ScenarioConfig, out: Path) -> ScenarioResult:
    return _sessions(cfg, out, expect_accept=False, label="attack")


def _parties(cfg: ScenarioConfig, rng, make=None) -> list[PartyHandle]:
    handles = []
    for v in range(max(2, cfg.verifiers)):
        pid = f"verifier-{v}"
        party = make(v, pid) if make else None
        party = party or Party(pid, np.random.default_rng(rng.integers(2**63)))
        handles.append(PartyHandle(pid, InProcessChannel(party, clock=SimClock())))
    return handles


def run_fig1b(cfg: ScenarioConfig, out: Path) -> ScenarioResult:
    result = ScenarioResult(True)
    rng = _rng(cfg, "fig1b")
    accepted = 0
    for i in range(cfg.runs):
        link = ProverLink(cfg, Honest(cfg.epsilon), rng.bytes(16))
        try:
            s = run_joint_session(cfg.protocol, _parties(cfg, rng), link.channel, session_id=str(i).encode())
        finally:
            link.close()
        accepted += s.transcript.accepted
        result.say(_session_summary(i, s))
        if i == 0:
            save_session(out, "joint_000", s, result)
    result.ok = accepted / cfg.runs >= 0.99
    result.say(f"summary scenario=fig1b-joint runs={cfg.runs} accepted={accepted} result={'PASS' if result.ok else 'FAIL'}")
    return result


def collusion_setup(p: ProtocolConfig, rng: np.random.Generator) -> tuple[np.ndarray, Colluding]:
    """Target challenge bits and a prover holding honest answers precomputed for them."""
    target = bitops.random_bits(p.challenge_bits, rng)
    key = rng.bytes(16)
    table = {c.seed: respond(Honest(0.0), c, key) for c in generate_challenges(p, target)}
    return target, Colluding(table)


def run_fig1c(cfg: ScenarioConfig, out: Path) -> ScenarioResult:
    result = ScenarioResult(True)
    rng = _rng(cfg, "fig1c")
    p = cfg.protocol
    rejected = control_accepted = 0
    for i in range(cfg.runs):
        target, colluder = collusion_setup(p, rng)
        malicious = lambda v, pid: FixedParty(pid, target, np.random.default_rng(rng.integers(2**63))) if v == 0 else None
        link = ProverLink(cfg, colluder, rng.bytes(16))
        try:
            s = run_joint_session(p, _parties(cfg, rng, malicious), link.channel, session_id=str(i).encode())
            # control: the colluder alone picks the challenges, no coin flip
            base = InputRandomness.generate(p, rng)
            ctrl = run_session(p, InputRandomness(target, base.private_test_bits, base.extractor_seed), link.channel)
        finally:
            link.close()
        rejected += not s.transcript.accepted
        control_accepted += ctrl.transcript.accepted
        result.say(_session_summary(i, s) + f" control_verdict={'ACCEPT' if ctrl.transcript.accepted else 'REJECT'}")
    rate = rejected / cfg.runs
    result.ok = rate >= 0.99
    result.say(f"summary scenario=fig1c-collusion runs={cfg.runs} joint_rejected={rejected} reject_rate={rate:.3f} "
               f"control_accepted={control_accepted} result={'PASS' if result.ok else 'FAIL'}")
    return result


def mac_keys(cfg: ScenarioConfig) -> list[MacKey]:
    return [MacKey(f"verifier-{v}", digest("certrand/mac-key", cfg.run_seed, v)) for v in range(cfg.verifiers)]


def build_beacon(cfg: ScenarioConfig) -> Beacon:
    keys = mac_keys(cfg)
    clock = SimClock() if cfg.mode == "inprocess" else None
    kw = {"clock": clock} if clock is not None else {}
    return Beacon(cfg.protocol, cfg.vdf_params(), keys, majority(len(keys)), **kw)


def write_chain_meta(out: Path, cfg: ScenarioConfig, result: ScenarioResult, head: bytes | None = None) -> None:
    keys = mac_keys(cfg)
    meta = [f"vdf_t = {cfg.vdf_t}", f"vdf_prime = {cfg.vdf_prime}", f"quorum = {majority(len(keys))}"]
    if head is not None:
        meta.append(f"head = {head.hex()}")
    _write(out / "chain.conf", "\n".join(meta) + "\n", result)
    for k in keys:
        _write(out / "keys" / f"{k.verifier_id}.key", k.secret.hex() + "\n", result)


def run_beacon(cfg: ScenarioConfig, out: Path) -> ScenarioResult:
    result = ScenarioResult(True)
    rng = _rng(cfg, "beacon")
    beacon = build_beacon(cfg)
    store = PulseStore(out / "pulses")
    link = ProverLink(cfg, Honest(cfg.epsilon), rng.bytes(16))
    try:
        for _ in range(cfg.pulses):
            pulse = beacon.emit(link.channel, rng)
            result.artifacts.append(store.append(pulse))
            result.say(f"pulse index={pulse.index} output_bits={pulse.certified_output.size} hash={pulse.output_hash.hex()[:16]}")
    finally:
        link.close()
    write_chain_meta(out, cfg, result, beacon.latest.output_hash)
    verdict = verify_chain(beacon.chain, {k.verifier_id: k for k in mac_keys(cfg)}, cfg.vdf_params())
    result.ok = bool(verdict)
    result.say(f"summary scenario=beacon pulses={len(beacon.chain)} chain={verdict.reason} result={'PASS' if result.ok else 'FAIL'}")
    return result


def run_immunization(cfg: ScenarioConfig, out: Path) -> ScenarioResult:
    result = ScenarioResult(True)
    rng = _rng(cfg, "immunization")
    params, trapdoor = make_backdoored(rng)
    raw_trials = raw_correct = first_hits = 0
    lines = []
    for i in range(cfg.runs):
        prng = seed_prng(params, int(rng.integers(1, 2**62)))
        _, report = immunized_run(prng, trapdoor, cfg.protocol, rng.bytes(16), np.random.default_rng(rng.integers(2**63)), i)
        raw_trials += report.raw_trials
        raw_correct += report.raw_correct
        first_hits += report.first_bit_correct
        lines.append(report.render())
    _write(out / "adversary_report.txt", "\n".join(lines) + "\n", result)
    near_half = binomial_within(first_hits, cfg.runs, 0.5)
    result.ok = raw_correct == raw_trials and near_half.passed
    result.lines += lines[:5]
    result.say(f"summary scenario=immunization runs={cfg.runs} raw_success={raw_correct}/{raw_trials} "
               f"output_first_bit_success={first_hits}/{cfg.runs} sigma={near_half.sigma:.2f} "
               f"result={'PASS' if result.ok else 'FAIL'}")
    return result


def _one_honest_output(cfg: ScenarioConfig, rng) -> SessionResult:
    link = ProverLink(cfg, Honest(cfg.epsilon), rng.bytes(16))
    try:
        return run_session(cfg.protocol, InputRandomness.generate(cfg.protocol, rng), link.channel)
    finally:
        link.close()


def run_dp(cfg: ScenarioConfig, out: Path) -> ScenarioResult:
    result = ScenarioResult(True)
    rng = _rng(cfg, "dp")
    s = _one_honest_output(cfg, rng)
    if s.output is None:
        result.ok = False
        result.say("summary scenario=dp session rejected; no randomness result=FAIL")
        return result
    ages = rng.integers(18, 90, size=max(cfg.bids, 1) * 10).tolist()
    query = DpQuery(ages, lambda a: a >= 65, cfg.dp_epsilon)
    bits = s.output.bits
    answers = [dp_count_query(query, bits[i * 64 : (i + 1) * 64]) for i in range(bits.size // 64)]
    lines = [f"query={i} true_count={query.true_count()} noisy_count={a:.6f}" for i, a in enumerate(answers)]
    _write(out / "dp_report.txt", "\n".join(lines) + "\n", result)
    result.lines += lines
    result.ok = bool(answers)
    result.say(f"summary scenario=dp epsilon={cfg.dp_epsilon} queries={len(answers)} result={'PASS' if result.ok else 'FAIL'}")
    return result


def run_lottery(cfg: ScenarioConfig, out: Path) -> ScenarioResult:
    result = run_beacon(cfg, out)
    if not result.ok:
        return result
    pulses = PulseStore(out / "pulses").load()
    pulse = pulses[-1]
    bids = [f"bid-{i:04d}" for i in range(cfg.bids)]
    draw = lottery_draw(pulse.output_bytes(), bids, cfg.winners, pulse.index)
    _write(out / "lottery.bin", encode_draw(draw), result)
    _write(out / "lottery.txt", render_draw(draw), result)
    result.ok = verify_draw(draw, pulse.output_bytes())
    result.say(f"summary scenario=lottery pulse={pulse.index} winners={','.join(draw.winners)} result={'PASS' if result.ok else 'FAIL'}")
    return result


def run_mixing(cfg: ScenarioConfig, out: Path) -> ScenarioResult:
    result = ScenarioResult(True)
    rng = _rng(cfg, "mixing")
    s = _one_honest_output(cfg, rng)
    if s.output is None:
        result.ok = False
        result.say("summary scenario=mixing session rejected result=FAIL")
        return result
    w = 8
    x = s.output.bits[: (s.output.bits.size // w) * w]
    reveals = [bitops.random_bits(x.size, rng) for _ in range(max(cfg.verifiers, 2))]
    y = randao_accumulate(reveals, x.size)
    z = mix_onchain(x, y, min(64, x.size // w), w)
    _write(out / "mixed.txt", bitops.to_hex(z) + "\n", result)
    result.say(f"summary scenario=mixing x_bits={x.size} y_bits={y.size} z={bitops.to_hex(z)} result=PASS")
    return result


SCENARIOS: dict[str, Callable[[ScenarioConfig, Path], ScenarioResult]] = {
    "honest-session": run_honest_session,
    "fig1b-joint": run_fig1b,
    "fig1c-collusion": run_fig1c,
    "beacon": run_beacon,
    "immunization": run_immunization,
    "dp": run_dp,
    "lottery": run_lottery,
    "mixing": run_mixing,
}


# ---------------------------------------------------------------- artifact checks


def verify_transcript_file(path: Path) -> tuple[bool, str]:
    try:
        t = decode_transcript(path.read_bytes())
    except (DecodeError, OSError) as exc:
        return False, f"{path}: unreadable transcript ({exc})"
    v = reverify(t)
    same = (v.accepted, v.reason, v.k) == (t.accepted, t.reason, t.k)
    if not same:
        return False, f"{path}: stored verdict {t.reason}/{t.k:g} does not reproduce (got {v.reason}/{v.k:g})"
    return True, f"{path}: verdict {'ACCEPT' if t.accepted else 'REJECT'} ({t.reason}) reproduced, k={t.k:g}"


def load_keys(keydir: Path) -> dict[str, MacKey]:
    keys = {}
    for f in sorted(keydir.glob("*.key")):
        keys[f.stem] = MacKey(f.stem, bytes.fromhex(f.read_text().strip()))
    return keys


def verify_chain_dir(root: Path, keydir: Path | None = None) -> tuple[bool, str]:
    meta_path = root / "chain.conf"
    meta = parse_text(meta_path.read_text()) if meta_path.exists() else {}
    params = VdfParams(int(meta.get("vdf_prime", VdfParams().p)), int(meta.get("vdf_t", VdfParams().t)))
    keys = load_keys(keydir or root / "keys")
    quorum = int(meta["quorum"]) if "quorum" in meta else majority(len(keys))
    store = PulseStore(root / "pulses" if (root / "pulses").is_dir() else root)
    pulses = []
    for f in store.files():
        try:
            pulses.append(decode_pulse(f.read_bytes()))
        except DecodeError as exc:
            return False, f"pulse file {f.name} is malformed: {exc}"
    head = bytes.fromhex(meta["head"]) if "head" in meta else None
    verdict = verify_chain(pulses, keys, params, quorum, expect_head=head)
    if verdict:
        return True, f"chain of {len(pulses)} pulses verified"
    where = ""
    if verdict.index is not None:
        names = {p.index: f.name for f, p in zip(store.files(), pulses)}
        where = f" at pulse {verdict.index} ({names.get(verdict.index, 'missing')})"
    return False, f"chain verification failed: {verdict.reason}{where}"


def verify_lottery_file(path: Path, pulse_path: Path) -> tuple[bool, str]:
    draw = decode_draw(path.read_bytes())
    pulse = decode_pulse(pulse_path.read_bytes())
    if draw.pulse_index != pulse.index:
        return False, f"draw references pulse {draw.pulse_index}, got pulse {pulse.index}"
    ok = verify_draw(draw, pulse.output_bytes())
    return ok, f"lottery draw {'reproduced' if ok else 'DOES NOT reproduce'} from pulse {pulse.index}"


def output_stats(bits) -> list[str]:
    b = bitops.as_bits(bits)
    lines = [f"bits={b.size} ones={int(b.sum())}"]
    if b.size >= 100:
        lines.append(monobit(b).render())
    return lines
