"""FastAPI wrapper around the core modules.

The service owns one beacon (single writer, guarded by a lock) backed by an
in-process honest prover. Everything else is stateless: sessions run on a
fresh prover link per request.
"""

from __future__ import annotations

import base64
import threading

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__
from ..apps.lottery import encode_draw, lottery_draw
from ..beacon import PulseStore, verify_chain
from ..config import ScenarioConfig, parse_pairs
from ..errors import CertRandError, ConfigError, DecodeError
from ..protocol import InputRandomness, decode_transcript, encode_transcript, reverify, run_session
from ..provers import Honest
from ..scenarios import ProverLink, build_beacon, make_prover, mac_keys
from .schemas import (
    ChainVerdictModel,
    Health,
    LotteryRequest,
    LotteryResponse,
    OutputModel,
    PulseModel,
    SessionRequest,
    SessionResponse,
    TranscriptCheck,
    TranscriptVerdict,
    VerdictModel,
)


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode()


def _unb64(text: str) -> bytes:
    try:
        return base64.b64decode(text, validate=True)
    except ValueError as exc:
        raise HTTPException(422, f"bad base64: {exc}") from exc


class _BeaconState:
    def __init__(self, cfg: ScenarioConfig, store: PulseStore | None):
        self.cfg = cfg
        self.beacon = build_beacon(cfg)
        self.keys = {k.verifier_id: k for k in mac_keys(cfg)}
        self.rng = np.random.default_rng(cfg.run_seed)
        self.store = store
        self.lock = threading.Lock()

    def emit(self):
        with self.lock:
            link = ProverLink(self.cfg, Honest(self.cfg.epsilon), self.rng.bytes(16))
            try:
                pulse = self.beacon.emit(link.channel, self.rng)
            finally:
                link.close()
            if self.store is not None:
                self.store.append(pulse)
            return pulse

    def get(self, index: int):
        chain = self.beacon.chain
        if not 0 <= index < len(chain):
            raise HTTPException(404, f"no pulse {index}")
        return chain[index]


def create_app(cfg: ScenarioConfig | None = None, store_dir: str | None = None) -> FastAPI:
    cfg = cfg or ScenarioConfig(scenario="beacon")
    state = _BeaconState(cfg, PulseStore(store_dir) if store_dir else None)
    app = FastAPI(title="certrand", version=__version__)

    def pulse_model(p) -> PulseModel:
        return PulseModel.of(p, _b64(p.to_bytes()))

    @app.get("/health", response_model=Health)
    def health():
        return Health(version=__version__, pulses=len(state.beacon.chain))

    @app.post("/sessions", response_model=SessionResponse)
    def run(req: SessionRequest):
        pairs = {"prover": req.prover, "epsilon": str(req.epsilon), "delay_ns": str(req.delay_ns),
                 "run_seed": str(req.run_seed), **req.protocol}
        try:
            scfg = parse_pairs(pairs)
        except ConfigError as exc:
            raise HTTPException(422, str(exc)) from exc
        rng = np.random.default_rng(scfg.run_seed)
        link = ProverLink(scfg, make_prover(scfg, rng), rng.bytes(16))
        try:
            s = run_session(scfg.protocol, InputRandomness.generate(scfg.protocol, rng), link.channel)
        finally:
            link.close()
        t = s.transcript
        return SessionResponse(verdict=VerdictModel.of(t), output=OutputModel.of(s.output) if s.output else None,
                               transcript=_b64(encode_transcript(t)))

    @app.post("/transcripts/verify", response_model=TranscriptVerdict)
    def check(body: TranscriptCheck):
        try:
            t = decode_transcript(_unb64(body.transcript))
        except DecodeError as exc:
            raise HTTPException(422, f"malformed transcript: {exc}") from exc
        v = reverify(t)
        same = (v.accepted, v.reason, v.k) == (t.accepted, t.reason, t.k)
        return TranscriptVerdict(reproduced=same, stored=VerdictModel.of(t), recomputed_reason=v.reason, recomputed_k=v.k)

    @app.post("/beacon/pulses", response_model=PulseModel, status_code=201)
    def emit():
        try:
            return pulse_model(state.emit())
        except (CertRandError, RuntimeError) as exc:
            raise HTTPException(503, f"pulse not emitted: {exc}") from exc

    @app.get("/beacon/pulses/latest", response_model=PulseModel)
    def latest():
        if state.beacon.latest is None:
            raise HTTPException(404, "chain is empty")
        return pulse_model(state.beacon.latest)

    @app.get("/beacon/pulses/{index}", response_model=PulseModel)
    def one(index: int):
        return pulse_model(state.get(index))

    @app.get("/beacon/pulses", response_model=list[PulseModel])
    def many(start: int = 0, count: int = 10):
        if start < 0 or count < 0:
            raise HTTPException(422, "start and count must be non-negative")
        return [pulse_model(p) for p in state.beacon.chain[start : start + count]]

    @app.get("/beacon/verify", response_model=ChainVerdictModel)
    def verify():
        chain = list(state.beacon.chain)
        v = verify_chain(chain, state.keys, state.cfg.vdf_params())
        return ChainVerdictModel(ok=v.ok, reason=v.reason, index=v.index, length=len(chain))

    @app.post("/lottery", response_model=LotteryResponse)
    def lottery(req: LotteryRequest):
        pulse = state.get(req.pulse_index) if req.pulse_index is not None else state.beacon.latest
        if pulse is None:
            raise HTTPException(404, "chain is empty")
        try:
            draw = lottery_draw(pulse.output_bytes(), req.bids, req.k, pulse.index)
        except CertRandError as exc:
            raise HTTPException(422, str(exc)) from exc
        return LotteryResponse.of(draw, _b64(encode_draw(draw)))

    return app
