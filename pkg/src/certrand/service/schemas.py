"""Pydantic request and response bodies for the HTTP service.

Binary artifacts travel base64-encoded in their canonical codec form, so a
client can store them and re-verify offline with ``certrand verify``.
Big integers (VDF values) are decimal strings.
"""

from __future__ import annotations

from pydantic import BaseModel, Field

from .. import bits as bitops
from ..apps.lottery import LotteryDraw
from ..beacon import Pulse
from ..protocol import CertifiedOutput, Transcript


class Health(BaseModel):
    status: str = "ok"
    version: str
    pulses: int


class SessionRequest(BaseModel):
    prover: str = Field("honest", description="honest | uniform | replay | colluding | slow")
    epsilon: float = Field(0.0, ge=0.0, le=1.0)
    delay_ns: int = Field(0, ge=0)
    run_seed: int = 0
    protocol: dict[str, str] = Field(default_factory=dict, description="protocol overrides, key=value as in config files")


class OutputModel(BaseModel):
    bits: str
    n_out: int
    n_input: int
    expansion: bool
    transcript_hash: str
    seed_digest: str

    @classmethod
    def of(cls, o: CertifiedOutput) -> "OutputModel":
        return cls(bits=bitops.to_hex(o.bits), n_out=o.n_out, n_input=o.n_input, expansion=o.expansion,
                   transcript_hash=o.transcript_hash.hex(), seed_digest=o.seed_digest.hex())


class VerdictModel(BaseModel):
    accepted: bool
    reason: str
    k: float
    mean_xeb: float
    threshold: float

    @classmethod
    def of(cls, t: Transcript) -> "VerdictModel":
        return cls(accepted=t.accepted, reason=t.reason, k=t.k, mean_xeb=t.mean_xeb, threshold=t.threshold)


class SessionResponse(BaseModel):
    verdict: VerdictModel
    output: OutputModel | None
    transcript: str = Field(description="base64 canonical transcript")


class TranscriptCheck(BaseModel):
    transcript: str


class TranscriptVerdict(BaseModel):
    reproduced: bool
    stored: VerdictModel
    recomputed_reason: str
    recomputed_k: float


class VdfModel(BaseModel):
    x: str
    y: str
    t: int
    seed_bits: int


class PulseModel(BaseModel):
    index: int
    issued_at: int
    prev_output_hash: str
    output_hash: str
    certified_output: str
    transcript_hash: str
    seed_digest: str
    vdf: VdfModel
    signers: list[str]
    raw: str = Field(description="base64 canonical pulse bytes")

    @classmethod
    def of(cls, p: Pulse, raw: str) -> "PulseModel":
        return cls(
            index=p.index, issued_at=p.issued_at, prev_output_hash=p.prev_output_hash.hex(),
            output_hash=p.output_hash.hex(), certified_output=bitops.to_hex(p.certified_output),
            transcript_hash=p.transcript_hash.hex(), seed_digest=p.seed_digest.hex(),
            vdf=VdfModel(x=str(p.vdf.x), y=str(p.vdf.y), t=p.vdf.t, seed_bits=p.vdf.seed_bits),
            signers=[vid for vid, _ in p.signatures], raw=raw,
        )


class ChainVerdictModel(BaseModel):
    ok: bool
    reason: str
    index: int | None = None
    length: int


class LotteryRequest(BaseModel):
    bids: list[str] = Field(min_length=1)
    k: int = Field(ge=0)
    pulse_index: int | None = Field(None, description="defaults to the latest pulse")


class LotteryResponse(BaseModel):
    pulse_index: int
    pulse_output_ref: str
    k: int
    winners: list[str]
    draw: str = Field(description="base64 canonical draw")

    @classmethod
    def of(cls, d: LotteryDraw, raw: str) -> "LotteryResponse":
        return cls(pulse_index=d.pulse_index, pulse_output_ref=d.pulse_output_hash.hex(), k=d.k,
                   winners=list(d.winners), draw=raw)
