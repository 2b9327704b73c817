"""JSON run configuration for the simulator.

A config is a single JSON object; every section is optional and falls back
to the library defaults. Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any

from .encoding import CodecSpec
from .handover import HandoverParams
from .infotheory import TEConfig
from .scenario import MobilitySpec, RsrpTrace, generate_trace, read_trace
from .simloop import ChannelSpec, ConfigError, SenderPolicy, SimReport, ViabilityParams, run

_TOP_KEYS = {"seed", "horizon", "scenario", "handover", "codec", "channel", "policy", "te",
             "viability", "output"}


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    horizon: int | None = 60  # None: the whole input trace
    mobility: MobilitySpec = MobilitySpec()
    trace_path: Path | None = None
    handover: HandoverParams = HandoverParams()
    codec: CodecSpec | None = None
    channel: ChannelSpec = ChannelSpec()
    policy: SenderPolicy = SenderPolicy()
    te: TEConfig = TEConfig()
    te_window: int = 10
    te_step: int = 1
    viability: ViabilityParams = ViabilityParams()
    output_dir: Path | None = None

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, seed=seed, mobility=replace(self.mobility, seed=seed),
                       channel=replace(self.channel, seed=seed))

    def echo(self) -> dict[str, Any]:
        """Resolved configuration, as recorded in reports."""
        out: dict[str, Any] = {
            "seed": self.seed,
            "horizon": self.horizon,
            "handover": asdict(self.handover),
            "codec": asdict(self.codec) if self.codec else None,
            "channel": {k: v for k, v in asdict(self.channel).items() if k != "seed"},
            "policy": asdict(self.policy),
            "te": {**asdict(self.te), "window": self.te_window, "step": self.te_step},
            "viability": asdict(self.viability),
        }
        if self.trace_path is not None:
            out["scenario"] = {"trace": self.trace_path.name}
        else:
            m = asdict(self.mobility)
            m.pop("seed")
            m["bs_positions"] = list(m["bs_positions"])
            out["scenario"] = m
        return out

    def load_trace(self) -> RsrpTrace:
        if self.trace_path is not None:
            tr = read_trace(self.trace_path)
            if self.horizon is None or len(tr) <= self.horizon:
                return tr
            return RsrpTrace(tr.cells, tr.rsrp[: self.horizon], tr.events[: self.horizon],
                             tr.slot_duration, tr.start_time, tr.clamped)
        return generate_trace(self.mobility, self.horizon or 60)

    def simulate(self) -> SimReport:
        return run(
            self.load_trace(), self.policy, self.channel, self.handover, self.te, self.codec,
            self.viability, self.te_window, self.te_step, seed=self.seed, config_echo=self.echo(),
        )


def _section(raw: dict[str, Any], name: str) -> dict[str, Any]:
    sec = raw.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"'{name}' must be an object")
    return dict(sec)


def _build(cls, sec: dict[str, Any], name: str):
    unknown = set(sec) - {f.name for f in fields(cls)}
    if unknown:
        raise ConfigError(f"unknown keys in '{name}': {sorted(unknown)}")
    try:
        return cls(**sec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid '{name}': {exc}") from None


def _int(raw: dict[str, Any], key: str, default: int, minimum: int) -> int:
    v = raw.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise ConfigError(f"'{key}' must be an integer >= {minimum}")
    return v


def parse_config(raw: Any, base_dir: Path | None = None) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    seed = _int(raw, "seed", 0, 0)
    scen = _section(raw, "scenario")
    # a trace file runs to its end unless a horizon is given
    horizon = None if "trace" in scen and "horizon" not in raw else _int(raw, "horizon", 60, 1)
    chan = _section(raw, "channel")
    if "seed" in scen or "seed" in chan:
        raise ConfigError("'seed' is set once, at the top level")
    trace_path = None
    if "trace" in scen:
        trace_path = Path(scen.pop("trace"))
        if scen:
            raise ConfigError("'scenario' takes either 'trace' or mobility fields, not both")
        if base_dir is not None and not trace_path.is_absolute():
            trace_path = base_dir / trace_path
    if "bs_positions" in scen and isinstance(scen["bs_positions"], list):
        scen["bs_positions"] = tuple(scen["bs_positions"])
    mobility = _build(MobilitySpec, {**scen, "seed": seed}, "scenario")

    te_sec = _section(raw, "te")
    window = te_sec.pop("window", 10)
    te_step = te_sec.pop("step", 1)
    te = _build(TEConfig, te_sec, "te")
    if not isinstance(window, int) or window <= te.lag + 1:
        raise ConfigError(f"te.window must be an integer > {te.lag + 1}")
    if not isinstance(te_step, int) or te_step < 1:
        raise ConfigError("te.step must be an integer >= 1")

    codec_sec = _section(raw, "codec")
    policy = _build(SenderPolicy, _section(raw, "policy"), "policy")
    codec = _build(CodecSpec, codec_sec, "codec") if codec_sec else None
    if codec is not None:
        expected = "delta" if policy.kind == "always_delta" else "raw"
        if codec.kind != expected:
            raise ConfigError(f"policy {policy.kind} needs a {expected} codec, got {codec.kind}")
        if not codec.covers_rsrp_range():
            raise ConfigError("codec cannot represent the full RSRP range")
    if trace_path is None and len(mobility.bs_positions) < 2:
        raise ConfigError("scenario needs at least two base stations")

    out_sec = _section(raw, "output")
    if set(out_sec) - {"dir"}:
        raise ConfigError("'output' only takes 'dir'")
    out_dir = Path(out_sec["dir"]) if "dir" in out_sec else None

    return RunConfig(
        seed=seed,
        horizon=horizon,
        mobility=mobility,
        trace_path=trace_path,
        handover=_build(HandoverParams, _section(raw, "handover"), "handover"),
        codec=codec,
        channel=_build(ChannelSpec, {**chan, "seed": seed}, "channel"),
        policy=policy,
        te=te,
        te_window=window,
        te_step=te_step,
        viability=_build(ViabilityParams, _section(raw, "viability"), "viability"),
        output_dir=out_dir,
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return parse_config(raw, path.parent)
